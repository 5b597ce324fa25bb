//! Deterministic seeded fuzzing over the inequality registry.
//!
//! Per-trial seeds are derived from the master seed and the trial index, so
//! identical configurations give byte-identical reports. Random laws use a
//! bounded common denominator, so every generated input is exactly
//! representable and counterexample dumps reproduce the run.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::calculus::{
    a1_bsg, a1_cond_dist, a1_cond_sum, a1_kvm, a1_kvm_sharp, a1_neg, a1_sub_indep, a1_sum_entropy,
    a1_triangle, a2_self_dist, a2_sum_dist, a2_sum_entropy_map, chain_rule_residual,
    check_data_processing, check_dilate, cond_chain_rule_residual, cor44_slack,
    iterated_chain_slack, l31_identical, l31_pairwise, l31_self, CheckKind, FnTable, Grid,
    SlackReport,
};
use crate::decrement::{
    build_endgame, check_wz2, lemma54_select, prop51_decomposition, PermGrid, WZItem,
};
use crate::dist::{CondPair, Dist, JointDist, RVTuple};
use crate::group::{GroupSpec, LinearMap};
use crate::numeric::splitmix64;
use crate::{Element, Error, Result, DEFAULT_ATOM_CAP};

/// Configuration of a fuzz run.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzConfig {
    pub trials: u64,
    pub seed: u64,
    /// Group pool; a trial draws one group uniformly.
    pub groups: Vec<GroupSpec>,
    /// Largest tuple size for tuple-shaped arguments.
    pub max_tuple: usize,
    pub tolerance: f64,
    /// Registry filter; `None` runs the default registry.
    pub registry: Option<BTreeSet<String>>,
    /// Common-denominator bound for generated laws.
    pub max_denominator: u64,
    #[serde(skip)]
    pub atom_cap: u64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            trials: 100,
            seed: 0,
            groups: default_group_pool(),
            max_tuple: 3,
            tolerance: crate::SLACK_TOL,
            registry: None,
            max_denominator: 64,
            atom_cap: DEFAULT_ATOM_CAP,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Format("trials must be at least 1".into()));
        }
        if self.tolerance <= 0.0 {
            return Err(Error::Format("tolerance must be positive".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::Format("empty group pool".into()));
        }
        if self.max_tuple < 1 {
            return Err(Error::Format("max tuple size must be at least 1".into()));
        }
        if self.max_denominator < 2 {
            return Err(Error::Format("max denominator must be at least 2".into()));
        }
        if let Some(filter) = &self.registry {
            for name in filter {
                if !all_registry_names().contains(&name.as_str()) {
                    return Err(Error::Format(format!("unknown registry entry {name:?}")));
                }
            }
        }
        Ok(())
    }

    fn enabled(&self) -> Vec<&'static str> {
        match &self.registry {
            None => default_registry_names().to_vec(),
            Some(filter) => all_registry_names()
                .iter()
                .copied()
                .filter(|n| filter.contains(*n))
                .collect(),
        }
    }
}

/// The standard pool: every group the acceptance fuzz runs on.
pub fn default_group_pool() -> Vec<GroupSpec> {
    vec![
        GroupSpec::new(vec![2]).unwrap(),
        GroupSpec::new(vec![3]).unwrap(),
        GroupSpec::new(vec![4]).unwrap(),
        GroupSpec::new(vec![2, 2]).unwrap(),
        GroupSpec::new(vec![5]).unwrap(),
        GroupSpec::new(vec![2, 4]).unwrap(),
        GroupSpec::new(vec![3, 3]).unwrap(),
    ]
}

/// Checks run by default on every trial.
pub fn default_registry_names() -> &'static [&'static str] {
    &[
        "A1.i", "A1.ii", "A1.iv", "A1.v", "A1.vii", "A1.viii", "A1.ix", "A1.x", "A2.i", "A2.ii",
        "A2.iii", "A3", "A4", "L3.1.i", "L3.1.ii", "L3.1.iii", "L4.1", "L4.2", "L4.3", "L5.3",
        "L5.4", "C4.4", "P5.1",
    ]
}

/// Every registry entry, including the optional sharper bound and the
/// harness self-test hook (a deliberately violated inequality).
pub fn all_registry_names() -> &'static [&'static str] {
    &[
        "A1.i",
        "A1.ii",
        "A1.iv",
        "A1.v",
        "A1.vii",
        "A1.viii",
        "A1.ix",
        "A1.x",
        "A1.x.sharp",
        "A2.i",
        "A2.ii",
        "A2.iii",
        "A3",
        "A4",
        "L3.1.i",
        "L3.1.ii",
        "L3.1.iii",
        "L4.1",
        "L4.2",
        "L4.3",
        "L5.3",
        "L5.3.i",
        "L5.3.ii",
        "L5.3.iii",
        "L5.3.iv",
        "L5.4",
        "C4.4",
        "P5.1",
        "selftest.broken",
    ]
}

/// A failed check with its full exact inputs.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub trial: u64,
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub sub: Vec<(String, f64)>,
    pub inputs_digest: String,
    /// Exact inputs, reconstructible from the dump.
    pub inputs: serde_json::Value,
}

/// Aggregated outcome of a run.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: u64,
    pub tolerance: f64,
    pub checks_run: u64,
    /// Worst observed value per registry name (min slack / max residual).
    pub worst: BTreeMap<String, f64>,
    pub failures: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every enabled check on freshly generated inputs for each trial.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    cfg.validate()?;
    let enabled = cfg.enabled();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut checks_run = 0u64;
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial);
        let g = cfg.groups[rng.gen_range(0..cfg.groups.len())].clone();
        for name in &enabled {
            let (inputs, reports) = run_check(name, &g, &mut rng, cfg)?;
            for rep in reports {
                checks_run += 1;
                let entry = worst.entry(rep.name.clone()).or_insert(match rep.kind {
                    CheckKind::Slack => f64::INFINITY,
                    CheckKind::Residual => f64::NEG_INFINITY,
                });
                *entry = match rep.kind {
                    CheckKind::Slack => entry.min(rep.value),
                    CheckKind::Residual => entry.max(rep.value),
                };
                if !rep.passes(cfg.tolerance) {
                    failures.push(Counterexample {
                        trial,
                        name: rep.name.clone(),
                        kind: rep.kind,
                        value: rep.value,
                        sub: rep.sub.clone(),
                        inputs_digest: rep.inputs_digest.clone(),
                        inputs: inputs.clone(),
                    });
                }
            }
        }
    }
    Ok(FuzzReport {
        seed: cfg.seed,
        trials: cfg.trials,
        tolerance: cfg.tolerance,
        checks_run,
        worst,
        failures,
    })
}

/// Deterministic per-trial generator.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(trial.wrapping_add(1))))
}

// --- random input generators ---

/// A random exact-rational law: common denominator at most `max_den`, random
/// support, positive numerators summing to the denominator.
pub fn random_dist(g: &GroupSpec, rng: &mut ChaCha8Rng, max_den: u64) -> Dist {
    let den = rng.gen_range(2..=max_den);
    let max_support = g.size().min(den) as usize;
    let support_size = rng.gen_range(1..=max_support);
    let support = rand::seq::index::sample(rng, g.size() as usize, support_size);
    let parts = random_composition(rng, den, support_size as u64);
    let weights: Vec<(Element, u64)> = support
        .iter()
        .zip(parts)
        .map(|(idx, w)| (g.element(idx as u64), w))
        .collect();
    Dist::from_weights(g, &weights).expect("valid random law")
}

/// Splits `total` into `parts` positive integers, uniformly over
/// compositions.
fn random_composition(rng: &mut ChaCha8Rng, total: u64, parts: u64) -> Vec<u64> {
    debug_assert!(parts >= 1 && parts <= total);
    let mut cuts: Vec<u64> =
        rand::seq::index::sample(rng, (total - 1) as usize, (parts - 1) as usize)
            .iter()
            .map(|c| c as u64 + 1)
            .collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let w = c - prev;
            prev = c;
            w
        })
        .collect()
}

pub fn random_tuple(g: &GroupSpec, rng: &mut ChaCha8Rng, size: usize, max_den: u64) -> RVTuple {
    RVTuple::new((0..size).map(|_| random_dist(g, rng, max_den)).collect()).expect("nonempty")
}

/// A random (possibly correlated) joint law over the listed coordinates.
pub fn random_joint(coords: &[GroupSpec], rng: &mut ChaCha8Rng, max_den: u64) -> JointDist {
    let den = rng.gen_range(2..=max_den);
    let total: u64 = coords.iter().map(|g| g.size()).product();
    let max_support = total.min(den) as usize;
    let support_size = rng.gen_range(1..=max_support);
    let support = rand::seq::index::sample(rng, total as usize, support_size);
    let parts = random_composition(rng, den, support_size as u64);
    let entries: Vec<(Vec<Element>, u64)> = support
        .iter()
        .zip(parts)
        .map(|(flat, w)| {
            let mut rest = flat as u64;
            let mut xs = Vec::with_capacity(coords.len());
            for g in coords.iter().rev() {
                xs.push(g.element(rest % g.size()));
                rest /= g.size();
            }
            xs.reverse();
            (xs, w)
        })
        .collect();
    JointDist::from_weights(coords.to_vec(), &entries).expect("valid random joint")
}

fn small_aux_group(rng: &mut ChaCha8Rng) -> GroupSpec {
    let n = rng.gen_range(2..=3u64);
    GroupSpec::new(vec![n]).unwrap()
}

/// A random well-defined homomorphism: each coefficient is a random multiple
/// of `n_j / gcd(n_j, m_i)`.
pub fn random_linear_map(
    source: &GroupSpec,
    target: &GroupSpec,
    rng: &mut ChaCha8Rng,
) -> LinearMap {
    let mut matrix = Vec::with_capacity(target.rank());
    for &nj in target.orders() {
        let mut row = Vec::with_capacity(source.rank());
        for &mi in source.orders() {
            let g = gcd(nj, mi);
            let step = nj / g;
            let k = rng.gen_range(0..g);
            row.push((step * k) as i64);
        }
        matrix.push(row);
    }
    LinearMap::new(source.clone(), target.clone(), matrix).expect("constructed well-defined")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn random_projection_target(rng: &mut ChaCha8Rng) -> GroupSpec {
    let choices = [vec![2], vec![3], vec![4], vec![2, 2]];
    GroupSpec::new(choices[rng.gen_range(0..choices.len())].clone()).unwrap()
}

fn random_fn_table(source: &GroupSpec, rng: &mut ChaCha8Rng) -> FnTable {
    let target = GroupSpec::new(vec![rng.gen_range(2..=4u64)]).unwrap();
    let values = (0..source.size())
        .map(|_| rng.gen_range(0..target.size()))
        .collect();
    FnTable { target, values }
}

/// Runs one named check on freshly drawn inputs; returns the exact inputs as
/// JSON plus the resulting reports.
pub fn run_check(
    name: &str,
    g: &GroupSpec,
    rng: &mut ChaCha8Rng,
    cfg: &FuzzConfig,
) -> Result<(serde_json::Value, Vec<SlackReport>)> {
    let md = cfg.max_denominator;
    match name {
        "A1.i" => {
            let (x, y, z) = (
                random_dist(g, rng, md),
                random_dist(g, rng, md),
                random_dist(g, rng, md),
            );
            let rep = a1_triangle(&x, &y, &z)?;
            Ok((json!({"x": x, "y": y, "z": z}), vec![rep]))
        }
        "A1.ii" => {
            let j = random_joint(&[g.clone(), g.clone()], rng, md);
            let rep = a1_sum_entropy(&j)?;
            Ok((json!({"joint": j}), vec![rep]))
        }
        "A1.iv" => {
            let j = random_joint(&[g.clone(), g.clone()], rng, md);
            let rep = a1_bsg(&j)?;
            Ok((json!({"joint": j}), vec![rep]))
        }
        "A1.v" => {
            let j = random_joint(&[g.clone(), g.clone()], rng, md);
            let y = random_dist(g, rng, md);
            let rep = a1_sub_indep(&j, &y)?;
            Ok((json!({"xz": j, "y": y}), vec![rep]))
        }
        "A1.vii" => {
            let (x, y) = (random_dist(g, rng, md), random_dist(g, rng, md));
            let rep = a1_neg(&x, &y)?;
            Ok((json!({"x": x, "y": y}), vec![rep]))
        }
        "A1.viii" => {
            let x = random_dist(g, rng, md);
            let aux = small_aux_group(rng);
            let pair = CondPair::new(random_joint(&[g.clone(), aux], rng, md))?;
            let rep = a1_cond_dist(&x, &pair)?;
            Ok((json!({"x": x, "pair": pair.joint()}), vec![rep]))
        }
        "A1.ix" => {
            let x = random_dist(g, rng, md);
            let y = random_dist(g, rng, md);
            let z = random_dist(g, rng, md);
            let rep = a1_cond_sum(&x, &y, &z)?;
            Ok((json!({"x": x, "y": y, "z": z}), vec![rep]))
        }
        "A1.x" | "A1.x.sharp" => {
            let x = random_dist(g, rng, md);
            let n = rng.gen_range(1..=cfg.max_tuple);
            let ys = random_tuple(g, rng, n, md);
            let rep = if name == "A1.x" {
                a1_kvm(&x, &ys)?
            } else {
                a1_kvm_sharp(&x, &ys)?
            };
            Ok((json!({"x": x, "ys": ys}), vec![rep]))
        }
        "A2.i" => {
            let m = rng.gen_range(2..=cfg.max_tuple.max(2));
            let t = random_tuple(g, rng, m, md);
            let y = random_dist(g, rng, md);
            let i0 = rng.gen_range(0..m);
            let rep = a2_sum_dist(&t, &y, i0)?;
            Ok((json!({"tuple": t, "y": y, "i0": i0}), vec![rep]))
        }
        "A2.ii" => {
            let m = rng.gen_range(2..=cfg.max_tuple.max(2));
            let n = rng.gen_range(1..=cfg.max_tuple);
            let t = random_tuple(g, rng, m, md);
            let ys = random_tuple(g, rng, n, md);
            let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
            let rep = a2_sum_entropy_map(&t, &ys, &f)?;
            Ok((json!({"tuple": t, "ys": ys, "f": f}), vec![rep]))
        }
        "A2.iii" => {
            let m = rng.gen_range(2..=cfg.max_tuple.max(2));
            let t = random_tuple(g, rng, m, md);
            let rep = a2_self_dist(&t)?;
            Ok((json!({"tuple": t}), vec![rep]))
        }
        "A3" => {
            let (x, y) = (random_dist(g, rng, md), random_dist(g, rng, md));
            let a = rng.gen_range(-8..=8i64);
            let rep = check_dilate(&x, &y, a)?;
            Ok((json!({"x": x, "y": y, "a": a}), vec![rep]))
        }
        "A4" => {
            let conditioned = rng.gen_bool(0.5);
            let coords = if conditioned {
                vec![g.clone(), g.clone(), small_aux_group(rng)]
            } else {
                vec![g.clone(), g.clone()]
            };
            let j = random_joint(&coords, rng, md);
            let f = random_fn_table(g, rng);
            let gg = random_fn_table(g, rng);
            let rep = check_data_processing(&j, &f, &gg, conditioned)?;
            Ok((
                json!({"joint": j, "f": f, "g": gg, "conditioned": conditioned}),
                vec![rep],
            ))
        }
        "L3.1.i" | "L3.1.ii" => {
            let m = rng.gen_range(2..=cfg.max_tuple.max(2));
            let t = random_tuple(g, rng, m, md);
            let rep = if name == "L3.1.i" {
                l31_pairwise(&t)?
            } else {
                l31_self(&t)?
            };
            Ok((json!({"tuple": t}), vec![rep]))
        }
        "L3.1.iii" => {
            let m = rng.gen_range(2..=cfg.max_tuple.max(2));
            let x = random_dist(g, rng, md);
            let t = RVTuple::new(vec![x; m])?;
            let rep = l31_identical(&t)?;
            Ok((json!({"tuple": t}), vec![rep]))
        }
        "L4.1" => {
            let m = rng.gen_range(2..=3);
            let t = random_tuple(g, rng, m, md);
            let h = random_projection_target(rng);
            let pi = random_linear_map(g, &h, rng);
            let rep = chain_rule_residual(&t, &pi)?;
            Ok((json!({"tuple": t, "pi": pi}), vec![rep]))
        }
        "L4.2" => {
            let m = rng.gen_range(2..=2);
            let pairs: Vec<CondPair> = (0..m)
                .map(|_| {
                    let aux = small_aux_group(rng);
                    CondPair::new(random_joint(&[g.clone(), aux], rng, md))
                })
                .collect::<Result<_>>()?;
            let h = random_projection_target(rng);
            let pi = random_linear_map(g, &h, rng);
            let rep = cond_chain_rule_residual(&pairs, &pi)?;
            let joints: Vec<&JointDist> = pairs.iter().map(|p| p.joint()).collect();
            Ok((json!({"pairs": joints, "pi": pi}), vec![rep]))
        }
        "L4.3" => {
            let m = rng.gen_range(2..=2);
            let t = random_tuple(g, rng, m, md);
            let h1 = random_projection_target(rng);
            let top = random_linear_map(g, &h1, rng);
            let chain = vec![LinearMap::zero(&h1, &GroupSpec::trivial()), top];
            let rep = iterated_chain_slack(&t, &chain)?;
            Ok((json!({"tuple": t, "chain": chain}), vec![rep]))
        }
        "L5.3" | "L5.3.i" | "L5.3.ii" | "L5.3.iii" | "L5.3.iv" => {
            let m = g.torsion() as usize;
            let t = random_tuple(g, rng, m, md);
            let e = build_endgame(&t, cfg.atom_cap)?;
            let items: Vec<WZItem> = match name {
                "L5.3" => vec![WZItem::I, WZItem::II, WZItem::III, WZItem::IV],
                "L5.3.i" => vec![WZItem::I],
                "L5.3.ii" => vec![WZItem::II],
                "L5.3.iii" => vec![WZItem::III],
                _ => vec![WZItem::IV],
            };
            let reps = items
                .into_iter()
                .map(|i| check_wz2(&e, i))
                .collect::<Result<Vec<_>>>()?;
            Ok((json!({"tuple": t}), reps))
        }
        "L5.4" => {
            let j2 = random_joint(&[g.clone(), g.clone()], rng, md);
            let triple = j2.adjoin_combo(&[-1, -1])?;
            let n = rng.gen_range(1..=2usize);
            let ys: Vec<Dist> = (0..n).map(|_| random_dist(g, rng, md)).collect();
            let alpha = rng.gen_range(1..=16u32) as f64 / 16.0;
            let sel = lemma54_select(&triple, &ys, alpha)?;
            Ok((
                json!({"triple": triple, "ys": ys, "alpha": alpha}),
                vec![sel.report],
            ))
        }
        "C4.4" => {
            let m = 2;
            let entries: Vec<Vec<Dist>> = (0..m)
                .map(|_| (0..m).map(|_| random_dist(g, rng, md)).collect())
                .collect();
            let grid = Grid::new(entries)?;
            let rep = cor44_slack(&grid)?;
            Ok((json!({"grid": grid}), vec![rep]))
        }
        "P5.1" => {
            let m = 2;
            let t = random_tuple(g, rng, m, md);
            let which = rng.gen_range(1..=3usize);
            let grid = PermGrid::instantiation(m, which)?;
            let dec = prop51_decomposition(&t, &grid)?;
            Ok((json!({"tuple": t, "grid": grid}), vec![dec.report]))
        }
        "selftest.broken" => {
            // Deliberately violated: reports the negated nonnegativity slack
            // of a Ruzsa distance, strictly negative for non-degenerate laws.
            let x = random_dist(g, rng, md);
            let d = crate::ruzsa::rdist(&x, &x)?;
            let rep = SlackReport {
                name: "selftest.broken".into(),
                kind: CheckKind::Slack,
                value: -d - 1.0,
                sub: Vec::new(),
                inputs_digest: crate::calculus::digest_inputs(&x),
            };
            Ok((json!({"x": x}), vec![rep]))
        }
        other => Err(Error::Format(format!("unknown registry entry {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_sums_and_is_positive() {
        let mut rng = trial_rng(7, 0);
        for _ in 0..50 {
            let total = rng.gen_range(2..=64u64);
            let parts = rng.gen_range(1..=total);
            let c = random_composition(&mut rng, total, parts);
            assert_eq!(c.len() as u64, parts);
            assert_eq!(c.iter().sum::<u64>(), total);
            assert!(c.iter().all(|&w| w > 0));
        }
    }

    #[test]
    fn random_dist_has_bounded_denominator() {
        let g = GroupSpec::new(vec![3, 3]).unwrap();
        let mut rng = trial_rng(42, 1);
        for _ in 0..50 {
            let d = random_dist(&g, &mut rng, 64);
            let (den, _) = d.raw();
            let den: u64 = den.to_string().parse().unwrap();
            assert!(den <= 64);
        }
    }

    #[test]
    fn small_run_passes_and_is_deterministic() {
        let cfg = FuzzConfig {
            trials: 5,
            seed: 12345,
            ..Default::default()
        };
        let r1 = run_fuzz(&cfg).unwrap();
        let r2 = run_fuzz(&cfg).unwrap();
        assert!(r1.passed(), "failures: {:?}", r1.failures);
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
        assert!(r1.checks_run > 0);
    }

    #[test]
    fn selftest_hook_fails() {
        let filter: BTreeSet<String> = ["selftest.broken".to_string()].into_iter().collect();
        let cfg = FuzzConfig {
            trials: 1,
            seed: 9,
            registry: Some(filter),
            ..Default::default()
        };
        let r = run_fuzz(&cfg).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].name, "selftest.broken");
    }

    #[test]
    fn registry_filter_is_validated() {
        let filter: BTreeSet<String> = ["A1.i".to_string(), "bogus".to_string()]
            .into_iter()
            .collect();
        let cfg = FuzzConfig {
            registry: Some(filter),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn optional_sharp_entry_runs_when_selected() {
        let filter: BTreeSet<String> = ["A1.x.sharp".to_string()].into_iter().collect();
        let cfg = FuzzConfig {
            trials: 20,
            seed: 3,
            registry: Some(filter),
            ..Default::default()
        };
        let r = run_fuzz(&cfg).unwrap();
        assert!(r.passed(), "sharper KVM bound failed: {:?}", r.failures);
        assert!(r.worst.contains_key("A1.x.sharp"));
    }
}
