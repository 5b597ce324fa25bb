//! From a small-doubling set to a verified coset cover: the doubling
//! constant, the entropic bridge, dense-translate location, the greedy
//! covering lemma, coset subdivision, and the assembled pipeline with exact
//! verification.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::decrement::{theorem_1_4, DecrementConfig, Theorem14Result};
use crate::dist::Dist;
use crate::group::{
    dilate_idx, enumerate_subgroups, index_set, subgroups_within, sumset_idx, Sign, Subgroup,
};
use crate::numeric::{fraction_string, ln_big, parse_fraction};
use crate::ruzsa::rdist;
use crate::{Element, Error, GroupSpec, Result, DEFAULT_SUBGROUP_CAP};

/// A nonempty subset of a finite abelian group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SetInputDto", into = "SetInputDto")]
pub struct SetInput {
    group: GroupSpec,
    elements: BTreeSet<Element>,
}

#[derive(Serialize, Deserialize, Clone)]
struct SetInputDto {
    group: GroupSpec,
    elements: Vec<Vec<u64>>,
}

impl TryFrom<SetInputDto> for SetInput {
    type Error = Error;
    fn try_from(dto: SetInputDto) -> Result<Self> {
        let elements = dto.elements.into_iter().map(Element).collect();
        SetInput::new(dto.group, elements)
    }
}

impl From<SetInput> for SetInputDto {
    fn from(s: SetInput) -> Self {
        SetInputDto {
            group: s.group,
            elements: s.elements.into_iter().map(|e| e.0).collect(),
        }
    }
}

impl SetInput {
    pub fn new(group: GroupSpec, elements: BTreeSet<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyInput("empty set input"));
        }
        for e in &elements {
            if !group.contains(e) {
                return Err(Error::Format(format!("element {e:?} not in {group:?}")));
            }
        }
        Ok(SetInput { group, elements })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn elements(&self) -> &BTreeSet<Element> {
        &self.elements
    }

    pub fn len(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.elements.contains(e)
    }

    /// The set translated so that it contains the origin (subtracting the
    /// lexicographically least member), plus the shift that restores the
    /// original coordinates.
    pub fn normalized(&self) -> (SetInput, Element) {
        let least = self.elements.iter().next().expect("nonempty").clone();
        if least == self.group.zero() {
            return (self.clone(), least);
        }
        let shifted = self
            .elements
            .iter()
            .map(|e| self.group.sub(e, &least).expect("element in range"))
            .collect();
        (
            SetInput {
                group: self.group.clone(),
                elements: shifted,
            },
            least,
        )
    }

    /// Uniform law on the set.
    pub fn uniform(&self) -> Result<Dist> {
        Dist::uniform_on(&self.group, &self.elements)
    }

    pub(crate) fn indices(&self) -> Result<BTreeSet<u64>> {
        index_set(&self.group, &self.elements)
    }
}

/// A verified-coverable family: a subgroup plus coset translates.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetCover {
    pub subgroup: Subgroup,
    /// Canonical (lexicographically least) coset representatives, sorted and
    /// deduplicated.
    pub translates: Vec<Element>,
    /// Exact doubling constant of the covered set.
    pub k: (BigUint, BigUint),
    /// Certified exponent: the subgroup sits inside `ell A - ell A`.
    pub ell: u64,
}

impl CosetCover {
    pub fn count(&self) -> u64 {
        self.translates.len() as u64
    }
}

#[derive(Serialize, Deserialize)]
struct CoverDto {
    subgroup: Vec<Vec<u64>>,
    translates: Vec<Vec<u64>>,
    #[serde(rename = "K")]
    k: String,
    ell: u64,
    count: u64,
}

/// Serializes a cover to the external JSON schema (needs the ambient group
/// to deserialize, so the two directions are explicit functions).
pub fn cover_to_json(c: &CosetCover) -> serde_json::Value {
    let dto = CoverDto {
        subgroup: c.subgroup.elements().map(|e| e.0).collect(),
        translates: c.translates.iter().map(|e| e.0.clone()).collect(),
        k: fraction_string(&c.k.0, &c.k.1),
        ell: c.ell,
        count: c.count(),
    };
    serde_json::to_value(dto).expect("cover serializes")
}

/// Parses a cover from the external JSON schema against an ambient group.
pub fn cover_from_json(g: &GroupSpec, v: &serde_json::Value) -> Result<CosetCover> {
    let dto: CoverDto =
        serde_json::from_value(v.clone()).map_err(|e| Error::Format(e.to_string()))?;
    let sub_elems: Vec<Element> = dto.subgroup.into_iter().map(Element).collect();
    let subgroup = Subgroup::new(g.clone(), &sub_elems)?;
    let mut translates: Vec<Element> = dto.translates.into_iter().map(Element).collect();
    for t in &translates {
        if !g.contains(t) {
            return Err(Error::Format(format!("translate {t:?} not in {g:?}")));
        }
    }
    translates.sort();
    translates.dedup();
    let k = parse_fraction(&dto.k)?;
    Ok(CosetCover {
        subgroup,
        translates,
        k,
        ell: dto.ell,
    })
}

/// Exact doubling constant `K = |A + A| / |A|`.
pub fn doubling(a: &SetInput) -> Result<(BigUint, BigUint)> {
    let idx = a.indices()?;
    let aa = sumset_idx(&a.group, &idx, &idx, Sign::Plus);
    let num = BigUint::from(aa.len() as u64);
    let den = BigUint::from(idx.len() as u64);
    let g = num.gcd(&den);
    Ok((num / &g, den / g))
}

/// `U_A` together with the bridge quantities `d[U_A; -U_A]` and `ln K`.
#[derive(Clone, Debug)]
pub struct EntropicBridge {
    pub uniform: Dist,
    /// `d[U_A; -U_A]`.
    pub dist: f64,
    /// `ln K` for the exact doubling constant.
    pub log_k: f64,
}

impl EntropicBridge {
    /// `ln K - d[U_A; -U_A]`; nonnegative by the doubling bound.
    pub fn slack(&self) -> f64 {
        self.log_k - self.dist
    }
}

/// The entropic bridge: `d[U_A; -U_A] <= ln K`.
pub fn entropic_bridge(a: &SetInput) -> Result<EntropicBridge> {
    let ua = a.uniform()?;
    let dist = rdist(&ua, &ua.neg())?;
    let (kn, kd) = doubling(a)?;
    let log_k = ln_big(&kn) - ln_big(&kd);
    Ok(EntropicBridge {
        uniform: ua,
        dist,
        log_k,
    })
}

/// The translate `x0` maximizing `|A cap (H + x0)|` (equivalently the mode
/// of `U_A - U_H`), with ties broken lexicographically. Returns the exact
/// density `|A cap (H + x0)| / |H|`.
pub fn best_translate(a: &SetInput, h: &Subgroup) -> Result<(Element, (BigUint, BigUint))> {
    if h.parent() != &a.group {
        return Err(Error::GroupMismatch(
            "subgroup belongs to a different group".into(),
        ));
    }
    let g = &a.group;
    let aidx = a.indices()?;
    let mut best: Option<(u64, usize)> = None;
    for x0 in 0..g.size() {
        let count = h
            .indices()
            .iter()
            .filter(|&&hh| aidx.contains(&g.add_idx(x0, hh)))
            .count();
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((x0, count));
        }
    }
    let (x0, count) = best.expect("groups are nonempty");
    let num = BigUint::from(count as u64);
    let den = BigUint::from(h.len());
    let gcd = num.gcd(&den);
    Ok((g.element(x0), (num / &gcd, den / gcd)))
}

/// Greedy covering lemma: scans `A` in canonical order keeping elements
/// whose translate of `B` is disjoint from all kept translates. The kept
/// list `T` satisfies `A` inside `T + (B - B)` and `|T| |B| <= |A + B|`.
pub fn ruzsa_cover(
    g: &GroupSpec,
    a: &BTreeSet<Element>,
    b: &BTreeSet<Element>,
) -> Result<Vec<Element>> {
    if b.is_empty() {
        return Err(Error::EmptyInput("covering with an empty set"));
    }
    let bidx = index_set(g, b)?;
    let mut taken: BTreeSet<u64> = BTreeSet::new();
    let mut kept = Vec::new();
    for e in a {
        let ei = g.index(e)?;
        let translate: Vec<u64> = bidx.iter().map(|&bb| g.add_idx(ei, bb)).collect();
        if translate.iter().any(|t| taken.contains(t)) {
            continue;
        }
        taken.extend(translate);
        kept.push(e.clone());
    }
    Ok(kept)
}

/// Descends to a subgroup of `h` with size at most `target` (and, by the
/// prime-index steps, more than `target / p` for the largest prime `p`
/// involved). Steps reduce the largest cyclic factor first: the index is the
/// smallest prime of the exponent and, among subgroups of that index, the
/// one of least exponent (then least element list) is taken.
pub fn subdivide(h: &Subgroup, target: u64) -> Result<Subgroup> {
    if target == 0 {
        return Err(Error::Format("subdivision target must be positive".into()));
    }
    let g = h.parent().clone();
    let mut current = h.clone();
    while current.len() > target {
        let exponent = current.exponent();
        let p = smallest_prime_factor(exponent);
        let want = current.len() / p;
        let subs = subgroups_within(&g, current.indices())?;
        let step = subs
            .into_iter()
            .filter(|s| s.len() == want)
            .map(|s| (s.exponent(), s))
            .min_by(|(ea, sa), (eb, sb)| ea.cmp(eb).then_with(|| sa.cmp(sb)))
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Shape("no prime-index subgroup found".into()))?;
        current = step;
    }
    Ok(current)
}

fn smallest_prime_factor(n: u64) -> u64 {
    debug_assert!(n >= 2);
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 1;
    }
    n
}

/// Tuning knobs for the cover pipeline.
#[derive(Clone, Debug)]
pub struct PfrConfig {
    pub decrement: DecrementConfig,
    /// Constant `C` in the reported count comparison `(2K)^(C m^3)`.
    pub count_constant: f64,
    pub subgroup_cap: u64,
}

impl Default for PfrConfig {
    fn default() -> Self {
        PfrConfig {
            decrement: DecrementConfig::default(),
            count_constant: 12.0,
            subgroup_cap: DEFAULT_SUBGROUP_CAP,
        }
    }
}

/// Everything the pipeline produced, for reporting.
#[derive(Clone, Debug)]
pub struct PfrOutcome {
    pub cover: CosetCover,
    pub bridge_slack: f64,
    /// `ln` of the reported count against `C m^3 ln(2K)`; reported, never
    /// asserted.
    pub count_log: f64,
    pub count_log_bound: f64,
    /// The subgroup found by the entropic stage, before subdivision.
    pub entropic_subgroup: Subgroup,
    pub theorem: Theorem14Result,
}

/// The full pipeline: entropic stage on `(U_A, -U_A)`, dense translate,
/// greedy cover, subdivision to `|H| <= |A|`, and exact revalidation.
pub fn pfr_cover(a: &SetInput, cfg: &PfrConfig) -> Result<PfrOutcome> {
    let g = a.group().clone();
    if g.torsion() < 2 {
        return Err(Error::Shape("group torsion must be at least 2".into()));
    }
    let (a0, shift) = a.normalized();

    let bridge = entropic_bridge(&a0)?;
    let theorem = theorem_1_4(&bridge.uniform, &bridge.uniform.neg(), &cfg.decrement)?;
    let h0 = theorem.subgroup.clone();

    let (x0, _) = best_translate(&a0, &h0)?;
    let x0i = g.index(&x0)?;
    let a0idx = a0.indices()?;
    let b: BTreeSet<Element> = h0
        .indices()
        .iter()
        .map(|&hh| g.add_idx(x0i, hh))
        .filter(|i| a0idx.contains(i))
        .map(|i| g.element(i))
        .collect();
    let t = ruzsa_cover(&g, a0.elements(), &b)?;

    let h = subdivide(&h0, a0.len())?;

    // Expand each kept translate of H0 into cosets of H, keep the cosets
    // meeting A, and shift back to the input coordinates.
    let reps: Vec<u64> = coset_reps_within(&g, &h0, &h);
    let mut translates: BTreeSet<u64> = BTreeSet::new();
    let shift_i = g.index(&shift)?;
    let aidx = a.indices()?;
    for tt in &t {
        let ti = g.index(tt)?;
        for &r in &reps {
            let base = g.add_idx(g.add_idx(ti, r), shift_i);
            let coset: Vec<u64> = h.indices().iter().map(|&hh| g.add_idx(base, hh)).collect();
            if coset.iter().any(|i| aidx.contains(i)) {
                let canonical = coset.iter().min().copied().expect("nonempty coset");
                translates.insert(canonical);
            }
        }
    }
    let translates: Vec<Element> = translates.into_iter().map(|i| g.element(i)).collect();

    // Certify the containment exponent against the original set.
    let ell = minimal_ell_against_difference(&h, a)?.ok_or_else(|| {
        Error::Shape("subgroup not contained in any iterated difference set".into())
    })?;

    let k = doubling(a)?;
    let cover = CosetCover {
        subgroup: h,
        translates,
        k: k.clone(),
        ell,
    };

    let report = verify_cover(a, &cover, cfg.subgroup_cap)?;
    if !report.hard_checks_pass() {
        return Err(Error::Shape(format!(
            "assembled cover failed verification: {report:?}"
        )));
    }

    let m = g.torsion() as f64;
    let log_2k = (2.0f64).ln() + ln_big(&k.0) - ln_big(&k.1);
    Ok(PfrOutcome {
        count_log: (cover.count() as f64).ln(),
        count_log_bound: cfg.count_constant * m.powi(3) * log_2k,
        bridge_slack: bridge.slack(),
        entropic_subgroup: h0,
        cover,
        theorem,
    })
}

/// Least `ell` with `H` inside `ell A - ell A`, by iterating sumsets until
/// containment or stabilization.
pub fn minimal_ell_against_difference(h: &Subgroup, a: &SetInput) -> Result<Option<u64>> {
    let g = a.group();
    let base = a.indices()?;
    let mut acc = base.clone();
    let mut ell = 1u64;
    loop {
        let diff = sumset_idx(g, &acc, &acc, Sign::Minus);
        if h.indices().iter().all(|i| diff.contains(i)) {
            return Ok(Some(ell));
        }
        let next = sumset_idx(g, &acc, &base, Sign::Plus);
        if next == acc {
            return Ok(None);
        }
        acc = next;
        ell += 1;
    }
}

/// Representatives of the cosets of `h` inside `h0`.
fn coset_reps_within(g: &GroupSpec, h0: &Subgroup, h: &Subgroup) -> Vec<u64> {
    let mut seen: BTreeSet<u64> = BTreeSet::new();
    let mut reps = Vec::new();
    for &x in h0.indices() {
        if seen.contains(&x) {
            continue;
        }
        for &hh in h.indices() {
            seen.insert(g.add_idx(x, hh));
        }
        reps.push(x);
    }
    reps
}

/// Outcome of the exact cover checks.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub coverage_ok: bool,
    /// Elements of `A` missed by the cover, when any.
    pub missing: Vec<Element>,
    /// `|H| <= |A|`.
    pub size_ok: bool,
    /// `H` inside `ell A - ell A` at the reported `ell`.
    pub containment_ok: bool,
    pub count: u64,
    /// Smallest coset count over enumerable subgroups of size at most `|A|`,
    /// with the witnessing subgroup size; absent above the enumeration cap.
    pub optimal: Option<(u64, u64)>,
    /// `count / optimal`, when the optimal is known.
    pub ratio: Option<f64>,
}

impl VerifyReport {
    pub fn hard_checks_pass(&self) -> bool {
        self.coverage_ok && self.size_ok && self.containment_ok
    }
}

/// Exact verification of a cover: coverage, subgroup size, containment at
/// the reported exponent, and the brute-force optimal comparison below the
/// enumeration cap.
pub fn verify_cover(a: &SetInput, c: &CosetCover, cap: u64) -> Result<VerifyReport> {
    let g = a.group();
    if c.subgroup.parent() != g {
        return Err(Error::GroupMismatch(
            "cover subgroup on a different group".into(),
        ));
    }
    let mut covered: BTreeSet<u64> = BTreeSet::new();
    for t in &c.translates {
        let ti = g.index(t)?;
        for &hh in c.subgroup.indices() {
            covered.insert(g.add_idx(ti, hh));
        }
    }
    let mut missing = Vec::new();
    for e in a.elements() {
        if !covered.contains(&g.index(e)?) {
            missing.push(e.clone());
        }
    }
    let coverage_ok = missing.is_empty();
    let size_ok = c.subgroup.len() <= a.len();

    let containment_ok = {
        let aidx = a.indices()?;
        let la = dilate_idx(g, &aidx, c.ell);
        let diff = sumset_idx(g, &la, &la, Sign::Minus);
        c.subgroup.indices().iter().all(|i| diff.contains(i))
    };

    let optimal = if g.size() <= cap {
        let aidx = a.indices()?;
        let mut best: Option<(u64, u64)> = None;
        for h in enumerate_subgroups(g, cap)? {
            if h.len() > a.len() {
                continue;
            }
            let mut classes: BTreeSet<u64> = BTreeSet::new();
            for &ai in &aidx {
                let canonical = h
                    .indices()
                    .iter()
                    .map(|&hh| g.add_idx(ai, hh))
                    .min()
                    .expect("nonempty");
                classes.insert(canonical);
            }
            let count = classes.len() as u64;
            if best.is_none_or(|(c0, _)| count < c0) {
                best = Some((count, h.len()));
            }
        }
        best
    } else {
        None
    };

    let ratio = optimal.map(|(opt, _)| c.count() as f64 / opt as f64);
    Ok(VerifyReport {
        coverage_ok,
        missing,
        size_ok,
        containment_ok,
        count: c.count(),
        optimal,
        ratio,
    })
}
