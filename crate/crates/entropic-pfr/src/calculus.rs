//! The entropic Ruzsa calculus as machine-checkable predicates.
//!
//! Every inequality is exposed as a slack computation (`slack = RHS - LHS`,
//! pass means `slack >= -tol`) and every identity as a residual
//! (`residual = |LHS - RHS|`, pass means `residual <= tol`), so the fuzz
//! harness has one assertion shape for everything.
//!
//! Registry names preserve the source item labels: the `A1.*` family skips
//! `iii` and `vi` on purpose, so citations stay stable.

use serde::Serialize;

use crate::dist::{lift, lifted_joint, CondPair, Dist, JointDist, LiftMember, RVTuple};
use crate::entropy::{entropy, mutual_info, subset_entropy};
use crate::group::{GroupSpec, LinearMap, Sign};
use crate::numeric::digest_bytes;
use crate::ruzsa::{cond_multidist, cond_rdist, multidist, rdist};
use crate::{Element, Error, Result, DEFAULT_ATOM_CAP};

/// Whether a check is an inequality (slack) or an identity (residual).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    Slack,
    Residual,
}

/// Outcome of one inequality or identity evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct SlackReport {
    /// Registry identifier, e.g. `A1.iv` or `L4.1`.
    pub name: String,
    pub kind: CheckKind,
    /// Worst slack across sub-checks, or the residual.
    pub value: f64,
    /// Named sub-values when an item carries several bounds.
    pub sub: Vec<(String, f64)>,
    /// Deterministic hash of the exact inputs.
    pub inputs_digest: String,
}

impl SlackReport {
    fn slack(name: &str, digest: String, value: f64) -> Self {
        SlackReport {
            name: name.into(),
            kind: CheckKind::Slack,
            value,
            sub: Vec::new(),
            inputs_digest: digest,
        }
    }

    fn residual(name: &str, digest: String, value: f64) -> Self {
        SlackReport {
            name: name.into(),
            kind: CheckKind::Residual,
            value,
            sub: Vec::new(),
            inputs_digest: digest,
        }
    }

    fn with_sub(mut self, sub: Vec<(String, f64)>) -> Self {
        self.value = sub.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        self.sub = sub;
        self
    }

    pub fn passes(&self, tol: f64) -> bool {
        match self.kind {
            CheckKind::Slack => self.value >= -tol,
            CheckKind::Residual => self.value <= tol,
        }
    }
}

pub(crate) fn digest_inputs<T: Serialize>(inputs: &T) -> String {
    let bytes = serde_json::to_vec(inputs).expect("canonical serialization");
    digest_bytes(&bytes)
}

// --- Ruzsa calculus: the A1 family ---

/// A1.i — triangle inequality `d[X; Z] <= d[X; Y] + d[Y; Z]`, with symmetry
/// and nonnegativity as sub-slacks.
pub fn a1_triangle(x: &Dist, y: &Dist, z: &Dist) -> Result<SlackReport> {
    let digest = digest_inputs(&(x, y, z));
    let dxy = rdist(x, y)?;
    let dyz = rdist(y, z)?;
    let dxz = rdist(x, z)?;
    let dyx = rdist(y, x)?;
    Ok(SlackReport::slack("A1.i", digest, 0.0).with_sub(vec![
        ("triangle".into(), dxy + dyz - dxz),
        ("nonneg".into(), dxy),
        ("symmetry".into(), -(dxy - dyx).abs()),
    ]))
}

/// A1.ii — `max(H(X), H(Y)) - I(X:Y) <= H(X +- Y)` for either sign, on a
/// possibly dependent pair.
pub fn a1_sum_entropy(xy: &JointDist) -> Result<SlackReport> {
    require_pair_common_group(xy)?;
    let digest = digest_inputs(xy);
    let hx = subset_entropy(xy, &[0])?;
    let hy = subset_entropy(xy, &[1])?;
    let i = mutual_info(xy, &[0], &[1], &[])?;
    let bound = hx.max(hy) - i;
    let h_sum = entropy(&xy.combine_coords(&[1, 1])?);
    let h_diff = entropy(&xy.combine_coords(&[1, -1])?);
    Ok(SlackReport::slack("A1.ii", digest, 0.0).with_sub(vec![
        ("plus".into(), h_sum - bound),
        ("minus".into(), h_diff - bound),
    ]))
}

/// A1.iv — entropic Balog-Szemeredi-Gowers:
/// `sum_z p_{X+Y}(z) d[(X|X+Y=z); (Y|X+Y=z)] <= 3 I(X:Y) + 2 H(X+Y) - H(X) - H(Y)`.
pub fn a1_bsg(xy: &JointDist) -> Result<SlackReport> {
    require_pair_common_group(xy)?;
    let digest = digest_inputs(xy);
    let ext = xy.adjoin_combo(&[1, 1])?;
    let sum_marg = ext.marginal_dist(2)?;
    let (wden, _) = sum_marg.raw();
    let mut lhs = 0.0;
    for (z, w, _) in ext.coord_support(2)? {
        let slice = ext.condition(2, &z)?;
        let xz = slice.marginal_dist(0)?;
        let yz = slice.marginal_dist(1)?;
        lhs += crate::numeric::ratio_f64(&w, wden) * rdist(&xz, &yz)?;
    }
    let hx = subset_entropy(xy, &[0])?;
    let hy = subset_entropy(xy, &[1])?;
    let i = mutual_info(xy, &[0], &[1], &[])?;
    let h_sum = entropy(&sum_marg);
    let rhs = 3.0 * i + 2.0 * h_sum - hx - hy;
    Ok(SlackReport::slack("A1.iv", digest, rhs - lhs))
}

/// A1.v — for `(X, Z)` independent of `Y`:
/// `H(X - Z) <= H(X - Y) + H(Y - Z) - H(Y)`.
pub fn a1_sub_indep(xz: &JointDist, y: &Dist) -> Result<SlackReport> {
    require_pair_common_group(xz)?;
    if y.group() != &xz.coords()[0] {
        return Err(Error::GroupMismatch(
            "independent Y on a different group".into(),
        ));
    }
    let digest = digest_inputs(&(xz, y));
    let lhs = entropy(&xz.combine_coords(&[1, -1])?);
    let xm = xz.marginal_dist(0)?;
    let zm = xz.marginal_dist(1)?;
    let h_xy = entropy(&xm.convolve(y, Sign::Minus)?);
    let h_yz = entropy(&y.convolve(&zm, Sign::Minus)?);
    Ok(SlackReport::slack(
        "A1.v",
        digest,
        h_xy + h_yz - entropy(y) - lhs,
    ))
}

/// A1.vii — `d[X; -Y] <= 3 d[X; Y]`.
pub fn a1_neg(x: &Dist, y: &Dist) -> Result<SlackReport> {
    let digest = digest_inputs(&(x, y));
    let lhs = rdist(x, &y.neg())?;
    let rhs = 3.0 * rdist(x, y)?;
    Ok(SlackReport::slack("A1.vii", digest, rhs - lhs))
}

/// A1.viii — `d[X; Y | Z] <= d[X; Y] + (1/2) I(Y : Z)`.
pub fn a1_cond_dist(x: &Dist, yz: &CondPair) -> Result<SlackReport> {
    let digest = digest_inputs(&(x, yz.joint()));
    let lhs = cond_rdist(x, yz)?;
    let ym = yz.main_marginal()?;
    let i = mutual_info(yz.joint(), &[0], &[1], &[])?;
    Ok(SlackReport::slack(
        "A1.viii",
        digest,
        rdist(x, &ym)? + 0.5 * i - lhs,
    ))
}

/// A1.ix — for independent `Y, Z`:
/// `d[X; Y | Y+Z] <= d[X; Y] + (1/2)(H(Y+Z) - H(Z))`.
pub fn a1_cond_sum(x: &Dist, y: &Dist, z: &Dist) -> Result<SlackReport> {
    if y.group() != z.group() {
        return Err(Error::GroupMismatch("Y and Z on different groups".into()));
    }
    let digest = digest_inputs(&(x, y, z));
    let g = y.group();
    let id = LinearMap::identity(g);
    let zero = LinearMap::zero(g, g);
    let t = RVTuple::new(vec![y.clone(), z.clone()])?;
    let j = lifted_joint(
        &t,
        &[vec![id.clone(), id.clone()], vec![zero, id]],
        DEFAULT_ATOM_CAP,
    )?;
    let pair = CondPair::new(j)?;
    let lhs = cond_rdist(x, &pair)?;
    let h_yz = entropy(&y.convolve(z, Sign::Plus)?);
    Ok(SlackReport::slack(
        "A1.ix",
        digest,
        rdist(x, y)? + 0.5 * (h_yz - entropy(z)) - lhs,
    ))
}

/// A1.x — Kaimanovich-Vershik-Madiman: for jointly independent
/// `X, Y_1, ..., Y_n`, both
/// `H(X + sum Y_i) - H(X) <= sum (H(X + Y_i) - H(X))` and
/// `d[X; sum Y_i] <= 2 sum d[X; Y_i]`.
pub fn a1_kvm(x: &Dist, ys: &RVTuple) -> Result<SlackReport> {
    if x.group() != ys.group() {
        return Err(Error::GroupMismatch(
            "KVM arguments on different groups".into(),
        ));
    }
    let digest = digest_inputs(&(x, ys));
    let sum = ys.sum_law()?;
    let hx = entropy(x);
    let lhs_kv = entropy(&x.convolve(&sum, Sign::Plus)?) - hx;
    let mut rhs_kv = 0.0;
    let mut sum_d = 0.0;
    for yi in ys.members() {
        rhs_kv += entropy(&x.convolve(yi, Sign::Plus)?) - hx;
        sum_d += rdist(x, yi)?;
    }
    let d_sum = rdist(x, &sum)?;
    Ok(SlackReport::slack("A1.x", digest, 0.0).with_sub(vec![
        ("kv-1".into(), rhs_kv - lhs_kv),
        ("ruzsa-2".into(), 2.0 * sum_d - d_sum),
    ]))
}

/// The sharper variant of A1.x's second bound with constant `(2n-1)/n`
/// instead of 2. Optional: not part of the default registry.
pub fn a1_kvm_sharp(x: &Dist, ys: &RVTuple) -> Result<SlackReport> {
    if x.group() != ys.group() {
        return Err(Error::GroupMismatch(
            "KVM arguments on different groups".into(),
        ));
    }
    let digest = digest_inputs(&(x, ys));
    let n = ys.len() as f64;
    let sum = ys.sum_law()?;
    let mut sum_d = 0.0;
    for yi in ys.members() {
        sum_d += rdist(x, yi)?;
    }
    let d_sum = rdist(x, &sum)?;
    Ok(SlackReport::slack(
        "A1.x.sharp",
        digest,
        (2.0 * n - 1.0) / n * sum_d - d_sum,
    ))
}

fn require_pair_common_group(j: &JointDist) -> Result<()> {
    if j.arity() != 2 {
        return Err(Error::Shape("expected a two-coordinate joint".into()));
    }
    if j.coords()[0] != j.coords()[1] {
        return Err(Error::GroupMismatch(
            "pair coordinates on different groups".into(),
        ));
    }
    Ok(())
}

// --- multidistance estimates: the A2 family ---

/// A2.i — for independent `X_I`, any `Y` and `i0`:
/// `d[Y; sum X_i] <= d[Y; X_{i0}] + (1/2)(H(sum X_i) - H(X_{i0}))`.
pub fn a2_sum_dist(t: &RVTuple, y: &Dist, i0: usize) -> Result<SlackReport> {
    if i0 >= t.len() {
        return Err(Error::Shape(format!("index {i0} out of range")));
    }
    if y.group() != t.group() {
        return Err(Error::GroupMismatch("Y on a different group".into()));
    }
    let digest = digest_inputs(&(t, y, i0));
    let sum = t.sum_law()?;
    let xi = &t.members()[i0];
    let lhs = rdist(y, &sum)?;
    let rhs = rdist(y, xi)? + 0.5 * (entropy(&sum) - entropy(xi));
    Ok(SlackReport::slack("A2.i", digest, rhs - lhs))
}

/// A2.ii — for independent `(Y_j)` independent of `X_I` and `f : J -> I`:
/// `H(sum Y_j) <= H(sum X_i) + sum_j (H(Y_j - X_{f(j)}) - H(X_{f(j)}))`.
pub fn a2_sum_entropy_map(t: &RVTuple, ys: &RVTuple, f: &[usize]) -> Result<SlackReport> {
    if f.len() != ys.len() {
        return Err(Error::Shape("index map must cover every Y member".into()));
    }
    if f.iter().any(|&i| i >= t.len()) {
        return Err(Error::Shape("index map out of range".into()));
    }
    if t.group() != ys.group() {
        return Err(Error::GroupMismatch("tuples on different groups".into()));
    }
    let digest = digest_inputs(&(t, ys, f));
    let lhs = entropy(&ys.sum_law()?);
    let mut rhs = entropy(&t.sum_law()?);
    for (yj, &fi) in ys.members().iter().zip(f) {
        let xf = &t.members()[fi];
        rhs += entropy(&yj.convolve(xf, Sign::Minus)?) - entropy(xf);
    }
    Ok(SlackReport::slack("A2.ii", digest, rhs - lhs))
}

/// A2.iii — with `W = sum X_i`: `d[W; -W] <= 2 D[X_I]`.
pub fn a2_self_dist(t: &RVTuple) -> Result<SlackReport> {
    let digest = digest_inputs(t);
    let w = t.sum_law()?;
    let lhs = rdist(&w, &w.neg())?;
    Ok(SlackReport::slack(
        "A2.iii",
        digest,
        2.0 * multidist(t)? - lhs,
    ))
}

// --- sums of dilates: the A3 family ---

/// Entropy growth under a dilate: `H(X - aY) - H(X)` for independent `X, Y`.
pub fn dilate_lhs(x: &Dist, y: &Dist, a: i64) -> Result<f64> {
    if x.group() != y.group() {
        return Err(Error::GroupMismatch(
            "dilate arguments on different groups".into(),
        ));
    }
    let ay = y.dilate(a);
    Ok(entropy(&x.convolve(&ay, Sign::Minus)?) - entropy(x))
}

/// A3 — the dilate estimates
/// (i) `H(X - aY) - H(X) <= 4 |a| d[X; Y]` and
/// (ii) `H(X - aY) - H(X) <= (4 + 10 floor(log2 |a|)) d[X; Y]`;
/// `a = 0` makes the left side vanish.
pub fn check_dilate(x: &Dist, y: &Dist, a: i64) -> Result<SlackReport> {
    let digest = digest_inputs(&(x, y, a));
    let lhs = dilate_lhs(x, y, a)?;
    let d = rdist(x, y)?;
    let (c1, c2) = dilate_coefficients(a);
    Ok(SlackReport::slack("A3", digest, 0.0).with_sub(vec![
        ("i".into(), c1 * d - lhs),
        ("ii".into(), c2 * d - lhs),
    ]))
}

/// `(4|a|, 4 + 10 floor(log2 |a|))`, both zero at `a = 0`.
pub fn dilate_coefficients(a: i64) -> (f64, f64) {
    if a == 0 {
        return (0.0, 0.0);
    }
    let abs = a.unsigned_abs();
    (4.0 * abs as f64, 4.0 + 10.0 * abs.ilog2() as f64)
}

// --- data processing: A4 ---

/// A total function table from a group's elements into another group.
#[derive(Clone, Debug, Serialize)]
pub struct FnTable {
    pub target: GroupSpec,
    /// `values[source element index] = target element index`.
    pub values: Vec<u64>,
}

impl FnTable {
    pub fn identity(g: &GroupSpec) -> Self {
        FnTable {
            target: g.clone(),
            values: (0..g.size()).collect(),
        }
    }

    pub fn constant(source: &GroupSpec, target: &GroupSpec, value: u64) -> Self {
        FnTable {
            target: target.clone(),
            values: vec![value; source.size() as usize],
        }
    }

    fn check(&self, source: &GroupSpec) -> Result<()> {
        if self.values.len() as u64 != source.size() {
            return Err(Error::Shape(format!(
                "partial function table: {} entries for a group of size {}",
                self.values.len(),
                source.size()
            )));
        }
        if self.values.iter().any(|&v| v >= self.target.size()) {
            return Err(Error::Shape(
                "function table value out of target range".into(),
            ));
        }
        Ok(())
    }
}

/// A4 — data processing: `I(f(X) : g(Y) | Z) <= I(X : Y | Z)`.
///
/// The joint's first two coordinates are `X` and `Y`; any remaining
/// coordinates form `Z` when `conditioned` is set.
pub fn check_data_processing(
    j: &JointDist,
    f: &FnTable,
    g: &FnTable,
    conditioned: bool,
) -> Result<SlackReport> {
    if j.arity() < 2 {
        return Err(Error::Shape(
            "data processing needs at least two coordinates".into(),
        ));
    }
    f.check(&j.coords()[0])?;
    g.check(&j.coords()[1])?;
    let digest = digest_inputs(&(j, f, g, conditioned));
    let given: Vec<usize> = if conditioned {
        (2..j.arity()).collect()
    } else {
        Vec::new()
    };
    let i_raw = mutual_info(j, &[0], &[1], &given)?;

    // Transformed joint (f(X), g(Y), Z...).
    let mut coords: Vec<GroupSpec> = vec![f.target.clone(), g.target.clone()];
    coords.extend_from_slice(&j.coords()[2..]);
    let space = crate::dist::Space::new(&coords, DEFAULT_ATOM_CAP)?;
    let (den, _) = j.raw();
    let mut atoms: std::collections::BTreeMap<u64, num_bigint::BigUint> =
        std::collections::BTreeMap::new();
    for (xs, n) in j.atoms() {
        let mut keys: Vec<u64> = Vec::with_capacity(xs.len());
        keys.push(f.values[j.coords()[0].index(&xs[0])? as usize]);
        keys.push(g.values[j.coords()[1].index(&xs[1])? as usize]);
        for (c, x) in xs.iter().enumerate().skip(2) {
            keys.push(j.coords()[c].index(x)?);
        }
        *atoms.entry(space.assemble(&keys)).or_default() += n;
    }
    let tj = JointDist::from_raw(coords, den.clone(), atoms, DEFAULT_ATOM_CAP)?;
    let i_mapped = mutual_info(&tj, &[0], &[1], &given)?;
    Ok(SlackReport::slack("A4", digest, i_raw - i_mapped))
}

// --- multidistance vs Ruzsa distance: Lemma 3.1 ---

/// L3.1.i — `sum_{j != k} d[X_j; -X_k] <= m(m-1) D[X_I]`.
pub fn l31_pairwise(t: &RVTuple) -> Result<SlackReport> {
    let digest = digest_inputs(t);
    let m = t.len() as f64;
    let d = multidist(t)?;
    let mut lhs = 0.0;
    for (j, xj) in t.members().iter().enumerate() {
        for (k, xk) in t.members().iter().enumerate() {
            if j != k {
                lhs += rdist(xj, &xk.neg())?;
            }
        }
    }
    Ok(SlackReport::slack(
        "L3.1.i",
        digest,
        m * (m - 1.0) * d - lhs,
    ))
}

/// L3.1.ii — `sum_j d[X_j; X_j] <= 2m D[X_I]`.
pub fn l31_self(t: &RVTuple) -> Result<SlackReport> {
    let digest = digest_inputs(t);
    let m = t.len() as f64;
    let d = multidist(t)?;
    let mut lhs = 0.0;
    for xj in t.members() {
        lhs += rdist(xj, xj)?;
    }
    Ok(SlackReport::slack("L3.1.ii", digest, 2.0 * m * d - lhs))
}

/// L3.1.iii — for identically distributed members:
/// `D[X_I] <= m d[X_j; X_j]`.
pub fn l31_identical(t: &RVTuple) -> Result<SlackReport> {
    let first = &t.members()[0];
    if t.members().iter().any(|x| x != first) {
        return Err(Error::Shape(
            "L3.1.iii needs identically distributed members".into(),
        ));
    }
    let digest = digest_inputs(t);
    let m = t.len() as f64;
    Ok(SlackReport::slack(
        "L3.1.iii",
        digest,
        m * rdist(first, first)? - multidist(t)?,
    ))
}

// --- the multidistance chain rule: Lemmas 4.1-4.3 ---

/// Terms of the chain-rule decomposition through a homomorphism.
#[derive(Clone, Debug)]
pub struct ChainPieces {
    /// `D[X_I]`
    pub total: f64,
    /// `D[X_I | pi(X_I)]`
    pub conditional: f64,
    /// `D[pi(X_I)]`
    pub projected: f64,
    /// `I(sum X_i : pi(X_I) | pi(sum X_i))`
    pub info: f64,
}

impl ChainPieces {
    pub fn residual(&self) -> f64 {
        (self.total - (self.conditional + self.projected + self.info)).abs()
    }
}

/// Evaluates the terms of the multidistance chain rule for an independent
/// tuple and a homomorphism.
pub fn chain_pieces(t: &RVTuple, pi: &LinearMap) -> Result<ChainPieces> {
    if pi.source() != t.group() {
        return Err(Error::GroupMismatch(
            "projection source differs from tuple group".into(),
        ));
    }
    let g = t.group();
    let h = pi.target();
    let m = t.len();
    let id = LinearMap::identity(g);

    let total = multidist(t)?;

    // D[X_I | pi(X_I)] via pairs (X_i, pi(X_i)).
    let pairs: Vec<CondPair> = t
        .members()
        .iter()
        .map(|x| {
            let j = lifted_joint(
                &RVTuple::new(vec![x.clone()])?,
                &[vec![id.clone(), pi.clone()]],
                DEFAULT_ATOM_CAP,
            )?;
            CondPair::new(j)
        })
        .collect::<Result<_>>()?;
    let conditional = cond_multidist(&pairs)?;

    // D[pi(X_I)].
    let projected_tuple = RVTuple::new(
        t.members()
            .iter()
            .map(|x| x.pushforward(pi))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let projected = multidist(&projected_tuple)?;

    // I(sum X_i : pi(X_I) | pi(sum X_i)) from the lifted joint
    // (sum, pi(X_1), ..., pi(X_m), pi(sum)).
    let mut maps = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(m + 2);
        row.push(id.clone());
        for k in 0..m {
            row.push(if k == i {
                pi.clone()
            } else {
                LinearMap::zero(g, h)
            });
        }
        row.push(pi.clone());
        maps.push(row);
    }
    let joint = lifted_joint(t, &maps, DEFAULT_ATOM_CAP)?;
    let b: Vec<usize> = (1..=m).collect();
    let info = mutual_info(&joint, &[0], &b, &[m + 1])?;

    Ok(ChainPieces {
        total,
        conditional,
        projected,
        info,
    })
}

/// L4.1 — residual of
/// `D[X_I] = D[X_I | pi(X_I)] + D[pi(X_I)] + I(sum X_i : pi(X_I) | pi(sum X_i))`.
pub fn chain_rule_residual(t: &RVTuple, pi: &LinearMap) -> Result<SlackReport> {
    let digest = digest_inputs(&(t, pi));
    let pieces = chain_pieces(t, pi)?;
    Ok(SlackReport::residual("L4.1", digest, pieces.residual()))
}

/// Conditioning-vector expansion shared by the conditional rules: per vector
/// `y`, the product weight and the conditioned plain tuple.
pub(crate) fn conditioning_vectors(pairs: &[CondPair]) -> Result<Vec<(f64, RVTuple)>> {
    let slices: Vec<Vec<(Element, num_bigint::BigUint, Dist)>> =
        pairs.iter().map(|p| p.slices()).collect::<Result<_>>()?;
    let dens: Vec<num_bigint::BigUint> = pairs
        .iter()
        .map(|p| p.weight_den())
        .collect::<Result<_>>()?;
    let combos: u64 = slices.iter().map(|s| s.len() as u64).product();
    if combos > 200_000 {
        return Err(Error::CapExceeded {
            cap: "atom",
            detail: format!("{combos} conditioning vectors"),
        });
    }
    let mut out = Vec::with_capacity(combos as usize);
    let mut picks = vec![0usize; pairs.len()];
    'outer: loop {
        let mut weight = 1.0;
        let mut laws = Vec::with_capacity(pairs.len());
        for (i, &pi) in picks.iter().enumerate() {
            let (_, w, law) = &slices[i][pi];
            weight *= crate::numeric::ratio_f64(w, &dens[i]);
            laws.push(law.clone());
        }
        out.push((weight, RVTuple::new(laws)?));
        let mut c = 0;
        loop {
            picks[c] += 1;
            if picks[c] < slices[c].len() {
                break;
            }
            picks[c] = 0;
            c += 1;
            if c == picks.len() {
                break 'outer;
            }
        }
    }
    Ok(out)
}

/// L4.2 — residual of the conditional chain rule
/// `D[X_I | Y_I] = D[X_I | pi(X_I), Y_I] + D[pi(X_I) | Y_I]
///   + I(sum X_i : pi(X_I) | pi(sum X_i), Y_I)`,
/// for pairs `(X_i, Y_i)` jointly independent across `i`.
pub fn cond_chain_rule_residual(pairs: &[CondPair], pi: &LinearMap) -> Result<SlackReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput(
            "conditional chain rule on an empty tuple",
        ));
    }
    let digest = digest_inputs(&(pairs.iter().map(|p| p.joint()).collect::<Vec<_>>(), pi));
    let lhs = cond_multidist(pairs)?;
    let mut rhs = 0.0;
    for (w, tuple) in conditioning_vectors(pairs)? {
        let p = chain_pieces(&tuple, pi)?;
        rhs += w * (p.conditional + p.projected + p.info);
    }
    Ok(SlackReport::residual("L4.2", digest, (lhs - rhs).abs()))
}

/// L4.3 — the iterated chain rule along a composable chain
/// `G_s -> G_{s-1} -> ... -> G_0 = {0}`; `chain[d]` sends `G_{d+1}` to `G_d`,
/// so the first entry must target the trivial group.
///
/// Checks the identity with all cross terms (sub-slack `identity`, the
/// negated residual) and the inequality keeping only the first
/// mutual-information term (sub-slack `inequality`).
pub fn iterated_chain_slack(t: &RVTuple, chain: &[LinearMap]) -> Result<SlackReport> {
    let s = chain.len();
    if s == 0 {
        return Err(Error::Shape("empty chain".into()));
    }
    if chain[0].target() != &GroupSpec::trivial() {
        return Err(Error::Shape(
            "chain must terminate in the trivial group".into(),
        ));
    }
    for d in 0..s - 1 {
        if chain[d].source() != chain[d + 1].target() {
            return Err(Error::Shape("chain does not compose".into()));
        }
    }
    if chain[s - 1].source() != t.group() {
        return Err(Error::GroupMismatch(
            "chain top differs from tuple group".into(),
        ));
    }
    let digest = digest_inputs(&(t, chain));

    // pis[d] : G_s -> G_d by composition; pis[s] = id.
    let mut pis: Vec<LinearMap> = vec![LinearMap::identity(t.group())];
    for d in (0..s).rev() {
        let prev = pis.last().unwrap();
        pis.push(chain[d].after(prev)?);
    }
    pis.reverse();

    let total = multidist(t)?;
    let id = LinearMap::identity(t.group());
    let mut cond_sum = 0.0;
    let mut info_first = 0.0;
    let mut info_rest = 0.0;
    for d in 1..=s {
        // D[pi_d(X_I) | pi_{d-1}(X_I)] via pairs (pi_d X_i, pi_{d-1} X_i).
        let pairs: Vec<CondPair> = t
            .members()
            .iter()
            .map(|x| {
                let j = lifted_joint(
                    &RVTuple::new(vec![x.clone()])?,
                    &[vec![pis[d].clone(), pis[d - 1].clone()]],
                    DEFAULT_ATOM_CAP,
                )?;
                CondPair::new(j)
            })
            .collect::<Result<_>>()?;
        cond_sum += cond_multidist(&pairs)?;

        if d < s {
            // I(sum X_i : pi_d(X_I) | pi_d(sum X_i), pi_{d-1}(X_I)).
            let m = t.len();
            let g = t.group();
            let hd = pis[d].target();
            let hprev = pis[d - 1].target();
            let mut maps = Vec::with_capacity(m);
            for i in 0..m {
                let mut row = Vec::with_capacity(2 * m + 2);
                row.push(id.clone());
                for k in 0..m {
                    row.push(if k == i {
                        pis[d].clone()
                    } else {
                        LinearMap::zero(g, hd)
                    });
                }
                row.push(pis[d].clone());
                for k in 0..m {
                    row.push(if k == i {
                        pis[d - 1].clone()
                    } else {
                        LinearMap::zero(g, hprev)
                    });
                }
                maps.push(row);
            }
            let joint = lifted_joint(t, &maps, DEFAULT_ATOM_CAP)?;
            let b: Vec<usize> = (1..=m).collect();
            let mut given: Vec<usize> = vec![m + 1];
            given.extend(m + 2..2 * m + 2);
            let info = mutual_info(&joint, &[0], &b, &given)?;
            if d == 1 {
                info_first = info;
            } else {
                info_rest += info;
            }
        }
    }
    let residual = (total - (cond_sum + info_first + info_rest)).abs();
    let slack = total - (cond_sum + info_first);
    Ok(SlackReport::slack("L4.3", digest, 0.0).with_sub(vec![
        ("identity".into(), -residual),
        ("inequality".into(), slack),
    ]))
}

/// L4.3 identity residual alone.
pub fn iterated_chain_residual(t: &RVTuple, chain: &[LinearMap]) -> Result<f64> {
    let rep = iterated_chain_slack(t, chain)?;
    Ok(-rep.sub[0].1)
}

// --- Corollary 4.4 ---

/// An m x m grid of jointly independent laws; `entries[i][j]` sits in row
/// `i`, column `j`.
#[derive(Clone, Debug, Serialize)]
pub struct Grid {
    pub entries: Vec<Vec<Dist>>,
}

impl Grid {
    pub fn new(entries: Vec<Vec<Dist>>) -> Result<Self> {
        let m = entries.len();
        if m == 0 {
            return Err(Error::EmptyInput("empty grid"));
        }
        if entries.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("grid must be square".into()));
        }
        let g = entries[0][0].group().clone();
        if entries.iter().flatten().any(|d| d.group() != &g) {
            return Err(Error::GroupMismatch(
                "grid entries on different groups".into(),
            ));
        }
        Ok(Grid { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn group(&self) -> &GroupSpec {
        self.entries[0][0].group()
    }

    pub fn column(&self, j: usize) -> Result<RVTuple> {
        RVTuple::new(self.entries.iter().map(|row| row[j].clone()).collect())
    }

    pub fn row_sums(&self) -> Result<RVTuple> {
        let laws = self
            .entries
            .iter()
            .map(|row| RVTuple::new(row.clone())?.sum_law())
            .collect::<Result<Vec<_>>>()?;
        RVTuple::new(laws)
    }

    /// Conditional multidistance of column `j` given the per-row suffix sums
    /// `X_{i,j} + ... + X_{i,m}`.
    fn column_given_suffix(&self, j: usize) -> Result<f64> {
        let g = self.group();
        let id = LinearMap::identity(g);
        let zero = LinearMap::zero(g, g);
        let m = self.size();
        let pairs: Vec<CondPair> = (0..m)
            .map(|i| {
                let members: Vec<Dist> = (j..m).map(|jj| self.entries[i][jj].clone()).collect();
                let t = RVTuple::new(members)?;
                let maps: Vec<Vec<LinearMap>> = (j..m)
                    .map(|jj| vec![if jj == j { id.clone() } else { zero.clone() }, id.clone()])
                    .collect();
                CondPair::new(lifted_joint(&t, &maps, DEFAULT_ATOM_CAP)?)
            })
            .collect::<Result<_>>()?;
        cond_multidist(&pairs)
    }

    /// Joint of (column sums, row sums, total); the expensive object.
    fn margins_joint(&self) -> Result<JointDist> {
        let m = self.size();
        let g = self.group();
        let coords = vec![g.clone(); 2 * m];
        let id = LinearMap::identity(g);
        let mut members = Vec::with_capacity(m * m);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                members.push(LiftMember::new(
                    d,
                    &coords,
                    &[(j, id.clone()), (m + i, id.clone())],
                )?);
            }
        }
        let joint = lift(coords, members, DEFAULT_ATOM_CAP)?;
        let mut coeffs = vec![1i64; m];
        coeffs.extend(vec![0i64; m]);
        joint.adjoin_combo(&coeffs)
    }

    /// `I((col sums) : (row sums) | total)`.
    pub fn margins_info(&self) -> Result<f64> {
        let m = self.size();
        let joint = self.margins_joint()?;
        let a: Vec<usize> = (0..m).collect();
        let b: Vec<usize> = (m..2 * m).collect();
        mutual_info(&joint, &a, &b, &[2 * m])
    }

    /// The `A_j` and `B` terms of the grid decomposition.
    pub fn decomposition_terms(&self) -> Result<(Vec<f64>, f64)> {
        let m = self.size();
        let mut a_terms = Vec::with_capacity(m - 1);
        for j in 0..m - 1 {
            let d_col = multidist(&self.column(j)?)?;
            let d_cond = self.column_given_suffix(j)?;
            a_terms.push(d_col - d_cond);
        }
        let b = multidist(&self.column(m - 1)?)? - multidist(&self.row_sums()?)?;
        Ok((a_terms, b))
    }
}

/// C4.4 — for a jointly independent grid:
/// `I((col sums) : (row sums) | total) <= sum_j A_j + B`.
pub fn cor44_slack(grid: &Grid) -> Result<SlackReport> {
    let digest = digest_inputs(grid);
    let info = grid.margins_info()?;
    let (a_terms, b) = grid.decomposition_terms()?;
    let rhs: f64 = a_terms.iter().sum::<f64>() + b;
    let mut rep = SlackReport::slack("C4.4", digest, rhs - info);
    rep.sub = vec![("info-nonneg".into(), info)];
    rep.sub.extend(
        a_terms
            .iter()
            .enumerate()
            .map(|(j, a)| (format!("A{}", j + 1), *a)),
    );
    rep.sub.push(("B".into(), b));
    Ok(rep)
}
