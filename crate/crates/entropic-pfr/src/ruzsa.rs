//! Entropic Ruzsa distance, conditional Ruzsa distance, multidistance, and
//! conditional multidistance.
//!
//! Distances always involve independent copies: they are computed from fresh
//! convolutions and lifted joints of the argument laws, never from any joint
//! the caller supplies, so independence is a property of the operation.

use crate::dist::{lift, CondPair, Dist, JointDist, LiftMember, RVTuple};
use crate::entropy::{cond_entropy, entropy};
use crate::group::{GroupSpec, LinearMap, Sign};
use crate::numeric::ratio_f64;
use crate::{Error, Result, DEFAULT_ATOM_CAP};

/// Entropic Ruzsa distance `d[X; Y] = H(X - Y) - H(X)/2 - H(Y)/2` with
/// independent copies; symmetric and nonnegative.
///
/// The difference convention is the one under which the whole calculus
/// (triangle inequality, the `d[X1; -X2]` form of the two-member
/// multidistance, the doubling bridge `d[U_A; -U_A] <= ln K`) is provable;
/// with a sum in the definition several of those fail outright.
pub fn rdist(x: &Dist, y: &Dist) -> Result<f64> {
    if x.group() != y.group() {
        return Err(Error::GroupMismatch(
            "Ruzsa distance needs a common group".into(),
        ));
    }
    let s = x.convolve(y, Sign::Minus)?;
    Ok(entropy(&s) - 0.5 * entropy(x) - 0.5 * entropy(y))
}

/// Conditional Ruzsa distance `d[X; Y | W] = sum_w p_W(w) d[X; (Y | W = w)]`,
/// with `X` independent of the pair `(Y, W)`.
pub fn cond_rdist(x: &Dist, yw: &CondPair) -> Result<f64> {
    if x.group() != yw.main_group() {
        return Err(Error::GroupMismatch(
            "conditional Ruzsa distance needs a common group".into(),
        ));
    }
    let den = yw.weight_den()?;
    let mut total = 0.0;
    for (_, w, law) in yw.slices()? {
        total += ratio_f64(&w, &den) * rdist(x, &law)?;
    }
    Ok(total)
}

/// Multidistance `D[X_I] = H(sum X_i) - (1/|I|) sum H(X_i)` over independent
/// copies; nonnegative and invariant under permutation of the members.
pub fn multidist(t: &RVTuple) -> Result<f64> {
    let sum = t.sum_law()?;
    let avg: f64 = t.members().iter().map(entropy).sum::<f64>() / t.len() as f64;
    Ok(entropy(&sum) - avg)
}

/// Conditional multidistance per the definitional form
/// `D[X_I | Y_I] = H(sum X_i | (Y_j)_j) - (1/|I|) sum H(X_i | Y_i)`,
/// for pairs `(X_i, Y_i)` jointly independent across `i`.
pub fn cond_multidist(pairs: &[CondPair]) -> Result<f64> {
    let first = pairs
        .first()
        .ok_or(Error::EmptyInput("empty conditional tuple"))?;
    let g = first.main_group().clone();
    if pairs.iter().any(|p| p.main_group() != &g) {
        return Err(Error::GroupMismatch(
            "conditional multidistance needs a common group".into(),
        ));
    }
    let m = pairs.len();
    // Joint of (sum X_i, Y_1, ..., Y_m) by lifting each pair.
    let mut coords = vec![g.clone()];
    coords.extend(pairs.iter().map(|p| p.aux_group().clone()));
    let id = LinearMap::identity(&g);
    let members = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| LiftMember::from_pair(p.joint(), &coords, &id, 0, i + 1))
        .collect::<Result<Vec<_>>>()?;
    let joint = lift(coords, members, DEFAULT_ATOM_CAP)?;
    let given: Vec<usize> = (1..=m).collect();
    let h_sum = cond_entropy(&joint, &[0], &given)?;
    let mut avg = 0.0;
    for p in pairs {
        avg += cond_entropy(p.joint(), &[0], &[1])?;
    }
    Ok(h_sum - avg / m as f64)
}

/// Conditional multidistance by the averaged form: the product-weighted
/// average of `D[(X_i | Y_i = y_i)_i]` over conditioning vectors.
///
/// Equals [`cond_multidist`] up to floating-point noise; kept as the second
/// algebraic route for property tests.
pub fn cond_multidist_averaged(pairs: &[CondPair]) -> Result<f64> {
    let first = pairs
        .first()
        .ok_or(Error::EmptyInput("empty conditional tuple"))?;
    let g = first.main_group().clone();
    if pairs.iter().any(|p| p.main_group() != &g) {
        return Err(Error::GroupMismatch(
            "conditional multidistance needs a common group".into(),
        ));
    }
    let slices: Vec<Vec<(crate::Element, num_bigint::BigUint, Dist)>> =
        pairs.iter().map(|p| p.slices()).collect::<Result<_>>()?;
    let dens: Vec<num_bigint::BigUint> = pairs
        .iter()
        .map(|p| p.weight_den())
        .collect::<Result<_>>()?;
    let combos: u64 = slices.iter().map(|s| s.len() as u64).product();
    if combos > 1_000_000 {
        return Err(Error::CapExceeded {
            cap: "atom",
            detail: format!("{combos} conditioning vectors in averaged multidistance"),
        });
    }
    let mut total = 0.0;
    let mut picks = vec![0usize; pairs.len()];
    loop {
        let mut weight = 1.0;
        let mut laws = Vec::with_capacity(pairs.len());
        for (i, &pi) in picks.iter().enumerate() {
            let (_, w, law) = &slices[i][pi];
            weight *= ratio_f64(w, &dens[i]);
            laws.push(law.clone());
        }
        total += weight * multidist(&RVTuple::new(laws)?)?;
        // advance the mixed-radix pick vector
        let mut c = 0;
        loop {
            picks[c] += 1;
            if picks[c] < slices[c].len() {
                break;
            }
            picks[c] = 0;
            c += 1;
            if c == picks.len() {
                return Ok(total);
            }
        }
    }
}

/// Law of `X` restricted to a conditioning slice of a joint: convenience for
/// `(Y | W = w)` style arguments.
pub fn slice_law(
    j: &JointDist,
    coord: usize,
    given: usize,
    value: &crate::Element,
) -> Result<Dist> {
    let sl = j.condition(given, value)?;
    let c = if coord > given { coord - 1 } else { coord };
    sl.marginal_dist(c)
}

/// `d[X; U_G]` for the full-group uniform equals `(ln |G| - H(X)) / 2`.
pub fn rdist_to_uniform(x: &Dist) -> Result<f64> {
    let g: &GroupSpec = x.group();
    let all: Vec<u64> = (0..g.size()).collect();
    let u = Dist::uniform_on_indices(g, &all)?;
    rdist(x, &u)
}

/// Multidistance of `m` copies of one law.
pub fn multidist_copies(x: &Dist, m: usize) -> Result<f64> {
    multidist(&RVTuple::new(vec![x.clone(); m])?)
}
