//! Shannon entropy, conditional entropy, and (conditional) mutual
//! information for exact-rational laws, evaluated in natural-log units.
//!
//! Atoms are accumulated in sorted key order, so every value is
//! bit-reproducible across runs.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::dist::{Dist, JointDist};
use crate::numeric::{ln_big, n_ln_n, ratio_f64};
use crate::{Error, Result};

/// Entropy of merged atom numerators over a common denominator:
/// `H = ln(den) - sum n ln n / den`.
fn entropy_of_atoms<'a>(den: &BigUint, nums: impl Iterator<Item = &'a BigUint>) -> f64 {
    let mut acc = 0.0;
    for n in nums {
        acc += n_ln_n(n);
    }
    ln_big(den) - acc / ratio_f64(den, &BigUint::from(1u32))
}

/// Shannon entropy of a distribution, in nats.
pub fn entropy(d: &Dist) -> f64 {
    let (den, atoms) = d.raw();
    entropy_of_atoms(den, atoms.values())
}

/// Shannon entropy of a joint law, in nats.
pub fn entropy_joint(j: &JointDist) -> f64 {
    let (den, atoms) = j.raw();
    entropy_of_atoms(den, atoms.values())
}

/// Entropy of the marginal on an ordered subset of coordinates.
pub fn subset_entropy(j: &JointDist, coords: &[usize]) -> Result<f64> {
    check_coords(j, coords)?;
    let (den, atoms) = j.raw();
    let mut merged: BTreeMap<u64, BigUint> = BTreeMap::new();
    for (&k, n) in atoms {
        *merged.entry(j.space().subset_key(k, coords)).or_default() += n;
    }
    Ok(entropy_of_atoms(den, merged.values()))
}

fn check_coords(j: &JointDist, coords: &[usize]) -> Result<()> {
    for &c in coords {
        if c >= j.arity() {
            return Err(Error::Shape(format!("coordinate {c} out of range")));
        }
    }
    Ok(())
}

fn check_disjoint(a: &[usize], b: &[usize]) -> Result<()> {
    if a.iter().any(|x| b.contains(x)) {
        return Err(Error::Shape("coordinate sets overlap".into()));
    }
    Ok(())
}

/// Conditional entropy `H(target | given)`, computed as the weighted average
/// of slice entropies `sum_y p(y) H(target | given = y)`.
pub fn cond_entropy(j: &JointDist, target: &[usize], given: &[usize]) -> Result<f64> {
    check_coords(j, target)?;
    check_coords(j, given)?;
    check_disjoint(target, given)?;
    let (den, atoms) = j.raw();
    // given-key -> target-key -> merged numerator
    let mut groups: BTreeMap<u64, BTreeMap<u64, BigUint>> = BTreeMap::new();
    for (&k, n) in atoms {
        let gk = j.space().subset_key(k, given);
        let tk = j.space().subset_key(k, target);
        *groups.entry(gk).or_default().entry(tk).or_default() += n;
    }
    let mut total = 0.0;
    for tmap in groups.values() {
        let mut mass = BigUint::zero();
        for n in tmap.values() {
            mass += n;
        }
        let h_slice = entropy_of_atoms(&mass, tmap.values());
        total += ratio_f64(&mass, den) * h_slice;
    }
    Ok(total)
}

/// Mutual information `I(A : B | given)`; pass an empty `given` for the
/// unconditional quantity. Nonnegative by submodularity, up to
/// floating-point noise.
pub fn mutual_info(j: &JointDist, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
    check_disjoint(a, b)?;
    check_disjoint(a, given)?;
    check_disjoint(b, given)?;
    let ha = cond_entropy(j, a, given)?;
    let hb = cond_entropy(j, b, given)?;
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    let hab = cond_entropy(j, &ab, given)?;
    Ok(ha + hb - hab)
}
