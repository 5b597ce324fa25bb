//! Numeric helpers: logarithms and float views of big rationals, exact
//! fraction strings, and a stable input digest.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Natural logarithm of a positive big integer, accurate to ~1e-15 relative.
///
/// Works far beyond the `f64` range by splitting off the binary exponent.
pub(crate) fn ln_big(n: &BigUint) -> f64 {
    debug_assert!(!n.is_zero());
    let bits = n.bits();
    if bits <= 63 {
        return (n.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 63;
    let top = (n >> shift).to_u64().unwrap();
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `num/den` as `f64`, robust to operands outside the `f64` range.
pub(crate) fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    debug_assert!(!den.is_zero());
    if num.is_zero() {
        return 0.0;
    }
    let nb = num.bits();
    let db = den.bits();
    if nb <= 53 && db <= 53 {
        return num.to_u64().unwrap() as f64 / den.to_u64().unwrap() as f64;
    }
    // Keep 63 significant bits of each side and track the exponent shift.
    let ns = nb.saturating_sub(63);
    let ds = db.saturating_sub(63);
    let n = (num >> ns).to_u64().unwrap() as f64;
    let d = (den >> ds).to_u64().unwrap() as f64;
    (n / d) * (ns as f64 - ds as f64).exp2()
}

/// `x * ln x` for an atom numerator; used by entropy accumulation.
pub(crate) fn n_ln_n(n: &BigUint) -> f64 {
    if n.is_zero() || n.is_one() {
        return 0.0;
    }
    ratio_f64(n, &BigUint::one()) * ln_big(n)
}

/// Formats an exact fraction as `num/den` in lowest terms.
pub(crate) fn fraction_string(num: &BigUint, den: &BigUint) -> String {
    use num_integer::Integer;
    let g = num.gcd(den);
    if g.is_zero() {
        return "0/1".to_string();
    }
    format!("{}/{}", num / &g, den / &g)
}

/// Parses a `num/den` fraction string (plain integers also accepted).
pub(crate) fn parse_fraction(s: &str) -> Result<(BigUint, BigUint)> {
    let bad = || Error::Format(format!("invalid fraction {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigUint = n.parse().map_err(|_| bad())?;
    let den: BigUint = d.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok((num, den))
}

/// FNV-1a over bytes; stable across platforms and releases, unlike the
/// standard library's default hasher.
#[derive(Clone)]
pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

/// Digest of a canonical serialization, rendered as fixed-width hex.
pub(crate) fn digest_bytes(bytes: &[u8]) -> String {
    let mut h = Fnv64::new();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

/// SplitMix64; used to derive per-trial seeds from a master seed.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
