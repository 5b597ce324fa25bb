//! Exact entropic Ruzsa calculus over finite abelian groups.
//!
//! This crate implements, at desk scale and with exact rational probability
//! arithmetic, the entropy-method toolkit of additive combinatorics:
//!
//! - finite abelian groups `Z/m1 x ... x Z/mk`, their subgroups, cosets,
//!   homomorphisms and sumsets ([`group`]);
//! - exact-rational distributions and joint laws of linear images of
//!   independent group-valued random variables ([`dist`]);
//! - Shannon entropy, conditional entropy and (conditional) mutual
//!   information ([`entropy`]);
//! - entropic Ruzsa distance, conditional Ruzsa distance, multidistance and
//!   conditional multidistance ([`ruzsa`]);
//! - a registry of information inequalities (triangle inequality, entropic
//!   Balog-Szemeredi-Gowers, Kaimanovich-Vershik-Madiman sums, dilate
//!   estimates, data processing, multidistance chain rules) exposed as
//!   slack/residual computations for property testing ([`calculus`]);
//! - the multidistance decrement iteration: grid and endgame variables,
//!   candidate families, the decrement step, and subgroup recovery
//!   ([`decrement`]);
//! - the combinatorial pipeline from a small-doubling set to a verified
//!   coset cover ([`pfr`]);
//! - a deterministic seeded fuzzing harness over all registered
//!   inequalities ([`fuzz`]).
//!
//! Probabilities stay exact rationals end to end; only entropies (and the
//! slacks derived from them) are evaluated in `f64`. Every inequality check
//! reports `slack = RHS - LHS`, so "pass" is uniformly `slack >= -tol`.
//!
//! ## Quick start
//!
//! ```
//! use entropic_pfr::{GroupSpec, Dist, ruzsa};
//!
//! let g = GroupSpec::new(vec![4]).unwrap();
//! let x = Dist::uniform_on_indices(&g, &[0, 1]).unwrap();
//! let d = ruzsa::rdist(&x, &x).unwrap();
//! assert!((d - 0.5 * std::f64::consts::LN_2).abs() < 1e-12);
//! ```
//!
//! See the `examples/` directory for one runnable walk-through per
//! capability, and the `entropic-pfr` binary for the command-line surface
//! (`fuzz`, `decrement`, `pfr`, `verify-cover`, `entropy`, `rdist`,
//! `multidist`).

pub mod calculus;
pub mod decrement;
pub mod dist;
pub mod entropy;
pub mod fuzz;
pub mod group;
pub mod pfr;
pub mod ruzsa;

mod numeric;

pub use dist::{CondPair, Dist, JointDist, RVTuple};
pub use group::{Coset, Element, GroupSpec, LinearMap, Subgroup};

/// Default absolute tolerance for inequality slacks.
pub const SLACK_TOL: f64 = 1e-8;
/// Default absolute tolerance for identity residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Default cap on atoms of any joint law built by lifted convolution.
pub const DEFAULT_ATOM_CAP: u64 = 10_000_000;
/// Default cap on |G| for exhaustive subgroup enumeration.
pub const DEFAULT_SUBGROUP_CAP: u64 = 64;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} residues, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("{cap} cap exceeded: {detail}")]
    CapExceeded { cap: &'static str, detail: String },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("conditioning on a null event")]
    NullEvent,
    #[error("invalid homomorphism: {0}")]
    InvalidHomomorphism(String),
    #[error("invalid argument shape: {0}")]
    Shape(String),
    #[error("invalid input format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
