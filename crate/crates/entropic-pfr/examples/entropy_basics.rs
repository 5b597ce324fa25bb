//! Exact laws over finite abelian groups: convolution, pushforward,
//! conditioning, and entropy.
//!
//! ```sh
//! cargo run --example entropy_basics
//! ```

use entropic_pfr::dist::lifted_joint;
use entropic_pfr::entropy::{cond_entropy, entropy, entropy_joint, mutual_info};
use entropic_pfr::group::{LinearMap, Sign};
use entropic_pfr::{Dist, Element, GroupSpec, RVTuple, DEFAULT_ATOM_CAP};

fn main() -> entropic_pfr::Result<()> {
    // Z/4, the uniform law on {0, 1}.
    let g = GroupSpec::new(vec![4])?;
    let x = Dist::uniform_on_indices(&g, &[0, 1])?;
    println!("group {:?}, law {:?}", g, x);
    println!("H(X) = {:.6} nats", entropy(&x));

    // Convolution of independent copies stays exact-rational.
    let s = x.convolve(&x, Sign::Plus)?;
    println!("law of X + X' = {:?}", s);
    println!("H(X + X') = {:.6} (= 3/2 ln 2)", entropy(&s));

    // Pushforward along multiplication by 2.
    let dbl = LinearMap::scalar(&g, 2);
    println!("law of 2X = {:?}", x.pushforward(&dbl)?);

    // The joint of (X, X + Y) for an independent pair, by lifted
    // convolution: the state space is the target product, never the
    // product sample space.
    let t = RVTuple::new(vec![x.clone(), x.clone()])?;
    let id = LinearMap::identity(&g);
    let zero = LinearMap::zero(&g, &g);
    let joint = lifted_joint(
        &t,
        &[vec![id.clone(), id.clone()], vec![zero, id]],
        DEFAULT_ATOM_CAP,
    )?;
    println!(
        "joint of (X, X+Y) has {} atoms, H = {:.6}",
        joint.support_size(),
        entropy_joint(&joint)
    );

    // Chain rule pieces and mutual information.
    let h_x_given_sum = cond_entropy(&joint, &[0], &[1])?;
    let i = mutual_info(&joint, &[0], &[1], &[])?;
    println!("H(X | X+Y) = {:.6},  I(X : X+Y) = {:.6}", h_x_given_sum, i);

    // Conditioning is an exact renormalized slice.
    let slice = joint.condition(1, &Element(vec![1]))?;
    println!("law of X given X+Y = 1: {:?}", slice.marginal_dist(0)?);
    Ok(())
}
