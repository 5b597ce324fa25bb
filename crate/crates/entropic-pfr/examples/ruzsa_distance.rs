//! Entropic Ruzsa distance, conditional distance, and multidistance.
//!
//! ```sh
//! cargo run --example ruzsa_distance
//! ```

use entropic_pfr::dist::lifted_joint;
use entropic_pfr::group::{generated_subgroup, LinearMap};
use entropic_pfr::ruzsa::{cond_multidist, cond_rdist, multidist, rdist};
use entropic_pfr::{CondPair, Dist, Element, GroupSpec, RVTuple, DEFAULT_ATOM_CAP};

fn main() -> entropic_pfr::Result<()> {
    let g = GroupSpec::new(vec![4])?;
    let x = Dist::uniform_on_indices(&g, &[0, 1])?;

    // d[X; X] for the uniform bit inside Z/4.
    println!("d[X; X] = {:.6} (= ln(2)/2)", rdist(&x, &x)?);

    // Distance to a subgroup uniform vanishes exactly when the law is a
    // translate of that uniform.
    let h = generated_subgroup(&g, &[Element(vec![2])])?;
    let uh = Dist::uniform_on_subgroup(&h);
    println!("d[U_H; U_H] = {:.2e}", rdist(&uh, &uh)?);
    let shifted = uh.convolve(
        &Dist::point_mass(&g, &Element(vec![1]))?,
        entropic_pfr::group::Sign::Plus,
    )?;
    println!(
        "d[U_H; U_H + 1] = {:.2e} (translation invariant)",
        rdist(&uh, &shifted)?
    );

    // Conditional distance: conditioning on the variable itself averages
    // distances to point masses.
    let id = LinearMap::identity(&g);
    let pair = CondPair::new(lifted_joint(
        &RVTuple::new(vec![x.clone()])?,
        &[vec![id.clone(), id]],
        DEFAULT_ATOM_CAP,
    )?)?;
    println!("d[X; Y | Y] = {:.6} (= H(X)/2)", cond_rdist(&x, &pair)?);

    // Multidistance of tuples.
    let t2 = RVTuple::new(vec![x.clone(), x.clone()])?;
    println!("D[X, X] = {:.6}", multidist(&t2)?);
    let t3 = RVTuple::new(vec![x.clone(), x.clone(), x.clone()])?;
    println!("D[X, X, X] = {:.6}", multidist(&t3)?);

    // Conditional multidistance via fully informative conditioning is zero.
    let full = CondPair::new(lifted_joint(
        &RVTuple::new(vec![x.clone()])?,
        &[vec![LinearMap::identity(&g), LinearMap::identity(&g)]],
        DEFAULT_ATOM_CAP,
    )?)?;
    println!(
        "D[(X, X) | (X, X)] = {:.2e}",
        cond_multidist(&[full.clone(), full])?
    );
    Ok(())
}
