//! The multidistance chain rule: decomposing D[X_I] through a homomorphism
//! into a conditional part, a projected part, and a mutual-information
//! term; plus the iterated form and the grid corollary.
//!
//! ```sh
//! cargo run --example chain_rule
//! ```

use entropic_pfr::calculus::{chain_pieces, cor44_slack, iterated_chain_slack, Grid};
use entropic_pfr::group::LinearMap;
use entropic_pfr::{Dist, Element, GroupSpec, RVTuple};

fn main() -> entropic_pfr::Result<()> {
    let g = GroupSpec::new(vec![2, 2])?;
    let g2 = GroupSpec::new(vec![2])?;

    let a = Dist::from_weights(
        &g,
        &[
            (Element(vec![0, 0]), 1),
            (Element(vec![1, 0]), 1),
            (Element(vec![0, 1]), 2),
        ],
    )?;
    let b = Dist::from_weights(&g, &[(Element(vec![0, 0]), 3), (Element(vec![1, 1]), 1)])?;
    let t = RVTuple::new(vec![a, b])?;

    // Project to the first coordinate and decompose.
    let pi = LinearMap::new(g.clone(), g2.clone(), vec![vec![1, 0]])?;
    let p = chain_pieces(&t, &pi)?;
    println!("D[X_I]                 = {:.6}", p.total);
    println!("D[X_I | pi(X_I)]       = {:.6}", p.conditional);
    println!("D[pi(X_I)]             = {:.6}", p.projected);
    println!("I(sum : pi | pi(sum))  = {:.6}", p.info);
    println!("identity residual      = {:.2e}", p.residual());

    // Iterate through a two-step chain ending in the trivial group.
    let chain = vec![LinearMap::zero(&g2, &GroupSpec::trivial()), pi];
    let rep = iterated_chain_slack(&t, &chain)?;
    for (name, v) in &rep.sub {
        println!("iterated chain {name}: {v:+.3e}");
    }

    // The grid corollary: margins of an independent 2x2 grid.
    let x = Dist::uniform_on_indices(&GroupSpec::new(vec![4])?, &[0, 1])?;
    let grid = Grid::new(vec![vec![x.clone(), x.clone()], vec![x.clone(), x]])?;
    let rep = cor44_slack(&grid)?;
    println!("grid corollary slack = {:+.6e}", rep.value);
    for (name, v) in &rep.sub {
        println!("  {name}: {v:+.6e}");
    }
    Ok(())
}
