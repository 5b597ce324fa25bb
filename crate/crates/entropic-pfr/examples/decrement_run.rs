//! The multidistance decrement iteration: candidate sweep per step, a
//! monotone trace, and subgroup recovery by exhaustive search.
//!
//! ```sh
//! cargo run --example decrement_run
//! ```

use entropic_pfr::decrement::{decrement_step, minimize, DecrementConfig};
use entropic_pfr::ruzsa::multidist;
use entropic_pfr::{Dist, Element, GroupSpec, RVTuple, DEFAULT_ATOM_CAP};

fn main() -> entropic_pfr::Result<()> {
    // Four copies (torsion of Z/4) of the uniform law on {0, 1}.
    let g = GroupSpec::new(vec![4])?;
    let x = Dist::uniform_on_indices(&g, &[0, 1])?;
    let t = RVTuple::new(vec![x.clone(), x.clone(), x.clone(), x])?;
    println!("initial multidistance D = {:.6}", multidist(&t)?);

    // One raw candidate sweep, to see what the step proposes.
    let eta = 1.0 / (100.0 * 64.0);
    if let Some((cand, gain)) = decrement_step(&t, eta, DEFAULT_ATOM_CAP)? {
        println!(
            "best candidate: {} with gain {:+.6e}",
            cand.family.label(),
            gain
        );
    }

    // The full iteration with the JSON-lines trace.
    let res = minimize(&t, &DecrementConfig::default())?;
    for step in &res.trace.steps {
        println!("{}", serde_json::to_string(step).unwrap());
    }
    println!(
        "stopped: {:?} after {} steps; final D = {:.2e}",
        res.stop,
        res.trace.steps.len(),
        multidist(&res.final_tuple)?
    );
    let elems: Vec<Element> = res.subgroup.elements().collect();
    println!(
        "recovered subgroup ({} elements): {:?}",
        res.subgroup.len(),
        elems
    );
    println!(
        "sum of distances: original {:.6e}, final {:.6e}, triangle bound {:.6e}",
        res.sum_dist, res.sum_dist_final, res.sum_dist_bound
    );
    Ok(())
}
