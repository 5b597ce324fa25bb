//! The endgame variables: grid copies combined into (Z1, Z2, Z3, W), the
//! exact sum-zero identity, near-independence of the Z's given W, and the
//! W/Z2 entropy estimates.
//!
//! ```sh
//! cargo run --example endgame
//! ```

use entropic_pfr::decrement::{
    build_endgame, check_wz2, lemma54_select, mutual_info_triple, WZItem,
};
use entropic_pfr::entropy::entropy;
use entropic_pfr::{Dist, Element, GroupSpec, RVTuple, DEFAULT_ATOM_CAP};

fn main() -> entropic_pfr::Result<()> {
    let g = GroupSpec::new(vec![2])?;
    let x = Dist::from_weights(&g, &[(Element(vec![0]), 3), (Element(vec![1]), 1)])?;
    let t = RVTuple::new(vec![x.clone(), x])?;

    let e = build_endgame(&t, DEFAULT_ATOM_CAP)?;
    println!("endgame joint atoms: {}", e.zjoint().support_size());
    println!("Z1 + Z2 + Z3 = 0 on every atom: {}", e.sum_zero_holds());
    println!("H(W) = {:.6}", entropy(&e.w_marginal()?));

    let tri = mutual_info_triple(&e)?;
    println!(
        "I(Z1:Z2|W) = {:.6}  I(Z2:Z3|W) = {:.6}  I(Z1:Z3|W) = {:.6}",
        tri[0], tri[1], tri[2]
    );

    for item in [WZItem::I, WZItem::II, WZItem::III, WZItem::IV] {
        let rep = check_wz2(&e, item)?;
        println!("{}: slack {:+.6e}", rep.name, rep.value);
    }

    // Slice selection on the conditioned triple at the most likely W value.
    let w_marg = e.w_marginal()?;
    let w = w_marg.support().next().unwrap();
    let triple = e.zjoint().marginal(&[0, 1, 2, 3])?.condition(3, &w)?;
    let sel = lemma54_select(&triple, e.base().members(), 0.25)?;
    println!(
        "slice at W = {:?}: chose z = {:?}, objective {:.6}, average {:.6}, bound slack {:+.3e}",
        w, sel.z, sel.objective, sel.average, sel.report.value
    );
    Ok(())
}
