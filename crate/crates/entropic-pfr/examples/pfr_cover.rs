//! End-to-end coset cover of a small-doubling set: doubling constant,
//! entropic bridge, the decrement stage, dense translate, greedy covering,
//! subdivision, and exact verification.
//!
//! ```sh
//! cargo run --example pfr_cover
//! ```

use std::collections::BTreeSet;

use entropic_pfr::pfr::{
    best_translate, cover_to_json, doubling, entropic_bridge, pfr_cover, ruzsa_cover, verify_cover,
    PfrConfig, SetInput,
};
use entropic_pfr::{Element, GroupSpec};

fn main() -> entropic_pfr::Result<()> {
    // A 5-point subset of F2^4 with modest doubling.
    let g = GroupSpec::new(vec![2, 2, 2, 2])?;
    let elems: BTreeSet<Element> = [
        vec![0, 0, 0, 0],
        vec![0, 0, 0, 1],
        vec![0, 0, 1, 0],
        vec![0, 0, 1, 1],
        vec![1, 0, 0, 0],
    ]
    .into_iter()
    .map(Element)
    .collect();
    let a = SetInput::new(g.clone(), elems)?;

    let (kn, kd) = doubling(&a)?;
    println!("|A| = {}, doubling K = {kn}/{kd}", a.len());

    let bridge = entropic_bridge(&a)?;
    println!(
        "entropic bridge: d[U_A; -U_A] = {:.6} <= ln K = {:.6}",
        bridge.dist, bridge.log_k
    );

    let out = pfr_cover(&a, &PfrConfig::default())?;
    println!(
        "cover: {}",
        serde_json::to_string(&cover_to_json(&out.cover)).unwrap()
    );
    println!(
        "subgroup size {} covered by {} cosets; H inside {}A - {}A",
        out.cover.subgroup.len(),
        out.cover.count(),
        out.cover.ell,
        out.cover.ell
    );

    let report = verify_cover(&a, &out.cover, 64)?;
    println!(
        "verification: coverage {}, |H| <= |A| {}, containment {}",
        report.coverage_ok, report.size_ok, report.containment_ok
    );
    if let (Some((opt, hsize)), Some(ratio)) = (report.optimal, report.ratio) {
        println!("brute-force optimum: {opt} cosets (subgroup size {hsize}); ratio {ratio:.2}");
    }

    // The two combinatorial ingredients, standalone.
    let (x0, (dn, dd)) = best_translate(&a, &out.entropic_subgroup)?;
    println!("densest translate of the entropic subgroup: {x0:?} with density {dn}/{dd}");
    let b: BTreeSet<Element> = a.elements().iter().take(2).cloned().collect();
    let t = ruzsa_cover(&g, a.elements(), &b)?;
    println!(
        "greedy covering of A by translates of a 2-point set keeps {:?}",
        t
    );
    Ok(())
}
