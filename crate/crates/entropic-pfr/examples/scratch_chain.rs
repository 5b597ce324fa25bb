// Instrument the contradiction chain at the stalled tuple.
use entropic_pfr::decrement::{
    build_endgame, check_wz2, lemma54_select, minimize, mutual_info_triple,
    prop51_decomposition, DecrementConfig, PermGrid, StopReason, WZItem,
};
use entropic_pfr::fuzz::{random_tuple, trial_rng};

use entropic_pfr::ruzsa::{multidist, rdist, cond_rdist};
use entropic_pfr::{CondPair, GroupSpec};

fn main() {
    let gg = GroupSpec::new(vec![4]).unwrap();
    let mut rng = trial_rng(0xC6, 42);
    let t0 = random_tuple(&gg, &mut rng, 4, 64);
    let res = minimize(&t0, &DecrementConfig::default()).unwrap();
    assert_eq!(res.stop, StopReason::Stalled);
    let t = res.final_tuple.clone();
    let m = 4f64;
    let k = multidist(&t).unwrap();
    let eta = 1.0 / 6400.0;
    println!("k = {k:.6e}");

    let e = build_endgame(&t, 10_000_000).unwrap();
    let tri = mutual_info_triple(&e).unwrap();
    let delta_star: f64 = tri.iter().sum();
    println!("delta* (direct) = {delta_star:.6e}; bound 6m(2m+1) eta k = {:.6e}", 6.0*m*(2.0*m+1.0)*eta*k);
    for (idx, which) in [(0usize,1usize),(1,2),(2,3)] {
        let grid = PermGrid::instantiation(4, which).unwrap();
        let dec = prop51_decomposition(&t, &grid).unwrap();
        let bound: f64 = dec.a_terms.iter().sum::<f64>() + dec.b;
        println!("view {which}: I_tuple = {:.6e}, sum A+B = {:.6e}, I(Zpair {idx}) = {:.6e}, 2m(2m+1)eta k = {:.6e}",
            dec.info, bound, tri[idx], 2.0*m*(2.0*m+1.0)*eta*k);
        for (j, a) in dec.a_terms.iter().enumerate() {
            println!("   A{} = {a:.6e}", j+1);
        }
        println!("   B  = {:.6e}", dec.b);
    }
    // wz2 iv LHS
    let pair = CondPair::new(e.zjoint().marginal(&[1, 3]).unwrap()).unwrap();
    let mut sum_dz2: f64 = 0.0;
    for x in t.members() { sum_dz2 += cond_rdist(x, &pair).unwrap(); }
    println!("sum d[Xi; Z2|W] = {sum_dz2:.6e}; bound 15 m^2 log2(m) k = {:.6e}", 15.0*16.0*2.0*k);
    let _ = check_wz2(&e, WZItem::IV).unwrap();
    // endgame per-w: m*objective vs (1-eta)k
    let alpha = eta / 4.0;
    let mut avg_obj = 0.0;
    let wm = e.w_marginal().unwrap();
    let wprobs: Vec<(entropic_pfr::Element, f64)> = wm.support().map(|w| {
        let (n, d) = wm.prob(&w).unwrap();
        (w, n.to_string().parse::<f64>().unwrap() / d.to_string().parse::<f64>().unwrap())
    }).collect();
    for (w, p) in &wprobs {
        let triple = e.zjoint().condition(3, w).unwrap();
        let sel = lemma54_select(&triple, t.members(), alpha).unwrap();
        avg_obj += p * sel.objective;
        if 4.0 * sel.objective < (1.0 - eta) * k {
            println!("  ENDGAME VIOLATION at w = {w:?}: m*obj = {:.6e} < (1-eta)k = {:.6e}", 4.0*sel.objective, (1.0-eta)*k);
        }
    }
    println!("m * avg objective = {:.6e} vs (1-eta)k = {:.6e}", 4.0*avg_obj, (1.0-eta)*k);
    println!("rhs of final chain: m(2+eta/2) delta* + eta sum_d = {:.6e}",
        m*(2.0+eta/2.0)*delta_star + eta*sum_dz2);
    // sanity: per-member self distances
    for (i, x) in t.members().iter().enumerate() {
        println!("  d[X{i};X{i}] = {:.4e}, H = {:.4e}, supp {}", rdist(x, x).unwrap(), entropic_pfr::entropy::entropy(x), x.support_size());
    }
}
