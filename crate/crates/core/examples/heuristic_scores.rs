//! Structural heuristics next to the class-integrated heuristic on a pair
//! with no common neighbors but a strong class affinity.
//!
//! cargo run --example heuristic_scores

use classlink::graph::{Graph, Labels};
use classlink::heuristics::{
    aa_score, class_heuristic_score, cn_score, katz_score, ra_score, ClassHeuristicParams, GammaDecayConfig,
};
use classlink::prior::ClassPriorMatrix;

fn main() -> classlink::Result<()> {
    // Two triangles 0-1-2 and 3-4-5 joined by the edge 2-3. Classes
    // alternate across the bridge: {0, 1, 2} are class 0, {3, 4, 5} class 1,
    // and class-0 nodes often link to class-1 nodes elsewhere in the graph.
    let edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3), (1, 4)];
    let g = Graph::from_edges(6, edges)?;
    let labels = Labels::dense(&[0, 0, 0, 1, 1, 1]);
    let prior = ClassPriorMatrix::from_edges(&edges, &labels)?;
    let katz = GammaDecayConfig::default();
    let params = ClassHeuristicParams::default();

    println!("pair      CN     AA     RA     Katz    H_C(CN)");
    for (x, y) in [(0, 1), (0, 3), (0, 5), (2, 4)] {
        let cn = cn_score(&g, x, y);
        let hc = class_heuristic_score(&g, &prior, &labels, x, y, cn, &params)?;
        println!(
            "({x}, {y})  {cn:5.2}  {:5.3}  {:5.3}  {:.4}  {hc:.4}",
            aa_score(&g, x, y),
            ra_score(&g, x, y),
            katz_score(&g, x, y, &katz)
        );
    }
    println!("(0, 5) shares no neighbor, yet H_C stays positive through P(1 | 0) = {:.3}", prior.prob(0, 1));
    Ok(())
}
