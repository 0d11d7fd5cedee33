//! Class-integrated CN evaluated with true labels, Louvain communities and
//! a single shared label.
//!
//! cargo run --release --example louvain_ablation

use classlink::cluster::{louvain, modularity, mono_label};
use classlink::datasets::PlantedPartition;
use classlink::eval::{evaluate_split, ClassHeuristicScorer, HeuristicScorer, MetricSpec};
use classlink::graph::Labels;
use classlink::heuristics::{ClassHeuristicParams, Structural};
use classlink::prior::ClassPriorMatrix;
use classlink::split::{split_edges, SplitRatios};

fn main() -> classlink::Result<()> {
    let g = PlantedPartition::cora_like().generate(0);
    let split = split_edges(&g, SplitRatios::default(), 0)?;
    let train = split.train_graph(&g)?;
    let metric = MetricSpec::HitRate(100);
    let base = HeuristicScorer::new(train.clone(), Structural::Cn);
    let cn = evaluate_split(&base, &split, metric, 0)?.value;
    println!("CN alone              {metric} = {:.2}", 100.0 * cn);

    let communities = louvain(&train, 0)?;
    println!(
        "Louvain: {} communities, modularity {:.3}",
        communities.k,
        modularity(&train, &communities.labels)
    );
    let sources: [(&str, Labels); 3] = [
        ("true labels", g.labels().expect("planted labels").clone()),
        ("Louvain", communities.to_labels()),
        ("mono", mono_label(g.n_nodes())?.to_labels()),
    ];
    for (name, labels) in sources {
        let scorer = ClassHeuristicScorer {
            base: base.clone(),
            prior: ClassPriorMatrix::from_edges(&split.train_edges, &labels)?,
            labels,
            params: ClassHeuristicParams::default(),
        };
        let v = evaluate_split(&scorer, &split, metric, 0)?.value;
        println!("H_C(CN), {name:<12} {metric} = {:.2}", 100.0 * v);
    }
    Ok(())
}
