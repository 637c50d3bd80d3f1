//! Loads the small TV-series graph and prints the local context kept for
//! one concept/sentence pair at increasing hop counts.
//!
//! ```text
//! cargo run --example concept_graph_context
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use graphmatch::ConceptGraph;

fn main() -> graphmatch::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/douban");
    let g = ConceptGraph::load(&dir.join("concept_edges.tsv"), Some(&dir.join("concept_nodes.tsv")))?;
    println!("{} nodes, {} isA edges", g.node_count(), g.edge_count());

    let target = "HighlyRatedSeriesOnDouban";
    println!("entities of {target}: {:?}", g.entities_of(target)?);

    // The sentence names VampireDiaries5, which also belongs to RomanceSeries.
    let shared: BTreeSet<String> = ["VampireDiaries5".to_string()].into();
    for hops in 1..=2 {
        let ctx = g.context_subgraph(target, &shared, hops)?;
        println!("\nhops = {hops}");
        print!("{}", ctx.to_edge_text());
    }
    Ok(())
}
