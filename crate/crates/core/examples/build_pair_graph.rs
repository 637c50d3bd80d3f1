//! Builds the heterogeneous pair graph for a concept and a sentence and
//! prints its canonical dump: word nodes, hubs and typed edges.
//!
//! ```text
//! cargo run --example build_pair_graph -- [sentence-id]
//! ```

use std::path::Path;

use graphmatch::hetgraph::IS_VITAL;
use graphmatch::text_ingest::{self, OovPolicy};
use graphmatch::{ConceptGraph, PairGraphBuilder};

fn main() -> graphmatch::Result<()> {
    let sentence = std::env::args().nth(1).unwrap_or_else(|| "s_neg".into());
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/douban");
    let graph = ConceptGraph::load(&dir.join("concept_edges.tsv"), Some(&dir.join("concept_nodes.tsv")))?;
    let parses = text_ingest::load_parses(&dir.join("parses.conll"))?;
    let table = text_ingest::load_embeddings(&dir.join("embeddings.txt"), OovPolicy::ZeroVector)?;

    let builder = PairGraphBuilder::new(&graph, &parses, &table, 1)?;
    let g = builder.build("HighlyRatedSeriesOnDouban", &sentence)?;
    println!(
        "relations {}  feature width {}  isVital edges {}",
        builder.vocab.len(),
        builder.feature_width(),
        g.count_relation(IS_VITAL)
    );
    print!("{}", g.debug_dump());
    Ok(())
}
