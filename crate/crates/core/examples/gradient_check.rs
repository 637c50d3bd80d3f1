//! Central-difference check of every analytic gradient of a small
//! Graph-Graph matcher on a real pair graph.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use std::path::Path;

use graphmatch::text_ingest::{self, OovPolicy};
use graphmatch::{ConceptGraph, Matcher, ModelConfig, ModelKind, PairGraphBuilder, PairInput};

const EPS: f64 = 1e-4;

fn main() -> graphmatch::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/douban");
    let graph = ConceptGraph::load(&dir.join("concept_edges.tsv"), Some(&dir.join("concept_nodes.tsv")))?;
    let parses = text_ingest::load_parses(&dir.join("parses.conll"))?;
    let table = text_ingest::load_embeddings(&dir.join("embeddings.txt"), OovPolicy::ZeroVector)?;
    let builder = PairGraphBuilder::new(&graph, &parses, &table, 1)?;
    let input = PairInput::graph_graph(&builder.build("HighlyRatedSeriesOnDouban", "s_pos")?)?;

    let mut cfg = ModelConfig::for_kind(ModelKind::GraphGraph, builder.feature_width(), table.dim(), 4, 3, builder.vocab.len());
    cfg.layers = 2;
    let model = Matcher::new(cfg, 3)?;
    let (loss, grads) = model.loss_and_grads(&input, 1)?;
    println!("loss {loss:.6}, {} parameters", model.param_count());

    for (name, (k, g)) in model.param_names().iter().zip(grads.iter().enumerate()) {
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let mut m = model.clone();
            m.params_mut()[k].data_mut()[i] += EPS;
            let up = m.loss_and_grads(&input, 1)?.0;
            m.params_mut()[k].data_mut()[i] -= 2.0 * EPS;
            let down = m.loss_and_grads(&input, 1)?.0;
            let numeric = (up - down) / (2.0 * EPS);
            let a = g.data()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
        }
        println!("{name:<16} {:>6} scalars  max rel err {worst:.2e}", g.len());
    }
    Ok(())
}
