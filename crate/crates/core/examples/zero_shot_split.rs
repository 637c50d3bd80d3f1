//! Splits the synthetic pairs so that test concepts never appear in
//! training, trains Graph-Graph and reports F1 on the unseen concepts.
//!
//! ```text
//! cargo run --release --example zero_shot_split -- [seed]
//! ```

use std::collections::BTreeSet;

use graphmatch::dataset_ops::{self, BuildSpec, Split, SplitMode, SplitSpec, WordFrequencyTable};
use graphmatch::synth::{self, SynthConfig};
use graphmatch::trainer::{self, TrainConfig};
use graphmatch::{Matcher, ModelConfig, ModelKind, PairGraphBuilder};

fn main() -> graphmatch::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let corpus = synth::generate(&SynthConfig { seed, ..SynthConfig::default() })?;
    let labels = corpus.labels.iter().map(|(c, s, l)| ((c.clone(), s.clone()), *l)).collect();
    let freq = WordFrequencyTable::from_parses(dataset_ops::sentence_parses(&corpus.parses, &corpus.graph));
    let split = SplitSpec { mode: SplitMode::NonOverlapped, train_frac: 0.8, test_frac: 0.2, val_size: 100, seed };
    let spec = BuildSpec { cap: 4, neg_ratio: 1.0, split };
    let (pairs, _) = dataset_ops::build_pairs(&corpus.graph, &corpus.parses, &labels, &freq, &spec)?;

    let concepts = |s: Split| -> BTreeSet<&str> {
        pairs.iter().filter(|p| p.split == s).map(|p| p.concept.as_str()).collect()
    };
    let (train_c, test_c) = (concepts(Split::Train), concepts(Split::Test));
    println!("train concepts {}, unseen test concepts {:?}", train_c.len(), test_c);
    assert!(train_c.is_disjoint(&test_c));

    let builder = PairGraphBuilder::new(&corpus.graph, &corpus.parses, &corpus.table, 1)?;
    let enc = |s: Split| {
        let ps: Vec<_> = pairs.iter().filter(|p| p.split == s).collect();
        trainer::make_examples(ModelKind::GraphGraph, &builder, &ps)
    };
    let cfg = ModelConfig::for_kind(ModelKind::GraphGraph, builder.feature_width(), corpus.table.dim(), 32, 14, builder.vocab.len());
    let out = trainer::train(
        Matcher::new(cfg, seed)?,
        &enc(Split::Train)?,
        &enc(Split::Val)?,
        &TrainConfig { seed, ..TrainConfig::default() },
    )?;
    let (report, _) = trainer::evaluate(&out.model, &enc(Split::Test)?)?;
    println!("best epoch {}, unseen-concept F1 {:.4}, accuracy {:.4}", out.best_epoch, report.f1, report.accuracy);
    Ok(())
}
