//! Generates the synthetic negation corpus, trains Graph-Graph and the
//! mean-embedding Seq-Seq baseline on the same random split, and prints
//! held-out F1 for both.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [seed]
//! ```

use std::time::Instant;

use graphmatch::dataset_ops::{self, BuildSpec, Split, SplitMode, SplitSpec, WordFrequencyTable};
use graphmatch::synth::{self, SynthConfig};
use graphmatch::trainer::{self, TrainConfig};
use graphmatch::{Matcher, ModelConfig, ModelKind, PairGraphBuilder};

fn main() -> graphmatch::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let corpus = synth::generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    let labels = corpus
        .labels
        .iter()
        .map(|(c, s, l)| ((c.clone(), s.clone()), *l))
        .collect();
    let freq = WordFrequencyTable::from_parses(dataset_ops::sentence_parses(&corpus.parses, &corpus.graph));
    let spec = BuildSpec {
        cap: 4,
        neg_ratio: 1.0,
        split: SplitSpec {
            mode: SplitMode::Random,
            train_frac: 0.8,
            test_frac: 0.2,
            val_size: 100,
            seed,
        },
    };
    let (pairs, _) = dataset_ops::build_pairs(&corpus.graph, &corpus.parses, &labels, &freq, &spec)?;
    print!("{}", dataset_ops::stats_report(&pairs, &corpus.graph));

    let builder = PairGraphBuilder::new(&corpus.graph, &corpus.parses, &corpus.table, 1)?;
    let part = |s: Split| pairs.iter().filter(|p| p.split == s).collect::<Vec<_>>();
    let (train, val, test) = (part(Split::Train), part(Split::Val), part(Split::Test));

    for kind in [ModelKind::GraphGraph, ModelKind::SeqSeq] {
        let t0 = Instant::now();
        let config = ModelConfig::for_kind(
            kind,
            builder.feature_width(),
            corpus.table.dim(),
            32,
            kind.default_bases().min(builder.vocab.len()),
            builder.vocab.len(),
        );
        let model = Matcher::new(config, seed)?;
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let encode = |ps: &[&_]| trainer::make_examples(kind, &builder, ps);
        let out = trainer::train(model, &encode(&train)?, &encode(&val)?, &cfg)?;
        for rec in &out.report.history {
            println!("  {}", rec.log_line());
        }
        let (report, _) = trainer::evaluate(&out.model, &encode(&test)?)?;
        println!(
            "{kind}: params {} best epoch {} test f1 {:.4} acc {:.4} ({:.1}s)",
            out.model.param_count(),
            out.best_epoch,
            report.f1,
            report.accuracy,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
