//! Walks the dataset pipeline step by step on the synthetic corpus:
//! retrieval, redundancy filtering, labelling, balancing and splitting.
//!
//! ```text
//! cargo run --example dataset_pipeline -- [cap]
//! ```

use graphmatch::dataset_ops::{self, PairExample, SplitMode, SplitSpec, WordFrequencyTable};
use graphmatch::synth::{self, SynthConfig};

fn main() -> graphmatch::Result<()> {
    let cap: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let corpus = synth::generate(&SynthConfig::default())?;
    let g = &corpus.graph;

    let sentences = dataset_ops::sentence_parses(&corpus.parses, g);
    let freq = WordFrequencyTable::from_parses(sentences.iter().copied());
    let cands = dataset_ops::candidate_map(g, &sentences)?;
    let kept = dataset_ops::redundancy_filter(&cands, g, &freq, cap)?;
    let count = |m: &std::collections::BTreeMap<String, Vec<String>>| m.values().map(Vec::len).sum::<usize>();
    println!("{} sentences, {} candidate pairs, {} after cap {cap}", sentences.len(), count(&cands), count(&kept));

    let labels: std::collections::BTreeMap<_, _> =
        corpus.labels.iter().map(|(c, s, l)| ((c.clone(), s.clone()), *l)).collect();
    let pairs: Vec<PairExample> = kept
        .iter()
        .flat_map(|(s, cs)| cs.iter().map(move |c| (s, c)))
        .filter_map(|(s, c)| labels.get(&(c.clone(), s.clone())).map(|&l| PairExample::new(c, s, Some(l))))
        .collect();
    let pos = pairs.iter().filter(|p| p.label == Some(1)).count();
    println!("labelled: {pos} positive, {} negative", pairs.len() - pos);

    let mut pairs = dataset_ops::balance_negatives(pairs, 1.0, 1)?;
    println!("balanced to {} pairs", pairs.len());
    for mode in [SplitMode::Random, SplitMode::NonOverlapped] {
        let spec = SplitSpec { mode, train_frac: 0.8, test_frac: 0.2, val_size: 100, seed: 1 };
        dataset_ops::make_splits(&mut pairs, &spec)?;
        println!("\n{} split", mode.as_str());
        print!("{}", dataset_ops::stats_report(&pairs, g));
    }
    Ok(())
}
