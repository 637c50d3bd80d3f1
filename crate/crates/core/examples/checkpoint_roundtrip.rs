//! Saves a freshly initialized matcher as a text checkpoint, reloads it
//! and confirms the predictions are bitwise identical.
//!
//! ```text
//! cargo run --example checkpoint_roundtrip
//! ```

use graphmatch::checkpoint::{self, CheckpointMeta};
use graphmatch::{EmbeddingTable, Matcher, ModelConfig, ModelKind, OovPolicy, PairInput};

fn main() -> graphmatch::Result<()> {
    let mut table = EmbeddingTable::new(3, OovPolicy::ZeroVector);
    table.insert("romance", &[0.2, -0.1, 0.7])?;
    table.insert("series", &[0.5, 0.3, -0.4])?;
    table.insert("Titanic", &[-0.6, 0.9, 0.1])?;
    let input = PairInput::seq_seq(&["romance", "series"], &["Titanic", "is", "a", "romance"], &table)?;

    let model = Matcher::new(ModelConfig::for_kind(ModelKind::SeqSeq, 0, 3, 8, 2, 0), 42)?;
    let meta = CheckpointMeta { seed: 42, pos_vocab: vec![], ner_vocab: vec![] };
    let path = std::env::temp_dir().join("graphmatch-example.ckpt");
    checkpoint::save(&path, &model, &meta)?;

    let (reloaded, _) = checkpoint::load(&path)?;
    let (a, b) = (model.probability(&input)?, reloaded.probability(&input)?);
    println!("{} parameters, p = {a} before, {b} after reload", model.param_count());
    assert_eq!(a.to_bits(), b.to_bits());
    println!("{}", checkpoint::to_text(&model, &meta).lines().take(10).collect::<Vec<_>>().join("\n"));
    Ok(())
}
