//! Reads dependency parses and word vectors, then shows phrase vectors and
//! the two out-of-vocabulary policies.
//!
//! ```text
//! cargo run --example parse_and_embed
//! ```

use std::path::Path;

use graphmatch::text_ingest::{self, OovPolicy};

fn main() -> graphmatch::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/douban");
    let corpus = text_ingest::load_parses(&dir.join("parses.conll"))?;
    println!("{} parses over {} dependency labels", corpus.len(), corpus.deprels.len());

    let s = corpus.get("s_neg").expect("fixture sentence");
    for (i, t) in s.tokens.iter().enumerate() {
        let head = t.head.map_or("ROOT".to_string(), |h| s.tokens[h].form.clone());
        println!("{:>2} {:<10} {:<6} {:<8} <- {head}", i + 1, t.form, t.pos, t.deprel);
    }
    for span in &s.named_entities {
        println!("entity {} spans tokens {}..{}", span.entity, span.start + 1, span.end);
    }

    for policy in [OovPolicy::ZeroVector, OovPolicy::HashedRandom { seed: 7 }] {
        let table = text_ingest::load_embeddings(&dir.join("embeddings.txt"), policy)?;
        let v = table.phrase_embedding(&["highly-rated", "series", "unseenword"])?;
        println!("{policy:?}: {v:.3?}");
    }
    Ok(())
}
