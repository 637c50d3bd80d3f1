mod common;

use std::path::Path;

use graphmatch::dataset_ops::SplitMode;
use graphmatch::text_ingest::{self, OovPolicy};
use graphmatch::EmbeddingTable;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn table(seed: u64) -> EmbeddingTable {
    let mut rng = graphmatch::seed::rng(seed, "table");
    let dim = rng.gen_range(1..6);
    let mut t = EmbeddingTable::new(dim, OovPolicy::HashedRandom { seed });
    for i in 0..rng.gen_range(1..12) {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        t.insert(&format!("w{i}"), &v).unwrap();
    }
    t
}

proptest! {
    #[test]
    fn phrase_embedding_ignores_word_order(seed in any::<u64>(), n in 1usize..8) {
        let t = table(seed);
        let mut rng = graphmatch::seed::rng(seed, "phrase");
        let mut words: Vec<String> = (0..n).map(|_| format!("w{}", rng.gen_range(0..15))).collect();
        let a = t.phrase_embedding(&words).unwrap();
        words.shuffle(&mut rng);
        prop_assert_eq!(a, t.phrase_embedding(&words).unwrap());
    }

    #[test]
    fn embeddings_survive_text_round_trip(seed in any::<u64>()) {
        let t = table(seed);
        let back = text_ingest::parse_embeddings_text(&t.to_text(), Path::new("mem"), t.oov_policy()).unwrap();
        prop_assert_eq!(back.dim(), t.dim());
        prop_assert_eq!(back.len(), t.len());
        for i in 0..12 {
            let w = format!("w{i}");
            prop_assert_eq!(back.get(&w), t.get(&w));
        }
    }

    #[test]
    fn hashed_oov_is_stable(seed in any::<u64>(), word in "[a-z]{1,8}") {
        let t = EmbeddingTable::new(4, OovPolicy::HashedRandom { seed });
        prop_assert_eq!(t.lookup(&word), t.lookup(&word));
        prop_assert!(t.lookup(&word).iter().all(|v| (-0.5..0.5).contains(v)));
    }
}

#[test]
fn synthetic_parses_survive_text_round_trip() {
    let (c, _) = common::synthetic(4, SplitMode::Random);
    let back = text_ingest::parse_corpus_text(&c.parses.to_text(), Path::new("mem")).unwrap();
    assert_eq!(back, c.parses);
}

#[test]
fn tree_distance_is_a_metric_on_fixture() {
    let fx = common::douban();
    let p = fx.parses.get("s_neg").unwrap();
    let n = p.tokens.len();
    for a in 0..n {
        assert_eq!(p.tree_distance(a, a), 0);
        for b in 0..n {
            assert_eq!(p.tree_distance(a, b), p.tree_distance(b, a));
            for c in 0..n {
                assert!(p.tree_distance(a, c) <= p.tree_distance(a, b) + p.tree_distance(b, c));
            }
        }
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    let bad = [
        "#deprels root\n\n#id s\n1\tx\tNOUN\tNone\t2\troot\n",
        "#deprels root\n\n#id s\n1\tx\tNOUN\tNone\t0\tnsubj\n",
        "#deprels root\n\n#id s\n#entities 1:3 E\n1\tx\tNOUN\tNone\t0\troot\n",
    ];
    for text in bad {
        assert!(text_ingest::parse_corpus_text(text, Path::new("mem")).is_err(), "{text:?}");
    }
    assert!(text_ingest::parse_embeddings_text("a 1 2\nb 1\n", Path::new("mem"), OovPolicy::ZeroVector).is_err());
}
