mod common;

use std::collections::{BTreeMap, BTreeSet};

use graphmatch::dataset_ops::{
    self, balance_negatives, make_splits, redundancy_filter, PairExample, Split, SplitMode, SplitSpec,
    WordFrequencyTable,
};
use graphmatch::{Error, NodeKind};
use proptest::prelude::*;

fn pairs(n_concepts: usize, sizes: &[usize], pos_every: usize) -> Vec<PairExample> {
    let mut out = Vec::new();
    for (c, &k) in sizes.iter().enumerate().take(n_concepts) {
        for s in 0..k {
            let l = u8::from((c + s) % pos_every == 0);
            out.push(PairExample::new(&format!("c{c}"), &format!("s{c}_{s}"), Some(l)));
        }
    }
    out
}

proptest! {
    #[test]
    fn random_split_partitions(n in 2usize..300, val in 0usize..50, seed in any::<u64>()) {
        let mut ps: Vec<PairExample> = (0..n).map(|i| PairExample::new("c", &format!("s{i}"), Some(1))).collect();
        let spec = SplitSpec { mode: SplitMode::Random, train_frac: 0.8, test_frac: 0.2, val_size: val, seed };
        match make_splits(&mut ps, &spec) {
            Ok(()) => {
                let count = |s| ps.iter().filter(|p| p.split == s).count();
                prop_assert_eq!(count(Split::None), 0);
                prop_assert_eq!(count(Split::Test), (0.2 * n as f64).round() as usize);
                prop_assert_eq!(count(Split::Val), val);
                prop_assert_eq!(count(Split::Train) + count(Split::Val) + count(Split::Test), n);
            }
            Err(Error::Partition(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn non_overlapped_keeps_concepts_apart(
        sizes in prop::collection::vec(1usize..30, 2..25),
        val in 0usize..40,
        seed in any::<u64>(),
    ) {
        let mut ps = pairs(sizes.len(), &sizes, 3);
        let spec = SplitSpec { mode: SplitMode::NonOverlapped, train_frac: 0.8, test_frac: 0.2, val_size: val, seed };
        if make_splits(&mut ps, &spec).is_ok() {
            let mut owner: BTreeMap<&str, Split> = BTreeMap::new();
            for p in &ps {
                prop_assert_ne!(p.split, Split::None);
                let prev = *owner.entry(p.concept.as_str()).or_insert(p.split);
                prop_assert_eq!(prev, p.split);
            }
            prop_assert!(ps.iter().any(|p| p.split == Split::Train));
            prop_assert!(ps.iter().any(|p| p.split == Split::Test));
        }
    }

    #[test]
    fn redundancy_cap_is_a_prefix(seed in any::<u64>(), cap in 1usize..6) {
        let (c, _) = common::synthetic(seed % 4 + 1, SplitMode::Random);
        let sents = dataset_ops::sentence_parses(&c.parses, &c.graph);
        let freq = WordFrequencyTable::from_parses(sents.iter().copied());
        let cands = dataset_ops::candidate_map(&c.graph, &sents).unwrap();
        let small = redundancy_filter(&cands, &c.graph, &freq, cap).unwrap();
        let big = redundancy_filter(&cands, &c.graph, &freq, cap + 1).unwrap();
        for (s, kept) in &small {
            prop_assert_eq!(kept.len(), cands[s].len().min(cap));
            prop_assert_eq!(&big[s][..kept.len()], &kept[..]);
            let score = |c0: &String| freq.aggregate(&c.graph.node(c0).unwrap().surface);
            prop_assert!(kept.windows(2).all(|w| (score(&w[0]), &w[0]) <= (score(&w[1]), &w[1])));
        }
    }

    #[test]
    fn balancing_keeps_positives_and_order(
        labels in prop::collection::vec(0u8..2, 1..200),
        ratio in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let ps: Vec<PairExample> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| PairExample::new("c", &format!("s{i:03}"), Some(l)))
            .collect();
        let pos = labels.iter().filter(|&&l| l == 1).count();
        let neg = labels.len() - pos;
        match balance_negatives(ps.clone(), ratio, seed) {
            Ok(out) => {
                prop_assert_eq!(out.iter().filter(|p| p.label == Some(1)).count(), pos);
                let want = ((ratio * pos as f64).round() as usize).min(neg);
                prop_assert_eq!(out.iter().filter(|p| p.label == Some(0)).count(), want);
                prop_assert!(out.windows(2).all(|w| w[0].sentence < w[1].sentence));
            }
            Err(_) => prop_assert_eq!(pos, 0),
        }
    }
}

#[test]
fn retrieval_matches_token_scan() {
    let (c, _) = common::synthetic(2, SplitMode::Random);
    let sents = dataset_ops::sentence_parses(&c.parses, &c.graph);
    for concept in c.graph.concepts() {
        let got = dataset_ops::retrieve_candidates(&c.graph, sents.iter().copied(), &concept.id).unwrap();
        let ents: BTreeSet<&str> = c
            .graph
            .edges()
            .filter(|(ch, p)| *p == concept.id && c.graph.node(ch).unwrap().kind == NodeKind::Entity)
            .map(|(ch, _)| ch)
            .collect();
        let want: Vec<String> = sents
            .iter()
            .filter(|s| s.named_entities.iter().any(|e| ents.contains(e.entity.as_str())))
            .map(|s| s.id.clone())
            .collect();
        assert_eq!(got, want, "{}", concept.id);
    }
}

#[test]
fn stats_match_hand_count() {
    let fx = common::douban();
    let ps = vec![
        PairExample::new("HighlyRatedSeriesOnDouban", "s_pos", Some(1)),
        PairExample::new("HighlyRatedSeriesOnDouban", "s_neg", Some(0)),
        PairExample::new("RomanceSeries", "s_neg", Some(0)),
    ];
    let s = dataset_ops::dataset_stats(&ps, &fx.graph);
    assert_eq!((s.concepts, s.sentences, s.positives, s.pairs), (2, 2, 1, 3));
    // HighlyRated: 1 parent + 3 children; RomanceSeries: 1 parent + 1 child.
    assert_eq!(s.cg_relations, 6);
}

#[test]
fn fixture_build_keeps_labelled_pairs() {
    let fx = common::douban();
    let d = common::fixture_dir();
    let labels = dataset_ops::read_labels(&d.join("labels.jsonl")).unwrap();
    let sents = dataset_ops::sentence_parses(&fx.parses, &fx.graph);
    let cands = dataset_ops::candidate_map(&fx.graph, &sents).unwrap();
    assert_eq!(cands["s_pos"], ["HighlyRatedSeriesOnDouban"]);
    assert_eq!(cands["s_neg"], ["HighlyRatedSeriesOnDouban", "RomanceSeries"]);
    assert_eq!(labels.len(), 3);
}
