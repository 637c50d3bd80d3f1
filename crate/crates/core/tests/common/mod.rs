#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use graphmatch::dataset_ops::{self, BuildSpec, PairExample, SplitMode, SplitSpec, WordFrequencyTable};
use graphmatch::rgcn::{Decomposition, Edge, RgcnLayer};
use graphmatch::synth::{self, SynthConfig, SynthCorpus};
use graphmatch::text_ingest::{self, OovPolicy};
use graphmatch::{ConceptGraph, EmbeddingTable, Matcher, ModelConfig, ModelKind, PairGraphBuilder, PairInput, ParseCorpus, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/douban")
}

pub struct Fixture {
    pub graph: ConceptGraph,
    pub parses: ParseCorpus,
    pub table: EmbeddingTable,
}

pub fn douban() -> Fixture {
    let d = fixture_dir();
    Fixture {
        graph: ConceptGraph::load(&d.join("concept_edges.tsv"), Some(&d.join("concept_nodes.tsv"))).unwrap(),
        parses: text_ingest::load_parses(&d.join("parses.conll")).unwrap(),
        table: text_ingest::load_embeddings(&d.join("embeddings.txt"), OovPolicy::ZeroVector).unwrap(),
    }
}

/// A random layer, edge list and input with at most `max_nodes` nodes and
/// `max_rel` relations; dims at most 8.
pub fn random_instance(rng: &mut ChaCha8Rng, max_nodes: usize, max_rel: usize, block: bool) -> (RgcnLayer, Vec<Edge>, Tensor) {
    let n = rng.gen_range(0..=max_nodes);
    let r = rng.gen_range(1..=max_rel);
    let (ind, outd, mode) = if block {
        let b = rng.gen_range(1..=4);
        (b * rng.gen_range(1..=2), b * rng.gen_range(1..=2), Decomposition::Block(b))
    } else {
        (rng.gen_range(1..=8), rng.gen_range(1..=8), Decomposition::Basis(rng.gen_range(1..=r + 1)))
    };
    let layer = RgcnLayer::init(mode, ind, outd, r, rng.gen_bool(0.5), rng).unwrap();
    let m = if n == 0 { 0 } else { rng.gen_range(0..=3 * n) };
    let edges = (0..m)
        .map(|_| Edge::new(rng.gen_range(0..n), rng.gen_range(0..r), rng.gen_range(0..n)))
        .collect();
    let h = Tensor::uniform(&[n, ind], 1.0, rng);
    (layer, edges, h)
}

/// Synthetic corpus with pairs built and split.
pub fn synthetic(seed: u64, mode: SplitMode) -> (SynthCorpus, Vec<PairExample>) {
    let corpus = synth::generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let labels: BTreeMap<_, _> = corpus
        .labels
        .iter()
        .map(|(c, s, l)| ((c.clone(), s.clone()), *l))
        .collect();
    let freq = WordFrequencyTable::from_parses(dataset_ops::sentence_parses(&corpus.parses, &corpus.graph));
    let spec = BuildSpec {
        cap: 4,
        neg_ratio: 1.0,
        split: SplitSpec {
            mode,
            train_frac: 0.8,
            test_frac: 0.2,
            val_size: 100,
            seed,
        },
    };
    let (pairs, _) = dataset_ops::build_pairs(&corpus.graph, &corpus.parses, &labels, &freq, &spec).unwrap();
    (corpus, pairs)
}

/// Six-node pair graph from the fixture: four words, one concept hub,
/// one sentence hub.
pub fn six_node_pair(table: &EmbeddingTable) -> PairInput {
    let parses = text_ingest::parse_corpus_text(
        "#deprels root,nsubj,amod\n\n\
         #id c\n1\tgood\tADJ\tNone\t2\tamod\n2\tshow\tNOUN\tNone\t0\troot\n\n\
         #id s\n#entities 1:1 E\n1\tTitanic\tPROPN\tWORK\t2\tnsubj\n2\trocks\tVERB\tNone\t0\troot\n",
        Path::new("inline"),
    )
    .unwrap();
    let graph = ConceptGraph::new(
        vec![
            graphmatch::GraphNode {
                id: "c".into(),
                kind: graphmatch::NodeKind::Concept,
                surface: vec!["good".into(), "show".into()],
            },
            graphmatch::GraphNode {
                id: "E".into(),
                kind: graphmatch::NodeKind::Entity,
                surface: vec!["Titanic".into()],
            },
        ],
        vec![("E".to_string(), "c".to_string())],
    )
    .unwrap();
    let b = PairGraphBuilder::new(&graph, &parses, table, 1).unwrap();
    let g = b.build("c", "s").unwrap();
    assert_eq!(g.node_count(), 6);
    PairInput::graph_graph(&g).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, dim: usize) -> EmbeddingTable {
    let mut t = EmbeddingTable::new(dim, OovPolicy::ZeroVector);
    for w in ["good", "show", "Titanic", "rocks"] {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        t.insert(w, &v).unwrap();
    }
    t
}

/// Largest relative error between analytic and central-difference
/// gradients over every scalar parameter of a random 2-layer Graph-Graph
/// model. Relative error uses `max(|a|, |n|, 1e-3)` as denominator.
pub fn gradient_check(seed: u64, eps: f64) -> (f64, usize) {
    let mut rng = graphmatch::seed::rng(seed, "gradcheck");
    let table = random_table(&mut rng, 4);
    let input = six_node_pair(&table);
    let PairInput::GraphGraph { features, .. } = &input else { unreachable!() };
    let mut cfg = ModelConfig::for_kind(ModelKind::GraphGraph, features.cols(), 4, 6, 3, 12);
    cfg.layers = 2;
    let model = Matcher::new(cfg, seed).unwrap();
    let label = (seed % 2) as u8;
    let (_, grads) = model.loss_and_grads(&input, label).unwrap();

    let loss = |m: &Matcher| m.loss_and_grads(&input, label).unwrap().0;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (k, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = model.clone();
            plus.params_mut()[k].data_mut()[i] += eps;
            let mut minus = model.clone();
            minus.params_mut()[k].data_mut()[i] -= eps;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let analytic = g.data()[i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max((analytic - numeric).abs() / denom);
            checked += 1;
        }
    }
    (worst, checked)
}
