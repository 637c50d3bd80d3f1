//! Synthetic corpus with a planted negation rule.
//!
//! Leaf concepts own a handful of entities and sit under a few top-level
//! concepts. Sentences are one or two clauses `ENTITY [NEG] VERB [ADV]`
//! joined by `and`; at most one clause carries a negation. A pair
//! `(concept, sentence)` is positive iff the concept's entity in the
//! sentence has no negation token within two dependency arcs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::concept_graph::{ConceptGraph, GraphNode, NodeKind};
use crate::error::{Error, Result};
use crate::seed;
use crate::text_ingest::{DependencyParse, EmbeddingTable, EntitySpan, OovPolicy, ParseCorpus, Token, NONE_TAG};

pub const DEPRELS: [&str; 9] = [
    "root", "nsubj", "neg", "advmod", "cc", "conj", "punct", "compound", "amod",
];
pub const NEGATIONS: [&str; 3] = ["not", "never", "hardly"];
pub const NEGATION_DEPREL: &str = "neg";
/// Dependency distance within which a negation flips the label.
pub const NEGATION_REACH: usize = 2;
const ENTITY_NER: &str = "WORK";

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Total concepts, top-level ones included.
    pub concepts: usize,
    pub top_concepts: usize,
    pub sentences: usize,
    pub entities_per_concept: usize,
    /// Probability that an entity also belongs to a second leaf concept.
    pub shared_entity_prob: f64,
    pub two_clause_prob: f64,
    pub negation_prob: f64,
    pub embedding_dim: usize,
    pub verbs: usize,
    pub adverbs: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            concepts: 50,
            top_concepts: 5,
            sentences: 400,
            entities_per_concept: 4,
            shared_entity_prob: 0.3,
            two_clause_prob: 0.6,
            negation_prob: 0.7,
            embedding_dim: 16,
            verbs: 24,
            adverbs: 8,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_concepts == 0 || self.concepts < self.top_concepts + 2 {
            return Err(Error::Argument(
                "need at least one top concept and two leaf concepts".into(),
            ));
        }
        if self.entities_per_concept == 0 || self.embedding_dim == 0 || self.verbs < 2 || self.adverbs == 0 {
            return Err(Error::Argument("synthetic vocabulary sizes must be positive".into()));
        }
        for (name, p) in [
            ("shared_entity_prob", self.shared_entity_prob),
            ("two_clause_prob", self.two_clause_prob),
            ("negation_prob", self.negation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Argument(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub graph: ConceptGraph,
    /// Concept phrases (keyed by concept id) and sentences.
    pub parses: ParseCorpus,
    pub table: EmbeddingTable,
    /// `(concept, sentence, label)` for every sentence and every concept of
    /// an entity it names.
    pub labels: Vec<(String, String, u8)>,
}

struct Builder {
    tokens: Vec<Token>,
    spans: Vec<EntitySpan>,
}

impl Builder {
    fn push(&mut self, form: &str, pos: &str, ner: &str, deprel: &str) -> usize {
        self.tokens.push(Token {
            form: form.into(),
            pos: pos.into(),
            ner: ner.into(),
            head: None,
            deprel: deprel.into(),
        });
        self.tokens.len() - 1
    }
}

fn top_id(k: usize) -> String {
    format!("top{k}")
}

fn leaf_id(i: usize) -> String {
    format!("concept{i:02}")
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed, "synth-graph");
    let leaves = cfg.concepts - cfg.top_concepts;

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut concept_parses = Vec::new();
    for k in 0..cfg.top_concepts {
        let noun = format!("noun{k}");
        nodes.push(GraphNode {
            id: top_id(k),
            kind: NodeKind::Concept,
            surface: vec![noun.clone()],
        });
        concept_parses.push(DependencyParse {
            id: top_id(k),
            tokens: vec![Token {
                form: noun,
                pos: "NOUN".into(),
                ner: NONE_TAG.into(),
                head: None,
                deprel: "root".into(),
            }],
            named_entities: vec![],
        });
    }
    for i in 0..leaves {
        let (adj, noun) = (format!("adj{i}"), format!("noun{}", i % cfg.top_concepts));
        nodes.push(GraphNode {
            id: leaf_id(i),
            kind: NodeKind::Concept,
            surface: vec![adj.clone(), noun.clone()],
        });
        edges.push((leaf_id(i), top_id(i % cfg.top_concepts)));
        concept_parses.push(DependencyParse {
            id: leaf_id(i),
            tokens: vec![
                Token {
                    form: adj,
                    pos: "ADJ".into(),
                    ner: NONE_TAG.into(),
                    head: Some(1),
                    deprel: "amod".into(),
                },
                Token {
                    form: noun,
                    pos: "NOUN".into(),
                    ner: NONE_TAG.into(),
                    head: None,
                    deprel: "root".into(),
                },
            ],
            named_entities: vec![],
        });
    }

    // Entities: surface tokens and the set of leaves each belongs to.
    let mut entities: Vec<(String, Vec<String>, BTreeSet<usize>)> = Vec::new();
    for i in 0..leaves {
        for _ in 0..cfg.entities_per_concept {
            let n = entities.len();
            let surface = if rng.gen_bool(0.25) {
                vec![format!("ent{n}a"), format!("ent{n}b")]
            } else {
                vec![format!("ent{n}")]
            };
            let mut owners = BTreeSet::from([i]);
            if rng.gen_bool(cfg.shared_entity_prob) {
                let other = (i + rng.gen_range(1..leaves)) % leaves;
                owners.insert(other);
            }
            entities.push((format!("E{n:03}"), surface, owners));
        }
    }
    for (id, surface, owners) in &entities {
        nodes.push(GraphNode {
            id: id.clone(),
            kind: NodeKind::Entity,
            surface: surface.clone(),
        });
        for &o in owners {
            edges.push((id.clone(), leaf_id(o)));
        }
    }
    let graph = ConceptGraph::new(nodes, edges)?;

    let mut rng = seed::rng(cfg.seed, "synth-sentences");
    let mut sentence_parses = Vec::with_capacity(cfg.sentences);
    let mut labels = Vec::new();
    for s in 0..cfg.sentences {
        let id = format!("s{s:04}");
        let parse = sentence(cfg, &entities, &id, &mut rng);
        for (concept, label) in label_pairs(&graph, &parse)? {
            labels.push((concept, id.clone(), label));
        }
        sentence_parses.push(parse);
    }

    let mut all = concept_parses;
    all.extend(sentence_parses);
    let parses = ParseCorpus::new(DEPRELS.iter().map(|d| d.to_string()).collect(), all)?;
    let table = embeddings(cfg, &parses)?;
    Ok(SynthCorpus {
        graph,
        parses,
        table,
        labels,
    })
}

fn sentence(
    cfg: &SynthConfig,
    entities: &[(String, Vec<String>, BTreeSet<usize>)],
    id: &str,
    rng: &mut ChaCha8Rng,
) -> DependencyParse {
    let first = rng.gen_range(0..entities.len());
    let mut picks = vec![first];
    if rng.gen_bool(cfg.two_clause_prob) {
        let owners = &entities[first].2;
        let disjoint: Vec<usize> = (0..entities.len())
            .filter(|&e| entities[e].2.is_disjoint(owners))
            .collect();
        if let Some(&e) = disjoint.choose(rng) {
            picks.push(e);
        }
    }
    let negated = if rng.gen_bool(cfg.negation_prob) {
        Some(rng.gen_range(0..picks.len()))
    } else {
        None
    };
    let mut verbs: Vec<usize> = (0..cfg.verbs).collect();
    verbs.shuffle(rng);

    let mut b = Builder {
        tokens: Vec::new(),
        spans: Vec::new(),
    };
    let mut preds = Vec::new();
    for (c, &e) in picks.iter().enumerate() {
        let cc = (c > 0).then(|| b.push("and", "CCONJ", NONE_TAG, "cc"));
        let (eid, surface, _) = &entities[e];
        let start = b.tokens.len();
        for form in surface {
            b.push(form, "PROPN", ENTITY_NER, "compound");
        }
        let end = b.tokens.len();
        b.spans.push(EntitySpan {
            start,
            end,
            entity: eid.clone(),
        });
        let neg = (negated == Some(c)).then(|| {
            let w = NEGATIONS[rng.gen_range(0..NEGATIONS.len())];
            b.push(w, "PART", NONE_TAG, NEGATION_DEPREL)
        });
        let pred = b.push(&format!("verb{}", verbs[c]), "VERB", NONE_TAG, "root");
        let adv = rng
            .gen_bool(0.5)
            .then(|| b.push(&format!("adv{}", rng.gen_range(0..cfg.adverbs)), "ADV", NONE_TAG, "advmod"));

        for t in start..end - 1 {
            b.tokens[t].head = Some(end - 1);
        }
        b.tokens[end - 1].head = Some(pred);
        b.tokens[end - 1].deprel = "nsubj".into();
        for dep in [neg, adv, cc].into_iter().flatten() {
            b.tokens[dep].head = Some(pred);
        }
        preds.push(pred);
    }
    for &p in &preds[1..] {
        b.tokens[p].head = Some(preds[0]);
        b.tokens[p].deprel = "conj".into();
    }
    let dot = b.push(".", "PUNCT", NONE_TAG, "punct");
    b.tokens[dot].head = Some(preds[0]);
    DependencyParse {
        id: id.into(),
        tokens: b.tokens,
        named_entities: b.spans,
    }
}

/// Labels every concept of every entity named in `parse`.
pub fn label_pairs(graph: &ConceptGraph, parse: &DependencyParse) -> Result<Vec<(String, u8)>> {
    let negs: Vec<usize> = (0..parse.tokens.len())
        .filter(|&i| parse.tokens[i].deprel == NEGATION_DEPREL)
        .collect();
    let mut out: BTreeMap<String, u8> = BTreeMap::new();
    for span in &parse.named_entities {
        let negated = (span.start..span.end)
            .any(|t| negs.iter().any(|&n| parse.tree_distance(t, n) <= NEGATION_REACH));
        for concept in graph.parents_of(&span.entity) {
            let label = u8::from(!negated);
            let slot = out.entry(concept.to_string()).or_insert(label);
            *slot = (*slot).min(label);
        }
    }
    Ok(out.into_iter().collect())
}

fn embeddings(cfg: &SynthConfig, parses: &ParseCorpus) -> Result<EmbeddingTable> {
    let mut words = BTreeSet::new();
    for p in parses.parses.values() {
        words.extend(p.tokens.iter().map(|t| t.form.clone()));
    }
    let mut table = EmbeddingTable::new(cfg.embedding_dim, OovPolicy::ZeroVector);
    let mut rng = seed::rng(cfg.seed, "synth-embeddings");
    for w in words {
        let v: Vec<f64> = (0..cfg.embedding_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        table.insert(&w, &v)?;
    }
    Ok(table)
}

pub const EDGES_FILE: &str = "concept_edges.tsv";
pub const NODES_FILE: &str = "concept_nodes.tsv";
pub const PARSES_FILE: &str = "parses.conll";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const LABELS_FILE: &str = "labels.jsonl";

pub fn labels_to_jsonl(labels: &[(String, String, u8)]) -> String {
    let mut s = String::new();
    for (c, sent, l) in labels {
        let v = serde_json::json!({ "concept": c, "sentence": sent, "label": l });
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

impl SynthCorpus {
    /// Writes the graph, parses, embeddings and labels into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (EDGES_FILE, self.graph.to_edge_text()),
            (NODES_FILE, self.graph.to_node_text()),
            (PARSES_FILE, self.parses.to_text()),
            (EMBEDDINGS_FILE, self.table.to_text()),
            (LABELS_FILE, labels_to_jsonl(&self.labels)),
        ];
        for (name, text) in files {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_corpus_shape() {
        let c = generate(&SynthConfig::default()).unwrap();
        assert_eq!(c.graph.concepts().count(), 50);
        assert_eq!(c.parses.len(), 450);
        let pos = c.labels.iter().filter(|l| l.2 == 1).count();
        assert!(pos > 0 && pos < c.labels.len());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig {
            sentences: 40,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.parses.to_text(), b.parses.to_text());
        assert_eq!(a.table.to_text(), b.table.to_text());
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn two_clause_entities_have_disjoint_concepts() {
        let c = generate(&SynthConfig::default()).unwrap();
        for p in c.parses.parses.values().filter(|p| p.named_entities.len() == 2) {
            let a: BTreeSet<&str> = c.graph.parents_of(&p.named_entities[0].entity).collect();
            let b: BTreeSet<&str> = c.graph.parents_of(&p.named_entities[1].entity).collect();
            assert!(a.is_disjoint(&b), "{}", p.id);
        }
    }
}
