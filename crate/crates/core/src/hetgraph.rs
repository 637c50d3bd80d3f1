//! Per-pair heterogeneous graphs.
//!
//! A pair graph fuses the dependency parses of the sentence and of every
//! concept in context into one word graph, adds a hub node per concept and
//! one for the sentence, maps the concept-graph context onto it, and then
//! pairs every relation with its reverse.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::concept_graph::{ConceptGraph, NodeKind};
use crate::error::{Error, Result};
use crate::rgcn::Edge;
use crate::tensor::Tensor;
use crate::text_ingest::{DependencyParse, EmbeddingTable, ParseCorpus, NONE_TAG};

pub const IS_A: &str = "isA";
pub const IS_NAMED_ENTITY: &str = "isNamedEntity";
pub const IS_VITAL: &str = "isVital";
const REV_PREFIX: &str = "rev-";

/// Dependency labels plus the three hub/context relations, each paired with
/// its reverse. Forward relation `i` has reverse `i + n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationVocab {
    base: Vec<String>,
    index: HashMap<String, usize>,
}

impl RelationVocab {
    pub fn new<S: AsRef<str>>(deprels: &[S]) -> Result<Self> {
        let mut base: Vec<String> = deprels.iter().map(|s| s.as_ref().to_string()).collect();
        base.extend([IS_A, IS_NAMED_ENTITY, IS_VITAL].map(String::from));
        let mut index = HashMap::new();
        for (i, r) in base.iter().enumerate() {
            if r.starts_with(REV_PREFIX) || index.insert(r.clone(), i).is_some() {
                return Err(Error::Validation(format!("relation name {r:?} is reserved or duplicated")));
            }
        }
        Ok(RelationVocab { base, index })
    }

    pub fn base_len(&self) -> usize {
        self.base.len()
    }

    /// Total relation count, forward and reverse.
    pub fn len(&self) -> usize {
        2 * self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        if let Some(fwd) = name.strip_prefix(REV_PREFIX) {
            return self.index.get(fwd).map(|i| i + self.base.len());
        }
        self.index.get(name).copied()
    }

    fn expect_id(&self, name: &str) -> Result<usize> {
        self.id(name)
            .ok_or_else(|| Error::Validation(format!("relation {name:?} not in vocabulary")))
    }

    pub fn rev(&self, r: usize) -> usize {
        let n = self.base.len();
        if r < n {
            r + n
        } else {
            r - n
        }
    }

    pub fn is_forward(&self, r: usize) -> bool {
        r < self.base.len()
    }

    pub fn name(&self, r: usize) -> String {
        let n = self.base.len();
        if r < n {
            self.base[r].clone()
        } else {
            format!("{REV_PREFIX}{}", self.base[r - n])
        }
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.len()).map(|r| self.name(r)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HetNodeKind {
    Word,
    VirtualConcept,
    VirtualSentence,
}

impl HetNodeKind {
    fn as_str(self) -> &'static str {
        match self {
            HetNodeKind::Word => "Word",
            HetNodeKind::VirtualConcept => "VirtualConcept",
            HetNodeKind::VirtualSentence => "VirtualSentence",
        }
    }
}

/// Where a node came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Sentence,
    Concept,
    Both,
    None,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Sentence, Source::Concept, Source::Both, Source::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Sentence => "SENTENCE",
            Source::Concept => "CONCEPT",
            Source::Both => "BOTH",
            Source::None => "None",
        }
    }

    fn merge(self, other: Source) -> Source {
        match (self, other) {
            (a, b) if a == b => a,
            (Source::None, b) => b,
            (a, Source::None) => a,
            _ => Source::Both,
        }
    }

    fn index(self) -> usize {
        Source::ALL.iter().position(|s| *s == self).unwrap_or(3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Sentence,
    Concept,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HetNode {
    pub id: usize,
    pub kind: HetNodeKind,
    /// Merge key for word nodes: the surface form, or the entity id for a
    /// contracted entity span.
    pub word: Option<String>,
    /// Concept id or sentence id for hub nodes.
    pub label: Option<String>,
    /// Tokens whose mean vector fills the word-vector slot.
    pub phrase: Vec<String>,
    pub pos: String,
    pub ner: String,
    pub source: Source,
    pub feature: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeteroGraph {
    pub vocab: RelationVocab,
    pub nodes: Vec<HetNode>,
    edges: Vec<Edge>,
    words: HashMap<String, usize>,
    concept_nodes: BTreeMap<String, usize>,
    pub target_concept_node: Option<usize>,
    pub sentence_node: Option<usize>,
}

/// Per-token merge keys; tokens inside an entity span share the entity id.
fn token_keys(parse: &DependencyParse) -> Vec<String> {
    let mut keys: Vec<String> = parse.tokens.iter().map(|t| t.form.clone()).collect();
    for span in &parse.named_entities {
        for k in &mut keys[span.start..span.end] {
            *k = span.entity.clone();
        }
    }
    keys
}

/// Token that carries the span's tags: the one whose head leaves the span.
fn span_head(parse: &DependencyParse, start: usize, end: usize) -> usize {
    (start..end)
        .find(|&i| match parse.tokens[i].head {
            None => true,
            Some(h) => h < start || h >= end,
        })
        .unwrap_or(start)
}

impl HeteroGraph {
    fn empty(vocab: RelationVocab) -> Self {
        HeteroGraph {
            vocab,
            nodes: Vec::new(),
            edges: Vec::new(),
            words: HashMap::new(),
            concept_nodes: BTreeMap::new(),
            target_concept_node: None,
            sentence_node: None,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn word_node(&self, word: &str) -> Option<usize> {
        self.words.get(word).copied()
    }

    pub fn concept_node(&self, concept: &str) -> Option<usize> {
        self.concept_nodes.get(concept).copied()
    }

    pub fn concept_node_count(&self) -> usize {
        self.concept_nodes.len()
    }

    pub fn count_relation(&self, name: &str) -> usize {
        match self.vocab.id(name) {
            Some(r) => self.edges.iter().filter(|e| e.rel == r).count(),
            None => 0,
        }
    }

    fn push_node(&mut self, mut node: HetNode) -> usize {
        let id = self.nodes.len();
        node.id = id;
        if let Some(w) = &node.word {
            self.words.insert(w.clone(), id);
        }
        self.nodes.push(node);
        id
    }

    fn add_edge(&mut self, src: usize, rel: usize, dst: usize) {
        self.edges.push(Edge { src, rel, dst });
    }

    fn normalize_edges(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup();
    }

    /// Node features stacked row by row.
    pub fn feature_matrix(&self) -> Result<Tensor> {
        let width = self.nodes.first().map_or(0, |n| n.feature.len());
        let mut data = Vec::with_capacity(width * self.nodes.len());
        for n in &self.nodes {
            if n.feature.len() != width || width == 0 {
                return Err(Error::Construction("node features not assembled".into()));
            }
            data.extend_from_slice(&n.feature);
        }
        Tensor::from_vec(vec![self.nodes.len(), width], data)
    }

    /// Stable text dump: node table, then edge table sorted by
    /// `(src, relation, dst)`.
    pub fn debug_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# nodes {}", self.nodes.len());
        for n in &self.nodes {
            let name = n.word.as_deref().or(n.label.as_deref()).unwrap_or("-");
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                n.id,
                n.kind.as_str(),
                name,
                n.phrase.join(" "),
                n.pos,
                n.ner,
                n.source.as_str()
            );
        }
        let _ = writeln!(s, "# edges {}", self.edges.len());
        for e in &self.edges {
            let _ = writeln!(s, "{}\t{}\t{}", e.src, self.vocab.name(e.rel), e.dst);
        }
        s
    }
}

/// Merges the parses' words into one graph with one node per distinct word
/// and one head → dependent edge per arc.
pub fn fuse_syntactic_graphs(
    parts: &[(Origin, &DependencyParse)],
    vocab: &RelationVocab,
) -> Result<HeteroGraph> {
    let mut g = HeteroGraph::empty(vocab.clone());
    for (origin, parse) in parts {
        let src_tag = match origin {
            Origin::Sentence => Source::Sentence,
            Origin::Concept => Source::Concept,
        };
        let keys = token_keys(parse);
        let mut in_span: Vec<Option<(usize, usize)>> = vec![None; parse.tokens.len()];
        for s in &parse.named_entities {
            for slot in &mut in_span[s.start..s.end] {
                *slot = Some((s.start, s.end));
            }
        }
        let mut ids = Vec::with_capacity(keys.len());
        for (i, key) in keys.iter().enumerate() {
            if let Some(&id) = g.words.get(key) {
                g.nodes[id].source = g.nodes[id].source.merge(src_tag);
                ids.push(id);
                continue;
            }
            let (tag_tok, phrase) = match in_span[i] {
                Some((a, b)) => (
                    span_head(parse, a, b),
                    parse.tokens[a..b].iter().map(|t| t.form.clone()).collect(),
                ),
                None => (i, vec![parse.tokens[i].form.clone()]),
            };
            let t = &parse.tokens[tag_tok];
            let id = g.push_node(HetNode {
                id: 0,
                kind: HetNodeKind::Word,
                word: Some(key.clone()),
                label: None,
                phrase,
                pos: t.pos.clone(),
                ner: t.ner.clone(),
                source: src_tag,
                feature: Vec::new(),
            });
            ids.push(id);
        }
        for (i, t) in parse.tokens.iter().enumerate() {
            let Some(h) = t.head else { continue };
            let (src, dst) = (ids[h], ids[i]);
            if src == dst {
                continue;
            }
            let rel = vocab.expect_id(&t.deprel)?;
            g.add_edge(src, rel, dst);
        }
    }
    g.normalize_edges();
    Ok(g)
}

/// Adds one hub node per concept (linked to its words by `isA`) and one for
/// the sentence (linked to its named entities by `isNamedEntity`). The first
/// concept is the pair's target.
pub fn add_virtual_nodes(
    g: &mut HeteroGraph,
    concepts: &[(&str, &DependencyParse)],
    sentence: &DependencyParse,
) -> Result<()> {
    let isa = g.vocab.expect_id(IS_A)?;
    let ne = g.vocab.expect_id(IS_NAMED_ENTITY)?;
    for (i, (cid, parse)) in concepts.iter().enumerate() {
        if g.concept_nodes.contains_key(*cid) {
            continue;
        }
        let hub = g.push_node(HetNode {
            id: 0,
            kind: HetNodeKind::VirtualConcept,
            word: None,
            label: Some(cid.to_string()),
            phrase: parse.forms(),
            pos: NONE_TAG.into(),
            ner: NONE_TAG.into(),
            source: Source::Concept,
            feature: Vec::new(),
        });
        g.concept_nodes.insert(cid.to_string(), hub);
        if i == 0 {
            g.target_concept_node = Some(hub);
        }
        let keys: BTreeSet<String> = token_keys(parse).into_iter().collect();
        for k in keys {
            let w = g.word_node(&k).ok_or_else(|| {
                Error::Construction(format!("word {k:?} of concept {cid} missing from fused graph"))
            })?;
            g.add_edge(hub, isa, w);
        }
    }
    let hub = g.push_node(HetNode {
        id: 0,
        kind: HetNodeKind::VirtualSentence,
        word: None,
        label: Some(sentence.id.clone()),
        phrase: sentence.forms(),
        pos: NONE_TAG.into(),
        ner: NONE_TAG.into(),
        source: Source::Sentence,
        feature: Vec::new(),
    });
    g.sentence_node = Some(hub);
    for e in sentence.entity_ids() {
        let w = g.word_node(&e).ok_or_else(|| {
            Error::Construction(format!("entity {e:?} of sentence {} missing", sentence.id))
        })?;
        g.add_edge(hub, ne, w);
    }
    g.normalize_edges();
    Ok(())
}

/// Maps context `isA` edges onto the graph. Edges from an entity in
/// `shared` to a concept in context become `isVital`.
pub fn attach_context(
    g: &mut HeteroGraph,
    ctx: &ConceptGraph,
    shared: &BTreeSet<String>,
) -> Result<()> {
    let isa = g.vocab.expect_id(IS_A)?;
    let vital = g.vocab.expect_id(IS_VITAL)?;
    for (child, parent) in ctx.edges() {
        let dst = g.concept_node(parent).ok_or_else(|| {
            Error::Construction(format!("context concept {parent} has no hub node"))
        })?;
        let child_node = ctx.node(child).expect("edge endpoint exists");
        let (src, rel) = match child_node.kind {
            NodeKind::Concept => {
                let src = g.concept_node(child).ok_or_else(|| {
                    Error::Construction(format!("context concept {child} has no hub node"))
                })?;
                (src, isa)
            }
            NodeKind::Entity => {
                let src = match g.word_node(child) {
                    Some(id) => {
                        let n = &mut g.nodes[id];
                        n.source = n.source.merge(Source::Concept);
                        id
                    }
                    None => g.push_node(HetNode {
                        id: 0,
                        kind: HetNodeKind::Word,
                        word: Some(child.to_string()),
                        label: None,
                        phrase: child_node.surface.clone(),
                        pos: NONE_TAG.into(),
                        ner: NONE_TAG.into(),
                        source: Source::Concept,
                        feature: Vec::new(),
                    }),
                };
                let rel = if shared.contains(child) { vital } else { isa };
                (src, rel)
            }
        };
        g.add_edge(src, rel, dst);
    }
    g.normalize_edges();
    Ok(())
}

/// Adds `(w, rev(r), v)` for every `(v, r, w)`. Idempotent.
pub fn add_reverse_relations(g: &mut HeteroGraph) {
    let rev: Vec<Edge> = g
        .edges
        .iter()
        .map(|e| Edge {
            src: e.dst,
            rel: g.vocab.rev(e.rel),
            dst: e.src,
        })
        .collect();
    g.edges.extend(rev);
    g.normalize_edges();
}

/// Closed tag vocabulary for one-hot encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagVocab {
    tags: Vec<String>,
}

impl TagVocab {
    pub fn new<S: AsRef<str>>(tags: &[S]) -> Self {
        let mut set: BTreeSet<String> = tags.iter().map(|t| t.as_ref().to_string()).collect();
        set.insert(NONE_TAG.to_string());
        TagVocab {
            tags: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn index(&self, tag: &str) -> Option<usize> {
        self.tags.binary_search_by(|t| t.as_str().cmp(tag)).ok()
    }
}

/// Width of an assembled feature row.
pub fn feature_width(embedding_dim: usize, pos: &TagVocab, ner: &TagVocab) -> usize {
    embedding_dim + pos.len() + ner.len() + Source::ALL.len()
}

/// Fills each node's feature: `[word vector | POS | NER | source]`.
pub fn assemble_features(
    g: &mut HeteroGraph,
    table: &EmbeddingTable,
    pos_vocab: &TagVocab,
    ner_vocab: &TagVocab,
) -> Result<()> {
    let width = feature_width(table.dim(), pos_vocab, ner_vocab);
    for n in &mut g.nodes {
        let mut f = table.phrase_embedding(&n.phrase)?;
        f.reserve(width - f.len());
        let pos = pos_vocab
            .index(&n.pos)
            .ok_or_else(|| Error::Validation(format!("POS tag {:?} outside vocabulary", n.pos)))?;
        let ner = ner_vocab
            .index(&n.ner)
            .ok_or_else(|| Error::Validation(format!("NER tag {:?} outside vocabulary", n.ner)))?;
        let mut onehot = |len: usize, hot: usize| {
            f.extend((0..len).map(|i| if i == hot { 1.0 } else { 0.0 }));
        };
        onehot(pos_vocab.len(), pos);
        onehot(ner_vocab.len(), ner);
        onehot(Source::ALL.len(), n.source.index());
        n.feature = f;
    }
    Ok(())
}

/// Everything needed to turn `(concept, sentence)` into a pair graph.
pub struct PairGraphBuilder<'a> {
    pub concepts: &'a ConceptGraph,
    pub parses: &'a ParseCorpus,
    pub table: &'a EmbeddingTable,
    pub vocab: RelationVocab,
    pub pos: TagVocab,
    pub ner: TagVocab,
    pub hops: usize,
}

impl<'a> PairGraphBuilder<'a> {
    pub fn new(
        concepts: &'a ConceptGraph,
        parses: &'a ParseCorpus,
        table: &'a EmbeddingTable,
        hops: usize,
    ) -> Result<Self> {
        Ok(PairGraphBuilder {
            concepts,
            parses,
            table,
            vocab: RelationVocab::new(&parses.deprels)?,
            pos: TagVocab::new(&parses.pos_tags()),
            ner: TagVocab::new(&parses.ner_tags()),
            hops,
        })
    }

    pub fn feature_width(&self) -> usize {
        feature_width(self.table.dim(), &self.pos, &self.ner)
    }

    /// Entities named in the sentence that are direct children of `concept`.
    pub fn shared_entities(&self, concept: &str, sentence: &DependencyParse) -> Result<BTreeSet<String>> {
        let of_concept = self.concepts.entities_of(concept)?;
        Ok(sentence
            .entity_ids()
            .intersection(&of_concept)
            .cloned()
            .collect())
    }

    pub fn sentence(&self, id: &str) -> Result<&'a DependencyParse> {
        self.parses
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("parse for sentence {id}")))
    }

    pub fn build(&self, concept: &str, sentence_id: &str) -> Result<HeteroGraph> {
        let sentence = self.sentence(sentence_id)?;
        let shared = self.shared_entities(concept, sentence)?;
        let ctx = self
            .concepts
            .context_subgraph(concept, &shared, self.hops)?;

        let mut ids: Vec<&str> = vec![concept];
        ids.extend(
            ctx.concepts()
                .map(|n| n.id.as_str())
                .filter(|id| *id != concept),
        );
        let mut concept_parses = Vec::with_capacity(ids.len());
        for id in ids {
            let p = self
                .parses
                .get(id)
                .ok_or_else(|| Error::NotFound(format!("parse for concept {id}")))?;
            concept_parses.push((id, p));
        }

        let mut parts = vec![(Origin::Sentence, sentence)];
        parts.extend(concept_parses.iter().map(|(_, p)| (Origin::Concept, *p)));
        let mut g = fuse_syntactic_graphs(&parts, &self.vocab)?;
        add_virtual_nodes(&mut g, &concept_parses, sentence)?;
        attach_context(&mut g, &ctx, &shared)?;
        add_reverse_relations(&mut g);
        assemble_features(&mut g, self.table, &self.pos, &self.ner)?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_ingest::{EntitySpan, Token};

    fn tok(form: &str, pos: &str, head: Option<usize>, rel: &str) -> Token {
        Token {
            form: form.into(),
            pos: pos.into(),
            ner: NONE_TAG.into(),
            head,
            deprel: rel.into(),
        }
    }

    fn parse(id: &str, tokens: Vec<Token>) -> DependencyParse {
        DependencyParse {
            id: id.into(),
            tokens,
            named_entities: vec![],
        }
    }

    fn vocab() -> RelationVocab {
        RelationVocab::new(&["root", "nsubj", "obj", "amod", "compound"]).unwrap()
    }

    #[test]
    fn vocab_reverse_pairs() {
        let v = vocab();
        assert_eq!(v.len(), 16);
        for r in 0..v.len() {
            assert_ne!(v.rev(r), r);
            assert_eq!(v.rev(v.rev(r)), r);
            assert_eq!(v.id(&v.name(r)), Some(r));
        }
        assert!(RelationVocab::new(&["isA"]).is_err());
    }

    #[test]
    fn vocab_36_labels_gives_78() {
        let labels: Vec<String> = (0..36).map(|i| format!("dep{i}")).collect();
        let v = RelationVocab::new(&labels).unwrap();
        assert_eq!(v.base_len(), 39);
        assert_eq!(v.len(), 78);
    }

    #[test]
    fn shared_word_becomes_both() {
        let s = parse(
            "s",
            vec![tok("watched", "VERB", None, "root"), tok("Titanic", "PROPN", Some(0), "obj")],
        );
        let c = parse(
            "c",
            vec![tok("Titanic", "PROPN", Some(1), "amod"), tok("movies", "NOUN", None, "root")],
        );
        let g = fuse_syntactic_graphs(&[(Origin::Sentence, &s), (Origin::Concept, &c)], &vocab())
            .unwrap();
        assert_eq!(g.node_count(), 3);
        let t = g.word_node("Titanic").unwrap();
        assert_eq!(g.nodes[t].source, Source::Both);
        assert_eq!(g.nodes[g.word_node("movies").unwrap()].source, Source::Concept);
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn single_token_parse() {
        let s = parse("s", vec![tok("hi", "INTJ", None, "root")]);
        let g = fuse_syntactic_graphs(&[(Origin::Sentence, &s)], &vocab()).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn entity_span_contracts() {
        let mut s = parse(
            "s",
            vec![
                tok("Iron", "PROPN", Some(1), "compound"),
                tok("Man", "PROPN", Some(2), "nsubj"),
                tok("flies", "VERB", None, "root"),
            ],
        );
        s.named_entities.push(EntitySpan {
            start: 0,
            end: 2,
            entity: "IronMan".into(),
        });
        let g = fuse_syntactic_graphs(&[(Origin::Sentence, &s)], &vocab()).unwrap();
        assert_eq!(g.node_count(), 2);
        let e = g.word_node("IronMan").unwrap();
        assert_eq!(g.nodes[e].phrase, vec!["Iron", "Man"]);
        // the compound arc collapses inside the span
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn virtual_nodes_link_words_and_entities() {
        let mut s = parse(
            "s",
            vec![tok("watched", "VERB", None, "root"), tok("Titanic", "PROPN", Some(0), "obj")],
        );
        let c1 = parse(
            "c1",
            vec![
                tok("classic", "ADJ", Some(2), "amod"),
                tok("romance", "NOUN", Some(2), "compound"),
                tok("movies", "NOUN", None, "root"),
            ],
        );
        let c2 = parse("c2", vec![tok("films", "NOUN", None, "root")]);
        let c3 = parse("c3", vec![tok("movies", "NOUN", None, "root")]);
        let v = vocab();
        let mut g = fuse_syntactic_graphs(
            &[(Origin::Sentence, &s), (Origin::Concept, &c1), (Origin::Concept, &c2), (Origin::Concept, &c3)],
            &v,
        )
        .unwrap();
        add_virtual_nodes(&mut g, &[("c1", &c1), ("c2", &c2), ("c3", &c3)], &s).unwrap();
        assert_eq!(g.concept_node_count(), 3);
        let hub = g.concept_node("c1").unwrap();
        assert_eq!(g.target_concept_node, Some(hub));
        let isa = v.id(IS_A).unwrap();
        assert_eq!(g.edges().iter().filter(|e| e.src == hub && e.rel == isa).count(), 3);
        assert_eq!(g.count_relation(IS_NAMED_ENTITY), 0);

        s.named_entities.push(EntitySpan {
            start: 1,
            end: 2,
            entity: "Titanic".into(),
        });
        let mut g = fuse_syntactic_graphs(&[(Origin::Sentence, &s), (Origin::Concept, &c2)], &v).unwrap();
        add_virtual_nodes(&mut g, &[("c2", &c2)], &s).unwrap();
        assert_eq!(g.count_relation(IS_NAMED_ENTITY), 1);
    }

    #[test]
    fn missing_concept_word_is_an_error() {
        let s = parse("s", vec![tok("a", "X", None, "root")]);
        let c = parse("c", vec![tok("b", "X", None, "root")]);
        let mut g = fuse_syntactic_graphs(&[(Origin::Sentence, &s)], &vocab()).unwrap();
        assert!(matches!(
            add_virtual_nodes(&mut g, &[("c", &c)], &s),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn reverse_doubles_and_is_idempotent() {
        let s = parse(
            "s",
            vec![
                tok("a", "X", None, "root"),
                tok("b", "X", Some(0), "nsubj"),
                tok("c", "X", Some(0), "obj"),
                tok("d", "X", Some(2), "amod"),
                tok("e", "X", Some(3), "amod"),
                tok("f", "X", Some(4), "compound"),
            ],
        );
        let mut g = fuse_syntactic_graphs(&[(Origin::Sentence, &s)], &vocab()).unwrap();
        assert_eq!(g.edges().len(), 5);
        add_reverse_relations(&mut g);
        assert_eq!(g.edges().len(), 10);
        let once = g.edges().to_vec();
        add_reverse_relations(&mut g);
        assert_eq!(g.edges(), &once[..]);
    }

    #[test]
    fn feature_width_and_slots() {
        let s = parse(
            "s",
            vec![tok("known", "ADJ", None, "root"), tok("unknown", "NOUN", Some(0), "nsubj")],
        );
        let c = parse("c", vec![tok("known", "ADJ", None, "root")]);
        let mut table = EmbeddingTable::new(2, Default::default());
        table.insert("known", &[2.0, 4.0]).unwrap();
        let v = vocab();
        let mut g = fuse_syntactic_graphs(&[(Origin::Sentence, &s), (Origin::Concept, &c)], &v).unwrap();
        add_virtual_nodes(&mut g, &[("c", &c)], &s).unwrap();
        let pos = TagVocab::new(&["ADJ", "NOUN"]);
        let ner = TagVocab::new::<&str>(&[]);
        assemble_features(&mut g, &table, &pos, &ner).unwrap();
        let w = feature_width(2, &pos, &ner);
        assert_eq!(w, 2 + 3 + 1 + 4);
        let unk = &g.nodes[g.word_node("unknown").unwrap()].feature;
        assert_eq!(unk.len(), w);
        assert_eq!(&unk[..2], &[0.0, 0.0]);
        assert!(unk[2..].contains(&1.0));
        let sent_hub = &g.nodes[g.sentence_node.unwrap()].feature;
        // mean of (2,4) and the zero OOV vector
        assert_eq!(&sent_hub[..2], &[1.0, 2.0]);

        let bad = TagVocab::new(&["ADJ"]);
        assert!(matches!(
            assemble_features(&mut g, &table, &bad, &ner),
            Err(Error::Validation(_))
        ));
    }
}
