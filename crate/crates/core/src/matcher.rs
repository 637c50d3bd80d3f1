//! Match models: Graph-Graph, Graph-Seq and a mean-embedding Seq-Seq
//! baseline, all scored by the same interaction head over
//! `[|V_S − V_T|, V_S ∘ V_T]`.
//!
//! The Seq-Seq model stands in for a fine-tuned pretrained encoder and is
//! only a weak bag-of-vectors reference point.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::concept_graph::ConceptGraph;
use crate::error::{Error, Result};
use crate::hetgraph::HeteroGraph;
use crate::rgcn::{Decomposition, Edge, LayerCache, RgcnLayer};
use crate::seed;
use crate::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::text_ingest::{DependencyParse, EmbeddingTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    GraphGraph,
    GraphSeq,
    SeqSeq,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::GraphGraph => "graph-graph",
            ModelKind::GraphSeq => "graph-seq",
            ModelKind::SeqSeq => "seq-seq",
        }
    }

    pub fn default_epochs(self) -> usize {
        match self {
            ModelKind::GraphGraph => 20,
            ModelKind::GraphSeq => 50,
            ModelKind::SeqSeq => 20,
        }
    }

    pub fn default_bases(self) -> usize {
        match self {
            ModelKind::GraphGraph => 14,
            ModelKind::GraphSeq | ModelKind::SeqSeq => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph-graph" => Ok(ModelKind::GraphGraph),
            "graph-seq" => Ok(ModelKind::GraphSeq),
            "seq-seq" => Ok(ModelKind::SeqSeq),
            other => Err(Error::Usage(format!("unknown model kind {other:?}"))),
        }
    }
}

/// `[|a − b|, a ∘ b]`, with negative zeros normalized.
pub fn interaction_features(vs: &[f64], vt: &[f64]) -> Result<Vec<f64>> {
    if vs.len() != vt.len() {
        return Err(Error::Shape(format!(
            "interaction inputs have lengths {} and {}",
            vs.len(),
            vt.len()
        )));
    }
    let mut out = Vec::with_capacity(2 * vs.len());
    out.extend(vs.iter().zip(vt).map(|(a, b)| (a - b).abs() + 0.0));
    out.extend(vs.iter().zip(vt).map(|(a, b)| a * b + 0.0));
    Ok(out)
}

/// Two-layer MLP: `2d → hidden → 2` with a ReLU hidden layer.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionHead {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

#[derive(Clone, Debug)]
struct HeadCache {
    input: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
}

impl InteractionHead {
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let b1 = (6.0 / (input + hidden) as f64).sqrt();
        let b2 = (6.0 / (hidden + 2) as f64).sqrt();
        InteractionHead {
            w1: Tensor::uniform(&[hidden, input], b1, rng),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::uniform(&[2, hidden], b2, rng),
            b2: Tensor::zeros(&[2]),
        }
    }

    pub fn input_width(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_width(&self) -> usize {
        self.w1.rows()
    }

    pub fn param_count_for(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + 2 * hidden + 2
    }

    fn forward(&self, x: &[f64]) -> Result<([f64; 2], HeadCache)> {
        if x.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "head expects width {}, got {}",
                self.input_width(),
                x.len()
            )));
        }
        let hdim = self.hidden_width();
        let mut pre = self.b1.data().to_vec();
        matvec_acc(self.w1.data(), hdim, x.len(), x, &mut pre);
        let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let mut logits = self.b2.data().to_vec();
        matvec_acc(self.w2.data(), 2, hdim, &hidden, &mut logits);
        Ok((
            [logits[0], logits[1]],
            HeadCache {
                input: x.to_vec(),
                hidden_pre: pre,
                hidden,
            },
        ))
    }

    /// Returns `[dw1, db1, dw2, db2]` and the gradient w.r.t. the input.
    fn backward(&self, cache: &HeadCache, dlogits: [f64; 2]) -> (Vec<Tensor>, Vec<f64>) {
        let hdim = self.hidden_width();
        let mut dw2 = Tensor::zeros(self.w2.shape());
        outer_acc(dw2.data_mut(), &dlogits, &cache.hidden);
        let db2 = Tensor::from_vec(vec![2], dlogits.to_vec()).expect("finite logits grad");
        let mut dh = vec![0.0; hdim];
        matvec_t_acc(self.w2.data(), 2, hdim, &dlogits, &mut dh);
        for (d, p) in dh.iter_mut().zip(&cache.hidden_pre) {
            if *p <= 0.0 {
                *d = 0.0;
            }
        }
        let mut dw1 = Tensor::zeros(self.w1.shape());
        outer_acc(dw1.data_mut(), &dh, &cache.input);
        let db1 = Tensor::from_vec(vec![hdim], dh.clone()).expect("finite hidden grad");
        let mut dx = vec![0.0; cache.input.len()];
        matvec_t_acc(self.w1.data(), hdim, cache.input.len(), &dh, &mut dx);
        (vec![dw1, db1, dw2, db2], dx)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Cross-entropy of a 2-way softmax and its gradient w.r.t. the logits.
pub fn cross_entropy(logits: [f64; 2], label: u8) -> (f64, [f64; 2]) {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    let y = usize::from(label == 1);
    let loss = lse - logits[y];
    let p = softmax2(logits);
    let mut d = p;
    d[y] -= 1.0;
    (loss, d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Node feature width fed to the first R-GCN layer.
    pub input_dim: usize,
    /// Word-vector width (sequence-side encoders).
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub decomposition: Decomposition,
    pub num_relations: usize,
    pub final_activation: bool,
}

impl ModelConfig {
    /// Three-layer basis-decomposed configuration for `kind`. Graph-Graph
    /// reads pair-graph features over `pair_relations`; Graph-Seq reads word
    /// vectors over `isA` and its reverse; Seq-Seq has no graph layers.
    pub fn for_kind(
        kind: ModelKind,
        pair_feature_width: usize,
        embedding_dim: usize,
        hidden_dim: usize,
        bases: usize,
        pair_relations: usize,
    ) -> Self {
        let (input_dim, layers, num_relations) = match kind {
            ModelKind::GraphGraph => (pair_feature_width, 3, pair_relations),
            ModelKind::GraphSeq => (embedding_dim, 3, 2),
            ModelKind::SeqSeq => (embedding_dim, 0, 0),
        };
        ModelConfig {
            kind,
            input_dim,
            embedding_dim,
            hidden_dim,
            layers,
            decomposition: Decomposition::Basis(bases),
            num_relations,
            final_activation: true,
        }
    }

    /// Input/output widths of each R-GCN layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ModelKind::SeqSeq => Vec::new(),
            ModelKind::GraphGraph | ModelKind::GraphSeq => {
                let last = if self.kind == ModelKind::GraphSeq {
                    self.embedding_dim
                } else {
                    self.hidden_dim
                };
                (0..self.layers)
                    .map(|l| {
                        let i = if l == 0 { self.input_dim } else { self.hidden_dim };
                        let o = if l + 1 == self.layers { last } else { self.hidden_dim };
                        (i, o)
                    })
                    .collect()
            }
        }
    }

    /// Width of `V_S` / `V_T`.
    pub fn encoding_dim(&self) -> usize {
        self.layer_dims()
            .last()
            .map_or(self.embedding_dim, |&(_, o)| o)
    }

    /// Trainable parameter count from the configuration alone.
    pub fn param_count(&self) -> usize {
        let gnn: usize = self
            .layer_dims()
            .iter()
            .map(|&(i, o)| RgcnLayer::param_count_for(self.decomposition, i, o, self.num_relations))
            .sum();
        let d = self.encoding_dim();
        gnn + InteractionHead::param_count_for(2 * d, 2 * d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != ModelKind::SeqSeq && self.layers == 0 {
            return Err(Error::Argument("graph models need at least one layer".into()));
        }
        if self.kind == ModelKind::GraphSeq && self.num_relations != 2 {
            return Err(Error::Argument(
                "graph-seq runs over isA and its reverse only (2 relations)".into(),
            ));
        }
        if let Decomposition::Block(b) = self.decomposition {
            for (i, o) in self.layer_dims() {
                if b == 0 || i % b != 0 || o % b != 0 {
                    return Err(Error::Argument(format!(
                        "block count {b} does not divide layer dims {i}→{o}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Model-ready encoding of one concept-sentence pair.
#[derive(Clone, Debug, PartialEq)]
pub enum PairInput {
    GraphGraph {
        features: Tensor,
        edges: Vec<Edge>,
        sentence_node: usize,
        concept_node: usize,
    },
    GraphSeq {
        features: Tensor,
        edges: Vec<Edge>,
        concept_node: usize,
        sentence: Vec<f64>,
    },
    SeqSeq {
        concept: Vec<f64>,
        sentence: Vec<f64>,
    },
}

impl PairInput {
    pub fn graph_graph(g: &HeteroGraph) -> Result<Self> {
        let sentence_node = g
            .sentence_node
            .ok_or_else(|| Error::Construction("pair graph has no sentence node".into()))?;
        let concept_node = g
            .target_concept_node
            .ok_or_else(|| Error::Construction("pair graph has no target concept node".into()))?;
        Ok(PairInput::GraphGraph {
            features: g.feature_matrix()?,
            edges: g.edges().to_vec(),
            sentence_node,
            concept_node,
        })
    }

    /// Concept-graph context as a 2-relation graph (`isA` = 0, reverse = 1)
    /// with mean word vectors as node features.
    pub fn graph_seq(
        ctx: &ConceptGraph,
        target: &str,
        sentence: &DependencyParse,
        table: &EmbeddingTable,
    ) -> Result<Self> {
        let ids: Vec<&str> = ctx.nodes().map(|n| n.id.as_str()).collect();
        let concept_node = ids
            .iter()
            .position(|id| *id == target)
            .ok_or_else(|| Error::NotFound(format!("target {target} not in context graph")))?;
        let mut data = Vec::with_capacity(ids.len() * table.dim());
        for n in ctx.nodes() {
            data.extend(table.phrase_embedding(&n.surface)?);
        }
        let features = Tensor::from_vec(vec![ids.len(), table.dim()], data)?;
        let pos = |id: &str| ids.binary_search(&id).expect("ctx node");
        let mut edges = Vec::with_capacity(2 * ctx.edge_count());
        for (c, p) in ctx.edges() {
            edges.push(Edge::new(pos(c), 0, pos(p)));
            edges.push(Edge::new(pos(p), 1, pos(c)));
        }
        edges.sort_unstable();
        Ok(PairInput::GraphSeq {
            features,
            edges,
            concept_node,
            sentence: table.phrase_embedding(&sentence.forms())?,
        })
    }

    pub fn seq_seq<S: AsRef<str>>(concept: &[S], sentence: &[S], table: &EmbeddingTable) -> Result<Self> {
        if concept.is_empty() || sentence.is_empty() {
            return Err(Error::Argument("seq-seq needs non-empty concept and sentence".into()));
        }
        Ok(PairInput::SeqSeq {
            concept: table.phrase_embedding(concept)?,
            sentence: table.phrase_embedding(sentence)?,
        })
    }

    fn kind(&self) -> ModelKind {
        match self {
            PairInput::GraphGraph { .. } => ModelKind::GraphGraph,
            PairInput::GraphSeq { .. } => ModelKind::GraphSeq,
            PairInput::SeqSeq { .. } => ModelKind::SeqSeq,
        }
    }
}

/// Forward trace of one example.
struct Trace {
    caches: Vec<LayerCache>,
    head: HeadCache,
    vs: Vec<f64>,
    vt: Vec<f64>,
    logits: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matcher {
    pub config: ModelConfig,
    pub layers: Vec<RgcnLayer>,
    pub head: InteractionHead,
}

impl Matcher {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::rng(seed, "init");
        let dims = config.layer_dims();
        let last = dims.len().saturating_sub(1);
        let layers = dims
            .iter()
            .enumerate()
            .map(|(l, &(i, o))| {
                let relu = l < last || config.final_activation;
                RgcnLayer::init(config.decomposition, i, o, config.num_relations, relu, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let d = config.encoding_dim();
        let head = InteractionHead::init(2 * d, 2 * d, &mut rng);
        Ok(Matcher {
            config,
            layers,
            head,
        })
    }

    pub fn from_parts(config: ModelConfig, layers: Vec<RgcnLayer>, head: InteractionHead) -> Result<Self> {
        config.validate()?;
        let dims = config.layer_dims();
        if dims.len() != layers.len()
            || dims
                .iter()
                .zip(&layers)
                .any(|(&(i, o), l)| l.in_dim() != i || l.out_dim() != o || l.num_relations() != config.num_relations)
        {
            return Err(Error::Validation("layer shapes disagree with model config".into()));
        }
        if head.input_width() != 2 * config.encoding_dim() {
            return Err(Error::Validation("head width disagrees with model config".into()));
        }
        Ok(Matcher {
            config,
            layers,
            head,
        })
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut v: Vec<&Tensor> = self.layers.iter().flat_map(|l| l.params()).collect();
        v.extend(self.head.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = self.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
        v.extend(self.head.params_mut());
        v
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.param_names().into_iter().map(move |n| format!("layer{i}.{n}")))
            .collect();
        v.extend(["head.w1", "head.b1", "head.w2", "head.b2"].map(String::from));
        v
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    fn encode_graph(&self, features: &Tensor, edges: &[Edge]) -> Result<(Tensor, Vec<LayerCache>)> {
        let mut h = features.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let cache = layer.forward_cached(edges, &h)?;
            h = cache.output(layer.relu());
            caches.push(cache);
        }
        Ok((h, caches))
    }

    fn trace(&self, input: &PairInput) -> Result<Trace> {
        if input.kind() != self.config.kind {
            return Err(Error::Argument(format!(
                "{} input given to a {} model",
                input.kind(),
                self.config.kind
            )));
        }
        let (vs, vt, caches) = match input {
            PairInput::GraphGraph {
                features,
                edges,
                sentence_node,
                concept_node,
            } => {
                let (h, caches) = self.encode_graph(features, edges)?;
                if *sentence_node >= h.rows() || *concept_node >= h.rows() {
                    return Err(Error::Construction("virtual node index out of range".into()));
                }
                (h.row(*sentence_node).to_vec(), h.row(*concept_node).to_vec(), caches)
            }
            PairInput::GraphSeq {
                features,
                edges,
                concept_node,
                sentence,
            } => {
                let (h, caches) = self.encode_graph(features, edges)?;
                if *concept_node >= h.rows() {
                    return Err(Error::Construction("target node index out of range".into()));
                }
                (sentence.clone(), h.row(*concept_node).to_vec(), caches)
            }
            PairInput::SeqSeq { concept, sentence } => (sentence.clone(), concept.clone(), Vec::new()),
        };
        let x = interaction_features(&vs, &vt)?;
        let (logits, head) = self.head.forward(&x)?;
        Ok(Trace {
            caches,
            head,
            vs,
            vt,
            logits,
        })
    }

    pub fn logits(&self, input: &PairInput) -> Result<[f64; 2]> {
        Ok(self.trace(input)?.logits)
    }

    /// Probability of the positive class.
    pub fn probability(&self, input: &PairInput) -> Result<f64> {
        Ok(softmax2(self.logits(input)?)[1])
    }

    /// Encoded `(V_S, V_T)` for inspection.
    pub fn encodings(&self, input: &PairInput) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = self.trace(input)?;
        Ok((t.vs, t.vt))
    }

    /// Cross-entropy loss and gradients in [`Matcher::params`] order.
    pub fn loss_and_grads(&self, input: &PairInput, label: u8) -> Result<(f64, Vec<Tensor>)> {
        let t = self.trace(input)?;
        let (loss, dlogits) = cross_entropy(t.logits, label);
        let (head_grads, dx) = self.head.backward(&t.head, dlogits);

        // d/dV of [|vs − vt|, vs ∘ vt]
        let d = t.vs.len();
        let mut dvs = vec![0.0; d];
        let mut dvt = vec![0.0; d];
        for k in 0..d {
            let diff = t.vs[k] - t.vt[k];
            let sgn = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            dvs[k] = dx[k] * sgn + dx[d + k] * t.vt[k];
            dvt[k] = -dx[k] * sgn + dx[d + k] * t.vs[k];
        }

        let mut grads: Vec<Tensor> = Vec::new();
        if !self.layers.is_empty() {
            let (n, out) = t.caches.last().expect("graph model has layers").output_shape();
            let mut up = Tensor::zeros(&[n, out]);
            match input {
                PairInput::GraphGraph {
                    sentence_node,
                    concept_node,
                    ..
                } => {
                    crate::tensor::axpy(1.0, &dvs, up.row_mut(*sentence_node));
                    crate::tensor::axpy(1.0, &dvt, up.row_mut(*concept_node));
                }
                PairInput::GraphSeq { concept_node, .. } => {
                    crate::tensor::axpy(1.0, &dvt, up.row_mut(*concept_node));
                }
                PairInput::SeqSeq { .. } => unreachable!("seq-seq has no layers"),
            }
            let mut per_layer: Vec<Vec<Tensor>> = Vec::with_capacity(self.layers.len());
            for (layer, cache) in self.layers.iter().zip(&t.caches).rev() {
                let g = layer.backward(cache, &up)?;
                up = g.input.clone();
                per_layer.push(g.into_param_grads());
            }
            per_layer.reverse();
            grads.extend(per_layer.into_iter().flatten());
        }
        grads.extend(head_grads);
        Ok((loss, grads))
    }
}

/// Probability that `pair_graph` is a match.
pub fn predict_graph_graph(model: &Matcher, pair_graph: &HeteroGraph) -> Result<f64> {
    model.probability(&PairInput::graph_graph(pair_graph)?)
}

pub fn predict_graph_seq(
    model: &Matcher,
    ctx: &ConceptGraph,
    target: &str,
    sentence: &DependencyParse,
    table: &EmbeddingTable,
) -> Result<f64> {
    model.probability(&PairInput::graph_seq(ctx, target, sentence, table)?)
}

pub fn predict_seq_seq<S: AsRef<str>>(
    model: &Matcher,
    concept: &[S],
    sentence: &[S],
    table: &EmbeddingTable,
) -> Result<f64> {
    model.probability(&PairInput::seq_seq(concept, sentence, table)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_examples() {
        assert_eq!(
            interaction_features(&[1.0, 2.0], &[3.0, 1.0]).unwrap(),
            vec![2.0, 1.0, 3.0, 2.0]
        );
        let same = interaction_features(&[0.3, -4.0], &[0.3, -4.0]).unwrap();
        assert_eq!(&same[..2], &[0.0, 0.0]);
        let z = interaction_features(&[0.0, 0.0], &[5.0, -5.0]).unwrap();
        assert_eq!(z, vec![5.0, 5.0, 0.0, 0.0]);
        assert!(z[3].is_sign_positive());
        assert!(matches!(
            interaction_features(&[1.0], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn cross_entropy_gradient_sums_to_zero() {
        let (loss, d) = cross_entropy([0.2, -1.3], 1);
        assert!(loss > 0.0);
        assert!((d[0] + d[1]).abs() < 1e-15);
        assert!(d[1] < 0.0);
    }

    #[test]
    fn seq_seq_rejects_empty() {
        let t = EmbeddingTable::new(3, Default::default());
        assert!(matches!(
            PairInput::seq_seq::<&str>(&[], &["a"], &t),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn model_kind_round_trip() {
        for k in [ModelKind::GraphGraph, ModelKind::GraphSeq, ModelKind::SeqSeq] {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("bert".parse::<ModelKind>().is_err());
    }

    #[test]
    fn seq_seq_identical_sides_is_deterministic() {
        let mut t = EmbeddingTable::new(2, Default::default());
        t.insert("a", &[1.0, 2.0]).unwrap();
        t.insert("b", &[-1.0, 0.5]).unwrap();
        let cfg = ModelConfig {
            kind: ModelKind::SeqSeq,
            input_dim: 2,
            embedding_dim: 2,
            hidden_dim: 4,
            layers: 0,
            decomposition: Decomposition::Basis(2),
            num_relations: 0,
            final_activation: true,
        };
        let m = Matcher::new(cfg.clone(), 9).unwrap();
        let m2 = Matcher::new(cfg, 9).unwrap();
        let p = predict_seq_seq(&m, &["a", "b"], &["a", "b"], &t).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(p.to_bits(), predict_seq_seq(&m2, &["a", "b"], &["a", "b"], &t).unwrap().to_bits());
        let PairInput::SeqSeq { concept, sentence } =
            PairInput::seq_seq(&["a", "b"], &["b", "a"], &t).unwrap()
        else {
            unreachable!()
        };
        let x = interaction_features(&sentence, &concept).unwrap();
        assert!(x[..2].iter().all(|v| *v == 0.0));
    }
}
