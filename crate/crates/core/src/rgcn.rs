//! Relational graph convolution.
//!
//! One layer computes, for every node `v`,
//!
//! ```text
//! h'_v = σ( Σ_r Σ_{w ∈ N_r(v)} W_r h_w / |N_r(v)|  +  W_0 h_v )
//! ```
//!
//! where an edge `(src, r, dst)` makes `src` an `r`-neighbor of `dst`.
//! `W_r` is never materialized on the fast path: in basis mode the
//! neighbor means are mixed by the coefficients first and pushed through
//! the shared bases, in block mode each block acts on its slice.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{axpy, matvec_acc, matvec_t_acc, outer_acc, Tensor};

/// A typed edge; messages flow from `src` to `dst`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: usize,
    pub rel: usize,
    pub dst: usize,
}

impl Edge {
    pub fn new(src: usize, rel: usize, dst: usize) -> Self {
        Edge { src, rel, dst }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decomposition {
    /// `W_r = Σ_b a_rb V_b` with this many bases.
    Basis(usize),
    /// `W_r = diag(Q_1r, …, Q_Br)` with this many blocks.
    Block(usize),
}

impl Decomposition {
    pub fn count(self) -> usize {
        match self {
            Decomposition::Basis(b) | Decomposition::Block(b) => b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgcnLayer {
    mode: Decomposition,
    in_dim: usize,
    out_dim: usize,
    num_relations: usize,
    /// Basis: `[B, out, in]`. Block: `[R, B, out/B, in/B]`.
    weights: Tensor,
    /// Basis only: `[R, B]`.
    coeffs: Option<Tensor>,
    /// `[out, in]`.
    self_loop: Tensor,
    relu: bool,
}

/// Incoming neighbors of one node under one relation, with their mean.
#[derive(Clone, Debug)]
struct Group {
    dst: usize,
    rel: usize,
    srcs: Vec<usize>,
    mean: Vec<f64>,
}

/// Intermediate values a forward pass leaves for the backward pass.
#[derive(Clone, Debug)]
pub struct LayerCache {
    input: Tensor,
    pre_activation: Tensor,
    groups: Vec<Group>,
    /// Per node, range into `groups`.
    spans: Vec<(usize, usize)>,
    /// Basis only: `mixed[b][v]` = Σ_r a_rb · mean_r(v), flattened `[B, n, in]`.
    mixed: Vec<f64>,
}

impl LayerCache {
    /// `(nodes, out_dim)` of the layer output.
    pub fn output_shape(&self) -> (usize, usize) {
        (self.pre_activation.rows(), self.pre_activation.cols())
    }

    pub fn output(&self, relu: bool) -> Tensor {
        let mut out = self.pre_activation.clone();
        if relu {
            out.data_mut().iter_mut().for_each(|x| *x = x.max(0.0));
        }
        out
    }
}

/// Gradients of a layer, laid out like its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weights: Tensor,
    pub coeffs: Option<Tensor>,
    pub self_loop: Tensor,
    pub input: Tensor,
}

impl LayerGrads {
    /// Parameter gradients in [`RgcnLayer::params`] order.
    pub fn into_param_grads(self) -> Vec<Tensor> {
        let mut v = vec![self.weights];
        v.extend(self.coeffs);
        v.push(self.self_loop);
        v
    }
}

fn glorot(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl RgcnLayer {
    /// Random initialization: weights uniform in ±√(6/(in+out)),
    /// basis coefficients uniform in ±1/√B.
    pub fn init<R: Rng + ?Sized>(
        mode: Decomposition,
        in_dim: usize,
        out_dim: usize,
        num_relations: usize,
        relu: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let bound = glorot(in_dim, out_dim);
        match mode {
            Decomposition::Basis(b) => {
                if b == 0 {
                    return Err(Error::Argument("basis count must be positive".into()));
                }
                let bases = Tensor::uniform(&[b, out_dim, in_dim], bound, rng);
                let coeffs = Tensor::uniform(&[num_relations, b], 1.0 / (b as f64).sqrt(), rng);
                let w0 = Tensor::uniform(&[out_dim, in_dim], bound, rng);
                Self::basis(bases, coeffs, w0, relu)
            }
            Decomposition::Block(b) => {
                if b == 0 || !in_dim.is_multiple_of(b) || !out_dim.is_multiple_of(b) {
                    return Err(Error::Shape(format!(
                        "block count {b} must divide in_dim {in_dim} and out_dim {out_dim}"
                    )));
                }
                let blocks =
                    Tensor::uniform(&[num_relations, b, out_dim / b, in_dim / b], bound, rng);
                let w0 = Tensor::uniform(&[out_dim, in_dim], bound, rng);
                Self::block(blocks, w0, relu)
            }
        }
    }

    /// Basis-mode layer from explicit `[B, out, in]` bases and `[R, B]`
    /// coefficients.
    pub fn basis(bases: Tensor, coeffs: Tensor, self_loop: Tensor, relu: bool) -> Result<Self> {
        let [b, out_dim, in_dim] = bases.shape() else {
            return Err(Error::Shape(format!("bases must be 3-D, got {:?}", bases.shape())));
        };
        let (b, out_dim, in_dim) = (*b, *out_dim, *in_dim);
        let [num_relations, cb] = coeffs.shape() else {
            return Err(Error::Shape("coefficients must be 2-D".into()));
        };
        if *cb != b {
            return Err(Error::Shape(format!("{b} bases but {cb} coefficient columns")));
        }
        if self_loop.shape() != [out_dim, in_dim] {
            return Err(Error::Shape(format!("self-loop weight {:?}", self_loop.shape())));
        }
        Ok(RgcnLayer {
            mode: Decomposition::Basis(b),
            in_dim,
            out_dim,
            num_relations: *num_relations,
            weights: bases,
            coeffs: Some(coeffs),
            self_loop,
            relu,
        })
    }

    /// Block-diagonal layer from `[R, B, out/B, in/B]` blocks.
    pub fn block(blocks: Tensor, self_loop: Tensor, relu: bool) -> Result<Self> {
        let [num_relations, b, ob, ib] = blocks.shape() else {
            return Err(Error::Shape(format!("blocks must be 4-D, got {:?}", blocks.shape())));
        };
        let (out_dim, in_dim) = (b * ob, b * ib);
        if self_loop.shape() != [out_dim, in_dim] {
            return Err(Error::Shape(format!("self-loop weight {:?}", self_loop.shape())));
        }
        Ok(RgcnLayer {
            mode: Decomposition::Block(*b),
            in_dim,
            out_dim,
            num_relations: *num_relations,
            weights: blocks,
            coeffs: None,
            self_loop,
            relu,
        })
    }

    pub fn mode(&self) -> Decomposition {
        self.mode
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn relu(&self) -> bool {
        self.relu
    }

    pub fn self_loop(&self) -> &Tensor {
        &self.self_loop
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn coeffs(&self) -> Option<&Tensor> {
        self.coeffs.as_ref()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.weights];
        v.extend(self.coeffs.as_ref());
        v.push(&self.self_loop);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.weights];
        v.extend(self.coeffs.as_mut());
        v.push(&mut self.self_loop);
        v
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        match self.mode {
            Decomposition::Basis(_) => vec!["bases", "coeffs", "self_loop"],
            Decomposition::Block(_) => vec!["blocks", "self_loop"],
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Closed-form parameter count for a layer configuration.
    pub fn param_count_for(
        mode: Decomposition,
        in_dim: usize,
        out_dim: usize,
        num_relations: usize,
    ) -> usize {
        let w0 = in_dim * out_dim;
        match mode {
            Decomposition::Basis(b) => b * in_dim * out_dim + num_relations * b + w0,
            Decomposition::Block(b) => num_relations * b * (out_dim / b) * (in_dim / b) + w0,
        }
    }

    /// Materializes `W_r` as an `[out, in]` matrix.
    pub fn reconstruct_weight(&self, r: usize) -> Result<Tensor> {
        if r >= self.num_relations {
            return Err(Error::OutOfRange {
                index: r,
                len: self.num_relations,
            });
        }
        let mut w = Tensor::zeros(&[self.out_dim, self.in_dim]);
        match self.mode {
            Decomposition::Basis(nb) => {
                let coeffs = self.coeffs.as_ref().expect("basis mode has coefficients");
                for b in 0..nb {
                    axpy(coeffs.get2(r, b), self.weights.slab(b), w.data_mut());
                }
            }
            Decomposition::Block(nb) => {
                let (ob, ib) = (self.out_dim / nb, self.in_dim / nb);
                for b in 0..nb {
                    let q = self.block_slice(r, b);
                    for i in 0..ob {
                        for j in 0..ib {
                            w.set2(b * ob + i, b * ib + j, q[i * ib + j]);
                        }
                    }
                }
            }
        }
        Ok(w)
    }

    fn block_slice(&self, r: usize, b: usize) -> &[f64] {
        let nb = self.mode.count();
        let size = (self.out_dim / nb) * (self.in_dim / nb);
        let off = (r * nb + b) * size;
        &self.weights.data()[off..off + size]
    }

    fn check_inputs(&self, edges: &[Edge], h: &Tensor) -> Result<usize> {
        if h.shape().len() != 2 || h.cols() != self.in_dim {
            return Err(Error::Shape(format!(
                "layer expects [n, {}] input, got {:?}",
                self.in_dim,
                h.shape()
            )));
        }
        let n = h.rows();
        for e in edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::Shape(format!("edge {e:?} references a node ≥ {n}")));
            }
            if e.rel >= self.num_relations {
                return Err(Error::OutOfRange {
                    index: e.rel,
                    len: self.num_relations,
                });
            }
        }
        Ok(n)
    }

    pub fn forward(&self, edges: &[Edge], h: &Tensor) -> Result<Tensor> {
        let cache = self.forward_cached(edges, h)?;
        Ok(cache.output(self.relu))
    }

    /// Forward pass keeping what [`RgcnLayer::backward`] needs.
    pub fn forward_cached(&self, edges: &[Edge], h: &Tensor) -> Result<LayerCache> {
        let n = self.check_inputs(edges, h)?;
        let (groups, spans) = group_edges(edges, n, h);
        let (ind, outd) = (self.in_dim, self.out_dim);
        let mut z = Tensor::zeros(&[n, outd]);
        let mut mixed = Vec::new();

        match self.mode {
            Decomposition::Basis(nb) => {
                let coeffs = self.coeffs.as_ref().expect("basis coefficients");
                mixed = vec![0.0; nb * n * ind];
                for (v, &(lo, hi)) in spans.iter().enumerate() {
                    if lo == hi {
                        continue;
                    }
                    let zv = z.row_mut(v);
                    for b in 0..nb {
                        let u = &mut mixed[(b * n + v) * ind..(b * n + v + 1) * ind];
                        for g in &groups[lo..hi] {
                            axpy(coeffs.get2(g.rel, b), &g.mean, u);
                        }
                        matvec_acc(self.weights.slab(b), outd, ind, u, zv);
                    }
                }
            }
            Decomposition::Block(nb) => {
                let (ob, ib) = (outd / nb, ind / nb);
                for (v, &(lo, hi)) in spans.iter().enumerate() {
                    let zv = z.row_mut(v);
                    for g in &groups[lo..hi] {
                        for b in 0..nb {
                            matvec_acc(
                                self.block_slice(g.rel, b),
                                ob,
                                ib,
                                &g.mean[b * ib..(b + 1) * ib],
                                &mut zv[b * ob..(b + 1) * ob],
                            );
                        }
                    }
                }
            }
        }
        for v in 0..n {
            matvec_acc(self.self_loop.data(), outd, ind, h.row(v), z.row_mut(v));
        }
        if !z.all_finite() {
            return Err(Error::Numeric("non-finite pre-activation in R-GCN layer".into()));
        }
        Ok(LayerCache {
            input: h.clone(),
            pre_activation: z,
            groups,
            spans,
            mixed,
        })
    }

    /// Gradients of `Σ upstream ∘ output` w.r.t. parameters and input.
    pub fn backward(&self, cache: &LayerCache, upstream: &Tensor) -> Result<LayerGrads> {
        let n = cache.input.rows();
        if upstream.shape() != [n, self.out_dim] {
            return Err(Error::Shape(format!(
                "upstream gradient {:?}, expected [{n}, {}]",
                upstream.shape(),
                self.out_dim
            )));
        }
        if cache.input.cols() != self.in_dim {
            return Err(Error::Shape("cache does not belong to this layer".into()));
        }
        let (ind, outd) = (self.in_dim, self.out_dim);
        let mut dz = upstream.clone();
        if self.relu {
            for (d, z) in dz.data_mut().iter_mut().zip(cache.pre_activation.data()) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
        }

        let mut d_self = Tensor::zeros(&[outd, ind]);
        let mut d_input = Tensor::zeros(&[n, ind]);
        for v in 0..n {
            outer_acc(d_self.data_mut(), dz.row(v), cache.input.row(v));
            matvec_t_acc(self.self_loop.data(), outd, ind, dz.row(v), d_input.row_mut(v));
        }

        let mut d_weights = Tensor::zeros(self.weights.shape());
        let mut d_coeffs = self.coeffs.as_ref().map(|c| Tensor::zeros(c.shape()));
        let mut d_means: Vec<Vec<f64>> = cache.groups.iter().map(|_| vec![0.0; ind]).collect();

        match self.mode {
            Decomposition::Basis(nb) => {
                let coeffs = self.coeffs.as_ref().expect("basis coefficients");
                let dc = d_coeffs.as_mut().expect("basis coefficient grads");
                let mut du = vec![0.0; ind];
                for (v, &(lo, hi)) in cache.spans.iter().enumerate() {
                    if lo == hi {
                        continue;
                    }
                    let dzv = dz.row(v);
                    for b in 0..nb {
                        let u = &cache.mixed[(b * n + v) * ind..(b * n + v + 1) * ind];
                        outer_acc(d_weights.slab_mut(b), dzv, u);
                        du.iter_mut().for_each(|x| *x = 0.0);
                        matvec_t_acc(self.weights.slab(b), outd, ind, dzv, &mut du);
                        for (gi, g) in cache.groups[lo..hi].iter().enumerate() {
                            let cur = dc.get2(g.rel, b);
                            dc.set2(g.rel, b, cur + crate::tensor::dot(&du, &g.mean));
                            axpy(coeffs.get2(g.rel, b), &du, &mut d_means[lo + gi]);
                        }
                    }
                }
            }
            Decomposition::Block(nb) => {
                let (ob, ib) = (outd / nb, ind / nb);
                let size = ob * ib;
                for (v, &(lo, hi)) in cache.spans.iter().enumerate() {
                    let dzv = dz.row(v);
                    for (gi, g) in cache.groups[lo..hi].iter().enumerate() {
                        for b in 0..nb {
                            let off = (g.rel * nb + b) * size;
                            let dzb = &dzv[b * ob..(b + 1) * ob];
                            outer_acc(
                                &mut d_weights.data_mut()[off..off + size],
                                dzb,
                                &g.mean[b * ib..(b + 1) * ib],
                            );
                            matvec_t_acc(
                                self.block_slice(g.rel, b),
                                ob,
                                ib,
                                dzb,
                                &mut d_means[lo + gi][b * ib..(b + 1) * ib],
                            );
                        }
                    }
                }
            }
        }

        for (g, dm) in cache.groups.iter().zip(&d_means) {
            let inv = 1.0 / g.srcs.len() as f64;
            for &s in &g.srcs {
                axpy(inv, dm, d_input.row_mut(s));
            }
        }

        Ok(LayerGrads {
            weights: d_weights,
            coeffs: d_coeffs,
            self_loop: d_self,
            input: d_input,
        })
    }
}

/// Groups edges by `(dst, rel)` in ascending order and averages the source
/// rows of each group. Empty neighbor sets produce no group.
fn group_edges(edges: &[Edge], n: usize, h: &Tensor) -> (Vec<Group>, Vec<(usize, usize)>) {
    let mut sorted: Vec<Edge> = edges.to_vec();
    sorted.sort_unstable_by_key(|e| (e.dst, e.rel, e.src));
    let d = h.cols();
    let mut groups: Vec<Group> = Vec::new();
    for e in sorted {
        match groups.last_mut() {
            Some(g) if g.dst == e.dst && g.rel == e.rel => g.srcs.push(e.src),
            _ => groups.push(Group {
                dst: e.dst,
                rel: e.rel,
                srcs: vec![e.src],
                mean: Vec::new(),
            }),
        }
    }
    for g in &mut groups {
        let mut sum = vec![0.0; d];
        for &s in &g.srcs {
            for (a, x) in sum.iter_mut().zip(h.row(s)) {
                *a += x;
            }
        }
        let c = g.srcs.len() as f64;
        sum.iter_mut().for_each(|x| *x /= c);
        g.mean = sum;
    }
    let mut spans = vec![(0, 0); n];
    let mut i = 0;
    for (v, span) in spans.iter_mut().enumerate() {
        let lo = i;
        while i < groups.len() && groups[i].dst == v {
            i += 1;
        }
        *span = (lo, i);
    }
    (groups, spans)
}

/// Edge-by-edge evaluation of the layer in message/update form, with every
/// `W_r` materialized. Slow; exists to check [`RgcnLayer::forward`].
pub fn message_passing_oracle(layer: &RgcnLayer, edges: &[Edge], h: &Tensor) -> Result<Tensor> {
    let n = layer.check_inputs(edges, h)?;
    let (ind, outd) = (layer.in_dim(), layer.out_dim());
    let weights: Vec<Tensor> = (0..layer.num_relations())
        .map(|r| layer.reconstruct_weight(r))
        .collect::<Result<_>>()?;

    // c_vw = |N_r(v)|, counting parallel edges
    let mut degree = vec![0usize; n * layer.num_relations()];
    for e in edges {
        degree[e.dst * layer.num_relations() + e.rel] += 1;
    }

    let message = |w: usize, e: &Edge| -> Vec<f64> {
        let c = degree[e.dst * layer.num_relations() + e.rel] as f64;
        let wr = &weights[e.rel];
        (0..outd)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..ind {
                    s += wr.get2(i, j) * h.get2(w, j);
                }
                s / c
            })
            .collect()
    };
    let update = |v: usize, m: &[f64]| -> Vec<f64> {
        (0..outd)
            .map(|i| {
                let mut s = m[i];
                for j in 0..ind {
                    s += layer.self_loop().get2(i, j) * h.get2(v, j);
                }
                if layer.relu() {
                    s.max(0.0)
                } else {
                    s
                }
            })
            .collect()
    };

    let mut out = Vec::with_capacity(n * outd);
    for v in 0..n {
        let mut m = vec![0.0; outd];
        for e in edges.iter().filter(|e| e.dst == v) {
            for (acc, x) in m.iter_mut().zip(message(e.src, e)) {
                *acc += x;
            }
        }
        out.extend(update(v, &m));
    }
    Tensor::from_vec(vec![n, outd], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn small_layer(mode: Decomposition, relu: bool) -> RgcnLayer {
        let mut rng = seed::rng(3, "layer");
        RgcnLayer::init(mode, 4, 4, 3, relu, &mut rng).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let layer = RgcnLayer::basis(
            Tensor::zeros(&[2, 3, 2]),
            Tensor::zeros(&[2, 2]),
            Tensor::zeros(&[3, 2]),
            true,
        )
        .unwrap();
        let h = Tensor::matrix(2, 2, vec![1.0, -1.0, 2.0, 0.5]).unwrap();
        let out = layer.forward(&[Edge::new(0, 1, 1)], &h).unwrap();
        assert!(out.data().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn self_loop_only_single_node() {
        let layer = RgcnLayer::basis(
            Tensor::zeros(&[1, 2, 2]),
            Tensor::zeros(&[1, 1]),
            Tensor::identity(2),
            true,
        )
        .unwrap();
        let h = Tensor::matrix(1, 2, vec![1.0, -2.0]).unwrap();
        assert_eq!(layer.forward(&[], &h).unwrap().data(), &[1.0, 0.0]);
    }

    #[test]
    fn one_edge_hand_computed() {
        // W_0 = 0, one relation with W = [[1, 2], [0, -1]]; edge 0 → 1
        let layer = RgcnLayer::block(
            Tensor::from_vec(vec![1, 1, 2, 2], vec![1.0, 2.0, 0.0, -1.0]).unwrap(),
            Tensor::zeros(&[2, 2]),
            false,
        )
        .unwrap();
        let h = Tensor::matrix(2, 2, vec![3.0, 1.0, 7.0, 7.0]).unwrap();
        let edges = [Edge::new(0, 0, 1)];
        let fast = layer.forward(&edges, &h).unwrap();
        let slow = message_passing_oracle(&layer, &edges, &h).unwrap();
        assert_eq!(fast.data(), &[0.0, 0.0, 5.0, -1.0]);
        assert_eq!(slow.data(), fast.data());
    }

    #[test]
    fn empty_graph() {
        let layer = small_layer(Decomposition::Basis(2), true);
        let h = Tensor::zeros(&[0, 4]);
        assert_eq!(layer.forward(&[], &h).unwrap().shape(), &[0, 4]);
        assert_eq!(message_passing_oracle(&layer, &[], &h).unwrap().shape(), &[0, 4]);
    }

    #[test]
    fn reconstruct_cases() {
        // B = |R| with one-hot coefficients returns the bases unchanged
        let mut rng = seed::rng(1, "bases");
        let bases = Tensor::uniform(&[3, 2, 2], 1.0, &mut rng);
        let mut coeffs = Tensor::zeros(&[3, 3]);
        for r in 0..3 {
            coeffs.set2(r, r, 1.0);
        }
        let layer = RgcnLayer::basis(bases.clone(), coeffs, Tensor::zeros(&[2, 2]), true).unwrap();
        for r in 0..3 {
            assert_eq!(layer.reconstruct_weight(r).unwrap().data(), bases.slab(r));
        }
        assert!(matches!(layer.reconstruct_weight(3), Err(Error::OutOfRange { .. })));

        let blocks = Tensor::uniform(&[2, 1, 3, 2], 1.0, &mut rng);
        let layer = RgcnLayer::block(blocks.clone(), Tensor::zeros(&[3, 2]), true).unwrap();
        assert_eq!(layer.reconstruct_weight(1).unwrap().data(), blocks.slab(1));

        let bases = Tensor::from_vec(vec![2, 1, 2], vec![1.0, 3.0, 5.0, -1.0]).unwrap();
        let coeffs = Tensor::matrix(1, 2, vec![0.5, 0.5]).unwrap();
        let layer = RgcnLayer::basis(bases, coeffs, Tensor::zeros(&[1, 2]), true).unwrap();
        assert_eq!(layer.reconstruct_weight(0).unwrap().data(), &[3.0, 1.0]);
    }

    #[test]
    fn block_reconstruction_is_block_diagonal() {
        let layer = small_layer(Decomposition::Block(2), true);
        let w = layer.reconstruct_weight(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if (i < 2) != (j < 2) {
                    assert_eq!(w.get2(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn block_must_divide_dims() {
        let mut rng = seed::rng(0, "x");
        assert!(RgcnLayer::init(Decomposition::Block(3), 4, 6, 2, true, &mut rng).is_err());
    }

    #[test]
    fn shape_errors() {
        let layer = small_layer(Decomposition::Basis(2), true);
        let h = Tensor::zeros(&[2, 3]);
        assert!(matches!(layer.forward(&[], &h), Err(Error::Shape(_))));
        let h = Tensor::zeros(&[2, 4]);
        assert!(layer.forward(&[Edge::new(0, 0, 5)], &h).is_err());
        assert!(layer.forward(&[Edge::new(0, 9, 1)], &h).is_err());
        let cache = layer.forward_cached(&[], &h).unwrap();
        assert!(layer.backward(&cache, &Tensor::zeros(&[3, 4])).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        for mode in [Decomposition::Basis(2), Decomposition::Block(2)] {
            let layer = small_layer(mode, true);
            let mut rng = seed::rng(5, "h");
            let h = Tensor::uniform(&[3, 4], 1.0, &mut rng);
            let edges = [Edge::new(0, 0, 1), Edge::new(2, 1, 1), Edge::new(1, 2, 0)];
            let cache = layer.forward_cached(&edges, &h).unwrap();
            let g = layer.backward(&cache, &Tensor::zeros(&[3, 4])).unwrap();
            for t in g.into_param_grads() {
                assert!(t.data().iter().all(|x| *x == 0.0));
            }
        }
    }

    #[test]
    fn dead_relu_unit_blocks_gradient() {
        // W_0 = -I makes every pre-activation negative for a positive input
        let layer = RgcnLayer::basis(
            Tensor::zeros(&[1, 2, 2]),
            Tensor::zeros(&[1, 1]),
            {
                let mut t = Tensor::identity(2);
                t.scale(-1.0);
                t
            },
            true,
        )
        .unwrap();
        let h = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        let cache = layer.forward_cached(&[], &h).unwrap();
        let g = layer
            .backward(&cache, &Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap())
            .unwrap();
        assert!(g.self_loop.data().iter().all(|x| *x == 0.0));
        assert!(g.input.data().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn param_count_closed_form() {
        for mode in [Decomposition::Basis(2), Decomposition::Block(2)] {
            let layer = small_layer(mode, true);
            assert_eq!(
                layer.param_count(),
                RgcnLayer::param_count_for(mode, 4, 4, 3)
            );
        }
    }
}
