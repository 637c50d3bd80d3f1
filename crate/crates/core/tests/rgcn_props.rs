mod common;

use graphmatch::rgcn::{message_passing_oracle, Decomposition, Edge, RgcnLayer};
use graphmatch::Tensor;
use proptest::prelude::*;
use rand::seq::SliceRandom;

proptest! {
    #[test]
    fn forward_matches_oracle(seed in any::<u64>(), block in any::<bool>()) {
        let mut rng = graphmatch::seed::rng(seed, "rgcn-oracle");
        let (layer, edges, h) = common::random_instance(&mut rng, 12, 6, block);
        let fast = layer.forward(&edges, &h).unwrap();
        let slow = message_passing_oracle(&layer, &edges, &h).unwrap();
        prop_assert!(fast.max_abs_diff(&slow).unwrap() <= 1e-9);
    }

    #[test]
    fn permutation_equivariant(seed in any::<u64>(), block in any::<bool>()) {
        let mut rng = graphmatch::seed::rng(seed, "rgcn-perm");
        let (layer, edges, h) = common::random_instance(&mut rng, 10, 4, block);
        let n = h.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // Node v moves to position perm[v].
        let mut ph = Tensor::zeros(&[n, h.cols()]);
        for (v, &pv) in perm.iter().enumerate() {
            ph.row_mut(pv).copy_from_slice(h.row(v));
        }
        let pe: Vec<Edge> = edges.iter().map(|e| Edge::new(perm[e.src], e.rel, perm[e.dst])).collect();
        let out = layer.forward(&edges, &h).unwrap();
        let pout = layer.forward(&pe, &ph).unwrap();
        for (v, &pv) in perm.iter().enumerate() {
            for (a, b) in out.row(v).iter().zip(pout.row(pv)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_edges_do_not_change_means(seed in any::<u64>()) {
        let mut rng = graphmatch::seed::rng(seed, "rgcn-dup");
        let (layer, edges, h) = common::random_instance(&mut rng, 10, 4, false);
        let mut doubled = edges.clone();
        doubled.extend(edges.iter().copied());
        let a = layer.forward(&edges, &h).unwrap();
        let b = layer.forward(&doubled, &h).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn one_hot_basis_is_per_relation(seed in any::<u64>()) {
        let mut rng = graphmatch::seed::rng(seed, "rgcn-onehot");
        let (free, edges, h) = common::random_instance(&mut rng, 10, 4, false);
        let r = free.num_relations();
        let full = RgcnLayer::init(Decomposition::Block(1), free.in_dim(), free.out_dim(), r, free.relu(), &mut rng).unwrap();
        let bases = Tensor::from_vec(vec![r, free.out_dim(), free.in_dim()], full.weights().data().to_vec()).unwrap();
        let basis = RgcnLayer::basis(bases, Tensor::identity(r), full.self_loop().clone(), free.relu()).unwrap();
        let a = basis.forward(&edges, &h).unwrap();
        let b = full.forward(&edges, &h).unwrap();
        prop_assert_eq!(a.data(), b.data());
    }

    #[test]
    fn isolated_node_sees_only_self_loop(seed in any::<u64>()) {
        let mut rng = graphmatch::seed::rng(seed, "rgcn-iso");
        let (layer, edges, h) = common::random_instance(&mut rng, 8, 3, false);
        let n = h.rows();
        let mut h2 = Tensor::zeros(&[n + 1, h.cols()]);
        for v in 0..n {
            h2.row_mut(v).copy_from_slice(h.row(v));
        }
        h2.row_mut(n).fill(0.5);
        let out = layer.forward(&edges, &h2).unwrap();
        let w0 = layer.self_loop();
        for i in 0..layer.out_dim() {
            let mut z: f64 = w0.row(i).iter().map(|w| w * 0.5).sum();
            if layer.relu() {
                z = z.max(0.0);
            }
            prop_assert!((out.get2(n, i) - z).abs() <= 1e-12);
        }
    }
}

#[test]
fn parameter_count_matches_tensors() {
    for mode in [Decomposition::Basis(3), Decomposition::Block(2)] {
        let mut rng = graphmatch::seed::rng(0, "count");
        let l = RgcnLayer::init(mode, 4, 6, 5, true, &mut rng).unwrap();
        let n: usize = l.params().iter().map(|t| t.len()).sum();
        assert_eq!(l.param_count(), n);
    }
}

#[test]
fn out_of_range_edges_are_rejected() {
    let mut rng = graphmatch::seed::rng(0, "bad-edge");
    let l = RgcnLayer::init(Decomposition::Basis(2), 3, 3, 2, true, &mut rng).unwrap();
    let h = Tensor::zeros(&[2, 3]);
    assert!(l.forward(&[Edge::new(0, 2, 1)], &h).is_err());
    assert!(l.forward(&[Edge::new(0, 1, 2)], &h).is_err());
}
