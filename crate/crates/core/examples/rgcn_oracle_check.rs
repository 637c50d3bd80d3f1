//! Compares the batched R-GCN forward pass with the per-node message
//! passing oracle on random graphs, for both weight decompositions.
//!
//! ```text
//! cargo run --release --example rgcn_oracle_check -- [graphs]
//! ```

use graphmatch::rgcn::{message_passing_oracle, Decomposition, Edge, RgcnLayer};
use graphmatch::Tensor;
use rand::Rng;

fn main() -> graphmatch::Result<()> {
    let graphs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let mut rng = graphmatch::seed::rng(0, "oracle-example");
    for mode in [Decomposition::Basis(3), Decomposition::Block(4)] {
        let mut worst: f64 = 0.0;
        for _ in 0..graphs {
            let n = rng.gen_range(1..20);
            let r = rng.gen_range(1..6);
            let layer = RgcnLayer::init(mode, 8, 12, r, true, &mut rng)?;
            let edges: Vec<Edge> = (0..rng.gen_range(0..4 * n))
                .map(|_| Edge::new(rng.gen_range(0..n), rng.gen_range(0..r), rng.gen_range(0..n)))
                .collect();
            let h = Tensor::uniform(&[n, 8], 1.0, &mut rng);
            let diff = layer.forward(&edges, &h)?.max_abs_diff(&message_passing_oracle(&layer, &edges, &h)?)?;
            worst = worst.max(diff);
        }
        println!("{mode:?}: {graphs} graphs, max |fast - oracle| = {worst:.3e}");
    }
    Ok(())
}
