//! Rewrites a broadcast-then-elementwise-scatter pattern into a vectorised
//! scatter and checks the two graphs evaluate identically.

use std::collections::BTreeMap;

use molpack::kernels::Matrix;
use molpack::planner::{fuse_broadcast_scatter, OpGraph, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut g = OpGraph::new();
    let base = g.input("base", 4, 3);
    let values = g.input("values", 6, 3);
    let idx = g.index_input("idx", 6, 4);
    let wide = g.broadcast(idx, 3)?;
    let out = g.scatter_add(base, wide, values)?;
    g.mark_output(out)?;

    let fused = fuse_broadcast_scatter(&g);
    println!("before: {} nodes, after: {} nodes", g.len(), fused.len());
    for node in fused.nodes() {
        println!("  {node:?}");
    }

    let inputs = BTreeMap::from([
        ("base".to_string(), Value::Matrix(Matrix::from_fn(4, 3, |r, c| (r * 3 + c) as f64))),
        ("values".to_string(), Value::Matrix(Matrix::from_fn(6, 3, |r, c| 0.5 * (r + c) as f64))),
        ("idx".to_string(), Value::Index(vec![0, 3, 3, 1, 0, 2])),
    ]);
    println!("same result: {}", g.evaluate(&inputs)? == fused.evaluate(&inputs)?);
    Ok(())
}
