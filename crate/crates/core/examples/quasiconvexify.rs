//! Half-gap filling on a grid graph, and quasiconvexity constants of a
//! snowflaked segment as the graph scale shrinks.

use mmslab::generators::{euclidean_grid, snowflake};
use mmslab::quasiconvex::{eps_graph, quasiconvexify, quasiconvexity_constant, sample_pairs};

fn main() -> mmslab::error::Result<()> {
    let grid = euclidean_grid(32, 2)?;
    let h = grid.step().unwrap_or(1.0);
    let graph = eps_graph(&grid, 1.1 * h)?;
    let q = quasiconvexify(&grid, &graph, 0, grid.len() - 1, 64)?;
    q.path.verify(&grid)?;
    println!(
        "corner to corner: {} vertices, length {:.4}, stretch {:.4}",
        q.path.vertices.len(),
        q.path.length,
        q.stretch
    );
    for r in &q.rounds {
        println!("  round {:>2}: {:>4} open gaps, total {:.6}", r.round, r.open_gaps, r.total_gap);
    }
    let est = quasiconvexity_constant(&grid, &graph, &sample_pairs(&grid, 50, 0), 64)?;
    println!("grid constant over 50 pairs: {:.4}", est.constant);

    let flake = snowflake(&euclidean_grid(2001, 1)?, 0.5)?;
    let pairs = sample_pairs(&flake, 20, 0);
    for eps in [0.3, 0.1, 0.03] {
        let g = eps_graph(&flake, eps)?;
        let est = quasiconvexity_constant(&flake, &g, &pairs, 64)?;
        println!("snowflake eps = {eps:<5} constant {:.3}", est.constant);
    }
    Ok(())
}
