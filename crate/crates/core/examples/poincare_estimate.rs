//! Poincaré constant estimates on square grids and on two squares glued at a
//! corner, where the inequality degenerates as the grid is refined.

use mmslab::generators::{cusp_pair, euclidean_grid};
use mmslab::poincare::{pi_constant_estimate, PiOptions, ProbeFamily};
use mmslab::space::{LadderParams, MetricMeasureSpace, ScaleLadder};

fn estimate(space: &MetricMeasureSpace) -> mmslab::error::Result<(f64, String)> {
    let ladder = ScaleLadder::for_space(space, &LadderParams::default())?;
    let probes = ProbeFamily::default().build(space, &ladder)?;
    let rep = pi_constant_estimate(space, &probes, &ladder, &PiOptions::default())?;
    Ok((rep.constant_estimate, rep.worst_probe.unwrap_or_default()))
}

fn main() -> mmslab::error::Result<()> {
    for n in [16, 32, 64] {
        let (c, probe) = estimate(&euclidean_grid(n, 2)?)?;
        println!("grid {n:>2}x{n:<2}  L = {c:.4}  worst probe {probe}");
    }
    for n in [8, 16, 32] {
        let (c, probe) = estimate(&cusp_pair(n)?)?;
        println!("cusp n = {n:>2}  L = {c:.4}  worst probe {probe}");
    }
    Ok(())
}
