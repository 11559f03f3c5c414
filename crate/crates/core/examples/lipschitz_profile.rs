//! Pointwise lip/Lip on a grid and on a snowflaked segment.

use mmslab::field::ScalarField;
use mmslab::generators::{euclidean_grid, snowflake};
use mmslab::lipschitz::liplip_ratio_field;
use mmslab::space::{LadderParams, MetricMeasureSpace, ScaleLadder};

fn show(space: &MetricMeasureSpace, f: &ScalarField) -> mmslab::error::Result<()> {
    let ladder = ScaleLadder::for_space(space, &LadderParams::default())?;
    let prof = liplip_ratio_field(space, f, &ladder, &ladder.default_window(), &[1.5, 2.0, 4.0])?;
    let mid = space.len() / 2 + (space.len() as f64).sqrt() as usize / 2;
    let p = &prof.points[mid.min(space.len() - 1)];
    print!(
        "{:<28} LIP = {:.4}  at x = {mid}: lip = {:.4}  Lip = {:.4}  q95 ratio = {:.3}  fractions",
        f.label,
        prof.global_lip,
        p.lip,
        p.lip_upper,
        prof.ratio_quantile(space, 0.95)
    );
    for kf in &prof.fractions {
        print!("  K={}: {:.3}", kf.k, kf.fraction);
    }
    println!();
    Ok(())
}

fn main() -> mmslab::error::Result<()> {
    let grid = euclidean_grid(32, 2)?;
    for f in [
        ScalarField::linear(&grid, &[3.0, -1.0])?,
        ScalarField::distance_to(&grid, 0)?,
        ScalarField::random_lipschitz(&grid, 8, 7),
    ] {
        show(&grid, &f)?;
    }
    let flake = snowflake(&euclidean_grid(201, 1)?, 0.5)?;
    show(&flake, &ScalarField::coordinate(&flake, 0)?)?;
    Ok(())
}
