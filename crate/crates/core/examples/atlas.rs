//! Greedy atlases: one plane patch on a grid, and two patches of different
//! dimensions on a segment glued to a square.

use mmslab::atlas::{build_structure, AtlasOptions};
use mmslab::field::ScalarField;
use mmslab::generators::{euclidean_grid, glue};
use mmslab::space::{LadderParams, MetricMeasureSpace, ScaleLadder};

fn show(space: &MetricMeasureSpace, dict: &[ScalarField]) -> mmslab::error::Result<()> {
    let ladder = ScaleLadder::for_space(space, &LadderParams::default())?;
    let atlas = build_structure(space, dict, &ladder, &AtlasOptions::default())?;
    atlas.verify(space)?;
    println!("{}", space.label());
    for p in &atlas.patches {
        println!(
            "  patch dim {} coords {:?}: {:.1}% of the mass",
            p.dimension,
            p.coords,
            100.0 * p.mass / atlas.total_mass
        );
    }
    println!(
        "  uncovered {:.1}%, stall: {}",
        100.0 * atlas.uncovered_mass / atlas.total_mass,
        atlas.stall.as_deref().unwrap_or("none")
    );
    Ok(())
}

fn main() -> mmslab::error::Result<()> {
    let grid = euclidean_grid(32, 2)?;
    let x = ScalarField::coordinate(&grid, 0)?;
    let y = ScalarField::coordinate(&grid, 1)?;
    show(&grid, &[x.clone(), y.clone(), x.add(&y), ScalarField::distance_to(&grid, 0)?])?;

    let glued = glue(&euclidean_grid(33, 1)?.scaled(2.0)?, &euclidean_grid(17, 2)?, &[(0, 0)])?;
    let dict: Vec<ScalarField> = (0..3).map(|a| ScalarField::coordinate(&glued, a)).collect::<Result<_, _>>()?;
    show(&glued, &dict)
}
