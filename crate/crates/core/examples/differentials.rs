//! Minimax differentials and first-order dependence on grids.

use mmslab::differentiation::{
    differential_field, independence_set, solve_differential, CoordinateTuple, RadiusRule, SeminormScales,
};
use mmslab::field::ScalarField;
use mmslab::generators::euclidean_grid;
use mmslab::space::{LadderParams, ScaleLadder};

fn main() -> mmslab::error::Result<()> {
    let grid = euclidean_grid(32, 2)?;
    let ladder = ScaleLadder::for_space(&grid, &LadderParams::default())?;
    let x = ScalarField::coordinate(&grid, 0)?;
    let y = ScalarField::coordinate(&grid, 1)?;
    let xy = CoordinateTuple::new(vec![x.clone(), y.clone()])?;

    let f = ScalarField::linear(&grid, &[3.0, -1.0])?;
    let all: Vec<usize> = grid.points().collect();
    let field = differential_field(&grid, &f, &xy, &all, &ladder, RadiusRule::default(), 0.05)?;
    let worst = field.points.iter().map(|d| d.residual).fold(0.0, f64::max);
    println!("3x - y: df at 500 = {:?}, max residual {worst:.2e}", field.points[500].df);

    let corner = ScalarField::new("max(x,y)", x.values.iter().zip(&y.values).map(|(a, b)| a.max(*b)).collect());
    let field = differential_field(&grid, &corner, &xy, &all, &ladder, RadiusRule::default(), 0.05)?;
    println!(
        "max(x,y): residual <= 5% of LIP on {:.3} of the mass, df change across radii {:.3}",
        field.summary.good_mass_fraction, field.summary.max_df_change
    );

    let line = euclidean_grid(1001, 1)?;
    let t = ScalarField::coordinate(&line, 0)?;
    let sq = t.map("t^2", |v| v * v);
    let d = solve_differential(&line, &sq, &CoordinateTuple::new(vec![t])?, 500, 0.05)?;
    println!("t^2 at 0.5, radius 0.05: df = {:.6}, residual {:.6}", d.df[0], d.residual);

    let window = ladder.default_window();
    for tuple in [vec![x.clone(), y.clone()], vec![x.clone(), y.clone(), x.add(&y)]] {
        let tuple = CoordinateTuple::new(tuple)?;
        let ind = independence_set(&grid, &tuple, SeminormScales::new(&ladder, &window), 0.2, None)?;
        let c = &ind.certificates[500];
        println!(
            "{:?}: independent mass {:.3}, certificate at 500 {:?} (seminorm {:.2e})",
            tuple.labels(),
            ind.mass_fraction,
            c.lambda,
            c.seminorm
        );
    }
    Ok(())
}
