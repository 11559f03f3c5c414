//! Blow-ups of t² at t = 0.5: rescaled views flatten to the line, the
//! tangent slope tends to 1, and views at nearby scales are close.

use mmslab::blowup::{net_distortion, rescale, tangent_function, var_sandwich_check, view_lip};
use mmslab::field::ScalarField;
use mmslab::generators::euclidean_grid;
use mmslab::space::{LadderParams, ScaleLadder};

fn main() -> mmslab::error::Result<()> {
    let line = euclidean_grid(4001, 1)?;
    let sq = ScalarField::coordinate(&line, 0)?.map("t^2", |t| t * t);
    let x = 2000;
    let mut prev = None;
    for r in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        let view = rescale(&line, x, r, 1.0)?;
        let g = tangent_function(&view, &sq)?;
        let dist = prev.as_ref().map(|p| net_distortion(p, &view, 0.1)).transpose()?;
        println!(
            "r = {r:<7} {:>4} points  view LIP {:.4}  distortion to previous {}",
            view.len(),
            view_lip(&view, &g),
            dist.map_or("-".to_string(), |d| format!("{d:.4}"))
        );
        prev = Some(view);
    }

    let grid = euclidean_grid(64, 2)?;
    let ladder = ScaleLadder::for_space(&grid, &LadderParams::default())?;
    let f = ScalarField::random_lipschitz(&grid, 8, 3);
    let rep = var_sandwich_check(&grid, &f, 32 * 64 + 32, &ladder, &ladder.default_window(), &[0.5, 1.0, 2.0])?;
    println!(
        "sandwich at grid center: lip {:.4} Lip {:.4} holds {} rescaling error {:.1e}",
        rep.lip, rep.lip_upper, rep.holds, rep.rescaling_error
    );
    for e in rep.entries.iter().filter(|e| e.radius == 1.0) {
        println!("  r = {:.5}  var = {:.4}", e.scale, e.var);
    }
    Ok(())
}
