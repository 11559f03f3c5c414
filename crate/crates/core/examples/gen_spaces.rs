//! Tour of the generated corpus: size, diameter, doubling constants, and
//! the volume growth of the Heisenberg word ball.

use mmslab::generators::{corpus, generate, heisenberg_word_lengths};
use mmslab::space::{measure_doubling_constant, metric_doubling_constant, DoublingOptions, LadderParams, ScaleLadder};

fn main() -> mmslab::error::Result<()> {
    println!("{:<58} {:>5} {:>8} {:>6} {:>6}", "space", "n", "diam", "C_mu", "C_met");
    for spec in corpus(2500) {
        let s = generate(&spec)?;
        let ladder = ScaleLadder::for_space(&s, &LadderParams::default())?;
        let opts = DoublingOptions {
            exclude_below: Some(4.0 * ladder.floor),
        };
        println!(
            "{:<58} {:>5} {:>8.4} {:>6.2} {:>6.0}",
            s.label(),
            s.len(),
            s.diameter(),
            measure_doubling_constant(&s, &ladder, &opts),
            metric_doubling_constant(&s, &ladder, &opts),
        );
    }

    // word-ball sizes |B(r)| grow like r^4
    let lengths = heisenberg_word_lengths(8);
    let ball = |r: usize| lengths.values().filter(|&&l| l <= r).count();
    for r in [2, 4, 8] {
        println!("heisenberg |B({r})| = {}", ball(r));
    }
    println!("log2 |B(8)|/|B(4)| = {:.3}", (ball(8) as f64 / ball(4) as f64).log2());
    Ok(())
}
