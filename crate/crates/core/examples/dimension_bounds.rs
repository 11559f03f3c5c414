//! Net cardinalities against (16K)^{log2 C}, span ranks on nets, and the
//! restriction argument for combinations vanishing on a net.

use mmslab::field::ScalarField;
use mmslab::generators::{corpus, generate};
use mmslab::quasilinear::{net_restriction_bound, span_rank_on_net};
use mmslab::space::{greedy_separated_net, metric_doubling_constant, Ball, DoublingOptions, LadderParams, ScaleLadder};

fn main() -> mmslab::error::Result<()> {
    for spec in corpus(1200) {
        let s = generate(&spec)?;
        let ladder = ScaleLadder::for_space(&s, &LadderParams::default())?;
        let c = metric_doubling_constant(&s, &ladder, &DoublingOptions::default());
        let ball = Ball::new(s.len() / 2, s.diameter() / 2.0);
        let fields: Vec<ScalarField> = (0..6).map(|i| ScalarField::random_lipschitz(&s, 8, i)).collect();
        print!("{:<58} C = {c:>3.0}", s.label());
        for k in [1.0, 2.0, 4.0] {
            let spacing = ball.radius / (4.0 * k);
            let net = greedy_separated_net(&s, ball, spacing)?;
            let rank = span_rank_on_net(&s, &fields, ball, spacing)?;
            print!(
                "  K={k}: |net| {:>4} <= {:.0}, rank {}",
                net.members.len(),
                (16.0 * k).powf(c.log2()),
                rank.rank
            );
        }
        let net = greedy_separated_net(&s, ball, ball.radius / 4.0)?;
        let rep = net_restriction_bound(&s, &net, &fields, 4, 0)?;
        let ok = rep.checks.iter().all(|c| c.quotient_ok && c.vanishing_bound_ok != Some(false));
        println!("  restriction ok: {ok}");
    }
    Ok(())
}
