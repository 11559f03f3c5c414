//! Quasilinearity constants and net-based dimension bounds.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lipschitz::global_lip_unchecked;
use crate::space::{greedy_net_of, Ball, MetricMeasureSpace, Net, ScaleLadder};

/// Relative singular value cutoff for numeric rank.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct QuasilinearityReport {
    pub global_lip: f64,
    pub min_variation: f64,
    /// `global_lip / min_variation`; 1 when `f` is constant, `∞` when some
    /// tested ball sees no variation.
    pub constant: f64,
    pub witness_ball: Option<Ball>,
    pub balls_tested: usize,
}

/// All `(center, ladder radius)` balls holding at least two points.
pub fn default_ball_family(space: &MetricMeasureSpace, ladder: &ScaleLadder) -> Vec<Ball> {
    let radii = ladder.ascending();
    space
        .points()
        .into_par_iter()
        .flat_map_iter(|x| {
            let top = radii.last().copied().unwrap_or(0.0);
            let nb = space.neighborhood(x, top);
            radii
                .iter()
                .filter(|&&r| nb.count_within(r) >= 2)
                .map(|&r| Ball::new(x, r))
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn quasilinearity_constant(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    family: &[Ball],
) -> Result<QuasilinearityReport> {
    f.check_on(space)?;
    if family.is_empty() {
        return Err(Error::input("ball family is empty"));
    }
    for b in family {
        space.check_point(b.center)?;
        if !(b.radius > 0.0) {
            return Err(Error::input(format!("ball radius must be > 0, got {}", b.radius)));
        }
    }
    let lip = global_lip_unchecked(space, &f.values);
    let vars: Vec<f64> = family
        .par_iter()
        .map(|b| {
            let fx = f.values[b.center];
            space
                .neighborhood(b.center, b.radius)
                .entries
                .iter()
                .map(|&(_, y)| (f.values[y] - fx).abs())
                .fold(0.0, f64::max)
                / b.radius
        })
        .collect();
    let (mut at, mut min_var) = (0, f64::INFINITY);
    for (i, &v) in vars.iter().enumerate() {
        if v < min_var {
            min_var = v;
            at = i;
        }
    }
    let constant = if lip == 0.0 {
        1.0
    } else if min_var == 0.0 {
        f64::INFINITY
    } else {
        lip / min_var
    };
    Ok(QuasilinearityReport {
        global_lip: lip,
        min_variation: min_var,
        constant,
        witness_ball: Some(family[at]),
        balls_tested: family.len(),
    })
}

/// `⌈(16K)^{log₂ C}⌉`, saturating at `u64::MAX`.
pub fn dimension_bound(k: f64, c: f64) -> Result<u64> {
    if !(k >= 1.0) || !(c >= 1.0) {
        return Err(Error::input(format!("need K ≥ 1 and C ≥ 1, got K = {k}, C = {c}")));
    }
    let v = (16.0 * k).powf(c.log2());
    let near = v.round();
    let v = if (v - near).abs() <= 1e-9 * near.max(1.0) { near } else { v.ceil() };
    Ok(if v >= u64::MAX as f64 { u64::MAX } else { v as u64 })
}

/// Per test function, the restriction argument on one net.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionCheck {
    pub label: String,
    pub global_lip: f64,
    /// `max_{x ∈ ball} |u(x)|`.
    pub sup_ball: f64,
    /// `max_{t ∈ net} |u(t)|`.
    pub sup_net: f64,
    /// `|u(x) − u(t(x))| / d(x, t(x)) ≤ LIP(u)` for every ball point off the net.
    pub quotient_ok: bool,
    pub vanishes_on_net: bool,
    /// For `u` vanishing on the net: `sup_ball / spacing ≤ LIP(u)`.
    pub vanishing_bound_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetRestrictionReport {
    pub ball: Ball,
    pub spacing: f64,
    pub net_size: usize,
    /// Largest distance from a ball point to its nearest net member.
    pub cover_radius: f64,
    pub checks: Vec<RestrictionCheck>,
}

/// Check `|u(x) − u(t(x))| ≤ LIP(u) d(x, t(x))` for the basis fields, a
/// few seeded random combinations and every combination that vanishes on
/// the net (numerical null space of the restriction matrix).
pub fn net_restriction_bound(
    space: &MetricMeasureSpace,
    net: &Net,
    basis: &[ScalarField],
    random_combinations: usize,
    seed: u64,
) -> Result<NetRestrictionReport> {
    let ball = net.region;
    let pts = space.ball(ball.center, ball.radius)?;
    for &m in &net.members {
        if pts.binary_search(&m).is_err() {
            return Err(Error::input(format!("net member {m} lies outside the ball")));
        }
    }
    if net.members.is_empty() {
        return Err(Error::input("net is empty"));
    }
    for f in basis {
        f.check_on(space)?;
    }
    let nearest: Vec<(usize, f64)> = pts
        .iter()
        .map(|&x| {
            net.members
                .iter()
                .map(|&t| (t, space.dist(x, t)))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
        })
        .collect();
    let cover_radius = nearest.iter().map(|e| e.1).fold(0.0, f64::max);

    let mut tests: Vec<ScalarField> = basis.to_vec();
    let refs: Vec<&ScalarField> = basis.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random_combinations {
        let coeffs: Vec<f64> = basis.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut u = ScalarField::combination(&refs, &coeffs);
        u.label = format!("combination:{i}");
        tests.push(u);
    }
    if !basis.is_empty() {
        // zero rows keep V^T square, so every null direction comes out
        let m = restriction_matrix(&net.members, basis);
        let rows = m.nrows().max(m.ncols());
        let m = m.resize_vertically(rows, 0.0);
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count();
        for (i, row) in v_t.row_iter().enumerate().skip(rank) {
            let coeffs: Vec<f64> = row.iter().copied().collect();
            let mut u = ScalarField::combination(&refs, &coeffs);
            u.label = format!("null:{i}");
            tests.push(u);
        }
    }

    let checks = tests
        .par_iter()
        .map(|u| {
            let lip = global_lip_unchecked(space, &u.values);
            let sup_ball = pts.iter().map(|&x| u.values[x].abs()).fold(0.0, f64::max);
            let sup_net = net.members.iter().map(|&t| u.values[t].abs()).fold(0.0, f64::max);
            let quotient_ok = pts.iter().zip(&nearest).all(|(&x, &(t, d))| {
                d == 0.0 || (u.values[x] - u.values[t]).abs() / d <= lip
            });
            let scale = u.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let vanishes = sup_net <= 1e-12 * scale.max(f64::MIN_POSITIVE);
            RestrictionCheck {
                label: u.label.clone(),
                global_lip: lip,
                sup_ball,
                sup_net,
                quotient_ok,
                vanishes_on_net: vanishes,
                vanishing_bound_ok: vanishes.then(|| sup_ball / net.spacing <= lip),
            }
        })
        .collect();
    Ok(NetRestrictionReport {
        ball,
        spacing: net.spacing,
        net_size: net.members.len(),
        cover_radius,
        checks,
    })
}

fn restriction_matrix(net: &[usize], fields: &[ScalarField]) -> DMatrix<f64> {
    DMatrix::from_fn(net.len(), fields.len(), |i, j| fields[j].values[net[i]])
}

/// Numeric rank of `[field_j(t_i)]` on a greedy net.
#[derive(Debug, Clone, Serialize)]
pub struct SpanRank {
    pub rank: usize,
    pub net_size: usize,
    pub singular_values: Vec<f64>,
}

impl SpanRank {
    /// Rank under a different relative cutoff.
    pub fn rank_at(&self, tol: f64) -> usize {
        let smax = self.singular_values.iter().copied().fold(0.0, f64::max);
        if smax > 0.0 {
            self.singular_values.iter().filter(|&&s| s > tol * smax).count()
        } else {
            0
        }
    }
}

pub fn span_rank_on_net(
    space: &MetricMeasureSpace,
    fields: &[ScalarField],
    ball: Ball,
    c: f64,
) -> Result<SpanRank> {
    if !(c > 0.0) {
        return Err(Error::input(format!("net spacing must be > 0, got {c}")));
    }
    space.check_point(ball.center)?;
    for f in fields {
        f.check_on(space)?;
    }
    let pts = space.ball(ball.center, ball.radius)?;
    if pts.is_empty() {
        return Err(Error::input("ball is empty"));
    }
    let net = greedy_net_of(space, &pts, c);
    Ok(span_rank_on_points(&net, fields))
}

pub fn span_rank_on_points(net: &[usize], fields: &[ScalarField]) -> SpanRank {
    if fields.is_empty() {
        return SpanRank {
            rank: 0,
            net_size: net.len(),
            singular_values: Vec::new(),
        };
    }
    let sv = restriction_matrix(net, fields).singular_values();
    let smax = sv.max();
    SpanRank {
        rank: if smax > 0.0 { sv.iter().filter(|&&s| s > RANK_TOL * smax).count() } else { 0 },
        net_size: net.len(),
        singular_values: sv.iter().copied().collect(),
    }
}
