//! Poincaré inequality estimates and the chain-of-balls oscillation bound.
//!
//! For a ball `B = B(x, r)` and probe `f` the tested ratio is
//!
//! ```text
//! ⨍_B |f − f_B| dμ  /  ( r · (⨍_{ΛB} g^p dμ)^{1/p} )
//! ```
//!
//! where `g` is the variation of `f` at the smallest nondegenerate ladder
//! radius of each point. The estimate `L̂` is the largest ratio over all
//! centers, ladder radii and probes, hence a lower bound for the true constant.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quasiconvex::{eps_graph, quasiconvexify, EpsGraph};
use crate::space::{Ball, MetricMeasureSpace, PointId, ScaleLadder};

/// `⨍_B |f − f_B| dμ` with mass-weighted mean `f_B`.
pub fn mean_oscillation(space: &MetricMeasureSpace, f: &ScalarField, ball: Ball) -> Result<f64> {
    f.check_on(space)?;
    space.check_point(ball.center)?;
    let pts = space.ball(ball.center, ball.radius)?;
    if pts.is_empty() {
        return Err(Error::input(format!(
            "ball ({}, {}) is empty",
            ball.center, ball.radius
        )));
    }
    Ok(oscillation_of(space, &f.values, pts.iter().copied()))
}

fn oscillation_of(space: &MetricMeasureSpace, v: &[f64], pts: impl Iterator<Item = PointId> + Clone) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut mass, mut sum) = (0.0, 0.0);
    for p in pts.clone() {
        lo = lo.min(v[p]);
        hi = hi.max(v[p]);
        mass += space.mass(p);
        sum += space.mass(p) * v[p];
    }
    if lo == hi {
        return 0.0;
    }
    let mean = sum / mass;
    pts.map(|p| space.mass(p) * (v[p] - mean).abs()).sum::<f64>() / mass
}

/// Per point, the smallest ladder radius whose ball holds another point and
/// the members of that ball.
#[derive(Debug, Clone)]
pub struct LipSurrogate {
    radius: Vec<Option<f64>>,
    balls: Vec<Vec<PointId>>,
}

impl LipSurrogate {
    pub fn new(space: &MetricMeasureSpace, ladder: &ScaleLadder) -> Self {
        let radii = ladder.ascending();
        let (radius, balls) = space
            .points()
            .into_par_iter()
            .map(|x| {
                let nearest = space
                    .points()
                    .filter(|&y| y != x)
                    .map(|y| space.dist(x, y))
                    .fold(f64::INFINITY, f64::min);
                match radii.iter().copied().find(|&r| r > nearest) {
                    Some(r) => (Some(r), space.neighborhood(x, r).entries.iter().map(|e| e.1).collect()),
                    None => (None, vec![x]),
                }
            })
            .unzip();
        LipSurrogate { radius, balls }
    }

    pub fn radius(&self, x: PointId) -> Option<f64> {
        self.radius[x]
    }

    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        ScalarField::from_fn(format!("lip~({})", f.label), f.len(), |x| match self.radius[x] {
            Some(r) => {
                let fx = f.values[x];
                self.balls[x]
                    .iter()
                    .map(|&y| (f.values[y] - fx).abs())
                    .fold(0.0, f64::max)
                    / r
            }
            None => 0.0,
        })
    }
}

/// Smallest-scale variation of `f` at each point (0 where every ladder ball
/// is a singleton).
pub fn discrete_lip_field(space: &MetricMeasureSpace, f: &ScalarField, ladder: &ScaleLadder) -> Result<ScalarField> {
    f.check_on(space)?;
    Ok(LipSurrogate::new(space, ladder).apply(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiOptions {
    pub p: f64,
    pub dilation: f64,
    /// Keep every `(ball, probe)` ratio in the report.
    pub keep_table: bool,
}

impl Default for PiOptions {
    fn default() -> Self {
        PiOptions {
            p: 1.0,
            dilation: 2.0,
            keep_table: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiRow {
    pub center: PointId,
    pub radius: f64,
    pub probe: usize,
    pub oscillation: f64,
    pub gradient_mean: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PiReport {
    pub p: f64,
    pub dilation: f64,
    pub constant_estimate: f64,
    pub worst_ball: Option<Ball>,
    pub worst_probe: Option<String>,
    pub probes: Vec<String>,
    pub balls_tested: usize,
    pub ratio_table: Vec<PiRow>,
}

/// `L̂` over every center, every ladder radius and every probe.
pub fn pi_constant_estimate(
    space: &MetricMeasureSpace,
    probes: &[ScalarField],
    ladder: &ScaleLadder,
    opts: &PiOptions,
) -> Result<PiReport> {
    let (p, dil) = (opts.p, opts.dilation);
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::input(format!("p must be ≥ 1, got {p}")));
    }
    if !(dil >= 1.0 && dil.is_finite()) {
        return Err(Error::input(format!("dilation must be ≥ 1, got {dil}")));
    }
    for f in probes {
        f.check_on(space)?;
    }
    let surrogate = LipSurrogate::new(space, ladder);
    let grads: Vec<Vec<f64>> = probes
        .iter()
        .map(|f| surrogate.apply(f).values.iter().map(|g| g.powf(p)).collect())
        .collect();
    let radii = ladder.ascending();
    let per_center: Vec<(Option<PiRow>, Vec<PiRow>)> = space
        .points()
        .into_par_iter()
        .map(|x| {
            let nb = space.neighborhood(x, f64::INFINITY);
            let ids: Vec<PointId> = nb.entries.iter().map(|e| e.1).collect();
            let mut pm = vec![0.0];
            for &y in &ids {
                pm.push(pm.last().unwrap() + space.mass(y));
            }
            let pg: Vec<Vec<f64>> = grads
                .iter()
                .map(|g| {
                    let mut acc = vec![0.0];
                    for &y in &ids {
                        acc.push(acc.last().unwrap() + space.mass(y) * g[y]);
                    }
                    acc
                })
                .collect();
            let mut best: Option<PiRow> = None;
            let mut rows = Vec::new();
            for &r in &radii {
                let k = nb.count_within(r);
                let kk = nb.count_within(dil * r);
                for (j, f) in probes.iter().enumerate() {
                    let osc = oscillation_of(space, &f.values, ids[..k].iter().copied());
                    let gm = (pg[j][kk] / pm[kk]).powf(1.0 / p);
                    let ratio = if osc == 0.0 {
                        0.0
                    } else if gm == 0.0 {
                        f64::INFINITY
                    } else {
                        osc / (r * gm)
                    };
                    let row = PiRow {
                        center: x,
                        radius: r,
                        probe: j,
                        oscillation: osc,
                        gradient_mean: gm,
                        ratio,
                    };
                    if best.is_none_or(|b| ratio > b.ratio) {
                        best = Some(row);
                    }
                    if opts.keep_table {
                        rows.push(row);
                    }
                }
            }
            (best, rows)
        })
        .collect();
    let mut worst: Option<PiRow> = None;
    let mut table = Vec::new();
    for (best, rows) in per_center {
        if let Some(b) = best {
            if worst.is_none_or(|w| b.ratio > w.ratio) {
                worst = Some(b);
            }
        }
        table.extend(rows);
    }
    Ok(PiReport {
        p,
        dilation: dil,
        constant_estimate: worst.map_or(0.0, |w| w.ratio),
        worst_ball: worst.map(|w| Ball::new(w.center, w.radius)),
        worst_probe: worst.map(|w| probes[w.probe].label.clone()),
        probes: probes.iter().map(|f| f.label.clone()).collect(),
        balls_tested: space.len() * radii.len(),
        ratio_table: table,
    })
}

/// Default probe family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeFamily {
    pub coordinates: bool,
    /// Distance fields `d(·, z)` for this many evenly strided `z`.
    pub distance_sources: usize,
    /// Seeded random 1-Lipschitz fields.
    pub random: usize,
    /// Component indicators around cut points of the finest ε-graph.
    pub cut_indicators: bool,
    pub seed: u64,
}

impl Default for ProbeFamily {
    fn default() -> Self {
        ProbeFamily {
            coordinates: true,
            distance_sources: 4,
            random: 4,
            cut_indicators: true,
            seed: 0,
        }
    }
}

/// Cut points examined per space.
const MAX_CUT_POINTS: usize = 16;

impl ProbeFamily {
    pub fn build(&self, space: &MetricMeasureSpace, ladder: &ScaleLadder) -> Result<Vec<ScalarField>> {
        let n = space.len();
        let mut out = Vec::new();
        if self.coordinates {
            if let Some(c) = space.coords() {
                for axis in 0..c.dim {
                    out.push(ScalarField::coordinate(space, axis)?);
                }
            }
        }
        for i in 0..self.distance_sources.min(n) {
            out.push(ScalarField::distance_to(space, i * n / self.distance_sources)?);
        }
        for i in 0..self.random {
            let seed = self.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            out.push(ScalarField::random_lipschitz(space, 8, seed));
        }
        if self.cut_indicators && n > 2 {
            out.extend(cut_indicators(space, ladder)?);
        }
        Ok(out)
    }
}

/// Scale of the finest ε-graph without isolated points: the smallest ladder
/// radius above every nearest-neighbor distance.
pub fn finest_connected_scale(space: &MetricMeasureSpace, ladder: &ScaleLadder) -> Option<f64> {
    let worst_nn = space
        .points()
        .into_par_iter()
        .map(|x| {
            space
                .points()
                .filter(|&y| y != x)
                .map(|y| space.dist(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    ladder.ascending().into_iter().find(|&r| r > worst_nn)
}

/// Articulation points of `graph`, ascending.
pub fn cut_points(graph: &EpsGraph) -> Vec<PointId> {
    let n = graph.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_cut = vec![false; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        let mut root_children = 0;
        // (vertex, parent, next neighbor index)
        let mut stack: Vec<(PointId, Option<PointId>, usize)> = vec![(root, None, 0)];
        while let Some(&mut (v, parent, ref mut idx)) = stack.last_mut() {
            let nb = graph.neighbors(v);
            if *idx < nb.len() {
                let w = nb[*idx].0;
                *idx += 1;
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((w, Some(v), 0));
                } else if Some(w) != parent {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(u) = parent {
                    low[u] = low[u].min(low[v]);
                    if u != root && low[v] >= disc[u] {
                        is_cut[u] = true;
                    }
                }
            }
        }
        if root_children > 1 {
            is_cut[root] = true;
        }
    }
    (0..n).filter(|&v| is_cut[v]).collect()
}

/// Components of `graph` with `z` removed, each sorted; ordered by smallest member.
fn components_without(graph: &EpsGraph, z: PointId) -> Vec<Vec<PointId>> {
    let n = graph.len();
    let mut seen = vec![false; n];
    seen[z] = true;
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            for &(w, _) in graph.neighbors(comp[i]) {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Indicators of the components of `X ∖ {z}` for cut points `z` of the
/// finest connected ε-graph (largest component omitted).
pub fn cut_indicators(space: &MetricMeasureSpace, ladder: &ScaleLadder) -> Result<Vec<ScalarField>> {
    let Some(eps) = finest_connected_scale(space, ladder) else {
        return Ok(Vec::new());
    };
    let graph = eps_graph(space, eps)?;
    let cuts = cut_points(&graph);
    let stride = cuts.len().div_ceil(MAX_CUT_POINTS).max(1);
    let mut out = Vec::new();
    for &z in cuts.iter().step_by(stride) {
        let comps = components_without(&graph, z);
        let largest = (0..comps.len())
            .max_by(|&a, &b| comps[a].len().cmp(&comps[b].len()).then(b.cmp(&a)))
            .unwrap_or(0);
        for (i, comp) in comps.iter().enumerate() {
            if i == largest {
                continue;
            }
            let mut v = vec![0.0; space.len()];
            for &y in comp {
                v[y] = 1.0;
            }
            out.push(ScalarField::new(format!("cut:{z}/{}", comp[0]), v));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub lambda: f64,
    /// `d(x, y)`.
    pub scale: f64,
    pub chain: Vec<PointId>,
    /// `|⨍_{B_{i+1}} f − ⨍_{B_i} f|` for consecutive chain balls.
    pub terms: Vec<f64>,
    /// `|f(x) − ⨍_{B_1} f|` and `|f(y) − ⨍_{B_k} f|`.
    pub endpoint_terms: (f64, f64),
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Chain `x = p_1, …, p_k = y` with steps `≤ λ r` (`r = d(x, y)`) and the
/// telescoping bound `|f(y) − f(x)| ≤ endpoint terms + Σ |f_{B_{i+1}} − f_{B_i}|`
/// for `B_i = B(p_i, λ r)`.
pub fn chain_oscillation_bound_check(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    x: PointId,
    y: PointId,
    lambda: f64,
    safety: f64,
) -> Result<ChainReport> {
    f.check_on(space)?;
    space.check_point(x)?;
    space.check_point(y)?;
    if !(lambda > 0.0) || !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::input(format!(
            "need λ > 0 and safety in (0, 1], got {lambda}, {safety}"
        )));
    }
    let r = space.dist(x, y);
    if r == 0.0 {
        return Err(Error::input("chain endpoints coincide"));
    }
    let step = lambda * r;
    let graph = eps_graph(space, step * safety)?;
    let path = quasiconvexify(space, &graph, x, y, 128)?.path.vertices;
    // thin to a chain with the fewest steps ≤ λr along the path; among
    // equally short chains each step goes as far as possible
    let k = path.len();
    let mut hops = vec![usize::MAX; k];
    hops[k - 1] = 0;
    for i in (0..k - 1).rev() {
        for j in i + 1..k {
            if space.dist(path[i], path[j]) <= step && hops[j] != usize::MAX {
                hops[i] = hops[i].min(hops[j] + 1);
            }
        }
    }
    let mut chain = vec![path[0]];
    let mut i = 0;
    while i + 1 < k {
        i = (i + 1..k)
            .rev()
            .find(|&j| hops[j] + 1 == hops[i] && space.dist(path[i], path[j]) <= step)
            .unwrap_or(i + 1);
        chain.push(path[i]);
    }
    let avg = |c: PointId| -> f64 {
        let pts = space.ball(c, step).unwrap_or_default();
        let m: f64 = pts.iter().map(|&p| space.mass(p)).sum();
        pts.iter().map(|&p| space.mass(p) * f.values[p]).sum::<f64>() / m
    };
    let avgs: Vec<f64> = chain.iter().map(|&c| avg(c)).collect();
    let terms: Vec<f64> = avgs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let endpoint_terms = (
        (f.values[x] - avgs[0]).abs(),
        (f.values[y] - avgs[avgs.len() - 1]).abs(),
    );
    let lhs = (f.values[y] - f.values[x]).abs();
    let rhs = endpoint_terms.0 + terms.iter().sum::<f64>() + endpoint_terms.1;
    let holds = lhs <= rhs + 1e-12 * rhs.max(lhs).max(1.0);
    Ok(ChainReport {
        lambda,
        scale: r,
        chain,
        terms,
        endpoint_terms,
        lhs,
        rhs,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cusp_pair, euclidean_grid};
    use crate::lipschitz::global_lip;
    use crate::space::LadderParams;

    fn ladder(s: &MetricMeasureSpace) -> ScaleLadder {
        ScaleLadder::for_space(s, &LadderParams::default()).unwrap()
    }

    #[test]
    fn oscillation_examples() {
        let s = euclidean_grid(9, 2).unwrap();
        let ball = Ball::new(40, 0.3);
        assert_eq!(mean_oscillation(&s, &ScalarField::constant(&s, 4.0), ball).unwrap(), 0.0);

        let line = euclidean_grid(4, 1).unwrap();
        let half = ScalarField::new("half", vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(mean_oscillation(&line, &half, Ball::new(0, 2.0)).unwrap(), 0.5);

        // f = t on a symmetric ball of radius r
        let fine = euclidean_grid(2001, 1).unwrap();
        let t = ScalarField::coordinate(&fine, 0).unwrap();
        let h = 1.0 / 2000.0;
        let r = 0.1 + h / 2.0;
        let got = mean_oscillation(&fine, &t, Ball::new(1000, r)).unwrap();
        // oracle: exact finite sum over the 2k+1 lattice points
        let k = 200;
        let want: f64 = (-k..=k).map(|i| (i as f64 * h).abs()).sum::<f64>() / (2 * k + 1) as f64;
        assert!((got - want).abs() < 1e-12);
        assert!((got - r / 2.0).abs() < 1e-3);
        assert!(mean_oscillation(&fine, &t, Ball::new(0, 0.0)).is_err());
    }

    #[test]
    fn lip_surrogate_examples() {
        let s = euclidean_grid(21, 1).unwrap();
        let t = ScalarField::coordinate(&s, 0).unwrap();
        let g = discrete_lip_field(&s, &t, &ladder(&s)).unwrap();
        for x in 1..20 {
            assert!((g.values[x] - 1.0 / 1.5).abs() < 1e-12);
        }
        let g = discrete_lip_field(&s, &ScalarField::constant(&s, 1.0), &ladder(&s)).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));

        let sq = euclidean_grid(11, 2).unwrap();
        let f = ScalarField::linear(&sq, &[3.0, -1.0]).unwrap();
        let g = discrete_lip_field(&sq, &f, &ladder(&sq)).unwrap();
        // oracle: max |3dx − dy| over the 8 lattice neighbors, over r = 1.5h
        assert!((g.values[60] - 4.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_probe_gives_zero() {
        let s = euclidean_grid(8, 2).unwrap();
        let rep = pi_constant_estimate(&s, &[ScalarField::constant(&s, 1.0)], &ladder(&s), &PiOptions::default()).unwrap();
        assert_eq!(rep.constant_estimate, 0.0);
    }

    #[test]
    fn oscillation_bounded_by_twice_lip_r() {
        let s = euclidean_grid(12, 2).unwrap();
        let f = ScalarField::random_lipschitz(&s, 6, 4);
        let lip = global_lip(&s, &f).unwrap();
        for r in ladder(&s).radii {
            for x in s.points() {
                assert!(mean_oscillation(&s, &f, Ball::new(x, r)).unwrap() <= 2.0 * lip * r);
            }
        }
    }

    #[test]
    fn estimate_is_scale_invariant() {
        let s = euclidean_grid(10, 2).unwrap();
        let l = ladder(&s);
        let probes = ProbeFamily::default().build(&s, &l).unwrap();
        let a = pi_constant_estimate(&s, &probes, &l, &PiOptions::default()).unwrap();
        let s2 = s.scaled(2.0).unwrap();
        let l2 = ScaleLadder::for_space(&s2, &LadderParams::default()).unwrap();
        assert_eq!(l2.radii, l.radii.iter().map(|r| 2.0 * r).collect::<Vec<_>>());
        let b = pi_constant_estimate(&s2, &probes, &l2, &PiOptions::default()).unwrap();
        assert_eq!(a.constant_estimate, b.constant_estimate);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let s = euclidean_grid(7, 2).unwrap();
        let l = ladder(&s);
        let f = ScalarField::linear(&s, &[1.0, 2.0]).unwrap();
        let opts = PiOptions {
            keep_table: true,
            ..PiOptions::default()
        };
        let rep = pi_constant_estimate(&s, std::slice::from_ref(&f), &l, &opts).unwrap();
        let g = discrete_lip_field(&s, &f, &l).unwrap();
        for row in rep.ratio_table.iter().step_by(7) {
            let osc = mean_oscillation(&s, &f, Ball::new(row.center, row.radius)).unwrap();
            let big = s.ball(row.center, 2.0 * row.radius).unwrap();
            let gm = big.iter().map(|&y| g.values[y]).sum::<f64>() / big.len() as f64;
            assert!((row.oscillation - osc).abs() < 1e-12);
            assert!((row.gradient_mean - gm).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_has_no_cut_points_but_cusp_does() {
        let s = euclidean_grid(8, 2).unwrap();
        assert!(cut_indicators(&s, &ladder(&s)).unwrap().is_empty());
        let c = cusp_pair(6).unwrap();
        let probes = cut_indicators(&c, &ladder(&c)).unwrap();
        assert_eq!(probes.len(), 1);
        assert_eq!(probes[0].values.iter().filter(|&&v| v == 1.0).count(), 35);
    }

    #[test]
    fn cut_points_of_a_path() {
        let s = euclidean_grid(5, 1).unwrap();
        let g = eps_graph(&s, 0.3).unwrap();
        assert_eq!(cut_points(&g), vec![1, 2, 3]);
    }

    #[test]
    fn grid_estimate_is_finite_and_cusp_is_larger() {
        let s = euclidean_grid(12, 2).unwrap();
        let l = ladder(&s);
        let a = pi_constant_estimate(&s, &ProbeFamily::default().build(&s, &l).unwrap(), &l, &PiOptions::default())
            .unwrap();
        assert!(a.constant_estimate.is_finite() && a.constant_estimate > 0.0);
        let c = cusp_pair(12).unwrap();
        let lc = ladder(&c);
        let b = pi_constant_estimate(&c, &ProbeFamily::default().build(&c, &lc).unwrap(), &lc, &PiOptions::default())
            .unwrap();
        assert!(b.constant_estimate > a.constant_estimate);
    }

    #[test]
    fn chain_examples() {
        let s = euclidean_grid(401, 1).unwrap();
        let t = ScalarField::coordinate(&s, 0).unwrap();
        let rep = chain_oscillation_bound_check(&s, &t, 0, 400, 0.25, 0.015).unwrap();
        assert!(rep.holds);
        assert!((4..=6).contains(&rep.chain.len()), "{:?}", rep.chain);
        for w in rep.chain.windows(2) {
            assert!(s.dist(w[0], w[1]) <= 0.25);
        }
        for &term in &rep.terms[1..rep.terms.len() - 1] {
            assert!((term - 0.25).abs() < 0.01, "{:?}", rep.terms);
        }

        let c = ScalarField::constant(&s, 2.0);
        let rep = chain_oscillation_bound_check(&s, &c, 3, 300, 0.25, 1.0).unwrap();
        assert!(rep.terms.iter().all(|&t| t == 0.0));

        let sq = euclidean_grid(20, 2).unwrap();
        let f = ScalarField::linear(&sq, &[3.0, -1.0]).unwrap();
        let rep = chain_oscillation_bound_check(&sq, &f, 0, 399, 0.2, 1.0).unwrap();
        assert!(rep.holds);
    }
}
