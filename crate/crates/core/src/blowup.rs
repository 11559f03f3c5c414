//! Finite blow-ups: pointed rescaled views, tangent functions and the
//! variation sandwich.
//!
//! A view of `(X, x)` at scale `r_k` and radius `R` is the ball
//! `B(x, R·r_k)` with metric `d / r_k`. Views are kept lazy (member ids plus
//! the scale) and only materialized as a dense space on request.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::generators::MAX_DENSE_POINTS;
use crate::lipschitz::{restricted_lip, LocalScales};
use crate::quasilinear::{default_ball_family, quasilinearity_constant};
use crate::space::{Coords, LadderParams, Metric, MetricMeasureSpace, PointId, ScaleLadder, ScaleWindow};

/// `(B(x, R·r_k), d / r_k, x)` with masses normalized to total 1.
#[derive(Debug, Clone)]
pub struct PointedRescaling<'a> {
    space: &'a MetricMeasureSpace,
    pub base: PointId,
    pub scale: f64,
    pub radius: f64,
    /// Original ids, ascending.
    pub members: Vec<PointId>,
    /// Position of `base` in `members`.
    pub base_index: usize,
}

impl<'a> PointedRescaling<'a> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// View distance between members `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(self.members[i], self.members[j]) / self.scale
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.space.mass(self.members[i]) / self.space.mass_of(&self.members)
    }

    /// Dense copy of the view. Chart coordinates, when present, are moved to
    /// the base and divided by the scale.
    pub fn to_space(&self) -> Result<MetricMeasureSpace> {
        let n = self.len();
        if n > MAX_DENSE_POINTS {
            return Err(Error::input(format!(
                "view has {n} points, more than {MAX_DENSE_POINTS} can be materialized"
            )));
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        let total = self.space.mass_of(&self.members);
        let mass = self.members.iter().map(|&p| self.space.mass(p) / total).collect();
        let coords = self.space.coords().map(|c| {
            let o = c.point(self.base);
            Coords {
                dim: c.dim,
                data: self
                    .members
                    .iter()
                    .flat_map(|&p| c.point(p).iter().zip(o).map(|(a, b)| (a - b) / self.scale))
                    .collect(),
            }
        });
        Ok(MetricMeasureSpace::from_parts(
            Metric::Dense { n, data },
            mass,
            format!("view({},x={},r={},R={})", self.space.label(), self.base, self.scale, self.radius),
        )
        .with_step(self.space.step().map(|h| h / self.scale))
        .with_coords(coords))
    }

    /// `var` of `values` (indexed like `members`) at the base, view radius `rho`.
    pub fn variation(&self, values: &[f64], rho: f64) -> f64 {
        let v0 = values[self.base_index];
        (0..self.len())
            .filter(|&i| self.dist(self.base_index, i) < rho)
            .map(|i| (values[i] - v0).abs())
            .fold(0.0, f64::max)
            / rho
    }
}

pub fn rescale(space: &MetricMeasureSpace, x: PointId, r_k: f64, radius: f64) -> Result<PointedRescaling<'_>> {
    space.check_point(x)?;
    if !(r_k > 0.0 && r_k.is_finite()) {
        return Err(Error::input(format!("rescaling scale must be > 0, got {r_k}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input(format!("view radius must be > 0, got {radius}")));
    }
    let members = space.ball(x, radius * r_k)?;
    let base_index = members
        .binary_search(&x)
        .map_err(|_| Error::input(format!("view ball around {x} is empty")))?;
    Ok(PointedRescaling {
        space,
        base: x,
        scale: r_k,
        radius,
        members,
        base_index,
    })
}

/// `(f(y) − f(x)) / r_k` on the view.
pub fn tangent_function(view: &PointedRescaling<'_>, f: &ScalarField) -> Result<ScalarField> {
    f.check_on(view.space)?;
    let fx = f.values[view.base];
    Ok(ScalarField::new(
        format!("tangent({},r={})", f.label, view.scale),
        view.members.iter().map(|&y| (f.values[y] - fx) / view.scale).collect(),
    ))
}

/// Largest pairwise `|Δg| / d` on the view.
pub fn view_lip(view: &PointedRescaling<'_>, g: &ScalarField) -> f64 {
    let n = view.len();
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max((g.values[i] - g.values[j]).abs() / view.dist(i, j));
        }
    }
    best
}

/// `LIP` of `f` restricted to the view's ball, in original units.
pub fn ball_lip(view: &PointedRescaling<'_>, f: &ScalarField) -> f64 {
    restricted_lip(view.space, &f.values, &view.members)
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichEntry {
    pub scale: f64,
    pub radius: f64,
    /// Variation in the view at radius `R`.
    pub view_var: f64,
    /// Variation in the original space at radius `R·r_k`.
    pub var: f64,
    /// `R·r_k` is one of the window radii.
    pub in_window: bool,
    /// Amount by which `var` leaves `[lip, Lip]`; 0 inside.
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub point: PointId,
    pub lip: f64,
    pub lip_upper: f64,
    pub entries: Vec<SandwichEntry>,
    /// Every in-window entry lies in `[lip, Lip]`, exact.
    pub holds: bool,
    /// Largest `|view_var − var|`, relative to `max(1, |var|)`.
    pub rescaling_error: f64,
}

/// Compare `var_{x, R·r_k} f` against the window's `lip_x f` and `Lip_x f`
/// for every window scale `r_k` and every `R` in `radii`.
pub fn var_sandwich_check(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    x: PointId,
    ladder: &ScaleLadder,
    window: &ScaleWindow,
    radii: &[f64],
) -> Result<SandwichReport> {
    f.check_on(space)?;
    space.check_point(x)?;
    let scales = ladder.window_radii(window);
    if scales.is_empty() {
        return Err(Error::input("scale window holds no ladder radius"));
    }
    let local = LocalScales::with_radii(space, scales.clone());
    let pw = local.pointwise(&f.values, x);
    let top = scales.last().copied().unwrap_or(0.0) * radii.iter().copied().fold(0.0, f64::max);
    let nb = space.neighborhood(x, top);
    let fx = f.values[x];
    let mut entries = Vec::with_capacity(scales.len() * radii.len());
    let mut rescaling_error = 0.0_f64;
    for &r in &scales {
        for &big_r in radii {
            let view = rescale(space, x, r, big_r)?;
            let g = tangent_function(&view, f)?;
            let view_var = view.variation(&g.values, big_r);
            let rho = big_r * r;
            let var = nb.within(rho).iter().map(|&(_, y)| (f.values[y] - fx).abs()).fold(0.0, f64::max) / rho;
            rescaling_error = rescaling_error.max((view_var - var).abs() / var.abs().max(1.0));
            let in_window = scales.contains(&rho) && nb.count_within(rho) > 1;
            let excess = (pw.lower - var).max(var - pw.upper).max(0.0);
            entries.push(SandwichEntry {
                scale: r,
                radius: big_r,
                view_var,
                var,
                in_window,
                excess,
            });
        }
    }
    Ok(SandwichReport {
        point: x,
        lip: pw.lower,
        lip_upper: pw.upper,
        holds: entries.iter().filter(|e| e.in_window).all(|e| e.excess == 0.0),
        entries,
        rescaling_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsGoodEntry {
    pub point: PointId,
    pub scale: f64,
    pub var: f64,
    pub good: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsGoodReport {
    pub k: f64,
    pub eps: f64,
    pub entries: Vec<EpsGoodEntry>,
    /// Mass fraction of `points` good at every scale.
    pub good_mass_fraction: f64,
}

/// `(x, r)` is good when `Lip_x/K − ε ≤ lip_x − ε ≤ var_{x,R·r} ≤ Lip_x + ε`
/// for every `R` in `radii`.
#[allow(clippy::too_many_arguments)]
pub fn eps_good(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    points: &[PointId],
    ladder: &ScaleLadder,
    window: &ScaleWindow,
    radii: &[f64],
    k: f64,
    eps: f64,
) -> Result<EpsGoodReport> {
    if !(k >= 1.0) || !(eps >= 0.0) {
        return Err(Error::input(format!("need K ≥ 1 and ε ≥ 0, got K = {k}, ε = {eps}")));
    }
    let mut entries = Vec::new();
    let mut good_mass = 0.0;
    for &x in points {
        let rep = var_sandwich_check(space, f, x, ladder, window, radii)?;
        let ll = rep.lip_upper / k <= rep.lip;
        let mut all = true;
        for scale in ladder.window_radii(window) {
            let vars: Vec<f64> = rep.entries.iter().filter(|e| e.scale == scale).map(|e| e.var).collect();
            let good = ll && vars.iter().all(|&v| rep.lip - eps <= v && v <= rep.lip_upper + eps);
            all &= good;
            entries.push(EpsGoodEntry {
                point: x,
                scale,
                var: vars.iter().copied().fold(0.0, f64::max),
                good,
            });
        }
        if all {
            good_mass += space.mass(x);
        }
    }
    Ok(EpsGoodReport {
        k,
        eps,
        entries,
        good_mass_fraction: good_mass / space.mass_of(points).max(f64::MIN_POSITIVE),
    })
}

/// Quasilinearity constant of a tangent function on its own view.
#[derive(Debug, Clone, Serialize)]
pub struct TangentQuasilinearity {
    pub point: PointId,
    pub scale: f64,
    pub view_points: usize,
    pub constant: f64,
    /// `LIP` of the tangent on the view; equals the ball `LIP` of `f`.
    pub view_lip: f64,
    pub ball_lip: f64,
}

pub fn tangent_quasilinearity(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    x: PointId,
    r_k: f64,
    radius: f64,
) -> Result<TangentQuasilinearity> {
    let view = rescale(space, x, r_k, radius)?;
    let g = tangent_function(&view, f)?;
    let vs = view.to_space()?;
    let ladder = ScaleLadder::for_space(&vs, &LadderParams::default())?;
    let family = default_ball_family(&vs, &ladder);
    let q = quasilinearity_constant(&vs, &g, &family)?;
    Ok(TangentQuasilinearity {
        point: x,
        scale: r_k,
        view_points: view.len(),
        constant: q.constant,
        view_lip: view_lip(&view, &g),
        ball_lip: ball_lip(&view, f),
    })
}

/// Greedy `c`-net of a view, scanned by distance to the base (ties by id).
fn view_net(view: &PointedRescaling<'_>, c: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..view.len()).collect();
    order.sort_by(|&i, &j| {
        view.dist(view.base_index, i)
            .total_cmp(&view.dist(view.base_index, j))
            .then(i.cmp(&j))
    });
    let mut net: Vec<usize> = Vec::new();
    for i in order {
        if net.iter().all(|&m| view.dist(m, i) >= c) {
            net.push(i);
        }
    }
    net
}

fn one_way_distortion(a: &PointedRescaling<'_>, na: &[usize], b: &PointedRescaling<'_>, nb: &[usize]) -> f64 {
    // nets start at their bases, which are matched to each other
    let mut pairs: Vec<(usize, usize)> = vec![(0, 0)];
    let mut used = vec![false; nb.len()];
    used[0] = true;
    for (ia, &p) in na.iter().enumerate().skip(1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ib, &q) in nb.iter().enumerate() {
            if used[ib] {
                continue;
            }
            let cost = pairs
                .iter()
                .map(|&(pa, pb)| (a.dist(p, na[pa]) - b.dist(q, nb[pb])).abs())
                .fold(0.0, f64::max);
            let rank = ia.abs_diff(ib);
            if best.is_none_or(|(c, r, _)| cost < c || (cost == c && rank < r)) {
                best = Some((cost, rank, ib));
            }
        }
        let Some((_, _, ib)) = best else {
            break;
        };
        used[ib] = true;
        pairs.push((ia, ib));
    }
    let mut worst = 0.0_f64;
    for &(pa, pb) in &pairs {
        for &(qa, qb) in &pairs {
            worst = worst.max((a.dist(na[pa], na[qa]) - b.dist(nb[pb], nb[qb])).abs());
        }
    }
    // unmatched net points, measured by their distance to the matched ones
    let mut cover = 0.0_f64;
    let matched_a: Vec<usize> = pairs.iter().map(|p| na[p.0]).collect();
    let matched_b: Vec<usize> = pairs.iter().map(|p| nb[p.1]).collect();
    for &p in na {
        if !matched_a.contains(&p) {
            cover = cover.max(matched_a.iter().map(|&m| a.dist(m, p)).fold(f64::INFINITY, f64::min));
        }
    }
    for &q in nb {
        if !matched_b.contains(&q) {
            cover = cover.max(matched_b.iter().map(|&m| b.dist(m, q)).fold(f64::INFINITY, f64::min));
        }
    }
    worst + cover
}

/// Distortion of a greedy matching of `c`-nets of two pointed views: the
/// largest distance mismatch over matched pairs plus the cover radius of
/// the unmatched net points. Symmetric: the larger of both matching
/// directions.
pub fn net_distortion(a: &PointedRescaling<'_>, b: &PointedRescaling<'_>, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::input(format!("net spacing must be > 0, got {c}")));
    }
    let na = view_net(a, c);
    let nb = view_net(b, c);
    Ok(one_way_distortion(a, &na, b, &nb).max(one_way_distortion(b, &nb, a, &na)))
}
