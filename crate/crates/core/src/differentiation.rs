//! First-order dependence of function tuples and minimax differentials.
//!
//! The local seminorm of `λ·f` at `x` is its upper pointwise Lipschitz
//! constant over the window radii. Writing `r(y)` for the smallest window
//! radius exceeding `d(x, y)`, it equals `max_y |λ·a_y|` with
//! `a_y = (f(y) − f(x)) / r(y)`, a max of absolute linear forms.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lipschitz::global_lip_unchecked;
use crate::lp::chebyshev_fit;
use crate::space::{MetricMeasureSpace, PointId, ScaleLadder, ScaleWindow};

/// Ordered tuple of fields on one space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateTuple {
    pub fields: Vec<ScalarField>,
}

impl CoordinateTuple {
    pub fn new(fields: Vec<ScalarField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::input("coordinate tuple is empty"));
        }
        let n = fields[0].len();
        if let Some(f) = fields.iter().find(|f| f.len() != n) {
            return Err(Error::input(format!(
                "field \"{}\" has {} values, expected {n}",
                f.label,
                f.len()
            )));
        }
        Ok(CoordinateTuple { fields })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.fields.iter().map(|f| f.label.clone()).collect()
    }

    pub fn check_on(&self, space: &MetricMeasureSpace) -> Result<()> {
        self.fields.iter().try_for_each(|f| f.check_on(space))
    }

    fn diff(&self, x: PointId, y: PointId) -> Vec<f64> {
        self.fields.iter().map(|f| f.values[y] - f.values[x]).collect()
    }
}

/// Window radii and their reach, shared by all points.
#[derive(Debug, Clone)]
pub struct SeminormScales {
    radii: Vec<f64>,
}

impl SeminormScales {
    pub fn new(ladder: &ScaleLadder, window: &ScaleWindow) -> Self {
        SeminormScales {
            radii: ladder.window_radii(window),
        }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Rows `a_y` at `x` for every `y` inside the largest window ball.
    pub fn rows(&self, space: &MetricMeasureSpace, tuple: &CoordinateTuple, x: PointId) -> Vec<Vec<f64>> {
        let Some(&top) = self.radii.last() else {
            return Vec::new();
        };
        space
            .neighborhood(x, top)
            .entries
            .iter()
            .filter(|&&(_, y)| y != x)
            .map(|&(d, y)| {
                let r = self.radii[self.radii.partition_point(|&r| r <= d)];
                tuple.diff(x, y).into_iter().map(|v| v / r).collect()
            })
            .collect()
    }
}

fn seminorm_of(rows: &[Vec<f64>], lambda: &[f64]) -> f64 {
    rows.iter()
        .map(|a| a.iter().zip(lambda).map(|(p, q)| p * q).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Discrete `Lip_x(λ·f)` over the window.
pub fn local_seminorm(
    space: &MetricMeasureSpace,
    tuple: &CoordinateTuple,
    lambda: &[f64],
    x: PointId,
    scales: &SeminormScales,
) -> Result<f64> {
    tuple.check_on(space)?;
    space.check_point(x)?;
    if lambda.len() != tuple.len() {
        return Err(Error::input(format!(
            "λ has {} components for a {}-tuple",
            lambda.len(),
            tuple.len()
        )));
    }
    Ok(seminorm_of(&scales.rows(space, tuple, x), lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceCertificate {
    pub point: PointId,
    /// Unit vector; first significant component positive.
    pub lambda: Vec<f64>,
    pub seminorm: f64,
    pub dependent: bool,
    /// Every field is constant on the window balls.
    pub degenerate: bool,
}

/// Minimizer of `max_y |λ·a_y|` over the unit sphere. This is the distance
/// from the origin to the boundary of `conv{±a_y}`, attained at the normal
/// of the nearest facet: exact for `N ≤ 2` via a planar hull, otherwise
/// multi-start descent. Returns a unit vector whose first significant
/// component is positive.
pub fn minimize_on_sphere(rows: &[Vec<f64>], n: usize) -> (Vec<f64>, f64) {
    let mut axis = vec![0.0; n];
    axis[0] = 1.0;
    if rows.is_empty() || n <= 1 {
        let v = seminorm_of(rows, &axis);
        return (axis, v);
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let m = DMatrix::from_fn(rows.len().max(n), n, |i, j| rows.get(i).map_or(0.0, |r| r[j]));
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
    starts.extend(order.iter().map(|&k| v_t.row(k).iter().copied().collect::<Vec<f64>>()));
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |lam: Vec<f64>, v: f64| {
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((lam, v));
        }
    };
    // an exact null direction needs no polishing
    let floor = 1e-12 * rows.iter().map(|a| dot(a, a).sqrt()).fold(0.0, f64::max);
    let v0 = seminorm_of(rows, &starts[0]);
    if v0 <= floor {
        consider(starts[0].clone(), v0);
    } else if n == 2 {
        let lam = planar_facet_normal(rows).unwrap_or_else(|| starts[0].clone());
        let v = seminorm_of(rows, &lam);
        consider(lam, v);
    } else {
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            starts.push(e);
        }
        starts.extend((0..n).map(|i| hyperplane_start(rows, i)));
        for start in starts {
            let (lam, v) = descend(rows, start, floor);
            consider(lam, v);
        }
    }
    let (mut lam, _) = best.expect("at least one start");
    let norm = dot(&lam, &lam).sqrt();
    for v in &mut lam {
        *v /= norm;
    }
    if let Some(first) = lam.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            for v in &mut lam {
                *v = -*v;
            }
        }
    }
    let value = seminorm_of(rows, &lam);
    (lam, value)
}

/// Unit normal of the hull edge of `{±a_y} ⊂ R²` nearest the origin; `None`
/// when the hull is degenerate.
fn planar_facet_normal(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .flat_map(|a| [(a[0], a[1]), (-a[0], -a[1])])
        .collect();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    pts.dedup();
    if pts.len() < 3 {
        return None;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let base = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= base + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return None;
    }
    let mut best: Option<(f64, (f64, f64))> = None;
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        let (ex, ey) = (q.0 - p.0, q.1 - p.1);
        let len = (ex * ex + ey * ey).sqrt();
        if len == 0.0 {
            continue;
        }
        let dist = (p.0 * q.1 - p.1 * q.0).abs() / len;
        if best.is_none_or(|b| dist < b.0) {
            best = Some((dist, (ey / len, -ex / len)));
        }
    }
    best.map(|(_, (x, y))| vec![x, y])
}

/// Minimizer of `max_y |a_y·λ|` over the hyperplane `λ_i = 1`, a Chebyshev
/// fit. The best of these over `i` is within `√N` of the sphere optimum.
fn hyperplane_start(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    let rest: Vec<Vec<f64>> = rows
        .iter()
        .map(|a| a.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect())
        .collect();
    let b: Vec<f64> = rows.iter().map(|a| -a[i]).collect();
    let fit = chebyshev_fit(&rest, &b);
    let mut lam = fit.lambda;
    lam.insert(i, 1.0);
    lam
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Minimal-norm point of the convex hull of `g` (Wolfe's algorithm).
fn min_norm_in_hull(g: &[Vec<f64>]) -> Vec<f64> {
    let n = g[0].len();
    let scale = g.iter().map(|v| dot(v, v)).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let combine = |set: &[usize], w: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (&i, &wi) in set.iter().zip(w) {
            for (xk, gk) in x.iter_mut().zip(&g[i]) {
                *xk += wi * gk;
            }
        }
        x
    };
    let first = (0..g.len())
        .min_by(|&i, &j| dot(&g[i], &g[i]).total_cmp(&dot(&g[j], &g[j])))
        .expect("non-empty hull");
    let mut set = vec![first];
    let mut w = vec![1.0];
    let mut x = g[first].clone();
    for _ in 0..100 {
        let xx = dot(&x, &x);
        let (j, best) = (0..g.len())
            .map(|j| (j, dot(&g[j], &x)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if xx - best <= tol || set.contains(&j) || set.len() > n {
            break;
        }
        set.push(j);
        w.push(0.0);
        for _ in 0..100 {
            // affine minimizer of the current set: [G 1; 1ᵀ 0][α; μ] = [0; 1]
            let k = set.len();
            let m = DMatrix::from_fn(k + 1, k + 1, |r, c| match (r < k, c < k) {
                (true, true) => dot(&g[set[r]], &g[set[c]]),
                (false, false) => 0.0,
                _ => 1.0,
            });
            let mut rhs = nalgebra::DVector::zeros(k + 1);
            rhs[k] = 1.0;
            let Some(sol) = m.lu().solve(&rhs) else {
                return x;
            };
            let alpha: Vec<f64> = (0..k).map(|i| sol[i]).collect();
            if alpha.iter().all(|&a| a > 1e-14) {
                w = alpha;
                break;
            }
            let theta = w
                .iter()
                .zip(&alpha)
                .filter(|&(_, &a)| a <= 1e-14)
                .map(|(&wi, &a)| wi / (wi - a))
                .fold(1.0, f64::min);
            for (wi, a) in w.iter_mut().zip(&alpha) {
                *wi = (1.0 - theta) * *wi + theta * a;
            }
            let keep: Vec<bool> = w.iter().map(|&wi| wi > 1e-14).collect();
            set = set.iter().zip(&keep).filter(|p| *p.1).map(|p| *p.0).collect();
            w = w.iter().zip(&keep).filter(|p| *p.1).map(|p| *p.0).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }
        let next = combine(&set, &w);
        if dot(&next, &next) >= xx {
            break;
        }
        x = next;
    }
    x
}

/// ε-steepest descent along great circles: the direction is minus the
/// least-norm convex combination of the tangent gradients of the rows
/// within `ε` of the maximum.
fn descend(rows: &[Vec<f64>], mut lam: Vec<f64>, floor: f64) -> (Vec<f64>, f64) {
    let norm = dot(&lam, &lam).sqrt();
    lam.iter_mut().for_each(|v| *v /= norm);
    let mut best = seminorm_of(rows, &lam);
    let mut eps = 0.1 * best;
    for _ in 0..1000 {
        if best <= floor || eps <= 1e-10 * best {
            break;
        }
        let grads: Vec<Vec<f64>> = rows
            .iter()
            .filter_map(|a| {
                let v = dot(a, &lam);
                (v.abs() >= best - eps).then(|| {
                    let s = v.signum();
                    a.iter().zip(&lam).map(|(ai, li)| s * (ai - v * li)).collect()
                })
            })
            .collect();
        let w = min_norm_in_hull(&grads);
        let wn = dot(&w, &w).sqrt();
        if wn <= 1e-12 * best {
            eps *= 0.1;
            continue;
        }
        let d: Vec<f64> = w.iter().map(|v| -v / wn).collect();
        let mut t: f64 = (2.0 * eps / wn).min(0.5);
        let mut moved = false;
        while t > 1e-15 {
            let trial: Vec<f64> = lam.iter().zip(&d).map(|(l, di)| t.cos() * l + t.sin() * di).collect();
            let v = seminorm_of(rows, &trial);
            if v < best {
                let n = dot(&trial, &trial).sqrt();
                lam = trial.iter().map(|x| x / n).collect();
                best = seminorm_of(rows, &lam).min(v);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            eps *= 0.1;
        }
    }
    let best = seminorm_of(rows, &lam);
    (lam, best)
}

/// Dependence verdicts share one relative threshold `tol · max_i LIP(f_i)`.
#[derive(Debug, Clone)]
pub struct DependenceTester<'a> {
    space: &'a MetricMeasureSpace,
    tuple: &'a CoordinateTuple,
    scales: SeminormScales,
    threshold: f64,
}

impl<'a> DependenceTester<'a> {
    pub fn new(
        space: &'a MetricMeasureSpace,
        tuple: &'a CoordinateTuple,
        scales: SeminormScales,
        tol: f64,
    ) -> Result<Self> {
        tuple.check_on(space)?;
        if !(tol > 0.0) {
            return Err(Error::input(format!("dependence tolerance must be > 0, got {tol}")));
        }
        let scale = tuple
            .fields
            .iter()
            .map(|f| global_lip_unchecked(space, &f.values))
            .fold(0.0, f64::max);
        Ok(DependenceTester {
            space,
            tuple,
            scales,
            threshold: tol * scale,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn test(&self, x: PointId) -> DependenceCertificate {
        let rows = self.scales.rows(self.space, self.tuple, x);
        let degenerate = rows.iter().all(|a| a.iter().all(|&v| v == 0.0));
        let (lambda, seminorm) = if degenerate {
            let mut l = vec![0.0; self.tuple.len()];
            l[0] = 1.0;
            (l, 0.0)
        } else {
            minimize_on_sphere(&rows, self.tuple.len())
        };
        DependenceCertificate {
            point: x,
            lambda,
            seminorm,
            dependent: degenerate || seminorm <= self.threshold,
            degenerate,
        }
    }
}

pub fn dependence_test(
    space: &MetricMeasureSpace,
    tuple: &CoordinateTuple,
    x: PointId,
    scales: SeminormScales,
    tol: f64,
) -> Result<DependenceCertificate> {
    space.check_point(x)?;
    Ok(DependenceTester::new(space, tuple, scales, tol)?.test(x))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceSet {
    pub points: Vec<PointId>,
    pub mass_fraction: f64,
    pub certificates: Vec<DependenceCertificate>,
}

/// Points of `region` (all points when `None`) where the tuple is not dependent.
pub fn independence_set(
    space: &MetricMeasureSpace,
    tuple: &CoordinateTuple,
    scales: SeminormScales,
    tol: f64,
    region: Option<&[PointId]>,
) -> Result<IndependenceSet> {
    let tester = DependenceTester::new(space, tuple, scales, tol)?;
    let all: Vec<PointId> = space.points().collect();
    let region = region.unwrap_or(&all);
    let certificates: Vec<DependenceCertificate> = region.par_iter().map(|&x| tester.test(x)).collect();
    let points: Vec<PointId> = certificates.iter().filter(|c| !c.dependent).map(|c| c.point).collect();
    Ok(IndependenceSet {
        mass_fraction: space.mass_of(&points) / space.total_mass(),
        points,
        certificates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialAtPoint {
    pub point: PointId,
    pub df: Vec<f64>,
    /// `max_y |f(y) − f(x) − df·(x(y) − x(x))| / d(x, y)` over the punctured ball.
    pub residual: f64,
    pub radius_used: f64,
    /// All coordinate differences vanish on the ball.
    pub degenerate: bool,
}

/// Minimax differential of `f` at `x` against `coords` on `B(x, radius)`.
pub fn solve_differential(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    coords: &CoordinateTuple,
    x: PointId,
    radius: f64,
) -> Result<DifferentialAtPoint> {
    f.check_on(space)?;
    coords.check_on(space)?;
    space.check_point(x)?;
    let ys: Vec<(f64, PointId)> = space
        .neighborhood(x, radius)
        .entries
        .into_iter()
        .filter(|&(_, y)| y != x)
        .collect();
    if ys.len() < coords.len() + 1 {
        return Err(Error::input(format!(
            "B({x}, {radius}) has {} points besides the center, need {}",
            ys.len(),
            coords.len() + 1
        )));
    }
    Ok(solve_on(f, coords, x, radius, &ys))
}

fn solve_on(f: &ScalarField, coords: &CoordinateTuple, x: PointId, radius: f64, ys: &[(f64, PointId)]) -> DifferentialAtPoint {
    let rows: Vec<Vec<f64>> = ys
        .iter()
        .map(|&(d, y)| coords.diff(x, y).into_iter().map(|v| v / d).collect())
        .collect();
    let b: Vec<f64> = ys.iter().map(|&(d, y)| (f.values[y] - f.values[x]) / d).collect();
    let degenerate = rows.iter().all(|a| a.iter().all(|&v| v == 0.0));
    if degenerate {
        return DifferentialAtPoint {
            point: x,
            df: vec![0.0; coords.len()],
            residual: b.iter().map(|v| v.abs()).fold(0.0, f64::max),
            radius_used: radius,
            degenerate,
        };
    }
    let fit = chebyshev_fit(&rows, &b);
    DifferentialAtPoint {
        point: x,
        df: fit.lambda,
        residual: fit.residual,
        radius_used: radius,
        degenerate,
    }
}

/// How the ball radius is chosen per point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadiusRule {
    Fixed(f64),
    /// Smallest ladder radius whose punctured ball holds `≥ factor·N` points
    /// (at least `N + 1`).
    MinPoints { factor: usize },
}

impl Default for RadiusRule {
    fn default() -> Self {
        RadiusRule::MinPoints { factor: 3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DifferentialSummary {
    /// Absolute residual threshold `tol · LIP(f)`.
    pub threshold: f64,
    pub good_mass_fraction: f64,
    pub degenerate_points: usize,
    /// Largest `|Δdf|_∞` when re-solving at the next ladder radius.
    pub max_df_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DifferentialField {
    pub function: String,
    pub coords: Vec<String>,
    pub points: Vec<DifferentialAtPoint>,
    pub summary: DifferentialSummary,
}

/// Radius for `x` under `rule` and the next ladder radius above it.
fn radii_for(space: &MetricMeasureSpace, x: PointId, rule: RadiusRule, n: usize, radii: &[f64]) -> (Option<f64>, Option<f64>) {
    match rule {
        RadiusRule::Fixed(r) => (Some(r), radii.iter().copied().find(|&q| q > r)),
        RadiusRule::MinPoints { factor } => {
            let need = (factor * n).max(n + 1);
            let mut d: Vec<f64> = space.points().filter(|&y| y != x).map(|y| space.dist(x, y)).collect();
            if d.len() < need {
                return (None, None);
            }
            let (_, kth, _) = d.select_nth_unstable_by(need - 1, f64::total_cmp);
            let kth = *kth;
            let i = radii.partition_point(|&r| r <= kth);
            (radii.get(i).copied(), radii.get(i + 1).copied())
        }
    }
}

/// Differentials of `f` at every point of `region`.
pub fn differential_field(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    coords: &CoordinateTuple,
    region: &[PointId],
    ladder: &ScaleLadder,
    rule: RadiusRule,
    tol: f64,
) -> Result<DifferentialField> {
    f.check_on(space)?;
    coords.check_on(space)?;
    if region.is_empty() {
        return Err(Error::input("differential region is empty"));
    }
    if let RadiusRule::Fixed(r) = rule {
        if !(r > 0.0) {
            return Err(Error::input(format!("radius must be > 0, got {r}")));
        }
    }
    let radii = ladder.ascending();
    let n = coords.len();
    let solved: Vec<(Option<DifferentialAtPoint>, f64)> = region
        .par_iter()
        .map(|&x| {
            let (r, next) = radii_for(space, x, rule, n, &radii);
            let Some(r) = r else {
                return (None, 0.0);
            };
            let nb = space.neighborhood(x, next.unwrap_or(r).max(r));
            let punct: Vec<(f64, PointId)> = nb.entries.iter().copied().filter(|e| e.1 != x).collect();
            let inner: Vec<(f64, PointId)> = punct.iter().copied().filter(|e| e.0 < r).collect();
            if inner.len() < n + 1 {
                return (None, 0.0);
            }
            let here = solve_on(f, coords, x, r, &inner);
            let change = match next {
                Some(q) if !here.degenerate => {
                    let other = solve_on(f, coords, x, q, &punct);
                    here.df.iter().zip(&other.df).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                }
                _ => 0.0,
            };
            (Some(here), change)
        })
        .collect();
    let threshold = tol * global_lip_unchecked(space, &f.values);
    let mut points = Vec::with_capacity(region.len());
    let mut good = 0.0;
    let mut max_change = 0.0_f64;
    for (d, change) in solved.into_iter() {
        if let Some(d) = d {
            if d.residual <= threshold {
                good += space.mass(d.point);
            }
            max_change = max_change.max(change);
            points.push(d);
        }
    }
    let degenerate_points = points.iter().filter(|d| d.degenerate).count();
    Ok(DifferentialField {
        function: f.label.clone(),
        coords: coords.labels(),
        summary: DifferentialSummary {
            threshold,
            good_mass_fraction: good / space.mass_of(region),
            degenerate_points,
            max_df_change: max_change,
        },
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::euclidean_grid;
    use crate::lp::max_residual;
    use crate::space::LadderParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, dim: usize) -> (MetricMeasureSpace, ScaleLadder) {
        let s = euclidean_grid(n, dim).unwrap();
        let l = ScaleLadder::for_space(&s, &LadderParams::default()).unwrap();
        (s, l)
    }

    fn xy(s: &MetricMeasureSpace) -> (ScalarField, ScalarField) {
        (ScalarField::coordinate(s, 0).unwrap(), ScalarField::coordinate(s, 1).unwrap())
    }

    /// Oracle: minimum over a fine grid on the sphere (N ≤ 3).
    fn sphere_grid_min(rows: &[Vec<f64>], n: usize) -> f64 {
        let steps = 2000;
        let mut best = f64::INFINITY;
        match n {
            1 => best = seminorm_of(rows, &[1.0]),
            2 => {
                for k in 0..steps {
                    let t = std::f64::consts::PI * k as f64 / steps as f64;
                    best = best.min(seminorm_of(rows, &[t.cos(), t.sin()]));
                }
            }
            3 => {
                let m = 400;
                for i in 0..=m {
                    let th = std::f64::consts::PI * i as f64 / m as f64;
                    for j in 0..2 * m {
                        let ph = std::f64::consts::PI * j as f64 / m as f64;
                        let l = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                        best = best.min(seminorm_of(rows, &l));
                    }
                }
            }
            _ => unreachable!(),
        }
        best
    }

    #[test]
    fn seminorm_examples() {
        let (s, l) = setup(17, 2);
        let (x, y) = xy(&s);
        let sc = SeminormScales::new(&l, &l.default_window());
        let t = CoordinateTuple::new(vec![x.clone(), y.clone()]).unwrap();
        assert_eq!(local_seminorm(&s, &t, &[0.0, 0.0], 144, &sc).unwrap(), 0.0);
        let v = local_seminorm(&s, &t, &[1.0, 0.0], 144, &sc).unwrap();
        assert!((v - 1.0).abs() < 0.35, "{v}");
        let xx = CoordinateTuple::new(vec![x.clone(), x.clone()]).unwrap();
        assert_eq!(local_seminorm(&s, &xx, &[1.0, -1.0], 144, &sc).unwrap(), 0.0);
        assert!(local_seminorm(&s, &t, &[1.0], 144, &sc).is_err());
    }

    #[test]
    fn seminorm_matches_pointwise_upper_lip() {
        let (s, l) = setup(12, 2);
        let w = l.default_window();
        let f = ScalarField::random_lipschitz(&s, 4, 8);
        let g = ScalarField::random_lipschitz(&s, 4, 9);
        let t = CoordinateTuple::new(vec![f.clone(), g.clone()]).unwrap();
        let comb = ScalarField::combination(&[&f, &g], &[0.6, -0.8]);
        for x in [0, 30, 77] {
            let a = local_seminorm(&s, &t, &[0.6, -0.8], x, &SeminormScales::new(&l, &w)).unwrap();
            let b = crate::lipschitz::pointwise_lip(&s, &comb, x, &l, &w).unwrap().upper;
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn seminorm_is_lipschitz_in_lambda() {
        let (s, l) = setup(10, 2);
        let sc = SeminormScales::new(&l, &l.default_window());
        let f = ScalarField::random_lipschitz(&s, 4, 1);
        let g = ScalarField::random_lipschitz(&s, 4, 2);
        let lips = global_lip_unchecked(&s, &f.values) + global_lip_unchecked(&s, &g.values);
        let t = CoordinateTuple::new(vec![f, g]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let x = rng.random_range(0..s.len());
            let d = (local_seminorm(&s, &t, &a, x, &sc).unwrap() - local_seminorm(&s, &t, &b, x, &sc).unwrap()).abs();
            let dl = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!(d <= lips * dl * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dependent_triple() {
        let (s, l) = setup(16, 2);
        let (x, y) = xy(&s);
        let t = CoordinateTuple::new(vec![x.clone(), y.clone(), x.add(&y)]).unwrap();
        let c = dependence_test(&s, &t, 100, SeminormScales::new(&l, &l.default_window()), 1e-3).unwrap();
        assert!(c.dependent && c.seminorm < 1e-12);
        let want = [1.0, 1.0, -1.0].map(|v: f64| v / 3f64.sqrt());
        assert!(c.lambda.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-6), "{:?}", c.lambda);
    }

    #[test]
    fn independent_pair_matches_sphere_oracle() {
        let (s, l) = setup(16, 2);
        let (x, y) = xy(&s);
        let t = CoordinateTuple::new(vec![x, y]).unwrap();
        let sc = SeminormScales::new(&l, &l.default_window());
        for p in [0, 17, 100, 255] {
            let c = dependence_test(&s, &t, p, sc.clone(), 1e-3).unwrap();
            let oracle = sphere_grid_min(&sc.rows(&s, &t, p), 2);
            assert!(!c.dependent);
            assert!((c.seminorm - oracle).abs() <= 1e-3, "{} vs {oracle}", c.seminorm);
            assert!(((c.lambda.iter().map(|v| v * v).sum::<f64>()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_triple_matches_sphere_oracle() {
        let (s, l) = setup(10, 2);
        let sc = SeminormScales::new(&l, &l.default_window());
        for seed in 0..6u64 {
            let fs: Vec<ScalarField> = (0..3).map(|i| ScalarField::random_lipschitz(&s, 5, 10 * seed + i)).collect();
            let t = CoordinateTuple::new(fs).unwrap();
            for p in [5, 44, 71] {
                let c = dependence_test(&s, &t, p, sc.clone(), 1e-3).unwrap();
                let oracle = sphere_grid_min(&sc.rows(&s, &t, p), 3);
                assert!(c.seminorm <= oracle + 1e-3, "seed {seed} point {p}: {} vs {oracle}", c.seminorm);
            }
        }
    }

    #[test]
    fn constant_and_duplicate_tuples() {
        let (s, l) = setup(9, 1);
        let sc = SeminormScales::new(&l, &l.default_window());
        let k = CoordinateTuple::new(vec![ScalarField::constant(&s, 1.0)]).unwrap();
        let c = dependence_test(&s, &k, 4, sc.clone(), 1e-3).unwrap();
        assert!(c.dependent && c.degenerate && c.lambda == vec![1.0] && c.seminorm == 0.0);

        let t = ScalarField::coordinate(&s, 0).unwrap();
        let ind = independence_set(&s, &CoordinateTuple::new(vec![t.clone()]).unwrap(), sc.clone(), 1e-3, None).unwrap();
        assert_eq!(ind.points.len(), 9);
        let tt = CoordinateTuple::new(vec![t.clone(), t]).unwrap();
        assert!(independence_set(&s, &tt, sc, 1e-3, None).unwrap().points.is_empty());
    }

    #[test]
    fn verdict_is_scale_invariant() {
        let (s, l) = setup(10, 2);
        let sc = SeminormScales::new(&l, &l.default_window());
        let fs: Vec<ScalarField> = (0..2).map(|i| ScalarField::random_lipschitz(&s, 3, i)).collect();
        let a = independence_set(&s, &CoordinateTuple::new(fs.clone()).unwrap(), sc.clone(), 0.05, None).unwrap();
        let scaled: Vec<ScalarField> = fs.iter().map(|f| f.scale(-4.0)).collect();
        let b = independence_set(&s, &CoordinateTuple::new(scaled).unwrap(), sc, 0.05, None).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn affine_differential_is_exact() {
        let (s, _) = setup(12, 2);
        let (x, y) = xy(&s);
        let f = ScalarField::linear(&s, &[3.0, -1.0]).unwrap();
        let c = CoordinateTuple::new(vec![x, y]).unwrap();
        let d = solve_differential(&s, &f, &c, 50, 0.2).unwrap();
        assert!((d.df[0] - 3.0).abs() < 1e-9 && (d.df[1] + 1.0).abs() < 1e-9);
        assert!(d.residual < 1e-9);
    }

    #[test]
    fn kink_and_square() {
        let (s, _) = setup(1001, 1);
        let t = ScalarField::coordinate(&s, 0).unwrap();
        let c = CoordinateTuple::new(vec![t.clone()]).unwrap();
        let kink = t.map("|t-1/2|", |v| (v - 0.5).abs());
        let d = solve_differential(&s, &kink, &c, 500, 0.05).unwrap();
        assert!(d.df[0].abs() < 1e-12 && (d.residual - 1.0).abs() < 1e-12);

        let sq = t.map("t^2", |v| v * v);
        let d = solve_differential(&s, &sq, &c, 500, 0.1).unwrap();
        assert!((d.df[0] - 1.0).abs() <= 0.1 && d.residual <= 0.1 + 1e-9, "{d:?}");
        assert!(solve_differential(&s, &sq, &c, 500, 0.0005).is_err());
    }

    #[test]
    fn optimality_against_random_probes() {
        let (s, _) = setup(12, 2);
        let (x, y) = xy(&s);
        let f = ScalarField::random_lipschitz(&s, 6, 7);
        let c = CoordinateTuple::new(vec![x, y]).unwrap();
        let d = solve_differential(&s, &f, &c, 66, 0.3).unwrap();
        let ys: Vec<(f64, PointId)> = s.neighborhood(66, 0.3).entries.into_iter().filter(|e| e.1 != 66).collect();
        let rows: Vec<Vec<f64>> = ys.iter().map(|&(dd, q)| c.diff(66, q).iter().map(|v| v / dd).collect()).collect();
        let b: Vec<f64> = ys.iter().map(|&(dd, q)| (f.values[q] - f.values[66]) / dd).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let l = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            assert!(d.residual <= max_residual(&rows, &b, &l) * (1.0 + 1e-9));
        }
        assert!(d.residual <= max_residual(&rows, &b, &[0.0, 0.0]) * (1.0 + 1e-9));
    }

    #[test]
    fn max_field_differentials() {
        let (s, l) = setup(24, 2);
        let (x, y) = xy(&s);
        let m = ScalarField::new("max", x.values.iter().zip(&y.values).map(|(a, b)| a.max(*b)).collect());
        let c = CoordinateTuple::new(vec![x.clone(), y.clone()]).unwrap();
        let all: Vec<PointId> = s.points().collect();
        let field = differential_field(&s, &m, &c, &all, &l, RadiusRule::default(), 0.1).unwrap();
        let coords = s.coords().unwrap();
        for d in &field.points {
            let p = coords.point(d.point);
            let gap = (p[0] - p[1]).abs();
            if gap > 3.0 * d.radius_used {
                let want = if p[0] > p[1] { [1.0, 0.0] } else { [0.0, 1.0] };
                assert!((d.df[0] - want[0]).abs() < 1e-9 && (d.df[1] - want[1]).abs() < 1e-9);
            }
            let interior = p.iter().all(|&t| t >= d.radius_used && t <= 1.0 - d.radius_used);
            if gap == 0.0 && interior {
                assert!(d.residual > 0.3, "{d:?}");
            }
        }
        assert!(field.summary.good_mass_fraction > 0.5);
    }

    #[test]
    fn duplicate_coords_are_degenerate_only_when_constant() {
        let (s, l) = setup(9, 2);
        let (x, _) = xy(&s);
        let f = ScalarField::linear(&s, &[1.0, 1.0]).unwrap();
        let k = ScalarField::constant(&s, 0.0);
        let c = CoordinateTuple::new(vec![k.clone(), k]).unwrap();
        let all: Vec<PointId> = s.points().collect();
        let field = differential_field(&s, &f, &c, &all, &l, RadiusRule::default(), 0.1).unwrap();
        assert_eq!(field.summary.degenerate_points, s.len());
        let c = CoordinateTuple::new(vec![x.clone(), x]).unwrap();
        let d = solve_differential(&s, &ScalarField::coordinate(&s, 0).unwrap(), &c, 40, 0.3).unwrap();
        assert!((d.df[0] - 0.5).abs() < 1e-9 && (d.df[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn residual_is_subadditive() {
        let (s, _) = setup(10, 2);
        let (x, y) = xy(&s);
        let c = CoordinateTuple::new(vec![x, y]).unwrap();
        let f = ScalarField::random_lipschitz(&s, 5, 1);
        let g = ScalarField::random_lipschitz(&s, 5, 2);
        let (a, b) = (0.75, 2.0);
        let h = ScalarField::combination(&[&f, &g], &[a, b]);
        let rf = solve_differential(&s, &f, &c, 45, 0.35).unwrap().residual;
        let rg = solve_differential(&s, &g, &c, 45, 0.35).unwrap().residual;
        let rh = solve_differential(&s, &h, &c, 45, 0.35).unwrap().residual;
        assert!(rh <= (a * rf + b * rg) * (1.0 + 1e-9) + 1e-15);
    }
}
