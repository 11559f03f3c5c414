//! Global and pointwise Lipschitz constants.
//!
//! The variation of `f` on an open ball is
//! `var_{x,r} f = sup { |f(y) − f(x)| / r : y ∈ B(x, r) }` (the divisor is the
//! radius). The pointwise constants `lip_x f` / `Lip_x f` are its minimum /
//! maximum over the ladder radii inside a scale window.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::space::{MetricMeasureSpace, Neighborhood, PointId, ScaleLadder, ScaleWindow};

/// Exact `max |f(p) − f(q)| / d(p, q)` over all pairs; 0 for fewer than two points.
pub fn global_lip(space: &MetricMeasureSpace, f: &ScalarField) -> Result<f64> {
    f.check_on(space)?;
    Ok(global_lip_unchecked(space, &f.values))
}

pub(crate) fn global_lip_unchecked(space: &MetricMeasureSpace, v: &[f64]) -> f64 {
    let n = space.len();
    (0..n)
        .into_par_iter()
        .map(|a| {
            ((a + 1)..n)
                .map(|b| (v[a] - v[b]).abs() / space.dist(a, b))
                .fold(0.0_f64, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Same quotient maximized over pairs inside `points` only.
pub fn restricted_lip(space: &MetricMeasureSpace, v: &[f64], points: &[PointId]) -> f64 {
    let mut best = 0.0_f64;
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            best = best.max((v[a] - v[b]).abs() / space.dist(a, b));
        }
    }
    best
}

/// `var_{x,r} f`; 0 when the ball holds only `x`.
pub fn variation(space: &MetricMeasureSpace, f: &ScalarField, x: PointId, r: f64) -> Result<f64> {
    f.check_on(space)?;
    if r.is_nan() || r <= 0.0 {
        return Err(Error::input(format!("variation needs r > 0, got {r}")));
    }
    let fx = f.values[x];
    let sup = space
        .ball(x, r)?
        .into_iter()
        .map(|y| (f.values[y] - fx).abs())
        .fold(0.0_f64, f64::max);
    Ok(sup / r)
}

/// Variations at each radius of `radii` (ascending) using a sorted
/// neighborhood. `None` marks radii whose punctured ball is empty.
pub fn variations_in(nb: &Neighborhood, values: &[f64], radii: &[f64]) -> Vec<Option<f64>> {
    let fx = values[nb.center];
    let mut out = Vec::with_capacity(radii.len());
    let mut running = 0.0_f64;
    let mut consumed = 0usize;
    for &r in radii {
        let k = nb.count_within(r);
        while consumed < k {
            running = running.max((values[nb.entries[consumed].1] - fx).abs());
            consumed += 1;
        }
        out.push((k > 1).then(|| running / r));
    }
    out
}

/// Lower and upper pointwise constants at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseLip {
    pub lower: f64,
    pub upper: f64,
    /// Every window ball was `{x}`; both constants are reported as 0.
    pub degenerate: bool,
}

impl PointwiseLip {
    fn from_variations(vars: &[Option<f64>]) -> Self {
        let live: Vec<f64> = vars.iter().flatten().copied().collect();
        if live.is_empty() {
            return PointwiseLip {
                lower: 0.0,
                upper: 0.0,
                degenerate: true,
            };
        }
        PointwiseLip {
            lower: live.iter().copied().fold(f64::INFINITY, f64::min),
            upper: live.iter().copied().fold(0.0, f64::max),
            degenerate: false,
        }
    }

    /// `upper / lower`, with `0/0 = 1` and `x/0 = ∞`.
    pub fn ratio(&self) -> f64 {
        lip_ratio(self.lower, self.upper)
    }
}

pub fn lip_ratio(lower: f64, upper: f64) -> f64 {
    if upper == 0.0 {
        1.0
    } else if lower == 0.0 {
        f64::INFINITY
    } else {
        upper / lower
    }
}

/// Window radii plus the sorted neighborhood of every point, shared by all
/// fields evaluated on the same space.
#[derive(Debug, Clone)]
pub struct LocalScales {
    pub radii: Vec<f64>,
    neighborhoods: Vec<Neighborhood>,
}

impl LocalScales {
    pub fn new(space: &MetricMeasureSpace, ladder: &ScaleLadder, window: &ScaleWindow) -> Result<Self> {
        if window.lo.is_nan() || window.hi.is_nan() || window.lo > window.hi {
            return Err(Error::input(format!(
                "scale window [{}, {}] is empty",
                window.lo, window.hi
            )));
        }
        Ok(Self::with_radii(space, ladder.window_radii(window)))
    }

    /// `radii` must be ascending.
    pub fn with_radii(space: &MetricMeasureSpace, radii: Vec<f64>) -> Self {
        let cutoff = radii.last().copied().unwrap_or(0.0);
        let neighborhoods = space
            .points()
            .into_par_iter()
            .map(|x| space.neighborhood(x, cutoff))
            .collect();
        LocalScales {
            radii,
            neighborhoods,
        }
    }

    pub fn neighborhood(&self, x: PointId) -> &Neighborhood {
        &self.neighborhoods[x]
    }

    pub fn variations(&self, values: &[f64], x: PointId) -> Vec<Option<f64>> {
        variations_in(&self.neighborhoods[x], values, &self.radii)
    }

    pub fn pointwise(&self, values: &[f64], x: PointId) -> PointwiseLip {
        PointwiseLip::from_variations(&self.variations(values, x))
    }

    /// Full profile of one field.
    pub fn profile(&self, space: &MetricMeasureSpace, f: &ScalarField) -> Result<LipschitzProfile> {
        f.check_on(space)?;
        let points: Vec<PointProfile> = space
            .points()
            .into_par_iter()
            .map(|x| {
                let vars = self.variations(&f.values, x);
                let pw = PointwiseLip::from_variations(&vars);
                PointProfile {
                    var_by_scale: vars,
                    lip: pw.lower,
                    lip_upper: pw.upper,
                    ratio: pw.ratio(),
                    degenerate: pw.degenerate,
                }
            })
            .collect();
        Ok(LipschitzProfile {
            label: f.label.clone(),
            radii: self.radii.clone(),
            global_lip: global_lip_unchecked(space, &f.values),
            points,
            fractions: Vec::new(),
        })
    }
}

/// `lip_x f` and `Lip_x f` over the window radii of `ladder`.
pub fn pointwise_lip(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    x: PointId,
    ladder: &ScaleLadder,
    window: &ScaleWindow,
) -> Result<PointwiseLip> {
    f.check_on(space)?;
    space.check_point(x)?;
    let radii = ladder.window_radii(window);
    let nb = space.neighborhood(x, radii.last().copied().unwrap_or(0.0));
    Ok(PointwiseLip::from_variations(&variations_in(&nb, &f.values, &radii)))
}

#[derive(Debug, Clone, Serialize)]
pub struct PointProfile {
    /// One entry per window radius; `None` where the punctured ball is empty.
    pub var_by_scale: Vec<Option<f64>>,
    pub lip: f64,
    /// `Lip_x f`.
    pub lip_upper: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

/// Mass fraction of points whose Lip/lip ratio is at most `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KFraction {
    pub k: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzProfile {
    pub label: String,
    pub radii: Vec<f64>,
    pub global_lip: f64,
    pub points: Vec<PointProfile>,
    pub fractions: Vec<KFraction>,
}

impl LipschitzProfile {
    pub fn fraction_within(&self, space: &MetricMeasureSpace, k: f64) -> f64 {
        let total = space.total_mass();
        let good: f64 = self
            .points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.ratio <= k)
            .map(|(x, _)| space.mass(x))
            .sum();
        good / total
    }

    /// Smallest ratio value `K` with mass fraction `≥ q` at or below it.
    pub fn ratio_quantile(&self, space: &MetricMeasureSpace, q: f64) -> f64 {
        let mut pairs: Vec<(f64, f64)> = self
            .points
            .iter()
            .enumerate()
            .map(|(x, p)| (p.ratio, space.mass(x)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = space.total_mass();
        let mut acc = 0.0;
        for (ratio, m) in pairs {
            acc += m;
            if acc >= q * total {
                return ratio;
            }
        }
        f64::INFINITY
    }
}

/// Profile of `f` plus the mass fraction with ratio `≤ K` for each probe `K`.
pub fn liplip_ratio_field(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    ladder: &ScaleLadder,
    window: &ScaleWindow,
    ks: &[f64],
) -> Result<LipschitzProfile> {
    let scales = LocalScales::new(space, ladder, window)?;
    let mut profile = scales.profile(space, f)?;
    profile.fractions = ks
        .iter()
        .map(|&k| KFraction {
            k,
            fraction: profile.fraction_within(space, k),
        })
        .collect();
    Ok(profile)
}
