//! Finite metric measure spaces, open balls, scale ladders, separated nets
//! and doubling constants.
//!
//! Balls are open throughout: `B(x, r) = { y : d(x, y) < r }`, so `B(x, 0)`
//! is empty and `x ∈ B(x, r)` for every `r > 0`.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = usize;

/// Distance oracle backing a space.
#[derive(Debug, Clone)]
pub enum Metric {
    /// Row-major `n × n` matrix.
    Dense { n: usize, data: Vec<f64> },
    /// Euclidean distance between stored coordinates (`n × dim`, row-major).
    Euclidean { dim: usize, coords: Vec<f64> },
    /// `d(a, b)^alpha` over a base metric.
    Snowflake { base: Arc<Metric>, alpha: f64 },
    /// `factor · d(a, b)`.
    Scaled { base: Arc<Metric>, factor: f64 },
    /// Restriction to `ids` with distances `d(a, b) / divisor`.
    View {
        base: Arc<Metric>,
        ids: Vec<PointId>,
        divisor: f64,
    },
}

impl Metric {
    pub fn len(&self) -> usize {
        match self {
            Metric::Dense { n, .. } => *n,
            Metric::Euclidean { dim, coords } => {
                if *dim == 0 {
                    0
                } else {
                    coords.len() / dim
                }
            }
            Metric::Snowflake { base, .. } | Metric::Scaled { base, .. } => base.len(),
            Metric::View { ids, .. } => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        match self {
            Metric::Dense { n, data } => data[a * n + b],
            Metric::Euclidean { dim, coords } => {
                if a == b {
                    return 0.0;
                }
                let pa = &coords[a * dim..(a + 1) * dim];
                let pb = &coords[b * dim..(b + 1) * dim];
                pa.iter()
                    .zip(pb)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            }
            Metric::Snowflake { base, alpha } => base.dist(a, b).powf(*alpha),
            Metric::Scaled { base, factor } => factor * base.dist(a, b),
            Metric::View { base, ids, divisor } => base.dist(ids[a], ids[b]) / divisor,
        }
    }

    /// Materialize as a dense matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                data[a * n + b] = self.dist(a, b);
            }
        }
        data
    }
}

/// Optional per-point chart coordinates (used for coordinate fields and
/// probes; the metric may or may not be derived from them).
#[derive(Debug, Clone, PartialEq)]
pub struct Coords {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Coords {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::input("coordinate rows have inconsistent dimension"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("coordinates must be finite"));
        }
        Ok(Coords {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn point(&self, p: PointId) -> &[f64] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(|c| c.to_vec()).collect()
    }
}

/// An open ball descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: PointId, radius: f64) -> Self {
        Ball { center, radius }
    }
}

/// Controls for [`MetricMeasureSpace::validate`].
#[derive(Debug, Clone)]
pub struct ValidationOptions {
    /// Up to this many points the triangle inequality is checked on all triples.
    pub exhaustive_limit: usize,
    /// Number of random triples checked above the limit.
    pub sampled_triples: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            exhaustive_limit: 512,
            sampled_triples: 200_000,
            seed: 0,
        }
    }
}

/// A finite metric space with positive point masses.
#[derive(Debug, Clone)]
pub struct MetricMeasureSpace {
    metric: Metric,
    mass: Vec<f64>,
    label: String,
    step: Option<f64>,
    coords: Option<Coords>,
}

impl MetricMeasureSpace {
    /// Build without validation. Callers guarantee the metric axioms.
    pub(crate) fn from_parts(metric: Metric, mass: Vec<f64>, label: impl Into<String>) -> Self {
        debug_assert_eq!(metric.len(), mass.len());
        MetricMeasureSpace {
            metric,
            mass,
            label: label.into(),
            step: None,
            coords: None,
        }
    }

    /// Points in `R^dim` with the Euclidean metric. Masses default to 1.
    pub fn from_coords(
        rows: &[Vec<f64>],
        mass: Option<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let coords = Coords::from_rows(rows)?;
        let n = rows.len();
        let metric = Metric::Euclidean {
            dim: coords.dim.max(1),
            coords: if coords.dim == 0 {
                vec![0.0; n]
            } else {
                coords.data.clone()
            },
        };
        let space = MetricMeasureSpace {
            metric,
            mass: mass.unwrap_or_else(|| vec![1.0; n]),
            label: label.into(),
            step: None,
            coords: Some(coords),
        };
        space.validate(&ValidationOptions::default())?;
        Ok(space)
    }

    /// Points with an explicit distance matrix. Masses default to 1.
    pub fn from_dist_matrix(
        rows: &[Vec<f64>],
        mass: Option<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invariant(
                "square distance matrix",
                format!("expected {n} columns in every row"),
            ));
        }
        let space = MetricMeasureSpace {
            metric: Metric::Dense {
                n,
                data: rows.iter().flatten().copied().collect(),
            },
            mass: mass.unwrap_or_else(|| vec![1.0; n]),
            label: label.into(),
            step: None,
            coords: None,
        };
        space.validate(&ValidationOptions::default())?;
        Ok(space)
    }

    pub fn with_step(mut self, step: Option<f64>) -> Self {
        self.step = step;
        self
    }

    pub fn with_coords(mut self, coords: Option<Coords>) -> Self {
        self.coords = coords;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_mass(mut self, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != self.len() {
            return Err(Error::input("mass vector length differs from point count"));
        }
        self.mass = mass;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn points(&self) -> std::ops::Range<PointId> {
        0..self.len()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.metric.dist(a, b)
    }

    pub fn mass(&self, p: PointId) -> f64 {
        self.mass[p]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_of(&self, points: &[PointId]) -> f64 {
        points.iter().map(|&p| self.mass[p]).sum()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform lattice step, when the space declares one.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn coords(&self) -> Option<&Coords> {
        self.coords.as_ref()
    }

    pub(crate) fn check_point(&self, x: PointId) -> Result<()> {
        if x >= self.len() {
            return Err(Error::input(format!(
                "unknown point id {x} (space has {} points)",
                self.len()
            )));
        }
        Ok(())
    }

    /// Check the metric and measure axioms. Error messages name the
    /// violated invariant.
    pub fn validate(&self, opts: &ValidationOptions) -> Result<()> {
        let n = self.len();
        if self.metric.len() != n {
            return Err(Error::invariant(
                "point count",
                format!("metric has {} points, mass has {n}", self.metric.len()),
            ));
        }
        for (p, &m) in self.mass.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invariant(
                    "positive mass",
                    format!("mass of point {p} is {m}"),
                ));
            }
        }
        for a in 0..n {
            let daa = self.dist(a, a);
            if daa != 0.0 {
                return Err(Error::invariant(
                    "zero diagonal",
                    format!("d({a},{a}) = {daa}"),
                ));
            }
            for b in (a + 1)..n {
                let dab = self.dist(a, b);
                let dba = self.dist(b, a);
                if !dab.is_finite() {
                    return Err(Error::invariant(
                        "finite distance",
                        format!("d({a},{b}) = {dab}"),
                    ));
                }
                if dab != dba {
                    return Err(Error::invariant(
                        "symmetry",
                        format!("d({a},{b}) = {dab} but d({b},{a}) = {dba}"),
                    ));
                }
                if dab <= 0.0 {
                    return Err(Error::invariant(
                        "positivity",
                        format!("d({a},{b}) = {dab} for distinct points"),
                    ));
                }
            }
        }
        if let Metric::Euclidean { .. } = self.metric {
            return Ok(());
        }
        let violation = |a: usize, b: usize, c: usize| {
            let lhs = self.dist(a, b);
            let rhs = self.dist(a, c) + self.dist(c, b);
            // relative slack for sums of rounded distances
            if lhs > rhs * (1.0 + 1e-12) {
                Some(Error::invariant(
                    "triangle inequality",
                    format!("d({a},{b}) = {lhs} > d({a},{c}) + d({c},{b}) = {rhs}"),
                ))
            } else {
                None
            }
        };
        if n <= opts.exhaustive_limit {
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in 0..n {
                        if let Some(e) = violation(a, b, c) {
                            return Err(e);
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for _ in 0..opts.sampled_triples {
                let (a, b, c) = (
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                );
                if let Some(e) = violation(a, b, c) {
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    /// Open ball `{ y : d(x, y) < r }`, ascending ids.
    pub fn ball(&self, x: PointId, r: f64) -> Result<Vec<PointId>> {
        self.check_point(x)?;
        if r.is_nan() || r < 0.0 {
            return Err(Error::input(format!("ball radius must be >= 0, got {r}")));
        }
        Ok(self.points().filter(|&y| self.dist(x, y) < r).collect())
    }

    /// Total mass of the open ball; strictly positive since `x` belongs to it.
    pub fn ball_mass(&self, x: PointId, r: f64) -> Result<f64> {
        self.check_point(x)?;
        if r.is_nan() || r <= 0.0 {
            return Err(Error::input(format!("ball_mass needs r > 0, got {r}")));
        }
        Ok(self
            .points()
            .filter(|&y| self.dist(x, y) < r)
            .map(|y| self.mass[y])
            .sum())
    }

    /// Points within `cutoff` of `x` (open), sorted by distance then id.
    pub fn neighborhood(&self, x: PointId, cutoff: f64) -> Neighborhood {
        let mut entries: Vec<(f64, PointId)> = self
            .points()
            .filter_map(|y| {
                let d = self.dist(x, y);
                (d < cutoff).then_some((d, y))
            })
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Neighborhood { center: x, entries }
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|a| {
                ((a + 1)..n)
                    .map(|b| self.dist(a, b))
                    .fold(0.0_f64, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Smallest distance between distinct points (`+∞` for fewer than 2 points).
    pub fn min_positive_distance(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|a| {
                ((a + 1)..n)
                    .map(|b| self.dist(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Same points with every distance multiplied by `s > 0` (and the
    /// declared step with it).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::input(format!("scale factor must be > 0, got {s}")));
        }
        let metric = match &self.metric {
            Metric::Dense { n, data } => Metric::Dense {
                n: *n,
                data: data.iter().map(|d| s * d).collect(),
            },
            other => Metric::Scaled {
                base: Arc::new(other.clone()),
                factor: s,
            },
        };
        Ok(MetricMeasureSpace {
            metric,
            mass: self.mass.clone(),
            label: format!("{}*{}", self.label, s),
            step: self.step.map(|h| h * s),
            coords: self.coords.clone(),
        })
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(text)?;
        file.into_space()
    }

    pub fn to_space_file(&self) -> SpaceFile {
        let label = Some(self.label.clone());
        let mass = Some(self.mass.clone());
        match (&self.metric, &self.coords) {
            (Metric::Euclidean { .. }, Some(c)) => SpaceFile {
                coords: Some(c.rows()),
                metric: Some("euclidean".to_string()),
                dist_matrix: None,
                mass,
                label,
                step: self.step,
            },
            _ => {
                let n = self.len();
                let dense = self.metric.to_dense();
                SpaceFile {
                    coords: self.coords.as_ref().map(Coords::rows),
                    metric: None,
                    dist_matrix: Some(dense.chunks(n.max(1)).map(|r| r.to_vec()).collect()),
                    mass,
                    label,
                    step: self.step,
                }
            }
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_space_file())?)
    }
}

/// On-disk space description.
///
/// Either `coords` + `"metric": "euclidean"`, or `dist_matrix` (in which
/// case `coords`, if present, are chart coordinates only).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct SpaceFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl SpaceFile {
    pub fn into_space(self) -> Result<MetricMeasureSpace> {
        let label = self.label.unwrap_or_default();
        let n = match (&self.dist_matrix, &self.coords) {
            (Some(m), _) => m.len(),
            (None, Some(c)) => c.len(),
            (None, None) => {
                return Err(Error::input(
                    "space file needs either \"dist_matrix\" or \"coords\"",
                ))
            }
        };
        if let Some(m) = &self.mass {
            if m.len() != n {
                return Err(Error::invariant(
                    "mass length",
                    format!("{} masses for {n} points", m.len()),
                ));
            }
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::input(format!("step must be > 0, got {h}")));
            }
        }
        let space = match self.dist_matrix {
            Some(rows) => {
                let chart = match &self.coords {
                    Some(c) => {
                        if c.len() != n {
                            return Err(Error::invariant(
                                "coords length",
                                format!("{} coordinate rows for {n} points", c.len()),
                            ));
                        }
                        Some(Coords::from_rows(c)?)
                    }
                    None => None,
                };
                MetricMeasureSpace::from_dist_matrix(&rows, self.mass, label)?.with_coords(chart)
            }
            None => {
                match self.metric.as_deref() {
                    Some("euclidean") | None => {}
                    Some(other) => {
                        return Err(Error::input(format!("unsupported metric \"{other}\"")))
                    }
                }
                MetricMeasureSpace::from_coords(&self.coords.unwrap_or_default(), self.mass, label)?
            }
        };
        Ok(space.with_step(self.step))
    }
}

/// Points near a center, sorted by `(distance, id)`; the center comes first.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub center: PointId,
    pub entries: Vec<(f64, PointId)>,
}

impl Neighborhood {
    /// Number of entries with distance `< r`.
    #[inline]
    pub fn count_within(&self, r: f64) -> usize {
        self.entries.partition_point(|e| e.0 < r)
    }

    pub fn within(&self, r: f64) -> &[(f64, PointId)] {
        &self.entries[..self.count_within(r)]
    }
}

/// Geometric radii `r_max · θ^k`, truncated at the resolution floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleLadder {
    pub r_max: f64,
    pub ratio: f64,
    pub floor: f64,
    /// When set, radii were snapped down to half-integer multiples of it.
    pub step: Option<f64>,
    /// Strictly decreasing.
    pub radii: Vec<f64>,
}

impl ScaleLadder {
    pub fn new(r_max: f64, ratio: f64, floor: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::input(format!("ladder r_max must be > 0, got {r_max}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::input(format!(
                "ladder ratio must lie in (0,1), got {ratio}"
            )));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::input(format!("ladder floor must be > 0, got {floor}")));
        }
        let mut radii = Vec::new();
        let mut r = r_max;
        loop {
            radii.push(r);
            if r <= floor {
                break;
            }
            r *= ratio;
        }
        Ok(ScaleLadder {
            r_max,
            ratio,
            floor,
            step: None,
            radii,
        })
    }

    /// Move every radius down to the nearest `(k + ½)·h`, so that no lattice
    /// distance sits on a ball boundary. Radii below `h/2` are dropped and
    /// duplicates merged.
    pub fn snapped(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::input(format!("snap step must be > 0, got {h}")));
        }
        let mut out: Vec<f64> = Vec::with_capacity(self.radii.len());
        for &r in &self.radii {
            let k = (r / h - 0.5).floor();
            if k < 0.0 {
                continue;
            }
            let s = (k + 0.5) * h;
            if out.last().is_none_or(|&prev| s < prev) {
                out.push(s);
            }
        }
        if out.is_empty() {
            return Err(Error::input(format!(
                "no ladder radius survives snapping to step {h}"
            )));
        }
        self.radii = out;
        self.step = Some(h);
        Ok(self)
    }

    /// Ladder with defaults derived from the space: `r_max` = diameter,
    /// floor = declared step (else the minimal distance), snapped when the
    /// space declares a step.
    pub fn for_space(space: &MetricMeasureSpace, params: &LadderParams) -> Result<Self> {
        if space.len() < 2 && params.r_max.is_none() {
            return Err(Error::input("ladder needs at least two points or an explicit r_max"));
        }
        let floor = match params.floor {
            Some(f) => f,
            None => space.step().unwrap_or_else(|| space.min_positive_distance()),
        };
        let r_max = params.r_max.unwrap_or_else(|| space.diameter());
        let ladder = ScaleLadder::new(r_max, params.ratio, floor)?;
        match space.step() {
            Some(h) if params.snap => ladder.snapped(h),
            _ => Ok(ladder),
        }
    }

    /// Radii in increasing order.
    pub fn ascending(&self) -> Vec<f64> {
        self.radii.iter().rev().copied().collect()
    }

    /// Radii inside `[lo, hi]`, increasing.
    pub fn window_radii(&self, window: &ScaleWindow) -> Vec<f64> {
        self.radii
            .iter()
            .rev()
            .copied()
            .filter(|&r| r >= window.lo && r <= window.hi)
            .collect()
    }

    /// Default pointwise window `[floor, 16·floor]`.
    pub fn default_window(&self) -> ScaleWindow {
        ScaleWindow {
            lo: self.floor,
            hi: 16.0 * self.floor,
        }
    }
}

/// Parameters for [`ScaleLadder::for_space`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub r_max: Option<f64>,
    pub ratio: f64,
    pub floor: Option<f64>,
    pub snap: bool,
}

impl Default for LadderParams {
    fn default() -> Self {
        LadderParams {
            r_max: None,
            ratio: 0.75,
            floor: None,
            snap: true,
        }
    }
}

/// Closed interval of radii treated as "small r".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub lo: f64,
    pub hi: f64,
}

/// A `c`-separated net of a ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Net {
    pub members: Vec<PointId>,
    pub spacing: f64,
    pub region: Ball,
}

impl Net {
    /// Exhaustive check of separation (`d ≥ c` between members) and covering
    /// (every region point within `c` of a member).
    pub fn verify(&self, space: &MetricMeasureSpace) -> Result<()> {
        let c = self.spacing;
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                if space.dist(a, b) < c {
                    return Err(Error::invariant(
                        "net separation",
                        format!("members {a} and {b} are {} apart (< {c})", space.dist(a, b)),
                    ));
                }
            }
        }
        for y in space.ball(self.region.center, self.region.radius)? {
            if !self.members.iter().any(|&m| space.dist(m, y) < c) {
                return Err(Error::invariant(
                    "net covering",
                    format!("point {y} is not within {c} of any member"),
                ));
            }
        }
        Ok(())
    }
}

/// Greedy maximal `c`-separated subset of `points`, scanned in the given order.
pub fn greedy_net_of(space: &MetricMeasureSpace, points: &[PointId], c: f64) -> Vec<PointId> {
    let mut members: Vec<PointId> = Vec::new();
    for &p in points {
        if members.iter().all(|&m| space.dist(m, p) >= c) {
            members.push(p);
        }
    }
    members
}

/// Maximal `c`-separated net of a ball, greedy in ascending id order.
pub fn greedy_separated_net(space: &MetricMeasureSpace, region: Ball, c: f64) -> Result<Net> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::input(format!("net spacing must be > 0, got {c}")));
    }
    let points = space.ball(region.center, region.radius)?;
    if points.is_empty() {
        return Err(Error::input("net region is empty"));
    }
    Ok(Net {
        members: greedy_net_of(space, &points, c),
        spacing: c,
        region,
    })
}

/// Which ladder radii a doubling estimate ranges over.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoublingOptions {
    /// Skip radii below this value (e.g. `4·floor`, where discreteness dominates).
    pub exclude_below: Option<f64>,
}

fn doubling_radii(ladder: &ScaleLadder, opts: &DoublingOptions) -> Vec<f64> {
    ladder
        .ascending()
        .into_iter()
        .filter(|&r| opts.exclude_below.is_none_or(|lo| r >= lo))
        .collect()
}

/// `max μ(B(x,2r)) / μ(B(x,r))` over all points and the selected ladder radii.
pub fn measure_doubling_constant(
    space: &MetricMeasureSpace,
    ladder: &ScaleLadder,
    opts: &DoublingOptions,
) -> f64 {
    let radii = doubling_radii(ladder, opts);
    let Some(&r_top) = radii.last() else {
        return 1.0;
    };
    space
        .points()
        .into_par_iter()
        .map(|x| {
            let nb = space.neighborhood(x, 2.0 * r_top);
            let mut prefix = Vec::with_capacity(nb.entries.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &(_, y) in &nb.entries {
                acc += space.mass(y);
                prefix.push(acc);
            }
            radii
                .iter()
                .map(|&r| prefix[nb.count_within(2.0 * r)] / prefix[nb.count_within(r)])
                .fold(1.0_f64, f64::max)
        })
        .reduce(|| 1.0, f64::max)
}

/// Upper estimate of the metric doubling constant: the largest greedy
/// `(r/2)`-net of a ball `B(x, r)` over all points and selected radii.
pub fn metric_doubling_constant(
    space: &MetricMeasureSpace,
    ladder: &ScaleLadder,
    opts: &DoublingOptions,
) -> f64 {
    let radii = doubling_radii(ladder, opts);
    let Some(&r_top) = radii.last() else {
        return 1.0;
    };
    space
        .points()
        .into_par_iter()
        .map(|x| {
            let nb = space.neighborhood(x, r_top);
            radii
                .iter()
                .map(|&r| {
                    let mut ids: Vec<PointId> = nb.within(r).iter().map(|e| e.1).collect();
                    ids.sort_unstable();
                    greedy_net_of(space, &ids, r / 2.0).len()
                })
                .max()
                .unwrap_or(1)
        })
        .max()
        .unwrap_or(1) as f64
}
