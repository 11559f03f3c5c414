//! Deterministic desk-scale example spaces.
//!
//! Graph-like spaces (Heisenberg word metric, Laakso-type graph, Sierpinski
//! gasket) carry their shortest-path metric as a dense matrix and declare
//! their edge length as the lattice step.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Coords, Metric, MetricMeasureSpace, PointId};

/// Largest point count produced by any generator.
pub const MAX_POINTS: usize = 16_384;
/// Largest point count for generators that materialize a dense metric.
pub const MAX_DENSE_POINTS: usize = 4_096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `n^dim` lattice on `[0,1]^dim`.
    EuclideanGrid { n: usize, dim: usize },
    /// Base metric raised to the power `alpha ∈ (0,1)`.
    Snowflake {
        base: Box<GeneratorSpec>,
        alpha: f64,
    },
    /// Quotient of the disjoint union identifying `a[p]` with `b[q]` for each pair.
    Glued {
        a: Box<GeneratorSpec>,
        b: Box<GeneratorSpec>,
        pairs: Vec<(PointId, PointId)>,
    },
    /// Integer Heisenberg group ball of word-radius `radius`, generators x±, y±.
    HeisenbergWord { radius: usize },
    /// Laakso-type graph: each edge replaced by a path-diamond-path of 6 edges.
    LaaksoLike { level: usize },
    SierpinskiGasket { level: usize },
    /// Two `n × n` unit-square grids glued at one corner.
    CuspPair { n: usize },
}

impl GeneratorSpec {
    pub fn label(&self) -> String {
        match self {
            GeneratorSpec::EuclideanGrid { n, dim } => format!("euclidean_grid(n={n},dim={dim})"),
            GeneratorSpec::Snowflake { base, alpha } => {
                format!("snowflake({},alpha={alpha})", base.label())
            }
            GeneratorSpec::Glued { a, b, pairs } => {
                format!("glued({},{},pairs={})", a.label(), b.label(), pairs.len())
            }
            GeneratorSpec::HeisenbergWord { radius } => format!("heisenberg_word(R={radius})"),
            GeneratorSpec::LaaksoLike { level } => format!("laakso_like(level={level})"),
            GeneratorSpec::SierpinskiGasket { level } => {
                format!("sierpinski_gasket(level={level})")
            }
            GeneratorSpec::CuspPair { n } => format!("cusp_pair(n={n})"),
        }
    }
}

/// Build the space described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<MetricMeasureSpace> {
    let space = match spec {
        GeneratorSpec::EuclideanGrid { n, dim } => euclidean_grid(*n, *dim)?,
        GeneratorSpec::Snowflake { base, alpha } => snowflake(&generate(base)?, *alpha)?,
        GeneratorSpec::Glued { a, b, pairs } => glue(&generate(a)?, &generate(b)?, pairs)?,
        GeneratorSpec::HeisenbergWord { radius } => heisenberg_word(*radius)?,
        GeneratorSpec::LaaksoLike { level } => laakso_like(*level)?,
        GeneratorSpec::SierpinskiGasket { level } => sierpinski_gasket(*level)?,
        GeneratorSpec::CuspPair { n } => cusp_pair(*n)?,
    };
    Ok(space.with_label(spec.label()))
}

fn grid_index_to_coords(mut idx: usize, n: usize, dim: usize) -> Vec<usize> {
    let mut out = vec![0; dim];
    for k in (0..dim).rev() {
        out[k] = idx % n;
        idx /= n;
    }
    out
}

/// Lattice `{0, 1/(n-1), …, 1}^dim`, last axis varying fastest.
pub fn euclidean_grid(n: usize, dim: usize) -> Result<MetricMeasureSpace> {
    if n == 0 {
        return Err(Error::input("euclidean_grid needs n >= 1"));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::input(format!("euclidean_grid dim must be 1..=3, got {dim}")));
    }
    let count = n
        .checked_pow(dim as u32)
        .filter(|&c| c <= MAX_POINTS)
        .ok_or_else(|| Error::input(format!("euclidean_grid n^dim exceeds {MAX_POINTS}")))?;
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut coords = Vec::with_capacity(count * dim);
    for idx in 0..count {
        for i in grid_index_to_coords(idx, n, dim) {
            coords.push(i as f64 / denom);
        }
    }
    let chart = Coords {
        dim,
        data: coords.clone(),
    };
    let space = MetricMeasureSpace::from_parts(
        Metric::Euclidean { dim, coords },
        vec![1.0; count],
        format!("euclidean_grid(n={n},dim={dim})"),
    )
    .with_coords(Some(chart))
    .with_step((n > 1).then(|| 1.0 / denom));
    Ok(space)
}

/// Distances `d^alpha`; masses and chart coordinates carried over.
pub fn snowflake(base: &MetricMeasureSpace, alpha: f64) -> Result<MetricMeasureSpace> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("snowflake alpha must lie in (0,1), got {alpha}")));
    }
    let space = MetricMeasureSpace::from_parts(
        Metric::Snowflake {
            base: Arc::new(base.metric().clone()),
            alpha,
        },
        base.masses().to_vec(),
        format!("snowflake({},alpha={alpha})", base.label()),
    )
    .with_coords(base.coords().cloned());
    Ok(space)
}

/// Quotient path metric of `a ⊔ b` with `a[p] ~ b[q]` for each pair.
///
/// Output ids: all points of `a` (glued points keep their `a` id), then the
/// unglued points of `b` in order. Identified points carry the sum of both
/// masses. Chart coordinates, when both sides have them, are concatenated
/// blockwise with zeros on the other side's block.
pub fn glue(
    a: &MetricMeasureSpace,
    b: &MetricMeasureSpace,
    pairs: &[(PointId, PointId)],
) -> Result<MetricMeasureSpace> {
    if pairs.is_empty() {
        return Err(Error::input("glued space needs at least one glue pair"));
    }
    let (na, nb) = (a.len(), b.len());
    let mut b_to_a: HashMap<PointId, PointId> = HashMap::new();
    let mut a_glued = vec![false; na];
    for &(p, q) in pairs {
        if p >= na || q >= nb {
            return Err(Error::input(format!("glue pair ({p},{q}) out of range")));
        }
        if a_glued[p] || b_to_a.contains_key(&q) {
            return Err(Error::input(format!("glue pair ({p},{q}) reuses a point")));
        }
        a_glued[p] = true;
        b_to_a.insert(q, p);
    }
    let b_only: Vec<PointId> = (0..nb).filter(|q| !b_to_a.contains_key(q)).collect();
    let n = na + b_only.len();
    if n > MAX_DENSE_POINTS {
        return Err(Error::input(format!("glued space exceeds {MAX_DENSE_POINTS} points")));
    }
    // per output point: representative in a and/or b
    let mut reps: Vec<(Option<PointId>, Option<PointId>)> = (0..na).map(|p| (Some(p), None)).collect();
    for &(p, q) in pairs {
        reps[p].1 = Some(q);
    }
    reps.extend(b_only.iter().map(|&q| (None, Some(q))));

    // shortest chains between glue points
    let g = pairs.len();
    let mut gd = vec![0.0; g * g];
    for i in 0..g {
        for j in 0..g {
            gd[i * g + j] = a.dist(pairs[i].0, pairs[j].0).min(b.dist(pairs[i].1, pairs[j].1));
        }
    }
    for k in 0..g {
        for i in 0..g {
            for j in 0..g {
                let via = gd[i * g + k] + gd[k * g + j];
                if via < gd[i * g + j] {
                    gd[i * g + j] = via;
                }
            }
        }
    }
    let to_glue = |u: usize, k: usize| -> f64 {
        let (ra, rb) = reps[u];
        let da = ra.map_or(f64::INFINITY, |p| a.dist(p, pairs[k].0));
        let db = rb.map_or(f64::INFINITY, |q| b.dist(q, pairs[k].1));
        da.min(db)
    };
    // e[u][k]: shortest way from u to glue point k
    let mut e = vec![f64::INFINITY; n * g];
    for u in 0..n {
        let direct: Vec<f64> = (0..g).map(|j| to_glue(u, j)).collect();
        for k in 0..g {
            e[u * g + k] = (0..g)
                .map(|j| direct[j] + gd[j * g + k])
                .fold(f64::INFINITY, f64::min);
        }
    }
    let mut data = vec![0.0; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let (ua, ub) = reps[u];
            let (va, vb) = reps[v];
            let mut d = f64::INFINITY;
            if let (Some(x), Some(y)) = (ua, va) {
                d = d.min(a.dist(x, y));
            }
            if let (Some(x), Some(y)) = (ub, vb) {
                d = d.min(b.dist(x, y));
            }
            for k in 0..g {
                d = d.min(e[u * g + k] + to_glue(v, k));
            }
            data[u * n + v] = d;
            data[v * n + u] = d;
        }
    }
    let mass: Vec<f64> = reps
        .iter()
        .map(|&(ra, rb)| ra.map_or(0.0, |p| a.mass(p)) + rb.map_or(0.0, |q| b.mass(q)))
        .collect();
    let coords = match (a.coords(), b.coords()) {
        (Some(ca), Some(cb)) => {
            let dim = ca.dim + cb.dim;
            let mut out = Vec::with_capacity(n * dim);
            for &(ra, rb) in &reps {
                match ra {
                    Some(p) => out.extend_from_slice(ca.point(p)),
                    None => out.extend(std::iter::repeat_n(0.0, ca.dim)),
                }
                match rb {
                    Some(q) => out.extend_from_slice(cb.point(q)),
                    None => out.extend(std::iter::repeat_n(0.0, cb.dim)),
                }
            }
            Some(Coords { dim, data: out })
        }
        _ => None,
    };
    let step = match (a.step(), b.step()) {
        (Some(x), Some(y)) if x == y => Some(x),
        _ => None,
    };
    Ok(MetricMeasureSpace::from_parts(
        Metric::Dense { n, data },
        mass,
        format!("glued({},{})", a.label(), b.label()),
    )
    .with_coords(coords)
    .with_step(step))
}

/// Two `n × n` grids on the unit square sharing their `(0,0)` corner.
pub fn cusp_pair(n: usize) -> Result<MetricMeasureSpace> {
    if n < 2 {
        return Err(Error::input("cusp_pair needs n >= 2"));
    }
    let g = euclidean_grid(n, 2)?;
    glue(&g, &g, &[(0, 0)])
}

type HeisElem = (i64, i64, i64);

fn heis_mul(g: HeisElem, h: HeisElem) -> HeisElem {
    (g.0 + h.0, g.1 + h.1, g.2 + h.2 + g.0 * h.1)
}

fn heis_inv(g: HeisElem) -> HeisElem {
    (-g.0, -g.1, -g.2 + g.0 * g.1)
}

/// Word lengths of all elements within `radius` of the identity.
pub fn heisenberg_word_lengths(radius: usize) -> HashMap<HeisElem, usize> {
    let gens: [HeisElem; 4] = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)];
    let mut len = HashMap::new();
    len.insert((0, 0, 0), 0usize);
    let mut queue = VecDeque::from([(0i64, 0i64, 0i64)]);
    while let Some(g) = queue.pop_front() {
        let l = len[&g];
        if l == radius {
            continue;
        }
        for s in gens {
            let h = heis_mul(g, s);
            if let std::collections::hash_map::Entry::Vacant(e) = len.entry(h) {
                e.insert(l + 1);
                queue.push_back(h);
            }
        }
    }
    len
}

/// Ball of word-radius `radius` in the integer Heisenberg group with the
/// (left-invariant) word metric. Ids are ordered by word length, then
/// lexicographically by `(a, b, c)`; id 0 is the identity.
pub fn heisenberg_word(radius: usize) -> Result<MetricMeasureSpace> {
    if radius > 9 {
        return Err(Error::input(format!("heisenberg_word radius must be <= 9, got {radius}")));
    }
    let len = heisenberg_word_lengths(2 * radius);
    let mut elems: Vec<(usize, HeisElem)> = len
        .iter()
        .filter(|(_, &l)| l <= radius)
        .map(|(&g, &l)| (l, g))
        .collect();
    elems.sort();
    let n = elems.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let gi = heis_inv(elems[i].1);
        for j in (i + 1)..n {
            let d = len[&heis_mul(gi, elems[j].1)] as f64;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    let coords = Coords {
        dim: 3,
        data: elems
            .iter()
            .flat_map(|(_, g)| [g.0 as f64, g.1 as f64, g.2 as f64])
            .collect(),
    };
    Ok(MetricMeasureSpace::from_parts(
        Metric::Dense { n, data },
        vec![1.0; n],
        format!("heisenberg_word(R={radius})"),
    )
    .with_coords(Some(coords))
    .with_step(Some(1.0)))
}

/// Shortest-path metric of an unweighted graph, scaled by `edge`.
fn graph_metric(adj: &[Vec<usize>], edge: f64) -> Result<Vec<f64>> {
    let n = adj.len();
    let mut data = vec![0.0; n * n];
    let mut hops = vec![usize::MAX; n];
    for s in 0..n {
        hops.iter_mut().for_each(|h| *h = usize::MAX);
        hops[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if hops[v] == usize::MAX {
                    hops[v] = hops[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for t in 0..n {
            if hops[t] == usize::MAX {
                return Err(Error::computation("graph is disconnected"));
            }
            data[s * n + t] = hops[t] as f64 * edge;
        }
    }
    Ok(data)
}

/// Laakso-type graph: start from one edge; at each level replace every edge
/// `u–w` by `u–m1`, `m1–p`, `m1–q`, `p–m2`, `q–m2`, `m2–w` (a path with a
/// doubled middle half). Edge length `4^-level`, so the two original
/// endpoints (ids 0 and 1) stay at distance 1.
pub fn laakso_like(level: usize) -> Result<MetricMeasureSpace> {
    if level > 4 {
        return Err(Error::input(format!("laakso_like level must be <= 4, got {level}")));
    }
    let mut n = 2usize;
    let mut edges: Vec<(usize, usize)> = vec![(0, 1)];
    for _ in 0..level {
        let mut next = Vec::with_capacity(edges.len() * 6);
        for &(u, w) in &edges {
            let (m1, p, q, m2) = (n, n + 1, n + 2, n + 3);
            n += 4;
            next.extend_from_slice(&[(u, m1), (m1, p), (m1, q), (p, m2), (q, m2), (m2, w)]);
        }
        edges = next;
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, w) in &edges {
        adj[u].push(w);
        adj[w].push(u);
    }
    let edge = 0.25f64.powi(level as i32);
    let data = graph_metric(&adj, edge)?;
    Ok(MetricMeasureSpace::from_parts(
        Metric::Dense { n, data },
        vec![1.0; n],
        format!("laakso_like(level={level})"),
    )
    .with_step(Some(edge)))
}

/// Level-`level` Sierpinski gasket graph with edge length `2^-level`;
/// corners at distance 1. Vertices are lattice points `(i, j)`, `i + j ≤ 2^level`,
/// embedded as chart coordinates in the plane.
pub fn sierpinski_gasket(level: usize) -> Result<MetricMeasureSpace> {
    if level > 6 {
        return Err(Error::input(format!("sierpinski_gasket level must be <= 6, got {level}")));
    }
    let mut corners: Vec<(i64, i64)> = vec![(0, 0)];
    for k in 1..=level {
        let s = 1i64 << (k - 1);
        let base = corners.clone();
        corners.extend(base.iter().map(|&(i, j)| (i + s, j)));
        corners.extend(base.iter().map(|&(i, j)| (i, j + s)));
    }
    let mut verts: Vec<(i64, i64)> = corners
        .iter()
        .flat_map(|&(i, j)| [(i, j), (i + 1, j), (i, j + 1)])
        .collect();
    verts.sort_by_key(|&(i, j)| (j, i));
    verts.dedup();
    let index: HashMap<(i64, i64), usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for &(i, j) in &corners {
        let tri = [index[&(i, j)], index[&(i + 1, j)], index[&(i, j + 1)]];
        for x in 0..3 {
            for y in 0..3 {
                if x != y && !adj[tri[x]].contains(&tri[y]) {
                    adj[tri[x]].push(tri[y]);
                }
            }
        }
    }
    let edge = 0.5f64.powi(level as i32);
    let n = verts.len();
    let data = graph_metric(&adj, edge)?;
    let h = 3f64.sqrt() / 2.0;
    let coords = Coords {
        dim: 2,
        data: verts
            .iter()
            .flat_map(|&(i, j)| [(i as f64 + j as f64 / 2.0) * edge, j as f64 * h * edge])
            .collect(),
    };
    Ok(MetricMeasureSpace::from_parts(
        Metric::Dense { n, data },
        vec![1.0; n],
        format!("sierpinski_gasket(level={level})"),
    )
    .with_coords(Some(coords))
    .with_step(Some(edge)))
}

/// Desk-scale corpus used by the property suites: every generator kind at
/// a size of at most `max_points` points.
pub fn corpus(max_points: usize) -> Vec<GeneratorSpec> {
    let grid1 = GeneratorSpec::EuclideanGrid { n: 41, dim: 1 };
    let all = vec![
        grid1.clone(),
        GeneratorSpec::EuclideanGrid { n: 24, dim: 2 },
        GeneratorSpec::EuclideanGrid { n: 8, dim: 3 },
        GeneratorSpec::Snowflake {
            base: Box::new(GeneratorSpec::EuclideanGrid { n: 101, dim: 1 }),
            alpha: 0.5,
        },
        GeneratorSpec::Glued {
            a: Box::new(grid1),
            b: Box::new(GeneratorSpec::EuclideanGrid { n: 16, dim: 2 }),
            pairs: vec![(0, 0)],
        },
        GeneratorSpec::HeisenbergWord { radius: 6 },
        GeneratorSpec::LaaksoLike { level: 3 },
        GeneratorSpec::SierpinskiGasket { level: 4 },
        GeneratorSpec::CuspPair { n: 12 },
    ];
    all.into_iter()
        .filter(|s| generate(s).map(|sp| sp.len() <= max_points).unwrap_or(false))
        .collect()
}
