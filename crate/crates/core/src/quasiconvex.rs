//! ε-paths, infimal path length and recursive gap filling.
//!
//! On a finite space the infimal length of an ε-path from a set `S` to `x` is
//! a multi-source shortest path in the ε-graph (edges `0 < d < ε`).
//! [`quasiconvexify`] joins two points by repeatedly bridging each gap with a
//! shortest path between quarter-radius balls around its endpoints; each round
//! at least halves the total gap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::space::{MetricMeasureSpace, PointId};

/// Undirected graph with an edge `a–b` of weight `d(a, b)` iff `0 < d(a,b) < eps`.
#[derive(Debug, Clone)]
pub struct EpsGraph {
    pub eps: f64,
    adj: Vec<Vec<(PointId, f64)>>,
}

pub fn eps_graph(space: &MetricMeasureSpace, eps: f64) -> Result<EpsGraph> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::input(format!("eps must be > 0, got {eps}")));
    }
    let adj = space
        .points()
        .into_par_iter()
        .map(|a| {
            space
                .neighborhood(a, eps)
                .entries
                .into_iter()
                .filter(|&(d, b)| b != a && d > 0.0)
                .map(|(d, b)| (b, d))
                .collect()
        })
        .collect();
    Ok(EpsGraph { eps, adj })
}

impl EpsGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, a: PointId) -> &[(PointId, f64)] {
        &self.adj[a]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted edge list `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(PointId, PointId)> {
        let mut out: Vec<(PointId, PointId)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |e| e.0 > a).map(move |e| (a, e.0)))
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier(f64, PointId);

impl Eq for Frontier {}

impl Ord for Frontier {
    // max-heap: reverse so the smallest (dist, id) pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of a multi-source Dijkstra run.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pred: Vec<Option<PointId>>,
    /// First target popped, i.e. argmin of `dist` over the targets with
    /// ties broken by smallest id.
    pub reached: Option<PointId>,
}

impl ShortestPaths {
    /// Vertices from a source to `x`.
    pub fn path_to(&self, x: PointId) -> Vec<PointId> {
        let mut out = vec![x];
        let mut cur = x;
        while let Some(p) = self.pred[cur] {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}

/// Dijkstra from `sources`; stops at the first settled vertex of `targets`
/// when given.
pub fn shortest_paths(
    graph: &EpsGraph,
    sources: &[PointId],
    targets: Option<&[PointId]>,
) -> ShortestPaths {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut is_target = vec![false; n];
    if let Some(ts) = targets {
        for &t in ts {
            is_target[t] = true;
        }
    }
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Frontier(0.0, s));
    }
    let mut reached = None;
    while let Some(Frontier(d, a)) = heap.pop() {
        if done[a] {
            continue;
        }
        done[a] = true;
        if is_target[a] {
            reached = Some(a);
            break;
        }
        for &(b, w) in graph.neighbors(a) {
            let nd = d + w;
            if nd < dist[b] {
                dist[b] = nd;
                pred[b] = Some(a);
                heap.push(Frontier(nd, b));
            }
        }
    }
    ShortestPaths {
        dist,
        pred,
        reached,
    }
}

/// `u(x)` = infimal length of an ε-path from `sources` to `x` (`+∞` when
/// unreachable), optionally truncated to `min(u, A)`.
pub fn infimal_eps_path_length(
    graph: &EpsGraph,
    sources: &[PointId],
    truncate: Option<f64>,
) -> Result<ScalarField> {
    if sources.is_empty() {
        return Err(Error::input("source set is empty"));
    }
    if let Some(&s) = sources.iter().find(|&&s| s >= graph.len()) {
        return Err(Error::input(format!("source point {s} out of range")));
    }
    let mut u = shortest_paths(graph, sources, None).dist;
    if let Some(a) = truncate {
        for v in &mut u {
            *v = v.min(a);
        }
    }
    Ok(ScalarField::new(format!("u(eps={})", graph.eps), u))
}

/// An ε-path `x_0, …, x_k` with its length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsPath {
    pub eps: f64,
    pub vertices: Vec<PointId>,
    pub length: f64,
}

impl EpsPath {
    pub fn new(space: &MetricMeasureSpace, eps: f64, vertices: Vec<PointId>) -> Self {
        let length = path_length(space, &vertices);
        EpsPath {
            eps,
            vertices,
            length,
        }
    }

    /// Every step is shorter than `eps` and `length` equals the recomputed sum.
    pub fn verify(&self, space: &MetricMeasureSpace) -> Result<()> {
        for w in self.vertices.windows(2) {
            let d = space.dist(w[0], w[1]);
            if d >= self.eps {
                return Err(Error::invariant(
                    "eps-path step",
                    format!("step {}→{} has length {d} ≥ {}", w[0], w[1], self.eps),
                ));
            }
        }
        let recomputed = path_length(space, &self.vertices);
        if recomputed != self.length {
            return Err(Error::invariant(
                "eps-path length",
                format!("stored {} but steps sum to {recomputed}", self.length),
            ));
        }
        Ok(())
    }
}

pub fn path_length(space: &MetricMeasureSpace, vertices: &[PointId]) -> f64 {
    vertices.windows(2).map(|w| space.dist(w[0], w[1])).sum()
}

/// Shortest ε-path from `B(p, f·r)` to `B(q, f·r)`, `r = d(p, q)`, `f` the
/// ball fraction (¼ by default). The endpoint in the target ball minimizes
/// the path length, ties going to the smallest id.
pub fn half_gap_path(
    space: &MetricMeasureSpace,
    graph: &EpsGraph,
    p: PointId,
    q: PointId,
    fraction: f64,
) -> Result<EpsPath> {
    space.check_point(p)?;
    space.check_point(q)?;
    let r = space.dist(p, q);
    if r <= 0.0 {
        return Err(Error::input(format!("half-gap path needs p ≠ q, got {p}, {q}")));
    }
    if !(fraction > 0.0) {
        return Err(Error::input(format!("ball fraction must be > 0, got {fraction}")));
    }
    let sources = space.ball(p, fraction * r)?;
    let targets = space.ball(q, fraction * r)?;
    if let Some(&common) = sources.iter().find(|s| targets.binary_search(s).is_ok()) {
        return Ok(EpsPath::new(space, graph.eps, vec![common]));
    }
    let sp = shortest_paths(graph, &sources, Some(&targets));
    let Some(end) = sp.reached else {
        return Err(Error::computation(format!(
            "no eps-path from B({p}, {}) to B({q}, {}) at eps = {}",
            fraction * r,
            fraction * r,
            graph.eps
        )));
    };
    Ok(EpsPath::new(space, graph.eps, sp.path_to(end)))
}

/// Gap statistics after one round of filling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRound {
    pub round: usize,
    /// Gaps still of size ≥ eps.
    pub open_gaps: usize,
    pub total_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quasiconvexified {
    pub path: EpsPath,
    /// Round 0 is the initial gap `d(x, x')`.
    pub rounds: Vec<GapRound>,
    /// `path.length / d(x, x')`.
    pub stretch: f64,
}

/// Join `x` and `x'` by an ε-path through recursive half-gap filling.
pub fn quasiconvexify(
    space: &MetricMeasureSpace,
    graph: &EpsGraph,
    x: PointId,
    x2: PointId,
    max_rounds: usize,
) -> Result<Quasiconvexified> {
    space.check_point(x)?;
    space.check_point(x2)?;
    let d0 = space.dist(x, x2);
    if d0 <= 0.0 {
        return Err(Error::input(format!("quasiconvexify needs distinct points, got {x}, {x2}")));
    }
    let eps = graph.eps;
    // pieces are ε-paths; consecutive pieces are separated by a gap ≥ eps
    let mut pieces: Vec<Vec<PointId>> = vec![vec![x]];
    push_piece(space, eps, &mut pieces, vec![x2]);
    let total = |pieces: &[Vec<PointId>]| -> f64 {
        pieces
            .windows(2)
            .map(|w| space.dist(*w[0].last().unwrap(), w[1][0]))
            .sum()
    };
    let mut rounds = vec![GapRound {
        round: 0,
        open_gaps: pieces.len() - 1,
        total_gap: total(&pieces),
    }];
    let mut round = 0;
    while pieces.len() > 1 {
        round += 1;
        if round > max_rounds {
            return Err(Error::computation(format!(
                "gaps not closed after {max_rounds} rounds (total gap {})",
                rounds.last().unwrap().total_gap
            )));
        }
        let fills: Vec<Result<EpsPath>> = pieces
            .windows(2)
            .map(|w| (*w[0].last().unwrap(), w[1][0]))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(a, b)| half_gap_path(space, graph, a, b, 0.25))
            .collect();
        let old = std::mem::take(&mut pieces);
        let mut fills = fills.into_iter();
        for (i, piece) in old.into_iter().enumerate() {
            if i > 0 {
                let fill = fills.next().unwrap()?;
                push_piece(space, eps, &mut pieces, fill.vertices);
            }
            push_piece(space, eps, &mut pieces, piece);
        }
        let prev = rounds.last().unwrap().total_gap;
        let now = total(&pieces);
        if now > 0.5 * prev {
            return Err(Error::computation(format!(
                "gap total {now} in round {round} is more than half of {prev}"
            )));
        }
        rounds.push(GapRound {
            round,
            open_gaps: pieces.len() - 1,
            total_gap: now,
        });
    }
    let path = EpsPath::new(space, eps, pieces.pop().unwrap());
    path.verify(space)?;
    let stretch = path.length / d0;
    Ok(Quasiconvexified {
        path,
        rounds,
        stretch,
    })
}

/// Append `next`, merging it into the last piece when the gap is `< eps`.
fn push_piece(space: &MetricMeasureSpace, eps: f64, pieces: &mut Vec<Vec<PointId>>, next: Vec<PointId>) {
    match pieces.last_mut() {
        Some(last) if space.dist(*last.last().unwrap(), next[0]) < eps => {
            let skip = usize::from(*last.last().unwrap() == next[0]);
            last.extend_from_slice(&next[skip..]);
        }
        _ => pieces.push(next),
    }
}

/// Distinct ordered pairs drawn with a seeded generator.
pub fn sample_pairs(space: &MetricMeasureSpace, count: usize, seed: u64) -> Vec<(PointId, PointId)> {
    let n = space.len();
    if n < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiconvexityEstimate {
    pub eps: f64,
    /// Max stretch; `+∞` when some pair could not be joined.
    pub constant: f64,
    pub worst_pair: Option<(PointId, PointId)>,
    pub unreachable: Option<(PointId, PointId)>,
    pub pairs: usize,
}

/// Largest quasiconvexified stretch over `pairs`.
pub fn quasiconvexity_constant(
    space: &MetricMeasureSpace,
    graph: &EpsGraph,
    pairs: &[(PointId, PointId)],
    max_rounds: usize,
) -> Result<QuasiconvexityEstimate> {
    let mut est = QuasiconvexityEstimate {
        eps: graph.eps,
        constant: 1.0,
        worst_pair: None,
        unreachable: None,
        pairs: pairs.len(),
    };
    let results: Vec<Result<Quasiconvexified>> = pairs
        .par_iter()
        .map(|&(a, b)| quasiconvexify(space, graph, a, b, max_rounds))
        .collect();
    for (&pair, res) in pairs.iter().zip(results) {
        match res {
            Ok(q) => {
                if est.worst_pair.is_none() || q.stretch > est.constant {
                    est.constant = est.constant.max(q.stretch);
                    est.worst_pair = Some(pair);
                }
            }
            Err(Error::Computation(_)) => {
                est.constant = f64::INFINITY;
                est.unreachable = Some(pair);
                est.worst_pair = Some(pair);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(est)
}
