//! Chebyshev (minimax) fits `min_λ max_i |b_i − a_i·λ|`.
//!
//! The epigraph LP is solved by a dense simplex with Bland's rule; among
//! optimal `λ` the one of least Euclidean norm is then found by a primal
//! active-set method on the optimal polytope.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-12;

/// Optimal value and minimal-norm minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevFit {
    pub lambda: Vec<f64>,
    /// `max_i |b_i − a_i·λ|` at the returned `λ`.
    pub residual: f64,
    /// Optimal LP value.
    pub optimum: f64,
}

/// `rows[i]` is `a_i`; all rows must have the same length `n ≥ 1`.
pub fn chebyshev_fit(rows: &[Vec<f64>], b: &[f64]) -> ChebyshevFit {
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 {
        return ChebyshevFit {
            lambda: vec![0.0; n],
            residual: b.iter().map(|v| v.abs()).fold(0.0, f64::max),
            optimum: b.iter().map(|v| v.abs()).fold(0.0, f64::max),
        };
    }
    let (lp_lambda, optimum) = simplex_minimax(rows, b);
    let lp_res = max_residual(rows, b, &lp_lambda);
    let level = optimum.max(lp_res) * (1.0 + 1e-9) + 1e-15;
    let lambda = match min_norm_in_slab(rows, b, level, &lp_lambda) {
        Some(l) if max_residual(rows, b, &l) <= level => l,
        _ => lp_lambda,
    };
    ChebyshevFit {
        residual: max_residual(rows, b, &lambda),
        lambda,
        optimum,
    }
}

pub fn max_residual(rows: &[Vec<f64>], b: &[f64], lambda: &[f64]) -> f64 {
    rows.iter()
        .zip(b)
        .map(|(a, &bi)| (bi - dot(a, lambda)).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximize `u` subject to `±a_i·λ + u ≤ t0 ∓ b_i`, `t0 = max|b|`, with
/// `λ = λ⁺ − λ⁻`; the optimum is `t0 − u`. The right-hand sides are
/// nonnegative so the slack basis starts feasible.
fn simplex_minimax(rows: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, f64) {
    let n = rows[0].len();
    let m = 2 * rows.len();
    let t0 = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    // columns: λ⁺ (n), λ⁻ (n), u, slacks (m), rhs
    let nv = 2 * n + 1;
    let width = nv + m + 1;
    let mut tab = vec![0.0; (m + 1) * width];
    for (i, (a, &bi)) in rows.iter().zip(b).enumerate() {
        for (sign, r) in [(-1.0, 2 * i), (1.0, 2 * i + 1)] {
            let row = &mut tab[r * width..(r + 1) * width];
            for j in 0..n {
                row[j] = sign * a[j];
                row[n + j] = -sign * a[j];
            }
            row[2 * n] = 1.0;
            row[nv + r] = 1.0;
            row[width - 1] = (t0 + sign * bi).max(0.0);
        }
    }
    // objective row holds reduced costs of −u
    tab[m * width + 2 * n] = -1.0;
    let mut basis: Vec<usize> = (nv..nv + m).collect();
    let at = |tab: &[f64], r: usize, c: usize| tab[r * width + c];
    for _ in 0..50 * (m + nv) {
        // Bland: lowest-index column with negative reduced cost
        let Some(col) = (0..nv + m).find(|&c| at(&tab, m, c) < -PIVOT_EPS) else {
            break;
        };
        let mut pivot: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = at(&tab, r, col);
            if a > PIVOT_EPS {
                let ratio = at(&tab, r, width - 1) / a;
                let better = match pivot {
                    None => true,
                    Some((pr, best)) => ratio < best || (ratio == best && basis[r] < basis[pr]),
                };
                if better {
                    pivot = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = pivot else {
            break;
        };
        let pv = at(&tab, pr, col);
        for c in 0..width {
            tab[pr * width + c] /= pv;
        }
        for r in 0..=m {
            if r == pr {
                continue;
            }
            let factor = at(&tab, r, col);
            if factor != 0.0 {
                for c in 0..width {
                    tab[r * width + c] -= factor * tab[pr * width + c];
                }
            }
        }
        basis[pr] = col;
    }
    let mut x = vec![0.0; nv];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < nv {
            x[bv] = at(&tab, r, width - 1);
        }
    }
    let lambda: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
    (lambda, (t0 - x[2 * n]).max(0.0))
}

/// Least-norm `λ` with `|b_i − a_i·λ| ≤ level` for all `i`, starting from a
/// feasible `start`.
fn min_norm_in_slab(rows: &[Vec<f64>], b: &[f64], level: f64, start: &[f64]) -> Option<Vec<f64>> {
    let n = start.len();
    // G λ ≤ h with rows ±a_i
    let mut g: Vec<Vec<f64>> = Vec::with_capacity(2 * rows.len());
    let mut h: Vec<f64> = Vec::with_capacity(2 * rows.len());
    for (a, &bi) in rows.iter().zip(b) {
        g.push(a.clone());
        h.push(level + bi);
        g.push(a.iter().map(|v| -v).collect());
        h.push(level - bi);
    }
    let scale = h.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut lam = DVector::from_column_slice(start);
    let mut work: Vec<usize> = (0..g.len())
        .filter(|&i| h[i] - dot(&g[i], lam.as_slice()) <= tol)
        .collect();
    // keep a linearly independent working set
    work = independent_subset(&g, &work, n);
    for _ in 0..20 * (g.len() + n) {
        let target = if work.is_empty() {
            DVector::zeros(n)
        } else {
            let gw = DMatrix::from_fn(work.len(), n, |r, c| g[work[r]][c]);
            let hw = DVector::from_iterator(work.len(), work.iter().map(|&i| h[i]));
            gw.clone().pseudo_inverse(1e-13).ok()? * hw
        };
        let p = &target - &lam;
        if p.norm() <= 1e-14 * (1.0 + lam.norm()) {
            if work.is_empty() {
                return Some(lam.iter().copied().collect());
            }
            // multipliers from λ + G_Wᵀ μ = 0
            let gwt = DMatrix::from_fn(n, work.len(), |r, c| g[work[c]][r]);
            let mu = gwt.pseudo_inverse(1e-13).ok()? * (-&lam);
            let (k, most) = mu
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
            if most >= -1e-12 * (1.0 + lam.norm()) {
                return Some(lam.iter().copied().collect());
            }
            work.remove(k);
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..g.len() {
            if work.contains(&i) {
                continue;
            }
            let gp = dot(&g[i], p.as_slice());
            if gp > 1e-15 {
                let room = (h[i] - dot(&g[i], lam.as_slice())).max(0.0);
                let a = room / gp;
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        lam += alpha * &p;
        if let Some(i) = blocking {
            work.push(i);
            work = independent_subset(&g, &work, n);
        }
    }
    None
}

/// Greedy subset of `idx` whose rows of `g` are linearly independent.
fn independent_subset(g: &[Vec<f64>], idx: &[usize], n: usize) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &i in idx {
        let mut trial = kept.clone();
        trial.push(i);
        let m = DMatrix::from_fn(trial.len(), n, |r, c| g[trial[r]][c]);
        let sv = m.singular_values();
        let smax = sv.max();
        if trial.len() <= n && sv.min() > 1e-10 * smax.max(f64::MIN_POSITIVE) {
            kept = trial;
        }
    }
    kept
}
