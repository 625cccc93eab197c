//! Quadratic problems over the probability simplex.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Euclidean projection onto `{s >= 0, sum(s) = 1}` by sorting.
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Curvatures below this are treated as zero.
const FLAT: f64 = 1e-300;

/// Minimizes `sum_i q_i u_i² - 2 p_i u_i` over the simplex, writing into `out`.
///
/// When the unconstrained Lagrange solution `u_i = (p_i + μ) / q_i` is
/// non-negative this is exactly that closed form; otherwise clusters are
/// dropped from the active set until the KKT conditions hold. Clusters with
/// zero curvature (a point sitting on a center with no coupling) absorb any
/// remaining mass uniformly.
pub fn minimize_separable_column(p: &[f64], q: &[f64], out: &mut [f64]) {
    let c = p.len();
    debug_assert!(q.len() == c && out.len() == c);
    let flat = q.iter().filter(|&&qi| qi <= FLAT).count();

    if flat > 0 {
        let mut used = 0.0;
        for i in 0..c {
            out[i] = if q[i] > FLAT { (p[i] / q[i]).max(0.0) } else { 0.0 };
            used += out[i];
        }
        if used <= 1.0 {
            let share = (1.0 - used) / flat as f64;
            for i in 0..c {
                if q[i] <= FLAT {
                    out[i] = share;
                }
            }
            return;
        }
        // Too much mass on the curved clusters: μ < 0, flat clusters get nothing.
    }

    let mut order: Vec<usize> = (0..c).filter(|&i| q[i] > FLAT).collect();
    // u_i > 0 iff p_i > -μ: activate clusters by decreasing p.
    order.sort_unstable_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let mut sum_pq = 0.0;
    let mut sum_inv = 0.0;
    let mut mu = 0.0;
    for (j, &i) in order.iter().enumerate() {
        sum_pq += p[i] / q[i];
        sum_inv += 1.0 / q[i];
        mu = (1.0 - sum_pq) / sum_inv;
        let next_inactive = order.get(j + 1).is_none_or(|&nx| p[nx] + mu <= 0.0);
        if next_inactive {
            break;
        }
    }
    for i in 0..c {
        out[i] = if q[i] > FLAT { ((p[i] + mu) / q[i]).max(0.0) } else { 0.0 };
    }
}

/// Outcome of the projected-gradient solve of the safety-degree QP.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub s: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub const QP_MAX_ITERATIONS: usize = 10_000;
pub const QP_TOLERANCE: f64 = 1e-8;

/// Value of `½ Σ Ω_k s_k² + Σ Δ_k s_k`.
pub fn separable_qp_objective(omega: &[f64], delta: &[f64], s: &[f64]) -> f64 {
    omega.iter().zip(delta).zip(s).map(|((o, d), s)| 0.5 * o * s * s + d * s).sum()
}

/// KKT residual `‖s − P(s − ∇J)‖∞` of the separable QP at `s`.
pub fn kkt_residual(omega: &[f64], delta: &[f64], s: &[f64]) -> f64 {
    let step: Vec<f64> = s.iter().zip(omega).zip(delta).map(|((s, o), d)| s - (o * s + d)).collect();
    project_to_simplex(&step).iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Minimizes `½ Σ Ω_k s_k² + Σ Δ_k s_k` over the simplex with projected gradient
/// descent (step `1 / max Ω`), stopping at KKT residual below [`QP_TOLERANCE`].
/// Badly conditioned problems that reach [`QP_MAX_ITERATIONS`] are finished
/// with the closed-form minimizer.
///
/// A purely linear objective (`Ω ≡ 0`) puts the mass on `argmin Δ`, split
/// evenly across exact ties.
pub fn solve_separable_qp(omega: &[f64], delta: &[f64], warm_start: Option<&[f64]>) -> Result<QpSolution> {
    let l = omega.len();
    if l == 0 || delta.len() != l {
        return Err(Error::Shape(format!("Ω has {l} entries, Δ has {}", delta.len())));
    }
    if omega.iter().chain(delta).any(|v| !v.is_finite()) || omega.iter().any(|&o| o < 0.0) {
        return Err(Error::InvalidParameter("Ω must be finite and non-negative, Δ finite".into()));
    }
    let max_omega = omega.iter().copied().fold(0.0, f64::max);
    if max_omega == 0.0 {
        let best = delta.iter().copied().fold(f64::INFINITY, f64::min);
        let ties = delta.iter().filter(|&&d| d == best).count();
        let s: Vec<f64> = delta.iter().map(|&d| if d == best { 1.0 / ties as f64 } else { 0.0 }).collect();
        return Ok(QpSolution { objective: separable_qp_objective(omega, delta, &s), residual: 0.0, iterations: 0, s });
    }

    let step = 1.0 / max_omega;
    let mut s = match warm_start {
        Some(w) if w.len() == l => project_to_simplex(w),
        _ => vec![1.0 / l as f64; l],
    };
    let mut residual = kkt_residual(omega, delta, &s);
    let mut iterations = 0;
    let mut trial = vec![0.0; l];
    while residual >= QP_TOLERANCE {
        if iterations == QP_MAX_ITERATIONS {
            return polish(omega, delta, s, iterations, residual);
        }
        for k in 0..l {
            trial[k] = s[k] - step * (omega[k] * s[k] + delta[k]);
        }
        s = project_to_simplex(&trial);
        iterations += 1;
        residual = kkt_residual(omega, delta, &s);
    }
    Ok(QpSolution { objective: separable_qp_objective(omega, delta, &s), s, iterations, residual })
}

/// Finishes a stalled solve with the exact water-filling minimizer, which
/// exists when every `Ω_k > 0`. Fails if that point does not meet the tolerance either.
fn polish(omega: &[f64], delta: &[f64], s: Vec<f64>, iterations: usize, residual: f64) -> Result<QpSolution> {
    if omega.iter().any(|&o| o <= FLAT) {
        return Err(Error::QpNotConverged { iterations, residual });
    }
    let q: Vec<f64> = omega.iter().map(|o| 0.5 * o).collect();
    let p: Vec<f64> = delta.iter().map(|d| -0.5 * d).collect();
    let mut exact = vec![0.0; omega.len()];
    minimize_separable_column(&p, &q, &mut exact);
    let exact_residual = kkt_residual(omega, delta, &exact);
    let (s, residual) = if exact_residual < residual { (exact, exact_residual) } else { (s, residual) };
    if residual >= QP_TOLERANCE {
        return Err(Error::QpNotConverged { iterations, residual });
    }
    Ok(QpSolution { objective: separable_qp_objective(omega, delta, &s), s, iterations, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_basics() {
        assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn column_interior_matches_closed_form() {
        let p = [0.3, 0.1, 0.2];
        let q = [1.0, 2.0, 3.0];
        let mut u = [0.0; 3];
        minimize_separable_column(&p, &q, &mut u);
        let sum_pq: f64 = p.iter().zip(&q).map(|(a, b)| a / b).sum();
        let sum_inv: f64 = q.iter().map(|b| 1.0 / b).sum();
        for i in 0..3 {
            let closed = (p[i] + (1.0 - sum_pq) / sum_inv) / q[i];
            assert!((u[i] - closed).abs() < 1e-15);
        }
    }

    #[test]
    fn column_clips_negative_components() {
        // unconstrained solution would push cluster 1 below zero
        let p = [5.0, 0.0];
        let q = [1.0, 1.0];
        let mut u = [0.0; 2];
        minimize_separable_column(&p, &q, &mut u);
        assert_eq!(u, [1.0, 0.0]);
    }

    #[test]
    fn column_flat_cluster_takes_rest() {
        let mut u = [0.0; 3];
        minimize_separable_column(&[0.0, 0.2, 0.0], &[0.0, 1.0, 4.0], &mut u);
        assert_eq!(u, [0.8, 0.2, 0.0]);
    }

    #[test]
    fn qp_single_point_and_linear() {
        let sol = solve_separable_qp(&[3.0], &[-1.0], None).unwrap();
        assert_eq!(sol.s, vec![1.0]);
        let sol = solve_separable_qp(&[0.0; 3], &[2.0, -1.0, 0.5], None).unwrap();
        assert_eq!(sol.s, vec![0.0, 1.0, 0.0]);
        let sol = solve_separable_qp(&[0.0; 3], &[-1.0, -1.0, 0.5], None).unwrap();
        assert_eq!(sol.s, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn qp_stalled_solve_is_polished() {
        let omega = [1e6, 1e-3, 2e-3];
        let delta = [0.0, -1e-3, -2e-3];
        let sol = solve_separable_qp(&omega, &delta, None).unwrap();
        assert_eq!(sol.iterations, QP_MAX_ITERATIONS);
        assert!(sol.residual < QP_TOLERANCE);
        assert!((sol.s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qp_interior_solution() {
        // minimize ½(s1² + s2²) on the simplex -> (½, ½)
        let sol = solve_separable_qp(&[1.0, 1.0], &[0.0, 0.0], None).unwrap();
        assert!((sol.s[0] - 0.5).abs() < 1e-9 && sol.residual < QP_TOLERANCE);
    }
}
