//! Unsupervised and plain semi-supervised baselines: K-Means, fuzzy c-means
//! and SSFCM, together with the membership/center machinery they share.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, SemiSupervisedView};
use crate::error::{Error, Result};
use crate::matrix::{check_shapes, squared_distances, squared_euclidean, Centers, Matrix, PartitionMatrix};

/// Squared distances below this count as a point sitting on a center.
pub(crate) const COINCIDENT: f64 = f64::MIN_POSITIVE;

/// Per-iteration record of an alternating fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    /// Objective after each iteration; entry 0 is the initial state.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Mean safety degree after each iteration (safe variants only; entry 0 is the initial state).
    pub mean_safety: Vec<f64>,
    /// Gate value used by each iteration's membership update (K-GBS3FCM only).
    pub gate: Vec<bool>,
}

impl FitTrace {
    /// Largest increase between consecutive objective values (0 if monotone).
    pub fn max_increase(&self) -> f64 {
        self.objective.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::NAN)
    }

    pub(crate) fn push(&mut self, value: f64, tolerance: f64) -> bool {
        let done = self.objective.last().is_some_and(|prev| (value - prev).abs() < tolerance);
        self.objective.push(value);
        done
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmParams {
    pub clusters: usize,
    pub fuzziness: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl FcmParams {
    pub fn new(clusters: usize, seed: u64) -> Self {
        Self { clusters, fuzziness: 2.0, tolerance: 1e-4, max_iter: 100, seed }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.clusters < 2 || self.clusters > n {
            return Err(Error::InvalidParameter(format!("need 2 <= c <= n, got c = {}", self.clusters)));
        }
        if !(self.fuzziness > 1.0) {
            return Err(Error::InvalidParameter(format!("fuzziness m = {} must exceed 1", self.fuzziness)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmFit {
    pub partition: PartitionMatrix,
    pub centers: Centers,
    pub trace: FitTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Centers,
    /// Zero-based cluster of each point.
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

impl KMeansFit {
    /// One-based labels, matching [`crate::eval::predict_labels`].
    pub fn labels(&self) -> Vec<usize> {
        self.assignment.iter().map(|a| a + 1).collect()
    }
}

/// K-Means++ seeding: first center uniform, then proportional to squared
/// distance to the nearest chosen center.
pub fn kmeans_plus_plus(x: &Matrix, c: usize, rng: &mut impl Rng) -> Centers {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(c);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = (0..n).map(|k| squared_euclidean(x.row(k), x.row(chosen[0]))).collect();
    while chosen.len() < c {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (k, &d) in nearest.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                if target < d {
                    pick = k;
                    break;
                }
                target -= d;
            }
            if nearest[pick] <= 0.0 {
                pick = nearest.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(pick);
        for (k, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_euclidean(x.row(k), x.row(pick)));
        }
    }
    Centers(x.select_rows(&chosen))
}

/// Lloyd iterations from K-Means++ seeds. An emptied cluster is re-seeded at
/// the point farthest from its current center.
pub fn kmeans_fit(ds: &Dataset, c: usize, seed: u64) -> Result<KMeansFit> {
    const MAX_ITER: usize = 300;
    let x = ds.features();
    let n = x.rows();
    if c < 2 || c > n {
        return Err(Error::InvalidParameter(format!("need 2 <= c <= n, got c = {c}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_plus_plus(x, c, &mut rng).0;
    let mut assignment = vec![usize::MAX; n];
    let mut iterations = 0;
    loop {
        let mut changed = false;
        let mut best_d = vec![0.0; n];
        for k in 0..n {
            let (best, d) = (0..c)
                .map(|i| (i, squared_euclidean(x.row(k), centers.row(i))))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            best_d[k] = d;
            if assignment[k] != best {
                assignment[k] = best;
                changed = true;
            }
        }
        if !changed || iterations == MAX_ITER {
            break;
        }
        iterations += 1;
        let mut sums = Matrix::zeros(c, x.cols());
        let mut counts = vec![0usize; c];
        for k in 0..n {
            counts[assignment[k]] += 1;
            for (s, v) in sums.row_mut(assignment[k]).iter_mut().zip(x.row(k)) {
                *s += v;
            }
        }
        for i in 0..c {
            if counts[i] == 0 {
                let far = (0..n).fold(0, |a, k| if best_d[k] > best_d[a] { k } else { a });
                sums.row_mut(i).copy_from_slice(x.row(far));
                best_d[far] = 0.0;
                assignment[far] = i;
            } else {
                for s in sums.row_mut(i) {
                    *s /= counts[i] as f64;
                }
            }
        }
        centers = sums;
    }
    let inertia = (0..n).map(|k| squared_euclidean(x.row(k), centers.row(assignment[k]))).sum();
    Ok(KMeansFit { centers: Centers::new(centers)?, assignment, inertia, iterations })
}

/// `Σ_i Σ_k u_ik^m d_ik²`.
pub fn fcm_objective(u: &PartitionMatrix, v: &Centers, x: &Matrix, m: f64) -> Result<f64> {
    check_shapes(x, u, v)?;
    let d2 = squared_distances(x, v);
    Ok(u.columns()
        .enumerate()
        .map(|(k, col)| col.iter().zip(d2.row(k)).map(|(&uik, &d)| pow_m(uik, m) * d).sum::<f64>())
        .sum())
}

#[inline]
pub(crate) fn pow_m(u: f64, m: f64) -> f64 {
    if m == 2.0 {
        u * u
    } else {
        libm::pow(u, m)
    }
}

/// Membership of one point given its squared distances to each center.
pub(crate) fn fcm_column(d2: &[f64], m: f64, out: &mut [f64]) {
    let zero = d2.iter().filter(|&&d| d < COINCIDENT).count();
    if zero > 0 {
        for (o, &d) in out.iter_mut().zip(d2) {
            *o = if d < COINCIDENT { 1.0 / zero as f64 } else { 0.0 };
        }
        return;
    }
    let exponent = 1.0 / (m - 1.0);
    let mut total = 0.0;
    for (o, &d) in out.iter_mut().zip(d2) {
        *o = if m == 2.0 { 1.0 / d } else { libm::pow(d, -exponent) };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Standard FCM membership update. A point on top of one or more centers is
/// split evenly among those centers.
pub fn fcm_membership_update(v: &Centers, x: &Matrix, m: f64) -> Result<PartitionMatrix> {
    if v.matrix().cols() != x.cols() {
        return Err(Error::Shape(format!("centers have dim {}, data {}", v.matrix().cols(), x.cols())));
    }
    let d2 = squared_distances(x, v);
    let mut u = PartitionMatrix::zeros(v.clusters(), x.rows());
    for k in 0..x.rows() {
        fcm_column(d2.row(k), m, u.column_mut(k));
    }
    Ok(u)
}

/// Weighted means with per-(cluster, point) weights `weight(i, k)`.
pub(crate) fn weighted_centers(
    x: &Matrix,
    clusters: usize,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<Centers> {
    let mut v = Matrix::zeros(clusters, x.cols());
    for i in 0..clusters {
        let mut mass = 0.0;
        let row = v.row_mut(i);
        for k in 0..x.rows() {
            let w = weight(i, k);
            if w != 0.0 {
                mass += w;
                for (a, b) in row.iter_mut().zip(x.row(k)) {
                    *a += w * b;
                }
            }
        }
        if !(mass > 0.0) {
            return Err(Error::EmptyCluster { cluster: i });
        }
        for a in row.iter_mut() {
            *a /= mass;
        }
    }
    Centers::new(v)
}

/// `v_i = Σ_k u_ik^m x_k / Σ_k u_ik^m`.
pub fn fcm_center_update(u: &PartitionMatrix, x: &Matrix, m: f64) -> Result<Centers> {
    if u.points() != x.rows() {
        return Err(Error::Shape(format!("U has {} points, X has {}", u.points(), x.rows())));
    }
    weighted_centers(x, u.clusters(), |i, k| pow_m(u.get(i, k), m))
}

/// FCM from K-Means++ seeds drawn with `params.seed`.
pub fn fcm_fit(ds: &Dataset, params: &FcmParams) -> Result<FcmFit> {
    params.validate(ds.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = kmeans_plus_plus(ds.features(), params.clusters, &mut rng);
    fcm_fit_from(ds.features(), init, params)
}

/// FCM alternating Eq. 2-style memberships and weighted-mean centers from the
/// given centers until the objective changes by less than the tolerance.
pub fn fcm_fit_from(x: &Matrix, init: Centers, params: &FcmParams) -> Result<FcmFit> {
    params.validate(x.rows())?;
    let m = params.fuzziness;
    let mut centers = init;
    let mut partition = fcm_membership_update(&centers, x, m)?;
    let mut trace = FitTrace::default();
    trace.objective.push(fcm_objective(&partition, &centers, x, m)?);
    for _ in 0..params.max_iter {
        partition = fcm_membership_update(&centers, x, m)?;
        centers = fcm_center_update(&partition, x, m)?;
        trace.iterations += 1;
        if trace.push(fcm_objective(&partition, &centers, x, m)?, params.tolerance) {
            trace.converged = true;
            break;
        }
    }
    Ok(FcmFit { partition, centers, trace })
}

/// SSFCM fidelity `Σ_k Σ_i (u_ik − f_ik b_k)^m d_ik²`.
///
/// `supervision[k]` is `Some(i)` when point `k` is labeled with cluster `i`
/// (so `f_ik b_k = 1`), `None` when unlabeled.
pub fn ssfcm_fidelity(
    u: &PartitionMatrix,
    supervision: &[Option<usize>],
    v: &Centers,
    x: &Matrix,
    m: f64,
) -> Result<f64> {
    check_shapes(x, u, v)?;
    if supervision.len() != x.rows() {
        return Err(Error::Shape(format!("{} supervision entries for {} points", supervision.len(), x.rows())));
    }
    let d2 = squared_distances(x, v);
    let mut total = 0.0;
    for (k, col) in u.columns().enumerate() {
        for (i, (&uik, &d)) in col.iter().zip(d2.row(k)).enumerate() {
            let fb = if supervision[k] == Some(i) { 1.0 } else { 0.0 };
            total += pow_m(libm::fabs(uik - fb), m) * d;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsfcmParams {
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SsfcmParams {
    fn default() -> Self {
        Self { alpha: 1.0, tolerance: 1e-4, max_iter: 100 }
    }
}

fn ssfcm_objective(u: &PartitionMatrix, sup: &[Option<usize>], v: &Centers, x: &Matrix, alpha: f64) -> Result<f64> {
    Ok(fcm_objective(u, v, x, 2.0)? + alpha * ssfcm_fidelity(u, sup, v, x, 2.0)?)
}

fn ssfcm_memberships(v: &Centers, x: &Matrix, sup: &[Option<usize>], alpha: f64) -> PartitionMatrix {
    let c = v.clusters();
    let d2 = squared_distances(x, v);
    let mut u = PartitionMatrix::zeros(c, x.rows());
    let mut p = vec![0.0; c];
    let mut q = vec![0.0; c];
    for k in 0..x.rows() {
        let row = d2.row(k);
        if sup[k].is_none() || alpha == 0.0 {
            fcm_column(row, 2.0, u.column_mut(k));
            continue;
        }
        for i in 0..c {
            q[i] = (1.0 + alpha) * row[i];
            p[i] = if sup[k] == Some(i) { alpha * row[i] } else { 0.0 };
        }
        crate::simplex::minimize_separable_column(&p, &q, u.column_mut(k));
    }
    u
}

/// SSFCM with `m = 2`, started from the labeled class means. Each step is an
/// exact block minimizer of `J_FCM + α R`, so the objective never increases.
pub fn ssfcm_fit(view: &SemiSupervisedView, params: &SsfcmParams) -> Result<FcmFit> {
    let init = view.labeled_class_means()?;
    ssfcm_fit_from(view, init, params)
}

pub fn ssfcm_fit_from(view: &SemiSupervisedView, init: Centers, params: &SsfcmParams) -> Result<FcmFit> {
    if !(params.alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {} must be non-negative", params.alpha)));
    }
    let x = view.data().features();
    let sup = view.supervision();
    let alpha = params.alpha;
    let mut centers = init;
    let mut partition = ssfcm_memberships(&centers, x, &sup, alpha);
    let mut trace = FitTrace::default();
    trace.objective.push(ssfcm_objective(&partition, &sup, &centers, x, alpha)?);
    for _ in 0..params.max_iter {
        partition = ssfcm_memberships(&centers, x, &sup, alpha);
        centers = weighted_centers(x, centers.clusters(), |i, k| {
            let u = partition.get(i, k);
            let fb = if sup[k] == Some(i) { 1.0 } else { 0.0 };
            u * u + alpha * (u - fb) * (u - fb)
        })?;
        trace.iterations += 1;
        if trace.push(ssfcm_objective(&partition, &sup, &centers, x, alpha)?, params.tolerance) {
            trace.converged = true;
            break;
        }
    }
    Ok(FcmFit { partition, centers, trace })
}
