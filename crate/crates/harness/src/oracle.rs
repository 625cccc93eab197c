//! Brute-force cross-checks of the library's formulas.
//!
//! Each check rebuilds a quantity from definitions (naive loops, full sorts,
//! dense simplex grids, central differences) and compares it with the library
//! on seeded random instances. Tolerances on scalars are relative to
//! `max(1, |reference|)`.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safefcm_core::baseline::{
    fcm_center_update, fcm_fit, fcm_membership_update, fcm_objective, kmeans_fit, ssfcm_fidelity, ssfcm_fit,
    FcmParams, SsfcmParams,
};
use safefcm_core::dataset::{inject_mislabels, split_labeled, Dataset};
use safefcm_core::eval::{aggregate, clustering_accuracy, predict_labels, Matching};
use safefcm_core::geometry::{dynamic_pun, graph_weights, pairwise_distances, DistanceIndex, NeighborGraph};
use safefcm_core::safe::{
    as3_fit, as3_update_labeled, as3_update_unlabeled, kgbs_objective, kgbs_update_labeled, kgbs_update_unlabeled,
    local_inconsistency, safe_center_update, safety_degrees, As3Config, Coupling, GateMode, SafeConfig,
    SafetyVector,
};
use safefcm_core::simplex::{kkt_residual, separable_qp_objective, solve_separable_qp};
use safefcm_core::synth::{gen_gauss, GaussKind};
use safefcm_core::{Centers, Matrix, PartitionMatrix};
use serde::Serialize;

use crate::catalog::{DataSource, DatasetName};

pub const SCALAR_TOL: f64 = 1e-12;
pub const OBJECTIVE_TOL: f64 = 1e-10;
pub const GRID_STEP: f64 = 1e-3;
pub const GRID_TOL: f64 = 2e-3;
pub const QP_OBJECTIVE_TOL: f64 = 1e-6;
pub const KKT_TOL: f64 = 1e-8;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const DESCENT_TOL: f64 = 1e-8;

/// Random instances per randomized check.
const TRIALS: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    /// Worst error over all instances (or the measured value for range checks).
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl OracleCheck {
    fn within(name: &str, error: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), error, tolerance, passed: error <= tolerance, detail: detail.into() }
    }

    fn boolean(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), error: if passed { 0.0 } else { 1.0 }, tolerance: 0.0, passed, detail: detail.into() }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

fn random_partition(r: &mut ChaCha8Rng, c: usize, n: usize) -> PartitionMatrix {
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..c).map(|_| r.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    PartitionMatrix::from_columns(&cols).unwrap()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..a.len() {
        s += (a[j] - b[j]) * (a[j] - b[j]);
    }
    s
}

/// A small labeled/unlabeled problem with a dense copy of its graph weights.
struct Instance {
    x: Matrix,
    labels: Vec<usize>,
    u: PartitionMatrix,
    v: Centers,
    s: Vec<f64>,
    graph: NeighborGraph,
    dense_w: Vec<Vec<f64>>,
}

impl Instance {
    fn new(seed: u64, n: usize, l: usize, c: usize) -> Self {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, 2);
        let labels: Vec<usize> = (0..l).map(|k| k % c).collect();
        let u = random_partition(&mut r, c, n);
        let v = Centers::new(random_matrix(&mut r, c, 2)).unwrap();
        let s: Vec<f64> = (0..l).map(|_| r.random_range(0.05..1.0)).collect();
        let counts: Vec<usize> = (0..l).map(|_| r.random_range(1..=3.min(n - l))).collect();
        let graph = graph_weights(&DistanceIndex::new(&x, l).unwrap(), &counts).unwrap();
        let dense_w = dense_weights(&x, l, &counts);
        Self { x, labels, u, v, s, graph, dense_w }
    }

    fn problem(&self) -> Coupling<'_> {
        Coupling { x: &self.x, labels: &self.labels, graph: &self.graph }
    }

    /// The shared objective, term by term, with coupling weight `rho`.
    fn objective(&self, u: &PartitionMatrix, v: &Centers, lambda1: f64, rho: f64) -> f64 {
        let (n, l, c) = (self.x.rows(), self.labels.len(), v.clusters());
        let f = |i: usize, k: usize| if self.labels[k] == i { 1.0 } else { 0.0 };
        let mut j = 0.0;
        for k in 0..n {
            for i in 0..c {
                j += u.get(i, k) * u.get(i, k) * dist2(self.x.row(k), v.center(i));
            }
        }
        for k in 0..l {
            for i in 0..c {
                let e = u.get(i, k) - f(i, k);
                j += lambda1 * self.s[k] * e * e * dist2(self.x.row(k), v.center(i));
            }
        }
        for k in 0..l {
            let g = 2.0 / (self.s[k] + 1.0) - 1.0;
            for r in 0..n - l {
                let w = self.dense_w[k][r];
                for i in 0..c {
                    let a = f(i, k) - u.get(i, l + r);
                    let b = u.get(i, k) - u.get(i, l + r);
                    j += rho * w * (self.s[k] * a * a + g * b * b);
                }
            }
        }
        j
    }

    /// Grid minimizer of the objective over column `k` (two clusters), other columns fixed.
    fn grid_column(&self, k: usize, lambda1: f64, rho: f64) -> f64 {
        let mut trial = self.u.clone();
        let steps = (1.0 / GRID_STEP).round() as usize;
        let mut best = (f64::INFINITY, 0.0);
        for t in 0..=steps {
            let a = t as f64 * GRID_STEP;
            let col = trial.column_mut(k);
            col[0] = a;
            col[1] = 1.0 - a;
            let j = self.objective(&trial, &self.v, lambda1, rho);
            if j < best.0 {
                best = (j, a);
            }
        }
        best.1
    }
}

/// Labeled-to-unlabeled weights from a full sort of every distance row.
fn dense_weights(x: &Matrix, l: usize, counts: &[usize]) -> Vec<Vec<f64>> {
    let n = x.rows();
    let d: Vec<Vec<f64>> = (0..l).map(|k| (l..n).map(|r| dist2(x.row(k), x.row(r)).sqrt()).collect()).collect();
    let sigma = d.iter().flatten().sum::<f64>() / (l * (n - l)) as f64;
    d.iter()
        .zip(counts)
        .map(|(row, &p)| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let mut w = vec![0.0; row.len()];
            for &r in order.iter().take(p) {
                w[r] = (-(row[r] * row[r]) / (sigma * sigma)).exp();
            }
            w
        })
        .collect()
}

fn check_pairwise() -> OracleCheck {
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let mut r = rng(100 + t);
        let a = random_matrix(&mut r, 7, 3);
        let b = random_matrix(&mut r, 7, 3);
        let d = pairwise_distances(&a, &b).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                worst = worst.max(rel(d.get(i, j), dist2(a.row(i), b.row(j)).sqrt()));
            }
        }
    }
    OracleCheck::within("pairwise distances vs double loop (7x3)", worst, SCALAR_TOL, "")
}

fn check_knn() -> Vec<OracleCheck> {
    let mut same = true;
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let mut r = rng(200 + t);
        let row: Vec<f64> = (0..50).map(|_| r.random_range(0.0..10.0)).collect();
        let idx = DistanceIndex::from_distances(Matrix::from_rows(std::slice::from_ref(&row)).unwrap()).unwrap();
        let mut order: Vec<usize> = (0..50).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        same &= idx.knn_unlabeled(5, 0).unwrap() == order[..5];
        let mean = order[..5].iter().map(|&i| row[i]).sum::<f64>() / 5.0;
        worst = worst.max(rel(idx.avg_knn_distance(5, 0).unwrap(), mean));
    }
    vec![
        OracleCheck::boolean("5 nearest of 50 vs full sort", same, ""),
        OracleCheck::within("mean distance to 5 nearest vs sorted prefix", worst, SCALAR_TOL, ""),
    ]
}

fn check_pun_and_weight() -> Vec<OracleCheck> {
    let p = dynamic_pun(&[1.0, 2.0, 3.0], 5, 23).unwrap();
    // the bandwidth is the mean distance, 2, so the first neighbor sits at d² = σ²
    let idx = DistanceIndex::from_distances(Matrix::from_rows(&[[2.0, 1.0, 3.0]]).unwrap()).unwrap();
    let g = graph_weights(&idx, &[3]).unwrap();
    let pos = g.neighbors(0).iter().position(|&r| r == 0).unwrap();
    let w = g.weights(0)[pos];
    vec![
        OracleCheck::boolean("neighbor count at midpoint is 14 in [5, 23]", p[1] == 14, format!("got {p:?}")),
        OracleCheck::within("graph weight at d² = σ² is e⁻¹", rel(w, (-1.0f64).exp()), SCALAR_TOL, format!("weight {w:.5}")),
    ]
}

fn check_kmeans_inertia() -> OracleCheck {
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let mut r = rng(300 + t);
        let x = random_matrix(&mut r, 20, 2);
        let truth: Vec<usize> = (0..20).map(|k| k % 3 + 1).collect();
        let ds = Dataset::new("rand", x.clone(), truth, 3).unwrap();
        let fit = kmeans_fit(&ds, 3, t).unwrap();
        let mut inertia = 0.0;
        for k in 0..20 {
            inertia += dist2(x.row(k), fit.centers.center(fit.assignment[k]));
        }
        worst = worst.max(rel(fit.inertia, inertia));
    }
    OracleCheck::within("k-means inertia vs recomputation", worst, SCALAR_TOL, "")
}

fn check_fcm_formulas() -> Vec<OracleCheck> {
    let (mut obj, mut memb, mut cent, mut fid): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..TRIALS {
        let mut r = rng(400 + t);
        let (n, c) = (9, 3);
        let x = random_matrix(&mut r, n, 2);
        let u = random_partition(&mut r, c, n);
        let v = Centers::new(random_matrix(&mut r, c, 2)).unwrap();
        let mut j = 0.0;
        for k in 0..n {
            for i in 0..c {
                j += u.get(i, k).powi(2) * dist2(x.row(k), v.center(i));
            }
        }
        obj = obj.max(rel(fcm_objective(&u, &v, &x, 2.0).unwrap(), j));

        let upd = fcm_membership_update(&v, &x, 2.0).unwrap();
        for k in 0..n {
            for i in 0..c {
                let di = dist2(x.row(k), v.center(i)).sqrt();
                let direct = 1.0 / (0..c).map(|jj| (di / dist2(x.row(k), v.center(jj)).sqrt()).powi(2)).sum::<f64>();
                memb = memb.max((upd.get(i, k) - direct).abs());
            }
        }

        let vc = fcm_center_update(&u, &x, 2.0).unwrap();
        for i in 0..c {
            let mass: f64 = (0..n).map(|k| u.get(i, k).powi(2)).sum();
            for d in 0..2 {
                let num: f64 = (0..n).map(|k| u.get(i, k).powi(2) * x.get(k, d)).sum();
                cent = cent.max(rel(vc.center(i)[d], num / mass));
            }
        }

        let sup: Vec<Option<usize>> = (0..n).map(|k| (k < 4).then_some(k % c)).collect();
        let mut f = 0.0;
        for k in 0..n {
            for i in 0..c {
                let fb = if sup[k] == Some(i) { 1.0 } else { 0.0 };
                f += (u.get(i, k) - fb).powi(2) * dist2(x.row(k), v.center(i));
            }
        }
        fid = fid.max(rel(ssfcm_fidelity(&u, &sup, &v, &x, 2.0).unwrap(), f));
    }
    vec![
        OracleCheck::within("FCM objective vs triple loop", obj, SCALAR_TOL, ""),
        OracleCheck::within("FCM memberships vs direct ratio formula (c=3)", memb, SCALAR_TOL, ""),
        OracleCheck::within("FCM centers vs weighted-mean loop", cent, SCALAR_TOL, ""),
        OracleCheck::within("SSFCM fidelity vs loop", fid, SCALAR_TOL, ""),
    ]
}

fn check_ssfcm_large_alpha() -> Result<OracleCheck> {
    let ds = gen_gauss(GaussKind::Gauss50, 1)?;
    let view = split_labeled(&ds, 0.2, 7)?;
    let fit = ssfcm_fit(&view, &SsfcmParams { alpha: 1e3, ..SsfcmParams::default() })?;
    let worst = (0..view.labeled_count())
        .map(|k| fit.partition.column(k).iter().copied().fold(0.0, f64::max))
        .fold(1.0, f64::min);
    Ok(OracleCheck {
        name: "SSFCM with α = 1000 drives labeled columns to one-hot".into(),
        error: worst,
        tolerance: 0.9,
        passed: worst > 0.9,
        detail: format!("smallest labeled max membership {worst:.4}"),
    })
}

fn check_safety() -> Vec<OracleCheck> {
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let inst = Instance::new(500 + t, 8, 3, 2);
        let li = local_inconsistency(&inst.u, &inst.labels, &inst.graph).unwrap();
        for k in 0..3 {
            let mut sum = 0.0;
            for r in 0..5 {
                if inst.dense_w[k][r] > 0.0 {
                    for i in 0..2 {
                        let f = if inst.labels[k] == i { 1.0 } else { 0.0 };
                        sum += (inst.u.get(i, 3 + r) - f).abs();
                    }
                }
            }
            worst = worst.max(rel(li[k], sum));
        }
    }
    let s = safety_degrees(&[3.0], &[6]).unwrap().values[0];
    vec![
        OracleCheck::within("local inconsistency vs loop", worst, SCALAR_TOL, ""),
        OracleCheck::within("safety degree for li = 3, 6 neighbors", (s - 1.0 / 1.5).abs(), SCALAR_TOL, format!("{s}")),
    ]
}

fn kgbs_cfg(lambda1: f64, lambda2: f64, gate: bool) -> SafeConfig {
    SafeConfig {
        gate: if gate { GateMode::AlwaysOpen } else { GateMode::AlwaysClosed },
        ..SafeConfig::for_size(8, lambda1, lambda2)
    }
}

fn check_kgbs_objective() -> OracleCheck {
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let inst = Instance::new(600 + t, 8, 3, 2);
        let (l1, l2) = (0.5 + t as f64 * 0.3, 0.2 + t as f64 * 0.1);
        let safety = SafetyVector::new(inst.s.clone());
        for gate in [false, true] {
            let cfg = kgbs_cfg(l1, l2, gate);
            let rho = if gate { l2 * l1 } else { l2 };
            let lib = kgbs_objective(&inst.u, &inst.v, &inst.problem(), &safety, &cfg).unwrap();
            worst = worst.max(rel(lib, inst.objective(&inst.u, &inst.v, l1, rho)));
        }
    }
    OracleCheck::within("gated objective vs term-by-term loop (n=8, l=3, c=2)", worst, OBJECTIVE_TOL, "")
}

fn check_column_updates() -> Vec<OracleCheck> {
    let (mut kl, mut ku, mut al, mut au): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..TRIALS {
        let (n, l) = if t % 2 == 0 { (6, 2) } else { (8, 3) };
        let inst = Instance::new(700 + t, n, l, 2);
        let (l1, l2) = (0.3 + 0.4 * t as f64, 0.1 + 0.25 * t as f64);
        let safety = SafetyVector::new(inst.s.clone());
        let p = inst.problem();
        for gate in [false, true] {
            let cfg = kgbs_cfg(l1, l2, gate);
            let rho = cfg.coupling(gate);
            let lab = kgbs_update_labeled(&inst.u, &inst.v, &p, &safety, &cfg, gate).unwrap();
            let unl = kgbs_update_unlabeled(&inst.u, &inst.v, &p, &safety, &cfg, gate).unwrap();
            for k in 0..l {
                kl = kl.max((lab.get(0, k) - inst.grid_column(k, l1, rho)).abs());
            }
            for k in l..n {
                ku = ku.max((unl.get(0, k) - inst.grid_column(k, l1, rho)).abs());
            }
        }
        let lab = as3_update_labeled(&inst.u, &inst.v, &p, &inst.s, l1, l2).unwrap();
        let unl = as3_update_unlabeled(&inst.u, &inst.v, &p, &inst.s, l2).unwrap();
        for k in 0..l {
            al = al.max((lab.get(0, k) - inst.grid_column(k, l1, l2)).abs());
        }
        for k in l..n {
            au = au.max((unl.get(0, k) - inst.grid_column(k, l1, l2)).abs());
        }
    }
    vec![
        OracleCheck::within("K-GBS labeled column update vs simplex grid", kl, GRID_TOL, ""),
        OracleCheck::within("K-GBS unlabeled column update vs simplex grid", ku, GRID_TOL, ""),
        OracleCheck::within("AS3 labeled column update vs simplex grid", al, GRID_TOL, ""),
        OracleCheck::within("AS3 unlabeled column update vs simplex grid", au, GRID_TOL, ""),
    ]
}

fn check_center_gradient() -> OracleCheck {
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let inst = Instance::new(800 + t, 8, 3, 2);
        let (l1, rho) = (0.5 + 0.5 * t as f64, 1.3);
        let v = safe_center_update(&inst.u, &inst.labels, &inst.s, l1, &inst.x).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let mut gross = 0.0;
            for k in 0..8 {
                let a = inst.u.get(i, k);
                let mut w = a * a;
                if k < 3 {
                    let f = if inst.labels[k] == i { 1.0 } else { 0.0 };
                    w += l1 * inst.s[k] * (a - f) * (a - f);
                }
                gross += 2.0 * w * dist2(inst.x.row(k), v.center(i)).sqrt();
            }
            for d in 0..2 {
                let shifted = |delta: f64| {
                    let mut m = v.matrix().clone();
                    m.set(i, d, m.get(i, d) + delta);
                    inst.objective(&inst.u, &Centers::new(m).unwrap(), l1, rho)
                };
                let g = (shifted(h) - shifted(-h)) / (2.0 * h);
                worst = worst.max(g.abs() / gross);
            }
        }
    }
    OracleCheck::within("center update zeroes the objective gradient (central differences)", worst, GRADIENT_TOL, "")
}

fn check_qp() -> Vec<OracleCheck> {
    let (mut ds, mut dj, mut kkt): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let steps = (1.0 / GRID_STEP).round() as usize;
    for t in 0..TRIALS {
        let mut r = rng(900 + t);
        let omega: Vec<f64> = (0..3).map(|_| r.random_range(0.1..2.0)).collect();
        let delta: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let sol = solve_separable_qp(&omega, &delta, None).unwrap();
        let mut best = (f64::INFINITY, [0.0; 3]);
        for a in 0..=steps {
            for b in 0..=steps - a {
                let s = [a as f64 * GRID_STEP, b as f64 * GRID_STEP, (steps - a - b) as f64 * GRID_STEP];
                let j = separable_qp_objective(&omega, &delta, &s);
                if j < best.0 {
                    best = (j, s);
                }
            }
        }
        ds = ds.max(sol.s.iter().zip(best.1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        dj = dj.max((sol.objective - best.0).abs());
        kkt = kkt.max(kkt_residual(&omega, &delta, &sol.s));
    }
    vec![
        OracleCheck::within("safety QP solution vs simplex grid (l=3)", ds, GRID_TOL, ""),
        OracleCheck::within("safety QP objective vs simplex grid", dj, QP_OBJECTIVE_TOL, ""),
        OracleCheck::within("safety QP KKT residual", kkt, KKT_TOL, ""),
    ]
}

fn check_eval() -> Vec<OracleCheck> {
    let mut same = true;
    let mut worst: f64 = 0.0;
    for t in 0..TRIALS {
        let mut r = rng(1000 + t);
        let u = random_partition(&mut r, 4, 30);
        let pred = predict_labels(&u);
        for k in 0..30 {
            let col = u.column(k);
            let mut arg = 0;
            for i in 1..4 {
                if col[i] > col[arg] {
                    arg = i;
                }
            }
            same &= pred[k] == arg + 1;
        }
        let scores: Vec<f64> = (0..20).map(|_| r.random_range(0.0..1.0)).collect();
        let a = aggregate(&scores).unwrap();
        let mean = scores.iter().sum::<f64>() / 20.0;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / 19.0;
        worst = worst.max(rel(a.mean, mean)).max(rel(a.std, var.sqrt()));
    }
    vec![
        OracleCheck::boolean("hard labels vs per-column max scan", same, ""),
        OracleCheck::within("mean and sample std vs two-pass", worst, SCALAR_TOL, ""),
    ]
}

/// Class sizes of the 358-row dermatology table.
pub const DERMATOLOGY_CLASS_SIZES: [usize; 6] = [111, 60, 71, 48, 48, 20];

fn check_splits() -> Result<Vec<OracleCheck>> {
    let truth: Vec<usize> =
        DERMATOLOGY_CLASS_SIZES.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat_n(i + 1, m)).collect();
    let n = truth.len();
    let x = Matrix::from_vec(n, 1, (0..n).map(|k| k as f64).collect())?;
    let ds = Dataset::new("dermatology-labels", x, truth, 6)?;
    let mut covered = true;
    for seed in 0..100 {
        let view = split_labeled(&ds, 0.2, seed)?;
        let mut seen = [false; 6];
        for &y in view.provided_labels() {
            seen[y - 1] = true;
        }
        covered &= seen.iter().all(|&b| b);
    }

    let toy = Dataset::new("toy", Matrix::from_vec(200, 1, (0..200).map(f64::from).collect())?, (0..200).map(|k| k % 3 + 1).collect(), 3)?;
    let view = split_labeled(&toy, 0.2, 3)?;
    let l = view.labeled_count();
    let mut nested = true;
    let mut prev: Vec<bool> = vec![false; l];
    for step in 0..=6 {
        let ratio = 0.05 * step as f64;
        let v = inject_mislabels(&view, ratio, 11)?;
        let mask = v.mislabel_mask().to_vec();
        nested &= mask.iter().filter(|&&m| m).count() == (ratio * l as f64 + 0.5).floor() as usize;
        nested &= prev.iter().zip(&mask).all(|(&p, &m)| !p || m);
        nested &= (0..l).all(|k| mask[k] == (v.provided_labels()[k] != v.data().ground_truth()[k]));
        prev = mask;
    }
    Ok(vec![
        OracleCheck::boolean("labeled split covers all 6 classes over 100 seeds (dermatology class sizes)", covered, ""),
        OracleCheck::boolean("mislabel masks have round(ratio·l) entries and nest across ratios", nested, format!("l = {l}")),
    ])
}

/// Every formula-level check; runs in seconds.
pub fn formula_checks() -> Result<Vec<OracleCheck>> {
    let mut out = vec![check_pairwise()];
    out.extend(check_knn());
    out.extend(check_pun_and_weight());
    out.push(check_kmeans_inertia());
    out.extend(check_fcm_formulas());
    out.push(check_ssfcm_large_alpha()?);
    out.extend(check_safety());
    out.push(check_kgbs_objective());
    out.extend(check_column_updates());
    out.push(check_center_gradient());
    out.extend(check_qp());
    out.extend(check_eval());
    out.extend(check_splits()?);
    Ok(out)
}

fn fcm_mean_accuracy(ds: &Dataset, seeds: u64) -> Result<f64> {
    let mut accs = Vec::new();
    for seed in 0..seeds {
        let fit = fcm_fit(ds, &FcmParams::new(ds.num_classes(), seed))?;
        accs.push(clustering_accuracy(&predict_labels(&fit.partition), ds.ground_truth(), Matching::BestPermutation)?.accuracy);
    }
    Ok(aggregate(&accs)?.mean)
}

/// Bounds read as "mid-50s" for the unsupervised FCM accuracy on bupa (%).
pub const BUPA_FCM_RANGE: (f64, f64) = (53.0, 57.0);

/// Checks that need whole datasets: FCM on the Gaussian pair and on bupa, and
/// AS3FCM objective descent on heart over the λ grid.
pub fn data_checks(src: &DataSource) -> Result<Vec<OracleCheck>> {
    let mut out = Vec::new();
    let g = fcm_mean_accuracy(&src.load(DatasetName::Gauss50)?, 5)?;
    let gx = fcm_mean_accuracy(&src.load(DatasetName::Gauss50x)?, 5)?;
    out.push(OracleCheck::boolean(
        "FCM accuracy on gauss50x below gauss50",
        gx < g,
        format!("gauss50x {:.1}%, gauss50 {:.1}%", gx * 100.0, g * 100.0),
    ));

    if src.available(DatasetName::Bupa) {
        let bupa = fcm_mean_accuracy(&src.load(DatasetName::Bupa)?, 20)? * 100.0;
        let raw = DataSource { standardize: false, ..src.clone() };
        let bupa_raw = fcm_mean_accuracy(&raw.load(DatasetName::Bupa)?, 20)? * 100.0;
        out.push(OracleCheck {
            name: "FCM on bupa in the mid-50s".into(),
            error: bupa,
            tolerance: BUPA_FCM_RANGE.1,
            passed: (BUPA_FCM_RANGE.0..=BUPA_FCM_RANGE.1).contains(&bupa),
            detail: format!(
                "{bupa:.1}% with standardized features, {bupa_raw:.1}% on raw features; expected [{}, {}]",
                BUPA_FCM_RANGE.0, BUPA_FCM_RANGE.1
            ),
        });
    }

    if src.available(DatasetName::Heart) {
        let heart = src.load(DatasetName::Heart)?;
        let grid = crate::config::PROTOCOL_LAMBDAS;
        let (mut runs, mut rising, mut worst) = (0, 0, 0.0_f64);
        for &l1 in &grid {
            for &l2 in &grid {
                let view = split_labeled(&heart, 0.2, 5)?;
                let fit = as3_fit(&view, &As3Config::new(l1, l2))?;
                runs += 1;
                let inc = fit.trace.max_increase();
                if inc > DESCENT_TOL {
                    rising += 1;
                }
                worst = worst.max(inc);
            }
        }
        out.push(OracleCheck::within(
            "AS3FCM objective nonincreasing on heart over the λ grid",
            worst,
            DESCENT_TOL,
            format!("{rising} of {runs} traces rise; largest rise {worst:.3e}"),
        ));
    }
    Ok(out)
}
