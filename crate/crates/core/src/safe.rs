//! Safety-aware semi-supervised fuzzy c-means.
//!
//! Both algorithms share one objective over a labeled block (rows `0..l`) and
//! an unlabeled block (rows `l..n`), linked through a [`NeighborGraph`]:
//!
//! ```text
//! J = Σ_k Σ_i u_ik² d_ik²
//!   + λ1 Σ_{k<l} s_k Σ_i (u_ik − f_ik)² d_ik²
//!   + ρ Σ_{k<l} Σ_r w_kr [ s_k Σ_i (f_ik − u_ir)² + (2/(s_k+1) − 1) Σ_i (u_ik − u_ir)² ]
//! ```
//!
//! AS3FCM uses `ρ = λ2`, a fixed 5-neighbor graph and safety degrees on the
//! simplex from a quadratic program. K-GBS3FCM uses a density-adaptive graph,
//! safety degrees `s_k = 1 / (1 + li_k / p_k)` from local inconsistency, and
//! `ρ = λ2 λ1^gate` where the gate opens once the mean safety reaches `θ_s`.
//!
//! Labeled columns only couple to unlabeled columns and vice versa, so every
//! membership update is a set of independent per-column quadratics on the
//! simplex. By default each block is evaluated from the previous iterate
//! (Jacobi).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::baseline::{fcm_column, weighted_centers, FitTrace};
use crate::dataset::SemiSupervisedView;
use crate::error::{Error, Result};
use crate::geometry::{dynamic_graph, graph_weights, DistanceIndex, NeighborGraph};
use crate::matrix::{sq, squared_distances, Centers, Matrix, PartitionMatrix};
use crate::simplex::{minimize_separable_column, solve_separable_qp};

/// Fixed neighbor count of the AS3FCM graph.
pub const AS3_NEIGHBORS: usize = 5;

/// How the step gate is decided each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    /// Open iff the previous mean safety degree reaches the threshold.
    Adaptive,
    AlwaysOpen,
    AlwaysClosed,
}

/// Order of the two membership blocks inside one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    /// Both blocks from the previous iterate.
    Jacobi,
    /// Labeled block first, then the unlabeled block against the fresh labeled columns.
    LabeledFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Neighbors probed for the density proxy.
    pub density_neighbors: usize,
    pub safety_threshold: f64,
    pub un_min: usize,
    pub un_max: usize,
    pub tolerance: f64,
    pub max_iter: usize,
    pub gate: GateMode,
    pub sweep: SweepOrder,
}

impl SafeConfig {
    /// Experimental defaults for a dataset of `n` points: K = 5, θ_s = 0.6,
    /// neighbor counts in `[5, round(√n)]`, η = 1e-4, 100 iterations.
    pub fn for_size(n: usize, lambda1: f64, lambda2: f64) -> Self {
        let un_max = (libm::round(libm::sqrt(n as f64)) as usize).max(5);
        Self {
            lambda1,
            lambda2,
            density_neighbors: 5,
            safety_threshold: 0.6,
            un_min: 5,
            un_max,
            tolerance: 1e-4,
            max_iter: 100,
            gate: GateMode::Adaptive,
            sweep: SweepOrder::Jacobi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidParameter("λ1 and λ2 must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.safety_threshold) {
            return Err(Error::InvalidParameter(format!("θ_s = {} not in [0, 1]", self.safety_threshold)));
        }
        if self.un_min == 0 || self.un_min > self.un_max {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= un_min <= un_max, got {} and {}",
                self.un_min, self.un_max
            )));
        }
        if self.density_neighbors == 0 {
            return Err(Error::InvalidParameter("density probe needs K >= 1".into()));
        }
        Ok(())
    }

    /// Coupling weight `λ2 · λ1^gate`.
    pub fn coupling(&self, gate: bool) -> f64 {
        if gate {
            self.lambda2 * self.lambda1
        } else {
            self.lambda2
        }
    }

    fn gate_for(&self, mean_safety: f64) -> bool {
        match self.gate {
            GateMode::Adaptive => step_gate(mean_safety, self.safety_threshold),
            GateMode::AlwaysOpen => true,
            GateMode::AlwaysClosed => false,
        }
    }
}

/// Per-labeled-point safety degrees in `(0, 1]` and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyVector {
    pub values: Vec<f64>,
    pub mean: f64,
}

impl SafetyVector {
    pub fn new(values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        Self { values, mean }
    }
}

/// Labeled block of a semi-supervised problem and its neighbor graph.
#[derive(Debug, Clone, Copy)]
pub struct Coupling<'a> {
    pub x: &'a Matrix,
    /// Zero-based provided cluster of each labeled row; its length is `l`.
    pub labels: &'a [usize],
    pub graph: &'a NeighborGraph,
}

impl Coupling<'_> {
    pub fn labeled(&self) -> usize {
        self.labels.len()
    }

    fn check(&self, u: &PartitionMatrix, v: &Centers, s: &[f64]) -> Result<()> {
        let l = self.labeled();
        if u.points() != self.x.rows()
            || v.clusters() != u.clusters()
            || v.matrix().cols() != self.x.cols()
            || self.graph.labeled_count() != l
            || self.graph.unlabeled_count() + l != self.x.rows()
            || s.len() != l
        {
            return Err(Error::Shape(format!(
                "inconsistent problem: U {}x{}, V {}x{}, X {}x{}, graph {}+{}, {} labels, {} safety degrees",
                u.clusters(),
                u.points(),
                v.clusters(),
                v.matrix().cols(),
                self.x.rows(),
                self.x.cols(),
                self.graph.labeled_count(),
                self.graph.unlabeled_count(),
                l,
                s.len()
            )));
        }
        Ok(())
    }
}

#[inline]
fn one_hot(label: usize, i: usize) -> f64 {
    if label == i {
        1.0
    } else {
        0.0
    }
}

/// `2 / (s + 1) − 1`: the labeled-to-unlabeled smoothing weight of a labeled point.
#[inline]
pub fn smoothing_weight(s: f64) -> f64 {
    2.0 / (s + 1.0) - 1.0
}

/// Local inconsistency `li_k = Σ_{r ∈ N(k)} Σ_i |u_ir − f_ik|`.
pub fn local_inconsistency(u: &PartitionMatrix, labels: &[usize], graph: &NeighborGraph) -> Result<Vec<f64>> {
    let l = labels.len();
    if graph.labeled_count() != l || graph.unlabeled_count() + l != u.points() {
        return Err(Error::Shape(format!(
            "graph {}+{} does not match {} labels over {} points",
            graph.labeled_count(),
            graph.unlabeled_count(),
            l,
            u.points()
        )));
    }
    Ok((0..l)
        .map(|k| {
            graph
                .neighbors(k)
                .iter()
                .map(|&r| {
                    u.column(l + r).iter().enumerate().map(|(i, &uir)| libm::fabs(uir - one_hot(labels[k], i))).sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// `s_k = 1 / (1 + li_k / p_k)`.
pub fn safety_degrees(li: &[f64], counts: &[usize]) -> Result<SafetyVector> {
    if li.len() != counts.len() {
        return Err(Error::Shape(format!("{} inconsistencies for {} counts", li.len(), counts.len())));
    }
    if counts.contains(&0) {
        return Err(Error::InvalidParameter("neighbor counts must be positive".into()));
    }
    Ok(SafetyVector::new(li.iter().zip(counts).map(|(&li, &p)| 1.0 / (1.0 + li / p as f64)).collect()))
}

/// Opens (true) iff `mean_s >= theta_s`.
pub fn step_gate(mean_s: f64, theta_s: f64) -> bool {
    mean_s >= theta_s
}

/// Value of the shared objective with coupling weight `rho`.
pub fn safe_objective(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    s: &[f64],
    lambda1: f64,
    rho: f64,
) -> Result<f64> {
    problem.check(u, v, s)?;
    let d2 = squared_distances(problem.x, v);
    Ok(objective_with(u, &d2, problem, s, lambda1, rho))
}

fn objective_with(u: &PartitionMatrix, d2: &Matrix, p: &Coupling<'_>, s: &[f64], lambda1: f64, rho: f64) -> f64 {
    let l = p.labeled();
    let mut fuzzy = 0.0;
    for (k, col) in u.columns().enumerate() {
        fuzzy += col.iter().zip(d2.row(k)).map(|(a, d)| a * a * d).sum::<f64>();
    }
    let mut fidelity = 0.0;
    let mut smooth = 0.0;
    for k in 0..l {
        let col = u.column(k);
        let label = p.labels[k];
        fidelity += s[k]
            * col.iter().zip(d2.row(k)).enumerate().map(|(i, (a, d))| sq(a - one_hot(label, i)) * d).sum::<f64>();
        let g = smoothing_weight(s[k]);
        for (r, w) in p.graph.edges(k) {
            let ur = u.column(l + r);
            let to_label: f64 = ur.iter().enumerate().map(|(i, b)| sq(one_hot(label, i) - b)).sum();
            let to_point: f64 = ur.iter().zip(col).map(|(b, a)| sq(a - b)).sum();
            smooth += w * (s[k] * to_label + g * to_point);
        }
    }
    fuzzy + lambda1 * fidelity + rho * smooth
}

fn labeled_columns_into(
    prev: &PartitionMatrix,
    d2: &Matrix,
    p: &Coupling<'_>,
    s: &[f64],
    lambda1: f64,
    rho: f64,
    out: &mut PartitionMatrix,
) {
    let c = prev.clusters();
    let l = p.labeled();
    let mut pk = vec![0.0; c];
    let mut qk = vec![0.0; c];
    for k in 0..l {
        let g = rho * smoothing_weight(s[k]);
        let wsum = p.graph.weight_sum(k);
        for i in 0..c {
            let d = d2.get(k, i);
            let pulled: f64 = p.graph.edges(k).map(|(r, w)| w * prev.get(i, l + r)).sum();
            pk[i] = lambda1 * s[k] * one_hot(p.labels[k], i) * d + g * pulled;
            qk[i] = d + lambda1 * s[k] * d + g * wsum;
        }
        minimize_separable_column(&pk, &qk, out.column_mut(k));
    }
}

fn unlabeled_columns_into(
    prev: &PartitionMatrix,
    d2: &Matrix,
    p: &Coupling<'_>,
    s: &[f64],
    rho: f64,
    out: &mut PartitionMatrix,
) {
    let c = prev.clusters();
    let l = p.labeled();
    let mut z = vec![0.0; c];
    let mut t = vec![0.0; c];
    for r in 0..p.graph.unlabeled_count() {
        let row = d2.row(l + r);
        let incoming = p.graph.incoming(r);
        if incoming.is_empty() || rho == 0.0 {
            fcm_column(row, 2.0, out.column_mut(l + r));
            continue;
        }
        let mut tw = 0.0;
        z.iter_mut().for_each(|v| *v = 0.0);
        for &(k, w) in incoming {
            let g = smoothing_weight(s[k]);
            tw += w * (s[k] + g);
            let uk = prev.column(k);
            for i in 0..c {
                z[i] += w * (s[k] * one_hot(p.labels[k], i) + g * uk[i]);
            }
        }
        for i in 0..c {
            z[i] *= rho;
            t[i] = row[i] + rho * tw;
        }
        minimize_separable_column(&z, &t, out.column_mut(l + r));
    }
}

/// Labeled-column update with coupling `rho`; unlabeled columns are copied from `u`.
pub fn update_labeled(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    s: &[f64],
    lambda1: f64,
    rho: f64,
) -> Result<PartitionMatrix> {
    problem.check(u, v, s)?;
    let d2 = squared_distances(problem.x, v);
    let mut out = u.clone();
    labeled_columns_into(u, &d2, problem, s, lambda1, rho, &mut out);
    Ok(out)
}

/// Unlabeled-column update with coupling `rho`; labeled columns are copied from `u`.
pub fn update_unlabeled(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    s: &[f64],
    rho: f64,
) -> Result<PartitionMatrix> {
    problem.check(u, v, s)?;
    let d2 = squared_distances(problem.x, v);
    let mut out = u.clone();
    unlabeled_columns_into(u, &d2, problem, s, rho, &mut out);
    Ok(out)
}

/// K-GBS3FCM objective; the gate is taken from `safety.mean` unless the config forces it.
pub fn kgbs_objective(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    safety: &SafetyVector,
    cfg: &SafeConfig,
) -> Result<f64> {
    let rho = cfg.coupling(cfg.gate_for(safety.mean));
    safe_objective(u, v, problem, &safety.values, cfg.lambda1, rho)
}

pub fn kgbs_update_labeled(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    safety: &SafetyVector,
    cfg: &SafeConfig,
    gate: bool,
) -> Result<PartitionMatrix> {
    update_labeled(u, v, problem, &safety.values, cfg.lambda1, cfg.coupling(gate))
}

pub fn kgbs_update_unlabeled(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    safety: &SafetyVector,
    cfg: &SafeConfig,
    gate: bool,
) -> Result<PartitionMatrix> {
    update_unlabeled(u, v, problem, &safety.values, cfg.coupling(gate))
}

/// Centers minimizing the objective for fixed memberships:
/// `v_i = (Σ_k u_ik² x_k + λ1 Σ_{k<l} s_k (u_ik − f_ik)² x_k) / (Σ_k u_ik² + λ1 Σ_{k<l} s_k (u_ik − f_ik)²)`.
pub fn safe_center_update(
    u: &PartitionMatrix,
    labels: &[usize],
    s: &[f64],
    lambda1: f64,
    x: &Matrix,
) -> Result<Centers> {
    if u.points() != x.rows() || s.len() != labels.len() || labels.len() > x.rows() {
        return Err(Error::Shape("center update inputs disagree".into()));
    }
    let l = labels.len();
    weighted_centers(x, u.clusters(), |i, k| {
        let a = u.get(i, k);
        let mut w = a * a;
        if k < l {
            let e = a - one_hot(labels[k], i);
            w += lambda1 * s[k] * e * e;
        }
        w
    })
}

/// Initial memberships: one-hot provided labels on the labeled block, one FCM
/// evaluation against `v0` on the unlabeled block.
pub fn initial_partition(x: &Matrix, labels: &[usize], v0: &Centers) -> PartitionMatrix {
    let c = v0.clusters();
    let l = labels.len();
    let mut u = PartitionMatrix::zeros(c, x.rows());
    for (k, &y) in labels.iter().enumerate() {
        u.column_mut(k)[y] = 1.0;
    }
    let d2 = squared_distances(x, v0);
    for k in l..x.rows() {
        fcm_column(d2.row(k), 2.0, u.column_mut(k));
    }
    u
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgbsFit {
    pub partition: PartitionMatrix,
    pub safety: SafetyVector,
    pub centers: Centers,
    pub trace: FitTrace,
    /// Neighbor count of each labeled point.
    pub neighbor_counts: Vec<usize>,
}

/// Stepwise K-GBS3FCM solver; [`kgbs_fit`] drives it to convergence.
#[derive(Debug, Clone)]
pub struct KgbsSolver {
    cfg: SafeConfig,
    x: Matrix,
    labels: Vec<usize>,
    graph: NeighborGraph,
    u: PartitionMatrix,
    v: Centers,
    safety: SafetyVector,
    trace: FitTrace,
    scratch: PartitionMatrix,
}

impl KgbsSolver {
    /// Builds the density-adaptive graph and the initial state.
    pub fn new(view: &SemiSupervisedView, cfg: SafeConfig) -> Result<Self> {
        cfg.validate()?;
        let x = view.data().features().clone();
        let labels = view.provided_clusters();
        let dist = DistanceIndex::new(&x, labels.len())?;
        let graph = dynamic_graph(&dist, cfg.density_neighbors, cfg.un_min, cfg.un_max)?;
        let v = view.labeled_class_means()?;
        Self::from_parts(cfg, x, labels, graph, v)
    }

    /// Initial state from an explicit graph and initial centers.
    pub fn from_parts(
        cfg: SafeConfig,
        x: Matrix,
        labels: Vec<usize>,
        graph: NeighborGraph,
        v0: Centers,
    ) -> Result<Self> {
        cfg.validate()?;
        let u = initial_partition(&x, &labels, &v0);
        let li = local_inconsistency(&u, &labels, &graph)?;
        let safety = safety_degrees(&li, graph.counts())?;
        let mut solver = Self {
            scratch: u.clone(),
            cfg,
            x,
            labels,
            graph,
            u,
            v: v0,
            safety,
            trace: FitTrace::default(),
        };
        let j0 = solver.objective()?;
        solver.trace.objective.push(j0);
        solver.trace.mean_safety.push(solver.safety.mean);
        Ok(solver)
    }

    fn problem(&self) -> Coupling<'_> {
        Coupling { x: &self.x, labels: &self.labels, graph: &self.graph }
    }

    fn objective(&self) -> Result<f64> {
        kgbs_objective(&self.u, &self.v, &self.problem(), &self.safety, &self.cfg)
    }

    /// One pass: memberships, centers, safety degrees, objective. Returns the new objective.
    pub fn step(&mut self) -> Result<f64> {
        let gate = self.cfg.gate_for(self.safety.mean);
        let rho = self.cfg.coupling(gate);
        let d2 = squared_distances(&self.x, &self.v);
        let problem = Coupling { x: &self.x, labels: &self.labels, graph: &self.graph };
        let s = &self.safety.values;
        labeled_columns_into(&self.u, &d2, &problem, s, self.cfg.lambda1, rho, &mut self.scratch);
        match self.cfg.sweep {
            SweepOrder::Jacobi => unlabeled_columns_into(&self.u, &d2, &problem, s, rho, &mut self.scratch),
            SweepOrder::LabeledFirst => {
                let fresh = self.scratch.clone();
                unlabeled_columns_into(&fresh, &d2, &problem, s, rho, &mut self.scratch)
            }
        }
        core::mem::swap(&mut self.u, &mut self.scratch);
        self.v = safe_center_update(&self.u, &self.labels, s, self.cfg.lambda1, &self.x)?;
        let li = local_inconsistency(&self.u, &self.labels, &self.graph)?;
        self.safety = safety_degrees(&li, self.graph.counts())?;
        let j = self.objective()?;
        self.trace.gate.push(gate);
        self.trace.mean_safety.push(self.safety.mean);
        self.trace.iterations += 1;
        if self.trace.push(j, self.cfg.tolerance) {
            self.trace.converged = true;
        }
        Ok(j)
    }

    pub fn converged(&self) -> bool {
        self.trace.converged
    }

    pub fn run(mut self) -> Result<KgbsFit> {
        while !self.trace.converged && self.trace.iterations < self.cfg.max_iter {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn partition(&self) -> &PartitionMatrix {
        &self.u
    }

    pub fn graph(&self) -> &NeighborGraph {
        &self.graph
    }

    pub fn safety(&self) -> &SafetyVector {
        &self.safety
    }

    pub fn centers(&self) -> &Centers {
        &self.v
    }

    pub fn finish(self) -> KgbsFit {
        KgbsFit {
            neighbor_counts: self.graph.counts().to_vec(),
            partition: self.u,
            safety: self.safety,
            centers: self.v,
            trace: self.trace,
        }
    }
}

/// Runs K-GBS3FCM on a semi-supervised view whose labeled rows come first.
pub fn kgbs_fit(view: &SemiSupervisedView, cfg: &SafeConfig) -> Result<KgbsFit> {
    KgbsSolver::new(view, cfg.clone())?.run()
}

/// AS3FCM safety degrees and the QP coefficients they were solved from.
#[derive(Debug, Clone, PartialEq)]
pub struct As3State {
    pub s: Vec<f64>,
    pub omega: Vec<f64>,
    pub delta: Vec<f64>,
    pub qp_iterations: usize,
    pub qp_residual: f64,
}

/// Quadratic-program coefficients `(Ω, Δ)` of the AS3FCM safety update.
pub fn as3_qp_coefficients(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    lambda1: f64,
    lambda2: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let l = problem.labeled();
    problem.check(u, v, &vec![0.0; l])?;
    let d2 = squared_distances(problem.x, v);
    Ok(qp_coefficients_with(u, &d2, problem, lambda1, lambda2))
}

fn qp_coefficients_with(
    u: &PartitionMatrix,
    d2: &Matrix,
    p: &Coupling<'_>,
    lambda1: f64,
    lambda2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let l = p.labeled();
    let mut omega = Vec::with_capacity(l);
    let mut delta = Vec::with_capacity(l);
    for k in 0..l {
        let col = u.column(k);
        let label = p.labels[k];
        let fidelity: f64 =
            col.iter().zip(d2.row(k)).enumerate().map(|(i, (a, d))| sq(a - one_hot(label, i)) * d).sum();
        let mut to_label = 0.0;
        let mut to_point = 0.0;
        for (r, w) in p.graph.edges(k) {
            let ur = u.column(l + r);
            to_label += w * ur.iter().enumerate().map(|(i, b)| sq(one_hot(label, i) - b)).sum::<f64>();
            to_point += w * ur.iter().zip(col).map(|(b, a)| sq(a - b)).sum::<f64>();
        }
        omega.push(4.0 * lambda2 * to_point);
        delta.push(lambda1 * fidelity + lambda2 * to_label - 2.0 * lambda2 * to_point);
    }
    (omega, delta)
}

/// Safety degrees on the simplex minimizing `½ Σ Ω_k s_k² + Σ Δ_k s_k`.
pub fn as3_safety_update(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    lambda1: f64,
    lambda2: f64,
    warm_start: Option<&[f64]>,
) -> Result<As3State> {
    let (omega, delta) = as3_qp_coefficients(u, v, problem, lambda1, lambda2)?;
    let sol = solve_separable_qp(&omega, &delta, warm_start)?;
    Ok(As3State { s: sol.s, omega, delta, qp_iterations: sol.iterations, qp_residual: sol.residual })
}

pub fn as3_update_labeled(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    s: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<PartitionMatrix> {
    update_labeled(u, v, problem, s, lambda1, lambda2)
}

pub fn as3_update_unlabeled(
    u: &PartitionMatrix,
    v: &Centers,
    problem: &Coupling<'_>,
    s: &[f64],
    lambda2: f64,
) -> Result<PartitionMatrix> {
    update_unlabeled(u, v, problem, s, lambda2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct As3Config {
    pub lambda1: f64,
    pub lambda2: f64,
    pub neighbors: usize,
    pub tolerance: f64,
    pub max_iter: usize,
    pub sweep: SweepOrder,
}

impl As3Config {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2, neighbors: AS3_NEIGHBORS, tolerance: 1e-4, max_iter: 100, sweep: SweepOrder::Jacobi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct As3Fit {
    pub partition: PartitionMatrix,
    pub state: As3State,
    pub centers: Centers,
    pub trace: FitTrace,
}

/// Runs AS3FCM: fixed-size graph, memberships, centers, then the safety QP,
/// until the objective changes by less than the tolerance.
pub fn as3_fit(view: &SemiSupervisedView, cfg: &As3Config) -> Result<As3Fit> {
    if !(cfg.lambda1 >= 0.0 && cfg.lambda2 >= 0.0) {
        return Err(Error::InvalidParameter("λ1 and λ2 must be non-negative".into()));
    }
    let x = view.data().features();
    let labels = view.provided_clusters();
    let l = labels.len();
    let dist = DistanceIndex::new(x, l)?;
    let graph = graph_weights(&dist, &vec![cfg.neighbors; l])?;
    let problem = Coupling { x, labels: &labels, graph: &graph };
    let mut v = view.labeled_class_means()?;
    let mut u = initial_partition(x, &labels, &v);
    let mut state = As3State {
        s: vec![1.0 / l as f64; l],
        omega: Vec::new(),
        delta: Vec::new(),
        qp_iterations: 0,
        qp_residual: 0.0,
    };
    let mut trace = FitTrace::default();
    trace.objective.push(safe_objective(&u, &v, &problem, &state.s, cfg.lambda1, cfg.lambda2)?);
    trace.mean_safety.push(1.0 / l as f64);
    let mut next = u.clone();
    for _ in 0..cfg.max_iter {
        let d2 = squared_distances(x, &v);
        labeled_columns_into(&u, &d2, &problem, &state.s, cfg.lambda1, cfg.lambda2, &mut next);
        match cfg.sweep {
            SweepOrder::Jacobi => unlabeled_columns_into(&u, &d2, &problem, &state.s, cfg.lambda2, &mut next),
            SweepOrder::LabeledFirst => {
                let fresh = next.clone();
                unlabeled_columns_into(&fresh, &d2, &problem, &state.s, cfg.lambda2, &mut next)
            }
        }
        core::mem::swap(&mut u, &mut next);
        v = safe_center_update(&u, &labels, &state.s, cfg.lambda1, x)?;
        state = as3_safety_update(&u, &v, &problem, cfg.lambda1, cfg.lambda2, Some(&state.s))?;
        trace.iterations += 1;
        trace.mean_safety.push(1.0 / l as f64);
        let j = safe_objective(&u, &v, &problem, &state.s, cfg.lambda1, cfg.lambda2)?;
        if trace.push(j, cfg.tolerance) {
            trace.converged = true;
            break;
        }
    }
    Ok(As3Fit { partition: u, state, centers: v, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    fn blobs() -> SemiSupervisedView {
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for k in 0..40 {
            let t = k as f64 * 0.05;
            rows.push([t.sin() * 0.3, t.cos() * 0.3]);
            truth.push(1);
            rows.push([6.0 + t.cos() * 0.3, 6.0 + t.sin() * 0.3]);
            truth.push(2);
        }
        let ds = Dataset::new("blobs", Matrix::from_rows(&rows).unwrap(), truth, 2).unwrap();
        crate::dataset::split_labeled(&ds, 0.2, 1).unwrap()
    }

    #[test]
    fn safety_formula() {
        let s = safety_degrees(&[0.0, 5.0, 3.0], &[5, 5, 6]).unwrap();
        assert_eq!(s.values[0], 1.0);
        assert_eq!(s.values[1], 0.5);
        assert!((s.values[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!(safety_degrees(&[1.0], &[0]).is_err());
    }

    #[test]
    fn gate_boundary() {
        assert!(!step_gate(0.59, 0.6));
        assert!(step_gate(0.6, 0.6));
        assert!(step_gate(0.95, 0.6));
    }

    #[test]
    fn inconsistency_half_split() {
        // one labeled point (label 0) with one unlabeled neighbor at (0.5, 0.5)
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let dist = DistanceIndex::new(&x, 1).unwrap();
        let graph = graph_weights(&dist, &[1]).unwrap();
        let u = PartitionMatrix::from_columns(&[[1.0, 0.0], [0.5, 0.5]]).unwrap();
        assert_eq!(local_inconsistency(&u, &[0], &graph).unwrap(), vec![1.0]);
        let agree = PartitionMatrix::from_columns(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(local_inconsistency(&agree, &[0], &graph).unwrap(), vec![0.0]);
    }

    #[test]
    fn kgbs_separable() {
        let view = blobs();
        let cfg = SafeConfig::for_size(view.data().len(), 1.0, 1.0);
        let fit = kgbs_fit(&view, &cfg).unwrap();
        let pred = crate::eval::predict_labels(&fit.partition);
        let acc = crate::eval::clustering_accuracy(&pred, view.data().ground_truth(), crate::eval::Matching::Identity)
            .unwrap()
            .accuracy;
        assert_eq!(acc, 1.0);
        assert!(fit.partition.is_column_stochastic(1e-9));
        assert!(fit.safety.values.iter().all(|&s| s > 0.0 && s <= 1.0));
        assert!(fit.trace.gate.iter().all(|&g| g));
    }

    #[test]
    fn as3_separable() {
        let view = blobs();
        let fit = as3_fit(&view, &As3Config::new(1.0, 1.0)).unwrap();
        let pred = crate::eval::predict_labels(&fit.partition);
        let acc = crate::eval::clustering_accuracy(&pred, view.data().ground_truth(), crate::eval::Matching::Identity)
            .unwrap()
            .accuracy;
        assert_eq!(acc, 1.0);
        let total: f64 = fit.state.s.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
