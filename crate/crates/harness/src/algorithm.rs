//! One fit of one algorithm on one seeded split.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{Context, Result};
use safefcm_core::baseline::{fcm_fit, kmeans_fit, ssfcm_fit, FcmParams, FitTrace, SsfcmParams};
use safefcm_core::dataset::{inject_mislabels, split_labeled, Dataset};
use safefcm_core::eval::{clustering_accuracy, predict_labels, Matching};
use safefcm_core::safe::{as3_fit, kgbs_fit};
use serde::{Deserialize, Serialize};

use crate::config::SafeSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Fcm,
    Ssfcm,
    As3fcm,
    Kgbs3fcm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Kmeans, Algorithm::Fcm, Algorithm::Ssfcm, Algorithm::As3fcm, Algorithm::Kgbs3fcm];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Fcm => "fcm",
            Algorithm::Ssfcm => "ssfcm",
            Algorithm::As3fcm => "as3fcm",
            Algorithm::Kgbs3fcm => "kgbs3fcm",
        }
    }

    pub fn uses_labels(self) -> bool {
        !matches!(self, Algorithm::Kmeans | Algorithm::Fcm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .with_context(|| format!("unknown algorithm {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub mislabel_ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub labeled_fraction: f64,
    pub seed: u64,
}

/// Scalar summary of a fit, as stored in result records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// Largest rise of the objective between consecutive iterations.
    pub max_objective_increase: f64,
    pub labeled: usize,
    pub mislabeled: usize,
    pub final_mean_safety: Option<f64>,
    /// Iterations whose membership update ran with the gate open.
    pub gate_open_iterations: Option<usize>,
    pub seconds: f64,
}

impl RunOutcome {
    fn from_trace(accuracy: f64, trace: &FitTrace, labeled: usize, mislabeled: usize, started: Instant) -> Self {
        Self {
            accuracy,
            iterations: trace.iterations,
            converged: trace.converged,
            initial_objective: trace.objective.first().copied().unwrap_or(f64::NAN),
            final_objective: trace.final_objective(),
            max_objective_increase: trace.max_increase(),
            labeled,
            mislabeled,
            final_mean_safety: None,
            gate_open_iterations: None,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Split seed and mislabel seed derived from a run seed.
pub fn sub_seeds(seed: u64) -> (u64, u64) {
    (seed, seed.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15)
}

/// Splits, corrupts, fits and scores. Unsupervised baselines ignore the split
/// and score with the best cluster-to-class matching; the rest use identity matching.
pub fn run_once(ds: &Dataset, spec: &RunSpec, safe: &SafeSettings) -> Result<RunOutcome> {
    let started = Instant::now();
    let c = ds.num_classes();
    let (split_seed, flip_seed) = sub_seeds(spec.seed);
    if !spec.algorithm.uses_labels() {
        let (pred, trace) = match spec.algorithm {
            Algorithm::Kmeans => {
                let fit = kmeans_fit(ds, c, spec.seed)?;
                let trace = FitTrace {
                    objective: vec![fit.inertia],
                    iterations: fit.iterations,
                    converged: true,
                    ..FitTrace::default()
                };
                (fit.labels(), trace)
            }
            _ => {
                let fit = fcm_fit(ds, &FcmParams::new(c, spec.seed))?;
                (predict_labels(&fit.partition), fit.trace)
            }
        };
        let score = clustering_accuracy(&pred, ds.ground_truth(), Matching::BestPermutation)?;
        return Ok(RunOutcome::from_trace(score.accuracy, &trace, 0, 0, started));
    }

    let view = split_labeled(ds, spec.labeled_fraction, split_seed)?;
    let view = inject_mislabels(&view, spec.mislabel_ratio, flip_seed)?;
    let truth = view.data().ground_truth();
    let (l, flipped) = (view.labeled_count(), view.mislabeled_count());
    let outcome = match spec.algorithm {
        Algorithm::Ssfcm => {
            let params = SsfcmParams { alpha: spec.lambda1, tolerance: safe.tolerance, max_iter: safe.max_iter };
            let fit = ssfcm_fit(&view, &params)?;
            let acc = clustering_accuracy(&predict_labels(&fit.partition), truth, Matching::Identity)?.accuracy;
            RunOutcome::from_trace(acc, &fit.trace, l, flipped, started)
        }
        Algorithm::As3fcm => {
            let fit = as3_fit(&view, &safe.as3(spec.lambda1, spec.lambda2))?;
            let acc = clustering_accuracy(&predict_labels(&fit.partition), truth, Matching::Identity)?.accuracy;
            RunOutcome::from_trace(acc, &fit.trace, l, flipped, started)
        }
        _ => {
            let cfg = safe.kgbs(ds.len(), spec.lambda1, spec.lambda2);
            let fit = kgbs_fit(&view, &cfg)?;
            let acc = clustering_accuracy(&predict_labels(&fit.partition), truth, Matching::Identity)?.accuracy;
            RunOutcome {
                final_mean_safety: Some(fit.safety.mean),
                gate_open_iterations: Some(fit.trace.gate.iter().filter(|&&g| g).count()),
                ..RunOutcome::from_trace(acc, &fit.trace, l, flipped, started)
            }
        }
    };
    Ok(RunOutcome { seconds: started.elapsed().as_secs_f64(), ..outcome })
}
