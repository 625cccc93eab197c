//! Experiment configuration, read from TOML. Every default is the benchmark protocol.

use std::path::Path;

use anyhow::{bail, Context, Result};
use safefcm_core::safe::{As3Config, GateMode, SafeConfig, SweepOrder};
use serde::{Deserialize, Serialize};

use crate::algorithm::Algorithm;
use crate::catalog::DatasetName;

pub const PROTOCOL_RATIOS: [f64; 7] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30];
pub const PROTOCOL_LAMBDAS: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
pub const PROTOCOL_REPEATS: usize = 20;
pub const PROTOCOL_LABELED_FRACTION: f64 = 0.2;
pub const MAX_MISLABEL_RATIO: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gate {
    Adaptive,
    AlwaysOpen,
    AlwaysClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    Jacobi,
    LabeledFirst,
}

impl From<Sweep> for SweepOrder {
    fn from(s: Sweep) -> Self {
        match s {
            Sweep::Jacobi => SweepOrder::Jacobi,
            Sweep::LabeledFirst => SweepOrder::LabeledFirst,
        }
    }
}

/// Settings shared by the safe variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafeSettings {
    pub density_neighbors: usize,
    pub safety_threshold: f64,
    pub un_min: usize,
    /// Upper neighbor count; `round(√n)` when unset.
    pub un_max: Option<usize>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub gate: Gate,
    pub sweep: Sweep,
    /// Fixed neighbor count of the AS3FCM graph.
    pub as3_neighbors: usize,
}

impl Default for SafeSettings {
    fn default() -> Self {
        Self {
            density_neighbors: 5,
            safety_threshold: 0.6,
            un_min: 5,
            un_max: None,
            tolerance: 1e-4,
            max_iter: 100,
            gate: Gate::Adaptive,
            sweep: Sweep::Jacobi,
            as3_neighbors: 5,
        }
    }
}

impl SafeSettings {
    pub fn kgbs(&self, n: usize, lambda1: f64, lambda2: f64) -> SafeConfig {
        let mut cfg = SafeConfig::for_size(n, lambda1, lambda2);
        cfg.density_neighbors = self.density_neighbors;
        cfg.safety_threshold = self.safety_threshold;
        cfg.un_min = self.un_min;
        if let Some(max) = self.un_max {
            cfg.un_max = max;
        }
        cfg.tolerance = self.tolerance;
        cfg.max_iter = self.max_iter;
        cfg.gate = match self.gate {
            Gate::Adaptive => GateMode::Adaptive,
            Gate::AlwaysOpen => GateMode::AlwaysOpen,
            Gate::AlwaysClosed => GateMode::AlwaysClosed,
        };
        cfg.sweep = self.sweep.into();
        cfg
    }

    pub fn as3(&self, lambda1: f64, lambda2: f64) -> As3Config {
        As3Config {
            neighbors: self.as3_neighbors,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
            sweep: self.sweep.into(),
            ..As3Config::new(lambda1, lambda2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base_seed: u64,
    pub datasets: Vec<DatasetName>,
    pub algorithms: Vec<Algorithm>,
    pub mislabel_ratios: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub repeats: usize,
    pub labeled_fraction: f64,
    pub standardize: bool,
    pub synthetic_seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub safe: SafeSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            base_seed: 2024,
            datasets: DatasetName::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            mislabel_ratios: PROTOCOL_RATIOS.to_vec(),
            lambda_grid: PROTOCOL_LAMBDAS.to_vec(),
            repeats: PROTOCOL_REPEATS,
            labeled_fraction: PROTOCOL_LABELED_FRACTION,
            standardize: true,
            synthetic_seed: 0,
            workers: 0,
            safe: SafeSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.algorithms.is_empty() {
            bail!("need at least one dataset and one algorithm");
        }
        if let Some(r) = self.mislabel_ratios.iter().find(|r| !(0.0..=MAX_MISLABEL_RATIO).contains(*r)) {
            bail!("mislabel ratio {r} outside [0, {MAX_MISLABEL_RATIO}]");
        }
        if self.mislabel_ratios.is_empty() {
            bail!("no mislabel ratios");
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            bail!("λ grid must be non-empty, finite and non-negative");
        }
        if self.repeats == 0 {
            bail!("repeats must be positive");
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction < 1.0) {
            bail!("labeled fraction {} outside (0, 1)", self.labeled_fraction);
        }
        let s = &self.safe;
        if s.un_max.is_some_and(|m| m < s.un_min) || s.un_min == 0 {
            bail!("need 1 <= un_min <= un_max");
        }
        if !(0.0..=1.0).contains(&s.safety_threshold) {
            bail!("safety threshold {} outside [0, 1]", s.safety_threshold);
        }
        Ok(())
    }

    /// λ pairs visited for `alg`: the full grid squared for the safe variants,
    /// `(α, 0)` for SSFCM and a single `(0, 0)` for the unsupervised baselines.
    pub fn lambda_pairs(&self, alg: Algorithm) -> Vec<(f64, f64)> {
        match alg {
            Algorithm::Kmeans | Algorithm::Fcm => vec![(0.0, 0.0)],
            Algorithm::Ssfcm => self.lambda_grid.iter().map(|&a| (a, 0.0)).collect(),
            Algorithm::As3fcm | Algorithm::Kgbs3fcm => {
                let g = &self.lambda_grid;
                g.iter().flat_map(|&a| g.iter().map(move |&b| (a, b))).collect()
            }
        }
    }

    /// Runs per (dataset, algorithm) in a complete sweep.
    pub fn run_count(&self, alg: Algorithm) -> usize {
        self.mislabel_ratios.len() * self.lambda_pairs(alg).len() * self.repeats
    }
}
