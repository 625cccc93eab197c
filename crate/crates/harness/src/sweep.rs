//! Protocol sweeps: dataset × algorithm × mislabel ratio × λ pair × repeat.
//!
//! Each run's seed is a hash of its coordinates, so results never depend on
//! scheduling. Records are appended to one JSON-lines file per
//! (dataset, algorithm); rerunning a sweep skips every run already on disk.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use safefcm_core::dataset::Dataset;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithm::{run_once, Algorithm, RunOutcome, RunSpec};
use crate::catalog::{default_data_dir, DataSource, DatasetName};
use crate::config::ExperimentConfig;

/// Runs computed between two flushes of a record file.
const BATCH: usize = 64;

pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const RUNS_DIR: &str = "runs";

/// Seed of run `(dataset, ratio, λ1, λ2, repeat)`.
pub fn run_seed(base_seed: u64, dataset: DatasetName, ratio: f64, lambda1: f64, lambda2: f64, repeat: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(dataset.as_str().as_bytes());
    h.update([0]);
    for v in [ratio, lambda1, lambda2] {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update((repeat as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// One line of a record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: DatasetName,
    pub algorithm: Algorithm,
    pub mislabel_ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub repeat: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RunOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Identity of a run within a sweep directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub dataset: DatasetName,
    pub algorithm: Algorithm,
    pub ratio: u64,
    pub lambda1: u64,
    pub lambda2: u64,
    pub repeat: usize,
}

impl RunRecord {
    pub fn key(&self) -> RunKey {
        RunKey {
            dataset: self.dataset,
            algorithm: self.algorithm,
            ratio: self.mislabel_ratio.to_bits(),
            lambda1: self.lambda1.to_bits(),
            lambda2: self.lambda2.to_bits(),
            repeat: self.repeat,
        }
    }
}

pub fn records_path(out: &Path, dataset: DatasetName, algorithm: Algorithm) -> PathBuf {
    out.join(RUNS_DIR).join(format!("{dataset}__{algorithm}.jsonl"))
}

/// Reads a record file, ignoring a torn final line left by an interrupted write.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(e) if i + 1 == lines.len() => log::warn!("{}: dropping torn last line: {e}", path.display()),
            Err(e) => return Err(e).with_context(|| format!("{}: line {}", path.display(), i + 1)),
        }
    }
    Ok(out)
}

/// Cuts a torn final line so later appends start on a fresh line.
fn trim_torn_tail(path: &Path) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let bytes = fs::read(path)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
    Ok(())
}

/// Every record under `out/runs`, sorted by run key.
pub fn load_all_records(out: &Path) -> Result<Vec<RunRecord>> {
    let dir = out.join(RUNS_DIR);
    let mut records = Vec::new();
    if dir.is_dir() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                records.extend(read_records(&path)?);
            }
        }
    }
    records.sort_by_key(RunRecord::key);
    records.dedup_by_key(|r| r.key());
    Ok(records)
}

/// All runs a configuration asks for, in canonical order.
pub fn planned_runs(cfg: &ExperimentConfig, dataset: DatasetName, algorithm: Algorithm) -> Vec<RunRecord> {
    let mut runs = Vec::with_capacity(cfg.run_count(algorithm));
    for &ratio in &cfg.mislabel_ratios {
        for (lambda1, lambda2) in cfg.lambda_pairs(algorithm) {
            for repeat in 0..cfg.repeats {
                runs.push(RunRecord {
                    dataset,
                    algorithm,
                    mislabel_ratio: ratio,
                    lambda1,
                    lambda2,
                    repeat,
                    seed: run_seed(cfg.base_seed, dataset, ratio, lambda1, lambda2, repeat),
                    outcome: None,
                    error: None,
                });
            }
        }
    }
    runs
}

fn execute(ds: &Dataset, cfg: &ExperimentConfig, mut rec: RunRecord) -> RunRecord {
    let spec = RunSpec {
        algorithm: rec.algorithm,
        mislabel_ratio: rec.mislabel_ratio,
        lambda1: rec.lambda1,
        lambda2: rec.lambda2,
        labeled_fraction: cfg.labeled_fraction,
        seed: rec.seed,
    };
    match run_once(ds, &spec, &cfg.safe) {
        Ok(o) => rec.outcome = Some(o),
        Err(e) => rec.error = Some(format!("{e:#}")),
    }
    rec
}

/// Writes the config snapshot, or checks that an existing one matches.
fn pin_config(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let path = out.join(CONFIG_SNAPSHOT);
    let mut pinned = cfg.clone();
    pinned.workers = 0;
    if path.exists() {
        let existing = ExperimentConfig::load(&path)?;
        let same_protocol = existing.base_seed == pinned.base_seed
            && existing.labeled_fraction == pinned.labeled_fraction
            && existing.standardize == pinned.standardize
            && existing.synthetic_seed == pinned.synthetic_seed
            && existing.safe == pinned.safe;
        if !same_protocol {
            bail!(
                "{} was produced with different seeds or settings; use a fresh output directory",
                out.display()
            );
        }
        // Grids and dataset lists may grow between resumptions.
        return Ok(());
    }
    fs::create_dir_all(out)?;
    fs::write(&path, pinned.to_toml()?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
    pub missing_datasets: usize,
}

/// Runs every missing run of `cfg`, appending records under `out`.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepSummary> {
    run_sweep_from(cfg, &default_data_dir(), out)
}

/// [`run_sweep`] reading the dataset files from `data_dir`.
pub fn run_sweep_from(cfg: &ExperimentConfig, data_dir: &Path, out: &Path) -> Result<SweepSummary> {
    cfg.validate()?;
    pin_config(cfg, out)?;
    fs::create_dir_all(out.join(RUNS_DIR))?;
    let src = DataSource {
        dir: data_dir.to_path_buf(),
        standardize: cfg.standardize,
        synthetic_seed: cfg.synthetic_seed,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let mut summary = SweepSummary::default();
    for &dataset in &cfg.datasets {
        if !src.available(dataset) {
            log::warn!("{dataset}: data file missing in {}, skipping", src.dir.display());
            summary.missing_datasets += 1;
            continue;
        }
        let ds = src.load(dataset)?;
        for &algorithm in &cfg.algorithms {
            let path = records_path(out, dataset, algorithm);
            let done: HashSet<RunKey> = read_records(&path)?.iter().map(RunRecord::key).collect();
            let todo: Vec<RunRecord> =
                planned_runs(cfg, dataset, algorithm).into_iter().filter(|r| !done.contains(&r.key())).collect();
            summary.skipped += cfg.run_count(algorithm) - todo.len();
            if todo.is_empty() {
                continue;
            }
            log::info!("{dataset}/{algorithm}: {} runs to go", todo.len());
            trim_torn_tail(&path)?;
            let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
            for chunk in todo.chunks(BATCH) {
                let results: Vec<RunRecord> =
                    pool.install(|| chunk.par_iter().map(|r| execute(&ds, cfg, r.clone())).collect());
                let mut buf = Vec::new();
                for r in &results {
                    if let Some(e) = &r.error {
                        log::warn!("{dataset}/{algorithm} seed {}: {e}", r.seed);
                        summary.failed += 1;
                    }
                    serde_json::to_writer(&mut buf, r)?;
                    buf.push(b'\n');
                }
                file.write_all(&buf)?;
                file.flush()?;
                summary.executed += results.len();
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let base = run_seed(1, DatasetName::Heart, 0.1, 1.0, 10.0, 3);
        assert_eq!(base, run_seed(1, DatasetName::Heart, 0.1, 1.0, 10.0, 3));
        let variants = [
            run_seed(2, DatasetName::Heart, 0.1, 1.0, 10.0, 3),
            run_seed(1, DatasetName::Bupa, 0.1, 1.0, 10.0, 3),
            run_seed(1, DatasetName::Heart, 0.15, 1.0, 10.0, 3),
            run_seed(1, DatasetName::Heart, 0.1, 10.0, 1.0, 3),
            run_seed(1, DatasetName::Heart, 0.1, 1.0, 10.0, 4),
        ];
        assert!(variants.iter().all(|&s| s != base));
    }

    #[test]
    fn plan_size() {
        let cfg = ExperimentConfig::default();
        let plan = planned_runs(&cfg, DatasetName::Heart, Algorithm::Kgbs3fcm);
        assert_eq!(plan.len(), 7 * 36 * 20);
        let keys: HashSet<RunKey> = plan.iter().map(RunRecord::key).collect();
        assert_eq!(keys.len(), plan.len());
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let cfg = ExperimentConfig::default();
        let rec = &planned_runs(&cfg, DatasetName::Heart, Algorithm::Fcm)[0];
        let line = serde_json::to_string(rec).unwrap();
        fs::write(&path, format!("{line}\n{}", &line[..10])).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![rec.clone()]);
        fs::write(&path, format!("{}\n{line}\n", &line[..10])).unwrap();
        assert!(read_records(&path).is_err());
    }
}
