//! Named benchmark datasets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use safefcm_core::dataset::{standardize, Dataset};
use safefcm_core::synth::{gen_gauss, gen_waveform, GaussKind};
use serde::{Deserialize, Serialize};

use crate::csv_io::{load_bupa, load_csv, LabelColumn};

/// Overrides the directory holding the bundled CSV files.
pub const DATA_DIR_ENV: &str = "SAFEFCM_DATA_DIR";

pub const WAVEFORM_SIZE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Bupa,
    Dermatology,
    Diabetes,
    Gauss50,
    Gauss50x,
    Heart,
    Waveform,
    Wdbc,
}

impl DatasetName {
    pub const ALL: [DatasetName; 8] = [
        DatasetName::Bupa,
        DatasetName::Dermatology,
        DatasetName::Diabetes,
        DatasetName::Gauss50,
        DatasetName::Gauss50x,
        DatasetName::Heart,
        DatasetName::Waveform,
        DatasetName::Wdbc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Bupa => "bupa",
            DatasetName::Dermatology => "dermatology",
            DatasetName::Diabetes => "diabetes",
            DatasetName::Gauss50 => "gauss50",
            DatasetName::Gauss50x => "gauss50x",
            DatasetName::Heart => "heart",
            DatasetName::Waveform => "waveform",
            DatasetName::Wdbc => "wdbc",
        }
    }

    /// Expected (instances, features, classes).
    pub fn shape(self) -> (usize, usize, usize) {
        match self {
            DatasetName::Bupa => (345, 5, 2),
            DatasetName::Dermatology => (358, 33, 6),
            DatasetName::Diabetes => (768, 8, 2),
            DatasetName::Gauss50 => (1550, 50, 2),
            DatasetName::Gauss50x => (2000, 50, 2),
            DatasetName::Heart => (297, 13, 2),
            DatasetName::Waveform => (5000, 21, 3),
            DatasetName::Wdbc => (568, 30, 2),
        }
    }

    pub fn is_synthetic(self) -> bool {
        matches!(self, DatasetName::Gauss50 | DatasetName::Gauss50x | DatasetName::Waveform)
    }

    /// CSV file name inside the data directory, for file-backed datasets.
    pub fn file_name(self) -> Option<String> {
        (!self.is_synthetic()).then(|| format!("{}.csv", self.as_str()))
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetName::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .with_context(|| format!("unknown dataset {s:?}"))
    }
}

/// `$SAFEFCM_DATA_DIR`, else `./data` if present, else the repository's `data/`.
pub fn default_data_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("data");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Where datasets come from and how they are prepared.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub dir: PathBuf,
    pub standardize: bool,
    /// Seed of the synthetic generators; fixed across a sweep so only splits vary.
    pub synthetic_seed: u64,
}

impl Default for DataSource {
    fn default() -> Self {
        Self { dir: default_data_dir(), standardize: true, synthetic_seed: 0 }
    }
}

impl DataSource {
    pub fn available(&self, name: DatasetName) -> bool {
        name.file_name().is_none_or(|f| self.dir.join(f).is_file())
    }

    /// Loads or generates `name`, checks its shape and optionally standardizes it.
    pub fn load(&self, name: DatasetName) -> Result<Dataset> {
        let ds = self.load_raw(name)?;
        let (n, d, c) = name.shape();
        if (ds.len(), ds.dim(), ds.num_classes()) != (n, d, c) {
            bail!(
                "{name}: shape ({}, {}, {}) does not match expected ({n}, {d}, {c})",
                ds.len(),
                ds.dim(),
                ds.num_classes()
            );
        }
        Ok(if self.standardize { standardize(&ds) } else { ds })
    }

    fn load_raw(&self, name: DatasetName) -> Result<Dataset> {
        let seed = self.synthetic_seed;
        let ds = match name {
            DatasetName::Gauss50 => gen_gauss(GaussKind::Gauss50, seed)?,
            DatasetName::Gauss50x => gen_gauss(GaussKind::Gauss50x, seed)?,
            DatasetName::Waveform => gen_waveform(WAVEFORM_SIZE, seed)?,
            DatasetName::Bupa => load_bupa(&self.csv_path(name)?)?,
            _ => load_csv(&self.csv_path(name)?, &LabelColumn::Last)?,
        };
        Ok(ds.renamed(name.as_str()))
    }

    fn csv_path(&self, name: DatasetName) -> Result<PathBuf> {
        let path = self.dir.join(name.file_name().expect("file-backed dataset"));
        if !path.is_file() {
            bail!("{name}: {} not found (set {DATA_DIR_ENV} to the data directory)", path.display());
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for d in DatasetName::ALL {
            assert_eq!(d.as_str().parse::<DatasetName>().unwrap(), d);
        }
        assert!("iris".parse::<DatasetName>().is_err());
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let src = DataSource { dir: dir.path().into(), ..DataSource::default() };
        assert!(!src.available(DatasetName::Heart));
        assert!(src.available(DatasetName::Gauss50));
        let err = src.load(DatasetName::Heart).unwrap_err().to_string();
        assert!(err.contains("heart.csv"), "{err}");
    }
}
