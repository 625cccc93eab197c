//! Synthetic benchmark generators.
//!
//! Gauss50 and Gauss50x are 50-dimensional two-class Gaussian sets with class
//! means `+0.25` and `-0.25` on every feature. Gauss50x draws each class from
//! a two-component mixture whose components are displaced by `±0.5` along the
//! first [`MIXTURE_SHIFT_FEATURES`] features. All covariances are the identity.
//!
//! The waveform generator is Breiman's three-class process: each sample is a
//! random convex combination of two of three triangular base waves plus unit
//! Gaussian noise on each of 21 features.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::matrix::Matrix;

pub const GAUSS_DIM: usize = 50;
pub const GAUSS_CLASS_MEAN: f64 = 0.25;
pub const MIXTURE_SHIFT: f64 = 0.5;
pub const MIXTURE_SHIFT_FEATURES: usize = 10;
/// Share of each Gauss50x class drawn from its first mixture component.
pub const MIXTURE_MAJOR_WEIGHT: f64 = 0.6;

pub const WAVEFORM_DIM: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GaussKind {
    Gauss50,
    Gauss50x,
}

impl GaussKind {
    pub fn name(self) -> &'static str {
        match self {
            GaussKind::Gauss50 => "gauss50",
            GaussKind::Gauss50x => "gauss50x",
        }
    }

    pub fn size(self) -> usize {
        match self {
            GaussKind::Gauss50 => 1550,
            GaussKind::Gauss50x => 2000,
        }
    }
}

impl fmt::Display for GaussKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for GaussKind {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "gauss50" => Ok(GaussKind::Gauss50),
            "gauss50x" => Ok(GaussKind::Gauss50x),
            other => Err(alloc::format!("unknown synthetic dataset `{other}`")),
        }
    }
}

/// Generates Gauss50 (n = 1550) or Gauss50x (n = 2000); classes are equal-sized
/// and stored class by class.
pub fn gen_gauss(kind: GaussKind, seed: u64) -> Result<Dataset> {
    let n = kind.size();
    let per_class = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * GAUSS_DIM);
    let mut truth = Vec::with_capacity(n);
    for (class, sign) in [(1usize, 1.0), (2, -1.0)] {
        let major = match kind {
            GaussKind::Gauss50 => per_class,
            GaussKind::Gauss50x => libm::round(MIXTURE_MAJOR_WEIGHT * per_class as f64) as usize,
        };
        for s in 0..per_class {
            let shift = match kind {
                GaussKind::Gauss50 => 0.0,
                GaussKind::Gauss50x if s < major => MIXTURE_SHIFT,
                GaussKind::Gauss50x => -MIXTURE_SHIFT,
            };
            for j in 0..GAUSS_DIM {
                let mut mean = sign * GAUSS_CLASS_MEAN;
                if j < MIXTURE_SHIFT_FEATURES {
                    mean += shift;
                }
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(mean + z);
            }
            truth.push(class);
        }
    }
    Dataset::new(kind.name(), Matrix::from_vec(n, GAUSS_DIM, data)?, truth, 2)
}

fn base_wave(which: usize, i: usize) -> f64 {
    // Triangles of height 6 centred at features 7, 15 and 11 (1-based).
    let centre = [7.0, 15.0, 11.0][which];
    let h = 6.0 - libm::fabs(i as f64 + 1.0 - centre);
    h.max(0.0)
}

/// Breiman's waveform data: `n` samples, 21 features, 3 equiprobable classes.
pub fn gen_waveform(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * WAVEFORM_DIM);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let class = rng.random_range(0..3usize);
        let (a, b) = match class {
            0 => (0, 1),
            1 => (0, 2),
            _ => (1, 2),
        };
        let mix: f64 = rng.random();
        for i in 0..WAVEFORM_DIM {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(mix * base_wave(a, i) + (1.0 - mix) * base_wave(b, i) + z);
        }
        truth.push(class + 1);
    }
    Dataset::new("waveform", Matrix::from_vec(n, WAVEFORM_DIM, data)?, truth, 3)
}
