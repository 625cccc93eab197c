//! Safe semi-supervised fuzzy clustering.
//!
//! This crate holds the numerical core: dataset preparation (splitting,
//! label corruption, standardization, synthetic generators), labeled-to-
//! unlabeled neighbor graphs, the unsupervised and semi-supervised
//! baselines (K-Means, FCM, SSFCM), the safety-aware algorithms (AS3FCM and
//! the KNN graph-based K-GBS3FCM), and accuracy scoring.
//!
//! It is `no_std` and only needs an allocator. File IO, experiment sweeps and
//! the command line live in the `safefcm` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod matrix;
pub mod safe;
pub mod simplex;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{Centers, Matrix, PartitionMatrix};
