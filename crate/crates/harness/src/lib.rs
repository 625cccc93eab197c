//! Benchmark harness for safe semi-supervised fuzzy c-means.

pub mod algorithm;
pub mod catalog;
pub mod config;
pub mod csv_io;
pub mod oracle;
pub mod reference;
pub mod report;
pub mod sweep;
