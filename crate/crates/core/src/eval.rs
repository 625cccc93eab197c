//! Clustering accuracy and run aggregation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::PartitionMatrix;

/// Largest cluster count accepted by exhaustive permutation matching.
pub const MAX_PERMUTATION_CLUSTERS: usize = 8;

/// Hard labels (one-based) by argmax over each column; ties go to the smaller cluster.
pub fn predict_labels(u: &PartitionMatrix) -> Vec<usize> {
    u.columns()
        .map(|col| {
            let mut best = 0;
            for (i, &v) in col.iter().enumerate() {
                if v > col[best] {
                    best = i;
                }
            }
            best + 1
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matching {
    /// Cluster `i` is class `i` (semi-supervised fits seeded from class means).
    Identity,
    /// Best of all cluster-to-class bijections (unsupervised fits).
    BestPermutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunScore {
    pub accuracy: f64,
    /// Correctly assigned points per true class.
    pub per_class_hits: Vec<usize>,
    /// `mapping[cluster - 1]` is the class a cluster was scored as.
    pub mapping: Vec<usize>,
}

/// Fraction of points whose predicted label matches the ground truth.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize], matching: Matching) -> Result<RunScore> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Shape(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    let c = pred.iter().chain(truth).copied().max().unwrap_or(0);
    if pred.iter().chain(truth).any(|&y| y == 0) {
        return Err(Error::InvalidData("labels are one-based".into()));
    }
    // confusion[cluster][class]
    let mut confusion = vec![vec![0usize; c]; c];
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[p - 1][t - 1] += 1;
    }
    let mapping: Vec<usize> = match matching {
        Matching::Identity => (1..=c).collect(),
        Matching::BestPermutation => {
            if c > MAX_PERMUTATION_CLUSTERS {
                return Err(Error::InvalidParameter(format!(
                    "{c} clusters exceed the permutation-matching limit of {MAX_PERMUTATION_CLUSTERS}"
                )));
            }
            best_permutation(&confusion)
        }
    };
    let mut per_class_hits = vec![0; c];
    for (cluster, &class) in mapping.iter().enumerate() {
        per_class_hits[class - 1] = confusion[cluster][class - 1];
    }
    let hits: usize = per_class_hits.iter().sum();
    Ok(RunScore { accuracy: hits as f64 / pred.len() as f64, per_class_hits, mapping })
}

/// Exhaustive search (Heap's algorithm) for the bijection with the most hits.
fn best_permutation(confusion: &[Vec<usize>]) -> Vec<usize> {
    let c = confusion.len();
    let score = |perm: &[usize]| -> usize { perm.iter().enumerate().map(|(i, &j)| confusion[i][j]).sum() };
    let mut perm: Vec<usize> = (0..c).collect();
    let mut best = perm.clone();
    let mut best_score = score(&perm);
    let mut stack = vec![0usize; c];
    let mut i = 1;
    while i < c {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            let s = score(&perm);
            if s > best_score {
                best_score = s;
                best.clone_from(&perm);
            }
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    best.into_iter().map(|j| j + 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateScore {
    pub mean: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
    pub runs: usize,
}

pub fn aggregate(values: &[f64]) -> Result<AggregateScore> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot aggregate zero runs".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    Ok(AggregateScore { mean, std, runs: values.len() })
}

pub fn aggregate_scores(scores: &[RunScore]) -> Result<AggregateScore> {
    aggregate(&scores.iter().map(|s| s.accuracy).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_with_ties() {
        let u = PartitionMatrix::from_columns(&[[0.7, 0.3], [0.5, 0.5], [0.2, 0.8]]).unwrap();
        assert_eq!(predict_labels(&u), vec![1, 1, 2]);
    }

    #[test]
    fn accuracy_modes() {
        let truth = [1, 1, 2, 2, 1, 2];
        assert_eq!(clustering_accuracy(&truth, &truth, Matching::Identity).unwrap().accuracy, 1.0);
        let flipped = [2, 2, 1, 1, 2, 1];
        assert_eq!(clustering_accuracy(&flipped, &truth, Matching::Identity).unwrap().accuracy, 0.0);
        let s = clustering_accuracy(&flipped, &truth, Matching::BestPermutation).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.mapping, vec![2, 1]);
        let four = [1, 1, 2, 2, 2, 1];
        let s = clustering_accuracy(&four, &truth, Matching::Identity).unwrap();
        assert!((s.accuracy - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.per_class_hits, vec![2, 2]);
    }

    #[test]
    fn permutation_limit() {
        let labels: Vec<usize> = (1..=9).collect();
        assert!(clustering_accuracy(&labels, &labels, Matching::BestPermutation).is_err());
        assert!(clustering_accuracy(&labels, &labels, Matching::Identity).is_ok());
    }

    #[test]
    fn three_cluster_permutation() {
        let truth = [1, 2, 3, 3, 2, 1];
        let pred = [3, 1, 2, 2, 1, 3];
        assert_eq!(clustering_accuracy(&pred, &truth, Matching::BestPermutation).unwrap().accuracy, 1.0);
    }

    #[test]
    fn aggregates() {
        let a = aggregate(&[0.8; 5]).unwrap();
        assert_eq!((a.mean, a.std, a.runs), (0.8, 0.0, 5));
        assert!((aggregate(&[0.6, 0.8]).unwrap().mean - 0.7).abs() < 1e-15);
        assert!(aggregate(&[]).is_err());
    }
}
