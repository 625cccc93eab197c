//! Labeled-to-unlabeled distances, KNN density probes and the weighted
//! neighbor graph that couples each labeled point to nearby unlabeled points.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, Matrix};

/// Euclidean distance between every row of `a` and every row of `b`.
pub fn pairwise_distances(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!("dimension {} vs {}", a.cols(), b.cols())));
    }
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let ai = a.row(i);
        for (j, d) in out.row_mut(i).iter_mut().enumerate() {
            *d = libm::sqrt(squared_euclidean(ai, b.row(j)));
        }
    }
    Ok(out)
}

/// Distances from each labeled point (rows) to each unlabeled point (columns),
/// plus the graph bandwidth: the mean of all those distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceIndex {
    labeled_to_unlabeled: Matrix,
    sigma: f64,
}

impl DistanceIndex {
    /// Splits `x` after row `labeled` and measures labeled-to-unlabeled distances.
    pub fn new(x: &Matrix, labeled: usize) -> Result<Self> {
        if labeled == 0 || labeled >= x.rows() {
            return Err(Error::InvalidParameter(format!(
                "labeled count {labeled} must be in 1..{}",
                x.rows()
            )));
        }
        let lab = x.select_rows(&(0..labeled).collect::<Vec<_>>());
        let unl = x.select_rows(&(labeled..x.rows()).collect::<Vec<_>>());
        Self::from_distances(pairwise_distances(&lab, &unl)?)
    }

    pub fn from_distances(labeled_to_unlabeled: Matrix) -> Result<Self> {
        let entries = labeled_to_unlabeled.as_slice();
        if entries.is_empty() {
            return Err(Error::Shape("empty distance matrix".into()));
        }
        if entries.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidData("distances must be finite and non-negative".into()));
        }
        let sigma = entries.iter().sum::<f64>() / entries.len() as f64;
        Ok(Self { labeled_to_unlabeled, sigma })
    }

    pub fn distances(&self) -> &Matrix {
        &self.labeled_to_unlabeled
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled_to_unlabeled.rows()
    }

    pub fn unlabeled_count(&self) -> usize {
        self.labeled_to_unlabeled.cols()
    }

    /// The `k` unlabeled points nearest to labeled point `labeled_index`, by
    /// ascending distance with ties going to the smaller unlabeled index.
    /// Indices are relative to the unlabeled block.
    pub fn knn_unlabeled(&self, k: usize, labeled_index: usize) -> Result<Vec<usize>> {
        let u = self.unlabeled_count();
        if k == 0 || k > u {
            return Err(Error::InvalidParameter(format!("k = {k} outside 1..={u}")));
        }
        if labeled_index >= self.labeled_count() {
            return Err(Error::InvalidParameter(format!("labeled index {labeled_index} out of range")));
        }
        let row = self.labeled_to_unlabeled.row(labeled_index);
        let cmp = |a: &usize, b: &usize| row[*a].partial_cmp(&row[*b]).unwrap_or(Ordering::Equal).then(a.cmp(b));
        let mut idx: Vec<usize> = (0..u).collect();
        if k < u {
            idx.select_nth_unstable_by(k - 1, cmp);
            idx.truncate(k);
        }
        idx.sort_unstable_by(cmp);
        Ok(idx)
    }

    /// Mean distance to the `k` nearest unlabeled points (the density proxy).
    pub fn avg_knn_distance(&self, k: usize, labeled_index: usize) -> Result<f64> {
        let nn = self.knn_unlabeled(k, labeled_index)?;
        let row = self.labeled_to_unlabeled.row(labeled_index);
        Ok(nn.iter().map(|&r| row[r]).sum::<f64>() / k as f64)
    }
}

/// Per-point neighbor counts, linearly rescaled from the density proxies onto
/// `[un_min, un_max]` and rounded half up. Sparse points get more neighbors.
pub fn dynamic_pun(dbar: &[f64], un_min: usize, un_max: usize) -> Result<Vec<usize>> {
    if un_min > un_max {
        return Err(Error::InvalidParameter(format!("un_min {un_min} exceeds un_max {un_max}")));
    }
    if dbar.is_empty() {
        return Err(Error::InvalidParameter("no labeled points".into()));
    }
    let lo = dbar.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dbar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (un_max - un_min) as f64;
    Ok(dbar
        .iter()
        .map(|&d| {
            if hi <= lo {
                return un_min;
            }
            let raw = un_min as f64 + span * (d - lo) / (hi - lo);
            (libm::floor(raw + 0.5) as usize).clamp(un_min, un_max)
        })
        .collect())
}

/// Sparse labeled-to-unlabeled graph with Gaussian weights `exp(-d²/σ²)`.
///
/// Unlabeled indices are relative to the unlabeled block.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    counts: Vec<usize>,
    /// For each unlabeled point: (labeled index, weight) of the edges reaching it.
    incoming: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn labeled_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn unlabeled_count(&self) -> usize {
        self.incoming.len()
    }

    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    /// Neighbor count of each labeled point.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn incoming(&self, r: usize) -> &[(usize, f64)] {
        &self.incoming[r]
    }

    /// `(unlabeled index, weight)` pairs of labeled point `k`.
    pub fn edges(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.neighbors[k].iter().copied().zip(self.weights[k].iter().copied())
    }

    pub fn weight_sum(&self, k: usize) -> f64 {
        self.weights[k].iter().sum()
    }
}

/// Connects each labeled point `k` to its `counts[k]` nearest unlabeled points.
/// Counts larger than the unlabeled block are capped at its size.
pub fn graph_weights(dist: &DistanceIndex, counts: &[usize]) -> Result<NeighborGraph> {
    if counts.len() != dist.labeled_count() {
        return Err(Error::Shape(format!(
            "{} neighbor counts for {} labeled points",
            counts.len(),
            dist.labeled_count()
        )));
    }
    let sigma = dist.sigma();
    if !(sigma > 0.0) {
        return Err(Error::ZeroBandwidth);
    }
    let s2 = sigma * sigma;
    let u = dist.unlabeled_count();
    let mut neighbors = Vec::with_capacity(counts.len());
    let mut weights = Vec::with_capacity(counts.len());
    let mut capped = Vec::with_capacity(counts.len());
    let mut incoming = alloc::vec![Vec::new(); u];
    for (k, &p) in counts.iter().enumerate() {
        let p = p.clamp(1, u);
        let nn = dist.knn_unlabeled(p, k)?;
        let row = dist.distances().row(k);
        let w: Vec<f64> = nn.iter().map(|&r| libm::exp(-row[r] * row[r] / s2)).collect();
        for (&r, &wr) in nn.iter().zip(&w) {
            incoming[r].push((k, wr));
        }
        neighbors.push(nn);
        weights.push(w);
        capped.push(p);
    }
    Ok(NeighborGraph { neighbors, weights, counts: capped, incoming })
}

/// Density-adaptive graph: probe each labeled point's `density_k` nearest unlabeled
/// neighbors, rescale the mean distances to counts in `[un_min, un_max]`, then
/// connect with those counts.
pub fn dynamic_graph(
    dist: &DistanceIndex,
    density_k: usize,
    un_min: usize,
    un_max: usize,
) -> Result<NeighborGraph> {
    let k = density_k.min(dist.unlabeled_count());
    let dbar = (0..dist.labeled_count())
        .map(|i| dist.avg_knn_distance(k, i))
        .collect::<Result<Vec<_>>>()?;
    let counts = dynamic_pun(&dbar, un_min, un_max)?;
    graph_weights(dist, &counts)
}
