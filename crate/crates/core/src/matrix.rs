//! Dense row-major storage and the two matrix roles used by every fit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on column sums of a [`PartitionMatrix`].
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} columns, expected {cols}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: indices.len(), cols: self.cols, data }
    }
}

#[inline]
pub(crate) fn sq(x: f64) -> f64 {
    x * x
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fuzzy partition `U` with `clusters` rows and `points` columns.
///
/// Stored point-major so that a point's memberships form a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMatrix {
    clusters: usize,
    points: usize,
    data: Vec<f64>,
}

impl PartitionMatrix {
    /// All-zero matrix. Callers must fill every column before using it as a partition.
    pub fn zeros(clusters: usize, points: usize) -> Self {
        Self { clusters, points, data: vec![0.0; clusters * points] }
    }

    pub fn uniform(clusters: usize, points: usize) -> Self {
        Self { clusters, points, data: vec![1.0 / clusters as f64; clusters * points] }
    }

    /// Builds from point-major columns and validates the simplex constraints.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let clusters = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(columns.len() * clusters);
        for c in columns {
            let c = c.as_ref();
            if c.len() != clusters {
                return Err(Error::Shape(format!("column of length {}, expected {clusters}", c.len())));
            }
            data.extend_from_slice(c);
        }
        let u = Self { clusters, points: columns.len(), data };
        if let Some(k) = u.first_invalid_column(STOCHASTIC_TOLERANCE) {
            return Err(Error::InvalidParameter(format!("column {k} is not on the probability simplex")));
        }
        Ok(u)
    }

    #[inline]
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn get(&self, cluster: usize, point: usize) -> f64 {
        self.data[point * self.clusters + cluster]
    }

    #[inline]
    pub fn column(&self, point: usize) -> &[f64] {
        &self.data[point * self.clusters..(point + 1) * self.clusters]
    }

    #[inline]
    pub fn column_mut(&mut self, point: usize) -> &mut [f64] {
        &mut self.data[point * self.clusters..(point + 1) * self.clusters]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.clusters.max(1)).take(self.points)
    }

    /// Index of the first column that leaves the simplex by more than `tol`.
    pub fn first_invalid_column(&self, tol: f64) -> Option<usize> {
        self.columns().position(|col| {
            let sum: f64 = col.iter().sum();
            (sum - 1.0).abs() > tol || col.iter().any(|&u| !(-tol..=1.0 + tol).contains(&u))
        })
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.first_invalid_column(tol).is_none()
    }
}

/// Cluster prototypes `V`, one row per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Centers(pub Matrix);

impl Centers {
    pub fn new(v: Matrix) -> Result<Self> {
        if v.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite cluster center".into()));
        }
        Ok(Self(v))
    }

    #[inline]
    pub fn clusters(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn center(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Squared distances from every point to every center, point-major (`n x c`).
pub fn squared_distances(x: &Matrix, v: &Centers) -> Matrix {
    let c = v.clusters();
    let mut out = Matrix::zeros(x.rows(), c);
    for k in 0..x.rows() {
        let xk = x.row(k);
        let row = out.row_mut(k);
        for (i, d) in row.iter_mut().enumerate() {
            *d = squared_euclidean(xk, v.center(i));
        }
    }
    out
}

pub(crate) fn check_shapes(x: &Matrix, u: &PartitionMatrix, v: &Centers) -> Result<()> {
    if u.points() != x.rows() || u.clusters() != v.clusters() || v.0.cols() != x.cols() {
        return Err(Error::Shape(format!(
            "U is {}x{}, V is {}x{}, X is {}x{}",
            u.clusters(),
            u.points(),
            v.clusters(),
            v.0.cols(),
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_rejects_ragged() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.select_rows(&[1]).row(0), &[3.0, 4.0]);
    }

    #[test]
    fn partition_validation() {
        assert!(PartitionMatrix::from_columns(&[[0.3, 0.7], [1.0, 0.0]]).is_ok());
        assert!(PartitionMatrix::from_columns(&[[0.3, 0.6]]).is_err());
        assert!(PartitionMatrix::from_columns(&[[1.2, -0.2]]).is_err());
        let u = PartitionMatrix::uniform(4, 3);
        assert!(u.is_column_stochastic(1e-12));
        assert_eq!(u.get(3, 2), 0.25);
    }
}
