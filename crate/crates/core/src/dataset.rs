//! Labeled datasets and the semi-supervised experimental protocol:
//! random labeled/unlabeled splits, label corruption and z-scoring.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{sq, Centers, Matrix};

/// Maximum number of redraws when a split misses a class.
pub const MAX_SPLIT_ATTEMPTS: usize = 1000;

/// Feature matrix with ground-truth classes in `1..=num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Matrix,
    ground_truth: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        ground_truth: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if features.rows() != ground_truth.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                ground_truth.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidData(format!("need at least two classes, got {num_classes}")));
        }
        if let Some(pos) = features.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature at row {}",
                pos / features.cols().max(1)
            )));
        }
        let mut seen = vec![false; num_classes];
        for (k, &y) in ground_truth.iter().enumerate() {
            if y == 0 || y > num_classes {
                return Err(Error::InvalidData(format!("label {y} of row {k} outside 1..={num_classes}")));
            }
            seen[y - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidData(format!("class {} never occurs", missing + 1)));
        }
        Ok(Self { name: name.into(), features, ground_truth, num_classes })
    }

    /// Re-indexes arbitrary ordered labels to `1..=c` in sorted order.
    pub fn from_raw_labels<L: Ord + Clone>(
        name: impl Into<String>,
        features: Matrix,
        raw: &[L],
    ) -> Result<Self> {
        let classes: BTreeMap<L, usize> = raw.iter().cloned().map(|l| (l, 0)).collect();
        let ids: BTreeMap<L, usize> = classes.into_keys().enumerate().map(|(i, l)| (l, i + 1)).collect();
        let truth = raw.iter().map(|l| ids[l]).collect();
        Self::new(name, features, truth, ids.len())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn ground_truth(&self) -> &[usize] {
        &self.ground_truth
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.ground_truth {
            counts[y - 1] += 1;
        }
        counts
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn reordered(&self, order: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.features.select_rows(order),
            ground_truth: order.iter().map(|&k| self.ground_truth[k]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// Bupa target rule on the raw sixth column (drinks): class 1 when `x6 < 3`, class 2 otherwise.
pub fn bupa_target(raw_row: &[f64]) -> Result<usize> {
    let x6 = *raw_row
        .get(5)
        .ok_or_else(|| Error::InvalidData(format!("bupa row has {} columns, need 6", raw_row.len())))?;
    if !x6.is_finite() {
        return Err(Error::InvalidData("non-finite drinks value".into()));
    }
    Ok(if x6 < 3.0 { 1 } else { 2 })
}

/// Z-scores every feature (population standard deviation); constant features become 0.
pub fn standardize(ds: &Dataset) -> Dataset {
    let n = ds.len();
    let dim = ds.dim();
    let x = ds.features();
    let mut out = x.clone();
    for j in 0..dim {
        let mean = (0..n).map(|k| x.get(k, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|k| sq(x.get(k, j) - mean)).sum::<f64>() / n as f64;
        let sd = libm::sqrt(var);
        for k in 0..n {
            let z = if sd > 1e-12 * (1.0 + mean.abs()) { (x.get(k, j) - mean) / sd } else { 0.0 };
            out.set(k, j, z);
        }
    }
    Dataset { features: out, ..ds.clone() }
}

/// A dataset reordered so that the first `labeled` rows form the labeled subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiSupervisedView {
    data: Dataset,
    labeled: usize,
    original_index: Vec<usize>,
    provided_labels: Vec<usize>,
    mislabel_mask: Vec<bool>,
}

impl SemiSupervisedView {
    /// View whose first `labeled` rows of `data` are labeled with their ground truth.
    pub fn with_first_labeled(data: Dataset, labeled: usize) -> Result<Self> {
        if labeled == 0 || labeled >= data.len() {
            return Err(Error::InvalidParameter(format!(
                "labeled count {labeled} must be in 1..{}",
                data.len()
            )));
        }
        let provided_labels = data.ground_truth()[..labeled].to_vec();
        let view = Self {
            original_index: (0..data.len()).collect(),
            mislabel_mask: vec![false; labeled],
            provided_labels,
            labeled,
            data,
        };
        Ok(view)
    }

    /// Replaces the provided labels (e.g. hand-built corruption in tests).
    pub fn with_provided_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.labeled {
            return Err(Error::Shape(format!("{} labels for {} labeled rows", labels.len(), self.labeled)));
        }
        let c = self.data.num_classes();
        if let Some(bad) = labels.iter().find(|&&y| y == 0 || y > c) {
            return Err(Error::InvalidData(format!("provided label {bad} outside 1..={c}")));
        }
        self.mislabel_mask = labels.iter().zip(self.data.ground_truth()).map(|(a, b)| a != b).collect();
        self.provided_labels = labels;
        Ok(self)
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled
    }

    pub fn unlabeled_count(&self) -> usize {
        self.data.len() - self.labeled
    }

    /// Indices into the original dataset of the labeled rows.
    pub fn labeled_indices(&self) -> &[usize] {
        &self.original_index[..self.labeled]
    }

    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    pub fn provided_labels(&self) -> &[usize] {
        &self.provided_labels
    }

    pub fn mislabel_mask(&self) -> &[bool] {
        &self.mislabel_mask
    }

    pub fn mislabeled_count(&self) -> usize {
        self.mislabel_mask.iter().filter(|&&m| m).count()
    }

    /// Zero-based cluster index of each labeled row's provided label.
    pub fn provided_clusters(&self) -> Vec<usize> {
        self.provided_labels.iter().map(|y| y - 1).collect()
    }

    /// Supervision per point: `Some(cluster)` for labeled rows, `None` otherwise.
    pub fn supervision(&self) -> Vec<Option<usize>> {
        let mut out: Vec<Option<usize>> = self.provided_labels.iter().map(|y| Some(y - 1)).collect();
        out.resize(self.data.len(), None);
        out
    }

    /// Mean of the labeled rows of each provided class.
    pub fn labeled_class_means(&self) -> Result<Centers> {
        let c = self.data.num_classes();
        let dim = self.data.dim();
        let mut sums = Matrix::zeros(c, dim);
        let mut counts = vec![0usize; c];
        for (k, &y) in self.provided_labels.iter().enumerate() {
            counts[y - 1] += 1;
            let row = sums.row_mut(y - 1);
            for (s, x) in row.iter_mut().zip(self.data.features().row(k)) {
                *s += x;
            }
        }
        for (i, &count) in counts.iter().enumerate() {
            if count == 0 {
                return Err(Error::UnlabeledClass { class: i + 1 });
            }
            for s in sums.row_mut(i) {
                *s /= count as f64;
            }
        }
        Centers::new(sums)
    }
}

fn round_half_up(x: f64) -> usize {
    libm::floor(x + 0.5) as usize
}

/// Draws `round(fraction * n)` labeled rows uniformly without replacement,
/// redrawing until every class has a labeled row.
pub fn split_labeled(ds: &Dataset, fraction: f64, seed: u64) -> Result<SemiSupervisedView> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("labeled fraction {fraction} not in (0, 1)")));
    }
    let n = ds.len();
    let l = round_half_up(fraction * n as f64);
    let c = ds.num_classes();
    if l < c {
        return Err(Error::InvalidParameter(format!("{l} labeled rows cannot cover {c} classes")));
    }
    if l >= n {
        return Err(Error::InvalidParameter(format!("{l} labeled rows leave no unlabeled data")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        order.shuffle(&mut rng);
        let mut covered = vec![false; c];
        for &k in &order[..l] {
            covered[ds.ground_truth()[k] - 1] = true;
        }
        if covered.iter().all(|&b| b) {
            let (lab, unl) = order.split_at_mut(l);
            lab.sort_unstable();
            unl.sort_unstable();
            let data = ds.reordered(&order);
            let provided_labels = data.ground_truth()[..l].to_vec();
            return Ok(SemiSupervisedView {
                data,
                labeled: l,
                original_index: order,
                provided_labels,
                mislabel_mask: vec![false; l],
            });
        }
    }
    Err(Error::SplitExhausted { attempts: MAX_SPLIT_ATTEMPTS })
}

/// Flips exactly `round(ratio * l)` labeled rows to a uniformly drawn wrong class.
///
/// Corruption always starts from the ground truth. For a fixed seed the flipped
/// sets are nested in `ratio`.
pub fn inject_mislabels(view: &SemiSupervisedView, ratio: f64, seed: u64) -> Result<SemiSupervisedView> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidParameter(format!("mislabel ratio {ratio} not in [0, 1]")));
    }
    let l = view.labeled;
    let c = view.data.num_classes();
    let count = round_half_up(ratio * l as f64).min(l);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..l).collect();
    positions.shuffle(&mut rng);
    // Offsets are drawn for every position so they do not depend on `count`.
    let offsets: Vec<usize> = (0..l).map(|_| rng.random_range(1..c)).collect();

    let truth = &view.data.ground_truth()[..l];
    let mut labels = truth.to_vec();
    let mut mask = vec![false; l];
    for (rank, &k) in positions.iter().enumerate().take(count) {
        let zero_based = truth[k] - 1;
        labels[k] = (zero_based + offsets[rank]) % c + 1;
        mask[k] = true;
    }
    Ok(SemiSupervisedView { provided_labels: labels, mislabel_mask: mask, ..view.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy(n: usize, c: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|k| vec![k as f64, (k * k) as f64]).collect();
        let truth = (0..n).map(|k| k % c + 1).collect();
        Dataset::new("toy", Matrix::from_rows(&rows).unwrap(), truth, c).unwrap()
    }

    #[test]
    fn category_mapping() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let ds = Dataset::from_raw_labels("abc", x, &["a", "b", "a"]).unwrap();
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.ground_truth(), &[1, 2, 1]);
    }

    #[test]
    fn rejects_single_class_and_nan() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(Dataset::from_raw_labels("one", x.clone(), &[3, 3]).is_err());
        let bad = Matrix::from_rows(&[[f64::NAN], [1.0]]).unwrap();
        assert!(Dataset::new("nan", bad, vec![1, 2], 2).is_err());
        assert!(Dataset::new("gap", x, vec![1, 1], 2).is_err());
    }

    #[test]
    fn bupa_rule() {
        let row = |x6| [0.0, 0.0, 0.0, 0.0, 0.0, x6];
        assert_eq!(bupa_target(&row(2.9)).unwrap(), 1);
        assert_eq!(bupa_target(&row(3.0)).unwrap(), 2);
        assert_eq!(bupa_target(&row(10.0)).unwrap(), 2);
        assert!(bupa_target(&row(f64::NAN)).is_err());
        assert!(bupa_target(&[1.0; 5]).is_err());
    }

    #[test]
    fn standardize_symmetric_triple() {
        let x = Matrix::from_rows(&[[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]).unwrap();
        let ds = Dataset::new("s", x, vec![1, 2, 1], 2).unwrap();
        let z = standardize(&ds);
        let col: Vec<f64> = (0..3).map(|k| z.features().get(k, 0)).collect();
        for (a, b) in col.iter().zip([-1.224_744_871, 0.0, 1.224_744_871]) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((0..3).all(|k| z.features().get(k, 1) == 0.0));
        let again = standardize(&z);
        for (a, b) in again.features().as_slice().iter().zip(z.features().as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy(345, 2);
        let v = split_labeled(&ds, 0.2, 7).unwrap();
        assert_eq!(v.labeled_count(), 69);
        assert_eq!(v, split_labeled(&ds, 0.2, 7).unwrap());
        assert_ne!(v.labeled_indices(), split_labeled(&ds, 0.2, 8).unwrap().labeled_indices());
        let mut all = v.original_index().to_vec();
        all.sort_unstable();
        assert_eq!(all, (0..345).collect::<Vec<_>>());
        // labeled rows carry their own ground truth
        for (k, &orig) in v.labeled_indices().iter().enumerate() {
            assert_eq!(v.provided_labels()[k], ds.ground_truth()[orig]);
        }
    }

    #[test]
    fn split_too_small() {
        let ds = toy(10, 3);
        assert!(matches!(split_labeled(&ds, 0.1, 1), Err(Error::InvalidParameter(_))));
        assert!(split_labeled(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn mislabel_counts() {
        let ds = toy(100, 3);
        let v = split_labeled(&ds, 0.2, 3).unwrap();
        let clean = inject_mislabels(&v, 0.0, 5).unwrap();
        assert_eq!(clean.provided_labels(), &ds_truth(&clean)[..]);
        let dirty = inject_mislabels(&v, 0.3, 5).unwrap();
        assert_eq!(dirty.mislabeled_count(), 6);
        for k in 0..20 {
            let wrong = dirty.provided_labels()[k] != dirty.data().ground_truth()[k];
            assert_eq!(wrong, dirty.mislabel_mask()[k]);
        }
        assert_eq!(dirty.data().ground_truth(), v.data().ground_truth());
    }

    fn ds_truth(v: &SemiSupervisedView) -> Vec<usize> {
        v.data().ground_truth()[..v.labeled_count()].to_vec()
    }

    #[test]
    fn class_means_need_every_class() {
        let ds = toy(6, 2);
        let v = SemiSupervisedView::with_first_labeled(ds, 2).unwrap();
        let means = v.labeled_class_means().unwrap();
        assert_eq!(means.center(0), &[0.0, 0.0]);
        assert_eq!(means.center(1), &[1.0, 1.0]);
        let v = v.with_provided_labels(vec![1, 1]).unwrap();
        assert_eq!(v.labeled_class_means(), Err(Error::UnlabeledClass { class: 2 }));
    }
}
