//! Datasets, synthetic partial labels and transductive splits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::Matrix;
use crate::error::DataError;

/// Feature matrix with optional ground truth. Class ids are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    truth: Option<Vec<usize>>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: Matrix, truth: Option<Vec<usize>>, class_count: usize) -> Result<Self, DataError> {
        let (n, d) = features.shape();
        if n < 2 {
            return Err(DataError::Invalid(format!("need at least 2 rows, got {n}")));
        }
        if d == 0 {
            return Err(DataError::Invalid("need at least one feature column".into()));
        }
        if class_count == 0 {
            return Err(DataError::Invalid("class count must be positive".into()));
        }
        if let Some((row, col)) = features.first_non_finite() {
            return Err(DataError::Invalid(format!("non-finite feature at row {row}, column {col}")));
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(DataError::Invalid(format!("{} labels for {n} rows", t.len())));
            }
            if let Some((i, &c)) = t.iter().enumerate().find(|(_, &c)| c >= class_count) {
                return Err(DataError::Invalid(format!("label {c} of row {i} outside 0..{class_count}")));
            }
        }
        Ok(Self { features, truth, class_count })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Z-scores every feature column. Constant columns are left as they are.
    pub fn standardized(mut self) -> Self {
        standardize(&mut self.features);
        self
    }
}

/// Per-column z-score with the population standard deviation.
pub fn standardize(features: &mut Matrix) {
    let (n, d) = features.shape();
    if n == 0 {
        return;
    }
    for j in 0..d {
        let mean = (0..n).map(|i| features[(i, j)]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (features[(i, j)] - mean) * (features[(i, j)] - mean)).sum::<f64>() / n as f64;
        let sd = libm::sqrt(var);
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            continue;
        }
        for i in 0..n {
            features[(i, j)] = (features[(i, j)] - mean) / sd;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SplitWarning {
    /// Fewer labeled rows than classes, so some class has no partial label.
    FewerLabeledThanClasses { labeled: usize, classes: usize },
}

/// A dataset with candidate label sets and a train/test partition.
#[derive(Clone, Debug)]
pub struct PartialLabelProblem {
    dataset: Dataset,
    candidates: Matrix,
    train_mask: Vec<bool>,
    rho: f64,
    seed: u64,
    warnings: Vec<SplitWarning>,
}

impl PartialLabelProblem {
    /// Assembles and validates a problem. Test rows must already carry every
    /// class as a candidate.
    pub fn new(
        dataset: Dataset,
        candidates: Matrix,
        train_mask: Vec<bool>,
        rho: f64,
        seed: u64,
    ) -> Result<Self, DataError> {
        let (n, q) = (dataset.len(), dataset.class_count());
        if candidates.shape() != (n, q) {
            return Err(DataError::Invalid(format!(
                "candidate matrix is {}x{}, expected {n}x{q}",
                candidates.rows(),
                candidates.cols()
            )));
        }
        if train_mask.len() != n {
            return Err(DataError::Invalid(format!("train mask has {} entries for {n} rows", train_mask.len())));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(DataError::Rho(rho));
        }
        for i in 0..n {
            let row = candidates.row(i);
            if row.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(DataError::Invalid(format!("candidate row {i} is not binary")));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(DataError::Invalid(format!("candidate row {i} is empty")));
            }
            if train_mask[i] {
                if let Some(t) = dataset.truth() {
                    if row[t[i]] != 1.0 {
                        return Err(DataError::Invalid(format!("candidate row {i} misses its true label {}", t[i])));
                    }
                }
            } else if row.iter().any(|&v| v != 1.0) {
                return Err(DataError::Invalid(format!("test row {i} must carry every class")));
            }
        }
        let labeled = train_mask.iter().filter(|&&b| b).count();
        let mut warnings = Vec::new();
        if labeled < q {
            warnings.push(SplitWarning::FewerLabeledThanClasses { labeled, classes: q });
        }
        Ok(Self { dataset, candidates, train_mask, rho, seed, warnings })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn candidates(&self) -> &Matrix {
        &self.candidates
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.train_mask.len()).filter(|&i| self.train_mask[i]).collect()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn warnings(&self) -> &[SplitWarning] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.dataset.class_count()
    }
}

/// Candidate matrix with the true label plus `r` false positives per row,
/// drawn uniformly without replacement from the other `q − 1` labels.
///
/// `r` must lie in `1..q`. For `q > 2`, `r = q − 1` is rejected as well:
/// every row would then carry all labels and the supervision is void.
/// With `q = 2` and `r = 1` the rows are all ones.
pub fn synthesize_candidates(truth: &[usize], q: usize, r: usize, seed: u64) -> Result<Matrix, DataError> {
    if r == 0 {
        return Err(DataError::Protocol("r must be at least 1".into()));
    }
    if r >= q {
        return Err(DataError::Protocol(format!("r = {r} needs more than {r} classes, have {q}")));
    }
    if q > 2 && r == q - 1 {
        return Err(DataError::Protocol(format!("r = {r} makes every label a candidate for {q} classes")));
    }
    if let Some((i, &t)) = truth.iter().enumerate().find(|(_, &t)| t >= q) {
        return Err(DataError::Invalid(format!("label {t} of row {i} outside 0..{q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Matrix::zeros(truth.len(), q);
    for (i, &t) in truth.iter().enumerate() {
        y[(i, t)] = 1.0;
        for pick in index::sample(&mut rng, q - 1, r) {
            let label = if pick >= t { pick + 1 } else { pick };
            y[(i, label)] = 1.0;
        }
    }
    Ok(y)
}

/// Candidate matrix from explicit label sets (0-based).
pub fn candidates_from_sets(sets: &[Vec<usize>], q: usize) -> Result<Matrix, DataError> {
    let mut y = Matrix::zeros(sets.len(), q);
    for (i, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(DataError::Invalid(format!("candidate set of row {i} is empty")));
        }
        for &c in set {
            if c >= q {
                return Err(DataError::Invalid(format!("candidate {c} of row {i} outside 0..{q}")));
            }
            y[(i, c)] = 1.0;
        }
    }
    Ok(y)
}

/// Number of labeled rows for proportion `rho`: `⌊ρn + ½⌋`.
pub fn train_count(n: usize, rho: f64) -> usize {
    (libm::floor(rho * n as f64 + 0.5) as usize).min(n)
}

/// Marks `⌊ρn + ½⌋` uniformly chosen rows as labeled and gives every other
/// row the full candidate set.
pub fn split_transductive(
    dataset: Dataset,
    candidates: &Matrix,
    rho: f64,
    seed: u64,
) -> Result<PartialLabelProblem, DataError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(DataError::Rho(rho));
    }
    let n = dataset.len();
    let q = dataset.class_count();
    if candidates.shape() != (n, q) {
        return Err(DataError::Invalid(format!(
            "candidate matrix is {}x{}, expected {n}x{q}",
            candidates.rows(),
            candidates.cols()
        )));
    }
    let m = train_count(n, rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for i in index::sample(&mut rng, n, m) {
        mask[i] = true;
    }
    let mut y = candidates.clone();
    for (i, &train) in mask.iter().enumerate() {
        if !train {
            y.row_mut(i).fill(1.0);
        }
    }
    PartialLabelProblem::new(dataset, y, mask, rho, seed)
}

/// Isotropic unit-variance Gaussian blobs, `per_class` rows each, with
/// neighboring centers `separation` apart. Centers sit on a circle in the
/// first two coordinates (on a line when `dim = 1`). Rows are grouped by
/// class.
pub fn make_blobs(
    per_class: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if classes == 0 || dim == 0 || per_class == 0 {
        return Err(DataError::Invalid("blobs need positive sizes".into()));
    }
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|c| {
            let mut center = vec![0.0; dim];
            if dim == 1 || classes <= 2 {
                center[0] = c as f64 * separation;
            } else {
                let radius = separation / (2.0 * libm::sin(core::f64::consts::PI / classes as f64));
                let angle = 2.0 * core::f64::consts::PI * c as f64 / classes as f64;
                center[0] = radius * libm::cos(angle);
                center[1] = radius * libm::sin(angle);
            }
            center
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_class * classes;
    let mut x = Matrix::zeros(n, dim);
    let mut truth = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        for s in 0..per_class {
            let i = c * per_class + s;
            for (j, &mu) in center.iter().enumerate() {
                x[(i, j)] = mu + standard_normal(&mut rng);
            }
            truth.push(c);
        }
    }
    Dataset::new(x, Some(truth), classes)
}

/// Box–Muller.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}
