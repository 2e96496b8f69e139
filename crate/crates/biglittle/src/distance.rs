//! Distance computations for the distance-triggered cascade: the Minkowski
//! family and Mahalanobis distance against a training-set covariance.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DISTANCE_SCHEMA: &str = "biglittle-distance/1";

/// Shrinkage weights tried in order when the covariance is singular.
const SHRINKAGE_LADDER: [f64; 3] = [0.1, 0.5, 1.0];

/// Minkowski distance `(sum |x_i - y_i|^p)^(1/p)`.
///
/// `p = 1` is Manhattan, `p = 2` Euclidean. Requires `p >= 1` (smaller
/// exponents break the triangle inequality) and equal lengths.
pub fn minkowski(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Distance(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if !p.is_finite() || p < 1.0 {
        return Err(Error::Distance(format!("p must be >= 1, got {p}")));
    }
    if p == 1.0 {
        return Ok(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum());
    }
    if p == 2.0 {
        return Ok(x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt());
    }
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// A fitted Mahalanobis metric: the cached inverse of a shrunk covariance.
#[derive(Debug, Clone)]
pub struct MahalanobisMetric {
    dim: usize,
    inverse_covariance: DMatrix<f64>,
    /// Shrinkage weight that actually produced an invertible matrix.
    shrinkage: f64,
}

impl MahalanobisMetric {
    /// Identity inverse covariance: the metric degenerates to Euclidean.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            inverse_covariance: DMatrix::identity(dim, dim),
            shrinkage: 0.0,
        }
    }

    /// Wrap an explicit inverse covariance. It must be symmetric within 1e-9
    /// and positive-definite.
    pub fn from_inverse_covariance(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::Distance(format!(
                "inverse covariance must be square, got {rows}x{cols}"
            )));
        }
        let tol = 1e-9 * (1.0 + matrix.amax());
        for i in 0..rows {
            for j in (i + 1)..cols {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > tol {
                    return Err(Error::Distance(format!(
                        "inverse covariance asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if matrix.clone().cholesky().is_none() {
            return Err(Error::Distance(
                "inverse covariance is not positive-definite".into(),
            ));
        }
        Ok(Self {
            dim: rows,
            inverse_covariance: matrix,
            shrinkage: f64::NAN,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn inverse_covariance(&self) -> &DMatrix<f64> {
        &self.inverse_covariance
    }
}

/// Fit a Mahalanobis metric to training vectors.
///
/// The sample covariance is shrunk toward its own diagonal,
/// `S' = (1 - w) S + w diag(S)`, starting at `shrinkage` (default 0.1 via
/// [`fit_mahalanobis`]). If inversion fails the weight escalates through
/// 0.5 and 1.0; if even the pure diagonal is singular the fit is refused.
/// The inverse is computed once and cached.
pub fn fit_mahalanobis_with(train: &[Vec<f64>], shrinkage: f64) -> Result<MahalanobisMetric> {
    let n = train.len();
    if n < 2 {
        return Err(Error::Distance(format!(
            "need at least 2 training vectors, got {n}"
        )));
    }
    let dim = train[0].len();
    for (i, v) in train.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::Distance(format!(
                "training vector {i} has length {}, expected {dim}",
                v.len()
            )));
        }
    }

    let mut mean = vec![0.0; dim];
    for v in train {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for v in train {
        for (c, (&x, &m)) in centered.iter_mut().zip(v.iter().zip(&mean)) {
            *c = x - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            for j in i..dim {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let mut ladder: Vec<f64> = SHRINKAGE_LADDER
        .iter()
        .copied()
        .filter(|&w| w >= shrinkage)
        .collect();
    if ladder.first() != Some(&shrinkage) {
        ladder.insert(0, shrinkage);
    }
    for &w in &ladder {
        let mut shrunk = cov.clone() * (1.0 - w);
        for i in 0..dim {
            shrunk[(i, i)] += w * cov[(i, i)];
        }
        if let Some(chol) = shrunk.cholesky() {
            return Ok(MahalanobisMetric {
                dim,
                inverse_covariance: chol.inverse(),
                shrinkage: w,
            });
        }
    }
    Err(Error::Distance(
        "covariance singular even at full diagonal shrinkage".into(),
    ))
}

/// [`fit_mahalanobis_with`] at the default shrinkage weight 0.1.
pub fn fit_mahalanobis(train: &[Vec<f64>]) -> Result<MahalanobisMetric> {
    fit_mahalanobis_with(train, SHRINKAGE_LADDER[0])
}

/// Mahalanobis distance `sqrt((x - y)^T S'^-1 (x - y))` between two vectors
/// under a fitted metric.
pub fn mahalanobis(x: &[f64], y: &[f64], metric: &MahalanobisMetric) -> Result<f64> {
    if x.len() != metric.dim || y.len() != metric.dim {
        return Err(Error::Distance(format!(
            "length mismatch: metric dim {} vs vectors {} and {}",
            metric.dim,
            x.len(),
            y.len()
        )));
    }
    let diff = DVector::from_iterator(x.len(), x.iter().zip(y).map(|(a, b)| a - b));
    let q = diff.dot(&(&metric.inverse_covariance * &diff));
    Ok(q.max(0.0).sqrt())
}

/// A chosen distance measure for the cascade trigger.
#[derive(Debug, Clone)]
pub enum DistanceMetric {
    Minkowski { p: f64 },
    Mahalanobis(MahalanobisMetric),
}

impl DistanceMetric {
    pub fn manhattan() -> Self {
        DistanceMetric::Minkowski { p: 1.0 }
    }

    pub fn euclidean() -> Self {
        DistanceMetric::Minkowski { p: 2.0 }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            DistanceMetric::Minkowski { p } => minkowski(x, y, *p),
            DistanceMetric::Mahalanobis(m) => mahalanobis(x, y, m),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DistanceMetric::Minkowski { p } if *p == 1.0 => "manhattan".into(),
            DistanceMetric::Minkowski { p } if *p == 2.0 => "euclidean".into(),
            DistanceMetric::Minkowski { p } => format!("minkowski(p={p})"),
            DistanceMetric::Mahalanobis(_) => "mahalanobis".into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MahalanobisDoc {
    schema: String,
    dim: usize,
    shrinkage: f64,
    /// Row-major inverse covariance.
    inverse_covariance: Vec<f64>,
}

/// Serialize a fitted metric to its JSON container.
pub fn mahalanobis_to_json(metric: &MahalanobisMetric) -> Result<String> {
    let doc = MahalanobisDoc {
        schema: DISTANCE_SCHEMA.to_string(),
        dim: metric.dim,
        shrinkage: metric.shrinkage,
        inverse_covariance: metric
            .inverse_covariance
            .row_iter()
            .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
            .collect(),
    };
    Ok(serde_json::to_string(&doc)?)
}

/// Parse a fitted metric back from JSON, revalidating symmetry and
/// positive-definiteness.
pub fn mahalanobis_from_json(text: &str) -> Result<MahalanobisMetric> {
    let doc: MahalanobisDoc = serde_json::from_str(text)?;
    if doc.schema != DISTANCE_SCHEMA {
        return Err(Error::Distance(format!(
            "unsupported schema {:?}, expected {DISTANCE_SCHEMA:?}",
            doc.schema
        )));
    }
    if doc.inverse_covariance.len() != doc.dim * doc.dim {
        return Err(Error::Distance(format!(
            "matrix payload has {} entries, expected {}",
            doc.inverse_covariance.len(),
            doc.dim * doc.dim
        )));
    }
    let matrix = DMatrix::from_row_slice(doc.dim, doc.dim, &doc.inverse_covariance);
    let mut metric = MahalanobisMetric::from_inverse_covariance(matrix)?;
    metric.shrinkage = doc.shrinkage;
    Ok(metric)
}

pub fn save_mahalanobis(metric: &MahalanobisMetric, path: &Path) -> Result<()> {
    fs::write(path, mahalanobis_to_json(metric)?)?;
    Ok(())
}

pub fn load_mahalanobis(path: &Path) -> Result<MahalanobisMetric> {
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    mahalanobis_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_checked_values() {
        assert_eq!(minkowski(&[1.0, 2.0], &[3.0, 5.0], 1.0).unwrap(), 5.0);
        assert_eq!(minkowski(&[0.0, 3.0], &[4.0, 0.0], 2.0).unwrap(), 5.0);
        assert_eq!(minkowski(&[7.0, -2.0], &[7.0, -2.0], 3.5).unwrap(), 0.0);
    }

    #[test]
    fn invalid_arguments_refused() {
        assert!(minkowski(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(minkowski(&[1.0], &[2.0], 0.5).is_err());
        assert!(minkowski(&[1.0], &[2.0], f64::NAN).is_err());
    }

    #[test]
    fn identity_metric_equals_euclidean() {
        let metric = MahalanobisMetric::identity(4);
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = [0.0, 1.0, 2.0, -1.0];
        let d = mahalanobis(&x, &y, &metric).unwrap();
        let e = minkowski(&x, &y, 2.0).unwrap();
        assert!((d - e).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_rescales_axes() {
        // Covariance diag(4): distances halve relative to Euclidean.
        let inv = DMatrix::from_diagonal_element(3, 3, 0.25);
        let metric = MahalanobisMetric::from_inverse_covariance(inv).unwrap();
        let x = [2.0, 0.0, 0.0];
        let y = [0.0, 0.0, 0.0];
        let d = mahalanobis(&x, &y, &metric).unwrap();
        assert!((d - 1.0).abs() < 1e-12); // Euclidean would be 2
    }

    #[test]
    fn fit_matches_bruteforce_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dim = 6;
        let train: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let metric = fit_mahalanobis(&train).unwrap();
        assert_eq!(metric.shrinkage(), 0.1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let d = mahalanobis(&x, &y, &metric).unwrap();
            // brute-force double loop over the cached inverse
            let inv = metric.inverse_covariance();
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let mut q = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    q += diff[i] * inv[(i, j)] * diff[j];
                }
            }
            let reference = q.max(0.0).sqrt();
            let denom = reference.abs().max(1.0);
            assert!((d - reference).abs() / denom < 1e-9);
        }
    }

    #[test]
    fn degenerate_training_set_is_refused_cleanly() {
        // Two identical vectors: covariance is all zeros, every shrinkage
        // step fails, and the fit returns an error instead of panicking.
        let train = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let err = fit_mahalanobis(&train).unwrap_err();
        assert!(matches!(err, Error::Distance(_)));
    }

    #[test]
    fn shrinkage_escalates_past_singular_covariance() {
        // Two perfectly correlated coordinates make the full covariance
        // singular, but the diagonal is healthy, so escalation succeeds.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let train: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let a = rng.gen_range(-1.0..1.0);
                let b = rng.gen_range(-1.0..1.0);
                vec![a, a, b]
            })
            .collect();
        let metric = fit_mahalanobis_with(&train, 0.0).unwrap();
        assert!(metric.shrinkage() > 0.0);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(MahalanobisMetric::from_inverse_covariance(m).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let train: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let metric = fit_mahalanobis(&train).unwrap();
        let text = mahalanobis_to_json(&metric).unwrap();
        let back = mahalanobis_from_json(&text).unwrap();
        let x = [0.3, -1.0, 0.7, 2.0];
        let y = [1.1, 0.0, -0.4, 0.2];
        let a = mahalanobis(&x, &y, &metric).unwrap();
        let b = mahalanobis(&x, &y, &back).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn metric_axioms(
            x in proptest::collection::vec(-50.0f64..50.0, 6),
            y in proptest::collection::vec(-50.0f64..50.0, 6),
            p in 1.0f64..4.0,
        ) {
            let d_xy = minkowski(&x, &y, p).unwrap();
            let d_yx = minkowski(&y, &x, p).unwrap();
            prop_assert!(d_xy >= 0.0);
            prop_assert!((d_xy - d_yx).abs() < 1e-9);
            prop_assert!(minkowski(&x, &x, p).unwrap() == 0.0);
        }

        #[test]
        fn triangle_inequality(
            x in proptest::collection::vec(-50.0f64..50.0, 5),
            y in proptest::collection::vec(-50.0f64..50.0, 5),
            z in proptest::collection::vec(-50.0f64..50.0, 5),
            p in 1.0f64..4.0,
        ) {
            let xz = minkowski(&x, &z, p).unwrap();
            let xy = minkowski(&x, &y, p).unwrap();
            let yz = minkowski(&y, &z, p).unwrap();
            prop_assert!(xz <= xy + yz + 1e-9);
        }
    }
}
