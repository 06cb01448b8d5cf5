use nalgebra::{DMatrix, SymmetricEigen};

use super::Matrix;
use crate::error::{Error, Result};

/// Singular values sorted non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.largest() == 0.0
    }

    /// `σ_i / σ_1`, or `None` when the spectrum is zero.
    pub fn ratio(&self, i: usize) -> Option<f64> {
        let top = self.largest();
        (top > 0.0).then(|| self.values.get(i).copied().unwrap_or(0.0) / top)
    }

    pub fn stable_rank(&self) -> Result<f64> {
        let top = self.largest();
        if top == 0.0 {
            return Err(Error::UndefinedStableRank);
        }
        let total: f64 = self.values.iter().map(|s| s * s).sum();
        Ok((total / (top * top)).clamp(1.0, self.values.len() as f64))
    }
}

/// Eigenvalues of a symmetric PSD matrix, clamped at zero and sorted descending.
fn psd_eigenvalues(gram: DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0))
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// Gram matrix of the smaller side: `AᵀA` for tall inputs, `AAᵀ` otherwise.
fn small_gram(a: &Matrix) -> DMatrix<f64> {
    let m = a.as_dmatrix();
    if a.rows() >= a.cols() {
        m.tr_mul(m)
    } else {
        m * m.transpose()
    }
}

/// Singular values via the eigendecomposition of the smaller Gram matrix.
pub fn singular_values(a: &Matrix) -> SingularSpectrum {
    let values = psd_eigenvalues(small_gram(a))
        .into_iter()
        .map(f64::sqrt)
        .collect();
    SingularSpectrum { values }
}

/// `‖A‖_F² / ‖A‖₂²`.
///
/// The numerator is the trace of the Gram matrix rather than the sum of
/// clamped eigenvalues, which keeps exactly-representable cases exact.
pub fn stable_rank(a: &Matrix) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::UndefinedStableRank);
    }
    let gram = small_gram(a);
    let trace = gram.trace();
    let top = psd_eigenvalues(gram)[0];
    if top <= 0.0 {
        return Err(Error::UndefinedStableRank);
    }
    let bound = a.rows().min(a.cols()) as f64;
    Ok((trace / top).clamp(1.0, bound))
}

/// Spectral norm `σ_1`.
pub fn spectral_norm(a: &Matrix) -> f64 {
    psd_eigenvalues(small_gram(a))[0].sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Power iteration on AᵀA with deflation; independent of the Gram-eigen route.
    fn power_iteration_oracle(a: &DMatrix<f64>) -> Vec<f64> {
        let mut gram = a.tr_mul(a);
        let n = gram.ncols();
        let mut out = Vec::new();
        for i in 0..n {
            let mut v = DMatrix::from_fn(n, 1, |r, _| 1.0 + (r + i) as f64 * 0.37);
            let mut lambda = 0.0;
            for _ in 0..5000 {
                let w = &gram * &v;
                let norm = w.norm();
                if norm == 0.0 {
                    lambda = 0.0;
                    break;
                }
                let next = w / norm;
                let new_lambda = (next.transpose() * &gram * &next)[(0, 0)];
                v = next;
                if (new_lambda - lambda).abs() <= 1e-15 * new_lambda.abs() {
                    lambda = new_lambda;
                    break;
                }
                lambda = new_lambda;
            }
            out.push(lambda.max(0.0).sqrt());
            gram -= lambda * &v * v.transpose();
        }
        out
    }

    #[test]
    fn diagonal_and_zero() {
        let d = Matrix::from_diagonal(&[3.0, 4.0]).unwrap();
        assert_eq!(singular_values(&d).values(), &[4.0, 3.0]);
        let z = Matrix::from_row_slice(2, 2, &[0.0; 4]).unwrap();
        assert_eq!(singular_values(&z).values(), &[0.0, 0.0]);
    }

    #[test]
    fn matches_power_iteration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let entries: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = Matrix::from_row_slice(6, 3, &entries).unwrap();
        let got = singular_values(&a);
        let oracle = power_iteration_oracle(a.as_dmatrix());
        assert_eq!(got.len(), 3);
        for (g, o) in got.values().iter().zip(&oracle) {
            assert!((g - o).abs() <= 1e-8 * o, "{g} vs {o}");
        }
    }

    #[test]
    fn wide_matrix_uses_row_gram() {
        let a = Matrix::from_row_slice(2, 4, &[1., 0., 0., 0., 0., 2., 0., 0.]).unwrap();
        let s = singular_values(&a);
        assert_eq!(s.len(), 2);
        assert!((s.values()[0] - 2.0).abs() < 1e-15);
        assert!((s.values()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stable_rank_examples() {
        assert_eq!(stable_rank(&Matrix::identity(5)).unwrap(), 5.0);
        let d = Matrix::from_diagonal(&[2.0, 1.0]).unwrap();
        assert!((stable_rank(&d).unwrap() - 1.25).abs() < 1e-15);
        let outer = Matrix::from_row_slice(3, 2, &[1., 2., 2., 4., -1., -2.]).unwrap();
        assert!((stable_rank(&outer).unwrap() - 1.0).abs() < 1e-12);
        let z = Matrix::from_row_slice(3, 2, &[0.0; 6]).unwrap();
        assert!(matches!(stable_rank(&z), Err(Error::UndefinedStableRank)));
    }

    #[test]
    fn spectrum_and_direct_stable_rank_agree() {
        let a = Matrix::from_row_slice(3, 3, &[1., 2., 0., 0., 1., 3., 1., 0., 1.]).unwrap();
        let via_spectrum = singular_values(&a).stable_rank().unwrap();
        assert!((via_spectrum - stable_rank(&a).unwrap()).abs() < 1e-12);
    }
}
