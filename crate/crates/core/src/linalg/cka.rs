//! Linear centered kernel alignment.
//!
//! With `Xc`, `Yc` the column-centered data (samples as rows), the score is
//! `‖XcᵀYc‖_F² / (‖XcᵀXc‖_F ‖YcᵀYc‖_F)`. The `1/(k-1)` covariance factors
//! cancel. All three norms are evaluated through the `k × k` sample Gram
//! matrices, using `‖XcᵀYc‖_F² = tr(Kx Ky)`, so cost is linear in the
//! feature count.

use nalgebra::DMatrix;

use super::Matrix;
use crate::error::{Error, Result};

/// CKA between two representations of the same `k` samples, samples as rows.
pub fn linear_cka(x: &Matrix, y: &Matrix) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::Shape(format!(
            "CKA needs matching sample counts, got {} and {}",
            x.rows(),
            y.rows()
        )));
    }
    let kx = centered_gram(&x.as_dmatrix().transpose(), "X")?;
    let ky = centered_gram(&y.as_dmatrix().transpose(), "Y")?;
    Ok(cka_from_grams(&kx, &ky))
}

/// CKA where samples are the columns: `a` is `n × k`, `b` is `m × k`.
///
/// This is the layout of pushed-forward frames, with one column per frame
/// vector, and avoids transposing very tall matrices.
pub fn linear_cka_columns(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "CKA needs matching sample counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let ka = centered_gram(a.as_dmatrix(), "A")?;
    let kb = centered_gram(b.as_dmatrix(), "B")?;
    Ok(cka_from_grams(&ka, &kb))
}

/// Gram matrix of the columns after removing each row's mean across columns.
///
/// Useful when one representation is compared against many others.
pub fn centered_sample_gram(samples_as_columns: &Matrix) -> Result<DMatrix<f64>> {
    centered_gram(samples_as_columns.as_dmatrix(), "input")
}

pub fn cka_from_grams(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> f64 {
    let cross = kx.component_mul(ky).sum();
    cross / (kx.norm() * ky.norm())
}

fn centered_gram(samples_as_columns: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let k = samples_as_columns.ncols();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "CKA needs at least 2 samples, got {k}"
        )));
    }
    let mut centered = samples_as_columns.clone();
    let inv_k = 1.0 / k as f64;
    for mut row in centered.row_iter_mut() {
        let mean = row.sum() * inv_k;
        row.add_scalar_mut(-mean);
    }
    let gram = centered.tr_mul(&centered);
    if gram.norm() == 0.0 {
        return Err(Error::Degenerate(format!(
            "{name} has zero covariance (every feature constant across samples)"
        )));
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct covariance-matrix evaluation, samples as rows.
    fn covariance_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        let k = x.len();
        let center = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
            let p = m[0].len();
            let means: Vec<f64> = (0..p)
                .map(|c| m.iter().map(|r| r[c]).sum::<f64>() / k as f64)
                .collect();
            m.iter()
                .map(|r| r.iter().zip(&means).map(|(v, mu)| v - mu).collect())
                .collect()
        };
        let cov = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
            let (p, q) = (a[0].len(), b[0].len());
            let mut sum = 0.0;
            for i in 0..p {
                for j in 0..q {
                    let c: f64 = (0..k).map(|r| a[r][i] * b[r][j]).sum::<f64>() / (k - 1) as f64;
                    sum += c * c;
                }
            }
            sum
        };
        let (xc, yc) = (center(x), center(y));
        cov(&xc, &yc) / (cov(&xc, &xc).sqrt() * cov(&yc, &yc).sqrt())
    }

    fn mat(rows: &[Vec<f64>]) -> Matrix {
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::from_row_slice(rows.len(), rows[0].len(), &flat).unwrap()
    }

    #[test]
    fn scaled_copy_scores_one() {
        let x = vec![vec![1., 0.], vec![0., 1.], vec![-1., -1.]];
        let y = vec![vec![2., 0.], vec![0., 2.], vec![-2., -2.]];
        assert!((linear_cka(&mat(&x), &mat(&y)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_case_matches_covariance_formula() {
        let x = vec![vec![1., 0.], vec![0., 1.], vec![-1., -1.]];
        let y = vec![vec![1., 1.], vec![1., -1.], vec![-2., 0.]];
        // This Y is X times a scaled orthogonal matrix.
        let expected = covariance_oracle(&x, &y);
        let got = linear_cka(&mat(&x), &mat(&y)).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!((expected - 1.0).abs() < 1e-12, "{expected}");

        let x = vec![vec![1., 0.], vec![0., 1.], vec![-1., -1.], vec![0., 0.]];
        let y = vec![vec![1., 0.], vec![2., 1.], vec![0., 0.], vec![4., 1.]];
        let expected = covariance_oracle(&x, &y);
        let got = linear_cka(&mat(&x), &mat(&y)).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        // Frozen from an offline evaluation of the same covariance formula.
        assert!((expected - 0.199_930_591_703_618_6).abs() < 1e-12, "{expected}");
    }

    #[test]
    fn column_layout_agrees_with_row_layout() {
        let x = vec![vec![1., 0., 3.], vec![0., 1., 2.], vec![-1., -1., 5.], vec![2., 2., 0.]];
        let y = vec![vec![1., 1.], vec![1., -1.], vec![-2., 0.], vec![0.5, 0.25]];
        let by_rows = linear_cka(&mat(&x), &mat(&y)).unwrap();
        let by_cols = linear_cka_columns(&mat(&x).transpose(), &mat(&y).transpose()).unwrap();
        assert!((by_rows - by_cols).abs() < 1e-14);
        assert!((by_rows - covariance_oracle(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn constant_input_is_degenerate() {
        let x = mat(&[vec![1., 2.], vec![1., 2.], vec![1., 2.]]);
        let y = mat(&[vec![1., 0.], vec![0., 1.], vec![3., 3.]]);
        assert!(matches!(linear_cka(&x, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = mat(&[vec![1.], vec![2.], vec![3.]]);
        let y = mat(&[vec![1.], vec![2.]]);
        assert!(matches!(linear_cka(&x, &y), Err(Error::Shape(_))));
    }

    #[test]
    fn single_sample_rejected() {
        let x = mat(&[vec![1., 2.]]);
        assert!(matches!(linear_cka(&x, &x), Err(Error::InvalidInput(_))));
    }
}
