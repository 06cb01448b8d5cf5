use nalgebra::DMatrix;
use nframe::linalg::{linear_cka, stable_rank, Matrix};
use nframe::Error;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| Matrix::from_row_slice(rows, cols, &v).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=12, 1usize..=12, 1usize..=12)
}

/// Spectral norm straight from nalgebra's SVD, independent of the library's
/// Gram-eigenvalue route.
fn svd_norm(m: &Matrix) -> f64 {
    m.as_dmatrix().clone().svd(false, false).singular_values.max()
}

fn product(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_dmatrix(a.as_dmatrix() * b.as_dmatrix()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn stable_rank_lies_between_one_and_rank(
        a in dims().prop_flat_map(|(m, n, _)| matrix(m, n))
    ) {
        match stable_rank(&a) {
            Ok(r) => {
                let bound = a.rows().min(a.cols()) as f64;
                prop_assert!(r >= 1.0 - 1e-12 && r <= bound + 1e-12, "r = {r}, bound {bound}");
                let f = a.frobenius_norm_squared();
                let s = svd_norm(&a);
                prop_assert!((r - f / (s * s)).abs() <= 1e-9 * r);
            }
            Err(e) => prop_assert!(matches!(e, Error::UndefinedStableRank)),
        }
    }

    #[test]
    fn product_bound_holds(
        (a, b) in dims().prop_flat_map(|(m, n, p)| (matrix(m, n), matrix(n, p)))
    ) {
        let ab = product(&a, &b);
        prop_assume!(!ab.is_zero());
        let (ra, rb, rab) = (stable_rank(&a).unwrap(), stable_rank(&b).unwrap(), stable_rank(&ab).unwrap());
        let factor = (svd_norm(&a) * svd_norm(&b) / svd_norm(&ab)).powi(2);
        prop_assert!(rab <= factor * ra.min(rb) + 1e-9, "r(AB) = {rab}, bound {}", factor * ra.min(rb));
    }

    #[test]
    fn stable_rank_is_scale_invariant(a in matrix(7, 5), c in 1e-3f64..1e3) {
        let r = stable_rank(&a).unwrap();
        let rc = stable_rank(&a.scaled(c).unwrap()).unwrap();
        prop_assert!((r - rc).abs() <= 1e-12 * r.max(1.0) * 10.0);
    }

    #[test]
    fn cka_is_symmetric_bounded_and_scale_invariant(
        x in matrix(9, 6), y in matrix(9, 4), c in 1e-3f64..1e3
    ) {
        let xy = linear_cka(&x, &y).unwrap();
        let yx = linear_cka(&y, &x).unwrap();
        prop_assert!((xy - yx).abs() <= 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&xy));
        let scaled = linear_cka(&x.scaled(c).unwrap(), &y).unwrap();
        prop_assert!((xy - scaled).abs() <= 1e-9);
        prop_assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn cka_is_invariant_to_orthogonal_maps(x in matrix(8, 5), y in matrix(8, 3), g in matrix(5, 5)) {
        let q = g.as_dmatrix().clone().qr().q();
        let xq = Matrix::from_dmatrix(x.as_dmatrix() * q).unwrap();
        let before = linear_cka(&x, &y).unwrap();
        let after = linear_cka(&xq, &y).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
    }
}

#[test]
fn unit_values() {
    let eye = Matrix::identity(6);
    assert!((stable_rank(&eye).unwrap() - 6.0).abs() < 1e-12);
    let d = Matrix::from_diagonal(&[2.0, 1.0]).unwrap();
    assert!((stable_rank(&d).unwrap() - 1.25).abs() < 1e-12);
    let outer = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
    assert!((stable_rank(&Matrix::from_dmatrix(outer).unwrap()).unwrap() - 1.0).abs() < 1e-12);
}
