use nalgebra::{DMatrix, SymmetricEigen};

use super::tensor::Tensor;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

fn check_symmetric(a: &Tensor) -> Result<usize> {
    let (r, c) = a.dims2()?;
    if r != c || a.rank() != 2 {
        return Err(Error::Shape(format!("expected a square matrix, got {:?}", a.shape())));
    }
    let scale = 1.0f64.max(a.max_abs());
    let mut asym = 0.0f64;
    for i in 0..r {
        for j in (i + 1)..r {
            asym = asym.max((a.get(i, j) - a.get(j, i)).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(r)
}

fn to_dmatrix(a: &Tensor) -> DMatrix<f64> {
    let (r, c) = (a.rows(), a.cols());
    DMatrix::from_row_slice(r, c, a.data())
}

/// Solves `a·x = b` for symmetric positive-definite `a` by Cholesky
/// factorization. `b` may be a vector or a matrix of right-hand sides; the
/// result has the same shape as `b`.
pub fn solve_spd(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let n = check_symmetric(a)?;
    let (br, bc) = b.dims2()?;
    if br != n {
        return Err(Error::Shape(format!(
            "solve_spd: a is {:?} but b is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let chol = to_dmatrix(a)
        .cholesky()
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    let rhs = DMatrix::from_row_slice(br, bc, b.data());
    let x = chol.solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite solution".into()));
    }
    let mut out = Vec::with_capacity(br * bc);
    for i in 0..br {
        for j in 0..bc {
            out.push(x[(i, j)]);
        }
    }
    Tensor::new(b.shape().to_vec(), out)
}

/// Real eigenvalues of a symmetric matrix, sorted descending.
pub fn sym_eigenvalues(a: &Tensor) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    let mut m = to_dmatrix(a);
    // Average with the transpose so the solver sees an exactly symmetric input.
    let mt = m.transpose();
    m = (m + mt) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Inverse of a symmetric positive-definite matrix.
pub fn inverse_spd(a: &Tensor) -> Result<Tensor> {
    let n = check_symmetric(a)?;
    solve_spd(a, &Tensor::identity(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::tensor::matmul;
    use crate::numcore::Rng;
    use proptest::prelude::*;

    fn random_matrix(rng: &mut Rng, r: usize, c: usize) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    fn random_spd(rng: &mut Rng, n: usize) -> Tensor {
        let m = random_matrix(rng, n, n);
        let mtm = matmul(&m.transpose().unwrap(), &m).unwrap();
        mtm.add(&Tensor::identity(n)).unwrap()
    }

    #[test]
    fn diagonal_solve() {
        let a = Tensor::identity(2).scale(2.0);
        let x = solve_spd(&a, &Tensor::vector(vec![2.0, 4.0])).unwrap();
        assert!((x.data()[0] - 1.0).abs() < 1e-14 && (x.data()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let v = Tensor::vector(vec![0.3, -7.0, 2.5]);
        let x = solve_spd(&Tensor::identity(3), &v).unwrap();
        assert_eq!(x, v);
    }

    #[test]
    fn hand_eliminated_two_by_two() {
        // 4x + 2y = 2, 2x + 3y = 1  =>  y = 0, x = 0.5
        let a = Tensor::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let x = solve_spd(&a, &Tensor::vector(vec![2.0, 1.0])).unwrap();
        assert!((x.data()[0] - 0.5).abs() < 1e-14);
        assert!(x.data()[1].abs() < 1e-14);
    }

    #[test]
    fn not_positive_definite_is_singular() {
        let a = Tensor::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let err = solve_spd(&a, &Tensor::vector(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let a = Tensor::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigenvalues(&a), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            solve_spd(&a, &Tensor::vector(vec![1.0, 1.0])),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn eigenvalues_of_diagonal_sorted() {
        let v = sym_eigenvalues(&Tensor::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(v, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn eigenvalues_two_by_two() {
        // (2-t)^2 - 1 = 0  =>  t = 3, 1
        let a = Tensor::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let v = sym_eigenvalues(&a).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_identity() {
        let v = sym_eigenvalues(&Tensor::identity(4)).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-14));
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), m in 1usize..5, k in 1usize..5, l in 1usize..5, n in 1usize..5) {
            let mut rng = Rng::new(seed);
            let a = random_matrix(&mut rng, m, k);
            let b = random_matrix(&mut rng, k, l);
            let c = random_matrix(&mut rng, l, n);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = 1.0f64.max(left.max_abs());
            prop_assert!(left.sub(&right).unwrap().max_abs() <= 1e-9 * scale);
        }

        #[test]
        fn spd_solve_recovers_x(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = Rng::new(seed);
            let a = random_spd(&mut rng, n);
            let x = random_matrix(&mut rng, n, 1);
            let b = matmul(&a, &x).unwrap();
            let got = solve_spd(&a, &b).unwrap();
            prop_assert!(got.sub(&x).unwrap().max_abs() <= 1e-8);
            let resid = matmul(&a, &got).unwrap().sub(&b).unwrap().max_abs();
            prop_assert!(resid <= 1e-8 * (1.0 + b.max_abs()));
        }

        #[test]
        fn eigenvalue_sum_is_trace_and_gram_is_psd(seed in any::<u64>(), n in 2usize..10, p in 1usize..6) {
            let mut rng = Rng::new(seed);
            let x = random_matrix(&mut rng, n, p);
            let g = crate::numcore::gram(&x).unwrap();
            let vals = sym_eigenvalues(&g).unwrap();
            let trace: f64 = (0..p).map(|i| g.get(i, i)).sum();
            let sum: f64 = vals.iter().sum();
            prop_assert!((sum - trace).abs() <= 1e-9 * (1.0 + trace.abs()));
            prop_assert!(vals.iter().all(|v| *v >= -1e-10));
            prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
