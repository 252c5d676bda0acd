//! Small dense solvers used by ridge initialization, refitting and the
//! two-locus F test. Systems here are at most a few hundred unknowns.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<F: Scalar>(a: ArrayView2<'_, F>) -> Result<Array2<F>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dim("cholesky: matrix must be square", n, a.ncols()));
    }
    let mut l = Array2::<F>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for p in 0..j {
                s -= l[[i, p]] * l[[j, p]];
            }
            if i == j {
                if !(s > F::zero()) || !s.is_finite() {
                    return Err(Error::Solver(format!(
                        "cholesky: matrix not positive definite at pivot {i}"
                    )));
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the factor from [`cholesky`].
pub fn cholesky_solve<F: Scalar>(l: ArrayView2<'_, F>, b: ArrayView1<'_, F>) -> Array1<F> {
    let n = l.nrows();
    let mut z = b.to_owned();
    for i in 0..n {
        let mut s = z[i];
        for p in 0..i {
            s -= l[[i, p]] * z[p];
        }
        z[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for p in (i + 1)..n {
            s -= l[[p, i]] * z[p];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns.
pub fn symmetric_eigen<F: Scalar>(a: ArrayView2<'_, F>) -> (Array1<F>, Array2<F>) {
    let n = a.nrows();
    let mut m = a.to_owned();
    let mut v = Array2::<F>::eye(n);
    let eps = F::epsilon();
    for _sweep in 0..100 {
        let mut off = F::zero();
        let mut diag = F::zero();
        for i in 0..n {
            diag += m[[i, i]] * m[[i, i]];
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off <= eps * eps * diag || off == F::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == F::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (F::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diag().to_owned(), v)
}

/// Minimum-norm least-squares solution of `min ||y - A^T c||` where the
/// rows of `a` are regressors (p x n) and `y` has length n.
///
/// Rank deficiency is handled with an eigenvalue cut-off on the Gram matrix,
/// which yields the Moore-Penrose solution.
pub fn least_squares_rows<F: Scalar>(a: ArrayView2<'_, F>, y: ArrayView1<'_, F>) -> Array1<F> {
    let p = a.nrows();
    if p == 0 {
        return Array1::zeros(0);
    }
    let gram = a.dot(&a.t());
    let rhs = a.dot(&y);
    let (vals, vecs) = symmetric_eigen(gram.view());
    let max_val = vals.iter().fold(F::zero(), |m, &v| m.max(v.abs()));
    let cutoff = max_val * F::epsilon() * F::lit(p as f64) * F::lit(16.0);
    let proj = vecs.t().dot(&rhs);
    let mut scaled = Array1::<F>::zeros(p);
    for i in 0..p {
        if vals[i] > cutoff {
            scaled[i] = proj[i] / vals[i];
        }
    }
    vecs.dot(&scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_round_trip() {
        let a = array![[4.0_f64, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let b = array![1.0, -2.0, 0.5];
        let x = cholesky_solve(l.view(), b.view());
        let ax = a.dot(&x);
        for (x, y) in ax.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0_f64, 2.0], [2.0, 1.0]];
        assert!(matches!(cholesky(a.view()), Err(Error::Solver(_))));
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = array![[2.0_f64, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(a.view());
        let recon = vecs.dot(&Array2::from_diag(&vals)).dot(&vecs.t());
        for (x, y) in recon.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_rank_deficient_min_norm() {
        // two identical regressors: the min-norm solution splits the weight
        let a = array![[1.0_f64, 2.0, 3.0], [1.0, 2.0, 3.0]];
        let y = array![2.0, 4.0, 6.0];
        let c = least_squares_rows(a.view(), y.view());
        assert!((c[0] - 1.0).abs() < 1e-10);
        assert!((c[1] - 1.0).abs() < 1e-10);
    }
}
