//! Preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final `‖b − Kx‖ / ‖b‖`.
    pub residual: f64,
}

/// Solves `K x = b` for symmetric positive definite `K`, starting from `x`.
///
/// `inv_diag`, when given, is the Jacobi preconditioner. Convergence is
/// declared on the relative residual `‖r‖/‖b‖ ≤ tol`.
pub fn pcg<A>(
    exec: Exec,
    apply: A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgStats>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = par::dot(exec, b, b).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => {
            for ((zi, ri), di) in z.iter_mut().zip(r).zip(d) {
                *zi = ri * di;
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = par::dot(exec, &r, &z);
    let mut res = par::dot(exec, &r, &r).sqrt() / b_norm;
    let mut it = 0;
    while res > tol {
        if it == max_iter {
            return Err(Error::Solver {
                iterations: it,
                residual: res,
            });
        }
        apply(&p, &mut q);
        let pq = par::dot(exec, &p, &q);
        if pq <= 0.0 {
            return Err(Error::Solver {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pq;
        par::axpy(exec, alpha, &p, x);
        par::axpy(exec, -alpha, &q, &mut r);
        precondition(&r, &mut z);
        let rz_new = par::dot(exec, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        res = par::dot(exec, &r, &r).sqrt() / b_norm;
        it += 1;
    }
    Ok(CgStats {
        iterations: it,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = 2.0 * x[i] - l - r + 0.1 * x[i] * (i as f64 + 1.0);
        }
    }

    #[test]
    fn solves_tridiagonal_system() {
        let n = 200;
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 / (2.0 + 0.1 * (i as f64 + 1.0))).collect();
        for pre in [None, Some(diag.as_slice())] {
            let mut x = vec![0.0; n];
            let st = pcg(Exec::Sequential, laplacian, pre, &b, &mut x, 1e-12, 1000).unwrap();
            assert!(st.residual <= 1e-12);
            let mut y = vec![0.0; n];
            laplacian(&x, &mut y);
            let err: f64 = y.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_and_iteration_cap() {
        let mut x = vec![1.0; 10];
        let st = pcg(Exec::Sequential, laplacian, None, &[0.0; 10], &mut x, 1e-10, 5).unwrap();
        assert_eq!(st.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
        let b = vec![1.0; 500];
        let mut x = vec![0.0; 500];
        let err = pcg(Exec::Sequential, laplacian, None, &b, &mut x, 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::Solver { iterations: 3, .. }));
    }
}
