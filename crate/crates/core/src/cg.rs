//! Preconditioned conjugate gradients for symmetric positive-definite systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `|b - Ax| / |b|`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `Ax = b` with Jacobi preconditioning, starting from zero.
///
/// `apply(v, out)` writes `Av` into `out`. Fails with a convergence error if
/// the relative residual is still above `tol` after `max_iters` steps.
pub fn pcg<F>(apply: F, diag: &[f64], b: &[f64], tol: f64, max_iters: usize) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut residual = 1.0;
    for it in 1..=max_iters {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / bnorm;
        if residual <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual,
            });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Convergence {
        residual,
        iterations: max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..3 {
                out[i] = (0..3).map(|j| a[i][j] * v[j]).sum();
            }
        };
        let b = [1.0, 2.0, 3.0];
        let out = pcg(apply, &[4.0, 3.0, 2.0], &b, 1e-12, 10).unwrap();
        let mut ax = [0.0; 3];
        apply(&out.x, &mut ax);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
        assert!(out.iterations <= 3);
    }

    #[test]
    fn zero_rhs_and_stall() {
        let apply = |v: &[f64], out: &mut [f64]| out.copy_from_slice(v);
        assert_eq!(pcg(apply, &[1.0], &[0.0], 1e-10, 5).unwrap().iterations, 0);
        let bad = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0];
            out[1] = 1e-8 * v[1];
        };
        let err = pcg(bad, &[1.0, 1.0], &[1.0, 1.0], 1e-14, 1);
        assert!(matches!(err, Err(Error::Convergence { .. })));
    }
}
