use super::{axpy, dot, norm};
use crate::error::{Error, Result};

/// Preconditioned conjugate gradient for an SPD operator.
///
/// Stops once `‖apply(x) − b‖ ≤ tol·‖b‖` and returns the iterate together with
/// the number of operator applications spent. Gives up after `10·d` iterations.
pub fn conjugate_gradient<A, P>(
    mut apply: A,
    mut precond_solve: P,
    b: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, usize)>
where
    A: FnMut(&[f64]) -> Vec<f64>,
    P: FnMut(&[f64]) -> Vec<f64>,
{
    let d = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; d];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z = precond_solve(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let cap = 10 * d.max(1);
    for it in 1..=cap {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { iterations: it });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if norm(&r) <= tol * b_norm {
            return Ok((x, it));
        }
        z = precond_solve(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NoConvergence { iterations: cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_operator_takes_one_iteration() {
        let b = vec![1.0, -2.0, 0.5];
        let (x, it) = conjugate_gradient(|v| v.to_vec(), |v| v.to_vec(), &b, 1e-12).unwrap();
        assert_eq!(it, 1);
        assert_eq!(x, b);
    }

    #[test]
    fn exact_preconditioner_takes_one_iteration() {
        let d = 12;
        let diag: Vec<f64> = (1..=d).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..d).map(|i| (i as f64).sin() + 1.0).collect();
        let (x, it) = conjugate_gradient(
            |v| v.iter().zip(&diag).map(|(a, s)| a * s).collect(),
            |v| v.iter().zip(&diag).map(|(a, s)| a / s).collect(),
            &b,
            1e-12,
        )
        .unwrap();
        assert_eq!(it, 1);
        for i in 0..d {
            assert!((x[i] * diag[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn unpreconditioned_diagonal_converges() {
        let d = 20;
        let diag: Vec<f64> = (1..=d).map(|i| i as f64).collect();
        let b = vec![1.0; d];
        let (x, it) = conjugate_gradient(
            |v| v.iter().zip(&diag).map(|(a, s)| a * s).collect(),
            |v| v.to_vec(),
            &b,
            1e-10,
        )
        .unwrap();
        assert!(it <= d);
        for i in 0..d {
            assert!((x[i] - 1.0 / diag[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let (x, it) = conjugate_gradient(|v| v.to_vec(), |v| v.to_vec(), &[0.0; 4], 1e-10).unwrap();
        assert_eq!(it, 0);
        assert_eq!(x, vec![0.0; 4]);
    }
}
