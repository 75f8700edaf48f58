use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    /// Convergence threshold on the infinity norm of the (dimensionless)
    /// residual vector.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Step halvings tried when a full step increases the residual.
    pub max_halvings: u32,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 50,
            max_halvings: 8,
        }
    }
}

const FD_STEP: f64 = 1e-7;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Damped Newton iteration with a forward-difference Jacobian.
///
/// `residual` must return a dimensionless vector of the same length as
/// `guess`. An evaluation error during a trial step is treated like a
/// residual increase and triggers step halving.
pub fn newton_solve<F>(mut residual: F, guess: &[f64], opts: &NewtonOptions) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = guess.len();
    let mut x = guess.to_vec();
    let mut f = residual(&x)?;
    if f.len() != n || !finite(&f) {
        return Err(Error::domain("newton: residual not finite at initial guess"));
    }
    let mut norm = inf_norm(&f);

    for iter in 0..opts.max_iter {
        if norm < opts.rel_tol {
            return Ok(x);
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for c in 0..n {
            let h = FD_STEP * x[c].abs().max(1.0);
            let mut xp = x.clone();
            xp[c] += h;
            let (fp, step) = match residual(&xp) {
                Ok(fp) if finite(&fp) => (fp, h),
                _ => {
                    xp[c] = x[c] - h;
                    (residual(&xp)?, -h)
                }
            };
            for r in 0..n {
                jac[(r, c)] = (fp[r] - f[r]) / step;
            }
        }
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let delta = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        if !delta.iter().all(|d| d.is_finite()) {
            return Err(Error::SingularJacobian);
        }

        let mut lambda = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=opts.max_halvings {
            let xt: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = residual(&xt) {
                if finite(&ft) {
                    let nt = inf_norm(&ft);
                    if nt < norm {
                        accepted = Some((xt, ft, nt));
                        break;
                    }
                    fallback = Some((xt, ft, nt));
                }
            }
            lambda *= 0.5;
        }
        match accepted.or(fallback) {
            Some((xt, ft, nt)) => {
                x = xt;
                f = ft;
                norm = nt;
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations: iter + 1,
                    residual: norm,
                })
            }
        }
    }
    if norm < opts.rel_tol {
        return Ok(x);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_in_one_iteration() {
        let mut calls = 0;
        let x = newton_solve(
            |x| {
                calls += 1;
                Ok(vec![x[0] - 3.0])
            },
            &[0.0],
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!((x[0] - 3.0).abs() < 1e-8);
        // initial residual, one Jacobian column, one trial step
        assert_eq!(calls, 3);
    }

    #[test]
    fn quadratic_from_three() {
        let x = newton_solve(|x| Ok(vec![x[0] * x[0] - 4.0]), &[3.0], &NewtonOptions::default()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn flat_residual_fails_cleanly() {
        let r = newton_solve(|_| Ok(vec![1.0]), &[0.0], &NewtonOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn no_root_hits_budget() {
        let r = newton_solve(|x| Ok(vec![x[0] * x[0] + 1.0]), &[0.5], &NewtonOptions::default());
        assert!(matches!(r, Err(Error::NonConvergence { .. }) | Err(Error::SingularJacobian)));
    }

    #[test]
    fn coupled_system() {
        let x = newton_solve(
            |x| Ok(vec![x[0] + x[1] - 3.0, x[0] * x[1] - 2.0]),
            &[0.5, 3.0],
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!((x[0] * x[1] - 2.0).abs() < 1e-7 && (x[0] + x[1] - 3.0).abs() < 1e-7);
    }
}
