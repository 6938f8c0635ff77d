// SPDX-License-Identifier: MIT OR Apache-2.0

//! Damped Newton ascent for smooth concave objectives.

use nalgebra::{DMatrix, DVector};

/// Value, gradient and Hessian of the objective at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Stop once `|grad| <= grad_tol * (1 + |x|)`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-9, max_iter: 100, max_halvings: 60 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at every accepted iterate, starting with `x0`.
    pub trace: Vec<f64>,
}

/// Gradient level below which a stalled line search is still reported as
/// converged: rounding keeps the objective from increasing any further.
const STALL_GRAD_TOL: f64 = 1e-7;

/// Maximizes `f` starting from `x0`.
///
/// `f` returns `None` outside its domain; step halving keeps every iterate
/// feasible and makes the accepted objective values nondecreasing. Where the
/// negated Hessian is not positive definite a multiple of the identity is
/// added until it is.
pub fn maximize<F>(f: F, x0: DVector<f64>, opts: &NewtonOptions) -> Option<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> Option<Evaluation>,
{
    let mut x = x0;
    let mut cur = f(&x)?;
    let mut trace = vec![cur.value];
    let done = |x: &DVector<f64>, e: &Evaluation, iterations, converged, trace| NewtonOutcome {
        x: x.clone(),
        value: e.value,
        iterations,
        converged,
        trace,
    };
    for iter in 0..opts.max_iter {
        let gnorm = cur.grad.norm();
        if gnorm <= opts.grad_tol * (1.0 + x.norm()) {
            return Some(done(&x, &cur, iter, true, trace));
        }
        let Some(step) = ascent_step(&cur) else {
            return Some(done(&x, &cur, iter, false, trace));
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_halvings {
            let cand = &x + &step * t;
            if let Some(e) = f(&cand) {
                if e.value >= cur.value && e.value.is_finite() {
                    accepted = Some((cand, e));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, e)) => {
                let moved = (&cand - &x).norm();
                x = cand;
                cur = e;
                trace.push(cur.value);
                if moved <= f64::EPSILON * (1.0 + x.norm()) && cur.grad.norm() <= STALL_GRAD_TOL * (1.0 + x.norm()) {
                    return Some(done(&x, &cur, iter + 1, true, trace));
                }
            }
            None => {
                let converged = cur.grad.norm() <= STALL_GRAD_TOL * (1.0 + x.norm());
                return Some(done(&x, &cur, iter + 1, converged, trace));
            }
        }
    }
    let converged = cur.grad.norm() <= opts.grad_tol * (1.0 + x.norm());
    Some(done(&x, &cur, opts.max_iter, converged, trace))
}

fn ascent_step(e: &Evaluation) -> Option<DVector<f64>> {
    let neg = -&e.hess;
    if let Some(chol) = neg.clone().cholesky() {
        return Some(chol.solve(&e.grad));
    }
    let scale = 1.0 + neg.diagonal().amax();
    let mut lambda = 1e-8 * scale;
    for _ in 0..40 {
        let damped = &neg + DMatrix::identity(neg.nrows(), neg.ncols()) * lambda;
        if let Some(chol) = damped.cholesky() {
            return Some(chol.solve(&e.grad));
        }
        lambda *= 10.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(x: &DVector<f64>) -> Option<Evaluation> {
        // -(x0 - 1)^4 - (x0 - 1)^2 - 2 (x1 + 0.5)^2
        let a = x[0] - 1.0;
        let b = x[1] + 0.5;
        Some(Evaluation {
            value: -a.powi(4) - a * a - 2.0 * b * b,
            grad: DVector::from_vec(vec![-4.0 * a.powi(3) - 2.0 * a, -4.0 * b]),
            hess: DMatrix::from_row_slice(2, 2, &[-12.0 * a * a - 2.0, 0.0, 0.0, -4.0]),
        })
    }

    #[test]
    fn finds_maximum_with_monotone_trace() {
        let out = maximize(quartic, DVector::from_vec(vec![10.0, 3.0]), &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] + 0.5).abs() < 1e-8);
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn respects_domain() {
        // log(x) - x on x > 0, maximum at 1; a full step from 5 leaves the domain.
        let f = |x: &DVector<f64>| {
            (x[0] > 0.0).then(|| Evaluation {
                value: x[0].ln() - x[0],
                grad: DVector::from_element(1, 1.0 / x[0] - 1.0),
                hess: DMatrix::from_element(1, 1, -1.0 / (x[0] * x[0])),
            })
        };
        let out = maximize(f, DVector::from_element(1, 5.0), &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_objective_is_reported_unconverged() {
        let f = |x: &DVector<f64>| {
            Some(Evaluation {
                value: x[0] * x[0],
                grad: DVector::from_element(1, 2.0 * x[0]),
                hess: DMatrix::from_element(1, 1, 2.0),
            })
        };
        let out = maximize(f, DVector::from_element(1, 1.0), &NewtonOptions::default()).unwrap();
        assert!(!out.converged);
        assert!(out.x[0] > 1.0);
    }

    #[test]
    fn indefinite_start_still_reaches_maximum() {
        // -(x0^2 - 1)^2 - x1^2 is not concave near the start.
        let f = |x: &DVector<f64>| {
            let a = x[0] * x[0] - 1.0;
            Some(Evaluation {
                value: -a * a - x[1] * x[1],
                grad: DVector::from_vec(vec![-4.0 * a * x[0], -2.0 * x[1]]),
                hess: DMatrix::from_row_slice(2, 2, &[-12.0 * x[0] * x[0] + 4.0, 0.0, 0.0, -2.0]),
            })
        };
        let out = maximize(f, DVector::from_vec(vec![0.1, 0.5]), &NewtonOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && out.x[1].abs() < 1e-8);
    }

    #[test]
    fn infeasible_start_yields_none() {
        let f = |_: &DVector<f64>| None;
        assert!(maximize(f, DVector::zeros(1), &NewtonOptions::default()).is_none());
    }
}
