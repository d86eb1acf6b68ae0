//! Damped Newton iteration shared by the magnetostatic and transient solves.

use crate::linalg::DenseMatrix;
use crate::scalar::{lit, Scalar};

/// A square nonlinear system F(y) = 0 with an analytic Jacobian.
pub trait NonlinearSystem<T: Scalar> {
    fn dim(&self) -> usize;

    /// Fills `residual` and, when given, the Jacobian ∂F/∂y.
    fn eval(&mut self, y: &[T], residual: &mut [T], jacobian: Option<&mut DenseMatrix<T>>);

    /// Called after each accepted iterate; systems with discrete modes may
    /// update them here.
    fn after_iteration(&mut self, _y: &[T], _iteration: usize) {}
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub max_iter: usize,
    /// Convergence once every |Δy_i| / w_i is below this.
    pub tol: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 40,
            tol: lit(1e-6),
            max_backtracks: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Weighted size of the last update.
    pub last_update: f64,
    /// Scaled residual norm at exit.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NewtonError {
    #[error("Newton iteration did not converge after {iterations} iterations (update {last_update:.3e}, residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        last_update: f64,
        residual: f64,
    },
    #[error("singular Jacobian at row {row}")]
    Singular { row: usize },
    #[error("non-finite residual")]
    NonFinite,
}

/// Solves `sys(y) = 0` starting from `y`, which receives the solution.
///
/// `weights` give the per-unknown scale used for the convergence test and
/// for normalizing residual rows in the backtracking merit function.
pub fn newton_solve<T: Scalar, S: NonlinearSystem<T>>(
    sys: &mut S,
    y: &mut [T],
    weights: &[T],
    opts: NewtonOptions<T>,
) -> Result<NewtonReport, NewtonError> {
    let n = sys.dim();
    assert_eq!(y.len(), n);
    let mut r = vec![T::zero(); n];
    let mut jac = DenseMatrix::zeros(n);
    let mut row_scale = vec![T::one(); n];
    let mut trial = vec![T::zero(); n];
    let mut r_trial = vec![T::zero(); n];
    let mut last_update = f64::INFINITY;
    let mut merit_now = f64::INFINITY;

    for it in 1..=opts.max_iter {
        jac.clear();
        sys.eval(y, &mut r, Some(&mut jac));
        if r.iter().any(|v| !v.is_finite()) {
            return Err(NewtonError::NonFinite);
        }
        for (i, s) in row_scale.iter_mut().enumerate() {
            let acc = jac
                .row(i)
                .iter()
                .zip(weights)
                .fold(T::zero(), |a, (j, w)| a + j.abs() * *w);
            *s = if acc > T::zero() { T::one() / acc } else { T::one() };
        }
        let merit = |res: &[T]| -> f64 {
            res.iter()
                .zip(&row_scale)
                .map(|(v, s)| crate::scalar::to_f64(*v * *s).powi(2))
                .sum::<f64>()
        };
        merit_now = merit(&r);

        let mut delta: Vec<T> = r.iter().map(|v| -*v).collect();
        jac.solve_in_place(&mut delta)
            .map_err(|e| NewtonError::Singular { row: e.row })?;
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(NewtonError::NonFinite);
        }
        let full = weighted_max(&delta, weights);
        if full <= crate::scalar::to_f64(opts.tol) {
            // already inside tolerance; take the step without a line search
            for i in 0..n {
                y[i] += delta[i];
            }
            sys.after_iteration(y, it);
            return Ok(NewtonReport {
                iterations: it,
                last_update: full,
                residual: merit_now.sqrt(),
            });
        }

        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            for i in 0..n {
                trial[i] = y[i] + alpha * delta[i];
            }
            sys.eval(&trial, &mut r_trial, None);
            let m = merit(&r_trial);
            if m.is_finite() && (m <= merit_now || merit_now < 1e-28) {
                accepted = true;
                break;
            }
            alpha *= lit(0.5);
        }
        if !accepted {
            // take the full step anyway; a kinked residual can defeat the merit test
            alpha = T::one();
            for i in 0..n {
                trial[i] = y[i] + delta[i];
            }
        }
        y.copy_from_slice(&trial);
        last_update = full * crate::scalar::to_f64(alpha);
        sys.after_iteration(y, it);
    }
    Err(NewtonError::NotConverged {
        iterations: opts.max_iter,
        last_update,
        residual: merit_now.sqrt(),
    })
}

fn weighted_max<T: Scalar>(delta: &[T], weights: &[T]) -> f64 {
    delta
        .iter()
        .zip(weights)
        .map(|(d, w)| crate::scalar::to_f64((*d / *w).abs()))
        .fold(0.0, f64::max)
}
