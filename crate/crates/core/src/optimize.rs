//! Derivative-free minimization (Nelder–Mead simplex).

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions<T> {
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: T,
    /// Initial simplex edge per coordinate.
    pub initial_step: T,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            f_tol: lit(1e-20),
            initial_step: lit(0.1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evals: usize,
}

/// Minimizes `f` starting from `x0` with adaptive Nelder–Mead coefficients.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], opts: NelderMeadOptions<T>) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let dim = x0.len();
    let d = lit::<T>(dim as f64);
    // Gao & Han dimension-adapted coefficients.
    let alpha = T::one();
    let gamma = T::one() + lit::<T>(2.0) / d;
    let rho = lit::<T>(0.75) - T::one() / (lit::<T>(2.0) * d);
    let sigma = T::one() - T::one() / d;

    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for k in 0..dim {
        let mut p = x0.to_vec();
        p[k] += opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<T> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[dim];
        if (worst - best).abs() <= opts.f_tol {
            break;
        }

        let mut centroid = vec![T::zero(); dim];
        for p in simplex.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += *v / d;
            }
        }
        let along = |coef: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| *c + coef * (*c - *w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < worst.min(fr) {
            simplex[dim] = xc;
            values[dim] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best_p = simplex[0].clone();
        for k in 1..=dim {
            for (v, b) in simplex[k].iter_mut().zip(&best_p) {
                *v = *b + sigma * (*v - *b);
            }
            values[k] = eval(&simplex[k], &mut evals);
        }
    }

    let (idx, _) = values
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    Minimum {
        x: simplex[idx].clone(),
        value: values[idx],
        evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 1e-6);
    }
}
