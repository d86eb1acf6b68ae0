use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::scalar::{lit, mu0, to_f64, Scalar};

use super::{BHCurve, MaterialError};

/// Parameters of the analytic relative-permeability function
///
/// μ̂_r(B) = 1 + (μ_i − 1 + c_a·B_N) / (1 + c_b·B_N + B_Nⁿ),  B_N = |B / B(μ_max)|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermeabilityFit<T> {
    pub mu_i: T,
    pub b_mu_max: T,
    pub c_a: T,
    pub c_b: T,
    pub n: T,
}

impl<T: Scalar> PermeabilityFit<T> {
    pub fn new(mu_i: T, b_mu_max: T, c_a: T, c_b: T, n: T) -> Result<Self, MaterialError> {
        let fit = Self {
            mu_i,
            b_mu_max,
            c_a,
            c_b,
            n,
        };
        fit.validate()?;
        Ok(fit)
    }

    /// Published parameters for ferritic stainless steel X6CrMoS17 (1.4105).
    pub fn x6crmos17() -> Self {
        Self {
            mu_i: lit(246.0),
            b_mu_max: lit(0.995),
            c_a: lit(13_400.0),
            c_b: lit(5.0),
            n: lit(12.8),
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let ok = self.mu_i >= T::one()
            && self.b_mu_max > T::zero()
            && self.c_a >= T::zero()
            && self.c_b >= T::zero()
            && self.n > T::zero()
            && [self.mu_i, self.b_mu_max, self.c_a, self.c_b, self.n]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(MaterialError::InvalidParameter(format!(
                "permeability fit violates mu_i>=1, B_mu_max>0, c_a>=0, c_b>=0, n>0: {self:?}"
            )))
        }
    }

    /// Relative permeability μ̂_r at flux density `b` (T).
    pub fn mu_hat(&self, b: T) -> T {
        let x = (b / self.b_mu_max).abs();
        let num = self.mu_i - T::one() + self.c_a * x;
        let den = T::one() + self.c_b * x + x.powf(self.n);
        T::one() + num / den
    }

    /// dμ̂_r/dB.
    pub fn dmu_hat_db(&self, b: T) -> T {
        let x = (b / self.b_mu_max).abs();
        if x == T::zero() && self.n < T::one() {
            return T::zero();
        }
        let num = self.mu_i - T::one() + self.c_a * x;
        let den = T::one() + self.c_b * x + x.powf(self.n);
        let dden = self.c_b + self.n * x.powf(self.n - T::one());
        let dmu_dx = (self.c_a * den - num * dden) / (den * den);
        let sign = if b < T::zero() { -T::one() } else { T::one() };
        dmu_dx * sign / self.b_mu_max
    }
}

/// Free-function form of [`PermeabilityFit::mu_hat`].
pub fn eval_mu_hat<T: Scalar>(fit: &PermeabilityFit<T>, b: T) -> T {
    fit.mu_hat(b)
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions<T> {
    /// Measured points with μ_r above this are dropped before fitting.
    pub exclude_above_mu: T,
    /// Starting guess for B(μ_max); defaults to the B of the largest measured μ_r.
    pub b_mu_max_hint: Option<T>,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            exclude_above_mu: lit(1000.0),
            b_mu_max_hint: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport<T> {
    pub fit: PermeabilityFit<T>,
    /// RMS of the relative residual (μ̂ − μ)/μ over the used points.
    pub residual_rms: T,
    pub used_points: usize,
    pub excluded_points: usize,
}

/// Measured (B, μ_r) pairs from an initial magnetization curve. Points at
/// H ≤ 0 carry no permeability information and are skipped.
pub fn measured_permeability<T: Scalar>(curve: &BHCurve<T>) -> Vec<(T, T)> {
    let m0 = mu0::<T>();
    curve
        .samples()
        .iter()
        .filter(|(h, _)| *h > T::zero())
        .map(|&(h, j)| {
            let b = j + m0 * h;
            (b, b / (m0 * h))
        })
        .collect()
}

const N_STARTS: [f64; 8] = [2.0, 4.0, 7.0, 10.0, 14.0, 19.0, 24.0, 30.0];

/// Least-squares fit of μ̂_r to a measured initial curve.
///
/// Parameters are searched in log space (which keeps every bound satisfied)
/// by Nelder–Mead, restarted from several exponents in [2, 30] and then
/// polished from the best candidate.
pub fn fit_permeability<T: Scalar>(
    curve: &BHCurve<T>,
    opts: FitOptions<T>,
) -> Result<FitReport<T>, MaterialError> {
    if !(opts.exclude_above_mu > T::one()) {
        return Err(MaterialError::InvalidParameter(
            "exclusion threshold must exceed 1".into(),
        ));
    }
    let measured = measured_permeability(curve);
    let total = measured.len();
    let points: Vec<(f64, f64)> = measured
        .iter()
        .filter(|(_, mu)| *mu <= opts.exclude_above_mu && *mu > T::zero())
        .map(|&(b, mu)| (to_f64(b), to_f64(mu)))
        .collect();
    let excluded = total - points.len();
    if points.len() < 5 {
        return Err(MaterialError::FitUnderdetermined {
            points: points.len(),
        });
    }

    let objective = |theta: &[f64]| -> f64 {
        let fit = decode(theta);
        points
            .iter()
            .map(|&(b, mu)| {
                let r = (fit.mu_hat(b) - mu) / mu;
                r * r
            })
            .sum::<f64>()
            / points.len() as f64
    };

    let (b_peak, mu_peak) = points
        .iter()
        .copied()
        .fold((0.0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
    let b_low_mu = points
        .iter()
        .copied()
        .fold((f64::INFINITY, 1.0), |acc, p| if p.0.abs() < acc.0 { (p.0.abs(), p.1) } else { acc })
        .1;
    let b_hint = opts
        .b_mu_max_hint
        .map(to_f64)
        .unwrap_or(b_peak.abs())
        .max(1e-3);
    let mu_i0 = b_low_mu.max(1.5);
    let c_b0 = 5.0;
    let c_a0 = ((mu_peak - 1.0) * (2.0 + c_b0) - (mu_i0 - 1.0)).max(1.0);

    let nm = NelderMeadOptions {
        max_evals: 6_000,
        f_tol: 1e-26,
        initial_step: 0.2,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for n0 in N_STARTS {
        let x0 = encode(mu_i0, b_hint, c_a0, c_b0, n0);
        let m = nelder_mead(objective, &x0, nm);
        if best.as_ref().map_or(true, |b| m.value < b.1) {
            best = Some((m.x, m.value));
        }
    }
    let (mut x, mut value) = best.expect("at least one start");
    // restarts from the incumbent shake the simplex out of degenerate shapes
    let polish = NelderMeadOptions {
        max_evals: 8_000,
        f_tol: 1e-30,
        initial_step: 0.05,
    };
    for _ in 0..12 {
        let m = nelder_mead(objective, &x, polish);
        let improved = m.value < value * (1.0 - 1e-9);
        if m.value <= value {
            x = m.x;
            value = m.value;
        }
        if !improved {
            break;
        }
    }

    let fit64 = decode(&x);
    let fit = PermeabilityFit {
        mu_i: lit(fit64.mu_i),
        b_mu_max: lit(fit64.b_mu_max),
        c_a: lit(fit64.c_a),
        c_b: lit(fit64.c_b),
        n: lit(fit64.n),
    };
    fit.validate()?;
    Ok(FitReport {
        fit,
        residual_rms: lit(value.sqrt()),
        used_points: points.len(),
        excluded_points: excluded,
    })
}

fn encode(mu_i: f64, b: f64, c_a: f64, c_b: f64, n: f64) -> Vec<f64> {
    vec![
        (mu_i - 1.0).max(1e-12).ln(),
        b.ln(),
        c_a.max(1e-12).ln(),
        c_b.max(1e-12).ln(),
        n.ln(),
    ]
}

fn decode(theta: &[f64]) -> PermeabilityFit<f64> {
    PermeabilityFit {
        mu_i: 1.0 + theta[0].exp(),
        b_mu_max: theta[1].exp(),
        c_a: theta[2].exp(),
        c_b: theta[3].exp(),
        n: theta[4].exp(),
    }
}

/// Initial curve sampled from a permeability function: for each B the field
/// H = B/(μ0·μ̂_r(B)) and polarization J = B − μ0·H.
pub fn synthesize_initial_curve<T: Scalar>(
    fit: &PermeabilityFit<T>,
    b_values: &[T],
) -> Result<BHCurve<T>, MaterialError> {
    let m0 = mu0::<T>();
    let samples = b_values
        .iter()
        .map(|&b| {
            let h = b / (m0 * fit.mu_hat(b));
            (h, b - m0 * h)
        })
        .collect();
    BHCurve::new(samples, super::CurveKind::Initial)
}
