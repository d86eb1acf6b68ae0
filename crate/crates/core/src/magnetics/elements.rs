use std::sync::Arc;

use crate::material::{PermeabilityFit, TellinenTable};
use crate::scalar::{lit, mu0, Scalar};

use super::geometry::FluxTubeGeometry;

/// Smallest gap length used when evaluating a gap permeance, in m.
pub const GAP_FLOOR: f64 = 1e-9;

/// Two-terminal element of a magnetic network. Flux through an element is
/// counted positive from its `from` node to its `to` node.
#[derive(Debug, Clone)]
pub enum MagneticElement<T> {
    /// Iron flux tube with the analytic permeability fit.
    NonlinearReluctance {
        geometry: FluxTubeGeometry<T>,
        fit: PermeabilityFit<T>,
    },
    /// Iron flux tube whose polarization follows the Tellinen model. The
    /// polarization itself lives in the simulation state.
    HysteresisReluctance {
        geometry: FluxTubeGeometry<T>,
        table: Arc<TellinenTable<T>>,
    },
    ConstantPermeance { permeance: T },
    /// Prismatic air gap whose length is the armature coordinate.
    AirGapPermeance { area: T, force: bool },
    /// Magnetic inductance L_m: MMF proportional to the flux rate.
    EddyElement { inductance: T },
    /// Coil current linkage; raises the potential by turns·i from `from`
    /// to `to`.
    MmfSource { turns: u32 },
}

impl<T: Scalar> MagneticElement<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::NonlinearReluctance { .. } => "reluctance",
            Self::HysteresisReluctance { .. } => "hysteresis",
            Self::ConstantPermeance { .. } => "permeance",
            Self::AirGapPermeance { .. } => "gap",
            Self::EddyElement { .. } => "eddy",
            Self::MmfSource { .. } => "source",
        }
    }

    pub fn is_gap(&self) -> bool {
        matches!(self, Self::AirGapPermeance { .. })
    }

    pub fn is_force_gap(&self) -> bool {
        matches!(self, Self::AirGapPermeance { force: true, .. })
    }

    pub fn area(&self) -> Option<T> {
        match self {
            Self::NonlinearReluctance { geometry, .. } | Self::HysteresisReluctance { geometry, .. } => {
                Some(geometry.area)
            }
            Self::AirGapPermeance { area, .. } => Some(*area),
            _ => None,
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        match self {
            Self::NonlinearReluctance { geometry, fit } => {
                if !(pos(geometry.length) && pos(geometry.area)) {
                    return Err("reluctance geometry must be positive".into());
                }
                fit.validate().map_err(|e| e.to_string())
            }
            Self::HysteresisReluctance { geometry, .. } => {
                if pos(geometry.length) && pos(geometry.area) {
                    Ok(())
                } else {
                    Err("hysteresis geometry must be positive".into())
                }
            }
            Self::ConstantPermeance { permeance } => {
                if pos(*permeance) {
                    Ok(())
                } else {
                    Err("permeance must be positive".into())
                }
            }
            Self::AirGapPermeance { area, .. } => {
                if pos(*area) {
                    Ok(())
                } else {
                    Err("gap area must be positive".into())
                }
            }
            Self::EddyElement { inductance } => {
                if *inductance >= T::zero() && inductance.is_finite() {
                    Ok(())
                } else {
                    Err("magnetic inductance must be non-negative".into())
                }
            }
            Self::MmfSource { turns } => {
                if *turns > 0 {
                    Ok(())
                } else {
                    Err("source needs at least one turn".into())
                }
            }
        }
    }
}

/// Hopkinson's law for an iron tube: V = Φ·l / (μ0·μ̂_r(B)·A).
pub fn reluctance_mmf<T: Scalar>(geometry: &FluxTubeGeometry<T>, fit: &PermeabilityFit<T>, flux: T) -> T {
    let b = flux / geometry.area;
    flux * geometry.length / (mu0::<T>() * fit.mu_hat(b) * geometry.area)
}

/// dV/dΦ of [`reluctance_mmf`].
pub fn reluctance_mmf_slope<T: Scalar>(geometry: &FluxTubeGeometry<T>, fit: &PermeabilityFit<T>, flux: T) -> T {
    let b = flux / geometry.area;
    let mu = fit.mu_hat(b);
    let dmu = fit.dmu_hat_db(b);
    geometry.length / (mu0::<T>() * geometry.area) * (mu - b * dmu) / (mu * mu)
}

/// Magnetic energy ∫₀^Φ V dφ stored in an iron tube.
pub fn reluctance_energy<T: Scalar>(geometry: &FluxTubeGeometry<T>, fit: &PermeabilityFit<T>, flux: T) -> T {
    gauss_legendre(|f| reluctance_mmf(geometry, fit, f), T::zero(), flux, 32)
}

/// MMF of a hysteretic tube for a given polarization: H = (B − J)/μ0.
pub fn hysteresis_mmf<T: Scalar>(geometry: &FluxTubeGeometry<T>, flux: T, j_state: T) -> T {
    hysteresis_field(geometry, flux, j_state) * geometry.length
}

pub fn hysteresis_field<T: Scalar>(geometry: &FluxTubeGeometry<T>, flux: T, j_state: T) -> T {
    (flux / geometry.area - j_state) / mu0::<T>()
}

/// Field energy μ0·H²/2 per volume of a hysteretic tube. The part of
/// ∫H dB going into J is booked as hysteresis work instead.
pub fn hysteresis_field_energy<T: Scalar>(geometry: &FluxTubeGeometry<T>, flux: T, j_state: T) -> T {
    let h = hysteresis_field(geometry, flux, j_state);
    mu0::<T>() * h * h / lit(2.0) * geometry.volume()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPermeance<T> {
    pub permeance: T,
    /// Length actually used, after applying the floor.
    pub length: T,
    pub clamped: bool,
}

/// Λ = μ0·A/d with d floored at [`GAP_FLOOR`].
pub fn gap_permeance<T: Scalar>(area: T, d: T) -> GapPermeance<T> {
    let floor = lit::<T>(GAP_FLOOR);
    let clamped = !(d >= floor);
    let length = if clamped { floor } else { d };
    GapPermeance {
        permeance: mu0::<T>() * area / length,
        length,
        clamped,
    }
}

/// Attractive force of a prismatic gap: Φ²/(2·μ0·A), positive toward
/// closing.
pub fn gap_force<T: Scalar>(flux: T, area: T) -> T {
    flux * flux / (lit::<T>(2.0) * mu0::<T>() * area)
}

/// L_m·dΦ/dt.
pub fn eddy_mmf<T: Scalar>(inductance: T, dflux_dt: T) -> T {
    inductance * dflux_dt
}

/// Composite 5-point Gauss–Legendre quadrature over `panels` panels.
pub(crate) fn gauss_legendre<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize) -> T {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    if a == b {
        return T::zero();
    }
    let width = (b - a) / lit(panels as f64);
    let half = width / lit(2.0);
    let mut acc = T::zero();
    for p in 0..panels {
        let mid = a + width * lit(p as f64) + half;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            acc += lit::<T>(w) * f(mid + half * lit(*x));
        }
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pole() -> FluxTubeGeometry<f64> {
        FluxTubeGeometry::new(12.25e-3, 75.4e-6).unwrap()
    }

    #[test]
    fn reluctance_at_one_tesla() {
        let fit = PermeabilityFit::x6crmos17();
        let g = pole();
        let phi = 75.4e-6;
        let mu = crate::material::eval_mu_hat(&fit, 1.0);
        let expect = phi * 12.25e-3 / (4e-7 * std::f64::consts::PI * mu * 75.4e-6);
        assert_relative_eq!(reluctance_mmf(&g, &fit, phi), expect, max_relative = 1e-12);
        assert_relative_eq!(reluctance_mmf(&g, &fit, -phi), -expect, max_relative = 1e-12);
        assert_eq!(reluctance_mmf(&g, &fit, 0.0), 0.0);
    }

    #[test]
    fn reluctance_slope_matches_difference() {
        let fit = PermeabilityFit::x6crmos17();
        let g = pole();
        for b in [0.05, 0.5, 0.99, 1.3, 1.8, -1.1] {
            let phi = b * g.area;
            let h = 1e-9;
            let fd = (reluctance_mmf(&g, &fit, phi + h) - reluctance_mmf(&g, &fit, phi - h)) / (2.0 * h);
            assert_relative_eq!(reluctance_mmf_slope(&g, &fit, phi), fd, max_relative = 1e-5);
        }
    }

    #[test]
    fn hysteresis_mmf_examples() {
        let g = FluxTubeGeometry::new(10e-3, 1e-4).unwrap();
        assert_eq!(hysteresis_mmf(&g, 0.0, 0.0), 0.0);
        assert_eq!(hysteresis_mmf(&g, 0.5e-4, 0.5), 0.0);
        let b = 0.5 + 4e-7 * std::f64::consts::PI * 100.0;
        assert_relative_eq!(hysteresis_mmf(&g, b * 1e-4, 0.5), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn gap_permeance_examples() {
        let g = gap_permeance(75.4e-6, 0.5e-3);
        assert_relative_eq!(g.permeance, 4e-7 * std::f64::consts::PI * 75.4e-6 / 5e-4, max_relative = 1e-14);
        // the quoted 1.8946e-7 H is rounded from 1.8950e-7 H
        assert_relative_eq!(g.permeance, 1.8946e-7, max_relative = 5e-4);
        assert!(!g.clamped);
        assert_relative_eq!(gap_permeance(75.4e-6, 1e-3).permeance, g.permeance / 2.0, max_relative = 1e-14);
        let z = gap_permeance(75.4e-6, 0.0);
        assert!(z.clamped);
        assert_eq!(z.length, GAP_FLOOR);
    }

    #[test]
    fn gap_force_examples() {
        assert_eq!(gap_force(0.0, 75.4e-6), 0.0);
        let f = gap_force(75.4e-6, 75.4e-6);
        assert_relative_eq!(f, 30.0, max_relative = 1e-3);
        assert_eq!(gap_force(-75.4e-6, 75.4e-6), f);
    }

    #[test]
    fn eddy_mmf_examples() {
        assert_eq!(eddy_mmf(509.0, 0.0), 0.0);
        assert_relative_eq!(eddy_mmf(1.0 / 1.963e-3, 1e-3), 0.509, max_relative = 1e-3);
        assert_eq!(eddy_mmf(509.0, -1e-3), -eddy_mmf(509.0, 1e-3));
    }

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let v = gauss_legendre(|x: f64| x.powi(7) - 3.0 * x, -1.0, 2.0, 3);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - 1.5 * (4.0 - 1.0);
        assert_relative_eq!(v, exact, max_relative = 1e-13);
    }
}
