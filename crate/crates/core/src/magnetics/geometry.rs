use crate::scalar::{lit, Scalar};

use super::NetworkError;

/// Prismatic flux tube: length along the flux, area across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxTubeGeometry<T> {
    pub length: T,
    pub area: T,
}

impl<T: Scalar> FluxTubeGeometry<T> {
    pub fn new(length: T, area: T) -> Result<Self, NetworkError> {
        if length > T::zero() && area > T::zero() {
            Ok(Self { length, area })
        } else {
            Err(NetworkError::InvalidElement(
                "flux tube needs positive length and area".into(),
            ))
        }
    }

    pub fn volume(&self) -> T {
        self.length * self.area
    }
}

/// Hollow cylinder carrying axial flux; `r_inner = 0` is a solid core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HollowCylinderShell<T> {
    pub r_inner: T,
    pub r_outer: T,
    pub height: T,
}

impl<T: Scalar> HollowCylinderShell<T> {
    pub fn area(&self) -> T {
        T::PI() * (self.r_outer * self.r_outer - self.r_inner * self.r_inner)
    }

    pub fn thickness(&self) -> T {
        self.r_outer - self.r_inner
    }
}

/// Splits a solid cylinder of radius `outer_radius` into `count` concentric
/// shells of equal cross-section, innermost first: r_k = R·√(k/count).
pub fn shell_partition<T: Scalar>(
    outer_radius: T,
    height: T,
    count: usize,
) -> Result<Vec<HollowCylinderShell<T>>, NetworkError> {
    if count == 0 {
        return Err(NetworkError::InvalidElement("shell count must be at least 1".into()));
    }
    if !(outer_radius > T::zero() && height > T::zero()) {
        return Err(NetworkError::InvalidElement("radius and height must be positive".into()));
    }
    let n = lit::<T>(count as f64);
    let radius = |k: usize| {
        if k == count {
            outer_radius
        } else {
            outer_radius * (lit::<T>(k as f64) / n).sqrt()
        }
    };
    Ok((0..count)
        .map(|k| HollowCylinderShell {
            r_inner: radius(k),
            r_outer: radius(k + 1),
            height,
        })
        .collect())
}

/// Resistance of the single azimuthal eddy-current turn in a shell, using
/// its mean radius: R = ρ·2π·r_mean / (h·(r_o − r_i)).
pub fn shell_eddy_resistance<T: Scalar>(
    shell: &HollowCylinderShell<T>,
    rho: T,
) -> Result<T, NetworkError> {
    let t = shell.thickness();
    if !(t > T::zero()) {
        return Err(NetworkError::InvalidElement("shell has zero wall thickness".into()));
    }
    if !(shell.height > T::zero() && rho > T::zero()) {
        return Err(NetworkError::InvalidElement("shell height and resistivity must be positive".into()));
    }
    let r_mean = (shell.r_inner + shell.r_outer) / lit(2.0);
    Ok(rho * lit::<T>(2.0) * T::PI() * r_mean / (shell.height * t))
}

/// Magnetic inductance L_m = 1/R_el of a shell (A·s/Wb, i.e. siemens).
pub fn shell_magnetic_inductance<T: Scalar>(
    shell: &HollowCylinderShell<T>,
    rho: T,
) -> Result<T, NetworkError> {
    shell_eddy_resistance(shell, rho).map(|r| T::one() / r)
}
