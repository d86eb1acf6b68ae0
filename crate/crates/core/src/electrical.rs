//! Coil drive: setpoint waveform, current-controlled amplifier with a
//! voltage limiter across its output, and the coil itself.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid electrical configuration: {0}")]
pub struct ElectricalError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct AmplifierParams<T> {
    /// Limiter conductance outside the limiting voltage, in S.
    pub g: T,
    pub v0: T,
    pub d_v: T,
    pub b: T,
    /// Output current per unit setpoint, in A per A of setpoint.
    pub transconductance: T,
}

impl<T: Scalar> Default for AmplifierParams<T> {
    fn default() -> Self {
        Self::paper()
    }
}

impl<T: Scalar> AmplifierParams<T> {
    pub fn paper() -> Self {
        Self {
            g: lit(1e4),
            v0: lit(40.0),
            d_v: lit(0.01),
            b: lit(20.0),
            transconductance: T::one(),
        }
    }

    pub fn validate(&self) -> Result<(), ElectricalError> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(pos(self.g) && pos(self.v0) && pos(self.d_v) && pos(self.b) && pos(self.transconductance)) {
            return Err(ElectricalError("amplifier parameters must be positive".into()));
        }
        if !(self.b * self.d_v < self.v0) {
            return Err(ElectricalError("limiter transition overlaps zero (b·d_V ≥ V0)".into()));
        }
        Ok(())
    }

    fn inner_edge(&self) -> T {
        self.v0 - self.b * self.d_v
    }

    fn outer_edge(&self) -> T {
        self.v0 + self.b * self.d_v
    }
}

/// Limiter current divided by G, for a terminal voltage `v`.
pub fn limiter_current<T: Scalar>(v: T, p: &AmplifierParams<T>) -> T {
    let one = T::one();
    if v <= -p.outer_edge() || v >= p.outer_edge() {
        v / (one + (-p.b).exp())
    } else if v < -p.inner_edge() {
        v / (one + ((p.v0 + v) / p.d_v).exp())
    } else if v <= p.inner_edge() {
        v / (one + p.b.exp())
    } else {
        v / (one + ((p.v0 - v) / p.d_v).exp())
    }
}

/// d(I/G)/dV of [`limiter_current`], taken from the branch containing `v`.
pub fn limiter_slope<T: Scalar>(v: T, p: &AmplifierParams<T>) -> T {
    let one = T::one();
    if v <= -p.outer_edge() || v >= p.outer_edge() {
        one / (one + (-p.b).exp())
    } else if v.abs() <= p.inner_edge() {
        one / (one + p.b.exp())
    } else {
        // odd function: evaluate on the positive side
        let a = v.abs();
        let e = ((p.v0 - a) / p.d_v).exp();
        let den = one + e;
        one / den + a * e / (p.d_v * den * den)
    }
}

/// Voltage at which the limiter carries `y`·G. The limiter is strictly
/// increasing, so the inverse is unique.
pub fn limiter_inverse<T: Scalar>(y: T, p: &AmplifierParams<T>) -> T {
    let one = T::one();
    let a = y.abs();
    let low = p.inner_edge() / (one + p.b.exp());
    let high = p.outer_edge() / (one + (-p.b).exp());
    let mag = if a <= low {
        a * (one + p.b.exp())
    } else if a >= high {
        a * (one + (-p.b).exp())
    } else {
        // transition branch: safeguarded Newton on [inner, outer]
        let (mut lo, mut hi) = (p.inner_edge(), p.outer_edge());
        let mut v = p.v0;
        for _ in 0..100 {
            let f = limiter_current(v, p) - a;
            if f > T::zero() {
                hi = v;
            } else {
                lo = v;
            }
            let step = f / limiter_slope(v, p);
            let mut next = v - step;
            if !(next > lo && next < hi) {
                next = (lo + hi) / lit(2.0);
            }
            if (next - v).abs() <= lit::<T>(4.0) * T::epsilon() * p.v0 {
                v = next;
                break;
            }
            v = next;
        }
        v
    };
    if y < T::zero() {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct CoilParams<T> {
    pub turns: u32,
    pub resistance: T,
}

impl<T: Scalar> Default for CoilParams<T> {
    fn default() -> Self {
        Self::paper()
    }
}

impl<T: Scalar> CoilParams<T> {
    /// 131 turns, 0.75 Ω.
    pub fn paper() -> Self {
        Self {
            turns: 131,
            resistance: lit(0.75),
        }
    }

    pub fn validate(&self) -> Result<(), ElectricalError> {
        if self.turns == 0 {
            return Err(ElectricalError("coil needs at least one turn".into()));
        }
        if !(self.resistance >= T::zero()) {
            return Err(ElectricalError("coil resistance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilTerminal<T> {
    pub voltage: T,
    pub mmf: T,
}

/// Terminal voltage R·i + N·dΦ/dt and current linkage N·i.
pub fn coil_equations<T: Scalar>(i: T, dflux_dt: T, p: &CoilParams<T>) -> CoilTerminal<T> {
    let n = lit::<T>(p.turns as f64);
    CoilTerminal {
        voltage: p.resistance * i + n * dflux_dt,
        mmf: n * i,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    PiecewiseConstant,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveWaveform<T> {
    /// (t in s, setpoint) pairs with strictly increasing t.
    pub breakpoints: Vec<(T, T)>,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl<T: Scalar> DriveWaveform<T> {
    pub fn new(breakpoints: Vec<(T, T)>, interpolation: Interpolation) -> Result<Self, ElectricalError> {
        let w = Self {
            breakpoints,
            interpolation,
        };
        w.validate()?;
        Ok(w)
    }

    /// `level` from t = 0 until `t_off`, zero afterwards.
    pub fn square(level: T, t_off: T) -> Self {
        Self {
            breakpoints: vec![(T::zero(), level), (t_off, T::zero())],
            interpolation: Interpolation::PiecewiseConstant,
        }
    }

    pub fn validate(&self) -> Result<(), ElectricalError> {
        if self.breakpoints.is_empty() {
            return Err(ElectricalError("waveform needs at least one breakpoint".into()));
        }
        if self.breakpoints.iter().any(|(t, s)| !t.is_finite() || !s.is_finite()) {
            return Err(ElectricalError("waveform breakpoints must be finite".into()));
        }
        if self.breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(ElectricalError("waveform times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// First breakpoint time strictly after `t`.
    pub fn next_breakpoint(&self, t: T) -> Option<T> {
        self.breakpoints.iter().map(|b| b.0).find(|&tb| tb > t)
    }

    /// Time of the last transition to a zero setpoint, if any.
    pub fn switch_off_time(&self) -> Option<T> {
        self.breakpoints
            .windows(2)
            .rev()
            .find(|w| w[1].1 == T::zero() && w[0].1 != T::zero())
            .map(|w| w[1].0)
    }
}

/// Setpoint at time `t`. Before the first breakpoint the first value holds.
pub fn drive_setpoint<T: Scalar>(w: &DriveWaveform<T>, t: T) -> T {
    let bp = &w.breakpoints;
    let k = bp.partition_point(|b| b.0 <= t);
    if k == 0 {
        return bp[0].1;
    }
    let (t0, s0) = bp[k - 1];
    match (w.interpolation, bp.get(k)) {
        (Interpolation::Linear, Some(&(t1, s1))) => s0 + (s1 - s0) * (t - t0) / (t1 - t0),
        _ => s0,
    }
}

/// Left limit of the setpoint at `t`: a step scheduled exactly at `t` has
/// not happened yet. Time steps ending on a breakpoint use this value.
pub fn drive_setpoint_left<T: Scalar>(w: &DriveWaveform<T>, t: T) -> T {
    let bp = &w.breakpoints;
    let k = bp.partition_point(|b| b.0 < t);
    if k == 0 {
        return bp[0].1;
    }
    let (t0, s0) = bp[k - 1];
    match (w.interpolation, bp.get(k)) {
        (Interpolation::Linear, Some(&(t1, s1))) => s0 + (s1 - s0) * (t - t0) / (t1 - t0),
        _ => s0,
    }
}

/// How the coil is driven.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveMode<T> {
    /// Current-controlled amplifier with the output voltage limiter.
    Amplifier(AmplifierParams<T>),
    /// The setpoint is the coil terminal voltage.
    Voltage,
    /// The setpoint is the coil current.
    Current,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn limiter_examples() {
        let p = AmplifierParams::<f64>::paper();
        assert_eq!(limiter_current(0.0, &p), 0.0);
        assert_relative_eq!(limiter_current(40.0, &p), 20.0, max_relative = 1e-15);
        assert_relative_eq!(limiter_current(50.0, &p), 50.0 * (1.0 - 2.06e-9), max_relative = 1e-11);
        assert_relative_eq!(limiter_current(-40.0, &p), -20.0, max_relative = 1e-15);
    }

    #[test]
    fn limiter_is_continuous_at_region_edges() {
        let p = AmplifierParams::<f64>::paper();
        for edge in [-40.2, -39.8, 39.8, 40.2] {
            let eps = 1e-12;
            let a = limiter_current(edge - eps, &p);
            let b = limiter_current(edge + eps, &p);
            assert!((a - b).abs() <= 1e-9 * edge.abs(), "edge {edge}: {a} vs {b}");
        }
    }

    #[test]
    fn limiter_slope_ratio() {
        let p = AmplifierParams::<f64>::paper();
        let ratio = limiter_slope(60.0, &p) / limiter_slope(1.0, &p);
        let expect = (1.0 + 20f64.exp()) / (1.0 + (-20f64).exp());
        assert_relative_eq!(ratio, expect, max_relative = 1e-12);
        assert_relative_eq!(ratio, 20f64.exp(), max_relative = 1e-6);
    }

    #[test]
    fn limiter_inverse_round_trips() {
        let p = AmplifierParams::<f64>::paper();
        for v in [-80.0, -40.15, -40.0, -39.95, -10.0, 0.0, 1e-3, 20.0, 39.81, 40.0, 40.03, 40.19, 41.0, 300.0] {
            let back = limiter_inverse(limiter_current(v, &p), &p);
            assert_relative_eq!(back, v, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn coil_examples() {
        let p = CoilParams::<f64>::paper();
        let c = coil_equations(6.1, 0.0, &p);
        assert_relative_eq!(c.mmf, 799.1, max_relative = 1e-12);
        assert!((c.mmf - 800.0).abs() / 800.0 < 2e-3);
        let z = coil_equations(0.0, 0.0, &p);
        assert_eq!((z.voltage, z.mmf), (0.0, 0.0));
        let c = coil_equations(8.0, 0.0, &p);
        assert_relative_eq!(c.voltage, 6.0, max_relative = 1e-12);
        assert_relative_eq!(c.mmf, 1048.0, max_relative = 1e-12);
        let c = coil_equations(0.0, 1e-3, &p);
        assert_relative_eq!(c.voltage, 0.131, max_relative = 1e-12);
    }

    #[test]
    fn setpoint_examples() {
        let w = DriveWaveform::new(vec![(0.0, 8.0), (0.002, 0.0)], Interpolation::PiecewiseConstant).unwrap();
        assert_eq!(drive_setpoint(&w, 0.001), 8.0);
        assert_eq!(drive_setpoint(&w, 0.003), 0.0);
        assert_eq!(drive_setpoint(&w, -1.0), 8.0);
        assert_eq!(drive_setpoint(&w, 0.002), 0.0);
        assert_eq!(drive_setpoint_left(&w, 0.002), 8.0);
        assert_eq!(drive_setpoint_left(&w, 0.0021), 0.0);
        assert_eq!(w.switch_off_time(), Some(0.002));
        let lin = DriveWaveform::new(vec![(0.0, 0.0), (1.0, 2.0)], Interpolation::Linear).unwrap();
        assert_eq!(drive_setpoint(&lin, 0.25), 0.5);
        assert_eq!(drive_setpoint(&lin, 5.0), 2.0);
        assert!(DriveWaveform::new(vec![(0.0, 1.0), (0.0, 2.0)], Interpolation::Linear).is_err());
    }
}
