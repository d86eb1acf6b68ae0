//! Armature translation: mass, return spring and penalty stoppers.
//!
//! The stroke coordinate `x` is the working air-gap length. Positive `x`
//! opens the gap, so the return spring pushes toward larger `x` and the
//! magnetic force acts toward smaller `x`.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct MechanicalConfig<T> {
    pub mass: T,
    pub spring_rate: T,
    /// Coordinate at which the spring is unstressed.
    pub spring_unstressed: T,
    /// Closed stop, the residual air gap.
    pub x_min: T,
    /// Open stop.
    pub x_max: T,
    pub contact_c: T,
    pub contact_d: T,
    pub contact_n: T,
    /// Penetration over which the damping ramps up to its full value
    /// d·(approach speed). A depth of 1 m gives the plain d·δ·v law.
    pub contact_damping_depth: T,
}


impl<T: Scalar> Default for MechanicalConfig<T> {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid mechanical configuration: {0}")]
pub struct MechanicsError(pub String);

impl<T: Scalar> MechanicalConfig<T> {
    /// Test actuator: 19.9 g armature, 785.4 N/m spring, 1 µm residual gap.
    pub fn paper() -> Self {
        Self {
            mass: lit(0.0199),
            spring_rate: lit(785.4),
            spring_unstressed: lit(0.02701),
            x_min: lit(1e-6),
            x_max: lit(0.000527),
            contact_c: lit(1e17),
            contact_d: lit(1e5),
            contact_n: lit(2.0),
            contact_damping_depth: lit(1e-9),
        }
    }

    pub fn validate(&self) -> Result<(), MechanicsError> {
        let bad = |m: &str| Err(MechanicsError(m.into()));
        if !(self.mass > T::zero()) {
            return bad("mass must be positive");
        }
        if !(self.spring_rate > T::zero()) {
            return bad("spring rate must be positive");
        }
        if !(self.x_min < self.x_max) {
            return bad("x_min must be below x_max");
        }
        if !(self.x_min > T::zero()) {
            return bad("x_min (residual gap) must be positive");
        }
        if !(self.contact_c >= T::zero() && self.contact_d >= T::zero()) {
            return bad("contact parameters must be non-negative");
        }
        if !(self.contact_damping_depth > T::zero()) {
            return bad("contact damping depth must be positive");
        }
        if !(self.contact_n >= T::one()) {
            return bad("contact exponent must be at least 1");
        }
        Ok(())
    }

    pub fn stroke(&self) -> T {
        self.x_max - self.x_min
    }
}

/// Return-spring force along +x: k·(x_u − x).
pub fn spring_force<T: Scalar>(x: T, cfg: &MechanicalConfig<T>) -> T {
    cfg.spring_rate * (cfg.spring_unstressed - x)
}

pub fn spring_energy<T: Scalar>(x: T, cfg: &MechanicalConfig<T>) -> T {
    let s = cfg.spring_unstressed - x;
    cfg.spring_rate * s * s / lit(2.0)
}

/// Penetration beyond a stop and the direction that pushes back into range.
fn penetration<T: Scalar>(x: T, cfg: &MechanicalConfig<T>) -> (T, T) {
    if x > cfg.x_max {
        (x - cfg.x_max, -T::one())
    } else if x < cfg.x_min {
        (cfg.x_min - x, T::one())
    } else {
        (T::zero(), T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForce<T> {
    pub force: T,
    pub d_dx: T,
    pub d_dv: T,
}

/// Damping weight min(δ, δ_d)/δ_d and its derivative in δ.
pub(crate) fn damping_weight<T: Scalar>(delta: T, cfg: &MechanicalConfig<T>) -> (T, T) {
    let depth = cfg.contact_damping_depth;
    if delta < depth {
        (delta / depth, T::one() / depth)
    } else {
        (T::one(), T::zero())
    }
}

/// Stopper force with partial derivatives.
///
/// Beyond a stop the force is c·δⁿ plus d·w(δ)·(approach speed), directed
/// back into the stroke range, where w ramps linearly from 0 to 1 over the
/// damping depth. The damping part only acts while the armature moves
/// further into the stop.
pub fn contact_force_partials<T: Scalar>(x: T, v: T, cfg: &MechanicalConfig<T>) -> ContactForce<T> {
    let (delta, dir) = penetration(x, cfg);
    if delta <= T::zero() {
        return ContactForce {
            force: T::zero(),
            d_dx: T::zero(),
            d_dv: T::zero(),
        };
    }
    // approach speed is positive when moving deeper into the stop
    let approach = (-dir * v).max(T::zero());
    let n = cfg.contact_n;
    let elastic = cfg.contact_c * delta.powf(n);
    let (w, dw) = damping_weight(delta, cfg);
    let damping = cfg.contact_d * w * approach;
    // dδ/dx = −dir
    let d_elastic = cfg.contact_c * n * delta.powf(n - T::one());
    let d_damp_ddelta = cfg.contact_d * dw * approach;
    let d_damp_dv = if approach > T::zero() {
        cfg.contact_d * w * (-dir)
    } else {
        T::zero()
    };
    ContactForce {
        force: dir * (elastic + damping),
        d_dx: dir * (d_elastic + d_damp_ddelta) * (-dir),
        d_dv: dir * d_damp_dv,
    }
}

pub fn contact_force<T: Scalar>(x: T, v: T, cfg: &MechanicalConfig<T>) -> T {
    contact_force_partials(x, v, cfg).force
}

/// Elastic energy c·δⁿ⁺¹/(n+1) held in a stop.
pub fn contact_energy<T: Scalar>(x: T, cfg: &MechanicalConfig<T>) -> T {
    let (delta, _) = penetration(x, cfg);
    if delta <= T::zero() {
        return T::zero();
    }
    let n1 = cfg.contact_n + T::one();
    cfg.contact_c * delta.powf(n1) / n1
}

/// Newton's second law; `magnetic_force` is along +x, so an attracting
/// magnet contributes a negative value.
pub fn acceleration<T: Scalar>(x: T, v: T, magnetic_force: T, cfg: &MechanicalConfig<T>) -> T {
    (magnetic_force + spring_force(x, cfg) + contact_force(x, v, cfg)) / cfg.mass
}

/// Equilibrium against the open stop with no magnetic force.
pub fn rest_position<T: Scalar>(cfg: &MechanicalConfig<T>) -> T {
    let push = spring_force(cfg.x_max, cfg);
    if push <= T::zero() || cfg.contact_c <= T::zero() {
        return cfg.x_max;
    }
    let mut x = cfg.x_max + (push / cfg.contact_c).powf(T::one() / cfg.contact_n);
    // the spring relaxes slightly as the stop compresses
    for _ in 0..20 {
        let f = spring_force(x, cfg) + contact_force(x, T::zero(), cfg);
        let df = -cfg.spring_rate + contact_force_partials(x, T::zero(), cfg).d_dx;
        x -= f / df;
    }
    x
}
