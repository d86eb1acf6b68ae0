use crate::magnetics::{stored_energy, MagneticElement};
use crate::mechanics::{contact_energy, damping_weight, spring_energy, MechanicalConfig};
use crate::scalar::{lit, Scalar};

use super::series::TimeSeries;
use super::{EnergyFlows, Model, Motion, SimState};

/// Power dissipated by stopper damping.
fn contact_damping_power<T: Scalar>(x: T, v: T, cfg: &MechanicalConfig<T>) -> T {
    let (delta, approach) = if x > cfg.x_max {
        (x - cfg.x_max, v.max(T::zero()))
    } else if x < cfg.x_min {
        (cfg.x_min - x, (-v).max(T::zero()))
    } else {
        return T::zero();
    };
    cfg.contact_d * damping_weight(delta, cfg).0 * approach * approach
}

/// Adds the energy flows of the step `s0 → s1` to `s0.energy`.
///
/// Element terms use the mean element MMF times the flux change, which
/// balances exactly against the coil term N·ī·ΔΦ because both potential
/// sets satisfy the network topology.
pub(crate) fn accumulate<T: Scalar>(model: &Model<T>, s0: &SimState<T>, s1: &SimState<T>) -> EnergyFlows<T> {
    let half = lit::<T>(0.5);
    let h = s1.t - s0.t;
    let net = &model.network;
    let n = lit::<T>(model.coil.turns as f64);
    let i_mid = (s0.i + s1.i) * half;
    let resistive = h * model.coil.resistance * (s0.i * s0.i + s1.i * s1.i) * half;
    let mut magnetic_in = T::zero();
    for &e in &net.source_elements() {
        magnetic_in += n * i_mid * (s1.fluxes[e] - s0.fluxes[e]);
    }
    let mut eddy = T::zero();
    for &e in &net.eddy_elements() {
        let b = &net.branches()[e];
        let d0 = s0.potentials[b.from] - s0.potentials[b.to];
        let d1 = s1.potentials[b.from] - s1.potentials[b.to];
        eddy += (d0 + d1) * half * (s1.fluxes[e] - s0.fluxes[e]);
    }
    let mut hysteresis = T::zero();
    for (slot, &e) in net.hysteresis_elements().iter().enumerate() {
        if let MagneticElement::HysteresisReluctance { geometry, .. } = &net.branches()[e].element {
            hysteresis += geometry.volume() * (s0.h[slot] + s1.h[slot]) * half * (s1.j[slot] - s0.j[slot]);
        }
    }
    let contact = match model.motion {
        Motion::Free => {
            h * (contact_damping_power(s0.x, s0.v, &model.mechanics)
                + contact_damping_power(s1.x, s1.v, &model.mechanics))
                * half
        }
        Motion::Fixed(_) => T::zero(),
    };
    let e = s0.energy;
    EnergyFlows {
        input: e.input + resistive + magnetic_in,
        resistive: e.resistive + resistive,
        eddy: e.eddy + eddy,
        hysteresis: e.hysteresis + hysteresis,
        contact: e.contact + contact,
    }
}

/// Energy held in the system at a state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Stores<T> {
    pub kinetic: T,
    pub spring: T,
    pub magnetic: T,
    pub contact: T,
}

pub(crate) fn stores<T: Scalar>(model: &Model<T>, s: &SimState<T>) -> Stores<T> {
    let mech = &model.mechanics;
    let free = model.motion == Motion::Free;
    Stores {
        kinetic: if free { mech.mass * s.v * s.v * lit(0.5) } else { T::zero() },
        spring: if free { spring_energy(s.x, mech) } else { T::zero() },
        magnetic: stored_energy(&model.network, &s.fluxes, s.x, &s.j),
        contact: if free { contact_energy(s.x, mech) } else { T::zero() },
    }
}

/// Energy balance of a run, all in J. Stored terms are changes between
/// the first and last sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger<T> {
    pub input: T,
    pub resistive_loss: T,
    pub eddy_loss: T,
    pub hysteresis_loss: T,
    pub contact_loss: T,
    pub kinetic: T,
    pub spring: T,
    pub magnetic_stored: T,
    pub contact_stored: T,
    /// input − losses − stored changes.
    pub residual: T,
}

impl<T: Scalar> EnergyLedger<T> {
    /// |residual| / input, or |residual| when nothing was put in.
    pub fn relative_residual(&self) -> T {
        if self.input.abs() > T::zero() {
            (self.residual / self.input).abs()
        } else {
            self.residual.abs()
        }
    }
}

/// Reads the energy channels of a series produced by `integrate`.
pub fn energy_ledger<T: Scalar>(series: &TimeSeries<T>) -> Result<EnergyLedger<T>, super::SeriesError> {
    let last = |name: &str| -> Result<T, super::SeriesError> {
        let c = series.require(name)?;
        Ok(c.last().copied().unwrap_or_else(T::zero))
    };
    let delta = |name: &str| -> Result<T, super::SeriesError> {
        let c = series.require(name)?;
        Ok(match (c.first(), c.last()) {
            (Some(a), Some(b)) => *b - *a,
            _ => T::zero(),
        })
    };
    let input = last("e_input")?;
    let resistive_loss = last("e_resistive")?;
    let eddy_loss = last("e_eddy")?;
    let hysteresis_loss = last("e_hysteresis")?;
    let contact_loss = last("e_contact_loss")?;
    let kinetic = delta("w_kinetic")?;
    let spring = delta("w_spring")?;
    let magnetic_stored = delta("w_magnetic")?;
    let contact_stored = delta("w_contact")?;
    let residual = input
        - resistive_loss
        - eddy_loss
        - hysteresis_loss
        - contact_loss
        - kinetic
        - spring
        - magnetic_stored
        - contact_stored;
    Ok(EnergyLedger {
        input,
        resistive_loss,
        eddy_loss,
        hysteresis_loss,
        contact_loss,
        kinetic,
        spring,
        magnetic_stored,
        contact_stored,
        residual,
    })
}
