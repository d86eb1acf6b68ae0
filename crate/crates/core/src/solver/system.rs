use crate::electrical::{drive_setpoint, drive_setpoint_left, limiter_inverse, limiter_slope, DriveMode};
use crate::linalg::DenseMatrix;
use crate::magnetics::{
    solve_magnetics, Columns, EddyMode, HysteresisMode, MagneticElement, Operating, StaticInput,
};
use crate::material::{tellinen_slope, Direction};
use crate::mechanics::{contact_force_partials, rest_position, spring_force};
use crate::newton::{newton_solve, NewtonOptions, NonlinearSystem};
use crate::scalar::{lit, mu0, Scalar};

use super::energy::accumulate;
use super::{EnergyFlows, Model, Motion, SimState, SolverConfig, SolverError};

const IX: usize = 0;
const IV: usize = 1;
const II: usize = 2;
const IPHI: usize = 3;

fn turns<T: Scalar>(model: &Model<T>) -> T {
    lit(model.coil.turns as f64)
}

/// Consistent start: armature at rest, demagnetized iron, fluxes from a
/// magnetostatic solve at the initial current.
pub(crate) fn initial_state<T: Scalar>(model: &Model<T>) -> Result<SimState<T>, SolverError> {
    model.validate()?;
    let net = &model.network;
    let x = match model.motion {
        Motion::Fixed(x) => x,
        Motion::Free => model.initial.x.unwrap_or_else(|| rest_position(&model.mechanics)),
    };
    let v = match model.motion {
        Motion::Fixed(_) => T::zero(),
        Motion::Free => model.initial.v,
    };
    let i = match model.drive {
        DriveMode::Current => drive_setpoint(&model.waveform, T::zero()),
        _ => model.initial.current,
    };
    let sol = solve_magnetics(net, &StaticInput::new(net, i, x))?;
    let h = hysteresis_fields(model, &sol.potentials);
    let slots = h.len();
    Ok(SimState {
        t: T::zero(),
        x,
        v,
        i,
        fluxes: sol.fluxes,
        potentials: sol.potentials,
        h,
        j: vec![T::zero(); slots],
        direction: vec![Direction::Hold; slots],
        force: sol.force,
        voltage: model.coil.resistance * i,
        energy: EnergyFlows::default(),
    })
}

pub(crate) fn hysteresis_fields<T: Scalar>(model: &Model<T>, potentials: &[T]) -> Vec<T> {
    let net = &model.network;
    net.hysteresis_elements()
        .iter()
        .map(|&e| {
            let b = &net.branches()[e];
            match &b.element {
                MagneticElement::HysteresisReluctance { geometry, .. } => {
                    (potentials[b.from] - potentials[b.to]) / geometry.length
                }
                _ => unreachable!("slot maps to hysteresis element"),
            }
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum HystTreatment {
    Implicit,
    Linearized,
}

struct StepSystem<'a, T> {
    model: &'a Model<T>,
    prev: &'a SimState<T>,
    h: T,
    setpoint: T,
    treatment: HystTreatment,
    slopes: Vec<T>,
    sources: Vec<usize>,
    gaps: Vec<(usize, T)>,
}

impl<T: Scalar> NonlinearSystem<T> for StepSystem<'_, T> {
    fn dim(&self) -> usize {
        IPHI + self.model.network.unknown_count()
    }

    fn eval(&mut self, y: &[T], r: &mut [T], mut jac: Option<&mut DenseMatrix<T>>) {
        let model = self.model;
        let mech = &model.mechanics;
        let prev = self.prev;
        let h = self.h;
        let (x, v, i) = (y[IX], y[IV], y[II]);
        let m = model.network.len();

        match model.motion {
            Motion::Free => {
                r[IX] = x - prev.x - h * v;
                let contact = contact_force_partials(x, v, mech);
                let mut f_mag = T::zero();
                for &(e, area) in &self.gaps {
                    let phi = y[IPHI + e];
                    f_mag -= phi * phi / (lit::<T>(2.0) * mu0::<T>() * area);
                }
                r[IV] = mech.mass * (v - prev.v) - h * (spring_force(x, mech) + contact.force + f_mag);
                if let Some(j) = jac.as_deref_mut() {
                    j.add(IX, IX, T::one());
                    j.add(IX, IV, -h);
                    j.add(IV, IX, -h * (-mech.spring_rate + contact.d_dx));
                    j.add(IV, IV, mech.mass - h * contact.d_dv);
                    for &(e, area) in &self.gaps {
                        j.add(IV, IPHI + e, h * y[IPHI + e] / (mu0::<T>() * area));
                    }
                }
            }
            Motion::Fixed(xf) => {
                r[IX] = x - xf;
                r[IV] = v;
                if let Some(j) = jac.as_deref_mut() {
                    j.add(IX, IX, T::one());
                    j.add(IV, IV, T::one());
                }
            }
        }

        let n = turns(model);
        let mut dlink = T::zero();
        for &e in &self.sources {
            dlink += y[IPHI + e] - prev.fluxes[e];
        }
        let induced = n * dlink / h;
        let res = model.coil.resistance;
        match model.drive {
            DriveMode::Amplifier(p) => {
                let target = p.transconductance * self.setpoint;
                let vout = limiter_inverse((target - i) / p.g, &p);
                r[II] = vout - res * i - induced;
                if let Some(j) = jac.as_deref_mut() {
                    j.add(II, II, -T::one() / (p.g * limiter_slope(vout, &p)) - res);
                }
            }
            DriveMode::Voltage => {
                r[II] = self.setpoint - res * i - induced;
                if let Some(j) = jac.as_deref_mut() {
                    j.add(II, II, -res);
                }
            }
            DriveMode::Current => {
                r[II] = i - self.setpoint;
                if let Some(j) = jac.as_deref_mut() {
                    j.add(II, II, T::one());
                }
            }
        }
        if !matches!(model.drive, DriveMode::Current) {
            if let Some(j) = jac.as_deref_mut() {
                for &e in &self.sources {
                    j.add(II, IPHI + e, -n / h);
                }
            }
        }

        let hyst = match self.treatment {
            HystTreatment::Implicit => HysteresisMode::Implicit {
                h_prev: &prev.h,
                j_prev: &prev.j,
            },
            HystTreatment::Linearized => HysteresisMode::Linearized {
                h_prev: &prev.h,
                j_prev: &prev.j,
                slopes: &self.slopes,
            },
        };
        let op = Operating {
            x,
            current: i,
            eddy: EddyMode::Implicit {
                phi_prev: &prev.fluxes,
                inv_dt: T::one() / h,
            },
            hysteresis: hyst,
        };
        let cols = Columns {
            phi: IPHI,
            u: IPHI + m,
            current: Some(II),
            x: Some(IX),
            row: IPHI,
        };
        model.network.assemble(&op, &cols, y, r, jac);
    }
}

/// Newton weights: absolute plus relative tolerance per unknown.
fn weights<T: Scalar>(model: &Model<T>, s: &SimState<T>, cfg: &SolverConfig<T>) -> Vec<T> {
    let m = model.network.len();
    let mut w = Vec::with_capacity(IPHI + model.network.unknown_count());
    w.push(cfg.abs_tol_x + cfg.rel_tol * s.x.abs());
    w.push(cfg.abs_tol_v + cfg.rel_tol * s.v.abs());
    w.push(cfg.abs_tol_i + cfg.rel_tol * s.i.abs());
    for e in 0..m {
        w.push(cfg.abs_tol_flux + cfg.rel_tol * s.fluxes[e].abs());
    }
    let u_abs = cfg.abs_tol_i * turns(model);
    for p in &s.potentials[1..] {
        w.push(u_abs + cfg.rel_tol * p.abs());
    }
    w
}

/// One backward-Euler step without error control. Energy flows are not
/// updated.
pub(crate) fn raw_step<T: Scalar>(
    model: &Model<T>,
    prev: &SimState<T>,
    h: T,
    cfg: &SolverConfig<T>,
) -> Result<SimState<T>, SolverError> {
    let net = &model.network;
    let m = net.len();
    let setpoint = drive_setpoint_left(&model.waveform, prev.t + h);
    let mut sys = StepSystem {
        model,
        prev,
        h,
        setpoint,
        treatment: HystTreatment::Implicit,
        slopes: Vec::new(),
        sources: net.source_elements(),
        gaps: net
            .gap_elements()
            .into_iter()
            .map(|e| (e, net.branches()[e].element.area().expect("gap area")))
            .collect(),
    };
    let mut y0 = Vec::with_capacity(sys.dim());
    y0.extend_from_slice(&[prev.x, prev.v, prev.i]);
    y0.extend_from_slice(&prev.fluxes);
    y0.extend_from_slice(&prev.potentials[1..]);
    let w = weights(model, prev, cfg);
    let opts = NewtonOptions {
        max_iter: cfg.newton_max_iter,
        tol: lit(1e-2),
        max_backtracks: 10,
    };
    let mut y = y0.clone();
    let mut result = newton_solve(&mut sys, &mut y, &w, opts);
    if result.is_err() && !net.hysteresis_elements().is_empty() {
        // branch chatter: retry with the slope frozen at the step start
        sys.treatment = HystTreatment::Linearized;
        sys.slopes = net
            .hysteresis_elements()
            .iter()
            .enumerate()
            .map(|(slot, &e)| match &net.branches()[e].element {
                MagneticElement::HysteresisReluctance { table, .. } => {
                    tellinen_slope(table, prev.h[slot], prev.j[slot], prev.direction[slot]).slope
                }
                _ => unreachable!(),
            })
            .collect();
        y.copy_from_slice(&y0);
        result = newton_solve(&mut sys, &mut y, &w, opts);
    }
    result.map_err(|source| SolverError::Newton {
        t: crate::scalar::to_f64(prev.t + h),
        source,
    })?;

    let mut potentials = vec![T::zero(); net.node_count()];
    potentials[1..].copy_from_slice(&y[IPHI + m..]);
    let fluxes = y[IPHI..IPHI + m].to_vec();
    let hs = hysteresis_fields(model, &potentials);
    let mut js = Vec::with_capacity(hs.len());
    let mut dirs = Vec::with_capacity(hs.len());
    for (slot, &e) in net.hysteresis_elements().iter().enumerate() {
        let table = match &net.branches()[e].element {
            MagneticElement::HysteresisReluctance { table, .. } => table,
            _ => unreachable!(),
        };
        let j = match sys.treatment {
            HystTreatment::Implicit => crate::material::advance_state(table, prev.h[slot], prev.j[slot], hs[slot]),
            HystTreatment::Linearized => {
                table.clamp_state(hs[slot], prev.j[slot] + sys.slopes[slot] * (hs[slot] - prev.h[slot]))
            }
        };
        js.push(j);
        let d = Direction::of(hs[slot] - prev.h[slot]);
        dirs.push(if d == Direction::Hold { prev.direction[slot] } else { d });
    }
    let mut dlink = T::zero();
    for &e in &sys.sources {
        dlink += fluxes[e] - prev.fluxes[e];
    }
    let i = y[II];
    Ok(SimState {
        t: prev.t + h,
        x: y[IX],
        v: y[IV],
        i,
        force: net.force(&fluxes),
        voltage: model.coil.resistance * i + turns(model) * dlink / h,
        fluxes,
        potentials,
        h: hs,
        j: js,
        direction: dirs,
        energy: prev.energy,
    })
}

/// Advances `state` by one implicit step of size `dt`.
pub fn step<T: Scalar>(
    model: &Model<T>,
    state: &SimState<T>,
    dt: T,
    cfg: &SolverConfig<T>,
) -> Result<SimState<T>, SolverError> {
    cfg.validate()?;
    if !(dt >= cfg.dt_min && dt <= cfg.dt_max) {
        return Err(SolverError::Config("dt outside [dt_min, dt_max]".into()));
    }
    let mut next = raw_step(model, state, dt, cfg)?;
    next.energy = accumulate(model, state, &next);
    Ok(next)
}
