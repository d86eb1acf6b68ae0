use crate::electrical::drive_setpoint;
use crate::magnetics::MagneticElement;
use crate::scalar::{lit, mu0, to_f64, Scalar};

use super::energy::{accumulate, stores};
use super::series::TimeSeries;
use super::system::{hysteresis_fields, initial_state, raw_step};
use super::{Model, SimState, SolverConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_failures: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

#[derive(Debug, Clone)]
pub struct Integration<T> {
    pub series: TimeSeries<T>,
    pub final_state: SimState<T>,
    pub stats: IntegrationStats,
}

/// Which elements feed the derived channels.
struct Layout {
    shells: Vec<(usize, usize)>,
    eddies: Vec<(usize, usize)>,
    inner_pole: Option<usize>,
    gap: Option<usize>,
    hysteresis: Vec<(usize, String)>,
}

fn numbered(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok()
}

impl Layout {
    fn new<T: Scalar>(model: &Model<T>) -> Self {
        let net = &model.network;
        let mut shells = Vec::new();
        let mut eddies = Vec::new();
        for (e, b) in net.branches().iter().enumerate() {
            match b.element {
                MagneticElement::NonlinearReluctance { .. } => {
                    if let Some(k) = numbered(&b.name, "shell_") {
                        shells.push((k, e));
                    }
                }
                MagneticElement::EddyElement { .. } => {
                    if let Some(k) = numbered(&b.name, "eddy_") {
                        eddies.push((k, e));
                    }
                }
                _ => {}
            }
        }
        shells.sort();
        eddies.sort();
        Self {
            shells,
            eddies,
            inner_pole: net.find("inner_pole"),
            gap: net.gap_elements().first().copied(),
            hysteresis: net
                .hysteresis_elements()
                .iter()
                .map(|&e| (e, net.branches()[e].name.clone()))
                .collect(),
        }
    }

    fn names(&self) -> Vec<String> {
        let mut n: Vec<String> = ["t", "x", "v", "gap", "i", "i_set", "voltage", "force", "b_gap", "b_eff"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        n.extend(self.shells.iter().map(|(k, _)| format!("b_shell_{k}")));
        n.extend(self.eddies.iter().map(|(k, _)| format!("i_eddy_{k}")));
        for (_, name) in &self.hysteresis {
            n.push(format!("h_{name}"));
            n.push(format!("j_{name}"));
        }
        n.extend(
            [
                "e_input",
                "e_resistive",
                "e_eddy",
                "e_hysteresis",
                "e_contact_loss",
                "w_kinetic",
                "w_spring",
                "w_magnetic",
                "w_contact",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        n
    }

    fn row<T: Scalar>(&self, model: &Model<T>, s: &SimState<T>) -> Vec<T> {
        let net = &model.network;
        let area = |e: usize| net.branches()[e].element.area().unwrap_or_else(T::one);
        let b_gap = self.gap.map_or(T::zero(), |e| s.fluxes[e] / area(e));
        let b_eff = if !self.shells.is_empty() {
            let phi: T = self.shells.iter().map(|&(_, e)| s.fluxes[e]).sum();
            let a: T = self.shells.iter().map(|&(_, e)| area(e)).sum();
            phi / a
        } else if let Some(e) = self.inner_pole {
            s.fluxes[e] / area(e)
        } else {
            b_gap
        };
        let mut r = vec![
            s.t,
            s.x,
            s.v,
            s.x,
            s.i,
            drive_setpoint(&model.waveform, s.t),
            s.voltage,
            s.force,
            b_gap,
            b_eff,
        ];
        r.extend(self.shells.iter().map(|&(_, e)| s.fluxes[e] / area(e)));
        r.extend(self.eddies.iter().map(|&(_, e)| {
            let b = &net.branches()[e];
            s.potentials[b.from] - s.potentials[b.to]
        }));
        for (slot, _) in self.hysteresis.iter().enumerate() {
            r.push(s.h[slot]);
            r.push(s.j[slot]);
        }
        let st = stores(model, s);
        r.extend([
            s.energy.input,
            s.energy.resistive,
            s.energy.eddy,
            s.energy.hysteresis,
            s.energy.contact,
            st.kinetic,
            st.spring,
            st.magnetic,
            st.contact,
        ]);
        r
    }
}

/// Weighted max-norm of the difference between two candidate states.
fn error_norm<T: Scalar>(a: &SimState<T>, b: &SimState<T>, cfg: &SolverConfig<T>) -> f64 {
    let term = |p: T, q: T, atol: T| to_f64((p - q).abs() / (atol + cfg.rel_tol * p.abs().max(q.abs())));
    let mut err = term(a.x, b.x, cfg.abs_tol_x)
        .max(term(a.v, b.v, cfg.abs_tol_v))
        .max(term(a.i, b.i, cfg.abs_tol_i));
    for (p, q) in a.fluxes.iter().zip(&b.fluxes) {
        err = err.max(term(*p, *q, cfg.abs_tol_flux));
    }
    err
}

/// Richardson combination 2·fine − coarse of the continuous unknowns.
///
/// Hysteretic members get H from the combined potentials and J from the
/// combined flux, so the state stays consistent with B = J + μ0·H; only
/// the sweep direction comes from the fine path.
fn extrapolate<T: Scalar>(model: &Model<T>, coarse: &SimState<T>, fine: &SimState<T>) -> SimState<T> {
    let two = lit::<T>(2.0);
    let comb = |c: T, f: T| two * f - c;
    let fluxes: Vec<T> = coarse.fluxes.iter().zip(&fine.fluxes).map(|(c, f)| comb(*c, *f)).collect();
    let potentials: Vec<T> = coarse
        .potentials
        .iter()
        .zip(&fine.potentials)
        .map(|(c, f)| comb(*c, *f))
        .collect();
    let net = &model.network;
    let h = hysteresis_fields(model, &potentials);
    let j = net
        .hysteresis_elements()
        .iter()
        .zip(&h)
        .map(|(&e, &hk)| match &net.branches()[e].element {
            MagneticElement::HysteresisReluctance { geometry, table } => {
                table.clamp_state(hk, fluxes[e] / geometry.area - mu0::<T>() * hk)
            }
            _ => unreachable!("slot maps to hysteresis element"),
        })
        .collect();
    SimState {
        t: fine.t,
        x: comb(coarse.x, fine.x),
        v: comb(coarse.v, fine.v),
        i: comb(coarse.i, fine.i),
        force: net.force(&fluxes),
        fluxes,
        potentials,
        h,
        j,
        direction: fine.direction.clone(),
        voltage: comb(coarse.voltage, fine.voltage),
        energy: fine.energy,
    }
}

/// Integrates from the model's initial state to `t_end`.
pub fn integrate<T: Scalar>(model: &Model<T>, t_end: T, cfg: &SolverConfig<T>) -> Result<Integration<T>, SolverError> {
    integrate_until(model, t_end, cfg, |_| false)
}

/// Like [`integrate`] but stops early once `stop` returns true for an
/// accepted state.
pub fn integrate_until<T: Scalar, F: FnMut(&SimState<T>) -> bool>(
    model: &Model<T>,
    t_end: T,
    cfg: &SolverConfig<T>,
    mut stop: F,
) -> Result<Integration<T>, SolverError> {
    cfg.validate()?;
    if !(t_end >= T::zero()) {
        return Err(SolverError::Config("t_end must be non-negative".into()));
    }
    let layout = Layout::new(model);
    let mut series = TimeSeries::new(layout.names());
    let mut s = initial_state(model)?;
    let mut prev_row = layout.row(model, &s);
    series.push_row(&prev_row).expect("row width");
    let mut stats = IntegrationStats {
        min_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut out_k: usize = 1;
    let mut h = cfg.dt_init;

    while s.t < t_end {
        let limit = match model.waveform.next_breakpoint(s.t) {
            Some(tb) if tb < t_end => tb,
            _ => t_end,
        };
        let remaining = limit - s.t;
        let mut h_try = h.min(cfg.dt_max);
        if remaining <= h_try * lit(1.0001) {
            h_try = remaining;
        } else if remaining < h_try * lit(2.0) {
            h_try = remaining / lit(2.0);
        }
        let half = h_try / lit(2.0);
        let attempt = raw_step(model, &s, h_try, cfg).and_then(|coarse| {
            let mid = raw_step(model, &s, half, cfg)?;
            let mut fine = raw_step(model, &mid, h_try - half, cfg)?;
            fine.t = s.t + h_try;
            Ok((coarse, fine))
        });
        let (coarse, fine) = match attempt {
            Ok(pair) => pair,
            Err(SolverError::Newton { .. }) => {
                stats.newton_failures += 1;
                h = h_try / lit(4.0);
                if h < cfg.dt_min {
                    return Err(SolverError::StepTooSmall {
                        t: to_f64(s.t),
                        dt: to_f64(h),
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let err = error_norm(&coarse, &fine, cfg);
        let factor = if err > 0.0 { 0.9 * err.powf(-0.5) } else { 2.0 };
        if !(err <= 1.0) {
            stats.rejected += 1;
            h = h_try * lit(factor.clamp(0.2, 0.9));
            if h < cfg.dt_min {
                return Err(SolverError::StepTooSmall {
                    t: to_f64(s.t),
                    dt: to_f64(h),
                });
            }
            continue;
        }
        let mut next = if cfg.extrapolate {
            extrapolate(model, &coarse, &fine)
        } else {
            fine
        };
        if next.t >= limit || (limit - next.t) < cfg.dt_min {
            next.t = limit;
        }
        next.energy = accumulate(model, &s, &next);
        stats.accepted += 1;
        stats.min_dt = stats.min_dt.min(to_f64(h_try));
        stats.max_dt = stats.max_dt.max(to_f64(h_try));

        let row = layout.row(model, &next);
        let (t0, t1) = (s.t, next.t);
        loop {
            let tau = cfg.output_stride * lit(out_k as f64);
            if tau > t1 || tau > t_end {
                break;
            }
            let w = (tau - t0) / (t1 - t0);
            let r: Vec<T> = prev_row.iter().zip(&row).map(|(a, b)| *a + w * (*b - *a)).collect();
            let mut r = r;
            r[0] = tau;
            series.push_row(&r).expect("row width");
            out_k += 1;
        }
        prev_row = row;
        let at_breakpoint = next.t == limit && limit < t_end;
        s = next;
        h = if at_breakpoint {
            cfg.dt_init
        } else {
            h_try * lit(factor.clamp(0.2, 2.0))
        };
        if stop(&s) {
            break;
        }
    }
    let last_t = *series.column("t").and_then(|c| c.last()).expect("first row");
    if s.t > last_t {
        series.push_row(&prev_row).expect("row width");
    }
    if stats.accepted == 0 {
        stats.min_dt = 0.0;
    }
    Ok(Integration {
        series,
        final_state: s,
        stats,
    })
}
