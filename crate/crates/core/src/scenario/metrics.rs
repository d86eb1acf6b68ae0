//! Switching metrics extracted from recorded series.

use serde::{Deserialize, Serialize};

use crate::scalar::mu0;
use crate::solver::{SeriesError, TimeSeries};

/// Stops and thresholds needed to read a gap trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapThresholds {
    pub x_min: f64,
    pub x_max: f64,
    pub closed_tolerance: f64,
    pub open_fraction: f64,
}

impl GapThresholds {
    pub fn closed_level(&self) -> f64 {
        self.x_min + self.closed_tolerance
    }

    pub fn open_level(&self) -> f64 {
        self.x_min + self.open_fraction * (self.x_max - self.x_min)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closing_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opening_time: Option<f64>,
    /// Opening time minus the reference run's opening time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opening_delay: Option<f64>,
    pub latched: bool,
    /// Time for each shell, outermost first, to reach the settle fraction of
    /// its switch-on flux density.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub shell_settling_times: Vec<f64>,
    /// Time after switch-off for the innermost shell's flux density to
    /// fall below the decay fraction of its switch-off value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_decay_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_residual: Option<f64>,
}

/// All single-run metrics of one series. `opening_delay` is left empty;
/// it needs a reference run.
pub fn series_metrics(
    series: &TimeSeries<f64>,
    th: &GapThresholds,
    t_off: f64,
    settle_fraction: f64,
    decay_fraction: f64,
) -> Result<RunMetrics, SeriesError> {
    series.require_all(&["t", "gap"])?;
    let switched_off = t_off.is_finite();
    Ok(RunMetrics {
        closing_time: closing_time(series, th)?,
        opening_time: opening_time(series, th, t_off)?,
        opening_delay: None,
        latched: is_latched(series, th, t_off)?,
        shell_settling_times: if switched_off {
            shell_settling_times(series, t_off, settle_fraction)?
        } else {
            Vec::new()
        },
        inner_decay_time: if switched_off {
            inner_decay_time(series, t_off, decay_fraction)?
        } else {
            None
        },
        energy_residual: None,
    })
}

/// First time at or after `t_start` at which `y` reaches `level` from
/// below (`rising`) or from above, linearly interpolated.
pub fn first_crossing(t: &[f64], y: &[f64], t_start: f64, level: f64, rising: bool) -> Option<f64> {
    let hit = |v: f64| if rising { v >= level } else { v <= level };
    let k0 = t.partition_point(|&ti| ti < t_start);
    let k = (k0..t.len()).find(|&k| hit(y[k]))?;
    if k == k0 || y[k] == y[k - 1] {
        return Some(t[k]);
    }
    let w = (level - y[k - 1]) / (y[k] - y[k - 1]);
    Some(t[k - 1] + w.clamp(0.0, 1.0) * (t[k] - t[k - 1]))
}

pub fn closing_time(series: &TimeSeries<f64>, th: &GapThresholds) -> Result<Option<f64>, SeriesError> {
    series.require_all(&["t", "gap"])?;
    let (t, gap) = (series.require("t")?, series.require("gap")?);
    Ok(first_crossing(t, gap, 0.0, th.closed_level(), false))
}

/// Release after `t_off`: the gap first reaches the open level. `None`
/// when the armature never closed or never reopened.
pub fn opening_time(series: &TimeSeries<f64>, th: &GapThresholds, t_off: f64) -> Result<Option<f64>, SeriesError> {
    let Some(closed) = closing_time(series, th)? else {
        return Ok(None);
    };
    let (t, gap) = (series.require("t")?, series.require("gap")?);
    Ok(first_crossing(t, gap, t_off.max(closed), th.open_level(), true))
}

/// Closed before switch-off and still not reopened at the end of the run.
pub fn is_latched(series: &TimeSeries<f64>, th: &GapThresholds, t_off: f64) -> Result<bool, SeriesError> {
    let closed = closing_time(series, th)?.is_some_and(|t| t <= t_off);
    Ok(closed && opening_time(series, th, t_off)?.is_none())
}

/// Per-shell settling at switch-on, in the order of the `b_shell_k`
/// channels.
pub fn shell_settling_times(series: &TimeSeries<f64>, t_off: f64, fraction: f64) -> Result<Vec<f64>, SeriesError> {
    let t = series.require("t")?;
    let mut shells: Vec<(usize, String)> = series
        .names_with_prefix("b_shell_")
        .into_iter()
        .filter_map(|n| Some((n.strip_prefix("b_shell_")?.parse().ok()?, n)))
        .collect();
    shells.sort();
    let mut out = Vec::with_capacity(shells.len());
    for (_, name) in shells {
        let b = series.require(&name)?;
        let k_off = t.partition_point(|&ti| ti < t_off).saturating_sub(1);
        let target = b[k_off];
        let level = fraction * target.abs();
        let mag: Vec<f64> = b[..=k_off].iter().map(|v| v.abs()).collect();
        match first_crossing(&t[..=k_off], &mag, 0.0, level, true) {
            Some(ts) => out.push(ts),
            None => out.push(f64::NAN),
        }
    }
    Ok(out)
}

/// Decay of the innermost shell after switch-off: time from `t_off` until
/// its |B| stays below `fraction` of the value held at switch-off. The
/// shell's flux is carried by its eddy current once the coil current is
/// gone. `None` if the run ends first.
pub fn inner_decay_time(series: &TimeSeries<f64>, t_off: f64, fraction: f64) -> Result<Option<f64>, SeriesError> {
    let t = series.require("t")?;
    let Some(name) = series
        .names_with_prefix("b_shell_")
        .into_iter()
        .filter_map(|n| Some((n.strip_prefix("b_shell_")?.parse::<usize>().ok()?, n)))
        .max()
        .map(|(_, n)| n)
    else {
        return Ok(None);
    };
    let b = series.require(&name)?;
    let k0 = t.partition_point(|&ti| ti < t_off);
    if k0 == 0 || k0 >= t.len() {
        return Ok(None);
    }
    let level = fraction * b[k0 - 1].abs();
    if level == 0.0 {
        return Ok(None);
    }
    let Some(last) = (k0..t.len()).rev().find(|&k| b[k].abs() >= level) else {
        return Ok(Some(0.0));
    };
    if last + 1 >= t.len() {
        return Ok(None);
    }
    let (a, c) = (b[last].abs(), b[last + 1].abs());
    let w = if a > c { (a - level) / (a - c) } else { 0.0 };
    Ok(Some(t[last] + w * (t[last + 1] - t[last]) - t_off))
}

/// Root-mean-square difference of one channel between two runs, sampled on
/// `n` uniform points in `[t0, t1]`.
pub fn rms_difference(
    a: &TimeSeries<f64>,
    b: &TimeSeries<f64>,
    channel: &str,
    t0: f64,
    t1: f64,
    n: usize,
) -> Result<f64, SeriesError> {
    a.require(channel)?;
    b.require(channel)?;
    let n = n.max(2);
    let mut sum = 0.0;
    for k in 0..n {
        let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
        let d = a.sample(channel, t).unwrap_or(0.0) - b.sample(channel, t).unwrap_or(0.0);
        sum += d * d;
    }
    Ok((sum / n as f64).sqrt())
}

/// Load line of a closed magnet with residual gap `d_res` (m) per working
/// gap and iron path `l_fe` (m): B = −μ0·l_fe/(2·d_res)·H.
pub fn load_line(l_fe: f64, d_res: f64, h: f64) -> f64 {
    -mu0::<f64>() * l_fe / (2.0 * d_res) * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_line_anchors() {
        assert!((load_line(39.2e-3, 1e-6, -150.0) - 3.6945).abs() < 5e-3);
        assert!((load_line(39.2e-3, 4e-6, -150.0) - 0.9236).abs() < 1e-3);
    }

    #[test]
    fn crossing_interpolates() {
        let t = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, 3.0];
        assert_eq!(first_crossing(&t, &y, 0.0, 2.0, true), Some(1.5));
        assert_eq!(first_crossing(&t, &y, 0.0, 5.0, true), None);
        assert_eq!(first_crossing(&t, &[3.0, 1.0, 0.0], 0.0, 2.0, false), Some(0.5));
    }
}
