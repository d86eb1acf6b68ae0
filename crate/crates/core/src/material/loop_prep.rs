//! Preparation of a measured major loop for the Tellinen model:
//! symmetrization, numerical differentiation and grid selection.

use crate::scalar::{lit, Scalar};

use super::curve::interp_linear;
use super::{BHCurve, CurveKind, MaterialError, TellinenTable};

/// Makes a falling/rising branch pair point-symmetric.
///
/// Both branches are resampled on the symmetric union of their H samples
/// (restricted to the common symmetric range) and each is replaced by the
/// mean of itself and the point reflection of the other branch.
pub fn symmetrize_loop<T: Scalar>(
    falling: &BHCurve<T>,
    rising: &BHCurve<T>,
) -> Result<(BHCurve<T>, BHCurve<T>), MaterialError> {
    let lo = falling.h_min().max(rising.h_min());
    let hi = falling.h_max().min(rising.h_max());
    if lo >= hi {
        return Err(MaterialError::DisjointRanges);
    }
    let reach = hi.min(-lo);
    if !(reach > T::zero()) {
        return Err(MaterialError::DisjointRanges);
    }
    let mut grid: Vec<T> = falling
        .samples()
        .iter()
        .chain(rising.samples())
        .map(|s| s.0.abs())
        .filter(|h| *h <= reach)
        .collect();
    grid.push(reach);
    grid.push(T::zero());
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();
    let mut full: Vec<T> = grid.iter().rev().filter(|h| **h > T::zero()).map(|h| -*h).collect();
    full.extend(grid.iter().copied());

    let half = lit::<T>(0.5);
    let fall: Vec<(T, T)> = full
        .iter()
        .map(|&h| (h, half * (falling.interpolate(h) - rising.interpolate(-h))))
        .collect();
    let rise: Vec<(T, T)> = full
        .iter()
        .map(|&h| (h, half * (rising.interpolate(h) - falling.interpolate(-h))))
        .collect();
    Ok((
        BHCurve::new(fall, CurveKind::FallingBranch)?,
        BHCurve::new(rise, CurveKind::RisingBranch)?,
    ))
}

/// dJ/dH of a branch: central differences inside, one-sided at the ends,
/// negative values clipped to zero.
pub fn differentiate_loop<T: Scalar>(branch: &BHCurve<T>) -> Result<Vec<T>, MaterialError> {
    let n = branch.len();
    if n < 3 {
        return Err(MaterialError::TooFewSamples { need: 3, got: n });
    }
    let s = branch.samples();
    let slope = |a: usize, b: usize| (s[b].1 - s[a].1) / (s[b].0 - s[a].0);
    let mut out = Vec::with_capacity(n);
    out.push(slope(0, 1));
    for i in 1..n - 1 {
        out.push(slope(i - 1, i + 1));
    }
    out.push(slope(n - 2, n - 1));
    Ok(out.into_iter().map(|d| d.max(T::zero())).collect())
}

/// Places `count` grid points and samples both branches on them.
///
/// The grid always contains the data-range ends, the H of each branch's
/// slope maximum and the midpoint between the maxima. The remaining points
/// are shared among the segments between these anchors in proportion to
/// 1 + ln(1 + L/L_min); inside a segment the spacing grows geometrically away
/// from the slope maximum, starting from the uniform spacing of the shortest
/// segment, and the last interval ends exactly on the far anchor.
pub fn select_grid<T: Scalar>(
    falling: &BHCurve<T>,
    falling_slopes: &[T],
    rising: &BHCurve<T>,
    rising_slopes: &[T],
    count: usize,
) -> Result<TellinenTable<T>, MaterialError> {
    if count < 7 {
        return Err(MaterialError::GridCount {
            count,
            reason: "at least 7 grid points required".into(),
        });
    }
    let available = falling.len().min(rising.len());
    if count > available {
        return Err(MaterialError::GridCount {
            count,
            reason: format!("only {available} samples available"),
        });
    }
    if falling_slopes.len() != falling.len() || rising_slopes.len() != rising.len() {
        return Err(MaterialError::InvalidParameter("slope count differs from sample count".into()));
    }
    let lo = falling.h_min().max(rising.h_min());
    let hi = falling.h_max().min(rising.h_max());
    if lo >= hi {
        return Err(MaterialError::DisjointRanges);
    }
    let argmax = |c: &BHCurve<T>, s: &[T]| {
        let (i, _) = s
            .iter()
            .enumerate()
            .fold((0usize, -T::one()), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        c.samples()[i].0.max(lo).min(hi)
    };
    let m_fall = argmax(falling, falling_slopes);
    let m_rise = argmax(rising, rising_slopes);
    let maxima = [m_fall.min(m_rise), m_fall.max(m_rise)];

    let mut anchors = vec![lo, hi, maxima[0], maxima[1]];
    if maxima[1] > maxima[0] {
        anchors.push((maxima[0] + maxima[1]) / lit(2.0));
    }
    anchors.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    anchors.dedup();
    if anchors.len() > count {
        return Err(MaterialError::GridCount {
            count,
            reason: "fewer points than anchors".into(),
        });
    }

    struct Segment<T> {
        start: T,
        end: T,
        /// +1 when points crowd toward `start`, −1 toward `end`, 0 uniform
        focus: i8,
    }
    let is_max = |h: T| h == maxima[0] || h == maxima[1];
    let segments: Vec<Segment<T>> = anchors
        .windows(2)
        .map(|w| Segment {
            start: w[0],
            end: w[1],
            focus: if is_max(w[0]) {
                1
            } else if is_max(w[1]) {
                -1
            } else {
                0
            },
        })
        .collect();

    let lengths: Vec<f64> = segments
        .iter()
        .map(|s| crate::scalar::to_f64(s.end - s.start))
        .collect();
    let l_min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = lengths.iter().map(|l| 1.0 + (1.0 + l / l_min).ln()).collect();
    let free = count - anchors.len();
    let alloc = largest_remainder(&weights, free);

    // first spacing: uniform spacing of the shortest segment
    let (shortest, _) = lengths
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (i, l)| if *l < acc.1 { (i, *l) } else { acc });
    let first = l_min / (alloc[shortest] + 1) as f64;

    let mut grid: Vec<T> = anchors.clone();
    for (seg, (&len, &k)) in segments.iter().zip(lengths.iter().zip(&alloc)) {
        if k == 0 {
            continue;
        }
        let intervals = k + 1;
        let ratio = if seg.focus == 0 || len / intervals as f64 <= first {
            1.0
        } else {
            geometric_ratio(first, len, intervals)
        };
        let mut acc = 0.0;
        let mut step = if ratio == 1.0 {
            len / intervals as f64
        } else {
            len * (ratio - 1.0) / (ratio.powi(intervals as i32) - 1.0)
        };
        for _ in 0..k {
            acc += step;
            step *= ratio;
            let d = lit::<T>(acc);
            grid.push(if seg.focus >= 0 { seg.start + d } else { seg.end - d });
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();
    if grid.len() != count {
        return Err(MaterialError::GridCount {
            count,
            reason: "grid points coincide; data range too narrow".into(),
        });
    }

    let fh = falling.h();
    let fj = falling.j();
    let rh = rising.h();
    let rj = rising.j();
    let sample = |xs: &[T], ys: &[T]| grid.iter().map(|&h| interp_linear(xs, ys, h)).collect::<Vec<T>>();
    let j_minus = sample(&fh, &fj);
    let j_plus = sample(&rh, &rj);
    let dj_minus: Vec<T> = sample(&fh, falling_slopes).into_iter().map(|v| v.max(T::zero())).collect();
    let dj_plus: Vec<T> = sample(&rh, rising_slopes).into_iter().map(|v| v.max(T::zero())).collect();
    TellinenTable::new(grid, j_plus, j_minus, dj_plus, dj_minus)
}

/// Full preparation pipeline: symmetrize, differentiate, select grid.
pub fn build_table<T: Scalar>(
    falling: &BHCurve<T>,
    rising: &BHCurve<T>,
    count: usize,
) -> Result<TellinenTable<T>, MaterialError> {
    if count < 7 {
        return Err(MaterialError::GridCount {
            count,
            reason: "at least 7 grid points required".into(),
        });
    }
    let (f, r) = symmetrize_loop(falling, rising)?;
    let df = differentiate_loop(&f)?;
    let dr = differentiate_loop(&r)?;
    select_grid(&f, &df, &r, &dr, count)
}

/// Splits a recorded loop traversal (falling from +H, then rising) into its
/// two branches at the sample of minimum H.
pub fn split_loop<T: Scalar>(samples: &[(T, T)]) -> Result<(BHCurve<T>, BHCurve<T>), MaterialError> {
    if samples.len() < 6 {
        return Err(MaterialError::TooFewSamples {
            need: 6,
            got: samples.len(),
        });
    }
    let (imin, _) = samples
        .iter()
        .enumerate()
        .fold((0usize, T::infinity()), |acc, (i, s)| if s.0 < acc.1 { (i, s.0) } else { acc });
    let first = &samples[..=imin];
    let second = &samples[imin..];
    let decreasing = first.windows(2).all(|w| w[1].0 < w[0].0);
    let increasing = second.windows(2).all(|w| w[1].0 > w[0].0);
    if !decreasing || !increasing || first.len() < 3 || second.len() < 3 {
        return Err(MaterialError::NotALoop);
    }
    Ok((
        BHCurve::new(first.to_vec(), CurveKind::FallingBranch)?,
        BHCurve::new(second.to_vec(), CurveKind::RisingBranch)?,
    ))
}

/// Reconstructs branch values from derivative-only loop data by trapezoidal
/// integration. Both branches start from −J_top at the low end, where J_top
/// is the mean half-rise of the two branches.
pub fn integrate_derivative_loop<T: Scalar>(
    h_fall: &[T],
    dj_fall: &[T],
    h_rise: &[T],
    dj_rise: &[T],
) -> Result<(BHCurve<T>, BHCurve<T>), MaterialError> {
    let integrate = |h: &[T], d: &[T]| -> Result<Vec<(T, T)>, MaterialError> {
        if h.len() != d.len() || h.len() < 3 {
            return Err(MaterialError::TooFewSamples { need: 3, got: h.len().min(d.len()) });
        }
        let mut pts: Vec<(T, T)> = h.iter().copied().zip(d.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        if let Some(i) = pts.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(MaterialError::DuplicateField { index: i + 1 });
        }
        let mut out = Vec::with_capacity(pts.len());
        let mut acc = T::zero();
        out.push((pts[0].0, acc));
        for w in pts.windows(2) {
            acc += (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / lit(2.0);
            out.push((w[1].0, acc));
        }
        Ok(out)
    };
    let mut fall = integrate(h_fall, dj_fall)?;
    let mut rise = integrate(h_rise, dj_rise)?;
    let top = (fall.last().expect("non-empty").1 + rise.last().expect("non-empty").1) / lit(4.0);
    fall.iter_mut().for_each(|p| p.1 -= top);
    rise.iter_mut().for_each(|p| p.1 -= top);
    Ok((
        BHCurve::new(fall, CurveKind::FallingBranch)?,
        BHCurve::new(rise, CurveKind::RisingBranch)?,
    ))
}

fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    let rem = |i: usize| exact[i] - exact[i].floor();
    order.sort_by(|&a, &b| rem(b).partial_cmp(&rem(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    // hand out leftovers in groups of equal remainder so mirrored segments
    // receive the same count
    let mut k = 0;
    while left > 0 && k < order.len() {
        let mut end = k + 1;
        while end < order.len() && (rem(order[k]) - rem(order[end])).abs() < 1e-9 {
            end += 1;
        }
        let group = &order[k..end];
        if group.len() <= left {
            for &i in group {
                alloc[i] += 1;
            }
            left -= group.len();
        } else {
            for &i in group.iter().take(left) {
                alloc[i] += 1;
            }
            left = 0;
        }
        k = end;
    }
    alloc
}

/// Ratio q > 1 with first·(qᵏ − 1)/(q − 1) = length.
fn geometric_ratio(first: f64, length: f64, intervals: usize) -> f64 {
    let total = |q: f64| first * (q.powi(intervals as i32) - 1.0) / (q - 1.0);
    let mut lo = 1.0 + 1e-12;
    let mut hi = 2.0;
    while total(hi) < length {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
