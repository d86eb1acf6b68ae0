//! Table-based Tellinen scalar hysteresis.
//!
//! Only the limiting branches of the major loop are stored. The slope of a
//! minor loop at (H, J) is the slope of the branch being approached, weighted
//! by the relative distance of J to the opposite branch.

use crate::scalar::{lit, mu0, Scalar};

use super::curve::locate;
use super::{BHCurve, CurveKind, MaterialError};

/// Sense of the field change that selects the active branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Hold,
}

impl Direction {
    pub fn of<T: Scalar>(dh: T) -> Self {
        if dh > T::zero() {
            Direction::Rising
        } else if dh < T::zero() {
            Direction::Falling
        } else {
            Direction::Hold
        }
    }
}

/// Limiting branches J₊ (rising) and J₋ (falling) with their slopes on a
/// shared ascending H grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TellinenTable<T> {
    grid: Vec<T>,
    j_plus: Vec<T>,
    j_minus: Vec<T>,
    dj_plus: Vec<T>,
    dj_minus: Vec<T>,
}

/// Branch data interpolated at one field value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSample<T> {
    pub j_plus: T,
    pub j_minus: T,
    pub dj_plus: T,
    pub dj_minus: T,
    /// H was outside the grid and endpoint slopes were used.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEval<T> {
    pub slope: T,
    pub extrapolated: bool,
}

/// Tolerance for J₋ ≥ J₊ on the grid.
const ORDER_TOL: f64 = 1e-9;
/// Band half-width tolerance when clamping a state before evaluating slopes.
pub const STATE_EPS: f64 = 1e-6;
/// Below this branch separation the loop is treated as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-9;

impl<T: Scalar> TellinenTable<T> {
    pub fn new(
        grid: Vec<T>,
        j_plus: Vec<T>,
        j_minus: Vec<T>,
        dj_plus: Vec<T>,
        dj_minus: Vec<T>,
    ) -> Result<Self, MaterialError> {
        let n = grid.len();
        if n < 2 {
            return Err(MaterialError::InvalidTable("need at least two grid points".into()));
        }
        if [j_plus.len(), j_minus.len(), dj_plus.len(), dj_minus.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(MaterialError::InvalidTable("column lengths differ".into()));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(MaterialError::InvalidTable(format!(
                "grid not strictly ascending at index {}",
                i + 1
            )));
        }
        let all = grid.iter().chain(&j_plus).chain(&j_minus).chain(&dj_plus).chain(&dj_minus);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(MaterialError::InvalidTable("non-finite entry".into()));
        }
        if let Some(i) = dj_plus
            .iter()
            .chain(&dj_minus)
            .position(|s| *s < T::zero())
        {
            return Err(MaterialError::InvalidTable(format!("negative slope at entry {i}")));
        }
        let tol = lit::<T>(ORDER_TOL);
        if let Some(i) = (0..n).find(|&i| j_minus[i] < j_plus[i] - tol) {
            return Err(MaterialError::InvalidTable(format!(
                "falling branch below rising branch at grid index {i}"
            )));
        }
        Ok(Self {
            grid,
            j_plus,
            j_minus,
            dj_plus,
            dj_minus,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }
    pub fn j_plus(&self) -> &[T] {
        &self.j_plus
    }
    pub fn j_minus(&self) -> &[T] {
        &self.j_minus
    }
    pub fn dj_plus(&self) -> &[T] {
        &self.dj_plus
    }
    pub fn dj_minus(&self) -> &[T] {
        &self.dj_minus
    }

    pub fn h_range(&self) -> (T, T) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Branch values and slopes at `h`, linear in H inside the grid and
    /// continued with the endpoint slopes outside it.
    pub fn branches(&self, h: T) -> BranchSample<T> {
        let n = self.grid.len();
        let (lo, hi) = self.h_range();
        if h < lo || h > hi {
            let k = if h < lo { 0 } else { n - 1 };
            let dh = h - self.grid[k];
            let mut jp = self.j_plus[k] + self.dj_plus[k] * dh;
            let mut jm = self.j_minus[k] + self.dj_minus[k] * dh;
            if jm < jp {
                let mid = (jp + jm) / lit(2.0);
                jp = mid;
                jm = mid;
            }
            return BranchSample {
                j_plus: jp,
                j_minus: jm,
                dj_plus: self.dj_plus[k],
                dj_minus: self.dj_minus[k],
                extrapolated: true,
            };
        }
        let i = locate(&self.grid, h);
        let (h0, h1) = (self.grid[i], self.grid[i + 1]);
        let t = if h == h0 {
            T::zero()
        } else if h == h1 {
            T::one()
        } else {
            (h - h0) / (h1 - h0)
        };
        let lerp = |v: &[T]| {
            if t == T::zero() {
                v[i]
            } else if t == T::one() {
                v[i + 1]
            } else {
                v[i] + t * (v[i + 1] - v[i])
            }
        };
        BranchSample {
            j_plus: lerp(&self.j_plus),
            j_minus: lerp(&self.j_minus),
            dj_plus: lerp(&self.dj_plus),
            dj_minus: lerp(&self.dj_minus),
            extrapolated: false,
        }
    }

    /// Admissible polarization band [J₊(H), J₋(H)].
    pub fn band(&self, h: T) -> (T, T) {
        let b = self.branches(h);
        (b.j_plus, b.j_minus)
    }

    /// Projects `j` onto the admissible band at `h`.
    pub fn clamp_state(&self, h: T, j: T) -> T {
        let (lo, hi) = self.band(h);
        j.max(lo).min(hi)
    }

    /// Largest |J₊(H) + J₋(−H)| over the grid, the point-symmetry defect.
    pub fn symmetry_error(&self) -> T {
        self.grid
            .iter()
            .zip(&self.j_plus)
            .map(|(&h, &jp)| (jp + self.branches(-h).j_minus).abs())
            .fold(T::zero(), T::max)
    }

    /// Builds the degenerate table whose two branches coincide with one
    /// single-valued curve.
    pub fn anhysteretic(curve: &BHCurve<T>, slopes: &[T]) -> Result<Self, MaterialError> {
        let j = curve.j();
        Self::new(curve.h(), j.clone(), j, slopes.to_vec(), slopes.to_vec())
    }
}

/// dJ/dH at (H, J) for a field moving in `dir`.
///
/// J is first clamped into the band widened by 1 µT. When the branches have
/// merged the branch slope is returned unweighted.
pub fn tellinen_slope<T: Scalar>(
    table: &TellinenTable<T>,
    h: T,
    j: T,
    dir: Direction,
) -> SlopeEval<T> {
    let br = table.branches(h);
    if dir == Direction::Hold {
        return SlopeEval {
            slope: T::zero(),
            extrapolated: br.extrapolated,
        };
    }
    let eps = lit::<T>(STATE_EPS);
    let j = j.max(br.j_plus - eps).min(br.j_minus + eps);
    let gap = br.j_minus - br.j_plus;
    let slope = if gap < lit(COLLAPSE_TOL) {
        match dir {
            Direction::Rising => br.dj_plus,
            _ => br.dj_minus,
        }
    } else {
        let w = match dir {
            Direction::Rising => (br.j_minus - j) / gap,
            _ => (j - br.j_plus) / gap,
        };
        let w = w.max(T::zero()).min(T::one());
        match dir {
            Direction::Rising => w * br.dj_plus,
            _ => w * br.dj_minus,
        }
    };
    SlopeEval {
        slope,
        extrapolated: br.extrapolated,
    }
}

/// One implicit update of the hysteresis state for a field change
/// `h_prev → h`: J solves J = J_prev + slope(h, J)·(h − h_prev) and is then
/// kept inside the limiting band.
pub fn advance_state<T: Scalar>(table: &TellinenTable<T>, h_prev: T, j_prev: T, h: T) -> T {
    let dh = h - h_prev;
    let dir = Direction::of(dh);
    if dir == Direction::Hold {
        return table.clamp_state(h, j_prev);
    }
    // fixed point in J; the slope is affine in J so two Newton-like passes
    // on the linear weight suffice
    let br = table.branches(h);
    let gap = br.j_minus - br.j_plus;
    let j = if gap < lit(COLLAPSE_TOL) {
        let s = if dir == Direction::Rising { br.dj_plus } else { br.dj_minus };
        j_prev + s * dh
    } else {
        // J = J_prev + w(J)·s·dh with w affine in J
        match dir {
            Direction::Rising => {
                let k = br.dj_plus * dh / gap;
                (j_prev + k * br.j_minus) / (T::one() + k)
            }
            _ => {
                let k = br.dj_minus * (-dh) / gap;
                (j_prev + k * br.j_plus) / (T::one() + k)
            }
        }
    };
    table.clamp_state(h, j)
}

/// Reconstructs the initial magnetization curve from a demagnetized start
/// by integrating the rising-field slope from H = 0 to `h_max`.
pub fn reconstruct_initial_curve<T: Scalar>(
    table: &TellinenTable<T>,
    h_max: T,
    steps: usize,
) -> Result<BHCurve<T>, MaterialError> {
    let (lo, hi) = table.h_range();
    if h_max < T::zero() || h_max > hi || lo > T::zero() {
        return Err(MaterialError::InvalidParameter(format!(
            "H_max {} outside table range",
            crate::scalar::to_f64(h_max)
        )));
    }
    let (jp0, jm0) = table.band(T::zero());
    let j0 = (jp0 + jm0) / lit(2.0);
    if h_max == T::zero() {
        return BHCurve::new(vec![(T::zero(), j0)], CurveKind::Initial);
    }
    if steps < 10 {
        return Err(MaterialError::InvalidParameter("need at least 10 steps".into()));
    }
    // substeps keep the implicit update close to the exact integral
    let sub = 20;
    let dh = h_max / lit((steps * sub) as f64);
    let mut samples = Vec::with_capacity(steps + 1);
    let mut h = T::zero();
    let mut j = j0;
    samples.push((h, j));
    for k in 1..=steps {
        for s in 1..=sub {
            let h_next = if k == steps && s == sub {
                h_max
            } else {
                dh * lit(((k - 1) * sub + s) as f64)
            };
            j = advance_state(table, h, j, h_next).max(j);
            h = h_next;
        }
        samples.push((h, j));
    }
    BHCurve::new(samples, CurveKind::Initial)
}

/// Flux density of a reconstructed initial curve.
pub fn initial_b_curve<T: Scalar>(curve: &BHCurve<T>) -> Vec<(T, T)> {
    let m0 = mu0::<T>();
    curve.samples().iter().map(|&(h, j)| (h, j + m0 * h)).collect()
}
