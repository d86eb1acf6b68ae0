use crate::scalar::{lit, Scalar};

use super::MaterialError;

/// Which part of the magnetization record a curve represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Initial,
    FallingBranch,
    RisingBranch,
}

/// Sampled magnetization data as (H in A/m, J in T) pairs.
///
/// Samples are always stored with ascending H; `kind` keeps the meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct BHCurve<T> {
    samples: Vec<(T, T)>,
    kind: CurveKind,
}

impl<T: Scalar> BHCurve<T> {
    /// Default sanity bound on |J| in tesla.
    pub fn default_bound() -> T {
        lit(2.5)
    }

    pub fn new(samples: Vec<(T, T)>, kind: CurveKind) -> Result<Self, MaterialError> {
        Self::with_bound(samples, kind, Self::default_bound())
    }

    pub fn with_bound(
        mut samples: Vec<(T, T)>,
        kind: CurveKind,
        j_bound: T,
    ) -> Result<Self, MaterialError> {
        if samples.is_empty() {
            return Err(MaterialError::EmptyCurve);
        }
        for (index, (h, j)) in samples.iter().enumerate() {
            if !h.is_finite() || !j.is_finite() {
                return Err(MaterialError::NonFinite { index });
            }
            if j.abs() > j_bound {
                return Err(MaterialError::PolarizationOutOfBound {
                    index,
                    j: crate::scalar::to_f64(*j),
                });
            }
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        if let Some(index) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(MaterialError::DuplicateField { index: index + 1 });
        }
        Ok(Self { samples, kind })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn h(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn j(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.1).collect()
    }

    pub fn h_min(&self) -> T {
        self.samples[0].0
    }

    pub fn h_max(&self) -> T {
        self.samples[self.samples.len() - 1].0
    }

    /// Flux density samples B = J + μ0·H.
    pub fn b_samples(&self) -> Vec<(T, T)> {
        let mu0 = crate::scalar::mu0::<T>();
        self.samples.iter().map(|&(h, j)| (h, j + mu0 * h)).collect()
    }

    /// Piecewise-linear J(H), extrapolating with the end segments.
    pub fn interpolate(&self, h: T) -> T {
        let xs: Vec<T> = self.h();
        let ys: Vec<T> = self.j();
        interp_linear(&xs, &ys, h)
    }
}

/// Linear interpolation on an ascending grid. Exact at nodes; extrapolates
/// linearly with the outermost segment.
pub(crate) fn interp_linear<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 1 {
        return ys[0];
    }
    let i = locate(xs, x);
    let (x0, x1) = (xs[i], xs[i + 1]);
    if x == x0 {
        return ys[i];
    }
    if x == x1 {
        return ys[i + 1];
    }
    let t = (x - x0) / (x1 - x0);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Index `i` of the cell `[xs[i], xs[i+1]]` containing `x` (clamped to the
/// first/last cell outside the range).
pub(crate) fn locate<T: Scalar>(xs: &[T], x: T) -> usize {
    let n = xs.len();
    debug_assert!(n >= 2);
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stores_ascending() {
        let c = BHCurve::new(vec![(2.0, 0.2), (0.0, 0.0), (1.0, 0.1)], CurveKind::FallingBranch)
            .unwrap();
        assert_eq!(c.h(), vec![0.0, 1.0, 2.0]);
        assert_eq!(c.kind(), CurveKind::FallingBranch);
    }

    #[test]
    fn rejects_duplicates_and_bound() {
        assert!(matches!(
            BHCurve::new(vec![(1.0, 0.1), (1.0, 0.2)], CurveKind::Initial),
            Err(MaterialError::DuplicateField { .. })
        ));
        assert!(matches!(
            BHCurve::new(vec![(1.0, 3.0)], CurveKind::Initial),
            Err(MaterialError::PolarizationOutOfBound { .. })
        ));
        assert!(matches!(
            BHCurve::<f64>::new(vec![], CurveKind::Initial),
            Err(MaterialError::EmptyCurve)
        ));
    }

    #[test]
    fn interpolation_exact_at_nodes() {
        let xs = [0.0f64, 0.3, 1.7];
        let ys = [1.0f64, -2.0, 4.0];
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert_eq!(interp_linear(&xs, &ys, *x), *y);
        }
        assert!((interp_linear(&xs, &ys, 0.15) + 0.5).abs() < 1e-12);
        assert!((interp_linear(&xs, &ys, 2.4) - 7.0).abs() < 1e-12);
    }
}
