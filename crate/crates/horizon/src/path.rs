//! Piecewise-linear paths on a uniform knot grid, the interpolation map
//! from windows to paths, sup metrics on compacts and the diffusive
//! scaling operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::Window;

/// Relative slack used when deciding whether a query point sits on the
/// domain boundary or on a knot.
const GRID_EPS: f64 = 1e-9;

/// A real function on an interval, linear between uniformly spaced knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    left_end: f64,
    knot_spacing: f64,
    knots: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(left_end: f64, knot_spacing: f64, knots: Vec<f64>) -> Result<Self> {
        if !(knot_spacing > 0.0) || !knot_spacing.is_finite() {
            return Err(Error::NonPositive {
                what: "knot spacing",
                value: knot_spacing,
            });
        }
        if knots.is_empty() {
            return Err(Error::EmptyWindow);
        }
        Ok(PiecewiseLinearPath {
            left_end,
            knot_spacing,
            knots,
        })
    }

    pub fn left_end(&self) -> f64 {
        self.left_end
    }

    pub fn right_end(&self) -> f64 {
        self.left_end + (self.knots.len() - 1) as f64 * self.knot_spacing
    }

    pub fn knot_spacing(&self) -> f64 {
        self.knot_spacing
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_knots(&self) -> usize {
        self.knots.len()
    }

    /// Abscissa of knot `j`.
    pub fn knot_x(&self, j: usize) -> f64 {
        self.left_end + j as f64 * self.knot_spacing
    }

    fn eps(&self) -> f64 {
        self.knot_spacing * GRID_EPS
    }

    /// Evaluate by linear interpolation; querying outside the domain is an
    /// error (up to a tiny boundary slack).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let right = self.right_end();
        if t < self.left_end - self.eps() || t > right + self.eps() {
            return Err(Error::OutsideDomain {
                t,
                left: self.left_end,
                right,
            });
        }
        if self.knots.len() == 1 {
            return Ok(self.knots[0]);
        }
        let pos = (t - self.left_end) / self.knot_spacing;
        // Queries on (or within rounding of) a knot return the knot value
        // exactly; anchoring conventions rely on this.
        let nearest = pos.round();
        if (pos - nearest).abs() <= GRID_EPS * pos.abs().max(1.0) {
            let j = (nearest as isize).clamp(0, self.knots.len() as isize - 1) as usize;
            return Ok(self.knots[j]);
        }
        let j = (pos.floor() as isize).clamp(0, self.knots.len() as isize - 2) as usize;
        let u = (t - self.knot_x(j)) / self.knot_spacing;
        Ok(self.knots[j] + u * (self.knots[j + 1] - self.knots[j]))
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.left_end - self.eps() <= lo && self.right_end() + self.eps() >= hi
    }

    fn require_cover(&self, lo: f64, hi: f64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::DomainTooSmall {
                left: self.left_end,
                right: self.right_end(),
                need_left: lo,
                need_right: hi,
            })
        }
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        let tol = self.eps();
        if (self.left_end - other.left_end).abs() > tol
            || (self.knot_spacing - other.knot_spacing).abs() > tol
            || self.knots.len() != other.knots.len()
        {
            return Err(Error::GridMismatch {
                left_a: self.left_end,
                left_b: other.left_end,
                step_a: self.knot_spacing,
                step_b: other.knot_spacing,
                len_a: self.knots.len(),
                len_b: other.knots.len(),
            });
        }
        Ok(())
    }

    /// Index of the knot sitting at the origin, if any.
    pub(crate) fn origin_knot(&self) -> Result<usize> {
        let pos = -self.left_end / self.knot_spacing;
        let j = pos.round();
        if (pos - j).abs() > GRID_EPS.max(GRID_EPS * pos.abs()) {
            return Err(Error::OriginNotOnGrid);
        }
        if j < 0.0 || j as usize >= self.knots.len() {
            return Err(Error::OriginNotOnGrid);
        }
        Ok(j as usize)
    }

    /// Elementwise difference on a shared grid.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(PiecewiseLinearPath {
            left_end: self.left_end,
            knot_spacing: self.knot_spacing,
            knots: self
                .knots
                .iter()
                .zip(&other.knots)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Elementwise sum on a shared grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(PiecewiseLinearPath {
            left_end: self.left_end,
            knot_spacing: self.knot_spacing,
            knots: self
                .knots
                .iter()
                .zip(&other.knots)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Pointwise affine image `t -> a * f(t) + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        PiecewiseLinearPath {
            left_end: self.left_end,
            knot_spacing: self.knot_spacing,
            knots: self.knots.iter().map(|v| a * v + b).collect(),
        }
    }
}

/// Linear interpolation of a window's partial sums, anchored at the origin:
/// the output satisfies `path(0) = 0` and `path(t) - path(t-1) = w(t)` for
/// every in-range integer `t`.
pub fn interpolate(w: &Window) -> Result<PiecewiseLinearPath> {
    // Knots live at base-1 ..= end; the anchoring needs 0 among them.
    let lo = w.base() - 1;
    let hi = w.end();
    if !(lo <= 0 && 0 <= hi) {
        return Err(Error::OriginNotCovered { lo, hi });
    }
    let mut knots = Vec::with_capacity(w.len() + 1);
    let mut acc = 0.0;
    knots.push(acc);
    for &v in w.values() {
        acc += v;
        knots.push(acc);
    }
    let anchor = knots[(-lo) as usize];
    for v in &mut knots {
        *v -= anchor;
    }
    PiecewiseLinearPath::new(lo as f64, 1.0, knots)
}

/// Sup distance over `[-n, n]`, exact for piecewise-linear inputs: the
/// difference is linear between merged knots, so its maximum absolute value
/// is attained at a merged knot or at an endpoint of the interval.
pub fn metric_dn(f: &PiecewiseLinearPath, g: &PiecewiseLinearPath, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::NonPositive {
            what: "metric horizon",
            value: n,
        });
    }
    f.require_cover(-n, n)?;
    g.require_cover(-n, n)?;

    let mut sup: f64 = 0.0;
    let mut probe = |t: f64| -> Result<()> {
        let d = (f.eval(t)? - g.eval(t)?).abs();
        if d > sup {
            sup = d;
        }
        Ok(())
    };
    probe(-n)?;
    probe(n)?;
    for p in [f, g] {
        let start = ((-n - p.left_end()) / p.knot_spacing()).ceil().max(0.0) as usize;
        for j in start..p.num_knots() {
            let x = p.knot_x(j);
            if x > n {
                break;
            }
            if x >= -n {
                probe(x)?;
            }
        }
    }
    Ok(sup)
}

/// Truncated series metric `sum_{i=1}^{n_max} 2^-i d_i/(1+d_i)`; the tail
/// dropped by the truncation is at most `2^-n_max`.
pub fn metric_d(f: &PiecewiseLinearPath, g: &PiecewiseLinearPath, n_max: u32) -> Result<f64> {
    if n_max == 0 {
        return Err(Error::NonPositive {
            what: "metric truncation order",
            value: 0.0,
        });
    }
    let mut total = 0.0;
    for i in 1..=n_max {
        let di = metric_dn(f, g, i as f64)?;
        total += 0.5f64.powi(i as i32) * di / (1.0 + di);
    }
    Ok(total)
}

/// Time rescaling `t -> f(tau * t)`; keeps the path exactly piecewise
/// linear by rescaling the knot grid.
pub fn scale_path(f: &PiecewiseLinearPath, tau: f64) -> Result<PiecewiseLinearPath> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositive {
            what: "scaling factor",
            value: tau,
        });
    }
    PiecewiseLinearPath::new(
        f.left_end() / tau,
        f.knot_spacing() / tau,
        f.knots().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path_of(left: f64, step: f64, knots: &[f64]) -> PiecewiseLinearPath {
        PiecewiseLinearPath::new(left, step, knots.to_vec()).unwrap()
    }

    #[test]
    fn interpolate_linear_ramp() {
        let w = Window::constant(-2, 5, 3.0).unwrap(); // indices -2..=2
        let p = interpolate(&w).unwrap();
        for t in -2..=2 {
            assert_relative_eq!(p.eval(t as f64).unwrap(), 3.0 * t as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolate_direct_evaluation() {
        // Base 1: knots at 0, 1, 2 with the anchor at 0 itself.
        let w = Window::new(1, vec![1.0, -1.0]).unwrap();
        let p = interpolate(&w).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert_eq!(p.eval(1.0).unwrap(), 1.0);
        assert_eq!(p.eval(2.0).unwrap(), 0.0);
        assert_eq!(p.eval(1.5).unwrap(), 0.5);
    }

    #[test]
    fn interpolate_anchors_at_origin() {
        let w = Window::new(-3, vec![0.3, -0.7, 1.9, 2.2, -0.1, 0.4]).unwrap();
        let p = interpolate(&w).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn interpolate_requires_origin() {
        let w = Window::new(2, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            interpolate(&w),
            Err(Error::OriginNotCovered { .. })
        ));
    }

    #[test]
    fn increments_match_window_values() {
        let w = Window::new(-1, vec![0.5, -2.0, 3.5]).unwrap();
        let p = interpolate(&w).unwrap();
        for (i, v) in w.iter() {
            let t = i as f64;
            assert_relative_eq!(
                p.eval(t).unwrap() - p.eval(t - 1.0).unwrap(),
                v,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn metric_dn_identity_and_constants() {
        let f = path_of(-2.0, 1.0, &[0.0, 1.0, 0.5, 2.0, 1.0]);
        assert_eq!(metric_dn(&f, &f, 2.0).unwrap(), 0.0);
        let z = path_of(-3.0, 1.0, &[0.0; 7]);
        let c = path_of(-3.0, 1.0, &[5.0; 7]);
        assert_eq!(metric_dn(&z, &c, 3.0).unwrap(), 5.0);
    }

    #[test]
    fn metric_dn_opposite_ramps() {
        let f = path_of(-1.0, 1.0, &[-1.0, 0.0, 1.0]); // f(x) = x
        let g = path_of(-1.0, 1.0, &[1.0, 0.0, -1.0]); // g(x) = -x
        assert_relative_eq!(metric_dn(&f, &g, 1.0).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn metric_dn_mixed_grids_is_exact() {
        // f has knots at integers, g at half-integers; the interior kink of
        // g at 0.5 must be probed.
        let f = path_of(-1.0, 1.0, &[0.0, 0.0, 0.0]);
        let g = path_of(-1.0, 0.5, &[0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_relative_eq!(metric_dn(&f, &g, 1.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn metric_dn_domain_check() {
        let f = path_of(-1.0, 1.0, &[0.0, 0.0, 0.0]);
        assert!(matches!(
            metric_dn(&f, &f, 2.0),
            Err(Error::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn metric_d_series_evaluation() {
        let f = path_of(-2.0, 1.0, &[0.0; 5]);
        let g = path_of(-2.0, 1.0, &[1.0; 5]);
        // 2^-1 * 1/2 + 2^-2 * 1/2 = 0.375
        assert_relative_eq!(metric_d(&f, &g, 2).unwrap(), 0.375, epsilon = 1e-12);
        assert_eq!(metric_d(&f, &f, 2).unwrap(), 0.0);
    }

    #[test]
    fn metric_d_saturates_for_large_gaps() {
        let f = path_of(-4.0, 1.0, &[0.0; 9]);
        let g = path_of(-4.0, 1.0, &[1e12; 9]);
        let d = metric_d(&f, &g, 4).unwrap();
        assert_relative_eq!(d, 1.0 - 0.5f64.powi(4), epsilon = 1e-9);
    }

    #[test]
    fn metric_d_truncation_bound() {
        let f = path_of(-4.0, 1.0, &[0.0, 1.0, -2.0, 0.5, 0.0, 3.0, -1.0, 2.0, 1.0]);
        let g = path_of(-4.0, 1.0, &[1.0, -1.0, 2.0, 0.0, 1.0, -3.0, 0.0, 1.0, -1.0]);
        for n in 1..=4u32 {
            let d = metric_d(&f, &g, 4).unwrap();
            let dn = metric_dn(&f, &g, n as f64).unwrap();
            assert!(d <= dn + 0.5f64.powi(n as i32) + 1e-12);
        }
    }

    #[test]
    fn scale_path_identity_and_linear() {
        let f = path_of(-2.0, 1.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]); // f(x) = x
        let same = scale_path(&f, 1.0).unwrap();
        assert_eq!(same.eval(1.5).unwrap(), 1.5);
        let doubled = scale_path(&f, 2.0).unwrap(); // t -> f(2t) = 2t
        assert_relative_eq!(doubled.eval(0.75).unwrap(), 1.5, epsilon = 1e-12);
        assert!(scale_path(&f, 0.0).is_err());
    }

    #[test]
    fn scale_commutes_with_metric() {
        let f = path_of(-4.0, 1.0, &[0.0, 2.0, -1.0, 0.5, 0.0, 1.0, -2.0, 3.0, 1.0]);
        let g = path_of(-4.0, 1.0, &[1.0, 0.0, 1.5, -0.5, 2.0, 0.0, 1.0, -1.0, 0.0]);
        let fs = scale_path(&f, 2.0).unwrap();
        let gs = scale_path(&g, 2.0).unwrap();
        let lhs = metric_dn(&fs, &gs, 1.0).unwrap();
        let rhs = metric_dn(&f, &g, 2.0).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }
}
