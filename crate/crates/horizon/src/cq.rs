//! The continuous queue map on piecewise-linear paths, its k-line
//! extension, locality diagnostics for the left truncation, the
//! discrete-to-continuous comparison, and epoch detection for path-valued
//! jump processes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{interpolate, metric_dn, PiecewiseLinearPath};
use crate::queue::{self, BoundaryMode};
use crate::seq::Window;

#[inline]
fn neg_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

/// Running maximum gap `W_t(f) = sup_{s<=t} [f(t) - f(s)]` over the
/// available domain, together with the leftmost location attaining it.
pub fn running_max_gap(f: &PiecewiseLinearPath, t: f64) -> Result<(f64, f64)> {
    let ft = f.eval(t)?; // also validates t against the domain
    let mut min = f64::INFINITY;
    let mut loc = f.left_end();
    for j in 0..f.num_knots() {
        let x = f.knot_x(j);
        if x > t {
            break;
        }
        let v = f.knots()[j];
        if v < min {
            min = v;
            loc = x;
        }
    }
    if ft < min {
        min = ft;
        loc = t;
    }
    Ok((ft - min, loc))
}

/// Continuous queue map on a shared knot grid containing the origin.
///
/// With `h = f - g` the two branches collapse to running minima of `h`:
/// for `t >= 0` the output is `f(t) + [W_0(h) + min_{[0,t]} h]^-` and for
/// `t < 0` it is `f(t) - [min_{[t,0]} h - min_{[left,t]} h]^-`. Outputs are
/// materialized exactly at the grid knots; the left end of the domain plays
/// the role of the infinite past, which is what the locality check gates.
pub fn q_map(
    f: &PiecewiseLinearPath,
    g: &PiecewiseLinearPath,
) -> Result<PiecewiseLinearPath> {
    f.same_grid(g)?;
    let z = f.origin_knot()?;
    let n = f.num_knots();
    let fv = f.knots();
    let gv = g.knots();

    let h: Vec<f64> = fv.iter().zip(gv).map(|(a, b)| a - b).collect();

    // Prefix minima of h from the left end.
    let mut prefix_min = Vec::with_capacity(n);
    let mut m = f64::INFINITY;
    for &v in &h {
        m = m.min(v);
        prefix_min.push(m);
    }
    let w0 = h[z] - prefix_min[z];

    let mut out = vec![0.0; n];
    // t >= 0: running minimum of h from the origin rightward.
    let mut run = f64::INFINITY;
    for i in z..n {
        run = run.min(h[i]);
        out[i] = fv[i] + neg_part(w0 + run);
    }
    // t < 0: suffix minima of h back to the origin.
    let mut suffix = f64::INFINITY;
    for i in (0..z).rev() {
        suffix = suffix.min(h[i + 1]).min(h[i]);
        out[i] = fv[i] - neg_part(suffix - prefix_min[i]);
    }
    PiecewiseLinearPath::new(f.left_end(), f.knot_spacing(), out)
}

/// k-line extension: the first line passes through, every later output is
/// the queue map of the first line against the corresponding component of
/// the construction on the remaining lines.
pub fn q_k(paths: &[PiecewiseLinearPath]) -> Result<Vec<PiecewiseLinearPath>> {
    if paths.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if paths.len() == 1 {
        return Ok(vec![paths[0].clone()]);
    }
    let inner = q_k(&paths[1..])?;
    let mut out = Vec::with_capacity(paths.len());
    out.push(paths[0].clone());
    for component in &inner {
        out.push(q_map(&paths[0], component)?);
    }
    Ok(out)
}

/// Result of a gated construction: either the output or the locality
/// report of the first failing pairwise step.
#[derive(Debug, Clone)]
pub enum Gated<T> {
    Accepted(T),
    Excluded(LocalityReport),
}

/// k-line construction with a locality gate at every pairwise queue-map
/// call: each step checks that the running-max location of the pair sits in
/// `[-2n, -n]`, so the truncated past cannot leak into the output.
pub fn q_k_gated(
    paths: &[PiecewiseLinearPath],
    horizon: f64,
) -> Result<Gated<Vec<PiecewiseLinearPath>>> {
    if paths.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if paths.len() == 1 {
        return Ok(Gated::Accepted(vec![paths[0].clone()]));
    }
    let inner = match q_k_gated(&paths[1..], horizon)? {
        Gated::Accepted(lines) => lines,
        Gated::Excluded(report) => return Ok(Gated::Excluded(report)),
    };
    let mut out = Vec::with_capacity(paths.len());
    out.push(paths[0].clone());
    for component in &inner {
        let report = locality_check(&paths[0], component, horizon)?;
        if !report.inside {
            return Ok(Gated::Excluded(report));
        }
        out.push(q_map(&paths[0], component)?);
    }
    Ok(Gated::Accepted(out))
}

/// Outcome of the left-truncation diagnostic for the queue map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub horizon: f64,
    /// Leftmost location of the running-maximum gap of `f - g` at `-horizon`.
    pub argmax_location: f64,
    /// Whether the location falls in `[-2*horizon, -horizon]`.
    pub inside: bool,
}

/// Checks that the running-maximum location of `f - g` at `-n` lies inside
/// `[-2n, -n]`, so the queue map on `[-n, n]` cannot see data left of `-2n`.
pub fn locality_check(
    f: &PiecewiseLinearPath,
    g: &PiecewiseLinearPath,
    n: f64,
) -> Result<LocalityReport> {
    if !(n > 0.0) {
        return Err(Error::NonPositive {
            what: "locality horizon",
            value: n,
        });
    }
    for p in [f, g] {
        if !p.covers(-2.0 * n, n) {
            return Err(Error::DomainTooSmall {
                left: p.left_end(),
                right: p.right_end(),
                need_left: -2.0 * n,
                need_right: n,
            });
        }
    }
    // Leftmost minimizer of f - g over the available past up to -n. The two
    // paths may carry different grids, so probe the union of their knots.
    let t = -n;
    let mut min = f.eval(t)? - g.eval(t)?;
    let mut loc = t;
    let probe = |x: f64, min: &mut f64, loc: &mut f64| -> Result<()> {
        let v = f.eval(x)? - g.eval(x)?;
        if v < *min || (v == *min && x < *loc) {
            *min = v;
            *loc = x;
        }
        Ok(())
    };
    for p in [f, g] {
        for j in 0..p.num_knots() {
            let x = p.knot_x(j);
            if x > t {
                break;
            }
            probe(x, &mut min, &mut loc)?;
        }
    }
    let eps = 1e-9 * n.max(1.0);
    let inside = loc >= -2.0 * n - eps && loc <= -n + eps;
    Ok(LocalityReport {
        horizon: n,
        argmax_location: loc,
        inside,
    })
}

/// Comparison of the interpolated discrete departure against the continuous
/// queue map of the interpolated inputs.
#[derive(Debug, Clone, Copy)]
pub struct GapReport {
    /// `d_n` distance between the two routes.
    pub gap: f64,
    /// `16 * sup (|I1| + |I2|)` over the window.
    pub bound: f64,
    pub locality: LocalityReport,
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound
    }
}

/// Runs both routes on windows covering `[-2n-2, 2n]` and reports the sup
/// distance over `[-n, n]` together with the input-size bound. Replicas
/// failing the locality gate are rejected with a dedicated error so callers
/// can count exclusions.
pub fn discrete_continuous_gap(i1: &Window, i2: &Window, n: u32) -> Result<GapReport> {
    i1.same_shape(i2)?;
    let lo = -2 * n as i64 - 2;
    let hi = 2 * n as i64;
    for idx in [lo, hi] {
        if !i1.contains(idx) {
            return Err(Error::IndexOutOfRange {
                index: idx,
                base: i1.base(),
                end: i1.end(),
            });
        }
    }
    let f = interpolate(i1)?;
    let g = interpolate(i2)?;
    let locality = locality_check(&f, &g, n as f64)?;
    if !locality.inside {
        return Err(Error::LocalityExcluded { report: locality });
    }
    let discrete = interpolate(&queue::depart(i1, i2, BoundaryMode::Empty)?)?;
    let continuous = q_map(&f, &g)?;
    let gap = metric_dn(&discrete, &continuous, n as f64)?;
    let mut sup = 0.0f64;
    for i in lo..=hi {
        sup = sup.max(i1.get(i)?.abs() + i2.get(i)?.abs());
    }
    Ok(GapReport {
        gap,
        bound: 16.0 * sup,
        locality,
    })
}

fn check_sorted(mus: &[f64]) -> Result<()> {
    if mus.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::UnsortedGrid { what: "drift" });
    }
    Ok(())
}

/// Grid drifts at which a path-valued family restricted to `[-x0, x0]`
/// moves by more than `tol` in sup norm from its predecessor.
pub fn detect_epochs_paths(
    family: &[(f64, PiecewiseLinearPath)],
    x0: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let mus: Vec<f64> = family.iter().map(|(m, _)| *m).collect();
    check_sorted(&mus)?;
    let mut epochs = Vec::new();
    for pair in family.windows(2) {
        let change = metric_dn(&pair[0].1, &pair[1].1, x0)?;
        if change > tol {
            epochs.push(pair[1].0);
        }
    }
    Ok(epochs)
}

/// Same detection on raw windows: the restriction is the window itself and
/// the change is measured in max-abs difference.
pub fn detect_epochs_windows(family: &[(f64, Window)], tol: f64) -> Result<Vec<f64>> {
    let mus: Vec<f64> = family.iter().map(|(m, _)| *m).collect();
    check_sorted(&mus)?;
    let mut epochs = Vec::new();
    for pair in family.windows(2) {
        let diff = pair[1].1.sub(&pair[0].1)?;
        let change = diff.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if change > tol {
            epochs.push(pair[1].0);
        }
    }
    Ok(epochs)
}
