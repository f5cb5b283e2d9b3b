//! Single-server queueing maps on finite windows.
//!
//! All five maps run off one Lindley-type recursion on the sojourn time
//! `J_i = w_i + s_i`:
//!
//! ```text
//! e_i = (J_{i-1} - a_i)^-      idle time        (x^- = max(-x, 0))
//! w_i = (J_{i-1} - a_i)^+      waiting time
//! d_i = e_i + s_i              inter-departure
//! r_i = a_i - e_i              kept arrival
//! J_i = w_i + s_i              sojourn
//! ```
//!
//! The boundary mode supplies `J` at the index just left of the window:
//! `Empty` pins it to zero (inputs prior to the base treated as zero),
//! `Primed(j)` injects a known previous sojourn, and `BurnIn(b)` runs the
//! empty recursion over the first `b` entries and reports only the rest.

use crate::error::{Error, Result};
use crate::seq::Window;

/// How the recursion is seeded at the left edge of the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryMode {
    /// Inputs prior to the window are zero, so the pre-window sojourn is 0.
    Empty,
    /// The sojourn time at the index before the window base.
    Primed(f64),
    /// Run from an empty start and discard the first `b` outputs.
    BurnIn(usize),
}

impl BoundaryMode {
    fn validate(&self, len: usize) -> Result<(f64, usize)> {
        match *self {
            BoundaryMode::Empty => Ok((0.0, 0)),
            BoundaryMode::Primed(j) => {
                if !(j >= 0.0) || !j.is_finite() {
                    return Err(Error::NegativeSeed(j));
                }
                Ok((j, 0))
            }
            BoundaryMode::BurnIn(b) => {
                if b >= len {
                    return Err(Error::BurnInTooLong { burn_in: b, len });
                }
                Ok((0.0, b))
            }
        }
    }
}

/// All five outputs of one pass of the recursion.
#[derive(Debug, Clone)]
pub struct QueueOutputs {
    pub waiting: Window,
    pub depart: Window,
    pub sojourn: Window,
    pub kept: Window,
    pub idle: Window,
}

#[inline]
fn neg_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

#[inline]
fn pos_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Raw slice kernel: runs the recursion seeded with `j_prev` and returns
/// the final sojourn. Output buffers receive one value per input entry.
pub(crate) fn kernel(
    s: &[f64],
    a: &[f64],
    j_prev: f64,
    mut sink: impl FnMut(usize, f64, f64, f64, f64, f64),
) -> f64 {
    let mut j = j_prev;
    for i in 0..s.len() {
        let gap = j - a[i];
        let e = neg_part(gap);
        let w = pos_part(gap);
        let d = e + s[i];
        let r = a[i] - e;
        j = w + s[i];
        sink(i, w, d, j, r, e);
    }
    j
}

/// Departure values only, appended to `out`; returns the final sojourn.
/// Hot path for the tandem/melonization cascades.
pub(crate) fn depart_kernel(s: &[f64], a: &[f64], j_prev: f64, out: &mut [f64]) -> f64 {
    debug_assert_eq!(s.len(), a.len());
    debug_assert_eq!(s.len(), out.len());
    let mut j = j_prev;
    for i in 0..s.len() {
        let gap = j - a[i];
        let e = neg_part(gap);
        out[i] = e + s[i];
        j = pos_part(gap) + s[i];
    }
    j
}

fn run(s: &Window, a: &Window, mode: BoundaryMode) -> Result<QueueOutputs> {
    s.same_shape(a)?;
    let (j_prev, skip) = mode.validate(s.len())?;
    let n = s.len();
    let mut w = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut e = vec![0.0; n];
    kernel(s.values(), a.values(), j_prev, |i, wi, di, ji, ri, ei| {
        w[i] = wi;
        d[i] = di;
        t[i] = ji;
        r[i] = ri;
        e[i] = ei;
    });
    let base = s.base() + skip as i64;
    let cut = |mut v: Vec<f64>| {
        v.drain(..skip);
        Window::from_raw(base, v)
    };
    Ok(QueueOutputs {
        waiting: cut(w),
        depart: cut(d),
        sojourn: cut(t),
        kept: cut(r),
        idle: cut(e),
    })
}

/// Waiting times `w_i`.
pub fn waiting_times(s: &Window, a: &Window, mode: BoundaryMode) -> Result<Window> {
    Ok(run(s, a, mode)?.waiting)
}

/// Inter-departure times `d_i`; `Empty` realizes the map with all input
/// prior to the window base set to zero.
pub fn depart(s: &Window, a: &Window, mode: BoundaryMode) -> Result<Window> {
    Ok(run(s, a, mode)?.depart)
}

/// Sojourn times `t_i = w_i + s_i`.
pub fn sojourn(s: &Window, a: &Window, mode: BoundaryMode) -> Result<Window> {
    Ok(run(s, a, mode)?.sojourn)
}

/// Kept arrivals `r_i = a_i - e_i = a_i /\ t_{i-1}`.
pub fn arrivals_kept(s: &Window, a: &Window, mode: BoundaryMode) -> Result<Window> {
    Ok(run(s, a, mode)?.kept)
}

/// Idle times `e_i >= 0`.
pub fn idle_times(s: &Window, a: &Window, mode: BoundaryMode) -> Result<Window> {
    Ok(run(s, a, mode)?.idle)
}

/// All five outputs from one pass.
pub fn queue_outputs(s: &Window, a: &Window, mode: BoundaryMode) -> Result<QueueOutputs> {
    run(s, a, mode)
}

/// Cumulative idle time seeded with a previous sojourn `j_prev`: entry `i`
/// holds the clamped running minimum
///
/// ```text
/// psi_i = ( min_{m <= j <= i} [ J + sum_{k=m}^{j-1}(s_k - a_k) - a_j ] )^-
/// ```
///
/// which equals `sum_{k=m}^{i} e_k` for the recursion seeded with `J` at
/// `m - 1`. The clamp sits outside the minimum; applying it termwise inside
/// would turn the minimum into a maximum and break that identity.
pub fn psi_m(j_prev: f64, s: &Window, a: &Window) -> Result<Window> {
    s.same_shape(a)?;
    if !(j_prev >= 0.0) || !j_prev.is_finite() {
        return Err(Error::NegativeSeed(j_prev));
    }
    let sv = s.values();
    let av = a.values();
    let n = sv.len();
    let mut out = Vec::with_capacity(n);
    let mut netput = 0.0; // sum_{k=m}^{j-1} (s_k - a_k)
    let mut running_min = f64::INFINITY;
    for i in 0..n {
        let x = j_prev + netput - av[i];
        if x < running_min {
            running_min = x;
        }
        netput += sv[i] - av[i];
        out.push(neg_part(running_min));
    }
    Ok(Window::from_raw(s.base(), out))
}

/// Clamped running maximum of partial sums from the window base.
pub fn phi_mn(w: &Window) -> f64 {
    let mut acc = 0.0;
    let mut sup = f64::NEG_INFINITY;
    for &v in w.values() {
        acc += v;
        if acc > sup {
            sup = acc;
        }
    }
    pos_part(sup)
}

/// Largest absolute entry.
pub fn mx_mn(w: &Window) -> f64 {
    w.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}
