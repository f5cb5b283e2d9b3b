//! Random generation: product-exponential line ensembles, the stationary
//! multiline law, the coupled prelimit family under diffusive scaling,
//! two-sided Brownian discretizations and limit finite-dimensional samples.
//!
//! Every draw comes from a counter-derived substream keyed by
//! `(seed, tag, replica, line, ...)`, so replicas parallelize with no
//! shared state and identical configurations reproduce bitwise.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cq::{self, Gated, LocalityReport};
use crate::error::{Error, Result};
use crate::melon::md_map;
use crate::path::{interpolate, PiecewiseLinearPath};
use crate::queue::{depart_kernel, BoundaryMode};
use crate::seq::{DensityVector, LineEnsemble, Window};

const TAG_NU: u64 = 1;
const TAG_CHAIN: u64 = 2;
const TAG_BM: u64 = 4;
const TAG_SH: u64 = 5;
const SUB_LINE: u64 = 0;
const SUB_SEED: u64 = 1;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic substream: hashes `(seed, path...)` into a ChaCha key.
pub fn stream_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    for &p in path {
        state = mix64(state.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&mix64(state.wrapping_add(i as u64 + 1)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn exp_values(rng: &mut ChaCha8Rng, rate: f64, n: usize) -> Result<Vec<f64>> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::NonPositive {
            what: "exponential rate",
            value: rate,
        });
    }
    let d = Exp::new(rate).expect("validated rate");
    Ok((0..n).map(|_| d.sample(rng)).collect())
}

/// Independent lines, line `i` i.i.d. exponential with rate `rho_i`
/// (mean `1/rho_i`).
pub fn sample_nu(
    densities: &DensityVector,
    base: i64,
    len: usize,
    seed: u64,
    replica: u64,
) -> Result<LineEnsemble> {
    if len == 0 {
        return Err(Error::EmptyWindow);
    }
    let lines = densities
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &rate)| {
            let mut rng = stream_rng(seed, &[TAG_NU, replica, i as u64]);
            Ok(Window::from_raw(base, exp_values(&mut rng, rate, len)?))
        })
        .collect::<Result<Vec<_>>>()?;
    LineEnsemble::new(lines)
}

/// Empty-start relaxation length for a density gap `gap`: the recursion
/// forgets its boundary at rate `gap^2` per step near density 1/2, so
/// `factor / gap^2` steps leave a bias of order `exp(-factor)`.
pub fn burn_in_steps(densities: &DensityVector, factor: f64) -> usize {
    if densities.len() < 2 {
        return 0;
    }
    let gap = densities.min_gap();
    (factor / (gap * gap)).ceil() as usize
}

/// Stationary multiline sample via the defining construction: a product
/// draw on an extended window pushed through the multiline map, burn-in
/// trimmed.
pub fn sample_mu(
    densities: &DensityVector,
    base: i64,
    len: usize,
    seed: u64,
    replica: u64,
) -> Result<LineEnsemble> {
    sample_mu_burnin(densities, base, len, seed, replica, 16.0)
}

pub fn sample_mu_burnin(
    densities: &DensityVector,
    base: i64,
    len: usize,
    seed: u64,
    replica: u64,
    factor: f64,
) -> Result<LineEnsemble> {
    let b = burn_in_steps(densities, factor);
    let nu = sample_nu(densities, base - b as i64, len + b, seed, replica)?;
    if b == 0 {
        return md_map(&nu, BoundaryMode::Empty);
    }
    md_map(&nu, BoundaryMode::BurnIn(b))
}

/// Stationary multiline sample via consecutive stationary queues: line 1 is
/// a fresh product line; line `i+1` is the departure of line `i` fed by a
/// fresh line of rate `rho_{i+1}`, seeded with an independent exponential
/// sojourn of rate `rho_i - rho_{i+1}`.
///
/// For two lines this is exactly the stationary queue; for more lines it is
/// validated against the burn-in construction and against invariance under
/// a fresh tandem stage (see the module tests). It costs O(k len) instead
/// of the O(k^2 (len + gap^-2)) of the burn-in route, which is what makes
/// densely coupled families affordable.
pub fn sample_mu_chain(
    densities: &DensityVector,
    base: i64,
    len: usize,
    seed: u64,
    replica: u64,
) -> Result<LineEnsemble> {
    if len == 0 {
        return Err(Error::EmptyWindow);
    }
    let rho = densities.as_slice();
    let mut lines: Vec<Window> = Vec::with_capacity(rho.len());
    let mut rng = stream_rng(seed, &[TAG_CHAIN, replica, SUB_LINE, 0]);
    let mut prev = exp_values(&mut rng, rho[0], len)?;
    lines.push(Window::from_raw(base, prev.clone()));
    for i in 1..rho.len() {
        let mut line_rng = stream_rng(seed, &[TAG_CHAIN, replica, SUB_LINE, i as u64]);
        let fresh = exp_values(&mut line_rng, rho[i], len)?;
        let mut seed_rng = stream_rng(seed, &[TAG_CHAIN, replica, SUB_SEED, i as u64]);
        let j0 = exp_values(&mut seed_rng, rho[i - 1] - rho[i], 1)?[0];
        let mut out = vec![0.0; len];
        depart_kernel(&prev, &fresh, j0, &mut out);
        lines.push(Window::from_raw(base, out.clone()));
        prev = out;
    }
    LineEnsemble::new_ordered(lines)
}

/// Which stationary construction backs a coupled-family draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationaryMethod {
    /// Multiline map on an extended window (the defining construction).
    BurnIn,
    /// Consecutive seeded queues (exact for pairs, validated for stacks).
    Chain,
}

/// Configuration shared by the family samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Scaling parameter N of the diffusive embedding.
    pub n_scale: f64,
    /// Drift grid, strictly increasing.
    pub mu_grid: Vec<f64>,
    /// Spatial half-width of the reported window.
    pub x0: f64,
    pub burn_in_factor: f64,
    pub replicas: usize,
    /// Knot spacing of Brownian discretizations.
    pub grid_step: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0x5eed_0001,
            n_scale: 1e6,
            mu_grid: vec![-1.0, 0.0, 1.0],
            x0: 1.0,
            burn_in_factor: 16.0,
            replicas: 1000,
            grid_step: 1e-2,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu_grid.is_empty() {
            return Err(Error::InvalidConfig("empty drift grid".into()));
        }
        if self.mu_grid.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::UnsortedGrid { what: "drift" });
        }
        for &what in &[self.n_scale, self.x0, self.burn_in_factor, self.grid_step] {
            if !(what > 0.0) || !what.is_finite() {
                return Err(Error::NonPositive {
                    what: "sampler parameter",
                    value: what,
                });
            }
        }
        for &mu in &self.mu_grid {
            let rho = self.rho_of(mu);
            if !(0.0 < rho && rho < 1.0) {
                return Err(Error::DensityOutOfRange { rho });
            }
        }
        Ok(())
    }

    /// Density parametrized by drift: `1/2 - (mu/4) N^{-1/3}`.
    pub fn rho_of(&self, mu: f64) -> f64 {
        0.5 - 0.25 * mu * self.n_scale.powf(-1.0 / 3.0)
    }

    /// Densities of the drift grid, decreasing in the grid order.
    pub fn densities(&self) -> Result<DensityVector> {
        self.validate()?;
        DensityVector::new(self.mu_grid.iter().map(|&m| self.rho_of(m)).collect())
    }
}

/// One coupled draw of the prelimit family.
#[derive(Debug, Clone)]
pub struct GnDraw {
    pub mu: Vec<f64>,
    /// Raw stationary lines on the index window `[-M, M]`.
    pub windows: LineEnsemble,
    /// Recentered, interpolated and diffusively rescaled paths covering
    /// `[-x0, x0]`.
    pub paths: Vec<PiecewiseLinearPath>,
}

/// Diffusive rescaling `x -> N^{-1/3} f(x N^{2/3})` of a unit-spacing path.
fn diffusive_rescale(path: &PiecewiseLinearPath, n_scale: f64) -> PiecewiseLinearPath {
    let space = n_scale.powf(2.0 / 3.0);
    let value = n_scale.powf(-1.0 / 3.0);
    PiecewiseLinearPath::new(
        path.left_end() / space,
        path.knot_spacing() / space,
        path.knots().iter().map(|v| v * value).collect(),
    )
    .expect("valid rescale")
}

/// Coupled prelimit family: one stationary multiline draw at the grid's
/// densities, each line recentered by 2 and diffusively rescaled.
pub fn sample_gn(cfg: &SamplerConfig, replica: u64, method: StationaryMethod) -> Result<GnDraw> {
    let densities = cfg.densities()?;
    let space = cfg.n_scale.powf(2.0 / 3.0);
    let m_half = (cfg.x0 * space).ceil() as i64 + 1;
    let len = (2 * m_half + 1) as usize;
    let windows = match method {
        StationaryMethod::BurnIn => sample_mu_burnin(
            &densities,
            -m_half,
            len,
            cfg.seed,
            replica,
            cfg.burn_in_factor,
        )?,
        StationaryMethod::Chain => {
            sample_mu_chain(&densities, -m_half, len, cfg.seed, replica)?
        }
    };
    let paths = windows
        .lines()
        .iter()
        .map(|line| Ok(diffusive_rescale(&interpolate(&line.add_scalar(-2.0))?, cfg.n_scale)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GnDraw {
        mu: cfg.mu_grid.clone(),
        windows,
        paths,
    })
}

fn bm_from_rng(
    drift: f64,
    domain: (f64, f64),
    grid_step: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PiecewiseLinearPath> {
    let (a, b) = domain;
    if !(grid_step > 0.0) || !grid_step.is_finite() {
        return Err(Error::NonPositive {
            what: "grid step",
            value: grid_step,
        });
    }
    if !(a <= 0.0 && b >= 0.0) || a == b {
        return Err(Error::InvalidConfig(format!(
            "Brownian domain [{a}, {b}] must contain the origin"
        )));
    }
    let n_left = (-a / grid_step).ceil() as usize;
    let n_right = (b / grid_step).ceil() as usize;
    let sd = (4.0 * grid_step).sqrt(); // diffusivity 2: variance 4 per unit time
    let mean = drift * grid_step;
    let mut knots = vec![0.0; n_left + n_right + 1];
    // Right side outward from the origin, then the left side, independently.
    let mut acc = 0.0;
    for j in 0..n_right {
        let z: f64 = StandardNormal.sample(rng);
        acc += mean + sd * z;
        knots[n_left + 1 + j] = acc;
    }
    let mut acc = 0.0;
    for j in 0..n_left {
        let z: f64 = StandardNormal.sample(rng);
        acc -= mean + sd * z;
        knots[n_left - 1 - j] = acc;
    }
    PiecewiseLinearPath::new(-(n_left as f64) * grid_step, grid_step, knots)
}

/// Two-sided Brownian discretization with diffusivity 2, pinned to zero at
/// the origin, both sides generated independently outward.
pub fn sample_two_sided_bm(
    drift: f64,
    domain: (f64, f64),
    grid_step: f64,
    seed: u64,
) -> Result<PiecewiseLinearPath> {
    let mut rng = stream_rng(seed, &[TAG_BM]);
    bm_from_rng(drift, domain, grid_step, &mut rng)
}

/// Configuration of a limit finite-dimensional draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShConfig {
    /// Strictly increasing drifts.
    pub drifts: Vec<f64>,
    /// Domain of the Brownian discretizations; the left end acts as the
    /// truncation boundary of the infinite past.
    pub domain: (f64, f64),
    pub grid_step: f64,
    /// Horizon of the locality gate; defaults to the largest admissible
    /// horizon `min(-left/2, right)`.
    pub locality_horizon: Option<f64>,
}

impl ShConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drifts.is_empty() {
            return Err(Error::InvalidConfig("empty drift list".into()));
        }
        if self.drifts.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::UnsortedGrid { what: "drift" });
        }
        if !(self.domain.0 < 0.0 && self.domain.1 > 0.0) {
            return Err(Error::InvalidConfig(
                "domain must straddle the origin".into(),
            ));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.locality_horizon
            .unwrap_or_else(|| (-self.domain.0 / 2.0).min(self.domain.1))
    }
}

/// One finite-dimensional draw of the limit family, or the locality report
/// that excluded it.
#[derive(Debug, Clone)]
pub enum ShDraw {
    Sample(Vec<PiecewiseLinearPath>),
    Excluded(LocalityReport),
}

/// Gate horizon keeping the exclusion rate of a drift gap `delta` near
/// half a percent: the running-max location escapes `[-2n, -n]` roughly
/// when a Normal(delta n, 8n) bridge dips below its starting level, so the
/// rate is about `Phi(-sqrt(delta^2 n / 8))` and `n = 50 / delta^2` puts
/// it at 2.5 sigma. The domain must cover `[-2n, n]`.
pub fn locality_horizon_for_gap(delta: f64) -> f64 {
    50.0 / (delta * delta)
}

/// Independent drifted Brownian discretizations pushed through the k-line
/// queue construction, gated by the locality check at every pairwise step.
pub fn sample_sh_fdd(cfg: &ShConfig, seed: u64, replica: u64) -> Result<ShDraw> {
    cfg.validate()?;
    let paths = cfg
        .drifts
        .iter()
        .enumerate()
        .map(|(i, &drift)| {
            let mut rng = stream_rng(seed, &[TAG_SH, replica, i as u64]);
            bm_from_rng(drift, cfg.domain, cfg.grid_step, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    if paths.len() == 1 {
        return Ok(ShDraw::Sample(paths));
    }
    match cq::q_k_gated(&paths, cfg.horizon())? {
        Gated::Accepted(lines) => Ok(ShDraw::Sample(lines)),
        Gated::Excluded(report) => Ok(ShDraw::Excluded(report)),
    }
}
