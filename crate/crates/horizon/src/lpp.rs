//! Independent cross-validation oracle: exponential lattice last-passage
//! percolation, stationary-boundary increment grids, and direction-limit
//! approximations of the passage-time differences.
//!
//! Cell weights come from a counter-based generator keyed by `(seed, i, j)`
//! so that grids of different sizes share their common cells, which makes
//! paired comparisons across sizes meaningful.

use crate::error::{Error, Result};

/// Safety cap on dynamic-programming area.
pub const CELL_BUDGET: usize = 1 << 26;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in (0, 1) from a cell counter.
fn cell_uniform(seed: u64, tag: u64, i: i64, j: i64) -> f64 {
    let h = mix64(
        mix64(seed ^ 0x243F_6A88_85A3_08D3)
            ^ mix64(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
            ^ mix64((i as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
                .wrapping_add(mix64((j as u64) ^ 0x1656_67B1_9E37_79F9)),
    );
    // 53 significant bits, strictly inside (0, 1).
    ((h >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Exponential rate-`rate` draw from a cell counter.
fn cell_exp(seed: u64, tag: u64, i: i64, j: i64, rate: f64) -> f64 {
    -(-cell_uniform(seed, tag, i, j)).ln_1p() / rate
}

const TAG_BULK: u64 = 11;
const TAG_SOUTH: u64 = 12;
const TAG_WEST: u64 = 13;
const TAG_ROW: u64 = 14;

/// Rectangular field of i.i.d. rate-1 weights addressed by vertex.
#[derive(Debug, Clone)]
pub struct LatticeGrid {
    seed: u64,
    size: (usize, usize),
}

impl LatticeGrid {
    pub fn new(n1: usize, n2: usize, seed: u64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::EmptyWindow);
        }
        if n1.saturating_mul(n2) > CELL_BUDGET {
            return Err(Error::BudgetExceeded {
                n1,
                n2,
                budget: CELL_BUDGET,
            });
        }
        Ok(LatticeGrid {
            seed,
            size: (n1, n2),
        })
    }

    pub fn size(&self) -> (usize, usize) {
        self.size
    }

    pub fn weight(&self, x: i64, y: i64) -> f64 {
        cell_exp(self.seed, TAG_BULK, x, y, 1.0)
    }
}

/// Maximum total weight collected by an up-right path from `from` to `to`,
/// both endpoint weights included.
pub fn last_passage(grid: &LatticeGrid, from: (i64, i64), to: (i64, i64)) -> Result<f64> {
    if to.0 < from.0 || to.1 < from.1 {
        return Err(Error::NotNortheast {
            x0: from.0,
            y0: from.1,
            x1: to.0,
            y1: to.1,
        });
    }
    let w = (to.0 - from.0) as usize + 1;
    let h = (to.1 - from.1) as usize + 1;
    if w.saturating_mul(h) > CELL_BUDGET {
        return Err(Error::BudgetExceeded {
            n1: w,
            n2: h,
            budget: CELL_BUDGET,
        });
    }
    let mut row = vec![f64::NEG_INFINITY; w];
    for jy in 0..h {
        let y = from.1 + jy as i64;
        for jx in 0..w {
            let x = from.0 + jx as i64;
            let best = if jx == 0 && jy == 0 {
                0.0
            } else {
                let left = if jx > 0 { row[jx - 1] } else { f64::NEG_INFINITY };
                let below = row[jx];
                left.max(below)
            };
            row[jx] = best + grid.weight(x, y);
        }
    }
    Ok(row[w - 1])
}

/// Characteristic direction associated with density `rho`, as a unit-sum
/// pair.
pub fn characteristic_direction(rho: f64) -> (f64, f64) {
    let a = rho * rho;
    let b = (1.0 - rho) * (1.0 - rho);
    (a / (a + b), b / (a + b))
}

/// Finite-`n` approximation of the passage-time difference toward the
/// characteristic direction: `L(x, v_n) - L(y, v_n)`. The estimator is
/// biased at finite `n` and its law approaches the stationary one as `n`
/// grows.
///
/// Weights are drawn per row from a row-keyed substream, so the grid for a
/// smaller `n` is exactly the lower-left corner of the grid for a larger
/// `n` under the same seed. Trend checks across `n` are paired replica by
/// replica and inherit that variance cancellation.
pub fn busemann_direction_limit(
    rho: f64,
    n: usize,
    x: (i64, i64),
    y: (i64, i64),
    seed: u64,
) -> Result<f64> {
    use rand_distr::{Distribution, Exp};

    if !(0.0 < rho && rho < 1.0) {
        return Err(Error::DensityOutOfRange { rho });
    }
    if x == y {
        return Ok(0.0);
    }
    let dir = characteristic_direction(rho);
    let target = (
        (n as f64 * dir.0).round() as i64,
        (n as f64 * dir.1).round() as i64,
    );
    if target.0 < x.0.max(y.0).max(0) || target.1 < x.1.max(y.1).max(0) {
        return Err(Error::NotNortheast {
            x0: x.0.max(y.0),
            y0: x.1.max(y.1),
            x1: target.0,
            y1: target.1,
        });
    }
    let base = (x.0.min(y.0).min(0), x.1.min(y.1).min(0));
    let w = (target.0 - base.0) as usize + 1;
    let h = (target.1 - base.1) as usize + 1;
    if w.saturating_mul(h) > CELL_BUDGET {
        return Err(Error::BudgetExceeded {
            n1: w,
            n2: h,
            budget: CELL_BUDGET,
        });
    }
    let unit = Exp::new(1.0).expect("rate 1");
    // One reverse sweep computes L(z, target) for every z at once; only a
    // single row of the value array is kept.
    let mut row = vec![f64::NEG_INFINITY; w];
    let mut weights = vec![0.0; w];
    let mut lx = f64::NAN;
    let mut ly = f64::NAN;
    for jy in (0..h).rev() {
        let yy = base.1 + jy as i64;
        let mut rng = crate::sampler::stream_rng(seed, &[TAG_ROW, yy as u64]);
        for slot in weights.iter_mut() {
            *slot = unit.sample(&mut rng);
        }
        for jx in (0..w).rev() {
            let xx = base.0 + jx as i64;
            let best = if jx + 1 == w && jy + 1 == h {
                0.0
            } else {
                let right = if jx + 1 < w {
                    row[jx + 1]
                } else {
                    f64::NEG_INFINITY
                };
                let above = row[jx];
                right.max(above)
            };
            row[jx] = best + weights[jx];
            if (xx, yy) == x {
                lx = row[jx];
            }
            if (xx, yy) == y {
                ly = row[jx];
            }
        }
    }
    Ok(lx - ly)
}

/// Stationary-boundary increment field: south and west boundary edges carry
/// independent exponential increments of rates `rho` and `1 - rho`, and the
/// bulk fills by the local move
///
/// ```text
/// north = w + (south - west)^+      east = w + (west - south)^+
/// ```
///
/// which conserves `south + east = west + north` around every face.
#[derive(Debug, Clone)]
pub struct StationaryGrid {
    rho: f64,
    n1: usize,
    n2: usize,
    /// Horizontal increments `h[j][i]`, the edge into `(i+1, j)`; row 0 is
    /// the south boundary.
    h: Vec<Vec<f64>>,
    /// Vertical increments `v[j][i]`, the edge into `(i, j+1)`; column 0 is
    /// the west boundary.
    v: Vec<Vec<f64>>,
}

impl StationaryGrid {
    /// Fills an `n1 x n2` field of faces from the boundary. Two fields
    /// built from the same seed share every underlying uniform draw, which
    /// is what the monotone density coupling relies on.
    pub fn build(rho: f64, n1: usize, n2: usize, seed: u64) -> Result<Self> {
        if !(0.0 < rho && rho < 1.0) {
            return Err(Error::DensityOutOfRange { rho });
        }
        if n1 == 0 || n2 == 0 {
            return Err(Error::EmptyWindow);
        }
        if n1.saturating_mul(n2) > CELL_BUDGET {
            return Err(Error::BudgetExceeded {
                n1,
                n2,
                budget: CELL_BUDGET,
            });
        }
        let mut h = vec![vec![0.0; n1]; n2 + 1];
        let mut v = vec![vec![0.0; n1 + 1]; n2];
        for i in 0..n1 {
            h[0][i] = cell_exp(seed, TAG_SOUTH, i as i64, 0, rho);
        }
        for j in 0..n2 {
            v[j][0] = cell_exp(seed, TAG_WEST, 0, j as i64, 1.0 - rho);
        }
        for j in 0..n2 {
            for i in 0..n1 {
                let w = cell_exp(seed, TAG_BULK, i as i64, j as i64, 1.0);
                let south = h[j][i];
                let west = v[j][i];
                let gap = south - west;
                h[j + 1][i] = w + gap.max(0.0);
                v[j][i + 1] = w + (-gap).max(0.0);
            }
        }
        Ok(StationaryGrid {
            rho,
            n1,
            n2,
            h,
            v,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Horizontal increments along row `j` (0 = south boundary).
    pub fn row_increments(&self, j: usize) -> &[f64] {
        &self.h[j]
    }

    pub fn rows(&self) -> usize {
        self.n2 + 1
    }

    pub fn cols(&self) -> usize {
        self.n1
    }

    /// Dual weight of face `(i, j)`: the minimum of its south and west
    /// increments.
    pub fn dual_weight(&self, i: usize, j: usize) -> f64 {
        self.h[j][i].min(self.v[j][i])
    }

    /// Closed-loop sum around face `(i, j)`; identically zero for a cocycle.
    pub fn face_residual(&self, i: usize, j: usize) -> f64 {
        (self.h[j][i] + self.v[j][i + 1]) - (self.v[j][i] + self.h[j + 1][i])
    }
}
