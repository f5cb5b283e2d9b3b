//! Run configuration: one file (TOML) as the single source of truth, with
//! command-line overrides on top.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub replicas: usize,
    /// Scaling parameter of the prelimit family.
    pub n_scale: f64,
    /// Drift grid, strictly increasing.
    pub mu_grid: Vec<f64>,
    /// Spatial half-width of reported windows.
    pub x0: f64,
    /// Knot spacing of Brownian discretizations.
    pub grid_step: f64,
    /// Level of every distributional test.
    pub alpha: f64,
    /// Empty-start relaxation constant (steps = factor / gap^2).
    pub burn_in_factor: f64,
    /// Fixtures per deterministic identity family.
    pub fixtures: usize,
    /// Worker threads; 0 picks the number of cores.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0x5741_7e12,
            replicas: 20_000,
            n_scale: 1e6,
            mu_grid: vec![-1.0, 0.0, 1.0],
            x0: 1.0,
            grid_step: 1e-2,
            alpha: 1e-3,
            burn_in_factor: 16.0,
            fixtures: 100,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("reading {path:?}: {e}"))?;
        toml::from_str(&text).map_err(|e| format!("parsing {path:?}: {e}"))
    }
}

/// Drift grids parse either as a comma list `a,b,c` or as a range
/// `start:step:end` (inclusive end, up to rounding).
pub fn parse_mu_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let grid: Vec<f64> = if parts.len() == 3 {
        let start: f64 = parts[0].parse().map_err(|e| format!("{e}"))?;
        let step: f64 = parts[1].parse().map_err(|e| format!("{e}"))?;
        let end: f64 = parts[2].parse().map_err(|e| format!("{e}"))?;
        if !(step > 0.0) || end < start {
            return Err("range must have positive step and end >= start".into());
        }
        let n = ((end - start) / step).round() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{e}")))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err("drift grid must be nonempty and strictly increasing".into());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_mu_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_mu_grid("-1:0.5:1").unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[4], 1.0);
        assert!(parse_mu_grid("1,0").is_err());
        assert!(parse_mu_grid("1:-1:2").is_err());
    }
}
