//! Report, manifest and CSV emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use horizon::cq::detect_epochs_windows;
use horizon::io as hio;
use horizon::melon::packed_melon;
use horizon::path::interpolate;
use horizon::sampler::{sample_gn, sample_two_sided_bm, SamplerConfig, StationaryMethod};
use horizon::suites::CheckResult;

use crate::config::RunConfig;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    config_hash: u64,
    seed: u64,
    unix_time: u64,
    outputs: Vec<String>,
    checks_total: usize,
    checks_passed: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    config_hash: u64,
    results: &'a [CheckResult],
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("writing {path:?}: {e}"))
}

/// Writes report.json + manifest.json, prints one line per check.
pub fn emit_report(
    command: &str,
    cfg: &RunConfig,
    out_dir: &Path,
    results: &[CheckResult],
    extra_outputs: &[PathBuf],
) -> Result<(), String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("creating {out_dir:?}: {e}"))?;
    for r in results {
        println!("{}", r.line());
    }
    let hash = hio::config_hash(cfg);
    let report = Report {
        command,
        config_hash: hash,
        results,
    };
    let report_path = out_dir.join("report.json");
    write_file(
        &report_path,
        serde_json::to_string_pretty(&report)
            .map_err(|e| e.to_string())?
            .as_bytes(),
    )?;
    let mut outputs: Vec<String> = vec![report_path.display().to_string()];
    outputs.extend(extra_outputs.iter().map(|p| p.display().to_string()));
    let manifest = Manifest {
        command,
        config: cfg,
        config_hash: hash,
        seed: cfg.seed,
        unix_time: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs,
        checks_total: results.len(),
        checks_passed: results.iter().filter(|r| r.pass).count(),
    };
    write_file(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| e.to_string())?
            .as_bytes(),
    )?;
    Ok(())
}

fn sampler_config(cfg: &RunConfig) -> SamplerConfig {
    SamplerConfig {
        seed: cfg.seed,
        n_scale: cfg.n_scale,
        mu_grid: cfg.mu_grid.clone(),
        x0: cfg.x0,
        burn_in_factor: cfg.burn_in_factor,
        replicas: cfg.replicas,
        grid_step: cfg.grid_step,
    }
}

/// Coupled drift-indexed family over a mu x space grid: line values on a
/// decimated x-grid for a handful of replicas, plus the epoch list over
/// all replicas.
pub fn run_sticky(cfg: &RunConfig, out_dir: &Path) -> Result<bool, String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("creating {out_dir:?}: {e}"))?;
    let scfg = sampler_config(cfg);
    scfg.validate().map_err(|e| e.to_string())?;

    let lines_path = out_dir.join("sticky_lines.csv");
    let epochs_path = out_dir.join("sticky_epochs.csv");

    let mut lines_csv = Vec::new();
    writeln!(&mut lines_csv, "replica,mu,x,value").map_err(|e| e.to_string())?;
    let emit_replicas = cfg.replicas.min(16) as u64;
    let x_points = 201usize;
    for replica in 0..emit_replicas {
        let draw =
            sample_gn(&scfg, replica, StationaryMethod::Chain).map_err(|e| e.to_string())?;
        for (mu, path) in draw.mu.iter().zip(&draw.paths) {
            for j in 0..x_points {
                let x = -cfg.x0 + 2.0 * cfg.x0 * j as f64 / (x_points - 1) as f64;
                let v = path.eval(x).map_err(|e| e.to_string())?;
                writeln!(&mut lines_csv, "{replica},{mu:.17e},{x:.17e},{v:.17e}")
                    .map_err(|e| e.to_string())?;
            }
        }
    }
    write_file(&lines_path, &lines_csv)?;

    let mut epochs_csv = Vec::new();
    writeln!(&mut epochs_csv, "replica,epoch_mu").map_err(|e| e.to_string())?;
    let epoch_replicas = cfg.replicas.min(2000) as u64;
    let mut total_epochs = 0usize;
    for replica in 0..epoch_replicas {
        let draw =
            sample_gn(&scfg, replica, StationaryMethod::Chain).map_err(|e| e.to_string())?;
        let family: Vec<(f64, horizon::Window)> = draw
            .mu
            .iter()
            .cloned()
            .zip(draw.windows.lines().iter().cloned())
            .collect();
        let epochs = detect_epochs_windows(&family, 0.0).map_err(|e| e.to_string())?;
        total_epochs += epochs.len();
        for mu in epochs {
            writeln!(&mut epochs_csv, "{replica},{mu:.17e}").map_err(|e| e.to_string())?;
        }
    }
    write_file(&epochs_path, &epochs_csv)?;

    let summary = CheckResult::new(
        "sticky.emitted",
        0.0,
        0.0,
        format!(
            "{} line replicas, {} epoch replicas, {} epochs total",
            emit_replicas, epoch_replicas, total_epochs
        ),
    );
    emit_report(
        "sticky",
        cfg,
        out_dir,
        std::slice::from_ref(&summary),
        &[lines_path, epochs_path],
    )?;
    Ok(true)
}

/// Packed and stationary sorted ensembles for the figure comparison.
pub fn run_melon_figure(cfg: &RunConfig, out_dir: &Path) -> Result<bool, String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("creating {out_dir:?}: {e}"))?;
    let k = 5usize;

    // Packed: independent driftless Brownian paths on [0, T], sorted.
    let t_end = 1.0;
    let step = cfg.grid_step.min(1e-2);
    let paths: Vec<_> = (0..k)
        .map(|i| {
            sample_two_sided_bm(0.0, (0.0, t_end), step, cfg.seed ^ (0x3e10 + i as u64))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let packed = packed_melon(&paths).map_err(|e| e.to_string())?;
    let packed_path = out_dir.join("melon_packed.csv");
    let mut csv = Vec::new();
    let labeled: Vec<(f64, &horizon::PiecewiseLinearPath)> = packed
        .iter()
        .enumerate()
        .map(|(i, p)| (i as f64, p))
        .collect();
    hio::paths_to_csv(&labeled, "line", &mut csv).map_err(|e| e.to_string())?;
    write_file(&packed_path, &csv)?;

    // Stationary: sorted exponential lines, shown as interpolated walks
    // recentred by their common mean slope.
    let rates: Vec<f64> = (0..k).map(|i| 0.9 - 0.1 * i as f64).collect();
    let dens = horizon::DensityVector::new(rates).map_err(|e| e.to_string())?;
    let len = 200usize;
    let ens = horizon::sampler::sample_mu(&dens, -(len as i64) / 2, len, cfg.seed ^ 0x3e20, 0)
        .map_err(|e| e.to_string())?;
    let walks: Vec<horizon::PiecewiseLinearPath> = ens
        .lines()
        .iter()
        .map(|l| interpolate(&l.add_scalar(-2.0)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let stationary_path = out_dir.join("melon_stationary.csv");
    let mut csv = Vec::new();
    let labeled: Vec<(f64, &horizon::PiecewiseLinearPath)> = walks
        .iter()
        .enumerate()
        .map(|(i, p)| (i as f64, p))
        .collect();
    hio::paths_to_csv(&labeled, "line", &mut csv).map_err(|e| e.to_string())?;
    write_file(&stationary_path, &csv)?;

    let summary = CheckResult::new(
        "melon-figure.emitted",
        0.0,
        0.0,
        format!("{k} packed paths, {k} stationary lines of length {len}"),
    );
    emit_report(
        "melon-figure",
        cfg,
        out_dir,
        std::slice::from_ref(&summary),
        &[packed_path, stationary_path],
    )?;
    Ok(true)
}
