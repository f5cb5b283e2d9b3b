//! Batch driver: runs the identity and distribution suites and emits
//! plot-ready CSV data, with a JSON manifest and report per run.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_mu_grid, RunConfig};
use horizon::suites::{self, CheckResult};

#[derive(Parser)]
#[command(name = "horizon", version, about = "Stationary-horizon simulation and verification driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Configuration file (TOML); flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Scaling parameter of the prelimit family.
    #[arg(long = "n-scale")]
    n_scale: Option<f64>,
    /// Drift grid: comma list `a,b,c` or range `start:step:end`.
    #[arg(long = "mu-grid")]
    mu_grid: Option<String>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long = "grid-step")]
    grid_step: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long = "out-dir", default_value = "horizon-out")]
    out_dir: PathBuf,
    /// Run only suites whose name contains this substring.
    #[arg(long)]
    suite: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic identity suites on random fixtures.
    Identities(CommonOpts),
    /// Distributional suites (goodness-of-fit and correlation checks).
    Distributions(CommonOpts),
    /// Coupled drift-indexed family over a mu x space grid, with epochs.
    Sticky(CommonOpts),
    /// Packed and stationary sorted-line ensembles for figure data.
    MelonFigure(CommonOpts),
}

fn effective_config(opts: &CommonOpts) -> Result<RunConfig, String> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(r) = opts.replicas {
        cfg.replicas = r;
    }
    if let Some(n) = opts.n_scale {
        cfg.n_scale = n;
    }
    if let Some(g) = &opts.mu_grid {
        cfg.mu_grid = parse_mu_grid(g)?;
    }
    if let Some(x) = opts.x0 {
        cfg.x0 = x;
    }
    if let Some(s) = opts.grid_step {
        cfg.grid_step = s;
    }
    if let Some(a) = opts.alpha {
        cfg.alpha = a;
    }
    if let Some(t) = opts.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn init_threads(cfg: &RunConfig) {
    if cfg.threads > 0 {
        // Per-replica substreams keep results identical for any pool size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
}

fn filtered(results: Vec<CheckResult>, suite: &Option<String>) -> Vec<CheckResult> {
    match suite {
        Some(pat) => results
            .into_iter()
            .filter(|r| r.name.contains(pat.as_str()))
            .collect(),
        None => results,
    }
}

fn run_identities(opts: &CommonOpts) -> Result<bool, String> {
    let cfg = effective_config(opts)?;
    init_threads(&cfg);
    let mut results = suites::identity_suite(cfg.seed, cfg.fixtures).map_err(|e| e.to_string())?;
    let ns: Vec<usize> = (2..=6).collect();
    results.push(
        suites::melon_equivalence(cfg.seed, 2000, 25, &ns).map_err(|e| e.to_string())?,
    );
    let results = filtered(results, &opts.suite);
    output::emit_report("identities", &cfg, &opts.out_dir, &results, &[])?;
    Ok(suites::all_pass(&results))
}

fn run_distributions(opts: &CommonOpts) -> Result<bool, String> {
    let cfg = effective_config(opts)?;
    init_threads(&cfg);
    let n = cfg.replicas;
    let alpha = cfg.alpha;
    let seed = cfg.seed;
    let mut results = Vec::new();
    let wants = |name: &str| {
        opts.suite
            .as_ref()
            .map(|p| name.contains(p.as_str()))
            .unwrap_or(true)
    };

    if wants("queue") {
        results.extend(
            suites::stationary_queue_marginals(seed, n, alpha, 0.6, 0.4)
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("melon") {
        results.extend(
            suites::melon_sojourn_independence(seed, n, alpha, &[0.60, 0.55, 0.50, 0.45])
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("stationarity") {
        results.extend(
            suites::tandem_push_stationarity(seed, n, alpha, 0.7, &[0.6, 0.5, 0.4])
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("limit") {
        results.extend(
            suites::limit_marginal_brownian(seed, n.min(20_000), alpha, &[0.0, 1.0])
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("burke") {
        results.extend(
            suites::burke_two_line(seed, n.min(10_000), alpha, cfg.grid_step.min(1e-3))
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("cross") {
        results.extend(
            suites::prelimit_vs_limit(seed, n.min(10_000), alpha).map_err(|e| e.to_string())?,
        );
    }
    if wants("scale") {
        results.extend(
            suites::scale_invariance(seed, n.min(10_000), alpha, 2.0)
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("oracle") {
        results.extend(suites::oracle_row_law(seed, alpha, 0.5).map_err(|e| e.to_string())?);
        results.extend(
            suites::oracle_direction_trend(seed, n.min(3000), 2000, 4000, 0.5)
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("gap") {
        results.extend(
            suites::gap_inequality(seed, n.min(1000), 50, (0.6, 0.4))
                .map_err(|e| e.to_string())?,
        );
    }
    if wants("epochs") {
        results.extend(suites::epoch_statistics(seed, n.min(4000)).map_err(|e| e.to_string())?);
    }
    if wants("prelimit") {
        results.push(
            suites::coupled_monotonicity(seed, n.min(1000)).map_err(|e| e.to_string())?,
        );
    }

    output::emit_report("distributions", &cfg, &opts.out_dir, &results, &[])?;
    Ok(suites::all_pass(&results))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Identities(opts) => run_identities(opts),
        Command::Distributions(opts) => run_distributions(opts),
        Command::Sticky(opts) => effective_config(opts).and_then(|cfg| {
            init_threads(&cfg);
            output::run_sticky(&cfg, &opts.out_dir)
        }),
        Command::MelonFigure(opts) => effective_config(opts).and_then(|cfg| {
            init_threads(&cfg);
            output::run_melon_figure(&cfg, &opts.out_dir)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed; see the report");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
