use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use poa_core::ctmc::{fpi_rates, NetworkConfig, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS};
use poa_core::sim::{matched_pow_difficulty, run_sim, Exterior, Occupancy, SimConfig, SimMode, SimReport};
use poa_lab::format::{f17, to_json17};
use poa_lab::{run_experiment, validate_spec, LabError, Overrides};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "poa-lab", version, about = "Proof-of-Age analytics and simulation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write its CSV tables and manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        blocks: Option<u64>,
    },
    /// Solve the pool/solo rate fixed point and print key=value lines.
    Solve(SolveArgs),
    /// Run one simulation and print its report as JSON.
    Simulate(SimArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    n1: u64,
    #[arg(long)]
    d1: u32,
    #[arg(long)]
    d2: u32,
    #[arg(long)]
    d_s: u32,
    #[arg(long)]
    delta: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Poa,
    Pow,
}

#[derive(clap::Args)]
struct SimArgs {
    #[arg(long)]
    n1: u64,
    #[arg(long)]
    n2: u64,
    #[arg(long)]
    d1: u32,
    #[arg(long)]
    d2: u32,
    #[arg(long)]
    d_s: u32,
    #[arg(long)]
    delta: u64,
    #[arg(long, default_value_t = 100_000)]
    blocks: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Uncounted leading rounds (default 10 * delta).
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Poa)]
    mode: Mode,
    /// PoW difficulty exponent; defaults to the one matching the PoA
    /// fixed-point throughput.
    #[arg(long)]
    pow_difficulty: Option<f64>,
    /// Replace the solo miners by one Poisson source at their analytic rate.
    #[arg(long)]
    aggregate: bool,
    /// Write inter-arrival samples as CSV (entity_kind,gap).
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    seed: u64,
    blocks: u64,
    warmup: u64,
    mode: SimMode,
    exterior_aggregated: bool,
    block_counts: &'a [u64],
    ring_counts: &'a [u64],
    pool_gap_count: usize,
    solo_gap_count: usize,
    virtual_time: f64,
    rho_pool: f64,
    rho_solo: f64,
    rho_total: f64,
    pool_occupancy: &'a Occupancy,
}

impl<'a> From<&'a SimReport> for ReportDoc<'a> {
    fn from(r: &'a SimReport) -> Self {
        Self {
            seed: r.seed,
            blocks: r.blocks,
            warmup: r.warmup,
            mode: r.mode,
            exterior_aggregated: r.exterior_aggregated,
            block_counts: &r.block_counts,
            ring_counts: &r.ring_counts,
            pool_gap_count: r.pool_gaps.len(),
            solo_gap_count: r.solo_gaps.len(),
            virtual_time: r.virtual_time,
            rho_pool: r.rho_pool,
            rho_solo: r.rho_solo,
            rho_total: r.rho_total,
            pool_occupancy: &r.pool_occupancy,
        }
    }
}

fn config_error(message: impl Into<String>) -> LabError {
    LabError::Config(vec![poa_lab::Diagnostic { path: "<args>".into(), message: message.into() }])
}

fn network(n: u64, n1: u64, d1: u32, d2: u32, d_s: u32, delta: u64) -> Result<NetworkConfig, LabError> {
    NetworkConfig::new(n, n1, d1, d2, d_s, delta).map_err(|e| config_error(e.to_string()))
}

fn cmd_run(config: PathBuf, overrides: Overrides) -> Result<(), LabError> {
    let text = fs::read_to_string(&config).map_err(|e| LabError::io(&config, e))?;
    let mut spec = validate_spec(&text).map_err(LabError::Config)?;
    spec.apply(&overrides).map_err(LabError::Config)?;
    let summary = run_experiment(&spec)?;
    for p in &summary.outputs {
        println!("{}", p.display());
    }
    if summary.failed_points.is_empty() {
        Ok(())
    } else {
        Err(LabError::Numeric {
            context: format!("{} grid point(s) failed", summary.failed_points.len()),
            message: summary.failed_points.join("; "),
        })
    }
}

fn cmd_solve(a: SolveArgs) -> Result<(), LabError> {
    let cfg = network(a.n, a.n1, a.d1, a.d2, a.d_s, a.delta)?;
    let cfg = NetworkConfig { epsilon: a.epsilon, max_iterations: a.max_iterations, ..cfg };
    cfg.validate().map_err(|e| config_error(e.to_string()))?;
    let s = fpi_rates(&cfg).map_err(|e| LabError::Numeric { context: "fixed point".into(), message: e.to_string() })?;
    let lines = [
        ("rho_pool", f17(s.rho_pool)),
        ("rho_solo", f17(s.rho_solo)),
        ("rho_total", f17(s.rho_total)),
        ("f_poa", f17(s.f_poa)),
        ("f_pow", f17(s.f_pow)),
        ("g", f17(s.g)),
        ("reduced_to_percent", f17(s.reduced_to_percent())),
        ("reduced_by_percent", f17(s.reduced_by_percent())),
        ("phi_pool", f17(s.phi_pool)),
        ("phi_solo", f17(s.phi_solo)),
        ("iterations", s.iterations.to_string()),
        ("residual", f17(s.residual)),
    ];
    for (k, v) in lines {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_simulate(a: SimArgs) -> Result<(), LabError> {
    let needs_fpi = a.aggregate || (matches!(a.mode, Mode::Pow) && a.pow_difficulty.is_none());
    let sol = if needs_fpi {
        let cfg = network(a.n1 + a.n2, a.n1, a.d1, a.d2, a.d_s, a.delta)?;
        Some(fpi_rates(&cfg).map_err(|e| LabError::Numeric { context: "fixed point".into(), message: e.to_string() })?)
    } else {
        None
    };
    let mode = match a.mode {
        Mode::Poa => SimMode::Poa,
        Mode::Pow => SimMode::Pow {
            log2_difficulty: a
                .pow_difficulty
                .unwrap_or_else(|| matched_pow_difficulty(a.n1 + a.n2, sol.expect("solved").rho_total)),
        },
    };
    let exterior = if a.aggregate {
        let rate = match mode {
            SimMode::Poa => a.n2 as f64 * sol.expect("solved").rho_solo,
            SimMode::Pow { log2_difficulty } => a.n2 as f64 * (-log2_difficulty).exp2(),
        };
        Exterior::Poisson { rate }
    } else {
        Exterior::Individual
    };
    let cfg = SimConfig {
        n1: a.n1,
        n2: a.n2,
        d1: a.d1,
        d2: a.d2,
        d_s: a.d_s,
        delta: a.delta,
        blocks: a.blocks,
        seed: a.seed,
        mode,
        warmup: a.warmup,
        exterior,
    };
    let report = run_sim(&cfg).map_err(|e| config_error(e.to_string()))?;
    if let Some(path) = &a.samples {
        let mut w = csv::Writer::from_path(path).map_err(|e| LabError::io(path, e.into()))?;
        let rows = report.pool_gaps.iter().map(|g| ("pool", g)).chain(report.solo_gaps.iter().map(|g| ("solo", g)));
        w.write_record(["entity_kind", "gap"]).map_err(|e| LabError::io(path, e.into()))?;
        for (kind, g) in rows {
            w.write_record([kind, &f17(*g)]).map_err(|e| LabError::io(path, e.into()))?;
        }
        w.flush().map_err(|e| LabError::io(path, e))?;
    }
    let text = to_json17(&ReportDoc::from(&report)).map_err(|e| LabError::io("<stdout>", e.into()))?;
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| LabError::io("<stdout>", e))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.cmd {
        Cmd::Run { config, out, seeds, blocks } => cmd_run(config, Overrides { output_dir: out, seeds, blocks }),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
