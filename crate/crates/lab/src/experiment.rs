//! Running experiments and writing their tables.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use poa_core::ctmc::{
    fpi_rates, gain_gap_curve, realize_ratio, solo_interarrival_rate, InterArrivalParams, NetworkConfig,
    RateSolution,
};
use poa_core::sim::{
    histogram, ks_statistic, matched_pow_difficulty, run_sim, tv_distance, Exterior, Histogram, SimConfig, SimMode,
    SimReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentKind, ExperimentSpec};
use crate::error::LabError;
use crate::format::{f17, to_json17};

/// Solo populations above this size are simulated as one Poisson source.
pub const AGGREGATE_ABOVE: u64 = 1000;

/// Points of the analytic curve written next to each pool histogram.
const CURVE_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Every file written, manifest last.
    pub outputs: Vec<PathBuf>,
    /// Grid points whose fixed-point iteration failed. Their rows carry the
    /// error in a `status` column.
    pub failed_points: Vec<String>,
}

struct Table {
    file: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: impl Into<String>, header: &[&'static str]) -> Self {
        Self { file: file.into(), header: header.to_vec(), rows: Vec::new() }
    }
}

fn network_config(spec: &ExperimentSpec, n1: u64, delta: u64) -> Result<NetworkConfig, LabError> {
    let net = &spec.network;
    let cfg = NetworkConfig {
        n: net.n,
        n1,
        d1: net.d1,
        d2: net.d2,
        d_s: net.d_s,
        delta,
        epsilon: net.epsilon,
        max_iterations: net.max_iterations,
    };
    cfg.validate().map_err(|e| LabError::numeric(format!("n1={n1} delta={delta}"), e))?;
    Ok(cfg)
}

fn solve(cfg: &NetworkConfig) -> Result<RateSolution, LabError> {
    fpi_rates(cfg).map_err(|e| LabError::numeric(format!("fixed point at n1={} delta={}", cfg.n1, cfg.delta), e))
}

/// Simulation config for one grid point. Large solo populations are
/// replaced by a Poisson source at their analytic aggregate rate.
fn sim_config(spec: &ExperimentSpec, cfg: &NetworkConfig, sol: &RateSolution, mode: SimMode, seed: u64) -> SimConfig {
    let n2 = cfg.n2();
    let exterior = if n2 > AGGREGATE_ABOVE {
        let rate = match mode {
            SimMode::Poa => n2 as f64 * sol.rho_solo,
            SimMode::Pow { log2_difficulty } => n2 as f64 * (-log2_difficulty).exp2(),
        };
        Exterior::Poisson { rate }
    } else {
        Exterior::Individual
    };
    SimConfig {
        n1: cfg.n1,
        n2,
        d1: cfg.d1,
        d2: cfg.d2,
        d_s: cfg.d_s,
        delta: cfg.delta,
        blocks: spec.blocks,
        seed,
        mode,
        warmup: Some(spec.warmup_for(cfg.delta)),
        exterior,
    }
}

fn simulate(cfg: &SimConfig) -> Result<SimReport, LabError> {
    run_sim(cfg).map_err(|e| LabError::numeric(format!("simulation n1={} delta={} seed={}", cfg.n1, cfg.delta, cfg.seed), e))
}

fn grid_points(spec: &ExperimentSpec) -> Result<Vec<(u64, f64, u64)>, LabError> {
    let mut out = Vec::new();
    for &delta in &spec.deltas {
        for &ratio in &spec.ratios {
            let n1 = realize_ratio(spec.network.n, ratio).map_err(|e| LabError::numeric(format!("ratio {ratio}"), e))?;
            out.push((delta, ratio, n1));
        }
    }
    Ok(out)
}

fn gap_sweep(spec: &ExperimentSpec, failed: &mut Vec<String>) -> Result<Vec<Table>, LabError> {
    let mut t = Table::new(
        "gap_sweep.csv",
        &[
            "ratio",
            "delta",
            "g",
            "n1",
            "n2",
            "f_poa",
            "f_pow",
            "reduced_to_percent",
            "reduced_by_percent",
            "iterations",
            "status",
        ],
    );
    let curves: Vec<_> = spec
        .deltas
        .par_iter()
        .map(|&delta| {
            let base = network_config(spec, 1, delta)?;
            gain_gap_curve(&base, &spec.ratios).map(|c| (delta, c)).map_err(|e| LabError::numeric(format!("delta={delta}"), e))
        })
        .collect::<Result<_, _>>()?;
    for (delta, curve) in curves {
        for p in curve {
            let mut row = vec![f17(p.ratio), delta.to_string()];
            match p.solution {
                Ok(s) => row.extend([
                    f17(s.g),
                    p.n1.to_string(),
                    p.n2.to_string(),
                    f17(s.f_poa),
                    f17(s.f_pow),
                    f17(s.reduced_to_percent()),
                    f17(s.reduced_by_percent()),
                    s.iterations.to_string(),
                    "ok".into(),
                ]),
                Err(e) => {
                    failed.push(format!("ratio={} delta={delta}: {e}", f17(p.ratio)));
                    row.extend([String::new(), p.n1.to_string(), p.n2.to_string()]);
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.push(format!("error: {e}"));
                }
            }
            t.rows.push(row);
        }
    }
    Ok(vec![t])
}

fn throughput(spec: &ExperimentSpec) -> Result<Vec<Table>, LabError> {
    let mut t = Table::new(
        "throughput.csv",
        &[
            "ratio",
            "rho_total_fpi",
            "rho_pool_fpi",
            "rho_solo_fpi",
            "rho_total_sim",
            "rho_pool_sim",
            "rho_solo_sim",
            "delta",
            "n1",
            "n2",
            "seed",
            "exterior_aggregated",
        ],
    );
    let mut jobs = Vec::new();
    for (delta, ratio, n1) in grid_points(spec)? {
        let cfg = network_config(spec, n1, delta)?;
        let sol = solve(&cfg)?;
        for &seed in &spec.seeds {
            jobs.push((ratio, cfg, sol, seed));
        }
    }
    let reports: Vec<SimReport> = jobs
        .par_iter()
        .map(|(_, cfg, sol, seed)| simulate(&sim_config(spec, cfg, sol, SimMode::Poa, *seed)))
        .collect::<Result<_, _>>()?;
    for ((ratio, cfg, sol, seed), r) in jobs.iter().zip(&reports) {
        t.rows.push(vec![
            f17(*ratio),
            f17(sol.rho_total),
            f17(sol.rho_pool),
            f17(sol.rho_solo),
            f17(r.rho_total),
            f17(r.rho_pool),
            f17(r.rho_solo),
            cfg.delta.to_string(),
            cfg.n1.to_string(),
            cfg.n2().to_string(),
            seed.to_string(),
            r.exterior_aggregated.to_string(),
        ]);
    }
    Ok(vec![t])
}

fn hist_rows(h: &Histogram, mut reference: impl FnMut(f64) -> f64) -> Vec<Vec<String>> {
    const PANELS: usize = 16;
    (0..h.counts.len())
        .map(|k| {
            let (a, b) = h.edges(k);
            // Mean of the reference density over the bin (Simpson).
            let step = (b - a) / PANELS as f64;
            let mut acc = reference(a) + reference(b);
            for j in 1..PANELS {
                acc += reference(a + j as f64 * step) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            let mean = acc * step / 3.0 / (b - a);
            vec![f17(a), f17(b), h.counts[k].to_string(), f17(h.density[k]), f17(mean)]
        })
        .collect()
}

fn histograms(spec: &ExperimentSpec) -> Result<Vec<Table>, LabError> {
    let n1 = spec.network.n1.expect("validated");
    let mut summary = Table::new(
        "summary.csv",
        &[
            "delta",
            "seed",
            "pool_gaps",
            "solo_gaps",
            "pool_tv_distance",
            "solo_ks_statistic",
            "solo_ks_critical",
            "solo_ks_pass",
            "all_solo_rate",
            "gaussian_regime",
            "solo_premise_holds",
        ],
    );
    let mut jobs = Vec::new();
    for &delta in &spec.deltas {
        let cfg = network_config(spec, n1, delta)?;
        let sol = solve(&cfg)?;
        let ip = InterArrivalParams::new(&cfg, spec.spread_model).map_err(|e| LabError::numeric(format!("delta={delta}"), e))?;
        let solo = solo_interarrival_rate(&cfg).map_err(|e| LabError::numeric(format!("delta={delta}"), e))?;
        if !ip.gaussian_regime {
            warn!("delta={delta} is below the Gaussian-approximation regime; the pool density is indicative only");
        }
        if !solo.premise_holds {
            warn!("delta={delta}: the solo-rate approximation premise does not hold");
        }
        for &seed in &spec.seeds {
            jobs.push((cfg, sol, ip, solo, seed));
        }
    }
    let reports: Vec<SimReport> = jobs
        .par_iter()
        .map(|(cfg, sol, _, _, seed)| simulate(&sim_config(spec, cfg, sol, SimMode::Poa, *seed)))
        .collect::<Result<_, _>>()?;

    let mut tables = Vec::new();
    for ((cfg, _, ip, solo, seed), r) in jobs.iter().zip(&reports) {
        let tag = format!("delta{}_seed{seed}", cfg.delta);
        let context = |what: &str| format!("{what} delta={} seed={seed}", cfg.delta);
        let pool_h = histogram(&r.pool_gaps, spec.bins).map_err(|e| LabError::numeric(context("pool histogram"), e))?;
        let solo_h = histogram(&r.solo_gaps, spec.bins).map_err(|e| LabError::numeric(context("solo histogram"), e))?;
        let pdf = |t: f64| ip.pdf(t).unwrap_or(f64::NAN);
        let tv = tv_distance(&pool_h, |t| ip.pdf(t)).map_err(|e| LabError::numeric(context("pool density"), e))?;
        let lo = solo.all_solo_rate;
        let mut sorted = r.solo_gaps.clone();
        sorted.sort_by(f64::total_cmp);
        let ks = ks_statistic(&sorted, lo).map_err(|e| LabError::numeric(context("solo KS"), e))?;

        let mut t = Table::new(format!("pool_hist_{tag}.csv"), &["bin_lo", "bin_hi", "count", "density", "pdf_bin_mean"]);
        t.rows = hist_rows(&pool_h, pdf);
        tables.push(t);
        let mut t = Table::new(format!("solo_hist_{tag}.csv"), &["bin_lo", "bin_hi", "count", "density", "exp_bin_mean"]);
        t.rows = hist_rows(&solo_h, |x| lo * (-lo * x).exp());
        tables.push(t);
        let mut t = Table::new(format!("pool_pdf_{tag}.csv"), &["t", "pdf"]);
        let span = pool_h.width * pool_h.counts.len() as f64;
        t.rows = (0..CURVE_POINTS)
            .map(|k| {
                let x = span * k as f64 / (CURVE_POINTS - 1) as f64;
                vec![f17(x), f17(pdf(x))]
            })
            .collect();
        tables.push(t);
        summary.rows.push(vec![
            cfg.delta.to_string(),
            seed.to_string(),
            r.pool_gaps.len().to_string(),
            r.solo_gaps.len().to_string(),
            f17(tv),
            f17(ks.statistic),
            f17(ks.critical),
            ks.pass.to_string(),
            f17(lo),
            ip.gaussian_regime.to_string(),
            solo.premise_holds.to_string(),
        ]);
    }
    tables.push(summary);
    Ok(tables)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn pow_vs_poa(spec: &ExperimentSpec) -> Result<Vec<Table>, LabError> {
    let mut t = Table::new(
        "pow_vs_poa.csv",
        &[
            "mode",
            "delta",
            "ratio",
            "n1",
            "n2",
            "pow_log2_difficulty",
            "exterior_aggregated",
            "seeds",
            "pool_share_mean",
            "pool_share_std",
            "member_share_mean",
            "member_share_std",
            "solo_share_mean",
            "solo_share_std",
            "pool_gap_std_norm_mean",
            "pool_gap_std_norm_std",
        ],
    );
    let mut points = Vec::new();
    for (delta, ratio, n1) in grid_points(spec)? {
        let cfg = network_config(spec, n1, delta)?;
        let sol = solve(&cfg)?;
        let d = matched_pow_difficulty(cfg.n, sol.rho_total);
        for (name, mode) in [("poa", SimMode::Poa), ("pow", SimMode::Pow { log2_difficulty: d })] {
            points.push((name, ratio, cfg, sol, mode, d));
        }
    }
    let jobs: Vec<(usize, SimConfig)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, (_, _, cfg, sol, mode, _))| spec.seeds.iter().map(move |&s| (i, sim_config(spec, cfg, sol, *mode, s))))
        .collect();
    let reports: Vec<SimReport> = jobs.par_iter().map(|(_, c)| simulate(c)).collect::<Result<_, _>>()?;

    for (i, (name, ratio, cfg, _, _, d)) in points.iter().enumerate() {
        let rs: Vec<&SimReport> = jobs.iter().zip(&reports).filter(|((j, _), _)| *j == i).map(|(_, r)| r).collect();
        let pool: Vec<f64> = rs.iter().map(|r| r.rho_pool / r.rho_total).collect();
        let member: Vec<f64> = pool.iter().map(|p| p / cfg.n1 as f64).collect();
        let solo: Vec<f64> = rs.iter().map(|r| r.rho_solo / r.rho_total).collect();
        let gap_std: Vec<f64> = rs.iter().map(|r| mean_std(&r.pool_gaps).1 * r.rho_total).collect();
        let mut row = vec![
            name.to_string(),
            cfg.delta.to_string(),
            f17(*ratio),
            cfg.n1.to_string(),
            cfg.n2().to_string(),
            f17(*d),
            rs[0].exterior_aggregated.to_string(),
            rs.len().to_string(),
        ];
        for xs in [&pool, &member, &solo, &gap_std] {
            let (m, s) = mean_std(xs);
            row.push(f17(m));
            row.push(f17(s));
        }
        t.rows.push(row);
    }
    Ok(vec![t])
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    kind: ExperimentKind,
    version: &'static str,
    spec: &'a ExperimentSpec,
    defaulted: &'a [String],
    overridden: &'a [String],
    /// Warm-up rounds actually used, per δ.
    warmup_rounds: Vec<(u64, u64)>,
    aggregate_solo_above: u64,
    outputs: Vec<String>,
    failed_points: &'a [String],
}

fn write_table(dir: &Path, t: &Table) -> Result<PathBuf, LabError> {
    let path = dir.join(&t.file);
    let mut w = csv::Writer::from_path(&path).map_err(|e| LabError::io(&path, e.into()))?;
    w.write_record(&t.header).map_err(|e| LabError::io(&path, e.into()))?;
    for row in &t.rows {
        w.write_record(row).map_err(|e| LabError::io(&path, e.into()))?;
    }
    w.flush().map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

/// Runs the experiment and writes its tables plus `manifest.json` into the
/// spec's output directory. Nothing is written unless every table was
/// computed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary, LabError> {
    let mut failed = Vec::new();
    let tables = match spec.kind {
        ExperimentKind::GapSweep => gap_sweep(spec, &mut failed)?,
        ExperimentKind::ThroughputVsRatio => throughput(spec)?,
        ExperimentKind::InterarrivalHist => histograms(spec)?,
        ExperimentKind::PowVsPoa => pow_vs_poa(spec)?,
    };

    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut outputs = Vec::new();
    for t in &tables {
        outputs.push(write_table(dir, t)?);
    }
    let manifest = Manifest {
        name: &spec.name,
        kind: spec.kind,
        version: env!("CARGO_PKG_VERSION"),
        spec,
        defaulted: &spec.defaulted,
        overridden: &spec.overridden,
        warmup_rounds: spec.deltas.iter().map(|&d| (d, spec.warmup_for(d))).collect(),
        aggregate_solo_above: AGGREGATE_ABOVE,
        outputs: tables.iter().map(|t| t.file.clone()).collect(),
        failed_points: &failed,
    };
    let path = dir.join("manifest.json");
    let text = to_json17(&manifest).map_err(|e| LabError::io(&path, e.into()))?;
    fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
    outputs.push(path);
    Ok(RunSummary { outputs, failed_points: failed })
}
