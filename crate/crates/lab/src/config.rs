//! Experiment configuration: parsing, defaults and validation.

use std::fmt;
use std::path::PathBuf;

use poa_core::ctmc::{SpreadModel, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS};
use serde::Serialize;
use serde_json::{Map, Value};

pub const DEFAULT_BLOCKS: u64 = 100_000;
pub const DEFAULT_BINS: usize = 60;
/// Error bars need at least this many seeds.
pub const MIN_POW_VS_POA_SEEDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GapSweep,
    ThroughputVsRatio,
    InterarrivalHist,
    PowVsPoa,
}

impl ExperimentKind {
    const NAMES: [(&'static str, ExperimentKind); 4] = [
        ("gap-sweep", ExperimentKind::GapSweep),
        ("throughput-vs-ratio", ExperimentKind::ThroughputVsRatio),
        ("interarrival-hist", ExperimentKind::InterarrivalHist),
        ("pow-vs-poa", ExperimentKind::PowVsPoa),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, k)| *k == self).unwrap().0
    }

    fn uses_ratios(self) -> bool {
        self != ExperimentKind::InterarrivalHist
    }

    fn simulates(self) -> bool {
        self != ExperimentKind::GapSweep
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSpec {
    pub n: u64,
    /// Only for `interarrival-hist`; the other kinds take it from the ratio.
    pub n1: Option<u64>,
    pub d1: u32,
    pub d2: u32,
    pub d_s: u32,
    pub epsilon: f64,
    pub max_iterations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl RatioGrid {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => return Vec::new(),
            1 => return vec![self.start],
            _ => {}
        }
        let last = (self.points - 1) as f64;
        // Weighted form keeps decade grids exact, e.g. 1e-2 on [1e-4, 1e-1].
        let lerp = |a: f64, b: f64, k: usize| (a * (last - k as f64) + b * k as f64) / last;
        (0..self.points)
            .map(|k| match self.spacing {
                Spacing::Linear => lerp(self.start, self.stop, k),
                Spacing::Log => 10f64.powf(lerp(self.start.log10(), self.stop.log10(), k)),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub network: NetworkSpec,
    pub deltas: Vec<u64>,
    /// Resolved ratio values, from `ratios` or `ratio_grid`.
    pub ratios: Vec<f64>,
    pub ratio_grid: Option<RatioGrid>,
    pub blocks: u64,
    pub seeds: Vec<u64>,
    /// `None` means `10 δ` rounds.
    pub warmup: Option<u64>,
    pub bins: usize,
    pub spread_model: SpreadModel,
    pub output_dir: PathBuf,
    /// Fields filled from defaults, as dotted paths.
    pub defaulted: Vec<String>,
    /// Fields replaced on the command line.
    pub overridden: Vec<String>,
}

impl ExperimentSpec {
    pub fn warmup_for(&self, delta: u64) -> u64 {
        self.warmup.unwrap_or(10 * delta)
    }
}

/// Command-line replacements applied after validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub blocks: Option<u64>,
}

impl ExperimentSpec {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let mark = |spec: &mut Self, field: &str| {
            spec.defaulted.retain(|d| d != field);
            spec.overridden.push(field.to_string());
        };
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
            mark(self, "output_dir");
        }
        if let Some(seeds) = &o.seeds {
            self.seeds = seeds.clone();
            mark(self, "seeds");
        }
        if let Some(blocks) = o.blocks {
            self.blocks = blocks;
            mark(self, "blocks");
        }
        if self.kind.simulates() {
            check_sim_fields(self.kind, self.blocks, &self.seeds, &mut diags);
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }
}

fn check_sim_fields(kind: ExperimentKind, blocks: u64, seeds: &[u64], diags: &mut Vec<Diagnostic>) {
    if blocks == 0 {
        diag(diags, "blocks", "must be at least 1");
    }
    if seeds.is_empty() {
        diag(diags, "seeds", "must not be empty");
    } else if kind == ExperimentKind::PowVsPoa && seeds.len() < MIN_POW_VS_POA_SEEDS {
        diag(diags, "seeds", format!("pow-vs-poa needs at least {MIN_POW_VS_POA_SEEDS} seeds for error bars"));
    }
}

fn diag(diags: &mut Vec<Diagnostic>, path: impl Into<String>, message: impl Into<String>) {
    diags.push(Diagnostic { path: path.into(), message: message.into() });
}

/// Field reader that records a diagnostic for every problem it meets.
struct Fields<'a> {
    map: &'a Map<String, Value>,
    prefix: &'static str,
    diags: &'a mut Vec<Diagnostic>,
}

impl<'a> Fields<'a> {
    fn new(map: &'a Map<String, Value>, prefix: &'static str, allowed: &[&str], diags: &'a mut Vec<Diagnostic>) -> Self {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                diags.push(Diagnostic { path: Self::join(prefix, key), message: "unknown key".into() });
            }
        }
        Self { map, prefix, diags }
    }

    fn join(prefix: &str, key: &str) -> String {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    }

    fn path(&self, key: &str) -> String {
        Self::join(self.prefix, key)
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn get<T>(&mut self, key: &str, expected: &str, parse: impl Fn(&Value) -> Option<T>) -> Option<T> {
        let v = self.map.get(key)?;
        let out = parse(v);
        if out.is_none() {
            let path = self.path(key);
            self.diags.push(Diagnostic { path, message: format!("expected {expected}") });
        }
        out
    }

    fn required<T>(&mut self, key: &str, expected: &str, parse: impl Fn(&Value) -> Option<T>) -> Option<T> {
        if !self.has(key) {
            let path = self.path(key);
            self.diags.push(Diagnostic { path, message: "missing required key".into() });
            return None;
        }
        self.get(key, expected, parse)
    }

    fn reject(&mut self, key: &str, why: String) {
        if self.has(key) {
            let path = self.path(key);
            self.diags.push(Diagnostic { path, message: why });
        }
    }
}

fn as_u64(v: &Value) -> Option<u64> {
    v.as_u64()
}

fn as_u32(v: &Value) -> Option<u32> {
    v.as_u64().and_then(|x| u32::try_from(x).ok())
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_f64().filter(|x| x.is_finite())
}

fn as_str(v: &Value) -> Option<String> {
    v.as_str().map(str::to_string)
}

fn as_list<T>(parse: impl Fn(&Value) -> Option<T>) -> impl Fn(&Value) -> Option<Vec<T>> {
    move |v| v.as_array()?.iter().map(&parse).collect()
}

const TOP_KEYS: [&str; 13] = [
    "name",
    "kind",
    "network",
    "deltas",
    "ratios",
    "ratio_grid",
    "blocks",
    "seeds",
    "warmup",
    "bins",
    "spread_model",
    "output_dir",
    "description",
];
const NETWORK_KEYS: [&str; 7] = ["n", "n1", "d1", "d2", "d_s", "epsilon", "max_iterations"];
const GRID_KEYS: [&str; 4] = ["start", "stop", "points", "spacing"];

/// Parses and validates a JSON experiment config.
///
/// Every problem found is reported, not just the first.
pub fn validate_spec(text: &str) -> Result<ExperimentSpec, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Err(vec![Diagnostic { path: "<document>".into(), message: format!("invalid JSON: {e}") }]),
    };
    let Some(obj) = root.as_object() else {
        return Err(vec![Diagnostic { path: "<document>".into(), message: "expected an object".into() }]);
    };
    let mut defaulted = Vec::new();
    let mut top = Fields::new(obj, "", &TOP_KEYS, &mut diags);

    let name = top.required("name", "a string", as_str);
    if name.as_deref() == Some("") {
        diag(top.diags, "name", "must not be empty");
    }
    let kind = top.required("kind", "a string", as_str).and_then(|k| {
        let found = ExperimentKind::NAMES.iter().find(|(n, _)| *n == k).map(|(_, k)| *k);
        if found.is_none() {
            let names: Vec<_> = ExperimentKind::NAMES.iter().map(|(n, _)| *n).collect();
            diag(top.diags, "kind", format!("unknown kind {k:?}; expected one of {}", names.join(", ")));
        }
        found
    });

    let network_val = top.required("network", "an object", |v| v.as_object().cloned());
    let deltas = top.required("deltas", "an array of integers", as_list(as_u64));
    let ratios = top.get("ratios", "an array of numbers", as_list(as_f64));
    let grid_val = top.get("ratio_grid", "an object", |v| v.as_object().cloned());
    let blocks = top.get("blocks", "a non-negative integer", as_u64);
    let seeds = top.get("seeds", "an array of integers", as_list(as_u64));
    let warmup = top.get("warmup", "a non-negative integer", as_u64);
    let bins = top.get("bins", "an integer", |v| v.as_u64().and_then(|b| usize::try_from(b).ok()));
    let spread = top.get("spread_model", "\"mean-over-delta\" or \"sum-of-exponentials\"", |v| match v.as_str()? {
        "mean-over-delta" => Some(SpreadModel::MeanOverDelta),
        "sum-of-exponentials" => Some(SpreadModel::SumOfExponentials),
        _ => None,
    });
    let output_dir = top.get("output_dir", "a string", as_str).map(PathBuf::from);
    top.get("description", "a string", as_str);

    if let Some(kind) = kind {
        let kname = kind.name();
        if !kind.uses_ratios() {
            top.reject("ratios", format!("not used by {kname}"));
            top.reject("ratio_grid", format!("not used by {kname}"));
        }
        if !kind.simulates() {
            for key in ["blocks", "seeds", "warmup"] {
                top.reject(key, format!("not used by {kname}"));
            }
        }
        if kind != ExperimentKind::InterarrivalHist {
            top.reject("bins", format!("not used by {kname}"));
            top.reject("spread_model", format!("not used by {kname}"));
        }
    }
    let (has_ratios, has_grid) = (top.has("ratios"), top.has("ratio_grid"));

    // Network block.
    let network = network_val.and_then(|m| {
        let mut f = Fields::new(&m, "network", &NETWORK_KEYS, &mut diags);
        let n = f.required("n", "a non-negative integer", as_u64);
        let n1 = f.get("n1", "a non-negative integer", as_u64);
        let d1 = f.required("d1", "a 32-bit unsigned integer", as_u32);
        let d2 = f.required("d2", "a 32-bit unsigned integer", as_u32);
        let d_s = f.required("d_s", "a 32-bit unsigned integer", as_u32);
        let epsilon = f.get("epsilon", "a number", as_f64);
        let max_iterations = f.get("max_iterations", "a non-negative integer", as_u64);
        if epsilon.is_none() && !f.has("epsilon") {
            defaulted.push("network.epsilon".to_string());
        }
        if max_iterations.is_none() && !f.has("max_iterations") {
            defaulted.push("network.max_iterations".to_string());
        }
        match kind {
            Some(ExperimentKind::InterarrivalHist) if n1.is_none() && !f.has("n1") => {
                diag(f.diags, "network.n1", "required by interarrival-hist");
            }
            Some(k) if k.uses_ratios() => f.reject("n1", "set by the ratio grid; remove it".into()),
            _ => {}
        }
        if let (Some(d1), Some(d2)) = (d1, d2) {
            if d1 <= d2 {
                diag(f.diags, "network.d2", "d1 must exceed d2");
            }
            if d1 > 1000 {
                diag(f.diags, "network.d1", "must be at most 1000");
            }
        }
        if let (Some(d2), Some(d_s)) = (d2, d_s) {
            if d_s >= d2 {
                diag(f.diags, "network.d_s", "d_s must be below d2");
            }
        }
        if let Some(n) = n {
            if n < 2 {
                diag(f.diags, "network.n", "must be at least 2");
            }
            if let Some(n1) = n1 {
                if n1 == 0 || n1 >= n {
                    diag(f.diags, "network.n1", "need 1 <= n1 < n");
                }
            }
        }
        if let Some(e) = epsilon {
            if e <= 0.0 {
                diag(f.diags, "network.epsilon", "must be positive");
            }
        }
        if max_iterations == Some(0) {
            diag(f.diags, "network.max_iterations", "must be positive");
        }
        Some(NetworkSpec {
            n: n?,
            n1,
            d1: d1?,
            d2: d2?,
            d_s: d_s?,
            epsilon: epsilon.unwrap_or(DEFAULT_EPSILON),
            max_iterations: max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS),
        })
    });

    if let Some(d) = &deltas {
        if d.is_empty() {
            diag(&mut diags, "deltas", "must not be empty");
        }
        if d.contains(&0) {
            diag(&mut diags, "deltas", "every delta must be at least 1");
        }
    }

    // Ratios.
    let grid = grid_val.and_then(|m| {
        let mut f = Fields::new(&m, "ratio_grid", &GRID_KEYS, &mut diags);
        let start = f.required("start", "a number", as_f64);
        let stop = f.required("stop", "a number", as_f64);
        let points = f.required("points", "an integer", |v| v.as_u64().and_then(|p| usize::try_from(p).ok()));
        let spacing = f.get("spacing", "\"log\" or \"linear\"", |v| match v.as_str()? {
            "log" => Some(Spacing::Log),
            "linear" => Some(Spacing::Linear),
            _ => None,
        });
        if spacing.is_none() && !f.has("spacing") {
            defaulted.push("ratio_grid.spacing".to_string());
        }
        if points == Some(0) {
            diag(f.diags, "ratio_grid.points", "ratio grid must not be empty");
        }
        if let (Some(a), Some(b)) = (start, stop) {
            if !(a > 0.0 && b >= a) {
                diag(f.diags, "ratio_grid", "need 0 < start <= stop");
            }
        }
        Some(RatioGrid { start: start?, stop: stop?, points: points?, spacing: spacing.unwrap_or(Spacing::Log) })
    });
    let mut ratio_values = Vec::new();
    if let Some(kind) = kind.filter(|k| k.uses_ratios()) {
        match (has_ratios, has_grid) {
            (true, true) => diag(&mut diags, "ratios", "give either ratios or ratio_grid, not both"),
            (false, false) => diag(&mut diags, "ratios", format!("{} needs ratios or ratio_grid", kind.name())),
            _ => {}
        }
        if let Some(r) = &ratios {
            if r.is_empty() {
                diag(&mut diags, "ratios", "ratio grid must not be empty");
            }
            if r.iter().any(|&x| x <= 0.0) {
                diag(&mut diags, "ratios", "every ratio must be positive");
            }
            ratio_values = r.clone();
        }
        if let Some(g) = &grid {
            ratio_values = g.values();
        }
    }

    let mut take_default = |field: &str, present: bool| {
        if !present {
            defaulted.push(field.to_string());
        }
    };
    let sim = kind.is_some_and(ExperimentKind::simulates);
    let blocks = blocks.unwrap_or(DEFAULT_BLOCKS);
    let seeds = match seeds {
        Some(s) => s,
        None if kind == Some(ExperimentKind::PowVsPoa) => (1..=MIN_POW_VS_POA_SEEDS as u64).collect(),
        None => vec![1],
    };
    if sim {
        take_default("blocks", obj.contains_key("blocks"));
        take_default("seeds", obj.contains_key("seeds"));
        take_default("warmup", obj.contains_key("warmup"));
    }
    if kind == Some(ExperimentKind::InterarrivalHist) {
        take_default("bins", obj.contains_key("bins"));
        take_default("spread_model", obj.contains_key("spread_model"));
    }
    take_default("output_dir", obj.contains_key("output_dir"));
    let bins = bins.unwrap_or(DEFAULT_BINS);
    if bins < 2 {
        diag(&mut diags, "bins", "must be at least 2");
    }
    if let Some(kind) = kind.filter(|k| k.simulates()) {
        if obj.contains_key("blocks") || obj.contains_key("seeds") {
            check_sim_fields(kind, blocks, &seeds, &mut diags);
        }
    }

    if !diags.is_empty() {
        return Err(diags);
    }
    let name = name.expect("diagnosed");
    let output_dir = output_dir.unwrap_or_else(|| PathBuf::from("out").join(&name));
    Ok(ExperimentSpec {
        name,
        kind: kind.expect("diagnosed"),
        network: network.expect("diagnosed"),
        deltas: deltas.expect("diagnosed"),
        ratios: ratio_values,
        ratio_grid: grid,
        blocks,
        seeds,
        warmup,
        bins,
        spread_model: spread.unwrap_or_default(),
        output_dir,
        defaulted,
        overridden: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = RatioGrid { start: 0.01, stop: 1.0, points: 3, spacing: Spacing::Log };
        let v = g.values();
        assert!((v[1] - 0.1).abs() < 1e-15);
        assert_eq!((v[0], v[2]), (0.01, 1.0));
        let g = RatioGrid { start: 1.0, stop: 2.0, points: 5, spacing: Spacing::Linear };
        assert_eq!(g.values(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(RatioGrid { points: 0, ..g }.values().is_empty());
    }

    #[test]
    fn not_json() {
        let e = validate_spec("{").unwrap_err();
        assert_eq!(e.len(), 1);
        assert!(validate_spec("[1]").is_err());
    }
}
