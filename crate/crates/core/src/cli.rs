//! Configuration files, parameter sweeps and their CSV / SVG output.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{self, AnalyticError, Factor, ServingLimit, TheoryOptions};
use crate::montecarlo::{self, BackhaulMode, SimError, SimOptions};
use crate::params::{NetworkParams, ParamError, Tier, Topology, Variant, FIELD_NAMES};

pub const CSV_HEADER: &str = "sweep_var,value,topology,tier,variant,source,mean,ci,n,seed";
pub const FACTORS_HEADER: &str = "sweep_var,value,topology,tier,variant,B1,B2,C1,C2,C3,avg_rate,flags";

/// Configuration files shipped with the crate, by name.
pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("coverage", include_str!("../configs/coverage.conf")),
    ("capacity", include_str!("../configs/capacity.conf")),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value '{value}' for '{key}'")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: '{key}' given twice")]
    Duplicate { line: usize, key: String },
    #[error("'{0}' and '{0}_bytes' are mutually exclusive")]
    Conflict(String),
    #[error("no topology given (set `topology` or pass --topology)")]
    MissingTopology,
    #[error("need at least {min} realizations (got {0})", min = montecarlo::MIN_REALIZATIONS)]
    TooFewRealizations(usize),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Theory,
    Sim,
    Both,
}

impl Mode {
    fn theory(self) -> bool {
        matches!(self, Mode::Theory | Mode::Both)
    }

    fn sim(self) -> bool {
        matches!(self, Mode::Sim | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "theory" => Ok(Mode::Theory),
            "sim" => Ok(Mode::Sim),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown mode '{other}' (expected theory, sim or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            other => Err(format!("unknown scale '{other}' (expected linear or log)")),
        }
    }
}

/// One-parameter sweep. `variable` is a parameter name, or `tau` for both
/// thresholds at once.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub scale: Scale,
}

impl SweepSpec {
    /// Default ranges of the two swept quantities of the evaluation.
    pub fn default_for(variable: &str) -> Option<SweepSpec> {
        let (from, to, scale) = match variable {
            "gamma" => (0.1, 0.9, Scale::Linear),
            "F_sc" => (1.0, 256.0, Scale::Log),
            _ => return None,
        };
        Some(SweepSpec {
            variable: variable.to_string(),
            from,
            to,
            steps: 9,
            scale,
        })
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.variable != "tau" && !FIELD_NAMES.contains(&self.variable.as_str()) {
            return Err(ConfigError::Sweep(format!("'{}' is not a parameter", self.variable)));
        }
        if !(self.from < self.to) || !self.from.is_finite() || !self.to.is_finite() {
            return Err(ConfigError::Sweep(format!("need from < to (got {} and {})", self.from, self.to)));
        }
        if self.steps < 2 {
            return Err(ConfigError::Sweep(format!("need at least 2 steps (got {})", self.steps)));
        }
        if self.scale == Scale::Log && self.from <= 0.0 {
            return Err(ConfigError::Sweep("log scale needs a positive range".into()));
        }
        Ok(())
    }

    /// Sweep points; both end points are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == 0 {
                    return self.from;
                }
                if i == last {
                    return self.to;
                }
                let u = i as f64 / last as f64;
                match self.scale {
                    Scale::Linear => self.from + u * (self.to - self.from),
                    Scale::Log => self.from * (self.to / self.from).powf(u),
                }
            })
            .collect()
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: NetworkParams,
    pub topology: Topology,
    pub sweep: SweepSpec,
    pub mode: Mode,
    pub realizations: usize,
    pub seed: u64,
    pub theory: TheoryOptions,
    pub sim: SimOptions,
    /// `default:<key>` for every parameter that was not set explicitly.
    pub flags: Vec<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub topology: Option<Topology>,
    pub mode: Option<Mode>,
    pub sweep: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
}

pub const DEFAULT_REALIZATIONS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;
const CHUNK_SIZE_BYTES: f64 = 1e9;

const RUN_KEYS: &[&str] = &[
    "topology",
    "mode",
    "sweep",
    "from",
    "to",
    "steps",
    "scale",
    "realizations",
    "seed",
    "chunk_size_bytes",
    "F_sc_bytes",
    "F_bytes",
    "keep_noise_term",
    "serving_limit",
    "use_one_minus_gamma_for_su",
    "tau_sc_in_cap_c2",
    "nu_grid_nodes",
    "half_extent",
    "toroidal",
    "backhaul_mode",
];

/// Parameters whose omission is recorded in the run flags.
const RECORDED_DEFAULTS: &[&str] = &[
    "lambda_cr",
    "lambda_mc",
    "lambda_sc_prime",
    "c_bar",
    "R_c",
    "P_mc",
    "P_sc",
    "alpha",
    "tau_mc",
    "tau_sc",
    "mu",
    "gamma",
    "eta",
    "F_sc",
    "F",
];

/// Parsed `key = value` lines, with their line numbers.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if !FIELD_NAMES.contains(&k) && !RUN_KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey {
                line,
                key: k.to_string(),
            });
        }
        if out.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(ConfigError::Duplicate {
                line,
                key: k.to_string(),
            });
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(pairs: &BTreeMap<String, (usize, String)>, key: &str) -> Result<Option<T>, ConfigError> {
    match pairs.get(key) {
        None => Ok(None),
        Some((line, v)) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
            line: *line,
            key: key.to_string(),
            value: v.clone(),
        }),
    }
}

fn bad(pairs: &BTreeMap<String, (usize, String)>, key: &str) -> ConfigError {
    let (line, value) = pairs[key].clone();
    ConfigError::BadValue {
        line,
        key: key.to_string(),
        value,
    }
}

/// Parameters every run starts from before the file is applied. The
/// capacity-aided macro-user density is left unset (one MU per MBS).
pub fn base_params(t: Topology) -> NetworkParams {
    NetworkParams {
        lambda_ut_m: None,
        ..NetworkParams::reference(t)
    }
}

/// Parses configuration text. Command-line overrides win over the file.
pub fn parse_config(text: &str, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let pairs = parse_pairs(text)?;
    let topology = match ov.topology {
        Some(t) => t,
        None => match pairs.get("topology") {
            Some(_) => parse_value::<String>(&pairs, "topology")?
                .unwrap()
                .parse()
                .map_err(|_| bad(&pairs, "topology"))?,
            None => return Err(ConfigError::MissingTopology),
        },
    };
    let mut params = base_params(topology);
    let mut flags = Vec::new();
    for &key in FIELD_NAMES {
        if let Some(v) = parse_value::<f64>(&pairs, key)? {
            params.set(key, v)?;
        }
    }
    let chunk = parse_value::<f64>(&pairs, "chunk_size_bytes")?.unwrap_or(CHUNK_SIZE_BYTES);
    if !(chunk > 0.0) {
        return Err(bad(&pairs, "chunk_size_bytes"));
    }
    for (field, bytes_key) in [("F_sc", "F_sc_bytes"), ("F", "F_bytes")] {
        if let Some(b) = parse_value::<f64>(&pairs, bytes_key)? {
            if pairs.contains_key(field) {
                return Err(ConfigError::Conflict(field.to_string()));
            }
            params.set(field, b / chunk)?;
        }
    }
    let density = match topology {
        Topology::CoverageAided => "lambda_ut",
        Topology::CapacityAided => "lambda_ut_m",
    };
    for &key in RECORDED_DEFAULTS.iter().chain([&density]) {
        let given = pairs.contains_key(key) || pairs.contains_key(&format!("{key}_bytes"));
        if !given {
            flags.push(format!("default:{key}"));
        }
    }

    let mut theory = TheoryOptions::default();
    if let Some(v) = parse_value::<bool>(&pairs, "keep_noise_term")? {
        theory.keep_noise_term = v;
    }
    if let Some(v) = parse_value::<String>(&pairs, "serving_limit")? {
        theory.serving_limit = match v.as_str() {
            "R_c" => ServingLimit::ClusterRadius,
            "unbounded" => ServingLimit::Unbounded,
            _ => return Err(bad(&pairs, "serving_limit")),
        };
    }
    if let Some(v) = parse_value::<bool>(&pairs, "use_one_minus_gamma_for_su")? {
        theory.one_minus_gamma_for_su = v;
    }
    if let Some(v) = parse_value::<bool>(&pairs, "tau_sc_in_cap_c2")? {
        theory.tau_sc_in_cap_c2 = v;
    }
    if let Some(v) = parse_value::<usize>(&pairs, "nu_grid_nodes")? {
        if v < 4 {
            return Err(bad(&pairs, "nu_grid_nodes"));
        }
        theory.nu_grid_nodes = v;
    }

    let mut sim = SimOptions::default();
    if let Some(v) = parse_value::<f64>(&pairs, "half_extent")? {
        sim.half_extent = Some(v);
    }
    if let Some(v) = parse_value::<bool>(&pairs, "toroidal")? {
        sim.toroidal = v;
    }
    if let Some(v) = parse_value::<String>(&pairs, "backhaul_mode")? {
        sim.backhaul = match v.as_str() {
            "ensemble" => BackhaulMode::Ensemble,
            "per_realization" => BackhaulMode::PerRealization,
            _ => return Err(bad(&pairs, "backhaul_mode")),
        };
    }

    let mode = match ov.mode {
        Some(m) => m,
        None => match parse_value::<String>(&pairs, "mode")? {
            Some(m) => m.parse().map_err(|_| bad(&pairs, "mode"))?,
            None => Mode::Both,
        },
    };
    let variable = match &ov.sweep {
        Some(v) => v.clone(),
        None => parse_value::<String>(&pairs, "sweep")?.unwrap_or_else(|| "gamma".to_string()),
    };
    if variable != "tau" && !FIELD_NAMES.contains(&variable.as_str()) {
        return Err(ConfigError::Sweep(format!("'{variable}' is not a parameter")));
    }
    // Range keys in the file belong to the file's own sweep variable.
    let file_range = ov.sweep.is_none() || ov.sweep == parse_value::<String>(&pairs, "sweep")?;
    let fallback = SweepSpec::default_for(&variable);
    let pick = |o: Option<f64>, key: &str, d: Option<f64>| -> Result<f64, ConfigError> {
        if let Some(v) = o {
            return Ok(v);
        }
        if file_range {
            if let Some(v) = parse_value::<f64>(&pairs, key)? {
                return Ok(v);
            }
        }
        d.ok_or_else(|| ConfigError::Sweep(format!("no '{key}' given for '{variable}'")))
    };
    let from = pick(ov.from, "from", fallback.as_ref().map(|s| s.from))?;
    let to = pick(ov.to, "to", fallback.as_ref().map(|s| s.to))?;
    let steps = match ov.steps {
        Some(s) => s,
        None => match (file_range, parse_value::<usize>(&pairs, "steps")?) {
            (true, Some(s)) => s,
            _ => fallback.as_ref().map_or(9, |s| s.steps),
        },
    };
    let scale = match (file_range, parse_value::<String>(&pairs, "scale")?) {
        (true, Some(s)) => s.parse().map_err(|_| bad(&pairs, "scale"))?,
        _ => fallback.as_ref().map_or(Scale::Linear, |s| s.scale),
    };
    let sweep = SweepSpec {
        variable,
        from,
        to,
        steps,
        scale,
    };
    sweep.check()?;

    let realizations = match ov.realizations {
        Some(n) => n,
        None => parse_value(&pairs, "realizations")?.unwrap_or(DEFAULT_REALIZATIONS),
    };
    let seed = match ov.seed {
        Some(s) => s,
        None => parse_value(&pairs, "seed")?.unwrap_or(DEFAULT_SEED),
    };

    let params = params.validate(topology)?;
    for v in sweep.values() {
        point_params(&params, &sweep.variable, v, topology)?;
    }
    Ok(RunConfig {
        params,
        topology,
        sweep,
        mode,
        realizations,
        seed,
        theory,
        sim,
        flags,
    })
}

/// Reads a configuration file; a bare bundled name such as `coverage` is
/// accepted when no such file exists.
pub fn load_config(path: &Path, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => match path.to_str().and_then(bundled_config) {
            Some(t) => t.to_string(),
            None => {
                return Err(ConfigError::Io {
                    path: path.display().to_string(),
                    source: e,
                })
            }
        },
    };
    parse_config(&text, ov)
}

fn point_params(base: &NetworkParams, var: &str, value: f64, t: Topology) -> Result<NetworkParams, ParamError> {
    let mut p = base.clone();
    p.set_sweep_var(var, value)?;
    p.validate(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Theory,
    Sim,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Theory => "theory",
            Source::Sim => "sim",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub sweep_var: String,
    pub value: f64,
    pub topology: Topology,
    pub tier: Tier,
    /// `None` for macro users.
    pub variant: Option<Variant>,
    pub source: Source,
    pub mean: f64,
    pub ci_half_width: f64,
    /// Realizations behind a simulated row; 0 for theory rows.
    pub n_samples: usize,
    /// Seed of a simulated row; theory rows do not depend on it.
    pub seed: Option<u64>,
    pub factors: BTreeMap<Factor, f64>,
    pub flags: Vec<String>,
}

impl RunRecord {
    /// Position of the curve in the plot legend.
    pub fn curve(&self) -> usize {
        let tier = match (self.tier, self.variant) {
            (Tier::Mu, _) => 0,
            (Tier::Su, Some(Variant::NoCache)) => 1,
            (Tier::Su, _) => 2,
        };
        tier + 3 * (self.source == Source::Sim) as usize
    }

    pub fn curve_label(&self) -> &'static str {
        CURVE_LABELS[self.curve()]
    }
}

pub const CURVE_LABELS: [&str; 6] = [
    "MU The.",
    "SU The. (No Cache)",
    "SU The.",
    "MU Sim.",
    "SU Sim. (No Cache)",
    "SU Sim.",
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("theory failed at {var} = {value}: {source}")]
    Theory {
        var: String,
        value: f64,
        source: AnalyticError,
    },
    #[error("simulation failed at {var} = {value}: {source}")]
    Sim {
        var: String,
        value: f64,
        source: SimError,
    },
    #[error("no records to write")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    /// Process exit status: 1 for configuration and I/O problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } | RunError::Empty => 1,
            RunError::Theory { .. } | RunError::Sim { .. } => 2,
        }
    }
}

fn theory_records(cfg: &RunConfig, value: f64, p: &NetworkParams) -> Result<Vec<RunRecord>, RunError> {
    let var = &cfg.sweep.variable;
    let t = cfg.topology;
    let wrap = |source| RunError::Theory {
        var: var.clone(),
        value,
        source,
    };
    let mu = analytic::avg_rate_mu(t, p, &cfg.theory).map_err(wrap)?;
    let c1 = analytic::factor_c1(t, p, &cfg.theory).map_err(wrap)?;
    let su_nc = analytic::su_from_c1(t, p, &cfg.theory, Variant::NoCache, c1);
    let su = analytic::su_from_c1(t, p, &cfg.theory, Variant::WithCache, c1);
    Ok([mu, su_nc, su]
        .into_iter()
        .map(|b| {
            let mut flags = cfg.flags.clone();
            flags.extend(b.flags.iter().map(|s| s.to_string()));
            RunRecord {
                sweep_var: var.clone(),
                value,
                topology: t,
                tier: b.tier,
                variant: b.variant,
                source: Source::Theory,
                mean: b.avg_rate,
                ci_half_width: 0.0,
                n_samples: 0,
                seed: None,
                factors: b.factors,
                flags,
            }
        })
        .collect())
}

fn sim_records(cfg: &RunConfig, value: f64, est: &montecarlo::AvgRateEstimates) -> Vec<RunRecord> {
    [est.mu, est.su_no_cache, est.su]
        .into_iter()
        .map(|e| RunRecord {
            sweep_var: cfg.sweep.variable.clone(),
            value,
            topology: cfg.topology,
            tier: e.tier,
            variant: e.variant,
            source: Source::Sim,
            mean: e.mean,
            ci_half_width: e.ci_half_width,
            n_samples: e.n_samples,
            seed: Some(cfg.seed),
            factors: BTreeMap::new(),
            flags: cfg.flags.clone(),
        })
        .collect()
}

/// Evaluates every sweep point. Records come out sorted by sweep point, then
/// source, then curve.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<RunRecord>, RunError> {
    let var = cfg.sweep.variable.clone();
    let values = cfg.sweep.values();
    let points = values
        .iter()
        .map(|&v| point_params(&cfg.params, &var, v, cfg.topology).map(|p| (v, p)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ConfigError::from)?;
    let mut records = Vec::new();
    if cfg.mode.theory() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.sim.worker_count())
            .build()
            .map_err(|e| RunError::Sim {
                var: var.clone(),
                value: values[0],
                source: SimError::ThreadPool(e.to_string()),
            })?;
        let rows = pool.install(|| {
            points
                .par_iter()
                .map(|(v, p)| theory_records(cfg, *v, p))
                .collect::<Result<Vec<_>, _>>()
        })?;
        records.extend(rows.into_iter().flatten());
    }
    if cfg.mode.sim() {
        let sim_err = |value: f64| {
            let var = var.clone();
            move |source| RunError::Sim { var, value, source }
        };
        if cfg.realizations < montecarlo::MIN_REALIZATIONS {
            return Err(ConfigError::TooFewRealizations(cfg.realizations).into());
        }
        if montecarlo::affects_deployment(&var) {
            for (v, p) in &points {
                let est = montecarlo::estimate_avg_rates(p, cfg.topology, cfg.realizations, cfg.seed, &cfg.sim)
                    .map_err(sim_err(*v))?;
                records.extend(sim_records(cfg, *v, &est));
            }
        } else {
            // Deployment and SIR draws do not depend on the swept parameter.
            let (v0, p0) = &points[0];
            let outcomes =
                montecarlo::simulate_outcomes(p0, cfg.topology, cfg.realizations, cfg.seed, &cfg.sim)
                    .map_err(sim_err(*v0))?;
            for (v, p) in &points {
                let est = montecarlo::rates_from_outcomes(&outcomes, p, cfg.topology, cfg.sim.backhaul)
                    .map_err(sim_err(*v))?;
                records.extend(sim_records(cfg, *v, &est));
            }
        }
    }
    let index: BTreeMap<u64, usize> = values.iter().enumerate().map(|(i, v)| (v.to_bits(), i)).collect();
    records.sort_by_key(|r| (index[&r.value.to_bits()], r.curve()));
    Ok(records)
}

fn variant_str(v: Option<Variant>) -> &'static str {
    v.map_or("-", Variant::as_str)
}

/// CSV text of the records.
pub fn format_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let seed = r.seed.map_or("-".to_string(), |s| s.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.sweep_var,
            r.value,
            r.topology.short_name(),
            r.tier,
            variant_str(r.variant),
            r.source,
            r.mean,
            r.ci_half_width,
            r.n_samples,
            seed
        );
    }
    out
}

/// Factor breakdown and flags of the theory rows.
pub fn format_factors(records: &[RunRecord]) -> String {
    let mut out = String::from(FACTORS_HEADER);
    out.push('\n');
    for r in records.iter().filter(|r| r.source == Source::Theory) {
        let f = |k| r.factors.get(&k).map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_var,
            r.value,
            r.topology.short_name(),
            r.tier,
            variant_str(r.variant),
            f(Factor::B1),
            f(Factor::B2),
            f(Factor::C1),
            f(Factor::C2),
            f(Factor::C3),
            r.mean,
            r.flags.join(";")
        );
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<(), RunError> {
    if records.is_empty() {
        return Err(RunError::Empty);
    }
    write_file(path, &format_csv(records))
}

pub fn emit_factors(records: &[RunRecord], path: &Path) -> Result<(), RunError> {
    if records.is_empty() {
        return Err(RunError::Empty);
    }
    write_file(path, &format_factors(records))
}

/// Numeric columns of one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep_var: String,
    pub value: f64,
    pub topology: Topology,
    pub tier: String,
    pub variant: String,
    pub source: String,
    pub mean: f64,
    pub ci: f64,
    pub n: usize,
    pub seed: Option<u64>,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("missing header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 10 {
                return Err(format!("row {}: expected 10 columns", i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
            Ok(CsvRow {
                sweep_var: c[0].to_string(),
                value: num(c[1])?,
                topology: c[2].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                tier: c[3].to_string(),
                variant: c[4].to_string(),
                source: c[5].to_string(),
                mean: num(c[6])?,
                ci: num(c[7])?,
                n: c[8].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                seed: if c[9] == "-" {
                    None
                } else {
                    Some(c[9].parse().map_err(|e| format!("row {}: {e}", i + 1))?)
                },
            })
        })
        .collect()
}

const CURVE_STYLE: [(&str, &str); 6] = [
    ("#1f77b4", ""),
    ("#2ca02c", ""),
    ("#d62728", ""),
    ("#1f77b4", "6,4"),
    ("#2ca02c", "6,4"),
    ("#d62728", "6,4"),
];

/// SVG of rate against the swept value with one polyline per curve.
pub fn format_plot(records: &[RunRecord], scale: Scale) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 200.0, 30.0, 60.0);
    let xs: Vec<f64> = records.iter().map(|r| r.value).collect();
    let tx = |v: f64| if scale == Scale::Log { v.ln() } else { v };
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(tx(v)), b.max(tx(v))));
    let y1 = records.iter().map(|r| r.mean + r.ci_half_width).fold(0.0, f64::max).max(1e-12) * 1.05;
    let px = |v: f64| left + (tx(v) - x0) / (x1 - x0).max(1e-300) * (w - left - right);
    let py = |v: f64| h - bottom - v / y1 * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (ax, ay) = (left, h - bottom);
    let _ = writeln!(
        s,
        r#"<path d="M{ax},{top} L{ax},{ay} L{},{ay}" fill="none" stroke="black"/>"#,
        w - right
    );
    for i in 0..=4 {
        let v = y1 * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{ax}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{:.3}</text>"##,
            w - right,
            ax - 6.0,
            y + 4.0,
            v
        );
    }
    let mut ticks: Vec<f64> = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for v in &ticks {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(*v),
            ay + 18.0,
            trim_number(*v)
        );
    }
    let var = records.first().map_or("", |r| r.sweep_var.as_str());
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{var}</text>"#,
        (left + w - right) / 2.0,
        h - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">average delivery rate (bits/s/Hz)</text>"#,
        h / 2.0,
        h / 2.0
    );
    let mut legend = 0;
    for (k, label) in CURVE_LABELS.iter().enumerate() {
        let mut pts: Vec<&RunRecord> = records.iter().filter(|r| r.curve() == k).collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by(|a, b| a.value.total_cmp(&b.value));
        let (color, dash) = CURVE_STYLE[k];
        let coords: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", px(r.value), py(r.mean))).collect();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            s,
            r#"<polyline class="curve" data-label="{label}" points="{}" fill="none" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
            coords.join(" ")
        );
        for r in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(r.value),
                py(r.mean)
            );
        }
        let ly = top + 10.0 + 20.0 * legend as f64;
        let lx = w - right + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/><text x="{}" y="{}">{label}</text>"#,
            lx + 30.0,
            lx + 36.0,
            ly + 4.0
        );
        legend += 1;
    }
    s.push_str("</svg>\n");
    s
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub fn emit_plot(records: &[RunRecord], scale: Scale, path: &Path) -> Result<(), RunError> {
    if records.is_empty() {
        return Err(RunError::Empty);
    }
    write_file(path, &format_plot(records, scale))
}
