//! Command-line front end: run configurations, parameter scans, CSV tables
//! and the `.meta` sidecar.
//!
//! Precedence for every field is command-line flag, then config document,
//! then (for the seed only) the `QCRB_SEED` environment variable.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{builtin, load_model, InitialState, ModelSpec, ParameterVector};
use crate::qfi::{finite_time_qfi, qfi_rate, FisherEstimate, StencilConfig};
use crate::trajectories::{cfi_rates, homodyne_step_bound, wtd_fisher_oracle, CfiConfig, Scheme, WtdOptions};

pub const CSV_HEADER: &str = "# qcrb v1";
pub const SEED_ENV: &str = "QCRB_SEED";
pub const MISSING_SEED: &str = "seed required for Monte-Carlo task";

const FIG2_DELTA: &str = include_str!("../scenarios/fig2-delta.json");
const FIG2_OMEGA: &str = include_str!("../scenarios/fig2-omega.json");
const FIG2_KAPPA: &str = include_str!("../scenarios/fig2-kappa.json");

/// Names accepted by `--config` in place of a path.
pub const BUILTIN_SCENARIOS: [&str; 3] = ["fig2-delta", "fig2-omega", "fig2-kappa"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    QfiRate,
    QfiFinite,
    Cfi,
    OracleWtd,
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    QfiRate,
    QfiFinite,
    CfiCounting,
    CfiHomodyne,
    OracleWtd,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::QfiRate => "qfi-rate",
            MethodKind::QfiFinite => "qfi-finite",
            MethodKind::CfiCounting => "cfi-counting",
            MethodKind::CfiHomodyne => "cfi-homodyne",
            MethodKind::OracleWtd => "oracle-wtd",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, MethodKind::CfiCounting | MethodKind::CfiHomodyne)
    }

    fn allows_pairs(self) -> bool {
        matches!(self, MethodKind::QfiRate | MethodKind::QfiFinite)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Counting,
    Homodyne,
}

/// Builtin name with parameter values, or a model document path (relative
/// paths resolve against the config file's directory).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    /// `name:min:max:points`
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::SchemaError(format!("grid `{text}` is not name:min:max:points"));
        if parts.len() != 4 || parts[0].is_empty() {
            return Err(bad());
        }
        Ok(GridSpec {
            param: parts[0].to_string(),
            min: parts[1].parse().map_err(|_| bad())?,
            max: parts[2].parse().map_err(|_| bad())?,
            points: parts[3].parse().map_err(|_| bad())?,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.points - 1) as f64;
        (0..self.points).map(|k| self.min + span * k as f64 / last).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeOptions {
    /// Selects the detector for the `cfi` task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SchemeKind>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Likelihood window for Monte-Carlo methods; total time for `qfi-finite`.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_doubling: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub model: ModelRef,
    /// Used by `scan`; other tasks imply their method.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodKind>,
    /// Parameter names; `a:b` requests an off-diagonal QFI element.
    #[serde(default)]
    pub est_params: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub scheme: SchemeOptions,
    #[serde(default)]
    pub stencil: StencilConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// A path on disk, or one of [`BUILTIN_SCENARIOS`].
    pub fn load(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if path.exists() {
            let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
            cfg.base_dir = path.parent().map(Path::to_path_buf);
            return Ok(cfg);
        }
        match source {
            "fig2-delta" => Self::from_json(FIG2_DELTA),
            "fig2-omega" => Self::from_json(FIG2_OMEGA),
            "fig2-kappa" => Self::from_json(FIG2_KAPPA),
            _ => Err(Error::SchemaError(format!(
                "config `{source}` is neither a file nor a builtin scenario ({})",
                BUILTIN_SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn task(&self) -> Task {
        self.task.unwrap_or(Task::Scan)
    }

    /// Methods implied by the task.
    pub fn resolved_methods(&self) -> Vec<MethodKind> {
        match self.task() {
            Task::QfiRate => vec![MethodKind::QfiRate],
            Task::QfiFinite => vec![MethodKind::QfiFinite],
            Task::OracleWtd => vec![MethodKind::OracleWtd],
            Task::Cfi => match self.scheme.kind {
                Some(SchemeKind::Homodyne) => vec![MethodKind::CfiHomodyne],
                Some(SchemeKind::Counting) => vec![MethodKind::CfiCounting],
                None => vec![],
            },
            Task::Scan => self.methods.clone(),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let r = &self.model;
        match (&r.builtin, &r.path) {
            (Some(name), None) => {
                let overrides: Vec<(String, f64)> = r.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
                builtin(name, &overrides)
            }
            (None, Some(p)) => {
                let full = match &self.base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                };
                let m = load_model(&std::fs::read_to_string(&full)?)?;
                let mut theta = m.parameters().clone();
                for (k, v) in &r.parameters {
                    theta.set(k, *v)?;
                }
                m.with_parameters(&theta)
            }
            _ => Err(Error::SchemaError("model needs exactly one of `builtin` or `path`".into())),
        }
    }

    /// Points of the scan; a single point without a grid. The axis is a
    /// model parameter or, if the model has none of that name, `phi`.
    pub fn points(&self, m: &ModelSpec) -> Result<Vec<ScanPoint>> {
        let base = m.parameters();
        let phi = self.scheme.phi;
        match &self.grid {
            None => Ok(vec![ScanPoint { theta: base.clone(), phi, value: None }]),
            Some(g) if g.param == PHI_AXIS && base.index_of(PHI_AXIS).is_err() => Ok(g
                .values()
                .into_iter()
                .map(|v| ScanPoint { theta: base.clone(), phi: v, value: Some(v) })
                .collect()),
            Some(g) => {
                let i = base.index_of(&g.param)?;
                Ok(g.values().into_iter().map(|v| ScanPoint { theta: base.with_value(i, v), phi, value: Some(v) }).collect())
            }
        }
    }

    fn cfi_config(&self, kind: SchemeKind, phi: f64, seed: u64) -> CfiConfig {
        let scheme = match kind {
            SchemeKind::Counting => Scheme::Counting,
            SchemeKind::Homodyne => Scheme::Homodyne { phi, dt: self.scheme.dt },
        };
        let mut cfg = CfiConfig::new(scheme, self.scheme.t.unwrap_or(0.0), self.scheme.n_traj.unwrap_or(0), seed);
        cfg.burn_in = self.scheme.burn_in;
        cfg.step_doubling = self.scheme.step_doubling;
        cfg
    }
}

/// Scan axis that sets the homodyne local-oscillator phase.
pub const PHI_AXIS: &str = "phi";

/// One grid point: model parameters, homodyne phase and the axis value.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub theta: ParameterVector,
    pub phi: f64,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic { code, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Every schema and precondition violation, found without running anything.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let methods = cfg.resolved_methods();
    if methods.is_empty() {
        let msg = match cfg.task() {
            Task::Cfi => "task cfi needs scheme.kind (counting or homodyne)",
            _ => "task scan needs a non-empty `methods` list",
        };
        out.push(Diagnostic::new("SchemaError", msg));
    }
    let monte_carlo = methods.iter().any(|k| k.is_monte_carlo());
    if monte_carlo && cfg.seed.is_none() {
        out.push(Diagnostic::new("MissingSeed", MISSING_SEED));
    }
    if let Err(e) = cfg.stencil.validate() {
        out.push(Diagnostic::new(e.name(), e.to_string()));
    }
    let s = &cfg.scheme;
    let needs_t = monte_carlo || methods.contains(&MethodKind::QfiFinite);
    match s.t {
        Some(t) if !(t > 0.0) || !t.is_finite() => {
            out.push(Diagnostic::new("InvalidParameter", format!("scheme.T must be finite and > 0, got {t}")))
        }
        None if needs_t => out.push(Diagnostic::new("SchemaError", "scheme.T required for this task")),
        _ => {}
    }
    if monte_carlo {
        match s.n_traj {
            Some(n) if n >= 2 => {}
            Some(n) => out.push(Diagnostic::new("InvalidParameter", format!("scheme.n_traj must be ≥ 2, got {n}"))),
            None => out.push(Diagnostic::new("SchemaError", "scheme.n_traj required for Monte-Carlo task")),
        }
        if let Some(b) = s.burn_in {
            if !(b >= 0.0) || !b.is_finite() {
                out.push(Diagnostic::new("InvalidParameter", format!("scheme.burn_in must be ≥ 0, got {b}")));
            }
        }
    }
    if let Some(dt) = s.dt {
        if !(dt > 0.0) || !dt.is_finite() {
            out.push(Diagnostic::new("InvalidParameter", format!("scheme.dt must be > 0, got {dt}")));
        }
    }
    if !s.phi.is_finite() {
        out.push(Diagnostic::new("InvalidParameter", "scheme.phi must be finite"));
    }
    if let Some(g) = &cfg.grid {
        if !g.min.is_finite() || !g.max.is_finite() {
            out.push(Diagnostic::new("InvalidParameter", "grid bounds must be finite"));
        } else if g.min > g.max {
            out.push(Diagnostic::new("InvalidParameter", format!("grid min {} exceeds max {}", g.min, g.max)));
        }
        if g.points < 1 {
            out.push(Diagnostic::new("InvalidParameter", "grid needs at least one point"));
        }
    }
    if cfg.est_params.is_empty() {
        out.push(Diagnostic::new("SchemaError", "est_params must name at least one parameter"));
    }

    let m = match cfg.model_spec() {
        Ok(m) => m,
        Err(e) => {
            out.push(Diagnostic::new(e.name(), e.to_string()));
            return out;
        }
    };
    let names = m.parameters().names();
    if let Some(g) = &cfg.grid {
        if !names.contains(&g.param) && g.param != PHI_AXIS {
            out.push(Diagnostic::new("SchemaError", format!("grid parameter `{}` not in model", g.param)));
        }
    }
    for est in &cfg.est_params {
        let parts: Vec<&str> = est.split(':').collect();
        if parts.len() > 2 {
            out.push(Diagnostic::new("SchemaError", format!("est_param `{est}` is not `a` or `a:b`")));
            continue;
        }
        for p in &parts {
            if !names.iter().any(|n| n == p) {
                out.push(Diagnostic::new("SchemaError", format!("est_param `{p}` not in model")));
            }
        }
        if parts.len() == 2 {
            for k in methods.iter().filter(|k| !k.allows_pairs()) {
                out.push(Diagnostic::new(
                    "SchemaError",
                    format!("method {} has no off-diagonal element `{est}`", k.as_str()),
                ));
            }
        }
    }
    if methods.contains(&MethodKind::OracleWtd) && names != ["delta", "omega", "kappa"] {
        out.push(Diagnostic::new("SchemaError", "oracle-wtd needs the two_level model (delta, omega, kappa)"));
    }
    if monte_carlo && m.n_jumps() == 0 {
        out.push(Diagnostic::new("NoJumpOperators", "Monte-Carlo methods need at least one jump operator"));
    }
    if methods.contains(&MethodKind::CfiHomodyne) {
        if m.n_jumps() > 1 {
            out.push(Diagnostic::new("MultiChannelUnsupported", "homodyne needs a single jump operator"));
        } else if let (Some(dt), Ok(points)) = (s.dt, cfg.points(&m)) {
            for ScanPoint { theta, .. } in points {
                match homodyne_step_bound(&m, &theta) {
                    Ok(bound) if dt > bound => {
                        let e = Error::StepTooLarge { dt, bound };
                        out.push(Diagnostic::new(e.name(), format!("{e} at {}", describe(&theta))));
                        break;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        out.push(Diagnostic::new(e.name(), e.to_string()));
                        break;
                    }
                }
            }
        }
    }
    out
}

fn describe(theta: &ParameterVector) -> String {
    let parts: Vec<String> = theta.names().iter().zip(theta.values()).map(|(n, v)| format!("{n}={v}")).collect();
    parts.join(", ")
}

/// One (grid point, method, parameter) result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub scan_param: Option<String>,
    pub scan_value: Option<f64>,
    pub theta: ParameterVector,
    pub est_param: String,
    pub method: MethodKind,
    pub value: f64,
    pub std_error: f64,
    pub t: Option<f64>,
    pub n_traj: Option<usize>,
    pub h: Option<f64>,
    pub flags: Vec<String>,
}

/// Resolves `a` or `a:b` to parameter indices.
fn est_indices(m: &ModelSpec, est: &str) -> Result<(usize, usize)> {
    match est.split_once(':') {
        Some((a, b)) => Ok((m.param_index(a)?, m.param_index(b)?)),
        None => {
            let i = m.param_index(est)?;
            Ok((i, i))
        }
    }
}

fn point_rows(cfg: &RunConfig, m: &ModelSpec, point: &ScanPoint, methods: &[MethodKind]) -> Result<Vec<ResultRow>> {
    let theta = &point.theta;
    let row = |kind: MethodKind, est: &str, e: FisherEstimate| ResultRow {
        scan_param: cfg.grid.as_ref().map(|g| g.param.clone()),
        scan_value: point.value,
        theta: theta.clone(),
        est_param: est.to_string(),
        method: kind,
        value: e.value,
        std_error: e.std_error,
        t: e.meta.t,
        n_traj: e.meta.n_traj,
        h: e.meta.h,
        flags: e.meta.flags,
    };
    let pairs = cfg.est_params.iter().map(|e| est_indices(m, e)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &kind in methods {
        match kind {
            MethodKind::QfiRate => {
                for (est, &(a, b)) in cfg.est_params.iter().zip(&pairs) {
                    rows.push(row(kind, est, qfi_rate(m, theta, a, b, &cfg.stencil)?));
                }
            }
            MethodKind::QfiFinite => {
                let rho0 = m.initial_density(theta)?;
                let t = cfg.scheme.t.unwrap_or(0.0);
                for (est, &(a, b)) in cfg.est_params.iter().zip(&pairs) {
                    rows.push(row(kind, est, finite_time_qfi(m, theta, &rho0, t, a, b, &cfg.stencil)?));
                }
            }
            MethodKind::CfiCounting | MethodKind::CfiHomodyne => {
                let scheme = if kind == MethodKind::CfiCounting { SchemeKind::Counting } else { SchemeKind::Homodyne };
                let seed = cfg.seed.ok_or_else(|| Error::SchemaError(MISSING_SEED.into()))?;
                let indices: Vec<usize> = pairs.iter().map(|p| p.0).collect();
                let estimates = cfi_rates(m, theta, &indices, &cfg.cfi_config(scheme, point.phi, seed))?;
                for (est, e) in cfg.est_params.iter().zip(estimates) {
                    rows.push(row(kind, est, e));
                }
            }
            MethodKind::OracleWtd => {
                let v = theta.values();
                for (est, &(a, _)) in cfg.est_params.iter().zip(&pairs) {
                    rows.push(row(kind, est, wtd_fisher_oracle(v[0], v[1], v[2], a, &WtdOptions::default())?));
                }
            }
        }
    }
    Ok(rows)
}

/// Runs a validated configuration. Grid points execute on the current
/// rayon pool; row order is fixed by the grid, methods and `est_params`.
pub fn run(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    if let Some(d) = validate(cfg).first() {
        return Err(Error::SchemaError(d.to_string()));
    }
    let m = cfg.model_spec()?;
    let methods = cfg.resolved_methods();
    let per_point: Vec<Result<Vec<ResultRow>>> =
        cfg.points(&m)?.par_iter().map(|p| point_rows(cfg, &m, p, &methods)).collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Shortest round-trip form; exponent notation outside [1e-4, 1e9).
fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e9).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// CSV table with the `# qcrb v1` header line.
pub fn write_csv<W: Write>(w: &mut W, param_names: &[String], rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let mut cols = vec!["scan_param".to_string(), "scan_value".to_string()];
    cols.extend(param_names.iter().cloned());
    cols.extend(["est_param", "method", "value", "std_error", "T", "n_traj", "h", "flags"].map(String::from));
    writeln!(w, "{}", cols.join(","))?;
    for r in rows {
        let mut cells = vec![r.scan_param.clone().unwrap_or_default(), opt(r.scan_value, fmt_f64)];
        cells.extend(r.theta.values().iter().map(|&v| fmt_f64(v)));
        cells.push(r.est_param.clone());
        cells.push(r.method.as_str().to_string());
        cells.push(fmt_f64(r.value));
        cells.push(fmt_f64(r.std_error));
        cells.push(opt(r.t, fmt_f64));
        cells.push(opt(r.n_traj, |n| n.to_string()));
        cells.push(opt(r.h, fmt_f64));
        cells.push(r.flags.join(";"));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Sidecar path: the output path with its extension replaced by `meta`.
pub fn meta_path(out: &Path) -> PathBuf {
    out.with_extension("meta")
}

fn initial_state_note(m: &ModelSpec) -> &'static str {
    match m.initial_state() {
        InitialState::Steady => {
            "records start in the steady state of the simulation point; likelihoods start from the steady state of the evaluated point and condition on the burn-in prefix"
        }
        InitialState::Pure(_) => "pure initial state from the model document",
        InitialState::Density(_) => "mixed initial state from the model document; finite-time QFI is flagged heuristic",
    }
}

#[derive(Parser, Debug)]
#[command(name = "qcrb", version, about = "Quantum and classical Fisher information for continuously monitored open quantum systems")]
pub struct Cli {
    #[arg(value_enum)]
    pub task: CliTask,
    /// Config document path or builtin scenario (fig2-delta, fig2-omega, fig2-kappa).
    #[arg(long)]
    pub config: String,
    /// CSV destination; a `.meta` sidecar is written next to it. Default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config and QCRB_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Estimated parameter(s), comma separated; `a:b` for an off-diagonal element.
    #[arg(long)]
    pub param: Option<String>,
    /// Scan axis as name:min:max:points.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CliTask {
    QfiRate,
    QfiFinite,
    Cfi,
    OracleWtd,
    Scan,
    /// Report config problems without running.
    Validate,
}

impl CliTask {
    fn task(self) -> Option<Task> {
        match self {
            CliTask::QfiRate => Some(Task::QfiRate),
            CliTask::QfiFinite => Some(Task::QfiFinite),
            CliTask::Cfi => Some(Task::Cfi),
            CliTask::OracleWtd => Some(Task::OracleWtd),
            CliTask::Scan => Some(Task::Scan),
            CliTask::Validate => None,
        }
    }
}

/// Applies flag and environment overrides to the loaded document.
pub fn resolve_config(cli: &Cli, env_seed: Option<&str>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(t) = cli.task.task() {
        cfg.task = Some(t);
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(p) = &cli.param {
        cfg.est_params = p.split(',').map(|s| s.trim().to_string()).collect();
    }
    if let Some(g) = &cli.grid {
        cfg.grid = Some(GridSpec::parse(g)?);
    }
    match (cli.seed, cfg.seed, env_seed) {
        (Some(s), _, _) => cfg.seed = Some(s),
        (None, Some(_), _) => {}
        (None, None, Some(text)) => {
            let s = text.trim().parse().map_err(|_| Error::SchemaError(format!("{SEED_ENV}=`{text}` is not a u64")))?;
            cfg.seed = Some(s);
        }
        (None, None, None) => {}
    }
    Ok(cfg)
}

fn report(e: &Error) -> i32 {
    eprintln!("qcrb: {}: {e}", e.name());
    if e.is_config_error() {
        1
    } else {
        2
    }
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let rows = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| run(cfg))?,
        None => run(cfg)?,
    };
    let m = cfg.model_spec()?;
    let names = m.parameters().names().to_vec();
    let Some(out) = &cfg.out else {
        let stdout = std::io::stdout();
        write_csv(&mut stdout.lock(), &names, &rows)?;
        return Ok(());
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, &names, &rows)?;
    std::fs::write(out, buf)?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({
        "config": cfg,
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "timestamp_unix": timestamp,
        "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
        "rows": rows.len(),
        "initial_state": initial_state_note(&m),
    });
    std::fs::write(meta_path(out), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = match resolve_config(&cli, env_seed.as_deref()) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    let diagnostics = validate(&cfg);
    if cli.task == CliTask::Validate {
        for d in &diagnostics {
            println!("{d}");
        }
        return if diagnostics.is_empty() { 0 } else { 1 };
    }
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("qcrb: {d}");
        }
        return 1;
    }
    match execute(&cli, &cfg) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}
