//! The `tms` command line.
//!
//! Configuration is layered: defaults, then a flat `key = value` file
//! (`--config`), then flags. Every output embeds the resolved configuration and
//! the crate version; `--config <output file>` re-runs it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::appendixcheck::schur_bounds;
use crate::asymptotics::{constant_term, extract_tms, tms_pair, u_norm_sq, GSpec};
use crate::error::Error;
use crate::extensions::{
    beta_form, check_bc2, friedrichs_form, h_form_separable, project_core, singular_setup, solve_regular_from_singular,
    Beta, BetaParams, FormContext, RegularCharge, SeparableState,
};
use crate::kernels::KernelSpec;
use crate::montecarlo::{h_form_mc, DEFAULT_SEED};
use crate::numerics::{Charge, GridSpec, Measure};
use crate::operators::{assemble, bottom, energy_sigma_min, w_inner, OperatorKind};
use crate::params::{solve_s_of_m, thresholds_with, C_TOL, LAMBDA_TOL};
use crate::zeromode::{default_fit_range, fit_tail, scan_mass, smallest_singular, ProbeOptions};
use crate::VERSION;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Prefix of configuration lines embedded in CSV output.
const EMBED: &str = "#!";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (csv or json)")),
        }
    }
}

impl Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub m: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub ell: usize,
    pub grid: GridSpec,
    pub m_from: f64,
    pub m_to: f64,
    pub m_points: usize,
    pub r_list: Vec<f64>,
    pub p1: f64,
    pub beta: [Beta; 3],
    pub q: [Complex64; 3],
    pub seed: u64,
    pub samples: u64,
    pub tolerance: Option<f64>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 1.0,
            lambda: 1.0,
            alpha: 0.0,
            ell: 1,
            grid: GridSpec::default(),
            m_from: 0.08,
            m_to: 0.2,
            m_points: 21,
            r_list: vec![50.0, 100.0, 200.0, 400.0, 800.0],
            p1: 1.0,
            beta: [Beta::Friedrichs; 3],
            q: [Complex64::new(0.0, 0.0); 3],
            seed: DEFAULT_SEED,
            samples: 1_000_000,
            tolerance: None,
            format: None,
        }
    }
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad entry '{p}' for {key}")))
        .collect()
}

fn parse_three<T: FromStr + Copy>(key: &str, s: &str) -> Result<[T; 3], String> {
    let v = parse_list::<T>(key, s)?;
    match v.as_slice() {
        [a] => Ok([*a; 3]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(format!("{key} takes one or three comma-separated values")),
    }
}

fn parse_beta(s: &str) -> Result<[Beta; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let one = |p: &str| p.parse::<Beta>().map_err(|e| e.to_string());
    match parts.as_slice() {
        [a] => Ok([one(a)?; 3]),
        [a, b, c] => Ok([one(a)?, one(b)?, one(c)?]),
        _ => Err("beta takes one or three comma-separated values".into()),
    }
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T, String> {
    s.trim().parse::<T>().map_err(|_| format!("cannot read {key} from '{s}'"))
}

impl RunConfig {
    /// Flat `key = value` pairs; floats use the shortest round-trip form.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("m", self.m.to_string()),
            ("lambda", self.lambda.to_string()),
            ("alpha", self.alpha.to_string()),
            ("ell", self.ell.to_string()),
            ("grid_panels", self.grid.n_panels.to_string()),
            ("grid_nodes", self.grid.nodes_per_panel.to_string()),
            ("rmin", self.grid.r_min.to_string()),
            ("rmax", self.grid.r_max.to_string()),
            ("m_from", self.m_from.to_string()),
            ("m_to", self.m_to.to_string()),
            ("m_points", self.m_points.to_string()),
            ("r_list", join(&self.r_list)),
            ("p1", self.p1.to_string()),
            ("beta", join(&self.beta)),
            ("q", join(&self.q)),
            ("seed", self.seed.to_string()),
            ("samples", self.samples.to_string()),
            ("tolerance", self.tolerance.map_or("default".into(), |t| t.to_string())),
            ("format", self.format.map_or("default".into(), |f| f.to_string())),
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "m" => self.m = parse_value(key, v)?,
            "lambda" => self.lambda = parse_value(key, v)?,
            "alpha" => self.alpha = parse_value(key, v)?,
            "ell" => self.ell = parse_value(key, v)?,
            "grid_panels" => self.grid.n_panels = parse_value(key, v)?,
            "grid_nodes" => self.grid.nodes_per_panel = parse_value(key, v)?,
            "rmin" => self.grid.r_min = parse_value(key, v)?,
            "rmax" => self.grid.r_max = parse_value(key, v)?,
            "m_from" => self.m_from = parse_value(key, v)?,
            "m_to" => self.m_to = parse_value(key, v)?,
            "m_points" => self.m_points = parse_value(key, v)?,
            "r_list" => self.r_list = parse_list(key, v)?,
            "p1" => self.p1 = parse_value(key, v)?,
            "beta" => self.beta = parse_beta(v)?,
            "q" => self.q = parse_three(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "samples" => self.samples = parse_value(key, v)?,
            "tolerance" => self.tolerance = if v == "default" { None } else { Some(parse_value(key, v)?) },
            "format" => self.format = if v == "default" { None } else { Some(v.parse()?) },
            other => return Err(format!("unknown configuration key '{other}'")),
        }
        Ok(())
    }

    /// Reads a flat config file, or the configuration embedded in a previous
    /// CSV (`#!` lines) or JSON (`"config"` object) output.
    pub fn load(path: &Path) -> Result<BTreeMap<String, String>, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut out = BTreeMap::new();
        if text.trim_start().starts_with('{') {
            let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = v.get("config").and_then(Value::as_object).ok_or("JSON file has no config object")?;
            for (k, val) in cfg {
                let s = val.as_str().ok_or_else(|| format!("config value for {k} is not a string"))?;
                out.insert(k.clone(), s.to_string());
            }
            return Ok(out);
        }
        let embedded = text.lines().any(|l| l.starts_with(EMBED));
        for (no, line) in text.lines().enumerate() {
            let body = if embedded {
                match line.strip_prefix(EMBED) {
                    Some(b) => b,
                    None => continue,
                }
            } else {
                line
            };
            let body = body.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), no + 1))?;
            let k = k.trim();
            if matches!(k, "tms_version" | "command") {
                continue;
            }
            out.insert(k.to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(format!("m must be positive, got {}", self.m));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(format!("lambda must be positive, got {}", self.lambda));
        }
        if !self.alpha.is_finite() {
            return Err("alpha must be finite".into());
        }
        if self.m_points == 0 || !(self.m_from > 0.0 && self.m_to >= self.m_from) {
            return Err("need 0 < m_from <= m_to and m_points >= 1".into());
        }
        if self.samples < 2 {
            return Err("samples must be at least 2".into());
        }
        BetaParams::new(self.beta, self.q).map_err(|e| e.to_string())?;
        Ok(())
    }

    fn spec(&self, ell: usize) -> crate::Result<KernelSpec> {
        KernelSpec::from_mass(self.m, self.lambda, self.alpha, ell)
    }
}

/// Flags shared by all commands; each overrides the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat key = value configuration file (or a previous output file).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long = "grid-panels")]
    pub grid_panels: Option<usize>,
    #[arg(long = "grid-nodes")]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long = "m-from")]
    pub m_from: Option<f64>,
    #[arg(long = "m-to")]
    pub m_to: Option<f64>,
    #[arg(long = "m-points")]
    pub m_points: Option<usize>,
    /// Comma-separated ball radii.
    #[arg(long = "R-list")]
    pub r_list: Option<String>,
    #[arg(long)]
    pub p1: Option<f64>,
    /// One or three of: real number, `inf`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// One or three complex numbers, e.g. `1,0.5-2i,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Add a timestamp comment to the output header.
    #[arg(long)]
    pub stamp: bool,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            for (k, v) in RunConfig::load(path)? {
                cfg.set(&k, &v)?;
            }
        }
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
        set("m", self.m.map(|v| v.to_string()))?;
        set("lambda", self.lambda.map(|v| v.to_string()))?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("ell", self.ell.map(|v| v.to_string()))?;
        set("grid_panels", self.grid_panels.map(|v| v.to_string()))?;
        set("grid_nodes", self.grid_nodes.map(|v| v.to_string()))?;
        set("rmax", self.rmax.map(|v| v.to_string()))?;
        set("rmin", self.rmin.map(|v| v.to_string()))?;
        set("m_from", self.m_from.map(|v| v.to_string()))?;
        set("m_to", self.m_to.map(|v| v.to_string()))?;
        set("m_points", self.m_points.map(|v| v.to_string()))?;
        set("r_list", self.r_list.clone())?;
        set("p1", self.p1.map(|v| v.to_string()))?;
        set("beta", self.beta.clone())?;
        set("q", self.q.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("samples", self.samples.map(|v| v.to_string()))?;
        set("tolerance", self.tolerance.map(|v| v.to_string()))?;
        set("format", self.format.map(|v| v.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "tms", version, about = "Sector numerics for the 2+1 fermionic point-interaction model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mass thresholds m*, m**_M, m** (JSON).
    Thresholds(Overrides),
    /// Smallest singular values over a mass sweep (CSV).
    Scan(Overrides),
    /// Large-R asymptotics and the scalar-product identity.
    Asymptotics(Overrides),
    /// Schur-test bounds of the weighted kernel.
    Schur(Overrides),
    /// Extension forms and the three-body boundary condition.
    Forms(Overrides),
    /// One near-null-mode probe.
    Zeromode(Overrides),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Thresholds(_) => "thresholds",
            Command::Scan(_) => "scan",
            Command::Asymptotics(_) => "asymptotics",
            Command::Schur(_) => "schur",
            Command::Forms(_) => "forms",
            Command::Zeromode(_) => "zeromode",
        }
    }

    fn overrides(&self) -> &Overrides {
        match self {
            Command::Thresholds(o)
            | Command::Scan(o)
            | Command::Asymptotics(o)
            | Command::Schur(o)
            | Command::Forms(o)
            | Command::Zeromode(o) => o,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Numeric(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

/// A named pass/fail check of a command.
#[derive(Debug, Clone)]
struct Check {
    name: String,
    pass: bool,
    detail: Value,
}

impl Check {
    fn new(name: &str, pass: bool, detail: Value) -> Self {
        Check { name: name.to_string(), pass, detail }
    }
}

struct Report {
    result: Value,
    checks: Vec<Check>,
}

fn header_lines(command: &str, cfg: &RunConfig, stamp: bool) -> Vec<String> {
    let mut out = vec![format!("{EMBED} tms_version = {VERSION}"), format!("{EMBED} command = {command}")];
    out.extend(cfg.to_kv().into_iter().map(|(k, v)| format!("{EMBED} {k} = {v}")));
    if stamp {
        out.push(format!("# stamp = {}", unix_time()));
    }
    out
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn config_json(cfg: &RunConfig) -> Value {
    Value::Object(cfg.to_kv().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn checks_json(checks: &[Check]) -> Value {
    Value::Array(
        checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect(),
    )
}

fn write_report(
    sink: &mut dyn Write,
    command: &str,
    cfg: &RunConfig,
    stamp: bool,
    format: Format,
    report: &Report,
) -> io::Result<()> {
    let pass = report.checks.iter().all(|c| c.pass);
    match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("tms_version".into(), json!(VERSION));
            doc.insert("command".into(), json!(command));
            doc.insert("config".into(), config_json(cfg));
            if stamp {
                doc.insert("stamp".into(), json!(unix_time()));
            }
            doc.insert("result".into(), report.result.clone());
            doc.insert("checks".into(), checks_json(&report.checks));
            doc.insert("pass".into(), json!(pass));
            writeln!(sink, "{}", serde_json::to_string_pretty(&Value::Object(doc)).map_err(io::Error::other)?)
        }
        Format::Csv => {
            for l in header_lines(command, cfg, stamp) {
                writeln!(sink, "{l}")?;
            }
            writeln!(sink, "key,value")?;
            let mut rows = Vec::new();
            flatten("result", &report.result, &mut rows);
            flatten("checks", &checks_json(&report.checks), &mut rows);
            rows.push(("pass".into(), pass.to_string()));
            for (k, v) in rows {
                writeln!(sink, "{k},{v}")?;
            }
            Ok(())
        }
    }
}

fn cmd_thresholds(cfg: &RunConfig) -> Result<Report, Failure> {
    let tol = cfg.tolerance.unwrap_or(LAMBDA_TOL);
    // Residuals of C are limited by the Mellin quadrature.
    let c_tol = cfg.tolerance.map_or(C_TOL, |t| t.max(1e-10));
    let rep = thresholds_with(tol, c_tol)?;
    let pass = rep.residuals[0] <= tol && rep.residuals[1..].iter().all(|&r| r <= c_tol);
    let checks = vec![
        Check::new("residuals", pass, json!({"lambda_tol": tol, "c_tol": c_tol})),
        Check::new("ordered", rep.ordered(), Value::Null),
    ];
    let result = serde_json::to_value(&rep).map_err(|e| Failure::Io(io::Error::other(e)))?;
    Ok(Report { result, checks })
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    (0..n).map(|k| if k == n - 1 { to } else { from + (to - from) * k as f64 / (n - 1) as f64 }).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

const SCAN_COLUMNS: &str = "m,ell,sigma_min,sigma_next,tail_exponent_fit,tail_fit_r2,s_of_m,bottom,sigma_energy,grid_id,r_max";

/// Streams one CSV row per mass; returns whether the sector-0 bound held.
fn cmd_scan(cfg: &RunConfig, sink: &mut dyn Write, header: &[String], json_rows: &mut Vec<Value>) -> Result<bool, Failure> {
    for l in header {
        writeln!(sink, "{l}")?;
    }
    writeln!(sink, "{SCAN_COLUMNS}")?;
    let template = cfg.spec(cfg.ell)?;
    let l2 = Arc::new(cfg.grid.build(Measure::L2)?);
    let masses = linspace(cfg.m_from, cfg.m_to, cfg.m_points);
    let mut ok = true;
    // Chunks run in parallel; rows are written and flushed in input order.
    for chunk in masses.chunks(rayon::current_num_threads().max(1)) {
        let recs = scan_mass(cfg.ell, chunk, &template, &cfg.grid, ProbeOptions::default())?;
        let extra: Vec<(f64, f64)> = chunk
            .par_iter()
            .map(|&m| {
                let spec = KernelSpec::from_mass(m, cfg.lambda, cfg.alpha, cfg.ell)?;
                Ok((bottom(&spec, l2.clone())?.value, energy_sigma_min(&spec, l2.clone())?))
            })
            .collect::<crate::Result<_>>()?;
        for (rec, (b, se)) in recs.into_iter().zip(extra) {
            if cfg.ell == 0 {
                ok &= b > 0.0 && se >= b * (1.0 - 1e-9);
            }
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{},{},{},{}",
                rec.m,
                rec.ell,
                rec.sigma_min,
                rec.sigma_next,
                opt(rec.tail_exponent_fit),
                opt(rec.tail_fit_r2),
                opt(rec.s_of_m),
                b,
                se,
                rec.grid_id,
                rec.r_max
            )?;
            sink.flush()?;
            json_rows.push(json!({
                "m": rec.m, "ell": rec.ell, "sigma_min": rec.sigma_min, "sigma_next": rec.sigma_next,
                "tail_exponent_fit": rec.tail_exponent_fit, "tail_fit_r2": rec.tail_fit_r2, "s_of_m": rec.s_of_m,
                "bottom": b, "sigma_energy": se, "grid_id": rec.grid_id, "r_max": rec.r_max,
            }));
        }
    }
    Ok(ok)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cmd_asymptotics(cfg: &RunConfig) -> Result<Report, Failure> {
    let spec = cfg.spec(cfg.ell)?;
    let g = Arc::new(cfg.grid.build(Measure::L2)?);
    let ell = cfg.ell as i32;
    let xi = Charge::from_fn(cfg.ell, 0, g.clone(), |r| r.powi(ell) * (-r * r).exp())?;
    let gs = GSpec::xi_only(xi.clone())?;
    let fit = extract_tms(&gs, &spec, cfg.p1, &cfg.r_list)?;
    let x1 = xi.eval(cfg.p1);
    let slope_ratio = fit.slope / (4.0 * std::f64::consts::PI * x1);
    let c = constant_term(&gs, &spec, cfg.p1)?;
    let paired = GSpec::new(xi.clone(), tms_pair(&xi, &spec)?)?;
    let tms = extract_tms(&paired, &spec, cfg.p1, &cfg.r_list)?;
    let tms_err = (tms.intercept - cfg.alpha * x1).abs() / (cfg.alpha * x1).abs().max(x1.abs());
    let u = u_norm_sq(&xi, &spec)?;
    let w = w_inner(&assemble(&spec, g.clone(), OperatorKind::W)?, &xi, &xi)?;
    let slope_tol = cfg.tolerance.unwrap_or(1e-3);
    let checks = vec![
        Check::new("slope", (slope_ratio - 1.0).abs() <= slope_tol, json!({"ratio": slope_ratio, "tol": slope_tol})),
        Check::new("intercept", rel(fit.intercept, c) <= 1e-2, json!({"rel_err": rel(fit.intercept, c)})),
        Check::new("tms_intercept", tms_err <= 1e-2, json!({"rel_err": tms_err})),
        Check::new("scalar_product", rel(u, w) <= 1e-3, json!({"rel_err": rel(u, w)})),
    ];
    let result = json!({
        "p1": cfg.p1, "xi_p1": x1, "slope": fit.slope, "intercept": fit.intercept,
        "correction": fit.correction, "fit_residual": fit.residual, "correction_model": format!("{:?}", fit.model),
        "constant_term": c, "tms_intercept": tms.intercept, "alpha_xi_p1": cfg.alpha * x1,
        "u_norm_sq": u, "w_inner": w, "grid_id": g.id(),
    });
    Ok(Report { result, checks })
}

fn cmd_schur(cfg: &RunConfig) -> Result<Report, Failure> {
    let rep = schur_bounds(cfg.ell, &cfg.grid)?;
    let tol = cfg.tolerance.unwrap_or(1e-2);
    let finite = rep.sup_row.is_finite() && rep.sup_col.is_finite() && rep.sup_row > 0.0 && rep.sup_col > 0.0;
    let checks = vec![
        Check::new("finite", finite, Value::Null),
        Check::new("refinement", rep.refinement_delta < tol, json!({"delta": rep.refinement_delta, "tol": tol})),
    ];
    let result = serde_json::to_value(&rep).map_err(|e| Failure::Io(io::Error::other(e)))?;
    Ok(Report { result, checks })
}

fn cmd_forms(cfg: &RunConfig) -> Result<Report, Failure> {
    let spec = cfg.spec(1)?;
    let bp = BetaParams::new(cfg.beta, cfg.q)?;
    let needs_basis = (0..3).any(|k| bp.q[k].norm() != 0.0);
    let (ctx, basis) = if needs_basis {
        let (ctx, basis) = singular_setup(&spec, &cfg.grid)?;
        (ctx, Some(basis))
    } else {
        (FormContext::new(&spec, Arc::new(cfg.grid.build(Measure::L2)?))?, None)
    };
    let g = Charge::from_fn(1, 0, ctx.grid.clone(), |r| r * (-r * r).exp())?;
    let mut xi_reg = RegularCharge::single(g.clone())?;
    let mut checks = Vec::new();
    let mut result = Map::new();
    if let Some(basis) = &basis {
        let h = Charge::from_fn(1, 0, ctx.grid.clone(), |r| r * (-r * r / 4.0).exp())?;
        let core = RegularCharge::single(project_core(&g, &h, basis, &ctx)?)?;
        xi_reg = core.add(&solve_regular_from_singular(&bp, basis, &ctx)?)?;
        let bc2 = check_bc2(&xi_reg, &bp, basis, &ctx)?;
        let worst = bc2.relative().iter().copied().fold(0.0, f64::max);
        let tol = cfg.tolerance.unwrap_or(1e-6);
        checks.push(Check::new("bc2", worst <= tol, json!({"relative": bc2.relative(), "tol": tol})));
        result.insert("bc2_residuals".into(), json!(bc2.residuals));
        result.insert("basis_sigma_min".into(), json!(basis.sigma_min));
    }
    let fried: f64 = xi_reg
        .components
        .iter()
        .map(|c| Ok(friedrichs_form(&c.re, &ctx)? + friedrichs_form(&c.im, &ctx)?))
        .sum::<crate::Result<f64>>()?;
    let bf = beta_form(&xi_reg, &bp, basis.as_ref(), &ctx)?;
    let fried_limit = BetaParams::friedrichs();
    let bf_inf = beta_form(&xi_reg, &fried_limit, basis.as_ref(), &ctx)?;
    checks.push(Check::new("beta_form_friedrichs_limit", bf_inf == fried, json!({"beta_form": bf_inf, "friedrichs_form": fried})));
    let a = Charge::from_fn(0, 0, ctx.grid.clone(), |r| (-r * r).exp())?;
    let b = Charge::from_fn(1, 0, ctx.grid.clone(), |r| r * (-r * r / 2.0).exp())?;
    let state = SeparableState::new(a, b)?;
    let hf = h_form_separable(&state, &xi_reg, &bp, basis.as_ref(), &ctx)?;
    if !needs_basis {
        let mc = h_form_mc(&state, &xi_reg.components[1].re, &spec, cfg.samples, cfg.seed)?;
        let z = mc.value.z_score(hf.value);
        checks.push(Check::new("h_form_monte_carlo", z <= 3.0, json!({"z": z, "mc": mc.value})));
    }
    result.insert("friedrichs_form".into(), json!(fried));
    result.insert("beta_form".into(), json!(bf));
    result.insert("h_form".into(), serde_json::to_value(hf).map_err(|e| Failure::Io(io::Error::other(e)))?);
    result.insert("grid_id".into(), json!(ctx.grid.id()));
    Ok(Report { result: Value::Object(result), checks })
}

fn cmd_zeromode(cfg: &RunConfig) -> Result<Report, Failure> {
    let spec = cfg.spec(cfg.ell)?;
    let g = Arc::new(cfg.grid.build(Measure::Hminus12)?);
    let probe = smallest_singular(&spec, g.clone())?;
    let fit = fit_tail(&probe.vector, default_fit_range(&g)).ok();
    let result = json!({
        "m": cfg.m, "ell": cfg.ell, "sigma_min": probe.sigma_min, "sigma_next": probe.sigma_next,
        "closure_exponents": probe.exponents, "tail_exponent_fit": fit.map(|f| f.exponent),
        "tail_fit_r2": fit.map(|f| f.r2), "s_of_m": solve_s_of_m(cfg.m).ok().map(|r| r.x),
        "grid_id": probe.grid_id, "r_max": g.r_max(),
    });
    Ok(Report { result, checks: Vec::new() })
}

fn execute(command: &Command, cfg: &RunConfig, sink: &mut dyn Write) -> Result<bool, Failure> {
    let o = command.overrides();
    let name = command.name();
    let default_format = if matches!(command, Command::Scan(_)) { Format::Csv } else { Format::Json };
    let format = cfg.format.unwrap_or(default_format);
    if let Command::Scan(_) = command {
        if format == Format::Csv {
            let header = header_lines(name, cfg, o.stamp);
            let mut rows = Vec::new();
            return cmd_scan(cfg, sink, &header, &mut rows);
        }
        let mut rows = Vec::new();
        let ok = cmd_scan(cfg, &mut io::sink(), &[], &mut rows)?;
        let check = Check::new("sector0_bottom", ok, Value::Null);
        let report = Report { result: json!({"rows": rows}), checks: vec![check] };
        write_report(sink, name, cfg, o.stamp, format, &report)?;
        return Ok(ok);
    }
    let report = match command {
        Command::Thresholds(_) => cmd_thresholds(cfg)?,
        Command::Asymptotics(_) => cmd_asymptotics(cfg)?,
        Command::Schur(_) => cmd_schur(cfg)?,
        Command::Forms(_) => cmd_forms(cfg)?,
        Command::Zeromode(_) => cmd_zeromode(cfg)?,
        Command::Scan(_) => unreachable!(),
    };
    write_report(sink, name, cfg, o.stamp, format, &report)?;
    Ok(report.checks.iter().all(|c| c.pass))
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Output goes to `--out` or `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_PASS;
        }
    };
    let cfg = match cli.command.overrides().resolve() {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let outcome = match &cli.command.overrides().out {
        Some(path) => fs::File::create(path)
            .map_err(Failure::Io)
            .and_then(|f| {
                let mut w = io::BufWriter::new(f);
                let ok = execute(&cli.command, &cfg, &mut w)?;
                w.flush()?;
                Ok(ok)
            }),
        None => execute(&cli.command, &cfg, stdout),
    };
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => {
            let _ = writeln!(stderr, "check failed");
            EXIT_CHECK_FAILED
        }
        Err(Failure::Numeric(e)) => {
            let _ = writeln!(stderr, "numeric failure: {e}");
            match e {
                Error::Domain(_) | Error::Mismatch(_) => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            }
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "io error: {e}");
            EXIT_NUMERIC
        }
    }
}
