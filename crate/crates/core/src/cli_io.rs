//! Flat `key = value` experiment configs, run orchestration, sweeps and the on-disk formats
//! for time series, field snapshots and reports.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{self, classify_run, Check, DiagnosticsReport, RunClass, ScatteringConfig, VirialTarget};
use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig, EvolutionState, Run, Sample, TimeSeries, Verdict};
use crate::functionals::{FunctionalValues, Quadrature, WeightKind};
use crate::ground_state::{petviashvili_solve_with, recommended_grid, GroundStateResult, PetviashviliOptions, Projection};
use crate::spectral_core::{build_grid, PhysicsParams, RadialField, RadialGrid, Sign};

/// Environment variable overriding the output root.
pub const OUTPUT_ROOT_ENV: &str = "INLS_OUTPUT_ROOT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// A r^{ν−1/2} e^{−r²/w²}, a plain Gaussian for a = 0
    Gaussian { amplitude: f64, width: f64 },
    /// c·Q with Q the ground state on the run grid
    GroundStateMultiple { multiplier: f64, projection: Projection },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: PhysicsParams,
    pub n: usize,
    pub r_max: f64,
    pub initial: InitialData,
    pub evolution: EvolutionConfig,
    /// Morawetz horizons T
    pub horizons: Vec<f64>,
    pub scattering: ScatteringConfig,
    /// run directory relative to the output root
    pub output_dir: String,
    pub seed: u64,
}

const KEYS: &[&str] = &[
    "physics.a",
    "physics.b",
    "physics.lambda",
    "grid.n",
    "grid.r_max",
    "initial.family",
    "initial.amplitude",
    "initial.width",
    "initial.multiplier",
    "initial.projection",
    "initial.path",
    "evolution.dt",
    "evolution.t_end",
    "evolution.monitor_stride",
    "evolution.field_stride",
    "evolution.blowup_factor",
    "evolution.reflect_mass_cap",
    "evolution.linear_only",
    "diagnostics.weights",
    "diagnostics.radii",
    "diagnostics.horizons",
    "diagnostics.tail_start",
    "diagnostics.tail_samples",
    "diagnostics.ball_radius",
    "diagnostics.epsilon_sq",
    "diagnostics.cauchy_tol",
    "output.dir",
    "seed",
];

struct Entries<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn line(&self, key: &str) -> usize {
        self.map.get(key).map(|e| e.0).unwrap_or(0)
    }

    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| Error::Config { line, message: format!("{key}: cannot parse {v:?}") }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &'static str) -> Result<T> {
        let (line, v) = self.raw(key).ok_or(Error::MissingKey(key))?;
        v.parse().map_err(|_| Error::Config { line, message: format!("{key}: cannot parse {v:?}") })
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((_, "")) => Ok(Vec::new()),
            Some((line, v)) => parse_list(v).map_err(|m| Error::Config { line, message: format!("{key}: {m}") }),
        }
    }

    fn in_range(&self, key: &str, e: Error) -> Error {
        match e {
            Error::Domain { .. } => Error::Config { line: self.line(key), message: e.to_string() },
            other => other,
        }
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| format!("cannot parse {s:?} as a number"))).collect()
}

fn parse_lambda(v: &str) -> Option<Sign> {
    match v {
        "focusing" | "-1" => Some(Sign::Focusing),
        "defocusing" | "1" | "+1" => Some(Sign::Defocusing),
        _ => None,
    }
}

fn parse_weight(s: &str) -> Option<WeightKind> {
    match s.trim() {
        "quadratic" => Some(WeightKind::Quadratic),
        t => t.strip_prefix("truncated:")?.parse().ok().filter(|r: &f64| *r > 0.0).map(|radius| WeightKind::Truncated { radius }),
    }
}

fn parse_projection(v: &str) -> Option<Projection> {
    match v {
        "collocation" => Some(Projection::Collocation),
        "galerkin" => Some(Projection::Galerkin),
        _ => None,
    }
}

/// Parse and validate a config. Comments start with `#`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Config { line, message: format!("expected key = value, got {body:?}") })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config { line, message: format!("unknown key {k:?}") });
        }
        if map.insert(k, (line, v)).is_some() {
            return Err(Error::Config { line, message: format!("duplicate key {k:?}") });
        }
    }
    let e = Entries { map };

    let a: f64 = e.required("physics.a")?;
    let b: f64 = e.required("physics.b")?;
    let (lline, lraw) = e.raw("physics.lambda").ok_or(Error::MissingKey("physics.lambda"))?;
    let lambda = parse_lambda(lraw).ok_or_else(|| Error::Config { line: lline, message: "lambda in {focusing, defocusing}".to_string() })?;
    let params = PhysicsParams::new(a, b, Sign::Focusing).map_err(|err| {
        let key = if matches!(err, Error::Domain { name: "b", .. }) { "physics.b" } else { "physics.a" };
        e.in_range(key, err)
    })?;
    let params = PhysicsParams { lambda, ..params };

    let n: usize = e.get("grid.n", 512)?;
    if n < 8 {
        return Err(Error::Config { line: e.line("grid.n"), message: format!("grid.n = {n} is out of range: requires N >= 8") });
    }
    let r_max: f64 = e.get("grid.r_max", 64.0)?;
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::Config { line: e.line("grid.r_max"), message: format!("grid.r_max = {r_max} is out of range: requires R_max > 0") });
    }

    let family: String = e.get("initial.family", "gaussian".to_string())?;
    let initial = match family.as_str() {
        "gaussian" => {
            let amplitude = e.get("initial.amplitude", 1.0)?;
            let width = e.get("initial.width", 1.0)?;
            if !(width > 0.0) {
                return Err(Error::Config { line: e.line("initial.width"), message: "initial.width must be > 0".to_string() });
            }
            InitialData::Gaussian { amplitude, width }
        }
        "ground_state_multiple" => {
            let pr: String = e.get("initial.projection", "collocation".to_string())?;
            let projection = parse_projection(&pr)
                .ok_or_else(|| Error::Config { line: e.line("initial.projection"), message: "initial.projection in {collocation, galerkin}".to_string() })?;
            InitialData::GroundStateMultiple { multiplier: e.get("initial.multiplier", 1.0)?, projection }
        }
        "file" => {
            let path: String = e.required("initial.path")?;
            InitialData::File { path: PathBuf::from(path) }
        }
        other => {
            return Err(Error::Config {
                line: e.line("initial.family"),
                message: format!("unknown initial family {other:?}: expected gaussian, ground_state_multiple or file"),
            })
        }
    };

    let weights = match e.raw("diagnostics.weights") {
        None => vec![WeightKind::Quadratic],
        Some((_, "")) => Vec::new(),
        Some((line, v)) => v
            .split(',')
            .map(|s| parse_weight(s).ok_or_else(|| Error::Config { line, message: format!("weight {s:?}: expected quadratic or truncated:<R>") }))
            .collect::<Result<_>>()?,
    };
    let evolution = EvolutionConfig {
        dt: e.get("evolution.dt", 1e-3)?,
        t_end: e.get("evolution.t_end", 1.0)?,
        monitor_stride: e.get("evolution.monitor_stride", 10)?,
        field_stride: e.get("evolution.field_stride", 10)?,
        blowup_factor: e.get("evolution.blowup_factor", 1e3)?,
        reflect_mass_cap: e.get("evolution.reflect_mass_cap", 1e-4)?,
        linear_only: e.get("evolution.linear_only", false)?,
        weights,
        ball_radii: e.list("diagnostics.radii", &[10.0])?,
    };
    evolution.validate().map_err(|err| {
        let key = match err {
            Error::Domain { name: "dt", .. } => "evolution.dt",
            Error::Domain { name: "t_end", .. } => "evolution.t_end",
            Error::Domain { name: "monitor_stride", .. } => "evolution.monitor_stride",
            Error::Domain { name: "blowup_factor", .. } => "evolution.blowup_factor",
            Error::Domain { name: "reflect_mass_cap", .. } => "evolution.reflect_mass_cap",
            _ => "diagnostics.radii",
        };
        e.in_range(key, err)
    })?;

    let scattering = ScatteringConfig {
        tail_start: e.get("diagnostics.tail_start", 0.5)?,
        tail_samples: e.get("diagnostics.tail_samples", 6)?,
        ball_radius: e.get("diagnostics.ball_radius", 10.0)?,
        epsilon_sq: e.get("diagnostics.epsilon_sq", 1e-2)?,
        cauchy_tol: e.get("diagnostics.cauchy_tol", 1e-2)?,
    };
    if !(0.0..1.0).contains(&scattering.tail_start) || scattering.tail_samples < 2 {
        return Err(Error::Config { line: e.line("diagnostics.tail_start"), message: "requires 0 <= tail_start < 1 and tail_samples >= 2".to_string() });
    }
    Ok(ExperimentConfig {
        params,
        n,
        r_max,
        initial,
        evolution,
        horizons: e.list("diagnostics.horizons", &[])?,
        scattering,
        output_dir: e.get("output.dir", "run".to_string())?,
        seed: e.get("seed", 0)?,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Canonical text of the effective config: every key, fixed order.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let p = &cfg.params;
    kv("physics.a", p.a.to_string());
    kv("physics.b", p.b.to_string());
    kv("physics.lambda", if p.lambda == Sign::Focusing { "focusing" } else { "defocusing" }.to_string());
    kv("grid.n", cfg.n.to_string());
    kv("grid.r_max", cfg.r_max.to_string());
    match &cfg.initial {
        InitialData::Gaussian { amplitude, width } => {
            kv("initial.family", "gaussian".into());
            kv("initial.amplitude", amplitude.to_string());
            kv("initial.width", width.to_string());
        }
        InitialData::GroundStateMultiple { multiplier, projection } => {
            kv("initial.family", "ground_state_multiple".into());
            kv("initial.multiplier", multiplier.to_string());
            kv("initial.projection", if *projection == Projection::Collocation { "collocation" } else { "galerkin" }.into());
        }
        InitialData::File { path } => {
            kv("initial.family", "file".into());
            kv("initial.path", path.display().to_string());
        }
    }
    let ev = &cfg.evolution;
    kv("evolution.dt", ev.dt.to_string());
    kv("evolution.t_end", ev.t_end.to_string());
    kv("evolution.monitor_stride", ev.monitor_stride.to_string());
    kv("evolution.field_stride", ev.field_stride.to_string());
    kv("evolution.blowup_factor", ev.blowup_factor.to_string());
    kv("evolution.reflect_mass_cap", ev.reflect_mass_cap.to_string());
    kv("evolution.linear_only", ev.linear_only.to_string());
    let weights: Vec<String> = ev
        .weights
        .iter()
        .map(|w| match w {
            WeightKind::Quadratic => "quadratic".to_string(),
            WeightKind::Truncated { radius } => format!("truncated:{radius}"),
        })
        .collect();
    kv("diagnostics.weights", weights.join(","));
    kv("diagnostics.radii", join(&ev.ball_radii));
    kv("diagnostics.horizons", join(&cfg.horizons));
    let sc = &cfg.scattering;
    kv("diagnostics.tail_start", sc.tail_start.to_string());
    kv("diagnostics.tail_samples", sc.tail_samples.to_string());
    kv("diagnostics.ball_radius", sc.ball_radius.to_string());
    kv("diagnostics.epsilon_sq", sc.epsilon_sq.to_string());
    kv("diagnostics.cauchy_tol", sc.cauchy_tol.to_string());
    kv("output.dir", cfg.output_dir.clone());
    kv("seed", cfg.seed.to_string());
    s
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn timeseries_header(series: &TimeSeries) -> Vec<String> {
    let mut h: Vec<String> = ["t", "M", "K", "P", "E", "sup", "outer_mass", "inverse_cube", "weighted_quartic", "quartic"].map(String::from).to_vec();
    for w in &series.weights {
        h.push(format!("V_{}", w.label()));
        h.push(format!("dVdt_{}", w.label()));
    }
    for r in &series.radii {
        h.push(format!("ball_mass_R{r}"));
        h.push(format!("ball_potential_R{r}"));
    }
    h
}

pub fn write_timeseries_csv(series: &TimeSeries) -> String {
    let mut out = timeseries_header(series).join(",");
    out.push('\n');
    for s in &series.samples {
        let mut row = vec![s.t, s.m, s.k, s.p, s.e, s.sup, s.outer_mass, s.inverse_cube, s.weighted_quartic, s.quartic];
        for (v, d) in s.virial.iter().zip(&s.virial_rhs) {
            row.extend([*v, *d]);
        }
        for (m, p) in s.ball_mass.iter().zip(&s.ball_potential) {
            row.extend([*m, *p]);
        }
        out.push_str(&row.into_iter().map(fmt17).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Inverse of [`write_timeseries_csv`] given the monitored weights and radii.
pub fn read_timeseries_csv(text: &str, weights: &[WeightKind], radii: &[f64], path: &str) -> Result<TimeSeries> {
    let bad = |message: String| Error::Format { path: path.to_string(), message };
    let mut series = TimeSeries { weights: weights.to_vec(), radii: radii.to_vec(), samples: Vec::new() };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header != timeseries_header(&series).join(",") {
        return Err(bad(format!("header does not match the configured monitors: {header}")));
    }
    let (nw, nr) = (weights.len(), radii.len());
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line.split(',').map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad(format!("row {}: not numeric", i + 1)))?;
        if v.len() != 10 + 2 * (nw + nr) {
            return Err(bad(format!("row {}: {} columns", i + 1, v.len())));
        }
        let pairs = |start: usize, count: usize, k: usize| (0..count).map(|j| v[start + 2 * j + k]).collect::<Vec<_>>();
        series.samples.push(Sample {
            t: v[0],
            m: v[1],
            k: v[2],
            p: v[3],
            e: v[4],
            sup: v[5],
            outer_mass: v[6],
            inverse_cube: v[7],
            weighted_quartic: v[8],
            quartic: v[9],
            virial: pairs(10, nw, 0),
            virial_rhs: pairs(10, nw, 1),
            ball_mass: pairs(10 + 2 * nw, nr, 0),
            ball_potential: pairs(10 + 2 * nw, nr, 1),
        });
    }
    Ok(series)
}

/// Snapshot text: a header line then `r Re(W) Im(W)` per node, W = r^{1/2}u.
pub fn write_field(f: &RadialField, p: &PhysicsParams, t: f64) -> String {
    let g = f.grid();
    let mut out = format!("# inls-field a={} b={} nu={} N={} Rmax={} t={}\n", p.a, p.b, g.nu(), g.len(), g.r_max(), t);
    for (r, w) in g.nodes().iter().zip(f.samples()) {
        let _ = writeln!(out, "{} {} {}", fmt17(*r), fmt17(w.re), fmt17(w.im));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub n: usize,
    pub r_max: f64,
    pub t: f64,
}

pub fn parse_field_header(line: &str, path: &str) -> Result<FieldHeader> {
    let bad = |message: String| Error::Format { path: path.to_string(), message };
    let rest = line.strip_prefix("# inls-field ").ok_or_else(|| bad("missing inls-field header".into()))?;
    let kv: HashMap<&str, &str> = rest.split_whitespace().filter_map(|t| t.split_once('=')).collect();
    let num = |k: &str| kv.get(k).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(format!("header field {k} missing or malformed")));
    Ok(FieldHeader { a: num("a")?, b: num("b")?, nu: num("nu")?, n: num("N")? as usize, r_max: num("Rmax")?, t: num("t")? })
}

/// Read a snapshot onto `grid`; the stored grid must coincide.
pub fn read_field(text: &str, grid: &Arc<RadialGrid>, path: &str) -> Result<(FieldHeader, RadialField)> {
    let bad = |message: String| Error::Format { path: path.to_string(), message };
    let mut lines = text.lines();
    let header = parse_field_header(lines.next().unwrap_or(""), path)?;
    if header.n != grid.len() || header.r_max != grid.r_max() || (header.nu - grid.nu()).abs() > 1e-14 {
        return Err(bad(format!("snapshot grid (nu={}, N={}, Rmax={}) differs from the run grid", header.nu, header.n, header.r_max)));
    }
    let samples = lines
        .enumerate()
        .map(|(i, l)| {
            let v: Vec<f64> = l.split_whitespace().filter_map(|s| s.parse().ok()).collect();
            match v[..] {
                [_, re, im] => Ok(Complex64::new(re, im)),
                _ => Err(bad(format!("line {}: expected three numbers", i + 2))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, RadialField::from_reduced(grid.clone(), samples)?))
}

pub fn config_grid(cfg: &ExperimentConfig) -> Result<Arc<RadialGrid>> {
    build_grid(cfg.params.nu(), cfg.n, cfg.r_max)
}

/// Focusing ground state on the run grid, with the requested projection.
pub fn run_ground_state(cfg: &ExperimentConfig, grid: &Arc<RadialGrid>, projection: Projection) -> Result<GroundStateResult> {
    petviashvili_solve_with(&cfg.params, grid.clone(), None, PetviashviliOptions { projection, ..Default::default() })
}

/// Q on the recommended grid, for thresholds only. Run grids are often too coarse or too
/// wide to resolve Q.
pub fn threshold_ground_state(p: &PhysicsParams) -> Result<GroundStateResult> {
    let (n, r_max) = recommended_grid(p.a, p.b);
    let q = PhysicsParams { lambda: Sign::Focusing, ..*p };
    petviashvili_solve_with(&q, build_grid(q.nu(), n, r_max)?, None, PetviashviliOptions { projection: Projection::Collocation, ..Default::default() })
}

fn initial_field(cfg: &ExperimentConfig, grid: &Arc<RadialGrid>, ground: &mut Option<GroundStateResult>) -> Result<RadialField> {
    let nu = grid.nu();
    match &cfg.initial {
        InitialData::Gaussian { amplitude, width } => {
            let (a, w) = (*amplitude, *width);
            Ok(RadialField::from_real_profile(grid.clone(), move |r| a * r.powf(nu - 0.5) * (-(r / w).powi(2)).exp()))
        }
        InitialData::GroundStateMultiple { multiplier, projection } => {
            if ground.as_ref().is_none_or(|g| g.projection != *projection) {
                *ground = Some(run_ground_state(cfg, grid, *projection)?);
            }
            Ok(ground.as_ref().map(|g| g.q.scaled(*multiplier)).expect("ground state just computed"))
        }
        InitialData::File { path } => {
            let text = fs::read_to_string(path)?;
            Ok(read_field(&text, grid, &path.display().to_string())?.1)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub verdict: Verdict,
    pub class: Option<RunClass>,
    pub report: DiagnosticsReport,
    pub run: Run,
    pub ground: Option<GroundStateResult>,
}

impl RunOutcome {
    /// Process exit code: 0 for a completed run, 4 when a detector fired.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Completed => 0,
            _ => 4,
        }
    }
}

fn verdict_line(v: &Verdict) -> String {
    match v {
        Verdict::Completed => "completed".to_string(),
        Verdict::BlowupDetected { t } | Verdict::ReflectionAbort { t } => format!("{} {}", v.label(), fmt17(*t)),
    }
}

fn parse_verdict(s: &str, path: &str) -> Result<Verdict> {
    let mut it = s.split_whitespace();
    let label = it.next().unwrap_or("");
    let t = it.next().and_then(|v| v.parse::<f64>().ok());
    match (label, t) {
        ("completed", _) => Ok(Verdict::Completed),
        ("blowup_detected", Some(t)) => Ok(Verdict::BlowupDetected { t }),
        ("reflection_abort", Some(t)) => Ok(Verdict::ReflectionAbort { t }),
        _ => Err(Error::Format { path: path.to_string(), message: format!("unrecognised verdict {s:?}") }),
    }
}

/// Configured checks over a run: the generic set plus Morawetz horizons and the scattering
/// thresholds from the config.
pub fn experiment_report(cfg: &ExperimentConfig, run: &Run, ground: Option<&GroundStateResult>, class: Option<RunClass>) -> DiagnosticsReport {
    let mut report = diagnostics::diagnose_run(run, ground);
    report.checks.retain(|c| c.name != "scattering");
    if let Some(c) = class {
        report.notes.push(format!("threshold class = {c}"));
    }
    report.notes.push(format!("seed = {}", cfg.seed));
    if run.fields.len() >= 2 {
        if let Ok(s) = diagnostics::scattering_detect(run, &cfg.scattering) {
            report.checks.push(Check {
                name: "scattering".into(),
                anchor: "convergence of the backward-propagated profile in H^1_a".into(),
                measured: vec![("max Cauchy distance".into(), s.max_cauchy), ("min mass in ball".into(), s.min_ball_mass)],
                tolerance: format!("Cauchy <= {} and mass in ball(R={}) <= {}", cfg.scattering.cauchy_tol, cfg.scattering.ball_radius, cfg.scattering.epsilon_sq),
                pass: Some(s.consistent),
            });
        }
    }
    if !cfg.horizons.is_empty() {
        if let Ok(fit) = diagnostics::morawetz_fit(run, &cfg.horizons) {
            let mut measured = vec![("C".to_string(), fit.c), ("spread".to_string(), fit.spread)];
            measured.extend(fit.horizons.iter().zip(&fit.constants).map(|(t, k)| (format!("C_T at T={t}"), *k)));
            report.checks.push(Check {
                name: "Morawetz decay".into(),
                anchor: "time-averaged potential energy on balls of radius R = T^(1/(1+b))".into(),
                measured,
                tolerance: "one C within a factor 2 of every C_T".into(),
                pass: Some(fit.within_factor(2.0)),
            });
        }
    }
    report
}

/// Evolve the configured data and persist config, time series, snapshots and report under
/// `root/output.dir`. Detector-fired runs are persisted with their verdict.
pub fn run_experiment(cfg: &ExperimentConfig, root: &Path) -> Result<RunOutcome> {
    let dir = root.join(&cfg.output_dir);
    fs::create_dir_all(dir.join("fields"))?;
    fs::write(dir.join("config.txt"), emit_config(cfg))?;
    let grid = config_grid(cfg)?;
    let mut ground = None;
    let u0 = initial_field(cfg, &grid, &mut ground)?;
    if cfg.params.lambda == Sign::Focusing && ground.is_none() {
        ground = Some(threshold_ground_state(&cfg.params)?);
    }
    let class = ground.as_ref().filter(|_| cfg.params.lambda == Sign::Focusing).map(|g| classify_run(&cfg.params, &u0, g));
    let run = evolve(&u0, &cfg.params, &cfg.evolution)?;
    persist_run(&dir, &run)?;
    let report = experiment_report(cfg, &run, ground.as_ref(), class);
    let mut text = format!("verdict = {}\n", verdict_line(&run.verdict));
    text.push_str(&report.render());
    fs::write(dir.join("report.txt"), text)?;
    Ok(RunOutcome { dir, verdict: run.verdict, class, report, run, ground })
}

fn persist_run(dir: &Path, run: &Run) -> Result<()> {
    fs::write(dir.join("timeseries.csv"), write_timeseries_csv(run.series()))?;
    fs::write(dir.join("verdict.txt"), verdict_line(&run.verdict) + "\n")?;
    for (i, (t, f)) in run.fields.iter().enumerate() {
        fs::write(dir.join("fields").join(format!("field_{i:05}.txt")), write_field(f, &run.params, *t))?;
    }
    Ok(())
}

/// Reload a persisted run directory.
pub fn load_run(dir: &Path) -> Result<(ExperimentConfig, Run)> {
    let cfg = parse_config(&fs::read_to_string(dir.join("config.txt"))?)?;
    let grid = config_grid(&cfg)?;
    let csv_path = dir.join("timeseries.csv");
    let series = read_timeseries_csv(&fs::read_to_string(&csv_path)?, &cfg.evolution.weights, &cfg.evolution.ball_radii, &csv_path.display().to_string())?;
    let vpath = dir.join("verdict.txt");
    let verdict = parse_verdict(fs::read_to_string(&vpath)?.trim(), &vpath.display().to_string())?;
    let mut names: Vec<PathBuf> = match fs::read_dir(dir.join("fields")) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "txt")).collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    let fields = names
        .iter()
        .map(|p| read_field(&fs::read_to_string(p)?, &grid, &p.display().to_string()).map(|(h, f)| (h.t, f)))
        .collect::<Result<Vec<_>>>()?;
    let first = series.samples.first().ok_or_else(|| Error::Format { path: csv_path.display().to_string(), message: "no samples".into() })?;
    let (m0, e0) = (first.m, first.e);
    let t = series.last().map(|s| s.t).unwrap_or(0.0);
    let u = fields.last().map(|f| f.1.clone()).unwrap_or_else(|| RadialField::zero(grid.clone()));
    let run = Run { params: cfg.params, config: cfg.evolution.clone(), state: EvolutionState { t, u, m0, e0, series }, verdict, fields };
    Ok((cfg, run))
}

/// Re-run the audits on a persisted run: writes `diagnose_report.txt` and per-check CSV series.
pub fn diagnose(dir: &Path) -> Result<DiagnosticsReport> {
    let (cfg, run) = load_run(dir)?;
    let p = cfg.params;
    let ground = if p.lambda == Sign::Focusing { Some(threshold_ground_state(&p)?) } else { None };
    let class = match (&ground, run.fields.first()) {
        (Some(g), Some((_, u0))) => Some(classify_run(&p, u0, g)),
        _ => None,
    };
    let report = experiment_report(&cfg, &run, ground.as_ref(), class);
    let series = run.series();
    let times = series.times();
    let out = dir.join("diagnose");
    fs::create_dir_all(&out)?;
    for (i, w) in series.weights.iter().enumerate() {
        if let Ok(v) = diagnostics::virial_track(series, &p, i, VirialTarget::Identity) {
            let rows = v.times.iter().zip(v.finite_difference.iter().zip(&v.rhs)).map(|(t, (a, b))| vec![*t, *a, *b]);
            fs::write(out.join(format!("virial_{}.csv", w.label())), csv("t,dVdt_fd,rhs", rows))?;
        }
    }
    let (i1, i2) = diagnostics::classical_morawetz(series);
    let l4 = diagnostics::l4_accumulation(series);
    let rows = (0..times.len()).map(|k| vec![times[k], i1[k], i2[k], l4[k]]);
    fs::write(out.join("spacetime.csv"), csv("t,I1,I2,L4_4", rows))?;
    if let Some(g) = &ground {
        let c = diagnostics::coercivity_track(series, &p, g);
        let rows = (0..c.times.len()).map(|k| vec![c.times[k], c.grad_ratio[k], c.gap_ratio[k], c.virial_gap_ratio[k]]);
        fs::write(out.join("coercivity.csv"), csv("t,grad_ratio,gap_ratio,virial_gap_ratio", rows))?;
    }
    if run.fields.len() >= 2 {
        if let Ok(s) = diagnostics::scattering_detect(&run, &cfg.scattering) {
            let rows = s.tail_times.iter().zip(&s.ball_mass).zip(&s.cauchy).map(|((t, m), c)| vec![*t, *m, c.iter().cloned().fold(0.0, f64::max)]);
            fs::write(out.join("scattering.csv"), csv("t,ball_mass,max_cauchy_from_t", rows))?;
        }
        let scan = diagnostics::potential_decay_scan(&run, 4);
        fs::write(out.join("potential_decay.csv"), csv("T,R,min_potential", scan.iter().map(|d| vec![d.t, d.radius, d.value])))?;
    }
    let mut text = format!("verdict = {}\n", verdict_line(&run.verdict));
    text.push_str(&report.render());
    fs::write(out.join("report.txt"), text)?;
    Ok(report)
}

fn csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r.into_iter().map(fmt17).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    A,
    B,
    /// data multiplier: c·Q or the Gaussian amplitude
    C,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(SweepAxis::A),
            "b" => Ok(SweepAxis::B),
            "c" => Ok(SweepAxis::C),
            _ => Err(Error::Config { line: 0, message: format!("sweep axis {s:?}: expected a, b or c") }),
        }
    }
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::A => "a",
            SweepAxis::B => "b",
            SweepAxis::C => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub verdict: String,
    pub class: String,
    pub threshold_me: f64,
    pub threshold_grad: f64,
    pub c_sharp: f64,
    pub m0: f64,
    pub e0: f64,
    pub max_cauchy: f64,
    pub min_ball_mass: f64,
    pub scattering_consistent: bool,
}

fn row_config(base: &ExperimentConfig, axis: SweepAxis, value: f64, index: usize) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::A => cfg.params = PhysicsParams::new(value, base.params.b, base.params.lambda)?,
        SweepAxis::B => cfg.params = PhysicsParams::new(base.params.a, value, base.params.lambda)?,
        SweepAxis::C => match &mut cfg.initial {
            InitialData::GroundStateMultiple { multiplier, .. } => *multiplier = value,
            InitialData::Gaussian { amplitude, .. } => *amplitude = value,
            InitialData::File { .. } => return Err(Error::Config { line: 0, message: "axis c needs a gaussian or ground_state_multiple family".into() }),
        },
    }
    cfg.output_dir = format!("{}/{}_{index:03}", base.output_dir, axis.name());
    Ok(cfg)
}

fn sweep_row(base: &ExperimentConfig, axis: SweepAxis, value: f64, index: usize, root: &Path) -> SweepRow {
    let mut row = SweepRow {
        value,
        status: "ok".into(),
        verdict: String::new(),
        class: String::new(),
        threshold_me: f64::NAN,
        threshold_grad: f64::NAN,
        c_sharp: f64::NAN,
        m0: f64::NAN,
        e0: f64::NAN,
        max_cauchy: f64::NAN,
        min_ball_mass: f64::NAN,
        scattering_consistent: false,
    };
    let result = row_config(base, axis, value, index).and_then(|cfg| {
        let mut out = run_experiment(&cfg, root)?;
        let ground = match out.ground.take() {
            Some(g) => g,
            None => threshold_ground_state(&cfg.params)?,
        };
        Ok((cfg, out, ground))
    });
    match result {
        Ok((cfg, out, g)) => {
            row.verdict = out.verdict.label().into();
            row.class = out.class.map_or_else(|| "n/a".to_string(), |c| c.to_string());
            row.threshold_me = g.threshold_me;
            row.threshold_grad = g.threshold_grad;
            row.c_sharp = g.c_sharp;
            row.m0 = out.run.state.m0;
            row.e0 = out.run.state.e0;
            if let Ok(s) = diagnostics::scattering_detect(&out.run, &cfg.scattering) {
                row.max_cauchy = s.max_cauchy;
                row.min_ball_mass = s.min_ball_mass;
                row.scattering_consistent = s.consistent;
            }
        }
        Err(e) => row.status = format!("error: {e}").replace(',', ";"),
    }
    row
}

/// Run every value independently in parallel; failures are recorded per row. Writes
/// `sweep.csv` under the base output directory.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], root: &Path) -> Result<Vec<SweepRow>> {
    let rows: Vec<SweepRow> = values.par_iter().enumerate().map(|(i, &v)| sweep_row(base, axis, v, i, root)).collect();
    let dir = root.join(&base.output_dir);
    fs::create_dir_all(&dir)?;
    let mut s = format!("{},status,verdict,class,threshold_me,threshold_grad,c_sharp,M0,E0,max_cauchy,min_ball_mass,scattering_consistent\n", axis.name());
    for r in &rows {
        let nums = [r.threshold_me, r.threshold_grad, r.c_sharp, r.m0, r.e0, r.max_cauchy, r.min_ball_mass].map(fmt17).join(",");
        let _ = writeln!(s, "{},{},{},{},{},{}", fmt17(r.value), r.status, r.verdict, r.class, nums, r.scattering_consistent);
    }
    fs::write(dir.join("sweep.csv"), s)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestReport {
    pub nu: f64,
    pub n: usize,
    pub count: usize,
    pub max_rel_error: f64,
    pub elapsed: Duration,
    /// the grid setup (zeros, kernel) excluded from `elapsed`
    pub setup: Duration,
}

impl SelfTestReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

/// Forward/inverse round trips of seeded random complex fields.
pub fn dht_selftest(nu: f64, n: usize, r_max: f64, count: usize, seed: u64) -> Result<SelfTestReport> {
    let start = Instant::now();
    let grid = build_grid(nu, n, r_max)?;
    let setup = start.elapsed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<Complex64>> = (0..count).map(|_| (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()).collect();
    let start = Instant::now();
    let mut max_rel_error: f64 = 0.0;
    for w in &fields {
        let back = grid.inverse(&grid.forward(w));
        let err: f64 = back.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        max_rel_error = max_rel_error.max(err / norm);
    }
    Ok(SelfTestReport { nu, n, count, max_rel_error, elapsed: start.elapsed(), setup })
}

/// Ground-state summary text for the `ground-state` subcommand.
pub fn ground_state_summary(g: &GroundStateResult) -> String {
    let p = &g.params;
    let po = crate::ground_state::pohozaev_check(g, p);
    let mut s = String::new();
    let grid = g.grid();
    let _ = writeln!(s, "a = {}\nb = {}\nN = {}\nR_max = {}", p.a, p.b, grid.len(), grid.r_max());
    let _ = writeln!(s, "projection = {:?}\niterations = {}\nresidual = {}", g.projection, g.iterations, fmt17(g.residual));
    for (k, v) in [("M", g.m()), ("K", g.k()), ("P", g.p()), ("E", g.e()), ("origin amplitude", g.origin_amplitude()), ("C_GN", g.c_sharp)] {
        let _ = writeln!(s, "{k} = {}", fmt17(v));
    }
    let _ = writeln!(s, "threshold_ME = {}\nthreshold_grad = {}", fmt17(g.threshold_me), fmt17(g.threshold_grad));
    for (k, c) in [("K/M", &po.k_over_m), ("P/M", &po.p_over_m), ("E/M", &po.e_over_m)] {
        let _ = writeln!(s, "{k} = {} (expected {}, rel error {:.3e})", fmt17(c.measured), fmt17(c.expected), c.rel_error());
    }
    s
}

/// Nodal functionals of a field, for quick inspection.
pub fn field_values(f: &RadialField, p: &PhysicsParams) -> FunctionalValues {
    FunctionalValues::evaluate(f, p, Quadrature::Nodal)
}

/// Map a library error onto the process exit code: 2 for config or input errors, 3 for
/// numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::MissingKey(_) | Error::Domain { .. } | Error::Format { .. } | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Small defocusing reference config used by tests and examples.
pub fn reference_defocusing_config() -> &'static str {
    "physics.a = 1\nphysics.b = 0.5\nphysics.lambda = defocusing\ngrid.n = 128\ngrid.r_max = 40\n\
     initial.width = 2\nevolution.dt = 0.01\nevolution.t_end = 2\nevolution.monitor_stride = 5\nevolution.field_stride = 4\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("inls-test-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn minimal_config_fills_defaults_and_echo_is_stable() {
        let cfg = parse_config("physics.a = 0\nphysics.b = 0.5\nphysics.lambda = defocusing\n").unwrap();
        assert_eq!(cfg.n, 512);
        assert_eq!(cfg.evolution.dt, 1e-3);
        let once = emit_config(&cfg);
        let again = parse_config(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(emit_config(&again), once);
    }

    #[test]
    fn range_violations_name_the_bound() {
        let a = parse_config("physics.a = -0.5\nphysics.b = 0.5\nphysics.lambda = focusing\n").unwrap_err();
        assert!(a.to_string().contains("a > -1/4"), "{a}");
        let b = parse_config("physics.a = 0\nphysics.b = 1.5\nphysics.lambda = focusing\n").unwrap_err();
        assert!(b.to_string().contains("0 < b < 1"), "{b}");
        assert!(matches!(b, Error::Config { line: 2, .. }));
    }

    #[test]
    fn unknown_duplicate_and_missing_keys() {
        let e = parse_config("physics.a = 0\nphysics.bb = 0.5\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }) && e.to_string().contains("unknown key"));
        let e = parse_config("physics.a = 0\nphysics.a = 1\n").unwrap_err();
        assert!(e.to_string().contains("duplicate"));
        assert!(matches!(parse_config("physics.a = 0\nphysics.b = 0.5\n").unwrap_err(), Error::MissingKey("physics.lambda")));
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn timeseries_and_field_round_trip() {
        let cfg = parse_config(reference_defocusing_config()).unwrap();
        let grid = config_grid(&cfg).unwrap();
        let u = RadialField::from_profile(grid.clone(), |r| Complex64::new((-r * r).exp(), 0.3 * r * (-r).exp()));
        let text = write_field(&u, &cfg.params, 0.125);
        let (h, back) = read_field(&text, &grid, "mem").unwrap();
        assert_eq!(h.t, 0.125);
        assert_eq!(back.samples(), u.samples());
        let other = build_grid(cfg.params.nu(), 64, 40.0).unwrap();
        assert!(read_field(&text, &other, "mem").is_err());
    }

    #[test]
    fn reference_run_persists_and_reloads() {
        let root = tmp("ref");
        let cfg = parse_config(reference_defocusing_config()).unwrap();
        let out = run_experiment(&cfg, &root).unwrap();
        assert_eq!(out.verdict, Verdict::Completed);
        assert_eq!(out.exit_code(), 0);
        let first = fs::read(out.dir.join("timeseries.csv")).unwrap();
        let (cfg2, run) = load_run(&out.dir).unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(run.series(), out.run.series());
        assert_eq!(run.fields.len(), out.run.fields.len());
        let report = diagnose(&out.dir).unwrap();
        assert!(report.checks.iter().any(|c| c.name == "mass conservation" && c.pass == Some(true)));
        assert!(out.dir.join("diagnose/spacetime.csv").exists());
        run_experiment(&cfg, &root).unwrap();
        assert_eq!(fs::read(out.dir.join("timeseries.csv")).unwrap(), first);
        let _ = fs::remove_dir_all(root);
    }

    proptest::proptest! {
        #[test]
        fn echo_is_idempotent(a in -0.249f64..3.0, b in 0.0f64..0.999, dt in 1e-5f64..0.1, n in 8usize..4096,
                              focusing: bool, gs: bool, c in 0.0f64..2.0, radii in proptest::collection::vec(0.1f64..50.0, 0..4)) {
            let mut text = format!("physics.a = {a}\nphysics.b = {b}\nphysics.lambda = {}\ngrid.n = {n}\nevolution.dt = {dt}\n",
                if focusing { "focusing" } else { "defocusing" });
            if gs {
                text.push_str(&format!("initial.family = ground_state_multiple\ninitial.multiplier = {c}\n"));
            }
            text.push_str(&format!("diagnostics.radii = {}\ndiagnostics.weights = quadratic,truncated:{c}1\n", join(&radii)));
            let cfg = parse_config(&text).unwrap();
            let echoed = parse_config(&emit_config(&cfg)).unwrap();
            proptest::prop_assert_eq!(&echoed, &cfg);
            proptest::prop_assert_eq!(emit_config(&echoed), emit_config(&cfg));
        }
    }

    #[test]
    fn selftest_round_trip_is_exact() {
        let r = dht_selftest(0.5, 64, 10.0, 5, 3).unwrap();
        assert!(r.passed(1e-12), "{}", r.max_rel_error);
        let r = dht_selftest(1.2, 64, 10.0, 5, 3).unwrap();
        assert!(r.passed(1e-10), "{}", r.max_rel_error);
    }
}
