//! Numerical audits over completed runs: virial identity, Morawetz averages and decay scans,
//! scattering detection, coercivity, dispersive decay, spacetime integrals, threshold class.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::evolution::{Run, TimeSeries, Verdict};
use crate::functionals::{self, Quadrature};
use crate::ground_state::GroundStateResult;
use crate::quadrature::{cumulative_trapezoid, trapezoid};
use crate::spectral_core::{linear_propagate, PhysicsParams, RadialField};

/// What the finite-difference dV/dt is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VirialTarget {
    /// the assembled right-hand side for the weight (8K + 2(3+b)λP for the quadratic weight)
    Identity,
    /// the displayed closed form 8[K + λP]
    Displayed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirialReport {
    pub times: Vec<f64>,
    pub finite_difference: Vec<f64>,
    pub rhs: Vec<f64>,
    pub max_mismatch: f64,
}

impl VirialReport {
    /// e(coarse)/e(fine); 4 for second-order agreement under dt halving
    pub fn refinement_ratio(coarse: &VirialReport, fine: &VirialReport) -> f64 {
        coarse.max_mismatch / fine.max_mismatch
    }
}

/// Central difference of V(t; w) at interior samples against the chosen right-hand side.
pub fn virial_track(series: &TimeSeries, p: &PhysicsParams, weight: usize, target: VirialTarget) -> Result<VirialReport> {
    let s = &series.samples;
    if s.len() < 3 {
        return Err(Error::Insufficient(format!("virial track needs at least 3 samples, got {}", s.len())));
    }
    if weight >= series.weights.len() {
        return Err(Error::Insufficient(format!("weight index {weight} not monitored")));
    }
    let mut times = Vec::new();
    let mut fd = Vec::new();
    let mut rhs = Vec::new();
    for w in s.windows(3) {
        let (a, m, b) = (&w[0], &w[1], &w[2]);
        times.push(m.t);
        fd.push((b.virial[weight] - a.virial[weight]) / (b.t - a.t));
        rhs.push(match target {
            VirialTarget::Identity => m.virial_rhs[weight],
            VirialTarget::Displayed => 8.0 * (m.k + p.lambda() * m.p),
        });
    }
    let max_mismatch = fd.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(VirialReport { times, finite_difference: fd, rhs, max_mismatch })
}

fn fields_until(run: &Run, horizon: f64) -> Result<Vec<&(f64, RadialField)>> {
    let last = run.fields.last().map(|f| f.0).unwrap_or(0.0);
    if run.fields.len() < 2 || last < horizon * (1.0 - 1e-12) {
        return Err(Error::Insufficient(format!("stored fields reach t = {last}, horizon {horizon} requested")));
    }
    Ok(run.fields.iter().filter(|f| f.0 <= horizon * (1.0 + 1e-12)).collect())
}

/// (1/T) ∫₀ᵀ ∫_{|x|≤R/4} |u|⁴/|x|^b dx dt from the stored fields.
pub fn morawetz_average(run: &Run, radius: f64, horizon: f64) -> Result<f64> {
    let fields = fields_until(run, horizon)?;
    let t: Vec<f64> = fields.iter().map(|f| f.0).collect();
    let v: Vec<f64> = fields.iter().map(|f| functionals::potential_in_ball(&f.1, run.params.b, 0.25 * radius)).collect();
    Ok(trapezoid(&t, &v) / horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorawetzFit {
    pub horizons: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// value / (R/T + R^{-b}) per horizon
    pub constants: Vec<f64>,
    /// geometric mean of the constants
    pub c: f64,
    /// max/min of the constants
    pub spread: f64,
}

impl MorawetzFit {
    /// a single C fits every horizon within `factor` either way
    pub fn within_factor(&self, factor: f64) -> bool {
        self.constants.iter().all(|k| k / self.c <= factor && self.c / k <= factor)
    }
}

/// Morawetz averages at R = T^{1/(1+b)} and the constant of the bound R/T + R^{-b}.
pub fn morawetz_fit(run: &Run, horizons: &[f64]) -> Result<MorawetzFit> {
    let b = run.params.b;
    let radii: Vec<f64> = horizons.iter().map(|t| t.powf(1.0 / (1.0 + b))).collect();
    let values = horizons.iter().zip(&radii).map(|(&t, &r)| morawetz_average(run, r, t)).collect::<Result<Vec<_>>>()?;
    let constants: Vec<f64> = values.iter().zip(horizons.iter().zip(&radii)).map(|(v, (t, r))| v / (r / t + r.powf(-b))).collect();
    let c = (constants.iter().map(|k| k.ln()).sum::<f64>() / constants.len() as f64).exp();
    let spread = constants.iter().cloned().fold(0.0, f64::max) / constants.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MorawetzFit { horizons: horizons.to_vec(), radii, values, constants, c, spread })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub t: f64,
    pub radius: f64,
    pub value: f64,
}

/// For T_k = T/2^k (k = levels−1..0) and R_k = T_k^{1/(1+b)}, the stored time in [T_k/2, T_k]
/// minimising the ball-restricted weighted potential term.
pub fn potential_decay_scan(run: &Run, levels: usize) -> Vec<DecayPoint> {
    let b = run.params.b;
    let t_max = run.fields.last().map(|f| f.0).unwrap_or(0.0);
    let mut out = Vec::new();
    for k in (0..levels).rev() {
        let tk = t_max / 2f64.powi(k as i32);
        let radius = tk.powf(1.0 / (1.0 + b));
        let best = run
            .fields
            .iter()
            .filter(|f| f.0 >= 0.5 * tk && f.0 <= tk * (1.0 + 1e-12))
            .map(|f| DecayPoint { t: f.0, radius, value: functionals::potential_in_ball(&f.1, b, radius) })
            .min_by(|x, y| x.value.total_cmp(&y.value));
        if let Some(pt) = best {
            out.push(pt);
        }
    }
    out
}

/// Successive values never rise by more than `ripple` relative.
pub fn decays_within(points: &[DecayPoint], ripple: f64) -> bool {
    points.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + ripple))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringConfig {
    /// start of the tail as a fraction of the last stored time
    pub tail_start: f64,
    /// number of tail samples compared pairwise
    pub tail_samples: usize,
    pub ball_radius: f64,
    /// ε² for the mass-in-ball test
    pub epsilon_sq: f64,
    /// Cauchy threshold in H¹ₐ
    pub cauchy_tol: f64,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self { tail_start: 0.5, tail_samples: 6, ball_radius: 10.0, epsilon_sq: 1e-2, cauchy_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringReport {
    pub tail_times: Vec<f64>,
    /// ‖v(T_i) − v(T_j)‖_{H¹ₐ} for the interaction profiles v = e^{+itL}u(t)
    pub cauchy: Vec<Vec<f64>>,
    pub max_cauchy: f64,
    pub ball_mass: Vec<f64>,
    pub min_ball_mass: f64,
    pub trusted: bool,
    pub consistent: bool,
}

/// ‖f‖²_{H¹ₐ} = M + K.
pub fn h1_norm(f: &RadialField) -> f64 {
    (functionals::mass(f) + functionals::hardy_kinetic(f)).sqrt()
}

pub fn h1_distance(f: &RadialField, g: &RadialField) -> Result<f64> {
    crate::spectral_core::ensure_same(f.grid(), g.grid())?;
    let diff: Vec<_> = f.samples().iter().zip(g.samples()).map(|(a, b)| a - b).collect();
    Ok(h1_norm(&RadialField::from_reduced(f.grid().clone(), diff)?))
}

pub fn scattering_detect(run: &Run, cfg: &ScatteringConfig) -> Result<ScatteringReport> {
    let fields: Vec<&(f64, RadialField)> = run.fields.iter().collect();
    scattering_detect_fields(&fields, matches!(run.verdict, Verdict::Completed), cfg)
}

/// Scattering audit over an explicit trajectory of (t, u(t)).
pub fn scattering_detect_fields(fields: &[&(f64, RadialField)], trusted: bool, cfg: &ScatteringConfig) -> Result<ScatteringReport> {
    let last = fields.last().map(|f| f.0).ok_or_else(|| Error::Insufficient("no stored fields".to_string()))?;
    let tail: Vec<&(f64, RadialField)> = fields.iter().copied().filter(|f| f.0 >= cfg.tail_start * last).collect();
    if tail.len() < 2 {
        return Err(Error::Insufficient(format!("{} tail fields after t = {}", tail.len(), cfg.tail_start * last)));
    }
    let picks: Vec<&(f64, RadialField)> = if tail.len() <= cfg.tail_samples {
        tail
    } else {
        (0..cfg.tail_samples).map(|i| tail[i * (tail.len() - 1) / (cfg.tail_samples - 1)]).collect()
    };
    let profiles: Vec<RadialField> = picks.iter().map(|(t, u)| linear_propagate(u, -t)).collect();
    let n = profiles.len();
    let mut cauchy = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = h1_distance(&profiles[i], &profiles[j])?;
            cauchy[i][j] = d;
            cauchy[j][i] = d;
        }
    }
    let max_cauchy = cauchy.iter().flatten().cloned().fold(0.0, f64::max);
    let ball_mass: Vec<f64> = picks.iter().map(|(_, u)| functionals::mass_in_ball(u, cfg.ball_radius)).collect();
    let min_ball_mass = ball_mass.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ScatteringReport {
        tail_times: picks.iter().map(|f| f.0).collect(),
        cauchy,
        max_cauchy,
        ball_mass,
        min_ball_mass,
        trusted,
        consistent: trusted && max_cauchy <= cfg.cauchy_tol && min_ball_mass <= cfg.epsilon_sq,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub times: Vec<f64>,
    /// ‖u‖₂‖u‖_{Ḣ¹ₐ} / (‖Q‖₂‖Q‖_{Ḣ¹ₐ})
    pub grad_ratio: Vec<f64>,
    /// (K − P)/P
    pub gap_ratio: Vec<f64>,
    /// (K − (3+b)P/4)/P, the virial form of the gap
    pub virial_gap_ratio: Vec<f64>,
    /// min over samples of 1 − grad_ratio
    pub delta_emp: f64,
    /// min over samples of (K − P)/P; None for defocusing runs
    pub c_emp: Option<f64>,
}

impl CoercivityReport {
    pub fn holds(&self) -> bool {
        self.delta_emp > 0.0 && self.c_emp.is_none_or(|c| c > 0.0)
    }
}

pub fn coercivity_track(series: &TimeSeries, p: &PhysicsParams, g: &GroundStateResult) -> CoercivityReport {
    let times = series.times();
    let grad_ratio: Vec<f64> = series.samples.iter().map(|s| (s.m * s.k).sqrt() / g.threshold_grad).collect();
    let gap_ratio: Vec<f64> = series.samples.iter().map(|s| (s.k - s.p) / s.p).collect();
    let virial_gap_ratio: Vec<f64> = series.samples.iter().map(|s| (s.k - 0.25 * (3.0 + p.b) * s.p) / s.p).collect();
    let delta_emp = grad_ratio.iter().map(|r| 1.0 - r).fold(f64::INFINITY, f64::min);
    let c_emp = (p.lambda() < 0.0).then(|| gap_ratio.iter().cloned().fold(f64::INFINITY, f64::min));
    CoercivityReport { times, grad_ratio, gap_ratio, virial_gap_ratio, delta_emp, c_emp }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveReport {
    pub times: Vec<f64>,
    /// sup-norm (a ≥ 0) or weighted sup-norm (a < 0)
    pub norms: Vec<f64>,
    /// fitted exponent of norms against t (a ≥ 0)
    pub exponent: Option<f64>,
    /// norms / ((1 + t^σ) t^{-3/2}) (a < 0)
    pub ratios: Vec<f64>,
    /// max/min of the ratios
    pub ratio_spread: Option<f64>,
    /// outer-shell mass fraction at the last time stays below 1e-4
    pub trusted: bool,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

/// Decay of the free flow e^{−itL}f at the given times; t ≤ 0 is excluded.
pub fn dispersive_decay_check(p: &PhysicsParams, f: &RadialField, t_list: &[f64]) -> Result<DispersiveReport> {
    let times: Vec<f64> = t_list.iter().cloned().filter(|t| *t > 0.0).collect();
    if times.len() < 2 {
        return Err(Error::Insufficient("dispersive fit needs at least two positive times".to_string()));
    }
    let sigma = p.derived().sigma;
    let grid = f.grid();
    let m0 = functionals::mass(f);
    let mut norms = Vec::with_capacity(times.len());
    let mut outer = 0.0;
    for &t in &times {
        let u = linear_propagate(f, t);
        let prof = u.profile();
        let norm = if p.a >= 0.0 {
            prof.iter().map(|z| z.norm()).fold(0.0, f64::max)
        } else {
            prof.iter().zip(grid.nodes()).map(|(z, r)| z.norm() / (1.0 + r.powf(-sigma))).fold(0.0, f64::max)
        };
        norms.push(norm);
        outer = (m0 - functionals::mass_in_ball(&u, 0.9 * grid.r_max())) / m0;
    }
    let (exponent, ratios, ratio_spread) = if p.a >= 0.0 {
        let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
        (Some(slope(&lx, &ly)), Vec::new(), None)
    } else {
        let ratios: Vec<f64> = norms.iter().zip(&times).map(|(v, t)| v / ((1.0 + t.powf(sigma)) * t.powf(-1.5))).collect();
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        (None, ratios, Some(spread))
    };
    Ok(DispersiveReport { times, norms, exponent, ratios, ratio_spread, trusted: outer < 1e-4 })
}

/// Cumulative spacetime integrals of |u|²/|x|³ and |u|⁴/|x|^{1+b} over the monitored samples.
pub fn classical_morawetz(series: &TimeSeries) -> (Vec<f64>, Vec<f64>) {
    let t = series.times();
    (cumulative_trapezoid(&t, &series.column(|s| s.inverse_cube)), cumulative_trapezoid(&t, &series.column(|s| s.weighted_quartic)))
}

/// Cumulative ∫₀ᵗ ∫|u|⁴ dx dt; the L⁴ₜₓ norm is its fourth root.
pub fn l4_accumulation(series: &TimeSeries) -> Vec<f64> {
    cumulative_trapezoid(&series.times(), &series.column(|s| s.quartic))
}

pub fn l4_spacetime_norm(series: &TimeSeries) -> f64 {
    l4_accumulation(series).last().copied().unwrap_or(0.0).powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub at_start: f64,
    pub at_end: f64,
    /// relative growth over the window
    pub growth: f64,
}

/// Relative growth of a cumulative series over the final `fraction` of its time span.
pub fn plateau(times: &[f64], cumulative: &[f64], fraction: f64) -> Plateau {
    let end = *times.last().unwrap_or(&0.0);
    let start = end * (1.0 - fraction);
    let i = times.partition_point(|t| *t < start).min(times.len().saturating_sub(1));
    let at_start = cumulative.get(i).copied().unwrap_or(0.0);
    let at_end = cumulative.last().copied().unwrap_or(0.0);
    Plateau { at_start, at_end, growth: if at_start > 0.0 { at_end / at_start - 1.0 } else { 0.0 } }
}

/// Least-squares slope of a cumulative series against t on the final `fraction`; and the
/// coefficient of determination of a linear fit there.
pub fn linear_growth(times: &[f64], cumulative: &[f64], fraction: f64) -> (f64, f64) {
    let end = *times.last().unwrap_or(&0.0);
    let i = times.partition_point(|t| *t < end * (1.0 - fraction));
    let (x, y) = (&times[i..], &cumulative[i..]);
    let s = slope(x, y);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, v)| (v - my - s * (a - mx)).powi(2)).sum();
    (s, if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunClass {
    BelowThreshold,
    AboveThreshold,
    Boundary,
}

impl fmt::Display for RunClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunClass::BelowThreshold => "below_threshold",
            RunClass::AboveThreshold => "above_threshold",
            RunClass::Boundary => "boundary",
        })
    }
}

const BOUNDARY_TOL: f64 = 1e-9;

/// Both strict threshold inequalities M E < M_Q E_Q and ‖u‖₂‖u‖_{Ḣ¹ₐ} < ‖Q‖₂‖Q‖_{Ḣ¹ₐ}.
pub fn classify_run(p: &PhysicsParams, u0: &RadialField, g: &GroundStateResult) -> RunClass {
    let quad = g.projection.quadrature();
    let v = functionals::FunctionalValues::evaluate(u0, p, quad);
    let me = v.m * v.e / g.threshold_me - 1.0;
    let grad = (v.m * v.k).sqrt() / g.threshold_grad - 1.0;
    if me.abs() <= BOUNDARY_TOL || grad.abs() <= BOUNDARY_TOL {
        RunClass::Boundary
    } else if me < 0.0 && grad < 0.0 {
        RunClass::BelowThreshold
    } else {
        RunClass::AboveThreshold
    }
}

/// One audit line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// the estimate the check instantiates, in words
    pub anchor: String,
    pub measured: Vec<(String, f64)>,
    pub tolerance: String,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl DiagnosticsReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        for c in &self.checks {
            let status = match c.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "SKIP",
            };
            let _ = writeln!(out, "[{status}] {}", c.name);
            let _ = writeln!(out, "  anchor: {}", c.anchor);
            let _ = writeln!(out, "  tolerance: {}", c.tolerance);
            for (k, v) in &c.measured {
                let _ = writeln!(out, "  {k} = {v:.17e}");
            }
        }
        out
    }
}

/// Checks that apply to any stored run.
pub fn diagnose_run(run: &Run, ground: Option<&GroundStateResult>) -> DiagnosticsReport {
    let p = run.params;
    let series = run.series();
    let mut report = DiagnosticsReport {
        notes: vec![
            format!("a = {}, b = {}, lambda = {}, verdict = {}", p.a, p.b, p.lambda(), run.verdict.label()),
            "Morawetz integrand read as |u|^4/|x|^b on the ball of radius R/4".to_string(),
        ],
        checks: Vec::new(),
    };
    if let (Some(first), Some(last)) = (series.samples.first(), series.last()) {
        let drift = (last.m - first.m).abs() / first.m.max(f64::MIN_POSITIVE);
        report.checks.push(Check {
            name: "mass conservation".into(),
            anchor: "mass invariance of the flow".into(),
            measured: vec![("relative drift".into(), drift)],
            tolerance: "<= 1e-10".into(),
            pass: Some(drift <= 1e-10),
        });
        let de = series.samples.iter().map(|s| (s.e - first.e).abs()).fold(0.0, f64::max);
        report.checks.push(Check {
            name: "energy conservation".into(),
            anchor: "energy invariance of the flow".into(),
            measured: vec![("max |E - E0|".into(), de), ("E0".into(), first.e)],
            tolerance: "reported; O(dt^2)".into(),
            pass: None,
        });
    }
    for (i, w) in series.weights.iter().enumerate() {
        if let Ok(v) = virial_track(series, &p, i, VirialTarget::Identity) {
            report.checks.push(Check {
                name: format!("virial identity ({})", w.label()),
                anchor: "time derivative of the virial action".into(),
                measured: vec![("max |dV/dt - rhs|".into(), v.max_mismatch)],
                tolerance: "reported; O(dt^2) under refinement".into(),
                pass: None,
            });
        }
    }
    if run.fields.len() >= 2 {
        if let Ok(s) = scattering_detect(run, &ScatteringConfig::default()) {
            report.checks.push(Check {
                name: "scattering".into(),
                anchor: "convergence of the backward-propagated profile in H^1_a".into(),
                measured: vec![("max Cauchy distance".into(), s.max_cauchy), ("min mass in ball".into(), s.min_ball_mass)],
                tolerance: "Cauchy <= 1e-2 and ball mass <= 1e-2".into(),
                pass: Some(s.consistent),
            });
        }
    }
    if let (Some(g), true) = (ground, p.lambda() < 0.0) {
        let c = coercivity_track(series, &p, g);
        report.checks.push(Check {
            name: "coercivity".into(),
            anchor: "sub-threshold coercivity of the kinetic and potential terms".into(),
            measured: vec![("delta_emp".into(), c.delta_emp), ("c_emp".into(), c.c_emp.unwrap_or(f64::NAN))],
            tolerance: "> 0 at every sample".into(),
            pass: Some(c.holds()),
        });
    }
    if p.lambda() > 0.0 && p.a > 0.0 {
        let (i1, i2) = classical_morawetz(series);
        let t = series.times();
        let (p1, p2) = (plateau(&t, &i1, 0.2), plateau(&t, &i2, 0.2));
        let p4 = plateau(&t, &l4_accumulation(series), 0.2);
        report.checks.push(Check {
            name: "spacetime bounds".into(),
            anchor: "classical and interaction Morawetz bounds".into(),
            measured: vec![("I1 growth".into(), p1.growth), ("I2 growth".into(), p2.growth), ("L4 growth".into(), p4.growth)],
            tolerance: "< 1% over the final fifth".into(),
            pass: Some(p1.growth < 0.01 && p2.growth < 0.01 && p4.growth < 0.01),
        });
    }
    report
}

/// Quadrature used for threshold comparisons of a ground state.
pub fn threshold_quadrature(g: &GroundStateResult) -> Quadrature {
    g.projection.quadrature()
}
