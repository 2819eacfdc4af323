//! Strang splitting for i∂ₜu = L_a u + λ|x|^{-b}|u|²u: exact spectral linear flow and exact
//! pointwise phase flow, with conservation monitors and blow-up/reflection detectors.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{self, VirialWeight, WeightKind};
use crate::spectral_core::{PhysicsParams, RadialField, RadialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// steps between monitor samples
    pub monitor_stride: usize,
    /// blow-up fires when K(t) > blowup_factor · K(0)
    pub blowup_factor: f64,
    /// reflection abort when the outer 10% shell holds this fraction of the mass
    pub reflect_mass_cap: f64,
    pub weights: Vec<WeightKind>,
    pub ball_radii: Vec<f64>,
    /// keep the field every this many monitor samples (0 keeps none)
    pub field_stride: usize,
    /// switch off the cubic term (linear runs)
    pub linear_only: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            monitor_stride: 10,
            blowup_factor: 1e3,
            reflect_mass_cap: 1e-4,
            weights: vec![WeightKind::Quadratic],
            ball_radii: vec![10.0],
            field_stride: 0,
            linear_only: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| if v.is_finite() && v > 0.0 { Ok(()) } else { Err(Error::Domain { name, value: v, bound: "> 0" }) };
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        if self.monitor_stride == 0 {
            return Err(Error::Domain { name: "monitor_stride", value: 0.0, bound: ">= 1" });
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::Domain { name: "blowup_factor", value: self.blowup_factor, bound: "> 1" });
        }
        if !(self.reflect_mass_cap > 0.0 && self.reflect_mass_cap < 1.0) {
            return Err(Error::Domain { name: "reflect_mass_cap", value: self.reflect_mass_cap, bound: "0 < cap < 1" });
        }
        for &r in &self.ball_radii {
            positive("ball radius", r)?;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Everything monitored at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub m: f64,
    pub k: f64,
    pub p: f64,
    pub e: f64,
    pub sup: f64,
    /// mass in r > 0.9 R_max
    pub outer_mass: f64,
    /// ∫|u|²/|x|³
    pub inverse_cube: f64,
    /// ∫|u|⁴/|x|^{1+b}
    pub weighted_quartic: f64,
    /// ∫|u|⁴
    pub quartic: f64,
    pub virial: Vec<f64>,
    pub virial_rhs: Vec<f64>,
    pub ball_mass: Vec<f64>,
    pub ball_potential: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub weights: Vec<WeightKind>,
    pub radii: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Completed,
    BlowupDetected { t: f64 },
    ReflectionAbort { t: f64 },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Completed => "completed",
            Verdict::BlowupDetected { .. } => "blowup_detected",
            Verdict::ReflectionAbort { .. } => "reflection_abort",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub t: f64,
    pub u: RadialField,
    pub m0: f64,
    pub e0: f64,
    pub series: TimeSeries,
}

/// A finished run: final state, verdict and the retained field snapshots.
#[derive(Debug, Clone)]
pub struct Run {
    pub params: PhysicsParams,
    pub config: EvolutionConfig,
    pub state: EvolutionState,
    pub verdict: Verdict,
    pub fields: Vec<(f64, RadialField)>,
}

impl Run {
    pub fn series(&self) -> &TimeSeries {
        &self.state.series
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.state.u.grid()
    }
}

/// Precomputed substeps for one grid, physics and step size.
pub struct SplitStepper {
    grid: Arc<RadialGrid>,
    lambda: f64,
    dt: f64,
    /// r_n^{-1-b}: nonlinear phase rate per unit |W|²
    rate: Vec<f64>,
    linear: Vec<Complex64>,
    nonlinear: bool,
}

impl SplitStepper {
    pub fn new(grid: Arc<RadialGrid>, p: &PhysicsParams, dt: f64) -> Self {
        let rate = grid.nodes().iter().map(|r| r.powf(-1.0 - p.b)).collect();
        let linear = grid.freqs().iter().map(|k| Complex64::from_polar(1.0, -k * k * dt)).collect();
        Self { grid, lambda: p.lambda(), dt, rate, linear, nonlinear: true }
    }

    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn phase(&self, w: &mut [Complex64], tau: f64) {
        if !self.nonlinear || tau == 0.0 {
            return;
        }
        let c = -self.lambda * tau;
        for (x, rate) in w.iter_mut().zip(&self.rate) {
            *x *= Complex64::from_polar(1.0, c * rate * x.norm_sqr());
        }
    }

    fn linear(&self, w: &mut Vec<Complex64>) {
        let mut g = self.grid.forward(w);
        for (x, e) in g.iter_mut().zip(&self.linear) {
            *x *= e;
        }
        *w = self.grid.inverse(&g);
    }

    /// One Strang step in place.
    pub fn step(&self, w: &mut Vec<Complex64>) {
        self.phase(w, 0.5 * self.dt);
        self.linear(w);
        self.phase(w, 0.5 * self.dt);
    }
}

/// u(r_n) ← u(r_n) exp(−iλ dt r_n^{-b} |u(r_n)|²).
pub fn nonlinear_phase_step(u: &RadialField, p: &PhysicsParams, dt: f64) -> RadialField {
    let stepper = SplitStepper::new(u.grid().clone(), p, 0.0);
    let mut w = u.samples().to_vec();
    stepper.phase(&mut w, dt);
    RadialField::from_reduced(u.grid().clone(), w).expect("same grid")
}

/// Half phase, full linear flow, half phase.
pub fn strang_step(u: &RadialField, p: &PhysicsParams, dt: f64) -> RadialField {
    let stepper = SplitStepper::new(u.grid().clone(), p, dt);
    let mut w = u.samples().to_vec();
    stepper.step(&mut w);
    RadialField::from_reduced(u.grid().clone(), w).expect("same grid")
}

/// Fourth-order triple-jump composition of Strang steps, used as a reference integrator.
pub fn triple_jump_step(u: &RadialField, p: &PhysicsParams, dt: f64) -> RadialField {
    let c = 2f64.cbrt();
    let g1 = 1.0 / (2.0 - c);
    let g2 = -c / (2.0 - c);
    let s1 = SplitStepper::new(u.grid().clone(), p, g1 * dt);
    let s2 = SplitStepper::new(u.grid().clone(), p, g2 * dt);
    let mut w = u.samples().to_vec();
    s1.step(&mut w);
    s2.step(&mut w);
    s1.step(&mut w);
    RadialField::from_reduced(u.grid().clone(), w).expect("same grid")
}

/// Advance `u` by `steps` Strang steps of size `dt` (dt may be negative).
pub fn propagate(u: &RadialField, p: &PhysicsParams, dt: f64, steps: usize) -> RadialField {
    let stepper = SplitStepper::new(u.grid().clone(), p, dt);
    let mut w = u.samples().to_vec();
    for _ in 0..steps {
        stepper.step(&mut w);
    }
    RadialField::from_reduced(u.grid().clone(), w).expect("same grid")
}

fn sample(t: f64, f: &RadialField, p: &PhysicsParams, weights: &[VirialWeight], radii: &[f64]) -> Sample {
    let grid = f.grid();
    let m = functionals::mass(f);
    let k = functionals::hardy_kinetic(f);
    let pot = functionals::potential_term(f, p.b);
    let cut = 0.9 * grid.r_max();
    let outer = 4.0 * PI * f.samples().iter().zip(grid.nodes().iter().zip(grid.weights())).filter(|(_, (r, _))| **r > cut).map(|(x, (_, w))| w * x.norm_sqr()).sum::<f64>();
    Sample {
        t,
        m,
        k,
        p: pot,
        e: 0.5 * k + 0.25 * p.lambda() * pot,
        sup: f.profile().iter().map(|z| z.norm()).fold(0.0, f64::max),
        outer_mass: outer,
        inverse_cube: functionals::inverse_cube_term(f),
        weighted_quartic: functionals::weighted_quartic_term(f, p.b),
        quartic: functionals::quartic_term(f),
        virial: weights.iter().map(|w| functionals::virial_action(f, w)).collect(),
        virial_rhs: weights.iter().map(|w| functionals::virial_rhs(f, p, w)).collect(),
        ball_mass: radii.iter().map(|&r| functionals::mass_in_ball(f, r)).collect(),
        ball_potential: radii.iter().map(|&r| functionals::potential_in_ball(f, p.b, r)).collect(),
    }
}

/// Runs to `t_end` or until a detector fires.
pub fn evolve(u0: &RadialField, p: &PhysicsParams, cfg: &EvolutionConfig) -> Result<Run> {
    cfg.validate()?;
    let grid = u0.grid().clone();
    let weights = cfg.weights.iter().map(|k| VirialWeight::from_kind(&grid, *k)).collect::<Result<Vec<_>>>()?;
    let mut stepper = SplitStepper::new(grid.clone(), p, cfg.dt);
    if cfg.linear_only {
        stepper = stepper.linear_only();
    }
    let first = sample(0.0, u0, p, &weights, &cfg.ball_radii);
    let mut state = EvolutionState {
        t: 0.0,
        u: u0.clone(),
        m0: first.m,
        e0: first.e,
        series: TimeSeries { weights: cfg.weights.clone(), radii: cfg.ball_radii.clone(), samples: Vec::new() },
    };
    let k0 = first.k;
    state.series.samples.push(first);
    let mut fields = Vec::new();
    if cfg.field_stride > 0 {
        fields.push((0.0, u0.clone()));
    }
    let mut w = u0.samples().to_vec();
    let steps = cfg.steps();
    let mut verdict = Verdict::Completed;
    let mut monitors = 0usize;
    for n in 1..=steps {
        stepper.step(&mut w);
        let t = n as f64 * cfg.dt;
        if n % cfg.monitor_stride != 0 && n != steps {
            continue;
        }
        if w.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let field = RadialField::from_reduced(grid.clone(), w.clone())?;
        let s = sample(t, &field, p, &weights, &cfg.ball_radii);
        if ![s.m, s.k, s.p, s.e].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        monitors += 1;
        let blowup = s.k > cfg.blowup_factor * k0;
        let reflect = s.outer_mass > cfg.reflect_mass_cap * state.m0;
        state.series.samples.push(s);
        state.t = t;
        if cfg.field_stride > 0 && (monitors % cfg.field_stride == 0 || n == steps || blowup || reflect) {
            fields.push((t, field));
        }
        if blowup {
            verdict = Verdict::BlowupDetected { t };
            break;
        }
        if reflect {
            verdict = Verdict::ReflectionAbort { t };
            break;
        }
    }
    state.u = RadialField::from_reduced(grid, w)?;
    Ok(Run { params: *p, config: cfg.clone(), state, verdict, fields })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// L² error at t_end against the reference
    pub errors: Vec<f64>,
    /// successive error ratios e(dt)/e(dt/2)
    pub ratios: Vec<f64>,
    /// least-squares slope of log error against log dt
    pub order: f64,
    /// errors failed to decrease monotonically with dt
    pub inconclusive: bool,
}

/// Global-error order at `t_end` against a Strang reference at (finest dt)/16.
pub fn convergence_study(u0: &RadialField, p: &PhysicsParams, t_end: f64, dts: &[f64]) -> Result<ConvergenceReport> {
    if dts.len() < 3 {
        return Err(Error::Insufficient(format!("convergence study needs at least 3 step sizes, got {}", dts.len())));
    }
    let finest = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let run = |dt: f64| {
        let steps = (t_end / dt).round() as usize;
        propagate(u0, p, t_end / steps as f64, steps)
    };
    let reference = run(finest / 16.0);
    let errors = dts.iter().map(|&dt| run(dt).l2_distance(&reference)).collect::<Result<Vec<_>>>()?;
    let mut order_pairs: Vec<(f64, f64)> = dts.iter().zip(&errors).map(|(d, e)| (*d, *e)).collect();
    order_pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let ratios: Vec<f64> = order_pairs.windows(2).map(|w| w[0].1 / w[1].1).collect();
    let inconclusive = order_pairs.windows(2).any(|w| !(w[1].1 < w[0].1));
    let xs: Vec<f64> = order_pairs.iter().map(|(d, _)| d.ln()).collect();
    let ys: Vec<f64> = order_pairs.iter().map(|(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let order = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Ok(ConvergenceReport { dts: order_pairs.iter().map(|p| p.0).collect(), errors: order_pairs.iter().map(|p| p.1).collect(), ratios, order, inconclusive })
}
