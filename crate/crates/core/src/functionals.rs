//! Instantaneous functionals of a radial field: mass, Hardy kinetic energy, fractional norms,
//! the weighted quartic term, energy, the Gagliardo–Nirenberg quotient, virial actions and
//! their time derivatives, mass in a ball, and Strichartz exponent arithmetic.
//!
//! All sums are written against the reduced variable W = r^{1/2} u with the quadrature weights
//! of the measure r dr, so that ∫ g(|x|) dx = 4π Σ_n w_n r_n g(r_n).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::spectral_core::{PhysicsParams, RadialField, RadialGrid};

const FOUR_PI: f64 = 4.0 * PI;

/// Which quadrature evaluates the weighted quartic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// grid nodes; this is the quantity the split-step dynamics conserves
    #[default]
    Nodal,
    /// graded Gauss–Legendre mesh applied to the Bessel series
    Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValues {
    pub m: f64,
    pub k: f64,
    pub p: f64,
    pub e: f64,
}

impl FunctionalValues {
    pub fn evaluate(f: &RadialField, params: &PhysicsParams, quad: Quadrature) -> Self {
        let m = mass(f);
        let k = hardy_kinetic(f);
        let p = match quad {
            Quadrature::Nodal => potential_term(f, params.b),
            Quadrature::Resolved => potential_term_resolved(f, params.b),
        };
        Self { m, k, p, e: 0.5 * k + 0.25 * params.lambda() * p }
    }
}

pub fn mass(f: &RadialField) -> f64 {
    FOUR_PI * f.samples().iter().zip(f.grid().weights()).map(|(x, w)| w * x.norm_sqr()).sum::<f64>()
}

fn spectral_moment(f: &RadialField, s: f64) -> f64 {
    let grid = f.grid();
    let ghat = grid.forward(f.samples());
    FOUR_PI * ghat.iter().zip(grid.freqs()).map(|(g, k)| k.powf(2.0 * s) * g.norm_sqr()).sum::<f64>()
}

/// ‖u‖²_{Ḣ¹ₐ} = 4π Σ k_n² |ĝ_n|².
pub fn hardy_kinetic(f: &RadialField) -> f64 {
    let grid = f.grid();
    let ghat = grid.forward(f.samples());
    FOUR_PI * ghat.iter().zip(grid.freqs()).map(|(g, k)| k * k * g.norm_sqr()).sum::<f64>()
}

/// ‖u‖_{Ḣ^s_a} = (4π Σ k_n^{2s} |ĝ_n|²)^{1/2}.
pub fn fractional_norm(f: &RadialField, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain { name: "s", value: s, bound: "0 <= s <= 1" });
    }
    Ok(spectral_moment(f, s).sqrt())
}

/// ∫|u|⁴/|x|^b dx at the grid nodes.
pub fn potential_term(f: &RadialField, b: f64) -> f64 {
    potential_in_ball(f, b, f64::INFINITY)
}

/// ∫|u|⁴/|x|^b dx from the Bessel series on the graded mesh.
pub fn potential_term_resolved(f: &RadialField, b: f64) -> f64 {
    let grid = f.grid();
    let mesh = grid.resolved();
    let values = mesh.values(&grid.forward(f.samples()));
    FOUR_PI
        * values.iter().zip(mesh.mesh.points.iter().zip(&mesh.mesh.weights)).map(|(v, (r, w))| w * r.powf(-b) * v.norm_sqr().powi(2)).sum::<f64>()
}

/// ∫_{|x|≤R} |u|⁴/|x|^b dx at the grid nodes.
pub fn potential_in_ball(f: &RadialField, b: f64, radius: f64) -> f64 {
    let g = f.grid();
    FOUR_PI
        * f.samples()
            .iter()
            .zip(g.nodes().iter().zip(g.weights()))
            .filter(|(_, (r, _))| **r <= radius)
            .map(|(x, (r, w))| w * x.norm_sqr().powi(2) * r.powf(-1.0 - b))
            .sum::<f64>()
}

/// E = K/2 + λP/4 with the nodal quartic term.
pub fn energy(f: &RadialField, p: &PhysicsParams) -> f64 {
    FunctionalValues::evaluate(f, p, Quadrature::Nodal).e
}

/// P / (M^{(1−b)/2} K^{(3+b)/2}), with the resolved quartic term.
///
/// The K exponent (3 + b)/2 is the one that makes the quotient invariant under both
/// amplitude scaling and dilation.
pub fn gn_quotient(f: &RadialField, p: &PhysicsParams) -> Result<f64> {
    gn_quotient_with(f, p, Quadrature::Resolved)
}

pub fn gn_quotient_with(f: &RadialField, p: &PhysicsParams, quad: Quadrature) -> Result<f64> {
    let v = FunctionalValues::evaluate(f, p, quad);
    if v.m == 0.0 || v.k == 0.0 {
        return Err(Error::Domain { name: "field norm", value: 0.0, bound: "nonzero field" });
    }
    Ok(v.p / (v.m.powf(0.5 * (1.0 - p.b)) * v.k.powf(0.5 * (3.0 + p.b))))
}

/// ∫_{|x|<R} |u|² dx with the sharp indicator at the grid nodes.
pub fn mass_in_ball(f: &RadialField, radius: f64) -> f64 {
    let g = f.grid();
    FOUR_PI
        * f.samples().iter().zip(g.nodes().iter().zip(g.weights())).filter(|(_, (r, _))| **r < radius).map(|(x, (_, w))| w * x.norm_sqr()).sum::<f64>()
}

/// ∫_{|x|<R} |u|² dx integrating the Bessel series exactly up to the cutoff.
pub fn mass_in_ball_resolved(f: &RadialField, radius: f64) -> f64 {
    let g = f.grid();
    let top = radius.min(g.r_max());
    if top <= 0.0 {
        return 0.0;
    }
    let ghat = g.forward(f.samples());
    let panels = ((top / g.r_max()) * g.len() as f64).ceil().max(1.0) as usize;
    let (x, wt) = gauss_legendre(12);
    let h = top / panels as f64;
    let mut pts = Vec::with_capacity(panels * 12);
    let mut ws = Vec::with_capacity(panels * 12);
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&wt) {
            pts.push(mid + 0.5 * h * xi);
            ws.push(0.5 * h * wi);
        }
    }
    let vals = g.eval_series(&ghat, &pts);
    FOUR_PI * vals.iter().zip(pts.iter().zip(&ws)).map(|(v, (r, w))| w * r * v.norm_sqr()).sum::<f64>()
}

/// ∫|u|²/|x|³ dx at the grid nodes.
pub fn inverse_cube_term(f: &RadialField) -> f64 {
    let g = f.grid();
    FOUR_PI * f.samples().iter().zip(g.nodes().iter().zip(g.weights())).map(|(x, (r, w))| w * x.norm_sqr() / (r * r * r)).sum::<f64>()
}

/// ∫|u|⁴/|x|^{1+b} dx at the grid nodes.
pub fn weighted_quartic_term(f: &RadialField, b: f64) -> f64 {
    let g = f.grid();
    FOUR_PI
        * f.samples().iter().zip(g.nodes().iter().zip(g.weights())).map(|(x, (r, w))| w * x.norm_sqr().powi(2) * r.powf(-2.0 - b)).sum::<f64>()
}

/// ∫|u|⁴ dx at the grid nodes.
pub fn quartic_term(f: &RadialField) -> f64 {
    let g = f.grid();
    FOUR_PI * f.samples().iter().zip(g.nodes().iter().zip(g.weights())).map(|(x, (r, w))| w * x.norm_sqr().powi(2) / r).sum::<f64>()
}

/// Radial derivative ∂_r u at the nodes.
pub fn radial_derivative(f: &RadialField) -> Vec<Complex64> {
    let g = f.grid();
    let dw = g.reduced_derivative(&g.forward(f.samples()));
    dw.iter().zip(f.samples()).zip(g.nodes()).map(|((d, w), &r)| (d - w / (2.0 * r)) / r.sqrt()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Quadratic,
    Truncated { radius: f64 },
}

impl WeightKind {
    pub fn label(&self) -> String {
        match self {
            WeightKind::Quadratic => "quadratic".to_string(),
            WeightKind::Truncated { radius } => format!("truncated_R{radius}"),
        }
    }
}

/// Values of a radial weight and its derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightJet {
    pub w: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl WeightJet {
    pub fn laplacian(&self, r: f64) -> f64 {
        self.d2 + 2.0 * self.d1 / r
    }
    pub fn bilaplacian(&self, r: f64) -> f64 {
        self.d4 + 4.0 * self.d3 / r
    }
}

/// Smooth convex weight equal to r² on [0, R/2] and with slope 2R beyond R.
///
/// On the band w'' = 2(1 − S(s)) + 630 s⁴(1 − s)⁴ with s = (r − R/2)/(R/2) and S the degree-7
/// smoothstep; the bump lifts the slope from R to exactly 2R. Beyond R the weight is 2Rr plus
/// a constant (no convex weight can be r² on the ball and exactly 2Rr outside R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedWeight {
    pub radius: f64,
}

// w'' on the band as a polynomial in s, lowest degree first
const BAND_D2: [f64; 9] = [2.0, 0.0, 0.0, 0.0, 560.0, -2352.0, 3640.0, -2480.0, 630.0];

fn poly_eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * s + v)
}

fn poly_integral(c: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(c.iter().enumerate().map(|(i, v)| v / (i as f64 + 1.0))).collect()
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, v)| v * i as f64).collect()
}

impl TruncatedWeight {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Domain { name: "R", value: radius, bound: "R > 0" });
        }
        Ok(Self { radius })
    }

    pub fn jet(&self, r: f64) -> WeightJet {
        let big = self.radius;
        let half = 0.5 * big;
        if r <= half {
            return WeightJet { w: r * r, d1: 2.0 * r, d2: 2.0, d3: 0.0, d4: 0.0 };
        }
        let i1 = poly_integral(&BAND_D2);
        let i2 = poly_integral(&i1);
        if r >= big {
            let w_end = 0.25 * big * big + big * half + half * half * poly_eval(&i2, 1.0);
            return WeightJet { w: w_end + 2.0 * big * (r - big), d1: 2.0 * big, d2: 0.0, d3: 0.0, d4: 0.0 };
        }
        let s = (r - half) / half;
        let d1c = poly_derivative(&BAND_D2);
        let d2c = poly_derivative(&d1c);
        WeightJet {
            w: 0.25 * big * big + big * half * s + half * half * poly_eval(&i2, s),
            d1: big + half * poly_eval(&i1, s),
            d2: poly_eval(&BAND_D2, s),
            d3: poly_eval(&d1c, s) / half,
            d4: poly_eval(&d2c, s) / (half * half),
        }
    }

    /// Checks w' ≥ 0 and w'' ≥ 0 on a fine audit grid; returns the worst normalised
    /// derivative max_k |∂^k w| R^{k−2} for k = 1..4.
    pub fn audit(&self, samples: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..=samples {
            let r = 1.5 * self.radius * i as f64 / samples as f64;
            let j = self.jet(r);
            if j.d1 < 0.0 || j.d2 < -1e-12 {
                return Err(Error::Domain { name: "truncated weight", value: r, bound: "w' >= 0 and w'' >= 0" });
            }
            for (k, d) in [j.d1, j.d2, j.d3, j.d4].iter().enumerate() {
                worst = worst.max(d.abs() * self.radius.powi(k as i32 - 1));
            }
        }
        Ok(worst)
    }
}

/// A virial weight tabulated on a grid.
#[derive(Debug, Clone)]
pub struct VirialWeight {
    pub kind: WeightKind,
    pub jets: Vec<WeightJet>,
}

impl VirialWeight {
    pub fn quadratic(grid: &RadialGrid) -> Self {
        let jets = grid.nodes().iter().map(|&r| WeightJet { w: r * r, d1: 2.0 * r, d2: 2.0, d3: 0.0, d4: 0.0 }).collect();
        Self { kind: WeightKind::Quadratic, jets }
    }

    pub fn truncated(grid: &RadialGrid, radius: f64) -> Result<Self> {
        let profile = TruncatedWeight::new(radius)?;
        let jets = grid.nodes().iter().map(|&r| profile.jet(r)).collect();
        Ok(Self { kind: WeightKind::Truncated { radius }, jets })
    }

    pub fn from_kind(grid: &RadialGrid, kind: WeightKind) -> Result<Self> {
        match kind {
            WeightKind::Quadratic => Ok(Self::quadratic(grid)),
            WeightKind::Truncated { radius } => Self::truncated(grid, radius),
        }
    }
}

/// V(t; w) = 2 Im ∫ ū ∇u · ∇w dx = 8π Σ w_n w'(r_n) Im(W̄ W')_n.
pub fn virial_action(f: &RadialField, weight: &VirialWeight) -> f64 {
    let g = f.grid();
    let dw = g.reduced_derivative(&g.forward(f.samples()));
    virial_from_parts(f, &dw, weight)
}

fn virial_from_parts(f: &RadialField, dw: &[Complex64], weight: &VirialWeight) -> f64 {
    let g = f.grid();
    2.0 * FOUR_PI
        * f.samples()
            .iter()
            .zip(dw)
            .zip(g.weights().iter().zip(&weight.jets))
            .map(|((x, d), (w, jet))| w * jet.d1 * (x.conj() * d).im)
            .sum::<f64>()
}

/// ∂ₜV(t; w) along solutions.
///
/// The quadratic part r² is assembled in closed form, 8K + 2(3 + b)λP, using the spectral K;
/// the remainder w − r² vanishes on [0, R/2] and is assembled pointwise from
/// −ΔΔw|u|² + 4w''|∂_r u|² + 4a w'/r³ |u|² + λb w'/r^{1+b} |u|⁴ + λΔw |u|⁴/r^b.
pub fn virial_rhs(f: &RadialField, p: &PhysicsParams, weight: &VirialWeight) -> f64 {
    let g = f.grid();
    let ghat = g.forward(f.samples());
    let k: f64 = FOUR_PI * ghat.iter().zip(g.freqs()).map(|(c, k)| k * k * c.norm_sqr()).sum::<f64>();
    let pot = potential_term(f, p.b);
    let lambda = p.lambda();
    let quadratic = 8.0 * k + 2.0 * (3.0 + p.b) * lambda * pot;
    let WeightKind::Truncated { radius } = weight.kind else {
        return quadratic;
    };
    let dw = g.reduced_derivative(&ghat);
    let mut rest = 0.0;
    for (i, &r) in g.nodes().iter().enumerate() {
        if r <= 0.5 * radius {
            continue;
        }
        let jet = weight.jets[i];
        let eta1 = jet.d1 - 2.0 * r;
        let eta2 = jet.d2 - 2.0;
        let lap = jet.laplacian(r) - 6.0;
        let bilap = jet.bilaplacian(r);
        let x = f.samples()[i];
        let u2 = x.norm_sqr() / r;
        let u4 = u2 * u2;
        let ur = (dw[i] - x / (2.0 * r)) / r.sqrt();
        let density = -bilap * u2
            + 4.0 * eta2 * ur.norm_sqr()
            + 4.0 * p.a * eta1 / (r * r * r) * u2
            + lambda * p.b * eta1 * r.powf(-1.0 - p.b) * u4
            + lambda * lap * r.powf(-p.b) * u4;
        rest += g.weights()[i] * r * density;
    }
    quadratic + FOUR_PI * rest
}

/// A Lebesgue exponent in [1, ∞], rational when finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Finite { num: i64, den: i64 },
    Infinite,
}

impl Exponent {
    pub fn int(n: i64) -> Self {
        Exponent::Finite { num: n, den: 1 }
    }
    pub fn ratio(num: i64, den: i64) -> Self {
        Exponent::Finite { num, den }
    }
    /// 1/q as a fraction (numerator, denominator)
    fn reciprocal(self) -> (i64, i64) {
        match self {
            Exponent::Finite { num, den } => (den, num),
            Exponent::Infinite => (0, 1),
        }
    }
    fn at_least_two(self) -> bool {
        match self {
            Exponent::Finite { num, den } => den != 0 && (num as i128) * (den.signum() as i128) >= 2 * (den.abs() as i128),
            Exponent::Infinite => true,
        }
    }
}

/// q, r ≥ 2 and 2/q + 3/r = 3/2, in exact integer arithmetic.
pub fn admissible_pair(q: Exponent, r: Exponent) -> bool {
    if !(q.at_least_two() && r.at_least_two()) {
        return false;
    }
    let (qn, qd) = q.reciprocal();
    let (rn, rd) = r.reciprocal();
    // 2 qn/qd + 3 rn/rd = 3/2  ⇔  2(2 qn rd + 3 rn qd) = 3 qd rd
    let (qn, qd, rn, rd) = (qn as i128, qd as i128, rn as i128, rd as i128);
    2 * (2 * qn * rd + 3 * rn * qd) == 3 * qd * rd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GradedMesh;
    use crate::spectral_core::{build_grid, scale_field, Sign};
    use proptest::prelude::*;
    use std::sync::Arc;

    const NU_A1: f64 = 1.118_033_988_749_894_8;

    /// independent dense quadrature of ∫_0^L g(r) 4π r² dr
    fn dense(g: impl Fn(f64) -> f64, top: f64) -> f64 {
        let mesh = GradedMesh::new(top, 4000);
        FOUR_PI * mesh.points.iter().zip(&mesh.weights).map(|(r, w)| w * r * r * g(*r)).sum::<f64>()
    }

    fn gaussian_grid(nu: f64) -> Arc<RadialGrid> {
        build_grid(nu, 256, 12.0).unwrap()
    }

    #[test]
    fn gaussian_mass_closed_form() {
        let g = gaussian_grid(0.5);
        let f = RadialField::from_real_profile(g, |r| (-r * r).exp());
        let want = PI.powf(1.5) / (2.0 * 2f64.sqrt());
        assert!((mass(&f) - want).abs() < 1e-12);
        assert_eq!(mass(&RadialField::zero(gaussian_grid(0.25))), 0.0);
    }

    #[test]
    fn kinetic_matches_gradient_quadrature() {
        let g = gaussian_grid(0.5);
        let f = RadialField::from_real_profile(g, |r| (-r * r).exp());
        let want = dense(|r| 4.0 * r * r * (-2.0 * r * r).exp(), 12.0);
        assert!((hardy_kinetic(&f) - want).abs() < 1e-8);
    }

    #[test]
    fn kinetic_includes_hardy_term() {
        // operator-adapted Gaussian u = r^{ν−1/2} e^{−r²}
        let a = 1.0;
        let beta = NU_A1 - 0.5;
        let g = gaussian_grid(NU_A1);
        let f = RadialField::from_real_profile(g, |r| r.powf(beta) * (-r * r).exp());
        let du = |r: f64| (beta / r - 2.0 * r) * r.powf(beta) * (-r * r).exp();
        let want = dense(|r| du(r).powi(2) + a * r.powf(2.0 * beta) * (-2.0 * r * r).exp() / (r * r), 12.0);
        assert!((hardy_kinetic(&f) - want).abs() < 1e-6 * want, "{} vs {want}", hardy_kinetic(&f));
    }

    #[test]
    fn fractional_endpoints() {
        let g = gaussian_grid(0.25);
        let f = RadialField::from_real_profile(g, |r| r.powf(-0.25) * (-r * r / 2.0).exp());
        assert!((fractional_norm(&f, 0.0).unwrap() - mass(&f).sqrt()).abs() < 1e-12);
        assert!((fractional_norm(&f, 1.0).unwrap() - hardy_kinetic(&f).sqrt()).abs() < 1e-12);
        assert!(fractional_norm(&f, 1.5).is_err());
    }

    #[test]
    fn quartic_term_closed_forms() {
        let g = gaussian_grid(0.5);
        let f = RadialField::from_real_profile(g, |r| (-r * r).exp());
        assert!((potential_term(&f, 0.0) - PI.powf(1.5) / 8.0).abs() < 1e-10);
        let want = dense(|r| (-4.0 * r * r).exp() * r.powf(-0.5), 12.0);
        assert!((potential_term_resolved(&f, 0.5) - want).abs() < 1e-8);
        assert_eq!(potential_term(&RadialField::zero(gaussian_grid(0.5)), 0.5), 0.0);
    }

    #[test]
    fn defocusing_energy_is_nonnegative() {
        let g = gaussian_grid(NU_A1);
        let p = PhysicsParams::defocusing(1.0, 0.5).unwrap();
        let f = RadialField::from_real_profile(g, |r| 3.0 * r.powf(0.618) * (-r * r).exp());
        let v = FunctionalValues::evaluate(&f, &p, Quadrature::Nodal);
        assert!(v.e >= 0.0 && (v.e - (0.5 * v.k + 0.25 * v.p)).abs() < 1e-14 * v.e);
    }

    #[test]
    fn gn_invariances() {
        let g = gaussian_grid(0.25);
        let p = PhysicsParams::focusing(-3.0 / 16.0, 0.25).unwrap();
        let f = RadialField::from_real_profile(g, |r| r.powf(-0.25) * ((-r * r).exp() + 0.3 * (-r * r / 4.0).exp()));
        let q = gn_quotient(&f, &p).unwrap();
        assert!((gn_quotient(&f.scaled(3.7), &p).unwrap() / q - 1.0).abs() < 1e-12);
        let s = scale_field(&f, 2.0, p.b).unwrap();
        assert!(s.warnings.is_empty());
        assert!((gn_quotient(&s.field, &p).unwrap() / q - 1.0).abs() < 1e-4);
        assert!(gn_quotient(&RadialField::zero(gaussian_grid(0.25)), &p).is_err());
    }

    #[test]
    fn ball_mass_and_closed_form() {
        let g = build_grid(0.5, 512, 10.0).unwrap();
        let f = RadialField::from_real_profile(g, |r| (-r * r).exp());
        // 4π ∫_0^1 r² e^{−2r²} dr
        let alpha: f64 = 2.0;
        let want = FOUR_PI * (PI.sqrt() / (4.0 * alpha.powf(1.5)) * libm::erf(alpha.sqrt()) - (-alpha).exp() / (2.0 * alpha));
        assert!((mass_in_ball_resolved(&f, 1.0) - want).abs() < 1e-6);
        assert!((mass_in_ball(&f, 1.0) - want).abs() < 0.05 * want);
        assert!((mass_in_ball(&f, 20.0) - mass(&f)).abs() < 1e-15);
        let radii = [0.5, 1.0, 1.5, 3.0];
        assert!(radii.windows(2).all(|w| mass_in_ball(&f, w[0]) <= mass_in_ball(&f, w[1])));
    }

    #[test]
    fn virial_of_real_field_vanishes() {
        let g = gaussian_grid(NU_A1);
        let f = RadialField::from_real_profile(g.clone(), |r| r.powf(0.618) * (-r * r).exp());
        assert!(virial_action(&f, &VirialWeight::quadratic(&g)).abs() < 1e-14);
    }

    #[test]
    fn virial_of_modulated_gaussian() {
        let v = 0.7;
        let g = gaussian_grid(0.5);
        let f = RadialField::from_profile(g.clone(), |r| Complex64::from_polar((-r * r).exp(), v * r * r / 4.0));
        // V = 8π v ∫ r⁴ g² dr
        let want = 2.0 * v * dense(|r| r * r * (-2.0 * r * r).exp(), 12.0);
        let got = virial_action(&f, &VirialWeight::quadratic(&g));
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn quadratic_rhs_is_closed_form() {
        let g = gaussian_grid(NU_A1);
        let p = PhysicsParams::focusing(1.0, 0.5).unwrap();
        let f = RadialField::from_profile(g.clone(), |r| Complex64::from_polar(r.powf(0.618) * (-r * r).exp(), 0.2 * r * r));
        let got = virial_rhs(&f, &p, &VirialWeight::quadratic(&g));
        let want = 8.0 * hardy_kinetic(&f) - 7.0 * potential_term(&f, 0.5);
        assert!((got - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn truncated_weight_coincides_inside_support() {
        let g = build_grid(NU_A1, 256, 20.0).unwrap();
        let p = PhysicsParams::defocusing(1.0, 0.25).unwrap();
        let f = RadialField::from_profile(g.clone(), |r| Complex64::from_polar(r.powf(0.618) * (-r * r).exp(), 0.3 * r * r));
        let quad = VirialWeight::quadratic(&g);
        let trunc = VirialWeight::truncated(&g, 16.0).unwrap();
        assert!((virial_rhs(&f, &p, &quad) - virial_rhs(&f, &p, &trunc)).abs() < 1e-8);
        assert!((virial_action(&f, &quad) - virial_action(&f, &trunc)).abs() < 1e-8);
    }

    #[test]
    fn truncated_rhs_matches_full_pointwise_assembly() {
        // where the field lives on the band, compare against an assembly of all terms of w
        let g = build_grid(NU_A1, 512, 30.0).unwrap();
        let p = PhysicsParams::focusing(1.0, 0.5).unwrap();
        let f = RadialField::from_profile(g.clone(), |r| Complex64::from_polar(r.powf(0.618) * (-(r - 6.0).powi(2)).exp(), 0.4 * r));
        let w = VirialWeight::truncated(&g, 8.0).unwrap();
        let ur = radial_derivative(&f);
        let mut full = 0.0;
        for (i, &r) in g.nodes().iter().enumerate() {
            let j = w.jets[i];
            let u2 = f.samples()[i].norm_sqr() / r;
            let d = -j.bilaplacian(r) * u2 + 4.0 * j.d2 * ur[i].norm_sqr() + 4.0 * p.a * j.d1 / r.powi(3) * u2
                - 0.5 * j.d1 * r.powf(-1.5) * u2 * u2
                - j.laplacian(r) * r.powf(-0.5) * u2 * u2;
            full += g.weights()[i] * r * d;
        }
        full *= FOUR_PI;
        let got = virial_rhs(&f, &p, &w);
        assert!((got - full).abs() < 1e-8 * full.abs().max(1.0), "{got} vs {full}");
    }

    #[test]
    fn truncated_weight_shape() {
        let w = TruncatedWeight::new(10.0).unwrap();
        let worst = w.audit(20000).unwrap();
        assert!(worst < 400.0, "{worst}");
        let end = w.jet(10.0);
        assert!((end.d1 - 20.0).abs() < 1e-12 && end.d2.abs() < 1e-12 && end.d3.abs() < 1e-10);
        let inner = w.jet(5.0);
        assert!((inner.w - 25.0).abs() < 1e-12 && (inner.d2 - 2.0).abs() < 1e-12);
        // continuity of the band polynomial at both ends
        for r in [5.0, 10.0] {
            let (lo, hi) = (w.jet(r - 1e-9), w.jet(r + 1e-9));
            assert!((lo.w - hi.w).abs() < 1e-7 && (lo.d1 - hi.d1).abs() < 1e-7 && (lo.d2 - hi.d2).abs() < 1e-6);
        }
    }

    #[test]
    fn strichartz_pairs() {
        assert!(admissible_pair(Exponent::Infinite, Exponent::int(2)));
        assert!(!admissible_pair(Exponent::int(4), Exponent::int(6)));
        assert!(admissible_pair(Exponent::int(2), Exponent::int(6)));
        assert!(admissible_pair(Exponent::int(4), Exponent::int(3)));
        assert!(admissible_pair(Exponent::ratio(8, 3), Exponent::int(4)));
        assert!(!admissible_pair(Exponent::int(1), Exponent::Infinite));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn parseval_mass(amps in proptest::collection::vec(-1.0f64..1.0, 4), widths in proptest::collection::vec(0.5f64..2.0, 4)) {
            let g = build_grid(0.25, 128, 10.0).unwrap();
            let f = RadialField::from_profile(g.clone(), |r| {
                let s: f64 = amps.iter().zip(&widths).map(|(a, w)| a * (-(r / w).powi(2)).exp()).sum();
                Complex64::new(s * r.powf(-0.25), 0.3 * s * r.powf(-0.25))
            });
            let phys = mass(&f);
            let spectral = FOUR_PI * g.forward(f.samples()).iter().map(|c| c.norm_sqr()).sum::<f64>();
            prop_assert!((phys - spectral).abs() <= 1e-10 * phys.max(1e-300));
        }

        #[test]
        fn ball_mass_monotone(r1 in 0.1f64..10.0, r2 in 0.1f64..10.0, c in 0.5f64..3.0) {
            let g = build_grid(0.5, 64, 8.0).unwrap();
            let f = RadialField::from_real_profile(g, |r| c * (-r * r / 2.0).exp());
            let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(mass_in_ball(&f, lo) <= mass_in_ball(&f, hi));
        }

        #[test]
        fn defocusing_energy_nonnegative(re in proptest::collection::vec(-2.0f64..2.0, 64), im in proptest::collection::vec(-2.0f64..2.0, 64)) {
            let g = build_grid(NU_A1, 64, 8.0).unwrap();
            let w: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
            let f = RadialField::from_reduced(g, w).unwrap();
            let p = PhysicsParams::new(1.0, 0.5, Sign::Defocusing).unwrap();
            prop_assert!(energy(&f, &p) >= 0.0);
        }
    }
}
