//! Radial fields on a Bessel-zero grid and the discrete Hankel transform that diagonalises
//! L_a = −Δ + a/|x|² exactly on that grid.
//!
//! Fields are stored in the reduced variable W(r) = r^{1/2} u(r). For ν = √(1/4 + a) the
//! functions r^{-1/2} J_ν(k r) are eigenfunctions of L_a with eigenvalue k², so the order-ν
//! Hankel transform of W in the measure r dr is the spectral representation of L_a.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bessel::{bessel_j, bessel_j_pair, bessel_zeros};
use crate::error::{Error, Result};
use crate::quadrature::GradedMesh;

/// Sign of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(Sign::Defocusing)
        } else if v == -1.0 {
            Ok(Sign::Focusing)
        } else {
            Err(Error::Domain { name: "lambda", value: v, bound: "lambda in {+1, -1}" })
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    pub a: f64,
    pub b: f64,
    pub lambda: Sign,
}

impl PhysicsParams {
    /// Validated constructor. `b = 0` is accepted for comparison with the classical cubic equation.
    pub fn new(a: f64, b: f64, lambda: Sign) -> Result<Self> {
        check_hardy(a)?;
        if !(b.is_finite() && (0.0..1.0).contains(&b)) {
            return Err(Error::Domain { name: "b", value: b, bound: "0 < b < 1" });
        }
        Ok(Self { a, b, lambda })
    }

    pub fn focusing(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, Sign::Focusing)
    }

    pub fn defocusing(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, Sign::Defocusing)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams { nu: (0.25 + self.a).sqrt(), sigma: 0.5 - (0.25 + self.a).sqrt(), s_c: 0.5 * (1.0 + self.b) }
    }

    pub fn nu(&self) -> f64 {
        self.derived().nu
    }
}

fn check_hardy(a: f64) -> Result<()> {
    if a.is_finite() && a > -0.25 {
        Ok(())
    } else {
        Err(Error::Domain { name: "a", value: a, bound: "a > -1/4" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub nu: f64,
    pub sigma: f64,
    pub s_c: f64,
}

pub fn derive_params(p: &PhysicsParams) -> Result<DerivedParams> {
    check_hardy(p.a)?;
    Ok(p.derived())
}

enum Kernel {
    /// symmetric orthogonal N×N matrix, row-major
    Dense(Vec<f64>),
    /// ν = 1/2: the transform is the orthonormal DST-I
    Sine(SineKernel),
}

struct SineKernel {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineKernel {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft }
    }

    fn odd_buffer(&self, v: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (n + 1)];
        for (j, x) in v.iter().enumerate() {
            buf[j + 1] = *x;
            buf[2 * n + 1 - j] = *x * sign;
        }
        buf
    }

    /// out_m = √(2/(N+1)) Σ_n v_n sin(π m n/(N+1))
    fn sine(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = self.odd_buffer(v, -1.0);
        self.fft.process(&mut buf);
        let scale = Complex64::new(0.0, 0.5 * (2.0 / (self.n as f64 + 1.0)).sqrt());
        buf[1..=self.n].iter().map(|x| x * scale).collect()
    }

    /// out_n = Σ_m v_m cos(π m n/(N+1))
    fn cosine(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = self.odd_buffer(v, 1.0);
        self.fft.process(&mut buf);
        buf[1..=self.n].iter().map(|x| x * 0.5).collect()
    }
}

/// Gauss–Legendre resolution of the radial interval with the basis tabulated on it, used for
/// quadratures whose integrands are not smooth in the collocation sense.
pub struct ResolvedMesh {
    pub mesh: GradedMesh,
    /// E_qm = s_m J_ν(k_m ρ_q), row-major Q×N
    basis: Vec<f64>,
    n: usize,
}

impl ResolvedMesh {
    /// W(ρ_q) for a coefficient vector.
    pub fn values(&self, ghat: &[Complex64]) -> Vec<Complex64> {
        matvec_complex(&self.basis, self.mesh.len(), self.n, ghat)
    }

    pub fn values_real(&self, ghat: &[f64]) -> Vec<f64> {
        matvec_real(&self.basis, self.mesh.len(), self.n, ghat)
    }

    /// Σ_q E_qm f_q: the Hankel coefficients of f once f carries the quadrature weight ω_q ρ_q.
    pub fn project_real(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &fq) in self.basis.chunks_exact(self.n).zip(f) {
            if fq == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(row) {
                *o += e * fq;
            }
        }
        out
    }
}

pub struct RadialGrid {
    nu: f64,
    n: usize,
    r_max: f64,
    last_zero: f64,
    zeros: Vec<f64>,
    nodes: Vec<f64>,
    freqs: Vec<f64>,
    weights: Vec<f64>,
    sqrt_w: Vec<f64>,
    coef_scale: Vec<f64>,
    kernel: Kernel,
    derivative: OnceLock<Vec<f64>>,
    resolved: OnceLock<ResolvedMesh>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid").field("nu", &self.nu).field("n", &self.n).field("r_max", &self.r_max).finish()
    }
}

/// Bessel-zero collocation grid: r_n = j_{ν,n} R / j_{ν,N+1}, k_n = j_{ν,n} / R.
pub fn build_grid(nu: f64, n: usize, r_max: f64) -> Result<Arc<RadialGrid>> {
    if n < 16 {
        return Err(Error::Domain { name: "N", value: n as f64, bound: "N >= 16" });
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::Domain { name: "R_max", value: r_max, bound: "R_max > 0" });
    }
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::Domain { name: "nu", value: nu, bound: "nu >= 0" });
    }
    let mut zeros = bessel_zeros(nu, n + 1)?;
    let last_zero = zeros.pop().expect("n + 1 zeros");
    let jnext: Vec<f64> = zeros.iter().map(|&j| bessel_j(nu + 1.0, j).abs()).collect();
    let nodes: Vec<f64> = zeros.iter().map(|j| j * r_max / last_zero).collect();
    let freqs: Vec<f64> = zeros.iter().map(|j| j / r_max).collect();
    let weights: Vec<f64> = jnext.iter().map(|jn| 2.0 * r_max * r_max / (last_zero * last_zero * jn * jn)).collect();
    let sqrt_w = weights.iter().map(|w| w.sqrt()).collect();
    let coef_scale = jnext.iter().map(|jn| 2f64.sqrt() / (r_max * jn)).collect();
    let kernel =
        if nu == 0.5 { Kernel::Sine(SineKernel::new(n)) } else { Kernel::Dense(dense_kernel(&zeros, last_zero, &jnext, nu)) };
    Ok(Arc::new(RadialGrid {
        nu,
        n,
        r_max,
        last_zero,
        zeros,
        nodes,
        freqs,
        weights,
        sqrt_w,
        coef_scale,
        kernel,
        derivative: OnceLock::new(),
        resolved: OnceLock::new(),
    }))
}

/// Y_mn = 2 J_ν(j_m j_n / S) / (S |J_{ν+1}(j_m)| |J_{ν+1}(j_n)|), then one Newton–Schulz polar
/// step Y(3 − Y²)/2, which removes the O(1e-10) orthogonality defect of the raw kernel.
fn dense_kernel(zeros: &[f64], last: f64, jnext: &[f64], nu: f64) -> Vec<f64> {
    let n = zeros.len();
    let mut y = vec![0.0; n * n];
    for m in 0..n {
        for k in m..n {
            let v = 2.0 * bessel_j(nu, zeros[m] * zeros[k] / last) / (last * jnext[m] * jnext[k]);
            y[m * n + k] = v;
            y[k * n + m] = v;
        }
    }
    let mut y2 = vec![0.0; n * n];
    gemm(n, &y, &y, &mut y2);
    for (i, v) in y2.iter_mut().enumerate() {
        *v = -0.5 * *v + if i % (n + 1) == 0 { 1.5 } else { 0.0 };
    }
    let mut u = vec![0.0; n * n];
    gemm(n, &y, &y2, &mut u);
    for m in 0..n {
        for k in m + 1..n {
            let s = 0.5 * (u[m * n + k] + u[k * n + m]);
            u[m * n + k] = s;
            u[k * n + m] = s;
        }
    }
    u
}

fn gemm(n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    let s = n as isize;
    // SAFETY: all three buffers are n×n row-major and `c` does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(n, n, n, 1.0, a.as_ptr(), s, 1, b.as_ptr(), s, 1, 0.0, c.as_mut_ptr(), s, 1);
    }
}

pub(crate) fn matvec_complex(mat: &[f64], rows: usize, cols: usize, v: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(mat.len(), rows * cols);
    mat.chunks_exact(cols)
        .map(|row| {
            let (mut re, mut im) = (0.0, 0.0);
            for (a, x) in row.iter().zip(v) {
                re += a * x.re;
                im += a * x.im;
            }
            Complex64::new(re, im)
        })
        .collect()
}

pub(crate) fn matvec_real(mat: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(mat.len(), rows * cols);
    mat.chunks_exact(cols).map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum()).collect()
}

impl RadialGrid {
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }
    /// j_{ν,N+1}
    pub fn last_zero(&self) -> f64 {
        self.last_zero
    }
    /// s_m such that W(r) = Σ_m s_m ĝ_m J_ν(k_m r)
    pub fn coef_scale(&self) -> &[f64] {
        &self.coef_scale
    }
    pub fn uses_fast_sine(&self) -> bool {
        matches!(self.kernel, Kernel::Sine(_))
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || (self.nu == other.nu && self.n == other.n && self.r_max == other.r_max)
    }

    fn apply_kernel(&self, v: &[Complex64]) -> Vec<Complex64> {
        match &self.kernel {
            Kernel::Dense(u) => matvec_complex(u, self.n, self.n, v),
            Kernel::Sine(s) => s.sine(v),
        }
    }

    fn apply_kernel_real(&self, v: &[f64]) -> Vec<f64> {
        match &self.kernel {
            Kernel::Dense(u) => matvec_real(u, self.n, self.n, v),
            Kernel::Sine(s) => {
                let c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                s.sine(&c).into_iter().map(|z| z.re).collect()
            }
        }
    }

    /// ĝ = U (√w ⊙ W)
    pub fn forward(&self, w: &[Complex64]) -> Vec<Complex64> {
        let scaled: Vec<Complex64> = w.iter().zip(&self.sqrt_w).map(|(x, s)| x * s).collect();
        self.apply_kernel(&scaled)
    }

    /// W = (U ĝ) / √w
    pub fn inverse(&self, ghat: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.apply_kernel(ghat);
        out.iter_mut().zip(&self.sqrt_w).for_each(|(x, s)| *x /= s);
        out
    }

    pub fn forward_real(&self, w: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = w.iter().zip(&self.sqrt_w).map(|(x, s)| x * s).collect();
        self.apply_kernel_real(&scaled)
    }

    pub fn inverse_real(&self, ghat: &[f64]) -> Vec<f64> {
        let mut out = self.apply_kernel_real(ghat);
        out.iter_mut().zip(&self.sqrt_w).for_each(|(x, s)| *x /= s);
        out
    }

    fn derivative_matrix(&self) -> &[f64] {
        self.derivative.get_or_init(|| {
            let n = self.n;
            let mut b = vec![0.0; n * n];
            for (i, &r) in self.nodes.iter().enumerate() {
                for m in 0..n {
                    let k = self.freqs[m];
                    let x = k * r;
                    let (j, j1) = bessel_j_pair(self.nu, x);
                    b[i * n + m] = k * (self.nu / x * j - j1) * self.coef_scale[m];
                }
            }
            b
        })
    }

    /// W'(r_n) from Hankel coefficients, by exact differentiation of the Bessel series.
    pub fn reduced_derivative(&self, ghat: &[Complex64]) -> Vec<Complex64> {
        match &self.kernel {
            Kernel::Dense(_) => matvec_complex(self.derivative_matrix(), self.n, self.n, ghat),
            Kernel::Sine(s) => {
                // r W = F with F(r) = √(2/R) Σ ĝ_m sin(k_m r)
                let pre = (2.0 / self.r_max).sqrt();
                let weighted: Vec<Complex64> = ghat.iter().zip(&self.freqs).map(|(g, k)| g * k).collect();
                let fp = s.cosine(&weighted);
                let f = s.sine(ghat);
                let sine_scale = (0.5 * (self.n as f64 + 1.0)).sqrt();
                self.nodes
                    .iter()
                    .zip(fp.iter().zip(&f))
                    .map(|(&r, (dp, fv))| {
                        let f_r = fv * sine_scale * pre;
                        (dp * pre - f_r / (2.0 * r)) / r.sqrt()
                    })
                    .collect()
            }
        }
    }

    /// W(ρ) = Σ_m s_m ĝ_m J_ν(k_m ρ) at arbitrary radii; zero beyond R_max.
    pub fn eval_series(&self, ghat: &[Complex64], radii: &[f64]) -> Vec<Complex64> {
        radii
            .iter()
            .map(|&rho| {
                if rho >= self.r_max {
                    return Complex64::new(0.0, 0.0);
                }
                ghat.iter()
                    .zip(self.freqs.iter().zip(&self.coef_scale))
                    .map(|(g, (k, s))| g * (s * bessel_j(self.nu, k * rho)))
                    .sum()
            })
            .collect()
    }

    /// Lazily built graded Gauss–Legendre mesh with the basis tabulated on it.
    pub fn resolved(&self) -> &ResolvedMesh {
        self.resolved.get_or_init(|| {
            let mesh = GradedMesh::new(self.r_max, 2 * self.n);
            let n = self.n;
            let mut basis = vec![0.0; mesh.len() * n];
            for (row, &rho) in basis.chunks_exact_mut(n).zip(&mesh.points) {
                for (m, e) in row.iter_mut().enumerate() {
                    *e = self.coef_scale[m] * bessel_j(self.nu, self.freqs[m] * rho);
                }
            }
            ResolvedMesh { mesh, basis, n }
        })
    }
}

/// Physical-space samples of W = r^{1/2} u at the grid nodes.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    samples: Vec<Complex64>,
}

/// Hankel coefficients on the frequencies k_n.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<RadialGrid>,
    coeffs: Vec<Complex64>,
}

impl RadialField {
    pub fn from_reduced(grid: Arc<RadialGrid>, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch("sample count differs from node count"));
        }
        Ok(Self { grid, samples })
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let samples = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, samples }
    }

    /// Samples a 3D radial profile u(r).
    pub fn from_profile(grid: Arc<RadialGrid>, u: impl Fn(f64) -> Complex64) -> Self {
        let samples = grid.nodes().iter().map(|&r| u(r) * r.sqrt()).collect();
        Self { grid, samples }
    }

    pub fn from_real_profile(grid: Arc<RadialGrid>, u: impl Fn(f64) -> f64) -> Self {
        Self::from_profile(grid, |r| Complex64::new(u(r), 0.0))
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// u(r_n) = W(r_n) / √r_n
    pub fn profile(&self) -> Vec<Complex64> {
        self.samples.iter().zip(self.grid.nodes()).map(|(w, r)| w / r.sqrt()).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), samples: self.samples.iter().map(|x| x * c).collect() }
    }

    /// Multiply by a complex constant.
    pub fn rotated(&self, z: Complex64) -> Self {
        Self { grid: self.grid.clone(), samples: self.samples.iter().map(|x| x * z).collect() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().zip(self.grid.nodes()).map(|(w, r)| w.norm() / r.sqrt()).fold(0.0, f64::max)
    }

    /// Discrete L²(r dr) distance to another field on the same grid.
    pub fn l2_distance(&self, other: &RadialField) -> Result<f64> {
        ensure_same(&self.grid, &other.grid)?;
        let s: f64 =
            self.samples.iter().zip(&other.samples).zip(self.grid.weights()).map(|((x, y), w)| w * (x - y).norm_sqr()).sum();
        Ok((4.0 * PI * s).sqrt())
    }
}

impl SpectralField {
    pub fn new(grid: Arc<RadialGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient count differs from node count"));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

pub(crate) fn ensure_same(a: &RadialGrid, b: &RadialGrid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch("fields live on different grids"))
    }
}

pub fn hankel_forward(f: &RadialField) -> SpectralField {
    SpectralField { grid: f.grid.clone(), coeffs: f.grid.forward(&f.samples) }
}

pub fn hankel_inverse(f: &SpectralField) -> RadialField {
    RadialField { grid: f.grid.clone(), samples: f.grid.inverse(&f.coeffs) }
}

/// e^{−itL_a} f.
pub fn linear_propagate(f: &RadialField, t: f64) -> RadialField {
    let mut modes = hankel_forward(f);
    for (c, k) in modes.coeffs.iter_mut().zip(f.grid.freqs()) {
        *c *= Complex64::from_polar(1.0, -t * k * k);
    }
    hankel_inverse(&modes)
}

/// Reasons a rescaled field may not faithfully represent u_μ on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum AliasWarning {
    /// fraction of the mass of u that lands outside [0, R_max]
    BeyondDomain { fraction: f64 },
    /// spectral mass fraction pushed above the largest grid frequency
    BelowResolution { fraction: f64 },
}

#[derive(Debug, Clone)]
pub struct ScaledField {
    pub field: RadialField,
    pub warnings: Vec<AliasWarning>,
}

const ALIAS_TOL: f64 = 1e-8;

/// u_μ(x) = μ^{(2−b)/2} u(μx), resampled by evaluating the Bessel series of W at μ r_n.
pub fn scale_field(f: &RadialField, mu: f64, b: f64) -> Result<ScaledField> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain { name: "mu", value: mu, bound: "mu > 0" });
    }
    let grid = f.grid();
    let ghat = grid.forward(f.samples());
    let total: f64 = ghat.iter().map(|g| g.norm_sqr()).sum();
    let mut warnings = Vec::new();
    if total > 0.0 {
        if mu < 1.0 {
            let cut = mu * grid.r_max();
            let lost: f64 =
                f.samples().iter().zip(grid.nodes().iter().zip(grid.weights())).filter(|(_, (r, _))| **r > cut).map(|(x, (_, w))| w * x.norm_sqr()).sum();
            if lost / total > ALIAS_TOL {
                warnings.push(AliasWarning::BeyondDomain { fraction: lost / total });
            }
        } else if mu > 1.0 {
            let kmax = grid.freqs().last().copied().unwrap_or(0.0);
            let lost: f64 = ghat.iter().zip(grid.freqs()).filter(|(_, k)| mu * **k > kmax).map(|(g, _)| g.norm_sqr()).sum();
            if lost / total > ALIAS_TOL {
                warnings.push(AliasWarning::BelowResolution { fraction: lost / total });
            }
        }
    }
    let radii: Vec<f64> = grid.nodes().iter().map(|r| mu * r).collect();
    let amp = mu.powf(0.5 * (1.0 - b));
    let samples = grid.eval_series(&ghat, &radii).into_iter().map(|w| w * amp).collect();
    Ok(ScaledField { field: RadialField { grid: grid.clone(), samples }, warnings })
}
