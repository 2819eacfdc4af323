//! Gauss–Legendre rules, graded radial meshes, and trapezoidal time integration.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            dp = n * (x * p - p0) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite mesh on (0, r_max] for the measure dr: geometric panels toward the origin,
/// then uniform panels of width `h`.
#[derive(Debug, Clone)]
pub struct GradedMesh {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradedMesh {
    pub const ORDER: usize = 8;
    pub const LEVELS: i32 = 40;
    pub const RATIO: f64 = 0.3;

    pub fn new(r_max: f64, panels: usize) -> Self {
        let h = r_max / panels as f64;
        let mut breaks: Vec<f64> = (1..=Self::LEVELS).rev().map(|j| h * Self::RATIO.powi(j)).collect();
        breaks.extend((1..=panels).map(|i| h * i as f64));
        let (x, w) = gauss_legendre(Self::ORDER);
        let mut points = Vec::with_capacity(Self::ORDER * breaks.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for pair in breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (xi, wi) in x.iter().zip(&w) {
                points.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Trapezoidal integral of samples `y` over the abscissae `t`.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(tt, yy)| 0.5 * (tt[1] - tt[0]) * (yy[0] + yy[1])).sum()
}

/// Running trapezoidal integral, same length as the input.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.extend(t.first().map(|_| 0.0));
    for (tt, yy) in t.windows(2).zip(y.windows(2)) {
        acc += 0.5 * (tt[1] - tt[0]) * (yy[0] + yy[1]);
        out.push(acc);
    }
    out
}
