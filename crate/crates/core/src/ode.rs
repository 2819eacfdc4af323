//! Adaptive Dormand–Prince 5(4) integrator for small real systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; these are fifth minus fourth
const E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// Integrator state; `rhs(t, y) -> y'`.
pub struct Dopri5<const D: usize, F: FnMut(f64, &[f64; D]) -> [f64; D]> {
    rhs: F,
    pub t: f64,
    pub y: [f64; D],
    pub dy: [f64; D],
    h: f64,
    tol: Tolerance,
    pub steps: usize,
}

impl<const D: usize, F: FnMut(f64, &[f64; D]) -> [f64; D]> Dopri5<D, F> {
    pub fn new(mut rhs: F, t0: f64, y0: [f64; D], h0: f64, tol: Tolerance) -> Self {
        let dy = rhs(t0, &y0);
        Self { rhs, t: t0, y: y0, dy, h: h0, tol, steps: 0 }
    }

    /// One accepted step, not past `t_max`.
    pub fn step(&mut self, t_max: f64) -> Result<()> {
        loop {
            let h = self.h.min(t_max - self.t);
            let mut k = [[0.0; D]; 7];
            k[0] = self.dy;
            for s in 1..7 {
                let mut ys = self.y;
                for (i, y) in ys.iter_mut().enumerate() {
                    *y += h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = (self.rhs)(self.t + C[s] * h, &ys);
            }
            let mut y_new = self.y;
            let mut err: f64 = 0.0;
            for i in 0..D {
                y_new[i] += h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>();
                let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let scale = self.tol.atol + self.tol.rtol * self.y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.h = 0.5 * h;
                if self.h < 1e-300 {
                    return Err(Error::NonFinite { t: self.t });
                }
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t += h;
                self.y = y_new;
                self.dy = k[6];
                self.steps += 1;
                self.h = h * factor;
                return Ok(());
            }
            self.h = h * factor;
        }
    }
}
