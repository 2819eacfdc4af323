//! Bessel functions of the first kind J_ν(x) for real ν ≥ 0, x ≥ 0, and their positive zeros.
//!
//! Three regimes: power series for small arguments, Miller backward recurrence in the
//! intermediate band, and the Hankel asymptotic expansion for large arguments.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_BASE: f64 = 25.0;

fn is_half(nu: f64) -> bool {
    nu == 0.5
}

fn asymptotic_limit(nu: f64) -> f64 {
    ASYMPTOTIC_BASE + 0.5 * nu * nu
}

/// J_ν(x).
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    bessel_j_pair(nu, x).0
}

/// (J_ν(x), J_{ν+1}(x)).
pub fn bessel_j_pair(nu: f64, x: f64) -> (f64, f64) {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return (if nu == 0.0 { 1.0 } else { 0.0 }, 0.0);
    }
    if is_half(nu) {
        // spherical case, exact in closed form
        let (s, c) = x.sin_cos();
        let pre = (2.0 / (PI * x)).sqrt();
        return (pre * s, pre * (s / x - c));
    }
    if x < SERIES_LIMIT {
        (series(nu, x), series(nu + 1.0, x))
    } else if x < asymptotic_limit(nu + 1.0) {
        miller(nu, x)
    } else {
        (hankel(nu, x), hankel(nu + 1.0, x))
    }
}

/// dJ_ν/dx from the recurrence J_ν' = (ν/x)J_ν − J_{ν+1}.
pub fn bessel_j_deriv(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return match nu {
            n if n == 1.0 => 0.5,
            n if n == 0.0 || n > 1.0 => 0.0,
            _ => f64::INFINITY,
        };
    }
    let (j, j1) = bessel_j_pair(nu, x);
    nu / x * j - j1
}

fn series(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = (nu * h.ln() - libm::lgamma(nu + 1.0)).exp();
    let mut sum = term;
    let q = -h * h;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(nu: f64, x: f64) -> (f64, f64) {
    let start = (x + 30.0 + 8.0 * x.cbrt()).ceil() as usize;
    let start = start + (start & 1);
    let mut hi = 0.0; // order ν + i + 1
    let mut cur = 1e-30; // order ν + i
    let mut norm = 0.0;
    let mut j1 = 0.0;

    // weights e_k of the identity (x/2)^ν / Γ(ν+1) = Σ_k e_k J_{ν+2k}
    let half = start / 2;
    let mut weights = Vec::with_capacity(half + 1);
    weights.push(1.0);
    let mut q = 1.0;
    for k in 1..=half {
        if k > 1 {
            q *= (nu + (k - 1) as f64) / k as f64;
        }
        weights.push((nu + 2.0 * k as f64) * q);
    }

    let mut i = start;
    loop {
        if i % 2 == 0 {
            norm += weights[i / 2] * cur;
        }
        if i == 1 {
            j1 = cur;
        }
        if i == 0 {
            break;
        }
        let lower = 2.0 * (nu + i as f64) / x * cur - hi;
        hi = cur;
        cur = lower;
        i -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            hi *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    let scale = (nu * (0.5 * x).ln() - libm::lgamma(nu + 1.0)).exp() / norm;
    (cur * scale, j1 * scale)
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let phi = 0.5 * nu * PI + FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn mcmahon(nu: f64, m: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (m as f64 + 0.5 * nu - 0.25) * PI;
    let e = 8.0 * beta;
    beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e)
}

fn newton(nu: f64, mut x: f64) -> Option<f64> {
    for _ in 0..60 {
        let (j, j1) = bessel_j_pair(nu, x);
        let d = nu / x * j - j1;
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let step = j / d;
        x -= step;
        if !(x > 0.0) {
            return None;
        }
        if step.abs() <= 2.0 * f64::EPSILON * x {
            let (j, j1) = bessel_j_pair(nu, x);
            let d = nu / x * j - j1;
            return Some(x - j / d);
        }
    }
    None
}

fn bracketed(nu: f64, from: f64) -> Option<f64> {
    let mut lo = from;
    let mut flo = bessel_j(nu, lo);
    let mut hi = lo;
    let mut found = false;
    for _ in 0..400 {
        hi = lo + 0.1;
        let fhi = bessel_j(nu, hi);
        if flo == 0.0 {
            return Some(lo);
        }
        if flo * fhi < 0.0 {
            found = true;
            break;
        }
        lo = hi;
        flo = fhi;
    }
    if !found {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let fm = bessel_j(nu, mid);
        if fm * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    newton(nu, 0.5 * (lo + hi)).or(Some(0.5 * (lo + hi)))
}

/// The first `count` positive zeros j_{ν,1} < j_{ν,2} < … of J_ν.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    if is_half(nu) {
        return Ok((1..=count).map(|m| m as f64 * PI).collect());
    }
    let mut zeros: Vec<f64> = Vec::with_capacity(count);
    let mut prev_slope = 0.0;
    for m in 1..=count {
        let prev = zeros.last().copied().unwrap_or(0.0);
        let seed = if m == 1 && nu > 1.0 {
            nu + 1.855_757_1 * nu.cbrt() + 1.033_150 / nu.cbrt()
        } else if m > 1 && nu > 4.0 && (m as f64) < nu {
            prev + PI
        } else {
            mcmahon(nu, m)
        };
        let accept = |z: f64, prev_slope: f64| -> Option<f64> {
            let slope = bessel_j_deriv(nu, z);
            let spaced = if m == 1 { z > 0.5 } else { z - prev > 2.5 };
            let alternates = m == 1 || slope * prev_slope < 0.0;
            (spaced && alternates && z.is_finite()).then_some(slope)
        };
        let z = match newton(nu, seed).and_then(|z| accept(z, prev_slope).map(|s| (z, s))) {
            Some(found) => found,
            None => {
                let from = if m == 1 { nu.max(0.5) * 0.5 + 0.5 } else { prev + 1.0 };
                let z = bracketed(nu, from).ok_or(Error::BesselZero { nu, index: m })?;
                let s = accept(z, prev_slope).ok_or(Error::BesselZero { nu, index: m })?;
                (z, s)
            }
        };
        prev_slope = z.1;
        zeros.push(z.0);
    }
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an independent arbitrary-precision evaluation
    const NU_A1: f64 = 1.118_033_988_749_894_8;
    const J_REF: &[(f64, f64, f64)] = &[
        (0.0, 1.0, 0.765_197_686_557_966_55),
        (0.0, 10.0, -0.245_935_764_451_348_34),
        (0.0, 30.0, -0.086_367_983_581_040_211),
        (1.0, 2.5, 0.497_094_102_464_274_04),
        (NU_A1, 0.3, 0.112_368_182_397_083_81),
        (NU_A1, 7.0, -0.055_199_460_601_118_635),
        (NU_A1, 40.0, 0.122_904_744_796_886_64),
        (0.25, 1.9, 0.446_667_267_609_628_77),
        (0.25, 2.1, 0.347_521_170_916_126_91),
        (0.25, 24.9, 0.024_871_955_158_506_961),
        (0.25, 25.1, 0.055_535_682_550_094_224),
        (1.5, 0.01, 2.659_588_606_619_177_3e-4),
        (2.5, 12.0, 0.072_422_673_831_809_522),
    ];

    #[test]
    fn values_match_reference() {
        for &(nu, x, want) in J_REF {
            let got = bessel_j(nu, x);
            assert!((got - want).abs() < 1e-14, "J_{nu}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn regimes_agree_at_switch_points() {
        for &nu in &[0.0, 0.25, NU_A1, 1.5] {
            let m = miller(nu, SERIES_LIMIT);
            assert!((series(nu, SERIES_LIMIT) - m.0).abs() < 1e-15, "nu={nu}");
            assert!((series(nu + 1.0, SERIES_LIMIT) - m.1).abs() < 1e-15, "nu={nu}");
            let x = asymptotic_limit(nu + 1.0);
            let m = miller(nu, x);
            assert!((hankel(nu, x) - m.0).abs() < 1e-14, "nu={nu}");
            assert!((hankel(nu + 1.0, x) - m.1).abs() < 1e-14, "nu={nu}");
        }
    }

    #[test]
    fn zeros_match_reference() {
        let z0 = bessel_zeros(0.0, 3).unwrap();
        for (got, want) in z0.iter().zip([2.404_825_557_695_773, 5.520_078_110_286_311, 8.653_727_912_911_013]) {
            assert!((got - want).abs() < 1e-13);
        }
        let z = bessel_zeros(0.25, 3).unwrap();
        for (got, want) in z.iter().zip([2.780_887_723_994_977_6, 5.906_142_698_842_492_3, 9.042_383_663_583_260_4]) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
        let z = bessel_zeros(NU_A1, 1).unwrap();
        assert!((z[0] - 3.990_051_807_492_714_7).abs() < 1e-13, "{}", z[0]);
    }

    #[test]
    fn zeros_are_roots_and_sorted() {
        for &nu in &[0.0, 0.25, NU_A1, 1.5, 7.3] {
            let z = bessel_zeros(nu, 600).unwrap();
            for pair in z.windows(2) {
                assert!(pair[1] > pair[0] + 2.5);
            }
            for &x in &z {
                let slope = bessel_j_deriv(nu, x).abs();
                assert!(bessel_j(nu, x).abs() <= 4.0 * f64::EPSILON * x.max(1.0) * slope.max(1e-3));
            }
        }
    }

    #[test]
    fn half_order_is_sine() {
        let z = bessel_zeros(0.5, 5).unwrap();
        assert_eq!(z[4], 5.0 * PI);
        let x = 3.7_f64;
        let want = (2.0 / (PI * x)).sqrt() * x.sin();
        assert!((bessel_j(0.5, x) - want).abs() < 1e-16);
    }
}
