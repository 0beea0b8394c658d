//! Cylindrical Bessel and Hankel functions of orders 0 and 1 for real
//! positive arguments.
//!
//! Three evaluation regimes are used, all producing both orders at once:
//!
//! | range              | method                                            |
//! |--------------------|---------------------------------------------------|
//! | `x < 8`            | ascending power series (with logarithmic terms for `Y`) |
//! | `8 <= x < 25`      | Steed's method: continued fractions CF1 and CF2   |
//! | `x >= 25`          | Hankel asymptotic expansion                      |
//!
//! The power series loses roughly two digits to cancellation at the top of
//! its range; the asymptotic series reaches its smallest term near
//! `exp(-2x)`, so it only attains full double precision well above `x = 16`.
//! The continued-fraction regime bridges the two.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, PI};

use num_complex::Complex64;
use thiserror::Error;

/// Upper end of the power-series regime.
pub const SERIES_CROSSOVER: f64 = 8.0;
/// Lower end of the asymptotic regime.
pub const ASYMPTOTIC_CROSSOVER: f64 = 25.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument must be positive and finite, got {0}")]
    Domain(f64),
    #[error("unsupported Bessel order {0}; only orders 0 and 1 are implemented")]
    UnsupportedOrder(u32),
}

/// `J_n(x)`, `Y_n(x)` and `H_n^(1)(x) = J_n(x) + i Y_n(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylFnValue {
    pub j: f64,
    pub y: f64,
    pub h1: Complex64,
}

impl CylFnValue {
    fn new(j: f64, y: f64) -> Self {
        Self { j, y, h1: Complex64::new(j, y) }
    }
}

/// Hankel function of the first kind `H_order^(1)(x)` together with its
/// real and imaginary parts.
pub fn hankel1(order: u32, x: f64) -> Result<CylFnValue, SpecFunError> {
    if order > 1 {
        return Err(SpecFunError::UnsupportedOrder(order));
    }
    let [h0, h1] = hankel01(x)?;
    Ok(if order == 0 { h0 } else { h1 })
}

/// Orders 0 and 1 evaluated together (every regime yields both for the
/// price of one).
pub fn hankel01(x: f64) -> Result<[CylFnValue; 2], SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain(x));
    }
    let v = if x < SERIES_CROSSOVER {
        series(x)
    } else if x < ASYMPTOTIC_CROSSOVER {
        steed(x)
    } else {
        asymptotic(x)
    };
    Ok([CylFnValue::new(v.j0, v.y0), CylFnValue::new(v.j1, v.y1)])
}

/// `J_0(x)` and `J_1(x)` for `x >= 0`, including the origin where
/// `J_0 = 1` and `J_1 = 0`.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (1.0, 0.0);
    }
    let x = x.abs();
    if x < SERIES_CROSSOVER {
        series_j(x)
    } else if x < ASYMPTOTIC_CROSSOVER {
        let v = steed(x);
        (v.j0, v.j1)
    } else {
        let v = asymptotic(x);
        (v.j0, v.j1)
    }
}

/// `J_1(x)/x` for `x >= 0`, finite at the origin (limit 1/2).
pub fn j1_over_x(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // J1(x)/x = 1/2 - x^2/16 + x^4/384 - ...
        let t = x * x;
        0.5 - t / 16.0 + t * t / 384.0
    } else {
        bessel_j01(x).1 / x
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Quad {
    pub j0: f64,
    pub y0: f64,
    pub j1: f64,
    pub y1: f64,
}

fn series_j(x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let t = half * half;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    let mut a0 = 1.0; // (-t)^m / (m!)^2
    let mut a1 = 1.0; // (-t)^m / (m! (m+1)!)
    for m in 0..80 {
        j0 += a0;
        j1 += a1;
        let mf = m as f64;
        a0 *= -t / ((mf + 1.0) * (mf + 1.0));
        a1 *= -t / ((mf + 1.0) * (mf + 2.0));
        if a0.abs() < 1e-18 * j0.abs().max(1e-300) && a1.abs() < 1e-18 * j1.abs().max(1e-300) {
            break;
        }
    }
    (j0, half * j1)
}

pub(crate) fn series(x: f64) -> Quad {
    let half = 0.5 * x;
    let t = half * half;
    let mut j0 = 0.0;
    let mut j1s = 0.0;
    let mut y0s = 0.0;
    let mut y1s = 0.0;
    let mut a0 = 1.0;
    let mut a1 = 1.0;
    let mut harmonic = 0.0; // H_m
    for m in 0..80 {
        let mf = m as f64;
        let harmonic_next = harmonic + 1.0 / (mf + 1.0);
        j0 += a0;
        j1s += a1;
        // sum_{m>=1} (-1)^{m+1} H_m t^m/(m!)^2 == -sum H_m a0
        y0s -= harmonic * a0;
        // psi(m+1) + psi(m+2) = H_m + H_{m+1} - 2 gamma
        y1s += (harmonic + harmonic_next - 2.0 * EULER_GAMMA) * a1;
        a0 *= -t / ((mf + 1.0) * (mf + 1.0));
        a1 *= -t / ((mf + 1.0) * (mf + 2.0));
        harmonic = harmonic_next;
        if m > 2
            && a0.abs() * (1.0 + harmonic) < 1e-18 * j0.abs().max(1e-300)
            && a1.abs() * (1.0 + harmonic) < 1e-18 * j1s.abs().max(1e-300)
        {
            break;
        }
    }
    let j1 = half * j1s;
    let log_half = half.ln();
    let y0 = FRAC_2_PI * ((log_half + EULER_GAMMA) * j0 + y0s);
    let y1 = -FRAC_2_PI / x + FRAC_2_PI * log_half * j1 - half * y1s / PI;
    Quad { j0, y0, j1, y1 }
}

/// Steed's method for order zero (CF1 for `J0'/J0`, complex CF2 for
/// `(J0' + i Y0')/(J0 + i Y0)`), normalized with the Wronskian. Valid for
/// `x >= 2`; the iteration count of CF1 grows linearly with `x`.
pub(crate) fn steed(x: f64) -> Quad {
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;
    const MAXIT: usize = 100_000;

    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1
    let mut isign = 1.0;
    let mut h = FPMIN;
    let mut b = 0.0;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    let rjl = isign * FPMIN;
    let rjpl = h * rjl;
    let f = rjpl / rjl;

    // CF2
    let mut a = 0.25;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..MAXIT {
        a += 2.0 * (i as f64 - 1.0);
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }

    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    let rymu = rjmu * gam;
    let rymup = rymu * (p + q / gam);
    let scale = rjmu / rjl;
    let j0 = rjl * scale;
    let j0p = rjpl * scale;
    Quad { j0, y0: rymu, j1: -j0p, y1: -rymup }
}

/// Hankel asymptotic expansion, summed until the terms stop decreasing or
/// drop below double precision.
pub(crate) fn asymptotic(x: f64) -> Quad {
    let (p0, q0) = asymptotic_pq(0.0, x);
    let (p1, q1) = asymptotic_pq(4.0, x);
    let (s, c) = x.sin_cos();
    // chi_0 = x - pi/4, chi_1 = x - 3 pi/4
    let cos0 = (c + s) * FRAC_1_SQRT_2;
    let sin0 = (s - c) * FRAC_1_SQRT_2;
    let cos1 = sin0;
    let sin1 = -cos0;
    let amp = (FRAC_2_PI / x).sqrt();
    Quad {
        j0: amp * (p0 * cos0 - q0 * sin0),
        y0: amp * (p0 * sin0 + q0 * cos0),
        j1: amp * (p1 * cos1 - q1 * sin1),
        y1: amp * (p1 * sin1 + q1 * cos1),
    }
}

fn asymptotic_pq(mu: f64, x: f64) -> (f64, f64) {
    let eight_x = 8.0 * x;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..200 {
        let kf = k as f64;
        if term.abs() > last {
            break;
        }
        // term_k = prod_{j<k} (mu - (2j+1)^2) / (k! (8x)^k)
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        let odd = 2.0 * kf + 1.0;
        term *= (mu - odd * odd) / ((kf + 1.0) * eight_x);
    }
    (p, q)
}
