//! Free-space 2D Green functions and lossless point-scatterer polarizability.
//!
//! Conventions:
//! - `TM`: electric field out of the plane, scalar Green function
//!   `g(rho) = (i/4) H0(k rho)`, solving `(lap + k^2) g = -delta`.
//! - `TE`: electric field in the plane, dyadic `(I + grad grad / k^2) g`.
//! - `mu0 omega^2 = 1`: the source-to-field prefactor is absorbed into the
//!   reduced units, so `E = G p` and the Foldy-Lax coupling is `alpha G0`.
//!   Absolute powers are therefore only meaningful relative to each other.
//!
//! Internally every Green block is a 2x2 complex matrix; in TM only the
//! `(0, 0)` entry is populated and orientations embed as `(1, 0)`, which lets
//! the solver and projections treat both modes with the same code.

use nalgebra::{Matrix2, Unit, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{bessel_j01, hankel01, j1_over_x};

pub type Vec2 = Vector2<f64>;
pub type Dir2 = Unit<Vector2<f64>>;
pub type CVec2 = Vector2<Complex64>;
pub type CMat2 = Matrix2<Complex64>;

/// Separations with `k * rho` below this are treated as coincident points.
pub const COINCIDENCE_KRHO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolMode {
    /// Out-of-plane electric field, scalar Green function.
    #[serde(rename = "TM")]
    Tm,
    /// In-plane electric field, 2x2 tensor Green function.
    #[serde(rename = "TE")]
    Te,
}

impl PolMode {
    /// Number of field components per point (1 for TM, 2 for TE).
    pub fn dim(self) -> usize {
        match self {
            PolMode::Tm => 1,
            PolMode::Te => 2,
        }
    }

    /// Orientation as it enters the 2x2 block algebra. TM ignores `u`.
    pub fn embed(self, u: &Dir2) -> Vec2 {
        match self {
            PolMode::Tm => Vec2::new(1.0, 0.0),
            PolMode::Te => u.into_inner(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolMode::Tm => "TM",
            PolMode::Te => "TE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenValue {
    Scalar(Complex64),
    Tensor(CMat2),
}

impl GreenValue {
    pub fn mode(&self) -> PolMode {
        match self {
            GreenValue::Scalar(_) => PolMode::Tm,
            GreenValue::Tensor(_) => PolMode::Te,
        }
    }

    pub(crate) fn from_block(mode: PolMode, block: CMat2) -> Self {
        match mode {
            PolMode::Tm => GreenValue::Scalar(block[(0, 0)]),
            PolMode::Te => GreenValue::Tensor(block),
        }
    }

    /// The value as a 2x2 block (TM occupies the `(0, 0)` entry).
    pub fn block(&self) -> CMat2 {
        match *self {
            GreenValue::Scalar(g) => {
                let mut m = CMat2::zeros();
                m[(0, 0)] = g;
                m
            }
            GreenValue::Tensor(m) => m,
        }
    }

    pub fn transpose(&self) -> Self {
        match *self {
            GreenValue::Scalar(g) => GreenValue::Scalar(g),
            GreenValue::Tensor(m) => GreenValue::Tensor(m.transpose()),
        }
    }

    /// `e . G . u` (orientations ignored in TM).
    pub fn project(&self, e: &Dir2, u: &Dir2) -> Complex64 {
        let mode = self.mode();
        project_block(&self.block(), &mode.embed(e), &mode.embed(u))
    }

    /// Largest entry modulus, used for relative comparisons.
    pub fn max_abs(&self) -> f64 {
        self.block().iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &GreenValue) -> f64 {
        (self.block() - other.block()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

pub(crate) fn project_block(g: &CMat2, e: &Vec2, u: &Vec2) -> Complex64 {
    let gu = g * u.map(Complex64::from);
    gu[0] * e[0] + gu[1] * e[1]
}

/// Dressed point-scatterer polarizability in reduced units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarizability {
    pub alpha_bare: f64,
    pub alpha: Complex64,
}

/// Free-space Green function between two distinct points.
pub fn green0(mode: PolMode, k: f64, r: &Vec2, rp: &Vec2) -> Result<GreenValue> {
    check_k(k)?;
    Ok(GreenValue::from_block(mode, green0_block(mode, k, r, rp)?))
}

pub(crate) fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("wavenumber must be positive, got {k}")))
    }
}

pub(crate) fn green0_block(mode: PolMode, k: f64, r: &Vec2, rp: &Vec2) -> Result<CMat2> {
    let d = r - rp;
    let rho = d.norm();
    let x = k * rho;
    if x < COINCIDENCE_KRHO {
        return Err(Error::Geometry(
            "free-space Green function evaluated at coincident points; use the coincident imaginary part".into(),
        ));
    }
    let [h0, h1] = hankel01(x)?;
    let quarter_i = Complex64::new(0.0, 0.25);
    let mut m = CMat2::zeros();
    match mode {
        PolMode::Tm => m[(0, 0)] = quarter_i * h0.h1,
        PolMode::Te => {
            let h1x = h1.h1 / x;
            let iso = quarter_i * (h0.h1 - h1x);
            let aniso = quarter_i * (2.0 * h1x - h0.h1);
            let (ux, uy) = (d[0] / rho, d[1] / rho);
            m[(0, 0)] = iso + aniso * (ux * ux);
            m[(1, 1)] = iso + aniso * (uy * uy);
            m[(0, 1)] = aniso * (ux * uy);
            m[(1, 0)] = m[(0, 1)];
        }
    }
    Ok(m)
}

/// `Im G0(r, rp)`, finite and continuous through `r = rp`.
pub fn green0_im(mode: PolMode, k: f64, r: &Vec2, rp: &Vec2) -> nalgebra::Matrix2<f64> {
    let d = r - rp;
    let rho = d.norm();
    let x = k * rho;
    let mut m = nalgebra::Matrix2::zeros();
    match mode {
        PolMode::Tm => m[(0, 0)] = 0.25 * bessel_j01(x).0,
        PolMode::Te => {
            let j0 = bessel_j01(x).0;
            let j1x = j1_over_x(x);
            let iso = 0.25 * (j0 - j1x);
            let aniso = 0.25 * (2.0 * j1x - j0);
            let (ux, uy) = if rho > 0.0 { (d[0] / rho, d[1] / rho) } else { (1.0, 0.0) };
            m[(0, 0)] = iso + aniso * ux * ux;
            m[(1, 1)] = iso + aniso * uy * uy;
            m[(0, 1)] = aniso * ux * uy;
            m[(1, 0)] = m[(0, 1)];
        }
    }
    m
}

/// Diagonal value of `Im G0(r, r)`: 1/4 in TM, 1/8 per in-plane component
/// in TE (off-diagonal components vanish by isotropy).
pub fn green0_im_coincident(mode: PolMode) -> f64 {
    match mode {
        PolMode::Tm => 0.25,
        PolMode::Te => 0.125,
    }
}

/// Applies the exact radiative correction so the scatterer is lossless:
/// `1/alpha = 1/alpha_bare - i Im G0(r, r)`.
pub fn dress_polarizability(alpha_bare: f64, mode: PolMode, k: f64) -> Result<Polarizability> {
    check_k(k)?;
    if alpha_bare == 0.0 || !alpha_bare.is_finite() {
        return Err(Error::DegenerateScatterer);
    }
    let im_g = green0_im_coincident(mode);
    let alpha = Complex64::from(alpha_bare) / Complex64::new(1.0, -im_g * alpha_bare);
    Ok(Polarizability { alpha_bare, alpha })
}

/// Bare polarizability whose dressed value has scattering cross-section
/// `sigma` (units of length) at wavenumber `k`. Inverts
/// `sigma = |alpha|^2 Im G0(r, r) / k`, taking the positive root.
pub fn alpha_bare_for_cross_section(sigma: f64, mode: PolMode, k: f64) -> Result<f64> {
    check_k(k)?;
    let g = green0_im_coincident(mode);
    // |alpha|^2 = a^2 / (1 + g^2 a^2) must equal sigma k / g
    let target = sigma * k / g;
    let denom = 1.0 - g * g * target;
    if !(sigma > 0.0) || denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cross-section {sigma} not reachable by a lossless point scatterer (maximum {})",
            1.0 / (g * k)
        )));
    }
    Ok((target / denom).sqrt())
}
