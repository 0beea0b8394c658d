//! Photodetection statistics of two independent single-photon emitters.
//!
//! Local detection uses the projected couplings
//! `G_ai = e_a . G(r_a, r_i) . u_i`; detection integrated over all output
//! channels reduces (for a lossless medium) to imaginary parts of the
//! Green function at the emitters, `Im G_jk = u_j . Im G(r_j, r_k) . u_k`.
//! All quantities are in reduced units (`mu0 omega^2 = omega = 1`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::em2d::{Dir2, PolMode, Vec2};
use crate::error::{Error, Result};
use crate::solver::{SourceField, SystemFactorization};

/// Default thresholds for superradiant / subradiant classification.
pub const DEFAULT_TOL_SUPER: f64 = 0.05;
pub const DEFAULT_TOL_SUB: f64 = 0.05;

/// Two emitters sharing one transition frequency (that of the medium).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterPair {
    pub r1: Vec2,
    pub r2: Vec2,
    pub u1: Dir2,
    pub u2: Dir2,
    pub p1: Complex64,
    pub p2: Complex64,
}

impl EmitterPair {
    pub fn validate(&self) -> Result<()> {
        if self.p1 == Complex64::new(0.0, 0.0) && self.p2 == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidParameter("both dipole amplitudes are zero".into()));
        }
        if !(self.p1.is_finite() && self.p2.is_finite()) {
            return Err(Error::InvalidParameter("non-finite dipole amplitude".into()));
        }
        Ok(())
    }

    fn sources<'a>(&self, fact: &'a SystemFactorization) -> Result<(SourceField<'a>, SourceField<'a>)> {
        self.validate()?;
        Ok((fact.source(&self.r1, &self.u1)?, fact.source(&self.r2, &self.u2)?))
    }
}

/// Point detector selecting the field component along `e` (ignored in TM).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub r: Vec2,
    pub e: Dir2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Superradiant,
    Subradiant,
    Intermediate,
}

impl Classification {
    pub fn from_g2(g2: f64, tol_super: f64, tol_sub: f64) -> Self {
        if 1.0 - g2 <= tol_super {
            Classification::Superradiant
        } else if g2 <= tol_sub {
            Classification::Subradiant
        } else {
            Classification::Intermediate
        }
    }

    /// Raster code: +1 superradiant, -1 subradiant, 0 intermediate.
    pub fn code(self) -> f64 {
        match self {
            Classification::Superradiant => 1.0,
            Classification::Subradiant => -1.0,
            Classification::Intermediate => 0.0,
        }
    }
}

/// Projected couplings between detectors `a`, `b` and emitters 1, 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
}

impl Couplings {
    pub fn compute(fact: &SystemFactorization, em: &EmitterPair, da: &Detector, db: &Detector) -> Result<Self> {
        let (s1, s2) = em.sources(fact)?;
        Self::from_sources(&s1, &s2, da, db)
    }

    pub fn from_sources(s1: &SourceField<'_>, s2: &SourceField<'_>, da: &Detector, db: &Detector) -> Result<Self> {
        Ok(Couplings {
            a1: s1.projected(&da.r, &da.e)?,
            a2: s2.projected(&da.r, &da.e)?,
            b1: s1.projected(&db.r, &db.e)?,
            b2: s2.projected(&db.r, &db.e)?,
        })
    }
}

/// Single-detection signals `<Phi_1>` at `a` and `b` for the state `|ee>`.
fn single_rates(p1: Complex64, p2: Complex64, c: &Couplings) -> (f64, f64) {
    let ia = (p1 * c.a1).norm_sqr() + (p2 * c.a2).norm_sqr();
    let ib = (p1 * c.b1).norm_sqr() + (p2 * c.b2).norm_sqr();
    (ia, ib)
}

/// Normalized double-detection correlation from its defining ratio.
pub fn g2_from_couplings(p1: Complex64, p2: Complex64, c: &Couplings) -> Result<f64> {
    let (ia, ib) = single_rates(p1, p2, c);
    let denom = ia * ib;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::UndefinedCorrelation("both emitters are dark at one of the detectors".into()));
    }
    let amp = c.a1 * c.b2 + c.a2 * c.b1;
    Ok((p1 * p2).norm_sqr() * amp.norm_sqr() / denom)
}

/// `g2` for detectors `da`, `db`.
pub fn g2_detectors(fact: &SystemFactorization, em: &EmitterPair, da: &Detector, db: &Detector) -> Result<f64> {
    let c = Couplings::compute(fact, em, da, db)?;
    g2_from_couplings(em.p1, em.p2, &c)
}

/// Emitter state after one photon is detected at `a`: coefficients of
/// `|ge>` (emitter 1 de-excited) and `|eg>`.
pub fn projected_state_from_couplings(
    p1: Complex64,
    p2: Complex64,
    a1: Complex64,
    a2: Complex64,
) -> Result<(Complex64, Complex64)> {
    let x = p1 * a1;
    let y = p2 * a2;
    let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::UndefinedProjection);
    }
    Ok((x / norm, y / norm))
}

pub fn projected_state(fact: &SystemFactorization, em: &EmitterPair, da: &Detector) -> Result<(Complex64, Complex64)> {
    let (s1, s2) = em.sources(fact)?;
    projected_state_from_couplings(em.p1, em.p2, s1.projected(&da.r, &da.e)?, s2.projected(&da.r, &da.e)?)
}

/// `g2` as the ratio of the detection rate at `b` in the projected state to
/// the rate at `b` in `|ee>`. A second route to the same number.
pub fn g2_conditional(p1: Complex64, p2: Complex64, c: &Couplings) -> Result<f64> {
    let (c_ge, c_eg) = projected_state_from_couplings(p1, p2, c.a1, c.a2)?;
    // E_b |ge> = p2 G_b2 |gg>, E_b |eg> = p1 G_b1 |gg>
    let after = (c_ge * p2 * c.b2 + c_eg * p1 * c.b1).norm_sqr();
    let before = (p1 * c.b1).norm_sqr() + (p2 * c.b2).norm_sqr();
    if !(before > 0.0) {
        return Err(Error::UndefinedCorrelation("both emitters are dark at detector b".into()));
    }
    Ok(after / before)
}

/// Distances from the superradiance (amplitude, phase) and subradiance
/// conditions. All three vanish when the corresponding condition holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionResiduals {
    /// `| |p1|^2 |Ga1 Gb1| - |p2|^2 |Ga2 Gb2| |`, normalized by the sum.
    pub amplitude: f64,
    /// `|arg(Ga1 Gb2) - arg(Ga2 Gb1)|` wrapped to `[0, pi]`.
    pub phase: f64,
    /// `|Ga1 Gb2 + Ga2 Gb1| / (|Ga1 Gb2| + |Ga2 Gb1|)`.
    pub subradiance: f64,
}

pub fn condition_residuals_from_couplings(p1: Complex64, p2: Complex64, c: &Couplings) -> Result<ConditionResiduals> {
    let w1 = p1.norm_sqr() * (c.a1 * c.b1).norm();
    let w2 = p2.norm_sqr() * (c.a2 * c.b2).norm();
    let direct = c.a1 * c.b2;
    let crossed = c.a2 * c.b1;
    let scale = direct.norm() + crossed.norm();
    if !(w1 + w2 > 0.0) || !(scale > 0.0) {
        return Err(Error::UndefinedCorrelation("vanishing detection amplitudes".into()));
    }
    // principal value of the phase difference
    let phase = (direct * crossed.conj()).arg().abs();
    Ok(ConditionResiduals {
        amplitude: (w1 - w2).abs() / (w1 + w2),
        phase,
        subradiance: (direct + crossed).norm() / scale,
    })
}

pub fn condition_residuals(
    fact: &SystemFactorization,
    em: &EmitterPair,
    da: &Detector,
    db: &Detector,
) -> Result<ConditionResiduals> {
    let c = Couplings::compute(fact, em, da, db)?;
    // same preconditions as g2
    g2_from_couplings(em.p1, em.p2, &c)?;
    condition_residuals_from_couplings(em.p1, em.p2, &c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    pub g2: f64,
    pub amplitude_residual: f64,
    pub phase_residual: f64,
    pub subradiance_residual: f64,
    /// Coefficients of `|ge>` and `|eg>` after a detection at `a`.
    pub projected_amplitudes: (Complex64, Complex64),
    pub classification: Classification,
}

pub fn coherence_report(
    fact: &SystemFactorization,
    em: &EmitterPair,
    da: &Detector,
    db: &Detector,
    tol_super: f64,
    tol_sub: f64,
) -> Result<CoherenceReport> {
    let c = Couplings::compute(fact, em, da, db)?;
    let g2 = g2_from_couplings(em.p1, em.p2, &c)?;
    let res = condition_residuals_from_couplings(em.p1, em.p2, &c)?;
    Ok(CoherenceReport {
        g2,
        amplitude_residual: res.amplitude,
        phase_residual: res.phase,
        subradiance_residual: res.subradiance,
        projected_amplitudes: projected_state_from_couplings(em.p1, em.p2, c.a1, c.a2)?,
        classification: Classification::from_g2(g2, tol_super, tol_sub),
    })
}

/// Projected imaginary parts of the Green function at the two emitters:
/// LDOS-like `Im G11`, `Im G22` and CDOS-like `Im G12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOfStates {
    pub im_g11: f64,
    pub im_g22: f64,
    pub im_g12: f64,
}

impl DensityOfStates {
    pub fn compute(fact: &SystemFactorization, em: &EmitterPair) -> Result<Self> {
        let (s1, s2) = em.sources(fact)?;
        Self::from_sources(&s1, &s2, &em.u1, &em.u2)
    }

    pub fn from_sources(s1: &SourceField<'_>, s2: &SourceField<'_>, u1: &Dir2, u2: &Dir2) -> Result<Self> {
        let r1 = s1.origin();
        let r2 = s2.origin();
        Ok(DensityOfStates {
            im_g11: s1.im_projected(&r1, u1)?,
            im_g22: s2.im_projected(&r2, u2)?,
            im_g12: s2.im_projected(&r1, u1)?,
        })
    }

    /// `sqrt(Im G11 Im G22) - |Im G12|`; nonnegative in a lossless medium.
    pub fn cdos_bound_residual(&self) -> f64 {
        (self.im_g11 * self.im_g22).max(0.0).sqrt() - self.im_g12.abs()
    }
}

/// Channel-integrated single- and double-detection probabilities and their
/// normalized ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedDetection {
    pub p1: f64,
    pub p2: f64,
    pub big_g2: f64,
}

pub fn integrated_from_dos(p1: Complex64, p2: Complex64, dos: &DensityOfStates) -> Result<IntegratedDetection> {
    let w1 = p1.norm_sqr() * dos.im_g11;
    let w2 = p2.norm_sqr() * dos.im_g22;
    let sum = w1 + w2;
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::UndefinedCorrelation("total emitted power vanishes".into()));
    }
    let pp = (p1 * p2).norm_sqr();
    let cross = dos.im_g11 * dos.im_g22 + dos.im_g12 * dos.im_g12;
    Ok(IntegratedDetection { p1: 0.5 * sum, p2: 0.5 * pp * cross, big_g2: 2.0 * pp * cross / (sum * sum) })
}

pub fn integrated(fact: &SystemFactorization, em: &EmitterPair) -> Result<IntegratedDetection> {
    integrated_from_dos(em.p1, em.p2, &DensityOfStates::compute(fact, em)?)
}

/// Correlation factor for detection integrated over all output channels.
pub fn big_g2(fact: &SystemFactorization, em: &EmitterPair) -> Result<f64> {
    Ok(integrated(fact, em)?.big_g2)
}

pub fn p1_integrated(fact: &SystemFactorization, em: &EmitterPair) -> Result<f64> {
    Ok(integrated(fact, em)?.p1)
}

pub fn p2_integrated(fact: &SystemFactorization, em: &EmitterPair) -> Result<f64> {
    Ok(integrated(fact, em)?.p2)
}

pub fn cdos_bound_residual(fact: &SystemFactorization, r1: &Vec2, r2: &Vec2, u1: &Dir2, u2: &Dir2) -> Result<f64> {
    let s1 = fact.source(r1, u1)?;
    let s2 = fact.source(r2, u2)?;
    Ok(DensityOfStates::from_sources(&s1, &s2, u1, u2)?.cdos_bound_residual())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionClass {
    pub classification: Classification,
    pub big_g2: f64,
    /// `| |p1|^2 Im G11 - |p2|^2 Im G22 |` (equal emissive powers).
    pub power_imbalance: f64,
    /// `Im G11 Im G22 - (Im G12)^2` (maximal cross density of states).
    pub cdos_deficit: f64,
}

pub fn classify_from_dos(
    p1: Complex64,
    p2: Complex64,
    dos: &DensityOfStates,
    tol_super: f64,
    tol_sub: f64,
) -> Result<EmissionClass> {
    let g = integrated_from_dos(p1, p2, dos)?.big_g2;
    Ok(EmissionClass {
        classification: Classification::from_g2(g, tol_super, tol_sub),
        big_g2: g,
        power_imbalance: (p1.norm_sqr() * dos.im_g11 - p2.norm_sqr() * dos.im_g22).abs(),
        cdos_deficit: dos.im_g11 * dos.im_g22 - dos.im_g12 * dos.im_g12,
    })
}

pub fn classify_emission(
    fact: &SystemFactorization,
    em: &EmitterPair,
    tol_super: f64,
    tol_sub: f64,
) -> Result<EmissionClass> {
    classify_from_dos(em.p1, em.p2, &DensityOfStates::compute(fact, em)?, tol_super, tol_sub)
}

/// Which detection probability to integrate numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOrder {
    Single,
    Double,
}

/// Trapezoidal far-field integration of the detection probabilities over a
/// circle of `radius` centered at the origin, summing the scalar (TM) or
/// the radial and tangential polarizations (TE). The flux normalization is
/// `k/2` per detection, which makes the result directly comparable with
/// [`p1_integrated`] and [`p2_integrated`]. The double integral runs over
/// all `n_angles^2` angle pairs.
pub fn farfield_power_check(
    fact: &SystemFactorization,
    em: &EmitterPair,
    order: DetectionOrder,
    radius: f64,
    n_angles: usize,
) -> Result<f64> {
    let k = fact.k();
    if !(k * radius >= 1e3) {
        return Err(Error::FarFieldValidity(format!("k * radius = {} is below 1e3", k * radius)));
    }
    if n_angles < 8 {
        return Err(Error::FarFieldValidity(format!("{n_angles} angles is too few")));
    }
    let half = 0.5 * radius;
    let inside = fact.medium().positions().chain([em.r1, em.r2]).all(|p| p.norm() < half);
    if !inside {
        return Err(Error::FarFieldValidity(
            "all scatterers and emitters must lie within half the integration radius".into(),
        ));
    }
    let (s1, s2) = em.sources(fact)?;

    // (G_1, G_2) per sample, where a sample is an (angle, polarization) pair
    let mut samples: Vec<(Complex64, Complex64)> = Vec::with_capacity(2 * n_angles);
    for i in 0..n_angles {
        let theta = 2.0 * PI * i as f64 / n_angles as f64;
        let (s, c) = theta.sin_cos();
        let r = Vec2::new(radius * c, radius * s);
        let f1 = s1.field(&r)?;
        let f2 = s2.field(&r)?;
        match fact.mode() {
            PolMode::Tm => samples.push((f1[0], f2[0])),
            PolMode::Te => {
                for e in [Vec2::new(c, s), Vec2::new(-s, c)] {
                    samples.push((f1[0] * e[0] + f1[1] * e[1], f2[0] * e[0] + f2[1] * e[1]));
                }
            }
        }
    }
    let weight = 0.5 * k * 2.0 * PI * radius / n_angles as f64;
    let (p1, p2) = (em.p1, em.p2);
    Ok(match order {
        DetectionOrder::Single => {
            weight * samples.iter().map(|(g1, g2)| (p1 * g1).norm_sqr() + (p2 * g2).norm_sqr()).sum::<f64>()
        }
        DetectionOrder::Double => {
            let pp = (p1 * p2).norm_sqr();
            let mut total = 0.0;
            for (ga1, ga2) in &samples {
                let mut row = 0.0;
                for (gb1, gb2) in &samples {
                    row += (ga1 * gb2 + ga2 * gb1).norm_sqr();
                }
                total += row;
            }
            weight * weight * pp * total
        }
    })
}
