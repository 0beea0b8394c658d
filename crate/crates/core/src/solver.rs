//! Foldy-Lax coupled-dipole solution for the Green function of a medium of
//! point scatterers.
//!
//! The exciting field at scatterer `j` for a source at `rp` satisfies
//!
//! ```text
//! X_j - sum_{m != j} G0(r_j, r_m) alpha_m X_m = G0(r_j, rp)
//! ```
//!
//! and the total Green function is
//! `G(r, rp) = G0(r, rp) + sum_j G0(r, r_j) alpha_j X_j`.
//! The interaction matrix only depends on the scatterers, so it is factored
//! once (partial-pivoting LU) and reused for every source point.

use log::warn;
use nalgebra::{DMatrix, Dyn, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::em2d::{
    self, green0_block, green0_im, CMat2, CVec2, Dir2, GreenValue, PolMode, Polarizability, Vec2, COINCIDENCE_KRHO,
};
use crate::error::{Error, Result};

/// Condition estimates above this are logged as a warning.
pub const CONDITION_WARN: f64 = 1e12;
/// Condition estimates above this (about 1/eps) are reported as singular.
pub const CONDITION_SINGULAR: f64 = 1.0 / f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: [f64; 2],
    pub pol: Polarizability,
}

impl Scatterer {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.position[0], self.position[1])
    }
}

/// Axis-aligned rectangle `[x0, x0 + width] x [y0, y0 + height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn centered(width: f64, height: f64) -> Self {
        Rect { x0: -0.5 * width, y0: -0.5 * height, width, height }
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p[0] >= self.x0 && p[0] <= self.x0 + self.width && p[1] >= self.y0 && p[1] <= self.y0 + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// How a medium was produced; carried along for provenance headers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MediumMetadata {
    pub seed: Option<u64>,
    pub region: Option<Rect>,
    pub exclusion_radius: Option<f64>,
    pub wavelength: Option<f64>,
}

/// Point scatterers embedded in free space at wavenumber `k`.
///
/// Lengths are in whatever unit `k` is expressed in; the command-line tool
/// uses wavelengths (`k = 2 pi`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medium2D {
    pub k: f64,
    pub mode: PolMode,
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub metadata: MediumMetadata,
}

impl Medium2D {
    pub fn free_space(mode: PolMode, k: f64) -> Self {
        Medium2D { k, mode, scatterers: Vec::new(), metadata: MediumMetadata::default() }
    }

    /// Adds a scatterer with the lossless dressed polarizability.
    pub fn with_scatterer(mut self, position: Vec2, alpha_bare: f64) -> Result<Self> {
        let pol = em2d::dress_polarizability(alpha_bare, self.mode, self.k)?;
        self.scatterers.push(Scatterer { position: [position[0], position[1]], pol });
        Ok(self)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.scatterers.iter().map(Scatterer::pos)
    }

    /// Rejects points that coincide with a scatterer.
    pub fn check_point(&self, r: &Vec2) -> Result<()> {
        for (j, s) in self.scatterers.iter().enumerate() {
            if self.k * (r - s.pos()).norm() < COINCIDENCE_KRHO {
                return Err(Error::Geometry(format!(
                    "evaluation point ({}, {}) coincides with scatterer {j}",
                    r[0], r[1]
                )));
            }
        }
        Ok(())
    }
}

/// Factored Foldy-Lax interaction matrix. Immutable; shareable across
/// threads for concurrent solves.
pub struct SystemFactorization {
    medium: Medium2D,
    lu: Option<LU<Complex64, Dyn, Dyn>>,
    condition: f64,
}

impl std::fmt::Debug for SystemFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemFactorization")
            .field("n_scatterers", &self.medium.scatterers.len())
            .field("mode", &self.medium.mode)
            .field("condition", &self.condition)
            .finish()
    }
}

impl SystemFactorization {
    /// Builds and factors the interaction matrix of `medium`.
    pub fn assemble(medium: Medium2D) -> Result<Self> {
        em2d::check_k(medium.k)?;
        let n = medium.scatterers.len();
        let d = medium.mode.dim();
        for (j, s) in medium.scatterers.iter().enumerate() {
            let im_inv = (1.0 / s.pol.alpha).im;
            if !(s.pol.alpha.norm() > 0.0) || !s.pol.alpha.is_finite() || im_inv.is_nan() {
                return Err(Error::DegenerateScatterer);
            }
            for (m, t) in medium.scatterers.iter().enumerate().skip(j + 1) {
                if medium.k * (s.pos() - t.pos()).norm() < COINCIDENCE_KRHO {
                    return Err(Error::Geometry(format!("scatterers {j} and {m} share a position")));
                }
            }
        }
        if n == 0 {
            return Ok(SystemFactorization { medium, lu: None, condition: 1.0 });
        }

        let dim = n * d;
        let mut mat = DMatrix::<Complex64>::identity(dim, dim);
        for (j, sj) in medium.scatterers.iter().enumerate() {
            let rj = sj.pos();
            for (m, sm) in medium.scatterers.iter().enumerate() {
                if j == m {
                    continue;
                }
                let g = green0_block(medium.mode, medium.k, &rj, &sm.pos())?;
                for a in 0..d {
                    for b in 0..d {
                        mat[(j * d + a, m * d + b)] = -sm.pol.alpha * g[(a, b)];
                    }
                }
            }
        }
        let norm1 = one_norm(&mat);
        let lu = mat.lu();
        let inverse = lu.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
        let condition = norm1 * one_norm(&inverse);
        if !condition.is_finite() || condition > CONDITION_SINGULAR {
            return Err(Error::Singular { condition });
        }
        if condition > CONDITION_WARN {
            warn!("Foldy-Lax matrix is ill-conditioned (condition estimate {condition:e})");
        }
        Ok(SystemFactorization { medium, lu: Some(lu), condition })
    }

    pub fn medium(&self) -> &Medium2D {
        &self.medium
    }

    pub fn mode(&self) -> PolMode {
        self.medium.mode
    }

    pub fn k(&self) -> f64 {
        self.medium.k
    }

    /// 1-norm condition number of the interaction matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Solves for the induced dipoles `alpha_j X_j` driven by each column of
    /// `rhs` (stacked per scatterer, `dim` rows each).
    fn induced(&self, mut rhs: DMatrix<Complex64>) -> DMatrix<Complex64> {
        if let Some(lu) = &self.lu {
            // The factorization is known to be invertible.
            let ok = lu.solve_mut(&mut rhs);
            debug_assert!(ok);
            let d = self.medium.mode.dim();
            for (j, s) in self.medium.scatterers.iter().enumerate() {
                for a in 0..d {
                    for c in 0..rhs.ncols() {
                        rhs[(j * d + a, c)] *= s.pol.alpha;
                    }
                }
            }
        }
        rhs
    }

    /// Field radiated by a unit point dipole at `rp` with orientation `u`
    /// (ignored in TM), including all orders of multiple scattering.
    pub fn source(&self, rp: &Vec2, u: &Dir2) -> Result<SourceField<'_>> {
        self.medium.check_point(rp)?;
        let mode = self.medium.mode;
        let d = mode.dim();
        let dir = mode.embed(u);
        let cdir = dir.map(Complex64::from);
        let n = self.medium.scatterers.len();
        let mut rhs = DMatrix::<Complex64>::zeros(n * d, 1);
        for (j, s) in self.medium.scatterers.iter().enumerate() {
            let g = green0_block(mode, self.medium.k, &s.pos(), rp)? * cdir;
            for a in 0..d {
                rhs[(j * d + a, 0)] = g[a];
            }
        }
        let q = self.induced(rhs);
        let dipoles = (0..n)
            .map(|j| {
                let mut v = CVec2::zeros();
                for a in 0..d {
                    v[a] = q[(j * d + a, 0)];
                }
                v
            })
            .collect();
        Ok(SourceField { fact: self, origin: *rp, dir, dipoles })
    }

    /// Total Green function `G(r, rp)` for distinct points away from the
    /// scatterers.
    pub fn total_green(&self, r: &Vec2, rp: &Vec2) -> Result<GreenValue> {
        let mode = self.medium.mode;
        let k = self.medium.k;
        self.medium.check_point(r)?;
        self.medium.check_point(rp)?;
        let mut g = green0_block(mode, k, r, rp)?;
        let d = mode.dim();
        let n = self.medium.scatterers.len();
        if n > 0 {
            let mut rhs = DMatrix::<Complex64>::zeros(n * d, d);
            for (j, s) in self.medium.scatterers.iter().enumerate() {
                let b = green0_block(mode, k, &s.pos(), rp)?;
                for a in 0..d {
                    for c in 0..d {
                        rhs[(j * d + a, c)] = b[(a, c)];
                    }
                }
            }
            let q = self.induced(rhs);
            for (j, s) in self.medium.scatterers.iter().enumerate() {
                let b = green0_block(mode, k, r, &s.pos())?;
                let mut qj = CMat2::zeros();
                for a in 0..d {
                    for c in 0..d {
                        qj[(a, c)] = q[(j * d + a, c)];
                    }
                }
                g += b * qj;
            }
        }
        Ok(GreenValue::from_block(mode, g))
    }

    /// `u_j . Im G(r_j, r_k) . u_k`; finite when `r_j = r_k`, where it
    /// gives the local density of states up to a constant.
    pub fn im_green_projected(&self, r_j: &Vec2, r_k: &Vec2, u_j: &Dir2, u_k: &Dir2) -> Result<f64> {
        self.source(r_k, u_k)?.im_projected(r_j, u_j)
    }
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solved multiple-scattering response to one oriented point dipole.
/// Evaluating it at many observation points costs `O(N)` each.
#[derive(Debug, Clone)]
pub struct SourceField<'a> {
    fact: &'a SystemFactorization,
    origin: Vec2,
    dir: Vec2,
    dipoles: Vec<CVec2>,
}

impl SourceField<'_> {
    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    /// Scattered part `sum_j G0(r, r_j) q_j`.
    fn scattered(&self, r: &Vec2) -> Result<CVec2> {
        let medium = &self.fact.medium;
        let mut acc = CVec2::zeros();
        for (s, q) in medium.scatterers.iter().zip(&self.dipoles) {
            acc += green0_block(medium.mode, medium.k, r, &s.pos())? * q;
        }
        Ok(acc)
    }

    /// `G(r, origin) . u`. TM values live in the first component.
    pub fn field(&self, r: &Vec2) -> Result<CVec2> {
        let medium = &self.fact.medium;
        medium.check_point(r)?;
        let direct = green0_block(medium.mode, medium.k, r, &self.origin)? * self.dir.map(Complex64::from);
        Ok(direct + self.scattered(r)?)
    }

    /// `e . G(r, origin) . u`.
    pub fn projected(&self, r: &Vec2, e: &Dir2) -> Result<Complex64> {
        let f = self.field(r)?;
        let e = self.fact.medium.mode.embed(e);
        Ok(f[0] * e[0] + f[1] * e[1])
    }

    /// `e . Im G(r, origin) . u`, valid at `r = origin`.
    pub fn im_projected(&self, r: &Vec2, e: &Dir2) -> Result<f64> {
        let medium = &self.fact.medium;
        medium.check_point(r)?;
        let e = medium.mode.embed(e);
        let direct = e.dot(&(green0_im(medium.mode, medium.k, r, &self.origin) * self.dir));
        let s = self.scattered(r)?;
        Ok(direct + (s[0] * e[0] + s[1] * e[1]).im)
    }
}
