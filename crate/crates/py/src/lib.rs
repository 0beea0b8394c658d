//! Python bindings. Points and directions are `(x, y)` tuples in
//! wavelengths, polarization modes are the strings `"TM"` / `"TE"`.

use std::path::PathBuf;

use g2scatter::coherence::{self, Detector, EmitterPair};
use g2scatter::scan::{self, FixedEmitter, GridSpec, MapGrid, MediumParams, ScanningEmitter};
use g2scatter::{io, specfun, Error, Medium2D, PolMode, Rect, SystemFactorization, Vec2};
use nalgebra::Unit;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyg2scatter, NumericalError, PyException, "Singular system or undefined quantity.");
create_exception!(pyg2scatter, GeometryError, PyValueError, "Coincident points or failed placement.");

fn err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Geometry(_) | Error::Packing { .. } => GeometryError::new_err(msg),
        Error::Io { .. } => PyOSError::new_err(msg),
        Error::Config(_) | Error::InvalidParameter(_) => PyValueError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

fn mode(s: &str) -> PyResult<PolMode> {
    match s {
        "TM" | "tm" => Ok(PolMode::Tm),
        "TE" | "te" => Ok(PolMode::Te),
        _ => Err(PyValueError::new_err(format!("unknown mode {s:?}, expected \"TM\" or \"TE\""))),
    }
}

fn pt(p: (f64, f64)) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn dir(p: (f64, f64)) -> PyResult<g2scatter::Dir2> {
    let v = pt(p);
    if !(v.norm() > 0.0 && v.norm().is_finite()) {
        return Err(PyValueError::new_err("direction must be a nonzero finite vector"));
    }
    Ok(Unit::new_normalize(v))
}

#[pyclass(name = "Medium", module = "pyg2scatter", frozen)]
struct PyMedium {
    inner: Medium2D,
}

#[pymethods]
impl PyMedium {
    /// Empty medium; `k` defaults to `2 pi` (lengths in wavelengths).
    #[staticmethod]
    #[pyo3(signature = (mode, k = 2.0 * std::f64::consts::PI))]
    fn free_space(mode: &str, k: f64) -> PyResult<Self> {
        Ok(PyMedium { inner: Medium2D::free_space(self::mode(mode)?, k) })
    }

    /// Random medium by rejection sampling; `region` is `(x0, y0, width, height)`.
    #[staticmethod]
    #[pyo3(signature = (seed, n_scatterers, region, alpha_bare, exclusion_radius, mode, wavelength = 1.0))]
    fn generate(
        seed: u64,
        n_scatterers: usize,
        region: (f64, f64, f64, f64),
        alpha_bare: f64,
        exclusion_radius: f64,
        mode: &str,
        wavelength: f64,
    ) -> PyResult<Self> {
        let params = MediumParams {
            seed,
            n_scatterers,
            region: Rect { x0: region.0, y0: region.1, width: region.2, height: region.3 },
            alpha_bare,
            exclusion_radius,
            mode: self::mode(mode)?,
            wavelength,
        };
        Ok(PyMedium { inner: scan::generate_medium(&params).map_err(err)? })
    }

    /// The default disordered configuration used for the correlation map.
    #[staticmethod]
    #[pyo3(signature = (seed = 42))]
    fn default_disordered(seed: u64) -> PyResult<Self> {
        let p = scan::default_medium_params(seed).map_err(err)?;
        Ok(PyMedium { inner: scan::generate_medium(&p).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMedium { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("medium serializes")
    }

    /// New medium with one more lossless scatterer.
    fn with_scatterer(&self, position: (f64, f64), alpha_bare: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_scatterer(pt(position), alpha_bare).map_err(err)?;
        Ok(PyMedium { inner })
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.name()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.scatterers.iter().map(|s| (s.position[0], s.position[1])).collect()
    }

    #[getter]
    fn polarizabilities(&self) -> Vec<Complex64> {
        self.inner.scatterers.iter().map(|s| s.pol.alpha).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.scatterers.len()
    }

    /// SHA-256 of the scatterer coordinates.
    fn digest(&self) -> String {
        scan::position_digest(&self.inner)
    }

    /// `sigma_s`, `ell`, `k_ell`, `optical_thickness`, `diffusive`.
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = scan::diffusion_diagnostics(&self.inner).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("sigma_s", d.sigma_s)?;
        out.set_item("ell", d.ell)?;
        out.set_item("k_ell", d.k_ell)?;
        out.set_item("optical_thickness", d.optical_thickness)?;
        out.set_item("diffusive", d.diffusive)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Medium(mode={}, n={}, k={})", self.inner.mode.name(), self.inner.scatterers.len(), self.inner.k)
    }
}

#[pyclass(name = "Map", module = "pyg2scatter", frozen)]
struct PyMap {
    inner: MapGrid,
}

#[pymethods]
impl PyMap {
    /// `(ny, nx)`, matching the nesting of `values`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.spec.ny, self.inner.spec.nx)
    }

    #[getter]
    fn channel(&self) -> &'static str {
        self.inner.channel.name()
    }

    /// Rows of constant y, lowest y first; missing pixels are NaN.
    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values.chunks(self.inner.spec.nx).map(|r| r.to_vec()).collect()
    }

    fn pixel_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (self.inner.spec.x(ix), self.inner.spec.y(iy))
    }

    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        io::export_csv(&self.inner, &path).map_err(err)
    }

    fn to_pgm(&self, path: PathBuf) -> PyResult<()> {
        io::export_pgm(&self.inner, &path).map_err(err)
    }

    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<Self> {
        Ok(PyMap { inner: io::import_csv(&path).map_err(err)? })
    }
}

/// Factored multiple-scattering system of a medium.
#[pyclass(name = "Factorization", module = "pyg2scatter", frozen)]
struct PyFactorization {
    inner: SystemFactorization,
}

#[allow(clippy::too_many_arguments)]
fn emitters(
    r1: (f64, f64),
    r2: (f64, f64),
    u1: (f64, f64),
    u2: (f64, f64),
    p1: Complex64,
    p2: Complex64,
) -> PyResult<EmitterPair> {
    Ok(EmitterPair { r1: pt(r1), r2: pt(r2), u1: dir(u1)?, u2: dir(u2)?, p1, p2 })
}

fn grid(origin: (f64, f64), size: (f64, f64), resolution: (usize, usize)) -> GridSpec {
    GridSpec { origin: [origin.0, origin.1], width: size.0, height: size.1, nx: resolution.0, ny: resolution.1 }
}

#[pymethods]
impl PyFactorization {
    #[new]
    fn new(py: Python<'_>, medium: &PyMedium) -> PyResult<Self> {
        let m = medium.inner.clone();
        let inner = py.detach(|| SystemFactorization::assemble(m)).map_err(err)?;
        Ok(PyFactorization { inner })
    }

    #[getter]
    fn condition_estimate(&self) -> f64 {
        self.inner.condition_estimate()
    }

    /// `G(r, rp)` as a 2x2 nested list (TM: the scalar in `[0][0]`).
    fn total_green(&self, r: (f64, f64), rp: (f64, f64)) -> PyResult<Vec<Vec<Complex64>>> {
        let b = self.inner.total_green(&pt(r), &pt(rp)).map_err(err)?.block();
        Ok(vec![vec![b[(0, 0)], b[(0, 1)]], vec![b[(1, 0)], b[(1, 1)]]])
    }

    /// `u_j . Im G(r_j, r_k) . u_k`, valid for `r_j = r_k`.
    fn im_green(&self, rj: (f64, f64), rk: (f64, f64), uj: (f64, f64), uk: (f64, f64)) -> PyResult<f64> {
        self.inner.im_green_projected(&pt(rj), &pt(rk), &dir(uj)?, &dir(uk)?).map_err(err)
    }

    /// Correlation for point detectors at `ra`, `rb` selecting `ea`, `eb`.
    #[pyo3(signature = (r1, r2, ra, rb, u1 = (1.0, 0.0), u2 = (1.0, 0.0), ea = (1.0, 0.0), eb = (1.0, 0.0), p1 = Complex64::new(1.0, 0.0), p2 = Complex64::new(1.0, 0.0)))]
    #[allow(clippy::too_many_arguments)]
    fn g2(
        &self,
        r1: (f64, f64),
        r2: (f64, f64),
        ra: (f64, f64),
        rb: (f64, f64),
        u1: (f64, f64),
        u2: (f64, f64),
        ea: (f64, f64),
        eb: (f64, f64),
        p1: Complex64,
        p2: Complex64,
    ) -> PyResult<f64> {
        let em = emitters(r1, r2, u1, u2, p1, p2)?;
        let da = Detector { r: pt(ra), e: dir(ea)? };
        let db = Detector { r: pt(rb), e: dir(eb)? };
        coherence::g2_detectors(&self.inner, &em, &da, &db).map_err(err)
    }

    /// `(P1, P2, G2)` integrated over all output channels.
    #[pyo3(signature = (r1, r2, u1 = (1.0, 0.0), u2 = (1.0, 0.0), p1 = Complex64::new(1.0, 0.0), p2 = Complex64::new(1.0, 0.0)))]
    fn integrated(
        &self,
        r1: (f64, f64),
        r2: (f64, f64),
        u1: (f64, f64),
        u2: (f64, f64),
        p1: Complex64,
        p2: Complex64,
    ) -> PyResult<(f64, f64, f64)> {
        let d = coherence::integrated(&self.inner, &emitters(r1, r2, u1, u2, p1, p2)?).map_err(err)?;
        Ok((d.p1, d.p2, d.big_g2))
    }

    /// `"superradiant"`, `"subradiant"` or `"intermediate"`.
    #[pyo3(signature = (r1, r2, u1 = (1.0, 0.0), u2 = (1.0, 0.0), p1 = Complex64::new(1.0, 0.0), p2 = Complex64::new(1.0, 0.0), tol_super = 0.05, tol_sub = 0.05))]
    #[allow(clippy::too_many_arguments)]
    fn classify(
        &self,
        r1: (f64, f64),
        r2: (f64, f64),
        u1: (f64, f64),
        u2: (f64, f64),
        p1: Complex64,
        p2: Complex64,
        tol_super: f64,
        tol_sub: f64,
    ) -> PyResult<&'static str> {
        let em = emitters(r1, r2, u1, u2, p1, p2)?;
        let c = coherence::classify_emission(&self.inner, &em, tol_super, tol_sub).map_err(err)?;
        Ok(match c.classification {
            coherence::Classification::Superradiant => "superradiant",
            coherence::Classification::Subradiant => "subradiant",
            coherence::Classification::Intermediate => "intermediate",
        })
    }

    /// Integrated correlation with one emitter fixed at `r1` and the other
    /// swept over a grid of `resolution = (nx, ny)` cells starting at `origin`.
    #[pyo3(signature = (r1, origin, size, resolution, u1 = (1.0, 0.0), u2 = (1.0, 0.0), p1 = Complex64::new(1.0, 0.0), p2 = Complex64::new(1.0, 0.0)))]
    #[allow(clippy::too_many_arguments)]
    fn g2_map(
        &self,
        py: Python<'_>,
        r1: (f64, f64),
        origin: (f64, f64),
        size: (f64, f64),
        resolution: (usize, usize),
        u1: (f64, f64),
        u2: (f64, f64),
        p1: Complex64,
        p2: Complex64,
    ) -> PyResult<PyMap> {
        let fixed = FixedEmitter { r: pt(r1), u: dir(u1)?, p: p1 };
        let scanning = ScanningEmitter { u: dir(u2)?, p: p2 };
        let spec = grid(origin, size, resolution);
        let inner = py.detach(|| scan::g2_map(&self.inner, &fixed, &scanning, &spec)).map_err(err)?;
        Ok(PyMap { inner })
    }

    /// `(ldos, cdos)` maps referenced to an emitter at `r1`.
    #[pyo3(signature = (r1, origin, size, resolution, u1 = (1.0, 0.0), u = (1.0, 0.0)))]
    #[allow(clippy::too_many_arguments)]
    fn dos_maps(
        &self,
        py: Python<'_>,
        r1: (f64, f64),
        origin: (f64, f64),
        size: (f64, f64),
        resolution: (usize, usize),
        u1: (f64, f64),
        u: (f64, f64),
    ) -> PyResult<(PyMap, PyMap)> {
        let (r1, u1, u) = (pt(r1), dir(u1)?, dir(u)?);
        let spec = grid(origin, size, resolution);
        let (l, c) = py.detach(|| scan::dos_maps(&self.inner, &r1, &u1, &u, &spec)).map_err(err)?;
        Ok((PyMap { inner: l }, PyMap { inner: c }))
    }
}

/// `(J0, Y0, J1, Y1)` at `x > 0`.
#[pyfunction]
fn bessel(x: f64) -> PyResult<(f64, f64, f64, f64)> {
    let [h0, h1] = specfun::hankel01(x).map_err(|e| err(e.into()))?;
    Ok((h0.j, h0.y, h1.j, h1.y))
}

/// Hankel function of the first kind, order 0 or 1.
#[pyfunction]
fn hankel1(order: u32, x: f64) -> PyResult<Complex64> {
    specfun::hankel1(order, x).map(|v| v.h1).map_err(|e| err(e.into()))
}

/// Lossless dressed polarizability for a bare value.
#[pyfunction]
#[pyo3(signature = (alpha_bare, mode, k = 2.0 * std::f64::consts::PI))]
fn dress_polarizability(alpha_bare: f64, mode: &str, k: f64) -> PyResult<Complex64> {
    Ok(g2scatter::em2d::dress_polarizability(alpha_bare, self::mode(mode)?, k).map_err(err)?.alpha)
}

#[pymodule]
fn pyg2scatter(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMedium>()?;
    m.add_class::<PyFactorization>()?;
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(bessel, m)?)?;
    m.add_function(wrap_pyfunction!(hankel1, m)?)?;
    m.add_function(wrap_pyfunction!(dress_polarizability, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("GeometryError", m.py().get_type::<GeometryError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
