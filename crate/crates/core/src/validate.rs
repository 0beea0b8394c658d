//! Self-check suite behind the `validate` command: closed forms, identities
//! and bounds evaluated on fixed and randomized configurations.

use std::f64::consts::PI;
use std::io::Cursor;
use std::path::Path;

use nalgebra::Unit;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherence::{
    big_g2, g2_conditional, g2_from_couplings, integrated, Couplings, DensityOfStates, Detector, EmitterPair,
};
use crate::em2d::{dress_polarizability, Dir2, PolMode, Vec2};
use crate::error::Result;
use crate::io;
use crate::scan::{
    generate_medium, position_digest, single_scatterer_cross_sections, Channel, GridSpec, MapGrid, MapMetadata,
    MediumParams, SplitMix64,
};
use crate::solver::{Medium2D, Rect, SystemFactorization};
use crate::specfun::{bessel_j01, hankel01};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation (check-specific units).
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

/// One randomized scenario: a medium, two emitters and two detectors.
pub struct RandomCase {
    pub fact: SystemFactorization,
    pub em: EmitterPair,
    pub da: Detector,
    pub db: Detector,
}

pub fn random_dir(rng: &mut SplitMix64) -> Dir2 {
    let t = 2.0 * PI * rng.next_f64();
    Unit::new_unchecked(Vec2::new(t.cos(), t.sin()))
}

pub fn random_point(rng: &mut SplitMix64, half: f64) -> Vec2 {
    Vec2::new(half * (2.0 * rng.next_f64() - 1.0), half * (2.0 * rng.next_f64() - 1.0))
}

/// Modulus in `[0.1, 2]`, uniform phase.
pub fn random_amplitude(rng: &mut SplitMix64) -> Complex64 {
    Complex64::from_polar(0.1 + 1.9 * rng.next_f64(), 2.0 * PI * rng.next_f64())
}

/// Random medium of up to `max_n` scatterers in a 4 x 4 wavelength square,
/// random mode and bare polarizability in `[0.05, 5]` (either sign).
pub fn random_medium(rng: &mut SplitMix64, max_n: usize) -> Result<Medium2D> {
    let n = (rng.next_u64() % (max_n as u64 + 1)) as usize;
    let mode = if rng.next_u64() & 1 == 0 { PolMode::Tm } else { PolMode::Te };
    let mut alpha_bare = 0.05 * 100f64.powf(rng.next_f64());
    if rng.next_u64() & 1 == 1 {
        alpha_bare = -alpha_bare;
    }
    generate_medium(&MediumParams {
        seed: rng.next_u64(),
        n_scatterers: n,
        region: Rect::centered(4.0, 4.0),
        alpha_bare,
        exclusion_radius: 0.02,
        mode,
        wavelength: 1.0,
    })
}

pub fn random_case(rng: &mut SplitMix64, max_n: usize) -> Result<RandomCase> {
    let fact = SystemFactorization::assemble(random_medium(rng, max_n)?)?;
    let em = EmitterPair {
        r1: random_point(rng, 2.5),
        r2: random_point(rng, 2.5),
        u1: random_dir(rng),
        u2: random_dir(rng),
        p1: random_amplitude(rng),
        p2: random_amplitude(rng),
    };
    let da = Detector { r: random_point(rng, 3.0), e: random_dir(rng) };
    let db = Detector { r: random_point(rng, 3.0), e: random_dir(rng) };
    Ok(RandomCase { fact, em, da, db })
}

fn check(name: &'static str, worst: f64, tolerance: f64, cases: usize) -> CheckResult {
    CheckResult { name, passed: worst <= tolerance, worst, tolerance, cases }
}

fn wronskian() -> CheckResult {
    let n = 400;
    let worst = (0..n)
        .map(|i| {
            let x = 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64);
            let [h0, h1] = hankel01(x).expect("x > 0");
            let w = h1.j * h0.y - h0.j * h1.y;
            (w - 2.0 / (PI * x)).abs() / (2.0 / (PI * x)).max(1.0)
        })
        .fold(0.0, f64::max);
    check("bessel_wronskian", worst, 1e-11, n)
}

fn free_space_closed_form() -> Result<CheckResult> {
    let k = 2.0 * PI;
    let fact = SystemFactorization::assemble(Medium2D::free_space(PolMode::Tm, k))?;
    let u = Unit::new_unchecked(Vec2::new(1.0, 0.0));
    let one = Complex64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = 0.03 * (i + 1) as f64;
        let em = EmitterPair { r1: Vec2::zeros(), r2: Vec2::new(d, 0.0), u1: u, u2: u, p1: one, p2: one };
        let j0 = bessel_j01(k * d).0;
        worst = worst.max((big_g2(&fact, &em)? - 0.5 * (1.0 + j0 * j0)).abs());
    }
    Ok(check("free_space_closed_form", worst, 1e-10, 100))
}

fn optical_theorem() -> Result<CheckResult> {
    let k = 2.0 * PI;
    let mut worst: f64 = 0.0;
    for mode in [PolMode::Tm, PolMode::Te] {
        for i in 0..5 {
            let alpha_bare = 0.01 * 10f64.powi(i);
            let pol = dress_polarizability(alpha_bare, mode, k)?;
            let (ext, sca) = single_scatterer_cross_sections(pol.alpha, mode, k)?;
            worst = worst.max((ext - sca).abs() / ext);
        }
    }
    Ok(check("optical_theorem", worst, 1e-10, 10))
}

fn reciprocity(rng: &mut SplitMix64) -> Result<CheckResult> {
    let params = MediumParams {
        seed: rng.next_u64(),
        n_scatterers: 30,
        region: Rect::centered(4.0, 4.0),
        alpha_bare: 1.0,
        exclusion_radius: 0.05,
        mode: PolMode::Te,
        wavelength: 1.0,
    };
    let fact = SystemFactorization::assemble(generate_medium(&params)?)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (r, rp) = (random_point(rng, 2.5), random_point(rng, 2.5));
        let g = fact.total_green(&r, &rp)?;
        let gt = fact.total_green(&rp, &r)?.transpose();
        worst = worst.max(g.max_abs_diff(&gt) / g.max_abs());
    }
    Ok(check("reciprocity", worst, 1e-10, 20))
}

struct RandomStats {
    bound: f64,
    path: f64,
    consistency: f64,
    cdos: f64,
    cases: usize,
}

fn randomized(seed: u64, n_cases: usize) -> RandomStats {
    let per_case: Vec<Option<(f64, f64, f64, f64)>> = (0..n_cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(seed.wrapping_add(i as u64));
            let case = random_case(&mut rng, 20).ok()?;
            let c = Couplings::compute(&case.fact, &case.em, &case.da, &case.db).ok()?;
            let g2 = g2_from_couplings(case.em.p1, case.em.p2, &c).ok()?;
            let g2c = g2_conditional(case.em.p1, case.em.p2, &c).ok()?;
            let det = integrated(&case.fact, &case.em).ok()?;
            let dos = DensityOfStates::compute(&case.fact, &case.em).ok()?;
            let bound = [-g2, g2 - 1.0, -det.big_g2, det.big_g2 - 1.0].into_iter().fold(0.0, f64::max);
            let consistency = (det.p2 / (det.p1 * det.p1) - det.big_g2).abs();
            Some((bound, (g2 - g2c).abs(), consistency, -dos.cdos_bound_residual()))
        })
        .collect();
    let mut s = RandomStats { bound: 0.0, path: 0.0, consistency: 0.0, cdos: 0.0, cases: 0 };
    for (b, p, c, d) in per_case.into_iter().flatten() {
        s.bound = s.bound.max(b);
        s.path = s.path.max(p);
        s.consistency = s.consistency.max(c);
        s.cdos = s.cdos.max(d);
        s.cases += 1;
    }
    s
}

fn determinism() -> Result<CheckResult> {
    let params = MediumParams {
        seed: 42,
        n_scatterers: 100,
        region: Rect { x0: 0.0, y0: 0.0, width: 1.0, height: 1.0 },
        alpha_bare: 1.0,
        exclusion_radius: 0.01,
        mode: PolMode::Tm,
        wavelength: 1.0,
    };
    let a = position_digest(&generate_medium(&params)?);
    let b = position_digest(&generate_medium(&params)?);
    Ok(check("medium_determinism", if a == b { 0.0 } else { 1.0 }, 0.0, 2))
}

fn csv_round_trip(rng: &mut SplitMix64) -> Result<CheckResult> {
    let spec = GridSpec::centered(3.0, 2.0, 7, 5);
    let values: Vec<f64> = (0..spec.len())
        .map(|i| if i == 3 { f64::NAN } else { rng.next_f64() * 10f64.powi((i % 7) as i32 - 3) })
        .collect();
    let grid = MapGrid { spec, channel: Channel::G2, values, metadata: MapMetadata::default() };
    let mut buf = Vec::new();
    io::write_csv(&grid, &mut buf).map_err(|source| crate::Error::Io { path: "<memory>".into(), source })?;
    let back = io::read_csv(Cursor::new(buf), Path::new("<memory>"))?;
    let worst = grid
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| match (a.is_nan(), b.is_nan()) {
            (true, true) => 0.0,
            (false, false) => (a - b).abs() / a.abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    let worst = if back.spec == grid.spec { worst } else { f64::INFINITY };
    Ok(check("csv_round_trip", worst, 1e-15, spec.len()))
}

/// Runs every check; `n_random` sets the number of randomized scenarios.
pub fn run_suite(seed: u64, n_random: usize) -> Result<Vec<CheckResult>> {
    let mut rng = SplitMix64::new(seed);
    let mut out = vec![wronskian(), free_space_closed_form()?, optical_theorem()?, reciprocity(&mut rng)?];
    let s = randomized(rng.next_u64(), n_random);
    out.push(check("g2_bounds", s.bound, 1e-12, s.cases));
    out.push(check("path_equivalence", s.path, 1e-12, s.cases));
    out.push(check("integrated_consistency", s.consistency, 1e-14, s.cases));
    out.push(check("cdos_bound", s.cdos, 1e-10, s.cases));
    out.push(check("random_cases_evaluated", if s.cases * 10 >= n_random * 9 { 0.0 } else { 1.0 }, 0.0, s.cases));
    out.push(determinism()?);
    out.push(csv_round_trip(&mut rng)?);
    Ok(out)
}
