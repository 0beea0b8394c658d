use std::f64::consts::PI;

use g2scatter::coherence::{g2_from_couplings, Classification, Couplings, EmitterPair};
use g2scatter::scan::*;
use g2scatter::specfun::bessel_j01;
use g2scatter::{Dir2, Error, Medium2D, PolMode, Rect, SystemFactorization, Vec2};
use nalgebra::Unit;
use num_complex::Complex64;

const K: f64 = 2.0 * PI;
const GOLDEN_DIGEST: &str = "07f41890cdc19fe4bedbec564abb86eb2a8670ce157d4f11fbecb81c15fd69aa";

fn dir_of(t: f64) -> Dir2 {
    Unit::new_unchecked(Vec2::new(t.cos(), t.sin()))
}

fn params(seed: u64, n: usize) -> MediumParams {
    MediumParams {
        seed,
        n_scatterers: n,
        region: Rect::centered(4.0, 4.0),
        alpha_bare: 1.5,
        exclusion_radius: 0.05,
        mode: PolMode::Te,
        wavelength: 1.0,
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[test]
fn golden_medium_digest() {
    let p = MediumParams {
        seed: 42,
        n_scatterers: 100,
        region: Rect { x0: 0.0, y0: 0.0, width: 1.0, height: 1.0 },
        alpha_bare: 1.0,
        exclusion_radius: 0.01,
        mode: PolMode::Tm,
        wavelength: 1.0,
    };
    let a = generate_medium(&p).unwrap();
    let b = generate_medium(&p).unwrap();
    assert_eq!(a, b);
    assert_eq!(position_digest(&a), GOLDEN_DIGEST);
    assert_eq!(a.scatterers[0].position, [0.7415648787718233, 0.1599103928769201]);
}

#[test]
fn medium_generation_edge_cases() {
    let m = generate_medium(&params(1, 0)).unwrap();
    assert!(m.scatterers.is_empty());
    let mut p = params(1, 50);
    p.region = Rect { x0: 0.0, y0: 0.0, width: 0.1, height: 0.1 };
    p.exclusion_radius = 0.05;
    assert!(matches!(generate_medium(&p), Err(Error::Packing { requested: 50, .. })));
    let m = generate_medium(&params(3, 200)).unwrap();
    let pts: Vec<Vec2> = m.positions().collect();
    for (i, a) in pts.iter().enumerate() {
        assert!(Rect::centered(4.0, 4.0).contains(a));
        for b in &pts[i + 1..] {
            assert!((a - b).norm() > 0.05);
        }
    }
}

#[test]
fn diffusion_diagnostics_scaling() {
    let base = diffusion_diagnostics(&generate_medium(&params(5, 100)).unwrap()).unwrap();
    let dense = diffusion_diagnostics(&generate_medium(&params(5, 200)).unwrap()).unwrap();
    assert!((dense.ell / base.ell - 0.5).abs() <= 1e-12);
    assert!((base.k_ell - K * base.ell).abs() <= 1e-12 * base.k_ell);
    assert!((base.optical_thickness - 4.0 / base.ell).abs() <= 1e-12 * base.optical_thickness);

    let mut weak = params(5, 100);
    weak.alpha_bare = 1e-6;
    let d = diffusion_diagnostics(&generate_medium(&weak).unwrap()).unwrap();
    assert!(d.sigma_s < 1e-9 && d.ell > 1e9 && !d.diffusive);

    let def = default_medium_params(42).unwrap();
    let d = diffusion_diagnostics(&generate_medium(&def).unwrap()).unwrap();
    assert!((d.k_ell - 5.0).abs() < 1e-9 && d.diffusive, "{d:?}");
    assert!(diffusion_diagnostics(&generate_medium(&params(1, 0)).unwrap()).is_err());
}

fn free_tm() -> SystemFactorization {
    SystemFactorization::assemble(Medium2D::free_space(PolMode::Tm, K)).unwrap()
}

#[test]
fn free_space_maps_match_closed_forms() {
    let fact = free_tm();
    let grid = GridSpec::centered(3.0, 3.0, 31, 31);
    let u = dir_of(0.0);
    let r1 = Vec2::zeros();
    let map = g2_map(&fact, &FixedEmitter { r: r1, u, p: one() }, &ScanningEmitter { u, p: one() }, &grid).unwrap();
    let (ldos, cdos) = dos_maps(&fact, &r1, &u, &u, &grid).unwrap();
    for idx in 0..grid.len() {
        let j0 = bessel_j01(K * grid.center(idx).norm()).0;
        assert!((map.values[idx] - 0.5 * (1.0 + j0 * j0)).abs() <= 1e-10);
        assert!((ldos.values[idx] - 0.25).abs() <= 1e-12);
        assert!((cdos.values[idx] - 0.25 * j0).abs() <= 1e-12);
    }
    assert!((map.value(15, 15) - 1.0).abs() <= 1e-10);
    assert_eq!(map.channel, Channel::G2);
}

#[test]
fn medium_maps_respect_bounds_and_mark_scatterers() {
    let grid = GridSpec::centered(4.0, 4.0, 21, 21);
    let mut m = generate_medium(&params(8, 40)).unwrap();
    // one scatterer exactly on a pixel center
    m.scatterers[0].position = [grid.x(3), grid.y(17)];
    let fact = SystemFactorization::assemble(m).unwrap();
    let u = dir_of(0.3);
    let r1 = Vec2::new(0.013, -0.021);
    let map = g2_map(&fact, &FixedEmitter { r: r1, u, p: one() }, &ScanningEmitter { u, p: one() }, &grid).unwrap();
    assert!(map.value(3, 17).is_nan());
    let nan = map.values.iter().filter(|v| v.is_nan()).count();
    assert_eq!(nan, 1);
    assert!(map.values.iter().filter(|v| !v.is_nan()).all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));

    let (ldos, cdos) = dos_maps(&fact, &r1, &u, &u, &grid).unwrap();
    let l1 = fact.im_green_projected(&r1, &r1, &u, &u).unwrap();
    for idx in 0..grid.len() {
        if ldos.values[idx].is_nan() {
            assert!(cdos.values[idx].is_nan());
            continue;
        }
        assert!(ldos.values[idx] > 0.0);
        assert!((l1 * ldos.values[idx]).sqrt() - cdos.values[idx].abs() >= -1e-10);
    }

    let class = classification_map(&map, 0.05, 0.05);
    for (c, g) in class.values.iter().zip(&map.values) {
        if g.is_nan() {
            assert!(c.is_nan());
        } else {
            assert_eq!(*c, Classification::from_g2(*g, 0.05, 0.05).code());
        }
    }
}

#[test]
fn maps_independent_of_thread_count() {
    let fact = SystemFactorization::assemble(generate_medium(&params(9, 60)).unwrap()).unwrap();
    let grid = GridSpec::centered(4.0, 4.0, 17, 13);
    let u = dir_of(1.0);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            g2_map(&fact, &FixedEmitter { r: Vec2::zeros(), u, p: one() }, &ScanningEmitter { u, p: one() }, &grid)
                .unwrap()
        })
    };
    let a = run(1);
    let b = run(4);
    let bits = |m: &MapGrid| m.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.metadata, b.metadata);
}

fn emitters(d: f64) -> EmitterPair {
    let u = dir_of(0.0);
    EmitterPair { r1: Vec2::new(-0.5 * d, 0.0), r2: Vec2::new(0.5 * d, 0.0), u1: u, u2: u, p1: one(), p2: one() }
}

#[test]
fn detector_search_free_space() {
    let fact = free_tm();
    let em = emitters(1.0);
    let opts = SearchOptions { coarse: 48, e_a: dir_of(0.0), e_b: dir_of(0.0) };
    let radius = 1e4 / K;
    let ring = SearchRegion::Ring { center: [0.0, 0.0], radius };

    let best = find_extremal_detectors(&fact, &em, &ring, SearchTarget::Maximize, &opts).unwrap();
    assert!(best.g2 >= 1.0 - 1e-6);

    let worst = find_extremal_detectors(&fact, &em, &ring, SearchTarget::Minimize, &opts).unwrap();
    assert!(worst.g2 <= 1e-6, "{}", worst.g2);
    let (ca, cb) = (worst.da.r[0] / radius, worst.db.r[0] / radius);
    let phase = (K * (ca - cb)).rem_euclid(2.0 * PI);
    assert!((phase - PI).abs() < 1e-3, "{phase}");

    // standalone re-evaluation is bit-exact
    let again =
        g2_from_couplings(em.p1, em.p2, &Couplings::compute(&fact, &em, &worst.da, &worst.db).unwrap()).unwrap();
    assert_eq!(again.to_bits(), worst.g2.to_bits());

    // no coarse pair beats the refined optimum
    let coarse: Vec<Vec2> = (0..48)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 48.0;
            Vec2::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    for a in &coarse {
        for b in &coarse {
            let da = g2scatter::coherence::Detector { r: *a, e: opts.e_a };
            let db = g2scatter::coherence::Detector { r: *b, e: opts.e_b };
            let g = g2_from_couplings(em.p1, em.p2, &Couplings::compute(&fact, &em, &da, &db).unwrap()).unwrap();
            assert!(best.g2 >= g && worst.g2 <= g);
        }
    }
}

#[test]
fn detector_search_rect_and_errors() {
    let fact = SystemFactorization::assemble(generate_medium(&params(4, 20)).unwrap()).unwrap();
    let em = EmitterPair { r1: Vec2::new(-0.4, 0.1), r2: Vec2::new(0.5, -0.2), ..emitters(1.0) };
    let opts = SearchOptions { coarse: 6, e_a: dir_of(0.2), e_b: dir_of(1.1) };
    let region = SearchRegion::Rect(Rect { x0: 2.5, y0: -1.0, width: 1.0, height: 2.0 });
    let best = find_extremal_detectors(&fact, &em, &region, SearchTarget::Maximize, &opts).unwrap();
    assert!(best.g2 <= 1.0 + 1e-12);
    if let SearchRegion::Rect(r) = region {
        assert!(r.contains(&best.da.r) && r.contains(&best.db.r));
    }
    let empty = SearchRegion::Rect(Rect { x0: 2.5, y0: -1.0, width: 0.0, height: 2.0 });
    assert!(matches!(
        find_extremal_detectors(&fact, &em, &empty, SearchTarget::Minimize, &opts),
        Err(Error::Geometry(_))
    ));
}
