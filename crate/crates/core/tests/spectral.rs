use std::f64::consts::PI;

use grw_core::meshlab::{Coefficient, SurfaceMesh};
use grw_core::spectral::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn j0_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let y = 0.25 * x * x;
    for k in 1..80 {
        term *= -y / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

fn j0_zeros(count: usize) -> Vec<f64> {
    let mut zeros = Vec::new();
    let mut a = 0.5;
    while zeros.len() < count {
        let b = a + 0.05;
        if j0_series(a).signum() != j0_series(b).signum() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if j0_series(lo).signum() == j0_series(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
    }
    zeros
}

fn flat(mesh: &SurfaceMesh, q: f64) -> SchrodingerProblem {
    let qv = vec![q; mesh.num_vertices()];
    SchrodingerProblem::assemble(mesh, &Coefficient::Identity, &qv, Provenance::Custom("flat".into())).unwrap()
}

fn planar_distance(mesh: &SurfaceMesh, c: [f64; 2]) -> Vec<f64> {
    mesh.positions().iter().map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()).collect()
}

#[test]
fn bessel_zeros() {
    let eps = 2.0;
    let prof = RadialProfile::new(ProfileFn::func(|r| r), ProfileFn::Constant(eps), 0.0, 12.0).unwrap();
    let sol = radial_cauchy_solve(&prof).unwrap();
    let oracle = j0_zeros(5);
    assert!(sol.zeros.len() >= 5);
    for k in 0..5 {
        let want = oracle[k] / eps.sqrt();
        assert!((sol.zeros[k] - want).abs() < 1e-6, "zero {k}: {} vs {want}", sol.zeros[k]);
    }
    for &r in &[0.3, 1.7, 4.2] {
        assert!((sol.z_at(r) - j0_series(eps.sqrt() * r)).abs() < 1e-8);
    }
}

#[test]
fn nonoscillatory_inverse_square() {
    let prof = RadialProfile::new(ProfileFn::func(|r| r), ProfileFn::func(|r| -1.0 / (r * r)), 1.0, 2.0).unwrap();
    let rep = oscillation_classify(&prof, 1e3).unwrap();
    assert!(rep.zeros.is_empty());
    assert_eq!(rep.classification, Oscillation::NonOscillatoryUpTo(1e3));
    assert!(rep.inverse_w.diverging && !rep.aw.diverging);
}

#[test]
fn radial_solve_is_deterministic() {
    let prof = RadialProfile::new(ProfileFn::func(|r| r * r), ProfileFn::Constant(3.0), 0.0, 30.0).unwrap();
    assert_eq!(radial_cauchy_solve(&prof).unwrap(), radial_cauchy_solve(&prof).unwrap());
}

#[test]
fn minkowski_torus_ground_state() {
    let mesh = SurfaceMesh::torus(32, 32, 1.0, 1.0).unwrap();
    let g = lambda1(&flat(&mesh, 0.0)).unwrap();
    assert!(g.lambda1.abs() < 1e-9, "{}", g.lambda1);
    let (lo, hi) = g.sign_range();
    assert!((hi - lo) / hi < 1e-8);
}

#[test]
fn de_sitter_equator_and_barta() {
    let mesh = SurfaceMesh::icosphere(4, 1.0).unwrap();
    let n = mesh.num_vertices();
    let p = SchrodingerProblem::stability(&mesh, &vec![-2.0; n], &vec![0.0; n]).unwrap();
    let g = lambda1(&p).unwrap();
    assert!((g.lambda1 + 2.0).abs() < 0.04);
    assert!((barta_bound(&p, &g.phi).unwrap() - g.lambda1).abs() < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        assert!(barta_bound(&p, &u).unwrap() <= -2.0 + 1e-6);
    }
    assert!(positivity_solve(&p).unwrap().solution.is_none());
}

#[test]
fn disk_monotonicity_scaling() {
    let mesh = SurfaceMesh::torus(128, 128, 1.0, 1.0).unwrap();
    let p = flat(&mesh, 0.0);
    let d = planar_distance(&mesh, [0.5, 0.5]);
    let disk = |r: f64| (0..d.len()).filter(|&i| d[i] < r).collect::<Vec<_>>();
    let rep = monotonicity_check(&p, &disk(0.2), &disk(0.4)).unwrap();
    assert!(rep.holds && rep.strict_expected);
    let ratio = rep.lambda_inner / rep.lambda_outer;
    assert!((ratio / 4.0 - 1.0).abs() < 0.05, "ratio {ratio}");
    let j01 = j0_zeros(1)[0];
    assert!((rep.lambda_outer / (j01 * j01 / 0.16) - 1.0).abs() < 0.05);
}

#[test]
fn annulus_with_random_potential_is_strict() {
    let mesh = SurfaceMesh::torus(48, 48, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = SchrodingerProblem::assemble(&mesh, &Coefficient::Identity, &q, Provenance::Custom("random".into())).unwrap();
    let d = planar_distance(&mesh, [0.5, 0.5]);
    let annulus: Vec<usize> = (0..d.len()).filter(|&i| d[i] > 0.15 && d[i] < 0.35).collect();
    let disk: Vec<usize> = (0..d.len()).filter(|&i| d[i] < 0.35).collect();
    let rep = monotonicity_check(&p, &annulus, &disk).unwrap();
    assert!(rep.holds && rep.gap > 0.0);
}

#[test]
fn matched_annulus_quotient() {
    let mesh = SurfaceMesh::rectangle(160, 160, (-2.0, 2.0), (-2.0, 2.0)).unwrap();
    let p = flat(&mesh, -2.0);
    let d = planar_distance(&mesh, [0.0, 0.0]);
    let prof =
        RadialProfile::new(ProfileFn::func(|r| 2.0 * PI * r), ProfileFn::Constant(2.0), 0.0, 1.9).unwrap();
    let sol = radial_cauchy_solve(&prof).unwrap();
    let q = annulus_rayleigh(&p, &sol, sol.start(), sol.zeros[0], &d).unwrap();
    assert!(q <= 1e-3, "{q}");
    let shells = radial_profile_from_problem(&p, &d, 0.05, 1.9).unwrap();
    let sol2 = radial_cauchy_solve(&shells).unwrap();
    let q2 = annulus_rayleigh(&p, &sol2, sol2.start(), sol2.zeros[0], &d).unwrap();
    assert!(q2 <= 1e-3, "{q2}");
    assert!(annulus_rayleigh(&p, &sol, 0.5, sol.zeros[0], &d).is_err());
}

#[test]
fn constant_annulus_quotient_vanishes() {
    let mesh = SurfaceMesh::torus(16, 16, 1.0, 1.0).unwrap();
    let p = flat(&mesh, 0.0);
    let d = planar_distance(&mesh, [0.5, 0.5]);
    let prof = RadialProfile::new(ProfileFn::Constant(1.0), ProfileFn::Constant(0.0), 0.0, 1.0).unwrap();
    let sol = radial_cauchy_solve(&prof).unwrap();
    assert!(annulus_rayleigh(&p, &sol, 0.0, 1.0, &d).unwrap().abs() < 1e-12);
}

#[test]
fn dirichlet_resonance_is_reported() {
    let mesh = SurfaceMesh::rectangle(8, 8, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let l = lambda1(&flat(&mesh, 0.0)).unwrap().lambda1;
    let p = flat(&mesh, -l);
    assert!(matches!(positivity_solve(&p), Err(grw_core::Error::Resonance(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn picone_identity_holds(seed in any::<u64>()) {
        let mesh = SurfaceMesh::rectangle(6, 6, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = mesh.num_vertices();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let tensors = (0..n)
            .map(|_| {
                let a = rng.gen_range(0.5..2.0);
                let c = rng.gen_range(0.5..2.0);
                let b = rng.gen_range(-0.3..0.3);
                nalgebra::Matrix2::new(a, b, b, c)
            })
            .collect();
        let rep = picone_residual(&mesh, &u, &v, &Coefficient::Tensor(tensors)).unwrap();
        prop_assert!(rep.max_residual < 1e-12);
        prop_assert!(rep.min_slack >= -1e-14);
    }

    #[test]
    fn barta_never_exceeds_lambda1(seed in any::<u64>()) {
        let mesh = SurfaceMesh::rectangle(10, 10, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = SchrodingerProblem::assemble(&mesh, &Coefficient::Identity, &q, Provenance::Custom("r".into())).unwrap();
        let g = lambda1(&p).unwrap();
        prop_assert!(((g.rayleigh - g.lambda1) / g.lambda1.abs().max(1.0)).abs() < 1e-10);
        prop_assert!(g.sign_range().0 > 0.0);
        let u: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(0.1..1.0)).collect();
        prop_assert!(barta_bound(&p, &u).unwrap() <= g.lambda1 + 1e-8);
    }

    #[test]
    fn nonpositive_potential_never_oscillates(a in 0.0f64..3.0, p in 0.0f64..2.0) {
        let prof = RadialProfile::new(ProfileFn::func(move |r| r.powf(p) + 0.1), ProfileFn::Constant(-a), 0.0, 20.0).unwrap();
        let sol = radial_cauchy_solve(&prof).unwrap();
        prop_assert!(sol.zeros.is_empty());
        prop_assert!(sol.z.iter().all(|&z| z >= 1.0));
    }
}
