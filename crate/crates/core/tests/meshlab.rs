use std::f64::consts::PI;

use grw_core::meshlab::*;
use grw_core::spacetime::audit::observed_order;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pointwise `max |K' e^{2w} − (−Δw)|` after rescaling a flat unit torus by
/// `e^w`, with `w = a sin(2πx) cos(2πy)` and `Δw = −8π² w`.
fn torus_rescale_residual(n: usize) -> f64 {
    let mesh = SurfaceMesh::torus(n, n, 1.0, 1.0).unwrap();
    let w: Vec<f64> =
        mesh.positions().iter().map(|p| 0.2 * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos()).collect();
    let scaled = conformal_rescale(&mesh, &w.iter().map(|x| x.exp()).collect::<Vec<_>>()).unwrap();
    let k = angle_defect_curvature(&scaled).unwrap().curvature;
    (0..w.len()).map(|i| (k[i] * (2.0 * w[i]).exp() - 8.0 * PI * PI * w[i]).abs()).fold(0.0, f64::max)
}

/// Area-weighted L1 residual of `K' e^{2w} − (1 + 2w)` on the unit sphere
/// rescaled by `e^w`, `w = 0.3 z`, using `Δ_S z = −2z`.
fn sphere_rescale_residual(subdiv: usize) -> f64 {
    let mesh = SurfaceMesh::icosphere(subdiv, 1.0).unwrap();
    let w: Vec<f64> = mesh.positions().iter().map(|p| 0.3 * p[2]).collect();
    let scaled = conformal_rescale(&mesh, &w.iter().map(|x| x.exp()).collect::<Vec<_>>()).unwrap();
    let rep = angle_defect_curvature(&scaled).unwrap();
    let area = mesh.vertex_areas();
    let total: f64 = area.iter().sum();
    (0..w.len()).map(|i| area[i] * (rep.curvature[i] * (2.0 * w[i]).exp() - (1.0 + 2.0 * w[i])).abs()).sum::<f64>()
        / total
}

#[test]
fn gauss_bonnet_totals() {
    for s in 1..=4 {
        let rep = angle_defect_curvature(&SurfaceMesh::icosphere(s, 2.0).unwrap()).unwrap();
        assert!((rep.total - 4.0 * PI).abs() < 1e-9);
    }
    for n in [4, 8, 33] {
        let mesh = SurfaceMesh::torus(n, n + 2, 1.0, 0.7).unwrap();
        assert_eq!(mesh.euler_characteristic(), 0);
        assert!(angle_defect_curvature(&mesh).unwrap().total.abs() < 1e-9);
    }
}

#[test]
fn conformal_rescale_torus_converges() {
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| torus_rescale_residual(n)).collect();
    for w in e.windows(2) {
        assert!(observed_order(w[0], w[1]) > 1.5, "{e:?}");
    }
}

#[test]
fn conformal_rescale_sphere_converges() {
    let e: Vec<f64> = [2, 3, 4].iter().map(|&s| sphere_rescale_residual(s)).collect();
    for w in e.windows(2) {
        assert!(observed_order(w[0], w[1]) > 1.5, "{e:?}");
    }
}

#[test]
fn sphere_laplacian_spectrum() {
    let mesh = SurfaceMesh::icosphere(3, 1.0).unwrap();
    let ops = assemble(&mesh, &Coefficient::Identity, &vec![0.0; mesh.num_vertices()]).unwrap();
    let z: Vec<f64> = mesh.positions().iter().map(|p| p[2]).collect();
    let num = ops.stiffness.quadratic_form(&z);
    let den: f64 = z.iter().zip(&ops.mass).map(|(x, m)| m * x * x).sum();
    let err = (num / den - 2.0).abs();
    assert!(err < 0.02, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rescaled_gauss_bonnet_and_assembly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = SurfaceMesh::icosphere(2, 1.0).unwrap();
        let n = mesh.num_vertices();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.8..1.25)).collect();
        let scaled = conformal_rescale(&mesh, &w).unwrap();
        prop_assert!((angle_defect_curvature(&scaled).unwrap().total - 4.0 * PI).abs() < 1e-9);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let ops = assemble(&scaled, &Coefficient::Scalar(c), &vec![0.0; n]).unwrap();
        prop_assert!(ops.stiffness.max_asymmetry() < 1e-12);
        let row_sums = ops.stiffness.mul_vec(&vec![1.0; n]);
        prop_assert!(row_sums.iter().all(|s| s.abs() < 1e-10));
        prop_assert!(ops.mass.iter().all(|&m| m > 0.0));
        prop_assert!((ops.mass.iter().sum::<f64>() - scaled.total_area()).abs() < 1e-10);
    }
}
