use std::f64::consts::PI;

use grw_core::hypersurface::*;
use grw_core::spacetime::audit::observed_order;
use grw_core::spacetime::{FiberModel, GrwSpacetime, WarpingFunction};
use grw_core::spectral::lambda1;
use proptest::prelude::*;

fn torus_graph(st: &GrwSpacetime, n: usize, t0: f64, amp: f64) -> GraphHypersurface {
    let grid = ChartGrid::torus(n, 1.0).unwrap();
    let u = (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            let (a, b) = (2.0 * PI * x, 2.0 * PI * y);
            t0 + amp * (a.sin() * (2.0 * b).cos() + 0.5 * (a + b).cos() + 0.3 * (2.0 * a - b).sin())
        })
        .collect();
    GraphHypersurface::new(st.clone(), grid, u).unwrap()
}

fn patch_graph(st: &GrwSpacetime, n: usize, t0: f64, amp: f64) -> GraphHypersurface {
    let grid = ChartGrid::patch(n, 0.5).unwrap();
    let u = (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            t0 + amp * ((2.0 * x).sin() * (1.5 * y).cos() + x * y)
        })
        .collect();
    GraphHypersurface::new(st.clone(), grid, u).unwrap()
}

fn wavy_boundary(grid: &ChartGrid, t0: f64) -> Vec<f64> {
    (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            t0 + 0.05 * (3.0 * x).sin() * (2.0 * y).cos()
        })
        .collect()
}

fn orders(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| observed_order(w[0], w[1])).collect()
}

#[test]
fn de_sitter_slice_values() {
    let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let grid = ChartGrid::patch(9, 0.5).unwrap();
    let s = slice(&st, &grid, 1.0).unwrap();
    let c = 1f64.cosh();
    for v in 0..s.len() {
        assert!((s.mean_curvature[v] - 1f64.tanh()).abs() < 1e-15);
        assert!((s.v[v] - c).abs() < 1e-15);
        assert!((s.trace_a2(v) - 2.0 * 1f64.tanh().powi(2)).abs() < 1e-14);
        assert!((s.ric_nn[v] + 2.0).abs() < 1e-12);
        assert!((s.scalar_bar[v] - 6.0).abs() < 1e-12);
    }
}

#[test]
fn slice_audits_are_exact() {
    let st = GrwSpacetime::steady_state(2).unwrap();
    let g = GraphHypersurface::constant(st, ChartGrid::torus(12, 1.0).unwrap(), 0.4).unwrap();
    let r = identity_audit(&g, DEFAULT_BAND).unwrap();
    for x in [r.grad_tau, r.grad_eta, r.lap_eta, r.lap_v, r.gauss, r.normal_unit] {
        assert!(x.abs() < 1e-12, "{r:?}");
    }
    let ds = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let g = GraphHypersurface::constant(ds, ChartGrid::patch(13, 0.5).unwrap(), 1.0).unwrap();
    let r = identity_audit(&g, DEFAULT_BAND).unwrap();
    for x in [r.grad_tau, r.grad_eta, r.lap_eta, r.lap_v] {
        assert!(x.abs() < 1e-12, "{r:?}");
    }
    for k in 0..2 {
        let l = lk_identity_audit(&g, k, DEFAULT_BAND).unwrap();
        assert!(l.eta < 1e-12 && l.v < 1e-12, "{l:?}");
    }
}

#[test]
fn torus_identities_converge_at_second_order() {
    let st = GrwSpacetime::steady_state(2).unwrap();
    let reps: Vec<IdentityReport> =
        [32, 64, 128].iter().map(|&n| identity_audit(&torus_graph(&st, n, 0.2, 0.02), 0).unwrap()).collect();
    let fields: [(&str, fn(&IdentityReport) -> f64); 5] = [
        ("grad_tau", |r| r.grad_tau),
        ("grad_eta", |r| r.grad_eta),
        ("lap_eta", |r| r.lap_eta),
        ("lap_v", |r| r.lap_v),
        ("gauss", |r| r.gauss),
    ];
    for (name, f) in fields {
        let e: Vec<f64> = reps.iter().map(f).collect();
        for p in orders(&e) {
            assert!(p >= 1.5, "{name}: {e:?}");
        }
    }
    for r in &reps {
        assert!(r.lap_eta_alt > 1.0);
        assert!(r.kato_slack_unrefined >= -1e-12);
    }
}

#[test]
fn sphere_fiber_gauss_and_lk_converge() {
    let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let mut gauss = Vec::new();
    let mut lk1 = Vec::new();
    for n in [33, 65, 129] {
        let g = patch_graph(&st, n, 0.3, 0.1);
        gauss.push(identity_audit(&g, DEFAULT_BAND).unwrap().gauss);
        let l = lk_identity_audit(&g, 1, DEFAULT_BAND).unwrap();
        lk1.push(l.eta.max(l.v));
    }
    for p in orders(&gauss).into_iter().chain(orders(&lk1)) {
        assert!(p >= 1.5, "{gauss:?} {lk1:?}");
    }
}

#[test]
fn lk_at_zero_is_the_laplacian_line() {
    let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let g = patch_graph(&st, 25, 0.3, 0.1);
    let r = identity_audit(&g, DEFAULT_BAND).unwrap();
    let l = lk_identity_audit(&g, 0, DEFAULT_BAND).unwrap();
    assert!((l.eta - r.lap_eta).abs() < 1e-12);
    assert!(lk_identity_audit(&g, 2, DEFAULT_BAND).is_err());
}

#[test]
fn lk_requires_constant_curvature() {
    let w = WarpingFunction::polynomial(vec![1.0, 0.0, 0.0, 1.0], -0.5, 2.0).unwrap();
    let st = GrwSpacetime::new(w, FiberModel::constant_curvature(2, 0.0).unwrap());
    let g = torus_graph(&st, 8, 0.5, 0.01);
    assert!(matches!(lk_identity_audit(&g, 1, 0), Err(grw_core::Error::Precondition(_))));
    assert!(identity_audit(&g, 0).is_ok());
}

#[test]
fn minkowski_zero_boundary_is_flat() {
    let st = GrwSpacetime::minkowski(2).unwrap();
    let grid = ChartGrid::patch(16, 1.0).unwrap();
    let sol = solve_maximal_graph(&st, &grid, &vec![0.0; grid.num_vertices()]).unwrap();
    assert!(sol.residual() < 1e-10);
    assert!(sol.graph.heights().iter().all(|u| u.abs() < 1e-14));
}

#[test]
fn de_sitter_maximal_graph() {
    let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let grid = ChartGrid::patch(33, 0.5).unwrap();
    let b = wavy_boundary(&grid, 0.3);
    let sol = solve_maximal_graph(&st, &grid, &b).unwrap();
    assert!(sol.iterations <= 25);
    let h = sol.graph.mean_curvature().unwrap();
    let interior = grid.interior_mask(1);
    for v in 0..h.len() {
        if interior[v] {
            assert!(h[v].abs() < 1e-8);
        } else {
            assert_eq!(sol.graph.heights()[v], b[v]);
        }
    }
    let r = identity_audit(&sol.graph, DEFAULT_BAND).unwrap();
    assert!(r.kato_slack >= -1e-9, "{r:?}");
    let d = sol.graph.extrinsic_geometry().unwrap();
    let l = lambda1(&sol.graph.stability_problem(&d).unwrap()).unwrap().lambda1;
    assert!(l >= -1e-6, "{l}");
}

#[test]
fn maximal_laplacian_identity_converges() {
    let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let e: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let grid = ChartGrid::patch(n, 0.5).unwrap();
            let sol = solve_maximal_graph(&st, &grid, &wavy_boundary(&grid, 0.3)).unwrap();
            identity_audit(&sol.graph, (n - 1) / 4).unwrap().lap_eta_maximal
        })
        .collect();
    for p in orders(&e) {
        assert!(p >= 1.5, "{e:?}");
    }
}

#[test]
fn steep_boundary_is_rejected() {
    let st = GrwSpacetime::minkowski(2).unwrap();
    let grid = ChartGrid::patch(12, 1.0).unwrap();
    let b: Vec<f64> = (0..grid.num_vertices()).map(|v| 1.2 * grid.point(v)[0]).collect();
    assert!(matches!(solve_maximal_graph(&st, &grid, &b), Err(grw_core::Error::NotSpacelike { .. })));
    assert!(solve_maximal_graph(&st, &ChartGrid::torus(8, 1.0).unwrap(), &[0.0; 64]).is_err());
}

#[test]
fn orientation_flip() {
    let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let g = patch_graph(&st, 17, 0.3, 0.1);
    let d = g.extrinsic_geometry().unwrap();
    let f = d.flipped();
    for v in 0..d.len() {
        assert_eq!(f.mean_curvature[v], -d.mean_curvature[v]);
        assert_eq!(f.h_k[v][1], d.h_k[v][1]);
        assert!((f.trace_a2(v) - d.trace_a2(v)).abs() < 1e-14);
        assert_eq!(f.normal[v][0], -d.normal[v][0]);
    }
    let p = g.stability_problem(&d).unwrap().potential();
    let q = g.stability_problem(&f).unwrap().potential();
    for (a, b) in p.iter().zip(&q) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn text_round_trip_rejects_other_grids() {
    let st = GrwSpacetime::minkowski(2).unwrap();
    let g = torus_graph(&st, 10, 0.0, 0.01);
    let text = g.to_text().unwrap();
    let back = GraphHypersurface::from_text(st.clone(), g.grid().clone(), &text).unwrap();
    assert_eq!(back, g);
    assert!(GraphHypersurface::from_text(st, ChartGrid::torus(10, 2.0).unwrap(), &text).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_graph_invariants(a in -0.02f64..0.02, b in -0.02f64..0.02, t0 in -0.5f64..0.5) {
        let st = GrwSpacetime::steady_state(2).unwrap();
        let grid = ChartGrid::torus(16, 1.0).unwrap();
        let u = (0..grid.num_vertices())
            .map(|v| {
                let [x, y] = grid.point(v);
                t0 + a * (2.0 * PI * x).sin() + b * (2.0 * PI * (x + y)).cos()
            })
            .collect();
        let g = GraphHypersurface::new(st, grid, u).unwrap();
        let d = g.extrinsic_geometry().unwrap();
        let du = g.grid().gradient(g.heights());
        let (unit, tangency) = d.normal_residuals(&du, 0.0);
        prop_assert!(unit < 1e-12 && tangency < 1e-12);
        for v in 0..d.len() {
            prop_assert!(d.cosh_theta[v] >= 1.0 && d.v[v] >= d.warp[v].rho);
            let h_sum: f64 = -d.shape[v].trace() / 2.0;
            prop_assert!((h_sum - d.mean_curvature[v]).abs() < 1e-10);
        }
        let r = identity_audit(&g, 0).unwrap();
        prop_assert!(r.kato_slack_unrefined >= -1e-12);
    }
}

#[test]
fn equator_patch_and_affine_data() {
    let ds = GrwSpacetime::de_sitter(2, 1.0).unwrap();
    let grid = ChartGrid::patch(15, 0.5).unwrap();
    let nb = grid.mesh().boundary_vertices().len();
    let sol = solve_maximal_graph(&ds, &grid, &vec![0.0; nb]).unwrap();
    assert!(sol.graph.heights().iter().all(|u| u.abs() < 1e-14));

    let mk = GrwSpacetime::minkowski(2).unwrap();
    let b: Vec<f64> = (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            0.2 * x - 0.3 * y + 0.1
        })
        .collect();
    let sol = solve_maximal_graph(&mk, &grid, &b).unwrap();
    let d = sol.graph.extrinsic_geometry().unwrap();
    assert!((0..d.len()).all(|v| d.trace_a2(v) < 1e-8));
}

#[test]
fn minkowski_wavy_patch_is_stable() {
    let st = GrwSpacetime::minkowski(2).unwrap();
    let grid = ChartGrid::patch(25, 0.5).unwrap();
    let sol = solve_maximal_graph(&st, &grid, &wavy_boundary(&grid, 0.0)).unwrap();
    assert!(sol.iterations <= 25 && sol.residual() < 1e-8);
    let d = sol.graph.extrinsic_geometry().unwrap();
    let (unit, tangency) = d.normal_residuals(&grid.gradient(sol.graph.heights()), 0.0);
    assert!(unit < 1e-10 && tangency < 1e-10);
    assert!(lambda1(&sol.graph.stability_problem(&d).unwrap()).unwrap().lambda1 >= -1e-6);
    assert!(identity_audit(&sol.graph, DEFAULT_BAND).unwrap().kato_slack >= -1e-9);
}
