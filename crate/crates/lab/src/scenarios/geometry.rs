use std::f64::consts::PI;

use grw_core::hypersurface::{
    identity_audit, slice, solve_maximal_graph, ChartGrid, ExtrinsicData, GraphHypersurface, MaximalGraph,
    DEFAULT_BAND,
};
use grw_core::meshlab::{assemble, Coefficient, SurfaceMesh};
use grw_core::spacetime::{BasePoint, FiberModel, GrwSpacetime, TangentVector, WarpingFunction};
use grw_core::spectral::{barta_bound, lambda1, positivity_solve, SchrodingerProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{max_abs, min_order, Out};
use crate::LabError;

type Res = Result<(), LabError>;

fn wavy(grid: &ChartGrid, t0: f64) -> Vec<f64> {
    (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            t0 + 0.05 * (3.0 * x).sin() * (2.0 * y).cos()
        })
        .collect()
}

fn max_trace_a2(d: &ExtrinsicData) -> f64 {
    max_abs((0..d.len()).map(|v| d.trace_a2(v)))
}

fn stability_lambda1(g: &GraphHypersurface, d: &ExtrinsicData) -> Result<f64, LabError> {
    Ok(lambda1(&g.stability_problem(d)?)?.lambda1)
}

pub(super) fn minkowski_slice(n: usize, out: &mut Out) -> Res {
    let st = GrwSpacetime::minkowski(2)?;
    let g = GraphHypersurface::constant(st, ChartGrid::torus(n, 1.0)?, 0.0)?;
    let d = g.extrinsic_geometry()?;
    let p = g.stability_problem(&d)?;
    let gs = lambda1(&p)?;
    let (lo, hi) = gs.sign_range();
    out.zero("lambda1", gs.lambda1, 1e-9, "first eigenvalue of the stability operator on the slice t = 0");
    out.zero("ground_state_spread", (hi - lo) / hi, 1e-8, "(max - min) / max of the first eigenfunction");
    out.zero("trace_a2_max", max_trace_a2(&d), 1e-12, "second fundamental form of a slice in a static spacetime");
    out.flag(
        "positive_jacobi_field",
        positivity_solve(&p)?.solution.is_some(),
        "a positive solution of Lu = 0 exists iff the slice is stable with lambda_1 = 0",
    );
    out.mesh(&g.induced_mesh()?);
    Ok(())
}

pub(super) fn de_sitter_equator(subdiv: usize, seed: u64, out: &mut Out) -> Res {
    let st = GrwSpacetime::de_sitter(2, 1.0)?;
    let m = st.dim() as f64;
    let dt = TangentVector::d_t(BasePoint::chart(0.0, &[0.0, 0.0]), 2);
    let ric_nn = st.ricci(&dt, &dt)?;
    let w = st.warping().eval(0.0)?;
    let trace_a2 = m * (w.d1 / w.rho).powi(2);
    let mesh = SurfaceMesh::icosphere(subdiv, w.rho)?;
    let n = mesh.num_vertices();
    let p = SchrodingerProblem::stability(&mesh, &vec![ric_nn; n], &vec![trace_a2; n])?;
    let g = lambda1(&p)?;
    out.rel("lambda1", g.lambda1, -m, 0.02, "first stability eigenvalue of the equator, -m for the unit sphere");
    out.near(
        "barta_at_ground_state",
        barta_bound(&p, &g.phi)?,
        g.lambda1,
        1e-8,
        "Barta quotient of the ground state equals lambda_1",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        worst = worst.max(barta_bound(&p, &u)? - g.lambda1);
    }
    out.at_most("barta_random_excess", worst, 0.0, 1e-8, "Barta quotient of positive functions is at most lambda_1");
    out.flag(
        "no_positive_jacobi_field",
        positivity_solve(&p)?.solution.is_none(),
        "an unstable closed hypersurface admits no positive solution of Lu = 0",
    );
    let v = w.rho;
    let kphi = p.ops.stiffness.mul_vec(&g.phi);
    let c = g.lambda1 + m * w.d2 / w.rho;
    let scale = max_abs(g.phi.iter().zip(&p.ops.mass).map(|(f, mi)| f * mi));
    let resid = max_abs((0..n).map(|i| kphi[i] - c * v * v * p.ops.mass[i] * g.phi[i])) / scale;
    out.zero(
        "general_divergence_identity",
        resid,
        1e-8,
        "lumped div(v^2 grad phi) + v^2 phi (lambda_1 + m rho''/rho), relative to max |m_i phi_i|",
    );
    out.mesh(&mesh);
    Ok(())
}

fn solver_metrics(out: &mut Out, prefix: &str, sol: &MaximalGraph) {
    out.at_most(&format!("{prefix}_iterations"), sol.iterations as f64, 25.0, 0.0, "Newton iterations of the solver");
    out.at_most(&format!("{prefix}_residual"), sol.residual(), 0.0, 1e-8, "largest interior |H| after solving");
}

pub(super) fn anti_de_sitter(n: usize, out: &mut Out) -> Res {
    let st = GrwSpacetime::anti_de_sitter(2, -1.0)?;
    let bound = -(st.dim() as f64) * -1.0;
    let grid = ChartGrid::patch(n, 0.5)?;
    let s0 = slice(&st, &grid, 0.0)?;
    out.zero("slice_mean_curvature", max_abs(s0.mean_curvature.iter().copied()), 1e-12, "H of the slice t = 0");
    out.zero("slice_trace_a2", max_trace_a2(&s0), 1e-12, "trace(A^2) of the slice t = 0");
    let s1 = slice(&st, &grid, 0.3)?;
    out.near(
        "slice_t03_mean_curvature",
        s1.mean_curvature[0],
        -(0.3f64).tan(),
        1e-12,
        "H = rho'/rho of the slice t = 0.3 with rho = cos t",
    );
    let sol = solve_maximal_graph(&st, &grid, &wavy(&grid, 0.2))?;
    solver_metrics(out, "graph", &sol);
    let d = sol.graph.extrinsic_geometry()?;
    out.at_most("graph_trace_a2_max", max_trace_a2(&d), bound, 0.0, "trace(A^2) <= -m kappa on maximal hypersurfaces");
    let audit = identity_audit(&sol.graph, DEFAULT_BAND)?;
    out.at_least("graph_kato_slack", audit.kato_slack, 0.0, 1e-9, "refined Kato inequality for |grad v|");
    out.at_least(
        "graph_lambda1",
        stability_lambda1(&sol.graph, &d)?,
        0.0,
        1e-6,
        "maximal graphs are stable under the timelike convergence condition",
    );
    out.mesh(&sol.graph.induced_mesh()?);
    Ok(())
}

struct Extremum {
    vertex: usize,
    interior: bool,
}

fn extremum(d: &ExtrinsicData, interior: &[bool], max: bool) -> Extremum {
    let sign = if max { 1.0 } else { -1.0 };
    let vertex = (0..d.len()).max_by(|&a, &b| (sign * d.eta[a]).total_cmp(&(sign * d.eta[b]))).unwrap_or(0);
    Extremum { vertex, interior: interior[vertex] }
}

pub(super) fn de_sitter_endpoints(n: usize, out: &mut Out) -> Res {
    let st = GrwSpacetime::de_sitter(2, 1.0)?;
    let grid = ChartGrid::patch(n, 0.5)?;
    let interior = grid.interior_mask(1);
    for (label, t0) in [("upper", 0.3), ("centered", 0.0)] {
        let sol = solve_maximal_graph(&st, &grid, &wavy(&grid, t0))?;
        solver_metrics(out, label, &sol);
        let d = sol.graph.extrinsic_geometry()?;
        let mesh = sol.graph.induced_mesh()?;
        let n_v = mesh.num_vertices();
        let ops = assemble(&mesh, &Coefficient::Identity, &vec![0.0; n_v])?;
        let k_eta = ops.stiffness.mul_vec(&d.eta);
        let lap = |v: usize| -k_eta[v] / ops.mass[v];
        let tau = sol.graph.heights();

        let top = extremum(&d, &interior, true);
        if label == "upper" {
            out.flag("upper_eta_max_interior", top.interior, "boundary data below the center height puts the maximum inside");
        }
        if top.interior {
            out.at_least(
                &format!("{label}_rho_prime_at_eta_max"),
                st.warping().eval(tau[top.vertex])?.d1,
                0.0,
                1e-8,
                "rho'(tau) >= 0 at an interior maximum of eta",
            );
            out.at_most(&format!("{label}_lap_eta_at_eta_max"), lap(top.vertex), 0.0, 1e-8, "Delta eta <= 0 at an interior maximum");
        }
        let bottom = extremum(&d, &interior, false);
        if bottom.interior {
            out.at_most(
                &format!("{label}_rho_prime_at_eta_min"),
                st.warping().eval(tau[bottom.vertex])?.d1,
                0.0,
                1e-8,
                "rho'(tau) <= 0 at an interior minimum of eta",
            );
            out.at_least(&format!("{label}_lap_eta_at_eta_min"), lap(bottom.vertex), 0.0, 1e-8, "Delta eta >= 0 at an interior minimum");
        }
        if label == "centered" {
            let (lo, hi) = tau.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
            out.at_least(
                "centered_tau_range_straddles_zero",
                (-lo).min(hi),
                0.0,
                0.0,
                "the height range of the graph meets the slice where rho' vanishes",
            );
        }
        out.mesh(&mesh);
    }
    Ok(())
}

pub(super) fn divergence_identity(n: usize, out: &mut Out) -> Res {
    let rho = WarpingFunction::polynomial(vec![1.0, 0.0, 0.0, 1.0], -0.9, 2.0)?;
    let st = GrwSpacetime::new(rho, FiberModel::constant_curvature(2, 0.0)?);
    let m = st.dim() as f64;
    let g = GraphHypersurface::constant(st.clone(), ChartGrid::torus(n, 1.0)?, 0.0)?;
    let d = g.extrinsic_geometry()?;
    let gs = lambda1(&g.stability_problem(&d)?)?;
    out.zero("lambda1", gs.lambda1, 1e-9, "first stability eigenvalue of the closed slice");
    let phi: Vec<f64> = gs.phi.iter().zip(&d.v).map(|(u, v)| u / v).collect();
    let v2: Vec<f64> = d.v.iter().map(|v| v * v).collect();
    let mesh = g.induced_mesh()?;
    let ops = assemble(&mesh, &Coefficient::Scalar(v2.clone()), &vec![0.0; d.len()])?;
    let total: f64 = ops.stiffness.mul_vec(&phi).iter().map(|x| -x).sum();
    let heights = g.heights();
    let mut rhs = 0.0;
    for i in 0..d.len() {
        let w = st.warping().eval(heights[i])?;
        rhs -= m * (w.d2 / w.rho) * v2[i] * phi[i] * ops.mass[i];
    }
    out.zero("divergence_total", total, 1e-8, "closed-mesh total of div(v^2 grad phi), phi = u/v");
    out.near("divergence_total_vs_rhs", total, rhs, 1e-6, "total against -m sum (rho''/rho) v^2 phi");
    out.mesh(&mesh);
    Ok(())
}

pub(super) fn maximal_solver(n: usize, out: &mut Out) -> Res {
    let mk = GrwSpacetime::minkowski(2)?;
    let grid = ChartGrid::patch(n, 0.5)?;

    let zero = solve_maximal_graph(&mk, &grid, &vec![0.0; grid.num_vertices()])?;
    out.zero("zero_data_height", max_abs(zero.graph.heights().iter().copied()), 1e-10, "zero boundary data gives u = 0");

    let affine: Vec<f64> = (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            0.2 * x - 0.3 * y + 0.1
        })
        .collect();
    let sol = solve_maximal_graph(&mk, &grid, &affine)?;
    out.zero(
        "affine_trace_a2_max",
        max_trace_a2(&sol.graph.extrinsic_geometry()?),
        1e-8,
        "spacelike hyperplanes of Lorentz-Minkowski space are totally geodesic",
    );

    let ads = GrwSpacetime::anti_de_sitter(2, -1.0)?;
    for (label, st, t0) in [("minkowski", &mk, 0.0), ("antidesitter", &ads, 0.2)] {
        let sol = solve_maximal_graph(st, &grid, &wavy(&grid, t0))?;
        solver_metrics(out, label, &sol);
        let d = sol.graph.extrinsic_geometry()?;
        let (unit, tangency) = d.normal_residuals(&grid.gradient(sol.graph.heights()), sol.graph.ambient().fiber().constant_kappa().unwrap_or(0.0));
        out.zero(&format!("{label}_normal_unit"), unit, 1e-10, "g(N, N) + 1");
        out.zero(&format!("{label}_normal_tangency"), tangency, 1e-10, "g(N, X) for coordinate tangents X");
        out.at_least(
            &format!("{label}_lambda1"),
            stability_lambda1(&sol.graph, &d)?,
            0.0,
            1e-6,
            "maximal graphs are stable under the timelike convergence condition",
        );
        out.at_least(
            &format!("{label}_kato_slack"),
            identity_audit(&sol.graph, DEFAULT_BAND)?.kato_slack,
            0.0,
            1e-9,
            "(m-1)/m trace(A^2)(v^2 - rho^2) - |grad v|^2",
        );
        out.mesh(&sol.graph.induced_mesh()?);
    }
    Ok(())
}

fn random_torus_graph(st: &GrwSpacetime, n: usize, t0: f64, modes: &[(f64, f64, f64, f64)]) -> Result<GraphHypersurface, LabError> {
    let grid = ChartGrid::torus(n, 1.0)?;
    let u = (0..grid.num_vertices())
        .map(|v| {
            let [x, y] = grid.point(v);
            t0 + modes.iter().map(|&(a, b, c, ph)| c * (2.0 * PI * (a * x + b * y) + ph).cos()).sum::<f64>()
        })
        .collect();
    Ok(GraphHypersurface::new(st.clone(), grid, u)?)
}

pub(super) fn convergence(n: usize, cfg: &crate::ScenarioConfig, out: &mut Out) -> Res {
    let params = &cfg.params;
    let st = if params.get_str("model").is_some() || params.get_str("warping").is_some() {
        GrwSpacetime::from_config(params)?
    } else {
        GrwSpacetime::steady_state(2)?
    };
    let t0: f64 = params.get_or("t0", 0.2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(1..=2) as f64,
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(-0.005..0.005),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut cols: [Vec<f64>; 5] = Default::default();
    for k in 0..3 {
        let g = random_torus_graph(&st, n << k, t0, &modes)?;
        let r = identity_audit(&g, 0)?;
        let vals = [r.grad_tau, r.grad_eta, r.lap_eta, r.lap_v, r.gauss];
        for (c, x) in cols.iter_mut().zip(vals) {
            c.push(x);
        }
        let mut row = vec![1.0 / (n << k) as f64];
        row.extend(vals);
        rows.push(row);
        out.mesh(&g.induced_mesh()?);
    }
    out.table("torus_refinement", &["h", "grad_tau", "grad_eta", "lap_eta", "lap_v", "gauss"], rows);
    let names = ["grad_tau", "grad_eta", "lap_eta", "lap_v", "gauss"];
    let what = [
        "|grad tau|^2 - sinh^2 theta",
        "|grad eta|^2 - (v^2 - rho^2)",
        "Delta eta - (-m rho' + m H v)",
        "Delta v identity",
        "Gauss equation with angle-defect curvature",
    ];
    for i in 0..5 {
        out.at_least(&format!("{}_order", names[i]), min_order(&cols[i]), 1.5, 0.0, what[i]);
    }

    let ds = GrwSpacetime::de_sitter(2, 1.0)?;
    let edge: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(1..=3) as f64,
                rng.gen_range(-3..=3) as f64,
                rng.gen_range(-0.02..0.02),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut lap = Vec::new();
    let mut rows = Vec::new();
    let mut kato = f64::INFINITY;
    for q in [33usize, 65, 129] {
        let grid = ChartGrid::patch(q, 0.5)?;
        let data: Vec<f64> = (0..grid.num_vertices())
            .map(|v| {
                let [x, y] = grid.point(v);
                0.3 + edge.iter().map(|&(a, b, c, ph)| c * (a * x + b * y + ph).cos()).sum::<f64>()
            })
            .collect();
        let sol = solve_maximal_graph(&ds, &grid, &data)?;
        let r = identity_audit(&sol.graph, (q - 1) / 4)?;
        kato = kato.min(identity_audit(&sol.graph, DEFAULT_BAND)?.kato_slack);
        lap.push(r.lap_eta_maximal);
        rows.push(vec![1.0 / (q - 1) as f64, r.lap_eta_maximal]);
    }
    out.table("maximal_refinement", &["h", "lap_eta_maximal"], rows);
    out.at_least("maximal_lap_eta_order", min_order(&lap), 1.5, 0.0, "Delta eta + m rho' on solved maximal graphs, central region");
    out.at_least("maximal_kato_slack", kato, 0.0, 1e-9, "refined Kato inequality on solved maximal graphs");
    Ok(())
}
