use std::f64::consts::PI;

use grw_core::meshlab::{angle_defect_curvature, conformal_rescale, Coefficient, SurfaceMesh};
use grw_core::spacetime::audit::{christoffel_oracle_error, observed_order, riemann_oracle_error};
use grw_core::spacetime::{BasePoint, FiberModel, GrwSpacetime, TangentVector, WarpingFunction};
use grw_core::spectral::{
    annulus_rayleigh, barta_bound, lambda1, monotonicity_check, oscillation_classify, picone_residual,
    positivity_solve, radial_cauchy_solve, radial_profile_from_problem, Oscillation, ProfileFn, Provenance,
    RadialProfile, SchrodingerProblem,
};
use grw_core::symalg::{
    constrained_sample, ellipticity, invariants, kstab_potential, kstab_potential_from_curvatures, newton_constant,
    newton_tensor, newton_tensors, random_orthogonal, random_symendo, SymEndo,
};
use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{max_abs, min_order, Out};
use crate::LabError;

type Res = Result<(), LabError>;

fn bessel_j0(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= -y / (k * k) as f64;
        sum += term;
    }
    sum
}

fn bessel_j0_zeros(count: usize) -> Vec<f64> {
    let mut zeros = Vec::new();
    let mut a: f64 = 0.5;
    while zeros.len() < count {
        let b = a + 0.05;
        if bessel_j0(a).signum() != bessel_j0(b).signum() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if bessel_j0(lo).signum() == bessel_j0(mid).signum() {
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

fn planar_distance(mesh: &SurfaceMesh, c: [f64; 2]) -> Vec<f64> {
    mesh.positions().iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).collect()
}

fn flat_problem(mesh: &SurfaceMesh, q: f64) -> Result<SchrodingerProblem, LabError> {
    let qv = vec![q; mesh.num_vertices()];
    Ok(SchrodingerProblem::assemble(mesh, &Coefficient::Identity, &qv, Provenance::Custom("flat".into()))?)
}

pub(super) fn oscillation(n: usize, out: &mut Out) -> Res {
    let eps = 2.0;
    let prof = RadialProfile::new(ProfileFn::func(|r| r), ProfileFn::Constant(eps), 0.0, 12.0)?;
    let sol = radial_cauchy_solve(&prof)?;
    let oracle = bessel_j0_zeros(5);
    let err = if sol.zeros.len() >= 5 {
        max_abs((0..5).map(|k| sol.zeros[k] - oracle[k] / eps.sqrt()))
    } else {
        f64::NAN
    };
    out.zero("bessel_zero_error", err, 1e-6, "first five zeros of J0(sqrt(eps) r) for w = r, A = eps");

    let mut spacing_err: f64 = 0.0;
    let mut zero_err: f64 = 0.0;
    for eps in [2.0, 5.0] {
        let beta = (eps - 1.0f64).sqrt();
        let prof = RadialProfile::new(ProfileFn::func(|r| (2.0 * r).exp()), ProfileFn::Constant(eps), 0.0, 20.0)?;
        let sol = radial_cauchy_solve(&prof)?;
        if sol.zeros.len() < 3 {
            spacing_err = f64::NAN;
            continue;
        }
        for w in sol.zeros.windows(2) {
            spacing_err = spacing_err.max((w[1] - w[0] - PI / beta).abs());
        }
        let first = (PI - beta.atan()) / beta;
        for (k, z) in sol.zeros.iter().enumerate() {
            zero_err = zero_err.max((z - (first + k as f64 * PI / beta)).abs());
        }
    }
    out.zero("constant_coefficient_spacing_error", spacing_err, 1e-6, "zero spacing pi / sqrt(eps - 1) for w = e^{2r}, A = eps");
    out.zero("constant_coefficient_zero_error", zero_err, 1e-6, "zeros of e^{-r}(cos beta r + sin(beta r) / beta)");

    let cases: [(ProfileFn, ProfileFn, f64); 3] = [
        (ProfileFn::func(|r| r), ProfileFn::func(|r| -1.0 / (r * r)), 1.0),
        (ProfileFn::func(|r| r), ProfileFn::Constant(0.0), 0.0),
        (ProfileFn::func(|r| 1.0 + r), ProfileFn::func(|r| -1.0 / (1.0 + r).powi(3)), 0.0),
    ];
    let mut zeros = 0usize;
    for (w, a, r0) in cases {
        let rep = oscillation_classify(&RadialProfile::new(w, a, r0, r0 + 1.0)?, 1e3)?;
        zeros += rep.zeros.len();
    }
    out.zero("nonpositive_potential_zeros", zeros as f64, 0.0, "no zeros up to r = 1000 when A <= 0");
    let bessel = oscillation_classify(&prof_bessel()?, 200.0)?;
    out.flag(
        "bessel_is_oscillatory",
        bessel.classification == Oscillation::Oscillatory && bessel.criterion_satisfied,
        "both integrals of 1/w and A w diverge and the solution oscillates",
    );

    let mesh = SurfaceMesh::rectangle(n, n, (-2.0, 2.0), (-2.0, 2.0))?;
    let p = flat_problem(&mesh, -2.0)?;
    let d = planar_distance(&mesh, [0.0, 0.0]);
    let matched = RadialProfile::new(ProfileFn::func(|r| 2.0 * PI * r), ProfileFn::Constant(2.0), 0.0, 1.9)?;
    let sol = radial_cauchy_solve(&matched)?;
    let q = annulus_rayleigh(&p, &sol, sol.start(), sol.zeros.first().copied().unwrap_or(f64::NAN), &d)?;
    out.at_most("annulus_quotient_analytic", q, 0.0, 1e-3, "Rayleigh quotient of z(r) up to its first zero, analytic profile");
    let shells = radial_profile_from_problem(&p, &d, 0.05, 1.9)?;
    let sol = radial_cauchy_solve(&shells)?;
    let q = annulus_rayleigh(&p, &sol, sol.start(), sol.zeros.first().copied().unwrap_or(f64::NAN), &d)?;
    out.at_most("annulus_quotient_shells", q, 0.0, 1e-3, "Rayleigh quotient of z(r) up to its first zero, shell profile");
    out.mesh(&mesh);
    Ok(())
}

fn prof_bessel() -> Result<RadialProfile, LabError> {
    Ok(RadialProfile::new(ProfileFn::func(|r| r), ProfileFn::Constant(1.0), 0.0, 1.0)?)
}

fn min_eigenvalue(p: nalgebra::DMatrix<f64>) -> f64 {
    SymmetricEigen::new(p).eigenvalues.min()
}

pub(super) fn symalg(samples: usize, seed: u64, out: &mut Out) -> Res {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut trace_err, mut contraction_err, mut closure, mut orient): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut conj: f64 = 0.0;
    for _ in 0..samples {
        let m = rng.gen_range(2..=6);
        let a = random_symendo(&mut rng, m, 2.0);
        let inv = invariants(&a);
        let p = newton_tensors(&a);
        for k in 0..m {
            let ck = newton_constant(m, k);
            trace_err = trace_err.max((p[k].trace() - ck * inv.h(k)).abs());
            contraction_err = contraction_err.max(((&p[k] * a.matrix()).trace() + ck * inv.h(k + 1)).abs());
        }
        closure = closure.max(p[m].amax());
        let neg = invariants(&a.negated());
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            orient = orient.max((neg.h(k) - sign * inv.h(k)).abs() / (1.0 + inv.h(k).abs()));
        }
        let q = random_orthogonal(&mut rng, m);
        let b = SymEndo::new(&q * a.matrix() * q.transpose())?;
        let ib = invariants(&b);
        for k in 1..=m {
            conj = conj.max((ib.s(k) - inv.s(k)).abs() / (1.0 + inv.s(k).abs()));
        }
    }
    out.zero("newton_trace_error", trace_err, 1e-9, "trace P_k - c_k H_k");
    out.zero("newton_contraction_error", contraction_err, 1e-9, "trace(A P_k) + c_k H_{k+1}");
    out.zero("cayley_hamilton_error", closure, 1e-9, "max entry of P_m");
    out.zero("orientation_error", orient, 1e-9, "H_k changes by (-1)^k under A -> -A");
    out.zero("conjugation_error", conj, 1e-9, "S_k invariant under orthogonal conjugation");

    let (mut potential_err, mut constraint): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let m = rng.gen_range(3..=6);
        let k = rng.gen_range(0..=m - 2);
        let kappa_bar = rng.gen_range(-2.0..2.0);
        let a = constrained_sample(&mut rng, m, k, 1.5, 0.1)?;
        let inv = invariants(&a);
        constraint = constraint.max(inv.h(k + 1).abs());
        potential_err = potential_err.max(
            (kstab_potential(&a, kappa_bar, k)? - kstab_potential_from_curvatures(&inv, kappa_bar, k)?).abs(),
        );
    }
    out.zero("constrained_h_next", constraint, 1e-10, "H_{k+1} of constrained samples");
    out.zero("kstab_potential_agreement", potential_err, 1e-9, "trace(A^2 P_k) - kappa trace P_k against its curvature form");

    let mut disagreements = 0usize;
    let (mut elliptic, mut degenerate) = (0usize, 0usize);
    for _ in 0..samples {
        let m = rng.gen_range(3..=6);
        let k = rng.gen_range(1..=m - 2);
        let a = constrained_sample(&mut rng, m, k, 1.5, 0.15)?;
        let oracle = min_eigenvalue(newton_tensor(&a, k)) > 1e-9;
        if oracle {
            elliptic += 1;
        } else {
            degenerate += 1;
        }
        if ellipticity(&a, k)? != oracle {
            disagreements += 1;
        }
    }
    out.zero("ellipticity_disagreements", disagreements as f64, 0.0, "ellipticity test against the smallest eigenvalue of P_k");
    out.flag("ellipticity_both_outcomes", elliptic > 0 && degenerate > 0, "samples include elliptic and non-elliptic cases");
    Ok(())
}

fn torus_rescale_residual(n: usize) -> Result<f64, LabError> {
    let mesh = SurfaceMesh::torus(n, n, 1.0, 1.0)?;
    let w: Vec<f64> =
        mesh.positions().iter().map(|p| 0.2 * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos()).collect();
    let scaled = conformal_rescale(&mesh, &w.iter().map(|x| x.exp()).collect::<Vec<_>>())?;
    let k = angle_defect_curvature(&scaled)?.curvature;
    Ok(max_abs((0..w.len()).map(|i| k[i] * (2.0 * w[i]).exp() - 8.0 * PI * PI * w[i])))
}

fn sphere_rescale_residual(subdiv: usize) -> Result<f64, LabError> {
    let mesh = SurfaceMesh::icosphere(subdiv, 1.0)?;
    let w: Vec<f64> = mesh.positions().iter().map(|p| 0.3 * p[2]).collect();
    let scaled = conformal_rescale(&mesh, &w.iter().map(|x| x.exp()).collect::<Vec<_>>())?;
    let rep = angle_defect_curvature(&scaled)?;
    let area = mesh.vertex_areas();
    let total: f64 = area.iter().sum();
    Ok((0..w.len()).map(|i| area[i] * (rep.curvature[i] * (2.0 * w[i]).exp() - (1.0 + 2.0 * w[i])).abs()).sum::<f64>()
        / total)
}

pub(super) fn gauss_bonnet(max_subdiv: usize, seed: u64, out: &mut Out) -> Res {
    let mut meshes = Vec::new();
    for s in 1..=max_subdiv.max(1) {
        meshes.push(SurfaceMesh::icosphere(s, 2.0)?);
    }
    for n in [4, 8, 33] {
        meshes.push(SurfaceMesh::torus(n, n + 2, 1.0, 0.7)?);
    }
    meshes.push(SurfaceMesh::rectangle(9, 13, (0.0, 1.0), (-1.0, 0.5))?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = SurfaceMesh::icosphere(2, 1.0)?;
    for _ in 0..10 {
        let w: Vec<f64> = (0..base.num_vertices()).map(|_| rng.gen_range(0.8..1.25)).collect();
        meshes.push(conformal_rescale(&base, &w)?);
    }
    let mut worst: f64 = 0.0;
    for m in &meshes {
        let total = angle_defect_curvature(m)?.total;
        worst = worst.max((total - 2.0 * PI * m.euler_characteristic() as f64).abs());
    }
    out.zero("gauss_bonnet_error", worst, 1e-9, "total angle defect minus 2 pi chi over spheres, tori, a disk and rescaled spheres");

    let ns = [16usize, 32, 64];
    let torus: Vec<f64> = ns.iter().map(|&n| torus_rescale_residual(n)).collect::<Result<_, _>>()?;
    out.table("torus_rescale", &["h", "residual"], ns.iter().zip(&torus).map(|(&n, &e)| vec![1.0 / n as f64, e]).collect());
    out.at_least("torus_rescale_order", min_order(&torus), 1.5, 0.0, "max |K' e^{2w} + Delta w| on the flat torus");
    let subdivs = [2usize, 3, 4];
    let mut rows = Vec::new();
    let mut sphere = Vec::new();
    for &s in &subdivs {
        let e = sphere_rescale_residual(s)?;
        rows.push(vec![SurfaceMesh::icosphere(s, 1.0)?.mean_edge_length(), e]);
        sphere.push(e);
    }
    out.table("sphere_rescale", &["h", "residual"], rows);
    out.at_least("sphere_rescale_order", min_order(&sphere), 1.5, 0.0, "area-weighted L1 residual of K' e^{2w} - (1 + 2w) on the unit sphere");
    out.mesh(&meshes[max_subdiv.max(1) - 1]);
    Ok(())
}

pub(super) fn curvature(samples: usize, seed: u64, out: &mut Out) -> Res {
    let models = [
        ("desitter", GrwSpacetime::de_sitter(2, 1.0)?, 1.0),
        ("desitter_m3", GrwSpacetime::de_sitter(3, 0.5)?, 0.5),
        ("steady_state", GrwSpacetime::steady_state(2)?, 1.0),
        ("antidesitter", GrwSpacetime::anti_de_sitter(2, -1.0)?, -1.0),
    ];
    let x = [0.21, -0.13, 0.08];
    for (name, st, kappa) in &models {
        let rep = st.constant_curvature_report(samples, 1e-10)?;
        out.zero(&format!("{name}_ratio_deviation"), rep.ratio_deviation, 1e-10, "max |rho''/rho - kappa| over samples");
        out.zero(&format!("{name}_fiber_deviation"), rep.fiber_deviation, 1e-10, "max |rho rho'' - rho'^2 - kappa_F|");
        out.near(&format!("{name}_kappa"), rep.kappa_bar.unwrap_or(f64::NAN), *kappa, 1e-10, "detected constant curvature");
        let x = &x[..st.dim()];
        let (c1, c2) = (christoffel_oracle_error(st, 0.3, x, 1e-2)?, christoffel_oracle_error(st, 0.3, x, 5e-3)?);
        let (r1, r2) = (riemann_oracle_error(st, 0.3, x, 2e-2)?, riemann_oracle_error(st, 0.3, x, 1e-2)?);
        let order = |a: f64, b: f64, floor: f64| if b < floor { 2.0 } else { observed_order(a, b) };
        out.at_least(&format!("{name}_christoffel_order"), order(c1, c2, 1e-12), 1.8, 0.0, "finite-difference Christoffel oracle");
        out.at_least(&format!("{name}_riemann_order"), order(r1, r2, 1e-9), 1.8, 0.0, "finite-difference Riemann oracle");
    }

    let st = GrwSpacetime::de_sitter(3, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < samples {
        let base = BasePoint::chart(rng.gen_range(-2.0..2.0), &(0..3).map(|_| rng.gen_range(-0.5..0.5)).collect::<Vec<_>>());
        let mut draw = || TangentVector::new(base.clone(), rng.gen_range(-1.0..1.0), (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let (a, b) = (draw(), draw());
        match st.sectional(&a, &b) {
            Ok(k) => {
                worst = worst.max((k - 1.0).abs());
                checked += 1;
            }
            Err(grw_core::Error::DegeneratePlane(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    out.zero("desitter_random_planes", worst, 1e-10, "sectional curvature of random nondegenerate planes in de Sitter space");

    let cubic = GrwSpacetime::new(
        WarpingFunction::polynomial(vec![1.0, 0.0, 0.0, 1.0], -0.5, 2.0)?,
        FiberModel::constant_curvature(2, 0.0)?,
    );
    out.flag("cubic_warping_rejected", cubic.constant_curvature_audit(samples).is_none(), "rho = 1 + t^3 has no constant curvature");
    out.flag(
        "minkowski_bound_certified",
        GrwSpacetime::minkowski(2)?.spacelike_bound_certify(0.0) == Some(0.0),
        "Lorentz-Minkowski space has spacelike sectional curvature bounded by 0",
    );
    Ok(())
}

pub(super) fn schrodinger(n: usize, seed: u64, out: &mut Out) -> Res {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small = SurfaceMesh::rectangle(6, 6, (0.0, 1.0), (0.0, 1.0))?;
    let nv = small.num_vertices();
    let (mut picone, mut slack) = (0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let u: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..nv).map(|_| rng.gen_range(0.5..1.5)).collect();
        let tensors = (0..nv)
            .map(|_| {
                let (a, c, b) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(-0.3..0.3));
                Matrix2::new(a, b, b, c)
            })
            .collect();
        let rep = picone_residual(&small, &u, &v, &Coefficient::Tensor(tensors))?;
        picone = picone.max(rep.max_residual);
        slack = slack.min(rep.min_slack);
    }
    out.zero("picone_residual", picone, 1e-12, "facewise Picone identity on 100 random triples");
    out.at_least("picone_slack", slack, 0.0, 1e-14, "the Picone left-hand side is nonnegative");

    let grid = SurfaceMesh::rectangle(10, 10, (0.0, 1.0), (0.0, 1.0))?;
    let q: Vec<f64> = (0..grid.num_vertices()).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let p = SchrodingerProblem::assemble(&grid, &Coefficient::Identity, &q, Provenance::Custom("random".into()))?;
    let g = lambda1(&p)?;
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..100 {
        let u: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(0.1..1.0)).collect();
        excess = excess.max(barta_bound(&p, &u)? - g.lambda1);
    }
    out.at_most("barta_excess", excess, 0.0, 1e-8, "Barta quotient of positive functions is at most lambda_1");
    out.near("barta_at_ground_state", barta_bound(&p, &g.phi)?, g.lambda1, 1e-8, "Barta quotient of the ground state");

    let stable = positivity_solve(&flat_problem(&grid, 0.0)?)?;
    out.flag(
        "positive_solution_when_stable",
        stable.lambda1 > 0.0 && stable.solution.is_some() && stable.min_value > 0.0,
        "lambda_1 > 0 gives a positive solution of Lu = 0",
    );

    let mesh = SurfaceMesh::torus(n, n, 1.0, 1.0)?;
    let p = flat_problem(&mesh, 0.0)?;
    let d = planar_distance(&mesh, [0.5, 0.5]);
    let disk = |r: f64| (0..d.len()).filter(|&i| d[i] < r).collect::<Vec<_>>();
    let rep = monotonicity_check(&p, &disk(0.2), &disk(0.4))?;
    out.flag("monotonicity_strict", rep.holds && rep.strict_expected && rep.gap > 0.0, "lambda_1 strictly decreases under strict inclusion");
    out.rel("disk_ratio", rep.lambda_inner / rep.lambda_outer, 4.0, 0.05, "lambda_1 scales like r^-2 on flat disks");
    out.mesh(&mesh);
    Ok(())
}
