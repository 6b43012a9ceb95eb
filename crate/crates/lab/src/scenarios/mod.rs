mod analysis;
mod geometry;

use grw_core::meshlab::SurfaceMesh;

use crate::report::{Check, MeshStats, Metric, Report, Table};
use crate::{LabError, ScenarioConfig, ScenarioInfo};

pub(crate) const CATALOGUE: &[ScenarioInfo] = &[
    ScenarioInfo {
        id: "minkowski-slice-stable",
        title: "Closed flat slice of Lorentz-Minkowski space",
        anchor: "a totally geodesic slice over a closed flat fiber is stable with constant first eigenfunction",
        res_meaning: "torus grid vertices per side",
        default_res: 32,
    },
    ScenarioInfo {
        id: "desitter-equator-unstable",
        title: "Equatorial sphere of de Sitter space",
        anchor: "the equator of de Sitter space is maximal with first stability eigenvalue -m and no positive Jacobi field",
        res_meaning: "icosphere subdivision level",
        default_res: 4,
    },
    ScenarioInfo {
        id: "antidesitter-slice-bound",
        title: "Maximal slices and graphs in anti-de Sitter space",
        anchor: "maximal hypersurfaces of anti-de Sitter space satisfy trace(A^2) <= -m kappa",
        res_meaning: "patch grid vertices per side",
        default_res: 25,
    },
    ScenarioInfo {
        id: "desitter-maximal-endpoints",
        title: "Height extrema of maximal graphs in de Sitter space",
        anchor: "at an interior maximum of eta on a maximal hypersurface rho'(tau) >= 0, at an interior minimum rho'(tau) <= 0",
        res_meaning: "patch grid vertices per side",
        default_res: 33,
    },
    ScenarioInfo {
        id: "divergence-identity",
        title: "Divergence identity on a closed stable slice",
        anchor: "div(v^2 grad(u/v)) = -v^2 (u/v)(lambda_1 + m rho''/rho) integrates to zero on closed hypersurfaces",
        res_meaning: "torus grid vertices per side",
        default_res: 32,
    },
    ScenarioInfo {
        id: "oscillation-bessel",
        title: "Radial oscillation problem",
        anchor: "zeros of (w z')' + A w z = 0 against Bessel and constant-coefficient closed forms; no zeros when A <= 0",
        res_meaning: "rectangle vertices per side for the annulus quotient",
        default_res: 160,
    },
    ScenarioInfo {
        id: "symalg-identities",
        title: "Newton tensors and k-th mean curvatures",
        anchor: "trace P_k = c_k H_k, trace(A P_k) = -c_k H_{k+1}, Cayley-Hamilton closure, and ellipticity of P_k when H_{k+1} = 0",
        res_meaning: "number of random samples",
        default_res: 1000,
    },
    ScenarioInfo {
        id: "gauss-bonnet",
        title: "Angle-defect curvature and conformal rescaling",
        anchor: "total angle defect equals 2 pi chi, and K' e^{2w} = K - Delta w under g' = e^{2w} g",
        res_meaning: "largest icosphere subdivision level",
        default_res: 4,
    },
    ScenarioInfo {
        id: "curvature-audit",
        title: "Curvature of GRW spacetimes",
        anchor: "a GRW spacetime has constant sectional curvature iff rho''/rho and rho rho'' - rho'^2 are the constants kappa and kappa_F",
        res_meaning: "number of random samples",
        default_res: 1000,
    },
    ScenarioInfo {
        id: "schrodinger-toolkit",
        title: "Picone, Barta and domain monotonicity",
        anchor: "Picone identity, Barta lower bound for lambda_1, and strict decrease of lambda_1 under domain inclusion",
        res_meaning: "torus grid vertices per side for the disk comparison",
        default_res: 128,
    },
    ScenarioInfo {
        id: "maximal-graph-solver",
        title: "Dirichlet problem for maximal graphs",
        anchor: "maximal graphs in spacetimes obeying the timelike convergence condition are stable and satisfy the refined Kato inequality",
        res_meaning: "patch grid vertices per side",
        default_res: 25,
    },
    ScenarioInfo {
        id: "graph-identity-convergence",
        title: "Refinement study of the graph identities",
        anchor: "|grad tau|^2 = sinh^2 theta, |grad eta|^2 = v^2 - rho^2, Delta eta = -m rho' + m H v, and the Gauss equation",
        res_meaning: "coarsest torus grid vertices per side",
        default_res: 32,
    },
];

/// Metric collector that applies the configured tolerance scale.
pub(crate) struct Out {
    scale: f64,
    metrics: Vec<Metric>,
    mesh: MeshStats,
    tables: Vec<Table>,
}

impl Out {
    fn new(cfg: &ScenarioConfig) -> Self {
        Self { scale: cfg.tol_scale, metrics: Vec::new(), mesh: MeshStats::default(), tables: Vec::new() }
    }

    fn push(&mut self, name: &str, value: f64, expected: f64, tol: f64, check: Check, provenance: &str) {
        self.metrics.push(Metric::new(name, value, expected, tol * self.scale, check, provenance));
    }

    fn zero(&mut self, name: &str, value: f64, tol: f64, provenance: &str) {
        self.push(name, value, 0.0, tol, Check::AbsDiff, provenance);
    }

    fn near(&mut self, name: &str, value: f64, expected: f64, tol: f64, provenance: &str) {
        self.push(name, value, expected, tol, Check::AbsDiff, provenance);
    }

    fn rel(&mut self, name: &str, value: f64, expected: f64, tol: f64, provenance: &str) {
        self.push(name, value, expected, tol, Check::RelDiff, provenance);
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64, tol: f64, provenance: &str) {
        self.push(name, value, bound, tol, Check::AtLeast, provenance);
    }

    fn at_most(&mut self, name: &str, value: f64, bound: f64, tol: f64, provenance: &str) {
        self.push(name, value, bound, tol, Check::AtMost, provenance);
    }

    fn flag(&mut self, name: &str, ok: bool, provenance: &str) {
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0, Check::AbsDiff, provenance);
    }

    fn mesh(&mut self, m: &SurfaceMesh) {
        self.mesh = MeshStats { vertices: m.num_vertices(), faces: m.num_faces(), h: m.mean_edge_length() };
    }

    fn table(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        self.tables.push(Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows });
    }
}

pub(crate) fn run(info: &ScenarioInfo, cfg: &ScenarioConfig) -> Result<Report, LabError> {
    let res = cfg.res.unwrap_or(info.default_res);
    let mut out = Out::new(cfg);
    match info.id {
        "minkowski-slice-stable" => geometry::minkowski_slice(res, &mut out)?,
        "desitter-equator-unstable" => geometry::de_sitter_equator(res, cfg.seed, &mut out)?,
        "antidesitter-slice-bound" => geometry::anti_de_sitter(res, &mut out)?,
        "desitter-maximal-endpoints" => geometry::de_sitter_endpoints(res, &mut out)?,
        "divergence-identity" => geometry::divergence_identity(res, &mut out)?,
        "maximal-graph-solver" => geometry::maximal_solver(res, &mut out)?,
        "graph-identity-convergence" => geometry::convergence(res, cfg, &mut out)?,
        "oscillation-bessel" => analysis::oscillation(res, &mut out)?,
        "symalg-identities" => analysis::symalg(res, cfg.seed, &mut out)?,
        "gauss-bonnet" => analysis::gauss_bonnet(res, cfg.seed, &mut out)?,
        "curvature-audit" => analysis::curvature(res, cfg.seed, &mut out)?,
        "schrodinger-toolkit" => analysis::schrodinger(res, cfg.seed, &mut out)?,
        other => return Err(LabError::UnknownScenario(other.into())),
    }
    Ok(Report::new(info.id, cfg.seed, out.metrics, out.mesh, out.tables))
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().filter(|x| x.is_finite()).fold(0.0, |a, x| a.max(x.abs()))
}

fn min_order(e: &[f64]) -> f64 {
    e.windows(2).map(|w| grw_core::spacetime::audit::observed_order(w[0], w[1])).fold(f64::INFINITY, f64::min)
}
