//! Spacelike graphs `t = u(x)` over a structured fiber chart grid, their
//! extrinsic geometry, identity audits and a maximal-graph solver.
//!
//! Conventions: `N` is the future-directed unit normal, the shape operator
//! is `AX = −∇̄_X N` and the mean curvature is `H = −trace(A)/m`. Geometry
//! comes from the analytic warped-product connection and second-order
//! finite differences of `u` on the grid. Gradients of auxiliary fields use
//! area-averaged P1 gradients on the triangulation, so that identities such
//! as `|∇τ|² = sinh²θ` compare two independent discretizations.

mod audit;
mod solver;

pub use audit::{identity_audit, lk_identity_audit, IdentityReport, LkReport, DEFAULT_BAND};
pub use solver::{solve_maximal_graph, solve_maximal_graph_with, MaximalGraph, SolverOptions};

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::meshlab::{MeshText, SurfaceMesh};
use crate::spacetime::{
    chart_conformal_factor, chart_log_factor_gradient, BasePoint, FiberPoint, GrwSpacetime, TangentVector,
    WarpValue,
};
use crate::spectral::SchrodingerProblem;
use crate::symalg::{invariants, SymEndo};

/// Structured chart grid: a periodic torus or a Dirichlet rectangle patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartGrid {
    mesh: SurfaceMesh,
    nx: usize,
    ny: usize,
    h: [f64; 2],
    periodic: bool,
}

impl ChartGrid {
    /// Periodic `n × n` grid on `[0, length)²`.
    pub fn torus(n: usize, length: f64) -> Result<Self> {
        Self::from_mesh(SurfaceMesh::torus(n, n, length, length)?)
    }

    /// `n × n` vertex patch on `[−half_width, half_width]²`.
    pub fn patch(n: usize, half_width: f64) -> Result<Self> {
        Self::from_mesh(SurfaceMesh::rectangle(n, n, (-half_width, half_width), (-half_width, half_width))?)
    }

    /// Wraps a mesh produced by the structured torus or rectangle builders.
    pub fn from_mesh(mesh: SurfaceMesh) -> Result<Self> {
        let (nx, ny) = mesh
            .grid_shape()
            .ok_or_else(|| Error::InvalidArgument("mesh is not a structured chart grid".into()))?;
        let p = mesh.positions();
        let (h, periodic) = match mesh.period() {
            Some(per) => ([per[0] / nx as f64, per[1] / ny as f64], true),
            None => ([p[1][0] - p[0][0], p[nx][1] - p[0][1]], false),
        };
        Ok(Self { mesh, nx, ny, h, periodic })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.h
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn num_vertices(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, v: usize) -> [f64; 2] {
        let p = self.mesh.positions()[v];
        [p[0], p[1]]
    }

    /// Vertices at least `band` grid steps away from the patch boundary
    /// (every vertex on a torus).
    pub fn interior_mask(&self, band: usize) -> Vec<bool> {
        (0..self.num_vertices())
            .map(|v| {
                if self.periodic {
                    return true;
                }
                let (i, j) = (v % self.nx, v / self.nx);
                i >= band && j >= band && i + band < self.nx && j + band < self.ny
            })
            .collect()
    }

    fn line(&self, axis: usize) -> (usize, usize, usize) {
        if axis == 0 {
            (self.nx, 1, self.ny)
        } else {
            (self.ny, self.nx, self.nx)
        }
    }

    fn line_start(&self, axis: usize, k: usize) -> usize {
        if axis == 0 {
            k * self.nx
        } else {
            k
        }
    }

    /// Second-order first derivative along `axis` (one-sided at patch ends).
    pub fn d1(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let (len, step, lines) = self.line(axis);
        let h = self.h[axis];
        let mut out = vec![0.0; f.len()];
        for k in 0..lines {
            let s = self.line_start(axis, k);
            let at = |i: usize| f[s + i * step];
            for i in 0..len {
                out[s + i * step] = if self.periodic {
                    (at((i + 1) % len) - at((i + len - 1) % len)) / (2.0 * h)
                } else if i == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                } else if i == len - 1 {
                    (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
                } else {
                    (at(i + 1) - at(i - 1)) / (2.0 * h)
                };
            }
        }
        out
    }

    /// Second-order second derivative along `axis`.
    pub fn d2(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let (len, step, lines) = self.line(axis);
        let h2 = self.h[axis] * self.h[axis];
        let mut out = vec![0.0; f.len()];
        for k in 0..lines {
            let s = self.line_start(axis, k);
            let at = |i: usize| f[s + i * step];
            for i in 0..len {
                out[s + i * step] = if self.periodic {
                    (at((i + 1) % len) - 2.0 * at(i) + at((i + len - 1) % len)) / h2
                } else if i == 0 {
                    (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2
                } else if i == len - 1 {
                    (2.0 * at(i) - 5.0 * at(i - 1) + 4.0 * at(i - 2) - at(i - 3)) / h2
                } else {
                    (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2
                };
            }
        }
        out
    }

    /// Chart partials `(f_x, f_y)` per vertex.
    pub fn gradient(&self, f: &[f64]) -> Vec<[f64; 2]> {
        let fx = self.d1(f, 0);
        let fy = self.d1(f, 1);
        fx.into_iter().zip(fy).map(|(a, b)| [a, b]).collect()
    }

    /// Chart Hessians per vertex.
    pub fn hessian(&self, f: &[f64]) -> Vec<Matrix2<f64>> {
        let fxx = self.d2(f, 0);
        let fyy = self.d2(f, 1);
        let fxy = self.d1(&self.d1(f, 1), 0);
        (0..f.len()).map(|v| Matrix2::new(fxx[v], fxy[v], fxy[v], fyy[v])).collect()
    }

    /// Area-averaged P1 gradient covectors (chart components) per vertex.
    pub fn p1_gradient(&self, f: &[f64]) -> Vec<[f64; 2]> {
        let n = self.num_vertices();
        let mut acc = vec![[0.0; 2]; n];
        let mut wsum = vec![0.0; n];
        for t in self.mesh.triangles() {
            let d1 = self.mesh.displacement(t[0], t[1]);
            let d2 = self.mesh.displacement(t[0], t[2]);
            let j = Matrix2::new(d1[0], d1[1], d2[0], d2[1]);
            let det = j.determinant();
            let Some(jinv) = j.try_inverse() else { continue };
            let df = nalgebra::Vector2::new(f[t[1]] - f[t[0]], f[t[2]] - f[t[0]]);
            let c = jinv * df;
            let w = 0.5 * det.abs();
            for &v in t {
                acc[v][0] += w * c[0];
                acc[v][1] += w * c[1];
                wsum[v] += w;
            }
        }
        acc.iter().zip(&wsum).map(|(a, w)| [a[0] / w, a[1] / w]).collect()
    }

    /// Divergence `(1/√g) ∂_i(√g V^i)` of a vector field given by chart
    /// components, with `√g` per vertex.
    pub fn divergence(&self, field: &[[f64; 2]], sqrt_g: &[f64]) -> Vec<f64> {
        let fx: Vec<f64> = field.iter().zip(sqrt_g).map(|(f, s)| s * f[0]).collect();
        let fy: Vec<f64> = field.iter().zip(sqrt_g).map(|(f, s)| s * f[1]).collect();
        let dx = self.d1(&fx, 0);
        let dy = self.d1(&fy, 1);
        (0..field.len()).map(|v| (dx[v] + dy[v]) / sqrt_g[v]).collect()
    }
}

/// Pointwise graph geometry at one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PointGeometry {
    pub warp: WarpValue,
    pub phi: f64,
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
    /// `(N^t, N^1, N^2)`.
    pub normal: [f64; 3],
    pub second_form: Matrix2<f64>,
    /// `A^i_j = g^{ik} h_{kj}`.
    pub shape: Matrix2<f64>,
}

pub(crate) fn point_geometry(
    kappa_f: f64,
    warp: WarpValue,
    x: [f64; 2],
    du: [f64; 2],
    ddu: &Matrix2<f64>,
    vertex: usize,
) -> Result<PointGeometry> {
    let WarpValue { rho, d1, .. } = warp;
    let phi = chart_conformal_factor(kappa_f, &x);
    let sigma = chart_log_factor_gradient(kappa_f, &x);
    let a = rho * rho * phi * phi;
    let du2 = du[0] * du[0] + du[1] * du[1];
    let gap = 1.0 - du2 / a;
    if !(gap > 0.0) {
        return Err(Error::NotSpacelike { vertex });
    }
    let nt = 1.0 / gap.sqrt();
    let normal = [nt, nt * du[0] / a, nt * du[1] / a];
    let metric = Matrix2::new(a - du[0] * du[0], -du[0] * du[1], -du[0] * du[1], a - du[1] * du[1]);
    let metric_inv = metric.try_inverse().ok_or(Error::NotSpacelike { vertex })?;
    let mut h = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let dij = if i == j { 1.0 } else { 0.0 };
            let zt = ddu[(i, j)] + rho * d1 * phi * phi * dij;
            let mut tangential = 0.0;
            for k in 0..2 {
                let (dik, djk) = (if i == k { 1.0 } else { 0.0 }, if j == k { 1.0 } else { 0.0 });
                let zk = (d1 / rho) * (du[i] * djk + du[j] * dik) + dik * sigma[j] + djk * sigma[i] - dij * sigma[k];
                tangential += du[k] * zk;
            }
            h[(i, j)] = nt * (tangential - zt);
        }
    }
    let h = (h + h.transpose()) * 0.5;
    Ok(PointGeometry { warp, phi, metric, metric_inv, normal, second_form: h, shape: metric_inv * h })
}

/// Spacelike graph `x ↦ (u(x), x)` over a chart grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphHypersurface {
    ambient: GrwSpacetime,
    grid: ChartGrid,
    u: Vec<f64>,
}

impl GraphHypersurface {
    pub fn new(ambient: GrwSpacetime, grid: ChartGrid, u: Vec<f64>) -> Result<Self> {
        if ambient.dim() != 2 {
            return Err(Error::InvalidArgument(format!("graphs need a 2-dimensional fiber, got {}", ambient.dim())));
        }
        let kappa = ambient
            .fiber()
            .constant_kappa()
            .ok_or_else(|| Error::InvalidArgument("graphs need a constant-curvature chart fiber".into()))?;
        if grid.is_periodic() && kappa != 0.0 {
            return Err(Error::InvalidArgument("periodic grids require a flat fiber".into()));
        }
        if u.len() != grid.num_vertices() {
            return Err(Error::InvalidArgument("height vector length mismatch".into()));
        }
        for v in 0..u.len() {
            ambient.check_base(&BasePoint::chart(u[v], &grid.point(v)))?;
        }
        let g = Self { ambient, grid, u };
        g.check_spacelike()?;
        Ok(g)
    }

    /// The slice `t ≡ t₀` as a graph.
    pub fn constant(ambient: GrwSpacetime, grid: ChartGrid, t0: f64) -> Result<Self> {
        let n = grid.num_vertices();
        Self::new(ambient, grid, vec![t0; n])
    }

    pub fn ambient(&self) -> &GrwSpacetime {
        &self.ambient
    }

    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    pub fn heights(&self) -> &[f64] {
        &self.u
    }

    pub(crate) fn kappa_f(&self) -> f64 {
        self.ambient.fiber().constant_kappa().unwrap_or(0.0)
    }

    fn check_spacelike(&self) -> Result<()> {
        let du = self.grid.gradient(&self.u);
        let kappa = self.kappa_f();
        for v in 0..self.u.len() {
            let rho = self.ambient.warping().eval(self.u[v])?.rho;
            let phi = chart_conformal_factor(kappa, &self.grid.point(v));
            if !(du[v][0] * du[v][0] + du[v][1] * du[v][1] < rho * rho * phi * phi) {
                return Err(Error::NotSpacelike { vertex: v });
            }
        }
        Ok(())
    }

    /// Per-vertex mean curvature `H` only.
    pub fn mean_curvature(&self) -> Result<Vec<f64>> {
        mean_curvature_field(&self.ambient, &self.grid, self.kappa_f(), &self.u)
    }

    /// Triangulation with Lorentzian chord lengths
    /// `ℓ² = −Δu² + ρ(ū)² φ(x̄)² |Δx|²`.
    pub fn induced_mesh(&self) -> Result<SurfaceMesh> {
        let mesh = self.grid.mesh();
        let kappa = self.kappa_f();
        let mut lengths = Vec::with_capacity(mesh.num_edges());
        for &[a, b] in mesh.edges() {
            let d = mesh.displacement(a, b);
            let pa = self.grid.point(a);
            let mid = [pa[0] + 0.5 * d[0], pa[1] + 0.5 * d[1]];
            let rho = self.ambient.warping().eval(0.5 * (self.u[a] + self.u[b]))?.rho;
            let phi = chart_conformal_factor(kappa, &mid);
            let du = self.u[b] - self.u[a];
            let l2 = rho * rho * phi * phi * (d[0] * d[0] + d[1] * d[1]) - du * du;
            if !(l2 > 0.0) {
                return Err(Error::NotSpacelike { vertex: a });
            }
            lengths.push(l2.sqrt());
        }
        mesh.with_edge_lengths(lengths)
    }

    /// Plain-text mesh with the height as the single vertex column.
    pub fn to_text(&self) -> Result<String> {
        Ok(MeshText::from_mesh(self.grid.mesh(), &[&self.u])?.render())
    }

    /// Reads heights written by [`GraphHypersurface::to_text`] for the
    /// same grid.
    pub fn from_text(ambient: GrwSpacetime, grid: ChartGrid, text: &str) -> Result<Self> {
        let parsed = MeshText::parse(text)?;
        if parsed.positions.len() != grid.num_vertices() || parsed.columns.len() != 1 {
            return Err(Error::Parse("mesh file does not match the grid".into()));
        }
        let tol = 1e-12 * grid.spacing()[0].max(grid.spacing()[1]).max(1.0);
        for (v, p) in parsed.positions.iter().enumerate() {
            let q = grid.point(v);
            if (p[0] - q[0]).abs() > tol || (p[1] - q[1]).abs() > tol {
                return Err(Error::Parse(format!("vertex {v} does not match the grid")));
            }
        }
        let u = parsed.columns.into_iter().next().unwrap_or_default();
        Self::new(ambient, grid, u)
    }

    pub fn extrinsic_geometry(&self) -> Result<ExtrinsicData> {
        let grid = &self.grid;
        let du = grid.gradient(&self.u);
        let ddu = grid.hessian(&self.u);
        let kappa = self.kappa_f();
        let m = 2usize;
        let n = self.u.len();
        let warping = self.ambient.warping();
        let eta_base = self.u.iter().copied().fold(f64::INFINITY, f64::min);
        let mut points = Vec::with_capacity(n);
        for v in 0..n {
            let w = warping.eval(self.u[v])?;
            points.push(point_geometry(kappa, w, grid.point(v), du[v], &ddu[v], v)?);
        }
        let mut data = ExtrinsicData::empty(m, n);
        data.eta_base = eta_base;
        data.points = (0..n).map(|v| grid.point(v)).collect();
        for (v, p) in points.iter().enumerate() {
            let tau = self.u[v];
            let base = BasePoint::chart(tau, &data.points[v]);
            let nvec = TangentVector::new(base.clone(), p.normal[0], vec![p.normal[1], p.normal[2]]);
            let ric_nn = self.ambient.ricci(&nvec, &nvec)?;
            let scalar_bar = self.ambient.scalar_curvature(&base)?;
            let chol = p.metric.cholesky().ok_or(Error::NotSpacelike { vertex: v })?;
            let linv = chol.l().try_inverse().ok_or(Error::NotSpacelike { vertex: v })?;
            let ahat = linv * p.second_form * linv.transpose();
            let endo = SymEndo::new(DMatrix::from_row_slice(2, 2, ahat.as_slice()))?;
            let inv = invariants(&endo);
            data.tau.push(tau);
            data.warp.push(p.warp);
            data.metric.push(p.metric);
            data.normal.push(p.normal);
            data.cosh_theta.push(p.normal[0]);
            data.shape_chart.push(p.shape);
            data.mean_curvature.push(-p.shape.trace() / m as f64);
            data.h_k.push(inv.h_list().to_vec());
            data.shape.push(endo);
            data.eta.push(warping.primitive(eta_base, tau)?);
            data.v.push(p.warp.rho * p.normal[0]);
            data.ric_nn.push(ric_nn);
            data.scalar_bar.push(scalar_bar);
        }
        data.grad_tau = grid.p1_gradient(&data.tau);
        data.grad_eta = grid.p1_gradient(&data.eta);
        data.grad_v = grid.p1_gradient(&data.v);
        Ok(data)
    }

    /// Stability operator `Δ − (Ric̄(N,N) + |A|²)` on the induced mesh, with
    /// Dirichlet conditions on the patch boundary.
    pub fn stability_problem(&self, data: &ExtrinsicData) -> Result<SchrodingerProblem> {
        let mesh = self.induced_mesh()?;
        let trace_a2: Vec<f64> = (0..data.len()).map(|v| data.trace_a2(v)).collect();
        SchrodingerProblem::stability(&mesh, &data.ric_nn, &trace_a2)
    }
}

pub(crate) fn mean_curvature_field(st: &GrwSpacetime, grid: &ChartGrid, kappa: f64, u: &[f64]) -> Result<Vec<f64>> {
    let du = grid.gradient(u);
    let ddu = grid.hessian(u);
    let w = st.warping();
    (0..u.len())
        .map(|v| {
            let p = point_geometry(kappa, w.eval(u[v])?, grid.point(v), du[v], &ddu[v], v)?;
            Ok(-0.5 * p.shape.trace())
        })
        .collect()
}

/// Per-vertex extrinsic data of a spacelike hypersurface.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrinsicData {
    pub m: usize,
    /// Chart coordinates of each vertex.
    pub points: Vec<[f64; 2]>,
    pub tau: Vec<f64>,
    pub warp: Vec<WarpValue>,
    /// Induced metric in chart components.
    pub metric: Vec<Matrix2<f64>>,
    /// `(N^t, N^1, N^2)` in coordinate components.
    pub normal: Vec<[f64; 3]>,
    pub cosh_theta: Vec<f64>,
    /// `A^i_j` in chart components.
    pub shape_chart: Vec<Matrix2<f64>>,
    /// `A` in a `g`-orthonormal frame.
    pub shape: Vec<SymEndo>,
    pub mean_curvature: Vec<f64>,
    /// `[H_1, ..., H_m]` per vertex.
    pub h_k: Vec<Vec<f64>>,
    /// `η = ∫_{t₀}^τ ρ`, with `t₀ = eta_base`.
    pub eta: Vec<f64>,
    pub eta_base: f64,
    pub v: Vec<f64>,
    pub ric_nn: Vec<f64>,
    /// Ambient scalar curvature at the vertex.
    pub scalar_bar: Vec<f64>,
    /// P1 gradient covectors (chart components).
    pub grad_tau: Vec<[f64; 2]>,
    pub grad_eta: Vec<[f64; 2]>,
    pub grad_v: Vec<[f64; 2]>,
}

impl ExtrinsicData {
    fn empty(m: usize, n: usize) -> Self {
        Self {
            m,
            points: Vec::with_capacity(n),
            tau: Vec::with_capacity(n),
            warp: Vec::with_capacity(n),
            metric: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            cosh_theta: Vec::with_capacity(n),
            shape_chart: Vec::with_capacity(n),
            shape: Vec::with_capacity(n),
            mean_curvature: Vec::with_capacity(n),
            h_k: Vec::with_capacity(n),
            eta: Vec::with_capacity(n),
            eta_base: 0.0,
            v: Vec::with_capacity(n),
            ric_nn: Vec::with_capacity(n),
            scalar_bar: Vec::with_capacity(n),
            grad_tau: Vec::new(),
            grad_eta: Vec::new(),
            grad_v: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn trace_a2(&self, v: usize) -> f64 {
        self.shape[v].norm_squared()
    }

    pub fn sinh2_theta(&self, v: usize) -> f64 {
        self.cosh_theta[v] * self.cosh_theta[v] - 1.0
    }

    /// `g^{ij} c_i c_j` for a chart covector `c`.
    pub fn norm2(&self, v: usize, c: [f64; 2]) -> f64 {
        let gi = self.metric[v].try_inverse().unwrap_or_else(Matrix2::zeros);
        c[0] * (gi[(0, 0)] * c[0] + gi[(0, 1)] * c[1]) + c[1] * (gi[(1, 0)] * c[0] + gi[(1, 1)] * c[1])
    }

    /// Largest `|ḡ(N,N) + 1|` and `|ḡ(N, ψ_* ∂_i)|` over vertices, given the
    /// chart gradient of `τ`.
    pub fn normal_residuals(&self, du: &[[f64; 2]], kappa_f: f64) -> (f64, f64) {
        let mut unit: f64 = 0.0;
        let mut tangency: f64 = 0.0;
        for v in 0..self.len() {
            let n = self.normal[v];
            let phi = chart_conformal_factor(kappa_f, &self.points[v]);
            let a = self.warp[v].rho * self.warp[v].rho * phi * phi;
            unit = unit.max((-n[0] * n[0] + a * (n[1] * n[1] + n[2] * n[2]) + 1.0).abs());
            for i in 0..2 {
                tangency = tangency.max((-n[0] * du[v][i] + a * n[1 + i]).abs());
            }
        }
        (unit, tangency)
    }

    /// Opposite orientation: `N → −N`, `A → −A`, `H → −H`, odd `H_k` flip.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        for v in 0..self.len() {
            out.normal[v] = [-self.normal[v][0], -self.normal[v][1], -self.normal[v][2]];
            out.shape_chart[v] = -self.shape_chart[v];
            out.shape[v] = self.shape[v].negated();
            out.mean_curvature[v] = -self.mean_curvature[v];
            out.h_k[v] = self.h_k[v]
                .iter()
                .enumerate()
                .map(|(k, h)| if k % 2 == 0 { -h } else { *h })
                .collect();
        }
        out
    }
}

/// Extrinsic data of the slice `t ≡ t₀` over `grid`: `N = ∂_t`,
/// `A = −(ρ'/ρ) I`, `H = ρ'/ρ`, `v = ρ(t₀)`.
pub fn slice(st: &GrwSpacetime, grid: &ChartGrid, t0: f64) -> Result<ExtrinsicData> {
    if st.dim() != 2 {
        return Err(Error::InvalidArgument("slices over chart grids need a 2-dimensional fiber".into()));
    }
    let kappa = st
        .fiber()
        .constant_kappa()
        .ok_or_else(|| Error::InvalidArgument("slices need a constant-curvature chart fiber".into()))?;
    let w = st.warping().eval(t0)?;
    let lam = -w.d1 / w.rho;
    let n = grid.num_vertices();
    let endo = SymEndo::from_diagonal(&[lam, lam])?;
    let hk = invariants(&endo).h_list().to_vec();
    let mut data = ExtrinsicData::empty(2, n);
    data.eta_base = t0;
    for v in 0..n {
        let x = grid.point(v);
        st.fiber().check_point(&FiberPoint::Chart(x.to_vec()))?;
        let phi = chart_conformal_factor(kappa, &x);
        let base = BasePoint::chart(t0, &x);
        let dt = TangentVector::d_t(base.clone(), 2);
        data.points.push(x);
        data.tau.push(t0);
        data.warp.push(w);
        data.metric.push(Matrix2::identity() * (w.rho * w.rho * phi * phi));
        data.normal.push([1.0, 0.0, 0.0]);
        data.cosh_theta.push(1.0);
        data.shape_chart.push(Matrix2::identity() * lam);
        data.shape.push(endo.clone());
        data.mean_curvature.push(w.d1 / w.rho);
        data.h_k.push(hk.clone());
        data.eta.push(0.0);
        data.v.push(w.rho);
        data.ric_nn.push(st.ricci(&dt, &dt)?);
        data.scalar_bar.push(st.scalar_curvature(&base)?);
    }
    data.grad_tau = vec![[0.0; 2]; n];
    data.grad_eta = vec![[0.0; 2]; n];
    data.grad_v = vec![[0.0; 2]; n];
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_graph_matches_slice() {
        let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
        let grid = ChartGrid::patch(12, 0.6).unwrap();
        let g = GraphHypersurface::constant(st.clone(), grid.clone(), 1.0).unwrap();
        let d = g.extrinsic_geometry().unwrap();
        let s = slice(&st, &grid, 1.0).unwrap();
        for v in 0..d.len() {
            assert!((d.mean_curvature[v] - 1f64.tanh()).abs() < 1e-14);
            assert!((d.mean_curvature[v] - s.mean_curvature[v]).abs() < 1e-14);
            assert!((d.metric[v] - s.metric[v]).abs().max() < 1e-14);
            assert!((d.shape_chart[v] - s.shape_chart[v]).abs().max() < 1e-14);
            assert!((d.v[v] - s.v[v]).abs() < 1e-14);
            assert!((d.ric_nn[v] - s.ric_nn[v]).abs() < 1e-12);
        }
    }

    #[test]
    fn steep_graph_is_rejected() {
        let st = GrwSpacetime::minkowski(2).unwrap();
        let grid = ChartGrid::patch(8, 1.0).unwrap();
        let u: Vec<f64> = (0..grid.num_vertices()).map(|v| 1.5 * grid.point(v)[0]).collect();
        assert!(matches!(GraphHypersurface::new(st, grid, u), Err(Error::NotSpacelike { .. })));
    }

    #[test]
    fn affine_graph_in_minkowski_is_flat() {
        let st = GrwSpacetime::minkowski(2).unwrap();
        let grid = ChartGrid::patch(10, 1.0).unwrap();
        let u: Vec<f64> = (0..grid.num_vertices()).map(|v| {
            let x = grid.point(v);
            0.3 * x[0] - 0.2 * x[1] + 0.1
        }).collect();
        let d = GraphHypersurface::new(st, grid, u).unwrap().extrinsic_geometry().unwrap();
        let c0 = d.cosh_theta[0];
        for v in 0..d.len() {
            assert!(d.shape_chart[v].abs().max() < 1e-8);
            assert!((d.cosh_theta[v] - c0).abs() < 1e-12);
        }
        assert!((c0 - 1.0 / (1.0 - 0.13f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn grid_differences_are_second_order() {
        let grid = ChartGrid::patch(21, 1.0).unwrap();
        let f: Vec<f64> = (0..grid.num_vertices()).map(|v| {
            let x = grid.point(v);
            x[0].powi(2) * x[1] + x[1].powi(2)
        }).collect();
        let hess = grid.hessian(&f);
        let grad = grid.gradient(&f);
        for v in 0..grid.num_vertices() {
            let x = grid.point(v);
            assert!((grad[v][0] - 2.0 * x[0] * x[1]).abs() < 1e-12);
            assert!((hess[v][(0, 1)] - 2.0 * x[0]).abs() < 1e-12);
            assert!((hess[v][(1, 1)] - 2.0).abs() < 1e-10);
        }
        let torus = ChartGrid::torus(32, 1.0).unwrap();
        let s: Vec<f64> = (0..torus.num_vertices()).map(|v| (2.0 * PI * torus.point(v)[0]).sin()).collect();
        let p1 = torus.p1_gradient(&s);
        let err = (0..s.len())
            .map(|v| (p1[v][0] - 2.0 * PI * (2.0 * PI * torus.point(v)[0]).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn height_text_round_trip() {
        let st = GrwSpacetime::minkowski(2).unwrap();
        let grid = ChartGrid::torus(6, 1.0).unwrap();
        let u: Vec<f64> = (0..36).map(|v| 0.01 * (v as f64).sin()).collect();
        let g = GraphHypersurface::new(st.clone(), grid.clone(), u).unwrap();
        let back = GraphHypersurface::from_text(st, grid, &g.to_text().unwrap()).unwrap();
        assert_eq!(back.heights(), g.heights());
    }
}
