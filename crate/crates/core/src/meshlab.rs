//! Triangle meshes with intrinsic edge lengths.
//!
//! Vertex positions are chart coordinates (`z = 0` for planar charts) or
//! embedding coordinates for the icosphere. All geometry used by the
//! assembly routines comes from the per-edge lengths, so a mesh can carry
//! any Riemannian metric, including ones with no isometric embedding.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Torus,
    Sphere,
    Disk,
}

impl Topology {
    pub fn euler_characteristic(self) -> i64 {
        match self {
            Topology::Torus => 0,
            Topology::Sphere => 2,
            Topology::Disk => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    /// `n × n` periodic grid on `[0, length)²`.
    Torus { n: usize, length: f64 },
    Icosphere { subdiv: usize, radius: f64 },
    /// `n × n` vertex grid on `[−half_width, half_width]²`.
    DiskPatch { n: usize, half_width: f64 },
}

pub fn build_mesh(kind: MeshKind) -> Result<SurfaceMesh> {
    match kind {
        MeshKind::Torus { n, length } => SurfaceMesh::torus(n, n, length, length),
        MeshKind::Icosphere { subdiv, radius } => SurfaceMesh::icosphere(subdiv, radius),
        MeshKind::DiskPatch { n, half_width } => {
            SurfaceMesh::rectangle(n, n, (-half_width, half_width), (-half_width, half_width))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    positions: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Edge index opposite each local vertex.
    tri_edges: Vec<[usize; 3]>,
    lengths: Vec<f64>,
    boundary: Vec<bool>,
    topology: Topology,
    period: Option<[f64; 2]>,
    grid: Option<(usize, usize)>,
}

/// Intrinsic data of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub area: f64,
    /// Interior angle at each local vertex.
    pub angles: [f64; 3],
    /// Cotangent of each interior angle.
    pub cot: [f64; 3],
    /// Inverse Gram matrix of the edge vectors `v1 − v0`, `v2 − v0`.
    pub gram_inv: Matrix2<f64>,
}

/// Gradients of the hat functions in the `(v1 − v0, v2 − v0)` parameter frame.
pub const HAT_DIFFERENTIALS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

impl SurfaceMesh {
    /// Periodic `nx × ny` grid on `[0, lx) × [0, ly)`, two triangles per cell.
    pub fn torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidArgument(format!("torus needs n >= 4, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidArgument("torus side lengths must be positive".into()));
        }
        let mut pos = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                pos.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64, 0.0]);
            }
        }
        let v = |i: usize, j: usize| (j % ny) * nx + (i % nx);
        let mut tris = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                tris.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                tris.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        let mut m = Self::from_parts(pos, tris, Topology::Torus, Some([lx, ly]))?;
        m.grid = Some((nx, ny));
        Ok(m)
    }

    /// `nx × ny` vertex grid on a chart rectangle; perimeter vertices are
    /// flagged as boundary.
    pub fn rectangle(nx: usize, ny: usize, xr: (f64, f64), yr: (f64, f64)) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidArgument(format!("patch needs n >= 4, got {nx}x{ny}")));
        }
        if !(xr.1 > xr.0 && yr.1 > yr.0) {
            return Err(Error::InvalidArgument("empty patch rectangle".into()));
        }
        let mut pos = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = xr.0 + (xr.1 - xr.0) * i as f64 / (nx - 1) as f64;
                let y = yr.0 + (yr.1 - yr.0) * j as f64 / (ny - 1) as f64;
                pos.push([x, y, 0.0]);
            }
        }
        let v = |i: usize, j: usize| j * nx + i;
        let mut tris = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                tris.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                tris.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        let mut m = Self::from_parts(pos, tris, Topology::Disk, None)?;
        m.grid = Some((nx, ny));
        Ok(m)
    }

    /// Subdivided icosahedron projected to the sphere of radius `r`;
    /// edge lengths are chords.
    pub fn icosphere(subdiv: usize, radius: f64) -> Result<Self> {
        if subdiv < 1 {
            return Err(Error::InvalidArgument("icosphere needs subdivision >= 1".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument("icosphere radius must be positive".into()));
        }
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let mut pos: Vec<[f64; 3]> = vec![
            [-1.0, g, 0.0],
            [1.0, g, 0.0],
            [-1.0, -g, 0.0],
            [1.0, -g, 0.0],
            [0.0, -1.0, g],
            [0.0, 1.0, g],
            [0.0, -1.0, -g],
            [0.0, 1.0, -g],
            [g, 0.0, -1.0],
            [g, 0.0, 1.0],
            [-g, 0.0, -1.0],
            [-g, 0.0, 1.0],
        ];
        let mut tris: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let normalize = |p: [f64; 3]| {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            [p[0] / n, p[1] / n, p[2] / n]
        };
        for p in pos.iter_mut() {
            *p = normalize(*p);
        }
        for _ in 0..subdiv {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next = Vec::with_capacity(tris.len() * 4);
            let mut mid = |a: usize, b: usize, pos: &mut Vec<[f64; 3]>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    let (p, q) = (pos[a], pos[b]);
                    pos.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    pos.len() - 1
                })
            };
            for &[a, b, c] in &tris {
                let ab = mid(a, b, &mut pos);
                let bc = mid(b, c, &mut pos);
                let ca = mid(c, a, &mut pos);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        for p in pos.iter_mut() {
            *p = [p[0] * radius, p[1] * radius, p[2] * radius];
        }
        Self::from_parts(pos, tris, Topology::Sphere, None)
    }

    /// Builds connectivity and Euclidean (minimal-image when `period` is
    /// given) edge lengths, checking the declared topology.
    pub fn from_parts(
        positions: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        topology: Topology,
        period: Option<[f64; 2]>,
    ) -> Result<Self> {
        let nv = positions.len();
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_faces: Vec<usize> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (f, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidArgument(format!("bad triangle {f}: {t:?}")));
            }
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_map.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push(0);
                    edges.len() - 1
                });
                edge_faces[e] += 1;
                te[k] = e;
            }
            tri_edges.push(te);
        }
        if let Some(e) = edge_faces.iter().position(|&c| c > 2) {
            return Err(Error::InvalidArgument(format!("non-manifold edge {:?}", edges[e])));
        }
        let mut boundary = vec![false; nv];
        for (e, &c) in edge_faces.iter().enumerate() {
            if c == 1 {
                boundary[edges[e][0]] = true;
                boundary[edges[e][1]] = true;
            }
        }
        let chi = nv as i64 - edges.len() as i64 + triangles.len() as i64;
        if chi != topology.euler_characteristic() {
            return Err(Error::InvalidArgument(format!(
                "Euler characteristic {chi} does not match {topology:?}"
            )));
        }
        let mut mesh = Self {
            positions,
            triangles,
            edges,
            tri_edges,
            lengths: Vec::new(),
            boundary,
            topology,
            period,
            grid: None,
        };
        let lengths = (0..mesh.edges.len())
            .map(|e| {
                let d = mesh.displacement(mesh.edges[e][0], mesh.edges[e][1]);
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            })
            .collect();
        mesh.set_lengths(lengths)?;
        Ok(mesh)
    }

    fn set_lengths(&mut self, lengths: Vec<f64>) -> Result<()> {
        if lengths.len() != self.edges.len() {
            return Err(Error::InvalidArgument("edge length count mismatch".into()));
        }
        for (f, te) in self.tri_edges.iter().enumerate() {
            let l = [lengths[te[0]], lengths[te[1]], lengths[te[2]]];
            if l.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::DegenerateTriangle(f));
            }
            if l[0] >= l[1] + l[2] || l[1] >= l[0] + l[2] || l[2] >= l[0] + l[1] {
                return Err(Error::DegenerateTriangle(f));
            }
        }
        self.lengths = lengths;
        Ok(())
    }

    /// Same connectivity with new edge lengths.
    pub fn with_edge_lengths(&self, lengths: Vec<f64>) -> Result<Self> {
        let mut m = self.clone();
        m.set_lengths(lengths)?;
        Ok(m)
    }

    /// Edge lengths of the chart metric `g(x)` (a 2×2 tensor field) along
    /// straight chart segments, by composite Simpson quadrature.
    pub fn with_metric<F>(&self, metric: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> Matrix2<f64>,
    {
        const PANELS: usize = 8;
        let lengths = self
            .edges
            .iter()
            .map(|&[a, b]| {
                let p = self.positions[a];
                let d = self.displacement(a, b);
                let speed = |s: f64| {
                    let x = [p[0] + s * d[0], p[1] + s * d[1]];
                    let g = metric(x);
                    (g[(0, 0)] * d[0] * d[0] + 2.0 * g[(0, 1)] * d[0] * d[1] + g[(1, 1)] * d[1] * d[1])
                        .max(0.0)
                        .sqrt()
                };
                let h = 1.0 / PANELS as f64;
                let mut s = speed(0.0) + speed(1.0);
                for k in 1..PANELS {
                    s += if k % 2 == 1 { 4.0 } else { 2.0 } * speed(k as f64 * h);
                }
                s * h / 3.0
            })
            .collect();
        self.with_edge_lengths(lengths)
    }

    /// Lengths of the constant-curvature chart metric `φ² δ`,
    /// `φ = 2/(1 + κ|x|²)`.
    pub fn with_conformal_chart(&self, kappa: f64) -> Result<Self> {
        self.with_metric(|x| {
            let phi = crate::spacetime::chart_conformal_factor(kappa, &x);
            Matrix2::identity() * (phi * phi)
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.tri_edges
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| self.boundary[i]).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn period(&self) -> Option<[f64; 2]> {
        self.period
    }

    /// `(nx, ny)` for meshes built on a structured chart grid.
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        self.grid
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Chart displacement `p_b − p_a`, wrapped to the minimal image on a
    /// periodic chart.
    pub fn displacement(&self, a: usize, b: usize) -> [f64; 3] {
        let (p, q) = (self.positions[a], self.positions[b]);
        let mut d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        if let Some(per) = self.period {
            for k in 0..2 {
                d[k] -= per[k] * (d[k] / per[k]).round();
            }
        }
        d
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.lengths.iter().sum::<f64>() / self.lengths.len() as f64
    }

    /// Edge lengths opposite each local vertex of face `f`.
    pub fn face_lengths(&self, f: usize) -> [f64; 3] {
        let te = self.tri_edges[f];
        [self.lengths[te[0]], self.lengths[te[1]], self.lengths[te[2]]]
    }

    pub fn triangle_geometry(&self, f: usize) -> TriangleGeometry {
        triangle_geometry(self.face_lengths(f))
    }

    /// Lumped vertex areas: one third of each incident triangle.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.num_vertices()];
        for (f, t) in self.triangles.iter().enumerate() {
            let third = self.triangle_geometry(f).area / 3.0;
            for &v in t {
                a[v] += third;
            }
        }
        a
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_faces()).map(|f| self.triangle_geometry(f).area).sum()
    }

    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_vertices()];
        for &[a, b] in &self.edges {
            nb[a].push(b);
            nb[b].push(a);
        }
        for l in nb.iter_mut() {
            l.sort_unstable();
        }
        nb
    }

    /// Chart displacement matrix `[p1 − p0, p2 − p0]` of a planar face.
    pub fn chart_jacobian(&self, f: usize) -> Matrix2<f64> {
        let t = self.triangles[f];
        let e1 = self.displacement(t[0], t[1]);
        let e2 = self.displacement(t[0], t[2]);
        Matrix2::new(e1[0], e2[0], e1[1], e2[1])
    }
}

/// Area, angles, cotangents and inverse Gram matrix from the three lengths
/// `l[k]` opposite local vertex `k`.
pub fn triangle_geometry(l: [f64; 3]) -> TriangleGeometry {
    let mut s = l;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (a, b, c) = (s[0], s[1], s[2]);
    let area = 0.25 * ((a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))).max(0.0).sqrt();
    let sq = [l[0] * l[0], l[1] * l[1], l[2] * l[2]];
    let mut angles = [0.0; 3];
    let mut cot = [0.0; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let num = sq[i] + sq[j] - sq[k];
        angles[k] = (4.0 * area).atan2(num);
        cot[k] = num / (4.0 * area);
    }
    // Gram matrix of e1 = v1 − v0 (length l2) and e2 = v2 − v0 (length l1).
    let g11 = sq[2];
    let g22 = sq[1];
    let g12 = 0.5 * (sq[2] + sq[1] - sq[0]);
    let det = 4.0 * area * area;
    let gram_inv = Matrix2::new(g22, -g12, -g12, g11) / det;
    TriangleGeometry { area, angles, cot, gram_inv }
}

/// Diffusion coefficient `P` in `div(P∇·)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Identity,
    Constant(f64),
    /// Per-vertex scalar multiple of the identity.
    Scalar(Vec<f64>),
    /// Per-vertex endomorphism in chart components `P^i_j`, self-adjoint
    /// with respect to the metric. Requires a planar chart mesh.
    Tensor(Vec<Matrix2<f64>>),
}

impl Coefficient {
    fn check(&self, mesh: &SurfaceMesh) -> Result<()> {
        let nv = mesh.num_vertices();
        match self {
            Coefficient::Identity => Ok(()),
            Coefficient::Constant(c) => {
                if *c > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!("coefficient {c} is not positive")))
                }
            }
            Coefficient::Scalar(v) => {
                if v.len() != nv {
                    return Err(Error::InvalidArgument("coefficient length mismatch".into()));
                }
                match v.iter().position(|x| !(*x > 0.0)) {
                    Some(i) => Err(Error::InvalidArgument(format!("coefficient not positive at vertex {i}"))),
                    None => Ok(()),
                }
            }
            Coefficient::Tensor(v) => {
                if v.len() != nv {
                    return Err(Error::InvalidArgument("coefficient length mismatch".into()));
                }
                for (i, p) in v.iter().enumerate() {
                    let tr = p.trace();
                    let det = p.determinant();
                    let disc = tr * tr - 4.0 * det;
                    let scale = tr.abs().max(1e-300);
                    if !(det > 0.0 && tr > 0.0 && disc >= -1e-12 * scale * scale) {
                        return Err(Error::InvalidArgument(format!(
                            "coefficient not positive definite at vertex {i}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Bilinear form matrix `S` on hat differentials of face `f`.
    pub(crate) fn face_form(&self, mesh: &SurfaceMesh, f: usize, geo: &TriangleGeometry) -> Matrix2<f64> {
        let t = mesh.triangles[f];
        match self {
            Coefficient::Identity => geo.gram_inv,
            Coefficient::Constant(c) => geo.gram_inv * *c,
            Coefficient::Scalar(v) => geo.gram_inv * ((v[t[0]] + v[t[1]] + v[t[2]]) / 3.0),
            Coefficient::Tensor(v) => {
                let p = (v[t[0]] + v[t[1]] + v[t[2]]) / 3.0;
                let j = mesh.chart_jacobian(f);
                let jinv = j.try_inverse().unwrap_or_else(Matrix2::zeros);
                let p_param = jinv * p * j;
                let b = geo.gram_inv * p_param.transpose();
                (b + b.transpose()) * 0.5
            }
        }
    }
}

/// Stiffness, potential and mass of `−div(P∇·) + q` with a Dirichlet set.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrices {
    pub stiffness: CsrMatrix,
    /// Diagonal of the potential matrix, `qᵢ mᵢ`.
    pub potential: Vec<f64>,
    /// Lumped mass.
    pub mass: Vec<f64>,
    pub dirichlet: Vec<usize>,
    /// Interior edges whose cotangent weight is negative.
    pub negative_weights: usize,
}

impl OperatorMatrices {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    /// Replaces the Dirichlet set (sorted, deduplicated).
    pub fn with_dirichlet(mut self, mut set: Vec<usize>) -> Result<Self> {
        set.sort_unstable();
        set.dedup();
        if set.last().is_some_and(|&v| v >= self.dim()) {
            return Err(Error::InvalidArgument("Dirichlet index out of range".into()));
        }
        self.dirichlet = set;
        Ok(self)
    }

    pub fn free_vertices(&self) -> Vec<usize> {
        let mut fixed = vec![false; self.dim()];
        for &d in &self.dirichlet {
            fixed[d] = true;
        }
        (0..self.dim()).filter(|&i| !fixed[i]).collect()
    }

    /// `(K + Q)` restricted to free vertices, with the free mass.
    pub fn restricted(&self) -> Result<(CsrMatrix, Vec<f64>, Vec<usize>)> {
        let free = self.free_vertices();
        let kq = self.stiffness.add_diagonal(&self.potential)?;
        let mass = free.iter().map(|&i| self.mass[i]).collect();
        Ok((kq.submatrix(&free), mass, free))
    }

    /// Applies the discrete operator `L u = div(P∇u) − q u`, i.e.
    /// `−M⁻¹(K + Q)u`, at every vertex.
    pub fn apply_operator(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.stiffness.mul_vec(u);
        (0..self.dim()).map(|i| -(ku[i] + self.potential[i] * u[i]) / self.mass[i]).collect()
    }
}

/// Galerkin assembly over all vertices; the Dirichlet set defaults to the
/// mesh boundary.
pub fn assemble(mesh: &SurfaceMesh, p: &Coefficient, q: &[f64]) -> Result<OperatorMatrices> {
    p.check(mesh)?;
    let nv = mesh.num_vertices();
    if q.len() != nv {
        return Err(Error::InvalidArgument(format!("potential has {} values, mesh has {nv}", q.len())));
    }
    if let Coefficient::Tensor(_) = p {
        if mesh.positions.iter().any(|x| x[2] != 0.0) {
            return Err(Error::InvalidArgument("tensor coefficients need a planar chart mesh".into()));
        }
    }
    let mut trip = Vec::with_capacity(9 * mesh.num_faces());
    let mut mass = vec![0.0; nv];
    let mut edge_cot = vec![0.0; mesh.num_edges()];
    for f in 0..mesh.num_faces() {
        let geo = mesh.triangle_geometry(f);
        if !(geo.area > 0.0) {
            return Err(Error::DegenerateTriangle(f));
        }
        let s = p.face_form(mesh, f, &geo);
        let t = mesh.triangles[f];
        for a in 0..3 {
            let da = HAT_DIFFERENTIALS[a];
            for b in 0..3 {
                let db = HAT_DIFFERENTIALS[b];
                let v = geo.area
                    * (da[0] * (s[(0, 0)] * db[0] + s[(0, 1)] * db[1])
                        + da[1] * (s[(1, 0)] * db[0] + s[(1, 1)] * db[1]));
                trip.push((t[a], t[b], v));
            }
            mass[t[a]] += geo.area / 3.0;
        }
        for k in 0..3 {
            edge_cot[mesh.tri_edges[f][k]] += 0.5 * geo.cot[k];
        }
    }
    let stiffness = CsrMatrix::from_triplets(nv, &trip)?;
    let potential = q.iter().zip(&mass).map(|(qi, mi)| qi * mi).collect();
    Ok(OperatorMatrices {
        stiffness,
        potential,
        mass,
        dirichlet: mesh.boundary_vertices(),
        negative_weights: edge_cot.iter().filter(|&&w| w < 0.0).count(),
    })
}

/// Assembles directly on the free vertices (those not in `dirichlet`),
/// returning `(K + Q)_free`, `M_free` and the free index list.
pub fn assemble_free(
    mesh: &SurfaceMesh,
    p: &Coefficient,
    q: &[f64],
    dirichlet: &[usize],
) -> Result<(CsrMatrix, Vec<f64>, Vec<usize>)> {
    p.check(mesh)?;
    let nv = mesh.num_vertices();
    let mut map = vec![usize::MAX; nv];
    let mut fixed = vec![false; nv];
    for &d in dirichlet {
        fixed[d] = true;
    }
    let free: Vec<usize> = (0..nv).filter(|&i| !fixed[i]).collect();
    for (k, &i) in free.iter().enumerate() {
        map[i] = k;
    }
    let mut trip = Vec::new();
    let mut mass = vec![0.0; free.len()];
    for f in 0..mesh.num_faces() {
        let geo = mesh.triangle_geometry(f);
        if !(geo.area > 0.0) {
            return Err(Error::DegenerateTriangle(f));
        }
        let s = p.face_form(mesh, f, &geo);
        let t = mesh.triangles[f];
        for a in 0..3 {
            if fixed[t[a]] {
                continue;
            }
            let da = HAT_DIFFERENTIALS[a];
            mass[map[t[a]]] += geo.area / 3.0;
            for b in 0..3 {
                if fixed[t[b]] {
                    continue;
                }
                let db = HAT_DIFFERENTIALS[b];
                let v = geo.area
                    * (da[0] * (s[(0, 0)] * db[0] + s[(0, 1)] * db[1])
                        + da[1] * (s[(1, 0)] * db[0] + s[(1, 1)] * db[1]));
                trip.push((map[t[a]], map[t[b]], v));
            }
        }
    }
    for (k, &i) in free.iter().enumerate() {
        trip.push((k, k, q[i] * mass[k]));
    }
    Ok((CsrMatrix::from_triplets(free.len(), &trip)?, mass, free))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    /// `2π − Σθ` at interior vertices and `π − Σθ` at boundary vertices.
    pub defects: Vec<f64>,
    /// Defect density `defect / vertex area`; `NaN` on the boundary.
    pub curvature: Vec<f64>,
    pub vertex_areas: Vec<f64>,
    /// Sum of all defects; equals `2πχ` up to rounding.
    pub total: f64,
}

pub fn angle_defect_curvature(mesh: &SurfaceMesh) -> Result<CurvatureReport> {
    let nv = mesh.num_vertices();
    let mut angle_sum = vec![0.0; nv];
    let mut areas = vec![0.0; nv];
    for (f, t) in mesh.triangles.iter().enumerate() {
        let geo = mesh.triangle_geometry(f);
        if !(geo.area > 0.0) {
            return Err(Error::DegenerateTriangle(f));
        }
        for k in 0..3 {
            angle_sum[t[k]] += geo.angles[k];
            areas[t[k]] += geo.area / 3.0;
        }
    }
    let mut defects = vec![0.0; nv];
    let mut curvature = vec![0.0; nv];
    for i in 0..nv {
        if mesh.boundary[i] {
            defects[i] = PI - angle_sum[i];
            curvature[i] = f64::NAN;
        } else {
            defects[i] = 2.0 * PI - angle_sum[i];
            curvature[i] = defects[i] / areas[i];
        }
    }
    let total = defects.iter().sum();
    Ok(CurvatureReport { defects, curvature, vertex_areas: areas, total })
}

/// Rescales each edge by the geometric mean of its endpoint weights.
pub fn conformal_rescale(mesh: &SurfaceMesh, w: &[f64]) -> Result<SurfaceMesh> {
    if w.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument("weight length mismatch".into()));
    }
    if let Some(i) = w.iter().position(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight not positive at vertex {i}")));
    }
    let lengths = mesh
        .edges
        .iter()
        .zip(&mesh.lengths)
        .map(|(&[a, b], l)| (w[a] * w[b]).sqrt() * l)
        .collect();
    mesh.with_edge_lengths(lengths)
}

/// Parsed plain-text mesh: first line `V F [C]`, then `V` lines of three
/// coordinates followed by `C` scalar columns, then `F` index triples.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshText {
    pub positions: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub columns: Vec<Vec<f64>>,
}

impl MeshText {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        if h.len() < 2 || h.len() > 3 {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let (nv, nf, nc) = (h[0], h[1], h.get(2).copied().unwrap_or(0));
        let mut positions = Vec::with_capacity(nv);
        let mut columns = vec![Vec::with_capacity(nv); nc];
        for i in 0..nv {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing vertex line {i}")))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad number in {line:?}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 3 + nc {
                return Err(Error::Parse(format!("vertex line {i} has {} values, want {}", vals.len(), 3 + nc)));
            }
            positions.push([vals[0], vals[1], vals[2]]);
            for c in 0..nc {
                columns[c].push(vals[3 + c]);
            }
        }
        let mut triangles = Vec::with_capacity(nf);
        for f in 0..nf {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing face line {f}")))?;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad index in {line:?}"))))
                .collect::<Result<_>>()?;
            if idx.len() != 3 || idx.iter().any(|&i| i >= nv) {
                return Err(Error::Parse(format!("bad face line {line:?}")));
            }
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after faces".into()));
        }
        Ok(Self { positions, triangles, columns })
    }

    pub fn from_mesh(mesh: &SurfaceMesh, columns: &[&[f64]]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != mesh.num_vertices()) {
            return Err(Error::InvalidArgument("column length mismatch".into()));
        }
        Ok(Self {
            positions: mesh.positions.clone(),
            triangles: mesh.triangles.clone(),
            columns: columns.iter().map(|c| c.to_vec()).collect(),
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let nc = self.columns.len();
        if nc > 0 {
            s.push_str(&format!("{} {} {}\n", self.positions.len(), self.triangles.len(), nc));
        } else {
            s.push_str(&format!("{} {}\n", self.positions.len(), self.triangles.len()));
        }
        for (i, p) in self.positions.iter().enumerate() {
            s.push_str(&format!("{:e} {:e} {:e}", p[0], p[1], p[2]));
            for c in &self.columns {
                s.push_str(&format!(" {:e}", c[i]));
            }
            s.push('\n');
        }
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }

    pub fn into_mesh(self, topology: Topology, period: Option<[f64; 2]>) -> Result<(SurfaceMesh, Vec<Vec<f64>>)> {
        let mesh = SurfaceMesh::from_parts(self.positions, self.triangles, topology, period)?;
        Ok((mesh, self.columns))
    }
}
