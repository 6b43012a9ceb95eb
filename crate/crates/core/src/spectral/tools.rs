use super::radial::{ProfileFn, RadialProfile, RadialSolution};
use super::{lambda1, SchrodingerProblem};
use crate::error::{Error, Result};
use crate::meshlab::{Coefficient, SurfaceMesh, HAT_DIFFERENTIALS};
use crate::sparse::{rcm_ordering, BandedLu, EnvelopeCholesky};

/// `|λ₁|` below which a Dirichlet problem is treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

/// `min_i ((K + Q)_ff u)_i / (mᵢ uᵢ)` over free vertices, with `u` taken as
/// zero on the Dirichlet set. For operators whose off-diagonal entries are
/// nonpositive this is a lower bound for `λ₁`.
pub fn barta_bound(p: &SchrodingerProblem, u: &[f64]) -> Result<f64> {
    if u.len() != p.dim() {
        return Err(Error::InvalidArgument("vector length mismatch".into()));
    }
    let free = p.ops.free_vertices();
    if let Some(&i) = free.iter().find(|&&i| !(u[i] > 0.0)) {
        return Err(Error::InvalidArgument(format!("u is not positive at vertex {i}")));
    }
    let mut v = u.to_vec();
    for &d in &p.ops.dirichlet {
        v[d] = 0.0;
    }
    let au = p.full_matrix()?.mul_vec(&v);
    Ok(free.iter().map(|&i| au[i] / (p.ops.mass[i] * v[i])).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiconeReport {
    /// Largest `|lhs − rhs|` over faces.
    pub max_residual: f64,
    /// Smallest `g(P(∇u − (u/v)∇v), ∇u − (u/v)∇v)` over faces.
    pub min_slack: f64,
}

/// Per-face check of
/// `g(P(∇u − (u/v)∇v), ∇u − (u/v)∇v) = g(P∇u, ∇u) − g(∇(u²/v), P∇v)`
/// with P1 gradients and `u/v` taken from face centroid values.
pub fn picone_residual(mesh: &SurfaceMesh, u: &[f64], v: &[f64], p: &Coefficient) -> Result<PiconeReport> {
    let n = mesh.num_vertices();
    if u.len() != n || v.len() != n {
        return Err(Error::InvalidArgument("vector length mismatch".into()));
    }
    if let Some(i) = v.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument(format!("v is not positive at vertex {i}")));
    }
    let mut report = PiconeReport { max_residual: 0.0, min_slack: f64::INFINITY };
    for f in 0..mesh.num_faces() {
        let geo = mesh.triangle_geometry(f);
        if !(geo.area > 0.0) {
            return Err(Error::DegenerateTriangle(f));
        }
        let s = p.face_form(mesh, f, &geo);
        let t = mesh.triangles()[f];
        let diff = |x: &[f64]| {
            let mut d = [0.0; 2];
            for a in 0..3 {
                d[0] += x[t[a]] * HAT_DIFFERENTIALS[a][0];
                d[1] += x[t[a]] * HAT_DIFFERENTIALS[a][1];
            }
            d
        };
        let form = |a: [f64; 2], b: [f64; 2]| {
            a[0] * (s[(0, 0)] * b[0] + s[(0, 1)] * b[1]) + a[1] * (s[(1, 0)] * b[0] + s[(1, 1)] * b[1])
        };
        let (du, dv) = (diff(u), diff(v));
        let ub = (u[t[0]] + u[t[1]] + u[t[2]]) / 3.0;
        let vb = (v[t[0]] + v[t[1]] + v[t[2]]) / 3.0;
        let c = ub / vb;
        let w = [du[0] - c * dv[0], du[1] - c * dv[1]];
        let lhs = form(w, w);
        let d_ratio = [2.0 * c * du[0] - c * c * dv[0], 2.0 * c * du[1] - c * c * dv[1]];
        let rhs = form(du, du) - form(d_ratio, dv);
        report.max_residual = report.max_residual.max((lhs - rhs).abs());
        report.min_slack = report.min_slack.min(lhs);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub lambda_inner: f64,
    pub lambda_outer: f64,
    /// `λ₁(Ω₁) − λ₁(Ω₂)`.
    pub gap: f64,
    /// `Ω₂ ∖ Ω₁` is nonempty.
    pub strict_expected: bool,
    /// `λ₁(Ω₁) ≥ λ₁(Ω₂)` up to rounding, and strictly so when expected.
    pub holds: bool,
}

/// Compares `λ₁` of `p` restricted to the vertex sets `omega1 ⊆ omega2`.
pub fn monotonicity_check(p: &SchrodingerProblem, omega1: &[usize], omega2: &[usize]) -> Result<MonotonicityReport> {
    let mut outer = vec![false; p.dim()];
    for &i in omega2 {
        if i >= p.dim() {
            return Err(Error::InvalidArgument(format!("vertex {i} out of range")));
        }
        outer[i] = true;
    }
    if let Some(&i) = omega1.iter().find(|&&i| i >= p.dim() || !outer[i]) {
        return Err(Error::InvalidArgument(format!("domains are not nested (vertex {i})")));
    }
    let mut inner = vec![false; p.dim()];
    omega1.iter().for_each(|&i| inner[i] = true);
    let strict_expected = outer.iter().zip(&inner).any(|(o, i)| *o && !*i);
    let l1 = lambda1(&p.restricted_to(omega1)?)?.lambda1;
    let l2 = lambda1(&p.restricted_to(omega2)?)?.lambda1;
    let gap = l1 - l2;
    let tol = 1e-10 * l1.abs().max(l2.abs()).max(1.0);
    let holds = if strict_expected { gap > tol } else { gap >= -tol };
    Ok(MonotonicityReport { lambda_inner: l1, lambda_outer: l2, gap, strict_expected, holds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityOutcome {
    pub lambda1: f64,
    /// A positive solution of `Lu = 0` (equal to 1 on the Dirichlet set),
    /// or the ground state of a closed problem with `λ₁ = 0`.
    pub solution: Option<Vec<f64>>,
    /// Smallest free value of the computed candidate.
    pub min_value: f64,
}

/// Looks for a positive solution of `Lu = 0`.
///
/// On closed problems the ground state is returned iff `|λ₁| < RESONANCE_TOL`.
/// With a Dirichlet set the system is solved with `u = 1` there; a resonant
/// problem yields [`Error::Resonance`].
pub fn positivity_solve(p: &SchrodingerProblem) -> Result<PositivityOutcome> {
    let g = lambda1(p)?;
    if p.is_closed() {
        let (lo, _) = g.sign_range();
        let solution = (g.lambda1.abs() < RESONANCE_TOL && lo > 0.0).then(|| g.phi.clone());
        return Ok(PositivityOutcome { lambda1: g.lambda1, solution, min_value: lo });
    }
    if g.lambda1.abs() < RESONANCE_TOL {
        return Err(Error::Resonance(g.lambda1));
    }
    let a = p.full_matrix()?;
    let free = p.ops.free_vertices();
    let mut fixed = vec![false; p.dim()];
    p.ops.dirichlet.iter().for_each(|&d| fixed[d] = true);
    let rhs: Vec<f64> = free.iter().map(|&i| -a.row(i).filter(|(j, _)| fixed[*j]).map(|(_, v)| v).sum::<f64>()).collect();
    let aff = a.submatrix(&free);
    let perm = rcm_ordering(&aff);
    let uf = if g.lambda1 > 0.0 {
        EnvelopeCholesky::factor(&aff, 0.0, &perm)?.solve(&rhs)
    } else {
        let mut inv = vec![0; perm.len()];
        perm.iter().enumerate().for_each(|(new, &old)| inv[old] = new);
        let trip: Vec<(usize, usize, f64)> = aff.triplets().into_iter().map(|(i, j, v)| (inv[i], inv[j], v)).collect();
        let bw = trip.iter().map(|&(i, j, _)| i.abs_diff(j)).max().unwrap_or(0);
        let lu = BandedLu::factor(aff.dim(), bw, bw, &trip)?;
        let y = lu.solve(&perm.iter().map(|&old| rhs[old]).collect::<Vec<_>>());
        let mut x = vec![0.0; y.len()];
        perm.iter().enumerate().for_each(|(new, &old)| x[old] = y[new]);
        x
    };
    let mut u = vec![1.0; p.dim()];
    free.iter().zip(&uf).for_each(|(&i, &v)| u[i] = v);
    let min_value = uf.iter().copied().fold(f64::INFINITY, f64::min);
    let solution = (min_value > 0.0).then_some(u);
    Ok(PositivityOutcome { lambda1: g.lambda1, solution, min_value })
}

/// Mass-weighted mean of `q` over vertices with `r − Δ ≤ dist < r + Δ`.
pub fn shell_potential_average(p: &SchrodingerProblem, dist: &[f64], r: f64, delta: f64) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &d) in dist.iter().enumerate() {
        if d >= r - delta && d < r + delta {
            num += p.ops.potential[i];
            den += p.ops.mass[i];
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Tabulated profile with `A(r) = −(shell mean of q)` and
/// `w(r) = (shell mass) / 2Δ`, sampled every `Δ/2` on `[Δ, r_max]`.
pub fn radial_profile_from_problem(
    p: &SchrodingerProblem,
    dist: &[f64],
    delta: f64,
    r_max: f64,
) -> Result<RadialProfile> {
    if dist.len() != p.dim() || !(delta > 0.0) || !(r_max > delta) {
        return Err(Error::InvalidArgument("invalid shell sampling".into()));
    }
    let (mut rs, mut ws, mut avals) = (Vec::new(), Vec::new(), Vec::new());
    let mut r = delta;
    while r <= r_max + 1e-12 * r_max {
        let q = shell_potential_average(p, dist, r, delta)
            .ok_or_else(|| Error::Precondition(format!("no vertices in the shell at r = {r}")))?;
        let mass: f64 = dist
            .iter()
            .zip(&p.ops.mass)
            .filter(|(d, _)| **d >= r - delta && **d < r + delta)
            .map(|(_, m)| m)
            .sum();
        rs.push(r);
        ws.push(mass / (2.0 * delta));
        avals.push(-q);
        r += 0.5 * delta;
    }
    let (r0, r1) = (rs[0], *rs.last().unwrap());
    RadialProfile::new(ProfileFn::table(rs.clone(), ws)?, ProfileFn::table(rs, avals)?, r0, r1)
}

fn is_anchor(sol: &RadialSolution, r: f64) -> bool {
    let tol = 1e-9 * r.abs().max(1.0);
    (r - sol.start()).abs() <= tol || (r - sol.end()).abs() <= tol || sol.zeros.iter().any(|z| (z - r).abs() <= tol)
}

/// Rayleigh quotient of `φ(x) = z(r(x))` on `R₁ ≤ r(x) ≤ R₂` (zero
/// elsewhere). Each radius must be a zero or an endpoint of `sol`; when
/// `R₁` is the initial radius, `φ` continues as the constant `z(r₀)` inside it.
pub fn annulus_rayleigh(p: &SchrodingerProblem, sol: &RadialSolution, r1: f64, r2: f64, dist: &[f64]) -> Result<f64> {
    if !(r1 < r2) {
        return Err(Error::InvalidArgument(format!("empty annulus [{r1}, {r2}]")));
    }
    for r in [r1, r2] {
        if !is_anchor(sol, r) {
            return Err(Error::InvalidArgument(format!("{r} is neither a zero nor an endpoint of the solution")));
        }
    }
    if dist.len() != p.dim() {
        return Err(Error::InvalidArgument("distance field length mismatch".into()));
    }
    let lo = if (r1 - sol.start()).abs() <= 1e-9 * r1.abs().max(1.0) { f64::NEG_INFINITY } else { r1 };
    let phi: Vec<f64> = dist.iter().map(|&d| if d >= lo && d <= r2 { sol.z_at(d) } else { 0.0 }).collect();
    super::rayleigh_quotient(p, &phi)
}
