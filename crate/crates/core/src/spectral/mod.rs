//! First eigenvalues of Schrödinger operators `L = div(P∇·) − q` on meshes,
//! comparison tools, and the radial oscillation problem.
//!
//! Eigenvalues are those of `−L`: the smallest `λ` with
//! `(K + Q) φ = λ M φ` on the free (non-Dirichlet) vertices. The generalized
//! problem is reduced to the symmetric matrix `D^{-1/2}(K + Q)D^{-1/2}`,
//! where `D` is the lumped free mass.

mod eigen;
pub mod radial;
mod tools;

pub use radial::{
    oscillation_classify, parse_two_columns, radial_cauchy_solve, radial_cauchy_solve_with, IntegralTrend,
    Oscillation, OscillationReport, ProfileFn, RadialOptions, RadialProfile, RadialSolution,
};
pub use tools::{
    annulus_rayleigh, barta_bound, monotonicity_check, picone_residual, positivity_solve, radial_profile_from_problem,
    shell_potential_average, MonotonicityReport, PiconeReport, PositivityOutcome, RESONANCE_TOL,
};

use crate::error::{Error, Result};
use crate::meshlab::{self, Coefficient, OperatorMatrices, SurfaceMesh};
use crate::sparse::CsrMatrix;

/// Where the potential of a problem comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// `q = Ric̄(N,N) + trace A²`, `P = I`.
    Stability,
    /// `q = trace(A² Pₖ) − κ̄ trace Pₖ`, `P = Pₖ`.
    KStability { k: usize },
    Custom(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerProblem {
    pub ops: OperatorMatrices,
    pub provenance: Provenance,
}

impl SchrodingerProblem {
    pub fn new(ops: OperatorMatrices, provenance: Provenance) -> Result<Self> {
        let free = ops.free_vertices();
        if free.is_empty() {
            return Err(Error::InvalidArgument("problem has no free vertices".into()));
        }
        if let Some(&i) = free.iter().find(|&&i| !(ops.mass[i] > 0.0)) {
            return Err(Error::Precondition(format!("mass not positive at free vertex {i}")));
        }
        Ok(Self { ops, provenance })
    }

    /// Assembles `div(P∇·) − q` with Dirichlet conditions on the mesh
    /// boundary (none on closed meshes).
    pub fn assemble(mesh: &SurfaceMesh, p: &Coefficient, q: &[f64], provenance: Provenance) -> Result<Self> {
        Self::new(meshlab::assemble(mesh, p, q)?, provenance)
    }

    /// Stability operator `Δ − (Ric̄(N,N) + |A|²)`.
    pub fn stability(mesh: &SurfaceMesh, ric_nn: &[f64], trace_a2: &[f64]) -> Result<Self> {
        if ric_nn.len() != trace_a2.len() {
            return Err(Error::InvalidArgument("potential component lengths differ".into()));
        }
        let q: Vec<f64> = ric_nn.iter().zip(trace_a2).map(|(a, b)| a + b).collect();
        Self::assemble(mesh, &Coefficient::Identity, &q, Provenance::Stability)
    }

    /// `k`-stability operator `div(Pₖ∇·) − (trace(A²Pₖ) − κ̄ trace Pₖ)`.
    pub fn k_stability(mesh: &SurfaceMesh, k: usize, p_k: Coefficient, q: &[f64]) -> Result<Self> {
        Self::assemble(mesh, &p_k, q, Provenance::KStability { k })
    }

    /// Same operator with Dirichlet conditions outside the vertex set `omega`.
    pub fn restricted_to(&self, omega: &[usize]) -> Result<Self> {
        let n = self.ops.dim();
        let mut inside = vec![false; n];
        for &i in omega {
            if i >= n {
                return Err(Error::InvalidArgument(format!("vertex {i} out of range")));
            }
            inside[i] = true;
        }
        let fixed: Vec<usize> = (0..n).filter(|&i| !inside[i]).collect();
        Self::new(self.ops.clone().with_dirichlet(fixed)?, self.provenance.clone())
    }

    pub fn is_closed(&self) -> bool {
        self.ops.dirichlet.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    /// Pointwise potential `qᵢ`.
    pub fn potential(&self) -> Vec<f64> {
        self.ops.potential.iter().zip(&self.ops.mass).map(|(p, m)| p / m).collect()
    }

    /// Full `K + Q` over all vertices.
    pub fn full_matrix(&self) -> Result<CsrMatrix> {
        self.ops.stiffness.add_diagonal(&self.ops.potential)
    }

    /// `D^{-1/2}(K + Q)_ff D^{-1/2}`, the free mass and free indices.
    fn reduced(&self) -> Result<(CsrMatrix, Vec<f64>, Vec<usize>)> {
        let (kq, mass, free) = self.ops.restricted()?;
        let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        Ok((kq.scale_rows_cols(&s, &s), mass, free))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub lambda1: f64,
    /// Full-length ground state, zero on the Dirichlet set, mass-normalized
    /// and oriented to have positive mass-weighted sum.
    pub phi: Vec<f64>,
    pub free: Vec<usize>,
    /// Rayleigh quotient of `phi` recomputed from the assembled matrices.
    pub rayleigh: f64,
    /// `‖Bx − λx‖` in the symmetrized problem.
    pub residual: f64,
    pub shift: f64,
    pub lanczos_steps: usize,
}

impl GroundState {
    /// Smallest and largest free entry of `phi`.
    pub fn sign_range(&self) -> (f64, f64) {
        self.free
            .iter()
            .map(|&i| self.phi[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

fn start_vector(mass: &[f64]) -> Vec<f64> {
    let s: f64 = mass.iter().sum::<f64>().sqrt();
    mass.iter().map(|m| m.sqrt() / s).collect()
}

pub fn lambda1(p: &SchrodingerProblem) -> Result<GroundState> {
    let (b, mass, free) = p.reduced()?;
    let pair = eigen::lowest_pair(&b, &start_vector(&mass))?;
    let mut phi = vec![0.0; p.dim()];
    let mut weighted = 0.0;
    for (k, &i) in free.iter().enumerate() {
        phi[i] = pair.vector[k] / mass[k].sqrt();
        weighted += mass[k] * phi[i];
    }
    if weighted < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    let rayleigh = rayleigh_quotient(p, &phi)?;
    Ok(GroundState {
        lambda1: pair.value,
        phi,
        free,
        rayleigh,
        residual: pair.residual,
        shift: pair.shift,
        lanczos_steps: pair.steps,
    })
}

/// The `count` smallest eigenvalues in ascending order.
pub fn smallest_eigenvalues(p: &SchrodingerProblem, count: usize) -> Result<Vec<f64>> {
    let (b, mass, _) = p.reduced()?;
    eigen::lowest_values(&b, &start_vector(&mass), count)
}

/// `(φᵀ(K + Q)φ) / (φᵀMφ)` with `φ` taken as zero on the Dirichlet set.
pub fn rayleigh_quotient(p: &SchrodingerProblem, phi: &[f64]) -> Result<f64> {
    if phi.len() != p.dim() {
        return Err(Error::InvalidArgument("vector length mismatch".into()));
    }
    let mut v = phi.to_vec();
    for &d in &p.ops.dirichlet {
        v[d] = 0.0;
    }
    let den: f64 = v.iter().zip(&p.ops.mass).map(|(x, m)| m * x * x).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("test function vanishes on the free vertices".into()));
    }
    Ok(p.full_matrix()?.quadratic_form(&v) / den)
}
