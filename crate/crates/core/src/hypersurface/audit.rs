use nalgebra::{DMatrix, Matrix2};

use super::{ExtrinsicData, GraphHypersurface};
use crate::error::{Error, Result};
use crate::meshlab::angle_defect_curvature;
use crate::symalg::{binomial, newton_constant, newton_tensors_with, invariants};

/// Grid steps excluded next to a patch boundary.
pub const DEFAULT_BAND: usize = 3;

/// Max-norm residuals of the pointwise identities for spacelike graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub grad_tau: f64,
    pub grad_eta: f64,
    /// `min (m−1)/m · trace(A²)(v² − ρ²) − |∇v|²`, meaningful for maximal graphs.
    pub kato_slack: f64,
    /// `min trace(A²)(v² − ρ²) − |∇v|²`.
    pub kato_slack_unrefined: f64,
    /// `Δη − (−mρ' + mHv)`.
    pub lap_eta: f64,
    /// `Δη − (−mρ' − mHv)`.
    pub lap_eta_alt: f64,
    /// `Δη + mρ'`.
    pub lap_eta_maximal: f64,
    pub lap_v: f64,
    /// `2K − (S̄ + 2Ric̄(N,N) − m²H² + trace A²)`.
    pub gauss: f64,
    pub normal_unit: f64,
    pub normal_tangency: f64,
    pub max_mean_curvature: f64,
    pub vertices_checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LkReport {
    pub k: usize,
    /// `Lₖη − (−cₖρ'Hₖ + cₖHₖ₊₁v)`.
    pub eta: f64,
    /// `Lₖv − (trace(A²Pₖ)v − C(m,k+1) g(T^⊤,∇Hₖ₊₁) − cₖHₖ₊₁ρ')`.
    pub v: f64,
    pub vertices_checked: usize,
}

fn sqrt_det(g: &[Matrix2<f64>]) -> Vec<f64> {
    g.iter().map(|m| m.determinant().sqrt()).collect()
}

fn raise(ginv: &Matrix2<f64>, c: [f64; 2]) -> [f64; 2] {
    [ginv[(0, 0)] * c[0] + ginv[(0, 1)] * c[1], ginv[(1, 0)] * c[0] + ginv[(1, 1)] * c[1]]
}

fn pair(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(1/√g) ∂_i(√g Pⁱ_l g^{lj} f_j)` with finite differences.
fn weighted_laplacian(h: &GraphHypersurface, data: &ExtrinsicData, f: &[f64], p: Option<&[Matrix2<f64>]>) -> Vec<f64> {
    let grid = h.grid();
    let df = grid.gradient(f);
    let field: Vec<[f64; 2]> = (0..f.len())
        .map(|v| {
            let ginv = data.metric[v].try_inverse().unwrap_or_else(Matrix2::zeros);
            let up = raise(&ginv, df[v]);
            match p {
                Some(p) => [p[v][(0, 0)] * up[0] + p[v][(0, 1)] * up[1], p[v][(1, 0)] * up[0] + p[v][(1, 1)] * up[1]],
                None => up,
            }
        })
        .collect();
    grid.divergence(&field, &sqrt_det(&data.metric))
}

fn max_abs(mask: &[bool], vals: impl Iterator<Item = f64>) -> f64 {
    vals.zip(mask).filter(|(_, &m)| m).map(|(x, _)| x.abs()).fold(0.0, f64::max)
}

fn min_over(mask: &[bool], vals: impl Iterator<Item = f64>) -> f64 {
    vals.zip(mask).filter(|(_, &m)| m).map(|(x, _)| x).fold(f64::INFINITY, f64::min)
}

pub fn identity_audit(h: &GraphHypersurface, band: usize) -> Result<IdentityReport> {
    let data = h.extrinsic_geometry()?;
    let grid = h.grid();
    let n = data.len();
    let mf = data.m as f64;
    let mask = grid.interior_mask(band);
    let du = grid.gradient(h.heights());

    let grad_tau = max_abs(&mask, (0..n).map(|v| data.norm2(v, data.grad_tau[v]) - data.sinh2_theta(v)));
    let grad_eta = max_abs(
        &mask,
        (0..n).map(|v| data.norm2(v, data.grad_eta[v]) - (data.v[v].powi(2) - data.warp[v].rho.powi(2))),
    );

    let mut kato = Vec::with_capacity(n);
    let mut kato_unrefined = Vec::with_capacity(n);
    for v in 0..n {
        let ginv = data.metric[v].try_inverse().unwrap_or_else(Matrix2::zeros);
        let rho = data.warp[v].rho;
        let x = raise(&ginv, [rho * du[v][0], rho * du[v][1]]);
        let a = data.shape_chart[v];
        let ax = [a[(0, 0)] * x[0] + a[(0, 1)] * x[1], a[(1, 0)] * x[0] + a[(1, 1)] * x[1]];
        let ax_low = [
            data.metric[v][(0, 0)] * ax[0] + data.metric[v][(0, 1)] * ax[1],
            data.metric[v][(1, 0)] * ax[0] + data.metric[v][(1, 1)] * ax[1],
        ];
        let grad_v2 = pair(ax, ax_low);
        let bound = data.trace_a2(v) * (data.v[v].powi(2) - rho * rho);
        kato.push((mf - 1.0) / mf * bound - grad_v2);
        kato_unrefined.push(bound - grad_v2);
    }

    let lap_eta_field = weighted_laplacian(h, &data, &data.eta, None);
    let lap_v_field = weighted_laplacian(h, &data, &data.v, None);
    let dh = grid.gradient(&data.mean_curvature);
    let mut lap_eta = Vec::with_capacity(n);
    let mut lap_eta_alt = Vec::with_capacity(n);
    let mut lap_eta_maximal = Vec::with_capacity(n);
    let mut lap_v = Vec::with_capacity(n);
    for v in 0..n {
        let w = data.warp[v];
        let hv = data.mean_curvature[v];
        lap_eta.push(lap_eta_field[v] - (-mf * w.d1 + mf * hv * data.v[v]));
        lap_eta_alt.push(lap_eta_field[v] - (-mf * w.d1 - mf * hv * data.v[v]));
        lap_eta_maximal.push(lap_eta_field[v] + mf * w.d1);
        let ginv = data.metric[v].try_inverse().unwrap_or_else(Matrix2::zeros);
        let t_top_dot_dh = -pair(raise(&ginv, [w.rho * du[v][0], w.rho * du[v][1]]), dh[v]);
        let rhs = (data.ric_nn[v] + data.trace_a2(v) + mf * w.d2 / w.rho) * data.v[v]
            - mf * t_top_dot_dh
            - mf * hv * w.d1;
        lap_v.push(lap_v_field[v] - rhs);
    }

    let curv = angle_defect_curvature(&h.induced_mesh()?)?;
    let gauss_mask: Vec<bool> = mask.iter().zip(&curv.curvature).map(|(&m, k)| m && k.is_finite()).collect();
    let gauss = max_abs(
        &gauss_mask,
        (0..n).map(|v| {
            let hv = data.mean_curvature[v];
            2.0 * curv.curvature[v] - (data.scalar_bar[v] + 2.0 * data.ric_nn[v] - mf * mf * hv * hv + data.trace_a2(v))
        }),
    );

    let (normal_unit, normal_tangency) = data.normal_residuals(&du, h.kappa_f());
    Ok(IdentityReport {
        grad_tau,
        grad_eta,
        kato_slack: min_over(&mask, kato.into_iter()),
        kato_slack_unrefined: min_over(&mask, kato_unrefined.into_iter()),
        lap_eta: max_abs(&mask, lap_eta.into_iter()),
        lap_eta_alt: max_abs(&mask, lap_eta_alt.into_iter()),
        lap_eta_maximal: max_abs(&mask, lap_eta_maximal.into_iter()),
        lap_v: max_abs(&mask, lap_v.into_iter()),
        gauss,
        normal_unit,
        normal_tangency,
        max_mean_curvature: max_abs(&mask, data.mean_curvature.iter().copied()),
        vertices_checked: mask.iter().filter(|&&m| m).count(),
    })
}

/// Residuals of the `Lₖη` and `Lₖv` identities, `Lₖ = div(Pₖ∇·)`, for
/// `0 ≤ k ≤ m − 1` in a constant-curvature ambient.
pub fn lk_identity_audit(h: &GraphHypersurface, k: usize, band: usize) -> Result<LkReport> {
    let data = h.extrinsic_geometry()?;
    let m = data.m;
    if k >= m {
        return Err(Error::InvalidArgument(format!("k = {k} outside 0..={}", m - 1)));
    }
    if h.ambient().constant_curvature_audit(crate::spacetime::DEFAULT_AUDIT_SAMPLES).is_none() {
        return Err(Error::Precondition("ambient spacetime does not have constant curvature".into()));
    }
    let grid = h.grid();
    let n = data.len();
    let du = grid.gradient(h.heights());
    let mut p_chart = Vec::with_capacity(n);
    let mut tr_a2p = Vec::with_capacity(n);
    for v in 0..n {
        let endo = &data.shape[v];
        let pk = newton_tensors_with(endo, &invariants(endo), k).pop().expect("P_0 always present");
        let a = endo.matrix();
        tr_a2p.push((a * a * &pk).trace());
        let l = data.metric[v].cholesky().ok_or(Error::NotSpacelike { vertex: v })?.l();
        let lt_inv = l.transpose().try_inverse().ok_or(Error::NotSpacelike { vertex: v })?;
        p_chart.push(lt_inv * to_matrix2(&pk) * l.transpose());
    }
    let lk_eta = weighted_laplacian(h, &data, &data.eta, Some(&p_chart));
    let lk_v = weighted_laplacian(h, &data, &data.v, Some(&p_chart));
    let hk = |v: usize, j: usize| if j == 0 { 1.0 } else { data.h_k[v][j - 1] };
    let hk1: Vec<f64> = (0..n).map(|v| hk(v, k + 1)).collect();
    let dhk1 = grid.gradient(&hk1);
    let ck = newton_constant(m, k);
    let bk1 = binomial(m, k + 1);
    let mut eta_res = Vec::with_capacity(n);
    let mut v_res = Vec::with_capacity(n);
    for v in 0..n {
        let w = data.warp[v];
        eta_res.push(lk_eta[v] - (-ck * w.d1 * hk(v, k) + ck * hk1[v] * data.v[v]));
        let ginv = data.metric[v].try_inverse().unwrap_or_else(Matrix2::zeros);
        let t_top_dot = -pair(raise(&ginv, [w.rho * du[v][0], w.rho * du[v][1]]), dhk1[v]);
        let rhs = tr_a2p[v] * data.v[v] - bk1 * t_top_dot - ck * hk1[v] * w.d1;
        v_res.push(lk_v[v] - rhs);
    }
    let mask = grid.interior_mask(band);
    Ok(LkReport {
        k,
        eta: max_abs(&mask, eta_res.into_iter()),
        v: max_abs(&mask, v_res.into_iter()),
        vertices_checked: mask.iter().filter(|&&m| m).count(),
    })
}

fn to_matrix2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}
