//! Finite-difference oracles for the analytic connection and curvature.
//!
//! Everything here is deliberately naive: metric components are
//! differentiated by central differences, and the Riemann tensor is built
//! from differenced Christoffel symbols. Errors scale like `h²`.

use nalgebra::DMatrix;

use super::{BasePoint, Christoffel, GrwSpacetime, TangentVector, WarpingFunction};
use crate::error::{Error, Result};

fn shifted(t: f64, x: &[f64], axis: usize, h: f64) -> (f64, Vec<f64>) {
    let mut y = x.to_vec();
    if axis == 0 {
        (t + h, y)
    } else {
        y[axis - 1] += h;
        (t, y)
    }
}

/// Christoffel symbols from central differences of the coordinate metric.
pub fn fd_christoffel(st: &GrwSpacetime, t: f64, x: &[f64], h: f64) -> Result<Christoffel> {
    let n = st.dim() + 1;
    let g = st.coordinate_metric(t, x)?;
    let ginv = g.clone().try_inverse().ok_or_else(|| Error::Singular("coordinate metric".into()))?;
    let mut dg: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for axis in 0..n {
        let (tp, xp) = shifted(t, x, axis, h);
        let (tm, xm) = shifted(t, x, axis, -h);
        let gp = st.coordinate_metric(tp, &xp)?;
        let gm = st.coordinate_metric(tm, &xm)?;
        dg.push((gp - gm) / (2.0 * h));
    }
    let mut out = Christoffel::zeros(n);
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for d in 0..n {
                    s += ginv[(c, d)] * (dg[a][(d, b)] + dg[b][(d, a)] - dg[d][(a, b)]);
                }
                out.set(c, a, b, 0.5 * s);
            }
        }
    }
    Ok(out)
}

/// Fully covariant `Riem(∂_a, ∂_b, ∂_c, ∂_d)` in the convention
/// `Riem(X,Y,Z,W) = ḡ(R(X,Y)W, Z)`, computed from differenced
/// finite-difference Christoffel symbols. Indexed `[((a n + b) n + c) n + d]`.
pub fn fd_riemann(st: &GrwSpacetime, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = st.dim() + 1;
    let gam = fd_christoffel(st, t, x, h)?;
    let mut dgam = Vec::with_capacity(n);
    for axis in 0..n {
        let (tp, xp) = shifted(t, x, axis, h);
        let (tm, xm) = shifted(t, x, axis, -h);
        let p = fd_christoffel(st, tp, &xp, h)?;
        let m = fd_christoffel(st, tm, &xm, h)?;
        dgam.push((p, m));
    }
    let d = |axis: usize, c: usize, a: usize, b: usize| {
        (dgam[axis].0.get(c, a, b) - dgam[axis].1.get(c, a, b)) / (2.0 * h)
    };
    // R^r_{s c d}: components of R(∂_c, ∂_d)∂_s.
    let mut up = vec![0.0; n * n * n * n];
    for r in 0..n {
        for s in 0..n {
            for c in 0..n {
                for dd in 0..n {
                    let mut v = d(c, r, dd, s) - d(dd, r, c, s);
                    for e in 0..n {
                        v += gam.get(r, c, e) * gam.get(e, dd, s) - gam.get(r, dd, e) * gam.get(e, c, s);
                    }
                    up[((r * n + s) * n + c) * n + dd] = v;
                }
            }
        }
    }
    let g = st.coordinate_metric(t, x)?;
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for w in 0..n {
                    // Riem(∂a, ∂b, ∂c, ∂w) = g(R(∂a,∂b)∂w, ∂c)
                    let mut v = 0.0;
                    for r in 0..n {
                        v += g[(c, r)] * up[((r * n + w) * n + a) * n + b];
                    }
                    out[((a * n + b) * n + c) * n + w] = v;
                }
            }
        }
    }
    Ok(out)
}

fn coordinate_vector(base: &BasePoint, n: usize, i: usize) -> TangentVector {
    let mut v = vec![0.0; n - 1];
    let a = if i == 0 { 1.0 } else { 0.0 };
    if i > 0 {
        v[i - 1] = 1.0;
    }
    TangentVector::new(base.clone(), a, v)
}

/// Analytic `Riem(∂_a, ∂_b, ∂_c, ∂_d)` in the same layout as [`fd_riemann`].
pub fn analytic_riemann(st: &GrwSpacetime, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = st.dim() + 1;
    let base = BasePoint::chart(t, x);
    let e: Vec<_> = (0..n).map(|i| coordinate_vector(&base, n, i)).collect();
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    out[((a * n + b) * n + c) * n + d] = st.riemann(&e[a], &e[b], &e[c], &e[d])?;
                }
            }
        }
    }
    Ok(out)
}

/// `max |Γ_fd − Γ|` at a chart point.
pub fn christoffel_oracle_error(st: &GrwSpacetime, t: f64, x: &[f64], h: f64) -> Result<f64> {
    Ok(fd_christoffel(st, t, x, h)?.max_abs_diff(&st.christoffel(t, x)?))
}

/// `max |Riem_fd − Riem|` over all coordinate index quadruples.
pub fn riemann_oracle_error(st: &GrwSpacetime, t: f64, x: &[f64], h: f64) -> Result<f64> {
    let fd = fd_riemann(st, t, x, h)?;
    let an = analytic_riemann(st, t, x)?;
    Ok(fd.iter().zip(&an).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Component max-norm of `∇̄_X T − ρ'(t) X` for `T = ρ(t)∂_t`, with `∂T`
/// from central differences and the analytic Christoffel symbols.
pub fn closed_conformal_residual(
    st: &GrwSpacetime,
    t: f64,
    x: &[f64],
    a: f64,
    v: &[f64],
    h: f64,
) -> Result<f64> {
    let n = st.dim() + 1;
    if v.len() + 1 != n {
        return Err(Error::InvalidArgument("vector dimension mismatch".into()));
    }
    let gam = st.christoffel(t, x)?;
    let w = st.warping();
    let rho = w.eval(t)?.rho;
    let drho_fd = (w.eval(t + h)?.rho - w.eval(t - h)?.rho) / (2.0 * h);
    let xs: Vec<f64> = std::iter::once(a).chain(v.iter().copied()).collect();
    let tvec: Vec<f64> = (0..n).map(|i| if i == 0 { rho } else { 0.0 }).collect();
    let d1 = w.eval(t)?.d1;
    let mut worst: f64 = 0.0;
    for c in 0..n {
        // Only ∂_t T^t is nonzero among the partial derivatives.
        let mut comp = if c == 0 { xs[0] * drho_fd } else { 0.0 };
        for al in 0..n {
            for be in 0..n {
                comp += gam.get(c, al, be) * xs[al] * tvec[be];
            }
        }
        worst = worst.max((comp - d1 * xs[c]).abs());
    }
    Ok(worst)
}

/// Errors of `ρ'` and `ρ''` against central differences with step `h`.
pub fn warping_derivative_error(w: &WarpingFunction, t: f64, h: f64) -> Result<(f64, f64)> {
    let p = w.eval(t + h)?;
    let c = w.eval(t)?;
    let m = w.eval(t - h)?;
    let d1 = (p.rho - m.rho) / (2.0 * h);
    let d2 = (p.rho - 2.0 * c.rho + m.rho) / (h * h);
    Ok(((d1 - c.d1).abs(), (d2 - c.d2).abs()))
}

/// Observed order `log₂(e(h)/e(h/2))`.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}
