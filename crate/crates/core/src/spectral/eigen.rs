//! Shift-invert Lanczos for the lowest eigenvalues of a sparse symmetric
//! matrix, followed by shifted inverse iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{rcm_ordering, CsrMatrix, EnvelopeCholesky};

const RESTART_SEED: u64 = 0x5eed_1a2c;
const MAX_LANCZOS: usize = 300;
const RITZ_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
    }
}

/// Factors `B − σI` for a shift below the spectrum, lowering `σ` until the
/// Cholesky factorization succeeds.
pub(crate) fn factor_below(b: &CsrMatrix, perm: &[usize]) -> Result<(f64, EnvelopeCholesky)> {
    let g = b.gershgorin_lower();
    let mut gap = 1e-3 * g.abs().max(1.0);
    for _ in 0..40 {
        let sigma = g - gap;
        match EnvelopeCholesky::factor(b, sigma, perm) {
            Ok(f) => return Ok((sigma, f)),
            Err(Error::NotPositiveDefinite { .. }) => gap *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoConvergence { iterations: 40, residual: gap })
}

#[derive(Debug, Clone)]
pub(crate) struct RitzPairs {
    /// Ascending eigenvalue estimates of `B`.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub steps: usize,
}

/// Lanczos on `(B − σI)⁻¹` with full reorthogonalization, started from
/// `start`. Returns the `want` lowest Ritz pairs of `B`.
pub(crate) fn lanczos_lowest(
    chol: &EnvelopeCholesky,
    sigma: f64,
    start: &[f64],
    want: usize,
) -> Result<RitzPairs> {
    let n = chol.dim();
    let max_steps = n.min(MAX_LANCZOS.max(4 * want + 20));
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alpha = Vec::with_capacity(max_steps);
    let mut beta: Vec<f64> = Vec::with_capacity(max_steps);
    let mut q = start.to_vec();
    let s = norm(&q);
    if !(s > 0.0) {
        return Err(Error::InvalidArgument("zero Lanczos start vector".into()));
    }
    q.iter_mut().for_each(|x| *x /= s);
    let mut last: Option<(DMatrix<f64>, Vec<f64>)> = None;
    loop {
        let mut w = chol.solve(&q);
        let a = dot(&w, &q);
        basis.push(q.clone());
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        let j = basis.len();
        let check = j == max_steps || j % 5 == 0 || b <= 1e-13 * a.abs().max(1e-300);
        if check {
            let mut t = DMatrix::zeros(j, j);
            for i in 0..j {
                t[(i, i)] = alpha[i];
                if i + 1 < j {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut idx: Vec<usize> = (0..j).collect();
            idx.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
            let k = want.min(j);
            let converged = idx[..k].iter().all(|&i| {
                let theta = eig.eigenvalues[i];
                (b * eig.eigenvectors[(j - 1, i)]).abs() <= RITZ_TOL * theta.abs()
            });
            let thetas: Vec<f64> = idx[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut s_cols = DMatrix::zeros(j, k);
            for (c, &i) in idx[..k].iter().enumerate() {
                s_cols.set_column(c, &eig.eigenvectors.column(i));
            }
            last = Some((s_cols, thetas));
            if (converged && j >= want) || j == max_steps {
                break;
            }
        }
        if b <= 1e-13 * a.abs().max(1e-300) {
            if j == n {
                break;
            }
            // Invariant subspace found: continue with a fresh direction.
            let mut r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            orthogonalize(&mut r, &basis);
            let rn = norm(&r);
            if !(rn > 1e-10) {
                break;
            }
            r.iter_mut().for_each(|x| *x /= rn);
            beta.push(0.0);
            q = r;
        } else {
            beta.push(b);
            q = w.iter().map(|x| x / b).collect();
        }
    }
    let (s_cols, thetas) = match last {
        Some(l) => l,
        None => return Err(Error::NoConvergence { iterations: basis.len(), residual: f64::NAN }),
    };
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for c in 0..thetas.len() {
        let theta = thetas[c];
        let mut v = vec![0.0; n];
        for (i, qi) in basis.iter().enumerate().take(s_cols.nrows()) {
            let coef = s_cols[(i, c)];
            for (vk, qk) in v.iter_mut().zip(qi) {
                *vk += coef * qk;
            }
        }
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        values.push(sigma + 1.0 / theta);
        vectors.push(v);
    }
    Ok(RitzPairs { values, vectors, steps: basis.len() })
}

#[derive(Debug, Clone)]
pub(crate) struct LowestPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub shift: f64,
    pub steps: usize,
}

/// Lowest eigenpair of symmetric `b`, polished by shifted inverse
/// iteration; the eigenvalue is the Rayleigh quotient of the final vector.
pub(crate) fn lowest_pair(b: &CsrMatrix, start: &[f64]) -> Result<LowestPair> {
    let perm = rcm_ordering(b);
    let (sigma0, chol0) = factor_below(b, &perm)?;
    let ritz = lanczos_lowest(&chol0, sigma0, start, 1)?;
    let est = ritz.values[0];
    let mut x = ritz.vectors[0].clone();
    let delta = 1e-5 * est.abs().max(1.0);
    let (shift, chol) = if est - sigma0 > 4.0 * delta {
        match EnvelopeCholesky::factor(b, est - delta, &perm) {
            Ok(f) => (est - delta, f),
            Err(Error::NotPositiveDefinite { .. }) => (sigma0, chol0),
            Err(e) => return Err(e),
        }
    } else {
        (sigma0, chol0)
    };
    let scale = est.abs().max(1.0);
    let b_norm = (0..b.dim()).map(|i| b.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let stop = (1e-11 * scale).max(100.0 * f64::EPSILON * b_norm);
    let fail = (1e-8 * scale).max(1e4 * f64::EPSILON * b_norm);
    let mut lambda = dot(&b.mul_vec(&x), &x);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let bx = b.mul_vec(&x);
        lambda = dot(&bx, &x);
        residual = norm(&bx.iter().zip(&x).map(|(p, q)| p - lambda * q).collect::<Vec<_>>());
        if residual <= stop {
            break;
        }
        let mut y = chol.solve(&x);
        let yn = norm(&y);
        y.iter_mut().for_each(|v| *v /= yn);
        x = y;
    }
    if !(residual <= fail) {
        return Err(Error::NoConvergence { iterations: 200, residual });
    }
    Ok(LowestPair { value: lambda, vector: x, residual, shift, steps: ritz.steps })
}

/// Lowest `count` eigenvalues of symmetric `b` (Ritz values).
pub(crate) fn lowest_values(b: &CsrMatrix, start: &[f64], count: usize) -> Result<Vec<f64>> {
    let perm = rcm_ordering(b);
    let (sigma, chol) = factor_below(b, &perm)?;
    Ok(lanczos_lowest(&chol, sigma, start, count)?.values)
}
