//! Pointwise algebra of symmetric endomorphisms.
//!
//! A [`SymEndo`] is a shape-operator sample expressed in an orthonormal
//! frame. From it we derive the elementary symmetric invariants `S_k`, the
//! normalized mean curvatures `H_k = (-1)^k S_k / C(m,k)`, the Newton
//! tensors `P_k` and the scalar potentials that enter the `k`-stability
//! operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};

/// Default tolerance for "`H_{k+1} = 0`" preconditions.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// `c_k = (m - k) C(m, k)`.
pub fn newton_constant(m: usize, k: usize) -> f64 {
    (m as f64 - k as f64) * binomial(m, k)
}

/// A symmetric endomorphism of an `m`-dimensional inner product space,
/// stored in an orthonormal frame together with its spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEndo {
    entries: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SymEndo {
    /// Builds from a square matrix. Entries must agree with their transpose
    /// to `1e-12` relative; the stored matrix is the exact symmetrization.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let m = matrix.nrows();
        if m != matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "endomorphism must be square, got {}x{}",
                m,
                matrix.ncols()
            )));
        }
        if m < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {m}")));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry".into()));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (max |A - A^T| = {asym:e})"
            )));
        }
        let entries = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self::from_symmetric(entries))
    }

    fn from_symmetric(entries: DMatrix<f64>) -> Self {
        let m = entries.nrows();
        let eig = SymmetricEigen::new(entries.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(m, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(m, m);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { entries, eigenvalues, eigenvectors }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `Q diag(kappa) Q^T` for an orthogonal `Q`.
    pub fn from_spectrum(kappa: &[f64], q: &DMatrix<f64>) -> Result<Self> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(kappa));
        let a = q * d * q.transpose();
        Self::new((&a + a.transpose()) * 0.5)
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(m, m))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Principal curvatures, ascending.
    pub fn principal_curvatures(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching
    /// [`principal_curvatures`](Self::principal_curvatures).
    pub fn principal_directions(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// `trace(A^2)`, the squared norm of the endomorphism.
    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }

    /// Number of principal curvatures with `|kappa| > tol * max(1, |A|)`.
    pub fn rank(&self, tol: f64) -> usize {
        let scale = self.eigenvalues.amax().max(1.0);
        self.eigenvalues.iter().filter(|k| k.abs() > tol * scale).count()
    }

    /// The endomorphism `-A` (orientation flip).
    pub fn negated(&self) -> Self {
        Self::from_symmetric(-&self.entries)
    }
}

/// Elementary symmetric invariants and normalized mean curvatures.
/// Index 0 holds `S_0 = H_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariants {
    s: Vec<f64>,
    h: Vec<f64>,
}

impl Invariants {
    pub fn dim(&self) -> usize {
        self.s.len() - 1
    }

    /// `S_k` for `0 <= k <= m`; zero beyond `m`.
    pub fn s(&self, k: usize) -> f64 {
        self.s.get(k).copied().unwrap_or(0.0)
    }

    /// `H_k` for `0 <= k <= m`; zero beyond `m`.
    pub fn h(&self, k: usize) -> f64 {
        self.h.get(k).copied().unwrap_or(0.0)
    }

    /// `[S_1, ..., S_m]`.
    pub fn s_list(&self) -> &[f64] {
        &self.s[1..]
    }

    /// `[H_1, ..., H_m]`.
    pub fn h_list(&self) -> &[f64] {
        &self.h[1..]
    }
}

/// Elementary symmetric functions of `values`, by expanding
/// `prod_j (1 + kappa_j x)` one factor at a time.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (j, &kappa) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            e[k] += kappa * e[k - 1];
        }
    }
    e
}

pub fn invariants(a: &SymEndo) -> Invariants {
    let m = a.dim();
    let s = elementary_symmetric(a.principal_curvatures().as_slice());
    let h = (0..=m)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * s[k] / binomial(m, k)
        })
        .collect();
    Invariants { s, h }
}

/// Newton tensors `P_0, ..., P_m` with `P_0 = I`,
/// `P_k = C(m,k) H_k I + A P_{k-1}`.
pub fn newton_tensors(a: &SymEndo) -> Vec<DMatrix<f64>> {
    let m = a.dim();
    let inv = invariants(a);
    newton_tensors_with(a, &inv, m)
}

/// Newton tensors up to (and including) `P_max_k`.
pub fn newton_tensors_with(a: &SymEndo, inv: &Invariants, max_k: usize) -> Vec<DMatrix<f64>> {
    let m = a.dim();
    let id = DMatrix::<f64>::identity(m, m);
    let mut out = Vec::with_capacity(max_k + 1);
    out.push(id.clone());
    for k in 1..=max_k.min(m) {
        let prev = &out[k - 1];
        let p = &id * (binomial(m, k) * inv.h(k)) + a.matrix() * prev;
        out.push((&p + p.transpose()) * 0.5);
    }
    out
}

/// The `k`-th Newton tensor.
pub fn newton_tensor(a: &SymEndo, k: usize) -> DMatrix<f64> {
    let inv = invariants(a);
    newton_tensors_with(a, &inv, k).pop().expect("P_0 always present")
}

fn check_k_potential(m: usize, k: usize) -> Result<()> {
    if m < 2 || k > m - 2 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 0..={} for dimension {m}",
            m.saturating_sub(2)
        )));
    }
    Ok(())
}

/// `kappa_bar * trace(P_k) - trace(A^2 P_k)` evaluated by direct traces.
pub fn kstab_potential(a: &SymEndo, kappa_bar: f64, k: usize) -> Result<f64> {
    check_k_potential(a.dim(), k)?;
    let p = newton_tensor(a, k);
    let a2 = a.matrix() * a.matrix();
    Ok(kappa_bar * p.trace() - (a2 * p).trace())
}

/// The same potential expressed through mean curvatures:
/// `C(m,k)(m-k) kappa_bar H_k + C(m,k+1)((m-k-1) H_{k+2} - m H_1 H_{k+1})`.
pub fn kstab_potential_from_curvatures(inv: &Invariants, kappa_bar: f64, k: usize) -> Result<f64> {
    let m = inv.dim();
    check_k_potential(m, k)?;
    let mk = m as f64;
    let kk = k as f64;
    Ok(binomial(m, k) * (mk - kk) * kappa_bar * inv.h(k)
        + binomial(m, k + 1) * ((mk - kk - 1.0) * inv.h(k + 2) - mk * inv.h(1) * inv.h(k + 1)))
}

/// Ellipticity of `L_k = div(P_k ∇·)` on the locus `H_{k+1} = 0`:
/// `H_k > 0` and `rank(A) > k`.
pub fn ellipticity(a: &SymEndo, k: usize) -> Result<bool> {
    ellipticity_with_tol(a, k, DEFAULT_ZERO_TOL)
}

pub fn ellipticity_with_tol(a: &SymEndo, k: usize, zero_tol: f64) -> Result<bool> {
    let m = a.dim();
    if k < 1 || m < 3 || k > m - 2 {
        return Err(Error::InvalidArgument(format!(
            "ellipticity criterion needs 1 <= k <= m - 2 (k = {k}, m = {m})"
        )));
    }
    let inv = invariants(a);
    let hk1 = inv.h(k + 1);
    if hk1.abs() > zero_tol {
        return Err(Error::Precondition(format!("H_{} = {hk1:e} is not zero", k + 1)));
    }
    Ok(inv.h(k) > 0.0 && a.rank(1e-10) > k)
}

/// `F_0, ..., F_{m-1}` of the `k`-volume integrand from `S = [S_1, ..., S_m]`.
pub fn kvol_integrand(s: &[f64], kappa_bar: f64, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {m}")));
    }
    if s.len() != m {
        return Err(Error::InvalidArgument(format!(
            "expected {m} invariants, got {}",
            s.len()
        )));
    }
    let mut f = Vec::with_capacity(m);
    f.push(1.0);
    f.push(-s[0]);
    for k in 2..m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let coef = kappa_bar * (m - k + 1) as f64 / (k - 1) as f64;
        let fk = sign * s[k - 1] - coef * f[k - 2];
        f.push(fk);
    }
    Ok(f)
}

/// Random orthogonal matrix from the QR factorization of a Gaussian draw.
pub fn random_orthogonal<R: Rng>(rng: &mut R, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            for i in 0..m {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller on (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draws a random symmetric endomorphism with `S_{k+1} = 0`.
///
/// `m - 1` principal curvatures are drawn uniformly from `[-range, range]`
/// (each set to zero with probability `zero_prob`, to exercise rank
/// deficiency) and the last one is solved from the linear occurrence of
/// that curvature in `S_{k+1}`. Draws with a vanishing coefficient are
/// rejected.
pub fn constrained_sample<R: Rng>(
    rng: &mut R,
    m: usize,
    k: usize,
    range: f64,
    zero_prob: f64,
) -> Result<SymEndo> {
    if m < 2 || k + 1 > m {
        return Err(Error::InvalidArgument(format!("need k + 1 <= m (k = {k}, m = {m})")));
    }
    for _ in 0..10_000 {
        let rest: Vec<f64> = (0..m - 1)
            .map(|_| {
                if rng.gen::<f64>() < zero_prob {
                    0.0
                } else {
                    rng.gen_range(-range..range)
                }
            })
            .collect();
        let e = elementary_symmetric(&rest);
        let coef = e[k];
        if coef.abs() < 1e-3 {
            continue;
        }
        let last = -e.get(k + 1).copied().unwrap_or(0.0) / coef;
        if !last.is_finite() || last.abs() > 10.0 * range.max(1.0) {
            continue;
        }
        let mut kappa = rest;
        kappa.push(last);
        let q = random_orthogonal(rng, m);
        return SymEndo::from_spectrum(&kappa, &q);
    }
    Err(Error::NoConvergence { iterations: 10_000, residual: f64::NAN })
}

/// Random symmetric endomorphism with entries uniform in `[-range, range]`.
pub fn random_symendo<R: Rng>(rng: &mut R, m: usize, range: f64) -> SymEndo {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let x = rng.gen_range(-range..range);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    SymEndo::from_symmetric(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_endomorphism_has_vanishing_invariants() {
        let a = SymEndo::zero(3).unwrap();
        let inv = invariants(&a);
        for k in 1..=3 {
            assert_eq!(inv.s(k), 0.0);
            assert_eq!(inv.h(k), 0.0);
        }
        let p = newton_tensors(&a);
        assert_eq!(p[0], DMatrix::identity(3, 3));
        for pk in &p[1..] {
            assert_eq!(pk.amax(), 0.0);
        }
    }

    #[test]
    fn minus_identity_hand_expansion() {
        let a = SymEndo::from_diagonal(&[-1.0, -1.0, -1.0]).unwrap();
        let inv = invariants(&a);
        assert_abs_diff_eq!(inv.s(1), -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.s(2), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.s(3), -1.0, epsilon = 1e-14);
        for k in 1..=3 {
            assert_abs_diff_eq!(inv.h(k), 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(inv.h(1), -a.trace() / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn two_dimensional_newton_tensor() {
        let a = SymEndo::from_diagonal(&[1.0, -1.0]).unwrap();
        let inv = invariants(&a);
        assert_abs_diff_eq!(inv.h(1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inv.h(2), -1.0, epsilon = 1e-15);
        let p1 = newton_tensor(&a, 1);
        assert_abs_diff_eq!((&p1 - a.matrix()).amax(), 0.0, epsilon = 1e-15);
        let c1 = newton_constant(2, 1);
        assert_abs_diff_eq!(p1.trace(), c1 * inv.h(1), epsilon = 1e-15);
        assert_abs_diff_eq!((&p1 * a.matrix()).trace(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!((&p1 * a.matrix()).trace(), -c1 * inv.h(2), epsilon = 1e-15);
    }

    #[test]
    fn kstab_potential_hand_value() {
        let a = SymEndo::from_diagonal(&[-1.0, -1.0, 0.5]).unwrap();
        let direct = kstab_potential(&a, 1.0, 1).unwrap();
        let formula = kstab_potential_from_curvatures(&invariants(&a), 1.0, 1).unwrap();
        assert_abs_diff_eq!(direct, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(formula, 1.5, epsilon = 1e-14);
        let p1 = newton_tensor(&a, 1);
        assert_abs_diff_eq!(p1[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p1[(2, 2)], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn kstab_potential_vanishes_for_zero_operator() {
        let a = SymEndo::zero(4).unwrap();
        for k in 1..=2 {
            assert_eq!(kstab_potential(&a, 3.7, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn kstab_potential_rejects_bad_k() {
        let a = SymEndo::zero(3).unwrap();
        assert!(kstab_potential(&a, 1.0, 2).is_err());
        assert!(kstab_potential_from_curvatures(&invariants(&a), 1.0, 2).is_err());
    }

    #[test]
    fn ellipticity_hand_cases() {
        let a = SymEndo::from_diagonal(&[-1.0, -1.0, 0.5]).unwrap();
        assert!(ellipticity(&a, 1).unwrap());
        let b = SymEndo::from_diagonal(&[1.0, 1.0, -0.5]).unwrap();
        assert!(!ellipticity(&b, 1).unwrap());
        let p = newton_tensor(&b, 1);
        let eig = SymmetricEigen::new(p).eigenvalues;
        assert!(eig.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn ellipticity_rejects_nonzero_next_curvature() {
        let a = SymEndo::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(ellipticity(&a, 1), Err(Error::Precondition(_))));
        assert!(matches!(ellipticity(&a, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn kvol_recursion() {
        let f = kvol_integrand(&[3.0, 5.0, 0.0, 0.0], -1.0, 4).unwrap();
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], -3.0);
        assert_abs_diff_eq!(f[2], 8.0, epsilon = 1e-14);
        assert_eq!(f.len(), 4);
        assert!(kvol_integrand(&[1.0], 0.0, 1).is_err());
        assert!(kvol_integrand(&[1.0, 2.0], 0.0, 3).is_err());
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(SymEndo::new(m).is_err());
        assert!(SymEndo::new(DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn eigenvalues_sorted_and_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 2..=6 {
            let a = random_symendo(&mut rng, m, 2.0);
            let k = a.principal_curvatures();
            assert!(k.as_slice().windows(2).all(|w| w[0] <= w[1]));
            let q = a.principal_directions();
            let rec = q * DMatrix::from_diagonal(k) * q.transpose();
            let scale = a.matrix().amax().max(1.0);
            assert!((rec - a.matrix()).amax() <= 1e-12 * scale);
        }
    }

    #[test]
    fn constrained_sample_satisfies_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 3..=6 {
            for k in 1..=m - 2 {
                let a = constrained_sample(&mut rng, m, k, 2.0, 0.1).unwrap();
                assert!(invariants(&a).h(k + 1).abs() < 1e-10, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(6, 0), 1.0);
        assert_eq!(binomial(6, 6), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(newton_constant(3, 1), 6.0);
    }
}
