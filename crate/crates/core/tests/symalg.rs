use grw_core::symalg::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Newton tensors from the explicit recursion on a raw matrix, with `H_k`
/// taken from the characteristic polynomial of the eigenvalues.
fn oracle_newton(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let m = a.nrows();
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let mut s = vec![1.0];
    for j in 1..=m {
        let mut acc = 0.0;
        for subset in 0u32..(1 << m) {
            if subset.count_ones() as usize == j {
                acc += (0..m).filter(|i| subset & (1 << i) != 0).map(|i| eig[i]).product::<f64>();
            }
        }
        s.push(acc);
    }
    let h = |j: usize| if j % 2 == 0 { s[j] } else { -s[j] } / binomial(m, j);
    let mut p = DMatrix::identity(m, m);
    for j in 1..=k {
        p = DMatrix::identity(m, m) * (binomial(m, j) * h(j)) + a * p;
    }
    p
}

#[test]
fn newton_identities_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.gen_range(2..=6);
        let a = random_symendo(&mut rng, m, 2.0);
        let inv = invariants(&a);
        let p = newton_tensors(&a);
        for k in 0..m {
            let ck = newton_constant(m, k);
            worst = worst.max((p[k].trace() - ck * inv.h(k)).abs());
            worst = worst.max(((&p[k] * a.matrix()).trace() + ck * inv.h(k + 1)).abs());
        }
        worst = worst.max(p[m].amax());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn newton_tensor_matches_subset_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let m = rng.gen_range(2..=5);
        let a = random_symendo(&mut rng, m, 1.5);
        let k = rng.gen_range(0..m);
        let diff = (newton_tensor(&a, k) - oracle_newton(a.matrix(), k)).amax();
        assert!(diff < 1e-10, "{diff}");
    }
}

#[test]
fn potential_formulas_agree_on_constrained_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.gen_range(3..=6);
        let k = rng.gen_range(0..=m - 2);
        let kappa_bar = rng.gen_range(-2.0..2.0);
        let a = constrained_sample(&mut rng, m, k, 1.5, 0.1).unwrap();
        let inv = invariants(&a);
        assert!(inv.h(k + 1).abs() < 1e-10);
        let direct = kstab_potential(&a, kappa_bar, k).unwrap();
        let closed = kstab_potential_from_curvatures(&inv, kappa_bar, k).unwrap();
        worst = worst.max((direct - closed).abs());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn ellipticity_agrees_with_eigenvalue_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut positive, mut negative) = (0, 0);
    for _ in 0..1000 {
        let m = rng.gen_range(3..=6);
        let k = rng.gen_range(1..=m - 2);
        let a = constrained_sample(&mut rng, m, k, 1.5, 0.15).unwrap();
        let p = oracle_newton(a.matrix(), k);
        let min_eig = SymmetricEigen::new(p).eigenvalues.min();
        let oracle = min_eig > 1e-9;
        assert_eq!(ellipticity(&a, k).unwrap(), oracle, "min eig {min_eig}");
        if oracle {
            positive += 1;
        } else {
            negative += 1;
        }
    }
    assert!(positive > 50 && negative > 50);
}

#[test]
fn kvol_examples() {
    let f = kvol_integrand(&[3.0, 5.0, 0.0, 0.0], -1.0, 4).unwrap();
    assert_eq!(f[0], 1.0);
    assert_eq!(f[1], -3.0);
    assert_eq!(f[2], 8.0);
    assert!(kvol_integrand(&[1.0], 0.0, 1).is_err());
}

proptest! {
    #[test]
    fn orientation_covariance(seed in any::<u64>(), m in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symendo(&mut rng, m, 3.0);
        let (i, j) = (invariants(&a), invariants(&a.negated()));
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((j.h(k) - sign * i.h(k)).abs() < 1e-9 * (1.0 + i.h(k).abs()));
        }
    }

    #[test]
    fn conjugation_invariance(seed in any::<u64>(), m in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symendo(&mut rng, m, 2.0);
        let q = random_orthogonal(&mut rng, m);
        let b = SymEndo::new(&q * a.matrix() * q.transpose()).unwrap();
        let (i, j) = (invariants(&a), invariants(&b));
        for k in 1..=m {
            prop_assert!((i.s(k) - j.s(k)).abs() < 1e-9 * (1.0 + i.s(k).abs()));
        }
    }
}
