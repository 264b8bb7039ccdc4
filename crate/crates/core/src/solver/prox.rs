use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

/// Singular value thresholding: the proximal operator of `tau * |.|_*`.
///
/// Returns `U diag(max(sigma - tau, 0)) V^T` for `H = U diag(sigma) V^T`.
pub fn prox_nuclear(h: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidConfig(format!("threshold must be nonnegative, got {tau}")));
    }
    let svd = h
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITERS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut scaled_u = u.clone();
    for (mut col, &s) in scaled_u.column_iter_mut().zip(svd.singular_values.iter()) {
        col *= (s - tau).max(0.0);
    }
    Ok(scaled_u * v_t)
}

/// Soft thresholding: the proximal operator of `tau * |.|_1`, elementwise
/// `sign(h) * max(|h| - tau, 0)`.
pub fn prox_l1(h: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    h.map(|v| soft_threshold(v, tau))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, tau: f64) -> f64 {
    let shrunk = (v.abs() - tau).max(0.0);
    if shrunk == 0.0 {
        0.0
    } else {
        shrunk.copysign(v)
    }
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    m.clone()
        .try_svd(false, false, SVD_EPS, SVD_MAX_ITERS)
        .map(|svd| svd.singular_values.sum())
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))
}

pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn shrinks_singular_values() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let z = prox_nuclear(&h, 2.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((z - want).amax() < 1e-12);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random(6, &mut rng);
        assert!((prox_nuclear(&h, 0.0).unwrap() - &h).amax() < 1e-10);
        assert_eq!(prox_l1(&h, 0.0), h);
    }

    #[test]
    fn soft_threshold_examples() {
        assert!((soft_threshold(-0.5, 0.2) + 0.3).abs() < 1e-15);
        assert_eq!(soft_threshold(0.1, 0.2), 0.0);
        assert_eq!(soft_threshold(-0.1, 0.2), 0.0);
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(prox_nuclear(&DMatrix::identity(2, 2), -1.0).is_err());
    }

    /// Perturbation-sampling oracle: no nearby point has a lower subproblem
    /// objective than the prox output.
    #[test]
    fn nuclear_prox_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random(6, &mut rng);
        let tau = 0.5;
        let f = |z: &DMatrix<f64>| tau * nuclear_norm(z).unwrap() + 0.5 * (z - &h).norm_squared();
        let z = prox_nuclear(&h, tau).unwrap();
        let best = f(&z);
        for _ in 0..10_000 {
            let dir = random(6, &mut rng);
            let cand = &z + dir * (1e-3 / 6.0);
            assert!(best <= f(&cand) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn l1_prox_contracts(v in proptest::collection::vec(-10.0f64..10.0, 16), tau in 0.0f64..5.0) {
            let h = DMatrix::from_vec(4, 4, v);
            let z = prox_l1(&h, tau);
            for (a, b) in z.iter().zip(h.iter()) {
                prop_assert!(a.abs() <= b.abs());
            }
        }

        #[test]
        fn nuclear_prox_never_grows_singular_values(seed in any::<u64>(), tau in 0.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random(5, &mut rng);
            let before = h.clone().svd(false, false).singular_values;
            let after = prox_nuclear(&h, tau).unwrap().svd(false, false).singular_values;
            let mut before: Vec<f64> = before.iter().copied().collect();
            let mut after: Vec<f64> = after.iter().copied().collect();
            before.sort_by(|a, b| b.total_cmp(a));
            after.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in after.iter().zip(&before) {
                prop_assert!(*a <= b + 1e-10);
            }
        }
    }
}
