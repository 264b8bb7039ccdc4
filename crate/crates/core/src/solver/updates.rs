use nalgebra::DMatrix;

use super::Regularizer;
use super::prox::{l1_norm, nuclear_norm};
use crate::error::{Error, Result};

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Solves `(mu I + G G^T) X = rhs`. The matrix is SPD for `mu > 0`, so a
/// Cholesky factorization is tried first with LU as the fallback.
fn solve_shifted_gram(g: &DMatrix<f64>, mu: f64, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !(mu > 0.0) {
        return Err(Error::InvalidConfig(format!("penalty mu must be positive, got {mu}")));
    }
    let n = g.nrows();
    let mut a = g * g.transpose();
    for i in 0..n {
        a[(i, i)] += mu;
    }
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("shifted normal equations are singular".into()))
}

/// `J = (mu I + K W W^T K^T)^{-1} (mu Z + Y1 + K W K^T)`, the minimiser of
/// the augmented Lagrangian in `J`.
pub fn update_j(
    k: &DMatrix<f64>,
    w: &DMatrix<f64>,
    z: &DMatrix<f64>,
    y1: &DMatrix<f64>,
    mu: f64,
) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    for (name, m) in [("K", k), ("W", w), ("Z", z), ("Y1", y1)] {
        check_square(name, m, n)?;
    }
    let kw = k * w;
    let rhs = z * mu + y1 + &kw * k.transpose();
    solve_shifted_gram(&kw, mu, rhs)
}

/// `W = (mu I + K^T J J^T K)^{-1} (mu Z + Y2 + K^T J K)`.
pub fn update_w(
    k: &DMatrix<f64>,
    j: &DMatrix<f64>,
    z: &DMatrix<f64>,
    y2: &DMatrix<f64>,
    mu: f64,
) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    for (name, m) in [("K", k), ("J", j), ("Z", z), ("Y2", y2)] {
        check_square(name, m, n)?;
    }
    let ktj = k.tr_mul(j);
    let rhs = z * mu + y2 + &ktj * k;
    solve_shifted_gram(&ktj, mu, rhs)
}

/// `1/2 |K - Z^T K Z|_F^2 + gamma * rho(Z)`.
pub fn objective(k: &DMatrix<f64>, z: &DMatrix<f64>, gamma: f64, regularizer: Regularizer) -> Result<f64> {
    check_square("Z", z, k.nrows())?;
    let recon = z.tr_mul(&(k * z));
    let fit = 0.5 * (k - recon).norm_squared();
    let penalty = match regularizer {
        Regularizer::LowRank => nuclear_norm(z)?,
        Regularizer::Sparse => l1_norm(z),
    };
    Ok(fit + gamma * penalty)
}
