//! ADMM solver for kernel-preserving similarity learning.
//!
//! Minimises `1/2 |K - Z^T K Z|_F^2 + gamma * rho(Z)` with `rho` the nuclear
//! norm (low-rank, SLKE-R) or the l1 norm (sparse, SLKE-S). The quartic
//! term is split as `J^T K W` with constraints `Z = J`, `Z = W`, and each
//! iteration runs, in this order:
//!
//! 1. `J` from its normal equations,
//! 2. `W` from its normal equations,
//! 3. `Z = prox_{gamma/(2 mu)}((J + W - (Y1 + Y2)/mu) / 2)`,
//! 4. `Y1 += mu (Z - J)`, `Y2 += mu (Z - W)`,
//! 5. `mu = min(rho * mu, mu_max)`.
//!
//! Iteration stops once `max(|Z - J|_max, |Z - W|_max) <= tol`. With
//! `rho = 1` the penalty stays fixed; on rescaled kernels of a few dozen
//! samples a fixed `mu = 1` oscillates indefinitely, hence the default
//! geometric growth.

mod prox;
mod updates;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::prox::{l1_norm, nuclear_norm, prox_l1, prox_nuclear};
pub use self::updates::{objective, update_j, update_w};
use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;

/// Learned coefficients, `n x n`.
pub type SimilarityMatrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    /// Nuclear norm.
    LowRank,
    /// Entrywise l1 norm.
    Sparse,
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularizer::LowRank => "lowrank",
            Regularizer::Sparse => "sparse",
        })
    }
}

impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowrank" | "low-rank" | "nuclear" => Ok(Regularizer::LowRank),
            "sparse" | "l1" => Ok(Regularizer::Sparse),
            _ => Err(Error::InvalidConfig(format!("unknown regularizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub regularizer: Regularizer,
    pub gamma: f64,
    /// Initial penalty.
    pub mu: f64,
    /// Penalty growth factor per iteration, `>= 1`.
    pub rho: f64,
    pub mu_max: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Clamp negative entries of `Z` to zero after every proximal step.
    pub nonneg_projection: bool,
}

impl SolverConfig {
    pub const DEFAULT_MU: f64 = 1.0;
    pub const DEFAULT_RHO: f64 = 1.05;
    pub const DEFAULT_MU_MAX: f64 = 1e8;
    pub const DEFAULT_MAX_ITERS: usize = 300;
    pub const DEFAULT_TOL: f64 = 1e-4;

    pub fn new(regularizer: Regularizer, gamma: f64) -> Self {
        Self {
            regularizer,
            gamma,
            mu: Self::DEFAULT_MU,
            rho: Self::DEFAULT_RHO,
            mu_max: Self::DEFAULT_MU_MAX,
            max_iters: Self::DEFAULT_MAX_ITERS,
            tol: Self::DEFAULT_TOL,
            seed: 0,
            nonneg_projection: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("mu", self.mu)?;
        positive("tol", self.tol)?;
        if !self.gamma.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidConfig("gamma and mu must be finite".into()));
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be a finite value >= 1, got {}", self.rho)));
        }
        if !(self.mu_max >= self.mu) {
            return Err(Error::InvalidConfig(format!(
                "mu_max {} is below the initial mu {}",
                self.mu_max, self.mu
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }

}

/// Primal residuals `(|Z - J|_max, |Z - W|_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub r_j: f64,
    pub r_w: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.r_j.max(self.r_w)
    }
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub z: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub y1: DMatrix<f64>,
    pub y2: DMatrix<f64>,
    /// Penalty for the next iteration.
    pub mu: f64,
    pub iteration: usize,
}

impl SolverState {
    /// `W` then `Z` filled column-major with uniform `[0, 1)` draws from a
    /// ChaCha8 stream seeded by `seed`; multipliers start at zero. `J` is
    /// overwritten before first use.
    pub fn initial(n: usize, seed: u64, mu: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let z = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        Self {
            z,
            j: DMatrix::zeros(n, n),
            w,
            y1: DMatrix::zeros(n, n),
            y2: DMatrix::zeros(n, n),
            mu,
            iteration: 0,
        }
    }

    /// One sweep J -> W -> Z -> multipliers -> penalty.
    pub fn step(&mut self, k: &DMatrix<f64>, cfg: &SolverConfig) -> Result<Residuals> {
        let mu = self.mu;
        let tau = cfg.gamma / (2.0 * mu);
        self.iteration += 1;
        let it = self.iteration;

        self.j = update_j(k, &self.w, &self.z, &self.y1, mu)?;
        ensure_finite(&self.j, "J", it)?;
        self.w = update_w(k, &self.j, &self.z, &self.y2, mu)?;
        ensure_finite(&self.w, "W", it)?;

        let h = (&self.j + &self.w - (&self.y1 + &self.y2) / mu) * 0.5;
        let mut z = match cfg.regularizer {
            Regularizer::LowRank => prox_nuclear(&h, tau)?,
            Regularizer::Sparse => prox_l1(&h, tau),
        };
        if cfg.nonneg_projection {
            z.apply(|v| *v = v.max(0.0));
        }
        ensure_finite(&z, "Z", it)?;
        self.z = z;

        let dj = &self.z - &self.j;
        let dw = &self.z - &self.w;
        self.y1 += &dj * mu;
        self.y2 += &dw * mu;
        ensure_finite(&self.y1, "Y1", it)?;
        ensure_finite(&self.y2, "Y2", it)?;
        self.mu = (mu * cfg.rho).min(cfg.mu_max);
        Ok(Residuals { r_j: dj.amax(), r_w: dw.amax() })
    }
}

fn ensure_finite(m: &DMatrix<f64>, what: &'static str, iteration: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what, iteration })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlkeResult {
    pub z: SimilarityMatrix,
    /// Objective at the `Z` iterate after each iteration.
    pub objective_history: Vec<f64>,
    pub residual_history: Vec<Residuals>,
    pub iterations: usize,
    pub converged: bool,
}

impl SlkeResult {
    pub fn final_residuals(&self) -> Option<Residuals> {
        self.residual_history.last().copied()
    }

    /// CSV trace with columns `iteration,objective,r_j,r_w`.
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "iteration,objective,r_j,r_w")?;
        for (i, (obj, r)) in self.objective_history.iter().zip(&self.residual_history).enumerate() {
            writeln!(out, "{},{},{},{}", i + 1, obj, r.r_j, r.r_w)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Learns a similarity matrix from `kernel` by ADMM.
pub fn slke_fit(kernel: &KernelMatrix, cfg: &SolverConfig) -> Result<SlkeResult> {
    cfg.validate()?;
    let k = kernel.values();
    let mut state = SolverState::initial(kernel.n(), cfg.seed, cfg.mu);
    let mut objective_history = Vec::new();
    let mut residual_history = Vec::new();
    let mut converged = false;

    while state.iteration < cfg.max_iters {
        let res = state.step(k, cfg)?;
        let obj = objective(k, &state.z, cfg.gamma, cfg.regularizer)?;
        if !obj.is_finite() {
            return Err(Error::NonFinite { what: "objective", iteration: state.iteration });
        }
        objective_history.push(obj);
        residual_history.push(res);
        if res.max() <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(SlkeResult {
        z: state.z,
        objective_history,
        residual_history,
        iterations: state.iteration,
        converged,
    })
}

/// `(|Z| + |Z^T|) / 2`, a symmetric nonnegative affinity.
pub fn symmetrize_affinity(z: &DMatrix<f64>) -> DMatrix<f64> {
    let a = z.abs();
    (&a + a.transpose()) * 0.5
}
