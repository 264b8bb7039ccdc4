//! Kernel matrices over the columns of a [`DataMatrix`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

/// Symmetry tolerance for kernels built in memory, relative to `max(1, max|K|)`.
pub const CONSTRUCTED_SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Gaussian widths `t` of the standard grid, in units of `d_max^2`.
pub const STANDARD_GAUSSIAN_WIDTHS: [f64; 7] = [0.01, 0.05, 0.1, 1.0, 10.0, 50.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-|x - y|^2 / (t d_max^2))`
    Gaussian { t: f64 },
    /// `x^T y`
    Linear,
    /// `(a + x^T y)^b`
    Polynomial { a: f64, b: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { t } if !(t > 0.0 && t.is_finite()) => Err(Error::InvalidConfig(
                format!("gaussian width must be positive, got {t}"),
            )),
            KernelSpec::Polynomial { a, .. } if !a.is_finite() => Err(Error::InvalidConfig(
                format!("polynomial offset must be finite, got {a}"),
            )),
            KernelSpec::Polynomial { b: 0, .. } => {
                Err(Error::InvalidConfig("polynomial degree must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Short identifier used in reports and file names, e.g. `gaussian-t0.01`,
/// `linear`, `poly-a1-b4`. Parses back through [`FromStr`].
impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Gaussian { t } => write!(f, "gaussian-t{t}"),
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { a, b } => write!(f, "poly-a{a}-b{b}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Accepts the display form as well as `gaussian:T`, `linear` and
    /// `poly:A:B`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unrecognised kernel spec {s:?}"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let spec = if s == "linear" {
            KernelSpec::Linear
        } else if let Some(t) = s.strip_prefix("gaussian:").or_else(|| s.strip_prefix("gaussian-t")) {
            KernelSpec::Gaussian { t: num(t)? }
        } else if let Some(rest) = s.strip_prefix("poly:") {
            let (a, b) = rest.split_once(':').ok_or_else(bad)?;
            KernelSpec::Polynomial { a: num(a)?, b: b.parse().map_err(|_| bad())? }
        } else if let Some(rest) = s.strip_prefix("poly-a") {
            let (a, b) = rest.split_once("-b").ok_or_else(bad)?;
            KernelSpec::Polynomial { a: num(a)?, b: b.parse().map_err(|_| bad())? }
        } else {
            return Err(bad());
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The twelve kernels: seven Gaussians, the linear kernel and four
/// polynomials with `a in {0, 1}`, `b in {2, 4}`.
pub fn standard_grid() -> Vec<KernelSpec> {
    let mut grid: Vec<KernelSpec> = STANDARD_GAUSSIAN_WIDTHS
        .iter()
        .map(|&t| KernelSpec::Gaussian { t })
        .collect();
    grid.push(KernelSpec::Linear);
    for a in [0.0, 1.0] {
        for b in [2, 4] {
            grid.push(KernelSpec::Polynomial { a, b });
        }
    }
    grid
}

/// Square symmetric matrix of kernel evaluations. Entries may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix(DMatrix<f64>);

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::DegenerateData("empty kernel matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("kernel has non-finite entries".into()));
    }
    Ok(())
}

impl KernelMatrix {
    /// Checks squareness, finiteness and symmetry to
    /// [`CONSTRUCTED_SYMMETRY_TOLERANCE`], then symmetrizes.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        Self::from_loaded(values, CONSTRUCTED_SYMMETRY_TOLERANCE)
    }

    /// Like [`KernelMatrix::new`] with a caller-chosen symmetry tolerance;
    /// the result is `(K + K^T) / 2`.
    pub fn from_loaded(values: DMatrix<f64>, tolerance: f64) -> Result<Self> {
        check_square_finite(&values)?;
        let scale = values.amax().max(1.0);
        let n = values.nrows();
        for j in 0..n {
            for i in 0..j {
                let deviation = (values[(i, j)] - values[(j, i)]).abs();
                if deviation > tolerance * scale {
                    return Err(Error::AsymmetryBeyondTolerance { row: i, col: j, deviation, tolerance });
                }
            }
        }
        let sym = (&values + values.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

fn gram(x: &DataMatrix) -> DMatrix<f64> {
    let v = x.values();
    v.tr_mul(v)
}

fn squared_distance(g: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    if i == j {
        0.0
    } else {
        (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0)
    }
}

fn max_distance_from_gram(g: &DMatrix<f64>) -> Result<f64> {
    let n = g.nrows();
    let mut best = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            best = best.max(squared_distance(g, i, j));
        }
    }
    if best > 0.0 {
        Ok(best.sqrt())
    } else {
        Err(Error::DegenerateData("all samples are identical".into()))
    }
}

/// Largest Euclidean distance between any two samples.
pub fn max_pairwise_distance(x: &DataMatrix) -> Result<f64> {
    max_distance_from_gram(&gram(x))
}

fn kernel_from_gram(g: &DMatrix<f64>, spec: KernelSpec, d_max: Option<f64>) -> Result<KernelMatrix> {
    spec.validate()?;
    let n = g.nrows();
    let entry: Box<dyn Fn(usize, usize) -> f64> = match spec {
        KernelSpec::Gaussian { t } => {
            let d_max = match d_max {
                Some(d) => d,
                None => max_distance_from_gram(g)?,
            };
            let denom = t * d_max * d_max;
            Box::new(move |i, j| (-squared_distance(g, i, j) / denom).exp())
        }
        KernelSpec::Linear => Box::new(|i, j| g[(i, j)]),
        KernelSpec::Polynomial { a, b } => {
            let b = i32::try_from(b).map_err(|_| Error::InvalidConfig(format!("degree {b} too large")))?;
            Box::new(move |i, j| (a + g[(i, j)]).powi(b))
        }
    };
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = entry(i, j);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!("kernel {spec} overflowed")));
    }
    Ok(KernelMatrix(k))
}

/// Evaluates `spec` on every pair of samples. The upper triangle is computed
/// and mirrored, so the result is bitwise symmetric.
pub fn build_kernel(x: &DataMatrix, spec: KernelSpec) -> Result<KernelMatrix> {
    kernel_from_gram(&gram(x), spec, None)
}

/// Divides every entry by the largest (signed) entry. Kernels with negative
/// entries keep them, so the result need not lie in `[0, 1]`.
pub fn rescale_kernel(k: &KernelMatrix) -> Result<KernelMatrix> {
    let max = k.0.max();
    if !(max > 0.0) {
        return Err(Error::DegenerateKernel(max));
    }
    Ok(KernelMatrix(k.0.map(|v| v / max)))
}

/// Builds and rescales each kernel of `specs`, evaluating them in parallel.
/// Results are in `specs` order.
pub fn build_grid(x: &DataMatrix, specs: &[KernelSpec]) -> Vec<Result<KernelMatrix>> {
    let g = gram(x);
    let d_max = max_distance_from_gram(&g).ok();
    specs
        .par_iter()
        .map(|&spec| {
            let d = match spec {
                KernelSpec::Gaussian { .. } => Some(d_max.ok_or_else(|| {
                    Error::DegenerateData("all samples are identical".into())
                })?),
                _ => None,
            };
            rescale_kernel(&kernel_from_gram(&g, spec, d)?)
        })
        .collect()
}
