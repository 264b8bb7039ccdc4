//! Normalized spectral clustering (Ng, Jordan and Weiss).
//!
//! The affinity `A` is normalized to `N = D^{-1/2} A D^{-1/2}`, the top `k`
//! eigenvectors of `N` are stacked as columns, each row is scaled to unit
//! length and the rows are clustered with k-means.

mod kmeans;

use nalgebra::{DMatrix, SymmetricEigen};

pub use self::kmeans::{kmeans, KMeansFit, DEFAULT_RESTARTS};
use crate::dataset::LabelVector;
use crate::error::{Error, Result};

/// Relative symmetry tolerance for affinities.
pub const AFFINITY_SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Degree substituted for isolated vertices.
pub const ZERO_DEGREE_GUARD: f64 = 1e-12;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;

/// Symmetric, nonnegative, square similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity(DMatrix<f64>);

impl Affinity {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (r, c) = values.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateAffinity("non-finite entries".into()));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(Error::DegenerateAffinity(format!("negative entry {v}")));
        }
        let tol = AFFINITY_SYMMETRY_TOLERANCE * values.amax().max(1.0);
        for j in 0..c {
            for i in 0..j {
                if (values[(i, j)] - values[(j, i)]).abs() > tol {
                    return Err(Error::DegenerateAffinity(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self(values))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `n x k` spectral coordinates, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub points: DMatrix<f64>,
    /// Eigenvalues belonging to the columns of `points`, descending.
    pub eigenvalues: Vec<f64>,
}

/// Eigenpairs of `D^{-1/2} A D^{-1/2}` in (eigenvalue desc, solver index
/// asc) order, each vector signed so its largest-magnitude entry is positive.
pub fn normalized_spectrum(a: &Affinity) -> Result<(Vec<f64>, DMatrix<f64>, Vec<bool>)> {
    let m = a.values();
    let n = a.n();
    if m.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateAffinity("all entries are zero".into()));
    }
    let degrees: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
    let isolated: Vec<bool> = degrees.iter().map(|&d| d == 0.0).collect();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| 1.0 / if d == 0.0 { ZERO_DEGREE_GUARD } else { d }.sqrt())
        .collect();

    let mut norm = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = m[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            norm[(i, j)] = v;
            norm[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::try_new(norm, EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .total_cmp(&eig.eigenvalues[x])
            .then(x.cmp(&y))
    });

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > col[best].abs() { i } else { best });
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors, isolated))
}

/// Row-normalized top-`k` eigenvectors of the normalized affinity. Rows of
/// isolated vertices are zero.
pub fn spectral_embedding(a: &Affinity, k: usize) -> Result<Embedding> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("k = {k} must lie in 1..={n}")));
    }
    let (values, vectors, isolated) = normalized_spectrum(a)?;
    let mut points = vectors.columns(0, k).into_owned();
    for (i, mut row) in points.row_iter_mut().enumerate() {
        if isolated[i] {
            row.fill(0.0);
            continue;
        }
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(Embedding { points, eigenvalues: values[..k].to_vec() })
}

pub fn spectral_clustering(a: &Affinity, k: usize, seed: u64) -> Result<LabelVector> {
    spectral_clustering_with_restarts(a, k, seed, DEFAULT_RESTARTS)
}

pub fn spectral_clustering_with_restarts(
    a: &Affinity,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<LabelVector> {
    let emb = spectral_embedding(a, k)?;
    Ok(kmeans(&emb.points, k, restarts, seed)?.labels)
}
