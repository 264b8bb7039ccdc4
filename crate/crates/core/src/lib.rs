//! Similarity learning by kernel-preserving embedding.
//!
//! Given a kernel matrix `K`, learns a nonnegative coefficient matrix `Z`
//! whose reconstruction `Z^T K Z` stays close to `K`, regularized toward a
//! low-rank or sparse solution. The learned `Z` serves as a similarity for
//! spectral clustering.
//!
//! ```no_run
//! use slke::{kernels, solver, spectral, metrics, dataset};
//!
//! let (x, truth) = dataset::three_blobs(0);
//! let k = kernels::rescale_kernel(&kernels::build_kernel(&x, kernels::KernelSpec::Gaussian { t: 1.0 })?)?;
//! let cfg = solver::SolverConfig::new(solver::Regularizer::LowRank, 1e-3);
//! let fit = solver::slke_fit(&k, &cfg)?;
//! let affinity = spectral::Affinity::new(solver::symmetrize_affinity(&fit.z))?;
//! let pred = spectral::spectral_clustering(&affinity, truth.n_classes(), 0)?;
//! println!("acc = {}", metrics::accuracy(&truth, &pred)?);
//! # Ok::<(), slke::Error>(())
//! ```

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod metrics;
pub mod report;
pub mod solver;
pub mod spectral;

pub use dataset::{DataMatrix, LabelVector};
pub use error::{Error, Result};
pub use experiment::{run_grid, run_grid_on, ExperimentManifest, KernelGrid, Method, ResultTable};
pub use kernels::{KernelMatrix, KernelSpec};
pub use report::ReportFormat;
pub use solver::{slke_fit, Regularizer, SimilarityMatrix, SlkeResult, SolverConfig};
pub use spectral::{Affinity, Embedding};
