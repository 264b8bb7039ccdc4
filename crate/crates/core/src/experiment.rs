//! Kernel x gamma x method experiment grids.
//!
//! Every cell fits (or, for the raw-kernel baseline, reuses) a similarity
//! matrix, symmetrizes it into an affinity, runs spectral clustering with
//! the true class count and scores the result. Per kernel the best score
//! over the gamma grid is kept; per method the best and the mean of those
//! per-kernel scores are reported.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{self, DataMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelMatrix, KernelSpec};
use crate::metrics;
use crate::solver::{self, Regularizer, SolverConfig};
use crate::spectral::{self, Affinity};

/// `1e-6, 1e-5, ..., 1e-1`.
pub const DEFAULT_GAMMAS: [f64; 6] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Sparse (l1) regularized kernel-preserving similarity.
    #[serde(rename = "slke-s")]
    SlkeS,
    /// Low-rank (nuclear norm) regularized kernel-preserving similarity.
    #[serde(rename = "slke-r")]
    SlkeR,
    /// Spectral clustering directly on the kernel.
    #[serde(rename = "sc-baseline")]
    ScBaseline,
}

impl Method {
    pub fn regularizer(self) -> Option<Regularizer> {
        match self {
            Method::SlkeS => Some(Regularizer::Sparse),
            Method::SlkeR => Some(Regularizer::LowRank),
            Method::ScBaseline => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::SlkeS => "slke-s",
            Method::SlkeR => "slke-r",
            Method::ScBaseline => "sc-baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slke-s" => Ok(Method::SlkeS),
            "slke-r" => Ok(Method::SlkeR),
            "sc-baseline" | "sc" => Ok(Method::ScBaseline),
            _ => Err(Error::InvalidConfig(format!("unknown method {s:?}"))),
        }
    }
}

/// Either the standard twelve kernels or an explicit list. Serialized as the
/// string `"standard"` or a list of kernel ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum KernelGrid {
    #[default]
    Standard,
    List(Vec<KernelSpec>),
}

impl KernelGrid {
    pub fn specs(&self) -> Vec<KernelSpec> {
        match self {
            KernelGrid::Standard => kernels::standard_grid(),
            KernelGrid::List(l) => l.clone(),
        }
    }

    /// Parses `standard` or a comma-separated list of kernel ids.
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "standard" {
            return Ok(KernelGrid::Standard);
        }
        s.split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<Vec<_>>>()
            .map(KernelGrid::List)
    }
}

impl Serialize for KernelGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KernelGrid::Standard => s.serialize_str("standard"),
            KernelGrid::List(l) => s.collect_seq(l.iter().map(ToString::to_string)),
        }
    }
}

impl<'de> Deserialize<'de> for KernelGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(String),
            Many(Vec<String>),
        }
        let grid = match Raw::deserialize(d)? {
            Raw::One(s) => KernelGrid::parse(&s),
            Raw::Many(v) => v.iter().map(|p| p.parse()).collect::<Result<Vec<_>>>().map(KernelGrid::List),
        };
        grid.map_err(serde::de::Error::custom)
    }
}

fn default_true() -> bool {
    true
}

fn default_gammas() -> Vec<f64> {
    DEFAULT_GAMMAS.to_vec()
}

fn default_methods() -> Vec<Method> {
    vec![Method::SlkeS, Method::SlkeR]
}

fn default_mu() -> f64 {
    SolverConfig::DEFAULT_MU
}

fn default_rho() -> f64 {
    SolverConfig::DEFAULT_RHO
}

fn default_mu_max() -> f64 {
    SolverConfig::DEFAULT_MU_MAX
}

fn default_tol() -> f64 {
    SolverConfig::DEFAULT_TOL
}

fn default_max_iters() -> usize {
    SolverConfig::DEFAULT_MAX_ITERS
}

fn default_restarts() -> usize {
    spectral::DEFAULT_RESTARTS
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Experiment description, loadable from TOML. Every key except `dataset`
/// has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub dataset: PathBuf,
    /// Last CSV column holds class labels. Scoring requires it.
    #[serde(default = "default_true")]
    pub labels: bool,
    #[serde(default)]
    pub kernels: KernelGrid,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Initial ADMM penalty.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Penalty growth factor; 1 keeps the penalty fixed.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_mu_max")]
    pub mu_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_true")]
    pub nonneg_projection: bool,
    #[serde(default)]
    pub seed: u64,
    /// k-means restarts inside spectral clustering.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub jobs: usize,
    /// Write `Z_<cell>.csv` for every solver cell.
    #[serde(default)]
    pub dump_z: bool,
    /// Write `trace_<cell>.csv` for every solver cell.
    #[serde(default)]
    pub trace: bool,
    /// Record wall-clock seconds per cell. Off by default so reports are
    /// byte-reproducible.
    #[serde(default)]
    pub timings: bool,
}

impl ExperimentManifest {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            labels: true,
            kernels: KernelGrid::Standard,
            gammas: default_gammas(),
            methods: default_methods(),
            mu: default_mu(),
            rho: default_rho(),
            mu_max: default_mu_max(),
            tol: default_tol(),
            max_iters: default_max_iters(),
            nonneg_projection: true,
            seed: 0,
            restarts: default_restarts(),
            output_dir: default_output_dir(),
            jobs: 0,
            dump_z: false,
            trace: false,
            timings: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::InvalidConfig("gamma grid is empty".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidConfig(format!("gamma values must be positive, got {g}")));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if let KernelGrid::List(l) = &self.kernels {
            if l.is_empty() {
                return Err(Error::InvalidConfig("kernel list is empty".into()));
            }
            l.iter().try_for_each(KernelSpec::validate)?;
        }
        if !self.labels {
            return Err(Error::InvalidConfig(
                "scoring needs ground-truth labels in the dataset's last column".into(),
            ));
        }
        self.solver_config(Regularizer::Sparse, self.gammas[0]).validate()
    }

    pub fn solver_config(&self, regularizer: Regularizer, gamma: f64) -> SolverConfig {
        SolverConfig {
            regularizer,
            gamma,
            mu: self.mu,
            rho: self.rho,
            mu_max: self.mu_max,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            nonneg_projection: self.nonneg_projection,
        }
    }
}

/// One (method, kernel, gamma) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub method: Method,
    pub kernel_id: String,
    pub gamma: f64,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    /// Solver iterations; absent for the baseline.
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub seconds: Option<f64>,
    /// Set when the cell failed; scores are then absent.
    pub error: Option<String>,
}

impl CellRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// File-name stem for per-cell artifacts.
    pub fn cell_name(&self) -> String {
        cell_name(self.method, &self.kernel_id, self.gamma)
    }
}

fn cell_name(method: Method, kernel_id: &str, gamma: f64) -> String {
    format!("{method}_{kernel_id}_g{gamma:e}")
}

/// Best scores of one method on one kernel across the gamma grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub method: Method,
    pub kernel_id: String,
    pub best_acc: Option<f64>,
    pub best_acc_gamma: Option<f64>,
    pub best_nmi: Option<f64>,
    pub best_nmi_gamma: Option<f64>,
    pub failed_cells: usize,
}

impl KernelSummary {
    /// Every gamma failed for this kernel.
    pub fn failed(&self) -> bool {
        self.best_acc.is_none()
    }
}

/// Best and mean over kernels of the per-kernel best scores. Kernels whose
/// cells all failed are excluded from both and counted in `failed_kernels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub best_acc: Option<f64>,
    pub mean_acc: Option<f64>,
    pub best_nmi: Option<f64>,
    pub mean_nmi: Option<f64>,
    pub scored_kernels: usize,
    pub failed_kernels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub records: Vec<CellRecord>,
    pub kernels: Vec<KernelSummary>,
    pub methods: Vec<MethodSummary>,
}

fn max_with_arg(values: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    values.fold(None, |best, (v, arg)| match best {
        Some((b, _)) if b >= v => best,
        _ => Some((v, arg)),
    })
}

impl ResultTable {
    /// Sorts `records` by (method, kernel order of first appearance, gamma)
    /// and derives the summaries.
    pub fn from_records(mut records: Vec<CellRecord>) -> Self {
        let mut kernel_order: Vec<String> = Vec::new();
        for r in &records {
            if !kernel_order.contains(&r.kernel_id) {
                kernel_order.push(r.kernel_id.clone());
            }
        }
        let kernel_rank = |id: &str| kernel_order.iter().position(|k| k == id).unwrap_or(usize::MAX);
        records.sort_by(|a, b| {
            a.method
                .cmp(&b.method)
                .then(kernel_rank(&a.kernel_id).cmp(&kernel_rank(&b.kernel_id)))
                .then(a.gamma.total_cmp(&b.gamma))
        });

        let mut methods_present: Vec<Method> = records.iter().map(|r| r.method).collect();
        methods_present.dedup();

        let mut kernels = Vec::new();
        let mut methods = Vec::new();
        for &method in &methods_present {
            let mut per_kernel = Vec::new();
            for kid in &kernel_order {
                let cells: Vec<&CellRecord> = records
                    .iter()
                    .filter(|r| r.method == method && &r.kernel_id == kid)
                    .collect();
                if cells.is_empty() {
                    continue;
                }
                let acc = max_with_arg(cells.iter().filter_map(|r| r.acc.map(|v| (v, r.gamma))));
                let nmi = max_with_arg(cells.iter().filter_map(|r| r.nmi.map(|v| (v, r.gamma))));
                per_kernel.push(KernelSummary {
                    method,
                    kernel_id: kid.clone(),
                    best_acc: acc.map(|a| a.0),
                    best_acc_gamma: acc.map(|a| a.1),
                    best_nmi: nmi.map(|a| a.0),
                    best_nmi_gamma: nmi.map(|a| a.1),
                    failed_cells: cells.iter().filter(|r| r.failed()).count(),
                });
            }
            let accs: Vec<f64> = per_kernel.iter().filter_map(|k| k.best_acc).collect();
            let nmis: Vec<f64> = per_kernel.iter().filter_map(|k| k.best_nmi).collect();
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let best = |v: &[f64]| v.iter().copied().reduce(f64::max);
            methods.push(MethodSummary {
                method,
                best_acc: best(&accs),
                mean_acc: mean(&accs),
                best_nmi: best(&nmis),
                mean_nmi: mean(&nmis),
                scored_kernels: accs.len(),
                failed_kernels: per_kernel.len() - accs.len(),
            });
            kernels.extend(per_kernel);
        }
        Self { records, kernels, methods }
    }

    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Per-cell output besides the record.
struct CellArtifacts {
    z: Option<nalgebra::DMatrix<f64>>,
    trace: Option<Vec<u8>>,
}

struct Cell<'a> {
    method: Method,
    kernel_id: String,
    kernel: std::result::Result<&'a KernelMatrix, &'a Error>,
    gamma: f64,
}

fn evaluate(
    method: Method,
    kernel: &KernelMatrix,
    gamma: f64,
    manifest: &ExperimentManifest,
    truth: &LabelVector,
    keep: bool,
) -> Result<(CellRecord, CellArtifacts)> {
    let (similarity, fit) = match method.regularizer() {
        None => (kernel.values().clone(), None),
        Some(reg) => {
            let fit = solver::slke_fit(kernel, &manifest.solver_config(reg, gamma))?;
            (fit.z.clone(), Some(fit))
        }
    };
    let affinity = Affinity::new(solver::symmetrize_affinity(&similarity))?;
    let pred = spectral::spectral_clustering_with_restarts(
        &affinity,
        truth.n_classes(),
        manifest.seed,
        manifest.restarts,
    )?;
    let record = CellRecord {
        method,
        kernel_id: String::new(),
        gamma,
        acc: Some(metrics::accuracy(truth, &pred)?),
        nmi: Some(metrics::nmi(truth, &pred)?),
        iterations: fit.as_ref().map(|f| f.iterations),
        converged: fit.as_ref().map(|f| f.converged),
        seconds: None,
        error: None,
    };
    let artifacts = match fit {
        Some(f) if keep => {
            let trace = if manifest.trace {
                let mut buf = Vec::new();
                f.write_trace(&mut buf)?;
                Some(buf)
            } else {
                None
            };
            CellArtifacts { z: manifest.dump_z.then_some(f.z), trace }
        }
        _ => CellArtifacts { z: None, trace: None },
    };
    Ok((record, artifacts))
}

fn run_cell(cell: &Cell<'_>, manifest: &ExperimentManifest, truth: &LabelVector) -> Result<CellRecord> {
    let start = Instant::now();
    let keep = manifest.dump_z || manifest.trace;
    let outcome = cell
        .kernel
        .map_err(|e| Error::DegenerateData(format!("kernel unavailable: {e}")))
        .and_then(|k| evaluate(cell.method, k, cell.gamma, manifest, truth, keep));
    let elapsed = start.elapsed().as_secs_f64();
    let mut record = match outcome {
        Ok((record, artifacts)) => {
            let stem = cell_name(cell.method, &cell.kernel_id, cell.gamma);
            if let Some(z) = artifacts.z {
                fs::create_dir_all(&manifest.output_dir)?;
                dataset::save_matrix(&manifest.output_dir.join(format!("Z_{stem}.csv")), &z)?;
            }
            if let Some(trace) = artifacts.trace {
                fs::create_dir_all(&manifest.output_dir)?;
                fs::write(manifest.output_dir.join(format!("trace_{stem}.csv")), trace)?;
            }
            record
        }
        Err(e) => CellRecord {
            method: cell.method,
            kernel_id: String::new(),
            gamma: cell.gamma,
            acc: None,
            nmi: None,
            iterations: None,
            converged: None,
            seconds: None,
            error: Some(e.to_string()),
        },
    };
    record.kernel_id = cell.kernel_id.clone();
    record.seconds = manifest.timings.then_some(elapsed);
    Ok(record)
}

/// Runs the grid on in-memory data. Cell failures are recorded, not
/// propagated; the call fails only when every cell fails or an artifact
/// cannot be written.
pub fn run_grid_on(
    data: &DataMatrix,
    truth: &LabelVector,
    manifest: &ExperimentManifest,
) -> Result<ResultTable> {
    manifest.validate()?;
    if truth.len() != data.n_samples() {
        return Err(Error::LengthMismatch(data.n_samples(), truth.len()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if manifest.jobs > 0 {
        pool = pool.num_threads(manifest.jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    pool.install(|| {
        let specs = manifest.kernels.specs();
        let built = kernels::build_grid(data, &specs);
        let mut cells = Vec::new();
        for &method in &manifest.methods {
            for (spec, kernel) in specs.iter().zip(&built) {
                for &gamma in &manifest.gammas {
                    cells.push(Cell {
                        method,
                        kernel_id: spec.to_string(),
                        kernel: kernel.as_ref(),
                        gamma,
                    });
                }
            }
        }
        let records = cells
            .par_iter()
            .map(|c| run_cell(c, manifest, truth))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = records.iter().find_map(|r| r.error.as_ref()) {
            if records.iter().all(CellRecord::failed) {
                return Err(Error::AllCellsFailed(first.clone()));
            }
        }
        Ok(ResultTable::from_records(records))
    })
}

/// Loads the manifest's dataset and runs the grid.
pub fn run_grid(manifest: &ExperimentManifest) -> Result<ResultTable> {
    manifest.validate()?;
    let (data, labels) = dataset::load_dataset(&manifest.dataset, manifest.labels)?;
    let labels = labels.ok_or_else(|| Error::InvalidConfig("dataset has no labels".into()))?;
    run_grid_on(&data, &labels, manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: Method, kernel: &str, gamma: f64, acc: Option<f64>) -> CellRecord {
        CellRecord {
            method,
            kernel_id: kernel.into(),
            gamma,
            acc,
            nmi: acc.map(|a| a / 2.0),
            iterations: Some(3),
            converged: Some(true),
            seconds: None,
            error: acc.is_none().then(|| "boom".to_string()),
        }
    }

    #[test]
    fn aggregates_best_gamma_then_kernels() {
        let table = ResultTable::from_records(vec![
            record(Method::SlkeR, "linear", 1e-3, Some(0.4)),
            record(Method::SlkeR, "a", 1e-3, Some(0.9)),
            record(Method::SlkeR, "a", 1e-4, Some(0.7)),
            record(Method::SlkeR, "linear", 1e-4, Some(0.6)),
            record(Method::SlkeR, "bad", 1e-4, None),
        ]);
        let s = table.method(Method::SlkeR).unwrap();
        assert_eq!(s.best_acc, Some(0.9));
        assert!((s.mean_acc.unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(s.failed_kernels, 1);
        assert_eq!(s.scored_kernels, 2);
        assert_eq!(table.kernels.len(), 3);
        let a = table.kernels.iter().find(|k| k.kernel_id == "a").unwrap();
        assert_eq!(a.best_acc_gamma, Some(1e-3));
        assert_eq!(table.records[0].kernel_id, "linear");
        assert_eq!(table.records[0].gamma, 1e-4);
    }

    #[test]
    fn single_cell_best_equals_mean() {
        let table = ResultTable::from_records(vec![record(Method::SlkeS, "linear", 1e-3, Some(0.5))]);
        let s = table.method(Method::SlkeS).unwrap();
        assert_eq!(s.best_acc, s.mean_acc);
        assert_eq!(s.best_nmi, s.mean_nmi);
    }

    #[test]
    fn manifest_defaults_and_validation() {
        let m = ExperimentManifest::from_toml("dataset = \"x.csv\"").unwrap();
        assert_eq!(m.gammas, DEFAULT_GAMMAS.to_vec());
        assert_eq!(m.kernels.specs().len(), 12);
        assert_eq!(m.methods, vec![Method::SlkeS, Method::SlkeR]);
        assert_eq!(ExperimentManifest::from_toml(&m.to_toml().unwrap()).unwrap(), m);

        let m = ExperimentManifest::from_toml(
            "dataset = \"x.csv\"\nkernels = [\"gaussian:1\", \"linear\"]\nmethods = [\"sc-baseline\"]",
        )
        .unwrap();
        assert_eq!(m.kernels, KernelGrid::List(vec![KernelSpec::Gaussian { t: 1.0 }, KernelSpec::Linear]));

        for bad in [
            "dataset = \"x\"\ngammas = []",
            "dataset = \"x\"\ngammas = [-1.0]",
            "dataset = \"x\"\nmethods = []",
            "dataset = \"x\"\nmu = 0.0",
            "dataset = \"x\"\nbogus = 1",
            "dataset = \"x\"\nkernels = \"rbf\"",
        ] {
            assert!(ExperimentManifest::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn cell_names_are_distinct() {
        assert_ne!(cell_name(Method::SlkeS, "linear", 1e-3), cell_name(Method::SlkeS, "linear", 1e-4));
        assert_eq!(cell_name(Method::SlkeR, "poly-a1-b2", 1e-6), "slke-r_poly-a1-b2_g1e-6");
    }
}
