//! `slke` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slke::dataset;
use slke::experiment::{self, ExperimentManifest, KernelGrid, Method};
use slke::kernels::{self, KernelMatrix, KernelSpec};
use slke::metrics;
use slke::report;
use slke::solver::{self, Regularizer, SolverConfig};
use slke::spectral::{self, Affinity};
use slke::Error;

#[derive(Parser)]
#[command(name = "slke", version, about = "Similarity learning by kernel-preserving embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build kernel matrices for a dataset and write them as CSV.
    Kernel(KernelArgs),
    /// Learn Z for one kernel and one gamma.
    Fit(FitArgs),
    /// Spectral-cluster an affinity matrix.
    Cluster(ClusterArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
    /// Run the kernel x gamma grid and write reports.
    Bench(BenchArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// Dataset CSV, one sample per row.
    #[arg(long)]
    data: PathBuf,
    /// The last column of the dataset holds labels and is ignored.
    #[arg(long)]
    labels: bool,
    /// `standard` or a comma-separated list such as `gaussian:1,linear,poly:1:2`.
    #[arg(long, default_value = "standard")]
    kernels: String,
    /// Skip division by the largest entry.
    #[arg(long)]
    raw: bool,
    /// Output directory; one `K_<kernel>.csv` per kernel.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Precomputed kernel CSV. Alternative to `--data` with `--kernel`.
    #[arg(long, conflicts_with_all = ["data", "kernel"])]
    kernel_file: Option<PathBuf>,
    #[arg(long, requires = "kernel")]
    data: Option<PathBuf>,
    #[arg(long)]
    labels: bool,
    /// Kernel spec applied to `--data`; the result is rescaled.
    #[arg(long, requires = "data")]
    kernel: Option<String>,
    /// `lowrank` (slke-r) or `sparse` (slke-s).
    #[arg(long, default_value = "lowrank")]
    regularizer: String,
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Where to write Z.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration objective and residuals.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    mu: Option<f64>,
    /// Penalty growth factor per iteration; 1 keeps mu fixed.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Clamp negative entries of Z after each proximal step.
    #[arg(long)]
    nonneg: Option<bool>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    affinity: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = spectral::DEFAULT_RESTARTS)]
    restarts: usize,
    /// Replace the input A by (|A| + |A^T|) / 2 first, as for a learned Z.
    #[arg(long)]
    symmetrize: bool,
    /// Label file to write; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
}

/// Every manifest key can be given or overridden here.
#[derive(Args)]
struct BenchArgs {
    /// TOML manifest; flags below override its keys.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// The last column of the dataset holds class labels.
    #[arg(long)]
    labels: bool,
    /// `standard` or a comma-separated list of kernel ids.
    #[arg(long)]
    kernels: Option<String>,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Comma-separated subset of slke-s, slke-r, sc-baseline.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    restarts: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dump_z: bool,
    #[arg(long)]
    trace: bool,
    /// Record wall-clock seconds per cell (reports are then not reproducible).
    #[arg(long)]
    timings: bool,
}

enum Failure {
    Usage(String),
    Slke(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Slke(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Slke(Error::Io(e))
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Kernel(a) => kernel(a),
        Command::Fit(a) => fit(a),
        Command::Cluster(a) => cluster(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Slke(e)) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn kernel(a: KernelArgs) -> CliResult {
    let specs = KernelGrid::parse(&a.kernels)?.specs();
    let (x, _) = dataset::load_dataset(&a.data, a.labels)?;
    fs::create_dir_all(&a.out)?;
    for spec in specs {
        let mut k = kernels::build_kernel(&x, spec)?;
        if !a.raw {
            k = kernels::rescale_kernel(&k)?;
        }
        dataset::save_matrix(&a.out.join(format!("K_{spec}.csv")), k.values())?;
    }
    Ok(())
}

fn apply_solver_flags(cfg: &mut SolverConfig, f: &SolverFlags) {
    if let Some(v) = f.mu {
        cfg.mu = v;
    }
    if let Some(v) = f.rho {
        cfg.rho = v;
    }
    if let Some(v) = f.mu_max {
        cfg.mu_max = v;
    }
    if let Some(v) = f.tol {
        cfg.tol = v;
    }
    if let Some(v) = f.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if let Some(v) = f.nonneg {
        cfg.nonneg_projection = v;
    }
}

fn fit(a: FitArgs) -> CliResult {
    let regularizer: Regularizer = a.regularizer.parse()?;
    let mut cfg = SolverConfig::new(regularizer, a.gamma);
    apply_solver_flags(&mut cfg, &a.solver);
    cfg.validate()?;

    let k: KernelMatrix = match (&a.kernel_file, &a.data, &a.kernel) {
        (Some(path), _, _) => dataset::load_kernel(path)?,
        (None, Some(data), Some(spec)) => {
            let spec: KernelSpec = spec.parse()?;
            let (x, _) = dataset::load_dataset(data, a.labels)?;
            kernels::rescale_kernel(&kernels::build_kernel(&x, spec)?)?
        }
        _ => return Err(Failure::Usage("give --kernel-file, or --data with --kernel".into())),
    };

    let result = solver::slke_fit(&k, &cfg)?;
    dataset::save_matrix(&a.out, &result.z)?;
    if let Some(path) = &a.trace {
        result.write_trace(fs::File::create(path)?)?;
    }
    let residual = result.final_residuals().map(|r| r.max()).unwrap_or(f64::NAN);
    eprintln!(
        "iterations={} converged={} residual={residual:e}",
        result.iterations, result.converged
    );
    Ok(())
}

fn cluster(a: ClusterArgs) -> CliResult {
    let mut m = dataset::load_matrix(&a.affinity)?;
    if a.symmetrize {
        m = solver::symmetrize_affinity(&m);
    }
    let affinity = Affinity::new(m)?;
    let labels = spectral::spectral_clustering_with_restarts(&affinity, a.k, a.seed, a.restarts)?;
    match &a.out {
        Some(path) => dataset::save_labels(path, &labels)?,
        None => dataset::write_labels(io::stdout().lock(), &labels)?,
    }
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult {
    let truth = dataset::load_labels(&a.truth)?;
    let pred = dataset::load_labels(&a.pred)?;
    let acc = metrics::accuracy(&truth, &pred)?;
    let nmi = metrics::nmi(&truth, &pred)?;
    let mut out = io::stdout().lock();
    writeln!(out, "acc={acc}")?;
    writeln!(out, "nmi={nmi}")?;
    Ok(())
}

fn bench_manifest(a: &BenchArgs) -> std::result::Result<ExperimentManifest, Failure> {
    let mut m = match (&a.manifest, &a.data) {
        (Some(path), _) => ExperimentManifest::load(path)?,
        (None, Some(data)) => ExperimentManifest::new(data),
        (None, None) => return Err(Failure::Usage("bench needs --manifest or --data".into())),
    };
    if let Some(data) = &a.data {
        m.dataset = data.clone();
    }
    if a.labels {
        m.labels = true;
    }
    if let Some(k) = &a.kernels {
        m.kernels = KernelGrid::parse(k)?;
    }
    if let Some(g) = &a.gammas {
        m.gammas = g.clone();
    }
    if let Some(methods) = &a.methods {
        m.methods = methods.iter().map(|s| s.parse()).collect::<slke::Result<Vec<Method>>>()?;
    }
    let f = &a.solver;
    if let Some(v) = f.mu {
        m.mu = v;
    }
    if let Some(v) = f.rho {
        m.rho = v;
    }
    if let Some(v) = f.mu_max {
        m.mu_max = v;
    }
    if let Some(v) = f.tol {
        m.tol = v;
    }
    if let Some(v) = f.max_iters {
        m.max_iters = v;
    }
    if let Some(v) = f.seed {
        m.seed = v;
    }
    if let Some(v) = f.nonneg {
        m.nonneg_projection = v;
    }
    if let Some(v) = a.restarts {
        m.restarts = v;
    }
    if let Some(v) = a.jobs {
        m.jobs = v;
    }
    if let Some(v) = &a.out {
        m.output_dir = v.clone();
    }
    m.dump_z |= a.dump_z;
    m.trace |= a.trace;
    m.timings |= a.timings;
    m.validate()?;
    Ok(m)
}

fn bench(a: BenchArgs) -> CliResult {
    let manifest = bench_manifest(&a)?;
    let table = experiment::run_grid(&manifest)?;
    report::write_reports(&table, Path::new(&manifest.output_dir))?;
    print!("{}", report::report(&table, report::ReportFormat::Text)?);
    Ok(())
}
