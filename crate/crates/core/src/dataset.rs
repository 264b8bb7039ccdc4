//! CSV ingestion of feature matrices, kernel matrices and label files.
//!
//! Samples are rows on disk and columns in memory: a file with `n` rows of
//! `m` features becomes an `m x n` [`DataMatrix`]. A single header row is
//! detected automatically when none of its (feature) cells parse as numbers.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;

/// Absolute tolerance on `|K_ij - K_ji|` for kernels read from disk.
pub const LOAD_SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Feature-major data: `m` features by `n` samples, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::DegenerateData("data has no features".into()));
        }
        if values.ncols() < 2 {
            return Err(Error::DegenerateData(format!(
                "need at least 2 samples, got {}",
                values.ncols()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!(
                "non-finite entry at feature {}, sample {}",
                idx % values.nrows(),
                idx / values.nrows()
            )));
        }
        Ok(Self(values))
    }

    /// Builds from sample-major rows (`n` rows of `m` features).
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let m = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != m) {
            return Err(Error::DimensionMismatch(
                "samples have differing feature counts".into(),
            ));
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| samples[j][i]))
    }

    pub fn n_features(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Cluster or class assignments, dense in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    /// Requires every label in `0..k` to occur, where `k = max + 1`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidLabels("empty label vector".into()));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidLabels(format!(
                "label {missing} unused while max label is {}",
                k - 1
            )));
        }
        Ok(Self { labels, k })
    }

    /// Re-encodes arbitrary tokens to `0..k` in order of first appearance.
    pub fn from_raw<I, S>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut codes: HashMap<String, usize> = HashMap::new();
        let labels: Vec<usize> = raw
            .into_iter()
            .map(|s| {
                let next = codes.len();
                *codes.entry(s.as_ref().to_owned()).or_insert(next)
            })
            .collect();
        Self::new(labels)
    }

    /// Relabels any assignment vector by first appearance.
    pub fn canonical(assignments: &[usize]) -> Result<Self> {
        let mut codes: HashMap<usize, usize> = HashMap::new();
        let labels = assignments
            .iter()
            .map(|&a| {
                let next = codes.len();
                *codes.entry(a).or_insert(next)
            })
            .collect();
        Self::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct labels.
    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

impl std::ops::Deref for LabelVector {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.labels
    }
}

/// A parsed CSV cell grid with 1-based source line numbers.
struct Rows {
    cells: Vec<(usize, Vec<String>)>,
}

fn read_rows<R: Read>(reader: R) -> Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        cells.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(Rows { cells })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_cell(cell: &str, line: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric cell {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite cell {cell:?}"),
        });
    }
    Ok(v)
}

/// A row is a header when none of the inspected cells is numeric.
fn is_header(cells: &[String]) -> bool {
    !cells.is_empty() && cells.iter().all(|c| c.parse::<f64>().is_err())
}

/// Parses a numeric grid, dropping an auto-detected header. `skip_last`
/// excludes a trailing label column from both header detection and parsing.
fn numeric_rows(rows: &Rows, skip_last: bool) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let Some((first_line, first)) = rows.cells.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    let width = first.len();
    if skip_last && width < 2 {
        return Err(Error::Parse {
            line: *first_line,
            message: "labelled rows need at least one feature and a label".into(),
        });
    }
    let n_feat = if skip_last { width - 1 } else { width };
    let start = usize::from(is_header(&first[..n_feat]));

    let mut values = Vec::with_capacity(rows.cells.len());
    let mut tail = Vec::new();
    for (line, row) in &rows.cells[start..] {
        if row.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {width} cells, found {}", row.len()),
            });
        }
        let parsed = row[..n_feat]
            .iter()
            .map(|c| parse_cell(c, *line))
            .collect::<Result<Vec<_>>>()?;
        values.push(parsed);
        if skip_last {
            tail.push(row[width - 1].clone());
        }
    }
    Ok((values, tail))
}

/// Reads a sample-per-row CSV; with `has_labels` the last column holds class
/// labels (integers or strings).
pub fn read_dataset<R: Read>(
    reader: R,
    has_labels: bool,
) -> Result<(DataMatrix, Option<LabelVector>)> {
    let rows = read_rows(reader)?;
    let (samples, raw_labels) = numeric_rows(&rows, has_labels)?;
    if samples.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let data = DataMatrix::from_samples(&samples)?;
    let labels = if has_labels {
        Some(LabelVector::from_raw(&raw_labels)?)
    } else {
        None
    };
    Ok((data, labels))
}

pub fn load_dataset(path: &Path, has_labels: bool) -> Result<(DataMatrix, Option<LabelVector>)> {
    read_dataset(open(path)?, has_labels)
}

/// Reads a dense numeric matrix, row per line.
pub fn read_matrix<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let rows = read_rows(reader)?;
    let (values, _) = numeric_rows(&rows, false)?;
    let nrows = values.len();
    let ncols = values.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| values[i][j]))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix(open(path)?)
}

pub fn read_kernel<R: Read>(reader: R) -> Result<KernelMatrix> {
    KernelMatrix::from_loaded(read_matrix(reader)?, LOAD_SYMMETRY_TOLERANCE)
}

/// Loads a precomputed kernel, checks symmetry to 1e-8 and symmetrizes.
pub fn load_kernel(path: &Path) -> Result<KernelMatrix> {
    read_kernel(open(path)?)
}

/// Reads a single-column label file. A first row equal to `label`, or a
/// non-numeric first row followed by numeric rows, is treated as a header.
pub fn read_labels<R: Read>(reader: R) -> Result<LabelVector> {
    let rows = read_rows(reader)?;
    let mut tokens: Vec<&str> = Vec::with_capacity(rows.cells.len());
    for (line, row) in &rows.cells {
        if row.len() != 1 {
            return Err(Error::Parse {
                line: *line,
                message: format!("label files have one column, found {}", row.len()),
            });
        }
        tokens.push(&row[0]);
    }
    if let Some(first) = tokens.first() {
        let numeric = |t: &&str| t.parse::<i64>().is_ok();
        let header = first.eq_ignore_ascii_case("label")
            || (!numeric(first) && tokens.len() > 1 && tokens[1..].iter().all(numeric));
        if header {
            tokens.remove(0);
        }
    }
    LabelVector::from_raw(tokens)
}

pub fn load_labels(path: &Path) -> Result<LabelVector> {
    read_labels(open(path)?)
}

fn write_rows<W: Write>(
    out: W,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a matrix row by row with a `c0,c1,...` header. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_matrix<W: Write>(out: W, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    write_rows(
        out,
        &header,
        m.row_iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect()),
    )
}

pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix(File::create(path)?, m)
}

/// Writes samples as rows, appending the label column when given.
pub fn write_dataset<W: Write>(
    out: W,
    data: &DataMatrix,
    labels: Option<&LabelVector>,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != data.n_samples() {
            return Err(Error::LengthMismatch(data.n_samples(), l.len()));
        }
    }
    let mut header: Vec<String> = (0..data.n_features()).map(|i| format!("f{i}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    let x = data.values();
    write_rows(
        out,
        &header,
        (0..data.n_samples()).map(|j| {
            let mut row: Vec<String> = x.column(j).iter().map(|v| v.to_string()).collect();
            if let Some(l) = labels {
                row.push(l[j].to_string());
            }
            row
        }),
    )
}

pub fn save_dataset(path: &Path, data: &DataMatrix, labels: Option<&LabelVector>) -> Result<()> {
    write_dataset(File::create(path)?, data, labels)
}

pub fn write_labels<W: Write>(out: W, labels: &[usize]) -> Result<()> {
    write_rows(
        out,
        &["label".to_owned()],
        labels.iter().map(|l| vec![l.to_string()]),
    )
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_labels(File::create(path)?, labels)
}

/// Isotropic Gaussian clusters: `per_cluster` samples around each center
/// with standard deviation `sigma`, labelled by center index.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    sigma: f64,
    per_cluster: usize,
    seed: u64,
) -> Result<(DataMatrix, LabelVector)> {
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("blob sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(centers.len() * per_cluster);
    let mut labels = Vec::with_capacity(centers.len() * per_cluster);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            samples.push(center.iter().map(|&x| x + normal.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    Ok((DataMatrix::from_samples(&samples)?, LabelVector::new(labels)?))
}

/// Three unit-variance 2-D blobs of 30 points on an equilateral triangle of
/// side 10 (centers at least 8 standard deviations apart).
pub fn three_blobs(seed: u64) -> (DataMatrix, LabelVector) {
    let h = 10.0 * 3f64.sqrt() / 2.0;
    let centers = [vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, h]];
    gaussian_blobs(&centers, 1.0, 30, seed).expect("fixed blob parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(text: &str, labels: bool) -> Result<(DataMatrix, Option<LabelVector>)> {
        read_dataset(text.as_bytes(), labels)
    }

    #[test]
    fn transposes_samples_and_encodes_labels() {
        let (x, l) = ds("1,2,A\n3,4,B", true).unwrap();
        assert_eq!(x.values(), &DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        assert_eq!(l.unwrap().as_slice(), &[0, 1]);
    }

    #[test]
    fn rejects_non_numeric_cell() {
        assert!(matches!(ds("1,2\n3,x", false), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_single_sample() {
        assert!(matches!(ds("1,2,3", false), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(matches!(ds("1,2\n3,4,5", false), Err(Error::Parse { .. })));
    }

    #[test]
    fn detects_header() {
        let (x, l) = ds("a,b,class\n1,2,cat\n3,4,dog\n5,6,cat", true).unwrap();
        assert_eq!(x.n_samples(), 3);
        assert_eq!(x.n_features(), 2);
        assert_eq!(l.unwrap().as_slice(), &[0, 1, 0]);
    }

    #[test]
    fn missing_file() {
        let err = load_dataset(Path::new("/nonexistent/x.csv"), false).unwrap_err();
        assert!(matches!(err, Error::FileNotFound(_)));
    }

    #[test]
    fn kernel_loading() {
        let k = read_kernel("1,0.5\n0.5,1".as_bytes()).unwrap();
        assert_eq!(k.n(), 2);
        assert!(matches!(
            read_kernel("1,0.5\n0.4,1".as_bytes()),
            Err(Error::AsymmetryBeyondTolerance { .. })
        ));
        assert!(matches!(
            read_kernel("1,0,0\n0,1,0".as_bytes()),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn kernel_within_tolerance_is_symmetrized() {
        let k = read_kernel("1,0.5\n0.500000001,1".as_bytes()).unwrap();
        let v = k.values();
        assert_eq!(v[(0, 1)], v[(1, 0)]);
        assert!((v[(0, 1)] - 0.5000000005).abs() < 1e-15);
    }

    #[test]
    fn label_files() {
        assert_eq!(read_labels("label\n3\n3\n7".as_bytes()).unwrap().as_slice(), &[0, 0, 1]);
        assert_eq!(read_labels("b\na\nb".as_bytes()).unwrap().as_slice(), &[0, 1, 0]);
        assert_eq!(read_labels("truth\n1\n0".as_bytes()).unwrap().as_slice(), &[0, 1]);
    }

    #[test]
    fn label_vector_validation() {
        assert!(LabelVector::new(vec![0, 2]).is_err());
        assert_eq!(LabelVector::new(vec![1, 0, 1]).unwrap().n_classes(), 2);
        assert_eq!(LabelVector::canonical(&[5, 5, 2, 9]).unwrap().as_slice(), &[0, 0, 1, 2]);
    }

    #[test]
    fn blobs_shape() {
        let (x, l) = three_blobs(7);
        assert_eq!((x.n_features(), x.n_samples()), (2, 90));
        assert_eq!(l.n_classes(), 3);
        assert_eq!(three_blobs(7).0, x);
    }
}
