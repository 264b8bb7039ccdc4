//! Clustering accuracy under the optimal cluster-to-class bijection, and
//! normalized mutual information.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Optimal assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
}

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// row/column potentials, `O(n^3)`).
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Assignment> {
    let (rows, cols) = cost.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("assignment costs must be finite".into()));
    }
    let n = rows;
    // 1-based working arrays; index 0 is a virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    let total_cost = row_to_col.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok(Assignment { row_to_col, total_cost })
}

/// Joint label counts, truth classes by predicted clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch(truth.len(), pred.len()));
        }
        if truth.is_empty() {
            return Err(Error::InvalidLabels("empty label vectors".into()));
        }
        let kt = truth.iter().max().map_or(0, |m| m + 1);
        let kp = pred.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0; kp]; kt];
        for (&t, &p) in truth.iter().zip(pred) {
            counts[t][p] += 1;
        }
        Ok(Self { counts, n: truth.len() })
    }

    fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        let kp = self.counts.first().map_or(0, Vec::len);
        (0..kp).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Fraction of samples whose cluster maps to their class under the best
/// bijection from clusters to classes. The table is zero-padded to square
/// when the label counts differ.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(truth, pred)?;
    let kt = table.counts.len();
    let kp = table.counts[0].len();
    let size = kt.max(kp);
    // Rows are clusters, columns classes; maximise matches.
    let cost = DMatrix::from_fn(size, size, |c, t| {
        if c < kp && t < kt {
            -(table.counts[t][c] as f64)
        } else {
            0.0
        }
    });
    let assignment = hungarian(&cost)?;
    Ok(-assignment.total_cost / table.n as f64)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information divided by the larger of the two entropies (natural
/// log). Two single-cluster partitions are identical and score 1.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(truth, pred)?;
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let mut mi = 0.0;
    for (t, row) in table.counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[t] as f64 * cols[p] as f64)).ln();
            }
        }
    }
    let h = entropy(&rows, n).max(entropy(&cols, n));
    if h == 0.0 {
        return Ok(1.0);
    }
    Ok((mi / h).max(0.0))
}
