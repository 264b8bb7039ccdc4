//! Text, CSV and JSON renderings of a [`ResultTable`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiment::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown report format {s:?}"))),
        }
    }
}

/// A fraction as a percentage with two decimals, halves rounded up.
pub fn percent(x: f64) -> String {
    let hundredths = (x * 10_000.0 + 1e-9).round() as i64;
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// `best (mean)` in percent, e.g. `66.24 (51.28)`.
pub fn best_mean_cell(best: Option<f64>, mean: Option<f64>) -> String {
    match (best, mean) {
        (Some(b), Some(m)) => format!("{} ({})", percent(b), percent(m)),
        _ => "failed".to_owned(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn text(table: &ResultTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>18} {:>18}", "method", "Acc (%)", "NMI (%)");
    for m in &table.methods {
        let _ = writeln!(
            out,
            "{:<12} {:>18} {:>18}",
            m.method.as_str(),
            best_mean_cell(m.best_acc, m.mean_acc),
            best_mean_cell(m.best_nmi, m.mean_nmi),
        );
    }
    out.push_str("\nbest (mean) over kernels; each kernel scored at its best gamma\n");
    for m in table.methods.iter().filter(|m| m.failed_kernels > 0) {
        let _ = writeln!(out, "{}: {} kernel(s) failed at every gamma", m.method, m.failed_kernels);
    }

    let _ = writeln!(
        out,
        "\n{:<12} {:<18} {:>8} {:>10} {:>8} {:>10} {:>7}",
        "method", "kernel", "Acc (%)", "gamma", "NMI (%)", "gamma", "failed"
    );
    for k in &table.kernels {
        let score = |v: Option<f64>| v.map(percent).unwrap_or_else(|| "-".into());
        let gamma = |v: Option<f64>| v.map(|g| format!("{g:e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<12} {:<18} {:>8} {:>10} {:>8} {:>10} {:>7}",
            k.method.as_str(),
            k.kernel_id,
            score(k.best_acc),
            gamma(k.best_acc_gamma),
            score(k.best_nmi),
            gamma(k.best_nmi_gamma),
            k.failed_cells,
        );
    }
    out
}

/// Header and rows of `cells.csv`. Failed cells have empty scores and
/// `failed` in the `converged` column; the baseline leaves solver columns
/// empty.
fn csv(table: &ResultTable) -> String {
    let mut out = String::from("method,kernel_id,gamma,acc,nmi,iters,converged,seconds\n");
    for r in &table.records {
        let converged = if r.failed() { "failed".to_owned() } else { opt(r.converged) };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.kernel_id,
            r.gamma,
            opt(r.acc),
            opt(r.nmi),
            opt(r.iterations),
            converged,
            opt(r.seconds),
        );
    }
    out
}

pub fn report(table: &ResultTable, format: ReportFormat) -> Result<String> {
    if table.records.is_empty() {
        return Err(Error::EmptyTable);
    }
    match format {
        ReportFormat::Text => Ok(text(table)),
        ReportFormat::Csv => Ok(csv(table)),
        ReportFormat::Json => serde_json::to_string_pretty(table)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Serialization(e.to_string())),
    }
}

pub fn parse_json(text: &str) -> Result<ResultTable> {
    serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes `report.txt`, `cells.csv` and `report.json` into `dir`.
pub fn write_reports(table: &ResultTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, format) in [
        ("report.txt", ReportFormat::Text),
        ("cells.csv", ReportFormat::Csv),
        ("report.json", ReportFormat::Json),
    ] {
        fs::write(dir.join(name), report(table, format)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{CellRecord, Method};

    fn table() -> ResultTable {
        let rec = |kernel: &str, gamma: f64, acc: f64| CellRecord {
            method: Method::SlkeR,
            kernel_id: kernel.into(),
            gamma,
            acc: Some(acc),
            nmi: Some(acc - 0.1),
            iterations: Some(12),
            converged: Some(true),
            seconds: None,
            error: None,
        };
        ResultTable::from_records(vec![
            rec("linear", 1e-3, 0.6624),
            rec("gaussian-t1", 1e-3, 0.3632),
            rec("gaussian-t1", 1e-4, 0.2),
        ])
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(percent(0.6624), "66.24");
        assert_eq!(percent(0.5128), "51.28");
        assert_eq!(percent(1.0), "100.00");
        assert_eq!(percent(0.0), "0.00");
        assert_eq!(percent(0.123_45), "12.35");
        assert_eq!(percent(0.004), "0.40");
    }

    #[test]
    fn text_report_uses_best_mean_cells() {
        let t = table();
        let s = t.method(Method::SlkeR).unwrap();
        assert_eq!(best_mean_cell(s.best_acc, s.mean_acc), "66.24 (51.28)");
        let text = report(&t, ReportFormat::Text).unwrap();
        assert!(text.contains("66.24 (51.28)"), "{text}");
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let csv = report(&table(), ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,kernel_id,gamma,acc,nmi,iters,converged,seconds");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("slke-r,linear,0.001,0.6624,"));
        assert!(lines[1].ends_with(",12,true,"));
    }

    #[test]
    fn json_round_trip() {
        let t = table();
        let json = report(&t, ReportFormat::Json).unwrap();
        assert_eq!(parse_json(&json).unwrap(), t);
    }

    #[test]
    fn empty_table() {
        let t = ResultTable::from_records(vec![]);
        assert!(matches!(report(&t, ReportFormat::Text), Err(Error::EmptyTable)));
    }
}
