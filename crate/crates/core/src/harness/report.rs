//! Benchmark reports: per-run records plus a per-method aggregate block.
//!
//! CSV floats carry 6 significant digits; JSON keeps full precision so that
//! loading an emitted report reproduces it exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bench::BenchRecord;
use super::metrics::{auc, mean, median, AUC_THRESHOLDS};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(HarnessError::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// Per-method summary over all records of that method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub n: usize,
    pub auc5: Option<f64>,
    pub auc10: Option<f64>,
    pub auc20: Option<f64>,
    pub median_pose_err_deg: Option<f64>,
    pub mean_recall: Option<f64>,
    pub median_runtime_us: f64,
    pub mean_runtime_us: f64,
    /// Median dense-baseline runtime over this method's median runtime.
    pub speedup_vs_ddd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<BenchRecord>,
    pub aggregate: Vec<AggregateRow>,
}

/// Record columns, in emission order.
pub const RECORD_COLUMNS: [&str; 17] = [
    "pair_id",
    "method",
    "seed",
    "pose_err_deg",
    "rot_err_deg",
    "trans_err_deg",
    "recall",
    "score",
    "iterations",
    "inlier_count",
    "fallback",
    "cluster_us",
    "summarize_us",
    "ransac_us",
    "refine_us",
    "total_us",
    "error",
];

/// Aggregate columns, in emission order.
pub const AGGREGATE_COLUMNS: [&str; 10] = [
    "method",
    "n",
    "auc5",
    "auc10",
    "auc20",
    "median_pose_err_deg",
    "mean_recall",
    "median_runtime_us",
    "mean_runtime_us",
    "speedup_vs_ddd",
];

/// Columns derived from wall-clock measurements.
pub const TIMING_COLUMNS: [&str; 8] = [
    "cluster_us",
    "summarize_us",
    "ransac_us",
    "refine_us",
    "total_us",
    "median_runtime_us",
    "mean_runtime_us",
    "speedup_vs_ddd",
];

/// Aggregates records per method, in order of first appearance.
pub fn aggregate(records: &[BenchRecord]) -> Vec<AggregateRow> {
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let runtime_median = |m: &str| {
        let rt: Vec<f64> = records.iter().filter(|r| r.method == m).map(|r| r.estimation_us()).collect();
        median(&rt)
    };
    let ddd = methods.contains(&"DDD").then(|| runtime_median("DDD"));
    methods
        .iter()
        .map(|&m| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.method == m).collect();
            let errs: Vec<f64> = rs.iter().filter_map(|r| r.pose_err_deg).collect();
            let recalls: Vec<f64> = rs.iter().filter_map(|r| r.recall).collect();
            let rt: Vec<f64> = rs.iter().map(|r| r.estimation_us()).collect();
            let aucs = auc(&errs, &AUC_THRESHOLDS);
            let med = median(&rt);
            AggregateRow {
                method: m.to_string(),
                n: rs.len(),
                auc5: aucs.first().copied(),
                auc10: aucs.get(1).copied(),
                auc20: aucs.get(2).copied(),
                median_pose_err_deg: (!errs.is_empty()).then(|| median(&errs)),
                mean_recall: (!recalls.is_empty()).then(|| mean(&recalls)),
                median_runtime_us: med,
                mean_runtime_us: mean(&rt),
                speedup_vs_ddd: ddd.map(|d| if m == "DDD" { 1.0 } else { d / med }),
            }
        })
        .collect()
}

/// Formats a float with 6 significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float");
    rounded.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig6).unwrap_or_default()
}

fn record_row(r: &BenchRecord) -> Vec<String> {
    vec![
        r.pair_id.clone(),
        r.method.clone(),
        r.seed.to_string(),
        opt(r.pose_err_deg),
        opt(r.rot_err_deg),
        opt(r.trans_err_deg),
        opt(r.recall),
        opt(r.score),
        r.iterations.to_string(),
        r.inlier_count.to_string(),
        r.fallback.to_string(),
        fmt_sig6(r.cluster_us),
        fmt_sig6(r.summarize_us),
        fmt_sig6(r.ransac_us),
        fmt_sig6(r.refine_us),
        fmt_sig6(r.total_us),
        r.error.clone().unwrap_or_default(),
    ]
}

fn aggregate_row(a: &AggregateRow) -> Vec<String> {
    vec![
        a.method.clone(),
        a.n.to_string(),
        opt(a.auc5),
        opt(a.auc10),
        opt(a.auc20),
        opt(a.median_pose_err_deg),
        opt(a.mean_recall),
        fmt_sig6(a.median_runtime_us),
        fmt_sig6(a.mean_runtime_us),
        opt(a.speedup_vs_ddd),
    ]
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::io(path, std::io::Error::other(e))
}

/// Renders the CSV text: record table, then a blank line and the aggregate table.
pub fn render_csv(report: &Report) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS)?;
    for r in &report.records {
        w.write_record(record_row(r))?;
    }
    let mut out = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8");
    if !report.aggregate.is_empty() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(AGGREGATE_COLUMNS)?;
        for a in &report.aggregate {
            w.write_record(aggregate_row(a))?;
        }
        out.push('\n');
        out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"));
    }
    Ok(out)
}

pub fn build_report(records: &[BenchRecord]) -> Report {
    Report {
        records: records.to_vec(),
        aggregate: aggregate(records),
    }
}

/// Writes records and their aggregate block to `path`.
pub fn emit_report(records: &[BenchRecord], format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let report = build_report(records);
    let text = match format {
        ReportFormat::Csv => render_csv(&report).map_err(|e| csv_err(path, e))?,
        ReportFormat::Json => serde_json::to_string_pretty(&report).map_err(|e| HarnessError::io(path, e.into()))? + "\n",
    };
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Loads a JSON report.
pub fn load_report(path: &Path) -> Result<Report, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Schema {
        line: e.line(),
        message: e.to_string(),
    })
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::io(path, e.into()))?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// Drops the wall-clock columns from CSV text (both tables).
pub fn strip_timing_columns(csv_text: &str) -> String {
    let mut out = String::new();
    let mut keep: Vec<bool> = Vec::new();
    let mut header_next = true;
    for line in csv_text.lines() {
        if line.is_empty() {
            out.push('\n');
            header_next = true;
            continue;
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(line.as_bytes());
        let fields: Vec<String> = match rdr.records().next() {
            Some(Ok(r)) => r.iter().map(str::to_string).collect(),
            _ => vec![line.to_string()],
        };
        if header_next {
            keep = fields.iter().map(|f| !TIMING_COLUMNS.contains(&f.as_str())).collect();
            header_next = false;
        }
        let kept: Vec<&str> = fields
            .iter()
            .zip(keep.iter().chain(std::iter::repeat(&true)))
            .filter(|(_, &k)| k)
            .map(|(f, _)| f.as_str())
            .collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, err: f64, rt: f64) -> BenchRecord {
        BenchRecord {
            pair_id: "p".into(),
            method: method.into(),
            seed: 0,
            pose_err_deg: Some(err),
            rot_err_deg: Some(err),
            trans_err_deg: Some(err),
            recall: None,
            score: Some(1.0 / 3.0),
            iterations: 100,
            inlier_count: 7,
            fallback: false,
            cluster_us: 0.0,
            summarize_us: 0.0,
            ransac_us: rt,
            refine_us: 0.0,
            total_us: rt,
            error: None,
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(123456789.0), "123457000");
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(2.5), "2.5");
    }

    #[test]
    fn empty_report_is_header_only() {
        let text = render_csv(&build_report(&[])).unwrap();
        assert_eq!(text, RECORD_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn speedup_relative_to_dense() {
        let recs = [rec("DDD", 1.0, 100.0), rec("CCA", 2.0, 4.0)];
        let agg = aggregate(&recs);
        assert_eq!(agg[0].speedup_vs_ddd, Some(1.0));
        assert_eq!(agg[1].speedup_vs_ddd, Some(25.0));
        assert_eq!(agg[1].median_pose_err_deg, Some(2.0));
        let without = aggregate(&recs[1..]);
        assert_eq!(without[0].speedup_vs_ddd, None);
    }

    #[test]
    fn timing_columns_are_stripped() {
        let text = render_csv(&build_report(&[rec("DDD", 1.0, 100.0)])).unwrap();
        let stripped = strip_timing_columns(&text);
        assert!(!stripped.contains("ransac_us"));
        assert!(!stripped.contains("speedup_vs_ddd"));
        assert!(stripped.contains("pose_err_deg"));
        let first_data = stripped.lines().nth(1).unwrap();
        assert_eq!(first_data.split(',').count(), RECORD_COLUMNS.len() - 5);
    }
}
