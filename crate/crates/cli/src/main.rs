//! `densum` command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use densum::clustering::{ClusterError, ClusterSpace};
use densum::geometry::{pose_error, EpipolarModel, Mat3, ModelKind};
use densum::harness::bench::{run_benchmark, BenchOptions};
use densum::harness::eval::{approx_error_eval, cluster_ablate, AblationRow, ApproxEvalConfig};
use densum::harness::io::{load_all, load_pairs, write_pairs, PairRecord};
use densum::harness::metrics::wxbs_recall;
use densum::harness::report::{emit_report, fmt_sig6, write_json, ReportFormat};
use densum::harness::synth::{synth_pairs, SynthConfig};
use densum::harness::HarnessError;
use densum::ransac::{estimate, MethodSpec, RansacConfig, RansacError};
use densum::summarization::SummaryError;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "densum", version, about = "Clustered LO-RANSAC for two-view relative pose")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic pairs as JSON lines.
    Synth(SynthArgs),
    /// Estimate one pair and print the pose and statistics.
    Estimate(EstimateArgs),
    /// Run methods × pairs × repeats and write a report.
    Bench(BenchArgs),
    /// Compare exact and approximate cluster residuals at the ground truth.
    ApproxEval(ApproxEvalArgs),
    /// Sweep cluster spaces and cluster counts for one method.
    ClusterAblate(AblateArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 10)]
    n_pairs: usize,
    #[arg(long, default_value_t = 10_000)]
    n_matches: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_px: f64,
    #[arg(long, default_value_t = 0.3)]
    outlier_frac: f64,
    #[arg(long, default_value_t = 1000.0)]
    focal_px: f64,
    #[arg(long, default_value_t = 640.0)]
    width: f64,
    #[arg(long, default_value_t = 480.0)]
    height: f64,
    /// Noiseless verification correspondences per pair.
    #[arg(long, default_value_t = 0)]
    gt_matches: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Estimation flags shared by the estimating subcommands.
#[derive(Args, Debug)]
struct EstimationArgs {
    #[arg(long, value_delimiter = ',', default_value = "DDD,CAD,CCD,CAA,CCA,CCC")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 128)]
    k: usize,
    #[arg(long, default_value = "4d", value_parser = parse_space)]
    cluster_space: ClusterSpace,
    #[arg(long, default_value_t = 1.0)]
    tau_px: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "essential", value_parser = parse_model)]
    model: ModelKind,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.999)]
    confidence: f64,
}

impl EstimationArgs {
    fn config(&self) -> RansacConfig {
        RansacConfig {
            kind: self.model,
            tau_px: self.tau_px,
            max_iterations: self.max_iters,
            min_iterations: RansacConfig::default().min_iterations.min(self.max_iters),
            confidence: self.confidence,
            seed: self.seed,
            k: self.k,
            cluster_space: self.cluster_space,
            ..Default::default()
        }
    }

    fn methods(&self) -> Result<Vec<MethodSpec>, HarnessError> {
        self.methods
            .iter()
            .map(|m| MethodSpec::parse(m.trim()).map_err(HarnessError::from))
            .collect()
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Pair to estimate; defaults to the first record.
    #[arg(long)]
    pair_id: Option<String>,
    /// Also write the JSON result here.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    est: EstimationArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Pixel threshold of the verification recall.
    #[arg(long, default_value_t = 10.0)]
    recall_px: f64,
    #[command(flatten)]
    est: EstimationArgs,
}

#[derive(Args, Debug)]
struct ApproxEvalArgs {
    #[arg(long)]
    input: PathBuf,
    /// JSON report path.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 128)]
    k: usize,
    /// Cluster counts of the inlier-ratio table.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
    ks: Vec<usize>,
    #[arg(long, default_value = "4d", value_parser = parse_space)]
    cluster_space: ClusterSpace,
    #[arg(long, default_value_t = 1.0)]
    tau_px: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    bins: usize,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,
    #[arg(long, value_delimiter = ',', default_value = "2d,4d,9d,grid", value_parser = parse_space)]
    spaces: Vec<ClusterSpace>,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256,512")]
    ks: Vec<usize>,
    #[arg(long, default_value = "CCA")]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    tau_px: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.999)]
    confidence: f64,
}

fn parse_space(s: &str) -> Result<ClusterSpace, String> {
    ClusterSpace::parse(s).ok_or_else(|| format!("unknown cluster space {s:?} (expected 2d, 4d, 9d or grid)"))
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "essential" => Ok(ModelKind::Essential),
        "fundamental" => Ok(ModelKind::Fundamental),
        _ => Err(format!("unknown model {s:?} (expected essential or fundamental)")),
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

/// 0 success, 1 usage error, 2 data error, 3 numerical failure.
fn exit_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::InvalidArgument(_) => 1,
        HarnessError::Io { .. }
        | HarnessError::Schema { .. }
        | HarnessError::CalibrationRequired { .. }
        | HarnessError::InvalidRecord { .. } => 2,
        HarnessError::Ransac(r) => match r {
            RansacError::InvalidMethod(_) | RansacError::InvalidConfig(_) => 1,
            RansacError::TooFewMatches { .. } | RansacError::CalibrationRequired => 2,
            RansacError::Cluster(c) => cluster_code(c),
            RansacError::Summary(s) => summary_code(s),
        },
        HarnessError::Cluster(c) => cluster_code(c),
        HarnessError::Summary(s) => summary_code(s),
    }
}

fn cluster_code(e: &ClusterError) -> u8 {
    match e {
        ClusterError::Empty => 2,
        ClusterError::ZeroClusters => 1,
        ClusterError::GridHasNoEmbedding => 3,
    }
}

fn summary_code(e: &SummaryError) -> u8 {
    match e {
        SummaryError::NonFinite(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Bench(a) => bench(a),
        Command::ApproxEval(a) => approx_eval(a),
        Command::ClusterAblate(a) => ablate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn synth(a: SynthArgs) -> Result<(), HarnessError> {
    let cfg = SynthConfig {
        n_pairs: a.n_pairs,
        n_matches: a.n_matches,
        noise_px: a.noise_px,
        outlier_frac: a.outlier_frac,
        focal_px: a.focal_px,
        image_size: [a.width, a.height],
        n_gt_matches: a.gt_matches,
        seed: a.seed,
        ..Default::default()
    };
    let pairs: Vec<PairRecord> = synth_pairs(&cfg)?.collect();
    write_pairs(&a.output, &pairs)?;
    eprintln!("wrote {} pairs to {}", pairs.len(), a.output.display());
    Ok(())
}

fn matrix_rows(m: &Mat3) -> [[f64; 3]; 3] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

fn run_estimate(a: EstimateArgs) -> Result<(), HarnessError> {
    let mut pair = None;
    for rec in load_pairs(&a.input)? {
        let rec = rec?;
        if a.pair_id.as_deref().is_none_or(|id| id == rec.pair_id) {
            pair = Some(rec);
            break;
        }
    }
    let pair = pair.ok_or_else(|| match &a.pair_id {
        Some(id) => HarnessError::InvalidArgument(format!("no pair {id:?} in {}", a.input.display())),
        None => HarnessError::InvalidArgument(format!("{} holds no pairs", a.input.display())),
    })?;
    let base = a.est.config();
    let kind = base.kind;
    let intr = pair.intrinsics()?;
    if kind == ModelKind::Essential && intr.is_none() {
        return Err(HarnessError::CalibrationRequired { pair_id: pair.pair_id.clone() });
    }
    let matches = pair.to_matches(kind)?;
    let mut out = Vec::new();
    for method in a.est.methods()? {
        let cfg = RansacConfig { method, ..base.clone() };
        let r = estimate(&matches, intr.as_ref().map(|(k1, k2)| (k1, k2)), &cfg)?;
        let err = match (&r.pose, &pair.gt) {
            (Some(p), Some(gt)) => Some(pose_error(p, &gt.pose())),
            _ => None,
        };
        let recall = match (kind, &pair.gt_matches) {
            (ModelKind::Fundamental, Some(g)) if !g.is_empty() => Some(wxbs_recall(&r.model, g, 10.0)),
            _ => None,
        };
        let t = &r.timings;
        eprintln!(
            "{} {}: score {} inliers {} iterations {} pose_err_deg {} time_us {}",
            pair.pair_id,
            r.method.code(),
            fmt_sig6(r.score),
            r.inlier_count(),
            r.iterations,
            err.map(|e| fmt_sig6(e.max_deg)).unwrap_or_else(|| "-".into()),
            fmt_sig6(t.total_us),
        );
        out.push(json!({
            "pair_id": pair.pair_id,
            "method": r.method.code(),
            "requested_method": method.code(),
            "fallback": r.fallback,
            "model": matrix_rows(&normalized(&r.model)),
            "R": r.pose.map(|p| matrix_rows(&p.rotation)),
            "t": r.pose.map(|p| [p.translation.x, p.translation.y, p.translation.z]),
            "score": r.score,
            "inlier_count": r.inlier_count(),
            "iterations": r.iterations,
            "converged": r.converged,
            "pose_err_deg": err.map(|e| e.max_deg),
            "rot_err_deg": err.map(|e| e.rot_deg),
            "trans_err_deg": err.map(|e| e.trans_deg),
            "recall": recall,
            "timings_us": {
                "cluster": t.cluster_us,
                "summarize": t.summarize_us,
                "ransac": t.ransac_us,
                "refine": t.refine_us,
                "total": t.total_us,
            },
        }));
    }
    let value = serde_json::Value::Array(out);
    let text = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
    // A closed stdout (e.g. piped into `head`) is not an error.
    let _ = writeln!(std::io::stdout(), "{text}");
    if let Some(path) = &a.output {
        write_json(&value, path)?;
    }
    Ok(())
}

fn normalized(m: &EpipolarModel) -> Mat3 {
    m.normalized().m
}

fn bench(a: BenchArgs) -> Result<(), HarnessError> {
    let pairs = load_all(&a.input)?;
    let methods = a.est.methods()?;
    let opts = BenchOptions {
        repeats: a.repeats,
        recall_threshold_px: a.recall_px,
    };
    let records = run_benchmark(&pairs, &methods, &a.est.config(), &opts)?;
    emit_report(&records, a.format, &a.output)?;
    eprintln!("wrote {} records to {}", records.len(), a.output.display());
    Ok(())
}

fn approx_eval(a: ApproxEvalArgs) -> Result<(), HarnessError> {
    let pairs = load_all(&a.input)?;
    let cfg = ApproxEvalConfig {
        k: a.k,
        ks: a.ks,
        cluster_space: a.cluster_space,
        tau_px: a.tau_px,
        seed: a.seed,
        bins: a.bins,
        ..Default::default()
    };
    let report = approx_error_eval(&pairs, &cfg)?;
    for id in &report.skipped {
        eprintln!("warning: pair {id} skipped (missing ground truth or intrinsics)");
    }
    let s = &report.stats;
    eprintln!(
        "{} clusters, {} within {} px, median diff {}",
        s.n_clusters,
        fmt_sig6(s.frac_within_tol),
        fmt_sig6(s.tolerance_px),
        fmt_sig6(s.median)
    );
    for row in &report.table {
        eprintln!(
            "K={} exact ratio {} approx ratio {} speedup {}",
            row.k,
            fmt_sig6(row.exact_median),
            fmt_sig6(row.approx_median),
            fmt_sig6(row.speedup)
        );
    }
    write_json(&report, &a.output)
}

fn ablate(a: AblateArgs) -> Result<(), HarnessError> {
    let pairs = load_all(&a.input)?;
    let method = MethodSpec::parse(&a.method)?;
    let cfg = RansacConfig {
        tau_px: a.tau_px,
        seed: a.seed,
        max_iterations: a.max_iters,
        min_iterations: RansacConfig::default().min_iterations.min(a.max_iters),
        confidence: a.confidence,
        ..Default::default()
    };
    let opts = BenchOptions {
        repeats: a.repeats,
        ..Default::default()
    };
    let rows = cluster_ablate(&pairs, &a.spaces, &a.ks, method, &cfg, &opts)?;
    match a.format {
        ReportFormat::Json => write_json(&rows, &a.output),
        ReportFormat::Csv => write_ablation_csv(&rows, &a.output),
    }
}

fn write_ablation_csv(rows: &[AblationRow], path: &Path) -> Result<(), HarnessError> {
    let mut text = String::from(
        "cluster_space,k,method,n,auc5,auc10,auc20,mean_pose_err_deg,median_pose_err_deg,median_cluster_us,median_ransac_us\n",
    );
    for r in rows {
        let cells = [
            r.cluster_space.clone(),
            r.k.to_string(),
            r.method.clone(),
            r.n.to_string(),
            fmt_sig6(r.auc5),
            fmt_sig6(r.auc10),
            fmt_sig6(r.auc20),
            fmt_sig6(r.mean_pose_err_deg),
            fmt_sig6(r.median_pose_err_deg),
            fmt_sig6(r.median_cluster_us),
            fmt_sig6(r.median_ransac_us),
        ];
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
