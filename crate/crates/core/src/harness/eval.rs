//! Approximation-error evaluation at the ground-truth model and the
//! cluster-space / K ablation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bench::{run_benchmark, BenchOptions};
use super::io::PairRecord;
use super::metrics::{auc, mean, median, percentile, AUC_THRESHOLDS};
use super::HarnessError;
use crate::clustering::{cluster_matches, ClusterParams, ClusterSpace, RepresentativeRule};
use crate::geometry::{essential_from_pose, focal_scale, sampson_error, EpipolarModel, Match, ModelKind, RelativePose};
use crate::ransac::{truncated_cost, MethodSpec, PointSet, RansacConfig, Residuals};
use crate::summarization::{approx_cluster_residual, summarize_clustering};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxEvalConfig {
    /// Cluster count of the residual-difference statistics.
    pub k: usize,
    /// Cluster counts of the inlier-ratio table.
    pub ks: Vec<usize>,
    pub cluster_space: ClusterSpace,
    pub kmeans_max_iter: usize,
    pub representative_rule: RepresentativeRule,
    pub tau_px: f64,
    pub seed: u64,
    pub bins: usize,
    /// Cost evaluations timed per pair and residual type.
    pub timing_reps: usize,
    /// Tolerance (focal-scaled pixels) of the headline fraction.
    pub tolerance_px: f64,
}

impl Default for ApproxEvalConfig {
    fn default() -> Self {
        Self {
            k: 128,
            ks: vec![64, 128, 256, 512, 1024],
            cluster_space: ClusterSpace::Matches4D,
            kmeans_max_iter: 5,
            representative_rule: RepresentativeRule::ClusterSpace,
            tau_px: 1.0,
            seed: 0,
            bins: 40,
            timing_reps: 20,
            tolerance_px: 0.1,
        }
    }
}

/// Per-cluster residuals at the ground-truth model, in focal-scaled pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResidual {
    pub pair_id: String,
    pub cluster: usize,
    pub size: usize,
    /// Root of the mean exact Sampson error.
    pub eps_s_px: f64,
    /// Root of the approximate residual divided by the cluster size.
    pub eps_a_px: f64,
}

impl ClusterResidual {
    pub fn diff(&self) -> f64 {
        self.eps_s_px - self.eps_a_px
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Histogram of the values inside `[lo, hi]`.
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for &v in values {
            if !(v >= lo && v <= hi) {
                continue;
            }
            let b = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        Self { lo, hi, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub n_clusters: usize,
    /// Fraction with `|ε_S − ε_a|` below the configured tolerance.
    pub frac_within_tol: f64,
    pub tolerance_px: f64,
    pub mean: f64,
    pub median: f64,
    pub p1: f64,
    pub p99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlierRatioRow {
    pub k: usize,
    /// Per-match ratio with the exact Sampson residual.
    pub exact_median: f64,
    pub exact_mean: f64,
    /// Per-cluster ratio with the approximate residual.
    pub approx_median: f64,
    pub approx_mean: f64,
    /// Mean time of one dense cost evaluation (µs).
    pub exact_us: f64,
    /// Mean time of one approximate cost evaluation (µs).
    pub approx_us: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxEvalReport {
    pub stats: DiffStats,
    /// `ε_S − ε_a` between the 1st and 99th percentile.
    pub histogram: Histogram,
    pub table: Vec<InlierRatioRow>,
    pub clusters: Vec<ClusterResidual>,
    /// Pairs skipped for missing ground truth or intrinsics.
    pub skipped: Vec<String>,
}

struct PairEval {
    residuals: Vec<ClusterResidual>,
    exact_ratio: f64,
    /// `(approx ratio, exact µs, approx µs)` per entry of `ks`.
    per_k: Vec<(f64, f64, f64)>,
}

/// Ground-truth essential matrix of a pair.
pub fn gt_essential(pair: &PairRecord) -> Option<EpipolarModel> {
    let gt = pair.gt.as_ref()?;
    Some(essential_from_pose(&RelativePose::new(gt.rotation(), gt.translation())))
}

fn eval_pair(pair: &PairRecord, cfg: &ApproxEvalConfig) -> Result<Option<PairEval>, HarnessError> {
    let (Some(model), Some((k1, k2))) = (gt_essential(pair), pair.intrinsics()?) else {
        return Ok(None);
    };
    let matches = pair.to_matches(ModelKind::Essential)?;
    if matches.is_empty() {
        return Ok(None);
    }
    let f = focal_scale(&k1, &k2);
    let tau = cfg.tau_px / f;
    let params = |k: usize| ClusterParams {
        space: cfg.cluster_space,
        k,
        max_iter: cfg.kmeans_max_iter,
        seed: cfg.seed,
        rule: cfg.representative_rule,
    };

    let clustering = cluster_matches(&matches, &params(cfg.k))?;
    let sums = summarize_clustering(&matches, &clustering, ModelKind::Essential)?;
    let members = clustering.members();
    let residuals = sums
        .iter()
        .zip(&members)
        .enumerate()
        .map(|(c, (s, idx))| {
            let exact = exact_cluster_sampson(&model, &matches, idx);
            let approx = approx_cluster_residual(&model, s);
            let n = s.size as f64;
            ClusterResidual {
                pair_id: pair.pair_id.clone(),
                cluster: c,
                size: s.size,
                eps_s_px: f * (exact / n).sqrt(),
                eps_a_px: f * (approx / n).sqrt(),
            }
        })
        .collect();

    let dense = PointSet::from_matches(&matches, ModelKind::Essential);
    let exact_ratio = truncated_cost(&model.m, Residuals::Points(&dense), tau).1 as f64 / matches.len() as f64;
    let reps = cfg.timing_reps.max(1);
    let mut per_k = Vec::with_capacity(cfg.ks.len());
    for &k in &cfg.ks {
        let c = cluster_matches(&matches, &params(k))?;
        let s = summarize_clustering(&matches, &c, ModelKind::Essential)?;
        let approx_ratio = truncated_cost(&model.m, Residuals::Summaries(&s), tau).1 as f64 / s.len() as f64;
        let time = |data: Residuals<'_>| {
            let t = Instant::now();
            let mut acc = 0.0;
            for _ in 0..reps {
                acc += truncated_cost(std::hint::black_box(&model.m), data, tau).0;
            }
            std::hint::black_box(acc);
            t.elapsed().as_secs_f64() * 1e6 / reps as f64
        };
        let exact_us = time(Residuals::Points(&dense));
        let approx_us = time(Residuals::Summaries(&s));
        per_k.push((approx_ratio, exact_us, approx_us));
    }
    Ok(Some(PairEval {
        residuals,
        exact_ratio,
        per_k,
    }))
}

/// Sum of exact Sampson errors of the listed matches.
pub fn exact_cluster_sampson(model: &EpipolarModel, matches: &[Match], members: &[usize]) -> f64 {
    members.iter().map(|&i| sampson_error(model, &matches[i])).sum()
}

/// Compares exact and approximate cluster residuals at the ground-truth model.
pub fn approx_error_eval(pairs: &[PairRecord], cfg: &ApproxEvalConfig) -> Result<ApproxEvalReport, HarnessError> {
    if cfg.k == 0 || cfg.ks.contains(&0) {
        return Err(HarnessError::InvalidArgument("cluster counts must be positive".into()));
    }
    let evals: Vec<Result<Option<PairEval>, HarnessError>> = pairs.par_iter().map(|p| eval_pair(p, cfg)).collect();
    let mut skipped = Vec::new();
    let mut done = Vec::new();
    for (p, e) in pairs.iter().zip(evals) {
        match e? {
            Some(ev) => done.push(ev),
            None => skipped.push(p.pair_id.clone()),
        }
    }
    let clusters: Vec<ClusterResidual> = done.iter().flat_map(|e| e.residuals.iter().cloned()).collect();
    let diffs: Vec<f64> = clusters.iter().map(ClusterResidual::diff).collect();
    let within = diffs.iter().filter(|d| d.abs() < cfg.tolerance_px).count();
    let (p1, p99) = (percentile(&diffs, 1.0), percentile(&diffs, 99.0));
    let stats = DiffStats {
        n_clusters: diffs.len(),
        frac_within_tol: if diffs.is_empty() { f64::NAN } else { within as f64 / diffs.len() as f64 },
        tolerance_px: cfg.tolerance_px,
        mean: mean(&diffs),
        median: median(&diffs),
        p1,
        p99,
    };
    let histogram = if diffs.is_empty() {
        Histogram {
            lo: 0.0,
            hi: 0.0,
            counts: vec![0; cfg.bins.max(1)],
        }
    } else {
        Histogram::new(&diffs, p1, p99, cfg.bins)
    };
    let exact: Vec<f64> = done.iter().map(|e| e.exact_ratio).collect();
    let table = cfg
        .ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let approx: Vec<f64> = done.iter().map(|e| e.per_k[i].0).collect();
            let eu = mean(&done.iter().map(|e| e.per_k[i].1).collect::<Vec<_>>());
            let au = mean(&done.iter().map(|e| e.per_k[i].2).collect::<Vec<_>>());
            InlierRatioRow {
                k,
                exact_median: median(&exact),
                exact_mean: mean(&exact),
                approx_median: median(&approx),
                approx_mean: mean(&approx),
                exact_us: eu,
                approx_us: au,
                speedup: eu / au,
            }
        })
        .collect();
    Ok(ApproxEvalReport {
        stats,
        histogram,
        table,
        clusters,
        skipped,
    })
}

/// One `(cluster space, K)` cell of the ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub cluster_space: String,
    pub k: usize,
    pub method: String,
    pub n: usize,
    pub auc5: f64,
    pub auc10: f64,
    pub auc20: f64,
    pub mean_pose_err_deg: f64,
    pub median_pose_err_deg: f64,
    pub median_cluster_us: f64,
    pub median_ransac_us: f64,
}

/// Runs `method` over every cluster space and K.
pub fn cluster_ablate(
    pairs: &[PairRecord],
    spaces: &[ClusterSpace],
    ks: &[usize],
    method: MethodSpec,
    config: &RansacConfig,
    opts: &BenchOptions,
) -> Result<Vec<AblationRow>, HarnessError> {
    let mut rows = Vec::new();
    for &space in spaces {
        for &k in ks {
            let cfg = RansacConfig {
                cluster_space: space,
                k,
                kind: ModelKind::Essential,
                ..config.clone()
            };
            let recs = run_benchmark(pairs, &[method], &cfg, opts)?;
            let errs: Vec<f64> = recs.iter().filter_map(|r| r.pose_err_deg).collect();
            let a = auc(&errs, &AUC_THRESHOLDS);
            let cl: Vec<f64> = recs.iter().map(|r| r.cluster_us).collect();
            let rs: Vec<f64> = recs.iter().map(|r| r.estimation_us()).collect();
            rows.push(AblationRow {
                cluster_space: space.name().to_string(),
                k,
                method: method.code(),
                n: recs.len(),
                auc5: a.first().copied().unwrap_or(f64::NAN),
                auc10: a.get(1).copied().unwrap_or(f64::NAN),
                auc20: a.get(2).copied().unwrap_or(f64::NAN),
                mean_pose_err_deg: mean(&errs),
                median_pose_err_deg: median(&errs),
                median_cluster_us: median(&cl),
                median_ransac_us: median(&rs),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_include_upper_edge() {
        let h = Histogram::new(&[0.0, 0.5, 1.0, 2.0], 0.0, 1.0, 2);
        assert_eq!(h.counts, vec![1, 2]);
    }
}
