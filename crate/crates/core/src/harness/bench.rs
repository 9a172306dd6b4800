//! Method-matrix benchmark over pairs and seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::PairRecord;
use super::metrics::wxbs_recall;
use super::HarnessError;
use crate::geometry::{pose_error, ModelKind, PoseError};
use crate::ransac::{estimate, MethodSpec, RansacConfig};

/// One `(pair, method, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub pair_id: String,
    pub method: String,
    pub seed: u64,
    /// Max of rotation and translation-direction error; 180 on failure.
    pub pose_err_deg: Option<f64>,
    pub rot_err_deg: Option<f64>,
    pub trans_err_deg: Option<f64>,
    /// Verification recall for fundamental estimation.
    pub recall: Option<f64>,
    pub score: Option<f64>,
    pub iterations: usize,
    pub inlier_count: usize,
    pub fallback: bool,
    pub cluster_us: f64,
    pub summarize_us: f64,
    pub ransac_us: f64,
    pub refine_us: f64,
    pub total_us: f64,
    pub error: Option<String>,
}

impl BenchRecord {
    fn failed(pair: &PairRecord, method: &MethodSpec, seed: u64, kind: ModelKind, msg: String) -> Self {
        let has_pose = kind == ModelKind::Essential && pair.gt.is_some();
        Self {
            pair_id: pair.pair_id.clone(),
            method: method.code(),
            seed,
            pose_err_deg: has_pose.then_some(180.0),
            rot_err_deg: has_pose.then_some(180.0),
            trans_err_deg: has_pose.then_some(180.0),
            recall: (kind == ModelKind::Fundamental && pair.gt_matches.is_some()).then_some(0.0),
            score: None,
            iterations: 0,
            inlier_count: 0,
            fallback: false,
            cluster_us: 0.0,
            summarize_us: 0.0,
            ransac_us: 0.0,
            refine_us: 0.0,
            total_us: 0.0,
            error: Some(msg),
        }
    }

    /// Hypothesize-and-verify loop plus final refinement, in microseconds.
    pub fn estimation_us(&self) -> f64 {
        self.ransac_us + self.refine_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub repeats: usize,
    /// Pixel threshold of the verification recall.
    pub recall_threshold_px: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repeats: 1,
            recall_threshold_px: 10.0,
        }
    }
}

fn run_pair(pair: &PairRecord, methods: &[MethodSpec], config: &RansacConfig, opts: &BenchOptions) -> Vec<BenchRecord> {
    let kind = config.kind;
    let mut out = Vec::with_capacity(methods.len() * opts.repeats);
    let prepared = pair
        .to_matches(kind)
        .and_then(|m| Ok((m, pair.intrinsics()?)));
    for method in methods {
        for r in 0..opts.repeats {
            let seed = config.seed.wrapping_add(r as u64);
            let (matches, ks) = match &prepared {
                Ok(p) => p,
                Err(e) => {
                    out.push(BenchRecord::failed(pair, method, seed, kind, e.to_string()));
                    continue;
                }
            };
            let cfg = RansacConfig {
                method: *method,
                seed,
                ..config.clone()
            };
            let res = match estimate(matches, ks.as_ref().map(|(a, b)| (a, b)), &cfg) {
                Ok(r) => r,
                Err(e) => {
                    out.push(BenchRecord::failed(pair, method, seed, kind, e.to_string()));
                    continue;
                }
            };
            let mut rec = BenchRecord {
                pair_id: pair.pair_id.clone(),
                method: method.code(),
                seed,
                pose_err_deg: None,
                rot_err_deg: None,
                trans_err_deg: None,
                recall: None,
                score: Some(res.score),
                iterations: res.iterations,
                inlier_count: res.inlier_count(),
                fallback: res.fallback,
                cluster_us: res.timings.cluster_us,
                summarize_us: res.timings.summarize_us,
                ransac_us: res.timings.ransac_us,
                refine_us: res.timings.refine_us,
                total_us: res.timings.total_us,
                error: (!res.converged).then(|| "no valid hypothesis".to_string()),
            };
            if let (Some(gt), ModelKind::Essential) = (&pair.gt, kind) {
                let err = match (&res.pose, res.converged) {
                    (Some(p), true) => pose_error(p, &gt.pose()),
                    _ => PoseError::failure(),
                };
                rec.pose_err_deg = Some(err.max_deg);
                rec.rot_err_deg = Some(err.rot_deg);
                rec.trans_err_deg = Some(err.trans_deg);
            }
            if let (Some(gm), ModelKind::Fundamental) = (&pair.gt_matches, kind) {
                rec.recall = Some(if res.converged {
                    wxbs_recall(&res.model, gm, opts.recall_threshold_px)
                } else {
                    0.0
                });
            }
            out.push(rec);
        }
    }
    out
}

/// Runs every method on every pair with seeds `config.seed + 0..repeats`.
/// Pairs run in parallel; records come back in (pair, method, repeat) order.
pub fn run_benchmark(
    pairs: &[PairRecord],
    methods: &[MethodSpec],
    config: &RansacConfig,
    opts: &BenchOptions,
) -> Result<Vec<BenchRecord>, HarnessError> {
    if methods.is_empty() {
        return Err(HarnessError::InvalidArgument("at least one method is required".into()));
    }
    if opts.repeats == 0 {
        return Err(HarnessError::InvalidArgument("repeats must be positive".into()));
    }
    for m in methods {
        m.validate()?;
    }
    let per_pair: Vec<Vec<BenchRecord>> = pairs.par_iter().map(|p| run_pair(p, methods, config, opts)).collect();
    Ok(per_pair.into_iter().flatten().collect())
}
