//! LO-RANSAC over the Dense / Center / Approx method matrix.
//!
//! A method is a three-letter code choosing the data used for sampling,
//! scoring and final refinement: `D` all matches, `C` cluster representatives,
//! `A` cluster summaries (for sampling: exhaustive iteration over summaries).

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_matches, ClusterError, ClusterParams, ClusterSpace, Clustering, RepresentativeRule};
use crate::geometry::{
    decompose_essential, essential_motions_fast, in_front, normalized_threshold, rotation_from_axis_angle,
    select_pose_cheirality, skew, CameraIntrinsics, EpipolarModel, Mat3, Match, ModelKind, RelativePose, Vec3,
};
use crate::solvers::{essential_5pt_points, essential_from_summary, fundamental_7pt_points};
use crate::summarization::{model_vector, summarize_clustering, ClusterSummary, SummaryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RansacError {
    #[error("too few matches: need {needed}, got {got}")]
    TooFewMatches { needed: usize, got: usize },
    #[error("invalid method: {0}")]
    InvalidMethod(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("essential estimation requires intrinsics for both views")]
    CalibrationRequired,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
}

/// Where minimal samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sampling {
    Dense,
    Center,
    /// One hypothesis set per cluster summary, from its approximate nullspace.
    ApproxExhaustive,
}

/// Residual data used for scoring or refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataSource {
    Dense,
    Center,
    Approx,
}

impl DataSource {
    fn letter(self) -> char {
        match self {
            DataSource::Dense => 'D',
            DataSource::Center => 'C',
            DataSource::Approx => 'A',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'D' => Some(DataSource::Dense),
            'C' => Some(DataSource::Center),
            'A' => Some(DataSource::Approx),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub sampling: Sampling,
    pub scoring: DataSource,
    pub refinement: DataSource,
}

impl MethodSpec {
    pub const DDD: MethodSpec = MethodSpec {
        sampling: Sampling::Dense,
        scoring: DataSource::Dense,
        refinement: DataSource::Dense,
    };

    /// Parses and validates a three-letter code such as `CCA`.
    pub fn parse(code: &str) -> Result<Self, RansacError> {
        let chars: Vec<char> = code.trim().to_ascii_uppercase().chars().collect();
        if chars.len() != 3 {
            return Err(RansacError::InvalidMethod(format!("{code:?} is not a three-letter code")));
        }
        let sampling = match chars[0] {
            'D' => Sampling::Dense,
            'C' => Sampling::Center,
            'A' => Sampling::ApproxExhaustive,
            _ => return Err(RansacError::InvalidMethod(format!("unknown sampling letter in {code:?}"))),
        };
        let scoring = DataSource::from_letter(chars[1])
            .ok_or_else(|| RansacError::InvalidMethod(format!("unknown scoring letter in {code:?}")))?;
        let refinement = DataSource::from_letter(chars[2])
            .ok_or_else(|| RansacError::InvalidMethod(format!("unknown refinement letter in {code:?}")))?;
        let spec = MethodSpec { sampling, scoring, refinement };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RansacError> {
        if self.scoring == DataSource::Approx && self.refinement == DataSource::Center {
            return Err(RansacError::InvalidMethod(
                "approximate scoring with center refinement is not supported".into(),
            ));
        }
        if self.sampling == Sampling::ApproxExhaustive && self.scoring != DataSource::Approx {
            return Err(RansacError::InvalidMethod(
                "exhaustive summary sampling requires approximate scoring".into(),
            ));
        }
        Ok(())
    }

    pub fn code(&self) -> String {
        let s = match self.sampling {
            Sampling::Dense => 'D',
            Sampling::Center => 'C',
            Sampling::ApproxExhaustive => 'A',
        };
        [s, self.scoring.letter(), self.refinement.letter()].iter().collect()
    }

    /// Whether any stage needs clusters.
    pub fn needs_clusters(&self) -> bool {
        *self != Self::DDD
            && (self.sampling != Sampling::Dense
                || self.scoring != DataSource::Dense
                || self.refinement != DataSource::Dense)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub method: MethodSpec,
    pub kind: ModelKind,
    /// Inlier threshold in pixels.
    pub tau_px: f64,
    pub max_iterations: usize,
    pub min_iterations: usize,
    pub confidence: f64,
    pub seed: u64,
    /// LM steps of the local optimization run on each new best model.
    pub lo_max_steps: usize,
    /// LM steps of the final refinement.
    pub final_max_steps: usize,
    pub k: usize,
    pub cluster_space: ClusterSpace,
    pub kmeans_max_iter: usize,
    pub representative_rule: RepresentativeRule,
    /// Also classify every match against the final model.
    pub dense_inlier_pass: bool,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            method: MethodSpec::DDD,
            kind: ModelKind::Essential,
            tau_px: 1.0,
            max_iterations: 10_000,
            min_iterations: 100,
            confidence: 0.999,
            seed: 0,
            lo_max_steps: 25,
            final_max_steps: 100,
            k: 128,
            cluster_space: ClusterSpace::Matches4D,
            kmeans_max_iter: 5,
            representative_rule: RepresentativeRule::ClusterSpace,
            dense_inlier_pass: false,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), RansacError> {
        self.method.validate()?;
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(RansacError::InvalidConfig(format!("confidence {} not in (0, 1)", self.confidence)));
        }
        if self.min_iterations > self.max_iterations {
            return Err(RansacError::InvalidConfig("min_iterations exceeds max_iterations".into()));
        }
        if !(self.tau_px > 0.0) || !self.tau_px.is_finite() {
            return Err(RansacError::InvalidConfig(format!("tau_px {} must be positive", self.tau_px)));
        }
        if self.k == 0 {
            return Err(RansacError::InvalidConfig("k must be positive".into()));
        }
        if self.method.sampling == Sampling::ApproxExhaustive && self.kind == ModelKind::Fundamental {
            return Err(RansacError::InvalidMethod(
                "exhaustive summary sampling is only defined for essential matrices".into(),
            ));
        }
        Ok(())
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            space: self.cluster_space,
            k: self.k,
            max_iter: self.kmeans_max_iter,
            seed: self.seed,
            rule: self.representative_rule,
        }
    }
}

/// Stage durations in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub cluster_us: f64,
    pub summarize_us: f64,
    pub ransac_us: f64,
    pub refine_us: f64,
    pub total_us: f64,
}

impl StageTimings {
    /// Hypothesize-and-verify loop plus final refinement.
    pub fn estimation_us(&self) -> f64 {
        self.ransac_us + self.refine_us
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub model: EpipolarModel,
    pub pose: Option<RelativePose>,
    /// Scoring cost of `model` under the configured scoring data.
    pub score: f64,
    /// Inlier flags at the scoring granularity (matches, representatives or clusters).
    pub inliers: Vec<bool>,
    pub dense_inliers: Option<Vec<bool>>,
    pub iterations: usize,
    pub timings: StageTimings,
    pub converged: bool,
    /// The dense path ran because there were too few matches for clustering.
    pub fallback: bool,
    /// Method actually executed.
    pub method: MethodSpec,
    /// `(iteration, score)` each time the best model improved.
    pub best_trace: Vec<(usize, f64)>,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Adaptive iteration bound `⌈log(1−p)/log(1−wˢ)⌉` clamped to `[min, max]`.
pub fn stopping_iterations(inlier_ratio: f64, sample_size: usize, confidence: f64, min: usize, max: usize) -> usize {
    let w = inlier_ratio.clamp(0.0, 1.0);
    if w <= 0.0 {
        return max;
    }
    let ws = w.powi(sample_size as i32);
    if ws >= 1.0 {
        return min;
    }
    let n = ((1.0 - confidence).ln() / (1.0 - ws).ln()).ceil();
    if !n.is_finite() || n >= max as f64 {
        max
    } else {
        (n.max(0.0) as usize).clamp(min, max)
    }
}

// ---------------------------------------------------------------------------
// Residual data

/// Compact match coordinates `[x, y, x̄, ȳ]` with implicit unit third coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub pts: Vec<[f64; 4]>,
}

impl PointSet {
    pub fn from_matches(matches: &[Match], kind: ModelKind) -> Self {
        let pts = matches
            .iter()
            .map(|m| {
                let (x, xb) = m.points(kind);
                [x.x, x.y, xb.x, xb.y]
            })
            .collect();
        Self { pts }
    }

    pub fn from_summaries(summaries: &[ClusterSummary]) -> Self {
        let pts = summaries.iter().map(|s| [s.c.x, s.c.y, s.c_bar.x, s.c_bar.y]).collect();
        Self { pts }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    fn hom(&self, i: usize) -> (Vec3, Vec3) {
        let p = &self.pts[i];
        (Vec3::new(p[0], p[1], 1.0), Vec3::new(p[2], p[3], 1.0))
    }
}

/// Data over which a truncated cost is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Residuals<'a> {
    Points(&'a PointSet),
    Summaries(&'a [ClusterSummary]),
}

impl Residuals<'_> {
    pub fn len(&self) -> usize {
        match self {
            Residuals::Points(p) => p.len(),
            Residuals::Summaries(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sampson error of `[x, y, x̄, ȳ]` under `e`.
#[inline(always)]
fn sampson4(e: &[f64; 9], p: &[f64; 4]) -> f64 {
    let [x, y, u, v] = *p;
    // e is column-major.
    let ex0 = e[0] * x + e[3] * y + e[6];
    let ex1 = e[1] * x + e[4] * y + e[7];
    let ex2 = e[2] * x + e[5] * y + e[8];
    let et0 = e[0] * u + e[1] * v + e[2];
    let et1 = e[3] * u + e[4] * v + e[5];
    let c = u * ex0 + v * ex1 + ex2;
    let d = ex0 * ex0 + ex1 * ex1 + et0 * et0 + et1 * et1;
    if d > 0.0 {
        c * c / d
    } else {
        f64::INFINITY
    }
}

fn points_cost(e: &Mat3, pts: &PointSet, tau2: f64) -> (f64, usize) {
    let ev = model_vector(e);
    let mut score = 0.0;
    let mut inliers = 0;
    for p in &pts.pts {
        let r = sampson4(&ev, p);
        if r < tau2 {
            score += r;
            inliers += 1;
        } else {
            score += tau2;
        }
    }
    (score, inliers)
}

#[inline]
fn summary_residual(e: &Mat3, ev: &[f64; 9], s: &ClusterSummary) -> f64 {
    let a = s.alpha(e);
    if a > 0.0 {
        s.weighted_norm_sq(ev) / a
    } else {
        f64::INFINITY
    }
}

fn summaries_cost(e: &Mat3, sums: &[ClusterSummary], tau2: f64) -> (f64, usize) {
    let ev = model_vector(e);
    let mut score = 0.0;
    let mut inliers = 0;
    for s in sums {
        let budget = s.size as f64 * tau2;
        let r = summary_residual(e, &ev, s);
        if r < budget {
            score += r;
            inliers += 1;
        } else {
            score += budget;
        }
    }
    (score, inliers)
}

/// Truncated cost and inlier count of a model matrix.
pub fn truncated_cost(e: &Mat3, data: Residuals<'_>, tau: f64) -> (f64, usize) {
    match data {
        Residuals::Points(p) => points_cost(e, p, tau * tau),
        Residuals::Summaries(s) => summaries_cost(e, s, tau * tau),
    }
}

/// Inlier flags: Sampson `< τ²` per point, or `‖Mₖe‖²/αₖ < |Cₖ|·τ²` per cluster.
pub fn classify_inliers(model: &EpipolarModel, data: Residuals<'_>, tau: f64) -> Vec<bool> {
    let tau2 = tau * tau;
    let ev = model_vector(&model.m);
    match data {
        Residuals::Points(p) => p.pts.iter().map(|q| sampson4(&ev, q) < tau2).collect(),
        Residuals::Summaries(s) => s
            .iter()
            .map(|c| summary_residual(&model.m, &ev, c) < c.size as f64 * tau2)
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt refinement

/// Gauss-Newton normal equations `(JᵀJ, Jᵀr)` of the inlier residuals with
/// respect to the model-matrix directions `de`.
fn normal_equations(e: &Mat3, de: &[Mat3], data: Residuals<'_>, tau2: f64) -> (DMatrix<f64>, DVector<f64>, usize) {
    let p = de.len();
    let mut h = DMatrix::<f64>::zeros(p, p);
    let mut g = DVector::<f64>::zeros(p);
    let mut used = 0;
    let ev = model_vector(e);
    let dev: Vec<[f64; 9]> = de.iter().map(model_vector).collect();
    let mut jrow = [0.0f64; 9];
    match data {
        Residuals::Points(pts) => {
            for q in &pts.pts {
                let [x, y, u, v] = *q;
                let ex0 = ev[0] * x + ev[3] * y + ev[6];
                let ex1 = ev[1] * x + ev[4] * y + ev[7];
                let ex2 = ev[2] * x + ev[5] * y + ev[8];
                let et0 = ev[0] * u + ev[1] * v + ev[2];
                let et1 = ev[3] * u + ev[4] * v + ev[5];
                let c = u * ex0 + v * ex1 + ex2;
                let d = ex0 * ex0 + ex1 * ex1 + et0 * et0 + et1 * et1;
                if !(d > 0.0) || c * c / d >= tau2 {
                    continue;
                }
                used += 1;
                let sd = d.sqrt();
                let r = c / sd;
                for (k, dk) in dev.iter().enumerate() {
                    let dx0 = dk[0] * x + dk[3] * y + dk[6];
                    let dx1 = dk[1] * x + dk[4] * y + dk[7];
                    let dx2 = dk[2] * x + dk[5] * y + dk[8];
                    let dt0 = dk[0] * u + dk[1] * v + dk[2];
                    let dt1 = dk[3] * u + dk[4] * v + dk[5];
                    let dc = u * dx0 + v * dx1 + dx2;
                    let dd = 2.0 * (ex0 * dx0 + ex1 * dx1 + et0 * dt0 + et1 * dt1);
                    jrow[k] = (dc - 0.5 * c * dd / d) / sd;
                }
                for a in 0..p {
                    g[a] += jrow[a] * r;
                    for b in a..p {
                        h[(a, b)] += jrow[a] * jrow[b];
                    }
                }
            }
        }
        Residuals::Summaries(sums) => {
            for s in sums {
                let alpha = s.alpha(e);
                if !(alpha > 0.0) {
                    continue;
                }
                let me = upper_mul(&s.m, &ev);
                let n: f64 = me.iter().map(|v| v * v).sum();
                if n / alpha >= s.size as f64 * tau2 {
                    continue;
                }
                used += 1;
                let sa = alpha.sqrt();
                let (c, cb) = (&s.c, &s.c_bar);
                let ex = e * c;
                let et = e.transpose() * cb;
                let mut jcols = [[0.0f64; 9]; 9];
                for (k, dk) in de.iter().enumerate() {
                    let dx = dk * c;
                    let dt = dk.transpose() * cb;
                    let dalpha = 2.0 * (ex.x * dx.x + ex.y * dx.y + et.x * dt.x + et.y * dt.y);
                    let mde = upper_mul(&s.m, &dev[k]);
                    for i in 0..9 {
                        jcols[k][i] = (mde[i] - 0.5 * me[i] * dalpha / alpha) / sa;
                    }
                }
                for a in 0..p {
                    for i in 0..9 {
                        g[a] += jcols[a][i] * me[i] / sa;
                    }
                    for b in a..p {
                        let mut acc = 0.0;
                        for i in 0..9 {
                            acc += jcols[a][i] * jcols[b][i];
                        }
                        h[(a, b)] += acc;
                    }
                }
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    (h, g, used)
}

#[inline]
fn upper_mul(m: &[[f64; 9]; 9], v: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..9 {
        let mut acc = 0.0;
        for j in i..9 {
            acc += m[i][j] * v[j];
        }
        out[i] = acc;
    }
    out
}

/// Outcome of a refinement run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineStats {
    pub initial_cost: f64,
    pub final_cost: f64,
    pub steps: usize,
}

trait Manifold: Copy {
    fn matrix(&self) -> Mat3;
    fn directions(&self) -> Vec<Mat3>;
    fn retract(&self, delta: &DVector<f64>) -> Self;
}

impl Manifold for RelativePose {
    fn matrix(&self) -> Mat3 {
        skew(&self.translation) * self.rotation
    }

    fn directions(&self) -> Vec<Mat3> {
        let t = self.translation;
        let (b1, b2) = tangent_basis(&t);
        let tx = skew(&t) * self.rotation;
        let mut out = Vec::with_capacity(5);
        for k in 0..3 {
            let mut ek = Vec3::zeros();
            ek[k] = 1.0;
            out.push(tx * skew(&ek));
        }
        out.push(skew(&b1) * self.rotation);
        out.push(skew(&b2) * self.rotation);
        out
    }

    fn retract(&self, d: &DVector<f64>) -> Self {
        let w = Vec3::new(d[0], d[1], d[2]);
        let r = self.rotation * rotation_from_axis_angle(&w);
        let (b1, b2) = tangent_basis(&self.translation);
        let t = self.translation + b1 * d[3] + b2 * d[4];
        RelativePose::new(r, t)
    }
}

/// Two unit vectors completing `t` to an orthonormal frame.
fn tangent_basis(t: &Vec3) -> (Vec3, Vec3) {
    let a = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let b1 = t.cross(&a).normalize();
    let b2 = t.cross(&b1).normalize();
    (b1, b2)
}

#[derive(Debug, Clone, Copy)]
struct RankTwo(Mat3);

impl Manifold for RankTwo {
    fn matrix(&self) -> Mat3 {
        self.0
    }

    fn directions(&self) -> Vec<Mat3> {
        (0..9)
            .map(|k| {
                let mut m = Mat3::zeros();
                m[(k % 3, k / 3)] = 1.0;
                m
            })
            .collect()
    }

    fn retract(&self, d: &DVector<f64>) -> Self {
        let mut m = self.0;
        for k in 0..9 {
            m[(k % 3, k / 3)] += d[k];
        }
        RankTwo(project_rank_two(&m))
    }
}

/// Nearest rank-2 matrix in Frobenius norm, rescaled to unit norm.
pub fn project_rank_two(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut s = svd.singular_values;
    let imin = s.imin();
    s[imin] = 0.0;
    let out = u * Mat3::from_diagonal(&s) * v_t;
    let n = out.norm();
    if n > 0.0 {
        out / n
    } else {
        out
    }
}

fn levenberg_marquardt<M: Manifold>(start: M, data: Residuals<'_>, tau: f64, max_steps: usize) -> (M, RefineStats) {
    let tau2 = tau * tau;
    let mut cur = start;
    let mut cost = truncated_cost(&cur.matrix(), data, tau).0;
    let initial_cost = cost;
    let mut lambda = 1e-4;
    let mut steps = 0;
    'outer: while steps < max_steps {
        let dirs = cur.directions();
        let (h, g, used) = normal_equations(&cur.matrix(), &dirs, data, tau2);
        if used == 0 {
            break;
        }
        let p = dirs.len();
        let max_diag = (0..p).map(|i| h[(i, i)]).fold(0.0f64, f64::max);
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            break;
        }
        loop {
            let mut a = h.clone();
            for i in 0..p {
                a[(i, i)] += lambda * h[(i, i)].max(1e-9 * max_diag);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break 'outer;
                }
                continue;
            };
            let delta = -chol.solve(&g);
            if !delta.iter().all(|v| v.is_finite()) {
                break 'outer;
            }
            let cand = cur.retract(&delta);
            let c = truncated_cost(&cand.matrix(), data, tau).0;
            if c < cost {
                let gain = cost - c;
                cur = cand;
                cost = c;
                steps += 1;
                lambda = (lambda * 0.1).max(1e-12);
                if gain <= 1e-12 * cost.max(f64::MIN_POSITIVE) || delta.norm() < 1e-14 {
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break 'outer;
            }
        }
    }
    (
        cur,
        RefineStats {
            initial_cost,
            final_cost: cost,
            steps,
        },
    )
}

/// Refines a relative pose on the truncated cost of `data` (5 degrees of freedom).
pub fn refine_pose(pose: &RelativePose, data: Residuals<'_>, tau: f64, max_steps: usize) -> (RelativePose, RefineStats) {
    levenberg_marquardt(*pose, data, tau, max_steps)
}

/// Refines a fundamental matrix by local perturbation and rank-2 projection.
pub fn refine_fundamental(f: &Mat3, data: Residuals<'_>, tau: f64, max_steps: usize) -> (Mat3, RefineStats) {
    let (r, stats) = levenberg_marquardt(RankTwo(*f), data, tau, max_steps);
    (r.0, stats)
}

/// Refines a model on the truncated cost of `data`; never returns a model with
/// a higher cost than the input.
pub fn refine(model: &EpipolarModel, data: Residuals<'_>, tau: f64, max_steps: usize) -> EpipolarModel {
    match model.kind {
        ModelKind::Essential => {
            let Ok(cands) = decompose_essential(model) else {
                return *model;
            };
            let (pose, stats) = refine_pose(&cands[0], data, tau, max_steps);
            if stats.steps == 0 {
                return *model;
            }
            EpipolarModel::essential(pose.matrix())
        }
        ModelKind::Fundamental => {
            let (f, stats) = refine_fundamental(&model.m, data, tau, max_steps);
            if stats.steps == 0 {
                return *model;
            }
            EpipolarModel::fundamental(f)
        }
    }
}

// ---------------------------------------------------------------------------
// Estimation

#[derive(Debug, Clone, Copy)]
enum Hypothesis {
    Pose(RelativePose),
    Matrix(Mat3),
}

impl Hypothesis {
    fn matrix(&self) -> Mat3 {
        match self {
            Hypothesis::Pose(p) => p.matrix(),
            Hypothesis::Matrix(m) => *m,
        }
    }

    fn refine(&self, data: Residuals<'_>, tau: f64, steps: usize) -> Hypothesis {
        match self {
            Hypothesis::Pose(p) => Hypothesis::Pose(refine_pose(p, data, tau, steps).0),
            Hypothesis::Matrix(m) => Hypothesis::Matrix(refine_fundamental(m, data, tau, steps).0),
        }
    }
}

/// Cheirality-consistent pose of an essential hypothesis on its sample.
fn pose_for_sample(e: &Mat3, x1: &[Vec3], x2: &[Vec3]) -> Option<RelativePose> {
    let cands = essential_motions_fast(e)?;
    let mut best: Option<(usize, RelativePose)> = None;
    for c in cands {
        let n = x1.iter().zip(x2).filter(|(a, b)| in_front(&c, a, b)).count();
        if best.is_none_or(|(bn, _)| n > bn) {
            best = Some((n, c));
        }
    }
    best.filter(|(n, _)| *n == x1.len()).map(|(_, p)| p)
}

fn sample_indices(seed: u64, iteration: usize, n: usize, s: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    rand::seq::index::sample(&mut rng, n, s).into_vec()
}

/// Prepared data of one estimation problem.
struct Problem {
    dense: PointSet,
    reps: Option<PointSet>,
    summaries: Option<Vec<ClusterSummary>>,
    rep_matches: Vec<usize>,
}

impl Problem {
    fn residuals(&self, src: DataSource) -> Residuals<'_> {
        match src {
            DataSource::Dense => Residuals::Points(&self.dense),
            DataSource::Center => Residuals::Points(self.reps.as_ref().expect("representatives")),
            DataSource::Approx => Residuals::Summaries(self.summaries.as_deref().expect("summaries")),
        }
    }
}

/// Inlier threshold in the coordinates of `kind`.
pub fn model_threshold(
    kind: ModelKind,
    tau_px: f64,
    intrinsics: Option<(&CameraIntrinsics, &CameraIntrinsics)>,
) -> Result<f64, RansacError> {
    match kind {
        ModelKind::Essential => {
            let (k1, k2) = intrinsics.ok_or(RansacError::CalibrationRequired)?;
            Ok(normalized_threshold(tau_px, k1, k2))
        }
        ModelKind::Fundamental => Ok(tau_px),
    }
}

/// Runs clustering (when the method needs it), summarization and LO-RANSAC.
pub fn estimate(
    matches: &[Match],
    intrinsics: Option<(&CameraIntrinsics, &CameraIntrinsics)>,
    config: &RansacConfig,
) -> Result<RansacResult, RansacError> {
    config.validate()?;
    let tau = model_threshold(config.kind, config.tau_px, intrinsics)?;
    let s = sample_size(config.kind);
    if matches.len() < s {
        return Err(RansacError::TooFewMatches { needed: s, got: matches.len() });
    }
    let total = Instant::now();
    let mut method = config.method;
    let mut fallback = false;
    if method.needs_clusters() && matches.len() < config.k {
        method = MethodSpec::DDD;
        fallback = true;
    }
    let mut clustering = None;
    let mut cluster_us = 0.0;
    if method.needs_clusters() {
        let t = Instant::now();
        let c = cluster_matches(matches, &config.cluster_params())?;
        cluster_us = t.elapsed().as_secs_f64() * 1e6;
        if method.sampling == Sampling::Center && c.num_clusters() < s {
            method = MethodSpec::DDD;
            fallback = true;
        } else {
            clustering = Some(c);
        }
    }
    let mut result = run_with_clustering(matches, clustering.as_ref(), tau, method, config)?;
    result.fallback = fallback;
    result.timings.cluster_us = cluster_us;
    result.timings.total_us = total.elapsed().as_secs_f64() * 1e6;
    Ok(result)
}

fn sample_size(kind: ModelKind) -> usize {
    match kind {
        ModelKind::Essential => 5,
        ModelKind::Fundamental => 7,
    }
}

/// LO-RANSAC on a precomputed clustering. `tau` is in model coordinates.
pub fn estimate_clustered(
    matches: &[Match],
    clustering: &Clustering,
    tau: f64,
    config: &RansacConfig,
) -> Result<RansacResult, RansacError> {
    config.validate()?;
    let s = sample_size(config.kind);
    if matches.len() < s {
        return Err(RansacError::TooFewMatches { needed: s, got: matches.len() });
    }
    if config.method.sampling == Sampling::Center && clustering.num_clusters() < s {
        return Err(RansacError::TooFewMatches {
            needed: s,
            got: clustering.num_clusters(),
        });
    }
    run_with_clustering(matches, Some(clustering), tau, config.method, config)
}

fn run_with_clustering(
    matches: &[Match],
    clustering: Option<&Clustering>,
    tau: f64,
    method: MethodSpec,
    config: &RansacConfig,
) -> Result<RansacResult, RansacError> {
    let kind = config.kind;
    let s = sample_size(kind);
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let dense = PointSet::from_matches(matches, kind);
    let (reps, summaries, rep_matches) = match clustering {
        Some(c) if method.needs_clusters() => {
            let reps_idx = c.representatives.clone();
            let reps = PointSet::from_matches(&reps_idx.iter().map(|&i| matches[i]).collect::<Vec<_>>(), kind);
            let needs_summaries = method.scoring == DataSource::Approx
                || method.refinement == DataSource::Approx
                || method.sampling == Sampling::ApproxExhaustive;
            let sums = if needs_summaries {
                Some(summarize_clustering(matches, c, kind)?)
            } else {
                None
            };
            (Some(reps), sums, reps_idx)
        }
        _ => (None, None, Vec::new()),
    };
    timings.summarize_us = t.elapsed().as_secs_f64() * 1e6;
    let problem = Problem {
        dense,
        reps,
        summaries,
        rep_matches,
    };

    let t = Instant::now();
    let scoring = problem.residuals(method.scoring);
    let n_score = scoring.len().max(1);
    let mut best: Option<(Hypothesis, f64, usize)> = None;
    let mut best_trace = Vec::new();
    let mut iterations = 0;

    let consider = |h: Hypothesis, iteration: usize, best: &mut Option<(Hypothesis, f64, usize)>, trace: &mut Vec<(usize, f64)>| {
        let (score, inl) = truncated_cost(&h.matrix(), scoring, tau);
        if best.as_ref().is_some_and(|b| score >= b.1) {
            return;
        }
        let mut cand = (h, score, inl);
        if config.lo_max_steps > 0 {
            let lo = h.refine(scoring, tau, config.lo_max_steps);
            let (ls, li) = truncated_cost(&lo.matrix(), scoring, tau);
            if ls < score {
                cand = (lo, ls, li);
            }
        }
        trace.push((iteration, cand.1));
        *best = Some(cand);
    };

    match method.sampling {
        Sampling::ApproxExhaustive => {
            let sums = problem.summaries.as_deref().expect("summaries");
            for (i, su) in sums.iter().enumerate() {
                iterations += 1;
                for model in essential_from_summary(su) {
                    if let Some(p) = pose_for_sample(&model.m, &[su.c], &[su.c_bar]) {
                        consider(Hypothesis::Pose(p), i, &mut best, &mut best_trace);
                    }
                }
            }
        }
        Sampling::Dense | Sampling::Center => {
            let pool = match method.sampling {
                Sampling::Dense => &problem.dense,
                _ => problem.reps.as_ref().expect("representatives"),
            };
            let mut needed = config.max_iterations;
            let mut x1 = Vec::with_capacity(s);
            let mut x2 = Vec::with_capacity(s);
            while iterations < needed.min(config.max_iterations) {
                let idx = sample_indices(config.seed, iterations, pool.len(), s);
                x1.clear();
                x2.clear();
                for &i in &idx {
                    let (a, b) = pool.hom(i);
                    x1.push(a);
                    x2.push(b);
                }
                let before = best.as_ref().map(|b| b.1);
                match kind {
                    ModelKind::Essential => {
                        for e in essential_5pt_points(&x1, &x2) {
                            if let Some(p) = pose_for_sample(&e, &x1, &x2) {
                                consider(Hypothesis::Pose(p), iterations, &mut best, &mut best_trace);
                            }
                        }
                    }
                    ModelKind::Fundamental => {
                        for f in fundamental_7pt_points(&x1, &x2) {
                            consider(Hypothesis::Matrix(f), iterations, &mut best, &mut best_trace);
                        }
                    }
                }
                iterations += 1;
                if let Some(b) = &best {
                    if before != Some(b.1) {
                        let w = b.2 as f64 / n_score as f64;
                        needed = stopping_iterations(w, s, config.confidence, config.min_iterations, config.max_iterations);
                    }
                }
            }
        }
    }
    timings.ransac_us = t.elapsed().as_secs_f64() * 1e6;

    let t = Instant::now();
    let converged = best.is_some();
    let hyp = match best {
        Some((h, _, _)) => {
            if config.final_max_steps > 0 {
                let refinement = problem.residuals(method.refinement);
                h.refine(refinement, tau, config.final_max_steps)
            } else {
                h
            }
        }
        None => match kind {
            ModelKind::Essential => Hypothesis::Pose(RelativePose::identity()),
            ModelKind::Fundamental => Hypothesis::Matrix(skew(&Vec3::x())),
        },
    };
    let (model, pose) = match hyp {
        Hypothesis::Pose(p) => {
            let pose = final_pose(&p, &problem, method.refinement, matches, tau);
            let m = p.matrix();
            (EpipolarModel::essential(m / m.norm()), Some(pose))
        }
        Hypothesis::Matrix(f) => (EpipolarModel::fundamental(f / f.norm()), None),
    };
    timings.refine_us = t.elapsed().as_secs_f64() * 1e6;

    let (score, _) = truncated_cost(&model.m, scoring, tau);
    let inliers = classify_inliers(&model, scoring, tau);
    let dense_inliers = config
        .dense_inlier_pass
        .then(|| classify_inliers(&model, Residuals::Points(&problem.dense), tau));
    Ok(RansacResult {
        model,
        pose,
        score,
        inliers,
        dense_inliers,
        iterations,
        timings,
        converged,
        fallback: false,
        method,
        best_trace,
    })
}

/// Re-selects the pose of the final essential matrix by cheirality over (a
/// bounded stride of) the inlier matches of the refinement data.
fn final_pose(p: &RelativePose, problem: &Problem, src: DataSource, matches: &[Match], tau: f64) -> RelativePose {
    const MAX_CHECK: usize = 256;
    let model = EpipolarModel::essential(p.matrix());
    let idx: Vec<usize> = match src {
        DataSource::Dense => (0..matches.len()).collect(),
        _ => problem.rep_matches.clone(),
    };
    let pts = match src {
        DataSource::Dense => &problem.dense,
        _ => problem.reps.as_ref().unwrap_or(&problem.dense),
    };
    let flags = classify_inliers(&model, Residuals::Points(pts), tau);
    let inl: Vec<usize> = idx.iter().zip(&flags).filter(|(_, &f)| f).map(|(&i, _)| i).collect();
    if inl.is_empty() {
        return *p;
    }
    let stride = inl.len().div_ceil(MAX_CHECK);
    let check: Vec<Match> = inl.iter().step_by(stride).map(|&i| matches[i]).collect();
    let Ok(cands) = decompose_essential(&model) else {
        return *p;
    };
    let choice = select_pose_cheirality(&cands, &check);
    if choice.low_confidence {
        *p
    } else {
        choice.pose
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_codes_round_trip_and_validate() {
        for code in ["DDD", "CAD", "CCD", "CAA", "CCA", "CCC", "AAA", "AAD"] {
            assert_eq!(MethodSpec::parse(code).unwrap().code(), code);
        }
        assert!(MethodSpec::parse("CAC").is_err());
        assert!(MethodSpec::parse("ACC").is_err());
        assert!(MethodSpec::parse("CC").is_err());
        assert!(MethodSpec::parse("XCC").is_err());
        assert_eq!(MethodSpec::parse("cca").unwrap().code(), "CCA");
        assert!(!MethodSpec::DDD.needs_clusters());
        assert!(MethodSpec::parse("DDA").unwrap().needs_clusters());
    }

    #[test]
    fn stopping_rule_edges() {
        assert_eq!(stopping_iterations(1.0, 5, 0.999, 100, 10_000), 100);
        assert_eq!(stopping_iterations(0.0, 5, 0.999, 100, 10_000), 10_000);
        assert_eq!(stopping_iterations(0.5, 5, 0.999, 1, 10_000), 218);
        assert_eq!(stopping_iterations(0.5, 5, 0.999, 300, 10_000), 300);
        assert_eq!(stopping_iterations(0.01, 5, 0.999, 100, 10_000), 10_000);
    }

    #[test]
    fn point_kernel_matches_sampson() {
        use crate::geometry::{sampson_raw, NormalizedPoint};
        let e = Mat3::new(0.1, -0.4, 0.3, 0.5, 0.05, -0.9, -0.2, 0.8, 0.02);
        let m = Match {
            p1: crate::geometry::ImagePoint::new(0.0, 0.0),
            p2: crate::geometry::ImagePoint::new(0.0, 0.0),
            n1: NormalizedPoint::new(0.13, -0.21),
            n2: NormalizedPoint::new(-0.05, 0.33),
        };
        let set = PointSet::from_matches(&[m], ModelKind::Essential);
        let (x, xb) = m.points(ModelKind::Essential);
        let a = sampson4(&model_vector(&e), &set.pts[0]);
        let b = sampson_raw(&e, &x, &xb);
        assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-300));
    }

    #[test]
    fn rank_two_projection() {
        let m = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.5, 7.0, 8.0, 10.0);
        let p = project_rank_two(&m);
        assert!(p.determinant().abs() < 1e-14);
        assert!((p.norm() - 1.0).abs() < 1e-14);
    }
}
