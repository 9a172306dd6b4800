//! Python bindings: estimation, minimal solvers, clustering, cluster summaries
//! and the synthetic-scene generator.

use densum::clustering::{cluster_matches, ClusterParams, ClusterSpace};
use densum::geometry::{pose_error as pose_err, CameraIntrinsics, EpipolarModel, Mat3, Match, ModelKind, NormalizedPoint, RelativePose, Vec3};
use densum::harness::io::PairRecord;
use densum::harness::metrics;
use densum::harness::synth::{synth_pairs as synth, SynthConfig};
use densum::ransac::{estimate as run_estimate, MethodSpec, RansacConfig};
use densum::solvers;
use densum::summarization::{approx_cluster_residual, summarize_clustering, ClusterSummary};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type Rows = [[f64; 3]; 3];

fn to_mat(r: &Rows) -> Mat3 {
    Mat3::from_fn(|i, j| r[i][j])
}

fn to_rows(m: &Mat3) -> Rows {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_model(s: &str) -> PyResult<ModelKind> {
    match s.to_ascii_lowercase().as_str() {
        "essential" => Ok(ModelKind::Essential),
        "fundamental" => Ok(ModelKind::Fundamental),
        _ => Err(PyValueError::new_err(format!("unknown model {s:?}"))),
    }
}

fn parse_space(s: &str) -> PyResult<ClusterSpace> {
    ClusterSpace::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown cluster space {s:?}")))
}

fn prepare(matches: Vec<[f64; 4]>, k1: Option<Rows>, k2: Option<Rows>, kind: ModelKind) -> PyResult<(Vec<Match>, Option<(CameraIntrinsics, CameraIntrinsics)>)> {
    let rec = PairRecord {
        pair_id: "python".into(),
        k1,
        k2,
        matches,
        gt: None,
        gt_matches: None,
    };
    let ks = rec.intrinsics().map_err(value_err)?;
    let ms = rec.to_matches(kind).map_err(value_err)?;
    Ok((ms, ks))
}

/// Result of one robust estimation.
#[pyclass(module = "densum", get_all, frozen)]
struct Estimate {
    /// Estimated matrix scaled to unit Frobenius norm.
    model: Rows,
    rotation: Option<Rows>,
    translation: Option<[f64; 3]>,
    score: f64,
    inlier_count: usize,
    iterations: usize,
    /// Method actually run (differs from the request after a fallback).
    method: String,
    fallback: bool,
    converged: bool,
    cluster_us: f64,
    summarize_us: f64,
    ransac_us: f64,
    refine_us: f64,
    total_us: f64,
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(method={}, score={:.6e}, inliers={}, iterations={})",
            self.method, self.score, self.inlier_count, self.iterations
        )
    }
}

/// LO-RANSAC on pixel matches `[x1, y1, x2, y2]` with a method code such as "CCA".
#[pyfunction]
#[pyo3(signature = (matches, k1=None, k2=None, method="DDD", tau_px=1.0, k=128, cluster_space="4d", seed=0, model="essential", max_iters=10_000, confidence=0.999))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    py: Python<'_>,
    matches: Vec<[f64; 4]>,
    k1: Option<Rows>,
    k2: Option<Rows>,
    method: &str,
    tau_px: f64,
    k: usize,
    cluster_space: &str,
    seed: u64,
    model: &str,
    max_iters: usize,
    confidence: f64,
) -> PyResult<Estimate> {
    let kind = parse_model(model)?;
    let (ms, ks) = prepare(matches, k1, k2, kind)?;
    let cfg = RansacConfig {
        method: MethodSpec::parse(method).map_err(value_err)?,
        kind,
        tau_px,
        max_iterations: max_iters,
        min_iterations: RansacConfig::default().min_iterations.min(max_iters),
        confidence,
        seed,
        k,
        cluster_space: parse_space(cluster_space)?,
        ..Default::default()
    };
    let r = py
        .detach(|| run_estimate(&ms, ks.as_ref().map(|(a, b)| (a, b)), &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let t = r.timings;
    Ok(Estimate {
        model: to_rows(&r.model.normalized().m),
        rotation: r.pose.map(|p| to_rows(&p.rotation)),
        translation: r.pose.map(|p| [p.translation.x, p.translation.y, p.translation.z]),
        score: r.score,
        inlier_count: r.inlier_count(),
        iterations: r.iterations,
        method: r.method.code(),
        fallback: r.fallback,
        converged: r.converged,
        cluster_us: t.cluster_us,
        summarize_us: t.summarize_us,
        ransac_us: t.ransac_us,
        refine_us: t.refine_us,
        total_us: t.total_us,
    })
}

/// Essential matrices from five calibrated correspondences.
#[pyfunction]
fn essential_5pt(x1: Vec<[f64; 2]>, x2: Vec<[f64; 2]>) -> PyResult<Vec<Rows>> {
    if x1.len() != 5 || x2.len() != 5 {
        return Err(PyValueError::new_err("exactly five correspondences are required"));
    }
    let ms: Vec<Match> = x1
        .iter()
        .zip(&x2)
        .map(|(a, b)| {
            let (n1, n2) = (NormalizedPoint::new(a[0], a[1]), NormalizedPoint::new(b[0], b[1]));
            Match { n1, n2, ..Default::default() }
        })
        .collect();
    Ok(solvers::essential_5pt(&ms).iter().map(|e| to_rows(&e.m)).collect())
}

/// Fundamental matrices from seven pixel correspondences.
#[pyfunction]
fn fundamental_7pt(p1: Vec<[f64; 2]>, p2: Vec<[f64; 2]>) -> PyResult<Vec<Rows>> {
    if p1.len() != 7 || p2.len() != 7 {
        return Err(PyValueError::new_err("exactly seven correspondences are required"));
    }
    let x1: Vec<Vec3> = p1.iter().map(|p| Vec3::new(p[0], p[1], 1.0)).collect();
    let x2: Vec<Vec3> = p2.iter().map(|p| Vec3::new(p[0], p[1], 1.0)).collect();
    Ok(solvers::fundamental_7pt_points(&x1, &x2).iter().map(to_rows).collect())
}

/// Squared Sampson error of `(x1, x2)` under a 3×3 epipolar matrix.
#[pyfunction]
fn sampson_error(model: Rows, x1: [f64; 2], x2: [f64; 2]) -> f64 {
    densum::geometry::sampson_raw(&to_mat(&model), &Vec3::new(x1[0], x1[1], 1.0), &Vec3::new(x2[0], x2[1], 1.0))
}

/// Cluster assignment and representative match per cluster.
#[pyfunction]
#[pyo3(signature = (matches, k=128, cluster_space="4d", seed=0, max_iter=5, k1=None, k2=None))]
fn cluster(
    matches: Vec<[f64; 4]>,
    k: usize,
    cluster_space: &str,
    seed: u64,
    max_iter: usize,
    k1: Option<Rows>,
    k2: Option<Rows>,
) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let kind = if k1.is_some() && k2.is_some() { ModelKind::Essential } else { ModelKind::Fundamental };
    let (ms, _) = prepare(matches, k1, k2, kind)?;
    let params = ClusterParams {
        space: parse_space(cluster_space)?,
        k,
        max_iter,
        seed,
        ..Default::default()
    };
    let c = cluster_matches(&ms, &params).map_err(value_err)?;
    Ok((c.assignment, c.representatives))
}

/// Cluster summary: representative, size and reduced measurement matrix.
#[pyclass(module = "densum", frozen)]
struct Summary(ClusterSummary);

#[pymethods]
impl Summary {
    #[getter]
    fn size(&self) -> usize {
        self.0.size
    }

    #[getter]
    fn representative(&self) -> Option<usize> {
        self.0.rep_index
    }

    /// Upper-triangular 9×9 factor as nested lists.
    #[getter]
    fn reduced_matrix(&self) -> Vec<Vec<f64>> {
        self.0.m.iter().map(|r| r.to_vec()).collect()
    }

    /// Approximate sum of the members' Sampson errors under `model`.
    fn approx_residual(&self, model: Rows) -> f64 {
        let m = match self.0.kind {
            ModelKind::Essential => EpipolarModel::essential(to_mat(&model)),
            ModelKind::Fundamental => EpipolarModel::fundamental(to_mat(&model)),
        };
        approx_cluster_residual(&m, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("Summary(size={}, representative={:?})", self.0.size, self.0.rep_index)
    }
}

/// Clusters the matches and summarizes every cluster. With both intrinsics
/// the summaries act on essential matrices, otherwise on fundamental ones.
#[pyfunction]
#[pyo3(signature = (matches, k1=None, k2=None, k=128, cluster_space="4d", seed=0))]
fn summarize(
    matches: Vec<[f64; 4]>,
    k1: Option<Rows>,
    k2: Option<Rows>,
    k: usize,
    cluster_space: &str,
    seed: u64,
) -> PyResult<Vec<Summary>> {
    let kind = if k1.is_some() && k2.is_some() { ModelKind::Essential } else { ModelKind::Fundamental };
    let (ms, _) = prepare(matches, k1, k2, kind)?;
    let params = ClusterParams {
        space: parse_space(cluster_space)?,
        k,
        seed,
        ..Default::default()
    };
    let c = cluster_matches(&ms, &params).map_err(value_err)?;
    let sums = summarize_clustering(&ms, &c, kind).map_err(value_err)?;
    Ok(sums.into_iter().map(Summary).collect())
}

/// Synthetic pairs as dictionaries in the pair-file schema.
#[pyfunction]
#[pyo3(signature = (n_pairs=10, n_matches=10_000, noise_px=1.0, outlier_frac=0.3, seed=0, gt_matches=0))]
fn synth_pairs<'py>(
    py: Python<'py>,
    n_pairs: usize,
    n_matches: usize,
    noise_px: f64,
    outlier_frac: f64,
    seed: u64,
    gt_matches: usize,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let cfg = SynthConfig {
        n_pairs,
        n_matches,
        noise_px,
        outlier_frac,
        seed,
        n_gt_matches: gt_matches,
        ..Default::default()
    };
    let loads = py.import("json")?.getattr("loads")?;
    let records: Vec<_> = synth(&cfg).map_err(value_err)?.collect();
    records
        .iter()
        .map(|rec| {
            let text = serde_json::to_string(rec).map_err(value_err)?;
            loads.call1((text,))
        })
        .collect()
}

/// `(rotation, translation direction, max)` angular errors in degrees.
#[pyfunction]
fn pose_error(r_est: Rows, t_est: [f64; 3], r_gt: Rows, t_gt: [f64; 3]) -> (f64, f64, f64) {
    let est = RelativePose::new(to_mat(&r_est), Vec3::from(t_est));
    let gt = RelativePose::new(to_mat(&r_gt), Vec3::from(t_gt));
    let e = pose_err(&est, &gt);
    (e.rot_deg, e.trans_deg, e.max_deg)
}

/// Normalized area under the pose-error recall curve at each threshold.
#[pyfunction]
#[pyo3(signature = (errors, thresholds=vec![5.0, 10.0, 20.0]))]
fn auc(errors: Vec<f64>, thresholds: Vec<f64>) -> Vec<f64> {
    metrics::auc(&errors, &thresholds)
}

#[pymodule]
#[pyo3(name = "densum")]
fn densum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Estimate>()?;
    m.add_class::<Summary>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(essential_5pt, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_7pt, m)?)?;
    m.add_function(wrap_pyfunction!(sampson_error, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(synth_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(pose_error, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
