//! Pose-error AUC, fundamental-matrix recall and small statistics helpers.

use crate::geometry::{EpipolarModel, ImagePoint};

/// Thresholds (degrees) of the headline AUC columns.
pub const AUC_THRESHOLDS: [f64; 3] = [5.0, 10.0, 20.0];

/// Area under the recall curve up to each threshold, normalized to `[0, 1]`.
///
/// Integrates the recall step function exactly: `Σ_{eᵢ<t} (t − eᵢ) / (n·t)`.
/// Non-finite errors count as failures.
pub fn auc(errors: &[f64], thresholds: &[f64]) -> Vec<f64> {
    if errors.is_empty() {
        return Vec::new();
    }
    let n = errors.len() as f64;
    thresholds
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return 0.0;
            }
            let area: f64 = errors
                .iter()
                .filter(|e| e.is_finite() && **e < t)
                .map(|&e| t - e.max(0.0))
                .sum();
            area / (n * t) + 0.0
        })
        .collect()
}

/// Pixel distances of `p2` to the epipolar line `F·p1` and of `p1` to `Fᵀ·p2`.
pub fn point_line_distances(f: &EpipolarModel, p1: ImagePoint, p2: ImagePoint) -> (f64, f64) {
    let x = p1.hom();
    let xb = p2.hom();
    let l2 = f.m * x;
    let l1 = f.m.transpose() * xb;
    let c = xb.dot(&l2).abs();
    let d2 = c / (l2.x * l2.x + l2.y * l2.y).sqrt();
    let d1 = c / (l1.x * l1.x + l1.y * l1.y).sqrt();
    (d1, d2)
}

/// Fraction of verification matches whose larger point-to-line distance is
/// strictly below `threshold_px`.
pub fn wxbs_recall(f: &EpipolarModel, gt_matches: &[[f64; 4]], threshold_px: f64) -> f64 {
    if gt_matches.is_empty() {
        return 0.0;
    }
    let ok = gt_matches
        .iter()
        .filter(|q| {
            let (d1, d2) = point_line_distances(f, ImagePoint::new(q[0], q[1]), ImagePoint::new(q[2], q[3]));
            d1.max(d2) < threshold_px
        })
        .count();
    ok as f64 / gt_matches.len() as f64
}

/// Median of the finite values (mean of the two middle values for even counts).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolated percentile, `q` in `[0, 100]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = (q.clamp(0.0, 100.0) / 100.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
