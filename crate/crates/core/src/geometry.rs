//! Epipolar geometry primitives: points, matches, intrinsics, models and poses,
//! together with the residuals used throughout estimation.
//!
//! Homogeneous points always carry a unit third coordinate. Vectorized models use
//! column-major order, see [`crate::summarization::model_vector`].

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("invalid intrinsics: focal lengths must be positive (fx={fx}, fy={fy})")]
    InvalidIntrinsics { fx: f64, fy: f64 },
    #[error("essential matrix has rank < 2 (singular values {0:?})")]
    RankDeficient([f64; 3]),
    #[error("operation requires an essential-kind model")]
    NotEssential,
}

/// Pixel coordinates of a keypoint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Homogeneous pixel coordinates `(u, v, 1)`.
    pub fn hom(&self) -> Vec3 {
        Vec3::new(self.u, self.v, 1.0)
    }
}

/// Calibrated homogeneous point with the third coordinate fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn hom(&self) -> Vec3 {
        Vec3::new(self.x, self.y, 1.0)
    }
}

/// A correspondence between two views, in pixel and calibrated coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Match {
    pub p1: ImagePoint,
    pub p2: ImagePoint,
    pub n1: NormalizedPoint,
    pub n2: NormalizedPoint,
}

impl Match {
    /// Match without calibration: the normalized points mirror the pixel ones.
    pub fn uncalibrated(p1: ImagePoint, p2: ImagePoint) -> Self {
        Self {
            p1,
            p2,
            n1: NormalizedPoint::new(p1.u, p1.v),
            n2: NormalizedPoint::new(p2.u, p2.v),
        }
    }

    /// Homogeneous points the given model kind acts on: calibrated points for
    /// essential matrices, pixel points for fundamental matrices.
    #[inline]
    pub fn points(&self, kind: ModelKind) -> (Vec3, Vec3) {
        match kind {
            ModelKind::Essential => (self.n1.hom(), self.n2.hom()),
            ModelKind::Fundamental => (self.p1.hom(), self.p2.hom()),
        }
    }
}

/// Pinhole intrinsics `K = [[fx, skew, cx], [0, fy, cy], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        Self::with_skew(fx, fy, cx, cy, 0.0)
    }

    pub fn with_skew(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64) -> Result<Self, GeometryError> {
        let k = Self { fx, fy, cx, cy, skew };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if ![self.fx, self.fy, self.cx, self.cy, self.skew]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(GeometryError::NonFinite("intrinsics"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics { fx: self.fx, fy: self.fy });
        }
        Ok(())
    }

    pub fn from_matrix(k: &[[f64; 3]; 3]) -> Result<Self, GeometryError> {
        Self::with_skew(k[0][0], k[1][1], k[0][2], k[1][2], k[0][1])
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.fx, self.skew, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Mean focal length in pixels.
    pub fn mean_focal(&self) -> f64 {
        0.5 * (self.fx + self.fy)
    }

    /// `K⁻¹ · (u, v, 1)`.
    pub fn normalize(&self, p: ImagePoint) -> NormalizedPoint {
        let y = (p.v - self.cy) / self.fy;
        let x = (p.u - self.cx - self.skew * y) / self.fx;
        NormalizedPoint::new(x, y)
    }

    pub fn project(&self, n: NormalizedPoint) -> ImagePoint {
        ImagePoint::new(self.fx * n.x + self.skew * n.y + self.cx, self.fy * n.y + self.cy)
    }
}

/// Attach calibrated coordinates to a pixel correspondence.
pub fn normalize_match(
    p1: ImagePoint,
    p2: ImagePoint,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Result<Match, GeometryError> {
    if !p1.is_finite() {
        return Err(GeometryError::NonFinite("p1"));
    }
    if !p2.is_finite() {
        return Err(GeometryError::NonFinite("p2"));
    }
    k1.validate()?;
    k2.validate()?;
    Ok(Match {
        p1,
        p2,
        n1: k1.normalize(p1),
        n2: k2.normalize(p2),
    })
}

/// Pixel-to-normalized threshold conversion: `τ / (0.5·(f̄₁ + f̄₂))`.
pub fn normalized_threshold(tau_px: f64, k1: &CameraIntrinsics, k2: &CameraIntrinsics) -> f64 {
    tau_px / focal_scale(k1, k2)
}

/// Scale that converts normalized residual magnitudes to pixels.
pub fn focal_scale(k1: &CameraIntrinsics, k2: &CameraIntrinsics) -> f64 {
    0.5 * (k1.mean_focal() + k2.mean_focal())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Essential,
    Fundamental,
}

/// A 3×3 essential or fundamental matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarModel {
    pub m: Mat3,
    pub kind: ModelKind,
}

impl EpipolarModel {
    pub fn essential(m: Mat3) -> Self {
        Self { m, kind: ModelKind::Essential }
    }

    pub fn fundamental(m: Mat3) -> Self {
        Self { m, kind: ModelKind::Fundamental }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { m: self.m * s, kind: self.kind }
    }

    /// Copy rescaled to unit Frobenius norm.
    pub fn normalized(&self) -> Self {
        let n = self.m.norm();
        if n > 0.0 {
            self.scaled(1.0 / n)
        } else {
            *self
        }
    }

    /// `2·M·Mᵀ·M − tr(M·Mᵀ)·M`, which vanishes exactly for essential matrices.
    pub fn essential_constraint(&self) -> Mat3 {
        let mmt = self.m * self.m.transpose();
        mmt * self.m * 2.0 - self.m * mmt.trace()
    }
}

/// Relative pose mapping view-1 coordinates into view 2: `X₂ = R·X₁ + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RelativePose {
    /// Builds a pose, rescaling `t` to unit length when it is nonzero.
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        let n = translation.norm();
        let translation = if n > 0.0 { translation / n } else { translation };
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::new(1.0, 0.0, 0.0))
    }

    /// Maps a view-1 point into the view-2 camera frame.
    pub fn transform(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub rot_deg: f64,
    pub trans_deg: f64,
    pub max_deg: f64,
}

impl PoseError {
    /// Worst-case error assigned to failed estimations.
    pub fn failure() -> Self {
        Self {
            rot_deg: 180.0,
            trans_deg: 180.0,
            max_deg: 180.0,
        }
    }
}

#[inline]
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Algebraic epipolar residual `x̄ᵀ·M·x`.
pub fn epipolar_residual(model: &EpipolarModel, m: &Match) -> f64 {
    let (x, xb) = m.points(model.kind);
    xb.dot(&(model.m * x))
}

/// Raw Sampson error on homogeneous points (both with unit third coordinate).
#[inline]
pub fn sampson_raw(e: &Mat3, x: &Vec3, xb: &Vec3) -> f64 {
    let ex0 = e[(0, 0)] * x.x + e[(0, 1)] * x.y + e[(0, 2)];
    let ex1 = e[(1, 0)] * x.x + e[(1, 1)] * x.y + e[(1, 2)];
    let ex2 = e[(2, 0)] * x.x + e[(2, 1)] * x.y + e[(2, 2)];
    let etx0 = e[(0, 0)] * xb.x + e[(1, 0)] * xb.y + e[(2, 0)];
    let etx1 = e[(0, 1)] * xb.x + e[(1, 1)] * xb.y + e[(2, 1)];
    let c = xb.x * ex0 + xb.y * ex1 + ex2;
    let denom = ex0 * ex0 + ex1 * ex1 + etx0 * etx0 + etx1 * etx1;
    if denom > 0.0 {
        c * c / denom
    } else {
        f64::INFINITY
    }
}

/// Squared Sampson error. A vanishing denominator yields `+∞`.
pub fn sampson_error(model: &EpipolarModel, m: &Match) -> f64 {
    let (x, xb) = m.points(model.kind);
    let e = &model.m;
    let ex = e * x;
    let etx = e.transpose() * xb;
    let c = xb.dot(&ex);
    let denom = ex.x * ex.x + ex.y * ex.y + etx.x * etx.x + etx.y * etx.y;
    if denom > 0.0 {
        c * c / denom
    } else {
        f64::INFINITY
    }
}

/// Sum of the squared point-to-epipolar-line distances in both images.
pub fn symmetric_epipolar_distance(model: &EpipolarModel, m: &Match) -> f64 {
    let (x, xb) = m.points(model.kind);
    let e = &model.m;
    let ex = e * x;
    let etx = e.transpose() * xb;
    let c = xb.dot(&ex);
    let d1 = ex.x * ex.x + ex.y * ex.y;
    let d2 = etx.x * etx.x + etx.y * etx.y;
    if d1 > 0.0 && d2 > 0.0 {
        c * c / d1 + c * c / d2
    } else {
        f64::INFINITY
    }
}

/// `E = [t]ₓ·R`.
pub fn essential_from_pose(pose: &RelativePose) -> EpipolarModel {
    EpipolarModel::essential(skew(&pose.translation) * pose.rotation)
}

/// The four `(R, ±t)` factorizations of an essential matrix.
pub fn decompose_essential(model: &EpipolarModel) -> Result<[RelativePose; 4], GeometryError> {
    if model.kind != ModelKind::Essential {
        return Err(GeometryError::NotEssential);
    }
    if !model.m.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::NonFinite("essential matrix"));
    }
    let svd = model.m.svd(true, true);
    let (mut u, mut v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sv = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[1] > 1e-10 * sv[0]) {
        return Err(GeometryError::RankDeficient(sv));
    }
    // nalgebra sorts singular values in decreasing order; the null direction is the
    // last column of U / row of Vᵀ.
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v_t.determinant() < 0.0 {
        v_t = -v_t;
    }
    let w = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v_t;
    let r2 = u * w.transpose() * v_t;
    let t: Vec3 = u.column(2).into_owned();
    Ok([
        RelativePose::new(r1, t),
        RelativePose::new(r1, -t),
        RelativePose::new(r2, t),
        RelativePose::new(r2, -t),
    ])
}

/// Closed-form factorization of an exact essential matrix without an SVD, using
/// `R = cof(E) ∓ [t]ₓ·E` for `‖E‖²_F = 2` and `t` its unit left null vector.
///
/// Intended for solver outputs that satisfy the essential constraints to rounding.
pub fn essential_motions_fast(e: &Mat3) -> Option<[RelativePose; 4]> {
    let norm = e.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let e = e * (std::f64::consts::SQRT_2 / norm);
    let c0: Vec3 = e.column(0).into_owned();
    let c1: Vec3 = e.column(1).into_owned();
    let c2: Vec3 = e.column(2).into_owned();
    let cands = [c0.cross(&c1), c0.cross(&c2), c1.cross(&c2)];
    let t = cands
        .iter()
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
        .copied()?;
    let tn = t.norm();
    if !(tn > 0.0) {
        return None;
    }
    let t = t / tn;
    let cof = Mat3::new(
        e[(1, 1)] * e[(2, 2)] - e[(1, 2)] * e[(2, 1)],
        e[(1, 2)] * e[(2, 0)] - e[(1, 0)] * e[(2, 2)],
        e[(1, 0)] * e[(2, 1)] - e[(1, 1)] * e[(2, 0)],
        e[(0, 2)] * e[(2, 1)] - e[(0, 1)] * e[(2, 2)],
        e[(0, 0)] * e[(2, 2)] - e[(0, 2)] * e[(2, 0)],
        e[(0, 1)] * e[(2, 0)] - e[(0, 0)] * e[(2, 1)],
        e[(0, 1)] * e[(1, 2)] - e[(0, 2)] * e[(1, 1)],
        e[(0, 2)] * e[(1, 0)] - e[(0, 0)] * e[(1, 2)],
        e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)],
    );
    let te = skew(&t) * e;
    let r1 = orthonormalize(&(cof - te));
    let r2 = orthonormalize(&(cof + te));
    Some([
        RelativePose { rotation: r1, translation: t },
        RelativePose { rotation: r1, translation: -t },
        RelativePose { rotation: r2, translation: t },
        RelativePose { rotation: r2, translation: -t },
    ])
}

/// Gram-Schmidt re-orthonormalization of a nearly orthonormal matrix (rows).
pub(crate) fn orthonormalize(r: &Mat3) -> Mat3 {
    let a: Vec3 = r.row(0).transpose().normalize();
    let b0: Vec3 = r.row(1).transpose();
    let b = (b0 - a * a.dot(&b0)).normalize();
    let c = a.cross(&b);
    Mat3::from_rows(&[a.transpose(), b.transpose(), c.transpose()])
}

/// Midpoint triangulation; returns the depths of the point in both cameras, or
/// `None` for (near) parallel rays.
#[inline]
pub fn midpoint_depths(pose: &RelativePose, x: &Vec3, xb: &Vec3) -> Option<(f64, f64)> {
    // Camera-2 center and viewing ray expressed in the view-1 frame.
    let rt = pose.rotation.transpose();
    let c2 = -(rt * pose.translation);
    let d1 = *x;
    let d2 = rt * xb;
    let a = d1.dot(&d1);
    let b = d1.dot(&d2);
    let c = d2.dot(&d2);
    let p = d1.dot(&c2);
    let q = d2.dot(&c2);
    let det = b * b - a * c;
    if det.abs() <= 1e-14 * a * c {
        return None;
    }
    let l1 = (b * q - c * p) / det;
    let l2 = (a * q - b * p) / det;
    let mid = (d1 * l1 + (c2 + d2 * l2)) * 0.5;
    let z1 = mid.z;
    let z2 = pose.transform(&mid).z;
    Some((z1, z2))
}

/// Whether the triangulated point lies in front of both cameras.
#[inline]
pub fn in_front(pose: &RelativePose, x: &Vec3, xb: &Vec3) -> bool {
    matches!(midpoint_depths(pose, x, xb), Some((z1, z2)) if z1 > 0.0 && z2 > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheiralityChoice {
    pub pose: RelativePose,
    pub index: usize,
    pub positive: usize,
    pub low_confidence: bool,
}

/// Picks the candidate with the most points in front of both cameras. Ties keep
/// the earliest candidate; zero support everywhere sets `low_confidence`.
pub fn select_pose_cheirality(candidates: &[RelativePose], matches: &[Match]) -> CheiralityChoice {
    assert!(!candidates.is_empty(), "at least one candidate pose is required");
    let mut best = (0usize, 0usize);
    for (i, cand) in candidates.iter().enumerate() {
        let count = matches
            .iter()
            .filter(|m| in_front(cand, &m.n1.hom(), &m.n2.hom()))
            .count();
        if count > best.1 {
            best = (i, count);
        }
    }
    CheiralityChoice {
        pose: candidates[best.0],
        index: best.0,
        positive: best.1,
        low_confidence: best.1 == 0,
    }
}

/// Angle of a rotation matrix in degrees.
pub fn rotation_angle_deg(r: &Mat3) -> f64 {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Angle between two directions in degrees; `None` if either is (near) zero.
pub fn direction_angle_deg(a: &Vec3, b: &Vec3) -> Option<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na < 1e-9 || nb < 1e-9 {
        return None;
    }
    Some((a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees())
}

pub fn pose_error(est: &RelativePose, gt: &RelativePose) -> PoseError {
    let rot_deg = rotation_angle_deg(&(est.rotation.transpose() * gt.rotation));
    let trans_deg = if gt.translation.norm() < 1e-9 {
        0.0
    } else {
        direction_angle_deg(&est.translation, &gt.translation).unwrap_or(180.0)
    };
    PoseError {
        rot_deg,
        trans_deg,
        max_deg: rot_deg.max(trans_deg),
    }
}

/// Rotation from an axis-angle vector (Rodrigues).
pub fn rotation_from_axis_angle(w: &Vec3) -> Mat3 {
    let theta = w.norm();
    if theta < 1e-12 {
        return Mat3::identity() + skew(w);
    }
    let k = skew(&(w / theta));
    Mat3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e_x() -> EpipolarModel {
        EpipolarModel::essential(Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0))
    }

    fn m_from(x: (f64, f64), xb: (f64, f64)) -> Match {
        Match {
            n1: NormalizedPoint::new(x.0, x.1),
            n2: NormalizedPoint::new(xb.0, xb.1),
            ..Default::default()
        }
    }

    #[test]
    fn principal_point_maps_to_origin() {
        let k = CameraIntrinsics::new(800.0, 810.0, 320.0, 240.0).unwrap();
        let m = normalize_match(ImagePoint::new(320.0, 240.0), ImagePoint::new(1120.0, 240.0), &k, &k)
            .unwrap();
        assert_eq!(m.n1, NormalizedPoint::new(0.0, 0.0));
        assert_eq!(m.n2, NormalizedPoint::new(1.0, 0.0));
    }

    #[test]
    fn normalize_rejects_nan() {
        let k = CameraIntrinsics::new(800.0, 800.0, 320.0, 240.0).unwrap();
        let err = normalize_match(ImagePoint::new(f64::NAN, 0.0), ImagePoint::new(0.0, 0.0), &k, &k);
        assert_eq!(err, Err(GeometryError::NonFinite("p1")));
        assert!(CameraIntrinsics::new(-1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn residuals_direct_substitution() {
        let e = e_x();
        assert_eq!(epipolar_residual(&e, &m_from((0.0, 0.0), (0.0, 0.0))), 0.0);
        let m = m_from((0.0, 1.0), (0.0, 0.0));
        assert_eq!(epipolar_residual(&e, &m), 1.0);
        assert_eq!(sampson_error(&e, &m_from((0.0, 0.0), (0.0, 0.0))), 0.0);
        assert_eq!(sampson_error(&e, &m), 0.5);
        assert_eq!(symmetric_epipolar_distance(&e, &m), 2.0);
        assert_eq!(sampson_raw(&e.m, &m.n1.hom(), &m.n2.hom()), 0.5);
        assert_relative_eq!(sampson_error(&e.scaled(3.7), &m), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_sampson_is_infinite() {
        let e = EpipolarModel::essential(Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0));
        assert!(sampson_error(&e, &m_from((0.3, 0.1), (0.2, 0.4))).is_infinite());
        assert!(symmetric_epipolar_distance(&e, &m_from((0.3, 0.1), (0.2, 0.4))).is_infinite());
    }

    #[test]
    fn essential_from_simple_poses() {
        let e = essential_from_pose(&RelativePose::new(Mat3::identity(), Vec3::new(1.0, 0.0, 0.0)));
        assert_eq!(e.m, e_x().m);
        let e = essential_from_pose(&RelativePose::new(Mat3::identity(), Vec3::new(0.0, 0.0, 1.0)));
        assert_eq!(e.m, Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn decompose_contains_both_signs() {
        let cands = decompose_essential(&e_x()).unwrap();
        let has = |t: Vec3| {
            cands.iter().any(|p| {
                (p.rotation - Mat3::identity()).norm() < 1e-12 && (p.translation - t).norm() < 1e-12
            })
        };
        assert!(has(Vec3::new(1.0, 0.0, 0.0)));
        assert!(has(Vec3::new(-1.0, 0.0, 0.0)));
    }

    #[test]
    fn decompose_rejects_rank_one() {
        let e = EpipolarModel::essential(Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(matches!(decompose_essential(&e), Err(GeometryError::RankDeficient(_))));
        let f = EpipolarModel::fundamental(e_x().m);
        assert_eq!(decompose_essential(&f), Err(GeometryError::NotEssential));
    }

    #[test]
    fn one_point_cheirality_picks_sign() {
        let pose = RelativePose::new(Mat3::identity(), Vec3::new(1.0, 0.0, 0.0));
        // Point at (0, 0, 5) in view 1 → (1, 0, 5) in view 2.
        let m = m_from((0.0, 0.0), (0.2, 0.0));
        let cands = decompose_essential(&essential_from_pose(&pose)).unwrap();
        let choice = select_pose_cheirality(&cands, &[m]);
        assert!(!choice.low_confidence);
        assert!((choice.pose.translation - pose.translation).norm() < 1e-12);
        assert!((choice.pose.rotation - pose.rotation).norm() < 1e-12);
    }

    #[test]
    fn behind_both_cameras_is_low_confidence() {
        let pose = RelativePose::new(Mat3::identity(), Vec3::new(1.0, 0.0, 0.0));
        // Point at (0, 0, -5) in view 1 → (1, 0, -5) in view 2.
        let m = m_from((0.0, 0.0), (-0.2, 0.0));
        let choice = select_pose_cheirality(&[pose], &[m]);
        assert!(choice.low_confidence);
        assert_eq!(choice.index, 0);
    }

    #[test]
    fn pose_error_rotation_about_axis() {
        let gt = RelativePose::new(Mat3::identity(), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(pose_error(&gt, &gt).max_deg, 0.0);
        let r = rotation_from_axis_angle(&(Vec3::new(1.0, 2.0, -0.5).normalize() * 5f64.to_radians()));
        let est = RelativePose::new(r, gt.translation);
        let err = pose_error(&est, &gt);
        assert_relative_eq!(err.rot_deg, 5.0, epsilon = 1e-9);
        assert_relative_eq!(err.max_deg, 5.0, epsilon = 1e-9);
        let zero = RelativePose { rotation: Mat3::identity(), translation: Vec3::zeros() };
        assert_eq!(pose_error(&gt, &zero).trans_deg, 0.0);
    }
}
