//! Cluster summaries and the three scoring backends.
//!
//! Every cluster is replaced by its representative match and a 9×9 upper
//! triangular reduced measurement matrix `M` with `MᵀM = Σ aᵢaᵢᵀ`, where
//! `aᵢ = xᵢ ⊗ x̄ᵢ` is the constraint row of a member. For any model vector `e`
//! this gives `‖Me‖² = Σ (x̄ᵢᵀ E xᵢ)²` at a cost independent of the cluster size.
//! Dividing by the representative's Sampson denominator approximates the sum of
//! the members' Sampson errors.

use nalgebra::SMatrix;
use thiserror::Error;

use crate::clustering::Clustering;
use crate::geometry::{sampson_raw, EpipolarModel, Mat3, Match, ModelKind, Vec3};

pub type Mat9 = SMatrix<f64, 9, 9>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummaryError {
    #[error("a cluster summary needs at least one member")]
    EmptyCluster,
    #[error("non-finite coordinates in cluster member {0}")]
    NonFinite(usize),
    #[error("representative is not a member of its cluster")]
    RepresentativeNotMember,
}

/// Constraint row `x ⊗ x̄`, laid out so that `a · vec(E) = x̄ᵀ E x` with the
/// column-major vectorization of [`model_vector`].
#[inline]
pub fn constraint_row(x: &Vec3, xb: &Vec3) -> [f64; 9] {
    [
        x[0] * xb[0],
        x[0] * xb[1],
        x[0] * xb[2],
        x[1] * xb[0],
        x[1] * xb[1],
        x[1] * xb[2],
        x[2] * xb[0],
        x[2] * xb[1],
        x[2] * xb[2],
    ]
}

/// Column-major vectorization: `e[3·col + row] = E[row, col]`.
#[inline]
pub fn model_vector(e: &Mat3) -> [f64; 9] {
    let mut out = [0.0; 9];
    out.copy_from_slice(e.as_slice());
    out
}

pub fn matrix_from_vector(e: &[f64; 9]) -> Mat3 {
    Mat3::from_column_slice(e)
}

/// Representative match, cluster size and reduced measurement matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    /// Representative point in image 1 (homogeneous, unit last coordinate).
    pub c: Vec3,
    /// Representative point in image 2.
    pub c_bar: Vec3,
    pub size: usize,
    /// Upper triangular factor, stored row-major.
    pub m: [[f64; 9]; 9],
    pub kind: ModelKind,
    /// Index of the representative in the summarized match list, if known.
    pub rep_index: Option<usize>,
}

impl ClusterSummary {
    pub fn reduced_matrix(&self) -> Mat9 {
        Mat9::from_fn(|r, c| self.m[r][c])
    }

    /// `MᵀM`, equal to the Gram matrix of the members' constraint rows.
    pub fn gram(&self) -> Mat9 {
        let m = self.reduced_matrix();
        m.transpose() * m
    }

    /// `‖M e‖²`.
    #[inline]
    pub fn weighted_norm_sq(&self, e: &[f64; 9]) -> f64 {
        let mut acc = 0.0;
        for i in 0..9 {
            let row = &self.m[i];
            let mut s = 0.0;
            for j in i..9 {
                s += row[j] * e[j];
            }
            acc += s * s;
        }
        acc
    }

    /// Sampson denominator of the representative, `‖E₁₂c‖² + ‖(Eᵀ)₁₂c̄‖²`.
    #[inline]
    pub fn alpha(&self, e: &Mat3) -> f64 {
        let (a, b) = self.half_alphas(e);
        a + b
    }

    #[inline]
    fn half_alphas(&self, e: &Mat3) -> (f64, f64) {
        let c = &self.c;
        let cb = &self.c_bar;
        let ex0 = e[(0, 0)] * c.x + e[(0, 1)] * c.y + e[(0, 2)] * c.z;
        let ex1 = e[(1, 0)] * c.x + e[(1, 1)] * c.y + e[(1, 2)] * c.z;
        let etx0 = e[(0, 0)] * cb.x + e[(1, 0)] * cb.y + e[(2, 0)] * cb.z;
        let etx1 = e[(0, 1)] * cb.x + e[(1, 1)] * cb.y + e[(2, 1)] * cb.z;
        (ex0 * ex0 + ex1 * ex1, etx0 * etx0 + etx1 * etx1)
    }
}

/// Symmetric 9×9 accumulator over constraint rows (upper triangle only).
#[derive(Debug, Clone, Copy)]
struct GramAccumulator {
    g: [[f64; 9]; 9],
}

impl GramAccumulator {
    fn new() -> Self {
        Self { g: [[0.0; 9]; 9] }
    }

    #[inline]
    fn add(&mut self, a: &[f64; 9]) {
        for i in 0..9 {
            let ai = a[i];
            let row = &mut self.g[i];
            for j in i..9 {
                row[j] += ai * a[j];
            }
        }
    }

    /// Upper Cholesky factor `M` with `MᵀM = G`. Pivots that vanish to rounding
    /// (the Gram matrix is singular for clusters of fewer than nine members) give
    /// zero rows, which keeps the factorization exact on the range of `G`.
    /// The cut-off is relative to each column's diagonal entry so that small
    /// genuine pivots (a near-zero entry of a singleton's row) survive.
    fn factor(&self) -> [[f64; 9]; 9] {
        let g = &self.g;
        let mut m = [[0.0f64; 9]; 9];
        for j in 0..9 {
            let mut d = g[j][j];
            for k in 0..j {
                d -= m[k][j] * m[k][j];
            }
            if !(d > 1e-13 * g[j][j]) {
                continue;
            }
            let p = d.sqrt();
            m[j][j] = p;
            for i in (j + 1)..9 {
                let mut s = g[j][i];
                for k in 0..j {
                    s -= m[k][j] * m[k][i];
                }
                m[j][i] = s / p;
            }
        }
        m
    }
}

/// Builds the summary of one cluster.
pub fn summarize_cluster(members: &[Match], rep: &Match, kind: ModelKind) -> Result<ClusterSummary, SummaryError> {
    if members.is_empty() {
        return Err(SummaryError::EmptyCluster);
    }
    let mut acc = GramAccumulator::new();
    let mut rep_found = false;
    for (i, m) in members.iter().enumerate() {
        let (x, xb) = m.points(kind);
        if !(x.iter().chain(xb.iter()).all(|v| v.is_finite())) {
            return Err(SummaryError::NonFinite(i));
        }
        rep_found |= m == rep;
        acc.add(&constraint_row(&x, &xb));
    }
    if !rep_found {
        return Err(SummaryError::RepresentativeNotMember);
    }
    let (c, c_bar) = rep.points(kind);
    Ok(ClusterSummary {
        c,
        c_bar,
        size: members.len(),
        m: acc.factor(),
        kind,
        rep_index: None,
    })
}

/// Summaries of every cluster of a clustering with representatives selected.
pub fn summarize_clustering(
    matches: &[Match],
    clustering: &Clustering,
    kind: ModelKind,
) -> Result<Vec<ClusterSummary>, SummaryError> {
    let k = clustering.num_clusters();
    let mut accs = vec![GramAccumulator::new(); k];
    let mut sizes = vec![0usize; k];
    for (i, (m, &a)) in matches.iter().zip(&clustering.assignment).enumerate() {
        let (x, xb) = m.points(kind);
        if !(x.iter().chain(xb.iter()).all(|v| v.is_finite())) {
            return Err(SummaryError::NonFinite(i));
        }
        accs[a].add(&constraint_row(&x, &xb));
        sizes[a] += 1;
    }
    let mut out = Vec::with_capacity(k);
    for (c, acc) in accs.iter().enumerate() {
        if sizes[c] == 0 {
            return Err(SummaryError::EmptyCluster);
        }
        let rep = clustering.representatives[c];
        if clustering.assignment[rep] != c {
            return Err(SummaryError::RepresentativeNotMember);
        }
        let (cp, cbp) = matches[rep].points(kind);
        out.push(ClusterSummary {
            c: cp,
            c_bar: cbp,
            size: sizes[c],
            m: acc.factor(),
            kind,
            rep_index: Some(rep),
        });
    }
    Ok(out)
}

/// Approximate sum of the cluster's Sampson errors, `‖Me‖² / α(E)`.
#[inline]
pub fn approx_cluster_residual(model: &EpipolarModel, s: &ClusterSummary) -> f64 {
    let e = model_vector(&model.m);
    let alpha = s.alpha(&model.m);
    if alpha > 0.0 {
        s.weighted_norm_sq(&e) / alpha
    } else {
        f64::INFINITY
    }
}

/// Approximate sum of symmetric epipolar distances over the cluster.
pub fn approx_symmetric_epipolar(model: &EpipolarModel, s: &ClusterSummary) -> f64 {
    let e = model_vector(&model.m);
    let (d1, d2) = s.half_alphas(&model.m);
    if d1 > 0.0 && d2 > 0.0 {
        let n = s.weighted_norm_sq(&e);
        n / d1 + n / d2
    } else {
        f64::INFINITY
    }
}

/// Truncated score and number of inliers (matches or clusters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub score: f64,
    pub inliers: usize,
}

/// `Σ min{Sampson, τ²}` over all matches.
pub fn cost_dense(model: &EpipolarModel, matches: &[Match], tau: f64) -> Score {
    let tau2 = tau * tau;
    let mut score = 0.0;
    let mut inliers = 0;
    for m in matches {
        let (x, xb) = m.points(model.kind);
        let r = sampson_raw(&model.m, &x, &xb);
        if r < tau2 {
            score += r;
            inliers += 1;
        } else {
            score += tau2;
        }
    }
    Score { score, inliers }
}

/// The dense cost restricted to the representative matches.
pub fn cost_center(model: &EpipolarModel, summaries: &[ClusterSummary], tau: f64) -> Score {
    let tau2 = tau * tau;
    let mut score = 0.0;
    let mut inliers = 0;
    for s in summaries {
        let r = sampson_raw(&model.m, &s.c, &s.c_bar);
        if r < tau2 {
            score += r;
            inliers += 1;
        } else {
            score += tau2;
        }
    }
    Score { score, inliers }
}

/// `Σₖ min{‖Mₖe‖²/αₖ, |Cₖ|τ²}`; a cluster is an inlier below its budget.
pub fn cost_approx(model: &EpipolarModel, summaries: &[ClusterSummary], tau: f64) -> Score {
    let tau2 = tau * tau;
    let e = model_vector(&model.m);
    let mut score = 0.0;
    let mut inliers = 0;
    for s in summaries {
        let budget = s.size as f64 * tau2;
        let alpha = s.alpha(&model.m);
        let r = if alpha > 0.0 { s.weighted_norm_sq(&e) / alpha } else { f64::INFINITY };
        if r < budget {
            score += r;
            inliers += 1;
        } else {
            score += budget;
        }
    }
    Score { score, inliers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sampson_error, symmetric_epipolar_distance, NormalizedPoint};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nm(x: (f64, f64), xb: (f64, f64)) -> Match {
        Match {
            n1: NormalizedPoint::new(x.0, x.1),
            n2: NormalizedPoint::new(xb.0, xb.1),
            ..Default::default()
        }
    }

    fn random_e(rng: &mut ChaCha8Rng) -> Mat3 {
        Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn unit_vector_kronecker() {
        let a = constraint_row(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(a, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let e = Mat3::from_fn(|r, c| (10 * r + c) as f64);
        let dot: f64 = a.iter().zip(model_vector(&e)).map(|(p, q)| p * q).sum();
        assert_eq!(dot, e[(1, 0)]);
        let a = constraint_row(&Vec3::new(0.0, 0.0, 1.0), &Vec3::new(0.0, 0.0, 1.0));
        let dot: f64 = a.iter().zip(model_vector(&e)).map(|(p, q)| p * q).sum();
        assert_eq!(dot, e[(2, 2)]);
    }

    #[test]
    fn constraint_row_matches_bilinear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0);
            let xb = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0);
            let e = random_e(&mut rng);
            let a = constraint_row(&x, &xb);
            let lhs: f64 = a.iter().zip(model_vector(&e)).map(|(p, q)| p * q).sum();
            assert!((lhs - xb.dot(&(e * x))).abs() < 1e-14);
        }
    }

    #[test]
    fn singleton_summary_reproduces_sampson() {
        let m = nm((0.1, -0.2), (0.05, 0.3));
        let s = summarize_cluster(&[m], &m, ModelKind::Essential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let model = EpipolarModel::essential(random_e(&mut rng));
            let c = xb_e_x(&model, &m);
            assert_relative_eq!(s.weighted_norm_sq(&model_vector(&model.m)), c * c, max_relative = 1e-12);
            assert_relative_eq!(approx_cluster_residual(&model, &s), sampson_error(&model, &m), max_relative = 1e-12);
            assert_relative_eq!(
                approx_symmetric_epipolar(&model, &s),
                symmetric_epipolar_distance(&model, &m),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn singleton_with_near_zero_entry_keeps_its_pivot() {
        let m = nm((2e-8, -0.2), (3e-7, 0.3));
        let s = summarize_cluster(&[m], &m, ModelKind::Essential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let model = EpipolarModel::essential(random_e(&mut rng));
            assert_relative_eq!(approx_cluster_residual(&model, &s), sampson_error(&model, &m), max_relative = 1e-12);
        }
    }

    fn xb_e_x(model: &EpipolarModel, m: &Match) -> f64 {
        m.n2.hom().dot(&(model.m * m.n1.hom()))
    }

    #[test]
    fn duplicated_members_scale_linearly() {
        let m = nm((0.3, 0.1), (-0.2, 0.25));
        let s = summarize_cluster(&vec![m; 20], &m, ModelKind::Essential).unwrap();
        let model = EpipolarModel::essential(Mat3::new(0.1, -0.4, 0.3, 0.5, 0.2, -0.7, 0.2, 0.9, 0.05));
        let c = xb_e_x(&model, &m);
        assert_relative_eq!(s.weighted_norm_sq(&model_vector(&model.m)), 20.0 * c * c, max_relative = 1e-12);
        assert_relative_eq!(approx_cluster_residual(&model, &s), 20.0 * sampson_error(&model, &m), max_relative = 1e-12);
    }

    #[test]
    fn summary_errors() {
        let m = nm((0.3, 0.1), (-0.2, 0.25));
        assert_eq!(summarize_cluster(&[], &m, ModelKind::Essential), Err(SummaryError::EmptyCluster));
        let bad = nm((f64::NAN, 0.0), (0.0, 0.0));
        assert_eq!(summarize_cluster(&[bad], &bad, ModelKind::Essential), Err(SummaryError::NonFinite(0)));
        let other = nm((0.0, 0.0), (0.0, 0.0));
        assert_eq!(
            summarize_cluster(&[m], &other, ModelKind::Essential),
            Err(SummaryError::RepresentativeNotMember)
        );
    }

    #[test]
    fn zero_alpha_is_infinite() {
        let m = nm((0.0, 0.0), (0.0, 0.0));
        let s = summarize_cluster(&[m], &m, ModelKind::Essential).unwrap();
        let model = EpipolarModel::essential(Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0));
        assert!(approx_cluster_residual(&model, &s).is_infinite());
        assert!(approx_symmetric_epipolar(&model, &s).is_infinite());
    }

    #[test]
    fn symmetric_equal_denominator_identity() {
        // With E = [t]ₓ for t = (1, 0, 0) both half denominators equal 1 at any point.
        let model = EpipolarModel::essential(Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        let ms = [nm((0.1, 0.2), (0.3, 0.25)), nm((0.12, 0.21), (0.31, 0.2))];
        let s = summarize_cluster(&ms, &ms[0], ModelKind::Essential).unwrap();
        assert_eq!(s.alpha(&model.m), 2.0);
        let sym = approx_symmetric_epipolar(&model, &s);
        assert_relative_eq!(sym, 4.0 * approx_cluster_residual(&model, &s), max_relative = 1e-12);
    }

    #[test]
    fn dense_cost_extremes() {
        let model = EpipolarModel::essential(Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        let on = vec![nm((0.1, 0.2), (0.3, 0.2)); 4];
        assert_eq!(cost_dense(&model, &on, 0.1), Score { score: 0.0, inliers: 4 });
        let off = vec![nm((0.0, 1.0), (0.0, 0.0)); 3];
        assert_eq!(cost_dense(&model, &off, 0.5), Score { score: 0.75, inliers: 0 });
        // A residual exactly at τ² is an outlier.
        let model = EpipolarModel::essential(Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0));
        let m = nm((0.3, 0.1), (0.0, 0.5));
        assert_eq!(sampson_error(&model, &m), 0.25);
        assert_eq!(cost_dense(&model, &[m], 0.5), Score { score: 0.25, inliers: 0 });
    }
}
