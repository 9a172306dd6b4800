//! Grouping of dense matches into clusters that impose similar epipolar
//! constraints, and selection of one representative match per cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Match;
use crate::summarization::constraint_row;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("cannot cluster an empty match set")]
    Empty,
    #[error("the grid partition has no feature embedding")]
    GridHasNoEmbedding,
    #[error("cluster count must be at least 1")]
    ZeroClusters,
}

/// Space in which matches are clustered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterSpace {
    /// Image-1 keypoint `(u, v)` in pixels.
    Keypoints2D,
    /// Concatenated keypoints `(u₁, v₁, u₂, v₂)` in pixels.
    Matches4D,
    /// Kronecker constraint vector on calibrated points.
    Constraints9D,
    /// Regular `m × m` partition of the image-1 keypoint bounding box.
    Grid,
}

impl ClusterSpace {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterSpace::Keypoints2D => "2d",
            ClusterSpace::Matches4D => "4d",
            ClusterSpace::Constraints9D => "9d",
            ClusterSpace::Grid => "grid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" => Some(ClusterSpace::Keypoints2D),
            "4d" => Some(ClusterSpace::Matches4D),
            "9d" => Some(ClusterSpace::Constraints9D),
            "grid" => Some(ClusterSpace::Grid),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ClusterSpace::Keypoints2D => 2,
            ClusterSpace::Matches4D | ClusterSpace::Grid => 4,
            ClusterSpace::Constraints9D => 9,
        }
    }
}

/// Which space the representative's distance to the centroid is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RepresentativeRule {
    /// The clustering's own embedding space (grid cells use the 4D mean).
    #[default]
    ClusterSpace,
    /// Always the 4D match space, against the 4D mean of the cluster.
    MatchSpace4D,
}

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Features {
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        Self {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// A partition of the matches into clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub space: ClusterSpace,
    /// Cluster index of every match.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Per-cluster match index; empty until representatives are selected.
    pub representatives: Vec<usize>,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.centroids.len()
    }

    /// Member indices of each cluster, in increasing match order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_clusters()];
        for &c in &self.assignment {
            out[c] += 1;
        }
        out
    }

    /// The trivial clustering with every match in its own cluster.
    pub fn singletons(matches: &[Match]) -> Self {
        Self {
            space: ClusterSpace::Matches4D,
            assignment: (0..matches.len()).collect(),
            centroids: matches.iter().map(|m| embed_one(m, ClusterSpace::Matches4D)).collect(),
            representatives: (0..matches.len()).collect(),
        }
    }
}

fn embed_one(m: &Match, space: ClusterSpace) -> Vec<f64> {
    match space {
        ClusterSpace::Keypoints2D => vec![m.p1.u, m.p1.v],
        ClusterSpace::Matches4D | ClusterSpace::Grid => vec![m.p1.u, m.p1.v, m.p2.u, m.p2.v],
        ClusterSpace::Constraints9D => constraint_row(&m.n1.hom(), &m.n2.hom()).to_vec(),
    }
}

fn embed_features(matches: &[Match], space: ClusterSpace) -> Features {
    let dim = space.dim();
    let mut data = Vec::with_capacity(matches.len() * dim);
    for m in matches {
        match space {
            ClusterSpace::Keypoints2D => data.extend_from_slice(&[m.p1.u, m.p1.v]),
            ClusterSpace::Matches4D | ClusterSpace::Grid => {
                data.extend_from_slice(&[m.p1.u, m.p1.v, m.p2.u, m.p2.v])
            }
            ClusterSpace::Constraints9D => {
                data.extend_from_slice(&constraint_row(&m.n1.hom(), &m.n2.hom()))
            }
        }
    }
    Features { dim, data }
}

/// Feature vectors of the matches in the given space.
pub fn embed(matches: &[Match], space: ClusterSpace) -> Result<Features, ClusterError> {
    if matches.is_empty() {
        return Err(ClusterError::Empty);
    }
    if space == ClusterSpace::Grid {
        return Err(ClusterError::GridHasNoEmbedding);
    }
    Ok(embed_features(matches, space))
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lowest index.
#[inline]
fn nearest(p: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cent) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(p, cent);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Result of Lloyd's algorithm including the cost after every update round.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub clustering: Clustering,
    /// Within-cluster sum of squares: after seeding, then after each update.
    pub costs: Vec<f64>,
    pub iterations: usize,
}

/// Lloyd's k-means from a seeded k-means++ start. `k` is clamped to the number
/// of points and clusters left empty are dropped.
pub fn kmeans(features: &Features, k: usize, max_iter: usize, seed: u64) -> Result<Clustering, ClusterError> {
    kmeans_run(features, k, max_iter, seed).map(|r| r.clustering)
}

pub fn kmeans_run(features: &Features, k: usize, max_iter: usize, seed: u64) -> Result<KMeansRun, ClusterError> {
    let n = features.len();
    if n == 0 {
        return Err(ClusterError::Empty);
    }
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let k = k.min(n);
    let dim = features.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(features.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(features.row(i), features.row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            // All points coincide with chosen centers.
            rng.random_range(0..n)
        };
        let c = features.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            let nd = sq_dist(features.row(i), &c);
            if nd < *d {
                *d = nd;
            }
        }
        centroids.extend_from_slice(&c);
    }

    let mut assignment = vec![0usize; n];
    let mut cost = 0.0;
    for (i, a) in assignment.iter_mut().enumerate() {
        let (c, d) = nearest(features.row(i), &centroids, dim);
        *a = c;
        cost += d;
    }
    let mut costs = vec![cost];
    let mut iterations = 0;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];

    loop {
        // Update step: centroids become member means; empty clusters keep theirs.
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, &a) in assignment.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(features.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] * inv;
                }
            }
        }
        iterations += 1;
        let cost: f64 = assignment
            .iter()
            .enumerate()
            .map(|(i, &a)| sq_dist(features.row(i), &centroids[a * dim..(a + 1) * dim]))
            .sum();
        costs.push(cost);
        if iterations >= max_iter {
            break;
        }
        // Assignment step.
        let mut changed = false;
        for (i, a) in assignment.iter_mut().enumerate() {
            let (c, _) = nearest(features.row(i), &centroids, dim);
            if c != *a {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Drop empty clusters and compact indices.
    let mut counts = vec![0usize; k];
    for &a in &assignment {
        counts[a] += 1;
    }
    let mut remap = vec![usize::MAX; k];
    let mut kept = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            remap[c] = kept.len();
            kept.push(centroids[c * dim..(c + 1) * dim].to_vec());
        }
    }
    for a in assignment.iter_mut() {
        *a = remap[*a];
    }
    Ok(KMeansRun {
        clustering: Clustering {
            space: ClusterSpace::Matches4D,
            assignment,
            centroids: kept,
            representatives: Vec::new(),
        },
        costs,
        iterations,
    })
}

/// Partitions the image-1 keypoint bounding box into `m × m` cells, `m = ⌈√K⌉`,
/// indexed row-major. Points on the maximum edge fall into the last cell.
pub fn grid_cluster(matches: &[Match], k: usize) -> Result<Clustering, ClusterError> {
    if matches.is_empty() {
        return Err(ClusterError::Empty);
    }
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let m = (k as f64).sqrt().ceil() as usize;
    let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for mt in matches {
        umin = umin.min(mt.p1.u);
        umax = umax.max(mt.p1.u);
        vmin = vmin.min(mt.p1.v);
        vmax = vmax.max(mt.p1.v);
    }
    let cell_of = |x: f64, lo: f64, hi: f64| -> usize {
        if hi > lo {
            (((x - lo) / (hi - lo) * m as f64) as usize).min(m - 1)
        } else {
            0
        }
    };
    let cells: Vec<usize> = matches
        .iter()
        .map(|mt| cell_of(mt.p1.v, vmin, vmax) * m + cell_of(mt.p1.u, umin, umax))
        .collect();

    let mut sums = vec![[0.0f64; 4]; m * m];
    let mut counts = vec![0usize; m * m];
    for (mt, &c) in matches.iter().zip(&cells) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip([mt.p1.u, mt.p1.v, mt.p2.u, mt.p2.v]) {
            *s += v;
        }
    }
    let mut remap = vec![usize::MAX; m * m];
    let mut centroids = Vec::new();
    for c in 0..m * m {
        if counts[c] > 0 {
            remap[c] = centroids.len();
            centroids.push(sums[c].iter().map(|s| s / counts[c] as f64).collect());
        }
    }
    Ok(Clustering {
        space: ClusterSpace::Grid,
        assignment: cells.iter().map(|&c| remap[c]).collect(),
        centroids,
        representatives: Vec::new(),
    })
}

/// Fills `representatives` with the member closest to each centroid; ties go to
/// the lowest match index.
pub fn select_representatives(
    matches: &[Match],
    mut clustering: Clustering,
    rule: RepresentativeRule,
) -> Clustering {
    let k = clustering.num_clusters();
    let use_4d = rule == RepresentativeRule::MatchSpace4D || clustering.space == ClusterSpace::Grid;
    let space = if use_4d { ClusterSpace::Matches4D } else { clustering.space };
    let feats = embed_features(matches, space);
    let centers: Vec<Vec<f64>> = if use_4d && clustering.space != ClusterSpace::Grid {
        let mut sums = vec![vec![0.0; 4]; k];
        let mut counts = vec![0usize; k];
        for (i, &a) in clustering.assignment.iter().enumerate() {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(feats.row(i)) {
                *s += v;
            }
        }
        sums.into_iter()
            .zip(counts)
            .map(|(s, c)| s.into_iter().map(|v| v / c.max(1) as f64).collect())
            .collect()
    } else {
        clustering.centroids.clone()
    };
    let mut best = vec![(usize::MAX, f64::INFINITY); k];
    for (i, &a) in clustering.assignment.iter().enumerate() {
        let d = sq_dist(feats.row(i), &centers[a]);
        if d < best[a].1 {
            best[a] = (i, d);
        }
    }
    clustering.representatives = best.into_iter().map(|(i, _)| i).collect();
    clustering
}

/// Clustering configuration used by the estimation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub space: ClusterSpace,
    pub k: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub rule: RepresentativeRule,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            space: ClusterSpace::Matches4D,
            k: 128,
            max_iter: 5,
            seed: 0,
            rule: RepresentativeRule::ClusterSpace,
        }
    }
}

/// Clusters the matches and selects representatives.
pub fn cluster_matches(matches: &[Match], params: &ClusterParams) -> Result<Clustering, ClusterError> {
    let clustering = match params.space {
        ClusterSpace::Grid => grid_cluster(matches, params.k)?,
        space => {
            let feats = embed(matches, space)?;
            let mut c = kmeans(&feats, params.k, params.max_iter, params.seed)?;
            c.space = space;
            c
        }
    };
    Ok(select_representatives(matches, clustering, params.rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ImagePoint, NormalizedPoint};

    fn pm(u1: f64, v1: f64, u2: f64, v2: f64) -> Match {
        Match::uncalibrated(ImagePoint::new(u1, v1), ImagePoint::new(u2, v2))
    }

    #[test]
    fn embeddings_have_expected_layout() {
        let m = pm(1.0, 2.0, 3.0, 4.0);
        assert_eq!(embed(&[m], ClusterSpace::Matches4D).unwrap().data, vec![1.0, 2.0, 3.0, 4.0]);
        let m = pm(5.0, 7.0, 0.0, 0.0);
        assert_eq!(embed(&[m], ClusterSpace::Keypoints2D).unwrap().data, vec![5.0, 7.0]);
        let m = Match {
            n1: NormalizedPoint::new(1.0, 0.0),
            n2: NormalizedPoint::new(0.0, 1.0),
            ..Default::default()
        };
        let f = embed(&[m], ClusterSpace::Constraints9D).unwrap();
        assert_eq!(f.data, constraint_row(&m.n1.hom(), &m.n2.hom()).to_vec());
        assert_eq!(embed(&[m], ClusterSpace::Grid), Err(ClusterError::GridHasNoEmbedding));
        assert_eq!(embed(&[], ClusterSpace::Matches4D), Err(ClusterError::Empty));
    }

    #[test]
    fn kmeans_one_cluster_is_mean() {
        let f = Features::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]]);
        let c = kmeans(&f, 1, 5, 3).unwrap();
        assert_eq!(c.centroids, vec![vec![2.0, 4.0]]);
        assert_eq!(c.assignment, vec![0, 0, 0]);
    }

    #[test]
    fn kmeans_k_equals_n_gives_singletons() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let f = Features::from_rows(&rows);
        let run = kmeans_run(&f, 7, 5, 11).unwrap();
        assert_eq!(run.clustering.num_clusters(), 7);
        assert_eq!(*run.costs.last().unwrap(), 0.0);
        // Requests beyond the point count are clamped.
        assert_eq!(kmeans(&f, 50, 5, 11).unwrap().num_clusters(), 7);
    }

    #[test]
    fn grid_corners_and_boundaries() {
        let corners = [pm(0.0, 0.0, 0.0, 0.0), pm(10.0, 0.0, 0.0, 0.0), pm(0.0, 10.0, 0.0, 0.0), pm(10.0, 10.0, 0.0, 0.0)];
        let c = grid_cluster(&corners, 4).unwrap();
        assert_eq!(c.num_clusters(), 4);
        assert_eq!(c.assignment, vec![0, 1, 2, 3]);

        // m = 3: fill all nine cells so no index is compacted away.
        let mut pts = Vec::new();
        for r in 0..3 {
            for col in 0..3 {
                pts.push(pm(col as f64 * 4.5, r as f64 * 4.5, 1.0, 1.0));
            }
        }
        let c = grid_cluster(&pts, 9).unwrap();
        assert_eq!(c.assignment[0], 0);
        assert_eq!(c.assignment[8], 8);
        assert_eq!(c.centroids[8], vec![9.0, 9.0, 1.0, 1.0]);
    }

    #[test]
    fn grid_identical_points_single_cluster() {
        let pts = vec![pm(3.0, 3.0, 1.0, 1.0); 5];
        let c = grid_cluster(&pts, 16).unwrap();
        assert_eq!(c.num_clusters(), 1);
    }

    #[test]
    fn representative_closest_to_mean_with_tie_rule() {
        let pts = [pm(0.0, 0.0, 0.0, 0.0), pm(1.0, 1.0, 1.0, 1.0), pm(10.0, 10.0, 10.0, 10.0)];
        let c = Clustering {
            space: ClusterSpace::Matches4D,
            assignment: vec![0, 0, 0],
            centroids: vec![vec![11.0 / 3.0; 4]],
            representatives: vec![],
        };
        let c = select_representatives(&pts, c, RepresentativeRule::ClusterSpace);
        assert_eq!(c.representatives, vec![1]);

        let tie = [pm(0.0, 0.0, 0.0, 0.0), pm(2.0, 2.0, 2.0, 2.0)];
        let c = Clustering {
            space: ClusterSpace::Matches4D,
            assignment: vec![0, 0],
            centroids: vec![vec![1.0; 4]],
            representatives: vec![],
        };
        assert_eq!(select_representatives(&tie, c, RepresentativeRule::ClusterSpace).representatives, vec![0]);
    }

    #[test]
    fn representative_rule_switch() {
        // Same image-1 keypoints: in 2D the representative is the first member,
        // while the 4D rule looks at the second image as well.
        let pts = [pm(0.0, 0.0, 100.0, 0.0), pm(0.0, 0.0, 1.0, 0.0), pm(0.0, 0.0, 0.0, 0.0)];
        let c = Clustering {
            space: ClusterSpace::Keypoints2D,
            assignment: vec![0, 0, 0],
            centroids: vec![vec![0.0, 0.0]],
            representatives: vec![],
        };
        assert_eq!(select_representatives(&pts, c.clone(), RepresentativeRule::ClusterSpace).representatives, vec![0]);
        assert_eq!(select_representatives(&pts, c, RepresentativeRule::MatchSpace4D).representatives, vec![1]);
    }
}
