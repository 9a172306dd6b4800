//! Minimal solvers: five-point essential, seven-point fundamental, and the
//! essential solver fed by the approximate nullspace of a cluster summary.
//!
//! The five-point solver hides `z` in the ten cubic constraints on
//! `E = x·X + y·Y + z·Z + W`, reduces them by Gauss-Jordan elimination and
//! expands a 3×3 polynomial determinant into a degree-10 polynomial whose roots
//! come from its companion matrix.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SMatrix};

use crate::companion::companion_eigenvalues;
use crate::geometry::{EpipolarModel, Mat3, Match, Vec3};
use crate::summarization::{constraint_row, matrix_from_vector, ClusterSummary};

/// Relative imaginary-part tolerance for accepting a polynomial root as real.
pub const REAL_ROOT_TOL: f64 = 1e-8;

/// Four orthonormal 9-vectors spanning the approximate nullspace of a summary.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceBasis {
    pub rows: [[f64; 9]; 4],
    /// Singular values of `M` belonging to the rows, ascending.
    pub singular_values: [f64; 4],
}

// ---------------------------------------------------------------------------
// Small dense helpers

/// Orthonormal basis of the right nullspace of an `r × 9` matrix, `r < 9`, via
/// Householder QR of its transpose. `None` if the rows are (near) dependent.
pub(crate) fn householder_nullspace(rows: &[[f64; 9]]) -> Option<Vec<[f64; 9]>> {
    let r = rows.len();
    debug_assert!(r < 9);
    // Columns of Aᵀ are the rows of A.
    let mut w: Vec<[f64; 9]> = rows.to_vec();
    let scale = rows
        .iter()
        .map(|a| a.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let mut vs: Vec<[f64; 9]> = Vec::with_capacity(r);
    for k in 0..r {
        let norm = w[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * scale {
            return None;
        }
        let alpha = if w[k][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; 9];
        v[k..].copy_from_slice(&w[k][k..]);
        v[k] -= alpha;
        let vn = v[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn > 0.0 {
            for x in v[k..].iter_mut() {
                *x /= vn;
            }
        }
        for col in w.iter_mut().skip(k) {
            let d: f64 = (k..9).map(|i| v[i] * col[i]).sum();
            for i in k..9 {
                col[i] -= 2.0 * d * v[i];
            }
        }
        vs.push(v);
    }
    let mut out = Vec::with_capacity(9 - r);
    for j in r..9 {
        let mut q = [0.0; 9];
        q[j] = 1.0;
        for v in vs.iter().rev() {
            let d: f64 = (0..9).map(|i| v[i] * q[i]).sum();
            for i in 0..9 {
                q[i] -= 2.0 * d * v[i];
            }
        }
        out.push(q);
    }
    Some(out)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub_assign(a: &mut Vec<f64>, b: &[f64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
}

fn poly_add_assign(a: &mut Vec<f64>, b: &[f64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Horner evaluation of an ascending-order polynomial and its derivative.
fn poly_eval(c: &[f64], z: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Real roots of a polynomial given in ascending coefficient order, from the
/// eigenvalues of its companion matrix, each polished by Newton steps.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if !(max > 0.0) || !max.is_finite() {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-14 * max {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs[..deg].iter().map(|c| c / lead).collect();
    let eig: Vec<(f64, f64)> = match companion_eigenvalues(&monic) {
        Some(e) => e,
        None => {
            let mut comp = DMatrix::<f64>::zeros(deg, deg);
            for i in 1..deg {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..deg {
                comp[(i, deg - 1)] = -monic[i];
            }
            comp.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
        }
    };
    let poly = &coeffs[..=deg];
    let mut roots: Vec<f64> = Vec::with_capacity(deg);
    for &(re, im) in eig.iter() {
        if !(im.abs() <= REAL_ROOT_TOL * re.abs().max(1.0)) {
            continue;
        }
        let mut z = re;
        let (mut p, _) = poly_eval(poly, z);
        for _ in 0..3 {
            let (_, dp) = poly_eval(poly, z);
            if dp == 0.0 {
                break;
            }
            let zn = z - p / dp;
            let (pn, _) = poly_eval(poly, zn);
            if pn.abs() < p.abs() {
                z = zn;
                p = pn;
            } else {
                break;
            }
        }
        roots.push(z);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

// ---------------------------------------------------------------------------
// Five-point polynomial back-end

type Exp = (u8, u8, u8);

const LIN: [Exp; 4] = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)];
const QUAD: [Exp; 10] = [
    (2, 0, 0),
    (1, 1, 0),
    (1, 0, 1),
    (1, 0, 0),
    (0, 2, 0),
    (0, 1, 1),
    (0, 1, 0),
    (0, 0, 2),
    (0, 0, 1),
    (0, 0, 0),
];
/// Monomials eliminated first (pure x/y degree 2–3 terms), then the ten that
/// stay in the hidden-variable system.
const CUBIC: [Exp; 20] = [
    (3, 0, 0),
    (0, 3, 0),
    (2, 1, 0),
    (1, 2, 0),
    (2, 0, 1),
    (2, 0, 0),
    (0, 2, 1),
    (0, 2, 0),
    (1, 1, 1),
    (1, 1, 0),
    (1, 0, 2),
    (1, 0, 1),
    (1, 0, 0),
    (0, 1, 2),
    (0, 1, 1),
    (0, 1, 0),
    (0, 0, 3),
    (0, 0, 2),
    (0, 0, 1),
    (0, 0, 0),
];

struct ProductTables {
    lin_lin: [[usize; 4]; 4],
    quad_lin: [[usize; 4]; 10],
}

fn tables() -> &'static ProductTables {
    static TABLES: OnceLock<ProductTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let add = |a: Exp, b: Exp| (a.0 + b.0, a.1 + b.1, a.2 + b.2);
        let find = |set: &[Exp], e: Exp| set.iter().position(|&m| m == e).expect("monomial");
        let mut lin_lin = [[0; 4]; 4];
        let mut quad_lin = [[0; 4]; 10];
        for i in 0..4 {
            for j in 0..4 {
                lin_lin[i][j] = find(&QUAD, add(LIN[i], LIN[j]));
            }
        }
        for i in 0..10 {
            for j in 0..4 {
                quad_lin[i][j] = find(&CUBIC, add(QUAD[i], LIN[j]));
            }
        }
        ProductTables { lin_lin, quad_lin }
    })
}

type Lin = [f64; 4];
type Quad = [f64; 10];
type Cubic = [f64; 20];

fn mul_ll(t: &ProductTables, a: &Lin, b: &Lin) -> Quad {
    let mut out = [0.0; 10];
    for i in 0..4 {
        for j in 0..4 {
            out[t.lin_lin[i][j]] += a[i] * b[j];
        }
    }
    out
}

fn mul_ql(t: &ProductTables, q: &Quad, l: &Lin) -> Cubic {
    let mut out = [0.0; 20];
    for i in 0..10 {
        if q[i] == 0.0 {
            continue;
        }
        for j in 0..4 {
            out[t.quad_lin[i][j]] += q[i] * l[j];
        }
    }
    out
}

fn add_quad(a: &mut Quad, b: &Quad, s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

fn add_cubic(a: &mut Cubic, b: &Cubic, s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Essential matrices in the span of a four-dimensional basis of 9-vectors
/// (column-major vectorized 3×3 matrices), normalized to unit Frobenius norm.
pub fn essentials_from_basis(basis: &[[f64; 9]; 4]) -> Vec<Mat3> {
    let t = tables();
    // E[r][c] as a linear polynomial in (x, y, z, 1).
    let mut e = [[[0.0f64; 4]; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let idx = 3 * c + r;
            e[r][c] = [basis[0][idx], basis[1][idx], basis[2][idx], basis[3][idx]];
        }
    }
    let mut rows: [Cubic; 10] = [[0.0; 20]; 10];

    // det(E)
    let minor = |a: (usize, usize), b: (usize, usize), c: (usize, usize), d: (usize, usize)| {
        let mut q = mul_ll(t, &e[a.0][a.1], &e[b.0][b.1]);
        add_quad(&mut q, &mul_ll(t, &e[c.0][c.1], &e[d.0][d.1]), -1.0);
        q
    };
    let m0 = minor((1, 1), (2, 2), (1, 2), (2, 1));
    let m1 = minor((1, 0), (2, 2), (1, 2), (2, 0));
    let m2 = minor((1, 0), (2, 1), (1, 1), (2, 0));
    add_cubic(&mut rows[0], &mul_ql(t, &m0, &e[0][0]), 1.0);
    add_cubic(&mut rows[0], &mul_ql(t, &m1, &e[0][1]), -1.0);
    add_cubic(&mut rows[0], &mul_ql(t, &m2, &e[0][2]), 1.0);

    // 2·E·Eᵀ·E − tr(E·Eᵀ)·E = 2·(E·Eᵀ − ½·tr·I)·E
    let mut eet = [[[0.0f64; 10]; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut q = [0.0; 10];
            for k in 0..3 {
                add_quad(&mut q, &mul_ll(t, &e[i][k], &e[j][k]), 1.0);
            }
            eet[i][j] = q;
            eet[j][i] = q;
        }
    }
    let mut trace = [0.0; 10];
    for i in 0..3 {
        add_quad(&mut trace, &eet[i][i], 1.0);
    }
    for i in 0..3 {
        add_quad(&mut eet[i][i], &trace, -0.5);
    }
    for i in 0..3 {
        for j in 0..3 {
            let row = &mut rows[1 + 3 * i + j];
            for k in 0..3 {
                add_cubic(row, &mul_ql(t, &eet[i][k], &e[k][j]), 1.0);
            }
        }
    }

    let original = rows;

    // Gauss-Jordan on the first ten monomial columns.
    let scale = rows.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Vec::new();
    }
    for col in 0..10 {
        let piv = (col..10)
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
            .unwrap();
        if rows[piv][col].abs() <= 1e-12 * scale {
            return Vec::new();
        }
        rows.swap(col, piv);
        let inv = 1.0 / rows[col][col];
        for v in rows[col][col..].iter_mut() {
            *v *= inv;
        }
        let pivot_row = rows[col];
        for (r, row) in rows.iter_mut().enumerate() {
            if r == col {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for k in col..20 {
                    row[k] -= f * pivot_row[k];
                }
            }
        }
    }

    // Rows 4..9 are x²z, x², y²z, y², xyz, xy plus trailing terms. Each pair
    // (x²z − z·x², …) cancels its leading monomial, leaving polynomials in z
    // multiplying (x, y, 1).
    let split = |r: &Cubic| -> [Vec<f64>; 3] {
        [
            vec![r[12], r[11], r[10]],
            vec![r[15], r[14], r[13]],
            vec![r[19], r[18], r[17], r[16]],
        ]
    };
    let reduce = |a: usize, b: usize| -> [Vec<f64>; 3] {
        let pa = split(&rows[a]);
        let pb = split(&rows[b]);
        let mut out = pa;
        for (o, q) in out.iter_mut().zip(pb.iter()) {
            let mut shifted = vec![0.0];
            shifted.extend_from_slice(q);
            poly_sub_assign(o, &shifted);
        }
        out
    };
    let kk = reduce(4, 5);
    let ll = reduce(6, 7);
    let mm = reduce(8, 9);

    // det [[kx ky k1], [lx ly l1], [mx my m1]]
    let mut det = poly_mul(&kk[0], &poly_mul(&ll[1], &mm[2]));
    poly_sub_assign(&mut det, &poly_mul(&kk[0], &poly_mul(&ll[2], &mm[1])));
    poly_sub_assign(&mut det, &poly_mul(&kk[1], &poly_mul(&ll[0], &mm[2])));
    poly_add_assign(&mut det, &poly_mul(&kk[1], &poly_mul(&ll[2], &mm[0])));
    poly_add_assign(&mut det, &poly_mul(&kk[2], &poly_mul(&ll[0], &mm[1])));
    poly_sub_assign(&mut det, &poly_mul(&kk[2], &poly_mul(&ll[1], &mm[0])));

    let mut out = Vec::new();
    for z in real_roots(&det) {
        let ev = |p: &[Vec<f64>; 3]| Vec3::new(poly_eval(&p[0], z).0, poly_eval(&p[1], z).0, poly_eval(&p[2], z).0);
        let (bk, bl, bm) = (ev(&kk), ev(&ll), ev(&mm));
        let cands = [bk.cross(&bl), bk.cross(&bm), bl.cross(&bm)];
        let v = cands
            .iter()
            .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
            .unwrap();
        if !(v.z.abs() > 1e-14 * v.norm()) {
            continue;
        }
        let compose = |p: [f64; 3]| -> Option<Mat3> {
            let mut ev9 = [0.0; 9];
            for i in 0..9 {
                ev9[i] = p[0] * basis[0][i] + p[1] * basis[1][i] + p[2] * basis[2][i] + basis[3][i];
            }
            let m = matrix_from_vector(&ev9);
            let n = m.norm();
            (n > 0.0 && n.is_finite()).then(|| m / n)
        };
        let p0 = [v.x / v.z, v.y / v.z, z];
        let Some(mut m) = compose(p0) else {
            continue;
        };
        if !satisfies_essential_constraints(&m) {
            let p = polish_root(&original, p0);
            match compose([p.x, p.y, p.z]) {
                Some(mp) if satisfies_essential_constraints(&mp) => m = mp,
                _ => continue,
            }
        }
        if out.iter().any(|o: &Mat3| (o - m).norm().min((o + m).norm()) < 1e-10) {
            continue;
        }
        out.push(m);
    }
    out
}

/// Tolerance of the internal-constraint check on unit-norm outputs.
pub const ESSENTIAL_CONSTRAINT_TOL: f64 = 1e-8;

fn satisfies_essential_constraints(m: &Mat3) -> bool {
    let c = 2.0 * m * m.transpose() * m - (m * m.transpose()).trace() * m;
    m.determinant().abs() <= ESSENTIAL_CONSTRAINT_TOL && c.norm() <= ESSENTIAL_CONSTRAINT_TOL
}

fn eval_cubics(rows: &[Cubic; 10], p: [f64; 3]) -> ([f64; 10], [[f64; 3]; 10]) {
    let mut val = [0.0; 20];
    let mut grad = [[0.0; 3]; 20];
    let pows = |b: f64| [1.0, b, b * b, b * b * b];
    let (xs, ys, zs) = (pows(p[0]), pows(p[1]), pows(p[2]));
    let pw = |t: &[f64; 4], e: u8| t[e as usize];
    for (k, &(a, b, c)) in CUBIC.iter().enumerate() {
        let (px, py, pz) = (xs[a as usize], ys[b as usize], zs[c as usize]);
        val[k] = px * py * pz;
        if a > 0 {
            grad[k][0] = a as f64 * pw(&xs, a - 1) * py * pz;
        }
        if b > 0 {
            grad[k][1] = b as f64 * px * pw(&ys, b - 1) * pz;
        }
        if c > 0 {
            grad[k][2] = c as f64 * px * py * pw(&zs, c - 1);
        }
    }
    let mut f = [0.0; 10];
    let mut j = [[0.0; 3]; 10];
    for (r, row) in rows.iter().enumerate() {
        for k in 0..20 {
            f[r] += row[k] * val[k];
            for d in 0..3 {
                j[r][d] += row[k] * grad[k][d];
            }
        }
    }
    (f, j)
}

/// Gauss-Newton steps on the ten cubic constraints, kept only while the
/// residual decreases.
fn polish_root(rows: &[Cubic; 10], mut p: [f64; 3]) -> Vec3 {
    let norm = |f: &[f64; 10]| f.iter().map(|v| v * v).sum::<f64>();
    let (mut f, mut j) = eval_cubics(rows, p);
    let mut cost = norm(&f);
    for _ in 0..4 {
        let mut jtj = Mat3::zeros();
        let mut jtf = Vec3::zeros();
        for r in 0..10 {
            for a in 0..3 {
                jtf[a] += j[r][a] * f[r];
                for b in 0..3 {
                    jtj[(a, b)] += j[r][a] * j[r][b];
                }
            }
        }
        let Some(step) = jtj.try_inverse().map(|inv| inv * jtf) else {
            break;
        };
        let cand = [p[0] - step.x, p[1] - step.y, p[2] - step.z];
        let (fc, jc) = eval_cubics(rows, cand);
        let cc = norm(&fc);
        if !(cc < cost) {
            break;
        }
        p = cand;
        f = fc;
        j = jc;
        cost = cc;
    }
    Vec3::new(p[0], p[1], p[2])
}

/// Five-point essential solver on calibrated homogeneous points.
pub fn essential_5pt_points(x1: &[Vec3], x2: &[Vec3]) -> Vec<Mat3> {
    if x1.len() != 5 || x2.len() != 5 {
        return Vec::new();
    }
    let rows: Vec<[f64; 9]> = x1.iter().zip(x2).map(|(a, b)| constraint_row(a, b)).collect();
    let Some(ns) = householder_nullspace(&rows) else {
        return Vec::new();
    };
    essentials_from_basis(&[ns[0], ns[1], ns[2], ns[3]])
}

/// Up to ten essential matrices consistent with five calibrated matches.
pub fn essential_5pt(sample: &[Match]) -> Vec<EpipolarModel> {
    let x1: Vec<Vec3> = sample.iter().map(|m| m.n1.hom()).collect();
    let x2: Vec<Vec3> = sample.iter().map(|m| m.n2.hom()).collect();
    essential_5pt_points(&x1, &x2)
        .into_iter()
        .map(EpipolarModel::essential)
        .collect()
}

// ---------------------------------------------------------------------------
// Seven-point fundamental solver

/// Similarity moving the points' centroid to the origin with mean distance √2.
fn hartley_transform(pts: &[Vec3]) -> Option<Mat3> {
    let n = pts.len() as f64;
    let (cx, cy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let (cx, cy) = (cx / n, cy / n);
    let mean: f64 = pts.iter().map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()).sum::<f64>() / n;
    if !(mean > 0.0) || !mean.is_finite() {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Mat3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

#[inline]
fn det_cols(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

/// Coefficients (ascending) of `det(A + λ·B)`.
pub(crate) fn det_pencil(a: &Mat3, b: &Mat3) -> [f64; 4] {
    let ac: [Vec3; 3] = [a.column(0).into(), a.column(1).into(), a.column(2).into()];
    let bc: [Vec3; 3] = [b.column(0).into(), b.column(1).into(), b.column(2).into()];
    [
        det_cols(&ac[0], &ac[1], &ac[2]),
        det_cols(&bc[0], &ac[1], &ac[2]) + det_cols(&ac[0], &bc[1], &ac[2]) + det_cols(&ac[0], &ac[1], &bc[2]),
        det_cols(&bc[0], &bc[1], &ac[2]) + det_cols(&bc[0], &ac[1], &bc[2]) + det_cols(&ac[0], &bc[1], &bc[2]),
        det_cols(&bc[0], &bc[1], &bc[2]),
    ]
}

/// Seven-point fundamental solver on homogeneous pixel points, with Hartley
/// normalization applied internally.
pub fn fundamental_7pt_points(x1: &[Vec3], x2: &[Vec3]) -> Vec<Mat3> {
    if x1.len() != 7 || x2.len() != 7 {
        return Vec::new();
    }
    let (Some(t1), Some(t2)) = (hartley_transform(x1), hartley_transform(x2)) else {
        return Vec::new();
    };
    let rows: Vec<[f64; 9]> = x1
        .iter()
        .zip(x2)
        .map(|(a, b)| constraint_row(&(t1 * a), &(t2 * b)))
        .collect();
    let Some(ns) = householder_nullspace(&rows) else {
        return Vec::new();
    };
    let f1 = matrix_from_vector(&ns[0]);
    let f2 = matrix_from_vector(&ns[1]);
    let d = f1 - f2;
    let cubic = det_pencil(&f2, &d);
    real_roots(&cubic)
        .into_iter()
        .filter_map(|lambda| {
            let fh = f2 + d * lambda;
            let f = t2.transpose() * fh * t1;
            let n = f.norm();
            (n > 0.0 && n.is_finite()).then(|| f / n)
        })
        .collect()
}

/// Up to three fundamental matrices consistent with seven pixel matches.
pub fn fundamental_7pt(sample: &[Match]) -> Vec<EpipolarModel> {
    let x1: Vec<Vec3> = sample.iter().map(|m| m.p1.hom()).collect();
    let x2: Vec<Vec3> = sample.iter().map(|m| m.p2.hom()).collect();
    fundamental_7pt_points(&x1, &x2)
        .into_iter()
        .map(EpipolarModel::fundamental)
        .collect()
}

// ---------------------------------------------------------------------------
// Summary-based solver

/// Right singular vectors of `M` for its four smallest singular values.
pub fn nullspace_from_summary(s: &ClusterSummary) -> NullspaceBasis {
    let m = s.reduced_matrix();
    let svd = m.svd(false, true);
    let v_t: SMatrix<f64, 9, 9> = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut rows = [[0.0; 9]; 4];
    let mut singular_values = [0.0; 4];
    for (k, &i) in order.iter().take(4).enumerate() {
        for j in 0..9 {
            rows[k][j] = v_t[(i, j)];
        }
        singular_values[k] = svd.singular_values[i];
    }
    NullspaceBasis { rows, singular_values }
}

/// Essential matrices from a single summarized correspondence.
pub fn essential_from_summary(s: &ClusterSummary) -> Vec<EpipolarModel> {
    let basis = nullspace_from_summary(s);
    essentials_from_basis(&basis.rows)
        .into_iter()
        .map(EpipolarModel::essential)
        .collect()
}
