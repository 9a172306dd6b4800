//! Eigenvalues of small companion matrices by balancing and the Francis
//! double-shift QR iteration on upper Hessenberg form.

const MAX_DIM: usize = 10;

/// Diagonal similarity scaling so that row and column norms are comparable.
fn balance(a: &mut [[f64; MAX_DIM]; MAX_DIM], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= ginv;
                }
                for j in 0..n {
                    a[j][i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues `(re, im)` of an upper Hessenberg matrix. `None` when the
/// iteration does not converge.
fn hqr(a: &mut [[f64; MAX_DIM]; MAX_DIM], n: usize) -> Option<Vec<(f64, f64)>> {
    let eps = f64::EPSILON;
    let mut out = vec![(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                out[nu] = (x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    out[nu - 1] = (x + z, 0.0);
                    out[nu] = (if z != 0.0 { x - w / z } else { x + z }, 0.0);
                } else {
                    out[nu] = (x + p, -z);
                    out[nu - 1] = (x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return None;
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for i in 0..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[i + 2][i] = 0.0;
                if i != m {
                    a[i + 2][i - 1] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != nu { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != nu {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = nu.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k + 1 != nu {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if nn < 0 {
                break;
            }
        }
    }
    Some(out)
}

/// Eigenvalues of the companion matrix of the monic polynomial
/// `zⁿ + c[n-1]·zⁿ⁻¹ + … + c[0]`, for `n ≤ 10`.
pub(crate) fn companion_eigenvalues(c: &[f64]) -> Option<Vec<(f64, f64)>> {
    let n = c.len();
    if n == 0 || n > MAX_DIM {
        return None;
    }
    let mut a = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 1..n {
        a[i][i - 1] = 1.0;
    }
    for i in 0..n {
        a[i][n - 1] = -c[i];
    }
    balance(&mut a, n);
    hqr(&mut a, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_cubic_roots() {
        // z² − 3z + 2
        let mut e = companion_eigenvalues(&[2.0, -3.0]).unwrap();
        e.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((e[0].0 - 1.0).abs() < 1e-14 && (e[1].0 - 2.0).abs() < 1e-14);
        // z² + 1
        let e = companion_eigenvalues(&[1.0, 0.0]).unwrap();
        assert!(e.iter().all(|(re, im)| re.abs() < 1e-14 && (im.abs() - 1.0).abs() < 1e-14));
        // z − 5
        assert_eq!(companion_eigenvalues(&[-5.0]).unwrap(), vec![(5.0, 0.0)]);
    }

    #[test]
    fn degree_ten_product_of_known_roots() {
        let roots = [-3.0, -2.0, -1.5, -0.5, 0.25, 0.75, 1.0, 2.0, 4.0, 7.0];
        let mut p = vec![1.0];
        for r in roots {
            let mut q = vec![0.0; p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                q[i + 1] += c;
                q[i] -= r * c;
            }
            p = q;
        }
        let mut e = companion_eigenvalues(&p[..10]).unwrap();
        e.sort_by(|a, b| a.0.total_cmp(&b.0));
        for ((re, im), r) in e.iter().zip(roots) {
            assert!((re - r).abs() < 1e-8, "{re} vs {r}");
            assert!(im.abs() < 1e-8);
        }
    }
}
