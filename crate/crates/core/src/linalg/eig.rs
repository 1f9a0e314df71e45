use num_complex::Complex64;

use super::{ensure_finite, ensure_square, Mat};
use crate::error::{LinalgError, LinalgResult};

/// Eigenvalues of a real square matrix plus the Hurwitz summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub is_hurwitz: bool,
}

impl SpectrumReport {
    fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        // conjugate pairs stay adjacent: sort by real part, then by |imag|, negative imag first
        eigenvalues.sort_by(|a, b| {
            a.re.total_cmp(&b.re)
                .then(a.im.abs().total_cmp(&b.im.abs()))
                .then(a.im.total_cmp(&b.im))
        });
        let max_real_part = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        SpectrumReport {
            is_hurwitz: max_real_part < 0.0,
            max_real_part,
            eigenvalues,
        }
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Eigenvalues via balancing, Householder Hessenberg reduction and
/// Francis double-shift QR with exceptional shifts.
pub fn eig(m: &Mat) -> LinalgResult<SpectrumReport> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(SpectrumReport::from_eigenvalues(Vec::new()));
    }
    let mut a = m.clone();
    balance(&mut a);
    let mut h = a.hessenberg().h();
    let values = hqr(&mut h)?;
    Ok(SpectrumReport::from_eigenvalues(values))
}

/// Diagonal similarity scaling rows and columns to comparable norms.
fn balance(a: &mut Mat) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
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
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroys `a`).
fn hqr(a: &mut Mat) -> LinalgResult<Vec<Complex64>> {
    let n = a.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        let mut l: isize;
        loop {
            l = nn;
            while l >= 1 {
                let lu = l as usize;
                let mut s = a[(lu - 1, lu - 1)].abs() + a[(lu, lu)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(lu, lu - 1)].abs() + s == s {
                    a[(lu, lu - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            let mut x = a[(nu, nu)];
            if l == nn {
                out[nu] = Complex64::new(x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = a[(nu - 1, nu - 1)];
                let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        let z = p + sign(z, p);
                        let hi = x + z;
                        let lo = if z != 0.0 { x - w / z } else { hi };
                        out[nu - 1] = Complex64::new(hi, 0.0);
                        out[nu] = Complex64::new(lo, 0.0);
                    } else {
                        out[nu - 1] = Complex64::new(x + p, -z);
                        out[nu] = Complex64::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(LinalgError::Numeric("QR iteration did not converge".into()));
                    }
                    if its % 10 == 0 && its > 0 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nu {
                            a[(i, i)] -= x;
                        }
                        let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let lu = l as usize;
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a[(m, m)];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
                        q = a[(m + 1, m + 1)] - z - r - s;
                        r = a[(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == lu {
                            break;
                        }
                        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v =
                            p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nu - 1 {
                        a[(i + 2, i)] = 0.0;
                        if i != m {
                            a[(i + 2, i - 1)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[(k, k - 1)];
                            q = a[(k + 1, k - 1)];
                            r = if k + 1 != nu { a[(k + 2, k - 1)] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l as usize != m {
                                    a[(k, k - 1)] = -a[(k, k - 1)];
                                }
                            } else {
                                a[(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                                if k + 1 != nu {
                                    pp += r * a[(k + 2, j)];
                                    a[(k + 2, j)] -= pp * z;
                                }
                                a[(k + 1, j)] -= pp * y;
                                a[(k, j)] -= pp * x;
                            }
                            let mmin = nu.min(k + 3);
                            for i in lu..=mmin {
                                let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                                if k + 1 != nu {
                                    pp += z * a[(i, k + 2)];
                                    a[(i, k + 2)] -= pp * r;
                                }
                                a[(i, k + 1)] -= pp * q;
                                a[(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(out)
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(m: &Mat) -> LinalgResult<f64> {
    Ok(eig(m)?.max_real_part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_is_hurwitz() {
        let r = eig(&mat(&[&[-1.0, 0.0], &[0.0, -2.0]])).unwrap();
        assert_eq!(r.order(), 2);
        assert!((r.eigenvalues[0].re + 2.0).abs() < 1e-14);
        assert!((r.eigenvalues[1].re + 1.0).abs() < 1e-14);
        assert!(r.is_hurwitz);
    }

    #[test]
    fn nilpotent_is_not_hurwitz() {
        let r = eig(&mat(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert!(r.eigenvalues.iter().all(|z| z.norm() < 1e-12));
        assert!(!r.is_hurwitz);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            eig(&Mat::zeros(2, 3)),
            Err(LinalgError::Dimension(_))
        ));
    }

    #[test]
    fn random_eigenpairs_have_small_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = Mat::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let rep = eig(&m).unwrap();
            for lam in &rep.eigenvalues {
                // smallest singular value of (M - λI) bounds min ‖Mv − λv‖ over unit v
                let shifted = DMatrix::from_fn(5, 5, |i, j| {
                    let base = Complex64::new(m[(i, j)], 0.0);
                    if i == j {
                        base - lam
                    } else {
                        base
                    }
                });
                let smin = shifted.svd(false, false).singular_values.min();
                assert!(smin <= 1e-8, "residual {smin}");
            }
        }
    }

    #[test]
    fn conjugate_pairs_are_exact() {
        let r = eig(&mat(&[&[0.0, 1.0], &[-4.0, -0.2]])).unwrap();
        assert_eq!(r.eigenvalues[0].conj(), r.eigenvalues[1]);
    }
}
