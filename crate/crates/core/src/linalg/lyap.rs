//! Lyapunov and Sylvester solvers by Kronecker vectorization.
//!
//! The vectorized system has n·m unknowns, so the dense LU costs O((nm)³).
//! That is fine up to n ≈ 12 and is the reason these solvers exist only for
//! desk-scale models. Two steps of iterative refinement are applied so that the
//! relative residual lands well under [`TOL_LYAP`](super::TOL_LYAP).

use super::{asymmetry, eig, ensure_finite, ensure_square, symmetrize, Mat};
use crate::error::{LinalgError, LinalgResult};

/// Solves `AᵀP + PA = −Q` for symmetric `P`.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> LinalgResult<Mat> {
    ensure_square(a, "A")?;
    ensure_square(q, "Q")?;
    ensure_finite(a, "A")?;
    ensure_finite(q, "Q")?;
    if a.nrows() != q.nrows() {
        return Err(LinalgError::Dimension(format!(
            "A is {0}x{0} but Q is {1}x{1}",
            a.nrows(),
            q.nrows()
        )));
    }
    if q.nrows() > 0 && asymmetry(q) > 1e-10 {
        return Err(LinalgError::Input("Q is not symmetric".into()));
    }
    let spec = eig(a)?;
    if !spec.is_hurwitz {
        return Err(LinalgError::NoSolution(format!(
            "A is not Hurwitz (max Re λ = {:.3e})",
            spec.max_real_part
        )));
    }
    // AᵀP − P(−A) = −Q
    let neg_q = -q;
    let p = solve_sylvester_unchecked(&a.transpose(), &(-a), &neg_q)?;
    Ok(symmetrize(&p))
}

/// Solves `AX − XB = C`.
pub fn solve_sylvester(a: &Mat, b: &Mat, c: &Mat) -> LinalgResult<Mat> {
    ensure_square(a, "A")?;
    ensure_square(b, "B")?;
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(c, "C")?;
    if c.nrows() != a.nrows() || c.ncols() != b.nrows() {
        return Err(LinalgError::Dimension(format!(
            "C must be {}x{}, got {}x{}",
            a.nrows(),
            b.nrows(),
            c.nrows(),
            c.ncols()
        )));
    }
    let ea = eig(a)?;
    let eb = eig(b)?;
    let scale = 1.0_f64.max(a.amax()).max(b.amax());
    for la in &ea.eigenvalues {
        for lb in &eb.eigenvalues {
            if (la - lb).norm() <= 1e-10 * scale {
                return Err(LinalgError::Singular(format!(
                    "A and B share the eigenvalue {la}"
                )));
            }
        }
    }
    solve_sylvester_unchecked(a, b, c)
}

fn solve_sylvester_unchecked(a: &Mat, b: &Mat, c: &Mat) -> LinalgResult<Mat> {
    let n = a.nrows();
    let m = b.nrows();
    if n == 0 || m == 0 {
        return Ok(Mat::zeros(n, m));
    }
    // vec(AX) = (I⊗A) vec X, vec(XB) = (Bᵀ⊗I) vec X (column-major vec)
    let k = Mat::identity(m, m).kronecker(a) - b.transpose().kronecker(&Mat::identity(n, n));
    let lu = k.lu();
    let rhs = Mat::from_column_slice(n * m, 1, c.as_slice());
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| LinalgError::Singular("Sylvester operator is singular".into()))?;
    for _ in 0..2 {
        let xm = Mat::from_column_slice(n, m, x.as_slice());
        let resid = c - (a * &xm - &xm * b);
        if resid.amax() == 0.0 {
            break;
        }
        let r = Mat::from_column_slice(n * m, 1, resid.as_slice());
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    let out = Mat::from_column_slice(n, m, x.as_slice());
    if out.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::Numeric("non-finite Sylvester solution".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat, TOL_LYAP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> Mat {
        let m = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let shift = eig(&m).unwrap().max_real_part + rng.random_range(0.1..2.0);
        m - Mat::identity(n, n) * shift
    }

    #[test]
    fn scalar_lyapunov() {
        let p = solve_lyapunov(&mat(&[&[-1.0]]), &mat(&[&[2.0]])).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_lyapunov() {
        let a = mat(&[&[-1.0, 0.0], &[0.0, -2.0]]);
        let p = solve_lyapunov(&a, &Mat::identity(2, 2)).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((p[(1, 1)] - 0.25).abs() < 1e-15);
        assert!(p[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn unstable_lyapunov_rejected() {
        let err = solve_lyapunov(&mat(&[&[1.0]]), &mat(&[&[1.0]])).unwrap_err();
        assert!(matches!(err, LinalgError::NoSolution(_)));
    }

    #[test]
    fn asymmetric_q_rejected() {
        let a = mat(&[&[-1.0, 0.0], &[0.0, -2.0]]);
        let q = mat(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(matches!(solve_lyapunov(&a, &q), Err(LinalgError::Input(_))));
    }

    #[test]
    fn random_lyapunov_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_stable(&mut rng, 4);
            let g = Mat::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let q = &g * g.transpose() + Mat::identity(4, 4) * 0.1;
            let p = solve_lyapunov(&a, &q).unwrap();
            let res = (a.transpose() * &p + &p * &a + &q).norm() / q.norm();
            assert!(res <= TOL_LYAP, "residual {res}");
            assert!(crate::linalg::is_positive_definite(&p));
        }
    }

    #[test]
    fn scalar_sylvester() {
        let x = solve_sylvester(&mat(&[&[1.0]]), &mat(&[&[-1.0]]), &mat(&[&[4.0]])).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sylvester_with_zero_a() {
        let b = mat(&[&[-1.0, 0.5], &[0.0, -3.0]]);
        let c = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let x = solve_sylvester(&Mat::zeros(2, 2), &b, &c).unwrap();
        let expected = -(&c) * b.clone().try_inverse().unwrap();
        assert!((x - expected).amax() < 1e-13);
    }

    #[test]
    fn shared_eigenvalue_is_singular() {
        let err = solve_sylvester(&mat(&[&[1.0]]), &mat(&[&[1.0]]), &mat(&[&[1.0]])).unwrap_err();
        assert!(matches!(err, LinalgError::Singular(_)));
    }

    #[test]
    fn random_sylvester_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_stable(&mut rng, 3);
            let b = -random_stable(&mut rng, 2);
            let c = Mat::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
            let x = solve_sylvester(&a, &b, &c).unwrap();
            let res = (&a * &x - &x * &b - &c).norm() / c.norm();
            assert!(res <= TOL_LYAP, "residual {res}");
        }
    }
}
