//! Algebraic Riccati equations through the Hamiltonian matrix sign function,
//! polished by Newton steps.

use super::{
    asymmetry, block, eig, ensure_finite, ensure_square, inverse, solve_lyapunov, symmetrize, Mat,
    TOL_LYAP,
};
use crate::error::{LinalgError, LinalgResult};

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0`.
pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> LinalgResult<Mat> {
    ensure_square(a, "A")?;
    ensure_square(r, "R")?;
    if b.nrows() != a.nrows() || b.ncols() != r.nrows() || q.shape() != a.shape() {
        return Err(LinalgError::Dimension(
            "CARE operands are not conformable".into(),
        ));
    }
    if asymmetry(r) > 1e-12 || !super::is_positive_definite(r) {
        return Err(LinalgError::Input(
            "R must be symmetric positive definite".into(),
        ));
    }
    if q.nrows() > 0 && asymmetry(q) > 1e-12 {
        return Err(LinalgError::Input("Q must be symmetric".into()));
    }
    let g = b * inverse(r, "R")? * b.transpose();
    solve_riccati(a, &symmetrize(&g), q)
}

/// Stabilizing solution of `AᵀP + PA − PGP + Q = 0` for symmetric `G`, `Q`.
///
/// `G` may be indefinite (bounded-real form). The solution is stabilizing:
/// `A − GP` is Hurwitz.
pub fn solve_riccati(a: &Mat, g: &Mat, q: &Mat) -> LinalgResult<Mat> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(g, "G")?;
    ensure_finite(q, "Q")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let h = block(&[&[a, &(-g)], &[&(-q), &(-a.transpose())]]);
    let spec = eig(&h)?;
    let hscale = 1.0_f64.max(h.amax());
    if let Some(z) = spec
        .eigenvalues
        .iter()
        .find(|z| z.re.abs() <= 1e-9 * hscale.max(z.norm()))
    {
        return Err(LinalgError::NoSolution(format!(
            "Hamiltonian has an eigenvalue on the imaginary axis ({z})"
        )));
    }

    let w = matrix_sign(&h)?;
    let i = Mat::identity(n, n);
    let w11 = w.view((0, 0), (n, n)).into_owned();
    let w12 = w.view((0, n), (n, n)).into_owned();
    let w21 = w.view((n, 0), (n, n)).into_owned();
    let w22 = w.view((n, n), (n, n)).into_owned();
    let lhs = super::vstack(&[&w12, &(w22 + &i)]);
    let rhs = -super::vstack(&[&(w11 + &i), &w21]);
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| LinalgError::Numeric(format!("sign-function least squares: {e}")))?;
    let mut p = symmetrize(&p);

    // Newton polishing: (A − GP)ᵀΔ + Δ(A − GP) = −R(P)
    let residual = |p: &Mat| a.transpose() * p + p * a - p * g * p + q;
    let scale = 1.0_f64.max(q.norm()).max((a.transpose() * &p).norm());
    for _ in 0..4 {
        let res = residual(&p);
        if res.norm() <= 1e-3 * TOL_LYAP * scale {
            break;
        }
        let acl = a - g * &p;
        let delta = match solve_lyapunov(&acl, &symmetrize(&res)) {
            Ok(d) => d,
            Err(_) => break,
        };
        let candidate = symmetrize(&(&p + delta));
        if residual(&candidate).norm() < res.norm() {
            p = candidate;
        } else {
            break;
        }
    }

    let closed = eig(&(a - g * &p))?;
    if !closed.is_hurwitz {
        return Err(LinalgError::NoSolution(format!(
            "Riccati solution is not stabilizing (max Re λ = {:.3e})",
            closed.max_real_part
        )));
    }
    Ok(p)
}

/// Newton iteration for sign(H) with determinant scaling.
fn matrix_sign(h: &Mat) -> LinalgResult<Mat> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    for _ in 0..200 {
        let lu = z.clone().lu();
        let det = lu.determinant();
        let zinv = lu
            .try_inverse()
            .ok_or_else(|| LinalgError::Numeric("sign iteration hit a singular iterate".into()))?;
        let c = if det.is_finite() && det != 0.0 {
            det.abs().powf(-1.0 / dim)
        } else {
            1.0
        };
        let next = (&z * c + zinv / c) * 0.5;
        let change = (&next - &z).norm();
        z = next;
        if change <= 1e-13 * z.norm() {
            return Ok(z);
        }
    }
    Err(LinalgError::Numeric(
        "matrix sign iteration did not converge".into(),
    ))
}
