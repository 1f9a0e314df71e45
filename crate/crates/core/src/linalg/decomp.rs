use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{eig, ensure_finite, ensure_square, hstack, left_inverse, rank, vstack, Mat};
use crate::error::{LinalgError, LinalgResult};

/// Orthogonal split of a pair (A, C) into unobservable and observable parts.
///
/// With `T = p_sim` (orthogonal, so `T⁻¹ = Tᵀ`):
/// `T A Tᵀ = [[A11, A12], [0, A22]]` and `C Tᵀ = [0, C2]`, where `A11` carries
/// the unobservable modes and `(C2, A22)` is observable.
#[derive(Debug, Clone)]
pub struct DetectabilityDecomposition {
    pub p_sim: Mat,
    pub a11: Mat,
    pub a12: Mat,
    pub a21: Mat,
    pub a22: Mat,
    pub c2: Mat,
    pub unobservable_dim: usize,
    pub detectable: bool,
}

impl DetectabilityDecomposition {
    pub fn is_observable(&self) -> bool {
        self.unobservable_dim == 0
    }

    /// Unobservable eigenvalues, i.e. the spectrum of `A11`.
    pub fn unobservable_modes(&self) -> LinalgResult<Vec<Complex64>> {
        Ok(eig(&self.a11)?.eigenvalues)
    }

    pub fn p_inv(&self) -> Mat {
        self.p_sim.transpose()
    }
}

/// Orthonormal basis (as columns) of the orthogonal complement of `range(basis)`.
pub fn orthonormal_complement(basis: &Mat, n: usize) -> Mat {
    if basis.ncols() == 0 {
        return Mat::identity(n, n);
    }
    let ann = left_annihilator(basis);
    ann.transpose()
}

fn orth_extend(existing: &Mat, candidates: &Mat, tol: f64) -> Mat {
    // project out the existing span twice, then keep significant directions
    let mut c = candidates.clone();
    for _ in 0..2 {
        if existing.ncols() > 0 {
            c -= existing * (existing.transpose() * &c);
        }
    }
    if c.ncols() == 0 || c.amax() <= tol {
        return Mat::zeros(existing.nrows(), 0);
    }
    let svd = c.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| i)
        .collect();
    Mat::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthogonal staircase reduction isolating the unobservable subspace of (A, C).
pub fn detectability_decomposition(a: &Mat, c: &Mat) -> LinalgResult<DetectabilityDecomposition> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(c, "C")?;
    let n = a.nrows();
    if c.ncols() != n {
        return Err(LinalgError::Dimension(format!(
            "C has {} columns, expected {n}",
            c.ncols()
        )));
    }
    let scale = 1.0_f64.max(a.amax()).max(c.amax());
    let tol = 1e-10 * scale;

    // observable subspace = span{Cᵀ, AᵀCᵀ, (Aᵀ)²Cᵀ, ...}
    let mut obs = orth_extend(&Mat::zeros(n, 0), &c.transpose(), tol);
    let mut newest = obs.clone();
    while obs.ncols() < n && newest.ncols() > 0 {
        let grown = orth_extend(&obs, &(a.transpose() * &newest), tol);
        if grown.ncols() == 0 {
            break;
        }
        obs = hstack(&[&obs, &grown]);
        newest = grown;
    }
    let unobs = orthonormal_complement(&obs, n);
    let k = unobs.ncols();
    // rows of p_sim: unobservable coordinates first
    let p_sim = vstack(&[&unobs.transpose(), &obs.transpose()]);
    let t = &p_sim * a * p_sim.transpose();
    let ct = c * p_sim.transpose();
    let a11 = t.view((0, 0), (k, k)).into_owned();
    let a12 = t.view((0, k), (k, n - k)).into_owned();
    let a21 = t.view((k, 0), (n - k, k)).into_owned();
    let a22 = t.view((k, k), (n - k, n - k)).into_owned();
    let c2 = ct.view((0, k), (c.nrows(), n - k)).into_owned();
    let detectable = k == 0 || eig(&a11)?.is_hurwitz;
    Ok(DetectabilityDecomposition {
        p_sim,
        a11,
        a12,
        a21,
        a22,
        c2,
        unobservable_dim: k,
        detectable,
    })
}

/// Orthonormal rows spanning the left null space of `m` (`N·M = 0`).
///
/// Returns a `0 × rows` matrix when `m` has full row rank.
pub fn left_annihilator(m: &Mat) -> Mat {
    let r = m.nrows();
    if r == 0 {
        return Mat::zeros(0, 0);
    }
    if m.ncols() == 0 || m.amax() == 0.0 {
        return Mat::identity(r, r);
    }
    // padding with zero columns makes the thin U square (r × r)
    let padded = hstack(&[m, &Mat::zeros(r, r)]);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let rk = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    let null_cols: Vec<usize> = order[rk..].to_vec();
    Mat::from_fn(null_cols.len(), r, |i, j| u[(j, null_cols[i])])
}

fn rosenbrock(a: &Mat, e: &Mat, c: &Mat, s: Complex64) -> DMatrix<Complex64> {
    let n = a.nrows();
    let q = e.ncols();
    let p = c.nrows();
    DMatrix::from_fn(n + p, n + q, |i, j| {
        let v = if i < n && j < n {
            a[(i, j)]
        } else if i < n {
            e[(i, j - n)]
        } else if j < n {
            c[(i - n, j)]
        } else {
            0.0
        };
        let mut z = Complex64::new(v, 0.0);
        if i < n && i == j {
            z -= s;
        }
        z
    })
}

fn rel_smin(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        0.0
    } else {
        sv.min() / smax
    }
}

/// Finite invariant zeros of (A, E, C): values of s at which the Rosenbrock
/// pencil `[[A − sI, E], [C, 0]]` loses rank.
pub fn invariant_zeros(a: &Mat, e: &Mat, c: &Mat) -> LinalgResult<Vec<Complex64>> {
    ensure_square(a, "A")?;
    let n = a.nrows();
    if e.nrows() != n || c.ncols() != n {
        return Err(LinalgError::Dimension("E and C must conform with A".into()));
    }
    let q = e.ncols();
    let p = c.nrows();
    if rank(e, 1e-12) != q {
        return Err(LinalgError::Input("E must have full column rank".into()));
    }
    if rank(c, 1e-12) != p {
        return Err(LinalgError::Input("C must have full row rank".into()));
    }
    if q > p {
        // the dual system has the same zeros
        return invariant_zeros(&a.transpose(), &c.transpose(), &e.transpose());
    }
    let ce = c * e;
    if rank(&ce, 1e-10) == q {
        // zeros are the unobservable modes of (ΠA, C) with Π = I − E(CE)⁺C
        let proj = Mat::identity(n, n) - e * left_inverse(&ce)? * c;
        let dec = detectability_decomposition(&(proj * a), c)?;
        return dec.unobservable_modes();
    }
    // square the pencil by compressing the outputs, then screen the candidates
    let w = if p == q {
        Mat::identity(q, p)
    } else {
        Mat::from_fn(q, p, |i, j| {
            ((i * 7 + j * 13 + 3) as f64 * 0.618_033_988_75).sin()
        })
    };
    let cw = &w * c;
    let candidates = square_pencil_zeros(a, e, &cw)?;
    Ok(candidates
        .into_iter()
        .filter(|&s| rel_smin(&rosenbrock(a, e, c, s)) <= 1e-8)
        .collect())
}

fn square_pencil_zeros(a: &Mat, e: &Mat, c: &Mat) -> LinalgResult<Vec<Complex64>> {
    let n = a.nrows();
    let q = e.ncols();
    let dim = n + q;
    let m = super::block(&[&[a, e], &[c, &Mat::zeros(q, q)]]);
    let mut nmat = Mat::zeros(dim, dim);
    for i in 0..n {
        nmat[(i, i)] = 1.0;
    }
    let scale = 1.0 + a.amax();
    let shifts = [0.731_7, -1.413_9, 2.236_1, -0.577_2];
    let mut chosen = None;
    for &s0 in &shifts {
        let shifted = &m - &nmat * (s0 * scale);
        let sv = shifted.clone().svd(false, false).singular_values;
        if sv.min() > 1e-10 * sv.max() {
            chosen = Some((s0 * scale, shifted));
            break;
        }
    }
    let (s0, shifted) = chosen.ok_or_else(|| {
        LinalgError::Structure("Rosenbrock pencil is identically singular".into())
    })?;
    let k = shifted
        .try_inverse()
        .ok_or_else(|| LinalgError::Numeric("shifted pencil inversion failed".into()))?
        * &nmat;
    let kscale = k.amax().max(f64::MIN_POSITIVE);
    let spec = eig(&k)?;
    let mut zeros: Vec<Complex64> = spec
        .eigenvalues
        .iter()
        .filter(|mu| mu.norm() > 1e-6 * kscale)
        .map(|mu| Complex64::new(s0, 0.0) + mu.inv())
        .collect();
    zeros.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn observable_pair_has_no_hidden_block() {
        let d =
            detectability_decomposition(&mat(&[&[0.0, 1.0], &[0.0, 0.0]]), &mat(&[&[1.0, 0.0]]))
                .unwrap();
        assert_eq!(d.unobservable_dim, 0);
        assert_eq!(d.a11.nrows(), 0);
        assert!(d.detectable);
    }

    #[test]
    fn stable_hidden_mode_is_detectable() {
        // x2 drives x1 but not the other way round, and only x2 is measured
        let a = mat(&[&[-3.0, 0.5], &[0.0, -1.0]]);
        let c = mat(&[&[0.0, 1.0]]);
        let d = detectability_decomposition(&a, &c).unwrap();
        assert_eq!(d.unobservable_dim, 1);
        assert!((d.a11[(0, 0)] + 3.0).abs() < 1e-12);
        assert!(d.detectable);
        let t = &d.p_sim * &a * d.p_inv();
        assert!(t[(1, 0)].abs() < crate::linalg::TOL_DECOMP);
        let ct = &c * d.p_inv();
        assert!(ct[(0, 0)].abs() < crate::linalg::TOL_DECOMP);
    }

    #[test]
    fn diagonal_hidden_mode() {
        let d =
            detectability_decomposition(&mat(&[&[-3.0, 0.0], &[0.0, -1.0]]), &mat(&[&[0.0, 1.0]]))
                .unwrap();
        assert_eq!(d.unobservable_dim, 1);
        assert!((d.a11[(0, 0)] + 3.0).abs() < 1e-12);
        assert!(d.detectable);
    }

    #[test]
    fn unstable_hidden_mode_not_detectable() {
        let d =
            detectability_decomposition(&mat(&[&[3.0, 0.0], &[0.0, -1.0]]), &mat(&[&[0.0, 1.0]]))
                .unwrap();
        assert_eq!(d.unobservable_dim, 1);
        assert!(!d.detectable);
    }

    #[test]
    fn annihilator_of_axis() {
        let n = left_annihilator(&mat(&[&[0.0], &[1.0]]));
        assert_eq!(n.nrows(), 1);
        assert!((n[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(n[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn annihilator_of_full_rank_is_empty() {
        assert_eq!(left_annihilator(&Mat::identity(3, 3)).nrows(), 0);
    }

    #[test]
    fn annihilator_of_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = Mat::from_fn(4, 1, |_, _| rng.random_range(-1.0..1.0));
            let v = Mat::from_fn(1, 2, |_, _| rng.random_range(-1.0..1.0));
            let m = u * v;
            let n = left_annihilator(&m);
            assert_eq!(n.nrows(), 3);
            assert!((&n * &m).amax() <= 1e-12 * m.norm());
            let gram = &n * n.transpose();
            assert!((gram - Mat::identity(3, 3)).amax() < 1e-12);
        }
    }

    #[test]
    fn double_integrator_has_no_finite_zeros() {
        let z = invariant_zeros(
            &mat(&[&[0.0, 1.0], &[0.0, 0.0]]),
            &mat(&[&[0.0], &[1.0]]),
            &mat(&[&[1.0, 0.0]]),
        )
        .unwrap();
        assert!(z.is_empty(), "{z:?}");
    }

    #[test]
    fn input_output_decoupled_pencil_is_degenerate() {
        let err = invariant_zeros(
            &mat(&[&[-1.0, 0.0], &[0.0, -2.0]]),
            &mat(&[&[1.0], &[0.0]]),
            &mat(&[&[0.0, 1.0]]),
        )
        .unwrap_err();
        assert!(matches!(err, LinalgError::Structure(_)));
    }

    #[test]
    fn lead_system_zero() {
        // G(s) = (s + 3) / ((s + 1)(s + 2)) realized in controllable form
        let a = mat(&[&[0.0, 1.0], &[-2.0, -3.0]]);
        let e = mat(&[&[0.0], &[1.0]]);
        let c = mat(&[&[3.0, 1.0]]);
        let z = invariant_zeros(&a, &e, &c).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - Complex64::new(-3.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn relative_degree_one_matches_determinant_roots() {
        // brute force: det of the 3×3 pencil is a polynomial of degree ≤ 1 here;
        // sample it and solve for the root
        let a = mat(&[&[-1.0, 2.0], &[0.5, -4.0]]);
        let e = mat(&[&[1.0], &[1.0]]);
        let c = mat(&[&[1.0, 0.0]]);
        let det = |s: f64| {
            let m = crate::linalg::block(&[
                &[&(&a - Mat::identity(2, 2) * s), &e],
                &[&c, &Mat::zeros(1, 1)],
            ]);
            m.determinant()
        };
        let (d0, d1) = (det(0.0), det(1.0));
        let root = -d0 / (d1 - d0);
        let z = invariant_zeros(&a, &e, &c).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0].re - root).abs() < 1e-10 && z[0].im.abs() < 1e-12);
    }
}
