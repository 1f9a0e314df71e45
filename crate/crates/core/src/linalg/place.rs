//! Observer-gain eigenvalue assignment through a Sylvester equation.
//!
//! For a real target matrix `F` carrying the desired spectrum and a generic
//! `G`, the solution of `AᵀX − XF = CᵀG` gives `Aᵀ − Cᵀ(GX⁻¹) = XFX⁻¹`,
//! so `L = (GX⁻¹)ᵀ` places `eig(A − LC)`. The method needs the desired set to
//! avoid `eig(A)`; `F` is built non-derogatory (one Jordan chain per repeated
//! pole) so a single output can still reach every pole.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TOL_POLE;
use super::{detectability_decomposition, eig, ensure_finite, ensure_square, solve_sylvester, Mat};
use crate::error::{LinalgError, LinalgResult};

/// Checks that `desired` is a self-conjugate list of finite poles of size `n`.
pub fn validate_pole_set(desired: &[Complex64], n: usize) -> LinalgResult<()> {
    if desired.len() != n {
        return Err(LinalgError::Input(format!(
            "expected {n} desired poles, got {}",
            desired.len()
        )));
    }
    if desired
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(LinalgError::Input("desired poles must be finite".into()));
    }
    let mut unmatched: Vec<Complex64> = desired.iter().filter(|z| z.im != 0.0).copied().collect();
    while let Some(z) = unmatched.pop() {
        let tol = 1e-12 * (1.0 + z.norm());
        match unmatched.iter().position(|w| (w - z.conj()).norm() <= tol) {
            Some(i) => {
                unmatched.swap_remove(i);
            }
            None => {
                return Err(LinalgError::Input(format!(
                    "desired poles are not closed under conjugation ({z} has no partner)"
                )))
            }
        }
    }
    Ok(())
}

/// Real block upper-bidiagonal matrix whose spectrum is `poles`.
fn target_matrix(poles: &[Complex64]) -> Mat {
    let n = poles.len();
    // real poles first, then one representative per conjugate pair (im > 0)
    let mut reals: Vec<f64> = poles.iter().filter(|z| z.im == 0.0).map(|z| z.re).collect();
    reals.sort_by(f64::total_cmp);
    let mut pairs: Vec<Complex64> = poles.iter().filter(|z| z.im > 0.0).copied().collect();
    pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut f = Mat::zeros(n, n);
    let mut i = 0;
    let mut prev_real: Option<f64> = None;
    for r in reals {
        f[(i, i)] = r;
        if prev_real == Some(r) {
            f[(i - 1, i)] = 1.0;
        }
        prev_real = Some(r);
        i += 1;
    }
    let mut prev_pair: Option<Complex64> = None;
    for z in pairs {
        f[(i, i)] = z.re;
        f[(i + 1, i + 1)] = z.re;
        f[(i, i + 1)] = z.im;
        f[(i + 1, i)] = -z.im;
        if prev_pair == Some(z) {
            f[(i - 2, i)] = 1.0;
            f[(i - 1, i + 1)] = 1.0;
        }
        prev_pair = Some(z);
        i += 2;
    }
    f
}

/// Greedy nearest matching of two spectra; returns the worst pair distance.
pub(crate) fn spectrum_mismatch(computed: &[Complex64], desired: &[Complex64]) -> f64 {
    let mut pool: Vec<Complex64> = computed.to_vec();
    let mut worst: f64 = 0.0;
    for d in desired {
        let Some((idx, dist)) = pool
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (c - d).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return f64::INFINITY;
        };
        worst = worst.max(dist);
        pool.swap_remove(idx);
    }
    worst
}

/// Output-injection gain `L` with `eig(A − LC) = desired`.
pub fn place_observer_poles(a: &Mat, c: &Mat, desired: &[Complex64]) -> LinalgResult<Mat> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(c, "C")?;
    let n = a.nrows();
    let p = c.nrows();
    if c.ncols() != n {
        return Err(LinalgError::Dimension(format!(
            "C has {} columns, expected {n}",
            c.ncols()
        )));
    }
    validate_pole_set(desired, n)?;
    if n == 0 {
        return Ok(Mat::zeros(0, p));
    }

    let dec = detectability_decomposition(a, c)?;
    if !dec.is_observable() {
        let modes = dec.unobservable_modes()?;
        let culprit = modes
            .first()
            .map(|z| format!("{z}"))
            .unwrap_or_else(|| "?".into());
        return Err(LinalgError::Synthesis(format!(
            "(A, C) is not observable: PBH rank test fails at λ = {culprit}"
        )));
    }

    let spec_a = eig(a)?;
    let scale = 1.0_f64.max(a.amax());
    for d in desired {
        if spec_a
            .eigenvalues
            .iter()
            .any(|z| (z - d).norm() <= 1e-8 * scale)
        {
            return Err(LinalgError::Input(format!(
                "desired pole {d} coincides with an eigenvalue of A"
            )));
        }
    }

    let f = target_matrix(desired);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0b5e);
    let mut best: Option<(f64, Mat)> = None;
    for _ in 0..24 {
        let g = Mat::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
        let x = match solve_sylvester(&a.transpose(), &f, &(c.transpose() * &g)) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let Some(xinv) = x.clone().try_inverse() else {
            continue;
        };
        let l = (g * xinv).transpose();
        if l.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let closed = eig(&(a - &l * c))?;
        let mismatch = spectrum_mismatch(&closed.eigenvalues, desired);
        if mismatch <= TOL_POLE {
            return Ok(l);
        }
        if best.as_ref().is_none_or(|(m, _)| mismatch < *m) {
            best = Some((mismatch, l));
        }
    }
    Err(LinalgError::Synthesis(format!(
        "pole placement missed the targets (best mismatch {:.3e})",
        best.map_or(f64::INFINITY, |(m, _)| m)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;

    fn reals(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&r| Complex64::new(r, 0.0)).collect()
    }

    #[test]
    fn scalar_placement() {
        let l = place_observer_poles(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &reals(&[-2.0])).unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn double_integrator_matches_characteristic_polynomial() {
        // s² + l1 s + l2 = s² + 3s + 2
        let l = place_observer_poles(
            &mat(&[&[0.0, 1.0], &[0.0, 0.0]]),
            &mat(&[&[1.0, 0.0]]),
            &reals(&[-1.0, -2.0]),
        )
        .unwrap();
        assert!((l[(0, 0)] - 3.0).abs() < 1e-9);
        assert!((l[(1, 0)] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn unobservable_pair_names_the_mode() {
        let err = place_observer_poles(
            &mat(&[&[1.0, 0.0], &[0.0, 2.0]]),
            &mat(&[&[1.0, 0.0]]),
            &reals(&[-1.0, -2.0]),
        )
        .unwrap_err();
        match err {
            LinalgError::Synthesis(msg) => assert!(msg.contains('2'), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_pole_sets() {
        let a = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let c = mat(&[&[1.0, 0.0]]);
        assert!(matches!(
            place_observer_poles(&a, &c, &reals(&[-1.0])),
            Err(LinalgError::Input(_))
        ));
        let lonely = vec![Complex64::new(-1.0, 1.0), Complex64::new(-1.0, 2.0)];
        assert!(matches!(
            place_observer_poles(&a, &c, &lonely),
            Err(LinalgError::Input(_))
        ));
    }

    #[test]
    fn complex_and_repeated_targets() {
        let a = mat(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, -2.0, 0.5]]);
        let c = mat(&[&[1.0, 0.0, 0.0]]);
        let desired = vec![
            Complex64::new(-1.0, 2.0),
            Complex64::new(-1.0, -2.0),
            Complex64::new(-3.0, 0.0),
        ];
        let l = place_observer_poles(&a, &c, &desired).unwrap();
        let got = eig(&(&a - &l * &c)).unwrap().eigenvalues;
        assert!(spectrum_mismatch(&got, &desired) < TOL_POLE);

        let repeated = reals(&[-2.0, -2.0, -5.0]);
        let l = place_observer_poles(&a, &c, &repeated).unwrap();
        let got = eig(&(&a - &l * &c)).unwrap().eigenvalues;
        assert!(spectrum_mismatch(&got, &repeated) < TOL_POLE);
    }
}
