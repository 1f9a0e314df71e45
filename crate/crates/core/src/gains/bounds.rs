use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{LmiCertificate, LmiKind, Weighting};
use crate::error::{GainError, GainResult, LinalgError};
use crate::linalg::{
    block, eig, inverse, lambda_max_sym, norm2, solve_lyapunov, solve_riccati, symmetrize, Mat,
};

/// Relative inflation applied to certified gains so the witnesses are strict.
const CERT_SLACK: f64 = 1e-6;
/// Relative bisection tolerance of the H∞ computation.
const HINF_TOL: f64 = 1e-7;

fn check_system(a: &Mat, e: &Mat) -> GainResult<f64> {
    if !a.is_square() {
        return Err(GainError::Input("A must be square".into()));
    }
    if e.nrows() != a.nrows() {
        return Err(GainError::Input(format!(
            "E has {} rows, expected {}",
            e.nrows(),
            a.nrows()
        )));
    }
    if a.iter().chain(e.iter()).any(|v| !v.is_finite()) {
        return Err(GainError::Input("system matrices must be finite".into()));
    }
    let spec = eig(a)?;
    if !spec.is_hurwitz {
        return Err(GainError::Unbounded(format!(
            "A is not Hurwitz (max Re λ = {:.3e})",
            spec.max_real_part
        )));
    }
    Ok(spec.max_real_part)
}

/// Regularization added to `EEᵀ` when building strict witnesses.
fn regularization(eet: &Mat) -> f64 {
    let s = norm2(eet);
    if s > 0.0 {
        CERT_SLACK * s
    } else {
        CERT_SLACK
    }
}

/// Controllability Gramian `W` with `AW + WAᵀ = −EEᵀ`.
fn gramian(a: &Mat, eet: &Mat) -> GainResult<Mat> {
    Ok(solve_lyapunov(&a.transpose(), eet)?)
}

fn weighted_peak(root: &Mat, w: &Mat) -> f64 {
    if root.nrows() == 0 {
        return 0.0;
    }
    lambda_max_sym(&(root * w * root.transpose()))
        .max(0.0)
        .sqrt()
}

fn energy_to_peak(
    a: &Mat,
    e: &Mat,
    weighting: &Weighting,
    kind: LmiKind,
) -> GainResult<(f64, LmiCertificate)> {
    check_system(a, e)?;
    weighting.validate(a.nrows())?;
    let root = weighting.root();
    let eet = e * e.transpose();
    let rho = weighted_peak(&root, &gramian(a, &eet)?);

    // Q = ρ_c X⁻¹ with AX + XAᵀ = −(EEᵀ + δI) makes both blocks strict
    let n = a.nrows();
    let x = gramian(a, &(&eet + Mat::identity(n, n) * regularization(&eet)))?;
    let rho_c = (weighted_peak(&root, &x) * (1.0 + CERT_SLACK)).max(1e-9);
    let q = symmetrize(&(inverse(&x, "X")? * rho_c));
    Ok((
        rho,
        LmiCertificate {
            kind,
            rho: rho_c,
            q,
            upsilon: None,
            phi: None,
        },
    ))
}

/// Energy-to-peak gain `sup_t (xᵀPx)^½ / ‖d‖₂` of `ẋ = Ax + Ed`, `x(0) = 0`.
pub fn energy_to_peak_state_bound(
    a: &Mat,
    e: &Mat,
    p_metric: &Mat,
) -> GainResult<(f64, LmiCertificate)> {
    energy_to_peak(
        a,
        e,
        &Weighting::StateMetric(p_metric.clone()),
        LmiKind::EnergyToPeakState,
    )
}

/// Energy-to-peak gain `‖y‖_peak / ‖d‖₂` with `y = Cx`.
pub fn energy_to_peak_output_bound(a: &Mat, e: &Mat, c: &Mat) -> GainResult<(f64, LmiCertificate)> {
    energy_to_peak(
        a,
        e,
        &Weighting::Output(c.clone()),
        LmiKind::EnergyToPeakOutput,
    )
}

/// Search settings for the peak-to-peak bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSearch {
    pub grid_points: usize,
    /// Width of the final golden-section bracket relative to the interval.
    pub tol: f64,
}

impl Default for PeakSearch {
    fn default() -> Self {
        PeakSearch {
            grid_points: 64,
            tol: 1e-10,
        }
    }
}

/// Reachable-set matrix `S(υ)`: `(A + υ/2 I)S + S(A + υ/2 I)ᵀ = −EEᵀ/υ`.
fn shifted_reach(a: &Mat, eet: &Mat, upsilon: f64) -> GainResult<Mat> {
    let n = a.nrows();
    let shifted = a + Mat::identity(n, n) * (0.5 * upsilon);
    Ok(solve_lyapunov(&shifted.transpose(), &(eet / upsilon))?)
}

/// Peak-to-peak gain bound (state metric or output) by a one-dimensional
/// search over the decay parameter υ ∈ (0, −2·max Re λ(A)).
pub fn peak_to_peak_bound(
    a: &Mat,
    e: &Mat,
    weighting: &Weighting,
    search: PeakSearch,
) -> GainResult<(f64, LmiCertificate)> {
    let alpha = check_system(a, e)?;
    weighting.validate(a.nrows())?;
    let upper = -2.0 * alpha;
    if !(upper > 0.0) || !upper.is_finite() || search.grid_points < 3 {
        return Err(GainError::EmptyInterval(format!(
            "decay parameter interval (0, {upper}) is empty"
        )));
    }
    let kind = match weighting {
        Weighting::Output(_) => LmiKind::PeakToPeakOutput,
        Weighting::StateMetric(_) => LmiKind::PeakToPeakState,
    };
    let root = weighting.root();
    let eet = e * e.transpose();
    let bound_at = |frac: f64| -> GainResult<f64> {
        Ok(weighted_peak(&root, &shifted_reach(a, &eet, frac * upper)?))
    };

    // log grid on the fraction υ/upper ∈ [1e-4, 1 − 1e-4]
    let (lo, hi) = (1e-4_f64, 1.0 - 1e-4);
    let k = search.grid_points;
    let fracs: Vec<f64> = (0..k)
        .map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64))
        .collect();
    let mut values = Vec::with_capacity(k);
    for &f in &fracs {
        values.push(bound_at(f)?);
    }
    let best = (0..k)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    let mut left = if best == 0 {
        fracs[0] * 0.5
    } else {
        fracs[best - 1]
    };
    let mut right = if best + 1 == k {
        0.5 * (fracs[k - 1] + 1.0)
    } else {
        fracs[best + 1]
    };

    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = right - inv_phi * (right - left);
    let mut x2 = left + inv_phi * (right - left);
    let mut f1 = bound_at(x1)?;
    let mut f2 = bound_at(x2)?;
    while right - left > search.tol {
        if f1 <= f2 {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - inv_phi * (right - left);
            f1 = bound_at(x1)?;
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + inv_phi * (right - left);
            f2 = bound_at(x2)?;
        }
    }
    let (mut frac, mut rho) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if values[best] < rho {
        frac = fracs[best];
        rho = values[best];
    }

    let upsilon = frac * upper;
    let n = a.nrows();
    let x = shifted_reach(
        a,
        &(&eet + Mat::identity(n, n) * regularization(&eet)),
        upsilon,
    )?;
    let rho_c = (weighted_peak(&root, &x) * (1.0 + CERT_SLACK)).max(1e-9);
    let phi = rho_c * (1.0 - CERT_SLACK);
    let q = symmetrize(&(inverse(&x, "X")? * (phi / upsilon)));
    Ok((
        rho,
        LmiCertificate {
            kind,
            rho: rho_c,
            q,
            upsilon: Some(upsilon),
            phi: Some(phi),
        },
    ))
}

/// Largest singular value of `C(jωI − A)⁻¹E`.
pub fn frequency_response_gain(a: &Mat, e: &Mat, c: &Mat, omega: f64) -> GainResult<f64> {
    let n = a.nrows();
    if c.nrows() == 0 || e.ncols() == 0 {
        return Ok(0.0);
    }
    let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let d = if i == j {
            Complex64::new(0.0, omega)
        } else {
            Complex64::new(0.0, 0.0)
        };
        d - a[(i, j)]
    });
    let rhs = e.map(|v| Complex64::new(v, 0.0));
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LinalgError::Singular(format!("jωI − A singular at ω = {omega}")))?;
    let g = c.map(|v| Complex64::new(v, 0.0)) * x;
    Ok(g.svd(false, false).singular_values.max())
}

/// Imaginary-axis eigenvalue frequencies (ω ≥ 0) of the γ-Hamiltonian.
fn crossing_frequencies(a: &Mat, e: &Mat, c: &Mat, gamma: f64) -> GainResult<Vec<f64>> {
    let h = block(&[
        &[a, &(e * e.transpose() / (gamma * gamma))],
        &[&(-(c.transpose() * c)), &(-a.transpose())],
    ]);
    let floor = 1e-3 * a.norm();
    let mut out: Vec<f64> = eig(&h)?
        .eigenvalues
        .iter()
        .filter(|z| z.im >= 0.0 && z.re.abs() <= 1e-6 * z.norm().max(floor).max(1e-300))
        .map(|z| z.im)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    Ok(out)
}

/// Energy-to-energy (H∞) norm of `(A, E, C)` by the two-step level-set
/// iteration on the Hamiltonian, with a strict LMI witness.
pub fn hinf_bound(a: &Mat, e: &Mat, c: &Mat) -> GainResult<(f64, LmiCertificate)> {
    check_system(a, e)?;
    Weighting::Output(c.clone()).validate(a.nrows())?;
    let gamma = hinf_norm(a, e, c)?;
    let cert = hinf_certificate(a, e, c, gamma)?;
    Ok((gamma, cert))
}

fn hinf_norm(a: &Mat, e: &Mat, c: &Mat) -> GainResult<f64> {
    if e.ncols() == 0 || c.nrows() == 0 || norm2(e) == 0.0 || norm2(c) == 0.0 {
        return Ok(0.0);
    }
    let mut lb = frequency_response_gain(a, e, c, 0.0)?;
    for z in eig(a)?.eigenvalues {
        lb = lb.max(frequency_response_gain(a, e, c, z.norm())?);
        lb = lb.max(frequency_response_gain(a, e, c, z.im.abs())?);
    }
    if lb == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..60 {
        let gamma = lb * (1.0 + 2.0 * HINF_TOL);
        let freqs = crossing_frequencies(a, e, c, gamma)?;
        if freqs.is_empty() {
            return Ok(gamma);
        }
        let mut candidates: Vec<f64> = freqs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        candidates.extend(freqs.iter().copied());
        let mut next = lb;
        for w in candidates {
            next = next.max(frequency_response_gain(a, e, c, w)?);
        }
        if next <= lb * (1.0 + HINF_TOL) {
            return Ok(gamma);
        }
        lb = next;
    }
    Err(GainError::Linalg(LinalgError::Numeric(
        "H∞ level-set iteration did not converge".into(),
    )))
}

fn hinf_certificate(a: &Mat, e: &Mat, c: &Mat, gamma: f64) -> GainResult<LmiCertificate> {
    let n = a.nrows();
    let eet = e * e.transpose();
    let ctc = c.transpose() * c;
    let cert = |rho: f64, q: Mat| LmiCertificate {
        kind: LmiKind::Hinf,
        rho,
        q: symmetrize(&q),
        upsilon: None,
        phi: None,
    };
    if gamma == 0.0 {
        // one of E, C vanishes: a scaled Lyapunov matrix works for any ρ > 0
        let rho = 1e-9;
        let p = solve_lyapunov(a, &Mat::identity(n, n))?;
        let s = if norm2(&eet) == 0.0 {
            2.0 * norm2(&ctc) / rho + 1.0
        } else {
            0.5 * rho / norm2(&(&p * &eet * &p))
        };
        return Ok(cert(rho, p * s));
    }
    // the regularized Riccati needs ρ above the norm of [C; √ε I]
    let resolvent = hinf_norm(a, e, &Mat::identity(n, n))?;
    for k in 0..12 {
        let rho = gamma * (1.0 + CERT_SLACK * 4f64.powi(k));
        let eps = (1e-4 * rho / resolvent).powi(2);
        let g = -(&eet) / (rho * rho);
        let q_ric = &ctc + Mat::identity(n, n) * eps;
        let Ok(x) = solve_riccati(a, &symmetrize(&g), &q_ric) else {
            continue;
        };
        let candidate = cert(rho, x / rho);
        let check = super::check_lmi_feasibility(&candidate, a, e, &Weighting::Output(c.clone()))?;
        if check.feasible {
            return Ok(candidate);
        }
    }
    Err(GainError::Linalg(LinalgError::Numeric(
        "could not build a strict H∞ witness".into(),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;

    #[test]
    fn scalar_energy_to_peak() {
        let (rho, _) =
            energy_to_peak_state_bound(&mat(&[&[-1.0]]), &mat(&[&[1.0]]), &mat(&[&[1.0]])).unwrap();
        assert!((rho - 0.5_f64.sqrt()).abs() < 1e-12);
        let (rho, _) =
            energy_to_peak_output_bound(&mat(&[&[-1.0]]), &mat(&[&[1.0]]), &mat(&[&[1.0]]))
                .unwrap();
        assert!((rho - 0.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_input_path_gives_zero_gain() {
        let a = mat(&[&[-1.0, 0.0], &[1.0, -2.0]]);
        let e = Mat::zeros(2, 1);
        let (rho, _) = energy_to_peak_state_bound(&a, &e, &Mat::identity(2, 2)).unwrap();
        assert_eq!(rho, 0.0);
        let (rho, _) = peak_to_peak_bound(
            &a,
            &e,
            &Weighting::Output(mat(&[&[1.0, 0.0]])),
            PeakSearch::default(),
        )
        .unwrap();
        assert_eq!(rho, 0.0);
    }

    #[test]
    fn zero_output_and_homogeneity() {
        let a = mat(&[&[-1.0]]);
        let e = mat(&[&[1.0]]);
        let (rho, _) = energy_to_peak_output_bound(&a, &e, &mat(&[&[0.0]])).unwrap();
        assert_eq!(rho, 0.0);
        let (r1, _) = energy_to_peak_output_bound(&a, &e, &mat(&[&[1.5]])).unwrap();
        let (r2, _) = energy_to_peak_output_bound(&a, &e, &mat(&[&[3.0]])).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-12);
    }

    #[test]
    fn unstable_system_is_unbounded() {
        let err = energy_to_peak_output_bound(&mat(&[&[0.5]]), &mat(&[&[1.0]]), &mat(&[&[1.0]]))
            .unwrap_err();
        assert!(matches!(err, GainError::Unbounded(_)));
        let err = hinf_bound(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &mat(&[&[1.0]])).unwrap_err();
        assert!(matches!(err, GainError::Unbounded(_)));
    }

    #[test]
    fn scalar_peak_to_peak_is_tight() {
        let (rho, cert) = peak_to_peak_bound(
            &mat(&[&[-1.0]]),
            &mat(&[&[1.0]]),
            &Weighting::Output(mat(&[&[1.0]])),
            PeakSearch::default(),
        )
        .unwrap();
        assert!((rho - 1.0).abs() < 1e-6, "{rho}");
        assert!((cert.upsilon.unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn two_state_peak_to_peak_bracket() {
        let (rho, _) = peak_to_peak_bound(
            &mat(&[&[-1.0, 0.0], &[0.0, -2.0]]),
            &Mat::identity(2, 2),
            &Weighting::Output(mat(&[&[1.0, 0.0]])),
            PeakSearch::default(),
        )
        .unwrap();
        assert!((1.0..=1.5).contains(&rho), "{rho}");
    }

    #[test]
    fn scalar_hinf() {
        let (g, _) = hinf_bound(&mat(&[&[-1.0]]), &mat(&[&[1.0]]), &mat(&[&[1.0]])).unwrap();
        assert!((g - 1.0).abs() < 1e-6);
        let (g, _) = hinf_bound(&mat(&[&[-1.0]]), &mat(&[&[1.0]]), &mat(&[&[2.0]])).unwrap();
        assert!((g - 2.0).abs() < 2e-6);
    }

    #[test]
    fn resonant_hinf_peak() {
        // lightly damped second-order section: peak 1/(2ζ√(1−ζ²)) for unit DC gain
        let zeta: f64 = 0.1;
        let a = mat(&[&[0.0, 1.0], &[-1.0, -2.0 * zeta]]);
        let e = mat(&[&[0.0], &[1.0]]);
        let c = mat(&[&[1.0, 0.0]]);
        let (g, _) = hinf_bound(&a, &e, &c).unwrap();
        let exact = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        assert!((g - exact).abs() / exact < 1e-6, "{g} vs {exact}");
    }
}
