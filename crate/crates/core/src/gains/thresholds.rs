use super::{
    energy_to_peak_output_bound, energy_to_peak_state_bound, hinf_bound, peak_to_peak_bound,
    GainBounds, LmiCertificate, NormKind, PeakSearch, Weighting,
};
use crate::error::{GainError, GainResult};
use crate::linalg::{eig, norm2, Mat};

/// Ellipsoid levels and thresholds of a detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionThresholds {
    pub gains: GainBounds,
    /// Largest fault norm that keeps the residual under `r_th`.
    pub f_max: f64,
    /// Level of the nominal set.
    pub zeta: f64,
    /// Level of the bounded-fault set.
    pub zeta_bar: f64,
    pub theta_th: f64,
}

/// Computes `π`, `π̄` for the chosen norm pair and the derived levels.
///
/// `π` maps `f̄` to the residual `Ce`; `π̄` maps it to `(eᵀPe)^½`. The
/// residual gain is H∞ for [`NormKind::L2toL2`], while the state metric
/// always uses the peak in time (energy-to-peak for L2 inputs).
pub fn compute_detection_thresholds(
    a_err: &Mat,
    e_bar: &Mat,
    c: &Mat,
    p: &Mat,
    r_th: f64,
    sigma_bar: f64,
    norm_kind: NormKind,
) -> GainResult<DetectionThresholds> {
    if !(r_th > 0.0) || !r_th.is_finite() {
        return Err(GainError::Input(format!(
            "r_th must be positive, got {r_th}"
        )));
    }
    if !(sigma_bar >= 0.0) || !sigma_bar.is_finite() {
        return Err(GainError::Input(format!(
            "sigma_bar must be nonnegative, got {sigma_bar}"
        )));
    }
    let (gains, _) = detection_gains(a_err, e_bar, c, p, norm_kind)?;
    let GainBounds { pi, pi_bar, .. } = gains;
    if pi <= 0.0 {
        return Err(GainError::ThresholdUndefined(
            "the fault channels do not reach the residual (π = 0)".into(),
        ));
    }
    let f_max = r_th / pi;
    let zeta = (pi_bar * f_max).powi(2);
    let zeta_bar = (zeta.sqrt() + pi_bar * sigma_bar).powi(2);
    Ok(DetectionThresholds {
        gains: GainBounds {
            pi,
            pi_bar,
            norm_kind,
        },
        f_max,
        zeta,
        zeta_bar,
        theta_th: norm2(e_bar) * f_max,
    })
}

/// `π`, `π̄` together with the certificates witnessing them, residual gain first.
pub fn detection_gains(
    a_err: &Mat,
    e_bar: &Mat,
    c: &Mat,
    p: &Mat,
    norm_kind: NormKind,
) -> GainResult<(GainBounds, [LmiCertificate; 2])> {
    let ((pi, cert_pi), (pi_bar, cert_pi_bar)) = match norm_kind {
        NormKind::L2toL2 => (
            hinf_bound(a_err, e_bar, c)?,
            energy_to_peak_state_bound(a_err, e_bar, p)?,
        ),
        NormKind::L2toPeak => (
            energy_to_peak_output_bound(a_err, e_bar, c)?,
            energy_to_peak_state_bound(a_err, e_bar, p)?,
        ),
        NormKind::PeakToPeak => (
            peak_to_peak_bound(
                a_err,
                e_bar,
                &Weighting::Output(c.clone()),
                PeakSearch::default(),
            )?,
            peak_to_peak_bound(
                a_err,
                e_bar,
                &Weighting::StateMetric(p.clone()),
                PeakSearch::default(),
            )?,
        ),
    };
    Ok((
        GainBounds {
            pi,
            pi_bar,
            norm_kind,
        },
        [cert_pi, cert_pi_bar],
    ))
}

/// Tolerance band used for the dominant-pole settling rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SettlingBand {
    #[default]
    TwoPercent,
    FivePercent,
}

impl SettlingBand {
    /// Number of dominant time constants to enter the band.
    pub fn time_constants(self) -> f64 {
        match self {
            SettlingBand::TwoPercent => 4.0,
            SettlingBand::FivePercent => 3.0,
        }
    }

    /// Relative half-width of the band.
    pub fn fraction(self) -> f64 {
        match self {
            SettlingBand::TwoPercent => 0.02,
            SettlingBand::FivePercent => 0.05,
        }
    }
}

/// Dominant-pole settling time `4/|max Re λ|` (2% band).
pub fn settling_time_bound(a_err: &Mat) -> GainResult<f64> {
    settling_time_bound_with(a_err, SettlingBand::TwoPercent)
}

pub fn settling_time_bound_with(a_err: &Mat, band: SettlingBand) -> GainResult<f64> {
    let spec = eig(a_err)?;
    if !spec.is_hurwitz {
        return Err(GainError::Unbounded(format!(
            "error dynamics are not Hurwitz (max Re λ = {:.3e})",
            spec.max_real_part
        )));
    }
    Ok(band.time_constants() / spec.max_real_part.abs())
}
