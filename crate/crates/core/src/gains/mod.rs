//! Induced-gain bounds of stable LTI error dynamics, their LMI witnesses, and
//! the ellipsoid levels and thresholds derived from them.
//!
//! Gains are computed by closed-form constructions (Gramians, shifted
//! Lyapunov solves, a Hamiltonian imaginary-axis test) rather than by a
//! semidefinite solver. Every bound comes with an [`LmiCertificate`] that
//! [`check_lmi_feasibility`] can re-check by eigenvalue tests alone.

mod bounds;
mod lmi;
mod thresholds;

pub use bounds::{
    energy_to_peak_output_bound, energy_to_peak_state_bound, frequency_response_gain, hinf_bound,
    peak_to_peak_bound, PeakSearch,
};
pub use lmi::{check_lmi_feasibility, LmiCheck};
pub use thresholds::{
    compute_detection_thresholds, detection_gains, settling_time_bound, settling_time_bound_with,
    DetectionThresholds, SettlingBand,
};

use crate::error::{GainError, GainResult};
use crate::linalg::{asymmetry, is_positive_definite, sqrtm_psd, Mat, Vector};

/// Which pair of signal norms a gain relates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2toL2,
    L2toPeak,
    PeakToPeak,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L2toL2 => "L2toL2",
            NormKind::L2toPeak => "L2toPeak",
            NormKind::PeakToPeak => "PeakToPeak",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "L2toL2" => Some(NormKind::L2toL2),
            "L2toPeak" => Some(NormKind::L2toPeak),
            "PeakToPeak" => Some(NormKind::PeakToPeak),
            _ => None,
        }
    }
}

/// Residual gain `pi` and state-metric gain `pi_bar` of a detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    pub pi: f64,
    pub pi_bar: f64,
    pub norm_kind: NormKind,
}

/// How the state enters the bounded quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum Weighting {
    /// Output `y = Cx`.
    Output(Mat),
    /// Metric `(xᵀPx)^½` for symmetric positive definite `P`.
    StateMetric(Mat),
}

impl Weighting {
    /// Matrix `R` with `|Rx|² = ` the weighted quantity squared.
    pub(crate) fn root(&self) -> Mat {
        match self {
            Weighting::Output(c) => c.clone(),
            Weighting::StateMetric(p) => sqrtm_psd(p),
        }
    }

    pub(crate) fn ncols(&self) -> usize {
        match self {
            Weighting::Output(c) => c.ncols(),
            Weighting::StateMetric(p) => p.ncols(),
        }
    }

    fn validate(&self, n: usize) -> GainResult<()> {
        match self {
            Weighting::Output(c) if c.ncols() != n => Err(GainError::Input(format!(
                "output map has {} columns, expected {n}",
                c.ncols()
            ))),
            Weighting::StateMetric(p) if p.nrows() != n || p.ncols() != n => {
                Err(GainError::Input(format!("state metric must be {n}x{n}")))
            }
            Weighting::StateMetric(p)
                if n > 0 && (asymmetry(p) > 1e-10 || !is_positive_definite(p)) =>
            {
                Err(GainError::Input(
                    "state metric must be symmetric positive definite".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Which gain bound an LMI certificate witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LmiKind {
    /// Energy-to-peak, state metric.
    EnergyToPeakState,
    /// Energy-to-peak, output.
    EnergyToPeakOutput,
    /// Peak-to-peak, state metric.
    PeakToPeakState,
    /// Peak-to-peak, output.
    PeakToPeakOutput,
    /// Energy-to-energy (H∞).
    Hinf,
}

impl LmiKind {
    pub const ALL: [LmiKind; 5] = [
        LmiKind::EnergyToPeakState,
        LmiKind::EnergyToPeakOutput,
        LmiKind::PeakToPeakState,
        LmiKind::PeakToPeakOutput,
        LmiKind::Hinf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LmiKind::EnergyToPeakState => "energy_to_peak_state",
            LmiKind::EnergyToPeakOutput => "energy_to_peak_output",
            LmiKind::PeakToPeakState => "peak_to_peak_state",
            LmiKind::PeakToPeakOutput => "peak_to_peak_output",
            LmiKind::Hinf => "hinf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        LmiKind::ALL.into_iter().find(|l| l.as_str() == s)
    }

    pub fn uses_state_metric(self) -> bool {
        matches!(self, LmiKind::EnergyToPeakState | LmiKind::PeakToPeakState)
    }
}

/// Witness data for one of the gain bounds.
///
/// `q` is the Lyapunov-type matrix; `upsilon` and `phi` are the scalars of the
/// peak-to-peak conditions and are `None` for the other kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiCertificate {
    pub kind: LmiKind,
    pub rho: f64,
    pub q: Mat,
    pub upsilon: Option<f64>,
    pub phi: Option<f64>,
}

/// Quadratic-form set `{e : (e − c)ᵀP(e − c) ≤ level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSet {
    p: Mat,
    level: f64,
    center: Vector,
}

impl EllipsoidSet {
    pub fn new(p: Mat, level: f64) -> GainResult<Self> {
        let n = p.nrows();
        Self::with_center(p, level, Vector::zeros(n))
    }

    pub fn with_center(p: Mat, level: f64, center: Vector) -> GainResult<Self> {
        if !p.is_square() || p.nrows() == 0 {
            return Err(GainError::Input(
                "ellipsoid matrix must be square and non-empty".into(),
            ));
        }
        if p.iter().any(|v| !v.is_finite()) || !level.is_finite() {
            return Err(GainError::Input("ellipsoid data must be finite".into()));
        }
        if asymmetry(&p) > 1e-10 {
            return Err(GainError::Input("ellipsoid matrix is not symmetric".into()));
        }
        if !is_positive_definite(&p) {
            return Err(GainError::Input(
                "ellipsoid matrix is not positive definite".into(),
            ));
        }
        if level < 0.0 {
            return Err(GainError::Input(format!(
                "ellipsoid level {level} is negative"
            )));
        }
        if center.len() != p.nrows() {
            return Err(GainError::Input(
                "ellipsoid center has the wrong length".into(),
            ));
        }
        Ok(EllipsoidSet { p, level, center })
    }

    pub fn p(&self) -> &Mat {
        &self.p
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// `(e − c)ᵀP(e − c)`.
    pub fn value(&self, e: &Vector) -> f64 {
        let d = e - &self.center;
        d.dot(&(&self.p * &d))
    }

    pub fn contains(&self, e: &Vector) -> bool {
        self.value(e) <= self.level
    }

    pub fn with_level(&self, level: f64) -> GainResult<Self> {
        Self::with_center(self.p.clone(), level, self.center.clone())
    }
}
