//! Residual generators: a full-order output observer, unknown-input observers
//! for fault isolation, and a sliding-mode observer for fault estimation.
//!
//! Synthesized observers hold matrices only. Their internal state vectors are
//! owned by the caller (the simulator), and [`Observer::derivative`] gives the
//! right-hand side of each observer ODE.

mod output;
mod sliding;
mod uio;

pub use output::{synth_output_observer, OutputObserver};
pub use sliding::{
    nu_injection, sliding_fault_estimate, synth_sliding, synth_sliding_with, SlidingModeObserver,
};
pub use uio::{check_uio_algebra, synth_uio, Uio, UioAlgebraReport};

use sha2::{Digest, Sha256};

use crate::error::{SynthError, SynthResult};
use crate::linalg::{detectability_decomposition, eig, hstack, place_observer_poles, Mat, Vector};
use num_complex::Complex64;

/// Plant `ẋ = Ax + Bu + E_f f + E_d f_d`, `y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    a: Mat,
    b: Mat,
    c: Mat,
    e_f: Mat,
    e_d: Mat,
}

impl LtiModel {
    /// Validates dimensions, finiteness and observability of (A, C).
    pub fn new(a: Mat, b: Mat, c: Mat, e_f: Mat, e_d: Mat) -> SynthResult<Self> {
        let n = a.nrows();
        if !a.is_square() || n == 0 {
            return Err(SynthError::Model("A must be square and non-empty".into()));
        }
        for (name, m, rows_ok) in [
            ("B", &b, b.nrows() == n),
            ("C", &c, c.ncols() == n),
            ("E_f", &e_f, e_f.nrows() == n),
            ("E_d", &e_d, e_d.nrows() == n),
        ] {
            if !rows_ok {
                return Err(SynthError::Model(format!(
                    "{name} is {}x{}, not conformable with a {n}-state model",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if c.nrows() == 0 {
            return Err(SynthError::Model("the model has no outputs".into()));
        }
        for (name, m) in [
            ("A", &a),
            ("B", &b),
            ("C", &c),
            ("E_f", &e_f),
            ("E_d", &e_d),
        ] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(SynthError::Model(format!("{name} has non-finite entries")));
            }
        }
        let dec = detectability_decomposition(&a, &c)?;
        if !dec.is_observable() {
            let modes = dec.unobservable_modes()?;
            return Err(SynthError::Model(format!(
                "(A, C) is not observable; unobservable modes {}",
                format_modes(&modes)
            )));
        }
        Ok(LtiModel { a, b, c, e_f, e_d })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn e_f(&self) -> &Mat {
        &self.e_f
    }
    pub fn e_d(&self) -> &Mat {
        &self.e_d
    }
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }
    pub fn nf(&self) -> usize {
        self.e_f.ncols()
    }
    pub fn nd(&self) -> usize {
        self.e_d.ncols()
    }

    /// `[E_f E_d]`, the combined fault distribution.
    pub fn e_bar(&self) -> Mat {
        hstack(&[&self.e_f, &self.e_d])
    }

    /// Same plant with channel `i` of `[E_f E_d]` as the monitored fault and
    /// every other channel treated as an unknown input.
    pub fn isolating(&self, i: usize) -> SynthResult<LtiModel> {
        let e_bar = self.e_bar();
        if i >= e_bar.ncols() {
            return Err(SynthError::Input(format!(
                "fault channel {i} out of range (model has {})",
                e_bar.ncols()
            )));
        }
        let others: Vec<usize> = (0..e_bar.ncols()).filter(|&j| j != i).collect();
        let e_d = e_bar.select_columns(others.iter());
        Ok(LtiModel {
            e_f: e_bar.columns(i, 1).into_owned(),
            e_d,
            ..self.clone()
        })
    }

    /// SHA-256 over the dimensions and IEEE-754 bit patterns of all matrices.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for m in [&self.a, &self.b, &self.c, &self.e_f, &self.e_d] {
            h.update((m.nrows() as u64).to_le_bytes());
            h.update((m.ncols() as u64).to_le_bytes());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    h.update(m[(i, j)].to_bits().to_le_bytes());
                }
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn format_modes(modes: &[Complex64]) -> String {
    let parts: Vec<String> = modes.iter().map(|z| format!("{z:.6}")).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Evenly spaced real poles `−2, −3, …`.
pub fn default_poles(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::new(-2.0 - k as f64, 0.0))
        .collect()
}

/// Output injection `K` making `A − KC` Hurwitz.
///
/// Places `desired` directly when (A, C) is observable. Otherwise splits off
/// the unobservable part, requires it to be stable, places the observable
/// block with the leading entries of `desired`, and leaves the unobservable
/// rows of the gain at zero.
pub(crate) fn stabilizing_injection(a: &Mat, c: &Mat, desired: &[Complex64]) -> SynthResult<Mat> {
    let dec = detectability_decomposition(a, c)?;
    if dec.is_observable() {
        return Ok(place_observer_poles(a, c, desired)?);
    }
    if !dec.detectable {
        return Err(SynthError::NotDetectable(format!(
            "unobservable modes {} are not all stable",
            format_modes(&dec.unobservable_modes()?)
        )));
    }
    let k = dec.unobservable_dim;
    let n = a.nrows();
    let obs = n - k;
    let mut kp = Mat::zeros(n, c.nrows());
    if obs > 0 {
        let targets = truncate_conjugate_safe(desired, obs)?;
        let k2 = place_observer_poles(&dec.a22, &dec.c2, &targets)?;
        kp.view_mut((k, 0), (obs, c.nrows())).copy_from(&k2);
    }
    Ok(dec.p_inv() * kp)
}

/// First `count` poles of `desired` without splitting a conjugate pair; if
/// that is impossible, spaced real poles are used instead.
fn truncate_conjugate_safe(desired: &[Complex64], count: usize) -> SynthResult<Vec<Complex64>> {
    let head: Vec<Complex64> = desired.iter().take(count).copied().collect();
    if crate::linalg::validate_pole_set(&head, count).is_ok() {
        Ok(head)
    } else {
        Ok(default_poles(count))
    }
}

pub(crate) fn ensure_stable_poles(desired: &[Complex64]) -> SynthResult<()> {
    if let Some(z) = desired.iter().find(|z| !(z.re < 0.0)) {
        return Err(SynthError::Input(format!(
            "desired pole {z} is not in the open left half plane"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_hurwitz(m: &Mat, what: &str) -> SynthResult<()> {
    let spec = eig(m)?;
    if spec.is_hurwitz {
        Ok(())
    } else {
        Err(SynthError::Linalg(crate::error::LinalgError::Synthesis(
            format!(
                "{what} is not Hurwitz (max Re λ = {:.3e})",
                spec.max_real_part
            ),
        )))
    }
}

/// Which detector a realization is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObserverKind {
    Output,
    Uio,
    Sliding,
}

impl ObserverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObserverKind::Output => "output",
            ObserverKind::Uio => "uio",
            ObserverKind::Sliding => "sliding",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "output" => Some(ObserverKind::Output),
            "uio" => Some(ObserverKind::Uio),
            "sliding" => Some(ObserverKind::Sliding),
            _ => None,
        }
    }
}

/// One synthesized detector.
#[derive(Debug, Clone, PartialEq)]
pub enum Observer {
    Output(OutputObserver),
    Uio(Uio),
    Sliding(SlidingModeObserver),
}

impl Observer {
    pub fn kind(&self) -> ObserverKind {
        match self {
            Observer::Output(_) => ObserverKind::Output,
            Observer::Uio(_) => ObserverKind::Uio,
            Observer::Sliding(_) => ObserverKind::Sliding,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Observer::Output(o) => o.l.nrows(),
            Observer::Uio(o) => o.f.nrows(),
            Observer::Sliding(o) => o.t_o.nrows(),
        }
    }

    /// Internal state that reproduces the state estimate `xhat` given the
    /// current output `y`.
    pub fn state_for_estimate(&self, xhat: &Vector, y: &Vector) -> Vector {
        match self {
            Observer::Output(_) => xhat.clone(),
            Observer::Uio(o) => xhat - &o.h * y,
            Observer::Sliding(o) => &o.t_o * xhat,
        }
    }

    /// State estimate in plant coordinates.
    pub fn estimate(&self, state: &Vector, y: &Vector) -> Vector {
        match self {
            Observer::Output(_) => state.clone(),
            Observer::Uio(o) => state + &o.h * y,
            Observer::Sliding(o) => &o.t_o_inv * state,
        }
    }

    /// Right-hand side of the observer ODE.
    pub fn derivative(
        &self,
        model: &LtiModel,
        state: &Vector,
        u: &Vector,
        y: &Vector,
    ) -> SynthResult<Vector> {
        if state.len() != self.state_dim() || u.len() != model.m() || y.len() != model.p() {
            return Err(SynthError::Input(format!(
                "observer signals have lengths state={}, u={}, y={}; expected {}, {}, {}",
                state.len(),
                u.len(),
                y.len(),
                self.state_dim(),
                model.m(),
                model.p()
            )));
        }
        Ok(match self {
            Observer::Output(o) => o.derivative(model, state, u, y),
            Observer::Uio(o) => o.derivative(model, state, u, y),
            Observer::Sliding(o) => o.derivative(state, u, y),
        })
    }

    /// Residual signal: `y − Cx̂` for the output observer and the UIO, the
    /// fault estimate for the sliding-mode observer.
    pub fn residual(&self, model: &LtiModel, state: &Vector, y: &Vector) -> Vector {
        match self {
            Observer::Output(_) | Observer::Uio(_) => y - model.c() * self.estimate(state, y),
            Observer::Sliding(o) => sliding_fault_estimate(o, &o.output_error(state, y)),
        }
    }

    /// Matrix governing the homogeneous estimation error.
    pub fn error_dynamics(&self) -> &Mat {
        match self {
            Observer::Output(o) => &o.a_err,
            Observer::Uio(o) => &o.f,
            Observer::Sliding(o) => &o.a_err,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;

    #[test]
    fn unobservable_model_rejected() {
        let err = LtiModel::new(
            mat(&[&[1.0, 0.0], &[0.0, 2.0]]),
            Mat::zeros(2, 1),
            mat(&[&[1.0, 0.0]]),
            Mat::zeros(2, 0),
            Mat::zeros(2, 0),
        )
        .unwrap_err();
        assert!(matches!(err, SynthError::Model(_)));
    }

    #[test]
    fn fingerprint_tracks_every_bit() {
        let m = LtiModel::new(
            mat(&[&[0.0, 1.0], &[0.0, 0.0]]),
            mat(&[&[0.0], &[1.0]]),
            mat(&[&[1.0, 0.0]]),
            mat(&[&[0.0], &[1.0]]),
            Mat::zeros(2, 0),
        )
        .unwrap();
        let mut a = m.a().clone();
        a[(0, 1)] = f64::from_bits(a[(0, 1)].to_bits() ^ 1);
        let m2 = LtiModel::new(
            a,
            m.b().clone(),
            m.c().clone(),
            m.e_f().clone(),
            m.e_d().clone(),
        )
        .unwrap();
        assert_ne!(m.fingerprint(), m2.fingerprint());
        assert_eq!(m.fingerprint().len(), 64);
    }

    #[test]
    fn isolating_splits_channels() {
        let m = LtiModel::new(
            mat(&[&[-1.0, 0.0], &[1.0, -2.0]]),
            mat(&[&[1.0], &[0.0]]),
            Mat::identity(2, 2),
            Mat::identity(2, 2),
            Mat::zeros(2, 0),
        )
        .unwrap();
        let iso = m.isolating(1).unwrap();
        assert_eq!(iso.e_f(), &mat(&[&[0.0], &[1.0]]));
        assert_eq!(iso.e_d(), &mat(&[&[1.0], &[0.0]]));
        assert!(m.isolating(2).is_err());
    }
}
