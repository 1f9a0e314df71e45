//! Runtime verification over simulation traces: invariant-ellipsoid
//! membership, the fault signature `θ`, per-step mode classification and
//! settling / sliding checks.

mod checks;
mod theta;

pub use checks::{
    isolability_check, settling_check, settling_check_series, sliding_check, steady_state_error,
    IsolabilityReport, SlidingReport,
};
pub use theta::{error_samples, theta_signal, ErrorSamples};

use std::fmt;
use std::io::Write;

use crate::error::{MonitorError, MonitorResult};
use crate::gains::EllipsoidSet;
use crate::linalg::Vector;
use crate::observer::{LtiModel, Observer};
use crate::plant::Trace;

/// How `ė` is estimated from sampled errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DerivativeMethod {
    #[default]
    BackwardDifference,
    /// `s/(as + 1)` with time constant `a` (seconds).
    HighPassFilter { a: f64 },
}

/// Settling set `E_t`, centered on the steady error, and its deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct SettlingSpec {
    pub e_t: EllipsoidSet,
    pub t_s: f64,
}

/// Sliding-motion sets: `E_s` over `e_y`, `E_e` over `(e1, e_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingSpec {
    pub e_s: EllipsoidSet,
    pub e_e: EllipsoidSet,
    pub t_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub e_n: EllipsoidSet,
    pub e_f: EllipsoidSet,
    pub theta_th: f64,
    pub eps_v: f64,
    pub deriv: DerivativeMethod,
    pub settling: Option<SettlingSpec>,
    pub sliding: Option<SlidingSpec>,
}

impl MonitorConfig {
    pub fn new(
        e_n: EllipsoidSet,
        e_f: EllipsoidSet,
        theta_th: f64,
        eps_v: f64,
    ) -> MonitorResult<Self> {
        let cfg = MonitorConfig {
            e_n,
            e_f,
            theta_th,
            eps_v,
            deriv: DerivativeMethod::default(),
            settling: None,
            sliding: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `E_n`, `E_f` at levels `ζ ≤ ζ̄` of `P`, with `eps_V = 1e−3·ζ/t_s`.
    pub fn from_levels(
        p: &crate::linalg::Mat,
        zeta: f64,
        zeta_bar: f64,
        theta_th: f64,
        t_s: f64,
    ) -> MonitorResult<Self> {
        if !(t_s > 0.0) || !t_s.is_finite() {
            return Err(MonitorError::Config(format!(
                "t_s must be positive, got {t_s}"
            )));
        }
        Self::new(
            EllipsoidSet::new(p.clone(), zeta)?,
            EllipsoidSet::new(p.clone(), zeta_bar)?,
            theta_th,
            default_eps_v(zeta, t_s),
        )
    }

    pub fn validate(&self) -> MonitorResult<()> {
        if self.e_n.p() != self.e_f.p() || self.e_n.center() != self.e_f.center() {
            return Err(MonitorError::Config(
                "E_n and E_f must share P and center".into(),
            ));
        }
        if self.e_n.level() > self.e_f.level() {
            return Err(MonitorError::Config(format!(
                "E_n level {} exceeds E_f level {}",
                self.e_n.level(),
                self.e_f.level()
            )));
        }
        if !(self.theta_th > 0.0) || !self.theta_th.is_finite() {
            return Err(MonitorError::Config(format!(
                "theta_th must be positive, got {}",
                self.theta_th
            )));
        }
        if !(self.eps_v >= 0.0) || !self.eps_v.is_finite() {
            return Err(MonitorError::Config(format!(
                "eps_V must be nonnegative, got {}",
                self.eps_v
            )));
        }
        if let Some(s) = &self.settling {
            if s.e_t.dim() != self.e_n.dim() || !(s.t_s >= 0.0) {
                return Err(MonitorError::Config(
                    "settling set does not match E_n or t_s < 0".into(),
                ));
            }
        }
        if let Some(s) = &self.sliding {
            if s.e_e.dim() < s.e_s.dim() || !(s.t_s >= 0.0) {
                return Err(MonitorError::Config(
                    "sliding sets are inconsistent or t_s < 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Default `V̇` activity floor: `1e−3·ζ/t_s`.
pub fn default_eps_v(zeta: f64, t_s: f64) -> f64 {
    1e-3 * zeta / t_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Nominal,
    Transient,
    Faulty,
    ConvergenceIssue,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Nominal,
        Mode::Transient,
        Mode::Faulty,
        Mode::ConvergenceIssue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nominal => "Nominal",
            Mode::Transient => "Transient",
            Mode::Faulty => "Faulty",
            Mode::ConvergenceIssue => "ConvergenceIssue",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Set memberships of one sample. `in_e_t` is `None` without a settling spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Memberships {
    pub in_e_n: bool,
    pub in_e_f: bool,
    pub in_e_t: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub time: f64,
    pub mode: Mode,
    pub v: f64,
    pub v_dot: f64,
    pub theta_norm: f64,
    /// `|V̇| > eps_V`.
    pub v_active: bool,
    pub memberships: Memberships,
}

/// The decision table.
///
/// | | `V ∈ E_n` | `V ∈ E_f ∖ E_n` | `V ∉ E_f` |
/// |---|---|---|---|
/// | `‖θ‖ < θ_th` | Nominal | ConvergenceIssue | ConvergenceIssue |
/// | `‖θ‖ ≥ θ_th` | Transient | Faulty | ConvergenceIssue |
///
/// A fault signature with the error still inside `E_n` is Transient
/// whether or not `|V̇| > eps_V`, because at fault onset the error starts at
/// rest; the activity flag is reported separately in [`Verdict::v_active`].
/// `in_e_n` without `in_e_f` cannot happen for nested sets and is read as
/// `V ∉ E_f`. A NaN `‖θ‖` counts as a signature.
pub fn classify_step(theta_norm: f64, theta_th: f64, in_e_n: bool, in_e_f: bool) -> Mode {
    let signature = !(theta_norm < theta_th);
    match (signature, in_e_n && in_e_f, in_e_f) {
        (_, _, false) => Mode::ConvergenceIssue,
        (false, true, true) => Mode::Nominal,
        (false, false, true) => Mode::ConvergenceIssue,
        (true, true, true) => Mode::Transient,
        (true, false, true) => Mode::Faulty,
    }
}

/// Per-sample verdicts for observer `k` of the trace.
pub fn classify(
    trace: &Trace,
    k: usize,
    observer: &Observer,
    model: &LtiModel,
    config: &MonitorConfig,
) -> MonitorResult<Vec<Verdict>> {
    config.validate()?;
    if config.e_n.dim() != observer.state_dim() {
        return Err(MonitorError::Config(format!(
            "E_n is {}-dimensional, the observer error is {}-dimensional",
            config.e_n.dim(),
            observer.state_dim()
        )));
    }
    let theta = theta_signal(trace, k, observer, model, config.deriv)?;
    let es = error_samples(trace, k, observer, config.deriv)?;
    let p = config.e_n.p();
    Ok((0..trace.len())
        .map(|i| {
            let e = &es.e[i];
            let v = config.e_n.value(e);
            let v_dot = 2.0 * (e - config.e_n.center()).dot(&(p * &es.e_dot[i]));
            let theta_norm = theta[i].norm();
            let in_e_n = v <= config.e_n.level();
            let in_e_f = v <= config.e_f.level();
            let in_e_t = config.settling.as_ref().map(|s| s.e_t.contains(e));
            Verdict {
                time: trace.t[i],
                mode: classify_step(theta_norm, config.theta_th, in_e_n, in_e_f),
                v,
                v_dot,
                theta_norm,
                v_active: v_dot.abs() > config.eps_v,
                memberships: Memberships {
                    in_e_n,
                    in_e_f,
                    in_e_t,
                },
            }
        })
        .collect())
}

/// Mode counts in [`Mode::ALL`] order.
pub fn tally(verdicts: &[Verdict]) -> [usize; 4] {
    let mut out = [0; 4];
    for v in verdicts {
        out[Mode::ALL
            .iter()
            .position(|m| *m == v.mode)
            .expect("ALL is exhaustive")] += 1;
    }
    out
}

/// CSV with columns `t, mode, V, Vdot, theta_norm, V_active, in_E_n, in_E_f[, in_E_t]`.
pub fn write_verdict_csv<W: Write>(verdicts: &[Verdict], mut w: W) -> std::io::Result<()> {
    let with_t = verdicts
        .first()
        .is_some_and(|v| v.memberships.in_e_t.is_some());
    write!(w, "t,mode,V,Vdot,theta_norm,V_active,in_E_n,in_E_f")?;
    if with_t {
        write!(w, ",in_E_t")?;
    }
    writeln!(w)?;
    for v in verdicts {
        write!(
            w,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{},{},{}",
            v.time,
            v.mode,
            v.v,
            v.v_dot,
            v.theta_norm,
            u8::from(v.v_active),
            u8::from(v.memberships.in_e_n),
            u8::from(v.memberships.in_e_f)
        )?;
        if let Some(b) = v.memberships.in_e_t {
            write!(w, ",{}", u8::from(b))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub(crate) fn vector_norms(v: &[Vector]) -> Vec<f64> {
    v.iter().map(|x| x.norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_cells() {
        assert_eq!(classify_step(0.1, 1.0, true, true), Mode::Nominal);
        assert_eq!(classify_step(2.0, 1.0, false, true), Mode::Faulty);
        assert_eq!(
            classify_step(0.1, 1.0, false, false),
            Mode::ConvergenceIssue
        );
        assert_eq!(classify_step(0.1, 1.0, false, true), Mode::ConvergenceIssue);
        assert_eq!(classify_step(2.0, 1.0, true, true), Mode::Transient);
        assert_eq!(classify_step(1.0, 1.0, true, true), Mode::Transient);
        assert_eq!(
            classify_step(2.0, 1.0, false, false),
            Mode::ConvergenceIssue
        );
        assert_eq!(classify_step(f64::NAN, 1.0, true, true), Mode::Transient);
    }

    proptest! {
        #[test]
        fn outside_e_f_is_always_a_convergence_issue(
            theta in 0.0..10.0f64, th in 0.01..10.0f64, in_n: bool,
        ) {
            prop_assert_eq!(classify_step(theta, th, in_n, false), Mode::ConvergenceIssue);
        }
    }

    #[test]
    fn config_validation() {
        let p = crate::linalg::Mat::identity(2, 2);
        assert!(MonitorConfig::from_levels(&p, 1.0, 2.0, 0.1, 1.0).is_ok());
        assert!(MonitorConfig::from_levels(&p, 3.0, 2.0, 0.1, 1.0).is_err());
        assert!(MonitorConfig::from_levels(&p, 1.0, 2.0, 0.0, 1.0).is_err());
        let e_n = EllipsoidSet::new(p.clone(), 1.0).unwrap();
        let e_f = EllipsoidSet::new(p * 2.0, 2.0).unwrap();
        assert!(MonitorConfig::new(e_n, e_f, 0.1, 0.0).is_err());
        assert_eq!(default_eps_v(0.5, 2.0), 2.5e-4);
    }
}
