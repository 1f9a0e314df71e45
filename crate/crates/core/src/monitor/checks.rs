use super::theta::check_observer;
use super::{theta_signal, vector_norms, DerivativeMethod, SlidingSpec};
use crate::error::{MonitorError, MonitorResult};
use crate::gains::EllipsoidSet;
use crate::linalg::{left_annihilator, Mat, Vector};
use crate::observer::{LtiModel, Observer};
use crate::plant::Trace;

/// Per-sample result of the UIO isolability check.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolabilityReport {
    /// `‖Nθ‖` with `N` the left annihilator of `T·E_f`.
    pub residue: Vec<f64>,
    pub pass: Vec<bool>,
    /// `T·E_f` has full row rank, so nothing is left to check.
    pub vacuous: bool,
}

impl IsolabilityReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

/// Projects the monitored fault direction `T·E_f` out of `θ` and requires the
/// remainder to stay within `eps`: whatever is left would be forcing from the
/// decoupled channels.
pub fn isolability_check(
    trace: &Trace,
    k: usize,
    observer: &Observer,
    model: &LtiModel,
    eps: f64,
    method: DerivativeMethod,
) -> MonitorResult<IsolabilityReport> {
    let Observer::Uio(uio) = observer else {
        return Err(MonitorError::Input(
            "the isolability check needs a UIO".into(),
        ));
    };
    if !(eps >= 0.0) {
        return Err(MonitorError::Config(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    let annihilator = left_annihilator(&(&uio.t * model.e_f()));
    let theta = theta_signal(trace, k, observer, model, method)?;
    if annihilator.nrows() == 0 {
        return Ok(IsolabilityReport {
            residue: vec![0.0; theta.len()],
            pass: vec![true; theta.len()],
            vacuous: true,
        });
    }
    let residue: Vec<f64> = theta.iter().map(|t| (&annihilator * t).norm()).collect();
    Ok(IsolabilityReport {
        pass: residue.iter().map(|r| *r <= eps).collect(),
        residue,
        vacuous: false,
    })
}

/// Steady error `e_s = −A_err⁻¹·E_col` of the forced error ODE under a unit step.
pub fn steady_state_error(a_err: &Mat, e_col: &Vector) -> MonitorResult<Vector> {
    let lu = a_err.clone().lu();
    lu.solve(&(-e_col))
        .ok_or_else(|| MonitorError::Input("error matrix is singular, no steady state".into()))
}

/// True iff every sample with `t ≥ step_time + t_s` lies in `e_t`.
pub fn settling_check_series(
    t: &[f64],
    e: &[Vector],
    e_t: &EllipsoidSet,
    t_s: f64,
    step_time: f64,
) -> MonitorResult<bool> {
    if t.len() != e.len() {
        return Err(MonitorError::Input(
            "time and error series differ in length".into(),
        ));
    }
    if !(t_s >= 0.0) {
        return Err(MonitorError::Config(format!(
            "t_s must be nonnegative, got {t_s}"
        )));
    }
    let deadline = step_time + t_s;
    Ok(t.iter()
        .zip(e)
        .filter(|(ti, _)| **ti >= deadline - 1e-12)
        .all(|(_, ei)| e_t.contains(ei)))
}

/// [`settling_check_series`] on observer `k` of a trace, using the raw
/// sampled error in the observer's own sign convention.
pub fn settling_check(
    trace: &Trace,
    k: usize,
    observer: &Observer,
    e_t: &EllipsoidSet,
    t_s: f64,
    step_time: f64,
) -> MonitorResult<bool> {
    check_observer(trace, k, observer)?;
    if e_t.dim() != observer.state_dim() {
        return Err(MonitorError::Config(
            "settling set dimension does not match the observer".into(),
        ));
    }
    let e: Vec<Vector> = match observer {
        Observer::Output(_) => trace.estimation_error(k, observer),
        Observer::Uio(_) => trace
            .estimation_error(k, observer)
            .into_iter()
            .map(|v| -v)
            .collect(),
        Observer::Sliding(_) => {
            return Err(MonitorError::Input(
                "use sliding_check for sliding-mode observers".into(),
            ))
        }
    };
    settling_check_series(&trace.t, &e, e_t, t_s, step_time)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingReport {
    /// `(e1, e_y) ∈ E_e` at every sample after first entry.
    pub e_e_invariant: bool,
    /// `e_y ∈ E_s` at every sample with `t ≥ t_s`.
    pub e_s_invariant_after_ts: bool,
    /// First sample time from which `e_y` stays in `E_s`, if any.
    pub e_s_entry_time: Option<f64>,
    /// Largest `‖ν‖` over the trace.
    pub max_nu: f64,
}

pub fn sliding_check(
    trace: &Trace,
    k: usize,
    observer: &Observer,
    spec: &SlidingSpec,
) -> MonitorResult<SlidingReport> {
    let Observer::Sliding(obs) = observer else {
        return Err(MonitorError::Input(
            "the sliding check needs a sliding-mode observer".into(),
        ));
    };
    check_observer(trace, k, observer)?;
    let n1 = obs.n1();
    let p = trace.y[0].len();
    if spec.e_e.dim() != n1 + p || spec.e_s.dim() != p {
        return Err(MonitorError::Config(format!(
            "sliding sets must be {}- and {p}-dimensional",
            n1 + p
        )));
    }
    let ot = &trace.observers[k];
    let e: Vec<Vector> = (0..trace.len())
        .map(|i| &ot.state[i] - &obs.t_o * &trace.x[i])
        .collect();
    let e_y: Vec<Vector> = (0..trace.len())
        .map(|i| obs.output_error(&ot.state[i], &trace.y[i]))
        .collect();

    let in_e: Vec<bool> = e.iter().map(|v| spec.e_e.contains(v)).collect();
    let e_e_invariant = match in_e.iter().position(|&b| b) {
        Some(first) => in_e[first..].iter().all(|&b| b),
        None => false,
    };
    let in_s: Vec<bool> = e_y.iter().map(|v| spec.e_s.contains(v)).collect();
    let e_s_invariant_after_ts = trace
        .t
        .iter()
        .zip(&in_s)
        .filter(|(t, _)| **t >= spec.t_s - 1e-12)
        .all(|(_, &b)| b);
    let last_out = in_s.iter().rposition(|&b| !b);
    let e_s_entry_time = match last_out {
        None => Some(trace.t[0]),
        Some(i) if i + 1 < trace.len() => Some(trace.t[i + 1]),
        Some(_) => None,
    };
    let nus: Vec<Vector> = e_y
        .iter()
        .map(|ey| crate::observer::nu_injection(obs, ey))
        .collect();
    Ok(SlidingReport {
        e_e_invariant,
        e_s_invariant_after_ts,
        e_s_entry_time,
        max_nu: vector_norms(&nus).into_iter().fold(0.0, f64::max),
    })
}
