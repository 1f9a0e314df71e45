use super::DerivativeMethod;
use crate::error::{MonitorError, MonitorResult};
use crate::linalg::Vector;
use crate::observer::{LtiModel, Observer};
use crate::plant::Trace;

/// Estimation error and its derivative, sampled on the trace grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSamples {
    /// Error in the observer's own convention: `x − x̂` for the output
    /// observer, `x̂ − x` for the UIO and the sliding-mode observer.
    pub e: Vec<Vector>,
    pub e_dot: Vec<Vector>,
}

/// Error samples with `ė` from the chosen estimator.
///
/// The backward difference is read at interval midpoints: sample `k` holds
/// `(e_k − e_(k−1))/dt` and `(e_k + e_(k−1))/2`, which is second-order
/// accurate. The high-pass filter `s/(as + 1)` is discretized with the
/// bilinear transform and read at the samples themselves.
pub fn error_samples(
    trace: &Trace,
    k: usize,
    observer: &Observer,
    method: DerivativeMethod,
) -> MonitorResult<ErrorSamples> {
    check_observer(trace, k, observer)?;
    let raw = raw_error(trace, k, observer);
    let dt = trace.dt;
    match method {
        DerivativeMethod::BackwardDifference => Ok(midpoint(&raw, dt)),
        DerivativeMethod::HighPassFilter { a } => {
            if !(a > 0.0) || !a.is_finite() {
                return Err(MonitorError::Config(format!(
                    "filter constant must be positive, got {a}"
                )));
            }
            Ok(ErrorSamples {
                e_dot: high_pass(&raw, dt, a),
                e: raw,
            })
        }
    }
}

/// `θ(t)`, the fault forcing of the error dynamics.
///
/// Output observer: `θ = ė − (A − LC)e`. UIO: the defect-corrected form of
/// [`crate::observer::Uio::theta`]. Not defined for the sliding-mode
/// observer, whose fault estimate is the injection signal itself.
pub fn theta_signal(
    trace: &Trace,
    k: usize,
    observer: &Observer,
    model: &LtiModel,
    method: DerivativeMethod,
) -> MonitorResult<Vec<Vector>> {
    let es = error_samples(trace, k, observer, method)?;
    let series = |s: &[Vector]| -> Vec<Vector> {
        match method {
            DerivativeMethod::BackwardDifference => midpoint_values(s),
            DerivativeMethod::HighPassFilter { .. } => s.to_vec(),
        }
    };
    match observer {
        Observer::Output(o) => Ok(es
            .e
            .iter()
            .zip(&es.e_dot)
            .map(|(e, de)| de - &o.a_err * e)
            .collect()),
        Observer::Uio(o) => {
            let z = series(&trace.observers[k].state);
            let u = series(&trace.u);
            let y = series(&trace.y);
            Ok((0..trace.len())
                .map(|i| o.theta(model, &es.e_dot[i], &es.e[i], &z[i], &u[i], &y[i]))
                .collect())
        }
        Observer::Sliding(_) => Err(MonitorError::Input(
            "θ is defined for output observers and UIOs only".into(),
        )),
    }
}

pub(crate) fn check_observer(trace: &Trace, k: usize, observer: &Observer) -> MonitorResult<()> {
    let ot = trace
        .observers
        .get(k)
        .ok_or_else(|| MonitorError::Input(format!("trace has no observer column set {k}")))?;
    if ot.kind != observer.kind() {
        return Err(MonitorError::Input(format!(
            "trace columns {} belong to a {} observer, got a {} observer",
            ot.label,
            ot.kind.as_str(),
            observer.kind().as_str()
        )));
    }
    if trace.len() < 2 {
        return Err(MonitorError::Input(
            "trace needs at least two samples".into(),
        ));
    }
    if ot.state.first().map(Vector::len) != Some(observer.state_dim()) {
        return Err(MonitorError::Input(
            "observer state columns have the wrong width".into(),
        ));
    }
    Ok(())
}

fn raw_error(trace: &Trace, k: usize, observer: &Observer) -> Vec<Vector> {
    let ot = &trace.observers[k];
    match observer {
        Observer::Output(_) => (0..trace.len())
            .map(|i| &trace.x[i] - observer.estimate(&ot.state[i], &trace.y[i]))
            .collect(),
        Observer::Uio(_) => (0..trace.len())
            .map(|i| observer.estimate(&ot.state[i], &trace.y[i]) - &trace.x[i])
            .collect(),
        Observer::Sliding(o) => (0..trace.len())
            .map(|i| &ot.state[i] - &o.t_o * &trace.x[i])
            .collect(),
    }
}

/// Midpoint averages; sample 0 repeats sample 1.
pub(crate) fn midpoint_values(s: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(s.len());
    out.push(Vector::zeros(0));
    for w in s.windows(2) {
        out.push((&w[0] + &w[1]) * 0.5);
    }
    out[0] = out.get(1).cloned().unwrap_or_else(|| s[0].clone());
    out
}

fn midpoint(raw: &[Vector], dt: f64) -> ErrorSamples {
    let mut e_dot: Vec<Vector> = Vec::with_capacity(raw.len());
    e_dot.push(Vector::zeros(0));
    for w in raw.windows(2) {
        e_dot.push((&w[1] - &w[0]) / dt);
    }
    e_dot[0] = e_dot[1].clone();
    ErrorSamples {
        e: midpoint_values(raw),
        e_dot,
    }
}

/// Bilinear discretization of `s/(as + 1)`, started from the first
/// backward difference so that a smooth signal has no start-up transient.
fn high_pass(raw: &[Vector], dt: f64, a: f64) -> Vec<Vector> {
    let c = 2.0 / dt;
    let mut out = Vec::with_capacity(raw.len());
    out.push((&raw[1] - &raw[0]) / dt);
    for w in raw.windows(2) {
        let prev: &Vector = out.last().expect("seeded");
        let next = ((&w[1] - &w[0]) * c - prev * (1.0 - a * c)) / (a * c + 1.0);
        out.push(next);
    }
    out
}
