use std::io::Write;

use super::{ClosedLoopConfig, FaultScenario};
use crate::error::{PlantError, PlantResult};
use crate::linalg::{Mat, Vector};
use crate::observer::{LtiModel, Observer, ObserverKind};

/// Samples of one observer along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverTrace {
    /// Column prefix, `<kind><index>`.
    pub label: String,
    pub kind: ObserverKind,
    pub state: Vec<Vector>,
    pub residual: Vec<Vector>,
}

/// Synchronized samples on the uniform grid `t_k = k·dt`.
///
/// `u` is the commanded input `−K x` that the observers see, not the degraded
/// input reaching the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<Vector>,
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
    pub f: Vec<Vector>,
    pub f_d: Vec<Vector>,
    pub observers: Vec<ObserverTrace>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the first sample at or after `time`.
    pub fn index_at(&self, time: f64) -> usize {
        (((time / self.dt) - 1e-9).ceil().max(0.0) as usize).min(self.len().saturating_sub(1))
    }

    /// State estimation error `x − x̂` of observer `k` at every sample.
    pub fn estimation_error(&self, k: usize, observer: &Observer) -> Vec<Vector> {
        let o = &self.observers[k];
        (0..self.len())
            .map(|i| &self.x[i] - observer.estimate(&o.state[i], &self.y[i]))
            .collect()
    }

    /// Column names in CSV order.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        let mut push = |prefix: &str, len: usize| {
            h.extend((1..=len).map(|i| format!("{prefix}{i}")));
        };
        let first = |v: &Vec<Vector>| v.first().map_or(0, Vector::len);
        push("x", first(&self.x));
        push("u", first(&self.u));
        push("y", first(&self.y));
        push("f", first(&self.f));
        push("fd", first(&self.f_d));
        for o in &self.observers {
            push(&format!("{}_s", o.label), first(&o.state));
            push(&format!("{}_r", o.label), first(&o.residual));
        }
        h
    }

    /// CSV with a header row and `{:.16e}` values, which round-trip binary64.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&format!("{:.16e}", self.t[i]));
            let series = [&self.x, &self.u, &self.y, &self.f, &self.f_d];
            let obs = self.observers.iter().flat_map(|o| [&o.state, &o.residual]);
            for s in series.into_iter().chain(obs) {
                for v in s[i].iter() {
                    line.push_str(&format!(",{v:.16e}"));
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

struct Layout {
    n: usize,
    offsets: Vec<(usize, usize)>,
}

fn split<'a>(v: &'a Vector, at: (usize, usize)) -> nalgebra::DVectorView<'a, f64> {
    v.rows(at.0, at.1)
}

/// Fixed-step RK4 co-integration of the closed-loop plant and all observers.
///
/// Faults and the actuator matrix are sampled at the start of each step and
/// held over it. The plant runs
/// `ẋ = Ax + B(X(u_op + u) − u_op) + E_f f + E_d f_d` with `u = −Kx`; each
/// observer is driven by the commanded `u` and `y = Cx`.
pub fn simulate(
    model: &LtiModel,
    config: &ClosedLoopConfig,
    scenario: &FaultScenario,
    observers: &[Observer],
) -> PlantResult<Trace> {
    config.validate(model)?;
    if scenario.nf != model.nf() || scenario.nd != model.nd() {
        return Err(PlantError::Scenario(format!(
            "scenario drives {} fault and {} unknown-input channels, model has {} and {}",
            scenario.nf,
            scenario.nd,
            model.nf(),
            model.nd()
        )));
    }
    if let Some(c) = scenario.actuator_schedule.first() {
        if c.x.nrows() != model.m() {
            return Err(PlantError::Scenario(format!(
                "actuator matrices must be {0}x{0}",
                model.m()
            )));
        }
    }
    let n = model.n();
    for (i, o) in observers.iter().enumerate() {
        if o.error_dynamics().nrows() != o.state_dim() || o.state_dim() != n {
            return Err(PlantError::Config(format!(
                "observer {i} does not match a {n}-state model"
            )));
        }
    }
    let steps_f = scenario.duration / config.dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-6 * steps.max(1.0) {
        return Err(PlantError::Config(format!(
            "duration {} is not a multiple of dt {}",
            scenario.duration, config.dt
        )));
    }
    let steps = steps as usize;

    let mut offsets = Vec::new();
    let mut total = n;
    for o in observers {
        offsets.push((total, o.state_dim()));
        total += o.state_dim();
    }
    let layout = Layout { n, offsets };

    let y0 = model.c() * &config.x0;
    let mut s = Vector::zeros(total);
    s.rows_mut(0, n).copy_from(&config.x0);
    for (o, &off) in observers.iter().zip(&layout.offsets) {
        s.rows_mut(off.0, off.1)
            .copy_from(&o.state_for_estimate(&config.xhat0, &y0));
    }

    let mut trace = Trace {
        dt: config.dt,
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        f: Vec::with_capacity(steps + 1),
        f_d: Vec::with_capacity(steps + 1),
        observers: observers
            .iter()
            .enumerate()
            .map(|(i, o)| ObserverTrace {
                label: format!("{}{}", o.kind().as_str(), i + 1),
                kind: o.kind(),
                state: Vec::with_capacity(steps + 1),
                residual: Vec::with_capacity(steps + 1),
            })
            .collect(),
    };

    let dt = config.dt;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let (f, f_d) = scenario.fault_at(t);
        record(
            &mut trace, model, config, observers, &layout, &s, t, &f, &f_d,
        );
        if k == steps {
            break;
        }
        let x_act = scenario.actuator_at(t, model.m());
        // constant forcing over the step: fault channels and the trim mismatch
        let forcing = model.e_f() * &f
            + model.e_d() * &f_d
            + model.b() * ((&x_act - Mat::identity(model.m(), model.m())) * &config.u_op);
        let rhs = |state: &Vector| -> PlantResult<Vector> {
            rhs(model, config, observers, &layout, &x_act, &forcing, state)
        };
        let k1 = rhs(&s)?;
        let k2 = rhs(&(&s + &k1 * (dt / 2.0)))?;
        let k3 = rhs(&(&s + &k2 * (dt / 2.0)))?;
        let k4 = rhs(&(&s + &k3 * dt))?;
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            let what = if i < n {
                "plant state".to_string()
            } else {
                format!("observer state entry {i}")
            };
            return Err(PlantError::Divergence {
                t: t + dt,
                detail: format!("non-finite {what}"),
            });
        }
    }
    Ok(trace)
}

fn rhs(
    model: &LtiModel,
    config: &ClosedLoopConfig,
    observers: &[Observer],
    layout: &Layout,
    x_act: &Mat,
    forcing: &Vector,
    s: &Vector,
) -> PlantResult<Vector> {
    let x = s.rows(0, layout.n).into_owned();
    let u = -(&config.k_ctrl * &x);
    let y = model.c() * &x;
    let mut out = Vector::zeros(s.len());
    let xdot = model.a() * &x + model.b() * (x_act * &u) + forcing;
    out.rows_mut(0, layout.n).copy_from(&xdot);
    for (o, &off) in observers.iter().zip(&layout.offsets) {
        let d = o.derivative(model, &split(s, off).into_owned(), &u, &y)?;
        out.rows_mut(off.0, off.1).copy_from(&d);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn record(
    trace: &mut Trace,
    model: &LtiModel,
    config: &ClosedLoopConfig,
    observers: &[Observer],
    layout: &Layout,
    s: &Vector,
    t: f64,
    f: &Vector,
    f_d: &Vector,
) {
    let x = s.rows(0, layout.n).into_owned();
    let y = model.c() * &x;
    trace.t.push(t);
    trace.u.push(-(&config.k_ctrl * &x));
    for ((o, ot), &off) in observers
        .iter()
        .zip(trace.observers.iter_mut())
        .zip(&layout.offsets)
    {
        let state = split(s, off).into_owned();
        ot.residual.push(o.residual(model, &state, &y));
        ot.state.push(state);
    }
    trace.x.push(x);
    trace.y.push(y);
    trace.f.push(f.clone());
    trace.f_d.push(f_d.clone());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;
    use crate::observer::{default_poles, synth_output_observer};
    use crate::plant::FaultSegment;

    fn scalar() -> (LtiModel, ClosedLoopConfig) {
        let m = LtiModel::new(
            mat(&[&[0.5]]),
            mat(&[&[1.0]]),
            mat(&[&[1.0]]),
            mat(&[&[1.0]]),
            Mat::zeros(1, 0),
        )
        .unwrap();
        let cfg = ClosedLoopConfig::new(&m, mat(&[&[1.5]]), 0.01).unwrap();
        (m, cfg)
    }

    #[test]
    fn closed_form_scalar_response() {
        let (m, mut cfg) = scalar();
        cfg.x0 = Vector::from_vec(vec![1.0]);
        let sc = FaultScenario::nominal(2.0, 1, 0).unwrap();
        let tr = simulate(&m, &cfg, &sc, &[]).unwrap();
        assert_eq!(tr.len(), 201);
        // ẋ = (0.5 − 1.5)x
        assert!((tr.x[200][0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_has_zero_residual() {
        let (m, cfg) = scalar();
        let obs = Observer::Output(synth_output_observer(&m, &default_poles(1)).unwrap());
        let tr = simulate(
            &m,
            &cfg,
            &FaultScenario::nominal(1.0, 1, 0).unwrap(),
            &[obs],
        )
        .unwrap();
        assert!(tr.observers[0].residual.iter().all(|r| r.amax() <= 1e-12));
        let csv = tr.to_csv_string();
        assert!(csv.starts_with("t,x1,u1,y1,f1,output1_s1,output1_r1\n"));
        assert_eq!(csv.lines().count(), tr.len() + 1);
    }

    #[test]
    fn divergence_reports_time() {
        let (m, mut cfg) = scalar();
        cfg.dt = 0.5;
        let seg = FaultSegment {
            t_start: 0.0,
            t_end: 1.0,
            f: Vector::from_vec(vec![f64::MAX]),
            f_d: Vector::zeros(0),
        };
        let sc = FaultScenario::new("blowup", 1.0, 1, 0, vec![seg], vec![]).unwrap();
        match simulate(&m, &cfg, &sc, &[]) {
            Err(PlantError::Divergence { t, .. }) => assert_eq!(t, 0.5),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn step_fault_reaches_steady_state() {
        let (m, cfg) = scalar();
        let seg = FaultSegment {
            t_start: 0.0,
            t_end: 20.0,
            f: Vector::from_vec(vec![2.0]),
            f_d: Vector::zeros(0),
        };
        let sc = FaultScenario::new("step", 20.0, 1, 0, vec![seg], vec![]).unwrap();
        let tr = simulate(&m, &cfg, &sc, &[]).unwrap();
        assert!((tr.x.last().unwrap()[0] - 2.0).abs() < 1e-6);
    }
}
