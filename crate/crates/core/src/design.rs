//! Detector design from a model file: observer synthesis, the Lyapunov
//! metric, gain bounds with their certificates, thresholds and monitor sets.

use num_complex::Complex64;

use crate::error::{Error, PipelineResult, SynthError};
use crate::gains::{
    compute_detection_thresholds, detection_gains, settling_time_bound, DetectionThresholds,
    EllipsoidSet, LmiCertificate, NormKind,
};
use crate::linalg::{block_diag, hstack, lambda_min_sym, solve_lyapunov, Mat, Vector};
use crate::monitor::{MonitorConfig, SlidingSpec};
use crate::observer::{
    default_poles, synth_output_observer, synth_sliding, synth_uio, LtiModel, Observer,
    ObserverKind,
};
use crate::plant::{DetectorSpec, ModelFile};

/// Everything needed to run, monitor and certify one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorDesign {
    pub label: String,
    pub observer: Observer,
    /// Model the observer was synthesized against.
    pub model: LtiModel,
    /// Fault channel a UIO is sensitive to.
    pub channel: Option<usize>,
    /// Input matrix of the faults in the error dynamics.
    pub e_eff: Mat,
    /// Residual map of the error.
    pub c_err: Mat,
    /// Metric `P` with `A_errᵀP + PA_err = −I`.
    pub p: Mat,
    pub thresholds: DetectionThresholds,
    pub certificates: Vec<LmiCertificate>,
    pub t_s: f64,
    pub r_th: f64,
    pub sigma_bar: f64,
    pub eps: f64,
    pub u_max: f64,
    pub y_max: f64,
    /// Sliding sets, for the sliding-mode observer only.
    pub sliding: Option<SlidingSpec>,
}

impl DetectorDesign {
    pub fn a_err(&self) -> &Mat {
        self.observer.error_dynamics()
    }

    pub fn norm_kind(&self) -> NormKind {
        self.thresholds.gains.norm_kind
    }

    /// `E_n` and `E_f` with `eps_V = 1e−3·ζ/t_s`.
    pub fn monitor_config(&self) -> PipelineResult<MonitorConfig> {
        let mut cfg = MonitorConfig::from_levels(
            &self.p,
            self.thresholds.zeta,
            self.thresholds.zeta_bar,
            self.thresholds.theta_th,
            self.t_s,
        )?;
        cfg.sliding = self.sliding.clone();
        Ok(cfg)
    }
}

fn poles(spec: &DetectorSpec, n: usize) -> Vec<Complex64> {
    match &spec.poles {
        Some(p) => p.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        None => default_poles(n),
    }
}

/// Designs the detectors of one kind for a model file.
///
/// `output` and `sliding` give one detector each. `uio` gives one detector per
/// column of `[E_f E_d]`, each sensitive to its own channel and decoupled
/// from all others.
pub fn design_detectors(mf: &ModelFile, kind: ObserverKind) -> PipelineResult<Vec<DetectorDesign>> {
    let spec = &mf.detector;
    let model = &mf.model;
    let n = model.n();
    match kind {
        ObserverKind::Output => {
            let obs = synth_output_observer(model, &poles(spec, n))?;
            Ok(vec![finish(
                "output1".into(),
                Observer::Output(obs),
                model.clone(),
                None,
                model.e_bar(),
                model.c().clone(),
                spec,
            )?])
        }
        ObserverKind::Uio => {
            let channels = model.nf() + model.nd();
            if channels == 0 {
                return Err(SynthError::Assumption(
                    "the model has no fault channels to isolate".into(),
                )
                .into());
            }
            (0..channels)
                .map(|i| {
                    let mi = model.isolating(i)?;
                    let uio = synth_uio(&mi, &poles(spec, n))?;
                    let e_eff = &uio.t * mi.e_f();
                    finish(
                        format!("uio{}", i + 1),
                        Observer::Uio(uio),
                        mi.clone(),
                        Some(i),
                        e_eff,
                        mi.c().clone(),
                        spec,
                    )
                })
                .collect()
        }
        ObserverKind::Sliding => {
            let obs = synth_sliding(
                model,
                spec.sliding_decay,
                spec.sliding_rho,
                spec.sliding_sigma,
            )?;
            let (n1, p) = (obs.n1(), model.p());
            let e_eff = crate::linalg::vstack(&[&Mat::zeros(n1, obs.d2.ncols()), &obs.d2]);
            let c_err = hstack(&[&Mat::zeros(p, n1), &Mat::identity(p, p)]);
            let observer = Observer::Sliding(obs);
            Ok(vec![finish(
                "sliding1".into(),
                observer,
                model.clone(),
                None,
                e_eff,
                c_err,
                spec,
            )?])
        }
    }
}

fn finish(
    label: String,
    observer: Observer,
    model: LtiModel,
    channel: Option<usize>,
    e_eff: Mat,
    c_err: Mat,
    spec: &DetectorSpec,
) -> PipelineResult<DetectorDesign> {
    let a_err = observer.error_dynamics().clone();
    let n = a_err.nrows();
    let norm_kind = spec.norm_kind().map_err(Error::from)?;
    let p = match &observer {
        // P1 from the reduced dynamics, P2 from the design; keeps E_s a slice of E_e
        Observer::Sliding(o) => {
            let p1 = solve_lyapunov(&o.a11, &Mat::identity(o.n1(), o.n1()))?;
            block_diag(&[&p1, &o.p2])
        }
        _ => solve_lyapunov(&a_err, &Mat::identity(n, n))?,
    };
    let thresholds = compute_detection_thresholds(
        &a_err,
        &e_eff,
        &c_err,
        &p,
        spec.r_th,
        spec.sigma_bar,
        norm_kind,
    )?;
    let (_, certs) = detection_gains(&a_err, &e_eff, &c_err, &p, norm_kind)?;
    let t_s = match &observer {
        Observer::Sliding(_) => spec.sliding_ts,
        _ => settling_time_bound(&a_err)?,
    };
    let sliding = match &observer {
        Observer::Sliding(o) => Some(sliding_sets(o, &p, spec.sliding_ts)?),
        _ => None,
    };
    Ok(DetectorDesign {
        label,
        observer,
        model,
        channel,
        e_eff,
        c_err,
        p,
        thresholds,
        certificates: certs.to_vec(),
        t_s,
        r_th: spec.r_th,
        sigma_bar: spec.sigma_bar,
        eps: spec.eps,
        u_max: spec.u_max,
        y_max: spec.y_max,
        sliding,
    })
}

/// Boundary-layer sets of the smoothed injection.
///
/// While `‖D2 f̄‖ ≤ κρ‖D2‖` the equilibrium of the output error satisfies
/// `‖P2 e_y‖ ≤ σκ/(1 − κ)`; with `κ = 2/3` that gives
/// `α = 4σ²/λ_min(P2)`. `E_e` takes `β = 2α`, which holds the layer with `e1`
/// at rest.
pub fn sliding_sets(
    obs: &crate::observer::SlidingModeObserver,
    p: &Mat,
    t_s: f64,
) -> PipelineResult<SlidingSpec> {
    let alpha = 4.0 * obs.sigma * obs.sigma / lambda_min_sym(&obs.p2);
    Ok(SlidingSpec {
        e_s: EllipsoidSet::new(obs.p2.clone(), alpha)?,
        e_e: EllipsoidSet::new(p.clone(), 2.0 * alpha)?,
        t_s,
    })
}

/// Widens `E_e` so that it also contains the initial error `e0`.
pub fn cover_initial_error(spec: &SlidingSpec, e0: &Vector) -> PipelineResult<SlidingSpec> {
    let level = spec.e_e.level().max(2.0 * spec.e_e.value(e0));
    Ok(SlidingSpec {
        e_e: spec.e_e.with_level(level)?,
        ..spec.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::model_from_str;

    fn scalar_file() -> ModelFile {
        model_from_str(
            "schema_version = 1\n[matrices]\na = [[-1.0]]\nb = [[1.0]]\nc = [[1.0]]\ne_f = [[1.0]]\n\
             [controller]\ngain = [[0.0]]\n[detector]\npoles = [-2.0]\nr_th = 0.5\nnorm = \"PeakToPeak\"\n",
        )
        .unwrap()
    }

    #[test]
    fn scalar_output_detector() {
        let d = design_detectors(&scalar_file(), ObserverKind::Output).unwrap();
        assert_eq!(d.len(), 1);
        let d = &d[0];
        // A − LC = −2, P = 1/4, peak-to-peak gain of 1/(s + 2) is 1/2
        assert!((d.p[(0, 0)] - 0.25).abs() < 1e-12);
        assert!((d.thresholds.gains.pi - 0.5).abs() < 1e-6);
        assert!((d.thresholds.f_max - 1.0).abs() < 1e-5);
        assert_eq!(d.certificates.len(), 2);
        assert!(d.monitor_config().is_ok());
    }

    #[test]
    fn one_uio_per_channel() {
        let mf = model_from_str(
            "schema_version = 1\n[matrices]\na = [[-1.0, 0.3], [0.2, -4.0]]\nb = [[1.0], [0.0]]\n\
             c = [[1.0, 0.0], [0.0, 1.0]]\ne_f = [[1.0, 0.0], [0.0, 1.0]]\n[controller]\ngain = [[0.0, 0.0]]\n",
        )
        .unwrap();
        let d = design_detectors(&mf, ObserverKind::Uio).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[1].channel, Some(1));
        assert_eq!(d[1].label, "uio2");
    }
}
