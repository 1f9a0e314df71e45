mod common;

use common::fixture;
use faultcert::design::design_detectors;
use faultcert::gains::{settling_time_bound, EllipsoidSet};
use faultcert::linalg::Vector;
use faultcert::monitor::{
    classify, classify_step, isolability_check, settling_check, steady_state_error, tally,
    write_verdict_csv, DerivativeMethod, Mode,
};
use faultcert::observer::{Observer, ObserverKind};
use faultcert::plant::{
    model_from_config, scenario_from_config, simulate, FaultScenario, FaultSegment,
};
use proptest::prelude::*;

#[test]
fn verdict_csv_has_one_row_per_sample() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let d = &design_detectors(&mf, ObserverKind::Output).unwrap()[0];
    let cfg = mf.closed_loop(0.01).unwrap();
    let sc = FaultScenario::nominal(2.0, 3, 0).unwrap();
    let tr = simulate(&mf.model, &cfg, &sc, &[d.observer.clone()]).unwrap();
    let v = classify(&tr, 0, &d.observer, &d.model, &d.monitor_config().unwrap()).unwrap();
    assert_eq!(v.len(), tr.len());
    assert_eq!(tally(&v).iter().sum::<usize>(), v.len());
    assert!(v.iter().all(|x| x.mode == Mode::Nominal));
    let mut buf = Vec::new();
    write_verdict_csv(&v, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), v.len() + 1);
    assert!(text.starts_with("t,mode,V,Vdot,theta_norm,V_active,in_E_n,in_E_f\n"));
}

#[test]
fn own_channel_uio_settles_to_its_steady_error() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let designs = design_detectors(&mf, ObserverKind::Uio).unwrap();
    let d = &designs[1];
    let Observer::Uio(uio) = &d.observer else {
        panic!("not a UIO")
    };
    let step = 1.0;
    let seg = FaultSegment {
        t_start: step,
        t_end: 12.0,
        f: Vector::from_vec(vec![0.0, 0.2, 0.0]),
        f_d: Vector::zeros(0),
    };
    let sc = FaultScenario::new("step", 12.0, 3, 0, vec![seg], Vec::new()).unwrap();
    let cfg = mf.closed_loop(1e-3).unwrap();
    let tr = simulate(&mf.model, &cfg, &sc, &[d.observer.clone()]).unwrap();

    // ė = F e − T E_f f for the UIO convention e = x̂ − x
    let forcing = -(&uio.t * mf.model.e_f().column(1)) * 0.2;
    let e_ss = steady_state_error(&uio.f, &forcing).unwrap();
    let t_s = settling_time_bound(&uio.f).unwrap();
    let band = 0.02 * e_ss.norm();
    let n = e_ss.len();
    let e_t =
        EllipsoidSet::with_center(nalgebra::DMatrix::identity(n, n), band * band, e_ss).unwrap();
    assert!(settling_check(&tr, 0, &d.observer, &e_t, t_s, step).unwrap());
    assert!(!settling_check(&tr, 0, &d.observer, &e_t, 0.05, step).unwrap());
}

#[test]
fn isolability_holds_for_the_monitored_channel() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let designs = design_detectors(&mf, ObserverKind::Uio).unwrap();
    let sc = scenario_from_config(&fixture("sequential_faults.toml")).unwrap();
    let cfg = mf.closed_loop(1e-2).unwrap();
    let observers: Vec<Observer> = designs.iter().map(|d| d.observer.clone()).collect();
    let tr = simulate(&mf.model, &cfg, &sc, &observers).unwrap();
    // backward differences leave an O(dt) residue at the fault switches
    for (k, d) in designs.iter().enumerate() {
        let rep = isolability_check(
            &tr,
            k,
            &d.observer,
            &d.model,
            1e-3,
            DerivativeMethod::BackwardDifference,
        )
        .unwrap();
        assert!(
            rep.vacuous || rep.all_pass(),
            "{}: max residue {:?}",
            d.label,
            rep.residue.iter().cloned().fold(0.0, f64::max)
        );
    }
}

#[test]
fn wrong_observer_kind_is_an_error() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let d = &design_detectors(&mf, ObserverKind::Output).unwrap()[0];
    let cfg = mf.closed_loop(0.01).unwrap();
    let tr = simulate(
        &mf.model,
        &cfg,
        &FaultScenario::nominal(0.5, 3, 0).unwrap(),
        &[d.observer.clone()],
    )
    .unwrap();
    assert!(isolability_check(
        &tr,
        0,
        &d.observer,
        &d.model,
        1e-6,
        DerivativeMethod::default()
    )
    .is_err());
    assert!(classify(&tr, 3, &d.observer, &d.model, &d.monitor_config().unwrap()).is_err());
}

proptest! {
    #[test]
    fn signature_never_reads_as_nominal(t in prop_oneof![Just(f64::NAN), 1.0f64..1e6], n: bool, f: bool) {
        prop_assert_ne!(classify_step(t, 1.0, n, f), Mode::Nominal);
    }

    #[test]
    fn leaving_e_f_always_flags_convergence(t in any::<f64>(), th in 0.0f64..5.0, n: bool) {
        prop_assert_eq!(classify_step(t, th, n, false), Mode::ConvergenceIssue);
    }
}
