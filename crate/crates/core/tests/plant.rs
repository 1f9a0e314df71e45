mod common;

use common::fixture;
use faultcert::linalg::{Mat, Vector};
use faultcert::observer::LtiModel;
use faultcert::plant::{
    model_from_config, model_from_str, scenario_from_config, scenario_from_str, simulate,
    ActuatorChange, ClosedLoopConfig, FaultScenario, FaultSegment,
};

fn scalar_model() -> LtiModel {
    let one = Mat::from_element(1, 1, 1.0);
    LtiModel::new(
        Mat::from_element(1, 1, -1.0),
        one.clone(),
        one.clone(),
        one,
        Mat::zeros(1, 0),
    )
    .unwrap()
}

#[test]
fn fixtures_load() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let m = &mf.model;
    assert_eq!((m.n(), m.m(), m.p(), m.nf(), m.nd()), (6, 2, 3, 3, 0));
    assert_eq!(mf.u_op.len(), 2);
    for name in [
        "sequential_faults.toml",
        "actuator_loss.toml",
        "nominal.toml",
    ] {
        let sc = scenario_from_config(&fixture(name)).unwrap();
        assert_eq!(sc.nf, 3, "{name}");
    }
    let e1 = scenario_from_config(&fixture("sequential_faults.toml")).unwrap();
    assert_eq!(e1.segments.len(), 3);
    assert!(e1.segments.windows(2).all(|w| w[0].t_end <= w[1].t_start));
}

#[test]
fn zero_order_hold_ramp_is_exact() {
    // x' = -x + f with f switching on at t = 0.55, between grid points
    let model = scalar_model();
    let seg = FaultSegment {
        t_start: 0.55,
        t_end: 3.0,
        f: Vector::from_element(1, 1.0),
        f_d: Vector::zeros(0),
    };
    let sc = FaultScenario::new("step", 3.0, 1, 0, vec![seg], Vec::new()).unwrap();
    let cfg = ClosedLoopConfig::new(&model, Mat::zeros(1, 1), 0.1).unwrap();
    let tr = simulate(&model, &cfg, &sc, &[]).unwrap();
    // the fault is first sampled at t = 0.6 and held from there
    for (t, x) in tr.t.iter().zip(&tr.x) {
        let exact = if *t < 0.6 - 1e-12 {
            0.0
        } else {
            1.0 - (-(t - 0.6)).exp()
        };
        assert!((x[0] - exact).abs() < 1e-6, "t={t}: {} vs {exact}", x[0]);
    }
    assert_eq!(tr.f[5][0], 0.0);
    assert_eq!(tr.f[6][0], 1.0);
}

#[test]
fn identity_actuator_matrix_changes_nothing() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let mut cfg = mf.closed_loop(0.01).unwrap();
    cfg.x0 = Vector::from_fn(6, |i, _| 0.1 * i as f64);
    let plain = FaultScenario::nominal(3.0, 3, 0).unwrap();
    let with_x = FaultScenario::new(
        "identity",
        3.0,
        3,
        0,
        Vec::new(),
        vec![ActuatorChange {
            t_start: 1.0,
            x: Mat::identity(2, 2),
        }],
    )
    .unwrap();
    let a = simulate(&mf.model, &cfg, &plain, &[]).unwrap();
    let b = simulate(&mf.model, &cfg, &with_x, &[]).unwrap();
    assert_eq!(a.x, b.x);
}

#[test]
fn actuator_loss_moves_the_trim() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let cfg = mf.closed_loop(0.01).unwrap();
    let sc = scenario_from_config(&fixture("actuator_loss.toml")).unwrap();
    let tr = simulate(&mf.model, &cfg, &sc, &[]).unwrap();
    let before = tr.index_at(9.99);
    assert!(
        tr.x[before].norm() < 1e-12,
        "the trim holds the equilibrium"
    );
    assert!(
        tr.x.last().unwrap().norm() > 1e-3,
        "lost thrust pulls the state away"
    );
}

#[test]
fn runs_are_deterministic_and_csv_matches_header() {
    let mf = model_from_config(&fixture("helicopter.toml")).unwrap();
    let mut cfg = mf.closed_loop(0.01).unwrap();
    cfg.x0[0] = 0.2;
    let sc = scenario_from_config(&fixture("sequential_faults.toml")).unwrap();
    let a = simulate(&mf.model, &cfg, &sc, &[]).unwrap();
    let b = simulate(&mf.model, &cfg, &sc, &[]).unwrap();
    let csv = a.to_csv_string();
    assert_eq!(csv, b.to_csv_string());
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, a.header());
    assert!(lines.all(|l| l.split(',').count() == header.len()));
    assert_eq!(csv.lines().count(), a.len() + 1);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(model_from_str("schema_version = 1\n[matrices]\na = [[1.0, 2.0]]\n").is_err());
    assert!(model_from_str("schema_version = 9\n").is_err());
    assert!(scenario_from_str("schema_version = 1\nduration = -1.0\nnf = 1\n").is_err());
    let overlap = "schema_version = 1\nduration = 10.0\nnf = 1\n\
                   [[segment]]\nt_start = 1.0\nt_end = 5.0\nf = [1.0]\n\
                   [[segment]]\nt_start = 4.0\nt_end = 6.0\nf = [1.0]\n";
    assert!(scenario_from_str(overlap).is_err());
    assert!(scenario_from_str(&overlap.replace("t_start = 4.0", "t_start = 5.0")).is_ok());
    assert!(model_from_config(&fixture("does-not-exist.toml")).is_err());
}
