// The decision table on its own, then the monitor on a short faulty run.

use std::error::Error;
use std::path::PathBuf;

use faultcert::design::design_detectors;
use faultcert::linalg::Vector;
use faultcert::monitor::{classify, classify_step, write_verdict_csv};
use faultcert::observer::ObserverKind;
use faultcert::plant::{model_from_config, simulate, FaultScenario, FaultSegment};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    for theta in [0.0, 1.0] {
        for (in_n, in_f) in [(true, true), (false, true), (false, false)] {
            println!(
                "theta={theta} in_E_n={in_n:<5} in_E_f={in_f:<5} -> {}",
                classify_step(theta, 0.5, in_n, in_f)
            );
        }
    }

    let mf = model_from_config(&fixture("helicopter.toml"))?;
    let d = &design_detectors(&mf, ObserverKind::Uio)?[0];
    let seg = FaultSegment {
        t_start: 1.0,
        t_end: 3.0,
        f: Vector::from_vec(vec![0.5, 0.0, 0.0]),
        f_d: Vector::zeros(0),
    };
    let sc = FaultScenario::new("pulse", 6.0, 3, 0, vec![seg], Vec::new())?;
    let tr = simulate(
        &mf.model,
        &mf.closed_loop(1e-2)?,
        &sc,
        &[d.observer.clone()],
    )?;
    let v = classify(&tr, 0, &d.observer, &d.model, &d.monitor_config()?)?;
    let every_half_second: Vec<_> = v.iter().step_by(50).cloned().collect();
    write_verdict_csv(&every_half_second, std::io::stdout().lock())?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
