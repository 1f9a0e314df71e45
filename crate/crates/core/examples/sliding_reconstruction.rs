// Sliding-mode observer reconstructing a constant fault from the
// equivalent injection.

use std::error::Error;
use std::path::PathBuf;

use faultcert::linalg::Vector;
use faultcert::observer::ObserverKind;
use faultcert::plant::{model_from_config, FaultScenario, FaultSegment};
use faultcert::run::{run_simulation, DetectorOutcome};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let mf = model_from_config(&fixture("helicopter.toml"))?;
    let f_bar = Vector::from_vec(vec![0.2, -0.3, 0.1]);
    let seg = FaultSegment {
        t_start: 2.0,
        t_end: 10.0,
        f: f_bar.clone(),
        f_d: Vector::zeros(0),
    };
    let sc = FaultScenario::new("constant", 10.0, 3, 0, vec![seg], Vec::new())?;
    let run = run_simulation(&mf, &sc, ObserverKind::Sliding, 1e-3, Some(1))?;

    let est = &run.trace.observers[0].residual;
    for t in [1.0, 2.05, 2.5, 5.0, 9.9] {
        let i = run.trace.index_at(t);
        println!("t={t:>5}  f_hat={:.4?}", est[i].as_slice());
    }
    println!("f_bar        ={:.4?}", f_bar.as_slice());
    if let DetectorOutcome::Sliding(rep) = &run.outcomes[0] {
        println!("{rep:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
