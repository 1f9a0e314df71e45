// Partial loss of both rotors at t = 10 s. The faults are not among the
// modelled channels, so every detector ends up Faulty.

use std::error::Error;
use std::path::PathBuf;

use faultcert::monitor::Mode;
use faultcert::observer::ObserverKind;
use faultcert::plant::{model_from_config, scenario_from_config};
use faultcert::run::run_simulation;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let mf = model_from_config(&fixture("helicopter.toml"))?;
    let sc = scenario_from_config(&fixture("actuator_loss.toml"))?;
    let run = run_simulation(&mf, &sc, ObserverKind::Uio, 1e-3, None)?;
    for (k, d) in run.designs.iter().enumerate() {
        let v = run.verdicts(k).expect("UIOs classify");
        let mut last = Mode::Nominal;
        for x in v {
            if x.mode != last {
                println!("{:>6.3} s  {}  {} -> {}", x.time, d.label, last, x.mode);
                last = x.mode;
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
