// Bank of unknown-input observers, one per fault channel. Each is
// decoupled from the other two faults, so a fault lights up only its own
// residual.

use std::error::Error;
use std::path::PathBuf;

use faultcert::observer::{check_uio_algebra, Observer, ObserverKind};
use faultcert::plant::{model_from_config, scenario_from_config};
use faultcert::run::run_simulation;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let mf = model_from_config(&fixture("helicopter.toml"))?;
    let sc = scenario_from_config(&fixture("sequential_faults.toml"))?;
    let run = run_simulation(&mf, &sc, ObserverKind::Uio, 1e-3, None)?;

    for d in &run.designs {
        let Observer::Uio(uio) = &d.observer else {
            unreachable!()
        };
        let rep = check_uio_algebra(uio, &d.model, 1e-9);
        println!(
            "{} decoupling {:.1e} r_th {}",
            d.label, rep.decoupling, d.r_th
        );
    }
    println!("{:>8} {:>8} {:>8} {:>8}", "segment", "uio1", "uio2", "uio3");
    for (i, seg) in sc.segments.iter().enumerate() {
        let cells: Vec<String> = (0..run.designs.len())
            .map(|k| {
                run.detection_latency(k, seg.t_start, seg.t_end)
                    .map_or("-".into(), |l| format!("{l:.3}"))
            })
            .collect();
        println!(
            "{:>8} {:>8} {:>8} {:>8}",
            i + 1,
            cells[0],
            cells[1],
            cells[2]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
