// Single output-injection detector on the helicopter: design, simulate the
// three-fault timeline and report detection latencies and mode counts.

use std::error::Error;
use std::path::PathBuf;

use faultcert::observer::ObserverKind;
use faultcert::plant::{model_from_config, scenario_from_config};
use faultcert::run::{design_summary, run_simulation};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let mf = model_from_config(&fixture("helicopter.toml"))?;
    let sc = scenario_from_config(&fixture("sequential_faults.toml"))?;
    let run = run_simulation(&mf, &sc, ObserverKind::Output, 1e-3, None)?;
    print!("{}", design_summary(&run.designs)?);

    // one residual for all channels: it cannot say which fault is active
    for (i, seg) in sc.segments.iter().enumerate() {
        match run.detection_latency(0, seg.t_start, seg.t_end) {
            Some(l) => println!(
                "fault {} at {:>4} s detected after {l:.3} s",
                i + 1,
                seg.t_start
            ),
            None => println!("fault {} at {:>4} s missed", i + 1, seg.t_start),
        }
    }
    let verdicts = run.verdicts(0).expect("output detectors classify");
    let counts = faultcert::monitor::tally(verdicts);
    println!(
        "modes {:?}",
        faultcert::monitor::Mode::ALL
            .iter()
            .zip(counts)
            .collect::<Vec<_>>()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
