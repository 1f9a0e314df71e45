// Certificate life cycle: write, read back, verify against the model, and
// emit the contract annotations.

use std::error::Error;
use std::path::PathBuf;

use faultcert::annotate::{emit_annotations, render_blocks, verify_certificate, CertificateFile};
use faultcert::design::design_detectors;
use faultcert::observer::ObserverKind;
use faultcert::plant::model_from_config;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let mf = model_from_config(&fixture("helicopter.toml"))?;
    let dir = std::env::temp_dir().join(format!("faultcert-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    for d in design_detectors(&mf, ObserverKind::Sliding)? {
        let path = dir.join(format!("{}.fdcert", d.label));
        CertificateFile::from_design(&d).write(&path)?;
        let cert = CertificateFile::read(&path)?;
        let rep = verify_certificate(&cert, &mf.model);
        print!("{}", rep.render());
        print!("{}", render_blocks(&emit_annotations(&cert, &mf.model)?));
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
