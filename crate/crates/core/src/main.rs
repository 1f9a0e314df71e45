use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use faultcert::annotate::{emit_annotations, render_blocks, verify_certificate, CertificateFile};
use faultcert::design::design_detectors;
use faultcert::error::{CertError, Error, PlantError};
use faultcert::observer::ObserverKind;
use faultcert::plant::{model_from_config, scenario_from_config};
use faultcert::run::{
    design_summary, run_report, run_simulation, write_atomic, write_certificates, write_run,
    RunManifest,
};

/// Observer-based fault detection with checkable certificates.
#[derive(Debug, Parser)]
#[command(name = "faultcert", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Design detectors and write one certificate per detector.
    Synth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        observer: ObserverKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a scenario and monitor every detector.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        observer: ObserverKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Re-check certificates against a model.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        certificates: Vec<PathBuf>,
    },
    /// Emit contract annotations for verified certificates.
    Annotate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        certificates: Vec<PathBuf>,
    },
    /// Print the design summary and certificate margins without writing certificates.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        observer: ObserverKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ObserverKind, String> {
    ObserverKind::parse(s)
        .ok_or_else(|| format!("unknown observer kind `{s}` (expected output, uio or sliding)"))
}

/// 2 for unreadable or malformed inputs, 1 for everything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 2,
        Error::Plant(
            PlantError::Config(_)
            | PlantError::Scenario(_)
            | PlantError::Io(_)
            | PlantError::Param(_),
        ) => 2,
        Error::Cert(
            CertError::Parse { .. }
            | CertError::Io(_)
            | CertError::Schema(_)
            | CertError::Dimension(_)
            | CertError::NotPositiveDefinite(_),
        ) => 2,
        _ => 1,
    }
}

fn manifest(
    command: &str,
    model: &Path,
    scenario: Option<&Path>,
    observer: Option<ObserverKind>,
    out: &Path,
    seed: Option<u64>,
    dt: f64,
) -> RunManifest {
    RunManifest {
        command: command.into(),
        model: model.display().to_string(),
        scenario: scenario.map(|p| p.display().to_string()),
        observer: observer.map(|k| k.as_str().to_string()),
        out: out.display().to_string(),
        seed,
        dt,
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

fn start_run(out: &Path, m: &RunManifest) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("manifest.toml"), m.to_toml().as_bytes())?;
    Ok(())
}

fn run(cmd: Cmd) -> Result<u8, Error> {
    match cmd {
        Cmd::Synth {
            model,
            observer,
            out,
        } => {
            let mf = model_from_config(&model)?;
            start_run(
                &out,
                &manifest("synth", &model, None, Some(observer), &out, None, 0.0),
            )?;
            let designs = design_detectors(&mf, observer)?;
            print!("{}", design_summary(&designs)?);
            for p in write_certificates(&out, &designs)? {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Cmd::Simulate {
            model,
            scenario,
            observer,
            out,
            seed,
            dt,
        } => {
            let mf = model_from_config(&model)?;
            let sc = scenario_from_config(&scenario)?;
            start_run(
                &out,
                &manifest(
                    "simulate",
                    &model,
                    Some(&scenario),
                    Some(observer),
                    &out,
                    seed,
                    dt,
                ),
            )?;
            let run = run_simulation(&mf, &sc, observer, dt, seed)?;
            print!("{}", run_report(&mf, &sc, &run)?);
            for p in write_run(&out, &mf, &sc, &run)? {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Cmd::Verify {
            model,
            certificates,
        } => {
            let mf = model_from_config(&model)?;
            let mut code = 0;
            for path in &certificates {
                let cert = CertificateFile::read(path)?;
                let rep = verify_certificate(&cert, &mf.model);
                print!("{}", rep.render());
                if !rep.passed() {
                    code = 1;
                }
            }
            Ok(code)
        }
        Cmd::Annotate {
            model,
            out,
            certificates,
        } => {
            let mf = model_from_config(&model)?;
            if let Some(out) = &out {
                start_run(
                    out,
                    &manifest("annotate", &model, None, None, out, None, 0.0),
                )?;
            }
            for path in &certificates {
                let cert = CertificateFile::read(path)?;
                let text = render_blocks(&emit_annotations(&cert, &mf.model)?);
                match &out {
                    Some(dir) => {
                        let p = dir.join(format!("{}.annot.c", cert.label));
                        write_atomic(&p, text.as_bytes())?;
                        println!("wrote {}", p.display());
                    }
                    None => print!("{text}"),
                }
            }
            Ok(0)
        }
        Cmd::Report {
            model,
            observer,
            out,
        } => {
            let mf = model_from_config(&model)?;
            if let Some(out) = &out {
                start_run(
                    out,
                    &manifest("report", &model, None, Some(observer), out, None, 0.0),
                )?;
            }
            let designs = design_detectors(&mf, observer)?;
            let mut text = design_summary(&designs)?;
            let mut code = 0;
            for d in &designs {
                let rep = verify_certificate(&CertificateFile::from_design(d), &mf.model);
                text.push_str(rep.render().lines().last().unwrap_or_default());
                text.push('\n');
                if !rep.passed() {
                    code = 1;
                }
            }
            print!("{text}");
            if let Some(out) = &out {
                write_atomic(&out.join("report.txt"), text.as_bytes())?;
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
