//! End-to-end runs: design detectors for a model file, simulate a scenario,
//! monitor every detector and write the artifacts of a run directory.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::annotate::CertificateFile;
use crate::design::{cover_initial_error, design_detectors, DetectorDesign};
use crate::error::PipelineResult;
use crate::linalg::Vector;
use crate::monitor::{
    classify, sliding_check, tally, write_verdict_csv, Mode, SlidingReport, Verdict,
};
use crate::observer::{Observer, ObserverKind};
use crate::plant::{simulate, FaultScenario, ModelFile, Trace};

/// Half-width of the seeded perturbation of the initial estimate.
pub const SEED_SPREAD: f64 = 0.01;

/// Inputs of a run, written before any result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model: String,
    pub scenario: Option<String>,
    pub observer: Option<String>,
    pub out: String,
    pub seed: Option<u64>,
    pub dt: f64,
    pub version: String,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are plain values")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Initial estimate: zero, or uniform in `±SEED_SPREAD` per state when seeded.
pub fn initial_estimate(n: usize, seed: Option<u64>) -> Vector {
    match seed {
        None => Vector::zeros(n),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            Vector::from_fn(n, |_, _| rng.random_range(-SEED_SPREAD..=SEED_SPREAD))
        }
    }
}

/// Monitor output for one detector.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorOutcome {
    Verdicts(Vec<Verdict>),
    Sliding(SlidingReport),
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub designs: Vec<DetectorDesign>,
    pub trace: Trace,
    pub outcomes: Vec<DetectorOutcome>,
}

impl SimulationRun {
    /// First time in `[t_start, t_end)` at which detector `k`'s residual
    /// exceeds its `r_th`, relative to `t_start`.
    pub fn detection_latency(&self, k: usize, t_start: f64, t_end: f64) -> Option<f64> {
        let r_th = self.designs[k].r_th;
        let ot = &self.trace.observers[k];
        self.trace
            .t
            .iter()
            .zip(&ot.residual)
            .find(|(t, r)| **t >= t_start && **t < t_end && r.norm() > r_th)
            .map(|(t, _)| t - t_start)
    }

    pub fn verdicts(&self, k: usize) -> Option<&[Verdict]> {
        match &self.outcomes[k] {
            DetectorOutcome::Verdicts(v) => Some(v),
            DetectorOutcome::Sliding(_) => None,
        }
    }
}

/// Designs the detectors of `kind`, simulates them on `scenario` and
/// classifies every sample. Sliding-mode detectors get the sliding check,
/// with `E_e` widened to hold the initial error.
pub fn run_simulation(
    mf: &ModelFile,
    scenario: &FaultScenario,
    kind: ObserverKind,
    dt: f64,
    seed: Option<u64>,
) -> PipelineResult<SimulationRun> {
    let designs = design_detectors(mf, kind)?;
    let mut cfg = mf.closed_loop(dt)?;
    cfg.xhat0 = initial_estimate(mf.model.n(), seed);
    let observers: Vec<Observer> = designs.iter().map(|d| d.observer.clone()).collect();
    let trace = simulate(&mf.model, &cfg, scenario, &observers)?;
    let outcomes = designs
        .iter()
        .enumerate()
        .map(|(k, d)| -> PipelineResult<DetectorOutcome> {
            match &d.observer {
                Observer::Sliding(o) => {
                    let spec = d
                        .sliding
                        .as_ref()
                        .expect("sliding designs carry their sets");
                    let e0 = &o.t_o * (&cfg.xhat0 - &cfg.x0);
                    let spec = cover_initial_error(spec, &e0)?;
                    Ok(DetectorOutcome::Sliding(sliding_check(
                        &trace,
                        k,
                        &d.observer,
                        &spec,
                    )?))
                }
                _ => Ok(DetectorOutcome::Verdicts(classify(
                    &trace,
                    k,
                    &d.observer,
                    &d.model,
                    &d.monitor_config()?,
                )?)),
            }
        })
        .collect::<PipelineResult<Vec<_>>>()?;
    Ok(SimulationRun {
        designs,
        trace,
        outcomes,
    })
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// One `detector` line per design: gains, levels, thresholds, spectrum.
pub fn design_summary(designs: &[DetectorDesign]) -> PipelineResult<String> {
    let mut s = String::new();
    for d in designs {
        let th = &d.thresholds;
        let spec = crate::linalg::eig(d.a_err())?;
        writeln!(
            s,
            "detector {} kind={} norm={} pi={} pi_bar={} f_max={} zeta={} zeta_bar={} theta_th={} t_s={} max_re_eig={}",
            d.label,
            d.observer.kind().as_str(),
            d.norm_kind().as_str(),
            sci(th.gains.pi),
            sci(th.gains.pi_bar),
            sci(th.f_max),
            sci(th.zeta),
            sci(th.zeta_bar),
            sci(th.theta_th),
            sci(d.t_s),
            sci(spec.max_real_part)
        )
        .unwrap();
    }
    Ok(s)
}

/// Plain-text run report with stable line prefixes: `run`, `detector`,
/// `latency`, `tally`, `sliding`.
pub fn run_report(
    mf: &ModelFile,
    scenario: &FaultScenario,
    run: &SimulationRun,
) -> PipelineResult<String> {
    let mut s = String::new();
    writeln!(
        s,
        "run model={} scenario={} samples={} dt={}",
        mf.name,
        scenario.name,
        run.trace.len(),
        run.trace.dt
    )
    .unwrap();
    s.push_str(&design_summary(&run.designs)?);
    for (i, seg) in scenario.segments.iter().enumerate() {
        for (k, d) in run.designs.iter().enumerate() {
            let lat = run
                .detection_latency(k, seg.t_start, seg.t_end)
                .map_or_else(|| "none".to_string(), |l| format!("{l:.3}"));
            writeln!(
                s,
                "latency segment={} start={} end={} detector={} seconds={lat}",
                i + 1,
                seg.t_start,
                seg.t_end,
                d.label
            )
            .unwrap();
        }
    }
    for (k, d) in run.designs.iter().enumerate() {
        match &run.outcomes[k] {
            DetectorOutcome::Verdicts(v) => {
                let counts = tally(v);
                let parts: Vec<String> = Mode::ALL
                    .iter()
                    .zip(counts)
                    .map(|(m, c)| format!("{m}={c}"))
                    .collect();
                let last = v.last().map_or("none", |x| x.mode.as_str());
                writeln!(
                    s,
                    "tally detector={} {} final={last}",
                    d.label,
                    parts.join(" ")
                )
                .unwrap();
            }
            DetectorOutcome::Sliding(r) => {
                writeln!(
                    s,
                    "sliding detector={} e_e_invariant={} e_s_after_ts={} e_s_entry={} max_nu={}",
                    d.label,
                    r.e_e_invariant,
                    r.e_s_invariant_after_ts,
                    r.e_s_entry_time
                        .map_or_else(|| "none".to_string(), |t| format!("{t:.3}")),
                    sci(r.max_nu)
                )
                .unwrap();
            }
        }
    }
    Ok(s)
}

/// Writes `trace.csv`, `verdicts_<label>.csv` and `report.txt` into `out`.
pub fn write_run(
    out: &Path,
    mf: &ModelFile,
    scenario: &FaultScenario,
    run: &SimulationRun,
) -> PipelineResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = out.join("trace.csv");
    write_atomic(&path, run.trace.to_csv_string().as_bytes())?;
    written.push(path);
    for (k, d) in run.designs.iter().enumerate() {
        if let DetectorOutcome::Verdicts(v) = &run.outcomes[k] {
            let mut buf = Vec::new();
            write_verdict_csv(v, &mut buf)?;
            let path = out.join(format!("verdicts_{}.csv", d.label));
            write_atomic(&path, &buf)?;
            written.push(path);
        }
    }
    let path = out.join("report.txt");
    write_atomic(&path, run_report(mf, scenario, run)?.as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Writes `<label>.fdcert` for every design.
pub fn write_certificates(out: &Path, designs: &[DetectorDesign]) -> PipelineResult<Vec<PathBuf>> {
    designs
        .iter()
        .map(|d| {
            let path = out.join(format!("{}.fdcert", d.label));
            write_atomic(&path, CertificateFile::from_design(d).to_text().as_bytes())?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_estimate_is_reproducible() {
        let a = initial_estimate(4, Some(7));
        assert_eq!(a, initial_estimate(4, Some(7)));
        assert_ne!(a, initial_estimate(4, Some(8)));
        assert!(a.iter().all(|v| v.abs() <= SEED_SPREAD));
        assert_eq!(initial_estimate(3, None), Vector::zeros(3));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
