use std::path::Path;

use serde::Deserialize;

use crate::error::{PlantError, PlantResult};
use crate::linalg::{Mat, Vector};

/// Scenario and model files carry this schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Constant fault values held on `[t_start, t_end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub f: Vector,
    pub f_d: Vector,
}

/// From `t_start` on, the plant receives `X·u` instead of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorChange {
    pub t_start: f64,
    pub x: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultScenario {
    pub name: String,
    pub duration: f64,
    pub nf: usize,
    pub nd: usize,
    /// Sorted by start time, pairwise disjoint.
    pub segments: Vec<FaultSegment>,
    /// Sorted by start time.
    pub actuator_schedule: Vec<ActuatorChange>,
}

impl FaultScenario {
    /// Fault-free run of the given length.
    pub fn nominal(duration: f64, nf: usize, nd: usize) -> PlantResult<Self> {
        FaultScenario::new("nominal", duration, nf, nd, Vec::new(), Vec::new())
    }

    pub fn new(
        name: &str,
        duration: f64,
        nf: usize,
        nd: usize,
        mut segments: Vec<FaultSegment>,
        mut actuator_schedule: Vec<ActuatorChange>,
    ) -> PlantResult<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(PlantError::Scenario(format!(
                "duration must be positive, got {duration}"
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.t_start >= 0.0 && s.t_start < s.t_end && s.t_end <= duration) {
                return Err(PlantError::Scenario(format!(
                    "segment {i} [{}, {}) is not an interval inside [0, {duration}]",
                    s.t_start, s.t_end
                )));
            }
            if s.f.len() != nf || s.f_d.len() != nd {
                return Err(PlantError::Scenario(format!(
                    "segment {i} carries {} fault and {} unknown-input values, expected {nf} and {nd}",
                    s.f.len(),
                    s.f_d.len()
                )));
            }
            if s.f.iter().chain(s.f_d.iter()).any(|v| !v.is_finite()) {
                return Err(PlantError::Scenario(format!(
                    "segment {i} has non-finite values"
                )));
            }
        }
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for w in segments.windows(2) {
            if w[1].t_start < w[0].t_end {
                return Err(PlantError::Scenario(format!(
                    "segments [{}, {}) and [{}, {}) overlap",
                    w[0].t_start, w[0].t_end, w[1].t_start, w[1].t_end
                )));
            }
        }
        let m = actuator_schedule.first().map(|c| c.x.nrows());
        for (i, c) in actuator_schedule.iter().enumerate() {
            if !(c.t_start >= 0.0 && c.t_start <= duration) {
                return Err(PlantError::Scenario(format!(
                    "actuator change {i} at t = {} lies outside [0, {duration}]",
                    c.t_start
                )));
            }
            if !c.x.is_square() || Some(c.x.nrows()) != m || c.x.iter().any(|v| !v.is_finite()) {
                return Err(PlantError::Scenario(format!(
                    "actuator change {i} needs a finite square matrix of one common size"
                )));
            }
        }
        actuator_schedule.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        Ok(FaultScenario {
            name: name.to_string(),
            duration,
            nf,
            nd,
            segments,
            actuator_schedule,
        })
    }

    /// `(f, f_d)` at time `t`.
    pub fn fault_at(&self, t: f64) -> (Vector, Vector) {
        self.segments
            .iter()
            .find(|s| s.t_start <= t && t < s.t_end)
            .map(|s| (s.f.clone(), s.f_d.clone()))
            .unwrap_or_else(|| (Vector::zeros(self.nf), Vector::zeros(self.nd)))
    }

    /// Actuator effectiveness matrix at `t` (identity before the first change).
    pub fn actuator_at(&self, t: f64, m: usize) -> Mat {
        self.actuator_schedule
            .iter()
            .rev()
            .find(|c| c.t_start <= t)
            .map(|c| c.x.clone())
            .unwrap_or_else(|| Mat::identity(m, m))
    }

    /// Largest fault norm `‖[f; f_d]‖` over all segments.
    pub fn max_fault_norm(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| (s.f.norm_squared() + s.f_d.norm_squared()).sqrt())
            .fold(0.0, f64::max)
    }

    /// Index of the segment active at `t`, if any.
    pub fn segment_index_at(&self, t: f64) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| s.t_start <= t && t < s.t_end)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    duration: f64,
    #[serde(default)]
    nf: Option<usize>,
    #[serde(default)]
    nd: Option<usize>,
    #[serde(default, rename = "segment")]
    segments: Vec<SegmentEntry>,
    #[serde(default, rename = "actuator")]
    actuators: Vec<ActuatorEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentEntry {
    t_start: f64,
    t_end: f64,
    #[serde(default)]
    f: Vec<f64>,
    #[serde(default)]
    f_d: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuatorEntry {
    t_start: f64,
    #[serde(default)]
    diag: Option<Vec<f64>>,
    #[serde(default)]
    x: Option<Vec<Vec<f64>>>,
}

pub(crate) fn rows_to_mat(rows: &[Vec<f64>], what: &str) -> PlantResult<Mat> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PlantError::Config(format!(
            "{what}: rows have unequal lengths"
        )));
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Parses a scenario from TOML text.
///
/// Channel counts default to the longest `f` / `f_d` list; shorter lists
/// (including omitted ones) are zero-padded.
pub fn scenario_from_str(text: &str) -> PlantResult<FaultScenario> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| PlantError::Scenario(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(PlantError::Scenario(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let nf = file
        .nf
        .unwrap_or_else(|| file.segments.iter().map(|s| s.f.len()).max().unwrap_or(0));
    let nd = file
        .nd
        .unwrap_or_else(|| file.segments.iter().map(|s| s.f_d.len()).max().unwrap_or(0));
    let pad = |v: &[f64], len: usize, i: usize, what: &str| -> PlantResult<Vector> {
        if v.len() > len {
            return Err(PlantError::Scenario(format!(
                "segment {i}: {what} has {} entries, expected at most {len}",
                v.len()
            )));
        }
        let mut out = Vector::zeros(len);
        out.rows_mut(0, v.len()).copy_from_slice(v);
        Ok(out)
    };
    let segments = file
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(FaultSegment {
                t_start: s.t_start,
                t_end: s.t_end,
                f: pad(&s.f, nf, i, "f")?,
                f_d: pad(&s.f_d, nd, i, "f_d")?,
            })
        })
        .collect::<PlantResult<Vec<_>>>()?;
    let actuators = file
        .actuators
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let x = match (&a.diag, &a.x) {
                (Some(d), None) => Mat::from_diagonal(&Vector::from_column_slice(d)),
                (None, Some(rows)) => rows_to_mat(rows, "actuator x")?,
                _ => {
                    return Err(PlantError::Scenario(format!(
                        "actuator change {i} needs exactly one of `diag` or `x`"
                    )))
                }
            };
            Ok(ActuatorChange {
                t_start: a.t_start,
                x,
            })
        })
        .collect::<PlantResult<Vec<_>>>()?;
    FaultScenario::new(
        file.name.as_deref().unwrap_or("unnamed"),
        file.duration,
        nf,
        nd,
        segments,
        actuators,
    )
}

pub fn scenario_from_config(path: &Path) -> PlantResult<FaultScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PlantError::Io(format!("{}: {e}", path.display())))?;
    scenario_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_segments_are_nominal() {
        let s = scenario_from_str("schema_version = 1\nduration = 5.0\nnf = 2\n").unwrap();
        assert!(s.segments.is_empty());
        assert_eq!(s.fault_at(1.0).0, Vector::zeros(2));
        assert_eq!(s.actuator_at(4.0, 2), Mat::identity(2, 2));
    }

    #[test]
    fn overlap_and_range_errors() {
        let overlap = "schema_version = 1\nduration = 10.0\n\
            [[segment]]\nt_start = 1.0\nt_end = 3.0\nf = [1.0]\n\
            [[segment]]\nt_start = 2.0\nt_end = 4.0\nf = [1.0]\n";
        let err = scenario_from_str(overlap).unwrap_err().to_string();
        assert!(err.contains("[1, 3)") && err.contains("[2, 4)"), "{err}");
        let outside = "schema_version = 1\nduration = 10.0\n[[segment]]\nt_start = 8.0\nt_end = 12.0\nf = [1.0]\n";
        assert!(scenario_from_str(outside)
            .unwrap_err()
            .to_string()
            .contains("segment 0"));
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        assert!(scenario_from_str("schema_version = 1\nduration = 1.0\nbogus = 3\n").is_err());
        assert!(scenario_from_str("schema_version = 2\nduration = 1.0\n").is_err());
    }

    #[test]
    fn zero_order_hold_lookup() {
        let text = "schema_version = 1\nduration = 10.0\n\
            [[segment]]\nt_start = 2.0\nt_end = 4.0\nf = [0.0, 1.5]\n\
            [[actuator]]\nt_start = 5.0\ndiag = [0.95, 0.3]\n";
        let s = scenario_from_str(text).unwrap();
        assert_eq!(s.fault_at(1.999).0[1], 0.0);
        assert_eq!(s.fault_at(2.0).0[1], 1.5);
        assert_eq!(s.fault_at(4.0).0[1], 0.0);
        assert_eq!(s.actuator_at(5.0, 2)[(1, 1)], 0.3);
        assert_eq!(s.segment_index_at(3.0), Some(0));
        assert_eq!(s.max_fault_norm(), 1.5);
    }
}
