use std::path::Path;

use serde::Deserialize;

use super::scenario::{rows_to_mat, SCHEMA_VERSION};
use super::{
    angle_fault_matrix, build_helicopter_model_with, helicopter_matrices, lqr_gain, AngleFault,
    ClosedLoopConfig, HelicopterParams,
};
use crate::error::{PlantError, PlantResult};
use crate::gains::NormKind;
use crate::linalg::{Mat, Vector};
use crate::observer::LtiModel;

/// How the state-feedback controller is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Gain(Mat),
    Lqr { q: Mat, r: Mat },
}

/// Detector design settings carried by a model file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    /// Real observer poles; `None` uses −2, −3, ….
    #[serde(default)]
    pub poles: Option<Vec<f64>>,
    #[serde(default = "DetectorSpec::default_r_th")]
    pub r_th: f64,
    #[serde(default = "DetectorSpec::default_sigma_bar")]
    pub sigma_bar: f64,
    #[serde(default = "DetectorSpec::default_norm")]
    pub norm: String,
    #[serde(default = "DetectorSpec::default_eps")]
    pub eps: f64,
    #[serde(default = "DetectorSpec::default_sliding_decay")]
    pub sliding_decay: f64,
    #[serde(default = "DetectorSpec::default_sliding_rho")]
    pub sliding_rho: f64,
    #[serde(default = "DetectorSpec::default_sliding_sigma")]
    pub sliding_sigma: f64,
    /// Time after which the output error must stay in the sliding set.
    #[serde(default = "DetectorSpec::default_sliding_ts")]
    pub sliding_ts: f64,
    /// Envelope `‖u‖ ≤ u_max` assumed by emitted annotations.
    #[serde(default = "DetectorSpec::default_envelope")]
    pub u_max: f64,
    /// Envelope `‖y‖ ≤ y_max` assumed by emitted annotations.
    #[serde(default = "DetectorSpec::default_envelope")]
    pub y_max: f64,
}

impl DetectorSpec {
    fn default_r_th() -> f64 {
        0.05
    }
    fn default_sigma_bar() -> f64 {
        1.0
    }
    fn default_norm() -> String {
        NormKind::L2toL2.as_str().into()
    }
    fn default_eps() -> f64 {
        1e-10
    }
    fn default_sliding_decay() -> f64 {
        2.0
    }
    fn default_sliding_rho() -> f64 {
        1.0
    }
    fn default_sliding_sigma() -> f64 {
        1e-3
    }
    fn default_sliding_ts() -> f64 {
        2.0
    }
    fn default_envelope() -> f64 {
        10.0
    }

    pub fn norm_kind(&self) -> PlantResult<NormKind> {
        NormKind::parse(&self.norm).ok_or_else(|| {
            PlantError::Config(format!(
                "unknown norm `{}` (expected L2toL2, L2toPeak or PeakToPeak)",
                self.norm
            ))
        })
    }
}

impl Default for DetectorSpec {
    fn default() -> Self {
        toml::from_str("").expect("all detector fields have defaults")
    }
}

/// A parsed model file: plant, controller, operating point and detector
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub name: String,
    pub model: LtiModel,
    pub controller: ControllerSpec,
    pub u_op: Vector,
    pub x0: Vector,
    pub detector: DetectorSpec,
}

impl ModelFile {
    pub fn controller_gain(&self) -> PlantResult<Mat> {
        match &self.controller {
            ControllerSpec::Gain(k) => Ok(k.clone()),
            ControllerSpec::Lqr { q, r } => lqr_gain(&self.model, q, r),
        }
    }

    pub fn closed_loop(&self, dt: f64) -> PlantResult<ClosedLoopConfig> {
        let mut cfg = ClosedLoopConfig::new(&self.model, self.controller_gain()?, dt)?;
        cfg.u_op = self.u_op.clone();
        cfg.x0 = self.x0.clone();
        cfg.validate(&self.model)?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    helicopter: Option<HelicopterParams>,
    #[serde(default)]
    matrices: Option<RawMatrices>,
    #[serde(default, rename = "fault")]
    faults: Vec<AngleFault>,
    #[serde(default, rename = "disturbance")]
    disturbances: Vec<AngleFault>,
    #[serde(default)]
    controller: RawController,
    #[serde(default)]
    detector: Option<DetectorSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrices {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    #[serde(default)]
    e_f: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    e_d: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    #[serde(default)]
    gain: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    q_diag: Option<Vec<f64>>,
    #[serde(default)]
    r_diag: Option<Vec<f64>>,
    #[serde(default)]
    u_op: Option<Vec<f64>>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
}

fn sized(v: Option<&Vec<f64>>, len: usize, what: &str) -> PlantResult<Vector> {
    match v {
        None => Ok(Vector::zeros(len)),
        Some(v) if v.len() == len => Ok(Vector::from_column_slice(v)),
        Some(v) => Err(PlantError::Config(format!(
            "{what} has {} entries, expected {len}",
            v.len()
        ))),
    }
}

/// Empty matrix lists mean "no channels", kept with the right row count.
fn channel_matrix(rows: &Option<Vec<Vec<f64>>>, n: usize, what: &str) -> PlantResult<Option<Mat>> {
    match rows {
        None => Ok(None),
        Some(r) if r.is_empty() => Ok(Some(Mat::zeros(n, 0))),
        Some(r) => rows_to_mat(r, what).map(Some),
    }
}

/// Parses a model file from TOML text.
///
/// Exactly one of `[helicopter]` or `[matrices]` defines the plant. For the
/// helicopter, `[[fault]]` and `[[disturbance]]` entries build `E_f` and
/// `E_d` column by column; without any, `E_f = B`.
pub fn model_from_str(text: &str) -> PlantResult<ModelFile> {
    let raw: RawModel = toml::from_str(text).map_err(|e| PlantError::Config(e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(PlantError::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            raw.schema_version
        )));
    }
    let model = match (&raw.helicopter, &raw.matrices) {
        (Some(p), None) => {
            if raw.faults.is_empty() && raw.disturbances.is_empty() {
                let (_, b, _) = helicopter_matrices(p)?;
                build_helicopter_model_with(p, b, Mat::zeros(6, 0))?
            } else {
                build_helicopter_model_with(
                    p,
                    angle_fault_matrix(&raw.faults)?,
                    angle_fault_matrix(&raw.disturbances)?,
                )?
            }
        }
        (None, Some(m)) => {
            if !raw.faults.is_empty() || !raw.disturbances.is_empty() {
                return Err(PlantError::Config(
                    "[[fault]] / [[disturbance]] entries apply to [helicopter] models only".into(),
                ));
            }
            let a = rows_to_mat(&m.a, "a")?;
            let n = a.nrows();
            let b = rows_to_mat(&m.b, "b")?;
            let c = rows_to_mat(&m.c, "c")?;
            let e_f = channel_matrix(&m.e_f, n, "e_f")?.unwrap_or_else(|| b.clone());
            let e_d = channel_matrix(&m.e_d, n, "e_d")?.unwrap_or_else(|| Mat::zeros(n, 0));
            LtiModel::new(a, b, c, e_f, e_d)?
        }
        _ => {
            return Err(PlantError::Config(
                "a model file needs exactly one of [helicopter] or [matrices]".into(),
            ))
        }
    };
    let (n, m) = (model.n(), model.m());
    let ctl = &raw.controller;
    let controller = match (&ctl.gain, &ctl.q_diag, &ctl.r_diag) {
        (Some(k), None, None) => {
            let k = rows_to_mat(k, "controller gain")?;
            if k.nrows() != m || k.ncols() != n {
                return Err(PlantError::Config(format!(
                    "controller gain must be {m}x{n}"
                )));
            }
            ControllerSpec::Gain(k)
        }
        (None, q, r) => {
            let q = match q {
                Some(_) => Mat::from_diagonal(&sized(q.as_ref(), n, "q_diag")?),
                None => Mat::identity(n, n),
            };
            let r = match r {
                Some(_) => Mat::from_diagonal(&sized(r.as_ref(), m, "r_diag")?),
                None => Mat::identity(m, m),
            };
            ControllerSpec::Lqr { q, r }
        }
        _ => {
            return Err(PlantError::Config(
                "controller takes either `gain` or LQR weights, not both".into(),
            ))
        }
    };
    let detector = raw.detector.unwrap_or_default();
    detector.norm_kind()?;
    if let Some(p) = &detector.poles {
        if p.len() != n {
            return Err(PlantError::Config(format!(
                "detector.poles needs {n} entries, got {}",
                p.len()
            )));
        }
    }
    Ok(ModelFile {
        name: raw.name.unwrap_or_else(|| "model".into()),
        u_op: sized(ctl.u_op.as_ref(), m, "u_op")?,
        x0: sized(ctl.x0.as_ref(), n, "x0")?,
        model,
        controller,
        detector,
    })
}

pub fn model_from_config(path: &Path) -> PlantResult<ModelFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PlantError::Io(format!("{}: {e}", path.display())))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HELI: &str = r#"
schema_version = 1
name = "heli"

[helicopter]
m_f = 0.713
m_w = 1.87
l_a = 0.66
l_h = 0.178
l_m = 0.47
l_w = 0.47
l_f = 0.178
k_f = 0.1188
g = 9.81

[[fault]]
angle = 2
[[fault]]
angle = 1
[[fault]]
angle = 0

[controller]
u_op = [1.5, 1.5]
"#;

    #[test]
    fn helicopter_file() {
        let mf = model_from_str(HELI).unwrap();
        assert_eq!(mf.model.nf(), 3);
        assert_eq!(mf.model.e_f()[(2, 0)], 1.0);
        assert_eq!(mf.model.e_f()[(5, 0)], 1.0);
        let cfg = mf.closed_loop(1e-3).unwrap();
        assert_eq!(cfg.u_op[1], 1.5);
    }

    #[test]
    fn matrix_file_defaults_faults_to_inputs() {
        let text =
            "schema_version = 1\n[matrices]\na = [[-1.0]]\nb = [[2.0]]\nc = [[1.0]]\ne_d = []\n\
            [controller]\ngain = [[0.0]]\n[detector]\nr_th = 0.1\n";
        let mf = model_from_str(text).unwrap();
        assert_eq!(mf.model.e_f()[(0, 0)], 2.0);
        assert_eq!(mf.model.nd(), 0);
        assert_eq!(mf.detector.r_th, 0.1);
        assert_eq!(mf.detector.sigma_bar, 1.0);
    }

    #[test]
    fn schema_errors() {
        assert!(model_from_str("schema_version = 1\n").is_err());
        assert!(model_from_str(&HELI.replace("schema_version = 1", "schema_version = 7")).is_err());
        assert!(model_from_str(&format!("{HELI}\nextra = 1\n")).is_err());
        let both = "schema_version = 1\n[matrices]\na = [[-1.0]]\nb = [[1.0]]\nc = [[1.0]]\n\
            [controller]\ngain = [[1.0]]\nq_diag = [1.0]\n";
        assert!(model_from_str(both).is_err());
    }
}
