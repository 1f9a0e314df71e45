//! Plant models, closed-loop configuration, fault scenarios and the fixed-step
//! simulator.

mod config;
mod scenario;
mod sim;

pub use config::{model_from_config, model_from_str, ControllerSpec, DetectorSpec, ModelFile};
pub use scenario::{
    scenario_from_config, scenario_from_str, ActuatorChange, FaultScenario, FaultSegment,
    SCHEMA_VERSION,
};
pub use sim::{simulate, ObserverTrace, Trace};

use serde::Deserialize;

use crate::error::{PlantError, PlantResult};
use crate::linalg::{eig, inverse, solve_care, Mat, Vector};
use crate::observer::LtiModel;

/// Physical constants of the three-axis lab helicopter.
///
/// States are elevation, pitch and travel angles followed by their rates;
/// inputs are the front and back motor voltages.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelicopterParams {
    /// Mass of each propeller assembly (kg).
    pub m_f: f64,
    /// Counterweight mass (kg).
    pub m_w: f64,
    /// Pivot to propeller-body distance along the main arm (m).
    pub l_a: f64,
    /// Height offset of the propeller body (m).
    pub l_h: f64,
    /// Pivot to counterweight distance in the travel equation (m).
    pub l_m: f64,
    /// Pivot to counterweight distance in the elevation equation (m).
    pub l_w: f64,
    /// Pitch axis to motor distance (m).
    pub l_f: f64,
    /// Propeller force constant (N/V).
    pub k_f: f64,
    pub g: f64,
}

impl HelicopterParams {
    /// Representative lab values; not manufacturer data.
    pub fn representative() -> Self {
        HelicopterParams {
            m_f: 0.713,
            m_w: 1.87,
            l_a: 0.66,
            l_h: 0.178,
            l_m: 0.47,
            l_w: 0.47,
            l_f: 0.178,
            k_f: 0.1188,
            g: 9.81,
        }
    }

    pub fn validate(&self) -> PlantResult<()> {
        let strictly = [
            ("m_f", self.m_f),
            ("m_w", self.m_w),
            ("L_a", self.l_a),
            ("L_m", self.l_m),
            ("L_w", self.l_w),
            ("L_f", self.l_f),
            ("K_f", self.k_f),
            ("g", self.g),
        ];
        for (name, v) in strictly {
            if !(v > 0.0) || !v.is_finite() {
                return Err(PlantError::Param(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.l_h >= 0.0) || !self.l_h.is_finite() {
            return Err(PlantError::Param(format!(
                "L_h must be nonnegative, got {}",
                self.l_h
            )));
        }
        Ok(())
    }
}

/// Plant matrices `(A, B, C)` of the linearized helicopter.
pub fn helicopter_matrices(p: &HelicopterParams) -> PlantResult<(Mat, Mat, Mat)> {
    p.validate()?;
    let travel_den =
        2.0 * p.m_f * p.l_a * p.l_a + 2.0 * p.m_f * p.l_h * p.l_h + p.m_w * p.l_m * p.l_m;
    let elev_den = p.m_w * p.l_w * p.l_w + 2.0 * p.m_f * p.l_a * p.l_a;
    let pitch_den = 2.0 * p.m_f * p.l_f;
    for (name, d) in [
        ("travel", travel_den),
        ("elevation", elev_den),
        ("pitch", pitch_den),
    ] {
        if d == 0.0 || !d.is_finite() {
            return Err(PlantError::Param(format!("{name} denominator vanishes")));
        }
    }
    let mut a = Mat::zeros(6, 6);
    for i in 0..3 {
        a[(i, i + 3)] = 1.0;
    }
    a[(5, 1)] = (2.0 * p.m_f * p.l_a - p.m_w * p.l_m) * p.g / travel_den;
    let mut b = Mat::zeros(6, 2);
    let elev = p.l_a * p.k_f / elev_den;
    b[(3, 0)] = elev;
    b[(3, 1)] = elev;
    b[(4, 0)] = p.k_f / pitch_den;
    b[(4, 1)] = -p.k_f / pitch_den;
    let mut c = Mat::zeros(3, 6);
    for i in 0..3 {
        c[(i, i)] = 1.0;
    }
    Ok((a, b, c))
}

/// Helicopter model with the motor input directions as fault channels.
pub fn build_helicopter_model(p: &HelicopterParams) -> PlantResult<LtiModel> {
    let (a, b, c) = helicopter_matrices(p)?;
    Ok(LtiModel::new(a, b.clone(), c, b, Mat::zeros(6, 0))?)
}

/// Helicopter model with caller-supplied fault distributions.
pub fn build_helicopter_model_with(
    p: &HelicopterParams,
    e_f: Mat,
    e_d: Mat,
) -> PlantResult<LtiModel> {
    let (a, b, c) = helicopter_matrices(p)?;
    Ok(LtiModel::new(a, b, c, e_f, e_d)?)
}

/// Fault acting on angle `angle` (0 elevation, 1 pitch, 2 travel): an
/// acceleration disturbance on its rate row plus `weight` times a direct
/// drift on the angle row.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleFault {
    pub angle: usize,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Stacks the columns `weight·e_angle + e_(angle+3)` of 6-state fault channels.
pub fn angle_fault_matrix(channels: &[AngleFault]) -> PlantResult<Mat> {
    let mut e = Mat::zeros(6, channels.len());
    for (k, ch) in channels.iter().enumerate() {
        if ch.angle > 2 {
            return Err(PlantError::Config(format!(
                "fault channel {k} names angle {}, expected 0, 1 or 2",
                ch.angle
            )));
        }
        if !ch.weight.is_finite() {
            return Err(PlantError::Config(format!(
                "fault channel {k} has a non-finite weight"
            )));
        }
        e[(ch.angle, k)] = ch.weight;
        e[(ch.angle + 3, k)] = 1.0;
    }
    Ok(e)
}

/// State-feedback gain `K = R⁻¹BᵀP` from the stabilizing Riccati solution.
pub fn lqr_gain(model: &LtiModel, q: &Mat, r: &Mat) -> PlantResult<Mat> {
    let p = solve_care(model.a(), model.b(), q, r)?;
    let k = inverse(r, "R")? * model.b().transpose() * p;
    let spec = eig(&(model.a() - model.b() * &k))?;
    if !spec.is_hurwitz {
        return Err(PlantError::Config(format!(
            "LQR closed loop is not Hurwitz (max Re λ = {:.3e})",
            spec.max_real_part
        )));
    }
    Ok(k)
}

/// Closed-loop simulation settings.
///
/// `u_op` is the trim input holding the linearization point. The actuator
/// matrix `X` scales the total command `u_op + u`, so the plant receives the
/// deviation input `X(u_op + u) − u_op`; with `u_op = 0` this is `X·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopConfig {
    pub k_ctrl: Mat,
    pub x0: Vector,
    /// Initial state estimate of every observer (default zero).
    pub xhat0: Vector,
    pub u_op: Vector,
    pub dt: f64,
}

impl ClosedLoopConfig {
    pub fn new(model: &LtiModel, k_ctrl: Mat, dt: f64) -> PlantResult<Self> {
        let n = model.n();
        let cfg = ClosedLoopConfig {
            k_ctrl,
            x0: Vector::zeros(n),
            xhat0: Vector::zeros(n),
            u_op: Vector::zeros(model.m()),
            dt,
        };
        cfg.validate(model)?;
        Ok(cfg)
    }

    /// LQR state feedback with weights `q`, `r`.
    pub fn lqr(model: &LtiModel, q: &Mat, r: &Mat, dt: f64) -> PlantResult<Self> {
        Self::new(model, lqr_gain(model, q, r)?, dt)
    }

    pub fn validate(&self, model: &LtiModel) -> PlantResult<()> {
        let (n, m) = (model.n(), model.m());
        if self.k_ctrl.nrows() != m || self.k_ctrl.ncols() != n {
            return Err(PlantError::Config(format!(
                "controller gain must be {m}x{n}"
            )));
        }
        if self.x0.len() != n || self.xhat0.len() != n || self.u_op.len() != m {
            return Err(PlantError::Config(
                "initial state or trim input has the wrong length".into(),
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(PlantError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        let spec = eig(&(model.a() - model.b() * &self.k_ctrl))?;
        if !spec.is_hurwitz {
            return Err(PlantError::Config(format!(
                "closed loop A − BK is not Hurwitz (max Re λ = {:.3e})",
                spec.max_real_part
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_arm_cancels_travel_coupling() {
        let p = HelicopterParams {
            m_f: 1.0,
            m_w: 2.0,
            l_a: 1.0,
            l_m: 1.0,
            l_h: 0.3,
            ..HelicopterParams::representative()
        };
        let (a, _, _) = helicopter_matrices(&p).unwrap();
        assert_eq!(a[(5, 1)], 0.0);
    }

    #[test]
    fn vanishing_counterweight() {
        let p = HelicopterParams {
            m_f: 1.0,
            m_w: 1e-300,
            l_a: 1.0,
            l_h: 0.0,
            g: 9.81,
            ..HelicopterParams::representative()
        };
        let (a, _, c) = helicopter_matrices(&p).unwrap();
        assert!((a[(5, 1)] - 9.81).abs() < 1e-12);
        let mut expected_c = Mat::zeros(3, 6);
        expected_c.view_mut((0, 0), (3, 3)).fill_with_identity();
        assert_eq!(c, expected_c);
    }

    #[test]
    fn invalid_parameters() {
        let p = HelicopterParams {
            m_f: 0.0,
            ..HelicopterParams::representative()
        };
        assert!(matches!(helicopter_matrices(&p), Err(PlantError::Param(_))));
    }

    #[test]
    fn scalar_lqr_and_helicopter_closed_loop() {
        let m = LtiModel::new(
            Mat::zeros(1, 1),
            Mat::identity(1, 1),
            Mat::identity(1, 1),
            Mat::zeros(1, 0),
            Mat::zeros(1, 0),
        )
        .unwrap();
        let k = lqr_gain(&m, &Mat::identity(1, 1), &Mat::identity(1, 1)).unwrap();
        assert!((k[(0, 0)] - 1.0).abs() < 1e-12);

        let heli = build_helicopter_model(&HelicopterParams::representative()).unwrap();
        let k = lqr_gain(&heli, &Mat::identity(6, 6), &Mat::identity(2, 2)).unwrap();
        assert!(eig(&(heli.a() - heli.b() * k)).unwrap().is_hurwitz);
    }

    #[test]
    fn costlier_control_slows_the_loop() {
        let a = crate::linalg::mat(&[&[0.2, 1.0, 0.0], &[0.0, -0.1, 1.0], &[0.3, 0.0, 0.1]]);
        let b = crate::linalg::mat(&[&[0.0], &[0.0], &[1.0]]);
        let m = LtiModel::new(
            a,
            b,
            Mat::identity(3, 3),
            Mat::zeros(3, 0),
            Mat::zeros(3, 0),
        )
        .unwrap();
        let q = Mat::identity(3, 3);
        let k1 = lqr_gain(&m, &q, &Mat::identity(1, 1)).unwrap();
        let k2 = lqr_gain(&m, &q, &(Mat::identity(1, 1) * 2.0)).unwrap();
        let s1 = eig(&(m.a() - m.b() * k1)).unwrap().max_real_part;
        let s2 = eig(&(m.a() - m.b() * k2)).unwrap().max_real_part;
        assert!(s2 > s1, "{s2} <= {s1}");
    }
}
