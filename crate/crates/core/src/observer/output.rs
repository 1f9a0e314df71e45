use num_complex::Complex64;

use super::{ensure_hurwitz, ensure_stable_poles, LtiModel};
use crate::error::SynthResult;
use crate::linalg::{place_observer_poles, Mat, Vector};

/// Full-order observer `x̂' = Ax̂ + Bu + L(y − Cx̂)`.
///
/// The estimation error is `e = x − x̂` with `ė = (A − LC)e + E_f f + E_d f_d`
/// and residual `r = y − Cx̂ = Ce`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputObserver {
    pub l: Mat,
    /// `A − LC`.
    pub a_err: Mat,
}

pub fn synth_output_observer(
    model: &LtiModel,
    desired: &[Complex64],
) -> SynthResult<OutputObserver> {
    ensure_stable_poles(desired)?;
    let l = place_observer_poles(model.a(), model.c(), desired)?;
    let a_err = model.a() - &l * model.c();
    ensure_hurwitz(&a_err, "A − LC")?;
    Ok(OutputObserver { l, a_err })
}

impl OutputObserver {
    pub(crate) fn derivative(
        &self,
        model: &LtiModel,
        xhat: &Vector,
        u: &Vector,
        y: &Vector,
    ) -> Vector {
        model.a() * xhat + model.b() * u + &self.l * (y - model.c() * xhat)
    }
}
