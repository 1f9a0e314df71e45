use num_complex::Complex64;

use super::{ensure_hurwitz, ensure_stable_poles, stabilizing_injection, LtiModel};
use crate::error::{SynthError, SynthResult};
use crate::linalg::{norm2, rank, validate_pole_set, Mat, Vector};

/// Unknown-input observer `ż = Fz + TBu + Ky`, `x̂ = z + Hy`.
///
/// Error convention here is `e = x̂ − x`, so `ė = Fe − TE_f f` once the
/// decoupling identities hold; residual `r = y − Cx̂ = −Ce`.
#[derive(Debug, Clone, PartialEq)]
pub struct Uio {
    pub f: Mat,
    pub t: Mat,
    pub k: Mat,
    pub h: Mat,
    pub k1: Mat,
    pub k2: Mat,
}

/// Norms of the four algebraic identities and the pass/fail verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct UioAlgebraReport {
    /// `‖(HC − I)E_d‖`
    pub decoupling: f64,
    /// `‖T − (I − HC)‖`
    pub t_identity: f64,
    /// `‖F − (A − HCA − K1C)‖`
    pub f_identity: f64,
    /// `‖K2 − FH‖`
    pub k2_identity: f64,
    pub eps: f64,
}

impl UioAlgebraReport {
    pub fn entries(&self) -> [(&'static str, f64); 4] {
        [
            ("(HC-I)E_d", self.decoupling),
            ("T-(I-HC)", self.t_identity),
            ("F-(A-HCA-K1C)", self.f_identity),
            ("K2-FH", self.k2_identity),
        ]
    }

    pub fn passes(&self) -> bool {
        self.entries().iter().all(|(_, v)| *v <= self.eps)
    }
}

pub fn synth_uio(model: &LtiModel, desired: &[Complex64]) -> SynthResult<Uio> {
    let n = model.n();
    let p = model.p();
    let nd = model.nd();
    if nd > p {
        return Err(SynthError::NoUioExists(format!(
            "{nd} unknown-input channels exceed the {p} measured outputs"
        )));
    }
    let ce = model.c() * model.e_d();
    let (rank_ce, rank_e) = (rank(&ce, 1e-10), rank(model.e_d(), 1e-10));
    if rank_ce != rank_e {
        return Err(SynthError::NoUioExists(format!(
            "rank(C·E_d) = {rank_ce} differs from rank(E_d) = {rank_e}"
        )));
    }
    validate_pole_set(desired, n)?;
    ensure_stable_poles(desired)?;

    let h = if nd == 0 || rank_e == 0 {
        Mat::zeros(n, p)
    } else {
        // E_d (CE_d)⁺ equals E_d[(CE_d)ᵀCE_d]⁻¹(CE_d)ᵀ when CE_d has full column rank
        let pinv = ce
            .clone()
            .pseudo_inverse(1e-12 * norm2(&ce))
            .map_err(|e| SynthError::Input(e.to_string()))?;
        model.e_d() * pinv
    };
    let t = Mat::identity(n, n) - &h * model.c();
    let a1 = &t * model.a();
    let k1 = stabilizing_injection(&a1, model.c(), desired)?;
    let f = &a1 - &k1 * model.c();
    ensure_hurwitz(&f, "F")?;
    let k2 = &f * &h;
    let k = &k1 + &k2;
    Ok(Uio { f, t, k, h, k1, k2 })
}

/// Evaluates the decoupling and structural identities against `eps`.
pub fn check_uio_algebra(uio: &Uio, model: &LtiModel, eps: f64) -> UioAlgebraReport {
    let n = model.n();
    let hc = &uio.h * model.c();
    let eye = Mat::identity(n, n);
    let nominal_f = model.a() - &hc * model.a() - &uio.k1 * model.c();
    UioAlgebraReport {
        decoupling: norm2(&((&hc - &eye) * model.e_d())),
        t_identity: norm2(&(&uio.t - (&eye - &hc))),
        f_identity: norm2(&(&uio.f - nominal_f)),
        k2_identity: norm2(&(&uio.k2 - &uio.f * &uio.h)),
        eps,
    }
}

impl Uio {
    pub(crate) fn derivative(
        &self,
        model: &LtiModel,
        z: &Vector,
        u: &Vector,
        y: &Vector,
    ) -> Vector {
        &self.f * z + &self.t * (model.b() * u) + &self.k * y
    }

    /// `A − HCA − K1C`, the error matrix the identities promise.
    pub fn nominal_error_matrix(&self, model: &LtiModel) -> Mat {
        model.a() - &self.h * model.c() * model.a() - &self.k1 * model.c()
    }

    /// Fault forcing of the error dynamics with the identity defects removed:
    /// `ė − Ā e − (F − Ā)z − (T − (I − HC))Bu − (K2 − ĀH)y`, `Ā = A − HCA − K1C`.
    pub fn theta(
        &self,
        model: &LtiModel,
        e_dot: &Vector,
        e: &Vector,
        z: &Vector,
        u: &Vector,
        y: &Vector,
    ) -> Vector {
        let n = model.n();
        let abar = self.nominal_error_matrix(model);
        let t_nom = Mat::identity(n, n) - &self.h * model.c();
        e_dot
            - &abar * e
            - (&self.f - &abar) * z
            - (&self.t - t_nom) * (model.b() * u)
            - (&self.k2 - &abar * &self.h) * y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig, mat};
    use crate::observer::default_poles;

    #[test]
    fn full_state_output_gives_projector() {
        let m = LtiModel::new(
            mat(&[&[-1.0, 0.5], &[0.2, -2.0]]),
            mat(&[&[1.0], &[0.0]]),
            Mat::identity(2, 2),
            mat(&[&[1.0], &[0.0]]),
            mat(&[&[0.0], &[1.0]]),
        )
        .unwrap();
        let uio = synth_uio(&m, &default_poles(2)).unwrap();
        assert!((&uio.h - mat(&[&[0.0, 0.0], &[0.0, 1.0]])).amax() < 1e-15);
        let report = check_uio_algebra(&uio, &m, 1e-10);
        assert!(report.decoupling <= 1e-15);
        assert!(report.passes());
    }

    #[test]
    fn zero_output_coupling_has_no_uio() {
        let m = LtiModel::new(
            mat(&[&[0.0, 1.0], &[0.0, 0.0]]),
            mat(&[&[0.0], &[1.0]]),
            mat(&[&[1.0, 0.0]]),
            Mat::zeros(2, 0),
            mat(&[&[0.0], &[1.0]]),
        )
        .unwrap();
        assert!(matches!(
            synth_uio(&m, &default_poles(2)),
            Err(SynthError::NoUioExists(_))
        ));
    }

    #[test]
    fn too_many_unknown_inputs() {
        let m = LtiModel::new(
            mat(&[&[-1.0, 1.0], &[0.0, -2.0]]),
            Mat::zeros(2, 1),
            mat(&[&[1.0, 0.0]]),
            Mat::zeros(2, 0),
            Mat::identity(2, 2),
        )
        .unwrap();
        assert!(matches!(
            synth_uio(&m, &default_poles(2)),
            Err(SynthError::NoUioExists(_))
        ));
    }

    #[test]
    fn defects_are_reported() {
        let m = LtiModel::new(
            mat(&[&[-0.3, 1.1, 0.2], &[0.4, -1.0, 0.7], &[0.1, 0.3, -0.9]]),
            mat(&[&[1.0], &[0.0], &[0.5]]),
            mat(&[&[1.0, 0.2, 0.0], &[0.0, 1.0, 0.3]]),
            mat(&[&[1.0], &[0.0], &[0.0]]),
            mat(&[&[0.3], &[0.7], &[0.1]]),
        )
        .unwrap();
        let mut uio = synth_uio(&m, &default_poles(3)).unwrap();
        assert!(eig(&uio.f).unwrap().is_hurwitz);
        let clean = check_uio_algebra(&uio, &m, 1e-10);
        assert!(clean.passes(), "{clean:?}");
        assert!(!check_uio_algebra(&uio, &m, 0.0).passes());
        uio.f[(0, 0)] += 1e-6;
        let bad = check_uio_algebra(&uio, &m, 1e-10);
        assert!(!bad.passes());
        assert!(bad.f_identity > 1e-7 && bad.decoupling < 1e-10);
    }
}
