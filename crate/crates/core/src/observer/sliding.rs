use super::{default_poles, format_modes, stabilizing_injection, LtiModel};
use crate::error::{LinalgError, SynthError, SynthResult};
use crate::linalg::{
    block, eig, invariant_zeros, inverse, left_annihilator, left_inverse, norm2,
    orthonormal_complement, rank, solve_lyapunov, vstack, Mat, Vector, TOL_DECOMP,
};

/// Sliding-mode observer in regular-form coordinates `(x1, x2) = T_o x`,
/// where `y = x2` and the faults enter only the `x2` equation through `D2`.
///
/// State is `[x̂1; x̂2]` in those coordinates. With `e_y = x̂2 − y` the update
/// law is
/// `x̂1' = A11x̂1 + A12x̂2 + B1u − A12e_y`,
/// `x̂2' = A21x̂1 + A22x̂2 + B2u − (A22 − A22s)e_y + ν`,
/// so that `e1' = A11e1` and `e_y' = A21e1 + A22s e_y + ν − D2 f̄`.
/// In plant coordinates this is `x̂' = Ax̂ + Bu − G_l e_y + G_n ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingModeObserver {
    pub t_o: Mat,
    pub t_o_inv: Mat,
    pub a11: Mat,
    pub a12: Mat,
    pub a21: Mat,
    pub a22: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub d2: Mat,
    pub a22s: Mat,
    pub p2: Mat,
    pub g_l: Mat,
    pub g_n: Mat,
    pub rho: f64,
    pub sigma: f64,
    /// Linear part of the error dynamics, `[[A11, 0], [A21, A22s]]`.
    pub a_err: Mat,
    /// Left inverse of `D2`, used for the fault estimate.
    pub d2_pinv: Mat,
}

/// Sliding-mode observer with `A22s = −decay_rate·I`.
pub fn synth_sliding(
    model: &LtiModel,
    decay_rate: f64,
    rho: f64,
    sigma: f64,
) -> SynthResult<SlidingModeObserver> {
    if !(decay_rate > 0.0) || !decay_rate.is_finite() {
        return Err(SynthError::Input(format!(
            "decay rate must be positive, got {decay_rate}"
        )));
    }
    let p = model.p();
    synth_sliding_with(model, &(-Mat::identity(p, p) * decay_rate), rho, sigma)
}

/// Sliding-mode observer with a caller-chosen Hurwitz output-error block `A22s`.
pub fn synth_sliding_with(
    model: &LtiModel,
    a22s: &Mat,
    rho: f64,
    sigma: f64,
) -> SynthResult<SlidingModeObserver> {
    let n = model.n();
    let p = model.p();
    let e_bar = model.e_bar();
    let q = e_bar.ncols();
    if !(rho > 0.0 && rho.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SynthError::Input(format!(
            "rho and sigma must be positive, got {rho} and {sigma}"
        )));
    }
    if a22s.nrows() != p || a22s.ncols() != p {
        return Err(SynthError::Input(format!("A22s must be {p}x{p}")));
    }
    if !eig(a22s)?.is_hurwitz {
        return Err(SynthError::Input("A22s must be Hurwitz".into()));
    }
    if q == 0 {
        return Err(SynthError::Assumption(
            "the model has no fault channels to estimate".into(),
        ));
    }
    if rank(&e_bar, 1e-10) != q {
        return Err(SynthError::Assumption(format!(
            "fault distribution [E_f E_d] must have full column rank {q}"
        )));
    }
    if q > p || p > n {
        return Err(SynthError::Assumption(format!(
            "need faults ≤ outputs ≤ states, got {q}, {p}, {n}"
        )));
    }
    if rank(model.c(), 1e-10) != p {
        return Err(SynthError::Assumption("C must have full row rank".into()));
    }
    let ce = model.c() * &e_bar;
    if rank(&ce, 1e-10) != q {
        return Err(SynthError::Assumption(format!(
            "C·[E_f E_d] must have full column rank {q}"
        )));
    }
    let zeros = invariant_zeros(model.a(), &e_bar, model.c()).map_err(|e| match e {
        LinalgError::Structure(msg) => {
            SynthError::Assumption(format!("degenerate system pencil: {msg}"))
        }
        other => SynthError::Linalg(other),
    })?;
    if zeros.iter().any(|z| !(z.re < 0.0)) {
        return Err(SynthError::Assumption(format!(
            "invariant zeros {} are not all stable",
            format_modes(&zeros)
        )));
    }

    let n1 = n - p;
    // T_c = [N_cᵀ; C] puts the outputs last; identity if C is already [0 I]
    let c = model.c();
    let already_regular = (0..p).all(|i| {
        (0..n).all(|j| {
            let expected = if j == n1 + i { 1.0 } else { 0.0 };
            c[(i, j)] == expected
        })
    });
    let (t_c, t_c_inv) = if already_regular {
        (Mat::identity(n, n), Mat::identity(n, n))
    } else {
        let nc = orthonormal_complement(&c.transpose(), n);
        let t_c = vstack(&[&nc.transpose(), c]);
        let t_c_inv = inverse(&t_c, "T_c")?;
        (t_c, t_c_inv)
    };
    let a_c = &t_c * model.a() * &t_c_inv;
    let e_c = &t_c * &e_bar;
    let e1 = e_c.rows(0, n1).into_owned();
    let e2 = e_c.rows(n1, p).into_owned();

    // M removes the fault from the x1 rows; left-null directions of E2 are
    // free and used to stabilize A11 when there are spare outputs
    let mut m = &e1 * left_inverse(&e2)?;
    if n1 > 0 {
        let a11_bar = a_c.view((0, 0), (n1, n1)).into_owned();
        let a21_bar = a_c.view((n1, 0), (p, n1)).into_owned();
        let a0 = &a11_bar - &m * &a21_bar;
        if !eig(&a0)?.is_hurwitz {
            let nn = left_annihilator(&e2);
            if nn.nrows() == 0 {
                return Err(SynthError::Assumption(
                    "reduced sliding dynamics are unstable and no output redundancy is left".into(),
                ));
            }
            let c0 = &nn * &a21_bar;
            let l = stabilizing_injection(&a0, &c0, &default_poles(n1)).map_err(|e| {
                SynthError::Assumption(format!(
                    "reduced sliding dynamics cannot be stabilized: {e}"
                ))
            })?;
            m += l * nn;
        }
    }
    let eye1 = Mat::identity(n1, n1);
    let eye2 = Mat::identity(p, p);
    let z12 = Mat::zeros(n1, p);
    let z21 = Mat::zeros(p, n1);
    let t_2 = block(&[&[&eye1, &(-&m)], &[&z21, &eye2]]);
    let t_2_inv = block(&[&[&eye1, &m], &[&z21, &eye2]]);
    let t_o = &t_2 * &t_c;
    let t_o_inv = &t_c_inv * &t_2_inv;

    let ar = &t_o * model.a() * &t_o_inv;
    let br = &t_o * model.b();
    let er = &t_o * &e_bar;
    let cr = c * &t_o_inv;
    let scale = 1.0_f64.max(norm2(&e_bar)).max(norm2(&t_o));
    let upper_fault = er.rows(0, n1).amax();
    let output_defect = (cr.columns(0, n1).into_owned().amax())
        .max((cr.columns(n1, p).into_owned() - &eye2).amax());
    if upper_fault > TOL_DECOMP * scale || output_defect > TOL_DECOMP * scale {
        return Err(SynthError::Linalg(LinalgError::Numeric(format!(
            "regular-form transform misses its block shape ({upper_fault:.2e}, {output_defect:.2e})"
        ))));
    }

    let a11 = ar.view((0, 0), (n1, n1)).into_owned();
    let a12 = ar.view((0, n1), (n1, p)).into_owned();
    let a21 = ar.view((n1, 0), (p, n1)).into_owned();
    let a22 = ar.view((n1, n1), (p, p)).into_owned();
    if n1 > 0 {
        let spec = eig(&a11)?;
        if !spec.is_hurwitz {
            return Err(SynthError::Assumption(format!(
                "reduced sliding dynamics A11 are not Hurwitz (max Re λ = {:.3e})",
                spec.max_real_part
            )));
        }
    }
    let d2 = er.rows(n1, p).into_owned();
    let p2 = solve_lyapunov(a22s, &eye2)?;
    let g_n = &t_o_inv * vstack(&[&z12, &eye2]);
    let g_l = &t_o_inv * vstack(&[&a12, &(&a22 - a22s)]);
    let a_err = block(&[&[&a11, &z12], &[&a21, a22s]]);
    let d2_pinv = left_inverse(&d2)?;
    Ok(SlidingModeObserver {
        t_o,
        t_o_inv,
        a11,
        a12,
        a21,
        a22,
        b1: br.rows(0, n1).into_owned(),
        b2: br.rows(n1, p).into_owned(),
        d2,
        a22s: a22s.clone(),
        p2,
        g_l,
        g_n,
        rho,
        sigma,
        a_err,
        d2_pinv,
    })
}

/// Smoothed unit-vector injection `ν = −ρ‖D2‖ P2e_y / (‖P2e_y‖ + σ)`.
pub fn nu_injection(obs: &SlidingModeObserver, e_y: &Vector) -> Vector {
    if e_y.iter().all(|v| *v == 0.0) {
        return Vector::zeros(e_y.len());
    }
    let pe = &obs.p2 * e_y;
    let gain = obs.rho * norm2(&obs.d2);
    let scale = -gain / (pe.norm() + obs.sigma);
    pe * scale
}

/// Fault estimate `D2⁺ν`; during sliding `ν ≈ D2 f̄`, so this tracks `f̄`.
pub fn sliding_fault_estimate(obs: &SlidingModeObserver, e_y: &Vector) -> Vector {
    &obs.d2_pinv * nu_injection(obs, e_y)
}

impl SlidingModeObserver {
    pub fn n1(&self) -> usize {
        self.a11.nrows()
    }

    /// `e_y = x̂2 − y`.
    pub fn output_error(&self, state: &Vector, y: &Vector) -> Vector {
        state.rows(self.n1(), y.len()).into_owned() - y
    }

    pub(crate) fn derivative(&self, state: &Vector, u: &Vector, y: &Vector) -> Vector {
        let n1 = self.n1();
        let x1 = state.rows(0, n1).into_owned();
        let x2 = state.rows(n1, y.len()).into_owned();
        let e_y = &x2 - y;
        let nu = nu_injection(self, &e_y);
        let d1 = &self.a11 * &x1 + &self.a12 * &x2 + &self.b1 * u - &self.a12 * &e_y;
        let d2 =
            &self.a21 * &x1 + &self.a22 * &x2 + &self.b2 * u - (&self.a22 - &self.a22s) * &e_y + nu;
        let mut out = Vector::zeros(state.len());
        out.rows_mut(0, n1).copy_from(&d1);
        out.rows_mut(n1, y.len()).copy_from(&d2);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat;

    fn regular_model() -> LtiModel {
        // x1' = −x1 + x2, x2' = x1 + f ; y = x2
        LtiModel::new(
            mat(&[&[-1.0, 1.0], &[1.0, 0.0]]),
            mat(&[&[0.0], &[1.0]]),
            mat(&[&[0.0, 1.0]]),
            mat(&[&[0.0], &[1.0]]),
            Mat::zeros(2, 0),
        )
        .unwrap()
    }

    #[test]
    fn regular_form_model_keeps_identity_transform() {
        let o = synth_sliding(&regular_model(), 2.0, 1.0, 1e-3).unwrap();
        assert_eq!(o.t_o, Mat::identity(2, 2));
        assert!((o.p2[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_witness_for_diagonal_design_block() {
        let a22s = Mat::from_diagonal(&Vector::from_vec(vec![-10.0, -12.0, -13.0]));
        let p2 = solve_lyapunov(&a22s, &Mat::identity(3, 3)).unwrap();
        for (i, v) in [0.05, 1.0 / 24.0, 1.0 / 26.0].iter().enumerate() {
            assert!((p2[(i, i)] - v).abs() < 1e-15);
        }
        // and backwards: A22s = −Q2 (2 P2)⁻¹ for diagonal P2
        let back = -(p2 * 2.0).try_inverse().unwrap();
        assert!((back - a22s).amax() < 1e-12);
    }

    #[test]
    fn injection_limits() {
        let o = synth_sliding(&regular_model(), 1.0, 1.0, 0.01).unwrap();
        // P2 = 0.5 here, so ‖P2 e_y‖ = 0.005
        let nu = nu_injection(&o, &Vector::from_vec(vec![0.01]));
        assert!((nu[0] + 0.005 / 0.015).abs() < 1e-15);
        assert_eq!(nu_injection(&o, &Vector::zeros(1))[0], 0.0);
        let big = nu_injection(&o, &Vector::from_vec(vec![1e9]));
        assert!(big[0] < 0.0 && big[0].abs() < 1.0 && big[0].abs() > 1.0 - 1e-9);
    }

    #[test]
    fn scalar_injection_example() {
        // ρ = 1, D2 = 1, P2 = 1, σ = 0.01, e_y = 0.01 → ν = −0.5
        let mut o = synth_sliding(&regular_model(), 0.5, 1.0, 0.01).unwrap();
        assert!((o.p2[(0, 0)] - 1.0).abs() < 1e-15);
        o.d2 = mat(&[&[1.0]]);
        assert!((nu_injection(&o, &Vector::from_vec(vec![0.01]))[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn unstable_zero_is_refused() {
        // zero of (A, E, C) at +1
        let m = LtiModel::new(
            mat(&[&[1.0, 1.0], &[1.0, 0.0]]),
            mat(&[&[0.0], &[1.0]]),
            mat(&[&[0.0, 1.0]]),
            mat(&[&[0.0], &[1.0]]),
            Mat::zeros(2, 0),
        )
        .unwrap();
        assert!(matches!(
            synth_sliding(&m, 2.0, 1.0, 1e-3),
            Err(SynthError::Assumption(_))
        ));
    }

    #[test]
    fn general_output_map_reaches_regular_form() {
        let m = LtiModel::new(
            mat(&[&[-2.0, 1.0, 0.0], &[0.5, -1.0, 1.0], &[0.0, 0.3, -0.5]]),
            mat(&[&[0.0], &[1.0], &[0.0]]),
            mat(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]),
            mat(&[&[0.0], &[1.0], &[0.5]]),
            Mat::zeros(3, 0),
        )
        .unwrap();
        let o = synth_sliding(&m, 5.0, 1.0, 1e-3).unwrap();
        let er = &o.t_o * m.e_bar();
        assert!(er[(0, 0)].abs() < 1e-12);
        let cr = m.c() * &o.t_o_inv;
        assert!(cr.column(0).amax() < 1e-12);
        assert!(eig(&o.a11).unwrap().is_hurwitz);
    }
}
