use super::{LmiCertificate, LmiKind, Weighting};
use crate::error::{GainError, GainResult};
use crate::linalg::{asymmetry, block, lambda_max_sym, lambda_min_sym, Mat};

/// Outcome of re-checking a certificate.
///
/// `margin` is the smallest slack over all strict conditions: the least
/// eigenvalue of each matrix required positive definite, minus the largest
/// eigenvalue of each matrix required negative definite, and the required
/// positive scalars. `feasible` is `margin > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiCheck {
    pub feasible: bool,
    pub margin: f64,
    pub conditions: Vec<(String, f64)>,
}

/// Assembles the block matrices of the certificate kind and tests strict
/// definiteness by eigenvalues.
pub fn check_lmi_feasibility(
    cert: &LmiCertificate,
    a: &Mat,
    e: &Mat,
    weighting: &Weighting,
) -> GainResult<LmiCheck> {
    let n = a.nrows();
    let nd = e.ncols();
    if !a.is_square() || e.nrows() != n || cert.q.nrows() != n || cert.q.ncols() != n {
        return Err(GainError::Input(format!(
            "certificate and system are not conformable (n = {n})"
        )));
    }
    if weighting.ncols() != n {
        return Err(GainError::Input("weighting is not conformable".into()));
    }
    match (cert.kind.uses_state_metric(), weighting) {
        (true, Weighting::StateMetric(_)) | (false, Weighting::Output(_)) => {}
        _ => {
            return Err(GainError::Input(format!(
                "{} needs a {} weighting",
                cert.kind.as_str(),
                if cert.kind.uses_state_metric() {
                    "state-metric"
                } else {
                    "output"
                }
            )))
        }
    }

    let q = &cert.q;
    let rho = cert.rho;
    let r = weighting.root();
    let nr = r.nrows();
    let qe = q * e;
    let lyap = a.transpose() * q + q * a;
    let eye_d = Mat::identity(nd, nd);
    let mut conditions: Vec<(String, f64)> = Vec::new();

    conditions.push(("rho > 0".into(), rho));
    conditions.push(("Q symmetric".into(), 1e-10 - asymmetry(q)));
    conditions.push(("Q > 0".into(), lambda_min_sym(q)));

    match cert.kind {
        LmiKind::EnergyToPeakState | LmiKind::EnergyToPeakOutput => {
            let m1 = block(&[&[&lyap, &qe], &[&qe.transpose(), &(-&eye_d * rho)]]);
            let m2 = block(&[&[q, &r.transpose()], &[&r, &(Mat::identity(nr, nr) * rho)]]);
            conditions.push(("dissipation block < 0".into(), -lambda_max_sym(&m1)));
            conditions.push(("output coupling block > 0".into(), lambda_min_sym(&m2)));
        }
        LmiKind::PeakToPeakState | LmiKind::PeakToPeakOutput => {
            let (Some(upsilon), Some(phi)) = (cert.upsilon, cert.phi) else {
                return Err(GainError::Input(
                    "peak-to-peak certificate lacks υ or φ".into(),
                ));
            };
            conditions.push(("upsilon > 0".into(), upsilon));
            conditions.push(("phi > 0".into(), phi));
            conditions.push(("rho - phi > 0".into(), rho - phi));
            let m1 = block(&[
                &[&(&lyap + q * upsilon), &qe],
                &[&qe.transpose(), &(-&eye_d * phi)],
            ]);
            let z_nr = Mat::zeros(n, nd);
            let z_dr = Mat::zeros(nd, nr);
            let m2 = block(&[
                &[&(q * upsilon), &z_nr, &r.transpose()],
                &[&z_nr.transpose(), &(&eye_d * (rho - phi)), &z_dr],
                &[&r, &z_dr.transpose(), &(Mat::identity(nr, nr) * rho)],
            ]);
            conditions.push(("decay block < 0".into(), -lambda_max_sym(&m1)));
            conditions.push(("output coupling block > 0".into(), lambda_min_sym(&m2)));
        }
        LmiKind::Hinf => {
            let z = Mat::zeros(nd, nr);
            let m = block(&[
                &[&lyap, &qe, &r.transpose()],
                &[&qe.transpose(), &(-&eye_d * rho), &z],
                &[&r, &z.transpose(), &(-Mat::identity(nr, nr) * rho)],
            ]);
            conditions.push(("bounded-real block < 0".into(), -lambda_max_sym(&m)));
        }
    }

    let margin = conditions
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    Ok(LmiCheck {
        feasible: margin > 0.0 && margin.is_finite(),
        margin,
        conditions,
    })
}
