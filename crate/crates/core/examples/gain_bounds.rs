// Induced-gain bounds of a lightly damped error system, each with an LMI
// witness that is re-checked independently.

use std::error::Error;

use faultcert::gains::{
    check_lmi_feasibility, energy_to_peak_output_bound, frequency_response_gain, hinf_bound,
    peak_to_peak_bound, PeakSearch, Weighting,
};
use faultcert::linalg::mat;

pub fn run() -> Result<(), Box<dyn Error>> {
    let a = mat(&[&[0.0, 1.0], &[-4.0, -0.4]]);
    let e = mat(&[&[0.0], &[1.0]]);
    let c = mat(&[&[1.0, 0.0]]);
    let out = Weighting::Output(c.clone());

    let (g, hinf) = hinf_bound(&a, &e, &c)?;
    let (rho, e2p) = energy_to_peak_output_bound(&a, &e, &c)?;
    let (ptp, p2p) = peak_to_peak_bound(&a, &e, &out, PeakSearch::default())?;
    println!(
        "H-infinity      {g:.6}  (|G(j2)| = {:.6})",
        frequency_response_gain(&a, &e, &c, 2.0)?
    );
    println!("energy-to-peak  {rho:.6}");
    println!(
        "peak-to-peak    {ptp:.6}  at upsilon = {:.4}",
        p2p.upsilon.unwrap_or(f64::NAN)
    );

    for cert in [&hinf, &e2p, &p2p] {
        let check = check_lmi_feasibility(cert, &a, &e, &out)?;
        println!(
            "{:<10} feasible={} min margin {:.3e}",
            cert.kind.as_str(),
            check.feasible,
            check.margin
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
