// Matrix equation solvers and observer pole placement on a small plant.

use std::error::Error;

use num_complex::Complex64;

use faultcert::linalg::{
    eig, mat, place_observer_poles, solve_care, solve_lyapunov, solve_sylvester, Mat,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    // double integrator with a damped mode
    let a = mat(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[-0.5, -1.0, -1.5]]);
    let b = mat(&[&[0.0], &[0.0], &[1.0]]);
    let c = mat(&[&[1.0, 0.0, 0.0]]);

    let poles: Vec<Complex64> = [-2.0, -3.0, -4.0]
        .iter()
        .map(|&r| Complex64::new(r, 0.0))
        .collect();
    let l = place_observer_poles(&a, &c, &poles)?;
    let a_err = &a - &l * &c;
    println!("L = {:?}", l.as_slice());
    println!("eig(A - LC) = {:?}", eig(&a_err)?.eigenvalues);

    let q = Mat::identity(3, 3);
    let p = solve_lyapunov(&a_err, &q)?;
    let res = a_err.transpose() * &p + &p * &a_err + &q;
    println!("Lyapunov residual {:.2e}", res.norm());

    let s = mat(&[&[1.0]]);
    let x = solve_sylvester(&a_err, &s, &b)?;
    println!(
        "Sylvester residual {:.2e}",
        (&a_err * &x - &x * &s - &b).norm()
    );

    let r = Mat::identity(1, 1);
    let pc = solve_care(&a, &b, &q, &r)?;
    let k = b.transpose() * &pc;
    println!("LQR gain {:?}", k.as_slice());
    println!("closed loop {:?}", eig(&(&a - &b * &k))?.eigenvalues);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
