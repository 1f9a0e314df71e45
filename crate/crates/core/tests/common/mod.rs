#![allow(dead_code)]

use std::path::PathBuf;

use faultcert::linalg::{eig, Mat, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix shifted so its spectral abscissa lies in [-2, -0.2].
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let m = random_matrix(rng, n, n);
    let shift = eig(&m).unwrap().max_real_part + rng.random_range(0.2..2.0);
    m - Mat::identity(n, n) * shift
}

/// Fixed-step RK4 for `ẋ = Ax + E d(t)` with `x(0) = 0`; returns the states at
/// every grid point including the initial one.
pub fn simulate_linear(
    a: &Mat,
    e: &Mat,
    d: impl Fn(f64) -> Vector,
    dt: f64,
    steps: usize,
) -> Vec<Vector> {
    let n = a.nrows();
    let f = |t: f64, x: &Vector| a * x + e * d(t);
    let mut x = Vector::zeros(n);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = f(t, &x);
        let k2 = f(t + dt / 2.0, &(&x + &k1 * (dt / 2.0)));
        let k3 = f(t + dt / 2.0, &(&x + &k2 * (dt / 2.0)));
        let k4 = f(t + dt, &(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(x.clone());
    }
    out
}

/// Path of a file under the workspace `fixtures/` directory.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}
