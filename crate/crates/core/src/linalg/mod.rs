//! Dense linear-algebra and linear-systems primitives.
//!
//! Everything here works on `nalgebra::DMatrix<f64>` and is sized for desk-scale
//! problems (state dimension up to about a dozen). Solvers that vectorize with
//! Kronecker products cost O(n⁶) and are not meant for large systems.

mod care;
mod decomp;
mod eig;
mod lyap;
mod place;

pub use care::{solve_care, solve_riccati};
pub use decomp::{
    detectability_decomposition, invariant_zeros, left_annihilator, orthonormal_complement,
    DetectabilityDecomposition,
};
pub use eig::{eig, spectral_abscissa, SpectrumReport};
pub use lyap::{solve_lyapunov, solve_sylvester};
pub use place::{place_observer_poles, validate_pole_set};

use nalgebra::{DMatrix, DVector};

use crate::error::{LinalgError, LinalgResult};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative residual bound for Lyapunov, Sylvester and Riccati solves.
pub const TOL_LYAP: f64 = 1e-10;
/// Block-shape tolerance for similarity transforms.
pub const TOL_DECOMP: f64 = 1e-9;
/// Per-pole tolerance for eigenvalue assignment.
pub const TOL_POLE: f64 = 1e-6;

/// Builds a matrix from row slices. Panics on ragged rows (test and fixture helper).
pub fn mat(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    assert!(
        rows.iter().all(|row| row.len() == c),
        "ragged matrix literal"
    );
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn col(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

pub fn ensure_finite(m: &Mat, name: &str) -> LinalgResult<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::Input(format!("{name} has non-finite entries")))
    }
}

pub fn ensure_square(m: &Mat, name: &str) -> LinalgResult<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(LinalgError::Dimension(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Largest absolute asymmetry relative to the matrix magnitude.
pub fn asymmetry(m: &Mat) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() / scale
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn vnorm(v: &Vector) -> f64 {
    v.norm()
}

pub fn rank(m: &Mat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_max_sym(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

pub fn lambda_min_sym(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn is_positive_definite(m: &Mat) -> bool {
    !m.is_empty() && lambda_min_sym(m) > 0.0
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn sqrtm_psd(m: &Mat) -> Mat {
    if m.is_empty() {
        return m.clone();
    }
    let se = symmetrize(m).symmetric_eigen();
    let d = se.eigenvalues.map(|v| v.max(0.0).sqrt());
    &se.eigenvectors * Mat::from_diagonal(&d) * se.eigenvectors.transpose()
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// Assembles a block matrix from a grid of equally-shaped rows of blocks.
pub fn block(grid: &[&[&Mat]]) -> Mat {
    let heights: Vec<usize> = grid.iter().map(|row| row[0].nrows()).collect();
    let widths: Vec<usize> = grid[0].iter().map(|b| b.ncols()).collect();
    let mut out = Mat::zeros(heights.iter().sum(), widths.iter().sum());
    let mut i = 0;
    for (bi, row) in grid.iter().enumerate() {
        let mut j = 0;
        for (bj, b) in row.iter().enumerate() {
            assert_eq!(b.nrows(), heights[bi], "block row height mismatch");
            assert_eq!(b.ncols(), widths[bj], "block column width mismatch");
            out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(*b);
            j += widths[bj];
        }
        i += heights[bi];
    }
    out
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let r = blocks.first().map_or(0, |b| b.nrows());
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let mut j = 0;
    for b in blocks {
        out.view_mut((0, j), (r, b.ncols())).copy_from(*b);
        j += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&Mat]) -> Mat {
    let c = blocks.first().map_or(0, |b| b.ncols());
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(r, c);
    let mut i = 0;
    for b in blocks {
        out.view_mut((i, 0), (b.nrows(), c)).copy_from(*b);
        i += b.nrows();
    }
    out
}

/// Moore-Penrose left inverse `(MᵀM)⁻¹Mᵀ` of a full-column-rank matrix.
pub fn left_inverse(m: &Mat) -> LinalgResult<Mat> {
    let gram = m.transpose() * m;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| LinalgError::Singular("matrix is not full column rank".into()))?;
    Ok(inv * m.transpose())
}

pub fn inverse(m: &Mat, name: &str) -> LinalgResult<Mat> {
    ensure_square(m, name)?;
    m.clone()
        .try_inverse()
        .ok_or_else(|| LinalgError::Singular(format!("{name} is singular")))
}
