//! Dense linear-algebra helpers shared by the rigidity, disturbance and
//! analysis modules.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::{FormationError, Result};

/// Relative threshold for counting singular values.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Numeric rank: singular values `s > tol * s_max * max(rows, cols)`.
pub fn numeric_rank(mat: &DMatrix<f64>, tol: f64) -> usize {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return 0;
    }
    let sv = mat.singular_values();
    let s_max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if s_max == 0.0 {
        return 0;
    }
    let threshold = tol * s_max * mat.nrows().max(mat.ncols()) as f64;
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Eigenvalues of a general real square matrix via the real Schur form.
pub fn eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if mat.nrows() != mat.ncols() {
        return Err(FormationError::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    if mat.nrows() == 0 {
        return Ok(Vec::new());
    }
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(FormationError::DimensionMismatch(
            "matrix has non-finite entries".into(),
        ));
    }
    let schur = Schur::try_new(mat.clone(), f64::EPSILON, 10_000)
        .ok_or(FormationError::EigenNoConvergence)?;
    let mut ev: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect();
    ev.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

/// Kronecker product `a ⊗ I_m`.
pub fn kron_identity(a: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() * m, a.ncols() * m);
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            let v = a[(r, c)];
            if v != 0.0 {
                for d in 0..m {
                    out[(r * m + d, c * m + d)] = v;
                }
            }
        }
    }
    out
}
