//! Two-mode Gaussian covariance helpers (vacuum covariance = identity).

use nalgebra::{Matrix2, Matrix4};

/// Tolerance below one for a symplectic eigenvalue still counted as physical.
pub const PHYSICALITY_TOL: f64 = 1e-9;

fn omega4() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Symplectic eigenvalues (ν₋, ν₊) of a 4×4 two-mode covariance.
///
/// Computed as the singular values of V^{1/2} Ω V^{1/2}, which stays
/// accurate near degeneracy (pure states), unlike the Δ / det V formula.
/// Returns NaN for a covariance that is not positive semi-definite.
pub fn symplectic_eigenvalues(v: &Matrix4<f64>) -> (f64, f64) {
    let sym = (v + v.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -PHYSICALITY_TOL * eig.eigenvalues.amax()) {
        return (f64::NAN, f64::NAN);
    }
    let root = eig.eigenvectors
        * Matrix4::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let a = root * omega4() * root;
    let mut nu2: Vec<f64> = (a.transpose() * a).symmetric_eigen().eigenvalues.iter().copied().collect();
    nu2.sort_by(|x, y| x.total_cmp(y));
    // eigenvalues come in pairs; average each pair
    let minus = (0.5 * (nu2[0] + nu2[1])).max(0.0).sqrt();
    let plus = (0.5 * (nu2[2] + nu2[3])).max(0.0).sqrt();
    (minus, plus)
}

/// Symplectic eigenvalues of the standard form with elements (u, v, w):
/// ν∓ = (√((u+v)² − 4w²) ∓ |u − v|) / 2.
pub fn standard_form_symplectic(u: f64, v: f64, w: f64) -> (f64, f64) {
    let s = ((u + v).powi(2) - 4.0 * w * w).max(0.0).sqrt();
    let d = (u - v).abs();
    ((s - d) / 2.0, (s + d) / 2.0)
}

/// Standard-form covariance with cross block diag(−w, w).
pub fn standard_form(u: f64, v: f64, w: f64) -> Matrix4<f64> {
    Matrix4::new(
        u, 0.0, -w, 0.0, //
        0.0, u, 0.0, w, //
        -w, 0.0, v, 0.0, //
        0.0, w, 0.0, v,
    )
}

/// Invariant Δ = det A + det B + 2 det C.
pub fn seralian(v: &Matrix4<f64>) -> f64 {
    let block = |r: usize, c: usize| -> Matrix2<f64> { v.fixed_view::<2, 2>(r, c).into_owned() };
    block(0, 0).determinant() + block(2, 2).determinant() + 2.0 * block(0, 2).determinant()
}
