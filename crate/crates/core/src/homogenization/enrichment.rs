//! Ramp enrichment for weak (strain) discontinuities.

use super::mesh::{shape_functions, shape_gradients};

/// `R(x) = Σ|ψ_I| N_I(x) − |Σ ψ_I N_I(x)|` on one linear triangle.
pub fn ramp(x: [f64; 2], xy: &[[f64; 2]; 3], psi: &[f64; 3]) -> f64 {
    let n = shape_functions(xy, x);
    let abs_interp: f64 = (0..3).map(|i| psi[i].abs() * n[i]).sum();
    let interp: f64 = (0..3).map(|i| psi[i] * n[i]).sum();
    abs_interp - interp.abs()
}

/// Gradient of the ramp on the side of the interface where `sign(ψ_h) = side`.
/// `R` is linear on each side, so the gradient is constant there.
pub fn ramp_gradient(xy: &[[f64; 2]; 3], psi: &[f64; 3], side: f64) -> [f64; 2] {
    let g = shape_gradients(xy);
    let mut out = [0.0; 2];
    for i in 0..3 {
        let w = psi[i].abs() - side * psi[i];
        out[0] += w * g[i][0];
        out[1] += w * g[i][1];
    }
    out
}
