use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use super::{nucleate, NucleationParams, PhaseFieldError, PhaseParams, PhaseState, Result};

/// `m(T̂) = (a_k / π) · arctan(γ (1 − T̂))`, bounded in `(−a_k/2, a_k/2)`.
pub fn chemical_driving_force(t_hat: f64, params: &PhaseParams) -> f64 {
    params.a_k / PI * (params.gamma * (1.0 - t_hat)).atan()
}

/// `T̂ = (T − Tc) / (Tm − Tc)`.
pub fn dimensionless_temp(t: f64, tc: f64, tm: f64) -> Result<f64> {
    if tm == tc {
        return Err(PhaseFieldError::DegenerateRange(tc));
    }
    Ok((t - tc) / (tm - tc))
}

/// `W ∫₀^φ s (½ − s − m)(1 − s) ds` in closed form.
pub fn double_well_energy(phi: f64, m: f64, barrier_height: f64) -> f64 {
    let p2 = phi * phi;
    let p3 = p2 * phi;
    let p4 = p3 * phi;
    barrier_height * ((0.5 - m) * (p2 / 2.0 - p3 / 3.0) - (p3 / 3.0 - p4 / 4.0))
}

/// Discrete total free energy: double-well plus forward-difference gradient
/// energy, summed over cells and scaled by the cell area. The gradient term
/// is the one whose variation is the 5-point Laplacian used by [`step`].
pub fn free_energy(state: &PhaseState, params: &PhaseParams, nucleation: &NucleationParams) -> f64 {
    let tm = nucleation.melting_point(state.tc);
    let (rows, cols) = state.phi.dim();
    let eps2 = params.grad_coeff * params.grad_coeff;
    let inv_dx2 = 1.0 / (params.dx * params.dx);
    let mut total = 0.0;
    for i in 0..rows {
        let ip = (i + 1) % rows;
        for j in 0..cols {
            let jp = (j + 1) % cols;
            let phi = state.phi[[i, j]];
            let t_hat = (state.temp[[i, j]] - state.tc) / (tm - state.tc);
            let m = chemical_driving_force(t_hat, params);
            let gx = state.phi[[i, jp]] - phi;
            let gy = state.phi[[ip, j]] - phi;
            total += double_well_energy(phi, m, params.barrier_height)
                + 0.5 * eps2 * (gx * gx + gy * gy) * inv_dx2;
        }
    }
    total * params.dx * params.dx
}

/// One explicit update of both fields followed by stochastic nucleation.
pub fn step(state: &PhaseState, params: &PhaseParams, nucleation: &NucleationParams) -> Result<PhaseState> {
    let mut next = state.clone();
    step_with(&mut next, params, nucleation)?;
    Ok(next)
}

/// In-place variant of [`step`].
pub fn step_with(state: &mut PhaseState, params: &PhaseParams, nucleation: &NucleationParams) -> Result<()> {
    let tm = nucleation.melting_point(state.tc);
    if tm == state.tc {
        return Err(PhaseFieldError::DegenerateRange(state.tc));
    }
    let (rows, cols) = state.phi.dim();
    let mut phi_next = Array2::<f64>::zeros((rows, cols));
    {
        let phi = state.phi.as_slice().expect("standard layout");
        let temp = state.temp.as_slice().expect("standard layout");
        let out = phi_next.as_slice_mut().expect("standard layout");
        let ctx = Stencil { phi, temp, rows, cols, params, tc: state.tc, tm };
        if params.is_anisotropic() {
            out.par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| ctx.anisotropic_row(i, row));
        } else {
            out.par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| ctx.isotropic_row(i, row));
        }
    }

    let mut temp_next = Array2::<f64>::zeros((rows, cols));
    {
        let phi = state.phi.as_slice().expect("standard layout");
        let phi_new = phi_next.as_slice().expect("standard layout");
        let temp = state.temp.as_slice().expect("standard layout");
        let out = temp_next.as_slice_mut().expect("standard layout");
        let alpha_dt = params.thermal_diffusivity * params.dt / (params.dx * params.dx);
        let latent = params.latent_ratio;
        out.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
            let up = if i == 0 { rows - 1 } else { i - 1 } * cols;
            let down = if i + 1 == rows { 0 } else { i + 1 } * cols;
            let here = i * cols;
            for j in 0..cols {
                let left = if j == 0 { cols - 1 } else { j - 1 };
                let right = if j + 1 == cols { 0 } else { j + 1 };
                let t = temp[here + j];
                let lap = temp[up + j] + temp[down + j] + temp[here + left] + temp[here + right]
                    - 4.0 * t;
                row[j] = t + alpha_dt * lap + latent * (phi_new[here + j] - phi[here + j]);
            }
        });
    }

    if let Some(k) = phi_next
        .iter()
        .zip(temp_next.iter())
        .position(|(p, t)| !p.is_finite() || !t.is_finite())
    {
        return Err(PhaseFieldError::NumericBlowup { step: state.step, row: k / cols, col: k % cols });
    }

    state.phi = phi_next;
    state.temp = temp_next;
    nucleate(state, nucleation, params.dt, params.dx);
    state.phi.mapv_inplace(|p| p.clamp(0.0, 1.0));
    state.step += 1;
    Ok(())
}

struct Stencil<'a> {
    phi: &'a [f64],
    temp: &'a [f64],
    rows: usize,
    cols: usize,
    params: &'a PhaseParams,
    tc: f64,
    tm: f64,
}

impl Stencil<'_> {
    #[inline]
    fn reaction(&self, phi: f64, t: f64) -> f64 {
        let t_hat = (t - self.tc) / (self.tm - self.tc);
        let m = chemical_driving_force(t_hat, self.params);
        self.params.barrier_height * phi * (0.5 - phi - m) * (1.0 - phi)
    }

    // Output is clamped here rather than after nucleation so that the latent
    // heat term only sees the admissible part of the increment.
    fn isotropic_row(&self, i: usize, row: &mut [f64]) {
        let (rows, cols) = (self.rows, self.cols);
        let p = self.params;
        let eps2_dx2 = p.grad_coeff * p.grad_coeff / (p.dx * p.dx);
        let rate = p.dt * p.mobility;
        let up = if i == 0 { rows - 1 } else { i - 1 } * cols;
        let down = if i + 1 == rows { 0 } else { i + 1 } * cols;
        let here = i * cols;
        for j in 0..cols {
            let left = if j == 0 { cols - 1 } else { j - 1 };
            let right = if j + 1 == cols { 0 } else { j + 1 };
            let phi = self.phi[here + j];
            let lap = self.phi[up + j] + self.phi[down + j] + self.phi[here + left]
                + self.phi[here + right]
                - 4.0 * phi;
            let dphi = eps2_dx2 * lap - self.reaction(phi, self.temp[here + j]);
            row[j] = (phi + rate * dphi).clamp(0.0, 1.0);
        }
    }

    /// Kobayashi-type anisotropic operator
    /// `∇·(ε²∇φ) − ∂x(εε' ∂yφ) + ∂y(εε' ∂xφ)` with `ε = ε₀(1 + δ cos jθ)`.
    fn anisotropic_row(&self, i: usize, row: &mut [f64]) {
        let (rows, cols) = (self.rows, self.cols);
        let p = self.params;
        let dx = p.dx;
        let rate = p.dt * p.mobility;
        let wrap_r = |r: isize| r.rem_euclid(rows as isize) as usize;
        let wrap_c = |c: isize| c.rem_euclid(cols as isize) as usize;
        let at = |r: isize, c: isize| self.phi[wrap_r(r) * cols + wrap_c(c)];
        // ε(θ) and ε·ε'(θ) at a cell, θ from central differences.
        let coeffs = |r: isize, c: isize| -> (f64, f64) {
            let gx = (at(r, c + 1) - at(r, c - 1)) / (2.0 * dx);
            let gy = (at(r + 1, c) - at(r - 1, c)) / (2.0 * dx);
            if gx == 0.0 && gy == 0.0 {
                return (p.grad_coeff, 0.0);
            }
            let theta = gy.atan2(gx);
            let j = p.anisotropy_mode as f64;
            let eps = p.grad_coeff * (1.0 + p.anisotropy_strength * (j * theta).cos());
            let deps = -p.grad_coeff * p.anisotropy_strength * j * (j * theta).sin();
            (eps, eps * deps)
        };
        let ii = i as isize;
        for j in 0..cols {
            let jj = j as isize;
            let (e_c, _) = coeffs(ii, jj);
            let (e_e, ed_e) = coeffs(ii, jj + 1);
            let (e_w, ed_w) = coeffs(ii, jj - 1);
            let (e_n, ed_n) = coeffs(ii + 1, jj);
            let (e_s, ed_s) = coeffs(ii - 1, jj);
            let phi = at(ii, jj);
            let face = |a: f64, b: f64| 0.5 * (a * a + b * b);
            let div = (face(e_c, e_e) * (at(ii, jj + 1) - phi)
                - face(e_c, e_w) * (phi - at(ii, jj - 1))
                + face(e_c, e_n) * (at(ii + 1, jj) - phi)
                - face(e_c, e_s) * (phi - at(ii - 1, jj)))
                / (dx * dx);
            let gy_e = (at(ii + 1, jj + 1) - at(ii - 1, jj + 1)) / (2.0 * dx);
            let gy_w = (at(ii + 1, jj - 1) - at(ii - 1, jj - 1)) / (2.0 * dx);
            let gx_n = (at(ii + 1, jj + 1) - at(ii + 1, jj - 1)) / (2.0 * dx);
            let gx_s = (at(ii - 1, jj + 1) - at(ii - 1, jj - 1)) / (2.0 * dx);
            let cross = -(ed_e * gy_e - ed_w * gy_w) / (2.0 * dx) + (ed_n * gx_n - ed_s * gx_s) / (2.0 * dx);
            let dphi = div + cross - self.reaction(phi, self.temp[i * cols + j]);
            row[j] = (phi + rate * dphi).clamp(0.0, 1.0);
        }
    }
}
