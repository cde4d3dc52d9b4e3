use serde::{Deserialize, Serialize};

use super::{PhaseFieldError, Result};

/// Coefficients of the coupled Allen–Cahn / heat-conduction system, in
/// simulation units (grid spacing `dx`, time step `dt`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseParams {
    /// Phase-field mobility `M_p`.
    pub mobility: f64,
    /// Double-well barrier height `W`.
    pub barrier_height: f64,
    /// Gradient-energy coefficient `ε`.
    pub grad_coeff: f64,
    /// Thermal diffusivity `α`.
    pub thermal_diffusivity: f64,
    /// Latent heat over specific heat, `ΔH / C_p`, in °C.
    pub latent_ratio: f64,
    pub a_k: f64,
    pub gamma: f64,
    /// Strength `δ` of the optional `j`-fold anisotropy `ε(θ) = ε(1 + δ cos jθ)`.
    /// Zero reproduces the isotropic model.
    pub anisotropy_strength: f64,
    pub anisotropy_mode: u32,
    pub dx: f64,
    pub dt: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            mobility: 0.75,
            barrier_height: 8.0,
            grad_coeff: 0.7,
            thermal_diffusivity: 4.0,
            latent_ratio: 30.0,
            a_k: 0.9,
            gamma: 10.0,
            anisotropy_strength: 0.0,
            anisotropy_mode: 4,
            dx: 1.0,
            dt: 0.01,
        }
    }
}

impl PhaseParams {
    /// Largest explicit time step for which the diffusion stencils are
    /// stable, `dx² / (4 · max(α, M_p · ε_max²))`.
    pub fn stability_limit(&self) -> f64 {
        let eps_max = self.grad_coeff * (1.0 + self.anisotropy_strength.abs());
        let diffusivity = self
            .thermal_diffusivity
            .max(self.mobility * eps_max * eps_max);
        if diffusivity <= 0.0 {
            return f64::INFINITY;
        }
        self.dx * self.dx / (4.0 * diffusivity)
    }

    pub fn validate(&self) -> Result<()> {
        positive("mobility", self.mobility)?;
        positive("barrier_height", self.barrier_height)?;
        positive("grad_coeff", self.grad_coeff)?;
        positive("dx", self.dx)?;
        positive("dt", self.dt)?;
        if !(self.thermal_diffusivity >= 0.0) {
            return Err(invalid("thermal_diffusivity", "must be >= 0"));
        }
        if !self.latent_ratio.is_finite() || !self.a_k.is_finite() || !self.gamma.is_finite() {
            return Err(invalid("latent_ratio/a_k/gamma", "must be finite"));
        }
        if !(self.anisotropy_strength.abs() < 1.0) {
            return Err(invalid("anisotropy_strength", "|δ| must be < 1"));
        }
        let limit = self.stability_limit();
        if self.dt > limit {
            return Err(PhaseFieldError::Unstable { dt: self.dt, limit });
        }
        Ok(())
    }

    pub fn is_anisotropic(&self) -> bool {
        self.anisotropy_strength != 0.0
    }
}

/// Temperature-dependent homogeneous nucleation (Pantani form) plus the
/// Hoffman–Weeks melting line and the seeded initial nuclei.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NucleationParams {
    /// Prefactor `N0`, nuclei per unit area per unit time.
    pub n0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Temperature at which molecular motion stops, °C.
    pub t_inf: f64,
    pub hw_slope: f64,
    pub hw_intercept: f64,
    pub initial_nuclei: usize,
    pub rng_seed: u64,
    /// Supported crystallization temperatures, °C.
    pub tc_range: (f64, f64),
}

impl Default for NucleationParams {
    fn default() -> Self {
        Self {
            n0: 0.04,
            c1: 600.0,
            c2: 1.0e4,
            t_inf: 100.0,
            hw_slope: 0.0948,
            hw_intercept: 253.7,
            initial_nuclei: 2,
            rng_seed: 0,
            tc_range: (150.0, 210.0),
        }
    }
}

impl NucleationParams {
    /// No stochastic nucleation; initial nuclei are still placed.
    pub fn disabled() -> Self {
        Self { n0: 0.0, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn melting_point(&self, tc: f64) -> f64 {
        self.hw_slope * tc + self.hw_intercept
    }

    /// Nucleation rate at field temperature `t` for melting point `tm`.
    /// Zero outside the open interval `(T_inf, Tm)`.
    pub fn rate(&self, t: f64, tm: f64) -> f64 {
        if self.n0 <= 0.0 || !(t > self.t_inf && t < tm) || t == 0.0 {
            return 0.0;
        }
        let mobility = (-self.c1 / (t - self.t_inf)).exp();
        let barrier = (-self.c2 * (t + tm) / (t * t * (tm - t))).exp();
        self.n0 * mobility * barrier
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n0", self.n0), ("c1", self.c1), ("c2", self.c2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.hw_slope > 0.0 && self.hw_slope < 1.0) {
            return Err(invalid("hw_slope", "must lie in (0, 1)"));
        }
        let (lo, hi) = self.tc_range;
        if !(lo <= hi) {
            return Err(invalid("tc_range", "lower bound exceeds upper bound"));
        }
        // Tm - Tc is affine in Tc, so checking the endpoints covers the range.
        for tc in [lo, hi] {
            if self.melting_point(tc) <= tc {
                return Err(invalid(
                    "hw_intercept",
                    format!("melting point {} not above Tc = {tc}", self.melting_point(tc)),
                ));
            }
        }
        Ok(())
    }

    pub fn check_tc(&self, tc: f64) -> Result<()> {
        let (lo, hi) = self.tc_range;
        if !(tc >= lo && tc <= hi) {
            return Err(PhaseFieldError::UnsupportedTemperature { tc, lo, hi });
        }
        Ok(())
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite and > 0"))
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> PhaseFieldError {
    PhaseFieldError::InvalidParam { name, reason: reason.into() }
}
