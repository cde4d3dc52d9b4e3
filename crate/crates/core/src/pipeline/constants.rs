use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::homogenization::lame;

/// Target isotropic constants for the design demo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoRequest {
    pub e_target: f64,
    pub nu_target: f64,
}

impl DemoRequest {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_target > 0.0) || !self.e_target.is_finite() {
            return Err(PipelineError::InvalidRequest(format!("E must be positive, got {}", self.e_target)));
        }
        if !(self.nu_target > 0.0 && self.nu_target < 0.5) {
            return Err(PipelineError::InvalidRequest(format!("nu must lie in (0, 0.5), got {}", self.nu_target)));
        }
        Ok(())
    }
}

/// Isotropic plane-strain `(D1111, D2222, D1212)` for given `E`, `ν`.
pub fn dmat_from_constants(e: f64, nu: f64) -> Result<[f64; 3]> {
    if nu >= 0.5 - 1e-9 {
        return Err(PipelineError::PoissonLimit(nu));
    }
    if !(e > 0.0) || !(nu > -1.0) {
        return Err(PipelineError::InvalidRequest(format!("need E > 0 and nu > -1, got {e}, {nu}")));
    }
    let (lambda, mu) = lame(e, nu);
    Ok([lambda + 2.0 * mu, lambda + 2.0 * mu, mu])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crystal_values() {
        let d = dmat_from_constants(28_000.0, 0.2).unwrap();
        // Plane-strain P-wave modulus E(1−ν)/((1+ν)(1−2ν)).
        assert!((d[0] - 28_000.0 * 0.8 / (1.2 * 0.6)).abs() < 1e-9);
        assert!((d[0] - 31_111.1).abs() < 0.1);
        assert!((d[2] - 11_666.7).abs() < 0.1);
        assert_eq!(d[0], d[1]);
    }

    #[test]
    fn zero_poisson() {
        let d = dmat_from_constants(1000.0, 0.0).unwrap();
        assert_eq!(d, [1000.0, 1000.0, 500.0]);
    }

    #[test]
    fn poisson_limit() {
        assert!(matches!(dmat_from_constants(1000.0, 0.5), Err(PipelineError::PoissonLimit(_))));
        assert!(DemoRequest { e_target: 1.0, nu_target: 0.5 }.validate().is_err());
        assert!(DemoRequest { e_target: -1.0, nu_target: 0.2 }.validate().is_err());
    }
}
