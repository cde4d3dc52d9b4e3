use serde::{Deserialize, Serialize};

use super::materials::Voigt;
use super::{HomogenizationError, Result};

/// Symmetric homogenized stiffness in Voigt notation, MPa.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ElasticityMatrix {
    pub d1111: f64,
    pub d1122: f64,
    pub d1112: f64,
    pub d2222: f64,
    pub d2212: f64,
    pub d1212: f64,
}

impl ElasticityMatrix {
    /// Symmetric part of a full 3×3 matrix.
    pub fn from_matrix(m: &Voigt) -> Self {
        Self {
            d1111: m[0][0],
            d1122: 0.5 * (m[0][1] + m[1][0]),
            d1112: 0.5 * (m[0][2] + m[2][0]),
            d2222: m[1][1],
            d2212: 0.5 * (m[1][2] + m[2][1]),
            d1212: m[2][2],
        }
    }

    pub fn to_matrix(&self) -> Voigt {
        [
            [self.d1111, self.d1122, self.d1112],
            [self.d1122, self.d2222, self.d2212],
            [self.d1112, self.d2212, self.d1212],
        ]
    }

    /// The three components used as the generative condition.
    pub fn condition(&self) -> [f64; 3] {
        [self.d1111, self.d2222, self.d1212]
    }

    pub fn mean(&self, other: &Self) -> Self {
        let a = self.to_matrix();
        let b = other.to_matrix();
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = 0.5 * (a[i][j] + b[i][j]);
            }
        }
        Self::from_matrix(&m)
    }

    /// Positive definiteness via leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        let m = self.to_matrix();
        let m1 = m[0][0];
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let m3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        m1 > 0.0 && m2 > 0.0 && m3 > 0.0
    }
}

/// Young's modulus and Poisson's ratio of the isotropic material matching
/// the in-plane mean `M = (D1111 + D2222)/2` and the shear entry `D1212`.
pub fn effective_constants(d: &ElasticityMatrix) -> Result<(f64, f64)> {
    let m = 0.5 * (d.d1111 + d.d2222);
    let g = d.d1212;
    if !(g > 0.0 && m > g) {
        return Err(HomogenizationError::DegenerateModuli { mean: m, shear: g });
    }
    let e = g * (3.0 * m - 4.0 * g) / (m - g);
    let nu = (m - 2.0 * g) / (2.0 * (m - g));
    Ok((e, nu))
}

/// Arithmetic (Voigt) and harmonic (Reuss) mixtures of one stiffness entry.
pub fn voigt_reuss(crystal: f64, amorph: f64, crystal_fraction: f64) -> (f64, f64) {
    let f = crystal_fraction;
    let voigt = f * crystal + (1.0 - f) * amorph;
    let reuss = 1.0 / (f / crystal + (1.0 - f) / amorph);
    (voigt, reuss)
}
