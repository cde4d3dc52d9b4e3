use serde::{Deserialize, Serialize};

use super::{HomogenizationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    #[default]
    PlaneStrain,
    PlaneStress,
}

/// Isotropic elastic constants of the two phases, MPa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseMaterials {
    pub e_crystal: f64,
    pub nu_crystal: f64,
    pub e_amorph: f64,
    pub nu_amorph: f64,
    pub formulation: Formulation,
}

impl Default for PhaseMaterials {
    fn default() -> Self {
        Self {
            e_crystal: 28_000.0,
            nu_crystal: 0.2,
            e_amorph: 150.0,
            nu_amorph: 0.4,
            formulation: Formulation::PlaneStrain,
        }
    }
}

/// 3×3 Voigt stiffness acting on `(ε11, ε22, γ12)`.
pub type Voigt = [[f64; 3]; 3];

impl PhaseMaterials {
    pub fn validate(&self) -> Result<()> {
        for (name, e, nu) in [
            ("crystal", self.e_crystal, self.nu_crystal),
            ("amorphous", self.e_amorph, self.nu_amorph),
        ] {
            if !(e > 0.0 && e.is_finite()) || !(nu > 0.0 && nu < 0.5) {
                return Err(HomogenizationError::InvalidMaterial(format!(
                    "{name} phase needs E > 0 and 0 < ν < 0.5, got E = {e}, ν = {nu}"
                )));
            }
        }
        Ok(())
    }

    pub fn stiffness(&self, crystal: bool) -> Voigt {
        let (e, nu) = if crystal {
            (self.e_crystal, self.nu_crystal)
        } else {
            (self.e_amorph, self.nu_amorph)
        };
        isotropic_stiffness(e, nu, self.formulation)
    }
}

pub fn lame(e: f64, nu: f64) -> (f64, f64) {
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    (lambda, mu)
}

pub fn isotropic_stiffness(e: f64, nu: f64, formulation: Formulation) -> Voigt {
    match formulation {
        Formulation::PlaneStrain => {
            let (lambda, mu) = lame(e, nu);
            [
                [lambda + 2.0 * mu, lambda, 0.0],
                [lambda, lambda + 2.0 * mu, 0.0],
                [0.0, 0.0, mu],
            ]
        }
        Formulation::PlaneStress => {
            let k = e / (1.0 - nu * nu);
            [[k, k * nu, 0.0], [k * nu, k, 0.0], [0.0, 0.0, k * (1.0 - nu) / 2.0]]
        }
    }
}
