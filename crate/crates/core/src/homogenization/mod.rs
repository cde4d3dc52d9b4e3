//! Periodic XFEM homogenization of two-phase pixel microstructures.
//!
//! Pixels are mesh nodes; each pixel square is split into two linear
//! triangles. The interface is the zero level of `ψ = 2φ − 1`, cut triangles
//! are integrated per subtriangle and carry ramp enrichment, and the periodic
//! fluctuation problem is solved for three unit macro strains.

pub mod assembly;
pub mod elasticity;
pub mod enrichment;
pub mod materials;
pub mod mesh;
pub mod solve;
pub mod stress;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase_field::Microstructure;

pub use assembly::{assemble, assemble_with, DofMap, StiffnessSystem, UNIT_STRAINS};
pub use elasticity::{effective_constants, voigt_reuss, ElasticityMatrix};
pub use materials::{isotropic_stiffness, lame, Formulation, PhaseMaterials, Voigt};
pub use mesh::{build_mesh, Diagonal, LevelSetField, Mesh};
pub use solve::{solve, Solution};
pub use stress::NodalStress;

#[derive(Debug, Error)]
pub enum HomogenizationError {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("degenerate moduli: mean {mean}, shear {shear}")]
    DegenerateModuli { mean: f64, shear: f64 },
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("triangle {triangle} has non-positive area {area}")]
    SingularElement { triangle: usize, area: f64 },
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("solve failed: {0}")]
    SolveFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HomogenizationError> = std::result::Result<T, E>;

/// Which triangulation(s) of the pixel squares to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    Forward,
    Backward,
    /// Average of both orientations; restores the square symmetry of the grid.
    #[default]
    Symmetric,
}

impl DiagonalMode {
    fn diagonals(self) -> &'static [Diagonal] {
        match self {
            DiagonalMode::Forward => &[Diagonal::Forward],
            DiagonalMode::Backward => &[Diagonal::Backward],
            DiagonalMode::Symmetric => &[Diagonal::Forward, Diagonal::Backward],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomogenizationConfig {
    pub diagonal: DiagonalMode,
    /// Physical edge length of the cell along x1 (mm).
    pub cell_size: f64,
    pub residual_tolerance: f64,
    /// Relative slack before a Hill-bound violation is reported.
    pub bounds_tolerance: f64,
    pub enrich: bool,
    pub record_stress: bool,
}

impl Default for HomogenizationConfig {
    fn default() -> Self {
        Self {
            diagonal: DiagonalMode::Symmetric,
            cell_size: 63.0,
            residual_tolerance: 1e-8,
            bounds_tolerance: 1e-3,
            enrich: true,
            record_stress: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsViolation {
    pub component: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Homogenized {
    pub d: ElasticityMatrix,
    /// `max |D_ij − D_ji| / max |D_ij|` before symmetrization.
    pub asymmetry: f64,
    /// Crystal area fraction of the discrete (cut) geometry.
    pub crystal_area_fraction: f64,
    pub residual: f64,
    pub cut_elements: usize,
    pub enriched_nodes: usize,
    pub dropped_enrichment: usize,
    pub warnings: Vec<BoundsViolation>,
    #[serde(skip)]
    pub stress: Option<NodalStress>,
}

pub fn homogenize(micro: &Microstructure, materials: &PhaseMaterials) -> Result<Homogenized> {
    homogenize_with(&micro.to_phi(), materials, &HomogenizationConfig::default())
}

pub fn homogenize_with(phi: &Array2<f64>, materials: &PhaseMaterials, cfg: &HomogenizationConfig) -> Result<Homogenized> {
    materials.validate()?;
    let (rows, cols) = phi.dim();
    if rows < 2 || cols < 2 {
        return Err(HomogenizationError::Shape(format!("need at least 2x2 pixels, got {rows}x{cols}")));
    }
    if !(cfg.cell_size > 0.0) {
        return Err(HomogenizationError::Shape(format!("cell size must be positive, got {}", cfg.cell_size)));
    }
    let dx = cfg.cell_size / (cols - 1) as f64;
    let diagonals = cfg.diagonal.diagonals();
    let weight = 1.0 / diagonals.len() as f64;

    let mut full = [[0.0; 3]; 3];
    let mut out = Homogenized {
        d: ElasticityMatrix::default(),
        asymmetry: 0.0,
        crystal_area_fraction: 0.0,
        residual: 0.0,
        cut_elements: 0,
        enriched_nodes: 0,
        dropped_enrichment: 0,
        warnings: Vec::new(),
        stress: None,
    };
    for &diag in diagonals {
        let (mesh, levelset) = build_mesh(phi, dx, diag)?;
        let system = assemble_with(&mesh, materials, &levelset, cfg.enrich)?;
        let sol = solve(&system, cfg.residual_tolerance)?;
        let d = mean_stress_matrix(&system, &sol);
        for i in 0..3 {
            for j in 0..3 {
                full[i][j] += weight * d[i][j];
            }
        }
        out.crystal_area_fraction += weight * mesh.crystal_area(&levelset) / system.area;
        out.residual = out.residual.max(sol.residual);
        out.cut_elements = out.cut_elements.max(mesh.cut_elements.len());
        out.enriched_nodes = out.enriched_nodes.max(mesh.enriched_nodes.len());
        out.dropped_enrichment += sol.dropped_enrichment;
        if cfg.record_stress {
            let s = NodalStress::recover(&mesh, &levelset, materials, &system, &sol);
            out.stress = Some(match out.stress.take() {
                Some(prev) => prev.average(&s),
                None => s,
            });
        }
    }
    let scale = full.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut asym: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            asym = asym.max((full[i][j] - full[j][i]).abs());
        }
    }
    out.asymmetry = if scale > 0.0 { asym / scale } else { 0.0 };
    out.d = ElasticityMatrix::from_matrix(&full);
    out.warnings = check_bounds(&out.d, materials, out.crystal_area_fraction, cfg.bounds_tolerance);
    for w in &out.warnings {
        log::warn!(
            "{} = {:.3} outside bounds [{:.3}, {:.3}]",
            w.component,
            w.value,
            w.lower,
            w.upper
        );
    }
    Ok(out)
}

/// Columns are the mean stresses `(1/A) Σ ∫C(E_j + B ũ_j)` of the unit cases.
pub fn mean_stress_matrix(system: &StiffnessSystem, sol: &Solution) -> Voigt {
    let mut d = [[0.0; 3]; 3];
    for (j, strain) in UNIT_STRAINS.iter().enumerate() {
        let mut sigma = [0.0; 3];
        for i in 0..3 {
            sigma[i] = (0..3).map(|k| system.moduli[i][k] * strain[k]).sum();
        }
        let u = &sol.fluctuations[j];
        for (dofs, op) in &system.elements {
            let n = dofs.len();
            for i in 0..3 {
                sigma[i] += dofs.iter().enumerate().map(|(c, &g)| op[i * n + c] * u[g]).sum::<f64>();
            }
        }
        for i in 0..3 {
            d[i][j] = sigma[i] / system.area;
        }
    }
    d
}

/// Voigt/Reuss bounds on the diagonal entries at the given crystal fraction.
pub fn check_bounds(d: &ElasticityMatrix, materials: &PhaseMaterials, fraction: f64, tol: f64) -> Vec<BoundsViolation> {
    let c = materials.stiffness(true);
    let a = materials.stiffness(false);
    [("D1111", d.d1111, 0), ("D2222", d.d2222, 1), ("D1212", d.d1212, 2)]
        .into_iter()
        .filter_map(|(name, value, k)| {
            let (upper, lower) = voigt_reuss(c[k][k], a[k][k], fraction);
            let ok = value <= upper * (1.0 + tol) && value >= lower * (1.0 - tol);
            (!ok).then(|| BoundsViolation { component: name.to_string(), value, lower, upper })
        })
        .collect()
}
