//! Global stiffness of the periodic cell with ramp-enriched cut elements.
//!
//! Unknowns are the periodic displacement fluctuation `ũ` (opposite boundary
//! nodes share DOFs) plus two enrichment amplitudes per enriched node. The
//! macro strain enters as a prescribed, already-eliminated DOF set: the total
//! field is `u = E·x + ũ`, so each unit macro strain contributes only a load
//! vector `−∫BᵀC E`.

use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;

use super::enrichment::{ramp, ramp_gradient};
use super::materials::{PhaseMaterials, Voigt};
use super::mesh::{shape_functions, shape_gradients, signed_area, LevelSetField, Mesh};
use super::{HomogenizationError, Result};

/// Unit macro strains `(ε11, ε22, γ12)`.
pub const UNIT_STRAINS: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

const NO_ENRICHMENT: u32 = u32::MAX;

/// Barycentric quadrature exact for quadratics.
const QUAD: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    cols: usize,
    periodic_rows: usize,
    periodic_cols: usize,
    enrichment: Vec<u32>,
    enriched_count: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, enrich: bool) -> Self {
        let mut enrichment = vec![NO_ENRICHMENT; mesh.rows * mesh.cols];
        let mut enriched_count = 0;
        if enrich {
            for (k, &n) in mesh.enriched_nodes.iter().enumerate() {
                enrichment[n] = k as u32;
            }
            enriched_count = mesh.enriched_nodes.len();
        }
        Self {
            cols: mesh.cols,
            periodic_rows: mesh.rows - 1,
            periodic_cols: mesh.cols - 1,
            enrichment,
            enriched_count,
        }
    }

    pub fn standard_count(&self) -> usize {
        2 * self.periodic_rows * self.periodic_cols
    }

    pub fn total(&self) -> usize {
        self.standard_count() + 2 * self.enriched_count
    }

    /// Periodic DOF of displacement component `comp` at grid node `node`.
    pub fn standard(&self, node: usize, comp: usize) -> usize {
        let (r, c) = (node / self.cols, node % self.cols);
        let p = (r % self.periodic_rows) * self.periodic_cols + c % self.periodic_cols;
        2 * p + comp
    }

    pub fn enriched(&self, node: usize, comp: usize) -> Option<usize> {
        let k = self.enrichment[node];
        (k != NO_ENRICHMENT).then(|| self.standard_count() + 2 * k as usize + comp)
    }
}

/// Integrated contributions of one parent triangle.
#[derive(Debug, Clone)]
pub struct ElementIntegrals {
    pub dofs: Vec<usize>,
    /// Row-major `dofs.len()²` stiffness `∫BᵀCB`.
    pub stiffness: Vec<f64>,
    /// Row-major `3 × dofs.len()` matrix `∫CB`.
    pub stress_operator: Vec<f64>,
    /// `∫C`.
    pub moduli: Voigt,
}

/// Per-integration-cell description used by stress recovery.
#[derive(Debug, Clone)]
pub struct IntegrationCell {
    pub area: f64,
    pub crystal: bool,
    /// `3 × dofs.len()` strain operator at each quadrature point.
    pub strain_ops: Vec<Vec<f64>>,
}

pub struct ElementKernel<'a> {
    pub mesh: &'a Mesh,
    pub levelset: &'a LevelSetField,
    pub materials: &'a PhaseMaterials,
    pub dofs: &'a DofMap,
    cut_index: Vec<u32>,
}

impl<'a> ElementKernel<'a> {
    pub fn new(mesh: &'a Mesh, levelset: &'a LevelSetField, materials: &'a PhaseMaterials, dofs: &'a DofMap) -> Self {
        let mut cut_index = vec![u32::MAX; mesh.triangles.len()];
        for (k, c) in mesh.cut_elements.iter().enumerate() {
            cut_index[c.triangle] = k as u32;
        }
        Self { mesh, levelset, materials, dofs, cut_index }
    }

    fn is_cut(&self, t: usize) -> bool {
        self.cut_index[t] != u32::MAX
    }

    /// Local DOF list: six standard DOFs, then enrichment DOFs of the
    /// enriched vertices (cut triangles only).
    pub fn local_dofs(&self, t: usize) -> (Vec<usize>, Vec<usize>) {
        let nodes = self.mesh.triangles[t];
        let mut dofs = Vec::with_capacity(12);
        for &n in &nodes {
            dofs.push(self.dofs.standard(n, 0));
            dofs.push(self.dofs.standard(n, 1));
        }
        let mut enriched_local = Vec::new();
        if self.is_cut(t) {
            for (i, &n) in nodes.iter().enumerate() {
                if let (Some(a), Some(b)) = (self.dofs.enriched(n, 0), self.dofs.enriched(n, 1)) {
                    dofs.push(a);
                    dofs.push(b);
                    enriched_local.push(i);
                }
            }
        }
        (dofs, enriched_local)
    }

    pub fn integration_cells(&self, t: usize) -> Vec<IntegrationCell> {
        let xy = self.mesh.triangle_coords(t);
        let psi = self.mesh.triangles[t].map(|n| self.levelset.value(n));
        let grads = shape_gradients(&xy);
        let (dofs, enriched_local) = self.local_dofs(t);
        let ndof = dofs.len();
        let standard_op = |op: &mut Vec<f64>| {
            for i in 0..3 {
                let [gx, gy] = grads[i];
                op[2 * i] = gx;
                op[ndof + 2 * i + 1] = gy;
                op[2 * ndof + 2 * i] = gy;
                op[2 * ndof + 2 * i + 1] = gx;
            }
        };
        if !self.is_cut(t) {
            let mut op = vec![0.0; 3 * ndof];
            standard_op(&mut op);
            return vec![IntegrationCell { area: signed_area(&xy), crystal: psi[0] > 0.0, strain_ops: vec![op] }];
        }
        let cut = &self.mesh.cut_elements[self.cut_index[t] as usize];
        cut.subelements
            .iter()
            .map(|sub| {
                let side = if sub.crystal { 1.0 } else { -1.0 };
                let dr = ramp_gradient(&xy, &psi, side);
                let strain_ops = QUAD
                    .iter()
                    .map(|w| {
                        let v = &sub.vertices;
                        let x = [
                            w[0] * v[0][0] + w[1] * v[1][0] + w[2] * v[2][0],
                            w[0] * v[0][1] + w[1] * v[1][1] + w[2] * v[2][1],
                        ];
                        let mut op = vec![0.0; 3 * ndof];
                        standard_op(&mut op);
                        let r = ramp(x, &xy, &psi);
                        let n = shape_functions(&xy, x);
                        for (slot, &i) in enriched_local.iter().enumerate() {
                            let gx = r * grads[i][0] + n[i] * dr[0];
                            let gy = r * grads[i][1] + n[i] * dr[1];
                            let col = 6 + 2 * slot;
                            op[col] = gx;
                            op[ndof + col + 1] = gy;
                            op[2 * ndof + col] = gy;
                            op[2 * ndof + col + 1] = gx;
                        }
                        op
                    })
                    .collect();
                IntegrationCell { area: sub.area(), crystal: sub.crystal, strain_ops }
            })
            .collect()
    }

    pub fn integrate(&self, t: usize) -> ElementIntegrals {
        let (dofs, _) = self.local_dofs(t);
        let n = dofs.len();
        let mut stiffness = vec![0.0; n * n];
        let mut stress_operator = vec![0.0; 3 * n];
        let mut moduli = [[0.0; 3]; 3];
        for cell in self.integration_cells(t) {
            let c = self.materials.stiffness(cell.crystal);
            let w = cell.area / cell.strain_ops.len() as f64;
            for i in 0..3 {
                for j in 0..3 {
                    moduli[i][j] += cell.area * c[i][j];
                }
            }
            for b in &cell.strain_ops {
                // cb = C·B (3 × n)
                let mut cb = vec![0.0; 3 * n];
                for i in 0..3 {
                    for k in 0..3 {
                        let cik = c[i][k];
                        if cik == 0.0 {
                            continue;
                        }
                        for col in 0..n {
                            cb[i * n + col] += cik * b[k * n + col];
                        }
                    }
                }
                for (so, v) in stress_operator.iter_mut().zip(&cb) {
                    *so += w * v;
                }
                for r in 0..n {
                    for col in 0..n {
                        let mut s = 0.0;
                        for k in 0..3 {
                            s += b[k * n + r] * cb[k * n + col];
                        }
                        stiffness[r * n + col] += w * s;
                    }
                }
            }
        }
        ElementIntegrals { dofs, stiffness, stress_operator, moduli }
    }
}

/// Assembled periodic system for the three unit macro strains.
pub struct StiffnessSystem {
    /// Full symmetric stiffness, rigid translations not yet removed.
    pub matrix: SparseColMat<usize, f64>,
    /// Load vectors for the three unit macro strains.
    pub loads: [Vec<f64>; 3],
    pub dofs: DofMap,
    /// `Σ ∫C` over the cell.
    pub moduli: Voigt,
    /// Per-element DOF lists and `∫CB`, for mean-stress recovery.
    pub elements: Vec<(Vec<usize>, Vec<f64>)>,
    pub area: f64,
}

impl StiffnessSystem {
    pub fn n_dofs(&self) -> usize {
        self.dofs.total()
    }
}

/// Assemble the enriched system (`enrich = false` gives plain linear FEM on
/// the same mesh, with cut triangles still integrated per subelement).
pub fn assemble(mesh: &Mesh, materials: &PhaseMaterials, levelset: &LevelSetField) -> Result<StiffnessSystem> {
    assemble_with(mesh, materials, levelset, true)
}

pub fn assemble_with(
    mesh: &Mesh,
    materials: &PhaseMaterials,
    levelset: &LevelSetField,
    enrich: bool,
) -> Result<StiffnessSystem> {
    materials.validate()?;
    let dofs = DofMap::new(mesh, enrich);
    let kernel = ElementKernel::new(mesh, levelset, materials, &dofs);
    let integrals: Vec<ElementIntegrals> =
        (0..mesh.triangles.len()).into_par_iter().map(|t| kernel.integrate(t)).collect();

    let n = dofs.total();
    let mut triplets = Vec::with_capacity(integrals.iter().map(|e| e.dofs.len().pow(2)).sum());
    let mut loads = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut moduli = [[0.0; 3]; 3];
    let mut elements = Vec::with_capacity(integrals.len());
    for e in integrals {
        let m = e.dofs.len();
        for (r, &gr) in e.dofs.iter().enumerate() {
            for (c, &gc) in e.dofs.iter().enumerate() {
                let v = e.stiffness[r * m + c];
                if v != 0.0 {
                    triplets.push(Triplet::new(gr, gc, v));
                }
            }
        }
        for (case, strain) in UNIT_STRAINS.iter().enumerate() {
            for (r, &gr) in e.dofs.iter().enumerate() {
                let f: f64 = (0..3).map(|i| e.stress_operator[i * m + r] * strain[i]).sum();
                loads[case][gr] -= f;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                moduli[i][j] += e.moduli[i][j];
            }
        }
        elements.push((e.dofs, e.stress_operator));
    }
    let matrix = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| HomogenizationError::Assembly(format!("{e:?}")))?;
    Ok(StiffnessSystem { matrix, loads, dofs, moduli, elements, area: mesh.width() * mesh.height() })
}
