//! Nodal stress fields of the three unit macro-strain cases.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::assembly::{ElementKernel, StiffnessSystem, UNIT_STRAINS};
use super::materials::PhaseMaterials;
use super::mesh::{LevelSetField, Mesh};
use super::solve::Solution;
use super::Result;

/// Area-weighted nodal averages of `σ = C(E + Bũ)`, laid out as
/// `[case][row][col][component]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalStress {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl NodalStress {
    pub fn recover(
        mesh: &Mesh,
        levelset: &LevelSetField,
        materials: &PhaseMaterials,
        system: &StiffnessSystem,
        sol: &Solution,
    ) -> Self {
        let nodes = mesh.rows * mesh.cols;
        let kernel = ElementKernel::new(mesh, levelset, materials, &system.dofs);
        let mut acc = vec![0.0f64; 3 * nodes * 3];
        let mut weight = vec![0.0f64; nodes];
        for t in 0..mesh.triangles.len() {
            let (dofs, _) = kernel.local_dofs(t);
            let n = dofs.len();
            for cell in kernel.integration_cells(t) {
                let c = materials.stiffness(cell.crystal);
                let w = cell.area / 3.0;
                for &node in &mesh.triangles[t] {
                    weight[node] += w;
                }
                for (case, strain) in UNIT_STRAINS.iter().enumerate() {
                    let u = &sol.fluctuations[case];
                    let mut eps = [0.0; 3];
                    for b in &cell.strain_ops {
                        for k in 0..3 {
                            eps[k] += strain[k] + (0..n).map(|j| b[k * n + j] * u[dofs[j]]).sum::<f64>();
                        }
                    }
                    let q = cell.strain_ops.len() as f64;
                    for &node in &mesh.triangles[t] {
                        for i in 0..3 {
                            let s: f64 = (0..3).map(|k| c[i][k] * eps[k] / q).sum();
                            acc[(case * nodes + node) * 3 + i] += w * s;
                        }
                    }
                }
            }
        }
        let data = acc
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let node = (k / 3) % nodes;
                (v / weight[node]) as f32
            })
            .collect();
        Self { rows: mesh.rows, cols: mesh.cols, data }
    }

    pub fn average(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| 0.5 * (a + b)).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Stress component `comp` of case `case` at node `(r, c)`.
    pub fn get(&self, case: usize, r: usize, c: usize, comp: usize) -> f32 {
        self.data[((case * self.rows + r) * self.cols + c) * 3 + comp]
    }

    /// Raw little-endian f32 dump plus a `.json` shape sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        let meta = serde_json::json!({
            "dtype": "f32le",
            "shape": [3, self.rows, self.cols, 3],
            "layout": "case,row,col,component",
        });
        std::fs::write(path.with_extension("json"), meta.to_string())?;
        Ok(())
    }
}
