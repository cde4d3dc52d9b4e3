use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{HomogenizationError, Result};

/// Shift applied to nodal level-set values that are exactly zero.
pub const LEVEL_SET_PERTURBATION: f64 = 1e-12;

/// Subtriangles smaller than this fraction of their parent are dropped.
pub const SLIVER_RATIO: f64 = 1e-14;

/// Which diagonal splits each grid square into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagonal {
    /// Lower-left to upper-right.
    Forward,
    /// Lower-right to upper-left.
    Backward,
}

/// Nodal level set `ψ = 2φ − 1`; crystal where `ψ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    pub psi: Array2<f64>,
    /// Nodes whose `ψ` was exactly zero and got shifted.
    pub perturbed_nodes: usize,
}

impl LevelSetField {
    pub fn from_phi(phi: &Array2<f64>) -> Self {
        let mut perturbed_nodes = 0;
        let psi = phi.mapv(|p| {
            let v = 2.0 * p - 1.0;
            if v == 0.0 {
                perturbed_nodes += 1;
                LEVEL_SET_PERTURBATION
            } else {
                v
            }
        });
        if perturbed_nodes > 0 {
            log::debug!("level set: perturbed {perturbed_nodes} zero-valued nodes");
        }
        Self { psi, perturbed_nodes }
    }

    pub fn value(&self, node: usize) -> f64 {
        let cols = self.psi.ncols();
        self.psi[[node / cols, node % cols]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubTriangle {
    pub vertices: [[f64; 2]; 3],
    /// Phase by the sign of interpolated `ψ` at the centroid.
    pub crystal: bool,
}

impl SubTriangle {
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = &self.vertices;
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }
}

/// A triangle crossed by `ψ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutElement {
    pub triangle: usize,
    pub interface: [[f64; 2]; 2],
    pub subelements: Vec<SubTriangle>,
    /// Number of sliver subtriangles discarded.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Node grid dimensions (one node per raster pixel).
    pub rows: usize,
    pub cols: usize,
    pub dx: f64,
    pub diagonal: Diagonal,
    /// Counter-clockwise node triples, two per grid square, square-major.
    pub triangles: Vec<[usize; 3]>,
    /// Ascending by triangle index.
    pub cut_elements: Vec<CutElement>,
    /// Nodes carrying ramp-enrichment DOFs, ascending.
    pub enriched_nodes: Vec<usize>,
}

impl Mesh {
    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        [(node % self.cols) as f64 * self.dx, (node / self.cols) as f64 * self.dx]
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|n| self.node_coords(n))
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let (r, c) = (node / self.cols, node % self.cols);
        r == 0 || c == 0 || r + 1 == self.rows || c + 1 == self.cols
    }

    pub fn width(&self) -> f64 {
        (self.cols - 1) as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        (self.rows - 1) as f64 * self.dx
    }

    pub fn enriched_dof_count(&self) -> usize {
        2 * self.enriched_nodes.len()
    }

    /// Total crystal area of the discrete model.
    pub fn crystal_area(&self, levelset: &LevelSetField) -> f64 {
        let mut cut = self.cut_elements.iter().peekable();
        let mut area = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            if cut.peek().is_some_and(|c| c.triangle == t) {
                let c = cut.next().unwrap();
                area += c.subelements.iter().filter(|s| s.crystal).map(SubTriangle::area).sum::<f64>();
            } else if levelset.value(tri[0]) > 0.0 {
                area += signed_area(&self.triangle_coords(t));
            }
        }
        area
    }
}

pub fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

/// Triangulate the node grid and split every interface-crossing triangle
/// into three subtriangles along the linear `ψ = 0` segment.
///
/// Enrichment DOFs go on the nodes of cut triangles that lie strictly inside
/// the cell: the ramp vanishes on boundary edges only if boundary nodes are
/// left unenriched, which keeps the fluctuation field periodic.
pub fn build_mesh(phi: &Array2<f64>, dx: f64, diagonal: Diagonal) -> Result<(Mesh, LevelSetField)> {
    let (rows, cols) = phi.dim();
    if rows < 2 || cols < 2 {
        return Err(HomogenizationError::Shape(format!("need at least 2x2 nodes, got {rows}x{cols}")));
    }
    if !(dx > 0.0) {
        return Err(HomogenizationError::Shape(format!("grid spacing must be positive, got {dx}")));
    }
    let levelset = LevelSetField::from_phi(phi);
    let mut triangles = Vec::with_capacity(2 * (rows - 1) * (cols - 1));
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let n00 = r * cols + c;
            let n01 = n00 + 1;
            let n10 = n00 + cols;
            let n11 = n10 + 1;
            match diagonal {
                Diagonal::Forward => {
                    triangles.push([n00, n01, n11]);
                    triangles.push([n00, n11, n10]);
                }
                Diagonal::Backward => {
                    triangles.push([n00, n01, n10]);
                    triangles.push([n01, n11, n10]);
                }
            }
        }
    }
    let mut mesh = Mesh {
        rows,
        cols,
        dx,
        diagonal,
        triangles,
        cut_elements: Vec::new(),
        enriched_nodes: Vec::new(),
    };

    let mut enriched = vec![false; rows * cols];
    for t in 0..mesh.triangles.len() {
        let nodes = mesh.triangles[t];
        let psi = nodes.map(|n| levelset.value(n));
        if let Some(cut) = cut_triangle(t, &mesh.triangle_coords(t), &psi)? {
            for n in nodes {
                if !mesh.is_boundary(n) {
                    enriched[n] = true;
                }
            }
            mesh.cut_elements.push(cut);
        }
    }
    mesh.enriched_nodes = (0..rows * cols).filter(|&n| enriched[n]).collect();
    Ok((mesh, levelset))
}

fn cut_triangle(t: usize, xy: &[[f64; 2]; 3], psi: &[f64; 3]) -> Result<Option<CutElement>> {
    let positive = psi.map(|p| p > 0.0);
    if positive[0] == positive[1] && positive[1] == positive[2] {
        return Ok(None);
    }
    // The isolated vertex is the one whose sign differs from the other two.
    let k = (0..3)
        .find(|&k| positive[k] != positive[(k + 1) % 3] && positive[k] != positive[(k + 2) % 3])
        .expect("mixed signs leave one isolated vertex");
    let (a, b) = ((k + 1) % 3, (k + 2) % 3);
    let cross = |i: usize, j: usize| {
        let s = psi[i] / (psi[i] - psi[j]);
        [xy[i][0] + s * (xy[j][0] - xy[i][0]), xy[i][1] + s * (xy[j][1] - xy[i][1])]
    };
    let p1 = cross(k, a);
    let p2 = cross(k, b);
    let parent = signed_area(xy);
    if !(parent > 0.0) {
        return Err(HomogenizationError::SingularElement { triangle: t, area: parent });
    }
    let candidates = [[xy[k], p1, p2], [p1, xy[a], xy[b]], [p1, xy[b], p2]];
    let mut subelements = Vec::with_capacity(3);
    let mut dropped = 0;
    for vertices in candidates {
        let mut sub = SubTriangle { vertices, crystal: false };
        if sub.area() < SLIVER_RATIO * parent {
            dropped += 1;
            continue;
        }
        let c = sub.centroid();
        sub.crystal = interpolate(xy, psi, c) > 0.0;
        subelements.push(sub);
    }
    if dropped > 0 {
        log::debug!("triangle {t}: dropped {dropped} sliver subelement(s)");
    }
    Ok(Some(CutElement { triangle: t, interface: [p1, p2], subelements, dropped }))
}

/// Barycentric (linear shape function) weights of `x` in triangle `xy`.
pub fn shape_functions(xy: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let area = signed_area(xy);
    let sub = |i: usize| {
        let mut v = *xy;
        v[i] = x;
        signed_area(&v) / area
    };
    [sub(0), sub(1), sub(2)]
}

/// Constant gradients of the linear shape functions.
pub fn shape_gradients(xy: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let two_a = 2.0 * signed_area(xy);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [(xy[j][1] - xy[k][1]) / two_a, (xy[k][0] - xy[j][0]) / two_a];
    }
    g
}

pub fn interpolate(xy: &[[f64; 2]; 3], values: &[f64; 3], x: [f64; 2]) -> f64 {
    let n = shape_functions(xy, x);
    n[0] * values[0] + n[1] * values[1] + n[2] * values[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_has_no_cuts() {
        let (mesh, ls) = build_mesh(&Array2::ones((6, 5)), 1.0, Diagonal::Forward).unwrap();
        assert!(mesh.cut_elements.is_empty());
        assert!(mesh.enriched_nodes.is_empty());
        assert_eq!(mesh.triangles.len(), 2 * 5 * 4);
        assert_eq!(ls.perturbed_nodes, 0);
    }

    #[test]
    fn triangle_count() {
        for diagonal in [Diagonal::Forward, Diagonal::Backward] {
            let (mesh, _) = build_mesh(&Array2::zeros((320, 320)), 1.0, diagonal).unwrap();
            assert_eq!(mesh.triangles.len(), 2 * 319 * 319);
            for t in 0..mesh.triangles.len() {
                assert!(signed_area(&mesh.triangle_coords(t)) > 0.0);
            }
        }
    }

    #[test]
    fn half_crystal_square_cuts_at_midpoints() {
        // Left column crystal, right column amorphous: ψ = ±1 across each cut edge.
        let phi = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let (mesh, _) = build_mesh(&phi, 1.0, Diagonal::Forward).unwrap();
        assert_eq!(mesh.cut_elements.len(), 2);
        for cut in &mesh.cut_elements {
            for p in cut.interface {
                assert!((p[0] - 0.5).abs() < 1e-15, "{p:?}");
                assert!(p[1] == 0.0 || p[1] == 0.5 || p[1] == 1.0);
            }
        }
        // 2x2 nodes are all on the boundary.
        assert!(mesh.enriched_nodes.is_empty());
    }

    #[test]
    fn subelements_partition_parent() {
        let phi = Array2::from_shape_fn((9, 7), |(r, c)| ((r * 31 + c * 17) % 11) as f64 / 10.0);
        for diagonal in [Diagonal::Forward, Diagonal::Backward] {
            let (mesh, _) = build_mesh(&phi, 0.3, diagonal).unwrap();
            assert!(!mesh.cut_elements.is_empty());
            for cut in &mesh.cut_elements {
                let parent = signed_area(&mesh.triangle_coords(cut.triangle));
                let sum: f64 = cut.subelements.iter().map(SubTriangle::area).sum();
                assert!(cut.subelements.iter().all(|s| s.area() > 0.0));
                assert!((sum - parent).abs() <= 1e-12 * parent);
            }
            assert_eq!(mesh.enriched_dof_count(), 2 * mesh.enriched_nodes.len());
            assert!(mesh.enriched_nodes.iter().all(|&n| !mesh.is_boundary(n)));
        }
    }

    #[test]
    fn zero_level_set_is_perturbed() {
        let phi = Array2::from_shape_vec((2, 2), vec![0.5, 0.0, 1.0, 0.0]).unwrap();
        let (_, ls) = build_mesh(&phi, 1.0, Diagonal::Forward).unwrap();
        assert_eq!(ls.perturbed_nodes, 1);
        assert_eq!(ls.psi[[0, 0]], LEVEL_SET_PERTURBATION);
    }

    #[test]
    fn shape_functions_partition_unity() {
        let xy = [[0.0, 0.0], [2.0, 0.1], [0.3, 1.5]];
        let n = shape_functions(&xy, [0.7, 0.4]);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let g = shape_gradients(&xy);
        assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-14);
        for i in 0..3 {
            let at = shape_functions(&xy, xy[i]);
            for j in 0..3 {
                assert!((at[j] - f64::from(u8::from(i == j))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn too_small_grid() {
        assert!(build_mesh(&Array2::zeros((1, 4)), 1.0, Diagonal::Forward).is_err());
    }
}
