use ndarray::Array2;

/// Binarized crystal (1) / amorphous (0) raster with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Microstructure {
    cells: Array2<u8>,
    tc: f64,
    crystal_fraction: f64,
    seed: u64,
}

impl Microstructure {
    /// Threshold `phi` at 0.5 (the `ψ = 0` interface).
    pub fn from_phi(phi: &Array2<f64>, tc: f64, seed: u64) -> Self {
        Self::from_cells(phi.mapv(|p| u8::from(p >= 0.5)), tc, seed)
    }

    /// Wrap an existing raster. Any nonzero cell counts as crystal.
    pub fn from_cells(cells: Array2<u8>, tc: f64, seed: u64) -> Self {
        let cells = cells.mapv(|c| u8::from(c != 0));
        let crystal = cells.iter().map(|&c| c as usize).sum::<usize>();
        let crystal_fraction = crystal as f64 / cells.len().max(1) as f64;
        Self { cells, tc, crystal_fraction, seed }
    }

    pub fn cells(&self) -> &Array2<u8> {
        &self.cells
    }

    pub fn into_cells(self) -> Array2<u8> {
        self.cells
    }

    pub fn tc(&self) -> f64 {
        self.tc
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn crystal_fraction(&self) -> f64 {
        self.crystal_fraction
    }

    pub fn dim(&self) -> (usize, usize) {
        self.cells.dim()
    }

    /// Cells as `phi` values in {0, 1}.
    pub fn to_phi(&self) -> Array2<f64> {
        self.cells.mapv(f64::from)
    }

    /// Cyclic shift by `(dr, dc)`: cell `(r, c)` moves to `(r + dr, c + dc)`.
    pub fn shifted(&self, dr: usize, dc: usize) -> Self {
        let (rows, cols) = self.cells.dim();
        let cells = Array2::from_shape_fn((rows, cols), |(r, c)| {
            self.cells[[(r + rows - dr % rows) % rows, (c + cols - dc % cols) % cols]]
        });
        Self { cells, ..self.clone() }
    }
}

/// Mean crystal-branch thickness: crystal area over the length of the
/// crystal/amorphous interface, both in grid units, on the periodic grid.
/// `None` when there is no interface.
pub fn thickness_metric(cells: &Array2<u8>) -> Option<f64> {
    let (rows, cols) = cells.dim();
    let mut area = 0usize;
    let mut perimeter = 0usize;
    for r in 0..rows {
        for c in 0..cols {
            let here = cells[[r, c]] != 0;
            area += usize::from(here);
            perimeter += usize::from(here != (cells[[r, (c + 1) % cols]] != 0));
            perimeter += usize::from(here != (cells[[(r + 1) % rows, c]] != 0));
        }
    }
    (perimeter > 0).then(|| area as f64 / perimeter as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_is_exact_mean() {
        let phi = Array2::from_shape_fn((4, 5), |(r, c)| if (r + c) % 3 == 0 { 0.7 } else { 0.2 });
        let m = Microstructure::from_phi(&phi, 180.0, 1);
        let mean = m.cells().iter().map(|&c| c as f64).sum::<f64>() / 20.0;
        assert_eq!(m.crystal_fraction(), mean);
    }

    #[test]
    fn threshold_is_half() {
        let phi = Array2::from_shape_vec((1, 3), vec![0.49999, 0.5, 0.9]).unwrap();
        let m = Microstructure::from_phi(&phi, 160.0, 0);
        assert_eq!(m.cells().as_slice().unwrap(), &[0, 1, 1]);
    }

    #[test]
    fn thickness_of_square_block() {
        let mut cells = Array2::<u8>::zeros((10, 10));
        for r in 2..6 {
            for c in 2..6 {
                cells[[r, c]] = 1;
            }
        }
        assert_eq!(thickness_metric(&cells), Some(16.0 / 16.0));
        assert_eq!(thickness_metric(&Array2::zeros((3, 3))), None);
    }

    #[test]
    fn shift_wraps() {
        let mut cells = Array2::<u8>::zeros((3, 4));
        cells[[2, 3]] = 1;
        let m = Microstructure::from_cells(cells, 160.0, 0).shifted(1, 2);
        assert_eq!(m.cells()[[0, 1]], 1);
        assert_eq!(m.crystal_fraction(), 1.0 / 12.0);
    }
}
