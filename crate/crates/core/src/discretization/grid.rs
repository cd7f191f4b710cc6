use crate::error::{Error, Result};

/// Uniform cell-centered grid on the box `[0, L_1] x ... x [0, L_dim]`.
///
/// Unused axes carry one cell of unit spacing so that indexing is always
/// three-dimensional with x fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 3],
    spacing: [f64; 3],
}

impl Grid {
    pub fn new(dim: usize, cells_per_axis: &[usize], spacing: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if cells_per_axis.len() != dim || spacing.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "grid needs {dim} cell counts and spacings, got {} and {}",
                cells_per_axis.len(),
                spacing.len()
            )));
        }
        let mut cells = [1usize; 3];
        let mut h = [1.0f64; 3];
        for d in 0..dim {
            if cells_per_axis[d] == 0 {
                return Err(Error::InvalidParameter("cell count per axis must be >= 1".into()));
            }
            if !(spacing[d].is_finite() && spacing[d] > 0.0) {
                return Err(Error::InvalidParameter(format!("spacing must be > 0, got {}", spacing[d])));
            }
            cells[d] = cells_per_axis[d];
            h[d] = spacing[d];
        }
        Ok(Self { dim, cells, spacing: h })
    }

    /// Grid covering a box with the given side lengths.
    pub fn uniform_box(dim: usize, cells_per_axis: &[usize], lengths: &[f64]) -> Result<Self> {
        if cells_per_axis.len() != dim || lengths.len() != dim {
            return Err(Error::InvalidParameter(format!("grid needs {dim} cell counts and lengths")));
        }
        let spacing: Vec<f64> = lengths
            .iter()
            .zip(cells_per_axis)
            .map(|(l, &n)| l / n.max(1) as f64)
            .collect();
        Self::new(dim, cells_per_axis, &spacing)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.dim).map(|d| self.cells[d] as f64 * self.spacing[d]).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    /// Area of a face normal to `axis` (1 in one dimension).
    pub fn face_area(&self, axis: usize) -> f64 {
        (0..self.dim).filter(|&d| d != axis).map(|d| self.spacing[d]).product()
    }

    pub fn domain_volume(&self) -> f64 {
        self.cell_volume() * self.cell_count() as f64
    }

    /// Measure of the box boundary (2 in one dimension).
    pub fn boundary_measure(&self) -> f64 {
        (0..self.dim)
            .map(|axis| {
                let transverse: usize = (0..self.dim).filter(|&d| d != axis).map(|d| self.cells[d]).product();
                2.0 * self.face_area(axis) * transverse as f64
            })
            .sum()
    }

    pub(crate) fn strides(&self) -> [usize; 3] {
        [1, self.cells[0], self.cells[0] * self.cells[1]]
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.cells[0] * (ijk[1] + self.cells[1] * ijk[2])
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.cells[0];
        let rest = idx / self.cells[0];
        [i, rest % self.cells[1], rest / self.cells[1]]
    }

    /// Cell center; unused axes report 0.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = (c[d] as f64 + 0.5) * self.spacing[d];
        }
        x
    }

    /// Total boundary face area of a cell.
    pub fn boundary_area(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        let mut area = 0.0;
        for d in 0..self.dim {
            let faces = usize::from(c[d] == 0) + usize::from(c[d] + 1 == self.cells[d]);
            area += faces as f64 * self.face_area(d);
        }
        area
    }

    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        let c = self.coords(idx);
        (0..self.dim).any(|d| c[d] == 0 || c[d] + 1 == self.cells[d])
    }

    /// Same grid with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let cells: Vec<usize> = self.cells_per_axis().iter().map(|n| n * factor).collect();
        let spacing: Vec<f64> = self.spacing().iter().map(|h| h / factor as f64).collect();
        Self::new(self.dim, &cells, &spacing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cell_1d_has_two_boundary_faces() {
        let g = Grid::new(1, &[1], &[1.0]).unwrap();
        assert_eq!(g.cell_count(), 1);
        assert_eq!(g.boundary_area(0), 2.0);
        assert_eq!(g.boundary_measure(), 2.0);
    }

    #[test]
    fn index_round_trip_and_measures() {
        let g = Grid::uniform_box(3, &[3, 4, 5], &[1.0, 2.0, 0.5]).unwrap();
        for idx in 0..g.cell_count() {
            assert_eq!(g.index(g.coords(idx)), idx);
        }
        assert!((g.domain_volume() - 1.0).abs() < 1e-14);
        let exact = 2.0 * (1.0 * 2.0 + 1.0 * 0.5 + 2.0 * 0.5);
        assert!((g.boundary_measure() - exact).abs() < 1e-13);
        let sum: f64 = (0..g.cell_count()).map(|i| g.boundary_area(i)).sum();
        assert!((sum - exact).abs() < 1e-13);
    }

    #[test]
    fn rejects_invalid() {
        assert!(Grid::new(0, &[], &[]).is_err());
        assert!(Grid::new(4, &[1; 4], &[1.0; 4]).is_err());
        assert!(Grid::new(1, &[0], &[1.0]).is_err());
        assert!(Grid::new(1, &[2], &[-1.0]).is_err());
        assert!(Grid::new(2, &[2], &[1.0]).is_err());
    }
}
