use super::Grid;
use crate::error::{Error, Result};

/// One real value per cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`; rejects a length mismatch and non-finite entries.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::GridMismatch { expected: grid.cell_count(), actual: values.len() });
        }
        let f = Self { grid, values };
        f.check_finite("field")?;
        Ok(f)
    }

    /// Wraps `values` without the finiteness scan. Length is still checked.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.cell_count(), "field length mismatch");
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.cell_count()] }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.cell_count()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Cell-wise combination with another field on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch { expected: self.len(), actual: other.len() });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the smallest entry.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }

    pub fn check_finite(&self, name: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(cell) => Err(Error::NonFinite { field: name, cell }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = Grid::new(1, &[3], &[1.0]).unwrap();
        assert!(matches!(Field::new(g, vec![0.0; 2]), Err(Error::GridMismatch { .. })));
        assert!(matches!(
            Field::new(g, vec![0.0, f64::NAN, 1.0]),
            Err(Error::NonFinite { cell: 1, .. })
        ));
    }

    #[test]
    fn zip_map_checks_grid() {
        let g1 = Grid::new(1, &[3], &[1.0]).unwrap();
        let g2 = Grid::new(1, &[3], &[0.5]).unwrap();
        let a = Field::constant(g1, 1.0);
        let b = Field::constant(g2, 1.0);
        assert!(a.zip_map(&b, |x, y| x + y).is_err());
        let c = a.zip_map(&a, |x, y| x + y).unwrap();
        assert_eq!(c.values(), &[2.0; 3]);
        assert_eq!(c.argmin(), (0, 2.0));
    }
}
