use super::{Field, Grid};
use crate::error::Result;

/// A matrix-free operator symmetric with respect to the cell-volume
/// weighted inner product.
pub trait SymmetricOperator {
    fn len(&self) -> usize;

    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// Diagonal entries, used for Jacobi scaling.
    fn diagonal(&self) -> Vec<f64>;
}

/// Two-point-flux Neumann Laplacian: the discrete form of `∫ ∇v·∇u`.
///
/// `(A v)_i = Σ_faces (v_i - v_j) / h_axis²`, scaled per unit cell volume,
/// with zero flux through boundary faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorA {
    grid: Grid,
}

/// Robin form `∫ ∇v·∇u + γ ∫_Γ v u`: `A` plus the boundary mass
/// `γ (boundary face area / cell volume)` on boundary cells.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorB {
    a: OperatorA,
    gamma: f64,
    boundary_mass: Vec<f64>,
}

impl OperatorA {
    pub fn new(grid: Grid) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, v: &Field) -> Result<Field> {
        self.check(v)?;
        let mut out = vec![0.0; v.len()];
        self.apply_into(v.values(), &mut out);
        Ok(Field::from_raw(self.grid, out))
    }

    /// `Σ_j w_ij x_j` over the face neighbors of `idx`, with
    /// `w_ij = 1 / h_axis²`. Together with [`SymmetricOperator::diagonal`]
    /// this gives `(A x)_i = d_i x_i - Σ_j w_ij x_j`.
    pub fn neighbor_sum(&self, x: &[f64], idx: usize) -> f64 {
        let g = &self.grid;
        let c = g.coords(idx);
        let strides = g.strides();
        let mut acc = 0.0;
        for d in 0..g.dim() {
            let w = 1.0 / (g.spacing()[d] * g.spacing()[d]);
            if c[d] > 0 {
                acc += w * x[idx - strides[d]];
            }
            if c[d] + 1 < g.cells_per_axis()[d] {
                acc += w * x[idx + strides[d]];
            }
        }
        acc
    }

    fn check(&self, v: &Field) -> Result<()> {
        if *v.grid() != self.grid {
            return Err(crate::error::Error::GridMismatch {
                expected: self.grid.cell_count(),
                actual: v.len(),
            });
        }
        Ok(())
    }
}

impl SymmetricOperator for OperatorA {
    fn len(&self) -> usize {
        self.grid.cell_count()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let g = &self.grid;
        let n = g.cells_per_axis();
        let strides = g.strides();
        y.iter_mut().for_each(|v| *v = 0.0);
        for axis in 0..g.dim() {
            let w = 1.0 / (g.spacing()[axis] * g.spacing()[axis]);
            let s = strides[axis];
            for idx in 0..x.len() {
                let c = g.coords(idx)[axis];
                if c + 1 < n[axis] {
                    let flux = w * (x[idx] - x[idx + s]);
                    y[idx] += flux;
                    y[idx + s] -= flux;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.cell_count())
            .map(|idx| {
                let c = g.coords(idx);
                (0..g.dim())
                    .map(|d| {
                        let neighbors = usize::from(c[d] > 0) + usize::from(c[d] + 1 < g.cells_per_axis()[d]);
                        neighbors as f64 / (g.spacing()[d] * g.spacing()[d])
                    })
                    .sum()
            })
            .collect()
    }
}

impl OperatorB {
    pub fn new(grid: Grid, gamma: f64) -> Self {
        let vol = grid.cell_volume();
        let boundary_mass = (0..grid.cell_count()).map(|i| gamma * grid.boundary_area(i) / vol).collect();
        Self { a: OperatorA::new(grid), gamma, boundary_mass }
    }

    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Per-cell Robin mass `γ |∂K ∩ Γ| / |K|`.
    pub fn boundary_mass(&self) -> &[f64] {
        &self.boundary_mass
    }

    pub fn apply(&self, v: &Field) -> Result<Field> {
        self.a.check(v)?;
        let mut out = vec![0.0; v.len()];
        self.apply_into(v.values(), &mut out);
        Ok(Field::from_raw(*self.grid(), out))
    }
}

impl SymmetricOperator for OperatorB {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply_into(x, y);
        for ((yi, xi), m) in y.iter_mut().zip(x).zip(&self.boundary_mass) {
            *yi += m * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.a.diagonal().into_iter().zip(&self.boundary_mass).map(|(d, m)| d + m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_in_kernel() {
        let g = Grid::uniform_box(3, &[3, 4, 2], &[1.0, 1.0, 1.0]).unwrap();
        let a = OperatorA::new(g);
        let out = a.apply(&Field::constant(g, 2.5)).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_cell_stencil() {
        let g = Grid::new(1, &[2], &[1.0]).unwrap();
        let a = OperatorA::new(g);
        let out = a.apply(&Field::new(g, vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(out.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn robin_mass_on_constant() {
        let g = Grid::new(1, &[2], &[1.0]).unwrap();
        let b = OperatorB::new(g, 1.0);
        let c = 3.0;
        let out = b.apply(&Field::constant(g, c)).unwrap();
        assert_eq!(out.values(), &[c, c]);
        let b0 = OperatorB::new(g, 0.0);
        let v = Field::new(g, vec![0.3, -1.2]).unwrap();
        assert_eq!(b0.apply(&v).unwrap(), OperatorA::new(g).apply(&v).unwrap());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = Grid::new(1, &[2], &[1.0]).unwrap();
        let other = Grid::new(1, &[3], &[1.0]).unwrap();
        assert!(OperatorA::new(g).apply(&Field::zeros(other)).is_err());
    }

    #[test]
    fn neighbor_sum_reassembles_operator() {
        let g = Grid::uniform_box(3, &[3, 2, 4], &[1.0, 0.5, 2.0]).unwrap();
        let a = OperatorA::new(g);
        let x: Vec<f64> = (0..g.cell_count()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; x.len()];
        a.apply_into(&x, &mut y);
        let d = a.diagonal();
        for i in 0..x.len() {
            assert!((d[i] * x[i] - a.neighbor_sum(&x, i) - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_matches_unit_vectors() {
        let g = Grid::uniform_box(2, &[3, 2], &[1.0, 0.5]).unwrap();
        let b = OperatorB::new(g, 0.7);
        let diag = b.diagonal();
        for i in 0..g.cell_count() {
            let mut e = vec![0.0; g.cell_count()];
            e[i] = 1.0;
            let mut y = vec![0.0; g.cell_count()];
            b.apply_into(&e, &mut y);
            assert!((y[i] - diag[i]).abs() < 1e-12);
        }
    }
}
