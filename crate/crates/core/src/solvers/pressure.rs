use super::{cg_solve, LinearOutcome, LinearSolveConfig};
use crate::discretization::{Field, OperatorB, SymmetricOperator};
use crate::error::{Error, Result};

/// `τ⁻¹ diag(1 / (1 + χ)) + B`, symmetric positive definite for `χ >= 0`.
pub struct PressureOperator<'a> {
    b: &'a OperatorB,
    mass: Vec<f64>,
}

impl<'a> PressureOperator<'a> {
    pub fn new(b: &'a OperatorB, chi: &Field, tau: f64) -> Self {
        let mass = chi.values().iter().map(|c| 1.0 / (tau * (1.0 + c))).collect();
        Self { b, mass }
    }
}

impl SymmetricOperator for PressureOperator<'_> {
    fn len(&self) -> usize {
        self.b.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.b.apply_into(x, y);
        for ((yi, xi), m) in y.iter_mut().zip(x).zip(&self.mass) {
            *yi += m * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.b.diagonal().into_iter().zip(&self.mass).map(|(d, m)| d + m).collect()
    }
}

/// Solves `τ⁻¹ P / (1 + χ_new) + B P = τ⁻¹ p_prev / (1 + χ_prev) + source`.
///
/// The relative tolerance is tightened by `min(1, τ)`, so the residual of
/// the rate equation stays within `cfg.tol_rel` of the stored density
/// `U_prev`; this keeps the discrete mass balance at solver precision
/// independently of the step size.
pub fn solve_pressure(
    p_prev: &Field,
    chi_new: &Field,
    chi_prev: &Field,
    tau: f64,
    b: &OperatorB,
    cfg: &LinearSolveConfig,
    source: Option<&Field>,
) -> Result<LinearOutcome> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {tau}")));
    }
    p_prev.same_grid(chi_new)?;
    p_prev.same_grid(chi_prev)?;
    let mut rhs = p_prev.zip_map(chi_prev, |p, c| p / (tau * (1.0 + c)))?;
    if let Some(s) = source {
        rhs = rhs.zip_map(s, |r, s| r + s)?;
    }
    let op = PressureOperator::new(b, chi_new, tau);
    cg_solve(&op, &rhs, &cfg.scaled(tau.min(1.0)), Some(p_prev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{boundary_integrate, integrate, Grid};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_cell_closed_form() {
        let g = Grid::new(1, &[1], &[1.0]).unwrap();
        let b = OperatorB::new(g, 1.0);
        let p_prev = Field::constant(g, 2.4);
        let zero = Field::zeros(g);
        let out = solve_pressure(&p_prev, &zero, &zero, 1.0, &b, &LinearSolveConfig::default(), None).unwrap();
        assert_abs_diff_eq!(out.solution.values()[0], 0.8, epsilon = 1e-14);
    }

    #[test]
    fn stationary_limit() {
        let g = Grid::uniform_box(2, &[4, 4], &[1.0, 1.0]).unwrap();
        let b = OperatorB::new(g, 1e-14);
        let p_prev = Field::constant(g, 3.0);
        let chi = Field::constant(g, 0.4);
        let out = solve_pressure(&p_prev, &chi, &chi, 0.1, &b, &LinearSolveConfig::default(), None).unwrap();
        for v in out.solution.values() {
            assert_abs_diff_eq!(*v, 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn mass_balance_with_constant_test_function() {
        let g = Grid::uniform_box(2, &[6, 5], &[1.0, 1.0]).unwrap();
        let b = OperatorB::new(g, 1.0);
        let tau = 0.01;
        let p_prev = Field::from_fn(g, |x| 1.0 + 0.5 * x[0] * x[1]);
        let chi_prev = Field::from_fn(g, |x| 0.3 + 0.2 * x[0]);
        let chi_new = Field::from_fn(g, |x| 0.35 + 0.1 * x[1]);
        let cfg = LinearSolveConfig::default();
        let p = solve_pressure(&p_prev, &chi_new, &chi_prev, tau, &b, &cfg, None).unwrap().solution;
        let u_prev = p_prev.zip_map(&chi_prev, |p, c| p / (1.0 + c)).unwrap();
        let u = p.zip_map(&chi_new, |p, c| p / (1.0 + c)).unwrap();
        let rate = (integrate(&u) - integrate(&u_prev)) / tau;
        let balance = (rate + boundary_integrate(&p)).abs() / integrate(&u_prev);
        assert!(balance <= 10.0 * cfg.tol_rel, "balance {balance:e}");
    }
}
