use super::{pcg, LinearSolveConfig};
use crate::discretization::{Field, OperatorA, SymmetricOperator};
use crate::error::{Error, Result};
use crate::model::PsiMap;

const MAX_NEWTON: usize = 50;

/// Right-hand side of the temperature equation,
/// `τ⁻¹ [Θ_prev (1 + h'(Θ_prev) χ_prev) - h(Θ_prev) χ_new] + ((χ_new - χ_prev)/τ)²`,
/// cell-wise.
pub fn temperature_rhs(theta_prev: &Field, chi_new: &Field, chi_prev: &Field, tau: f64, psi: &PsiMap) -> Result<Field> {
    theta_prev.same_grid(chi_new)?;
    theta_prev.same_grid(chi_prev)?;
    let h = psi.h();
    let values = theta_prev
        .values()
        .iter()
        .zip(chi_new.values())
        .zip(chi_prev.values())
        .map(|((&th, &cn), &cp)| {
            let (hv, dh, _) = h.eval(th);
            let rate = (cn - cp) / tau;
            (th * (1.0 + dh * cp) - hv * cn) / tau + rate * rate
        })
        .collect();
    Ok(Field::from_raw(*theta_prev.grid(), values))
}

/// The strongly monotone map `Θ ↦ τ⁻¹ psi(Θ, χ) + A Θ - G`.
pub struct TemperatureProblem<'a> {
    a: &'a OperatorA,
    psi: &'a PsiMap,
    chi: &'a Field,
    inv_tau: f64,
    rhs: Field,
}

impl<'a> TemperatureProblem<'a> {
    pub fn new(a: &'a OperatorA, psi: &'a PsiMap, chi: &'a Field, tau: f64, rhs: Field) -> Result<Self> {
        chi.same_grid(&rhs)?;
        Ok(Self { a, psi, chi, inv_tau: 1.0 / tau, rhs })
    }

    pub fn residual(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; theta.len()];
        self.residual_into(theta, &mut out);
        out
    }

    fn residual_into(&self, theta: &[f64], out: &mut [f64]) {
        self.a.apply_into(theta, out);
        for i in 0..theta.len() {
            out[i] += self.inv_tau * self.psi.psi(theta[i], self.chi.values()[i]) - self.rhs.values()[i];
        }
    }

    /// Jacobian `τ⁻¹ diag(∂psi/∂θ) + A` at `theta`, as an operator.
    pub fn jacobian(&self, theta: &[f64]) -> TemperatureJacobian<'_> {
        let mass = theta
            .iter()
            .zip(self.chi.values())
            .map(|(&t, &c)| self.inv_tau * self.psi.dpsi_dtheta(t, c))
            .collect();
        TemperatureJacobian { a: self.a, mass }
    }

    pub fn jacobian_apply(&self, theta: &[f64], direction: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; theta.len()];
        self.jacobian(theta).apply_into(direction, &mut out);
        out
    }
}

pub struct TemperatureJacobian<'a> {
    a: &'a OperatorA,
    mass: Vec<f64>,
}

impl SymmetricOperator for TemperatureJacobian<'_> {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply_into(x, y);
        for ((yi, xi), m) in y.iter_mut().zip(x).zip(&self.mass) {
            *yi += m * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.a.diagonal().into_iter().zip(&self.mass).map(|(d, m)| d + m).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureOutcome {
    pub theta: Field,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    /// Final `max_i τ |R_i|`.
    pub residual: f64,
}

/// Solves `τ⁻¹ psi(Θ, χ_new) + A Θ = G (+ source)` by damped Newton,
/// starting from `Θ_prev`, until `max_i τ |R_i(Θ)| <= newton_tol`.
#[allow(clippy::too_many_arguments)]
pub fn solve_temperature(
    theta_prev: &Field,
    chi_new: &Field,
    chi_prev: &Field,
    tau: f64,
    a: &OperatorA,
    psi: &PsiMap,
    cfg: &LinearSolveConfig,
    newton_tol: f64,
    source: Option<&Field>,
) -> Result<TemperatureOutcome> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {tau}")));
    }
    let mut rhs = temperature_rhs(theta_prev, chi_new, chi_prev, tau, psi)?;
    if let Some(s) = source {
        rhs = rhs.zip_map(s, |r, s| r + s)?;
    }
    let problem = TemperatureProblem::new(a, psi, chi_new, tau, rhs)?;
    let n = theta_prev.len();
    let weight = theta_prev.grid().cell_volume();
    let mut theta = theta_prev.values().to_vec();
    let mut residual = problem.residual(&theta);
    let scaled = |r: &[f64]| tau * r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut res = scaled(&residual);
    let mut cg_total = 0;
    let mut trial = vec![0.0; n];
    // Newton corrections only need to beat the current residual.
    let inner = LinearSolveConfig { tol_rel: cfg.tol_rel.min(1e-3), tol_abs: 1e-300, max_iter: cfg.max_iter };

    for it in 0..=MAX_NEWTON {
        if !res.is_finite() {
            return Err(Error::NonFinite { field: "temperature residual", cell: 0 });
        }
        if res <= newton_tol {
            return Ok(TemperatureOutcome {
                theta: Field::new(*theta_prev.grid(), theta)?,
                newton_iterations: it,
                cg_iterations: cg_total,
                residual: res,
            });
        }
        if it == MAX_NEWTON {
            break;
        }
        let jac = problem.jacobian(&theta);
        let minus_r: Vec<f64> = residual.iter().map(|r| -r).collect();
        let mut delta = vec![0.0; n];
        let (cg_it, _) = pcg(&jac, &minus_r, &mut delta, &inner, weight)?;
        cg_total += cg_it;

        let base = l2(&residual);
        let mut step = 1.0;
        loop {
            for i in 0..n {
                trial[i] = theta[i] + step * delta[i];
            }
            let r = problem.residual(&trial);
            if l2(&r) <= (1.0 - 1e-4 * step) * base || step < 1e-8 {
                theta.copy_from_slice(&trial);
                residual = r;
                break;
            }
            step *= 0.5;
        }
        res = scaled(&residual);
    }
    Err(Error::NoConvergence { solver: "temperature newton", iterations: MAX_NEWTON, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use crate::model::{HFunction, DEFAULT_CERTIFY_SAMPLES};
    use approx::assert_abs_diff_eq;

    fn psi() -> PsiMap {
        PsiMap::new(HFunction::default(), 1.0, DEFAULT_CERTIFY_SAMPLES).unwrap()
    }

    #[test]
    fn decoupled_identity_step() {
        let g = Grid::new(1, &[1], &[1.0]).unwrap();
        let a = OperatorA::new(g);
        let zero = Field::zeros(g);
        let theta_prev = Field::constant(g, 1.3);
        let out = solve_temperature(&theta_prev, &zero, &zero, 0.2, &a, &psi(), &LinearSolveConfig::default(), 1e-13, None)
            .unwrap();
        assert_abs_diff_eq!(out.theta.values()[0], 1.3, epsilon = 1e-14);
    }

    #[test]
    fn cold_branch_closed_form() {
        let g = Grid::new(1, &[1], &[1.0]).unwrap();
        let a = OperatorA::new(g);
        let m = psi();
        let tau = 0.1;
        let theta_prev = Field::constant(g, 0.1);
        let chi_prev = Field::constant(g, 0.2);
        let chi_new = Field::constant(g, 0.21);
        let out =
            solve_temperature(&theta_prev, &chi_new, &chi_prev, tau, &a, &m, &LinearSolveConfig::default(), 1e-14, None)
                .unwrap();
        let rate: f64 = (0.21 - 0.2) / tau;
        let expected = 0.1 + tau * rate * rate;
        assert!(expected < m.h().theta_star_star());
        assert_abs_diff_eq!(out.theta.values()[0], expected, epsilon = 1e-13);
    }

    #[test]
    fn converges_on_grid() {
        let g = Grid::uniform_box(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let a = OperatorA::new(g);
        let m = psi();
        let theta_prev = Field::from_fn(g, |x| 0.6 + x[0] + 0.3 * x[1]);
        let chi_prev = Field::from_fn(g, |x| 0.5 * x[0]);
        let chi_new = Field::from_fn(g, |x| 0.5 * x[0] + 0.05 * x[1]);
        let out =
            solve_temperature(&theta_prev, &chi_new, &chi_prev, 0.05, &a, &m, &LinearSolveConfig::default(), 1e-12, None)
                .unwrap();
        assert!(out.newton_iterations <= 30);
        assert!(out.residual <= 1e-12);
    }
}
