//! Sub-solvers for one step of the scheme: conjugate gradients, the
//! phase inclusion (projected sweeps or Yosida continuation), the pressure
//! Robin solve and the temperature Newton solve.

mod cg;
mod inclusion;
mod pressure;
mod temperature;

pub use cg::{cg_solve, pcg, LinearOutcome};
pub use inclusion::{solve_phase_inclusion, InclusionOutcome, PhaseOperator};
pub use pressure::{solve_pressure, PressureOperator};
pub use temperature::{solve_temperature, temperature_rhs, TemperatureOutcome, TemperatureProblem};

use crate::error::{Error, Result};

/// Stopping rule for conjugate gradients:
/// `‖A x - b‖ <= max(tol_abs, tol_rel ‖b‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveConfig {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        Self { tol_rel: 1e-10, tol_abs: 1e-14, max_iter: 20_000 }
    }
}

impl LinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0 && self.tol_abs > 0.0) {
            return Err(Error::InvalidParameter("linear solver tolerances must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("linear solver max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self { tol_rel: self.tol_rel * factor, tol_abs: self.tol_abs * factor, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InclusionStrategy {
    /// Lexicographic projected Gauss–Seidel / SOR with prox updates.
    ProjectedSweep,
    /// Newton on the Yosida-regularized equation, `λ ↓ lambda_min`.
    YosidaContinuation,
}

impl InclusionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InclusionStrategy::ProjectedSweep => "projected_sweep",
            InclusionStrategy::YosidaContinuation => "yosida",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "projected_sweep" => Some(Self::ProjectedSweep),
            "yosida" => Some(Self::YosidaContinuation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionSolveConfig {
    pub strategy: InclusionStrategy,
    /// Tolerance on the diagonally scaled natural residual.
    pub sweep_tol: f64,
    /// Over-relaxation factor of the projected sweep, in `(0, 2)`.
    pub sweep_relaxation: f64,
    pub yosida_lambda_start: f64,
    pub yosida_lambda_min: f64,
    /// Sweep budget (projected sweep) or Newton budget per level (Yosida).
    pub max_outer: usize,
}

impl Default for InclusionSolveConfig {
    fn default() -> Self {
        Self {
            strategy: InclusionStrategy::ProjectedSweep,
            sweep_tol: 1e-11,
            sweep_relaxation: 1.0,
            yosida_lambda_start: 1e-2,
            yosida_lambda_min: 1e-8,
            max_outer: 100_000,
        }
    }
}

impl InclusionSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sweep_tol > 0.0 && self.yosida_lambda_min > 0.0 && self.yosida_lambda_start > 0.0) {
            return Err(Error::InvalidParameter("inclusion tolerances must be > 0".into()));
        }
        if !(self.yosida_lambda_min < self.yosida_lambda_start) {
            return Err(Error::InvalidParameter(format!(
                "yosida_lambda_min = {} must be < yosida_lambda_start = {}",
                self.yosida_lambda_min, self.yosida_lambda_start
            )));
        }
        if !(self.sweep_relaxation > 0.0 && self.sweep_relaxation < 2.0) {
            return Err(Error::InvalidParameter("sweep_relaxation must lie in (0, 2)".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter("max_outer must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(LinearSolveConfig::default().validate().is_ok());
        assert!(InclusionSolveConfig::default().validate().is_ok());
        let bad = InclusionSolveConfig { yosida_lambda_min: 1.0, yosida_lambda_start: 0.1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = LinearSolveConfig { tol_rel: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [InclusionStrategy::ProjectedSweep, InclusionStrategy::YosidaContinuation] {
            assert_eq!(InclusionStrategy::from_name(s.name()), Some(s));
        }
    }
}
