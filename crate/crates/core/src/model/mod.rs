//! Constitutive layer: the Van't Hoff function `h`, the internal-energy map
//! `psi`, the phase constraint graph and the enthalpy / dissipation
//! evaluators used by the diagnostics.

mod functionals;
mod graph;
mod hfunc;
mod psi;

pub use functionals::{dissipation_phi, enthalpy_g};
pub use graph::{Graph, GraphKind, PotentialFn, ProxFn};
pub use hfunc::{certify_h, Admissibility, HFunction, DEFAULT_CERTIFY_SAMPLES};
pub use psi::{PsiBounds, PsiMap};

use crate::error::{Error, Result};

/// Physical and constitutive constants after normalization.
///
/// Only `nu` and `gamma` enter the discrete scheme; the remaining constants
/// weight the enthalpy and dissipation functionals evaluated by diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub c_p: f64,
    pub lambda_diff: f64,
    pub k0: f64,
    pub delta: f64,
    pub mu: f64,
    /// Phase-gradient dissipation weight.
    pub nu: f64,
    /// Robin exchange coefficient of the pressure.
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c_p: 1.0,
            lambda_diff: 1.0,
            k0: 1.0,
            delta: 1.0,
            mu: 1.0,
            nu: 0.0,
            gamma: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("a", self.a),
            ("b", self.b),
            ("c_p", self.c_p),
            ("lambda", self.lambda_diff),
            ("k0", self.k0),
            ("delta", self.delta),
            ("mu", self.mu),
            ("gamma", self.gamma),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be >= 0, got {}", self.nu)));
        }
        Ok(())
    }
}

/// Everything constitutive the scheme needs: constants, certified `h`
/// (inside the `psi` map) and the phase graph.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub psi: PsiMap,
    pub graph: Graph,
}

impl Model {
    /// Validates the constants and certifies `h` against the graph's domain.
    pub fn new(params: ModelParams, h: HFunction, graph: Graph) -> Result<Self> {
        params.validate()?;
        let psi = PsiMap::new(h, graph.lambda_beta(), DEFAULT_CERTIFY_SAMPLES)?;
        Ok(Self { params, psi, graph })
    }

    /// Builds a model without certification. Only meant for negative
    /// controls that need a non-admissible `h` to reach the solvers.
    pub fn new_uncertified(params: ModelParams, h: HFunction, graph: Graph) -> Self {
        let psi = PsiMap::uncertified(h, graph.lambda_beta(), DEFAULT_CERTIFY_SAMPLES);
        Self { params, psi, graph }
    }

    pub fn h(&self) -> &HFunction {
        self.psi.h()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_normalized() {
        let p = ModelParams::default();
        assert!(p.validate().is_ok());
        assert_eq!(p.a, 1.0);
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.nu, 0.0);
    }

    #[test]
    fn rejects_nonpositive_constants() {
        let p = ModelParams { mu: 0.0, ..Default::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter(_))));
        let p = ModelParams { nu: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
