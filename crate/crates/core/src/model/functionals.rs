use super::{Graph, HFunction, ModelParams};
use crate::error::{Error, Result};

/// Enthalpy density
/// `a log p + b χ (log p - h(θ)) - c_p θ log θ + (δ/2)|∇χ|² + β̂(χ)`.
///
/// Returns `+∞` when `χ` is outside the graph's domain. Diagnostic only.
pub fn enthalpy_g(
    theta: f64,
    p: f64,
    chi: f64,
    grad_chi_sq: f64,
    params: &ModelParams,
    h: &HFunction,
    graph: &Graph,
) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("enthalpy needs p > 0, got {p}")));
    }
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("enthalpy needs theta > 0, got {theta}")));
    }
    let indicator = graph.potential(chi);
    if indicator.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let log_p = p.ln();
    Ok(params.a * log_p + params.b * chi * (log_p - h.value(theta)) - params.c_p * theta * theta.ln()
        + 0.5 * params.delta * grad_chi_sq
        + indicator)
}

/// Pseudo-potential of dissipation
/// `(μ/2) χ_t² + (ν/2)|∇χ_t|² + (k₀/(2θ))|∇θ|²`.
pub fn dissipation_phi(
    chi_t: f64,
    grad_chi_t_sq: f64,
    grad_theta_sq: f64,
    theta: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("dissipation needs theta > 0, got {theta}")));
    }
    Ok(0.5 * params.mu * chi_t * chi_t
        + 0.5 * params.nu * grad_chi_t_sq
        + 0.5 * params.k0 / theta * grad_theta_sq)
}
