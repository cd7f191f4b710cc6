use super::hfunc::{admissibility_constants, certify_h, Admissibility, HFunction};
use crate::error::{Error, Result};

const PSI_MAX_ITER: usize = 200;

/// Slope interval of `θ ↦ psi(θ, χ)` for `χ ∈ [0, lambda_beta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiBounds {
    pub c_s: f64,
    pub one_plus_c_e: f64,
}

/// Internal energy `e = θ - χ (h(θ) - θ h'(θ))` with its certified bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiMap {
    h: HFunction,
    admissibility: Admissibility,
    bounds: PsiBounds,
    lambda_beta: f64,
}

impl PsiMap {
    pub fn new(h: HFunction, lambda_beta: f64, samples: usize) -> Result<Self> {
        let admissibility = certify_h(&h, lambda_beta, samples)?;
        Ok(Self::from_parts(h, admissibility, lambda_beta))
    }

    pub(crate) fn uncertified(h: HFunction, lambda_beta: f64, samples: usize) -> Self {
        let admissibility = admissibility_constants(&h, lambda_beta, samples)
            .unwrap_or(Admissibility { c_h: f64::INFINITY, c_h_prime: f64::INFINITY, c_s: f64::NEG_INFINITY });
        Self::from_parts(h, admissibility, lambda_beta)
    }

    fn from_parts(h: HFunction, admissibility: Admissibility, lambda_beta: f64) -> Self {
        let bounds = PsiBounds {
            c_s: admissibility.c_s,
            one_plus_c_e: 1.0 + lambda_beta * admissibility.c_h_prime,
        };
        Self { h, admissibility, bounds, lambda_beta }
    }

    pub fn h(&self) -> &HFunction {
        &self.h
    }

    pub fn admissibility(&self) -> Admissibility {
        self.admissibility
    }

    pub fn bounds(&self) -> PsiBounds {
        self.bounds
    }

    pub fn lambda_beta(&self) -> f64 {
        self.lambda_beta
    }

    pub fn psi(&self, theta: f64, chi: f64) -> f64 {
        let (h, dh, _) = self.h.eval(theta);
        theta - chi * (h - theta * dh)
    }

    /// `∂psi/∂θ = 1 + χ θ h''(θ)`.
    pub fn dpsi_dtheta(&self, theta: f64, chi: f64) -> f64 {
        1.0 + chi * theta * self.h.second_derivative(theta)
    }

    /// `∂psi/∂χ = θ h'(θ) - h(θ)`.
    pub fn dpsi_dchi(&self, theta: f64, chi: f64) -> f64 {
        let _ = chi;
        let (h, dh, _) = self.h.eval(theta);
        theta * dh - h
    }

    /// Solves `psi(θ, χ) = e` for `θ` to `|psi(θ, χ) - e| <= tol`.
    ///
    /// Newton steps are taken inside a bracket that the bi-Lipschitz bounds
    /// guarantee to contain the root; a step leaving the bracket falls back
    /// to bisection.
    pub fn inverse(&self, e: f64, chi: f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("psi tolerance must be > 0, got {tol}")));
        }
        if !(0.0..=self.lambda_beta).contains(&chi) {
            return Err(Error::Domain(format!("chi = {chi} outside [0, {}]", self.lambda_beta)));
        }
        if chi == 0.0 {
            return Ok(e);
        }
        let c_s = self.bounds.c_s;
        if !(c_s > 0.0) {
            return Err(Error::NoConvergence { solver: "psi_inverse", iterations: 0, residual: f64::NAN });
        }
        let half_width = self.admissibility.c_h * self.lambda_beta / c_s + tol;
        let (mut lo, mut hi) = (e - half_width, e + half_width);
        let mut theta = e;
        let mut residual = f64::INFINITY;
        for _ in 0..PSI_MAX_ITER {
            residual = self.psi(theta, chi) - e;
            if residual.abs() <= tol {
                return Ok(theta);
            }
            if residual > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let slope = self.dpsi_dtheta(theta, chi);
            let next = theta - residual / slope;
            theta = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        Err(Error::NoConvergence { solver: "psi_inverse", iterations: PSI_MAX_ITER, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_CERTIFY_SAMPLES;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn default_map() -> PsiMap {
        PsiMap::new(HFunction::default(), 1.0, DEFAULT_CERTIFY_SAMPLES).unwrap()
    }

    #[test]
    fn identity_without_phase() {
        let m = default_map();
        for theta in [-1.0, 0.3, 1.7, 20.0] {
            assert_eq!(m.psi(theta, 0.0), theta);
            assert_eq!(m.inverse(theta, 0.0, 1e-12).unwrap(), theta);
        }
    }

    #[test]
    fn cold_branch_closed_form() {
        let m = default_map();
        let c0 = m.h().h_const();
        let (theta, chi) = (0.2, 0.7);
        assert_abs_diff_eq!(m.psi(theta, chi), theta - chi * c0, epsilon = 1e-15);
        let target = 0.3;
        assert!(target < m.h().theta_star_star());
        let inv = m.inverse(target - chi * c0, chi, 1e-13).unwrap();
        assert_abs_diff_eq!(inv, target, epsilon = 1e-12);
    }

    #[test]
    fn warm_branch_hand_value() {
        let m = PsiMap::uncertified(HFunction::new(1.0, 1.0, 1.0, 0.5).unwrap(), 1.0, 100);
        assert_abs_diff_eq!(m.psi(2.0, 1.0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_chi_outside_domain() {
        let m = default_map();
        assert!(matches!(m.inverse(1.0, -0.1, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(m.inverse(1.0, 1.1, 1e-10), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn round_trip(theta in -2.0f64..6.0, chi in 0.0f64..=1.0) {
            let m = default_map();
            let tol = 1e-12;
            let back = m.inverse(m.psi(theta, chi), chi, tol).unwrap();
            // |psi(back) - psi(theta)| <= tol and psi has slope >= c_s.
            prop_assert!((back - theta).abs() <= tol / m.bounds().c_s + 1e-14);
        }

        #[test]
        fn slope_within_bounds(theta in -2.0f64..6.0, chi in 0.0f64..=1.0) {
            let m = default_map();
            let tol = 1e-7;
            let step = 1e-5;
            let fd = (m.psi(theta + step, chi) - m.psi(theta - step, chi)) / (2.0 * step);
            let b = m.bounds();
            prop_assert!(fd >= b.c_s - 10.0 * tol, "slope {} below {}", fd, b.c_s);
            prop_assert!(fd <= b.one_plus_c_e + 10.0 * tol);
            prop_assert!(m.dpsi_dchi(theta, chi).abs() <= m.admissibility().c_h);
        }
    }
}
