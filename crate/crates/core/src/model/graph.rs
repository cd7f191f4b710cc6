use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Resolvent callback `(z, sigma) ↦ prox_sigma(z)`.
pub type ProxFn = Arc<dyn Fn(f64, f64) -> std::result::Result<f64, String> + Send + Sync>;
/// Convex potential `β̂` on its domain, used by energy ledgers.
pub type PotentialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum GraphKind {
    /// Subdifferential of the indicator of `[0, lambda_beta]`.
    IntervalIndicator,
    /// An arbitrary maximal monotone graph with domain inside `[0, lambda_beta]`,
    /// given by its prox map and potential.
    Custom { prox: ProxFn, potential: PotentialFn },
}

impl fmt::Debug for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::IntervalIndicator => f.write_str("IntervalIndicator"),
            GraphKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// The maximal monotone graph `β = ∂β̂` constraining the phase fraction.
#[derive(Debug, Clone)]
pub struct Graph {
    kind: GraphKind,
    lambda_beta: f64,
    chi_star: f64,
}

impl Graph {
    pub fn interval(lambda_beta: f64) -> Result<Self> {
        check_lambda(lambda_beta)?;
        Ok(Self {
            kind: GraphKind::IntervalIndicator,
            lambda_beta,
            chi_star: 0.5 * lambda_beta,
        })
    }

    pub fn custom(lambda_beta: f64, chi_star: f64, prox: ProxFn, potential: PotentialFn) -> Result<Self> {
        check_lambda(lambda_beta)?;
        if !(chi_star > 0.0 && chi_star < lambda_beta) {
            return Err(Error::InvalidParameter(format!(
                "chi_star = {chi_star} must lie in (0, {lambda_beta})"
            )));
        }
        Ok(Self {
            kind: GraphKind::Custom { prox, potential },
            lambda_beta,
            chi_star,
        })
    }

    /// Indicator of `[0, lambda_beta]` plus the quadratic `(kappa/2)(s - center)^2`,
    /// with `center` interior.
    pub fn interval_with_quadratic(lambda_beta: f64, kappa: f64, center: f64) -> Result<Self> {
        if !(kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be >= 0, got {kappa}")));
        }
        let lb = lambda_beta;
        let prox: ProxFn = Arc::new(move |z, sigma| Ok(((z + sigma * kappa * center) / (1.0 + sigma * kappa)).clamp(0.0, lb)));
        let potential: PotentialFn = Arc::new(move |s| 0.5 * kappa * (s - center) * (s - center));
        Self::custom(lb, center, prox, potential)
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn lambda_beta(&self) -> f64 {
        self.lambda_beta
    }

    /// A point with `0 ∈ β(chi_star)`.
    pub fn chi_star(&self) -> f64 {
        self.chi_star
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.kind, GraphKind::IntervalIndicator)
    }

    /// `argmin_s β̂(s) + (s - z)^2 / (2 sigma)`.
    pub fn prox(&self, z: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("prox step must be > 0, got {sigma}")));
        }
        match &self.kind {
            GraphKind::IntervalIndicator => Ok(z.clamp(0.0, self.lambda_beta)),
            GraphKind::Custom { prox, .. } => {
                let s = prox(z, sigma).map_err(Error::Graph)?;
                if !(s >= 0.0 && s <= self.lambda_beta) {
                    return Err(Error::Graph(format!(
                        "prox({z}, {sigma}) = {s} outside [0, {}]",
                        self.lambda_beta
                    )));
                }
                Ok(s)
            }
        }
    }

    /// `β̂(s)`, `+∞` outside the domain.
    pub fn potential(&self, s: f64) -> f64 {
        if !(0.0..=self.lambda_beta).contains(&s) {
            return f64::INFINITY;
        }
        match &self.kind {
            GraphKind::IntervalIndicator => 0.0,
            GraphKind::Custom { potential, .. } => potential(s),
        }
    }

    /// Yosida approximation `β_λ(z) = (z - prox_λ(z)) / λ`.
    pub fn yosida(&self, z: f64, lambda: f64) -> Result<f64> {
        Ok((z - self.prox(z, lambda)?) / lambda)
    }

    /// Derivative of the Yosida approximation, `(1 - prox_λ'(z)) / λ`.
    pub fn yosida_derivative(&self, z: f64, lambda: f64) -> Result<f64> {
        let dprox = match &self.kind {
            GraphKind::IntervalIndicator => {
                if z > 0.0 && z < self.lambda_beta {
                    1.0
                } else {
                    0.0
                }
            }
            GraphKind::Custom { .. } => {
                let eps = 1e-7 * z.abs().max(1.0);
                (self.prox(z + eps, lambda)? - self.prox(z - eps, lambda)?) / (2.0 * eps)
            }
        };
        Ok((1.0 - dprox.clamp(0.0, 1.0)) / lambda)
    }

    /// Distance of `xi` from `β(chi)` measured through the resolvent:
    /// `xi ∈ β(chi)` iff `prox_sigma(chi + sigma xi) = chi`.
    pub fn membership_residual(&self, chi: f64, xi: f64, sigma: f64) -> Result<f64> {
        Ok((self.prox(chi + sigma * xi, sigma)? - chi).abs())
    }
}

fn check_lambda(lambda_beta: f64) -> Result<()> {
    if !(lambda_beta.is_finite() && lambda_beta > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda_beta must be > 0, got {lambda_beta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interval_prox_is_clamp() {
        let g = Graph::interval(1.0).unwrap();
        assert_eq!(g.prox(-0.3, 1.0).unwrap(), 0.0);
        assert_eq!(g.prox(0.4, 1.0).unwrap(), 0.4);
        for sigma in [1e-6, 0.3, 1.0, 1e6] {
            assert_eq!(g.prox(1.7, sigma).unwrap(), 1.0);
        }
        assert_eq!(g.chi_star(), 0.5);
    }

    #[test]
    fn prox_nonexpansive_random_pairs() {
        let graphs = [
            Graph::interval(1.0).unwrap(),
            Graph::interval_with_quadratic(1.0, 3.0, 0.4).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in &graphs {
            for _ in 0..10_000 {
                let x: f64 = rng.random_range(-3.0..3.0);
                let y: f64 = rng.random_range(-3.0..3.0);
                let sigma: f64 = 10f64.powf(rng.random_range(-4.0..4.0));
                let px = g.prox(x, sigma).unwrap();
                let py = g.prox(y, sigma).unwrap();
                assert!((px - py).abs() <= (x - y).abs() + 1e-15);
                assert!((0.0..=1.0).contains(&px));
            }
        }
    }

    #[test]
    fn custom_prox_out_of_domain_is_graph_error() {
        let bad: ProxFn = Arc::new(|z, _| Ok(z));
        let g = Graph::custom(1.0, 0.5, bad, Arc::new(|_| 0.0)).unwrap();
        assert!(matches!(g.prox(2.0, 1.0), Err(Error::Graph(_))));
        let failing: ProxFn = Arc::new(|_, _| Err("boom".into()));
        let g = Graph::custom(1.0, 0.5, failing, Arc::new(|_| 0.0)).unwrap();
        assert!(matches!(g.prox(0.2, 1.0), Err(Error::Graph(_))));
    }

    #[test]
    fn membership_signs_for_interval() {
        let g = Graph::interval(1.0).unwrap();
        assert_eq!(g.membership_residual(0.0, -5.0, 1.0).unwrap(), 0.0);
        assert_eq!(g.membership_residual(1.0, 5.0, 1.0).unwrap(), 0.0);
        assert_eq!(g.membership_residual(0.5, 0.0, 1.0).unwrap(), 0.0);
        assert!(g.membership_residual(0.0, 0.5, 1.0).unwrap() > 0.0);
        assert!(g.membership_residual(0.5, 0.1, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn potential_is_infinite_outside() {
        let g = Graph::interval(1.0).unwrap();
        assert_eq!(g.potential(0.5), 0.0);
        assert!(g.potential(1.5).is_infinite());
    }

    proptest! {
        #[test]
        fn yosida_is_monotone_and_lipschitz(x in -3.0f64..3.0, y in -3.0f64..3.0, l in 1e-6f64..1.0) {
            let g = Graph::interval(1.0).unwrap();
            let (bx, by) = (g.yosida(x, l).unwrap(), g.yosida(y, l).unwrap());
            prop_assert!((bx - by) * (x - y) >= -1e-12);
            prop_assert!((bx - by).abs() <= (x - y).abs() / l + 1e-9);
        }
    }
}
