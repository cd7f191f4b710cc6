use crate::error::{Error, Result};

/// Dense sample count used when certifying `h` by default.
pub const DEFAULT_CERTIFY_SAMPLES: usize = 10_000;

/// The log-plateau-pressure function `h`, stitched C² from three branches:
///
/// * warm, `ζ >= theta_star`: Van't Hoff form `-c1/ζ + c2`;
/// * blend, `theta_star_star <= ζ < theta_star`: a quartic in `s = ζ - theta_star_star`;
/// * cold, `ζ < theta_star_star`: the constant `h_const`.
///
/// The quartic matches value, slope and curvature of the warm branch at
/// `theta_star` and has zero slope and curvature at `theta_star_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HFunction {
    c1: f64,
    c2: f64,
    theta_star: f64,
    theta_star_star: f64,
    blend: [f64; 5],
    h_const: f64,
}

/// Sup-norm bounds certifying that `psi` stays bi-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// Bound on `sup|h| + sup|h'| + sup|h''| + sup|ζ h'|`.
    pub c_h: f64,
    /// Bound on `sup|ζ h''|`.
    pub c_h_prime: f64,
    /// Coercivity margin `1 - lambda_beta * c_h_prime`.
    pub c_s: f64,
}

impl Default for HFunction {
    fn default() -> Self {
        Self::new(0.25, 1.0, 1.0, 0.5).expect("default h is valid")
    }
}

impl HFunction {
    pub fn new(c1: f64, c2: f64, theta_star: f64, theta_star_star: f64) -> Result<Self> {
        for (name, v) in [("c1", c1), ("c2", c2), ("theta_star", theta_star), ("theta_star_star", theta_star_star)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if theta_star_star >= theta_star {
            return Err(Error::InvalidParameter(format!(
                "thresholds inverted: theta_star_star = {theta_star_star} >= theta_star = {theta_star}"
            )));
        }

        let d = theta_star - theta_star_star;
        let value = c2 - c1 / theta_star;
        let slope = c1 / (theta_star * theta_star);
        let curvature = -2.0 * c1 / (theta_star * theta_star * theta_star);
        // Zero slope and curvature at theta_star_star force the linear and
        // quadratic coefficients to vanish; the cubic/quartic pair solves
        // the two derivative conditions at theta_star.
        let a4 = (curvature - 2.0 * slope / d) / (4.0 * d * d);
        let a3 = (slope - 4.0 * a4 * d * d * d) / (3.0 * d * d);
        let a0 = value - a3 * d.powi(3) - a4 * d.powi(4);

        Ok(Self {
            c1,
            c2,
            theta_star,
            theta_star_star,
            blend: [a0, 0.0, 0.0, a3, a4],
            h_const: a0,
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    pub fn theta_star_star(&self) -> f64 {
        self.theta_star_star
    }

    /// Quartic coefficients in powers of `ζ - theta_star_star`.
    pub fn blend_coeffs(&self) -> [f64; 5] {
        self.blend
    }

    pub fn h_const(&self) -> f64 {
        self.h_const
    }

    /// `(h, h', h'')` at `z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        if z >= self.theta_star {
            let inv = 1.0 / z;
            (
                self.c2 - self.c1 * inv,
                self.c1 * inv * inv,
                -2.0 * self.c1 * inv * inv * inv,
            )
        } else if z >= self.theta_star_star {
            self.eval_blend(z - self.theta_star_star)
        } else {
            (self.h_const, 0.0, 0.0)
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.eval(z).1
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        self.eval(z).2
    }

    /// Blend polynomial and its derivatives at offset `s`, evaluated even
    /// outside the blend interval (used to check the stitching).
    pub fn eval_blend(&self, s: f64) -> (f64, f64, f64) {
        let [a0, a1, a2, a3, a4] = self.blend;
        let v = a0 + s * (a1 + s * (a2 + s * (a3 + s * a4)));
        let d1 = a1 + s * (2.0 * a2 + s * (3.0 * a3 + s * 4.0 * a4));
        let d2 = 2.0 * a2 + s * (6.0 * a3 + s * 12.0 * a4);
        (v, d1, d2)
    }

    /// Warm branch evaluated anywhere positive.
    pub fn eval_warm(&self, z: f64) -> (f64, f64, f64) {
        let inv = 1.0 / z;
        (self.c2 - self.c1 * inv, self.c1 * inv * inv, -2.0 * self.c1 * inv.powi(3))
    }
}

#[derive(Default)]
struct Sups {
    h: f64,
    dh: f64,
    d2h: f64,
    z_dh: f64,
    z_d2h: f64,
}

impl Sups {
    fn absorb(&mut self, h: &HFunction, z: f64) {
        let (v, d1, d2) = h.eval(z);
        self.h = self.h.max(v.abs());
        self.dh = self.dh.max(d1.abs());
        self.d2h = self.d2h.max(d2.abs());
        self.z_dh = self.z_dh.max((z * d1).abs());
        self.z_d2h = self.z_d2h.max((z * d2).abs());
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < f64::EPSILON * (b.abs() + c.abs()).max(1.0) {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    vec![(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
}

/// Computes the admissibility constants of `h` for phase values in
/// `[0, lambda_beta]`.
///
/// Warm and cold branch suprema are analytic. On the blend interval the
/// bounds come from `samples` uniform points plus the analytic critical
/// points of `h`, `h'`, `h''` and `ζ h''`.
pub fn certify_h(h: &HFunction, lambda_beta: f64, samples: usize) -> Result<Admissibility> {
    let adm = admissibility_constants(h, lambda_beta, samples)?;
    if adm.c_s <= 0.0 {
        return Err(Error::Admissibility {
            product: lambda_beta * adm.c_h_prime,
            lambda_beta,
            c_h_prime: adm.c_h_prime,
        });
    }
    Ok(adm)
}

/// Same constants as [`certify_h`] without rejecting `c_s <= 0`.
pub(crate) fn admissibility_constants(
    h: &HFunction,
    lambda_beta: f64,
    samples: usize,
) -> Result<Admissibility> {
    if !(lambda_beta.is_finite() && lambda_beta > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda_beta must be > 0, got {lambda_beta}")));
    }
    let samples = samples.max(2);
    let mut sups = Sups::default();

    // Cold branch: constant.
    sups.h = h.h_const.abs();

    // Warm branch on [theta_star, inf): |h| is monotone towards |c2|, every
    // other quantity peaks at theta_star.
    let ts = h.theta_star;
    sups.h = sups.h.max((h.c2 - h.c1 / ts).abs()).max(h.c2.abs());
    sups.dh = sups.dh.max(h.c1 / (ts * ts));
    sups.d2h = sups.d2h.max(2.0 * h.c1 / ts.powi(3));
    sups.z_dh = sups.z_dh.max(h.c1 / ts);
    sups.z_d2h = sups.z_d2h.max(2.0 * h.c1 / (ts * ts));

    // Blend: dense sample, endpoints included.
    let tss = h.theta_star_star;
    let d = ts - tss;
    for k in 0..=samples {
        let z = tss + d * (k as f64) / (samples as f64);
        sups.absorb(h, z.min(ts - f64::EPSILON * ts));
    }

    let [_, _, _, a3, a4] = h.blend;
    let mut critical = Vec::new();
    // h' = s^2 (3 a3 + 4 a4 s)
    critical.push(0.0);
    if a4 != 0.0 {
        critical.push(-3.0 * a3 / (4.0 * a4));
        critical.push(-a3 / (2.0 * a4));
        critical.push(-a3 / (4.0 * a4));
    }
    // d/ds[(s + tss)(6 a3 s + 12 a4 s^2)]
    critical.extend(quadratic_roots(36.0 * a4, 12.0 * a3 + 24.0 * a4 * tss, 6.0 * a3 * tss));
    for s in critical {
        if s.is_finite() && (0.0..d).contains(&s) {
            sups.absorb(h, tss + s);
        }
    }

    let c_h = sups.h + sups.dh + sups.d2h + sups.z_dh;
    let c_h_prime = sups.z_d2h;
    Ok(Admissibility {
        c_h,
        c_h_prime,
        c_s: 1.0 - lambda_beta * c_h_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn warm_branch_is_vant_hoff() {
        let h = HFunction::new(1.0, 1.0, 1.0, 0.5).unwrap();
        let (v, d1, d2) = h.eval(2.0);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d1, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d2, -0.25, epsilon = 1e-15);
    }

    #[test]
    fn stitching_at_theta_star() {
        let h = HFunction::new(1.0, 1.0, 1.0, 0.5).unwrap();
        let warm = h.eval_warm(1.0);
        let blend = h.eval_blend(0.5);
        assert_abs_diff_eq!(warm.0, blend.0, epsilon = 1e-12);
        assert_abs_diff_eq!(warm.1, blend.1, epsilon = 1e-12);
        assert_abs_diff_eq!(warm.2, blend.2, epsilon = 1e-12);
        let cold = h.eval(0.4999999);
        assert_abs_diff_eq!(cold.0, h.eval_blend(0.0).0, epsilon = 1e-12);
        assert_eq!((cold.1, cold.2), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(HFunction::new(0.0, 1.0, 1.0, 0.5).is_err());
        assert!(HFunction::new(1.0, -1.0, 1.0, 0.5).is_err());
        assert!(HFunction::new(1.0, 1.0, 0.5, 1.0).is_err());
        assert!(HFunction::new(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn warm_branch_curvature_bound() {
        // Blend is very flat when theta_star_star is far below theta_star
        // relative to c1, so the warm branch sets c_h_prime.
        let h = HFunction::new(1.0, 1.0, 4.0, 2.0).unwrap();
        let adm = admissibility_constants(&h, 1.0, 1000).unwrap();
        assert!(adm.c_h_prime >= 2.0 / 16.0 - 1e-15);
    }

    #[test]
    fn default_h_certifies() {
        let adm = certify_h(&HFunction::default(), 1.0, DEFAULT_CERTIFY_SAMPLES).unwrap();
        assert!(adm.c_s > 0.3);
    }

    #[test]
    fn large_lambda_beta_rejected() {
        let h = HFunction::default();
        let adm = admissibility_constants(&h, 1.0, 1000).unwrap();
        let lb = 1.0 / adm.c_h_prime;
        match certify_h(&h, lb * 1.01, 1000) {
            Err(Error::Admissibility { product, .. }) => assert!(product >= 1.0),
            other => panic!("expected admissibility error, got {other:?}"),
        }
    }
}
