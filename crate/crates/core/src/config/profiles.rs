use std::f64::consts::PI;
use std::fmt;

use crate::discretization::{Field, Grid};
use crate::error::{Error, Result};

/// Analytic initial profile evaluated at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant { value: f64 },
    /// `base + amp exp(-|x - center|² / (2 width²))`.
    Gaussian { base: f64, amp: f64, width: f64, center: Vec<f64> },
    /// `low` for `x[axis] < position`, else `high`.
    Step { low: f64, high: f64, position: f64, axis: usize },
    /// `base + amp Π_d cos(modes_d π x_d / L_d)`; zero normal derivative
    /// on the box boundary.
    Trig { base: f64, amp: f64, modes: Vec<usize> },
}

impl Profile {
    fn broadcast<T: Copy>(v: &[T], d: usize) -> T {
        if v.len() == 1 {
            v[0]
        } else {
            v[d]
        }
    }

    pub fn eval(&self, x: [f64; 3], grid: &Grid) -> f64 {
        let lengths = grid.lengths();
        match self {
            Profile::Constant { value } => *value,
            Profile::Gaussian { base, amp, width, center } => {
                let r2: f64 = (0..grid.dim()).map(|d| (x[d] - Self::broadcast(center, d)).powi(2)).sum();
                base + amp * (-r2 / (2.0 * width * width)).exp()
            }
            Profile::Step { low, high, position, axis } => {
                if x[*axis] < *position {
                    *low
                } else {
                    *high
                }
            }
            Profile::Trig { base, amp, modes } => {
                let prod: f64 = (0..grid.dim())
                    .map(|d| (Self::broadcast(modes, d) as f64 * PI * x[d] / lengths[d]).cos())
                    .product();
                base + amp * prod
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Field {
        Field::from_fn(*grid, |x| self.eval(x, grid))
    }

    /// Largest `|∂ₙ profile|` over boundary face centers, by central
    /// differences straddling the boundary.
    pub fn max_boundary_normal_derivative(&self, grid: &Grid) -> f64 {
        let lengths = grid.lengths();
        let mut worst = 0.0f64;
        for idx in 0..grid.cell_count() {
            let c = grid.coords(idx);
            let center = grid.center(idx);
            for d in 0..grid.dim() {
                let n = grid.cells_per_axis()[d];
                let mut faces = Vec::new();
                if c[d] == 0 {
                    faces.push(0.0);
                }
                if c[d] + 1 == n {
                    faces.push(lengths[d]);
                }
                for xf in faces {
                    let eps = 1e-5 * lengths[d];
                    let mut xp = center;
                    let mut xm = center;
                    xp[d] = xf + eps;
                    xm[d] = xf - eps;
                    let der = (self.eval(xp, grid) - self.eval(xm, grid)) / (2.0 * eps);
                    worst = worst.max(der.abs());
                }
            }
        }
        worst
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut parts = text.split_whitespace();
        let kind = parts.next().ok_or("empty profile")?;
        let mut kv = Vec::new();
        for tok in parts {
            let (k, v) = tok.split_once('=').ok_or_else(|| format!("expected name=value, got `{tok}`"))?;
            kv.push((k, v));
        }
        let lookup = |name: &str| kv.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
        let real = |name: &str| -> std::result::Result<f64, String> {
            let v = lookup(name).ok_or_else(|| format!("{kind} profile needs `{name}`"))?;
            let x: f64 = v.parse().map_err(|_| format!("`{name}` must be a real, got `{v}`"))?;
            if !x.is_finite() {
                return Err(format!("`{name}` must be finite"));
            }
            Ok(x)
        };
        let allowed: &[&str] = match kind {
            "constant" => &["value"],
            "gaussian" => &["base", "amp", "width", "center"],
            "step" => &["low", "high", "position", "axis"],
            "trig" => &["base", "amp", "modes"],
            other => return Err(format!("unknown profile `{other}`")),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(format!("unknown parameter `{k}` for {kind} profile"));
        }
        let profile = match kind {
            "constant" => Profile::Constant { value: real("value")? },
            "gaussian" => {
                let width = real("width")?;
                if !(width > 0.0) {
                    return Err("`width` must be > 0".into());
                }
                let center = lookup("center")
                    .ok_or("gaussian profile needs `center`")?
                    .split(',')
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| "malformed `center`".to_string())?;
                Profile::Gaussian { base: real("base")?, amp: real("amp")?, width, center }
            }
            "step" => {
                let axis = lookup("axis").unwrap_or("0").parse::<usize>().map_err(|_| "malformed `axis`".to_string())?;
                Profile::Step { low: real("low")?, high: real("high")?, position: real("position")?, axis }
            }
            _ => {
                let modes = lookup("modes")
                    .ok_or("trig profile needs `modes`")?
                    .split(',')
                    .map(|s| s.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| "malformed `modes`".to_string())?;
                Profile::Trig { base: real("base")?, amp: real("amp")?, modes }
            }
        };
        Ok(profile)
    }

    fn check_dims(&self, grid: &Grid) -> std::result::Result<(), String> {
        let ok = |n: usize| n == 1 || n == grid.dim();
        match self {
            Profile::Gaussian { center, .. } if !ok(center.len()) => Err("center needs 1 or dim entries".into()),
            Profile::Trig { modes, .. } if !ok(modes.len()) => Err("modes needs 1 or dim entries".into()),
            Profile::Step { axis, .. } if *axis >= grid.dim() => Err("step axis out of range".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join_f = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Profile::Constant { value } => write!(f, "constant value={value}"),
            Profile::Gaussian { base, amp, width, center } => {
                write!(f, "gaussian base={base} amp={amp} width={width} center={}", join_f(center))
            }
            Profile::Step { low, high, position, axis } => {
                write!(f, "step low={low} high={high} position={position} axis={axis}")
            }
            Profile::Trig { base, amp, modes } => {
                let m = modes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                write!(f, "trig base={base} amp={amp} modes={m}")
            }
        }
    }
}

/// Initial profiles for `θ₀`, `χ₀`, `p₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub theta: Profile,
    pub chi: Profile,
    pub p: Profile,
    /// Largest accepted `|∂ₙχ₀|` on the boundary.
    pub neumann_tol: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            theta: Profile::Trig { base: 1.0, amp: 0.2, modes: vec![1] },
            chi: Profile::Trig { base: 0.5, amp: 0.2, modes: vec![1] },
            p: Profile::Trig { base: 2.0, amp: 0.5, modes: vec![2] },
            neumann_tol: 1e-6,
        }
    }
}

impl InitialData {
    /// Checks shape parameters, the phase range and the zero normal
    /// derivative of `χ₀`.
    pub fn validate(&self, grid: &Grid, lambda_beta: f64) -> Result<()> {
        for (name, prof) in [("theta", &self.theta), ("chi", &self.chi), ("p", &self.p)] {
            prof.check_dims(grid)
                .map_err(|m| Error::Parse { line: 0, key: name.into(), message: m })?;
        }
        let chi = self.chi.sample(grid);
        if chi.min() < 0.0 || chi.max() > lambda_beta {
            return Err(Error::Domain(format!(
                "chi0 ranges over [{}, {}], outside [0, {lambda_beta}]",
                chi.min(),
                chi.max()
            )));
        }
        if self.p.sample(grid).min() < 0.0 {
            return Err(Error::Domain("p0 must be >= 0".into()));
        }
        let dn = self.chi.max_boundary_normal_derivative(grid);
        if dn > self.neumann_tol {
            return Err(Error::Domain(format!(
                "chi0 has boundary normal derivative {dn:e} > {:e}; only zero-flux compatible data is accepted",
                self.neumann_tol
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, grid: &Grid) -> Result<(Field, Field, Field)> {
        let t = self.theta.sample(grid);
        let c = self.chi.sample(grid);
        let p = self.p.sample(grid);
        t.check_finite("theta0")?;
        c.check_finite("chi0")?;
        p.check_finite("p0")?;
        Ok((t, c, p))
    }
}
