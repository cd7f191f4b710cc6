//! Manufactured-solution verification.
//!
//! The manufactured fields are separable,
//! `v(x, t) = base + amp · S(x) · (1 + ε sin ωt)` with
//! `S(x) = Π_d cos(k_d π x_d / L_d)`, so every normal derivative vanishes
//! on the box boundary. For an interior `χ̂` the inclusion term is zero and
//! the forcings follow from the continuous equations
//!
//! * heat:     `θ_t (1 + χθh'') + χ_t θ h' - Δθ - χ_t²`,
//! * phase:    `χ_t - ν Δχ_t - Δχ - h(θ) + log p`,
//! * pressure: `(p/(1+χ))_t - Δp`, with boundary data `g = ∂ₙp + γp`.
//!
//! Three forcing modes are provided. [`ForcingMode::Continuous`] measures
//! the full discretization error; [`ForcingMode::SemiDiscrete`] uses the
//! discrete spatial operators on the sampled fields, which removes the
//! spatial error and isolates the time error; [`ForcingMode::Discrete`]
//! residualizes the complete step, so the scheme reproduces the sampled
//! fields up to solver tolerance.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use crate::discretization::{l2_norm, Field, Grid};
use crate::error::{Error, Result};
use crate::solvers::temperature_rhs;
use crate::timestepper::{Forcing, RunConfig, Scheme, State};

/// One separable manufactured scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedField {
    pub base: f64,
    pub amp: f64,
    /// Cosine mode per axis (one entry is broadcast).
    pub modes: Vec<usize>,
    /// Relative amplitude `ε` of the time modulation.
    pub eps: f64,
    pub omega: f64,
}

impl ManufacturedField {
    fn mode(&self, d: usize) -> f64 {
        (if self.modes.len() == 1 { self.modes[0] } else { self.modes[d] }) as f64
    }

    fn shape(&self, x: [f64; 3], grid: &Grid) -> f64 {
        let l = grid.lengths();
        (0..grid.dim()).map(|d| (self.mode(d) * PI * x[d] / l[d]).cos()).product()
    }

    fn wavenumber_sq(&self, grid: &Grid) -> f64 {
        let l = grid.lengths();
        (0..grid.dim()).map(|d| (self.mode(d) * PI / l[d]).powi(2)).sum()
    }

    fn modulation(&self, t: f64) -> f64 {
        1.0 + self.eps * (self.omega * t).sin()
    }

    fn modulation_dt(&self, t: f64) -> f64 {
        self.eps * self.omega * (self.omega * t).cos()
    }

    pub fn value(&self, x: [f64; 3], t: f64, grid: &Grid) -> f64 {
        self.base + self.amp * self.shape(x, grid) * self.modulation(t)
    }

    pub fn dt(&self, x: [f64; 3], t: f64, grid: &Grid) -> f64 {
        self.amp * self.shape(x, grid) * self.modulation_dt(t)
    }

    pub fn laplacian(&self, x: [f64; 3], t: f64, grid: &Grid) -> f64 {
        -self.wavenumber_sq(grid) * self.amp * self.shape(x, grid) * self.modulation(t)
    }

    pub fn laplacian_dt(&self, x: [f64; 3], t: f64, grid: &Grid) -> f64 {
        -self.wavenumber_sq(grid) * self.amp * self.shape(x, grid) * self.modulation_dt(t)
    }

    /// Bounds of the field over the space-time cylinder.
    pub fn range(&self) -> (f64, f64) {
        let spread = self.amp.abs() * (1.0 + self.eps.abs());
        (self.base - spread, self.base + spread)
    }

    /// The same field frozen at its `t = 0` profile.
    pub fn stationary(&self) -> Self {
        Self { eps: 0.0, ..self.clone() }
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Field {
        Field::from_fn(*grid, |x| self.value(x, t, grid))
    }
}

/// A named manufactured triple `(θ̂, χ̂, p̂)` on the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub name: String,
    pub dim: usize,
    pub theta: ManufacturedField,
    pub chi: ManufacturedField,
    pub p: ManufacturedField,
}

/// Names accepted by [`case`].
pub const CASES: [&str; 2] = ["trig1d", "trig2d"];

/// Built-in manufactured cases.
pub fn case(name: &str) -> Result<ManufacturedCase> {
    let dim = match name {
        "trig1d" => 1,
        "trig2d" => 2,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown manufactured case `{other}` (available: {})",
                CASES.join(", ")
            )))
        }
    };
    let modes = if dim == 1 { vec![1] } else { vec![1, 1] };
    Ok(ManufacturedCase {
        name: name.to_string(),
        dim,
        theta: ManufacturedField { base: 1.0, amp: 0.2, modes: modes.clone(), eps: 0.5, omega: 2.0 },
        chi: ManufacturedField { base: 0.5, amp: 0.2, modes: vec![1, 2][..dim].to_vec(), eps: 0.5, omega: 1.5 },
        p: ManufacturedField { base: 2.0, amp: 0.5, modes, eps: 0.4, omega: 1.0 },
    })
}

impl ManufacturedCase {
    /// `cfg` on a grid of the case dimension. A grid of another dimension is
    /// replaced by the unit box with `cells_per_axis()[0]` cells per axis;
    /// the time discretization is kept.
    pub fn adapt_config(&self, cfg: &RunConfig) -> Result<RunConfig> {
        let mut out = cfg.clone();
        if cfg.grid.dim() != self.dim {
            let n = cfg.grid.cells_per_axis()[0];
            out.grid = Grid::uniform_box(self.dim, &vec![n; self.dim], &vec![1.0; self.dim])?;
        }
        Ok(out)
    }

    /// The case with every field frozen in time.
    pub fn stationary(&self) -> Self {
        Self {
            name: format!("{}-stationary", self.name),
            dim: self.dim,
            theta: self.theta.stationary(),
            chi: self.chi.stationary(),
            p: self.p.stationary(),
        }
    }

    /// Requires `χ̂` strictly inside `(0, λ_β)`, `θ̂ > 0` and `p̂ >= τ` (so
    /// the initial pressure floor is inactive).
    pub fn check_domain(&self, lambda_beta: f64, tau: f64) -> Result<()> {
        let (lo, hi) = self.chi.range();
        if !(lo > 0.0 && hi < lambda_beta) {
            return Err(Error::MmsDomain(format!(
                "manufactured chi ranges over [{lo}, {hi}], touching the constraint [0, {lambda_beta}]"
            )));
        }
        if !(self.theta.range().0 > 0.0) {
            return Err(Error::MmsDomain("manufactured theta must stay positive".into()));
        }
        if !(self.p.range().0 >= tau) {
            return Err(Error::MmsDomain("manufactured p must stay above the time step".into()));
        }
        Ok(())
    }
}

/// How the forcings are built; see the module documentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingMode {
    Continuous,
    SemiDiscrete,
    Discrete,
}

/// `L²(Q)` errors of one manufactured run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsErrors {
    pub cells: usize,
    pub n_steps: usize,
    pub theta: f64,
    pub chi: f64,
    pub p: f64,
}

impl MmsErrors {
    fn as_array(&self) -> [f64; 3] {
        [self.theta, self.chi, self.p]
    }
}

struct Forcer<'a> {
    case: &'a ManufacturedCase,
    scheme: &'a Scheme,
    mode: ForcingMode,
}

impl Forcer<'_> {
    fn grid(&self) -> Grid {
        self.scheme.config().grid
    }

    fn forcing(&self, step: usize) -> Result<Forcing> {
        match self.mode {
            ForcingMode::Discrete => self.discrete(step),
            _ => self.continuous_in_time(step),
        }
    }

    fn continuous_in_time(&self, step: usize) -> Result<Forcing> {
        let grid = self.grid();
        let model = self.scheme.model();
        let (nu, gamma) = (model.params.nu, model.params.gamma);
        let h = model.h();
        let t = step as f64 * self.scheme.tau();
        let (th, ch, ph) = (&self.case.theta, &self.case.chi, &self.case.p);
        let semi = self.mode == ForcingMode::SemiDiscrete;

        // Spatial operator terms: analytic or discrete.
        let (minus_lap_theta, minus_lap_chi, minus_lap_chi_t, pressure_op) = if semi {
            let a = self.scheme.operator_a();
            let chi_t = Field::from_fn(grid, |x| ch.dt(x, t, &grid));
            (
                a.apply(&th.sample(&grid, t))?,
                a.apply(&ch.sample(&grid, t))?,
                a.apply(&chi_t)?,
                self.scheme.operator_b().apply(&ph.sample(&grid, t))?,
            )
        } else {
            let lengths = grid.lengths();
            let boundary_data = |idx: usize| -> f64 {
                // g = ∂ₙp + γp on each boundary face; ∂ₙp vanishes for the
                // cosine modes, so only the Robin term remains.
                let c = grid.coords(idx);
                let center = grid.center(idx);
                let mut total = 0.0;
                for d in 0..grid.dim() {
                    let n = grid.cells_per_axis()[d];
                    for (on, xf) in [(c[d] == 0, 0.0), (c[d] + 1 == n, lengths[d])] {
                        if on {
                            let mut xb = center;
                            xb[d] = xf;
                            total += gamma * ph.value(xb, t, &grid) * grid.face_area(d);
                        }
                    }
                }
                total / grid.cell_volume()
            };
            let p_op: Vec<f64> = (0..grid.cell_count())
                .map(|i| -ph.laplacian(grid.center(i), t, &grid) + boundary_data(i))
                .collect();
            (
                Field::from_fn(grid, |x| -th.laplacian(x, t, &grid)),
                Field::from_fn(grid, |x| -ch.laplacian(x, t, &grid)),
                Field::from_fn(grid, |x| -ch.laplacian_dt(x, t, &grid)),
                Field::new(grid, p_op)?,
            )
        };

        let n = grid.cell_count();
        let mut heat = vec![0.0; n];
        let mut phase = vec![0.0; n];
        let mut pressure = vec![0.0; n];
        for i in 0..n {
            let x = grid.center(i);
            let (theta, theta_t) = (th.value(x, t, &grid), th.dt(x, t, &grid));
            let (chi, chi_t) = (ch.value(x, t, &grid), ch.dt(x, t, &grid));
            let (p, p_t) = (ph.value(x, t, &grid), ph.dt(x, t, &grid));
            let (hv, dh, d2h) = h.eval(theta);
            heat[i] = theta_t * (1.0 + chi * theta * d2h) + chi_t * theta * dh - chi_t * chi_t
                + minus_lap_theta.values()[i];
            phase[i] = chi_t + nu * minus_lap_chi_t.values()[i] + minus_lap_chi.values()[i] - hv + p.ln();
            let u_t = p_t / (1.0 + chi) - p * chi_t / (1.0 + chi).powi(2);
            pressure[i] = u_t + pressure_op.values()[i];
        }
        Ok(Forcing {
            heat: Some(Field::new(grid, heat)?),
            phase: Some(Field::new(grid, phase)?),
            pressure: Some(Field::new(grid, pressure)?),
        })
    }

    fn discrete(&self, step: usize) -> Result<Forcing> {
        let grid = self.grid();
        let tau = self.scheme.tau();
        let model = self.scheme.model();
        let nu = model.params.nu;
        let psi = &model.psi;
        let h = model.h();
        let a = self.scheme.operator_a();
        let (t0, t1) = ((step - 1) as f64 * tau, step as f64 * tau);
        let (th0, th1) = (self.case.theta.sample(&grid, t0), self.case.theta.sample(&grid, t1));
        let (ch0, ch1) = (self.case.chi.sample(&grid, t0), self.case.chi.sample(&grid, t1));
        let (p0, p1) = (self.case.p.sample(&grid, t0), self.case.p.sample(&grid, t1));

        let dchi = ch1.zip_map(&ch0, |a, b| a - b)?;
        let a_dchi = a.apply(&dchi)?;
        let a_chi = a.apply(&ch1)?;
        let phase: Vec<f64> = (0..grid.cell_count())
            .map(|i| {
                dchi.values()[i] / tau + nu / tau * a_dchi.values()[i] + a_chi.values()[i]
                    - h.value(th0.values()[i])
                    + p0.values()[i].ln()
            })
            .collect();

        let b_p = self.scheme.operator_b().apply(&p1)?;
        let pressure: Vec<f64> = (0..grid.cell_count())
            .map(|i| {
                let u1 = p1.values()[i] / (1.0 + ch1.values()[i]);
                let u0 = p0.values()[i] / (1.0 + ch0.values()[i]);
                (u1 - u0) / tau + b_p.values()[i]
            })
            .collect();

        let g = temperature_rhs(&th0, &ch1, &ch0, tau, psi)?;
        let a_theta = a.apply(&th1)?;
        let heat: Vec<f64> = (0..grid.cell_count())
            .map(|i| psi.psi(th1.values()[i], ch1.values()[i]) / tau + a_theta.values()[i] - g.values()[i])
            .collect();
        Ok(Forcing {
            heat: Some(Field::new(grid, heat)?),
            phase: Some(Field::new(grid, phase)?),
            pressure: Some(Field::new(grid, pressure)?),
        })
    }
}

/// Runs the forced scheme on `cfg`'s grid and time step against `case`
/// and returns the `L²(Q)` errors `(Σ_i τ ‖x^i - x̂(t_i)‖²)^{1/2}`.
pub fn mms_errors(case: &ManufacturedCase, cfg: &RunConfig, mode: ForcingMode) -> Result<MmsErrors> {
    if cfg.grid.dim() != case.dim {
        return Err(Error::MmsDomain(format!(
            "case `{}` is {}-dimensional, the grid is {}-dimensional",
            case.name,
            case.dim,
            cfg.grid.dim()
        )));
    }
    let scheme = Scheme::new(cfg)?;
    let tau = scheme.tau();
    case.check_domain(scheme.model().graph.lambda_beta(), tau)?;
    let grid = cfg.grid;
    let forcer = Forcer { case, scheme: &scheme, mode };
    let mut state: State =
        scheme.init_state(&case.theta.sample(&grid, 0.0), &case.chi.sample(&grid, 0.0), &case.p.sample(&grid, 0.0))?;
    let mut acc = [0.0f64; 3];
    for i in 1..=cfg.n_steps {
        let forcing = forcer.forcing(i)?;
        state = scheme.step_forced(&state, &forcing)?.state;
        let t = i as f64 * tau;
        let err = |x: &Field, f: &ManufacturedField| {
            l2_norm(&x.zip_map(&f.sample(&grid, t), |a, b| a - b).expect("same grid")).powi(2)
        };
        acc[0] += tau * err(&state.theta, &case.theta);
        acc[1] += tau * err(&state.chi, &case.chi);
        acc[2] += tau * err(&state.p, &case.p);
    }
    Ok(MmsErrors {
        cells: grid.cell_count(),
        n_steps: cfg.n_steps,
        theta: acc[0].sqrt(),
        chi: acc[1].sqrt(),
        p: acc[2].sqrt(),
    })
}

/// A refinement sequence with observed orders per variable `(Θ, Χ, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    /// `"space"` (cells per axis doubled) or `"time"` (`N` doubled).
    pub kind: &'static str,
    pub rows: Vec<MmsErrors>,
}

impl ConvergenceStudy {
    /// `log₂(e_k / e_{k+1})` per variable.
    pub fn orders(&self) -> Vec<[f64; 3]> {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].as_array(), w[1].as_array());
                [0, 1, 2].map(|j| (a[j] / b[j]).log2())
            })
            .collect()
    }

    /// Smallest observed order over variables and refinements.
    pub fn min_order(&self) -> f64 {
        self.orders().iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Error tables of the spatial and temporal studies.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsReport {
    pub case: String,
    pub spatial: ConvergenceStudy,
    pub temporal: ConvergenceStudy,
}

/// Order thresholds checked by [`MmsReport::passed`].
pub const SPATIAL_ORDER_MIN: f64 = 1.9;
pub const TEMPORAL_ORDER_MIN: f64 = 0.9;

impl MmsReport {
    pub fn passed(&self) -> bool {
        self.spatial.min_order() >= SPATIAL_ORDER_MIN && self.temporal.min_order() >= TEMPORAL_ORDER_MIN
    }

    pub fn to_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["study", "cells", "n_steps", "err_theta", "err_chi", "err_p"])
            .map_err(crate::discretization::io::csv_err)?;
        for study in [&self.spatial, &self.temporal] {
            for r in &study.rows {
                out.write_record([
                    study.kind.to_string(),
                    r.cells.to_string(),
                    r.n_steps.to_string(),
                    format!("{:e}", r.theta),
                    format!("{:e}", r.chi),
                    format!("{:e}", r.p),
                ])
                .map_err(crate::discretization::io::csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for MmsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "manufactured solution `{}`", self.case)?;
        for (study, min) in [(&self.spatial, SPATIAL_ORDER_MIN), (&self.temporal, TEMPORAL_ORDER_MIN)] {
            writeln!(f, "{} refinement", study.kind)?;
            writeln!(f, "{:>8} {:>8} {:>14} {:>14} {:>14}", "cells", "N", "err Theta", "err Chi", "err P")?;
            for r in &study.rows {
                writeln!(f, "{:>8} {:>8} {:>14.6e} {:>14.6e} {:>14.6e}", r.cells, r.n_steps, r.theta, r.chi, r.p)?;
            }
            for o in study.orders() {
                writeln!(f, "{:>17} {:>14.3} {:>14.3} {:>14.3}", "order", o[0], o[1], o[2])?;
            }
            let status = if study.min_order() >= min { "ok" } else { "BELOW THRESHOLD" };
            writeln!(f, "min order {:.3} (required {min}): {status}", study.min_order())?;
        }
        Ok(())
    }
}

/// Spatial study: the stationary variant with continuous forcing on
/// `n, 2n, 4n` cells per axis at `cfg`'s `N`. Temporal study: the
/// time-dependent case with semi-discrete forcing on `cfg`'s grid at
/// `N, 2N, 4N`. The grid of `cfg` provides the base resolution and the
/// lengths; its dimension must match the case.
pub fn mms_run(case: &ManufacturedCase, cfg: &RunConfig) -> Result<MmsReport> {
    let base = cfg.grid;
    let stationary = case.stationary();
    let spatial_rows = [1usize, 2, 4]
        .iter()
        .map(|&f| {
            let grid = base.refined(f)?;
            mms_errors(&stationary, &RunConfig { grid, ..cfg.clone() }, ForcingMode::Continuous)
        })
        .collect::<Result<Vec<_>>>()?;
    let temporal_rows = [1usize, 2, 4]
        .iter()
        .map(|&f| mms_errors(case, &cfg.with_steps(cfg.n_steps * f), ForcingMode::SemiDiscrete))
        .collect::<Result<Vec<_>>>()?;
    Ok(MmsReport {
        case: case.name.clone(),
        spatial: ConvergenceStudy { kind: "space", rows: spatial_rows },
        temporal: ConvergenceStudy { kind: "time", rows: temporal_rows },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_1d(cells: usize, n: usize) -> RunConfig {
        let grid = Grid::uniform_box(1, &[cells], &[1.0]).unwrap();
        RunConfig { n_steps: n, t_final: 0.5, ..RunConfig::new(grid) }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let g = Grid::uniform_box(2, &[4, 4], &[1.0, 2.0]).unwrap();
        let f = ManufacturedField { base: 1.0, amp: 0.3, modes: vec![1, 2], eps: 0.5, omega: 2.0 };
        let (x, t, e) = ([0.3, 0.7, 0.0], 0.4, 1e-5);
        let fd_t = (f.value(x, t + e, &g) - f.value(x, t - e, &g)) / (2.0 * e);
        assert!((fd_t - f.dt(x, t, &g)).abs() < 1e-8);
        let mut lap = 0.0;
        for d in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[d] += e;
            xm[d] -= e;
            lap += (f.value(xp, t, &g) - 2.0 * f.value(x, t, &g) + f.value(xm, t, &g)) / (e * e);
        }
        assert!((lap - f.laplacian(x, t, &g)).abs() < 1e-4);
    }

    #[test]
    fn discrete_forcing_reproduces_the_fields() {
        let c = case("trig1d").unwrap();
        let e = mms_errors(&c, &cfg_1d(16, 8), ForcingMode::Discrete).unwrap();
        assert!(e.theta < 1e-9 && e.chi < 1e-9 && e.p < 1e-9, "{e:?}");
    }

    #[test]
    fn constrained_chi_is_rejected() {
        let mut c = case("trig1d").unwrap();
        c.chi.base = 0.1;
        let err = mms_errors(&c, &cfg_1d(8, 4), ForcingMode::Continuous).unwrap_err();
        assert!(matches!(err, Error::MmsDomain(_)));
        assert!(matches!(case("nope"), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn adapt_config_matches_case_dimension() {
        let c = case("trig2d").unwrap();
        let cfg = cfg_1d(8, 4);
        let adapted = c.adapt_config(&cfg).unwrap();
        assert_eq!(adapted.grid.dim(), 2);
        assert_eq!(adapted.grid.cells_per_axis(), &[8, 8]);
        assert_eq!(adapted.n_steps, cfg.n_steps);
        assert_eq!(case("trig1d").unwrap().adapt_config(&cfg).unwrap(), cfg);
    }
}
