//! Initial-data preparation and the three-solve step of the scheme:
//! phase inclusion, then pressure, then temperature.

use crate::config::{InitialData, OutputConfig};
use crate::diagnostics::DiagnosticsLedger;
use crate::discretization::io::Snapshot;
use crate::discretization::{Field, Grid, OperatorA, OperatorB};
use crate::error::{Error, Result};
use crate::model::{Graph, HFunction, Model, ModelParams};
use crate::solvers::{
    solve_phase_inclusion, solve_pressure, solve_temperature, InclusionSolveConfig, LinearSolveConfig,
};

/// Everything needed to run the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of steps; `τ = t_final / n_steps`.
    pub n_steps: usize,
    pub t_final: f64,
    pub params: ModelParams,
    pub h: HFunction,
    pub lambda_beta: f64,
    pub grid: Grid,
    pub linear: LinearSolveConfig,
    pub inclusion: InclusionSolveConfig,
    /// Tolerance on `max τ |R|` of the temperature Newton solve.
    pub newton_tol: f64,
    pub initial: InitialData,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Defaults on a given grid.
    pub fn new(grid: Grid) -> Self {
        Self {
            n_steps: 64,
            t_final: 1.0,
            params: ModelParams::default(),
            h: HFunction::default(),
            lambda_beta: 1.0,
            grid,
            linear: LinearSolveConfig::default(),
            inclusion: InclusionSolveConfig::default(),
            newton_tol: 1e-12,
            initial: InitialData::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn with_steps(&self, n_steps: usize) -> Self {
        Self { n_steps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be > 0, got {}", self.t_final)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter("newton_tol must be > 0".into()));
        }
        if self.output.snapshot_every == 0 {
            return Err(Error::InvalidParameter("snapshot_every must be >= 1".into()));
        }
        self.params.validate()?;
        self.linear.validate()?;
        self.inclusion.validate()
    }

    /// Builds the certified model: interval graph on `[0, lambda_beta]`.
    pub fn model(&self) -> Result<Model> {
        Model::new(self.params, self.h, Graph::interval(self.lambda_beta)?)
    }
}

/// One time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub index: usize,
    pub time: f64,
    pub theta: Field,
    pub chi: Field,
    pub p: Field,
    /// Internal energy `psi(Θ, Χ)`.
    pub e: Field,
    /// Density `P / (1 + Χ)`.
    pub u: Field,
    /// Recovered selection of `β(Χ)`; zero at the initial level.
    pub xi: Field,
}

impl State {
    /// Snapshot with the six fields and `step`/`time` metadata.
    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot::new(*self.theta.grid())
            .with_meta("step", self.index)
            .with_meta("time", format!("{:e}", self.time))
            .with_field("theta", self.theta.clone())
            .with_field("chi", self.chi.clone())
            .with_field("p", self.p.clone())
            .with_field("e", self.e.clone())
            .with_field("u", self.u.clone())
            .with_field("xi", self.xi.clone())
    }

    /// Inverse of [`State::to_snapshot`]. Values are taken as stored;
    /// use [`State::check_invariants`] to validate them.
    pub fn from_snapshot(snap: &Snapshot) -> Result<Self> {
        let meta = |key: &str| {
            snap.meta(key).ok_or_else(|| Error::Parse { line: 0, key: key.into(), message: "missing metadata".into() })
        };
        let bad = |key: &str| Error::Parse { line: 0, key: key.into(), message: "malformed metadata".into() };
        let index = meta("step")?.parse().map_err(|_| bad("step"))?;
        let time = meta("time")?.parse().map_err(|_| bad("time"))?;
        let field = |name: &str| {
            snap.field(name).cloned().ok_or_else(|| Error::Parse {
                line: 0,
                key: name.into(),
                message: "missing column".into(),
            })
        };
        Ok(Self {
            index,
            time,
            theta: field("theta")?,
            chi: field("chi")?,
            p: field("p")?,
            e: field("e")?,
            u: field("u")?,
            xi: field("xi")?,
        })
    }

    /// Phase bounds, positivity of `P` and `U`, finiteness of `Θ`.
    pub fn check_invariants(&self, lambda_beta: f64) -> Result<()> {
        let step = self.index;
        if let Some((cell, &value)) =
            self.chi.values().iter().enumerate().find(|(_, c)| !(0.0..=lambda_beta).contains(*c))
        {
            return Err(Error::PhaseBoundViolation { cell, value, step });
        }
        for (field, values) in [("P", &self.p), ("U", &self.u)] {
            if let Some((cell, &value)) = values.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::PositivityViolation { field, cell, value, step });
            }
        }
        self.theta.check_finite("theta")
    }
}

/// Optional source terms added to the three equations. Only used by the
/// manufactured-solution harness.
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    pub heat: Option<Field>,
    pub phase: Option<Field>,
    pub pressure: Option<Field>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub sweep_iters: usize,
    pub newton_iters: usize,
    /// Pressure CG iterations plus CG iterations inside the Newton solve.
    pub cg_iters: usize,
    pub membership_residual: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: State,
    pub stats: StepStats,
}

/// Output of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// States at the snapshot cadence, always including the first and last.
    pub snapshots: Vec<State>,
    pub ledger: DiagnosticsLedger,
    /// Cells where the initial pressure was raised to `τ`.
    pub regularized_cells: usize,
}

impl RunOutput {
    pub fn final_state(&self) -> &State {
        self.snapshots.last().expect("a run always stores its initial state")
    }
}

/// A run stopped by a fatal error, with everything produced before it.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub step: usize,
    pub partial: RunOutput,
}

/// `max(p0, τ)` cell-wise.
pub fn regularize_p0(p0: &Field, tau: f64) -> Field {
    p0.map(|p| if p >= tau { p } else { tau })
}

/// The scheme bound to a configuration and a model.
#[derive(Debug, Clone)]
pub struct Scheme {
    cfg: RunConfig,
    model: Model,
    a: OperatorA,
    b: OperatorB,
}

impl Scheme {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.model()?;
        Ok(Self::with_model(cfg, model))
    }

    /// Uses a caller-supplied model (custom graph, uncertified `h`).
    pub fn with_model(cfg: &RunConfig, model: Model) -> Self {
        Self {
            cfg: cfg.clone(),
            a: OperatorA::new(cfg.grid),
            b: OperatorB::new(cfg.grid, model.params.gamma),
            model,
        }
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn tau(&self) -> f64 {
        self.cfg.tau()
    }

    pub fn operator_a(&self) -> &OperatorA {
        &self.a
    }

    pub fn operator_b(&self) -> &OperatorB {
        &self.b
    }

    /// Applies the pressure floor and derives `E⁰`, `U⁰`; `Ξ⁰ = 0`.
    pub fn init_state(&self, theta0: &Field, chi0: &Field, p0: &Field) -> Result<State> {
        let grid = self.cfg.grid;
        for f in [theta0, chi0, p0] {
            if *f.grid() != grid {
                return Err(Error::GridMismatch { expected: grid.cell_count(), actual: f.len() });
            }
        }
        theta0.check_finite("theta0")?;
        chi0.check_finite("chi0")?;
        p0.check_finite("p0")?;
        let lb = self.model.graph.lambda_beta();
        if let Some((i, c)) = chi0.values().iter().enumerate().find(|(_, c)| !(0.0..=lb).contains(*c)) {
            return Err(Error::Domain(format!("chi0 = {c} at cell {i} outside [0, {lb}]")));
        }
        if let Some((i, p)) = p0.values().iter().enumerate().find(|(_, p)| **p < 0.0) {
            return Err(Error::Domain(format!("p0 = {p} at cell {i} is negative")));
        }
        let p = regularize_p0(p0, self.tau());
        Ok(self.assemble(0, 0.0, theta0.clone(), chi0.clone(), p, Field::zeros(grid)))
    }

    fn assemble(&self, index: usize, time: f64, theta: Field, chi: Field, p: Field, xi: Field) -> State {
        let psi = &self.model.psi;
        let e = theta.zip_map(&chi, |t, c| psi.psi(t, c)).expect("same grid");
        let u = p.zip_map(&chi, |p, c| p / (1.0 + c)).expect("same grid");
        State { index, time, theta, chi, p, e, u, xi }
    }

    /// Phase right-hand side
    /// `F = τ⁻¹ Χ_prev + (ν/τ) A Χ_prev + h(Θ_prev) - log P_prev`.
    pub fn phase_rhs(&self, prev: &State) -> Result<Field> {
        let tau = self.tau();
        let nu = self.model.params.nu;
        let achi = self.a.apply(&prev.chi)?;
        let h = self.model.h();
        let values: Vec<f64> = (0..prev.chi.len())
            .map(|i| {
                prev.chi.values()[i] / tau + nu / tau * achi.values()[i] + h.value(prev.theta.values()[i])
                    - prev.p.values()[i].ln()
            })
            .collect();
        let f = Field::new(*prev.chi.grid(), values);
        match f {
            Err(Error::NonFinite { cell, .. }) => Err(Error::PositivityViolation {
                field: "P",
                cell,
                value: prev.p.values()[cell],
                step: prev.index,
            }),
            other => other,
        }
    }

    pub fn step(&self, prev: &State) -> Result<StepResult> {
        self.step_forced(prev, &Forcing::default())
    }

    pub fn step_forced(&self, prev: &State, forcing: &Forcing) -> Result<StepResult> {
        let tau = self.tau();
        let step = prev.index + 1;
        let mut f = self.phase_rhs(prev)?;
        if let Some(s) = &forcing.phase {
            f = f.zip_map(s, |a, b| a + b)?;
        }
        let phase = solve_phase_inclusion(
            &prev.chi,
            &f,
            tau,
            self.model.params.nu,
            &self.a,
            &self.model.graph,
            &self.cfg.inclusion,
        )?;
        let lb = self.model.graph.lambda_beta();
        if let Some((cell, &value)) = phase.chi.values().iter().enumerate().find(|(_, c)| !(0.0..=lb).contains(*c)) {
            return Err(Error::PhaseBoundViolation { cell, value, step });
        }

        let pressure = solve_pressure(
            &prev.p,
            &phase.chi,
            &prev.chi,
            tau,
            &self.b,
            &self.cfg.linear,
            forcing.pressure.as_ref(),
        )?;
        let (cell, value) = pressure.solution.argmin();
        if !(value > 0.0) {
            return Err(Error::PositivityViolation { field: "P", cell, value, step });
        }

        let temperature = solve_temperature(
            &prev.theta,
            &phase.chi,
            &prev.chi,
            tau,
            &self.a,
            &self.model.psi,
            &self.cfg.linear,
            self.cfg.newton_tol,
            forcing.heat.as_ref(),
        )?;

        let state = self.assemble(step, step as f64 * tau, temperature.theta, phase.chi, pressure.solution, phase.xi);
        let (cell, value) = state.u.argmin();
        if !(value > 0.0) {
            return Err(Error::PositivityViolation { field: "U", cell, value, step });
        }
        Ok(StepResult {
            state,
            stats: StepStats {
                sweep_iters: phase.iterations,
                newton_iters: temperature.newton_iterations,
                cg_iters: pressure.iterations + temperature.cg_iterations,
                membership_residual: phase.membership_residual,
            },
        })
    }

    /// Runs `N` steps from the given initial fields, recording a ledger row
    /// per step and snapshots at the configured cadence.
    pub fn run(&self, theta0: &Field, chi0: &Field, p0: &Field) -> std::result::Result<RunOutput, Box<RunFailure>> {
        let fail_early = |error: Error| {
            Box::new(RunFailure {
                error,
                step: 0,
                partial: RunOutput {
                    snapshots: Vec::new(),
                    ledger: DiagnosticsLedger::empty(),
                    regularized_cells: 0,
                },
            })
        };
        let tau = self.tau();
        let regularized_cells = p0.values().iter().filter(|&&p| p < tau).count();
        let init = self.init_state(theta0, chi0, p0).map_err(fail_early)?;
        let mut ledger = DiagnosticsLedger::new(&self.model, tau, &init);
        let every = self.cfg.output.snapshot_every;
        let mut snapshots = vec![init.clone()];
        let mut prev = init;
        for i in 1..=self.cfg.n_steps {
            match self.step(&prev) {
                Ok(StepResult { state, stats }) => {
                    ledger.record_step(&prev, &state, &stats);
                    if i % every == 0 || i == self.cfg.n_steps {
                        snapshots.push(state.clone());
                    }
                    prev = state;
                }
                Err(error) => {
                    if snapshots.last().map(|s| s.index) != Some(prev.index) {
                        snapshots.push(prev);
                    }
                    return Err(Box::new(RunFailure {
                        error,
                        step: i,
                        partial: RunOutput { snapshots, ledger, regularized_cells },
                    }));
                }
            }
        }
        Ok(RunOutput { snapshots, ledger, regularized_cells })
    }

    /// Initial fields from the configured analytic profiles.
    pub fn initial_fields(&self) -> Result<(Field, Field, Field)> {
        self.cfg.initial.evaluate(&self.cfg.grid)
    }
}

/// Initial state for `cfg` (certifies the model).
pub fn init_state(theta0: &Field, chi0: &Field, p0: &Field, cfg: &RunConfig) -> Result<State> {
    Scheme::new(cfg)?.init_state(theta0, chi0, p0)
}

/// One step of the scheme for `cfg`.
pub fn step(prev: &State, cfg: &RunConfig) -> Result<State> {
    Ok(Scheme::new(cfg)?.step(prev)?.state)
}

/// Full run for `cfg`.
pub fn run(theta0: &Field, chi0: &Field, p0: &Field, cfg: &RunConfig) -> std::result::Result<RunOutput, Box<RunFailure>> {
    let scheme = Scheme::new(cfg).map_err(|error| {
        Box::new(RunFailure {
            error,
            step: 0,
            partial: RunOutput { snapshots: Vec::new(), ledger: DiagnosticsLedger::empty(), regularized_cells: 0 },
        })
    })?;
    scheme.run(theta0, chi0, p0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_cell() -> RunConfig {
        RunConfig::new(Grid::new(1, &[1], &[1.0]).unwrap())
    }

    #[test]
    fn regularization_floor() {
        let g = Grid::uniform_box(1, &[4], &[1.0]).unwrap();
        let p0 = Field::new(g, vec![0.0, 0.05, 0.1, 2.0]).unwrap();
        let r = regularize_p0(&p0, 0.1);
        assert_eq!(r.values(), &[0.1, 0.1, 0.1, 2.0]);
        let r = regularize_p0(&p0, 1e-300);
        assert_eq!(r.values()[1..], p0.values()[1..]);
    }

    #[test]
    fn init_state_derived_fields() {
        let cfg = one_cell();
        let scheme = Scheme::new(&cfg).unwrap();
        let g = cfg.grid;
        let s = scheme.init_state(&Field::constant(g, 1.2), &Field::zeros(g), &Field::constant(g, 2.0)).unwrap();
        assert_eq!(s.e.values()[0], 1.2);
        assert_eq!(s.u.values()[0], 2.0);
        let s = scheme.init_state(&Field::constant(g, 1.2), &Field::constant(g, 1.0), &Field::constant(g, 2.0)).unwrap();
        assert_abs_diff_eq!(s.u.values()[0], 1.0, epsilon = 1e-15);
        assert!(s.xi.values().iter().all(|&x| x == 0.0));
        let bad = scheme.init_state(&Field::constant(g, 1.2), &Field::constant(g, -0.1), &Field::constant(g, 2.0));
        assert!(matches!(bad, Err(Error::Domain(_))));
    }

    #[test]
    fn log_pressure_is_lagged() {
        let grid = Grid::uniform_box(1, &[6], &[1.0]).unwrap();
        let cfg = RunConfig::new(grid);
        let scheme = Scheme::new(&cfg).unwrap();
        let theta = Field::from_fn(grid, |x| 1.0 + 0.2 * x[0]);
        let chi = Field::from_fn(grid, |x| 0.4 + 0.1 * (std::f64::consts::PI * x[0]).cos());
        let p = Field::constant(grid, 1.5);
        let s0 = scheme.init_state(&theta, &chi, &p).unwrap();
        let s1 = scheme.step(&s0).unwrap().state;
        let mut doubled = s1.clone();
        doubled.p = s1.p.map(|v| 2.0 * v);
        doubled.u = s1.u.map(|v| 2.0 * v);
        // Chi at step 1 depends only on level 0; the doubling acts at step 2.
        let a = scheme.step(&s1).unwrap().state;
        let b = scheme.step(&doubled).unwrap().state;
        assert!(a.chi.values().iter().zip(b.chi.values()).any(|(x, y)| (x - y).abs() > 1e-6));
        let again = scheme.step(&s0).unwrap().state;
        assert_eq!(again.chi, s1.chi);
    }

    #[test]
    fn deterministic_runs() {
        let grid = Grid::uniform_box(2, &[5, 4], &[1.0, 1.0]).unwrap();
        let cfg = RunConfig { n_steps: 4, ..RunConfig::new(grid) };
        let scheme = Scheme::new(&cfg).unwrap();
        let (t, c, p) = scheme.initial_fields().unwrap();
        let a = scheme.run(&t, &c, &p).unwrap();
        let b = scheme.run(&t, &c, &p).unwrap();
        assert_eq!(a.final_state(), b.final_state());
    }
}
