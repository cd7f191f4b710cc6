use std::io::Write;

use crate::discretization::{boundary_integrate, gradient_sq_density, h1_seminorm, integrate};
use crate::error::{Error, Result};
use crate::model::{Graph, Model, ModelParams};
use crate::timestepper::{State, StepStats};

/// CSV header of the ledger, in row field order.
pub const LEDGER_COLUMNS: [&str; 19] = [
    "step",
    "time",
    "phase_bounds_ok",
    "min_P",
    "min_U",
    "min_Theta",
    "mass_balance_residual",
    "chi_energy",
    "u_entropy",
    "kinetic_chi",
    "e_energy",
    "p_energy",
    "dissipation_min",
    "newton_iters",
    "cg_iters",
    "sweep_iters",
    "dissipation_signs_ok",
    "theta_log_l1",
    "membership_residual",
];

/// One ledger record. Row 0 describes the initial state (no rates, no
/// cumulative terms, zero iteration counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    /// `0 <= Χ <= λ_β` in every cell.
    pub phase_bounds_ok: bool,
    pub min_p: f64,
    pub min_u: f64,
    pub min_theta: f64,
    /// `|∫(U - U_prev)/τ + γ ∫_Γ P| / ∫ U_prev`.
    pub mass_balance_residual: f64,
    /// `½‖Χ - χ*‖² + Σ τ‖∇Χ‖² + (ν/2)‖∇Χ‖²`.
    pub chi_energy: f64,
    /// `∫ (U - log U)`.
    pub u_entropy: f64,
    /// `Σ τ‖ΔΧ/τ‖² + ∫ β̂(Χ)`.
    pub kinetic_chi: f64,
    /// `½‖E‖² + Σ (c_s/2) τ‖∇Θ‖²`.
    pub e_energy: f64,
    /// `∫ P²/(1 + Χ)`.
    pub p_energy: f64,
    /// Smallest cell-wise dissipation addend (`μ Χ_t²`, `ν|∇Χ_t|²`,
    /// `(k₀/Θ)|∇Θ|²` on cells with `Θ > 0`).
    pub dissipation_min: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub sweep_iters: usize,
    /// Every dissipation addend is finite and nonnegative.
    pub dissipation_signs_ok: bool,
    /// `∫ |log Θ|`, `+∞` if some cell has `Θ <= 0`.
    pub theta_log_l1: f64,
    pub membership_residual: f64,
}

impl LedgerRow {
    /// Real-valued monitored quantities (everything but flags and counts).
    pub fn quantities(&self) -> [(&'static str, f64); 11] {
        [
            ("min_P", self.min_p),
            ("min_U", self.min_u),
            ("min_Theta", self.min_theta),
            ("mass_balance_residual", self.mass_balance_residual),
            ("chi_energy", self.chi_energy),
            ("u_entropy", self.u_entropy),
            ("kinetic_chi", self.kinetic_chi),
            ("e_energy", self.e_energy),
            ("p_energy", self.p_energy),
            ("dissipation_min", self.dissipation_min),
            ("theta_log_l1", self.theta_log_l1),
        ]
    }

    /// Largest relative difference in the monitored quantities.
    pub fn max_relative_difference(&self, other: &LedgerRow) -> f64 {
        self.quantities()
            .iter()
            .zip(other.quantities())
            .map(|(&(_, a), (_, b))| {
                if a == b {
                    0.0
                } else {
                    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Cumulative {
    grad_chi: f64,
    kinetic: f64,
    grad_theta: f64,
}

/// Per-step record of every monitored invariant and energy quantity.
#[derive(Debug, Clone)]
pub struct DiagnosticsLedger {
    params: ModelParams,
    graph: Option<Graph>,
    c_s: f64,
    tau: f64,
    sums: Cumulative,
    rows: Vec<LedgerRow>,
}

impl DiagnosticsLedger {
    /// Starts a ledger with row 0 computed from the initial state.
    pub fn new(model: &Model, tau: f64, init: &State) -> Self {
        let mut ledger = Self {
            params: model.params,
            graph: Some(model.graph.clone()),
            c_s: model.psi.admissibility().c_s,
            tau,
            sums: Cumulative::default(),
            rows: Vec::new(),
        };
        let row = ledger.row(None, init, &StepStats::default());
        ledger.rows.push(row);
        ledger
    }

    /// A ledger with no rows (used when a run fails before its first state).
    pub fn empty() -> Self {
        Self {
            params: ModelParams::default(),
            graph: None,
            c_s: 0.0,
            tau: 0.0,
            sums: Cumulative::default(),
            rows: Vec::new(),
        }
    }

    /// Recomputes a ledger from consecutive states (iteration counts and
    /// membership residuals, which are not stored in states, are zero).
    pub fn replay(model: &Model, tau: f64, states: &[State]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidParameter("replay needs at least one state".into()))?;
        let mut ledger = Self::new(model, tau, first);
        for pair in states.windows(2) {
            if pair[1].index != pair[0].index + 1 {
                return Err(Error::InvalidParameter(format!(
                    "replay needs consecutive states, got {} then {}",
                    pair[0].index, pair[1].index
                )));
            }
            ledger.record_step(&pair[0], &pair[1], &StepStats::default());
        }
        Ok(ledger)
    }

    /// Appends the row for the step `prev → cur`.
    pub fn record_step(&mut self, prev: &State, cur: &State, stats: &StepStats) -> LedgerRow {
        let row = self.row(Some(prev), cur, stats);
        self.rows.push(row);
        row
    }

    fn row(&mut self, prev: Option<&State>, cur: &State, stats: &StepStats) -> LedgerRow {
        let p = &self.params;
        let tau = self.tau;
        let (lambda_beta, chi_star) = match &self.graph {
            Some(g) => (g.lambda_beta(), g.chi_star()),
            None => (f64::INFINITY, 0.0),
        };
        let grid = *cur.chi.grid();
        let vol = grid.cell_volume();
        let chi = cur.chi.values();

        let phase_bounds_ok = chi.iter().all(|&c| (0.0..=lambda_beta).contains(&c));
        let grad_chi_sq = h1_seminorm(&cur.chi).powi(2);
        let grad_theta_sq = h1_seminorm(&cur.theta).powi(2);

        let mut mass_balance_residual = 0.0;
        let mut dissipation_min = 0.0;
        let mut dissipation_signs_ok = true;
        if let Some(prev) = prev {
            self.sums.grad_chi += tau * grad_chi_sq;
            self.sums.grad_theta += 0.5 * self.c_s * tau * grad_theta_sq;

            let du = cur.u.zip_map(&prev.u, |a, b| (a - b) / tau).expect("same grid");
            let balance = integrate(&du) + p.gamma * boundary_integrate(&cur.p);
            mass_balance_residual = balance.abs() / integrate(&prev.u);

            let chi_t = cur.chi.zip_map(&prev.chi, |a, b| (a - b) / tau).expect("same grid");
            self.sums.kinetic += tau * vol * chi_t.values().iter().map(|r| r * r).sum::<f64>();

            let grad_chi_t = gradient_sq_density(&chi_t);
            let grad_theta = gradient_sq_density(&cur.theta);
            let mut lowest = f64::INFINITY;
            for i in 0..chi.len() {
                let rate = chi_t.values()[i];
                let mut addends = vec![p.mu * rate * rate, p.nu * grad_chi_t.values()[i]];
                let th = cur.theta.values()[i];
                if th > 0.0 {
                    addends.push(p.k0 / th * grad_theta.values()[i]);
                }
                for a in addends {
                    if !(a >= 0.0 && a.is_finite()) {
                        dissipation_signs_ok = false;
                    }
                    lowest = lowest.min(a);
                }
            }
            dissipation_min = lowest;
        }

        let beta_hat: f64 = match &self.graph {
            Some(g) => vol * chi.iter().map(|&c| g.potential(c)).sum::<f64>(),
            None => 0.0,
        };
        let chi_dev: f64 = vol * chi.iter().map(|c| (c - chi_star).powi(2)).sum::<f64>();
        let e_sq: f64 = vol * cur.e.values().iter().map(|e| e * e).sum::<f64>();
        let u_entropy = vol * cur.u.values().iter().map(|&u| u - u.ln()).sum::<f64>();
        let p_energy = vol * cur.p.values().iter().zip(chi).map(|(&q, &c)| q * q / (1.0 + c)).sum::<f64>();
        let theta_log_l1 = if cur.theta.min() > 0.0 {
            vol * cur.theta.values().iter().map(|t| t.ln().abs()).sum::<f64>()
        } else {
            f64::INFINITY
        };

        LedgerRow {
            step: cur.index,
            time: cur.time,
            phase_bounds_ok,
            min_p: cur.p.min(),
            min_u: cur.u.min(),
            min_theta: cur.theta.min(),
            mass_balance_residual,
            chi_energy: 0.5 * chi_dev + self.sums.grad_chi + 0.5 * p.nu * grad_chi_sq,
            u_entropy,
            kinetic_chi: self.sums.kinetic + beta_hat,
            e_energy: 0.5 * e_sq + self.sums.grad_theta,
            p_energy,
            dissipation_min,
            newton_iters: stats.newton_iters,
            cg_iters: stats.cg_iters,
            sweep_iters: stats.sweep_iters,
            dissipation_signs_ok,
            theta_log_l1,
            membership_residual: stats.membership_residual,
        }
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Supremum over rows of a named quantity (see [`LedgerRow::quantities`]).
    pub fn supremum(&self, name: &str) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.quantities().iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
            .reduce(f64::max)
    }

    /// First row that breaks a hard invariant: phase bounds, positivity of
    /// `P` and `U`, or a mass balance above `mass_tol`.
    pub fn first_violation(&self, mass_tol: f64) -> Option<(usize, String)> {
        self.rows.iter().find_map(|r| {
            let why = if !r.phase_bounds_ok {
                "phase bounds"
            } else if !(r.min_p > 0.0) {
                "pressure positivity"
            } else if !(r.min_u > 0.0) {
                "density positivity"
            } else if !(r.mass_balance_residual <= mass_tol) {
                "mass balance"
            } else if !r.dissipation_signs_ok {
                "dissipation signs"
            } else {
                return None;
            };
            Some((r.step, why.to_string()))
        })
    }

    /// Writes the ledger as CSV with [`LEDGER_COLUMNS`] as header.
    pub fn to_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(LEDGER_COLUMNS).map_err(crate::discretization::io::csv_err)?;
        for r in &self.rows {
            let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
            let record = [
                r.step.to_string(),
                r.time.to_string(),
                flag(r.phase_bounds_ok),
                format!("{:e}", r.min_p),
                format!("{:e}", r.min_u),
                format!("{:e}", r.min_theta),
                format!("{:e}", r.mass_balance_residual),
                format!("{:e}", r.chi_energy),
                format!("{:e}", r.u_entropy),
                format!("{:e}", r.kinetic_chi),
                format!("{:e}", r.e_energy),
                format!("{:e}", r.p_energy),
                format!("{:e}", r.dissipation_min),
                r.newton_iters.to_string(),
                r.cg_iters.to_string(),
                r.sweep_iters.to_string(),
                flag(r.dissipation_signs_ok),
                format!("{:e}", r.theta_log_l1),
                format!("{:e}", r.membership_residual),
            ];
            out.write_record(&record).map_err(crate::discretization::io::csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
