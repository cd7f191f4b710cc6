use std::fmt;
use std::io::Write;

use super::DiagnosticsLedger;
use crate::discretization::{integrate, l2_norm, Field};
use crate::error::{Error, Result};
use crate::config::OutputConfig;
use crate::timestepper::{RunConfig, RunFailure, RunOutput, Scheme, State};

/// Default bound on the ratio of ledger suprema across a refinement family.
pub const DEFAULT_UNIFORMITY_FACTOR: f64 = 2.0;

/// Energy-type ledger quantities whose suprema must not depend on `τ`.
const ENERGY_QUANTITIES: [&str; 5] = ["chi_energy", "u_entropy", "kinetic_chi", "e_energy", "p_energy"];

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityRow {
    pub quantity: &'static str,
    /// Supremum over steps, one per ledger.
    pub suprema: Vec<f64>,
    /// `max sup / min sup`.
    pub ratio: f64,
    pub ok: bool,
}

/// Outcome of [`check_uniform_in_tau`]. A failure is a finding, not an
/// error: it flags a regime where the discrete bounds degrade with `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityReport {
    pub factor: f64,
    pub rows: Vec<UniformityRow>,
}

impl UniformityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }

    pub fn violations(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.ok).map(|r| r.quantity).collect()
    }

    pub fn to_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.rows.first().map_or(0, |r| r.suprema.len());
        let mut header = vec!["quantity".to_string()];
        header.extend((0..n).map(|k| format!("sup_{k}")));
        header.extend(["ratio".to_string(), "ok".to_string()]);
        out.write_record(&header).map_err(crate::discretization::io::csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.quantity.to_string()];
            rec.extend(r.suprema.iter().map(|s| format!("{s:e}")));
            rec.push(format!("{:e}", r.ratio));
            rec.push(if r.ok { "1" } else { "0" }.to_string());
            out.write_record(&rec).map_err(crate::discretization::io::csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for UniformityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "uniform-in-tau check (factor {})", self.factor)?;
        writeln!(f, "{:<14} {:>40} {:>10}  status", "quantity", "suprema", "ratio")?;
        for r in &self.rows {
            let sups = r.suprema.iter().map(|s| format!("{s:.4e}")).collect::<Vec<_>>().join(" ");
            let status = if r.ok { "ok" } else { "VIOLATION" };
            writeln!(f, "{:<14} {:>40} {:>10.4}  {status}", r.quantity, sups, r.ratio)?;
        }
        Ok(())
    }
}

/// Compares the suprema over steps of every energy ledger across a
/// refinement family; each must vary by less than `factor`. Fewer than two
/// ledgers, or an empty ledger, fail the check.
pub fn check_uniform_in_tau(ledgers: &[&DiagnosticsLedger], factor: f64) -> UniformityReport {
    let rows = ENERGY_QUANTITIES
        .iter()
        .map(|&quantity| {
            let suprema: Vec<f64> =
                ledgers.iter().map(|l| l.supremum(quantity).unwrap_or(f64::NAN)).collect();
            let hi = suprema.iter().map(|s| s.abs()).fold(0.0, f64::max);
            let lo = suprema.iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min);
            let ratio = if hi == 0.0 { 1.0 } else { hi / lo };
            let ok = suprema.len() >= 2 && suprema.iter().all(|s| s.is_finite()) && ratio < factor;
            UniformityRow { quantity, suprema, ratio, ok }
        })
        .collect();
    UniformityReport { factor, rows }
}

/// Runs the configured problem for every `N` concurrently, storing every
/// step. Results are returned in the order of `n_list`.
pub fn refinement_runs(
    cfg: &RunConfig,
    n_list: &[usize],
) -> std::result::Result<Vec<RunOutput>, Box<RunFailure>> {
    let failure = |error: Error| {
        Box::new(RunFailure {
            error,
            step: 0,
            partial: RunOutput { snapshots: Vec::new(), ledger: DiagnosticsLedger::empty(), regularized_cells: 0 },
        })
    };
    if n_list.is_empty() {
        return Err(failure(Error::InvalidParameter("refinement needs at least one N".into())));
    }
    let schemes = n_list
        .iter()
        .map(|&n| {
            let run_cfg = RunConfig {
                output: OutputConfig { snapshot_every: 1, ..cfg.output.clone() },
                ..cfg.with_steps(n)
            };
            Scheme::new(&run_cfg)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(failure)?;
    let (theta0, chi0, p0) = schemes[0].initial_fields().map_err(failure)?;
    std::thread::scope(|scope| {
        let handles: Vec<_> =
            schemes.iter().map(|s| scope.spawn(|| s.run(&theta0, &chi0, &p0))).collect();
        handles.into_iter().map(|h| h.join().expect("refinement worker panicked")).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyRow {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub theta: f64,
    pub chi: f64,
    pub p: f64,
}

/// `‖x_τ - x_{τ/r}‖_{L²(Q)}` for successive refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyReport {
    pub rows: Vec<CauchyRow>,
}

impl CauchyReport {
    /// Strict decrease down the table, per variable `(Θ, Χ, P)`.
    pub fn decreasing(&self) -> [bool; 3] {
        let dec = |f: fn(&CauchyRow) -> f64| self.rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
        [dec(|r| r.theta), dec(|r| r.chi), dec(|r| r.p)]
    }

    pub fn passed(&self) -> bool {
        self.decreasing().iter().all(|&d| d)
    }

    /// Successive ratios `d_k / d_{k+1}` per variable.
    pub fn ratios(&self) -> Vec<[f64; 3]> {
        self.rows
            .windows(2)
            .map(|w| [w[0].theta / w[1].theta, w[0].chi / w[1].chi, w[0].p / w[1].p])
            .collect()
    }

    pub fn to_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n_coarse", "n_fine", "theta", "chi", "p"]).map_err(crate::discretization::io::csv_err)?;
        for r in &self.rows {
            out.write_record([
                r.n_coarse.to_string(),
                r.n_fine.to_string(),
                format!("{:e}", r.theta),
                format!("{:e}", r.chi),
                format!("{:e}", r.p),
            ])
            .map_err(crate::discretization::io::csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for CauchyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tau-Cauchy study: L2(Q) differences between successive refinements")?;
        writeln!(f, "{:>8} {:>8} {:>14} {:>14} {:>14}", "N", "N_fine", "Theta", "Chi", "P")?;
        for r in &self.rows {
            writeln!(f, "{:>8} {:>8} {:>14.6e} {:>14.6e} {:>14.6e}", r.n_coarse, r.n_fine, r.theta, r.chi, r.p)?;
        }
        let d = self.decreasing();
        let word = |b: bool| if b { "decreasing" } else { "NOT decreasing" };
        writeln!(f, "Theta: {}, Chi: {}, P: {}", word(d[0]), word(d[1]), word(d[2]))
    }
}

/// Time-aligned differences between trajectories that store every step.
/// Each finer trajectory is read piecewise-constant in time at the coarser
/// one's time points: `d² = Σ_k τ_c ‖x_c^k - x_f^{r k}‖²`.
pub fn cauchy_differences(trajectories: &[&[State]]) -> Result<CauchyReport> {
    for traj in trajectories {
        if traj.len() < 2 || traj.iter().enumerate().any(|(k, s)| s.index != k) {
            return Err(Error::InvalidParameter("Cauchy study needs every step of each trajectory".into()));
        }
    }
    let mut rows = Vec::new();
    for pair in trajectories.windows(2) {
        let (coarse, fine) = (pair[0], pair[1]);
        let (nc, nf) = (coarse.len() - 1, fine.len() - 1);
        if nf % nc != 0 {
            return Err(Error::InvalidParameter(format!("N = {nf} is not a refinement of N = {nc}")));
        }
        let r = nf / nc;
        let tau_c = coarse[nc].time / nc as f64;
        let mut acc = [0.0f64; 3];
        for k in 1..=nc {
            let (a, b) = (&coarse[k], &fine[r * k]);
            let diff = |x: &Field, y: &Field| l2_norm(&x.zip_map(y, |u, v| u - v).expect("same grid")).powi(2);
            acc[0] += tau_c * diff(&a.theta, &b.theta);
            acc[1] += tau_c * diff(&a.chi, &b.chi);
            acc[2] += tau_c * diff(&a.p, &b.p);
        }
        rows.push(CauchyRow { n_coarse: nc, n_fine: nf, theta: acc[0].sqrt(), chi: acc[1].sqrt(), p: acc[2].sqrt() });
    }
    Ok(CauchyReport { rows })
}

/// Runs the refinement family and measures its Cauchy differences.
pub fn tau_cauchy_study(cfg: &RunConfig, n_list: &[usize]) -> std::result::Result<CauchyReport, Box<RunFailure>> {
    let outputs = refinement_runs(cfg, n_list)?;
    let trajectories: Vec<&[State]> = outputs.iter().map(|o| o.snapshots.as_slice()).collect();
    cauchy_differences(&trajectories).map_err(|error| {
        Box::new(RunFailure { error, step: 0, partial: outputs.into_iter().next().expect("nonempty") })
    })
}

/// A cell with `Θ <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityFlag {
    pub step: usize,
    pub cell: usize,
    pub theta: f64,
}

/// Minima over the space-time cylinder and the `∫|log Θ|` series.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub min_theta: f64,
    pub min_p: f64,
    pub min_u: f64,
    /// `(time, ∫_Ω |log Θ|)`; `+∞` on states with a flagged cell.
    pub theta_log_l1: Vec<(f64, f64)>,
    pub flagged: Vec<PositivityFlag>,
}

impl PositivityReport {
    pub fn temperature_positive(&self) -> bool {
        self.flagged.is_empty()
    }
}

impl fmt::Display for PositivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "min Theta = {:e}, min P = {:e}, min U = {:e}", self.min_theta, self.min_p, self.min_u)?;
        let worst = self.theta_log_l1.iter().map(|x| x.1).fold(0.0, f64::max);
        writeln!(f, "max_t int |log Theta| = {worst:e}")?;
        if self.flagged.is_empty() {
            writeln!(f, "temperature positive on every recorded state")
        } else {
            writeln!(f, "FINDING: {} nonpositive temperature cells", self.flagged.len())?;
            for fl in self.flagged.iter().take(20) {
                writeln!(f, "  step {} cell {} Theta = {:e}", fl.step, fl.cell, fl.theta)?;
            }
            Ok(())
        }
    }
}

/// Scans recorded states for temperature positivity. Nonpositive cells are
/// reported, never treated as errors.
pub fn positivity_report(states: &[State]) -> PositivityReport {
    let mut report = PositivityReport {
        min_theta: f64::INFINITY,
        min_p: f64::INFINITY,
        min_u: f64::INFINITY,
        theta_log_l1: Vec::with_capacity(states.len()),
        flagged: Vec::new(),
    };
    for s in states {
        report.min_theta = report.min_theta.min(s.theta.min());
        report.min_p = report.min_p.min(s.p.min());
        report.min_u = report.min_u.min(s.u.min());
        let mut positive = true;
        for (cell, &theta) in s.theta.values().iter().enumerate() {
            if !(theta > 0.0) {
                positive = false;
                report.flagged.push(PositivityFlag { step: s.index, cell, theta });
            }
        }
        let log_l1 = if positive { integrate(&s.theta.map(|t| t.ln().abs())) } else { f64::INFINITY };
        report.theta_log_l1.push((s.time, log_l1));
    }
    report
}
