use super::{pcg, InclusionSolveConfig, InclusionStrategy, LinearSolveConfig};
use crate::discretization::{Field, OperatorA, SymmetricOperator};
use crate::error::{Error, Result};
use crate::model::Graph;

const YOSIDA_NEWTON_CG: LinearSolveConfig = LinearSolveConfig { tol_rel: 1e-13, tol_abs: 1e-300, max_iter: 50_000 };

/// The linear part `τ⁻¹ I + (1 + ν/τ) A` of the phase inclusion, with an
/// optional extra diagonal (the Yosida slope in Newton steps).
pub struct PhaseOperator<'a> {
    a: &'a OperatorA,
    inv_tau: f64,
    coupling: f64,
    a_diag: Vec<f64>,
    extra: Vec<f64>,
}

impl<'a> PhaseOperator<'a> {
    pub fn new(a: &'a OperatorA, tau: f64, nu: f64) -> Self {
        let n = a.len();
        Self { a, inv_tau: 1.0 / tau, coupling: 1.0 + nu / tau, a_diag: a.diagonal(), extra: vec![0.0; n] }
    }

    /// Diagonal of `τ⁻¹ I + (1 + ν/τ) A`.
    pub fn base_diagonal(&self, idx: usize) -> f64 {
        self.inv_tau + self.coupling * self.a_diag[idx]
    }

    fn apply_base(&self, x: &[f64], y: &mut [f64]) {
        self.a.apply_into(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.coupling * *yi + self.inv_tau * xi;
        }
    }
}

impl SymmetricOperator for PhaseOperator<'_> {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.apply_base(x, y);
        for ((yi, xi), e) in y.iter_mut().zip(x).zip(&self.extra) {
            *yi += e * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.base_diagonal(i) + self.extra[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionOutcome {
    pub chi: Field,
    /// Selection `ξ ∈ β(χ)` recovered from the residual.
    pub xi: Field,
    /// Sweeps (projected sweep) or total Newton steps (Yosida).
    pub iterations: usize,
    /// Largest diagonally scaled graph-membership residual of `(χ, ξ)`.
    pub membership_residual: f64,
}

/// Solves `τ⁻¹ χ + (1 + ν/τ) A χ + ξ = F`, `ξ ∈ β(χ)` cell-wise.
///
/// `chi_prev` is the initial iterate. The selection `ξ` is recovered as
/// `F - τ⁻¹ χ - (1 + ν/τ) A χ` and checked against the graph through its
/// resolvent.
pub fn solve_phase_inclusion(
    chi_prev: &Field,
    rhs: &Field,
    tau: f64,
    nu: f64,
    a: &OperatorA,
    graph: &Graph,
    cfg: &InclusionSolveConfig,
) -> Result<InclusionOutcome> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {tau}")));
    }
    chi_prev.same_grid(rhs)?;
    if *rhs.grid() != *a.grid() {
        return Err(Error::GridMismatch { expected: a.len(), actual: rhs.len() });
    }
    rhs.check_finite("phase right-hand side")?;
    let op = PhaseOperator::new(a, tau, nu);
    let mut chi = chi_prev.values().to_vec();
    let (iterations, consistency_tol) = match cfg.strategy {
        InclusionStrategy::ProjectedSweep => {
            let it = projected_sweep(&op, rhs.values(), &mut chi, graph, cfg)?;
            (it, 10.0 * cfg.sweep_tol)
        }
        InclusionStrategy::YosidaContinuation => {
            let it = yosida_continuation(&op, rhs.values(), &mut chi, graph, cfg, chi_prev.grid().cell_volume())?;
            (it, f64::NAN)
        }
    };

    let xi = recover_selection(&op, rhs.values(), &chi);
    let worst = membership(&op, graph, &chi, &xi)?;
    let tol = if consistency_tol.is_nan() {
        let xi_max = xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        10.0 * cfg.sweep_tol.max(cfg.yosida_lambda_min * (1.0 + xi_max))
    } else {
        consistency_tol
    };
    if worst.1 > tol {
        return Err(Error::GraphInconsistency { cell: worst.0, residual: worst.1 });
    }
    let grid = *chi_prev.grid();
    Ok(InclusionOutcome {
        chi: Field::new(grid, chi)?,
        xi: Field::new(grid, xi)?,
        iterations,
        membership_residual: worst.1,
    })
}

fn recover_selection(op: &PhaseOperator<'_>, rhs: &[f64], chi: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; chi.len()];
    op.apply_base(chi, &mut m);
    rhs.iter().zip(&m).map(|(f, mi)| f - mi).collect()
}

/// Worst cell of `|prox_σ(χ + σ ξ) - χ|` with `σ = 1 / diag`.
fn membership(op: &PhaseOperator<'_>, graph: &Graph, chi: &[f64], xi: &[f64]) -> Result<(usize, f64)> {
    let mut worst = (0, 0.0);
    for i in 0..chi.len() {
        let sigma = 1.0 / op.base_diagonal(i);
        let r = graph.membership_residual(chi[i], xi[i], sigma)?;
        if r > worst.1 {
            worst = (i, r);
        }
    }
    Ok(worst)
}

/// Local prox update of cell `i` given the current iterate.
fn local_update(op: &PhaseOperator<'_>, rhs: &[f64], chi: &[f64], graph: &Graph, i: usize) -> Result<f64> {
    let d = op.base_diagonal(i);
    let z = (rhs[i] + op.coupling * op.a.neighbor_sum(chi, i)) / d;
    graph.prox(z, 1.0 / d)
}

fn projected_sweep(
    op: &PhaseOperator<'_>,
    rhs: &[f64],
    chi: &mut [f64],
    graph: &Graph,
    cfg: &InclusionSolveConfig,
) -> Result<usize> {
    let omega = cfg.sweep_relaxation;
    for v in chi.iter_mut() {
        *v = v.clamp(0.0, graph.lambda_beta());
    }
    let mut last = f64::INFINITY;
    for sweep in 1..=cfg.max_outer {
        let mut max_change = 0.0f64;
        for i in 0..chi.len() {
            let target = local_update(op, rhs, chi, graph, i)?;
            let next = if omega == 1.0 {
                target
            } else if graph.is_interval() {
                let d = op.base_diagonal(i);
                let z = (rhs[i] + op.coupling * op.a.neighbor_sum(chi, i)) / d;
                ((1.0 - omega) * chi[i] + omega * z).clamp(0.0, graph.lambda_beta())
            } else {
                (1.0 - omega) * chi[i] + omega * target
            };
            max_change = max_change.max((next - chi[i]).abs());
            chi[i] = next;
        }
        if max_change <= cfg.sweep_tol {
            last = natural_residual(op, rhs, chi, graph)?;
            if last <= cfg.sweep_tol {
                return Ok(sweep);
            }
        }
    }
    Err(Error::NoConvergence { solver: "projected sweep", iterations: cfg.max_outer, residual: last })
}

/// `max_i |χ_i - prox_{1/d_i}(z_i(χ))|` evaluated Jacobi-style.
fn natural_residual(op: &PhaseOperator<'_>, rhs: &[f64], chi: &[f64], graph: &Graph) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..chi.len() {
        worst = worst.max((local_update(op, rhs, chi, graph, i)? - chi[i]).abs());
    }
    Ok(worst)
}

fn yosida_continuation(
    op: &PhaseOperator<'_>,
    rhs: &[f64],
    chi: &mut [f64],
    graph: &Graph,
    cfg: &InclusionSolveConfig,
    weight: f64,
) -> Result<usize> {
    let n = chi.len();
    let mut lambda = cfg.yosida_lambda_start;
    let mut total = 0;
    let mut jac = PhaseOperator { a: op.a, inv_tau: op.inv_tau, coupling: op.coupling, a_diag: op.a_diag.clone(), extra: vec![0.0; n] };
    let mut residual = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_res = vec![0.0; n];
    let mut delta = vec![0.0; n];

    // The residual is measured as a χ-increment (divided by the Jacobian
    // diagonal), so the stopping test does not become unreachable when the
    // Yosida slope 1/λ amplifies round-off in χ.
    let eval = |x: &[f64], lambda: f64, out: &mut [f64]| -> Result<f64> {
        op.apply_base(x, out);
        let mut worst = 0.0f64;
        for i in 0..x.len() {
            out[i] += graph.yosida(x[i], lambda)? - rhs[i];
            let diag = op.base_diagonal(i) + graph.yosida_derivative(x[i], lambda)?;
            worst = worst.max(out[i].abs() / diag);
        }
        Ok(worst)
    };
    let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();

    loop {
        let mut scaled = eval(chi, lambda, &mut residual)?;
        let mut newton = 0;
        while scaled > cfg.sweep_tol {
            if newton == cfg.max_outer.min(200) {
                return Err(Error::NoConvergence { solver: "yosida newton", iterations: newton, residual: scaled });
            }
            newton += 1;
            for i in 0..n {
                jac.extra[i] = graph.yosida_derivative(chi[i], lambda)?;
            }
            let minus_r: Vec<f64> = residual.iter().map(|r| -r).collect();
            delta.iter_mut().for_each(|d| *d = 0.0);
            pcg(&jac, &minus_r, &mut delta, &YOSIDA_NEWTON_CG, weight)?;

            // Backtracking on the residual norm.
            let base = l2(&residual);
            let mut step = 1.0;
            loop {
                for i in 0..n {
                    trial[i] = chi[i] + step * delta[i];
                }
                let s = eval(&trial, lambda, &mut trial_res)?;
                if l2(&trial_res) <= (1.0 - 1e-4 * step) * base || step < 1e-10 {
                    chi.copy_from_slice(&trial);
                    residual.copy_from_slice(&trial_res);
                    scaled = s;
                    break;
                }
                step *= 0.5;
            }
        }
        total += newton;
        if lambda <= cfg.yosida_lambda_min {
            break;
        }
        lambda = (lambda / 4.0).max(cfg.yosida_lambda_min);
    }
    let lb = graph.lambda_beta();
    for v in chi.iter_mut() {
        *v = v.clamp(0.0, lb);
    }
    if graph.is_interval() {
        total += active_set_polish(op, rhs, chi, lb, weight)?;
    }
    Ok(total)
}

/// The `λ → 0` limit from the Yosida active set. The interval inclusion is
/// solved exactly on the set of cells not pinned to a bound; the set is
/// updated primal-dual style (pin cells that leave `[0, λ_β]`, release
/// pinned cells whose selection has the wrong sign). `chi` is left
/// unchanged if the active set does not settle.
fn active_set_polish(op: &PhaseOperator<'_>, rhs: &[f64], chi: &mut [f64], lb: f64, weight: f64) -> Result<usize> {
    const MAX_UPDATES: usize = 20;
    let n = chi.len();
    // -1: pinned at 0, +1: pinned at λ_β, 0: free.
    let mut pin: Vec<i8> = chi.iter().map(|&c| if c <= 0.0 { -1 } else if c >= lb { 1 } else { 0 }).collect();
    let mut x = chi.to_vec();
    let mut m = vec![0.0; n];
    for update in 1..=MAX_UPDATES {
        let masked = MaskedPhase { op, pin: &pin };
        let bound = |i: usize| if pin[i] < 0 { 0.0 } else { lb };
        // Pinned values move to the right-hand side of the free rows.
        let fixed: Vec<f64> = (0..n).map(|i| if pin[i] != 0 { bound(i) } else { 0.0 }).collect();
        op.apply_base(&fixed, &mut m);
        let b: Vec<f64> = (0..n).map(|i| if pin[i] != 0 { bound(i) } else { rhs[i] - m[i] }).collect();
        pcg(&masked, &b, &mut x, &YOSIDA_NEWTON_CG, weight)?;
        for i in 0..n {
            if pin[i] != 0 {
                x[i] = bound(i);
            }
        }
        op.apply_base(&x, &mut m);
        let mut changed = false;
        for i in 0..n {
            let xi = rhs[i] - m[i];
            let scale = op.base_diagonal(i);
            let next = match pin[i] {
                0 if x[i] < 0.0 => -1,
                0 if x[i] > lb => 1,
                -1 if xi > 1e-12 * scale => 0,
                1 if xi < -1e-12 * scale => 0,
                keep => keep,
            };
            if next != pin[i] {
                pin[i] = next;
                changed = true;
            }
        }
        if !changed {
            chi.copy_from_slice(&x);
            return Ok(update);
        }
    }
    Ok(MAX_UPDATES)
}

/// `[M_FF 0; 0 I]` for the free/pinned split of the phase operator.
struct MaskedPhase<'a, 'b> {
    op: &'a PhaseOperator<'b>,
    pin: &'a [i8],
}

impl SymmetricOperator for MaskedPhase<'_, '_> {
    fn len(&self) -> usize {
        self.pin.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let free: Vec<f64> = x.iter().zip(self.pin).map(|(&v, &p)| if p == 0 { v } else { 0.0 }).collect();
        self.op.apply_base(&free, y);
        for i in 0..x.len() {
            if self.pin[i] != 0 {
                y[i] = x[i];
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| if self.pin[i] == 0 { self.op.base_diagonal(i) } else { 1.0 }).collect()
    }
}
