use super::LinearSolveConfig;
use crate::discretization::{Field, SymmetricOperator};
use crate::error::{Error, Result};

/// Solution of a linear solve with its iteration statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOutcome {
    pub solution: Field,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients on fields.
///
/// Residuals are measured in the cell-volume weighted L² norm.
pub fn cg_solve(
    op: &dyn SymmetricOperator,
    rhs: &Field,
    cfg: &LinearSolveConfig,
    initial: Option<&Field>,
) -> Result<LinearOutcome> {
    if op.len() != rhs.len() {
        return Err(Error::GridMismatch { expected: op.len(), actual: rhs.len() });
    }
    let grid = *rhs.grid();
    let mut x = match initial {
        Some(x0) => {
            rhs.same_grid(x0)?;
            x0.values().to_vec()
        }
        None => vec![0.0; rhs.len()],
    };
    let (iterations, residual) = pcg(op, rhs.values(), &mut x, cfg, grid.cell_volume())?;
    Ok(LinearOutcome { solution: Field::new(grid, x)?, iterations, residual })
}

/// Slice-level PCG used by the Newton solvers. `weight` is the inner
/// product weight (the cell volume). Returns iterations and final residual.
pub fn pcg(
    op: &dyn SymmetricOperator,
    b: &[f64],
    x: &mut [f64],
    cfg: &LinearSolveConfig,
    weight: f64,
) -> Result<(usize, f64)> {
    let n = b.len();
    let norm = |v: &[f64]| (weight * v.iter().map(|a| a * a).sum::<f64>()).sqrt();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();

    let b_norm = norm(b);
    let target = cfg.tol_abs.max(cfg.tol_rel * b_norm);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0, 0.0));
    }

    let inv_diag: Vec<f64> = op.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    op.apply_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut res = norm(&r);
    if res <= target {
        return Ok((0, res));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for it in 1..=cfg.max_iter {
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { solver: "cg (indefinite operator)", iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r);
        if res <= target {
            // Replace the recursive residual by the true one before accepting.
            op.apply_into(x, &mut ap);
            let true_res = norm(&ap.iter().zip(b).map(|(a, bi)| bi - a).collect::<Vec<_>>());
            if true_res <= target {
                return Ok((it, true_res));
            }
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            res = true_res;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { solver: "cg", iterations: cfg.max_iter, residual: res })
}
