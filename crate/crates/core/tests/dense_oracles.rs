//! Dense-matrix oracles for the discrete operators and linear solvers.

use hydride_core::discretization::{Field, Grid, OperatorA, OperatorB, SymmetricOperator};
use hydride_core::solvers::{cg_solve, solve_pressure, LinearSolveConfig, PressureOperator};
use nalgebra::{DMatrix, DVector};

fn assemble(op: &dyn SymmetricOperator) -> DMatrix<f64> {
    let n = op.len();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

fn grids() -> Vec<Grid> {
    vec![
        Grid::uniform_box(1, &[7], &[1.3]).unwrap(),
        Grid::uniform_box(2, &[4, 5], &[1.0, 0.7]).unwrap(),
        Grid::uniform_box(3, &[3, 4, 2], &[1.0, 1.0, 0.5]).unwrap(),
    ]
}

#[test]
fn a_is_symmetric_semidefinite_with_constant_kernel() {
    for g in grids() {
        let a = OperatorA::new(g);
        let m = assemble(&a);
        assert!((&m - m.transpose()).amax() < 1e-12 * m.amax());
        let eig = m.clone().symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-9 * m.amax());
        assert!(ev[1] > 1e-6, "kernel must be one-dimensional: {ev:?}");
        let ones = DVector::from_element(g.cell_count(), 1.0);
        assert!((&m * ones).amax() < 1e-12 * m.amax());
        let diag: Vec<f64> = a.diagonal();
        for (i, d) in diag.iter().enumerate() {
            assert!((d - m[(i, i)]).abs() < 1e-12 * m.amax());
        }
    }
}

#[test]
fn b_is_symmetric_positive_definite() {
    for g in grids() {
        for gamma in [1e-3, 1.0, 7.5] {
            let b = OperatorB::new(g, gamma);
            let m = assemble(&b);
            assert!((&m - m.transpose()).amax() < 1e-12 * m.amax());
            assert!(m.clone().cholesky().is_some());
            // Off-diagonal entries are nonpositive: an M-matrix.
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if i != j {
                        assert!(m[(i, j)] <= 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn cg_matches_dense_factorization_on_4_cubed() {
    let g = Grid::uniform_box(3, &[4, 4, 4], &[1.0, 1.0, 1.0]).unwrap();
    let b = OperatorB::new(g, 0.8);
    let chi = Field::from_fn(g, |x| 0.5 + 0.3 * (3.0 * x[0]).sin() * x[1]);
    let op = PressureOperator::new(&b, &chi, 0.05);
    let rhs = Field::from_fn(g, |x| 1.0 + x[0] * x[2] - 0.5 * x[1]);
    let cfg = LinearSolveConfig::default();
    let cg = cg_solve(&op, &rhs, &cfg, None).unwrap();
    let dense = assemble(&op).lu().solve(&DVector::from_column_slice(rhs.values())).unwrap();
    let err = cg.solution.values().iter().zip(dense.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "max deviation {err:e}");

    let plain = cg_solve(&b, &rhs, &cfg, None).unwrap();
    let dense_b = assemble(&b).lu().solve(&DVector::from_column_slice(rhs.values())).unwrap();
    let err = plain.solution.values().iter().zip(dense_b.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "max deviation {err:e}");
}

#[test]
fn cg_trivial_cases() {
    let g = Grid::uniform_box(2, &[5, 5], &[1.0, 1.0]).unwrap();
    let b = OperatorB::new(g, 1.0);
    let zero = cg_solve(&b, &Field::zeros(g), &LinearSolveConfig::default(), None).unwrap();
    assert!(zero.solution.values().iter().all(|&v| v == 0.0));

    struct Identity(usize);
    impl SymmetricOperator for Identity {
        fn len(&self) -> usize {
            self.0
        }
        fn apply_into(&self, x: &[f64], y: &mut [f64]) {
            y.copy_from_slice(x);
        }
        fn diagonal(&self) -> Vec<f64> {
            vec![1.0; self.0]
        }
    }
    let rhs = Field::from_fn(g, |x| x[0] - 2.0 * x[1]);
    let out = cg_solve(&Identity(25), &rhs, &LinearSolveConfig::default(), None).unwrap();
    assert!(out.iterations <= 1);
    assert_eq!(out.solution, rhs);
}

#[test]
fn pressure_single_cell_closed_form() {
    let g = Grid::new(1, &[1], &[1.0]).unwrap();
    let b = OperatorB::new(g, 1.0);
    let zero = Field::zeros(g);
    let p_prev = Field::constant(g, 3.3);
    let out = solve_pressure(&p_prev, &zero, &zero, 1.0, &b, &LinearSolveConfig::default(), None).unwrap();
    assert!((out.solution.values()[0] - 1.1).abs() < 1e-12);
}

#[test]
fn neumann_operator_is_second_order() {
    // (I + A) u = (1 + |k|²) cos(k·x) with exact solution cos(k·x).
    let errs: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&n| {
            let g = Grid::uniform_box(2, &[n, n], &[1.0, 2.0]).unwrap();
            let k = [std::f64::consts::PI, std::f64::consts::PI];
            let exact = |x: [f64; 3]| (k[0] * x[0]).cos() * (k[1] * x[1] / 2.0).cos();
            let lam = 1.0 + k[0] * k[0] + k[1] * k[1] / 4.0;
            let a = OperatorA::new(g);
            struct Shifted<'a>(&'a OperatorA);
            impl SymmetricOperator for Shifted<'_> {
                fn len(&self) -> usize {
                    self.0.len()
                }
                fn apply_into(&self, x: &[f64], y: &mut [f64]) {
                    self.0.apply_into(x, y);
                    for (yi, xi) in y.iter_mut().zip(x) {
                        *yi += xi;
                    }
                }
                fn diagonal(&self) -> Vec<f64> {
                    self.0.diagonal().into_iter().map(|d| d + 1.0).collect()
                }
            }
            let rhs = Field::from_fn(g, |x| lam * exact(x));
            let cfg = LinearSolveConfig { tol_rel: 1e-13, ..Default::default() };
            let u = cg_solve(&Shifted(&a), &rhs, &cfg, None).unwrap().solution;
            let e = u.zip_map(&Field::from_fn(g, exact), |a, b| a - b).unwrap();
            hydride_core::discretization::l2_norm(&e)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.9, "order {order} from {errs:?}");
    }
}
