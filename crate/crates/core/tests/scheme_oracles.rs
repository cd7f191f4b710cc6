//! Scalar and closed-form oracles for the constitutive layer, the solvers
//! and whole-step composition.

use hydride_core::config::{InitialData, Profile};
use hydride_core::diagnostics::{check_uniform_in_tau, positivity_report, refinement_runs, DiagnosticsLedger};
use hydride_core::discretization::io::Snapshot;
use hydride_core::discretization::{Field, Grid, OperatorA};
use hydride_core::model::{certify_h, Graph, HFunction, Model, PsiMap};
use hydride_core::solvers::{solve_temperature, temperature_rhs, LinearSolveConfig, TemperatureProblem};
use hydride_core::timestepper::{RunConfig, Scheme, State};
use hydride_core::Error;
use nalgebra::{Matrix5, Vector5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn blend_coefficients_match_dense_five_by_five_solve() {
    for (c1, c2, ts, tss) in [(0.25, 1.0, 1.0, 0.5), (0.1, 2.0, 1.5, 0.2), (0.7, 0.3, 3.0, 2.5)] {
        let h = HFunction::new(c1, c2, ts, tss).unwrap();
        let d: f64 = ts - tss;
        // Rows: value, slope, curvature at θ*; slope, curvature at θ**.
        let m = Matrix5::from_row_slice(&[
            1.0, d, d * d, d.powi(3), d.powi(4),
            0.0, 1.0, 2.0 * d, 3.0 * d * d, 4.0 * d.powi(3),
            0.0, 0.0, 2.0, 6.0 * d, 12.0 * d * d,
            0.0, 1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 2.0, 0.0, 0.0,
        ]);
        let rhs = Vector5::new(c2 - c1 / ts, c1 / (ts * ts), -2.0 * c1 / ts.powi(3), 0.0, 0.0);
        let x = m.lu().solve(&rhs).unwrap();
        let coeffs = h.blend_coeffs();
        for k in 0..5 {
            assert!((coeffs[k] - x[k]).abs() < 1e-12 * (1.0 + x[k].abs()), "coefficient {k}: {} vs {}", coeffs[k], x[k]);
        }
        assert!((h.h_const() - x[0]).abs() < 1e-12);
    }
}

#[test]
fn certified_constants_bound_a_much_denser_sampling() {
    for (c1, ts, tss, lb) in [(0.25, 1.0, 0.5, 1.0), (0.1, 1.5, 0.2, 1.0), (0.05, 1.0, 0.9, 0.5)] {
        let h = HFunction::new(c1, 1.0, ts, tss).unwrap();
        let adm = certify_h(&h, lb, 10_000).unwrap();
        let mut sup_zh2 = 0.0f64;
        let mut sups = [0.0f64; 4];
        for k in 0..=1_000_000 {
            let z = 1e-3 + 20.0 * k as f64 / 1e6;
            let (v, d1, d2) = h.eval(z);
            sup_zh2 = sup_zh2.max((z * d2).abs());
            for (s, x) in sups.iter_mut().zip([v, d1, d2, z * d1]) {
                *s = s.max(x.abs());
            }
        }
        assert!(adm.c_h_prime >= sup_zh2 * (1.0 - 1e-12), "{} < {sup_zh2}", adm.c_h_prime);
        assert!(adm.c_h >= sups.iter().sum::<f64>() * (1.0 - 1e-12));
        assert!((adm.c_s - (1.0 - lb * adm.c_h_prime)).abs() < 1e-15);
    }
}

#[test]
fn default_constants_are_certified_and_unit_c1_is_not() {
    let adm = certify_h(&HFunction::default(), 1.0, 10_000).unwrap();
    assert!(adm.c_s > 0.3);
    let err = certify_h(&HFunction::new(1.0, 1.0, 1.0, 0.5).unwrap(), 1.0, 10_000).unwrap_err();
    assert!(matches!(err, Error::Admissibility { .. }));
}

#[test]
fn temperature_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = Grid::uniform_box(2, &[6, 5], &[1.0, 1.0]).unwrap();
    let a = OperatorA::new(grid);
    let psi = PsiMap::new(HFunction::default(), 1.0, 10_000).unwrap();
    for _ in 0..20 {
        let chi = Field::new(grid, (0..30).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let theta: Vec<f64> = (0..30).map(|_| rng.random_range(0.3..2.0)).collect();
        let dir: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tau = 0.05;
        let problem = TemperatureProblem::new(&a, &psi, &chi, tau, Field::zeros(grid)).unwrap();
        let j = problem.jacobian_apply(&theta, &dir);
        let eps = 1e-6;
        let shift = |s: f64| -> Vec<f64> { theta.iter().zip(&dir).map(|(t, d)| t + s * d).collect() };
        let (rp, rm) = (problem.residual(&shift(eps)), problem.residual(&shift(-eps)));
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * eps)).collect();
        let norm = j.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diff = j.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff <= 1e-6 * norm, "relative mismatch {}", diff / norm);
    }
}

#[test]
fn temperature_single_cell_closed_forms() {
    let grid = Grid::new(1, &[1], &[1.0]).unwrap();
    let a = OperatorA::new(grid);
    let psi = PsiMap::new(HFunction::default(), 1.0, 10_000).unwrap();
    let cfg = LinearSolveConfig::default();
    let one = |v| Field::constant(grid, v);
    // χ = 0: ψ is the identity and Θ = Θ_prev.
    let out = solve_temperature(&one(1.3), &one(0.0), &one(0.0), 0.1, &a, &psi, &cfg, 1e-13, None).unwrap();
    assert!((out.theta.values()[0] - 1.3).abs() < 1e-12);
    // Cold branch with a phase change: Θ = Θ_prev + τ (ΔΧ/τ)².
    let (tau, cp, cn, th) = (0.1, 0.2, 0.25, 0.3);
    let out = solve_temperature(&one(th), &one(cn), &one(cp), tau, &a, &psi, &cfg, 1e-13, None).unwrap();
    let rate: f64 = (cn - cp) / tau;
    let want = th + tau * rate * rate;
    assert!(want < 0.5, "stay on the cold branch");
    assert!((out.theta.values()[0] - want).abs() < 1e-11, "{} vs {want}", out.theta.values()[0]);
    let g = temperature_rhs(&one(th), &one(cn), &one(cp), tau, &psi).unwrap();
    let c0 = HFunction::default().h_const();
    assert!((g.values()[0] - ((th - c0 * cn) / tau + rate * rate)).abs() < 1e-12);
}

fn single_cell_config(length: f64) -> RunConfig {
    RunConfig::new(Grid::new(1, &[1], &[length]).unwrap())
}

#[test]
fn equilibrium_probe() {
    let cfg = single_cell_config(1.0);
    let scheme = Scheme::new(&cfg).unwrap();
    let g = cfg.grid;
    let theta0 = 1.4;
    let p0 = cfg.h.value(theta0).exp();
    let s0 = scheme.init_state(&Field::constant(g, theta0), &Field::constant(g, 0.4), &Field::constant(g, p0)).unwrap();
    let s1 = scheme.step(&s0).unwrap().state;
    assert!((s1.chi.values()[0] - 0.4).abs() < 1e-14);
    assert!(s1.p.values()[0] < p0);
    assert!((s1.theta.values()[0] - theta0).abs() < 1e-12);
    let mut ledger = DiagnosticsLedger::new(scheme.model(), scheme.tau(), &s0);
    let row = ledger.record_step(&s0, &s1, &Default::default());
    assert!(row.dissipation_min.abs() < 1e-20);
    assert!((row.chi_energy - ledger.rows()[0].chi_energy).abs() < 1e-14);
}

#[test]
fn clamped_single_cell_pressure_decays_geometrically() {
    // χ pinned at λ_β (h(θ0) > log p0 keeps τF above λ_β), so Θ is frozen
    // and P follows the scalar recursion P ← P / (1 + τ(1+χ)γ|Γ|/|Ω|).
    let length = 1.5;
    let mut cfg = single_cell_config(length);
    cfg.n_steps = 32;
    cfg.params.gamma = 0.7;
    let scheme = Scheme::new(&cfg).unwrap();
    let g = cfg.grid;
    let (theta0, lb) = (1.2, cfg.lambda_beta);
    let p0 = 0.5 * cfg.h.value(theta0).exp();
    let out = scheme.run(&Field::constant(g, theta0), &Field::constant(g, lb), &Field::constant(g, p0)).unwrap();
    let ratio = 1.0 / (1.0 + cfg.tau() * (1.0 + lb) * cfg.params.gamma * 2.0 / length);
    let mut p = p0;
    for s in &out.snapshots[1..] {
        let k = s.index;
        let want = p0 * ratio.powi(k as i32);
        assert_eq!(s.chi.values()[0], lb);
        assert!((s.theta.values()[0] - theta0).abs() < 1e-12);
        assert!((s.p.values()[0] - want).abs() < 1e-12 * p0, "step {k}");
        p = s.p.values()[0];
    }
    assert!(p < p0);
}

#[test]
fn frozen_phase_heat_step_obeys_maximum_principle() {
    // χ0 = 0 with log p0 far above h(θ) keeps χ clamped at 0, leaving pure
    // diffusion of Θ.
    let grid = Grid::uniform_box(2, &[10, 10], &[1.0, 1.0]).unwrap();
    let cfg = RunConfig {
        n_steps: 20,
        t_final: 0.2,
        initial: InitialData {
            theta: Profile::Trig { base: 1.0, amp: 0.5, modes: vec![1, 2] },
            chi: Profile::Constant { value: 0.0 },
            p: Profile::Constant { value: 1e4 },
            ..InitialData::default()
        },
        ..RunConfig::new(grid)
    };
    let scheme = Scheme::new(&cfg).unwrap();
    let (t, c, p) = scheme.initial_fields().unwrap();
    let lo = t.min();
    let out = scheme.run(&t, &c, &p).unwrap();
    for s in &out.snapshots {
        assert!(s.chi.values().iter().all(|&x| x == 0.0));
        assert!(s.theta.min() >= lo - 1e-12);
    }
    let report = positivity_report(&out.snapshots);
    assert!(report.temperature_positive());
    assert!(report.min_theta >= lo - 1e-12);
}

#[test]
fn positivity_report_flags_nonpositive_cells() {
    let grid = Grid::uniform_box(1, &[4], &[1.0]).unwrap();
    let cfg = RunConfig::new(grid);
    let scheme = Scheme::new(&cfg).unwrap();
    let (t, c, p) = scheme.initial_fields().unwrap();
    let mut s = scheme.init_state(&t, &c, &p).unwrap();
    s.theta.values_mut()[2] = -0.1;
    let report = positivity_report(&[s]);
    assert_eq!(report.flagged.len(), 1);
    assert_eq!(report.flagged[0].cell, 2);
    assert!(report.theta_log_l1[0].1.is_infinite());
}

#[test]
fn ledger_is_recomputable_from_snapshot_files() {
    let grid = Grid::uniform_box(2, &[6, 5], &[1.0, 1.0]).unwrap();
    let mut cfg = RunConfig { n_steps: 6, ..RunConfig::new(grid) };
    cfg.output.snapshot_every = 1;
    let scheme = Scheme::new(&cfg).unwrap();
    let (t, c, p) = scheme.initial_fields().unwrap();
    let out = scheme.run(&t, &c, &p).unwrap();
    let reloaded: Vec<State> = out
        .snapshots
        .iter()
        .map(|s| State::from_snapshot(&Snapshot::from_text(&s.to_snapshot().to_text()).unwrap()).unwrap())
        .collect();
    assert_eq!(reloaded, out.snapshots);
    let replay = DiagnosticsLedger::replay(scheme.model(), scheme.tau(), &reloaded).unwrap();
    assert_eq!(replay.len(), out.ledger.len());
    for (a, b) in replay.rows().iter().zip(out.ledger.rows()) {
        assert!(a.max_relative_difference(b) <= 1e-12);
        assert_eq!(a.phase_bounds_ok, b.phase_bounds_ok);
    }
}

#[test]
fn uniformity_identical_runs_pass_trivially() {
    let grid = Grid::uniform_box(1, &[16], &[1.0]).unwrap();
    let cfg = RunConfig { n_steps: 16, ..RunConfig::new(grid) };
    let outs = refinement_runs(&cfg, &[16, 16]).unwrap();
    let report = check_uniform_in_tau(&[&outs[0].ledger, &outs[1].ledger], 2.0);
    assert!(report.passed());
    assert!(report.rows.iter().all(|r| r.ratio == 1.0));
}

#[test]
fn uniformity_negative_control_with_broken_h() {
    // c_s <= 0 forced past certification: the heat step loses its
    // monotonicity and the refinement family no longer has τ-uniform
    // ledgers (or cannot be computed at all).
    let grid = Grid::uniform_box(1, &[16], &[1.0]).unwrap();
    let h = HFunction::new(1.0, 1.0, 1.0, 0.5).unwrap();
    let lb = 1.0;
    let graph = Graph::interval(lb).unwrap();
    let mut detected = 0;
    let initial = InitialData {
        theta: Profile::Trig { base: 1.2, amp: 0.2, modes: vec![1] },
        chi: Profile::Trig { base: 0.8, amp: 0.15, modes: vec![2] },
        p: Profile::Trig { base: 0.5, amp: 0.3, modes: vec![1] },
        ..InitialData::default()
    };
    let mut ledgers = Vec::new();
    for n in [32, 64, 128] {
        let cfg = RunConfig { n_steps: n, h, initial: initial.clone(), ..RunConfig::new(grid) };
        let model = Model::new_uncertified(cfg.params, h, graph.clone());
        assert!(model.psi.admissibility().c_s <= 0.0);
        let scheme = Scheme::with_model(&cfg, model);
        let (t, c, p) = scheme.initial_fields().unwrap();
        match scheme.run(&t, &c, &p) {
            Ok(out) => ledgers.push(out.ledger),
            Err(_) => detected += 1,
        }
    }
    let refs: Vec<_> = ledgers.iter().collect();
    let report = check_uniform_in_tau(&refs, 2.0);
    assert!(detected > 0 || !report.passed(), "broken h went unnoticed:\n{report}");
}

#[test]
fn uniformity_needs_a_refinement_family() {
    assert!(!check_uniform_in_tau(&[], 2.0).passed());
    assert!(!check_uniform_in_tau(&[&DiagnosticsLedger::empty(), &DiagnosticsLedger::empty()], 2.0).passed());
}

#[test]
fn p0_floor_is_reported() {
    let grid = Grid::uniform_box(1, &[8], &[1.0]).unwrap();
    let cfg = RunConfig {
        n_steps: 4,
        initial: InitialData { p: Profile::Constant { value: 0.0 }, ..InitialData::default() },
        ..RunConfig::new(grid)
    };
    let scheme = Scheme::new(&cfg).unwrap();
    let (t, c, p) = scheme.initial_fields().unwrap();
    let out = scheme.run(&t, &c, &p).unwrap();
    assert_eq!(out.regularized_cells, 8);
    assert!(out.snapshots[0].p.values().iter().all(|&v| v == cfg.tau()));
}
