//! The four subcommands. Each returns its process exit code.

use std::path::{Path, PathBuf};

use hydride_core::config::parse_config;
use hydride_core::diagnostics::mms::{case, mms_run};
use hydride_core::diagnostics::{cauchy_differences, check_uniform_in_tau, positivity_report, refinement_runs};
use hydride_core::discretization::io::Snapshot;
use hydride_core::timestepper::{RunConfig, Scheme, State};
use hydride_core::{Error, Result};

use crate::manifest::{Manifest, EXIT_CONFIG};

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn output_dir(out: Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(cfg.map_or("out", |c| c.output.dir.as_str())))
}

/// Writes `files` (relative path, contents) under `dir`.
fn write_files(dir: &Path, files: &[(PathBuf, String)]) -> std::io::Result<()> {
    for (rel, contents) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, contents)?;
    }
    Ok(())
}

/// Writes the manifest (and `files`) and reports the outcome on stderr.
fn finish(dir: &Path, manifest: &Manifest, files: &[(PathBuf, String)], code: u8) -> u8 {
    let written = write_files(dir, files).and_then(|_| manifest.write(dir));
    if let Err(e) = written {
        eprintln!("error: cannot write artifacts to {}: {e}", dir.display());
        return if code == 0 { EXIT_CONFIG } else { code };
    }
    code
}

/// Loads the configuration or records a configuration failure.
fn config_or_fail(path: &Path, out: &Option<PathBuf>, manifest: &mut Manifest) -> std::result::Result<RunConfig, u8> {
    load_config(path).map_err(|e| {
        eprintln!("error: {e}");
        let code = manifest.fail(&e, None);
        finish(&output_dir(out.clone(), None), manifest, &[], code)
    })
}

pub fn run(config: &Path, out: Option<PathBuf>) -> u8 {
    let mut manifest = Manifest::new("run", config);
    let cfg = match config_or_fail(config, &out, &mut manifest) {
        Ok(c) => c,
        Err(code) => return code,
    };
    manifest.describe(&cfg);
    let dir = output_dir(out, Some(&cfg));
    let tau = cfg.tau();

    let outcome = Scheme::new(&cfg).and_then(|s| s.initial_fields().map(|f| (s, f)));
    let (scheme, (theta0, chi0, p0)) = match outcome {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            let code = manifest.fail(&e, None);
            return finish(&dir, &manifest, &[], code);
        }
    };
    let regularized = p0.values().iter().filter(|&&p| p < tau).count();
    manifest.set("p0_regularized_cells", regularized);
    if regularized > 0 {
        manifest.set("p0_regularization", format!("p0 raised to tau = {tau:e} on {regularized} cells"));
    }

    match scheme.run(&theta0, &chi0, &p0) {
        Err(failure) => {
            eprintln!("error at step {}: {}", failure.step, failure.error);
            let code = manifest.fail(&failure.error, Some(failure.step));
            let ledger = failure.partial.ledger.to_csv_string();
            finish(&dir, &manifest, &[(PathBuf::from("ledger.csv"), ledger)], code)
        }
        Ok(output) => {
            let rows = output.ledger.rows();
            let mass = rows.iter().map(|r| r.mass_balance_residual).fold(0.0, f64::max);
            let newton = rows.iter().map(|r| r.newton_iters).max().unwrap_or(0);
            let min_theta = rows.iter().map(|r| r.min_theta).fold(f64::INFINITY, f64::min);
            manifest.set("max_mass_balance_residual", format!("{mass:e}"));
            manifest.set("max_newton_iters", newton);
            manifest.set("min_theta", format!("{min_theta:e}"));
            let positive = min_theta > 0.0;
            manifest.set("temperature_positive", positive);
            if !positive {
                manifest.set("finding", "nonpositive temperature observed; see positivity.txt");
            }
            let mut files = vec![
                (PathBuf::from("ledger.csv"), output.ledger.to_csv_string()),
                (PathBuf::from("positivity.txt"), positivity_report(&output.snapshots).to_string()),
            ];
            for s in &output.snapshots {
                files.push((PathBuf::from(format!("snapshots/step_{:06}.txt", s.index)), s.to_snapshot().to_text()));
            }
            let code = match output.ledger.first_violation(10.0 * cfg.linear.tol_rel) {
                Some((step, what)) => {
                    let e = Error::LedgerViolation { what, step };
                    eprintln!("error: {e}");
                    files.truncate(1);
                    manifest.fail(&e, Some(step))
                }
                None => manifest.succeed(),
            };
            if code == 0 {
                println!(
                    "run ok: {} steps, tau = {tau:e}, min Theta = {min_theta:e}, artifacts in {}",
                    cfg.n_steps,
                    dir.display()
                );
            }
            finish(&dir, &manifest, &files, code)
        }
    }
}

fn validate_nested(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 2 {
        return Err(Error::InvalidParameter("refinement needs at least two values of N".into()));
    }
    for w in n_list.windows(2) {
        if w[0] == 0 || w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::InvalidParameter(format!("N values must be nested and increasing, got {n_list:?}")));
        }
    }
    Ok(())
}

pub fn refine(config: &Path, n_list: &[usize], out: Option<PathBuf>, factor: f64) -> u8 {
    let mut manifest = Manifest::new("refine", config);
    let cfg = match config_or_fail(config, &out, &mut manifest) {
        Ok(c) => c,
        Err(code) => return code,
    };
    manifest.describe(&cfg);
    manifest.set("n_list", n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    let dir = output_dir(out, Some(&cfg));
    if let Err(e) = validate_nested(n_list).and_then(|_| {
        if factor > 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("uniformity factor must be > 1, got {factor}")))
        }
    }) {
        eprintln!("error: {e}");
        let code = manifest.fail(&e, None);
        return finish(&dir, &manifest, &[], code);
    }

    let outputs = match refinement_runs(&cfg, n_list) {
        Ok(o) => o,
        Err(failure) => {
            eprintln!("error at step {}: {}", failure.step, failure.error);
            let code = manifest.fail(&failure.error, Some(failure.step));
            return finish(&dir, &manifest, &[], code);
        }
    };
    let trajectories: Vec<&[State]> = outputs.iter().map(|o| o.snapshots.as_slice()).collect();
    let cauchy = match cauchy_differences(&trajectories) {
        Ok(c) => c,
        Err(e) => {
            let code = manifest.fail(&e, None);
            return finish(&dir, &manifest, &[], code);
        }
    };
    let ledgers: Vec<_> = outputs.iter().map(|o| &o.ledger).collect();
    let uniform = check_uniform_in_tau(&ledgers, factor);

    let mut files = Vec::new();
    for (n, o) in n_list.iter().zip(&outputs) {
        files.push((PathBuf::from(format!("n_{n}/ledger.csv")), o.ledger.to_csv_string()));
        let last = o.final_state();
        files.push((PathBuf::from(format!("n_{n}/final.txt")), last.to_snapshot().to_text()));
        let min_theta = o.ledger.rows().iter().map(|r| r.min_theta).fold(f64::INFINITY, f64::min);
        manifest.set(&format!("min_theta_n_{n}"), format!("{min_theta:e}"));
    }
    let csv = |w: &dyn Fn(&mut Vec<u8>) -> Result<()>| {
        let mut buf = Vec::new();
        w(&mut buf).map(|_| String::from_utf8(buf).expect("csv is utf-8"))
    };
    let cauchy_csv = csv(&|b| cauchy.to_csv(b));
    let uniform_csv = csv(&|b| uniform.to_csv(b));
    let (cauchy_csv, uniform_csv) = match (cauchy_csv, uniform_csv) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            let code = manifest.fail(&e, None);
            return finish(&dir, &manifest, &[], code);
        }
    };
    files.push((PathBuf::from("cauchy.txt"), cauchy.to_string()));
    files.push((PathBuf::from("cauchy.csv"), cauchy_csv));
    files.push((PathBuf::from("uniformity.txt"), uniform.to_string()));
    files.push((PathBuf::from("uniformity.csv"), uniform_csv));
    manifest.set("cauchy_decreasing", cauchy.passed());
    manifest.set("uniform_in_tau", uniform.passed());
    if !uniform.passed() {
        manifest.set("finding", format!("uniformity violated for {:?}", uniform.violations()));
    }
    print!("{cauchy}{uniform}");
    let code = manifest.succeed();
    finish(&dir, &manifest, &files, code)
}

pub fn mms(config: &Path, case_name: &str, out: Option<PathBuf>) -> u8 {
    let mut manifest = Manifest::new("mms", config);
    let cfg = match config_or_fail(config, &out, &mut manifest) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = output_dir(out, Some(&cfg));
    manifest.set("case", case_name);
    let result = case(case_name).and_then(|c| {
        // The case fixes the dimension; the configuration provides the base
        // resolution (first axis) and the time discretization.
        let run_cfg = c.adapt_config(&cfg)?;
        if run_cfg.grid != cfg.grid {
            let n = run_cfg.grid.cells_per_axis()[0];
            manifest.set("grid_adapted", format!("{}-dimensional unit box, {n} cells per axis", c.dim));
        }
        manifest.describe(&run_cfg);
        mms_run(&c, &run_cfg)
    });
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            let code = manifest.fail(&e, None);
            finish(&dir, &manifest, &[], code)
        }
        Ok(report) => {
            let mut buf = Vec::new();
            if let Err(e) = report.to_csv(&mut buf) {
                let code = manifest.fail(&e, None);
                return finish(&dir, &manifest, &[], code);
            }
            manifest.set("spatial_min_order", format!("{:.4}", report.spatial.min_order()));
            manifest.set("temporal_min_order", format!("{:.4}", report.temporal.min_order()));
            manifest.set("orders_passed", report.passed());
            print!("{report}");
            let files = [
                (PathBuf::from("mms.txt"), report.to_string()),
                (PathBuf::from("mms.csv"), String::from_utf8(buf).expect("csv is utf-8")),
            ];
            let code = manifest.succeed();
            finish(&dir, &manifest, &files, code)
        }
    }
}

pub fn check(snapshot: &Path, lambda_beta: f64) -> u8 {
    let loaded = std::fs::read_to_string(snapshot)
        .map_err(|e| Error::Io(format!("{}: {e}", snapshot.display())))
        .and_then(|text| Snapshot::from_text(&text))
        .and_then(|snap| State::from_snapshot(&snap));
    let state = match loaded {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match state.check_invariants(lambda_beta) {
        Ok(()) => {
            println!("snapshot step {} satisfies the state invariants", state.index);
            0
        }
        Err(e) => {
            eprintln!("invariant violation: {e}");
            crate::manifest::exit_code(&e)
        }
    }
}
