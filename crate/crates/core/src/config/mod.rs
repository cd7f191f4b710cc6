//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [model]
//! lambda_beta = 1
//! [grid]
//! dim = 1
//! cells = 32
//! lengths = 1
//! [time]
//! T = 1
//! N = 64
//! [initial_data]
//! theta = trig base=1 amp=0.2 modes=1
//! chi = constant value=0.5
//! p = constant value=1
//! ```
//!
//! `[grid]` takes either `lengths` or `spacing`. Every section is optional
//! and every key has a default; unknown sections and keys are errors.

mod profiles;

pub use profiles::{InitialData, Profile};

use std::fmt::Write as _;

use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::model::{certify_h, HFunction, DEFAULT_CERTIFY_SAMPLES};
use crate::solvers::InclusionStrategy;
use crate::timestepper::RunConfig;

/// Where and how often artifacts are written.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), snapshot_every: 16 }
    }
}

const SECTIONS: [&str; 6] = ["model", "grid", "time", "solvers", "initial_data", "output"];

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn parse_error(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Parse { line, key: key.to_string(), message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut section: Option<String> = None;
    let mut entries: Vec<Entry> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_error(line, content, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_error(line, name, "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_error(line, content, "expected `key = value`"))?;
        let key = key.trim();
        let section = section.clone().ok_or_else(|| parse_error(line, key, "key outside of a section"))?;
        if entries.iter().any(|e| e.section == section && e.key == key) {
            return Err(parse_error(line, key, "duplicate key"));
        }
        entries.push(Entry { line, section, key: key.to_string(), value: value.trim().to_string() });
    }
    Ok(entries)
}

fn real(e: &Entry) -> Result<f64> {
    let v: f64 = e.value.parse().map_err(|_| parse_error(e.line, &e.key, format!("expected a real, got `{}`", e.value)))?;
    if !v.is_finite() {
        return Err(parse_error(e.line, &e.key, "value must be finite"));
    }
    Ok(v)
}

fn integer(e: &Entry) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| parse_error(e.line, &e.key, format!("expected a nonnegative integer, got `{}`", e.value)))
}

fn list<T: std::str::FromStr>(e: &Entry) -> Result<Vec<T>> {
    e.value
        .split(',')
        .map(|s| s.trim().parse::<T>())
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|_| parse_error(e.line, &e.key, format!("malformed list `{}`", e.value)))
}

/// Parses and validates a configuration. `h` is certified here, so an
/// inadmissible `lambda_beta * c_h'` aborts before anything is solved.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = tokenize(text)?;
    let mut cfg = RunConfig::new(Grid::uniform_box(1, &[32], &[1.0])?);
    let mut h = (cfg.h.c1(), cfg.h.c2(), cfg.h.theta_star(), cfg.h.theta_star_star());
    let mut dim = 1usize;
    let mut cells: Vec<usize> = vec![32];
    let mut lengths: Option<Vec<f64>> = None;
    let mut spacing: Option<Vec<f64>> = None;
    let mut h_line = 0;
    let mut grid_line = 0;

    for e in &entries {
        let p = &mut cfg.params;
        match (e.section.as_str(), e.key.as_str()) {
            ("model", "a") => p.a = real(e)?,
            ("model", "b") => p.b = real(e)?,
            ("model", "c_p") => p.c_p = real(e)?,
            ("model", "lambda") => p.lambda_diff = real(e)?,
            ("model", "k0") => p.k0 = real(e)?,
            ("model", "delta") => p.delta = real(e)?,
            ("model", "mu") => p.mu = real(e)?,
            ("model", "nu") => p.nu = real(e)?,
            ("model", "gamma") => p.gamma = real(e)?,
            ("model", "c1") => (h.0, h_line) = (real(e)?, e.line),
            ("model", "c2") => (h.1, h_line) = (real(e)?, e.line),
            ("model", "theta_star") => (h.2, h_line) = (real(e)?, e.line),
            ("model", "theta_star_star") => (h.3, h_line) = (real(e)?, e.line),
            ("model", "lambda_beta") => (cfg.lambda_beta, h_line) = (real(e)?, e.line),
            ("grid", "dim") => (dim, grid_line) = (integer(e)?, e.line),
            ("grid", "cells") => (cells, grid_line) = (list(e)?, e.line),
            ("grid", "lengths") => (lengths, grid_line) = (Some(list(e)?), e.line),
            ("grid", "spacing") => (spacing, grid_line) = (Some(list(e)?), e.line),
            ("time", "T") => cfg.t_final = real(e)?,
            ("time", "N") => cfg.n_steps = integer(e)?,
            ("solvers", "cg_tol_rel") => cfg.linear.tol_rel = real(e)?,
            ("solvers", "cg_tol_abs") => cfg.linear.tol_abs = real(e)?,
            ("solvers", "cg_max_iter") => cfg.linear.max_iter = integer(e)?,
            ("solvers", "inclusion") => {
                cfg.inclusion.strategy = InclusionStrategy::from_name(&e.value)
                    .ok_or_else(|| parse_error(e.line, &e.key, "expected `projected_sweep` or `yosida`"))?
            }
            ("solvers", "sweep_tol") => cfg.inclusion.sweep_tol = real(e)?,
            ("solvers", "sweep_relaxation") => cfg.inclusion.sweep_relaxation = real(e)?,
            ("solvers", "yosida_lambda_start") => cfg.inclusion.yosida_lambda_start = real(e)?,
            ("solvers", "yosida_lambda_min") => cfg.inclusion.yosida_lambda_min = real(e)?,
            ("solvers", "max_outer") => cfg.inclusion.max_outer = integer(e)?,
            ("solvers", "newton_tol") => cfg.newton_tol = real(e)?,
            ("initial_data", "theta") => cfg.initial.theta = Profile::parse(&e.value).map_err(|m| parse_error(e.line, &e.key, m))?,
            ("initial_data", "chi") => cfg.initial.chi = Profile::parse(&e.value).map_err(|m| parse_error(e.line, &e.key, m))?,
            ("initial_data", "p") => cfg.initial.p = Profile::parse(&e.value).map_err(|m| parse_error(e.line, &e.key, m))?,
            ("initial_data", "neumann_tol") => cfg.initial.neumann_tol = real(e)?,
            ("output", "dir") => cfg.output.dir = e.value.clone(),
            ("output", "snapshot_every") => cfg.output.snapshot_every = integer(e)?,
            (_, key) => return Err(parse_error(e.line, key, format!("unknown key in [{}]", e.section))),
        }
    }

    let cells = if cells.len() == 1 && dim > 1 { vec![cells[0]; dim] } else { cells };
    let broadcast = |v: Vec<f64>| if v.len() == 1 && dim > 1 { vec![v[0]; dim] } else { v };
    let grid = match (lengths, spacing) {
        (Some(_), Some(_)) => return Err(parse_error(grid_line, "spacing", "give either `lengths` or `spacing`")),
        (_, Some(h)) => Grid::new(dim, &cells, &broadcast(h)),
        (l, None) => Grid::uniform_box(dim, &cells, &broadcast(l.unwrap_or_else(|| vec![1.0]))),
    };
    cfg.grid = grid.map_err(|e| parse_error(grid_line, "grid", e.to_string()))?;
    cfg.h = HFunction::new(h.0, h.1, h.2, h.3).map_err(|e| parse_error(h_line, "h", e.to_string()))?;
    cfg.validate()?;
    // Surfaces the offending lambda_beta * c_h' product.
    certify_h(&cfg.h, cfg.lambda_beta, DEFAULT_CERTIFY_SAMPLES)?;
    cfg.initial.validate(&cfg.grid, cfg.lambda_beta)?;
    Ok(cfg)
}

/// Serializes a configuration so that `parse_config(emit_config(c)) == c`.
pub fn emit_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let p = &cfg.params;
    let join_f = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let join_u = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    writeln!(s, "[model]").unwrap();
    for (k, v) in [
        ("a", p.a),
        ("b", p.b),
        ("c_p", p.c_p),
        ("lambda", p.lambda_diff),
        ("k0", p.k0),
        ("delta", p.delta),
        ("mu", p.mu),
        ("nu", p.nu),
        ("gamma", p.gamma),
        ("c1", cfg.h.c1()),
        ("c2", cfg.h.c2()),
        ("theta_star", cfg.h.theta_star()),
        ("theta_star_star", cfg.h.theta_star_star()),
        ("lambda_beta", cfg.lambda_beta),
    ] {
        writeln!(s, "{k} = {v}").unwrap();
    }
    writeln!(s, "\n[grid]\ndim = {}", cfg.grid.dim()).unwrap();
    writeln!(s, "cells = {}", join_u(cfg.grid.cells_per_axis())).unwrap();
    writeln!(s, "spacing = {}", join_f(cfg.grid.spacing())).unwrap();
    writeln!(s, "\n[time]\nT = {}\nN = {}", cfg.t_final, cfg.n_steps).unwrap();
    let l = &cfg.linear;
    let i = &cfg.inclusion;
    writeln!(s, "\n[solvers]").unwrap();
    writeln!(s, "cg_tol_rel = {}\ncg_tol_abs = {}\ncg_max_iter = {}", l.tol_rel, l.tol_abs, l.max_iter).unwrap();
    writeln!(s, "inclusion = {}", i.strategy.name()).unwrap();
    writeln!(s, "sweep_tol = {}\nsweep_relaxation = {}", i.sweep_tol, i.sweep_relaxation).unwrap();
    writeln!(s, "yosida_lambda_start = {}\nyosida_lambda_min = {}", i.yosida_lambda_start, i.yosida_lambda_min).unwrap();
    writeln!(s, "max_outer = {}\nnewton_tol = {}", i.max_outer, cfg.newton_tol).unwrap();
    writeln!(s, "\n[initial_data]").unwrap();
    writeln!(s, "theta = {}\nchi = {}\np = {}", cfg.initial.theta, cfg.initial.chi, cfg.initial.p).unwrap();
    writeln!(s, "neumann_tol = {}", cfg.initial.neumann_tol).unwrap();
    writeln!(s, "\n[output]\ndir = {}\nsnapshot_every = {}", cfg.output.dir, cfg.output.snapshot_every).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_config_uses_normalized_constants() {
        let cfg = parse_config("").unwrap();
        let p = cfg.params;
        for v in [p.a, p.b, p.c_p, p.lambda_diff, p.k0, p.delta, p.mu, p.gamma] {
            assert_eq!(v, 1.0);
        }
        assert_eq!(cfg.lambda_beta, 1.0);
    }

    #[test]
    fn unknown_key_is_named() {
        match parse_config("[model]\nfoo = 1\n") {
            Err(Error::Parse { key, line, .. }) => {
                assert_eq!(key, "foo");
                assert_eq!(line, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("[nope]\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("a = 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("[time]\nN = x\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("[time]\nN = 3\nN = 4\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn admissibility_checked_at_parse_time() {
        match parse_config("[model]\nlambda_beta = 3\n") {
            Err(Error::Admissibility { product, .. }) => assert!(product >= 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_from_config() {
        let cfg = parse_config("[grid]\ndim = 3\ncells = 4\nlengths = 1,2,1\n").unwrap();
        assert_eq!(cfg.grid.cells_per_axis(), &[4, 4, 4]);
        assert_eq!(cfg.grid.spacing()[1], 0.5);
    }

    fn arb_profile() -> impl Strategy<Value = Profile> {
        prop_oneof![
            (0.5f64..2.0).prop_map(|value| Profile::Constant { value }),
            (0.5f64..2.0, 0.0f64..0.3, 1usize..3).prop_map(|(base, amp, k)| Profile::Trig { base, amp, modes: vec![k] }),
        ]
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(
            n in 1usize..200,
            t in 0.1f64..10.0,
            gamma in 0.1f64..5.0,
            nu in 0.0f64..1.0,
            tol in 1e-12f64..1e-6,
            cells in 1usize..40,
            theta in arb_profile(),
            yosida in any::<bool>(),
        ) {
            let text = format!("[grid]\ncells = {cells}\n");
            let mut cfg = parse_config(&text).unwrap();
            cfg.n_steps = n;
            cfg.t_final = t;
            cfg.params.gamma = gamma;
            cfg.params.nu = nu;
            cfg.linear.tol_rel = tol;
            cfg.initial.theta = theta;
            if yosida {
                cfg.inclusion.strategy = InclusionStrategy::YosidaContinuation;
            }
            let back = parse_config(&emit_config(&cfg)).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
