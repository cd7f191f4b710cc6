//! Plain-text run manifest: `key = value` lines followed by the fully
//! resolved configuration.

use std::fmt::Write as _;
use std::path::Path;

use hydride_core::config::emit_config;
use hydride_core::timestepper::RunConfig;
use hydride_core::Error;

/// Environment variable reserved for seeding future stochastic initial
/// data. The deterministic core does not read it; its value is recorded.
pub const SEED_VAR: &str = "HYDRIDE_SEED";

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_INVARIANT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

pub fn exit_code(e: &Error) -> u8 {
    if e.is_invariant_violation() {
        EXIT_INVARIANT
    } else if e.is_solver_failure() {
        EXIT_SOLVER
    } else {
        EXIT_CONFIG
    }
}

pub fn status_name(code: u8) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_CONFIG => "config_error",
        EXIT_INVARIANT => "invariant_violation",
        _ => "solver_failure",
    }
}

pub struct Manifest {
    entries: Vec<(String, String)>,
    config: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, config_path: &Path) -> Self {
        let mut m = Self { entries: Vec::new(), config: None };
        m.set("command", command);
        m.set("config_file", config_path.display());
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set(SEED_VAR, std::env::var(SEED_VAR).unwrap_or_else(|_| "unset".into()));
        m
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        let value = value.to_string().replace('\n', " | ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    /// Records the admissibility constants and discretization of `cfg`
    /// and appends the resolved configuration.
    pub fn describe(&mut self, cfg: &RunConfig) {
        if let Ok(model) = cfg.model() {
            let adm = model.psi.admissibility();
            self.set("c_h", format!("{:e}", adm.c_h));
            self.set("c_h_prime", format!("{:e}", adm.c_h_prime));
            self.set("c_s", format!("{:e}", adm.c_s));
        }
        self.set("lambda_beta", cfg.lambda_beta);
        self.set("tau", format!("{:e}", cfg.tau()));
        self.set("n_steps", cfg.n_steps);
        self.set("cells", cfg.grid.cell_count());
        self.set("inclusion_strategy", cfg.inclusion.strategy.name());
        self.config = Some(emit_config(cfg));
    }

    pub fn fail(&mut self, error: &Error, step: Option<usize>) -> u8 {
        let code = exit_code(error);
        self.set("status", status_name(code));
        self.set("exit_code", code);
        self.set("error", error);
        if let Some(step) = step {
            self.set("failed_step", step);
        }
        code
    }

    pub fn succeed(&mut self) -> u8 {
        self.set("status", status_name(EXIT_OK));
        self.set("exit_code", EXIT_OK);
        EXIT_OK
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# hydride run manifest\n");
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        if let Some(cfg) = &self.config {
            out.push_str("\n# resolved configuration\n");
            out.push_str(cfg);
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("manifest.txt"), self.render())
    }
}
