//! Runtime monitors of the discrete structure: the per-step ledger,
//! refinement studies, positivity tracking and the manufactured-solution
//! harness.

mod ledger;
pub mod mms;
mod studies;

pub use ledger::{DiagnosticsLedger, LedgerRow, LEDGER_COLUMNS};
pub use studies::{
    cauchy_differences, check_uniform_in_tau, positivity_report, refinement_runs, tau_cauchy_study, CauchyReport,
    CauchyRow, PositivityFlag, PositivityReport, UniformityReport, UniformityRow, DEFAULT_UNIFORMITY_FACTOR,
};
