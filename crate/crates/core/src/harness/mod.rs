//! Experiment orchestration: configuration, the SC1–SC3 scenarios, repeated
//! runs and summary reports.

mod config;
mod experiment;
mod format;
mod report;
mod scenario;

pub use config::{default_attack_grid, ExperimentConfig};
pub use experiment::{
    run_experiment, run_experiment_with, ExperimentResult, ResultRow, RESULTS_HEADER, TIMINGS_HEADER,
};
pub use format::{fmt_sig, round_sig};
pub use report::{emit_report, summarize, RatioRow, ReportFormat, Summary, SummaryRow, RATIOS_HEADER, SUMMARY_HEADER};
pub use scenario::{
    AttackedDefended, AttackedUndefended, CleanUndefended, RepContext, Scenario, ScenarioId, ScenarioRegistry,
};

/// Worker count from `BEAMSEC_THREADS`, capped at the available parallelism.
/// Unset, empty or unparsable values mean "use all cores".
pub fn worker_threads() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("BEAMSEC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(available, |n| n.min(available))
}
