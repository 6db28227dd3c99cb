//! Scenario harness: configuration, orchestration, and reports. This is the
//! only surface a human touches; everything it writes (CSV tables, field
//! dumps, summaries) is meant for offline study.

pub mod config;
pub mod report;
pub mod run;

pub use config::{
    builtin_config, builtin_names, builtin_text, parse_config, render_config, ConfigInvalid,
    ScenarioConfig,
};
pub use report::{
    read_checks_csv, read_field_dump, read_measures_csv, write_field_dump, CheckResult,
    ConvergenceRow, MeasureRow,
};
pub use run::{run_scenario, run_sweep, HarnessError, ScenarioReport, SweepReport};

/// Loads a config from a builtin name or a file path.
pub fn load_config(source: &str) -> Result<ScenarioConfig, HarnessError> {
    if let Some(cfg) = builtin_config(source) {
        return Ok(cfg);
    }
    let text = std::fs::read_to_string(source).map_err(HarnessError::Io)?;
    Ok(parse_config(&text)?)
}

/// Applies the MCT_THREADS cap to the global worker pool. Call once at
/// startup; errors (pool already built) are ignored.
pub fn init_threads() {
    if let Ok(v) = std::env::var("MCT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}
