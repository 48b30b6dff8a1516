//! Scenario files, presets and batch runs.

pub mod presets;
pub mod run;
pub mod scenario;

pub use presets::{preset, preset_json, PRESET_NAMES};
pub use run::{
    detect_run, detect_summary, run_mdp, run_montecarlo, run_seed, HarnessError, MdpRunSummary, RunOptions,
    RunRecord, RunSummary,
};
pub use scenario::{load_mdp_scenario, load_scenario, Issue, LoadError, MdpScenario, Scenario};

/// Environment variable that replaces `seeds.base` when set.
pub const SEED_ENV: &str = "CPS_SENTINEL_SEED";

/// Parses a seed override; `None` when unset or empty.
pub fn seed_override(value: Option<&str>) -> Result<Option<u64>, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|e| format!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer: {e}")),
    }
}
