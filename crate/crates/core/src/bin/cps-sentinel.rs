use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cps_sentinel::harness::run::{check_influence, write_file};
use cps_sentinel::harness::scenario::AnyScenarioFile;
use cps_sentinel::harness::{
    detect_run, detect_summary, preset_json, run_mdp, run_montecarlo, run_seed, seed_override, HarnessError,
    LoadError, MdpScenario, RunOptions, Scenario, PRESET_NAMES, SEED_ENV,
};
use cps_sentinel::simulator::simulate;

/// Attack-detection experiments on networked linear-Gaussian systems.
#[derive(Parser)]
#[command(name = "cps-sentinel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario and report honest-actuator reach.
    Check { scenario: PathBuf },
    /// Write one trajectory CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write one DetectionSeries CSV and print its summary.
    Detect {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every seed and write per-run CSVs plus summary.json.
    Montecarlo {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        /// Run even if some agent is out of honest reach.
        #[arg(long)]
        override_assumption2: bool,
    },
    /// Run the finite-MDP testbed.
    Mdp {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
    },
    /// Print a built-in scenario.
    Preset {
        name: String,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    horizon: Option<usize>,
    /// Decision threshold on log L_n.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// Output directory; defaults to the scenario's `outputs`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Batch {
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads (1 runs serially).
    #[arg(long)]
    jobs: Option<usize>,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Refused { .. } => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Prints a line to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Reads either scenario format; MDP files are the ones with a `kernel`.
fn read_any(path: &Path) -> Result<AnyScenarioFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let parse_err = |e: serde_json::Error| Failure::Invalid(format!("parse error: {e}"));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    if value.get("kernel").is_some() {
        serde_json::from_value(value).map(AnyScenarioFile::Mdp).map_err(parse_err)
    } else {
        serde_json::from_value(value).map(AnyScenarioFile::Cps).map_err(parse_err)
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    seed_override(std::env::var(SEED_ENV).ok().as_deref()).map_err(Failure::Invalid)
}

fn validate_overrides(common: &Common, seeds: Option<usize>) -> Result<(), Failure> {
    if common.horizon == Some(0) {
        return Err(Failure::Invalid("--horizon must be positive".into()));
    }
    if common.threshold.is_some_and(|t| !t.is_finite()) {
        return Err(Failure::Invalid("--threshold must be finite".into()));
    }
    if seeds == Some(0) {
        return Err(Failure::Invalid("--seeds must be at least 1".into()));
    }
    Ok(())
}

fn load_cps(path: &Path, common: &Common, seeds: Option<usize>) -> Result<Scenario, Failure> {
    validate_overrides(common, seeds)?;
    let mut s = cps_sentinel::harness::load_scenario(path)?;
    if let Some(h) = common.horizon {
        s.horizon = h;
    }
    if let Some(t) = common.threshold {
        s.threshold = t;
    }
    if let Some(c) = seeds {
        s.seeds.count = c;
    }
    if let Some(base) = env_seed()? {
        s.seeds.base = base;
    }
    if let Some(out) = &common.out {
        s.outputs = out.clone();
    }
    Ok(s)
}

fn load_mdp(path: &Path, common: &Common, seeds: Option<usize>) -> Result<MdpScenario, Failure> {
    validate_overrides(common, seeds)?;
    let mut s = cps_sentinel::harness::load_mdp_scenario(path)?;
    if let Some(h) = common.horizon {
        s.horizon = h;
    }
    if let Some(t) = common.threshold {
        s.threshold = t;
    }
    if let Some(c) = seeds {
        s.seeds.count = c;
    }
    if let Some(base) = env_seed()? {
        s.seeds.base = base;
    }
    if let Some(out) = &common.out {
        s.outputs = out.clone();
    }
    Ok(s)
}

fn warn_influence(s: &Scenario) {
    if s.attack.is_some() {
        let report = check_influence(s);
        if !report.holds {
            let agents: Vec<usize> = report.unreachable.iter().map(|i| i + 1).collect();
            eprintln!("warning: honest actuators cannot reach agent(s) {agents:?}");
        }
    }
}

fn check(path: &Path) -> Result<(), Failure> {
    let report = match read_any(path)? {
        AnyScenarioFile::Cps(file) => {
            let s = file.validate().map_err(LoadError::Invalid)?;
            let influence = check_influence(&s);
            json!({
                "scenario": s.name,
                "kind": "cps",
                "valid": true,
                "n_agents": s.model.n_agents(),
                "attacked": s.attack.as_ref().map(|a| a.config().malicious().iter().map(|i| i + 1).collect::<Vec<_>>()),
                "influence_holds": influence.holds,
                "unreachable": influence.unreachable.iter().map(|i| i + 1).collect::<Vec<_>>(),
            })
        }
        AnyScenarioFile::Mdp(file) => {
            let s = file.validate().map_err(LoadError::Invalid)?;
            json!({
                "scenario": s.name,
                "kind": "mdp",
                "valid": true,
                "n_states": s.mdp.n_states(),
                "n_actions": s.mdp.n_actions(),
            })
        }
    };
    emit(&serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { scenario } => check(&scenario),
        Command::Simulate { scenario, seed, common } => {
            let s = load_cps(&scenario, &common, None)?;
            warn_influence(&s);
            let seed = seed.unwrap_or_else(|| run_seed(s.seeds.base, 0));
            let traj = simulate(&s.model, &s.honest, s.attack.as_ref(), s.horizon, seed).map_err(runtime)?;
            let path = s.outputs.join(format!("trajectory_seed{seed}.csv"));
            write_file(&path, |w| traj.write_csv(w))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Detect { scenario, seed, common } => {
            let s = load_cps(&scenario, &common, None)?;
            warn_influence(&s);
            let seed = seed.unwrap_or_else(|| run_seed(s.seeds.base, 0));
            let (_, series) = detect_run(&s, seed).map_err(runtime)?;
            let summary = detect_summary(&s, &series, seed).map_err(runtime)?;
            let json = serde_json::to_string_pretty(&summary).expect("json");
            let csv = s.outputs.join(format!("detection_seed{seed}.csv"));
            write_file(&csv, |w| series.write_csv(w))?;
            write_file(&s.outputs.join(format!("detect_seed{seed}.json")), |w| {
                use std::io::Write;
                writeln!(w, "{json}")
            })?;
            emit(&json);
            Ok(())
        }
        Command::Montecarlo {
            scenario,
            common,
            batch,
            override_assumption2,
        } => {
            let s = load_cps(&scenario, &common, batch.seeds)?;
            let opts = RunOptions {
                jobs: batch.jobs,
                override_assumption2,
            };
            if override_assumption2 {
                warn_influence(&s);
            }
            let summary = run_montecarlo(&s, opts, Some(&s.outputs))?;
            emit(&summary.to_json());
            match summary.failures() {
                0 => Ok(()),
                k => Err(Failure::Runtime(format!("{k} run(s) failed; see runs.csv"))),
            }
        }
        Command::Mdp { scenario, common, batch } => {
            let s = load_mdp(&scenario, &common, batch.seeds)?;
            let opts = RunOptions {
                jobs: batch.jobs,
                override_assumption2: false,
            };
            let summary = run_mdp(&s, opts, Some(&s.outputs))?;
            emit(&summary.to_json());
            match summary.records.iter().filter(|r| r.error.is_some()).count() {
                0 => Ok(()),
                k => Err(Failure::Runtime(format!("{k} run(s) failed; see runs.csv"))),
            }
        }
        Command::Preset { name, out } => {
            let json = preset_json(&name).ok_or_else(|| {
                Failure::Invalid(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
            })?;
            match out {
                Some(path) => write_file(&path, |w| {
                    use std::io::Write;
                    writeln!(w, "{json}")
                })?,
                None => emit(&json),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
