//! JSON scenario files.
//!
//! Matrices are row-major arrays of rows. Every statistical parameter is
//! explicit; unknown fields are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::mdp::{FiniteMdp, MdpError, StochasticPolicy};
use crate::model::{validate_model, AttackConfig, CpsModel, InitialSpec, ModelSpec};
use crate::numerics::SquareMatrix;
use crate::policies::{Attack, CorruptChannel, CorruptPolicy, FdiOffset, GainSchedule, HonestPolicy, ReplacementMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub base: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_agents: usize,
    pub dynamics: Vec<Vec<f64>>,
    pub actuator_gains: Vec<f64>,
    pub process_noise: Vec<Vec<f64>>,
    pub excitation: Vec<f64>,
    pub initial: InitialFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialFile {
    Dirac { point: Vec<f64> },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HonestFile {
    Zero,
    Linear { gain: Vec<Vec<f64>> },
    /// One gain per step; the last one is held afterwards.
    Scheduled { gains: Vec<Vec<Vec<f64>>> },
    Affine { gain: Vec<Vec<f64>>, offset: Vec<f64> },
    Window { lag_gains: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReplacementFile {
    Constant { value: f64 },
    ScaledState { gain: f64 },
    SignFlip,
    WindowState { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelFile {
    Replacement { map: ReplacementFile },
    Fdi { offset: f64 },
    FdiSequence { offsets: Vec<f64> },
    Dos,
    Mimic { variance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackFile {
    /// One-based agent labels.
    pub malicious: Vec<usize>,
    /// One entry per malicious agent, in the same order.
    pub channels: Vec<ChannelFile>,
}

/// A linear-Gaussian experiment as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub model: ModelFile,
    pub honest: HonestFile,
    pub attack: Option<AttackFile>,
    pub horizon: usize,
    pub seeds: SeedSpec,
    pub threshold: f64,
    pub outputs: PathBuf,
}

/// A finite-MDP experiment as stored on disk. Paths are sampled under the
/// corrupt policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpScenarioFile {
    pub name: String,
    /// `kernel[u][x][x′]`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
    pub honest: StochasticPolicy,
    pub corrupt: StochasticPolicy,
    pub horizon: usize,
    pub seeds: SeedSpec,
    pub threshold: f64,
    pub outputs: PathBuf,
}

/// Either file format, told apart by its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyScenarioFile {
    Cps(ScenarioFile),
    Mdp(MdpScenarioFile),
}

/// One problem found while checking a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug)]
pub enum LoadError {
    Io { path: PathBuf, source: std::io::Error },
    Parse(serde_json::Error),
    Invalid(Vec<Issue>),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            LoadError::Parse(e) => write!(f, "parse error: {e}"),
            LoadError::Invalid(issues) => {
                write!(f, "{} validation error(s)", issues.len())?;
                for issue in issues {
                    write!(f, "\n  {issue}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

/// A validated linear-Gaussian experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: CpsModel,
    pub honest: HonestPolicy,
    pub attack: Option<Attack>,
    pub horizon: usize,
    pub seeds: SeedSpec,
    pub threshold: f64,
    pub outputs: PathBuf,
}

/// A validated finite-MDP experiment.
#[derive(Debug, Clone)]
pub struct MdpScenario {
    pub name: String,
    pub mdp: FiniteMdp,
    pub honest: StochasticPolicy,
    pub corrupt: StochasticPolicy,
    pub horizon: usize,
    pub seeds: SeedSpec,
    pub threshold: f64,
    pub outputs: PathBuf,
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue {
        path: path.into(),
        message: message.into(),
    }
}

/// Files the error under `path`, dropping the error's own path prefix.
fn from_error(path: &str, err: &dyn fmt::Display) -> Issue {
    let text = err.to_string();
    let message = text
        .split_once(": ")
        .map_or(text.as_str(), |(_, rest)| rest)
        .to_string();
    issue(path, message)
}

fn square(path: &str, rows: &[Vec<f64>], n: usize, issues: &mut Vec<Issue>) -> Option<SquareMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        issues.push(issue(path, format!("expected a {n}x{n} matrix")));
        return None;
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        issues.push(issue(path, "entries must be finite"));
        return None;
    }
    SquareMatrix::from_rows(rows).ok()
}

fn check_run_fields(horizon: usize, seeds: &SeedSpec, threshold: f64, issues: &mut Vec<Issue>) {
    if horizon == 0 {
        issues.push(issue("horizon", "must be positive"));
    }
    if seeds.count == 0 {
        issues.push(issue("seeds.count", "must be at least 1"));
    }
    if !threshold.is_finite() {
        issues.push(issue("threshold", "must be finite"));
    }
}

impl HonestFile {
    fn build(&self, n: usize, issues: &mut Vec<Issue>) -> Option<HonestPolicy> {
        let gains = |path: &str, list: &[Vec<Vec<f64>>], issues: &mut Vec<Issue>| {
            if list.is_empty() {
                issues.push(issue(path, "must hold at least one matrix"));
                return None;
            }
            let built: Vec<_> = list
                .iter()
                .enumerate()
                .map(|(i, g)| square(&format!("{path}[{i}]"), g, n, issues))
                .collect();
            built.into_iter().collect::<Option<Vec<_>>>()
        };
        match self {
            HonestFile::Zero => Some(HonestPolicy::Zero),
            HonestFile::Linear { gain } => {
                square("honest.gain", gain, n, issues).map(|k| HonestPolicy::Linear(GainSchedule::Stationary(k)))
            }
            HonestFile::Scheduled { gains: list } => {
                gains("honest.gains", list, issues).map(|ks| HonestPolicy::Linear(GainSchedule::PerStep(ks)))
            }
            HonestFile::Affine { gain, offset } => {
                let k = square("honest.gain", gain, n, issues);
                if offset.len() != n {
                    issues.push(issue("honest.offset", format!("expected {n} entries, found {}", offset.len())));
                    return None;
                }
                if offset.iter().any(|v| !v.is_finite()) {
                    issues.push(issue("honest.offset", "entries must be finite"));
                    return None;
                }
                k.map(|k| HonestPolicy::Affine {
                    gain: GainSchedule::Stationary(k),
                    offset: offset.clone(),
                })
            }
            HonestFile::Window { lag_gains } => {
                gains("honest.lag_gains", lag_gains, issues).map(|lag_gains| HonestPolicy::Window { lag_gains })
            }
        }
    }

    /// Inverse of `build` for the policies a file can express.
    pub fn from_policy(policy: &HonestPolicy) -> Option<Self> {
        Some(match policy {
            HonestPolicy::Zero => HonestFile::Zero,
            HonestPolicy::Linear(GainSchedule::Stationary(k)) => HonestFile::Linear { gain: k.to_rows() },
            HonestPolicy::Linear(GainSchedule::PerStep(ks)) => HonestFile::Scheduled {
                gains: ks.iter().map(SquareMatrix::to_rows).collect(),
            },
            HonestPolicy::Affine {
                gain: GainSchedule::Stationary(k),
                offset,
            } => HonestFile::Affine {
                gain: k.to_rows(),
                offset: offset.clone(),
            },
            HonestPolicy::Affine { .. } => return None,
            HonestPolicy::Window { lag_gains } => HonestFile::Window {
                lag_gains: lag_gains.iter().map(SquareMatrix::to_rows).collect(),
            },
        })
    }
}

impl ChannelFile {
    pub fn to_channel(&self) -> CorruptChannel {
        match self {
            ChannelFile::Replacement { map } => CorruptChannel::Replacement(match map {
                ReplacementFile::Constant { value } => ReplacementMap::Constant(*value),
                ReplacementFile::ScaledState { gain } => ReplacementMap::ScaledState(*gain),
                ReplacementFile::SignFlip => ReplacementMap::SignFlip,
                ReplacementFile::WindowState { coefficients } => ReplacementMap::WindowState(coefficients.clone()),
            }),
            ChannelFile::Fdi { offset } => CorruptChannel::Fdi(FdiOffset::Constant(*offset)),
            ChannelFile::FdiSequence { offsets } => CorruptChannel::Fdi(FdiOffset::Sequence(offsets.clone())),
            ChannelFile::Dos => CorruptChannel::Dos,
            ChannelFile::Mimic { variance } => CorruptChannel::Mimic { variance: *variance },
        }
    }
}

impl ModelFile {
    fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            n_agents: self.n_agents,
            dynamics: self.dynamics.clone(),
            actuator_gains: self.actuator_gains.clone(),
            process_noise: self.process_noise.clone(),
            excitation: self.excitation.clone(),
            initial: match &self.initial {
                InitialFile::Dirac { point } => InitialSpec::Dirac(point.clone()),
                InitialFile::Gaussian { mean, cov } => InitialSpec::Gaussian {
                    mean: mean.clone(),
                    cov: cov.clone(),
                },
            },
        }
    }
}

impl ScenarioFile {
    /// Checks every nested part and reports all problems at once.
    pub fn validate(&self) -> Result<Scenario, Vec<Issue>> {
        let mut issues = Vec::new();
        let model = match validate_model(&self.model.to_spec()) {
            Ok(m) => Some(m),
            Err(errs) => {
                for e in errs.0 {
                    let e = e.nested("model");
                    issues.push(from_error(e.path(), &e));
                }
                None
            }
        };
        let n = self.model.n_agents;
        let honest = self.honest.build(n, &mut issues);
        if let Some(h) = &honest {
            if let Err(e) = h.validate(n) {
                issues.push(from_error(e.path(), &e));
            }
        }
        let attack = match (&self.attack, &model) {
            (Some(file), Some(model)) => build_attack(file, model, &mut issues),
            _ => None,
        };
        check_run_fields(self.horizon, &self.seeds, self.threshold, &mut issues);
        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(Scenario {
            name: self.name.clone(),
            model: model.expect("checked"),
            honest: honest.expect("checked"),
            attack,
            horizon: self.horizon,
            seeds: self.seeds.clone(),
            threshold: self.threshold,
            outputs: self.outputs.clone(),
        })
    }
}

fn build_attack(file: &AttackFile, model: &CpsModel, issues: &mut Vec<Issue>) -> Option<Attack> {
    let config = match AttackConfig::from_labels(model, &file.malicious) {
        Ok(c) => c,
        Err(e) => {
            issues.push(from_error("attack.malicious", &e));
            return None;
        }
    };
    let policy = CorruptPolicy {
        channels: file.channels.iter().map(ChannelFile::to_channel).collect(),
    };
    match Attack::new(config, policy) {
        Ok(a) => Some(a),
        Err(e) => {
            issues.push(from_error(e.path(), &e));
            None
        }
    }
}

impl MdpScenarioFile {
    pub fn validate(&self) -> Result<MdpScenario, Vec<Issue>> {
        let mut issues = Vec::new();
        let mdp = match FiniteMdp::new(self.kernel.clone(), self.initial.clone()) {
            Ok(m) => Some(m),
            Err(e) => {
                issues.push(mdp_issue("", e));
                None
            }
        };
        if let Some(mdp) = &mdp {
            for (name, policy) in [("honest", &self.honest), ("corrupt", &self.corrupt)] {
                if let Err(e) = policy.validate(mdp) {
                    issues.push(mdp_issue(name, e));
                }
            }
        }
        check_run_fields(self.horizon, &self.seeds, self.threshold, &mut issues);
        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(MdpScenario {
            name: self.name.clone(),
            mdp: mdp.expect("checked"),
            honest: self.honest.clone(),
            corrupt: self.corrupt.clone(),
            horizon: self.horizon,
            seeds: self.seeds.clone(),
            threshold: self.threshold,
            outputs: self.outputs.clone(),
        })
    }
}

fn mdp_issue(prefix: &str, err: MdpError) -> Issue {
    match err {
        MdpError::Invalid { path, message } => {
            let path = match path.strip_prefix("policy") {
                Some(rest) if !prefix.is_empty() => format!("{prefix}{rest}"),
                _ => path,
            };
            issue(path, message)
        }
        other => issue(prefix, other.to_string()),
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(LoadError::Parse)?;
    file.validate().map_err(LoadError::Invalid)
}

pub fn parse_mdp_scenario(text: &str) -> Result<MdpScenario, LoadError> {
    let file: MdpScenarioFile = serde_json::from_str(text).map_err(LoadError::Parse)?;
    file.validate().map_err(LoadError::Invalid)
}

/// Reads and validates a linear-Gaussian scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    parse_scenario(&read(path)?)
}

pub fn load_mdp_scenario(path: &Path) -> Result<MdpScenario, LoadError> {
    parse_mdp_scenario(&read(path)?)
}
