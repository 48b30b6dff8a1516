//! The networked linear system and its structural checks.
//!
//! Agent indices are zero-based everywhere in the library. The scenario
//! format and human-readable reports use one-based labels.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::numerics::{
    Covariance, DiagonalPsd, GaussianLaw, NumericsError, SpdMatrix, SquareMatrix,
};

/// Default cap on the number of agents.
pub const MAX_AGENTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{path}: dimension mismatch (expected {expected}, found {found})")]
    DimMismatch {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {source}")]
    Numerics {
        path: String,
        #[source]
        source: NumericsError,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ModelError {
    pub fn path(&self) -> &str {
        match self {
            ModelError::DimMismatch { path, .. }
            | ModelError::Numerics { path, .. }
            | ModelError::Invalid { path, .. } => path,
        }
    }

    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn numerics(path: impl Into<String>, source: NumericsError) -> Self {
        ModelError::Numerics {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the field path, e.g. `process_noise` → `model.process_noise`.
    pub fn nested(self, prefix: &str) -> Self {
        let join = |p: String| if p.is_empty() { prefix.to_string() } else { format!("{prefix}.{p}") };
        match self {
            ModelError::DimMismatch { path, expected, found } => ModelError::DimMismatch {
                path: join(path),
                expected,
                found,
            },
            ModelError::Numerics { path, source } => ModelError::Numerics { path: join(path), source },
            ModelError::Invalid { path, message } => ModelError::Invalid { path: join(path), message },
        }
    }
}

/// A list of validation failures, reported together.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ModelError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Law of the initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Dirac(Vec<f64>),
    Gaussian(GaussianLaw),
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Dirac(p) => p.len(),
            InitialLaw::Gaussian(g) => g.dim(),
        }
    }
}

/// Unvalidated model description, as read from a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n_agents: usize,
    pub dynamics: Vec<Vec<f64>>,
    pub actuator_gains: Vec<f64>,
    pub process_noise: Vec<Vec<f64>>,
    pub excitation: Vec<f64>,
    pub initial: InitialSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Dirac(Vec<f64>),
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

/// Networked CPS `x_{t+1} = A x_t + diag(b) u_t + w_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpsModel {
    n_agents: usize,
    dynamics: SquareMatrix,
    actuator_gains: Vec<f64>,
    process_noise: SpdMatrix,
    excitation: DiagonalPsd,
    initial: InitialLaw,
}

impl CpsModel {
    pub fn new(
        dynamics: SquareMatrix,
        actuator_gains: Vec<f64>,
        process_noise: SpdMatrix,
        excitation: DiagonalPsd,
        initial: InitialLaw,
    ) -> Result<Self, ValidationErrors> {
        let n = dynamics.dim();
        let mut errors = Vec::new();
        let mut check = |path: &str, found: usize| {
            if found != n {
                errors.push(ModelError::DimMismatch {
                    path: path.to_string(),
                    expected: n,
                    found,
                });
            }
        };
        check("actuator_gains", actuator_gains.len());
        check("process_noise", process_noise.dim());
        check("excitation", excitation.dim());
        check("initial", initial.dim());
        if let Some(i) = actuator_gains.iter().position(|b| !b.is_finite()) {
            errors.push(ModelError::numerics("actuator_gains", NumericsError::NonFinite { index: i }));
        }
        if let InitialLaw::Dirac(p) = &initial {
            if let Some(i) = p.iter().position(|v| !v.is_finite()) {
                errors.push(ModelError::numerics("initial.point", NumericsError::NonFinite { index: i }));
            }
        }
        if n > MAX_AGENTS {
            errors.push(ModelError::invalid(
                "n_agents",
                format!("{n} agents exceeds the limit of {MAX_AGENTS}"),
            ));
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        Ok(Self {
            n_agents: n,
            dynamics,
            actuator_gains,
            process_noise,
            excitation,
            initial,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn dynamics(&self) -> &SquareMatrix {
        &self.dynamics
    }

    pub fn actuator_gains(&self) -> &[f64] {
        &self.actuator_gains
    }

    pub fn process_noise(&self) -> &SpdMatrix {
        &self.process_noise
    }

    pub fn excitation(&self) -> &DiagonalPsd {
        &self.excitation
    }

    pub fn initial(&self) -> &InitialLaw {
        &self.initial
    }

    /// Same system with a different excitation covariance.
    pub fn with_excitation(&self, excitation: DiagonalPsd) -> Result<Self, ValidationErrors> {
        Self::new(
            self.dynamics.clone(),
            self.actuator_gains.clone(),
            self.process_noise.clone(),
            excitation,
            self.initial.clone(),
        )
    }
}

/// Checks a raw model description and reports every violation found.
pub fn validate_model(spec: &ModelSpec) -> Result<CpsModel, ValidationErrors> {
    let n = spec.n_agents;
    let mut errors = Vec::new();
    if n == 0 {
        errors.push(ModelError::invalid("n_agents", "must be positive"));
        return Err(ValidationErrors(errors));
    }

    let matrix = |path: &str, rows: &[Vec<f64>], errors: &mut Vec<ModelError>| -> Option<SquareMatrix> {
        if rows.len() != n {
            errors.push(ModelError::DimMismatch {
                path: path.to_string(),
                expected: n,
                found: rows.len(),
            });
            return None;
        }
        match SquareMatrix::from_rows(rows) {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(ModelError::numerics(path, e));
                None
            }
        }
    };

    let dynamics = matrix("dynamics", &spec.dynamics, &mut errors);
    let process_noise = matrix("process_noise", &spec.process_noise, &mut errors)
        .and_then(|m| match SpdMatrix::new(m) {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(ModelError::numerics("process_noise", e));
                None
            }
        });
    let excitation = if spec.excitation.len() != n {
        errors.push(ModelError::DimMismatch {
            path: "excitation".into(),
            expected: n,
            found: spec.excitation.len(),
        });
        None
    } else {
        match DiagonalPsd::new(spec.excitation.clone()) {
            Ok(d) => Some(d),
            Err(e) => {
                errors.push(ModelError::numerics("excitation", e));
                None
            }
        }
    };
    if spec.actuator_gains.len() != n {
        errors.push(ModelError::DimMismatch {
            path: "actuator_gains".into(),
            expected: n,
            found: spec.actuator_gains.len(),
        });
    } else if let Some(i) = spec.actuator_gains.iter().position(|b| !b.is_finite()) {
        errors.push(ModelError::numerics("actuator_gains", NumericsError::NonFinite { index: i }));
    }
    let initial = match &spec.initial {
        InitialSpec::Dirac(p) => {
            if p.len() != n {
                errors.push(ModelError::DimMismatch {
                    path: "initial.point".into(),
                    expected: n,
                    found: p.len(),
                });
                None
            } else if let Some(i) = p.iter().position(|v| !v.is_finite()) {
                errors.push(ModelError::numerics("initial.point", NumericsError::NonFinite { index: i }));
                None
            } else {
                Some(InitialLaw::Dirac(p.clone()))
            }
        }
        InitialSpec::Gaussian { mean, cov } => {
            let cov = matrix("initial.cov", cov, &mut errors).and_then(|m| match SpdMatrix::new(m) {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(ModelError::numerics("initial.cov", e));
                    None
                }
            });
            if mean.len() != n {
                errors.push(ModelError::DimMismatch {
                    path: "initial.mean".into(),
                    expected: n,
                    found: mean.len(),
                });
                None
            } else {
                cov.and_then(|c| match GaussianLaw::new(mean.clone(), Covariance::Full(c)) {
                    Ok(g) => Some(InitialLaw::Gaussian(g)),
                    Err(e) => {
                        errors.push(ModelError::numerics("initial.mean", e));
                        None
                    }
                })
            }
        }
    };
    if n > MAX_AGENTS {
        errors.push(ModelError::invalid(
            "n_agents",
            format!("{n} agents exceeds the limit of {MAX_AGENTS}"),
        ));
    }
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    CpsModel::new(
        dynamics.expect("checked"),
        spec.actuator_gains.clone(),
        process_noise.expect("checked"),
        excitation.expect("checked"),
        initial.expect("checked"),
    )
}

/// The set of hijacked actuators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackConfig {
    malicious: Vec<usize>,
}

impl AttackConfig {
    /// `malicious` holds zero-based agent indices in strictly increasing
    /// order. Every listed agent must have a nonzero actuator gain and at
    /// least one agent must remain honest.
    pub fn new(model: &CpsModel, malicious: Vec<usize>) -> Result<Self, ModelError> {
        let path = "malicious_set";
        if malicious.is_empty() {
            return Err(ModelError::invalid(path, "must name at least one actuator"));
        }
        if malicious.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::invalid(path, "indices must be distinct and strictly increasing"));
        }
        let n = model.n_agents();
        if let Some(&i) = malicious.iter().find(|&&i| i >= n) {
            return Err(ModelError::invalid(path, format!("agent {} does not exist", i + 1)));
        }
        if malicious.len() >= n {
            return Err(ModelError::invalid(path, "at least one actuator must stay honest"));
        }
        if let Some(&i) = malicious.iter().find(|&&i| model.actuator_gains()[i] == 0.0) {
            return Err(ModelError::invalid(
                path,
                format!("agent {} has no actuator (zero gain)", i + 1),
            ));
        }
        Ok(Self { malicious })
    }

    /// Builds from one-based agent labels.
    pub fn from_labels(model: &CpsModel, labels: &[usize]) -> Result<Self, ModelError> {
        if labels.contains(&0) {
            return Err(ModelError::invalid("malicious_set", "agent labels start at 1"));
        }
        Self::new(model, labels.iter().map(|l| l - 1).collect())
    }

    pub fn malicious(&self) -> &[usize] {
        &self.malicious
    }

    pub fn malicious_count(&self) -> usize {
        self.malicious.len()
    }

    pub fn is_malicious(&self, agent: usize) -> bool {
        self.malicious.binary_search(&agent).is_ok()
    }

    /// Position of `agent` inside the malicious list.
    pub fn channel_of(&self, agent: usize) -> Option<usize> {
        self.malicious.binary_search(&agent).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceReport {
    pub holds: bool,
    /// Zero-based indices of agents no honest actuator can reach.
    pub unreachable: Vec<usize>,
}

/// Structural honest-influence check.
///
/// Edge `j → i` exists whenever `a_ij` is stored as a nonzero (`i ≠ j`).
/// Sources are honest agents with a nonzero actuator gain. With no attack
/// every actuated agent is a source.
pub fn honest_influence_check(model: &CpsModel, attack: Option<&AttackConfig>) -> InfluenceReport {
    let n = model.n_agents();
    let a = model.dynamics();
    let mut reached = vec![false; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        let honest = attack.map_or(true, |cfg| !cfg.is_malicious(i));
        if honest && model.actuator_gains()[i] != 0.0 {
            reached[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for i in 0..n {
            if !reached[i] && i != j && a.get(i, j) != 0.0 {
                reached[i] = true;
                queue.push_back(i);
            }
        }
    }
    let unreachable: Vec<usize> = (0..n).filter(|&i| !reached[i]).collect();
    InfluenceReport {
        holds: unreachable.is_empty(),
        unreachable,
    }
}

/// Dense rectangular block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Block {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// The model with malicious agents moved to the leading positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedModel {
    /// `permutation[k]` is the original index of the agent at position `k`.
    pub permutation: Vec<usize>,
    pub dynamics: SquareMatrix,
    pub gains_malicious: Vec<f64>,
    pub gains_honest: Vec<f64>,
    pub excitation_malicious: Vec<f64>,
    pub excitation_honest: Vec<f64>,
    pub noise_11: Block,
    pub noise_12: Block,
    pub noise_21: Block,
    pub noise_22: Block,
}

pub fn partition(model: &CpsModel, attack: &AttackConfig) -> PartitionedModel {
    let n = model.n_agents();
    let m = attack.malicious_count();
    let permutation: Vec<usize> = attack
        .malicious()
        .iter()
        .copied()
        .chain((0..n).filter(|i| !attack.is_malicious(*i)))
        .collect();
    let a = model.dynamics();
    let mut dynamics = SquareMatrix::zeros(n);
    for (r, &pi) in permutation.iter().enumerate() {
        for (c, &pj) in permutation.iter().enumerate() {
            dynamics.set(r, c, a.get(pi, pj));
        }
    }
    let pick = |v: &[f64], range: std::ops::Range<usize>| -> Vec<f64> {
        permutation[range].iter().map(|&i| v[i]).collect()
    };
    let w = model.process_noise().matrix();
    let block = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for r in rows.clone() {
            for c in cols.clone() {
                data.push(w.get(permutation[r], permutation[c]));
            }
        }
        Block {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    };
    let b = model.actuator_gains();
    let ve = model.excitation().diag();
    PartitionedModel {
        gains_malicious: pick(b, 0..m),
        gains_honest: pick(b, m..n),
        excitation_malicious: pick(ve, 0..m),
        excitation_honest: pick(ve, m..n),
        noise_11: block(0..m, 0..m),
        noise_12: block(0..m, m..n),
        noise_21: block(m..n, 0..m),
        noise_22: block(m..n, m..n),
        dynamics,
        permutation,
    }
}

/// `(A, b, V_w, V_e diagonal)` in the original agent order.
pub type Reassembled = (SquareMatrix, Vec<f64>, SquareMatrix, Vec<f64>);

impl PartitionedModel {
    pub fn malicious_count(&self) -> usize {
        self.gains_malicious.len()
    }

    /// Undoes the permutation.
    pub fn reassemble(&self) -> Reassembled {
        let n = self.permutation.len();
        let m = self.malicious_count();
        let mut a = SquareMatrix::zeros(n);
        let mut w = SquareMatrix::zeros(n);
        let mut b = vec![0.0; n];
        let mut ve = vec![0.0; n];
        for r in 0..n {
            let pr = self.permutation[r];
            if r < m {
                b[pr] = self.gains_malicious[r];
                ve[pr] = self.excitation_malicious[r];
            } else {
                b[pr] = self.gains_honest[r - m];
                ve[pr] = self.excitation_honest[r - m];
            }
            for c in 0..n {
                let pc = self.permutation[c];
                a.set(pr, pc, self.dynamics.get(r, c));
                let v = match (r < m, c < m) {
                    (true, true) => self.noise_11.get(r, c),
                    (true, false) => self.noise_12.get(r, c - m),
                    (false, true) => self.noise_21.get(r - m, c),
                    (false, false) => self.noise_22.get(r - m, c - m),
                };
                w.set(pr, pc, v);
            }
        }
        (a, b, w, ve)
    }
}
