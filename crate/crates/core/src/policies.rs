//! Honest and corrupt actuator policies.
//!
//! Every policy is a deterministic mean map of the state history. Honest
//! actuators add their private excitation `e_t` on top of the mean; hijacked
//! actuators follow one of the [`CorruptChannel`] behaviours.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{AttackConfig, CpsModel};
use crate::numerics::{SimRng, SquareMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("{path}: dimension mismatch (expected {expected}, found {found})")]
    DimMismatch {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl PolicyError {
    pub fn path(&self) -> &str {
        match self {
            PolicyError::DimMismatch { path, .. } | PolicyError::Invalid { path, .. } => path,
        }
    }
}

/// States `x_0..x_t` observed so far. Never empty.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    states: &'a [Vec<f64>],
}

impl<'a> History<'a> {
    pub fn new(states: &'a [Vec<f64>]) -> Self {
        assert!(!states.is_empty(), "history must contain x_0");
        Self { states }
    }

    pub fn last(&self) -> &'a [f64] {
        &self.states[self.states.len() - 1]
    }

    /// State `lag` steps before the last one, if recorded.
    pub fn lag(&self, lag: usize) -> Option<&'a [f64]> {
        let len = self.states.len();
        (lag < len).then(|| self.states[len - 1 - lag].as_slice())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn states(&self) -> &'a [Vec<f64>] {
        self.states
    }
}

/// Feedback gain, fixed or scheduled per step. A schedule holds its last
/// gain once it runs out.
#[derive(Debug, Clone, PartialEq)]
pub enum GainSchedule {
    Stationary(SquareMatrix),
    PerStep(Vec<SquareMatrix>),
}

impl GainSchedule {
    pub fn at(&self, t: usize) -> &SquareMatrix {
        match self {
            GainSchedule::Stationary(k) => k,
            GainSchedule::PerStep(ks) => &ks[t.min(ks.len() - 1)],
        }
    }

    fn validate(&self, n: usize, path: &str) -> Result<(), PolicyError> {
        let gains: Vec<&SquareMatrix> = match self {
            GainSchedule::Stationary(k) => vec![k],
            GainSchedule::PerStep(ks) if ks.is_empty() => {
                return Err(PolicyError::Invalid {
                    path: path.into(),
                    message: "gain schedule is empty".into(),
                })
            }
            GainSchedule::PerStep(ks) => ks.iter().collect(),
        };
        for k in gains {
            if k.dim() != n {
                return Err(PolicyError::DimMismatch {
                    path: path.into(),
                    expected: n,
                    found: k.dim(),
                });
            }
        }
        Ok(())
    }
}

/// Mean map `g_t` of the honest policy.
#[derive(Debug, Clone, PartialEq)]
pub enum HonestPolicy {
    Zero,
    Linear(GainSchedule),
    Affine { gain: GainSchedule, offset: Vec<f64> },
    /// `Σ_k G_k x_{t-k}`; lags reaching before `x_0` contribute nothing.
    Window { lag_gains: Vec<SquareMatrix> },
}

impl HonestPolicy {
    pub fn validate(&self, n: usize) -> Result<(), PolicyError> {
        match self {
            HonestPolicy::Zero => Ok(()),
            HonestPolicy::Linear(g) => g.validate(n, "honest.gain"),
            HonestPolicy::Affine { gain, offset } => {
                gain.validate(n, "honest.gain")?;
                if offset.len() != n {
                    return Err(PolicyError::DimMismatch {
                        path: "honest.offset".into(),
                        expected: n,
                        found: offset.len(),
                    });
                }
                Ok(())
            }
            HonestPolicy::Window { lag_gains } => {
                if lag_gains.is_empty() {
                    return Err(PolicyError::Invalid {
                        path: "honest.lag_gains".into(),
                        message: "window length must be at least 1".into(),
                    });
                }
                for g in lag_gains {
                    if g.dim() != n {
                        return Err(PolicyError::DimMismatch {
                            path: "honest.lag_gains".into(),
                            expected: n,
                            found: g.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_markov(&self) -> bool {
        !matches!(self, HonestPolicy::Window { lag_gains } if lag_gains.len() > 1)
    }

    /// `(K, c)` such that `g(h) = K x_t + c` for every `t`, when the policy
    /// is stationary and Markov.
    pub fn stationary_affine(&self, n: usize) -> Option<(SquareMatrix, Vec<f64>)> {
        match self {
            HonestPolicy::Zero => Some((SquareMatrix::zeros(n), vec![0.0; n])),
            HonestPolicy::Linear(GainSchedule::Stationary(k)) => Some((k.clone(), vec![0.0; n])),
            HonestPolicy::Affine {
                gain: GainSchedule::Stationary(k),
                offset,
            } => Some((k.clone(), offset.clone())),
            HonestPolicy::Window { lag_gains } if lag_gains.len() == 1 => {
                Some((lag_gains[0].clone(), vec![0.0; n]))
            }
            _ => None,
        }
    }
}

/// `ℓ_t = g_t(h_t)`.
pub fn honest_mean(policy: &HonestPolicy, history: &History<'_>, t: usize) -> Vec<f64> {
    let x = history.last();
    match policy {
        HonestPolicy::Zero => vec![0.0; x.len()],
        HonestPolicy::Linear(gain) => gain.at(t).mul_vec(x),
        HonestPolicy::Affine { gain, offset } => gain
            .at(t)
            .mul_vec(x)
            .into_iter()
            .zip(offset)
            .map(|(a, c)| a + c)
            .collect(),
        HonestPolicy::Window { lag_gains } => {
            let mut out = vec![0.0; x.len()];
            for (lag, g) in lag_gains.iter().enumerate() {
                if let Some(past) = history.lag(lag) {
                    for (o, v) in out.iter_mut().zip(g.mul_vec(past)) {
                        *o += v;
                    }
                }
            }
            out
        }
    }
}

/// User-supplied deterministic corrupt map: `(history, t, agent) -> value`.
pub type CustomMap = Arc<dyn Fn(&History<'_>, usize, usize) -> f64 + Send + Sync>;

/// Deterministic replacement of a hijacked actuator's command.
#[derive(Clone)]
pub enum ReplacementMap {
    Constant(f64),
    /// `k · x_{t,i}` using the agent's own state.
    ScaledState(f64),
    /// The negated honest mean of that actuator.
    SignFlip,
    /// `Σ_k c_k x_{t-k,i}` over the agent's own past states.
    WindowState(Vec<f64>),
    Custom(CustomMap),
}

impl fmt::Debug for ReplacementMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplacementMap::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            ReplacementMap::ScaledState(k) => f.debug_tuple("ScaledState").field(k).finish(),
            ReplacementMap::SignFlip => f.write_str("SignFlip"),
            ReplacementMap::WindowState(c) => f.debug_tuple("WindowState").field(c).finish(),
            ReplacementMap::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// FDI offset `d_t` for one channel. A sequence repeats cyclically.
#[derive(Debug, Clone, PartialEq)]
pub enum FdiOffset {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl FdiOffset {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            FdiOffset::Constant(d) => *d,
            FdiOffset::Sequence(ds) => ds[t % ds.len()],
        }
    }
}

/// Behaviour of one hijacked actuator.
#[derive(Debug, Clone)]
pub enum CorruptChannel {
    /// Sends `ğ(h)` and drops the private excitation.
    Replacement(ReplacementMap),
    /// Keeps the honest command and its excitation, adds `d_t`.
    Fdi(FdiOffset),
    /// Sends nothing.
    Dos,
    /// Honest mean plus self-drawn Gaussian excitation of this variance.
    Mimic { variance: f64 },
}

impl CorruptChannel {
    pub fn tag(&self) -> &'static str {
        match self {
            CorruptChannel::Replacement(_) => "replacement",
            CorruptChannel::Fdi(_) => "fdi",
            CorruptChannel::Dos => "dos",
            CorruptChannel::Mimic { .. } => "mimic",
        }
    }

    /// Variance of the command given the history.
    pub fn command_variance(&self, honest_excitation: f64) -> f64 {
        match self {
            CorruptChannel::Replacement(_) | CorruptChannel::Dos => 0.0,
            CorruptChannel::Fdi(_) => honest_excitation,
            CorruptChannel::Mimic { variance } => *variance,
        }
    }

    /// Mean of the command given the history. `honest` is `g_t^i(h)`.
    pub fn command_mean(&self, history: &History<'_>, t: usize, agent: usize, honest: f64) -> f64 {
        match self {
            CorruptChannel::Replacement(map) => match map {
                ReplacementMap::Constant(c) => *c,
                ReplacementMap::ScaledState(k) => k * history.last()[agent],
                ReplacementMap::SignFlip => -honest,
                ReplacementMap::WindowState(cs) => cs
                    .iter()
                    .enumerate()
                    .filter_map(|(lag, c)| history.lag(lag).map(|x| c * x[agent]))
                    .sum(),
                ReplacementMap::Custom(f) => f(history, t, agent),
            },
            CorruptChannel::Fdi(d) => honest + d.at(t),
            CorruptChannel::Dos => 0.0,
            CorruptChannel::Mimic { .. } => honest,
        }
    }

    /// Affine row `(k, c)` of the stationary command mean `k·x + c`, given
    /// the honest row, when it exists.
    pub fn stationary_affine_row(&self, agent: usize, honest_row: &[f64], honest_offset: f64) -> Option<(Vec<f64>, f64)> {
        let n = honest_row.len();
        match self {
            CorruptChannel::Replacement(ReplacementMap::Constant(c)) => Some((vec![0.0; n], *c)),
            CorruptChannel::Replacement(ReplacementMap::ScaledState(k)) => {
                let mut row = vec![0.0; n];
                row[agent] = *k;
                Some((row, 0.0))
            }
            CorruptChannel::Replacement(ReplacementMap::SignFlip) => {
                Some((honest_row.iter().map(|v| -v).collect(), -honest_offset))
            }
            CorruptChannel::Replacement(ReplacementMap::WindowState(cs)) if cs.len() == 1 => {
                let mut row = vec![0.0; n];
                row[agent] = cs[0];
                Some((row, 0.0))
            }
            CorruptChannel::Replacement(_) => None,
            CorruptChannel::Fdi(FdiOffset::Constant(d)) => Some((honest_row.to_vec(), honest_offset + d)),
            CorruptChannel::Fdi(FdiOffset::Sequence(_)) => None,
            CorruptChannel::Dos => Some((vec![0.0; n], 0.0)),
            CorruptChannel::Mimic { .. } => Some((honest_row.to_vec(), honest_offset)),
        }
    }

    fn is_markov(&self) -> bool {
        !matches!(
            self,
            CorruptChannel::Replacement(ReplacementMap::WindowState(cs)) if cs.len() > 1
        ) && !matches!(self, CorruptChannel::Replacement(ReplacementMap::Custom(_)))
    }
}

/// One behaviour per hijacked actuator, aligned with the malicious set.
#[derive(Debug, Clone)]
pub struct CorruptPolicy {
    pub channels: Vec<CorruptChannel>,
}

/// A hijack: which actuators and what they do.
#[derive(Debug, Clone)]
pub struct Attack {
    config: AttackConfig,
    policy: CorruptPolicy,
}

impl Attack {
    pub fn new(config: AttackConfig, policy: CorruptPolicy) -> Result<Self, PolicyError> {
        if policy.channels.len() != config.malicious_count() {
            return Err(PolicyError::DimMismatch {
                path: "attack.channels".into(),
                expected: config.malicious_count(),
                found: policy.channels.len(),
            });
        }
        for (i, ch) in policy.channels.iter().enumerate() {
            let path = format!("attack.channels[{i}]");
            let bad = |message: &str| PolicyError::Invalid {
                path: path.clone(),
                message: message.into(),
            };
            match ch {
                CorruptChannel::Fdi(FdiOffset::Constant(d)) if !d.is_finite() => {
                    return Err(bad("FDI offset must be finite"))
                }
                CorruptChannel::Fdi(FdiOffset::Sequence(ds)) => {
                    if ds.is_empty() {
                        return Err(bad("FDI offset sequence is empty"));
                    }
                    if ds.iter().any(|d| !d.is_finite()) {
                        return Err(bad("FDI offsets must be finite"));
                    }
                }
                CorruptChannel::Mimic { variance } if !(variance.is_finite() && *variance >= 0.0) => {
                    return Err(bad("mimic variance must be finite and nonnegative"))
                }
                CorruptChannel::Replacement(ReplacementMap::Constant(c)) if !c.is_finite() => {
                    return Err(bad("replacement constant must be finite"))
                }
                CorruptChannel::Replacement(ReplacementMap::ScaledState(k)) if !k.is_finite() => {
                    return Err(bad("replacement gain must be finite"))
                }
                CorruptChannel::Replacement(ReplacementMap::WindowState(cs)) if cs.is_empty() => {
                    return Err(bad("window length must be at least 1"))
                }
                _ => {}
            }
        }
        Ok(Self { config, policy })
    }

    /// The same kind of channel on every listed actuator.
    pub fn uniform(config: AttackConfig, channel: CorruptChannel) -> Result<Self, PolicyError> {
        let channels = vec![channel; config.malicious_count()];
        Self::new(config, CorruptPolicy { channels })
    }

    pub fn config(&self) -> &AttackConfig {
        &self.config
    }

    pub fn channels(&self) -> &[CorruptChannel] {
        &self.policy.channels
    }

    /// Channel controlling `agent`, if it is hijacked.
    pub fn channel(&self, agent: usize) -> Option<&CorruptChannel> {
        self.config.channel_of(agent).map(|k| &self.policy.channels[k])
    }

    pub fn is_markov(&self) -> bool {
        self.policy.channels.iter().all(CorruptChannel::is_markov)
    }

    /// Diagonal of the command covariance `Ṽ` under attack.
    pub fn command_variances(&self, model: &CpsModel) -> Vec<f64> {
        let ve = model.excitation().diag();
        (0..model.n_agents())
            .map(|i| match self.channel(i) {
                Some(ch) => ch.command_variance(ve[i]),
                None => ve[i],
            })
            .collect()
    }

    /// Conditional mean of the command vector under attack.
    pub fn command_mean(&self, honest: &HonestPolicy, history: &History<'_>, t: usize) -> Vec<f64> {
        let mut mean = honest_mean(honest, history, t);
        for (&agent, ch) in self.config.malicious().iter().zip(&self.policy.channels) {
            mean[agent] = ch.command_mean(history, t, agent, mean[agent]);
        }
        mean
    }
}

/// Control actually applied at step `t`.
///
/// Mimic channels draw one standard normal each, in malicious-set order,
/// from `rng`; nothing else touches the stream.
pub fn compose_control(
    honest: &HonestPolicy,
    attack: Option<&Attack>,
    history: &History<'_>,
    t: usize,
    excitation: &[f64],
    rng: &mut SimRng,
) -> Vec<f64> {
    let mean = honest_mean(honest, history, t);
    let mut u: Vec<f64> = mean.iter().zip(excitation).map(|(g, e)| g + e).collect();
    let Some(attack) = attack else {
        return u;
    };
    for (&agent, ch) in attack.config.malicious().iter().zip(&attack.policy.channels) {
        u[agent] = match ch {
            CorruptChannel::Replacement(_) | CorruptChannel::Dos => ch.command_mean(history, t, agent, mean[agent]),
            CorruptChannel::Fdi(d) => mean[agent] + excitation[agent] + d.at(t),
            CorruptChannel::Mimic { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean[agent] + variance.sqrt() * z
            }
        };
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::model;
    use crate::numerics::rng_from_seed;

    fn eye(n: usize) -> SquareMatrix {
        SquareMatrix::identity(n)
    }

    fn two_agents() -> CpsModel {
        model(
            &[vec![0.5, 0.2], vec![0.0, 0.5]],
            &[1.0, 1.0],
            &eye(2).to_rows(),
            &[1.0, 1.0],
        )
    }

    #[test]
    fn honest_mean_examples() {
        let states = vec![vec![1.0, 2.0]];
        let h = History::new(&states);
        assert_eq!(honest_mean(&HonestPolicy::Zero, &h, 0), vec![0.0, 0.0]);
        let lin = HonestPolicy::Linear(GainSchedule::Stationary(eye(2)));
        assert_eq!(honest_mean(&lin, &h, 0), vec![1.0, 2.0]);

        let states = vec![vec![2.0, 0.0], vec![1.0, 1.0]];
        let h = History::new(&states);
        let half = SquareMatrix::from_diagonal(&[0.5, 0.5]);
        let win = HonestPolicy::Window {
            lag_gains: vec![eye(2), half],
        };
        assert_eq!(honest_mean(&win, &h, 1), vec![2.0, 1.0]);
    }

    #[test]
    fn window_ignores_lags_before_start() {
        let states = vec![vec![3.0]];
        let win = HonestPolicy::Window {
            lag_gains: vec![eye(1), eye(1), eye(1)],
        };
        assert_eq!(honest_mean(&win, &History::new(&states), 0), vec![3.0]);
    }

    #[test]
    fn per_step_schedule_holds_last_gain() {
        let sched = GainSchedule::PerStep(vec![eye(1), SquareMatrix::from_diagonal(&[2.0])]);
        assert_eq!(sched.at(0).get(0, 0), 1.0);
        assert_eq!(sched.at(7).get(0, 0), 2.0);
    }

    #[test]
    fn affine_adds_offset() {
        let p = HonestPolicy::Affine {
            gain: GainSchedule::Stationary(eye(2)),
            offset: vec![1.0, -1.0],
        };
        let states = vec![vec![1.0, 1.0]];
        assert_eq!(honest_mean(&p, &History::new(&states), 0), vec![2.0, 0.0]);
    }

    #[test]
    fn validation_catches_dimensions() {
        assert!(HonestPolicy::Linear(GainSchedule::Stationary(eye(3))).validate(2).is_err());
        assert!(HonestPolicy::Window { lag_gains: vec![] }.validate(2).is_err());
        assert!(HonestPolicy::Linear(GainSchedule::PerStep(vec![])).validate(2).is_err());
        assert!(HonestPolicy::Zero.validate(2).is_ok());
    }

    #[test]
    fn compose_without_attack() {
        let states = vec![vec![0.0, 0.0]];
        let mut rng = rng_from_seed(1);
        let u = compose_control(&HonestPolicy::Zero, None, &History::new(&states), 0, &[0.1, -0.1], &mut rng);
        assert_eq!(u, vec![0.1, -0.1]);
    }

    #[test]
    fn dos_drops_excitation() {
        let m = two_agents();
        let attack = Attack::uniform(AttackConfig::new(&m, vec![0]).unwrap(), CorruptChannel::Dos).unwrap();
        let states = vec![vec![4.0, 4.0]];
        let mut rng = rng_from_seed(1);
        let u = compose_control(&HonestPolicy::Zero, Some(&attack), &History::new(&states), 0, &[0.5, 0.5], &mut rng);
        assert_eq!(u, vec![0.0, 0.5]);
    }

    #[test]
    fn fdi_adds_offset_on_top_of_excited_command() {
        let m = two_agents();
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Fdi(FdiOffset::Constant(1.0)),
        )
        .unwrap();
        let states = vec![vec![0.0, 0.0]];
        let mut rng = rng_from_seed(1);
        let u = compose_control(&HonestPolicy::Zero, Some(&attack), &History::new(&states), 0, &[0.2, 0.3], &mut rng);
        assert_eq!(u, vec![1.2, 0.3]);
    }

    #[test]
    fn replacement_maps() {
        let states = vec![vec![1.0, -2.0], vec![3.0, 5.0]];
        let h = History::new(&states);
        let rep = |m| CorruptChannel::Replacement(m);
        assert_eq!(rep(ReplacementMap::Constant(7.0)).command_mean(&h, 1, 0, 9.0), 7.0);
        assert_eq!(rep(ReplacementMap::ScaledState(2.0)).command_mean(&h, 1, 1, 9.0), 10.0);
        assert_eq!(rep(ReplacementMap::SignFlip).command_mean(&h, 1, 0, 9.0), -9.0);
        assert_eq!(rep(ReplacementMap::WindowState(vec![1.0, 0.5])).command_mean(&h, 1, 0, 0.0), 3.5);
        let custom: CustomMap = Arc::new(|h: &History<'_>, t, agent| h.len() as f64 + t as f64 + agent as f64);
        assert_eq!(rep(ReplacementMap::Custom(custom)).command_mean(&h, 1, 1, 0.0), 4.0);
    }

    #[test]
    fn attack_validation() {
        let m = two_agents();
        let cfg = AttackConfig::new(&m, vec![0]).unwrap();
        let empty = CorruptPolicy { channels: vec![] };
        assert!(Attack::new(cfg.clone(), empty).is_err());
        assert!(Attack::uniform(cfg.clone(), CorruptChannel::Mimic { variance: -1.0 }).is_err());
        assert!(Attack::uniform(cfg.clone(), CorruptChannel::Fdi(FdiOffset::Sequence(vec![]))).is_err());
        assert!(Attack::uniform(cfg, CorruptChannel::Fdi(FdiOffset::Constant(f64::NAN))).is_err());
    }

    #[test]
    fn command_variances_per_kind() {
        let m = model(&eye(3).to_rows(), &[1.0, 1.0, 1.0], &eye(3).to_rows(), &[1.0, 2.0, 3.0]);
        let cfg = AttackConfig::new(&m, vec![0, 1]).unwrap();
        let attack = Attack::new(
            cfg,
            CorruptPolicy {
                channels: vec![CorruptChannel::Dos, CorruptChannel::Mimic { variance: 0.25 }],
            },
        )
        .unwrap();
        assert_eq!(attack.command_variances(&m), vec![0.0, 0.25, 3.0]);
        let fdi = Attack::uniform(
            AttackConfig::new(&m, vec![2]).unwrap(),
            CorruptChannel::Fdi(FdiOffset::Constant(1.0)),
        )
        .unwrap();
        assert_eq!(fdi.command_variances(&m), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn fdi_sequence_cycles() {
        let d = FdiOffset::Sequence(vec![1.0, 2.0, 3.0]);
        assert_eq!((0..5).map(|t| d.at(t)).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 1.0, 2.0]);
    }

    #[test]
    fn markov_classes() {
        assert!(HonestPolicy::Zero.is_markov());
        assert!(!HonestPolicy::Window { lag_gains: vec![eye(1), eye(1)] }.is_markov());
        let m = two_agents();
        let cfg = AttackConfig::new(&m, vec![0]).unwrap();
        let a = Attack::uniform(cfg.clone(), CorruptChannel::Replacement(ReplacementMap::WindowState(vec![1.0, 1.0]))).unwrap();
        assert!(!a.is_markov());
        let a = Attack::uniform(cfg, CorruptChannel::Replacement(ReplacementMap::SignFlip)).unwrap();
        assert!(a.is_markov());
    }

    #[test]
    fn mimic_matches_honest_command_law() {
        // Honest and mimicking commands share the conditional law when the
        // mimic variance equals the honest excitation variance.
        let m = two_agents();
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Mimic { variance: 1.0 },
        )
        .unwrap();
        let policy = HonestPolicy::Affine {
            gain: GainSchedule::Stationary(eye(2)),
            offset: vec![0.5, 0.0],
        };
        let states = vec![vec![1.0, 2.0]];
        let h = History::new(&states);
        let mut rng = rng_from_seed(99);
        let n = 10_000;
        let (mut honest, mut corrupt) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            honest.push(compose_control(&policy, None, &h, 0, &[e, 0.0], &mut rng)[0]);
            corrupt.push(compose_control(&policy, Some(&attack), &h, 0, &[0.0, 0.0], &mut rng)[0]);
        }
        let stats = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (mean, var)
        };
        let (mh, vh) = stats(&honest);
        let (mc, vc) = stats(&corrupt);
        assert!((mh - mc).abs() / mh.abs() < 0.05, "means {mh} vs {mc}");
        assert!((vh - vc).abs() / vh < 0.05, "variances {vh} vs {vc}");
    }
}
