//! Seeded sample paths and one-step conditional predictors.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{CpsModel, InitialLaw};
use crate::numerics::{
    rng_from_seed, sample_gaussian, Covariance, GaussianLaw, NumericsError, SimRng, SpdMatrix,
};
use crate::policies::{compose_control, Attack, History, HonestPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state became non-finite at step {step} (unstable closed loop?)")]
    NonFiniteState { step: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("step {t} is outside the trajectory (horizon {horizon})")]
    StepOutOfRange { t: usize, horizon: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A simulated path: `n + 1` states and `n` controls and excitations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Honest excitations `e_t` as drawn, including components a hijacked
    /// actuator discarded.
    pub excitations: Vec<Vec<f64>>,
    pub seed: u64,
    pub attacked: bool,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn history(&self, t: usize) -> History<'_> {
        History::new(&self.states[..=t])
    }

    /// CSV with columns `t, x_1..x_N, u_1..u_N, e_1..e_N`. The last row
    /// carries the terminal state with empty control columns.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states[0].len();
        let mut header = vec!["t".to_string()];
        for prefix in ["x", "u", "e"] {
            header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        writeln!(out, "{}", header.join(","))?;
        for (t, x) in self.states.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            for series in [&self.controls, &self.excitations] {
                match series.get(t) {
                    Some(v) => row.extend(v.iter().map(|v| v.to_string())),
                    None => row.extend(std::iter::repeat_n(String::new(), n)),
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn draw_initial(initial: &InitialLaw, rng: &mut SimRng) -> Vec<f64> {
    match initial {
        InitialLaw::Dirac(p) => p.clone(),
        InitialLaw::Gaussian(g) => sample_gaussian(rng, g),
    }
}

/// Simulates `x_{t+1} = A x_t + diag(b) u_t + w_t` for `horizon` steps.
///
/// Per step the stream is consumed as: `e_t`, then any Mimic
/// self-excitation, then `w_t`.
pub fn simulate(
    model: &CpsModel,
    honest: &HonestPolicy,
    attack: Option<&Attack>,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, SimError> {
    if horizon == 0 {
        return Err(SimError::EmptyHorizon);
    }
    let n = model.n_agents();
    let mut rng = rng_from_seed(seed);
    let excitation_law = GaussianLaw::new(vec![0.0; n], Covariance::Diagonal(model.excitation().clone()))?;
    let noise_law = GaussianLaw::full(vec![0.0; n], model.process_noise().clone())?;
    let a = model.dynamics();
    let b = model.actuator_gains();

    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    let mut excitations = Vec::with_capacity(horizon);
    states.push(draw_initial(model.initial(), &mut rng));

    for t in 0..horizon {
        let e = sample_gaussian(&mut rng, &excitation_law);
        let u = compose_control(honest, attack, &History::new(&states), t, &e, &mut rng);
        let w = sample_gaussian(&mut rng, &noise_law);
        let ax = a.mul_vec(&states[t]);
        let next: Vec<f64> = (0..n).map(|i| ax[i] + b[i] * u[i] + w[i]).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFiniteState { step: t + 1 });
        }
        states.push(next);
        controls.push(u);
        excitations.push(e);
    }
    Ok(Trajectory {
        states,
        controls,
        excitations,
        seed,
        attacked: attack.is_some(),
    })
}

/// Honest and corrupt Gaussian laws of `x_{t+1}` given `h_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPair {
    pub honest_mean: Vec<f64>,
    pub honest_cov: SpdMatrix,
    pub corrupt_mean: Vec<f64>,
    pub corrupt_cov: SpdMatrix,
}

/// `diag(b)·diag(v)·diag(b) + V_w`.
fn step_covariance(model: &CpsModel, command_variances: &[f64]) -> Result<SpdMatrix, NumericsError> {
    let b = model.actuator_gains();
    let mut m = model.process_noise().matrix().clone();
    for (i, v) in command_variances.iter().enumerate() {
        m.set(i, i, m.get(i, i) + b[i] * b[i] * v);
    }
    SpdMatrix::new(m)
}

/// Time-invariant parts of the one-step predictors, computed once per
/// scenario.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    model: &'a CpsModel,
    honest: &'a HonestPolicy,
    attack: Option<&'a Attack>,
    honest_cov: SpdMatrix,
    corrupt_cov: SpdMatrix,
}

impl<'a> Predictor<'a> {
    /// With `attack = None` the corrupt predictor coincides with the honest
    /// one.
    pub fn new(model: &'a CpsModel, honest: &'a HonestPolicy, attack: Option<&'a Attack>) -> Result<Self, NumericsError> {
        let honest_cov = step_covariance(model, model.excitation().diag())?;
        let corrupt_cov = match attack {
            Some(a) => step_covariance(model, &a.command_variances(model))?,
            None => honest_cov.clone(),
        };
        Ok(Self {
            model,
            honest,
            attack,
            honest_cov,
            corrupt_cov,
        })
    }

    pub fn honest_cov(&self) -> &SpdMatrix {
        &self.honest_cov
    }

    pub fn corrupt_cov(&self) -> &SpdMatrix {
        &self.corrupt_cov
    }

    fn apply(&self, x: &[f64], command: &[f64]) -> Vec<f64> {
        let b = self.model.actuator_gains();
        self.model
            .dynamics()
            .mul_vec(x)
            .into_iter()
            .enumerate()
            .map(|(i, ax)| ax + b[i] * command[i])
            .collect()
    }

    /// `A x_t + diag(b) g_t(h_t)`.
    pub fn honest_mean(&self, history: &History<'_>, t: usize) -> Vec<f64> {
        self.apply(history.last(), &crate::policies::honest_mean(self.honest, history, t))
    }

    /// `A x_t + diag(b) E[u_t | h_t]` under the corrupt policy.
    pub fn corrupt_mean(&self, history: &History<'_>, t: usize) -> Vec<f64> {
        match self.attack {
            Some(a) => self.apply(history.last(), &a.command_mean(self.honest, history, t)),
            None => self.honest_mean(history, t),
        }
    }
}

/// Conditional laws of `x_{t+1}` along `traj` at step `t`.
pub fn predicted_conditionals(
    model: &CpsModel,
    honest: &HonestPolicy,
    attack: Option<&Attack>,
    traj: &Trajectory,
    t: usize,
) -> Result<ConditionalPair, SimError> {
    if t >= traj.horizon() {
        return Err(SimError::StepOutOfRange {
            t,
            horizon: traj.horizon(),
        });
    }
    let p = Predictor::new(model, honest, attack)?;
    let h = traj.history(t);
    Ok(ConditionalPair {
        honest_mean: p.honest_mean(&h, t),
        corrupt_mean: p.corrupt_mean(&h, t),
        honest_cov: p.honest_cov,
        corrupt_cov: p.corrupt_cov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::model;
    use crate::model::{validate_model, AttackConfig, InitialSpec, ModelSpec};
    use crate::numerics::SquareMatrix;
    use crate::policies::{CorruptChannel, FdiOffset, GainSchedule, ReplacementMap};

    fn eye(n: usize) -> Vec<Vec<f64>> {
        SquareMatrix::identity(n).to_rows()
    }

    #[test]
    fn zero_dynamics_forget_initial_state() {
        let m = validate_model(&ModelSpec {
            n_agents: 2,
            dynamics: vec![vec![0.0; 2]; 2],
            actuator_gains: vec![0.0, 0.0],
            process_noise: vec![vec![1e-300, 0.0], vec![0.0, 1e-300]],
            excitation: vec![1.0, 1.0],
            initial: InitialSpec::Dirac(vec![1.0, 1.0]),
        })
        .unwrap();
        let traj = simulate(&m, &HonestPolicy::Zero, None, 3, 5).unwrap();
        assert_eq!(traj.states[0], vec![1.0, 1.0]);
        for x in &traj.states[1..] {
            assert!(x.iter().all(|v| v.abs() < 1e-140));
        }
    }

    #[test]
    fn reproducible_per_seed() {
        let m = model(&[vec![0.5, 0.1], vec![0.0, 0.5]], &[1.0, 1.0], &eye(2), &[1.0, 1.0]);
        let a = simulate(&m, &HonestPolicy::Zero, None, 50, 17).unwrap();
        let b = simulate(&m, &HonestPolicy::Zero, None, 50, 17).unwrap();
        let c = simulate(&m, &HonestPolicy::Zero, None, 50, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
        assert_eq!(a.states.len(), 51);
        assert_eq!(a.controls.len(), 50);
    }

    #[test]
    fn unstable_loop_fails_loudly() {
        let m = model(&[vec![1e200]], &[1.0], &eye(1), &[1.0]);
        let err = simulate(&m, &HonestPolicy::Zero, None, 100, 1).unwrap_err();
        assert!(matches!(err, SimError::NonFiniteState { .. }));
    }

    #[test]
    fn rejects_empty_horizon() {
        let m = model(&eye(1), &[1.0], &eye(1), &[1.0]);
        assert_eq!(simulate(&m, &HonestPolicy::Zero, None, 0, 1), Err(SimError::EmptyHorizon));
    }

    #[test]
    fn stationary_variance_of_scalar_loop() {
        // σ² = a²σ² + V_w + b²V_e with a = 0.5 gives 8/3.
        let m = model(&[vec![0.5]], &[1.0], &eye(1), &[1.0]);
        let runs = 10_000;
        let xs: Vec<f64> = (0..runs)
            .map(|s| simulate(&m, &HonestPolicy::Zero, None, 50, s).unwrap().states[50][0])
            .collect();
        let mean = xs.iter().sum::<f64>() / runs as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        assert!((var - 8.0 / 3.0).abs() / (8.0 / 3.0) < 0.05, "variance {var}");
    }

    fn replacement_setup() -> (CpsModel, Attack) {
        let m = model(&[vec![0.0, 0.5], vec![0.0, 0.0]], &[1.0, 1.0], &eye(2), &[1.0, 1.0]);
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Replacement(ReplacementMap::Constant(0.0)),
        )
        .unwrap();
        (m, attack)
    }

    #[test]
    fn conditional_covariances() {
        let (m, attack) = replacement_setup();
        let traj = simulate(&m, &HonestPolicy::Zero, Some(&attack), 2, 3).unwrap();
        let pair = predicted_conditionals(&m, &HonestPolicy::Zero, Some(&attack), &traj, 0).unwrap();
        assert_eq!(pair.honest_cov.matrix().to_rows(), vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(pair.corrupt_cov.matrix().to_rows(), vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(pair.honest_mean, vec![0.0, 0.0]);
        assert!(predicted_conditionals(&m, &HonestPolicy::Zero, Some(&attack), &traj, 2).is_err());
    }

    #[test]
    fn fdi_shifts_mean_only() {
        let (m, _) = replacement_setup();
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Fdi(FdiOffset::Constant(1.0)),
        )
        .unwrap();
        let policy = HonestPolicy::Linear(GainSchedule::Stationary(SquareMatrix::from_diagonal(&[-0.3, 0.2])));
        let traj = simulate(&m, &policy, Some(&attack), 5, 9).unwrap();
        for t in 0..5 {
            let p = predicted_conditionals(&m, &policy, Some(&attack), &traj, t).unwrap();
            assert_eq!(p.corrupt_cov, p.honest_cov);
            let diff: Vec<f64> = p.corrupt_mean.iter().zip(&p.honest_mean).map(|(c, h)| c - h).collect();
            assert!((diff[0] - 1.0).abs() < 1e-12 && diff[1] == 0.0);
        }
    }

    #[test]
    fn markov_predictors_ignore_earlier_states() {
        let (m, attack) = replacement_setup();
        let policy = HonestPolicy::Linear(GainSchedule::Stationary(SquareMatrix::from_diagonal(&[-0.3, 0.2])));
        let traj = simulate(&m, &policy, Some(&attack), 6, 4).unwrap();
        let before = predicted_conditionals(&m, &policy, Some(&attack), &traj, 5).unwrap();
        let mut tampered = traj.clone();
        for x in tampered.states.iter_mut().take(5) {
            x[0] += 100.0;
        }
        let after = predicted_conditionals(&m, &policy, Some(&attack), &tampered, 5).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn csv_layout() {
        let m = model(&eye(2), &[1.0, 1.0], &eye(2), &[1.0, 1.0]);
        let traj = simulate(&m, &HonestPolicy::Zero, None, 2, 1).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2,u_1,u_2,e_1,e_2");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",,,,"));
    }
}
