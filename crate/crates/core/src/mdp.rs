//! Finite-state, finite-action testbed: induced state kernels, path
//! likelihood ratios and ergodic drift.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{rng_from_seed, KahanSum};

pub const MAX_STATES: usize = 64;
pub const MAX_ACTIONS: usize = 64;
/// Row-sum tolerance for kernels, policies and initial laws.
pub const PROB_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-12;
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("transition {from} -> {to} at step {step:?} has zero corrupt probability but positive honest probability")]
    NotAbsolutelyContinuous { step: Option<usize>, from: usize, to: usize },
    #[error("transition {from} -> {to} at step {step} has zero probability under both kernels")]
    ImpossibleTransition { step: usize, from: usize, to: usize },
    #[error("power iteration did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
}

pub type Result<T> = std::result::Result<T, MdpError>;

fn invalid(path: impl Into<String>, message: impl Into<String>) -> MdpError {
    MdpError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

fn check_distribution(path: &str, row: &[f64], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(invalid(path, format!("expected {len} entries, found {}", row.len())));
    }
    if let Some(i) = row.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid(format!("{path}[{i}]"), "probabilities must be finite and non-negative"));
    }
    let total: f64 = row.iter().copied().collect::<KahanSum>().value();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(invalid(path, format!("sums to {total}, not 1")));
    }
    Ok(())
}

/// State transition kernel `K(x′|x)`, stored as rows indexed by `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateKernel(pub Vec<Vec<f64>>);

impl StateKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("kernel", "needs at least one state"));
        }
        for (x, row) in rows.iter().enumerate() {
            check_distribution(&format!("kernel[{x}]"), row, n)?;
        }
        Ok(Self(rows))
    }

    pub fn n_states(&self) -> usize {
        self.0.len()
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.0[from][to]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// `kernel[u][x][x′] = P(x′ | x, u)`.
    kernel: Vec<Vec<Vec<f64>>>,
    initial: Vec<f64>,
}

impl FiniteMdp {
    pub fn new(kernel: Vec<Vec<Vec<f64>>>, initial: Vec<f64>) -> Result<Self> {
        let n_actions = kernel.len();
        if n_actions == 0 || n_actions > MAX_ACTIONS {
            return Err(invalid("kernel", format!("action count must be in 1..={MAX_ACTIONS}")));
        }
        let n_states = kernel[0].len();
        if n_states == 0 || n_states > MAX_STATES {
            return Err(invalid("kernel[0]", format!("state count must be in 1..={MAX_STATES}")));
        }
        for (u, block) in kernel.iter().enumerate() {
            if block.len() != n_states {
                return Err(invalid(
                    format!("kernel[{u}]"),
                    format!("expected {n_states} rows, found {}", block.len()),
                ));
            }
            for (x, row) in block.iter().enumerate() {
                check_distribution(&format!("kernel[{u}][{x}]"), row, n_states)?;
            }
        }
        check_distribution("initial", &initial, n_states)?;
        Ok(Self {
            n_states,
            n_actions,
            kernel,
            initial,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, u: usize, x: usize, next: usize) -> f64 {
        self.kernel[u][x][next]
    }

    pub fn kernel(&self) -> &[Vec<Vec<f64>>] {
        &self.kernel
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }
}

/// Randomized action choice `π(u | ·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StochasticPolicy {
    /// `probs[x][u]`.
    Markov { probs: Vec<Vec<f64>> },
    /// `probs[w][u]` where `w = x_t + S·x_{t−1} + … + S^{k−1}·x_{t−k+1}`.
    /// Lags before time 0 repeat `x_0`.
    Window { k: usize, probs: Vec<Vec<f64>> },
}

impl StochasticPolicy {
    pub fn validate(&self, mdp: &FiniteMdp) -> Result<()> {
        let (rows, probs) = match self {
            StochasticPolicy::Markov { probs } => (mdp.n_states(), probs),
            StochasticPolicy::Window { k, probs } => {
                if *k == 0 {
                    return Err(invalid("policy.k", "window length must be positive"));
                }
                let rows = window_states(mdp.n_states(), *k)
                    .ok_or_else(|| invalid("policy.k", format!("product space exceeds {MAX_STATES} states")))?;
                (rows, probs)
            }
        };
        if probs.len() != rows {
            return Err(invalid("policy.probs", format!("expected {rows} rows, found {}", probs.len())));
        }
        for (x, row) in probs.iter().enumerate() {
            check_distribution(&format!("policy.probs[{x}]"), row, mdp.n_actions())?;
        }
        Ok(())
    }

    pub fn window(&self) -> usize {
        match self {
            StochasticPolicy::Markov { .. } => 1,
            StochasticPolicy::Window { k, .. } => *k,
        }
    }

    fn row(&self, index: usize) -> &[f64] {
        match self {
            StochasticPolicy::Markov { probs } | StochasticPolicy::Window { probs, .. } => &probs[index],
        }
    }
}

fn window_states(n_states: usize, k: usize) -> Option<usize> {
    let size = n_states.checked_pow(k as u32)?;
    (size <= MAX_STATES).then_some(size)
}

/// Index of the window ending at `path[t]`, most recent state first.
pub fn window_index(path: &[usize], t: usize, n_states: usize, k: usize) -> usize {
    let mut index = 0;
    for lag in (0..k).rev() {
        index = index * n_states + path[t.saturating_sub(lag)];
    }
    index
}

/// Marginalizes the action: `K(x′|x) = Σ_u π(u|x) P(x′|x,u)`. Window
/// policies yield a kernel on the product space of window indices.
pub fn induced_kernel(mdp: &FiniteMdp, policy: &StochasticPolicy) -> Result<StateKernel> {
    induced_kernel_on(mdp, policy, policy.window())
}

/// [`induced_kernel`] on the product space of the last `k` states, for any
/// `k` at least the policy's window.
pub fn induced_kernel_on(mdp: &FiniteMdp, policy: &StochasticPolicy, k: usize) -> Result<StateKernel> {
    policy.validate(mdp)?;
    let n = mdp.n_states();
    if k < policy.window() {
        return Err(invalid("policy.k", format!("cannot lift a window of {} onto {k} states", policy.window())));
    }
    let size = window_states(n, k)
        .ok_or_else(|| invalid("policy.k", format!("product space exceeds {MAX_STATES} states")))?;
    let policy_size = n.pow(policy.window() as u32);
    let mut rows = vec![vec![0.0; size]; size];
    for (w, row) in rows.iter_mut().enumerate() {
        // most recent state is the least significant digit
        let x = w % n;
        let shifted = (w * n) % size;
        let probs = policy.row(w % policy_size);
        for next in 0..n {
            let p: f64 = probs
                .iter()
                .enumerate()
                .map(|(u, pu)| pu * mdp.prob(u, x, next))
                .collect::<KahanSum>()
                .value();
            row[shifted + next] += p;
        }
    }
    Ok(StateKernel(rows))
}

/// Initial law on the space of the last `k` states.
pub fn lifted_initial(initial: &[f64], k: usize) -> Vec<f64> {
    let n = initial.len();
    let mut out = vec![0.0; n.pow(k as u32)];
    for (x, p) in initial.iter().enumerate() {
        out[window_index(&vec![x; k], k - 1, n, k)] = *p;
    }
    out
}

/// Maps a state path to window indices.
pub fn lift_path(path: &[usize], n_states: usize, k: usize) -> Vec<usize> {
    (0..path.len()).map(|t| window_index(path, t, n_states, k)).collect()
}

fn inverse_cdf(probs: &[f64], uniform: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if uniform < acc {
            return i;
        }
    }
    // rounding left `acc` just below 1; fall back to the last reachable index
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Samples `x_0 ~ ν`, then for each step an action from the policy and the
/// next state from `P(·|x,u)`, each by inverse CDF on one uniform.
pub fn simulate_path(mdp: &FiniteMdp, policy: &StochasticPolicy, n: usize, seed: u64) -> Result<Vec<usize>> {
    policy.validate(mdp)?;
    let mut rng = rng_from_seed(seed);
    let k = policy.window();
    let mut path = Vec::with_capacity(n + 1);
    path.push(inverse_cdf(mdp.initial(), rng.random::<f64>()));
    for t in 0..n {
        let x = path[t];
        let u = inverse_cdf(policy.row(window_index(&path, t, mdp.n_states(), k)), rng.random::<f64>());
        path.push(inverse_cdf(&mdp.kernel()[u][x], rng.random::<f64>()));
    }
    Ok(path)
}

/// Cumulative `log dQ_n/dQ̆_n` along `path`: entry `n` is the initial-law
/// log ratio plus the first `n` transition log ratios.
pub fn path_log_ratio(
    path: &[usize],
    honest: &StateKernel,
    corrupt: &StateKernel,
    nu_honest: &[f64],
    nu_corrupt: &[f64],
) -> Result<Vec<f64>> {
    let Some(&x0) = path.first() else {
        return Ok(Vec::new());
    };
    let ratio = |ph: f64, pc: f64, step: Option<usize>, from: usize, to: usize| -> Result<f64> {
        match (ph > 0.0, pc > 0.0) {
            (_, true) => Ok(ph.ln() - pc.ln()),
            (true, false) => Err(MdpError::NotAbsolutelyContinuous { step, from, to }),
            (false, false) => Err(MdpError::ImpossibleTransition {
                step: step.unwrap_or(0),
                from,
                to,
            }),
        }
    };
    let mut acc = KahanSum::new();
    acc.add(ratio(nu_honest[x0], nu_corrupt[x0], None, x0, x0)?);
    let mut out = Vec::with_capacity(path.len());
    out.push(acc.value());
    for t in 0..path.len() - 1 {
        let (from, to) = (path[t], path[t + 1]);
        acc.add(ratio(honest.prob(from, to), corrupt.prob(from, to), Some(t), from, to)?);
        out.push(acc.value());
    }
    Ok(out)
}

/// Power iteration from the first basis vector until `‖μK − μ‖₁ <
/// STATIONARY_TOL`.
pub fn stationary_distribution(kernel: &StateKernel) -> Result<Vec<f64>> {
    let n = kernel.n_states();
    let mut mu = vec![0.0; n];
    mu[0] = 1.0;
    for _ in 0..STATIONARY_MAX_ITER {
        let mut next = vec![0.0; n];
        for (x, row) in kernel.rows().iter().enumerate() {
            for (y, p) in row.iter().enumerate() {
                next[y] += mu[x] * p;
            }
        }
        let residual: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if residual < STATIONARY_TOL {
            return Ok(mu);
        }
    }
    Err(MdpError::ConvergenceFailure {
        iterations: STATIONARY_MAX_ITER,
    })
}

/// Expected per-step log ratio under the corrupt chain in stationarity:
/// `−Σ_x μ̆(x) KL(K̆(·|x) ‖ K(·|x))`.
pub fn analytic_drift(honest: &StateKernel, corrupt: &StateKernel) -> Result<f64> {
    let mu = stationary_distribution(corrupt)?;
    let mut acc = KahanSum::new();
    for (x, &weight) in mu.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        for (y, &pc) in corrupt.rows()[x].iter().enumerate() {
            if pc == 0.0 {
                continue;
            }
            let ph = honest.prob(x, y);
            if ph == 0.0 {
                return Err(MdpError::NotAbsolutelyContinuous {
                    step: None,
                    from: x,
                    to: y,
                });
            }
            acc.add(-weight * pc * (pc / ph).ln());
        }
    }
    Ok(acc.value())
}
