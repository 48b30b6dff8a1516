//! Likelihood-ratio statistics for honest-versus-corrupt discrimination.
//!
//! `L_n` is the density of the first `n` transitions under the honest
//! policy relative to the corrupt policy, evaluated along an observed path.
//! Under a detectable attack `log L_n` drifts to `-∞`; under a perfect
//! mimic it stays at zero.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::model::{CpsModel, InitialLaw};
use crate::numerics::{
    log_gaussian_density, norm_sq, sub, Covariance, GaussianLaw, KahanSum, NumericsError, SpdMatrix, SquareMatrix,
};
use crate::policies::{Attack, HonestPolicy};
use crate::simulator::{simulate, Predictor, SimError, Trajectory};

/// Default decision threshold on `log L_n`.
pub const DEFAULT_LOG_THRESHOLD: f64 = -10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("r_n is undefined at n = {n}: every corrupt-predictor residual is zero")]
    UndefinedRatio { n: usize },
    #[error("requested n = {n} but the series has {len} steps")]
    OutOfRange { n: usize, len: usize },
    #[error("the joint-density oracle needs a stationary linear Markov policy and no attack")]
    UnsupportedPolicy,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Statistics of one transition `x_t → x_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub t: usize,
    pub honest_logdens: f64,
    pub corrupt_logdens: f64,
    pub step_log_ratio: f64,
    /// `‖x_{t+1} − μ^π‖² / λ_min(V^π)`.
    pub s: f64,
    /// `‖x_{t+1} − μ^π̆‖² / λ_max(V^π̆)`.
    pub s_breve: f64,
    pub half_logdet_ratio: f64,
}

/// Per-step statistics and their compensated prefix sums. Index `n` of a
/// prefix array covers the first `n` transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSeries {
    pub steps: Vec<StepStats>,
    cum_log_l: Vec<f64>,
    s_sum: Vec<f64>,
    s_breve_sum: Vec<f64>,
    logdet_ratio_sum: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Honest,
    Attack,
}

impl DetectionSeries {
    pub fn from_steps(steps: Vec<StepStats>) -> Self {
        let prefix = |f: &dyn Fn(&StepStats) -> f64| {
            let mut acc = KahanSum::new();
            let mut out = Vec::with_capacity(steps.len() + 1);
            out.push(0.0);
            for s in &steps {
                acc.add(f(s));
                out.push(acc.value());
            }
            out
        };
        Self {
            cum_log_l: prefix(&|s| s.step_log_ratio),
            s_sum: prefix(&|s| s.s),
            s_breve_sum: prefix(&|s| s.s_breve),
            logdet_ratio_sum: prefix(&|s| s.half_logdet_ratio),
            steps,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn check(&self, n: usize) -> Result<(), DetectionError> {
        if n > self.len() {
            return Err(DetectionError::OutOfRange { n, len: self.len() });
        }
        Ok(())
    }

    /// `log L_n`.
    pub fn log_l(&self, n: usize) -> Result<f64, DetectionError> {
        self.check(n)?;
        Ok(self.cum_log_l[n])
    }

    pub fn s_sum(&self, n: usize) -> Result<f64, DetectionError> {
        self.check(n)?;
        Ok(self.s_sum[n])
    }

    pub fn s_breve_sum(&self, n: usize) -> Result<f64, DetectionError> {
        self.check(n)?;
        Ok(self.s_breve_sum[n])
    }

    /// `Σ s_t / Σ s̆_t` over the first `n` transitions.
    pub fn r_n(&self, n: usize) -> Result<f64, DetectionError> {
        self.check(n)?;
        let den = self.s_breve_sum[n];
        if den > 0.0 {
            Ok(self.s_sum[n] / den)
        } else {
            Err(DetectionError::UndefinedRatio { n })
        }
    }

    pub fn logdet_ratio_sum(&self, n: usize) -> Result<f64, DetectionError> {
        self.check(n)?;
        Ok(self.logdet_ratio_sum[n])
    }

    /// DetectionSeries CSV: `t, logL, r_n, s_sum, sbreve_sum,
    /// logdet_ratio_sum` for `t = 1..=n`. An undefined `r_n` is left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,logL,r_n,s_sum,sbreve_sum,logdet_ratio_sum")?;
        for n in 1..=self.len() {
            let r = self.r_n(n).map(|r| r.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{n},{},{r},{},{},{}",
                self.cum_log_l[n], self.s_sum[n], self.s_breve_sum[n], self.logdet_ratio_sum[n]
            )?;
        }
        Ok(())
    }
}

/// Evaluates both one-step predictors along `traj`.
pub fn rn_series(
    traj: &Trajectory,
    model: &CpsModel,
    honest: &HonestPolicy,
    attack: Option<&Attack>,
) -> Result<DetectionSeries, DetectionError> {
    let predictor = Predictor::new(model, honest, attack)?;
    let (lambda_min, _) = predictor.honest_cov().eig_extremes()?;
    let (_, lambda_max_breve) = predictor.corrupt_cov().eig_extremes()?;
    let half_logdet_ratio = 0.5 * (predictor.corrupt_cov().logdet() - predictor.honest_cov().logdet());
    let n = model.n_agents();
    let zeros = vec![0.0; n];
    let honest_law = GaussianLaw::full(zeros.clone(), predictor.honest_cov().clone())?;
    let corrupt_law = GaussianLaw::full(zeros, predictor.corrupt_cov().clone())?;

    let mut steps = Vec::with_capacity(traj.horizon());
    for t in 0..traj.horizon() {
        let h = traj.history(t);
        let next = &traj.states[t + 1];
        let zh = sub(next, &predictor.honest_mean(&h, t));
        let zc = sub(next, &predictor.corrupt_mean(&h, t));
        let honest_logdens = log_gaussian_density(&zh, &honest_law)?;
        let corrupt_logdens = log_gaussian_density(&zc, &corrupt_law)?;
        steps.push(StepStats {
            t,
            honest_logdens,
            corrupt_logdens,
            step_log_ratio: honest_logdens - corrupt_logdens,
            s: norm_sq(&zh) / lambda_min,
            s_breve: norm_sq(&zc) / lambda_max_breve,
            half_logdet_ratio,
        });
    }
    Ok(DetectionSeries::from_steps(steps))
}

/// `r_n` with numerator residuals from an honest path and denominator
/// residuals from an attacked path. Entry `n - 1` covers `n` transitions;
/// `None` marks an undefined ratio.
pub fn rn_two_path(
    honest_traj: &Trajectory,
    attacked_traj: &Trajectory,
    model: &CpsModel,
    honest: &HonestPolicy,
    attack: &Attack,
) -> Result<Vec<Option<f64>>, DetectionError> {
    let predictor = Predictor::new(model, honest, Some(attack))?;
    let (lambda_min, _) = predictor.honest_cov().eig_extremes()?;
    let (_, lambda_max_breve) = predictor.corrupt_cov().eig_extremes()?;
    let horizon = honest_traj.horizon().min(attacked_traj.horizon());
    let (mut num, mut den) = (KahanSum::new(), KahanSum::new());
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let h = honest_traj.history(t);
        num.add(norm_sq(&sub(&honest_traj.states[t + 1], &predictor.honest_mean(&h, t))) / lambda_min);
        let hb = attacked_traj.history(t);
        den.add(norm_sq(&sub(&attacked_traj.states[t + 1], &predictor.corrupt_mean(&hb, t))) / lambda_max_breve);
        out.push((den.value() > 0.0).then(|| num.value() / den.value()));
    }
    Ok(out)
}

/// Finite-horizon separator: `Attack` iff `log L_n < log_threshold`.
pub fn classify(series: &DetectionSeries, n: usize, log_threshold: f64) -> Result<Decision, DetectionError> {
    Ok(if series.log_l(n)? < log_threshold {
        Decision::Attack
    } else {
        Decision::Honest
    })
}

/// `Π_t det(V^π̆)^{1/2} / det(V^π)^{1/2}` over the first `n` transitions.
pub fn det_ratio_bound(series: &DetectionSeries, n: usize) -> Result<f64, DetectionError> {
    Ok(series.logdet_ratio_sum(n)?.exp())
}

fn rect_mul(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let v = a[i * inner + k];
            if v != 0.0 {
                for j in 0..cols {
                    out[i * cols + j] += v * b[k * cols + j];
                }
            }
        }
    }
    out
}

/// Joint log density of the whole observed path under a stationary linear
/// feedback `u_t = K x_t + e_t`, built from the stacked closed-loop map
/// rather than per-step conditionals.
///
/// For a Dirac initial law the density is that of `(x_1..x_n)` given the
/// fixed `x_0`; for a Gaussian initial law `x_0` is included.
pub fn joint_log_density_oracle(traj: &Trajectory, model: &CpsModel, gain: &SquareMatrix) -> Result<f64, DetectionError> {
    if traj.attacked || gain.dim() != model.n_agents() {
        return Err(DetectionError::UnsupportedPolicy);
    }
    let n = model.n_agents();
    let horizon = traj.horizon();
    let b = model.actuator_gains();
    let mut closed = model.dynamics().clone();
    for i in 0..n {
        for j in 0..n {
            closed.set(i, j, closed.get(i, j) + b[i] * gain.get(i, j));
        }
    }
    // powers[k] = F^k
    let mut powers = vec![SquareMatrix::identity(n)];
    for k in 1..=horizon {
        powers.push(closed.matmul(&powers[k - 1]));
    }

    let (x0_noise, x0_mean, include_x0) = match model.initial() {
        InitialLaw::Dirac(p) => (None, p.clone(), false),
        InitialLaw::Gaussian(g) => match g.cov() {
            Covariance::Full(v) => (Some(v.clone()), g.mean().to_vec(), true),
            Covariance::Diagonal(d) => (
                Some(SpdMatrix::new(d.to_matrix())?),
                g.mean().to_vec(),
                true,
            ),
        },
    };

    // Noise stack: [x_0 deviation (if random)] [e_0..e_{n-1}] [w_0..w_{n-1}],
    // each block mapped from independent standard normals.
    let x0_cols = if include_x0 { n } else { 0 };
    let cols = x0_cols + 2 * horizon * n;
    let first_t = if include_x0 { 0 } else { 1 };
    let rows = (horizon + 1 - first_t) * n;

    let mut gmap = vec![0.0; rows * cols];
    let mut mean = Vec::with_capacity(rows);
    let mut observed = Vec::with_capacity(rows);
    let sqrt_ve: Vec<f64> = model.excitation().diag().iter().map(|v| v.sqrt()).collect();
    let noise = model.process_noise();
    for t in first_t..=horizon {
        let r0 = (t - first_t) * n;
        mean.extend(powers[t].mul_vec(&x0_mean));
        observed.extend_from_slice(&traj.states[t]);
        if let Some(p0) = &x0_noise {
            // F^t L_0
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..n).map(|k| powers[t].get(i, k) * p0.chol(k, j)).sum();
                    gmap[(r0 + i) * cols + j] = v;
                }
            }
        }
        for s in 0..t {
            let f = &powers[t - 1 - s];
            let ecol = x0_cols + s * n;
            let wcol = x0_cols + (horizon + s) * n;
            for i in 0..n {
                for j in 0..n {
                    gmap[(r0 + i) * cols + ecol + j] = f.get(i, j) * b[j] * sqrt_ve[j];
                    let v: f64 = (0..n).map(|k| f.get(i, k) * noise.chol(k, j)).sum();
                    gmap[(r0 + i) * cols + wcol + j] = v;
                }
            }
        }
    }
    let mut gt = vec![0.0; cols * rows];
    for i in 0..rows {
        for j in 0..cols {
            gt[j * rows + i] = gmap[i * cols + j];
        }
    }
    let cov = rect_mul(&gmap, &gt, rows, cols, rows);
    let law = GaussianLaw::full(mean, SpdMatrix::new(SquareMatrix::new(rows, cov)?)?)?;
    Ok(log_gaussian_density(&observed, &law)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMethod {
    ClosedForm,
    MonteCarlo,
}

/// Expected per-step increment of `log L_n` under the corrupt law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub drift: f64,
    /// Standard error for Monte Carlo estimates; zero for closed forms.
    pub stderr: f64,
    pub method: DriftMethod,
}

/// Steps and batch count used by the Monte Carlo drift fallback.
pub const DRIFT_MC_STEPS: usize = 20_000;
const DRIFT_MC_BATCHES: usize = 20;

/// Predicted decay rate of `log L_n`.
///
/// When both mean maps are stationary affine functions of `x_t` with the
/// same linear part, the conditional laws differ by a constant mean shift
/// `δ` and the drift is `-KL(corrupt ‖ honest)`:
/// `-½[tr(V⁻¹V̆) + δᵀV⁻¹δ − N + log det V − log det V̆]`.
/// Otherwise the per-step ratio is averaged along one long corrupt path
/// (seeded by `seed`), with a batch-means standard error.
pub fn expected_step_drift(
    model: &CpsModel,
    honest: &HonestPolicy,
    attack: Option<&Attack>,
    seed: u64,
) -> Result<DriftEstimate, DetectionError> {
    let predictor = Predictor::new(model, honest, attack)?;
    let Some(attack) = attack else {
        return Ok(DriftEstimate {
            drift: 0.0,
            stderr: 0.0,
            method: DriftMethod::ClosedForm,
        });
    };
    if let Some(delta) = stationary_mean_shift(model, honest, attack) {
        let vh = predictor.honest_cov();
        let vc = predictor.corrupt_cov();
        if vh == vc && delta.iter().all(|d| *d == 0.0) {
            return Ok(DriftEstimate {
                drift: 0.0,
                stderr: 0.0,
                method: DriftMethod::ClosedForm,
            });
        }
        let kl = 0.5
            * (vh.trace_inv_product(vc.matrix()) + vh.quad_form_inv(&delta)? - model.n_agents() as f64 + vh.logdet()
                - vc.logdet());
        return Ok(DriftEstimate {
            drift: -kl,
            stderr: 0.0,
            method: DriftMethod::ClosedForm,
        });
    }
    let traj = simulate(model, honest, Some(attack), DRIFT_MC_STEPS, seed)?;
    let series = rn_series(&traj, model, honest, Some(attack))?;
    let batch = DRIFT_MC_STEPS / DRIFT_MC_BATCHES;
    let means: Vec<f64> = (0..DRIFT_MC_BATCHES)
        .map(|k| {
            let acc: KahanSum = series.steps[k * batch..(k + 1) * batch]
                .iter()
                .map(|s| s.step_log_ratio)
                .collect();
            acc.value() / batch as f64
        })
        .collect();
    let drift = means.iter().sum::<f64>() / DRIFT_MC_BATCHES as f64;
    let var = means.iter().map(|m| (m - drift).powi(2)).sum::<f64>() / (DRIFT_MC_BATCHES - 1) as f64;
    Ok(DriftEstimate {
        drift,
        stderr: (var / DRIFT_MC_BATCHES as f64).sqrt(),
        method: DriftMethod::MonteCarlo,
    })
}

/// Constant `μ^π̆ − μ^π`, when it does not depend on the history.
pub fn stationary_mean_shift(model: &CpsModel, honest: &HonestPolicy, attack: &Attack) -> Option<Vec<f64>> {
    let n = model.n_agents();
    let (gain, offset) = honest.stationary_affine(n)?;
    let b = model.actuator_gains();
    let mut delta = vec![0.0; n];
    for (&agent, ch) in attack.config().malicious().iter().zip(attack.channels()) {
        let (row, c) = ch.stationary_affine_row(agent, gain.row(agent), offset[agent])?;
        if row.as_slice() != gain.row(agent) {
            return None;
        }
        delta[agent] = b[agent] * (c - offset[agent]);
    }
    Some(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::model;
    use crate::model::AttackConfig;
    use crate::numerics::SquareMatrix;
    use crate::policies::{CorruptChannel, FdiOffset, GainSchedule, ReplacementMap};
    use std::f64::consts::PI;

    fn eye(n: usize) -> Vec<Vec<f64>> {
        SquareMatrix::identity(n).to_rows()
    }

    fn step(ratio: f64) -> StepStats {
        StepStats {
            t: 0,
            honest_logdens: 0.0,
            corrupt_logdens: -ratio,
            step_log_ratio: ratio,
            s: 1.0,
            s_breve: 1.0,
            half_logdet_ratio: 0.0,
        }
    }

    #[test]
    fn classify_tie_breaks_to_honest() {
        let series = DetectionSeries::from_steps(vec![step(-10.0)]);
        assert_eq!(classify(&series, 0, -10.0).unwrap(), Decision::Honest);
        assert_eq!(classify(&series, 1, -10.0).unwrap(), Decision::Honest);
        let series = DetectionSeries::from_steps(vec![step(-10.5)]);
        assert_eq!(classify(&series, 1, -10.0).unwrap(), Decision::Attack);
        assert!(classify(&series, 2, -10.0).is_err());
    }

    #[test]
    fn undefined_ratio_is_flagged() {
        let mut s = step(0.0);
        s.s_breve = 0.0;
        let series = DetectionSeries::from_steps(vec![s]);
        assert_eq!(series.r_n(1), Err(DetectionError::UndefinedRatio { n: 1 }));
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap(), "1,0,,1,0,0");
    }

    #[test]
    fn scalar_step_ratio_by_hand() {
        // honest N(0,2), corrupt N(0,1), residual 1 under both.
        let h = GaussianLaw::full(vec![0.0], SpdMatrix::from_rows(&[vec![2.0]]).unwrap()).unwrap();
        let c = GaussianLaw::full(vec![0.0], SpdMatrix::identity(1)).unwrap();
        let l = log_gaussian_density(&[1.0], &h).unwrap() - log_gaussian_density(&[1.0], &c).unwrap();
        assert!((l - (-0.5 * 2.0_f64.ln() + 0.25)).abs() < 1e-14);
    }

    fn replacement() -> (CpsModel, Attack) {
        let m = model(&[vec![0.0, 0.5], vec![0.0, 0.0]], &[1.0, 1.0], &eye(2), &[1.0, 1.0]);
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Replacement(ReplacementMap::Constant(0.0)),
        )
        .unwrap();
        (m, attack)
    }

    #[test]
    fn det_ratio_products() {
        let (m, attack) = replacement();
        let traj = simulate(&m, &HonestPolicy::Zero, Some(&attack), 10, 1).unwrap();
        let series = rn_series(&traj, &m, &HonestPolicy::Zero, Some(&attack)).unwrap();
        assert!((det_ratio_bound(&series, 1).unwrap() - 0.5_f64.sqrt()).abs() < 1e-14);
        assert!((det_ratio_bound(&series, 10).unwrap() - 2.0_f64.powi(-5)).abs() < 1e-14);
    }

    #[test]
    fn fdi_det_ratio_is_one() {
        let (m, _) = replacement();
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Fdi(FdiOffset::Constant(2.0)),
        )
        .unwrap();
        let traj = simulate(&m, &HonestPolicy::Zero, Some(&attack), 10, 1).unwrap();
        let series = rn_series(&traj, &m, &HonestPolicy::Zero, Some(&attack)).unwrap();
        assert_eq!(det_ratio_bound(&series, 10).unwrap(), 1.0);
    }

    #[test]
    fn mimic_gives_zero_log_ratio() {
        let (m, _) = replacement();
        let policy = HonestPolicy::Linear(GainSchedule::Stationary(SquareMatrix::from_diagonal(&[-0.2, 0.1])));
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Mimic { variance: 1.0 },
        )
        .unwrap();
        let traj = simulate(&m, &policy, Some(&attack), 200, 3).unwrap();
        let series = rn_series(&traj, &m, &policy, Some(&attack)).unwrap();
        for n in 0..=200 {
            assert_eq!(series.log_l(n).unwrap(), 0.0);
        }
        // identical laws: s and s̆ differ only through λ_min vs λ_max
        assert!((series.r_n(200).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn drift_closed_forms() {
        // scalar honest N(·,2) vs corrupt N(·,1): ¼ − ½ log 2
        let m = model(&[vec![0.3, 0.2], vec![0.0, 0.3]], &[1.0, 1.0], &eye(2), &[1.0, 0.0]);
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Replacement(ReplacementMap::Constant(0.0)),
        )
        .unwrap();
        let d = expected_step_drift(&m, &HonestPolicy::Zero, Some(&attack), 0).unwrap();
        assert_eq!(d.method, DriftMethod::ClosedForm);
        assert!((d.drift - (0.25 - 0.5 * 2.0_f64.ln())).abs() < 1e-14);

        // FDI shift d on a channel with total variance 2: −d²/4
        let m = model(&[vec![0.3, 0.2], vec![0.0, 0.3]], &[1.0, 1.0], &eye(2), &[1.0, 1.0]);
        let attack = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Fdi(FdiOffset::Constant(0.8)),
        )
        .unwrap();
        let d = expected_step_drift(&m, &HonestPolicy::Zero, Some(&attack), 0).unwrap();
        assert!((d.drift + 0.64 / 4.0).abs() < 1e-14);

        let mimic = Attack::uniform(
            AttackConfig::new(&m, vec![0]).unwrap(),
            CorruptChannel::Mimic { variance: 1.0 },
        )
        .unwrap();
        assert_eq!(expected_step_drift(&m, &HonestPolicy::Zero, Some(&mimic), 0).unwrap().drift, 0.0);
        assert_eq!(expected_step_drift(&m, &HonestPolicy::Zero, None, 0).unwrap().drift, 0.0);
    }

    #[test]
    fn drift_monte_carlo_fallback_agrees_with_closed_form() {
        // A two-lag replacement window with a zero second lag has the same
        // law as the one-lag version but forces the Monte Carlo path.
        let m = model(&[vec![0.5, 0.3], vec![0.0, 0.5]], &[1.0, 1.0], &eye(2), &[1.0, 1.0]);
        let cfg = AttackConfig::new(&m, vec![0]).unwrap();
        let exact = Attack::uniform(cfg.clone(), CorruptChannel::Replacement(ReplacementMap::WindowState(vec![0.0])))
            .unwrap();
        let windowed =
            Attack::uniform(cfg, CorruptChannel::Replacement(ReplacementMap::WindowState(vec![0.0, 0.0]))).unwrap();
        let a = expected_step_drift(&m, &HonestPolicy::Zero, Some(&exact), 0).unwrap();
        let b = expected_step_drift(&m, &HonestPolicy::Zero, Some(&windowed), 5).unwrap();
        assert_eq!(b.method, DriftMethod::MonteCarlo);
        assert!(b.stderr > 0.0);
        assert!((a.drift - b.drift).abs() < 4.0 * b.stderr, "{a:?} vs {b:?}");
    }

    #[test]
    fn oracle_scalar_marginal() {
        let m = model(&[vec![0.0]], &[1.0], &eye(1), &[1.0]);
        let traj = Trajectory {
            states: vec![vec![0.0], vec![0.0]],
            controls: vec![vec![0.0]],
            excitations: vec![vec![0.0]],
            seed: 0,
            attacked: false,
        };
        let v = joint_log_density_oracle(&traj, &m, &SquareMatrix::zeros(1)).unwrap();
        assert!((v - (-0.5 * (2.0 * PI).ln() - 0.5 * 2.0_f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn oracle_rejects_attacked_paths() {
        let (m, attack) = replacement();
        let traj = simulate(&m, &HonestPolicy::Zero, Some(&attack), 3, 1).unwrap();
        assert_eq!(
            joint_log_density_oracle(&traj, &m, &SquareMatrix::zeros(2)),
            Err(DetectionError::UnsupportedPolicy)
        );
    }
}
