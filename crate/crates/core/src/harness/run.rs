//! Batch execution and result files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::detection::{classify, expected_step_drift, rn_series, Decision, DetectionError, DetectionSeries, DriftEstimate};
use crate::mdp::{analytic_drift, induced_kernel_on, lift_path, lifted_initial, path_log_ratio, simulate_path, MdpError};
use crate::model::{honest_influence_check, InfluenceReport};
use crate::numerics::{derive_seed, splitmix64, KahanSum};
use crate::simulator::{simulate, Trajectory};

use super::scenario::{MdpScenario, Scenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("honest actuators cannot reach agent(s) {unreachable:?}; rerun with --override-assumption2 to proceed anyway")]
    Refused { unreachable: Vec<usize> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot build a pool of {jobs} worker threads: {message}")]
    Pool { jobs: usize, message: String },
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a buffered file, naming the path on failure.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool, `Some(1)` runs serially.
    pub jobs: Option<usize>,
    pub override_assumption2: bool,
}

/// Seed of run `index` in a batch.
pub fn run_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, index as u64)
}

/// Outcome of one run, in batch order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub final_log_l: Option<f64>,
    pub final_r_n: Option<f64>,
    pub decision: Option<Decision>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryJson {
    pub scenario: String,
    pub n_runs: usize,
    pub horizon: usize,
    pub threshold: f64,
    pub detection_fraction: Option<f64>,
    pub mean_drift: Option<f64>,
    pub drift_stderr: Option<f64>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub summary: SummaryJson,
    pub records: Vec<RunRecord>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

fn write_records(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    write_file(path, |out| {
        writeln!(out, "run,seed,final_logL,final_r_n,decision,error")?;
        for r in records {
            let decision = match r.decision {
                Some(Decision::Attack) => "attack",
                Some(Decision::Honest) => "honest",
                None => "",
            };
            let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            writeln!(
                out,
                "{},{},{},{},{decision},{error}",
                r.index,
                r.seed,
                opt(r.final_log_l),
                opt(r.final_r_n)
            )?;
        }
        Ok(())
    })
}

/// Detection fraction, mean of `log L_n / n` and its standard error over
/// successful runs, folded in run order.
fn aggregate(records: &[RunRecord], horizon: usize) -> (Option<f64>, Option<f64>, Option<f64>) {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    if ok.is_empty() {
        return (None, None, None);
    }
    let k = ok.len() as f64;
    let detected = ok.iter().filter(|r| r.decision == Some(Decision::Attack)).count() as f64;
    let rates: Vec<f64> = ok
        .iter()
        .map(|r| r.final_log_l.expect("successful run") / horizon as f64)
        .collect();
    let mean = rates.iter().copied().collect::<KahanSum>().value() / k;
    let stderr = (ok.len() > 1).then(|| {
        let ss = rates.iter().map(|r| (r - mean).powi(2)).collect::<KahanSum>().value();
        (ss / (k - 1.0) / k).sqrt()
    });
    (Some(detected / k), Some(mean), stderr)
}

fn map_runs<T: Send>(count: usize, jobs: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>, HarnessError> {
    match jobs {
        Some(1) => Ok((0..count).map(f).collect()),
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| HarnessError::Pool {
                    jobs,
                    message: e.to_string(),
                })?;
            Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
        }
        None => Ok((0..count).into_par_iter().map(f).collect()),
    }
}

/// Simulates and scores one seed.
pub fn detect_run(scenario: &Scenario, seed: u64) -> Result<(Trajectory, DetectionSeries), DetectionError> {
    let traj = simulate(
        &scenario.model,
        &scenario.honest,
        scenario.attack.as_ref(),
        scenario.horizon,
        seed,
    )?;
    let series = rn_series(&traj, &scenario.model, &scenario.honest, scenario.attack.as_ref())?;
    Ok((traj, series))
}

/// Refuses attack scenarios that leave an agent out of honest reach.
pub fn check_influence(scenario: &Scenario) -> InfluenceReport {
    honest_influence_check(&scenario.model, scenario.attack.as_ref().map(|a| a.config()))
}

fn per_run_path(out: &Path, index: usize) -> PathBuf {
    out.join("runs").join(format!("run_{index:05}.csv"))
}

/// Runs every seed of the scenario, writing `runs/run_NNNNN.csv`
/// (DetectionSeries), `runs.csv` and `summary.json` under `out`.
pub fn run_montecarlo(scenario: &Scenario, opts: RunOptions, out: Option<&Path>) -> Result<RunSummary, HarnessError> {
    if scenario.attack.is_some() && !opts.override_assumption2 {
        let report = check_influence(scenario);
        if !report.holds {
            return Err(HarnessError::Refused {
                unreachable: report.unreachable.iter().map(|i| i + 1).collect(),
            });
        }
    }
    let started = Instant::now();
    let n = scenario.horizon;
    let results = map_runs(scenario.seeds.count, opts.jobs, |index| -> Result<RunRecord, HarnessError> {
        let seed = run_seed(scenario.seeds.base, index);
        let mut record = RunRecord {
            index,
            seed,
            final_log_l: None,
            final_r_n: None,
            decision: None,
            error: None,
        };
        match detect_run(scenario, seed) {
            Ok((_, series)) => {
                if let Some(out) = out {
                    write_file(&per_run_path(out, index), |w| series.write_csv(w))?;
                }
                record.final_log_l = Some(series.log_l(n)?);
                record.final_r_n = series.r_n(n).ok();
                record.decision = Some(classify(&series, n, scenario.threshold)?);
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        Ok(record)
    })?;
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (detection_fraction, mean_drift, drift_stderr) = aggregate(&records, n);
    let summary = RunSummary {
        summary: SummaryJson {
            scenario: scenario.name.clone(),
            n_runs: records.len(),
            horizon: n,
            threshold: scenario.threshold,
            detection_fraction,
            mean_drift,
            drift_stderr,
            runtime_seconds: started.elapsed().as_secs_f64(),
        },
        records,
    };
    if let Some(out) = out {
        write_records(&out.join("runs.csv"), &summary.records)?;
        let json = summary.to_json();
        write_file(&out.join("summary.json"), |w| writeln!(w, "{json}"))?;
    }
    Ok(summary)
}

/// Summary printed by `detect`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectSummary {
    pub n: usize,
    #[serde(rename = "logL")]
    pub log_l: f64,
    pub r_n: Option<f64>,
    pub decision: Decision,
    pub threshold: f64,
    pub drift_estimate: DriftEstimate,
}

pub fn detect_summary(scenario: &Scenario, series: &DetectionSeries, seed: u64) -> Result<DetectSummary, DetectionError> {
    let n = series.len();
    Ok(DetectSummary {
        n,
        log_l: series.log_l(n)?,
        r_n: series.r_n(n).ok(),
        decision: classify(series, n, scenario.threshold)?,
        threshold: scenario.threshold,
        drift_estimate: expected_step_drift(
            &scenario.model,
            &scenario.honest,
            scenario.attack.as_ref(),
            splitmix64(seed),
        )?,
    })
}

/// Summary of an MDP batch: the usual keys plus the ergodic drift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdpSummaryJson {
    #[serde(flatten)]
    pub summary: SummaryJson,
    pub analytic_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpRunSummary {
    pub summary: MdpSummaryJson,
    pub records: Vec<RunRecord>,
}

impl MdpRunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

/// Honest and corrupt kernels on the common window space, plus the lifted
/// initial law.
pub fn mdp_kernels(
    scenario: &MdpScenario,
) -> Result<(crate::mdp::StateKernel, crate::mdp::StateKernel, Vec<f64>, usize), MdpError> {
    let k = scenario.honest.window().max(scenario.corrupt.window());
    let honest = induced_kernel_on(&scenario.mdp, &scenario.honest, k)?;
    let corrupt = induced_kernel_on(&scenario.mdp, &scenario.corrupt, k)?;
    Ok((honest, corrupt, lifted_initial(scenario.mdp.initial(), k), k))
}

/// Samples paths under the corrupt policy and scores them. Writes
/// `runs/run_NNNNN.csv` (`t,state,logL`), `runs.csv` and `summary.json`.
pub fn run_mdp(scenario: &MdpScenario, opts: RunOptions, out: Option<&Path>) -> Result<MdpRunSummary, HarnessError> {
    let started = Instant::now();
    let (honest, corrupt, nu, k) = mdp_kernels(scenario)?;
    let n = scenario.horizon;
    let n_states = scenario.mdp.n_states();
    let results = map_runs(scenario.seeds.count, opts.jobs, |index| -> Result<RunRecord, HarnessError> {
        let seed = run_seed(scenario.seeds.base, index);
        let path = simulate_path(&scenario.mdp, &scenario.corrupt, n, seed)?;
        let lifted = lift_path(&path, n_states, k);
        let mut record = RunRecord {
            index,
            seed,
            final_log_l: None,
            final_r_n: None,
            decision: None,
            error: None,
        };
        match path_log_ratio(&lifted, &honest, &corrupt, &nu, &nu) {
            Ok(series) => {
                if let Some(out) = out {
                    write_file(&per_run_path(out, index), |w| {
                        writeln!(w, "t,state,logL")?;
                        for (t, (x, l)) in path.iter().zip(&series).enumerate() {
                            writeln!(w, "{t},{x},{l}")?;
                        }
                        Ok(())
                    })?;
                }
                let last = series[n];
                record.final_log_l = Some(last);
                record.decision = Some(if last < scenario.threshold {
                    Decision::Attack
                } else {
                    Decision::Honest
                });
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        Ok(record)
    })?;
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (detection_fraction, mean_drift, drift_stderr) = aggregate(&records, n);
    let summary = MdpRunSummary {
        summary: MdpSummaryJson {
            summary: SummaryJson {
                scenario: scenario.name.clone(),
                n_runs: records.len(),
                horizon: n,
                threshold: scenario.threshold,
                detection_fraction,
                mean_drift,
                drift_stderr,
                runtime_seconds: started.elapsed().as_secs_f64(),
            },
            analytic_drift: analytic_drift(&honest, &corrupt).ok(),
        },
        records,
    };
    if let Some(out) = out {
        write_records(&out.join("runs.csv"), &summary.records)?;
        let json = summary.to_json();
        write_file(&out.join("summary.json"), |w| writeln!(w, "{json}"))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset_json;
    use crate::harness::scenario::{parse_mdp_scenario, parse_scenario};

    fn scenario(name: &str, count: usize, horizon: usize) -> Scenario {
        let mut s = parse_scenario(&preset_json(name).unwrap()).unwrap();
        s.seeds.count = count;
        s.horizon = horizon;
        s
    }

    #[test]
    fn single_run_matches_manual_composition() {
        let s = scenario("fdi", 1, 50);
        let summary = run_montecarlo(&s, RunOptions::default(), None).unwrap();
        let seed = run_seed(s.seeds.base, 0);
        let traj = simulate(&s.model, &s.honest, s.attack.as_ref(), 50, seed).unwrap();
        let series = rn_series(&traj, &s.model, &s.honest, s.attack.as_ref()).unwrap();
        let r = &summary.records[0];
        assert_eq!(r.final_log_l.unwrap().to_bits(), series.log_l(50).unwrap().to_bits());
        assert_eq!(r.final_r_n.unwrap().to_bits(), series.r_n(50).unwrap().to_bits());
        assert_eq!(r.decision, Some(classify(&series, 50, s.threshold).unwrap()));
        assert_eq!(summary.summary.drift_stderr, None);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let s = scenario("replacement", 16, 40);
        let a = run_montecarlo(&s, RunOptions { jobs: Some(1), ..Default::default() }, None).unwrap();
        let b = run_montecarlo(&s, RunOptions { jobs: Some(4), ..Default::default() }, None).unwrap();
        assert_eq!(a.records, b.records);
        let mut sa = a.summary.clone();
        sa.runtime_seconds = b.summary.runtime_seconds;
        assert_eq!(sa, b.summary);
    }

    #[test]
    fn example1_is_refused_without_override() {
        let s = scenario("example1", 2, 10);
        assert!(matches!(
            run_montecarlo(&s, RunOptions::default(), None),
            Err(HarnessError::Refused { ref unreachable }) if unreachable == &[1]
        ));
        let opts = RunOptions {
            override_assumption2: true,
            ..Default::default()
        };
        assert_eq!(run_montecarlo(&s, opts, None).unwrap().records.len(), 2);
    }

    #[test]
    fn identity_runs_never_detect() {
        let s = scenario("identity", 8, 30);
        let summary = run_montecarlo(&s, RunOptions::default(), None).unwrap();
        assert_eq!(summary.summary.detection_fraction, Some(0.0));
        assert!(summary.records.iter().all(|r| r.final_log_l == Some(0.0)));
    }

    #[test]
    fn summary_keys_are_exact() {
        let s = scenario("mimic", 3, 10);
        let json: serde_json::Value = serde_json::from_str(&run_montecarlo(&s, RunOptions::default(), None).unwrap().to_json()).unwrap();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "detection_fraction",
                "drift_stderr",
                "horizon",
                "mean_drift",
                "n_runs",
                "runtime_seconds",
                "scenario",
                "threshold"
            ]
        );
    }

    #[test]
    fn mdp_presets_run() {
        let s = parse_mdp_scenario(&preset_json("mdp-mimic").unwrap()).unwrap();
        let summary = run_mdp(&s, RunOptions::default(), None).unwrap();
        assert_eq!(summary.summary.summary.detection_fraction, Some(0.0));
        assert_eq!(summary.summary.analytic_drift, Some(0.0));
        let s = parse_mdp_scenario(&preset_json("mdp-detect").unwrap()).unwrap();
        let summary = run_mdp(&s, RunOptions::default(), None).unwrap();
        assert!((summary.summary.analytic_drift.unwrap() + 0.5951).abs() < 1e-4);
        assert_eq!(summary.summary.summary.detection_fraction, Some(1.0));
    }
}
