//! Multi-seed study over the four synthetic structural changes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::datagen::{self, DatasetKind, DriftSchedule, TimeDirection};
use crate::detect::{Direction, EvalResult, Transition};
use crate::error::{Error, Result};
use crate::pipeline::{analyze_series, Method, RunConfig, RunOutput};
use crate::report::eval_fields;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    Split,
    Merge,
    Disappearance,
    Emergence,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Split, Scenario::Merge, Scenario::Disappearance, Scenario::Emergence];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Split => "split",
            Scenario::Merge => "merge",
            Scenario::Disappearance => "disappearance",
            Scenario::Emergence => "emergence",
        }
    }

    pub fn schedule(self) -> DriftSchedule {
        let (name, direction) = match self {
            Scenario::Split => (DatasetKind::MovingOverlap, TimeDirection::Forward),
            Scenario::Merge => (DatasetKind::MovingOverlap, TimeDirection::Reverse),
            Scenario::Disappearance => (DatasetKind::MovingImbalance, TimeDirection::Forward),
            Scenario::Emergence => (DatasetKind::MovingImbalance, TimeDirection::Reverse),
        };
        DriftSchedule::new(name, direction)
    }

    /// Alarm direction matching the known change in cluster count.
    pub fn alarm_direction(self) -> Direction {
        match self {
            Scenario::Split | Scenario::Emergence => Direction::Increase,
            Scenario::Merge | Scenario::Disappearance => Direction::Decrease,
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub run: RunConfig,
    pub scenarios: Vec<Scenario>,
    pub seeds: usize,
    pub master_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { run: RunConfig::default(), scenarios: Scenario::ALL.to_vec(), seeds: 20, master_seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub scenario: Scenario,
    pub seed_index: usize,
    pub output: RunOutput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean_auc: f64,
    /// Mean delay with runs that never alarm after `t*` counted as `T + 1 - t*`.
    pub mean_delay: f64,
    pub detected: usize,
    pub mean_benefit: f64,
    pub mean_far: f64,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub runs: Vec<BenchRun>,
    pub summary: BTreeMap<(Scenario, Method), Summary>,
}

impl BenchResult {
    pub fn get(&self, scenario: Scenario, method: Method) -> Option<&Summary> {
        self.summary.get(&(scenario, method))
    }
}

/// Run every (scenario, seed) pair. Data and EM seeds for seed index `i` are
/// derived from the master seed, so results do not depend on execution order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    if cfg.seeds == 0 || cfg.scenarios.is_empty() {
        return Err(Error::Config("bench needs at least one seed and one scenario".into()));
    }
    let jobs: Vec<(Scenario, usize)> =
        cfg.scenarios.iter().flat_map(|&sc| (0..cfg.seeds).map(move |i| (sc, i))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(scenario, i)| {
            let schedule = scenario.schedule();
            let data_seed = derive_seed(cfg.master_seed, &[0, i as u64]);
            let panels = datagen::series(&schedule, data_seed)?;
            let mut run = cfg.run.clone();
            run.em.seed = derive_seed(cfg.master_seed, &[1, i as u64]);
            run.detector.direction = scenario.alarm_direction();
            run.transition = Some(Transition { start: schedule.transition_start, end: schedule.transition_end });
            let output = analyze_series(&panels, &run)?;
            Ok(BenchRun { scenario, seed_index: i, output })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = BTreeMap::new();
    for &scenario in &cfg.scenarios {
        let schedule = scenario.schedule();
        let censored = (schedule.steps + 1 - schedule.transition_start) as f64;
        for &method in &cfg.run.methods {
            let evals: Vec<&EvalResult> = runs
                .iter()
                .filter(|r| r.scenario == scenario)
                .filter_map(|r| r.output.eval.get(&method))
                .collect();
            let n = evals.len() as f64;
            let mean = |f: &dyn Fn(&EvalResult) -> f64| evals.iter().map(|e| f(e)).sum::<f64>() / n;
            summary.insert(
                (scenario, method),
                Summary {
                    mean_auc: mean(&|e| e.auc),
                    mean_delay: mean(&|e| e.delay.map_or(censored, |d| d as f64)),
                    detected: evals.iter().filter(|e| e.delay.is_some()).count(),
                    mean_benefit: mean(&|e| e.benefit),
                    mean_far: mean(&|e| e.far),
                    runs: evals.len(),
                },
            );
        }
    }
    Ok(BenchResult { runs, summary })
}

/// Per-run evaluation rows.
pub fn eval_csv(result: &BenchResult) -> String {
    let mut s = String::from("scenario,seed,method,auc,delay,benefit,far\n");
    for run in &result.runs {
        for (m, e) in &run.output.eval {
            let _ = writeln!(s, "{},{},{m},{}", run.scenario, run.seed_index, eval_fields(e));
        }
    }
    s
}

/// Mean evaluation per (scenario, method).
pub fn summary_csv(result: &BenchResult) -> String {
    let mut s = String::from("scenario,method,auc,delay,detected,runs,benefit,far\n");
    for ((sc, m), v) in &result.summary {
        let _ = writeln!(
            s,
            "{sc},{m},{},{},{},{},{},{}",
            v.mean_auc, v.mean_delay, v.detected, v.runs, v.mean_benefit, v.mean_far
        );
    }
    s
}

/// Score series of every run.
pub fn scores_csv(result: &BenchResult) -> String {
    let mut s = String::from("scenario,seed,t,method,value\n");
    for run in &result.runs {
        for r in &run.output.records {
            for &m in &run.output.methods {
                let _ = writeln!(s, "{},{},{},{m},{}", run.scenario, run.seed_index, r.t, r.score(m));
            }
        }
    }
    s
}

pub fn summary_md(result: &BenchResult) -> String {
    let mut s = String::from("# Benchmark\n\n| scenario | method | AUC | delay | detected | benefit | FAR |\n|---|---|---|---|---|---|---|\n");
    for ((sc, m), v) in &result.summary {
        let _ = writeln!(
            s,
            "| {sc} | {m} | {:.3} | {:.1} | {}/{} | {:.3} | {:.3} |",
            v.mean_auc, v.mean_delay, v.detected, v.runs, v.mean_benefit, v.mean_far
        );
    }
    s
}

pub fn write_bench(result: &BenchResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("eval.csv", eval_csv(result)),
        ("summary.csv", summary_csv(result)),
        ("scores.csv", scores_csv(result)),
        ("report.md", summary_md(result)),
    ];
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
