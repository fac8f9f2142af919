//! Plot-ready metrics from a run ledger and the matched EI/uEI benchmark.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::AcquisitionMode;
use crate::evaluator::{hns, SyntheticEvaluator, SyntheticPreset};
use crate::model::{parse_reward_sample, ParseConfig, ParseError};
use crate::orchestrator::RunLedger;
use crate::uabo::{evals_to_tolerance, run_inner_loop, InnerLoopConfig, InnerLoopError, InnerLoopTask};

/// One `metrics.csv` line: cumulative counters and the best fitness so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    #[serde(rename = "NLC_cum")]
    pub nlc_cum: usize,
    #[serde(rename = "NOE_cum")]
    pub noe_cum: usize,
    pub best_fitness: Option<f64>,
    pub hns_if_configured: Option<f64>,
    pub std: Option<f64>,
    pub range: Option<f64>,
}

/// One row per iteration. `baselines` is `(human, sparse)`.
pub fn metrics_rows(ledger: &RunLedger, baselines: Option<(f64, f64)>) -> Vec<MetricsRow> {
    let (mut nlc, mut noe) = (0, 0);
    let mut best: Option<f64> = None;
    ledger
        .iterations
        .iter()
        .map(|it| {
            nlc += it.nlc();
            noe += it.noe();
            if let Some(b) = it.best() {
                best = Some(best.map_or(b.best_fitness, |v| v.max(b.best_fitness)));
            }
            MetricsRow {
                iteration: it.iteration,
                nlc_cum: nlc,
                noe_cum: noe,
                best_fitness: best,
                hns_if_configured: best.zip(baselines).and_then(|(m, (h, s))| hns(m, h, s).ok()),
                std: it.dispersion.map(|d| d.std),
                range: it.dispersion.map(|d| d.range),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub tasks: Vec<SyntheticPreset>,
    #[serde(default = "default_modes")]
    pub modes: Vec<AcquisitionMode>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Relative distance to the optimum that counts as reached.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Uncertainty assigned to dimensions whose concept matters.
    #[serde(default = "default_active_u")]
    pub active_u: f64,
    /// Uncertainty assigned to dimensions whose concept has zero relevance.
    #[serde(default = "default_inactive_u")]
    pub inactive_u: f64,
    /// Stop each run once the tolerance is reached.
    #[serde(default = "default_true")]
    pub stop_at_tolerance: bool,
    #[serde(default)]
    pub inner: InnerLoopConfig,
}

fn default_modes() -> Vec<AcquisitionMode> {
    vec![AcquisitionMode::Ei, AcquisitionMode::Uei]
}
fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn default_budget() -> usize {
    60
}
fn default_tolerance() -> f64 {
    0.05
}
fn default_active_u() -> f64 {
    0.05
}
fn default_inactive_u() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

impl BenchConfig {
    pub fn new(tasks: Vec<SyntheticPreset>) -> Self {
        Self {
            tasks,
            modes: default_modes(),
            seeds: default_seeds(),
            budget: default_budget(),
            tolerance: default_tolerance(),
            active_u: default_active_u(),
            inactive_u: default_inactive_u(),
            stop_at_tolerance: true,
            inner: InnerLoopConfig::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("bench needs at least one task, mode and seed")]
    Empty,
    #[error("budget must be at least 1")]
    Budget,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    InnerLoop(#[from] InnerLoopError),
}

/// One `bench.csv` line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub task: String,
    pub mode: AcquisitionMode,
    pub seed: u64,
    /// `budget + 1` when the tolerance was never reached.
    pub evals_to_tolerance: usize,
    pub best_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub task: String,
    pub mode: AcquisitionMode,
    pub runs: usize,
    pub reached: usize,
    pub median_evals_to_tolerance: f64,
    pub median_best_fitness: f64,
}

/// Uncertainty per hyperparameter of a preset's canonical sample.
pub fn preset_dim_u(preset: SyntheticPreset, active_u: f64, inactive_u: f64) -> Vec<f64> {
    preset.spec().concepts.iter().map(|c| if c.relevance > 0.0 { active_u } else { inactive_u }).collect()
}

/// Inner-loop-only run on a preset's canonical sample.
pub fn bench_one(preset: SyntheticPreset, mode: AcquisitionMode, seed: u64, cfg: &BenchConfig) -> Result<BenchRow, BenchError> {
    let evaluator = SyntheticEvaluator::preset(preset);
    let spec = evaluator.spec();
    let sample = parse_reward_sample(&spec.canonical_code(), &ParseConfig::default())?.with_ids(1, 0);
    let optimum = spec.optimum();
    let threshold = optimum - cfg.tolerance * optimum.abs();
    let dim_u = preset_dim_u(preset, cfg.active_u, cfg.inactive_u);
    let sample_u = dim_u.iter().sum::<f64>() / dim_u.len().max(1) as f64;
    let inner = InnerLoopConfig {
        seed,
        acquisition: mode,
        target_fitness: cfg.stop_at_tolerance.then_some(threshold),
        ..cfg.inner.clone()
    };
    let task = InnerLoopTask { sample: &sample, dim_u, sample_u, budget: cfg.budget, iteration: 1, run_id: format!("bench-{}", preset.name()) };
    let result = run_inner_loop(&task, &evaluator, &inner)?;
    Ok(BenchRow {
        task: preset.name().to_string(),
        mode,
        seed,
        evals_to_tolerance: evals_to_tolerance(&result.history, threshold, cfg.budget),
        best_fitness: result.best_fitness,
    })
}

/// Every (task, seed, mode) combination, in that nesting order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    if cfg.tasks.is_empty() || cfg.modes.is_empty() || cfg.seeds.is_empty() {
        return Err(BenchError::Empty);
    }
    if cfg.budget == 0 {
        return Err(BenchError::Budget);
    }
    let jobs: Vec<(SyntheticPreset, u64, AcquisitionMode)> =
        cfg.tasks.iter().flat_map(|&t| cfg.seeds.iter().flat_map(move |&s| cfg.modes.iter().map(move |&m| (t, s, m)))).collect();
    jobs.par_iter().map(|&(t, s, m)| bench_one(t, m, s, cfg)).collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// One summary per (task, mode), ordered by task then mode.
pub fn summarize(rows: &[BenchRow], budget: usize) -> Vec<BenchSummary> {
    let mut groups: BTreeMap<(String, AcquisitionMode), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.task.clone(), r.mode)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((task, mode), rs)| {
            let evals: Vec<f64> = rs.iter().map(|r| r.evals_to_tolerance as f64).collect();
            let fits: Vec<f64> = rs.iter().map(|r| r.best_fitness).collect();
            BenchSummary {
                task,
                mode,
                runs: rs.len(),
                reached: rs.iter().filter(|r| r.evals_to_tolerance <= budget).count(),
                median_evals_to_tolerance: median(&evals),
                median_best_fitness: median(&fits),
            }
        })
        .collect()
}
