//! Budgeted Bayesian optimization of one sample's hyperparameters.
//!
//! The loop evaluates the language model's own initial values first, fills
//! in with shifted Halton points, then alternates GP fitting and acquisition
//! maximization until the per-sample budget is spent.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{maximize_acquisition, AcquisitionContext, AcquisitionMode, MaximizerConfig};
use crate::evaluator::{EvaluationRequest, Evaluator, EvaluatorError};
use crate::gp::{FitConfig, GpModel, GpSummary};
use crate::model::{mentions_identifier, EvaluationRecord, RewardFunctionSample};
use crate::seq;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetRule {
    /// `N_inner · K* · U(R)`: more budget for more uncertain samples.
    #[default]
    Proportional,
    /// `N_inner / U(R)`.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnerLoopConfig {
    pub n_inner_base: usize,
    /// Space-filling evaluations before GP proposals; `min(4, budget / 2)`
    /// when unset.
    pub n_init: Option<usize>,
    pub seed: u64,
    pub budget_rule: BudgetRule,
    pub budget_min: usize,
    pub budget_max: usize,
    pub acquisition: AcquisitionMode,
    pub fit: FitConfig,
    pub maximizer: MaximizerConfig,
    /// Stop as soon as the incumbent reaches this fitness.
    pub target_fitness: Option<f64>,
}

impl Default for InnerLoopConfig {
    fn default() -> Self {
        Self {
            n_inner_base: 10,
            n_init: None,
            seed: 0,
            budget_rule: BudgetRule::Proportional,
            budget_min: 4,
            budget_max: 40,
            acquisition: AcquisitionMode::Uei,
            fit: FitConfig::default(),
            maximizer: MaximizerConfig::default(),
            target_fitness: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("n_init must be at least 1")]
    NInit,
    #[error("budget_min ({min}) must be at least n_init ({n_init}) and at most budget_max ({max})")]
    BudgetRange { min: usize, max: usize, n_init: usize },
}

impl InnerLoopConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n_init = self.n_init.unwrap_or(1);
        if n_init == 0 {
            return Err(ConfigError::NInit);
        }
        if self.budget_min < n_init || self.budget_min > self.budget_max || self.budget_min == 0 {
            return Err(ConfigError::BudgetRange { min: self.budget_min, max: self.budget_max, n_init });
        }
        Ok(())
    }

    pub fn n_init_for(&self, budget: usize) -> usize {
        self.n_init.unwrap_or((budget / 2).min(4)).clamp(1, budget.max(1))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InnerLoopError {
    #[error("sample {sample_id}: evaluator failed after retry: {source}")]
    Evaluator { sample_id: usize, source: EvaluatorError },
    #[error("sample {sample_id}: no evaluation produced a finite fitness")]
    AllEvaluationsFailed { sample_id: usize, history: Vec<EvaluationRecord> },
    #[error("sample {sample_id}: expected {expected} uncertainty values, got {got}")]
    DimensionMismatch { sample_id: usize, expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerLoopResult {
    pub sample_id: usize,
    pub best_theta: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<EvaluationRecord>,
    pub evaluations_used: usize,
    pub budget: usize,
    /// Surrogate state behind the last proposal, if any was made.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_model: Option<GpSummary>,
}

impl InnerLoopResult {
    /// Component statistics reported with the incumbent evaluation.
    pub fn best_record(&self) -> Option<&EvaluationRecord> {
        incumbent(&self.history).map(|i| &self.history[i])
    }
}

/// Per-sample evaluation budget.
pub fn allocate_budget(normalized_u: f64, k_star: usize, cfg: &InnerLoopConfig) -> usize {
    let raw = match cfg.budget_rule {
        BudgetRule::Proportional => cfg.n_inner_base as f64 * k_star as f64 * normalized_u,
        BudgetRule::Literal if normalized_u > 0.0 => cfg.n_inner_base as f64 / normalized_u,
        BudgetRule::Literal => f64::INFINITY,
    };
    let rounded = if raw.is_finite() { raw.round().max(0.0) as usize } else { usize::MAX };
    rounded.clamp(cfg.budget_min, cfg.budget_max)
}

/// Uncertainty of each hyperparameter dimension: the mean over the
/// components whose body mentions it, or the sample mean when none does.
pub fn map_component_u_to_dims(sample: &RewardFunctionSample, component_u: &BTreeMap<String, f64>) -> Vec<f64> {
    let all: Vec<f64> = sample.components.iter().filter_map(|c| component_u.get(&c.name).copied()).collect();
    let sample_mean = if all.is_empty() { 1.0 } else { all.iter().sum::<f64>() / all.len() as f64 };
    sample
        .hyperparameters
        .iter()
        .map(|h| {
            let refs: Vec<f64> = sample
                .components
                .iter()
                .filter(|c| mentions_identifier(&c.body_text, &h.name))
                .filter_map(|c| component_u.get(&c.name).copied())
                .collect();
            if refs.is_empty() { sample_mean } else { refs.iter().sum::<f64>() / refs.len() as f64 }
        })
        .collect()
}

/// Index of the best successful record; earliest wins ties.
pub fn incumbent(history: &[EvaluationRecord]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in history.iter().enumerate() {
        if let Some(f) = r.fitness {
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((i, f));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// 1-based index of the first evaluation whose fitness reaches `threshold`,
/// or `budget + 1` when none does.
pub fn evals_to_tolerance(history: &[EvaluationRecord], threshold: f64, budget: usize) -> usize {
    history.iter().position(|r| r.fitness.is_some_and(|f| f >= threshold)).map_or(budget + 1, |i| i + 1)
}

/// Inputs that vary per sample.
#[derive(Clone, Debug)]
pub struct InnerLoopTask<'a> {
    pub sample: &'a RewardFunctionSample,
    /// Per-dimension component uncertainty.
    pub dim_u: Vec<f64>,
    /// Sample-level uncertainty (global length scale).
    pub sample_u: f64,
    pub budget: usize,
    pub iteration: usize,
    pub run_id: String,
}

fn evaluate_with_retry(
    evaluator: &dyn Evaluator,
    task: &InnerLoopTask<'_>,
    theta: Vec<f64>,
    seed: u64,
) -> Result<EvaluationRecord, InnerLoopError> {
    let mut last = None;
    for attempt in 0..2 {
        let request = EvaluationRequest { sample: task.sample, theta: theta.clone(), run_id: task.run_id.clone(), iteration: task.iteration, attempt, seed };
        let start = Instant::now();
        match evaluator.evaluate(&request) {
            Ok(mut rec) => {
                rec.wall_time = start.elapsed().as_secs_f64();
                return Ok(rec);
            }
            Err(e) => {
                log::warn!("sample {}: evaluation attempt {} failed: {e}", task.sample.sample_id, attempt + 1);
                last = Some(e);
            }
        }
    }
    Err(InnerLoopError::Evaluator { sample_id: task.sample.sample_id, source: last.expect("two attempts") })
}

pub fn run_inner_loop(task: &InnerLoopTask<'_>, evaluator: &dyn Evaluator, cfg: &InnerLoopConfig) -> Result<InnerLoopResult, InnerLoopError> {
    let sample = task.sample;
    let d = sample.hyperparameters.len();
    let sample_id = sample.sample_id;
    let seed = seq::derive_seed(cfg.seed, &[task.iteration as u64, sample_id as u64]);
    let eval_seed = |t: usize| seq::derive_seed(seed, &[0, t as u64]);

    if d == 0 {
        let rec = evaluate_with_retry(evaluator, task, Vec::new(), eval_seed(0))?;
        let Some(best_fitness) = rec.fitness else {
            return Err(InnerLoopError::AllEvaluationsFailed { sample_id, history: vec![rec] });
        };
        return Ok(InnerLoopResult { sample_id, best_theta: Vec::new(), best_fitness, history: vec![rec], evaluations_used: 1, budget: 1, last_model: None });
    }
    if task.dim_u.len() != d {
        return Err(InnerLoopError::DimensionMismatch { sample_id, expected: d, got: task.dim_u.len() });
    }

    let budget = task.budget.max(1);
    let n_init = cfg.n_init_for(budget);
    let filler = seq::shifted_halton(budget, d, seq::derive_seed(seed, &[1]));
    let mut next_filler = 0usize;
    let mut take_filler = || {
        let p = filler[next_filler.min(filler.len() - 1)].clone();
        next_filler += 1;
        p
    };
    let initial_unit = sample.to_unit(&sample.initial_theta());

    let mut history: Vec<EvaluationRecord> = Vec::with_capacity(budget);
    let mut last_model = None;
    for t in 0..budget {
        if let (Some(target), Some(i)) = (cfg.target_fitness, incumbent(&history)) {
            if history[i].fitness.is_some_and(|f| f >= target) {
                break;
            }
        }
        let unit = if t == 0 {
            initial_unit.clone()
        } else if t < n_init {
            take_filler()
        } else {
            match propose(task, &history, cfg, seq::derive_seed(seed, &[2, t as u64])) {
                Some((q, summary)) => {
                    last_model = Some(summary);
                    q
                }
                None => take_filler(),
            }
        };
        let theta = sample.from_unit(&unit);
        let rec = evaluate_with_retry(evaluator, task, theta, eval_seed(t))?;
        if let Some(e) = &rec.error {
            log::info!("sample {sample_id}: evaluation {} failed: {e}", t + 1);
        }
        history.push(rec);
    }
    assert!(history.len() <= budget, "inner loop exceeded its budget");

    let Some(best) = incumbent(&history) else {
        return Err(InnerLoopError::AllEvaluationsFailed { sample_id, history });
    };
    Ok(InnerLoopResult {
        sample_id,
        best_theta: history[best].theta.clone(),
        best_fitness: history[best].fitness.expect("incumbent is successful"),
        evaluations_used: history.len(),
        history,
        budget,
        last_model,
    })
}

/// Fits the surrogate on successful records and maximizes the acquisition.
/// `None` when nothing has succeeded yet or the fit fails.
fn propose(task: &InnerLoopTask<'_>, history: &[EvaluationRecord], cfg: &InnerLoopConfig, seed: u64) -> Option<(Vec<f64>, GpSummary)> {
    let best = incumbent(history)?;
    let (x, y): (Vec<Vec<f64>>, Vec<f64>) = history.iter().filter_map(|r| Some((task.sample.to_unit(&r.theta), r.fitness?))).unzip();
    let model = match GpModel::fit(&x, &y, &task.dim_u, task.sample_u, &cfg.fit) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("sample {}: surrogate fit failed ({e}); falling back to space filling", task.sample.sample_id);
            return None;
        }
    };
    let ctx = AcquisitionContext {
        model: &model,
        incumbent_y: history[best].fitness?,
        incumbent_theta: task.sample.to_unit(&history[best].theta),
        component_u: task.dim_u.clone(),
        mode: cfg.acquisition,
    };
    let q = maximize_acquisition(&ctx, &cfg.maximizer, seed);
    Some((q, model.summary()))
}
