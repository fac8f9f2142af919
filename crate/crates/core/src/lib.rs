//! Uncertainty-aware reward design.
//!
//! Candidate reward functions are sampled from a language model, screened by
//! cross-sample self-consistency, deduplicated without evaluation, and the
//! reward-intensity hyperparameters of each survivor are tuned with an
//! uncertainty-aware Bayesian optimizer. The outer loop alternates component
//! design with intensity tuning until the best reward function emerges.
//!
//! Module map:
//!
//! - [`model`]: reward candidates, components, hyperparameters, evaluation records.
//! - [`similarity`]: Ratcliff–Obershelp text similarity and embedding providers.
//! - [`uncertainty`]: component/sample uncertainty, similarity groups, filtering.
//! - [`gp`]: Gaussian-process surrogate with the uncertainty-weighted Matérn kernel.
//! - [`acquisition`]: EI, uncertainty-accelerated EI and the multi-start maximizer.
//! - [`uabo`]: the per-sample inner optimization loop.
//! - [`evaluator`]: synthetic and external-command evaluators, HNS.
//! - [`orchestrator`]: the outer loop, LLM clients, prompts and the run ledger.
//! - [`report`]: metrics and benchmark exports.

pub mod acquisition;
pub mod evaluator;
pub mod gp;
pub mod model;
pub mod orchestrator;
pub mod report;
pub mod seq;
mod http;
pub mod similarity;
pub mod uabo;
pub mod uncertainty;

pub use acquisition::{AcquisitionContext, AcquisitionMode, MaximizerConfig};
pub use evaluator::{hns, Evaluator, EvaluatorError, ExternalEvaluator, SyntheticEvaluator, SyntheticPreset, SyntheticTaskSpec};
pub use gp::{GpError, GpModel, KernelParams, MaternNu};
pub use orchestrator::{OuterLoopConfig, RunLedger};
pub use similarity::{EmbeddingProvider, HashEmbedder, SimilarityEngine, SimilarityScore};
pub use uabo::{InnerLoopConfig, InnerLoopResult};
pub use uncertainty::{SimilarityGroup, UncertaintyReport};
pub use model::{
    default_bounds, parse_reward_sample, ComponentStats, EvaluationRecord, HyperparameterSpec, ParseConfig, ParseError, RewardComponent,
    RewardFunctionSample, Scale,
};
