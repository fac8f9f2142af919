//! Prompt templates and their fills.

use std::fmt::Write as _;

use crate::model::ComponentStats;
use crate::uabo::InnerLoopResult;
use crate::uncertainty::UncertaintyReport;

pub const SYSTEM_PROMPT: &str = include_str!("../../assets/prompt_system.txt");
pub const REFLECTION_TEMPLATE: &str = include_str!("../../assets/prompt_reflection.txt");
pub const CODE_FORMAT_TIP: &str = include_str!("../../assets/prompt_code_format.txt");

pub const STATS_PLACEHOLDER: &str = "<REWARD REFLECTION HERE1>";
pub const SCORES_PLACEHOLDER: &str = "<REWARD REFLECTION HERE2>";
pub const NO_STATS: &str = "no component statistics available";

/// Task description plus environment source, the fixed inputs of every
/// generation request.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TaskBundle {
    pub task_description: String,
    pub environment_code: String,
}

pub fn initial_user_prompt(bundle: &TaskBundle) -> String {
    format!(
        "The Python environment is:\n```python\n{}\n```\nWrite a reward function for the following task: {}\n\n{}",
        bundle.environment_code.trim_end(),
        bundle.task_description.trim(),
        CODE_FORMAT_TIP
    )
}

fn format_stats(stats: &std::collections::BTreeMap<String, ComponentStats>) -> String {
    if stats.is_empty() {
        return NO_STATS.to_string();
    }
    let mut out = String::new();
    for (name, s) in stats {
        let _ = writeln!(out, "{name}: max {:.4}, mean {:.4}, min {:.4}", s.max, s.mean, s.min);
    }
    out.trim_end().to_string()
}

fn format_scores(report: &UncertaintyReport, std: f64, range: f64) -> String {
    let mut out = format!("standard deviation: {std:.4}\nextreme deviation: {range:.4}\nsample uncertainty scores:");
    for id in &report.retained {
        let u = report.normalized_sample_u.get(id).copied().unwrap_or(0.0);
        let _ = write!(out, "\n  sample {id}: {u:.4}");
        if let Some(comps) = report.component_u.get(id) {
            let parts: Vec<String> = comps.iter().map(|(name, v)| format!("{name} {v:.4}")).collect();
            if !parts.is_empty() {
                let _ = write!(out, " ({})", parts.join(", "));
            }
        }
    }
    out
}

/// Fills the reflection template with the best sample's component
/// statistics, the score dispersion and the per-component uncertainties.
pub fn build_reflection_prompt(best: &InnerLoopResult, report: &UncertaintyReport, dispersion: (f64, f64), epoch_freq: usize) -> String {
    let stats = best.best_record().map(|r| r.component_stats.clone()).unwrap_or_default();
    REFLECTION_TEMPLATE
        .replace("{epoch_freq}", &epoch_freq.to_string())
        .replace(STATS_PLACEHOLDER, &format_stats(&stats))
        .replace(SCORES_PLACEHOLDER, &format_scores(report, dispersion.0, dispersion.1))
}
