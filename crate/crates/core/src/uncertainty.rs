//! Self-consistency uncertainty of reward components and samples, and
//! redundancy grouping of whole reward functions.
//!
//! A component is "matched" by another sample when any of that sample's
//! components has combined similarity strictly above `ω`. Its uncertainty is
//! `1 - matches / K` over the `K` samples of the batch, counting every other
//! sample (order-invariant).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_text, RewardFunctionSample};
use crate::similarity::{SimilarityEngine, SimilarityError};

/// Default similarity threshold for both component and function matching.
pub const DEFAULT_OMEGA: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("no samples")]
    Empty,
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("duplicate sample id {0}")]
    DuplicateSampleId(usize),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Component uncertainties keyed by sample id, then component name.
pub type ComponentUncertainty = BTreeMap<usize, BTreeMap<String, f64>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityGroup {
    pub representative: usize,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub component_u: ComponentUncertainty,
    pub raw_sample_u: BTreeMap<usize, f64>,
    /// Normalized over the retained samples only.
    pub normalized_sample_u: BTreeMap<usize, f64>,
    pub groups: Vec<SimilarityGroup>,
    pub retained: Vec<usize>,
}

fn check_inputs(samples: &[RewardFunctionSample], omega: f64) -> Result<(), UncertaintyError> {
    if samples.is_empty() {
        return Err(UncertaintyError::Empty);
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(UncertaintyError::InvalidThreshold(omega));
    }
    let mut seen = BTreeSet::new();
    for s in samples {
        if !seen.insert(s.sample_id) {
            return Err(UncertaintyError::DuplicateSampleId(s.sample_id));
        }
    }
    Ok(())
}

/// `combined > omega`, skipping the embedding lookup when text alone clears it.
fn exceeds(engine: &SimilarityEngine, a: &str, b: &str, omega: f64) -> Result<bool, SimilarityError> {
    if engine.text(a, b)?.value() > omega {
        return Ok(true);
    }
    Ok(engine.semantic(a, b)?.value() > omega)
}

pub fn component_uncertainty(
    samples: &[RewardFunctionSample],
    omega: f64,
    engine: &SimilarityEngine,
) -> Result<ComponentUncertainty, UncertaintyError> {
    check_inputs(samples, omega)?;
    let texts: Vec<&str> = samples.iter().flat_map(|s| s.components.iter().map(|c| c.normalized_text.as_str())).collect();
    engine.prefetch(&texts).map_err(SimilarityError::from)?;

    let k = samples.len() as f64;
    let jobs: Vec<(usize, usize)> = samples.iter().enumerate().flat_map(|(i, s)| (0..s.components.len()).map(move |c| (i, c))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, c)| {
            let text = samples[i].components[c].normalized_text.as_str();
            let mut matches = 0usize;
            for (j, other) in samples.iter().enumerate() {
                if j == i {
                    continue;
                }
                for oc in &other.components {
                    if exceeds(engine, text, &oc.normalized_text, omega)? {
                        matches += 1;
                        break;
                    }
                }
            }
            Ok(1.0 - matches as f64 / k)
        })
        .collect::<Result<_, SimilarityError>>()?;

    let mut out = ComponentUncertainty::new();
    for (&(i, c), u) in jobs.iter().zip(scores) {
        out.entry(samples[i].sample_id).or_default().insert(samples[i].components[c].name.clone(), u);
    }
    for s in samples {
        out.entry(s.sample_id).or_default();
    }
    Ok(out)
}

/// Mean component uncertainty per sample. A sample without components
/// scores 1.
pub fn raw_sample_uncertainty(component_u: &ComponentUncertainty, samples: &[RewardFunctionSample]) -> BTreeMap<usize, f64> {
    samples
        .iter()
        .map(|s| {
            let us: Vec<f64> = s.components.iter().filter_map(|c| component_u.get(&s.sample_id)?.get(&c.name).copied()).collect();
            let raw = if us.is_empty() { 1.0 } else { us.iter().sum::<f64>() / us.len() as f64 };
            (s.sample_id, raw)
        })
        .collect()
}

/// Divides each raw score by the total over `ids`, falling back to uniform
/// weights when the total vanishes.
pub fn normalize_over(raw: &BTreeMap<usize, f64>, ids: &[usize]) -> BTreeMap<usize, f64> {
    let total: f64 = ids.iter().filter_map(|id| raw.get(id)).sum();
    ids.iter()
        .map(|&id| {
            let v = if total > 0.0 { raw.get(&id).copied().unwrap_or(0.0) / total } else { 1.0 / ids.len() as f64 };
            (id, v)
        })
        .collect()
}

/// Raw and normalized sample uncertainty over all given samples.
pub fn sample_uncertainty(
    component_u: &ComponentUncertainty,
    samples: &[RewardFunctionSample],
) -> (BTreeMap<usize, f64>, BTreeMap<usize, f64>) {
    let raw = raw_sample_uncertainty(component_u, samples);
    let ids: Vec<usize> = samples.iter().map(|s| s.sample_id).collect();
    let normalized = normalize_over(&raw, &ids);
    (raw, normalized)
}

/// Greedy threshold grouping in ascending sample-id order.
pub fn build_groups(samples: &[RewardFunctionSample], omega: f64, engine: &SimilarityEngine) -> Result<Vec<SimilarityGroup>, UncertaintyError> {
    check_inputs(samples, omega)?;
    let mut order: Vec<(usize, String)> = samples.iter().map(|s| (s.sample_id, normalize_text(&s.code_text))).collect();
    order.sort_by_key(|(id, _)| *id);
    let texts: Vec<&str> = order.iter().map(|(_, t)| t.as_str()).collect();
    engine.prefetch(&texts).map_err(SimilarityError::from)?;

    let mut assigned = vec![false; order.len()];
    let mut groups = Vec::new();
    for i in 0..order.len() {
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let mut members = vec![order[i].0];
        for j in i + 1..order.len() {
            if !assigned[j] && exceeds(engine, &order[i].1, &order[j].1, omega)? {
                assigned[j] = true;
                members.push(order[j].0);
            }
        }
        groups.push(SimilarityGroup { representative: order[i].0, members });
    }
    Ok(groups)
}

/// Score dispersion: population standard deviation and range.
pub fn score_dispersion(scores: &[f64]) -> (f64, f64) {
    if scores.is_empty() {
        return (0.0, 0.0);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    (std, max - min)
}

impl UncertaintyReport {
    pub fn build(samples: &[RewardFunctionSample], omega: f64, engine: &SimilarityEngine) -> Result<Self, UncertaintyError> {
        Self::build_with(samples, omega, engine, true)
    }

    /// With `filter == false` every sample forms its own group, so all are
    /// retained.
    pub fn build_with(samples: &[RewardFunctionSample], omega: f64, engine: &SimilarityEngine, filter: bool) -> Result<Self, UncertaintyError> {
        let component_u = component_uncertainty(samples, omega, engine)?;
        let raw_sample_u = raw_sample_uncertainty(&component_u, samples);
        let groups = if filter {
            build_groups(samples, omega, engine)?
        } else {
            let mut ids: Vec<usize> = samples.iter().map(|s| s.sample_id).collect();
            ids.sort();
            ids.into_iter().map(|id| SimilarityGroup { representative: id, members: vec![id] }).collect()
        };
        let retained: Vec<usize> = groups.iter().map(|g| g.representative).collect();
        let normalized_sample_u = normalize_over(&raw_sample_u, &retained);
        Ok(Self { component_u, raw_sample_u, normalized_sample_u, groups, retained })
    }

    /// Component uncertainties of one sample, in the sample's component order.
    pub fn components_of(&self, sample: &RewardFunctionSample) -> Vec<(String, f64)> {
        let map = self.component_u.get(&sample.sample_id);
        sample.components.iter().map(|c| (c.name.clone(), map.and_then(|m| m.get(&c.name)).copied().unwrap_or(1.0))).collect()
    }
}

/// Retained representatives in ascending sample-id order.
pub fn filter_redundant(samples: &[RewardFunctionSample], report: &UncertaintyReport) -> Vec<RewardFunctionSample> {
    let keep: BTreeSet<usize> = report.retained.iter().copied().collect();
    let mut out: Vec<RewardFunctionSample> = samples.iter().filter(|s| keep.contains(&s.sample_id)).cloned().collect();
    out.sort_by_key(|s| s.sample_id);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RewardComponent;
    use crate::similarity::combined_similarity;
    use crate::similarity::HashEmbedder;

    pub(super) fn sample(id: usize, comps: &[(&str, &str)]) -> RewardFunctionSample {
        let body: String = comps.iter().map(|(n, b)| format!("    {n} = {b}\n")).collect();
        let dict: String = comps.iter().map(|(n, _)| format!("\"{n}\": {n}, ")).collect();
        RewardFunctionSample {
            sample_id: id,
            code_text: format!("def compute_reward(obs):\n{body}    return 0, {{{dict}}}\n"),
            components: comps.iter().map(|(n, b)| RewardComponent::new(*n, format!("{n} = {b}"))).collect(),
            hyperparameters: Vec::new(),
            iteration: 1,
        }
    }

    /// Direct pairwise count with the free similarity functions.
    fn brute_force(samples: &[RewardFunctionSample], omega: f64) -> ComponentUncertainty {
        let p = HashEmbedder::default();
        let mut out = ComponentUncertainty::new();
        for (i, s) in samples.iter().enumerate() {
            for c in &s.components {
                let count = samples
                    .iter()
                    .enumerate()
                    .filter(|(j, o)| *j != i && o.components.iter().any(|oc| combined_similarity(&c.normalized_text, &oc.normalized_text, &p).unwrap().value() > omega))
                    .count();
                out.entry(s.sample_id).or_default().insert(c.name.clone(), 1.0 - count as f64 / samples.len() as f64);
            }
        }
        out
    }

    fn four_samples() -> Vec<RewardFunctionSample> {
        let shared = ("velocity_reward", "obs.lin_vel[:, 0] * velocity_temp");
        vec![
            sample(0, &[shared, ("height_bonus", "torch.exp(obs.height / height_temp)")]),
            sample(1, &[shared, ("joint_pen", "-torch.sum(obs.dof_vel ** 2, dim=-1)")]),
            sample(2, &[("rot_err", "quat_diff(obs.rot, goal)"), shared]),
            sample(3, &[shared, ("spin", "torch.abs(obs.ang_vel[:, 2]) * 0.5 + fingertip_dist.mean()")]),
        ]
    }

    #[test]
    fn shared_component_matches_all_others() {
        let samples = four_samples();
        let engine = SimilarityEngine::offline();
        let u = component_uncertainty(&samples, DEFAULT_OMEGA, &engine).unwrap();
        assert_eq!(u, brute_force(&samples, DEFAULT_OMEGA));
        for id in 0..4 {
            assert_eq!(u[&id]["velocity_reward"], 0.25);
        }
        assert_eq!(u[&0]["height_bonus"], 1.0);
    }

    #[test]
    fn single_sample_is_fully_uncertain() {
        let samples = vec![sample(7, &[("a", "x * 2"), ("b", "y + 1")])];
        let u = component_uncertainty(&samples, DEFAULT_OMEGA, &SimilarityEngine::offline()).unwrap();
        assert_eq!(u[&7].values().copied().collect::<Vec<_>>(), [1.0, 1.0]);
        let (_, norm) = sample_uncertainty(&u, &samples);
        assert_eq!(norm[&7], 1.0);
    }

    #[test]
    fn normalization_examples() {
        let raw: BTreeMap<usize, f64> = [(0, 0.6), (1, 0.2)].into();
        let n = normalize_over(&raw, &[0, 1]);
        assert!((n[&0] - 0.75).abs() < 1e-12 && (n[&1] - 0.25).abs() < 1e-12);
        let zero: BTreeMap<usize, f64> = [(0, 0.0), (1, 0.0), (2, 0.0)].into();
        assert_eq!(normalize_over(&zero, &[0, 1, 2])[&1], 1.0 / 3.0);
    }

    #[test]
    fn identical_samples_are_uniform() {
        let comps = [("a", "obs.x * 3.0"), ("b", "torch.norm(obs.v)")];
        let samples: Vec<_> = (0..3).map(|i| sample(i, &comps)).collect();
        let engine = SimilarityEngine::offline();
        let u = component_uncertainty(&samples, DEFAULT_OMEGA, &engine).unwrap();
        assert!(u.values().flat_map(|m| m.values()).all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
        let (_, norm) = sample_uncertainty(&u, &samples);
        assert!(norm.values().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
        let groups = build_groups(&samples, DEFAULT_OMEGA, &engine).unwrap();
        assert_eq!(groups, vec![SimilarityGroup { representative: 0, members: vec![0, 1, 2] }]);
    }

    #[test]
    fn near_duplicate_is_grouped() {
        let a = sample(0, &[("dist_reward", "-torch.norm(obs.hand_pos - obs.object_pos, dim=-1) * dist_reward_temp")]);
        let mut a2 = a.clone();
        a2.sample_id = 1;
        a2.code_text = a2.code_text.replace("obs)", "obs)  # observation batch");
        let b = sample(2, &[("upright", "torch.exp(-(1.0 - obs.up_proj) / upright_temp)"), ("energy", "-actions.pow(2).sum(-1)")]);
        let samples = vec![b, a2, a];
        let engine = SimilarityEngine::offline();
        let report = UncertaintyReport::build(&samples, DEFAULT_OMEGA, &engine).unwrap();
        assert_eq!(report.groups.len(), 2);
        assert_eq!(report.groups[0].members, vec![0, 1]);
        assert_eq!(report.retained, vec![0, 2]);
        let kept: Vec<usize> = filter_redundant(&samples, &report).iter().map(|s| s.sample_id).collect();
        assert_eq!(kept, vec![0, 2]);
        let total: f64 = report.normalized_sample_u.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sixteen_samples_in_four_classes() {
        let classes = [
            [("lift", "obs.object_z - obs.table_z")],
            [("reach", "-torch.norm(obs.fingertips - obs.handle, dim=-1)")],
            [("align", "torch.sum(obs.rot_a * obs.rot_b, dim=-1) ** 2")],
            [("vel", "obs.root_vel[:, 0].clamp(min=0.0) * 4.0")],
        ];
        let samples: Vec<_> = (0..16).map(|i| sample(i, &classes[i % 4])).collect();
        let engine = SimilarityEngine::offline();
        let report = UncertaintyReport::build(&samples, DEFAULT_OMEGA, &engine).unwrap();
        assert_eq!(filter_redundant(&samples, &report).len(), 4);
        assert_eq!(report.retained, vec![0, 1, 2, 3]);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(score_dispersion(&[1.0, 1.0, 1.0]), (0.0, 0.0));
        assert_eq!(score_dispersion(&[0.0, 1.0]), (0.5, 1.0));
        let (std, range) = score_dispersion(&[0.2, 0.4, 0.9]);
        // mean 0.5, squared deviations 0.09 + 0.01 + 0.16
        assert!((std - (0.26f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((std - 0.294_392).abs() < 1e-6);
        assert!((range - 0.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let engine = SimilarityEngine::offline();
        assert_eq!(component_uncertainty(&[], 0.95, &engine), Err(UncertaintyError::Empty));
        let s = vec![sample(1, &[("a", "x")]), sample(1, &[("b", "y")])];
        assert_eq!(build_groups(&s, 0.95, &engine), Err(UncertaintyError::DuplicateSampleId(1)));
        assert_eq!(build_groups(&s[..1], 1.0, &engine), Err(UncertaintyError::InvalidThreshold(1.0)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const WORDS: [&str; 12] = ["alpha", "bravo", "delta", "echo", "golf", "hotel", "kilo", "lima", "oscar", "papa", "tango", "zulu"];

        /// Samples drawn from disjoint-vocabulary classes, duplicated verbatim.
        fn class_samples() -> impl Strategy<Value = Vec<RewardFunctionSample>> {
            proptest::collection::vec(0usize..6, 1..10).prop_map(|picks| {
                picks
                    .iter()
                    .enumerate()
                    .map(|(id, &c)| {
                        let w1 = WORDS[(2 * c) % WORDS.len()];
                        let w2 = WORDS[(2 * c + 1) % WORDS.len()];
                        let n1 = format!("{w1}_term");
                        let n2 = format!("{w2}_term");
                        let b1 = format!("obs.{w1}_{c} * {w1}_{c}_scale + {c}");
                        let b2 = format!("torch.{w2}(obs.{w2}_value_{c}) ** {c}");
                        sample(id, &[(&n1, &b1), (&n2, &b2)])
                    })
                    .collect()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn uncertainty_is_quantized(samples in class_samples()) {
                let u = component_uncertainty(&samples, DEFAULT_OMEGA, &SimilarityEngine::offline()).unwrap();
                let k = samples.len() as f64;
                for v in u.values().flat_map(|m| m.values()) {
                    let m = (1.0 - v) * k;
                    prop_assert!((m - m.round()).abs() < 1e-9 && m.round() < k);
                }
            }

            #[test]
            fn duplication_never_raises_uncertainty(samples in class_samples(), pick in 0usize..10) {
                let engine = SimilarityEngine::offline();
                let before = component_uncertainty(&samples, DEFAULT_OMEGA, &engine).unwrap();
                let mut more = samples.clone();
                let mut dup = samples[pick % samples.len()].clone();
                dup.sample_id = 1000;
                more.push(dup);
                let after = component_uncertainty(&more, DEFAULT_OMEGA, &engine).unwrap();
                // Only components the duplicate matches are covered: elsewhere
                // K grows while the match count does not.
                let src = &samples[pick % samples.len()].code_text;
                for s in samples.iter().filter(|s| &s.code_text == src) {
                    for (name, u) in &before[&s.sample_id] {
                        let id = &s.sample_id;
                        prop_assert!(after[id][name] <= u + 1e-12);
                    }
                }
            }

            #[test]
            fn grouping_partitions_and_filter_is_idempotent(samples in class_samples()) {
                let engine = SimilarityEngine::offline();
                let report = UncertaintyReport::build(&samples, DEFAULT_OMEGA, &engine).unwrap();
                let mut all: Vec<usize> = report.groups.iter().flat_map(|g| g.members.clone()).collect();
                all.sort();
                prop_assert_eq!(all, (0..samples.len()).collect::<Vec<_>>());
                prop_assert!(report.groups.iter().all(|g| g.members.contains(&g.representative)));
                let total: f64 = report.normalized_sample_u.values().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                let kept = filter_redundant(&samples, &report);
                let again = UncertaintyReport::build(&kept, DEFAULT_OMEGA, &engine).unwrap();
                prop_assert_eq!(filter_redundant(&kept, &again), kept);
            }

            #[test]
            fn permutation_keeps_group_count(samples in class_samples(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let engine = SimilarityEngine::offline();
                let n = build_groups(&samples, DEFAULT_OMEGA, &engine).unwrap().len();
                let mut ids: Vec<usize> = (0..samples.len()).collect();
                ids.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let relabeled: Vec<_> = samples.iter().zip(&ids).map(|(s, &id)| RewardFunctionSample { sample_id: id, ..s.clone() }).collect();
                prop_assert_eq!(build_groups(&relabeled, DEFAULT_OMEGA, &engine).unwrap().len(), n);
            }
        }
    }
}
