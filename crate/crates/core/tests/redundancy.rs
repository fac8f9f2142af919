//! Two independently sampled Ant rewards that differ only in comments,
//! whitespace and naming of intermediate values must collapse to one group.

use urdp_core::model::{parse_reward_sample, ParseConfig};
use urdp_core::uncertainty::{filter_redundant, UncertaintyReport, DEFAULT_OMEGA};
use urdp_core::SimilarityEngine;

#[test]
fn ant_pair_is_grouped_and_one_retained() {
    let cfg = ParseConfig::default();
    let a = parse_reward_sample(include_str!("fixtures/ant_sample9.py"), &cfg).unwrap().with_ids(1, 9);
    let b = parse_reward_sample(include_str!("fixtures/ant_sample15.py"), &cfg).unwrap().with_ids(1, 15);
    let samples = vec![a, b];
    let engine = SimilarityEngine::offline();
    let report = UncertaintyReport::build(&samples, DEFAULT_OMEGA, &engine).unwrap();
    assert_eq!(report.groups.len(), 1, "{:?}", report.groups);
    assert_eq!(report.groups[0].members, vec![9, 15]);
    let kept = filter_redundant(&samples, &report);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].sample_id, 9);
}
