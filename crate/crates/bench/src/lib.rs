//! Seeded inputs shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use urdp_core::model::{parse_reward_sample, ParseConfig, RewardFunctionSample};
use urdp_core::SyntheticPreset;

/// `n` points uniform in the unit cube of dimension `d`.
pub fn unit_design(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Negative squared distance to 0.3 in every coordinate.
pub fn bowl(x: &[Vec<f64>]) -> Vec<f64> {
    x.iter().map(|p| -p.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>()).collect()
}

/// The preset's canonical reward function, parsed.
pub fn canonical_sample(preset: SyntheticPreset) -> RewardFunctionSample {
    parse_reward_sample(&preset.spec().canonical_code(), &ParseConfig::default()).expect("canonical code parses").with_ids(1, 0)
}

/// `k` samples cycling through every preset's canonical code, so the batch
/// mixes duplicates with distinct functions.
pub fn mixed_batch(k: usize) -> Vec<RewardFunctionSample> {
    let presets = SyntheticPreset::ALL;
    (0..k)
        .map(|i| {
            let code = presets[i % presets.len()].spec().canonical_code();
            parse_reward_sample(&code, &ParseConfig::default()).expect("canonical code parses").with_ids(1, i)
        })
        .collect()
}
