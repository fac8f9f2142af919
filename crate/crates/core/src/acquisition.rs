//! Expected Improvement, its uncertainty-weighted variant, and a seeded
//! multi-start maximizer over the unit box.
//!
//! Fitness is maximized throughout: `y*` is the best observed value and
//! improvement means exceeding it.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::gp::GpModel;
use crate::seq;

/// Posterior standard deviations below this yield zero improvement.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionMode {
    Ei,
    #[default]
    Uei,
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `σ·(φ(z) + zΦ(z))` with `z = (μ - y*)/σ`.
pub fn ei_from_moments(mean: f64, sigma: f64, incumbent: f64) -> f64 {
    if !(sigma >= SIGMA_FLOOR) {
        return 0.0;
    }
    let z = (mean - incumbent) / sigma;
    (sigma * (normal_pdf(z) + z * normal_cdf(z))).max(0.0)
}

/// `exp(-Σ_j U_j (q_j - θ*_j)²)`.
pub fn uncertainty_weight(query: &[f64], incumbent_theta: &[f64], component_u: &[f64]) -> f64 {
    let s: f64 = query.iter().zip(incumbent_theta).zip(component_u).map(|((q, t), u)| u * (q - t) * (q - t)).sum();
    (-s).exp()
}

/// Everything the acquisition needs at one proposal step. Coordinates are in
/// the unit box.
#[derive(Clone, Debug)]
pub struct AcquisitionContext<'a> {
    pub model: &'a GpModel,
    pub incumbent_y: f64,
    pub incumbent_theta: Vec<f64>,
    pub component_u: Vec<f64>,
    pub mode: AcquisitionMode,
}

impl AcquisitionContext<'_> {
    pub fn expected_improvement(&self, query: &[f64]) -> f64 {
        let (mean, var) = self.model.posterior(query);
        ei_from_moments(mean, var.sqrt(), self.incumbent_y)
    }

    pub fn u_expected_improvement(&self, query: &[f64]) -> f64 {
        self.expected_improvement(query) * uncertainty_weight(query, &self.incumbent_theta, &self.component_u)
    }

    /// Acquisition value under the context's mode.
    pub fn value(&self, query: &[f64]) -> f64 {
        match self.mode {
            AcquisitionMode::Ei => self.expected_improvement(query),
            AcquisitionMode::Uei => self.u_expected_improvement(query),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaximizerConfig {
    pub min_starts: usize,
    pub starts_per_dim: usize,
    pub max_local_iters: usize,
    /// Standard deviation of the incumbent perturbations (unit-box units).
    pub perturbation_scale: f64,
    /// Initial simplex edge length.
    pub simplex_step: f64,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        Self { min_starts: 32, starts_per_dim: 8, max_local_iters: 100, perturbation_scale: 0.05, simplex_step: 0.1 }
    }
}

impl MaximizerConfig {
    pub fn n_starts(&self, dim: usize) -> usize {
        self.min_starts.max(self.starts_per_dim * dim).max(1)
    }
}

fn clip(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

/// Starting points: the incumbent, Gaussian perturbations of it, and
/// shifted Halton points for the remainder.
pub fn start_points(incumbent: &[f64], cfg: &MaximizerConfig, seed: u64) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, Normal};

    let d = incumbent.len();
    let n = cfg.n_starts(d);
    let n_perturb = (n / 4).min(n - 1);
    let mut starts = Vec::with_capacity(n);
    let mut first = incumbent.to_vec();
    clip(&mut first);
    starts.push(first);
    let mut rng = seq::rng(seq::derive_seed(seed, &[1]));
    let normal = Normal::new(0.0, cfg.perturbation_scale.max(0.0)).expect("finite scale");
    for _ in 0..n_perturb {
        let mut p: Vec<f64> = incumbent.iter().map(|&x| x + normal.sample(&mut rng)).collect();
        clip(&mut p);
        starts.push(p);
    }
    starts.extend(seq::shifted_halton(n - starts.len(), d, seq::derive_seed(seed, &[2])));
    starts
}

/// Bounded Nelder–Mead ascent from `x0`. Returns the best vertex and value.
pub fn nelder_mead_max<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, max_iters: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() { v } else { f64::NEG_INFINITY }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut base = x0.to_vec();
    clip(&mut base);
    simplex.push(base.clone());
    for j in 0..d {
        let mut v = base.clone();
        v[j] = if v[j] + step <= 1.0 { v[j] + step } else { v[j] - step };
        clip(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let mut centroid = vec![0.0; d];
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect();
        clip(&mut p);
        p
    };

    for _ in 0..max_iters {
        // Descending by value; stable so earlier vertices win ties.
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let (best, worst, second) = (order[0], order[d], order[d.saturating_sub(1)]);
        let spread = values[best] - values[worst];
        let size = simplex.iter().map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        if size < 1e-7 || (spread.abs() <= 1e-14 * values[best].abs().max(1e-300) && size < 1e-4) {
            break;
        }
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..d] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / d as f64;
            }
        }
        let reflected = point(&centroid, &simplex[worst], -1.0);
        let fr = eval(&reflected);
        if fr > values[best] {
            let expanded = point(&centroid, &simplex[worst], -2.0);
            let fe = eval(&expanded);
            if fe > fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr > values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr > values[worst] { point(&centroid, &reflected, 0.5) } else { point(&centroid, &simplex[worst], 0.5) };
            let fc = eval(&contracted);
            if fc > values[worst].max(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                let anchor = simplex[best].clone();
                for &i in &order[1..] {
                    simplex[i] = point(&anchor, &simplex[i], 0.5);
                    values[i] = eval(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=d).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    (simplex[best].clone(), values[best])
}

/// Multi-start maximization of the context's acquisition over `[0, 1]^d`.
/// Deterministic for a fixed seed; ties go to the lowest start index.
pub fn maximize_acquisition(ctx: &AcquisitionContext<'_>, cfg: &MaximizerConfig, seed: u64) -> Vec<f64> {
    let f = |q: &[f64]| ctx.value(q);
    let starts = start_points(&ctx.incumbent_theta, cfg, seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let (x, v) = nelder_mead_max(&f, s, cfg.simplex_step, cfg.max_local_iters);
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    let (mut x, _) = best.expect("at least one start");
    clip(&mut x);
    x
}
