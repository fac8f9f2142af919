//! Gaussian-process surrogate with the uncertainty-weighted Matérn kernel.
//!
//! Distances are measured per dimension in units of that dimension's
//! component uncertainty, then the Matérn profile is applied at the scale of
//! the sample uncertainty:
//!
//! ```text
//! d_u(p, q) = sqrt( Σ_j ((p_j - q_j) / ℓ_j)² )
//! k(p, q)   = σ² · m_ν( d_u(p, q) / L )
//! ```
//!
//! with `ℓ_j = max(U(r_j), ε_U)` and `L = max(U(R), ε_U)`. Only the three
//! half-integer orders with closed forms are supported. Length scales are
//! fixed by the uncertainties; only the signal variance and the noise are
//! selected, by log marginal likelihood over a small grid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor applied to uncertainty-derived length scales.
pub const EPS_U: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no training data")]
    Empty,
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("kernel matrix is not positive definite after the jitter ladder")]
    SingularKernel,
}

/// Matérn smoothness order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }

    /// Closed-form correlation at scaled distance `r` (`m(0) = 1`).
    pub fn profile(self, r: f64) -> f64 {
        match self {
            MaternNu::Half => (-r).exp(),
            MaternNu::ThreeHalves => {
                let t = 3f64.sqrt() * r;
                (1.0 + t) * (-t).exp()
            }
            MaternNu::FiveHalves => {
                let t = 5f64.sqrt() * r;
                (1.0 + t + t * t / 3.0) * (-t).exp()
            }
        }
    }
}

impl TryFrom<f64> for MaternNu {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        match v {
            x if x == 0.5 => Ok(MaternNu::Half),
            x if x == 1.5 => Ok(MaternNu::ThreeHalves),
            x if x == 2.5 => Ok(MaternNu::FiveHalves),
            other => Err(format!("unsupported Matérn order {other}; expected 0.5, 1.5 or 2.5")),
        }
    }
}

impl From<MaternNu> for f64 {
    fn from(n: MaternNu) -> f64 {
        n.value()
    }
}

impl Default for MaternNu {
    fn default() -> Self {
        MaternNu::FiveHalves
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub variance: f64,
    pub nu: MaternNu,
    pub per_dim_lengths: Vec<f64>,
    pub global_length: f64,
}

impl KernelParams {
    /// Builds parameters from raw uncertainties, applying the [`EPS_U`] floor.
    pub fn from_uncertainty(variance: f64, nu: MaternNu, component_u: &[f64], sample_u: f64) -> Self {
        Self {
            variance,
            nu,
            per_dim_lengths: component_u.iter().map(|&u| u.max(EPS_U)).collect(),
            global_length: sample_u.max(EPS_U),
        }
    }

    pub fn dim(&self) -> usize {
        self.per_dim_lengths.len()
    }

    pub fn validate(&self) -> Result<(), GpError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.variance) || !ok(self.global_length) || !self.per_dim_lengths.iter().all(|&l| ok(l)) {
            return Err(GpError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    /// Coordinates scaled so that plain Euclidean distance equals `d_u / L`.
    fn scale_point(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &x), &l) in out.iter_mut().zip(p).zip(&self.per_dim_lengths) {
            *o = x / (l * self.global_length);
        }
    }
}

/// Uncertainty-weighted distance `sqrt(Σ ((p_j - q_j) / ℓ_j)²)`.
pub fn weighted_distance(p: &[f64], q: &[f64], per_dim_lengths: &[f64]) -> Result<f64, GpError> {
    if p.len() != q.len() || p.len() != per_dim_lengths.len() {
        return Err(GpError::DimensionMismatch { expected: per_dim_lengths.len(), got: if p.len() != per_dim_lengths.len() { p.len() } else { q.len() } });
    }
    Ok(p.iter().zip(q).zip(per_dim_lengths).map(|((a, b), l)| ((a - b) / l).powi(2)).sum::<f64>().sqrt())
}

pub fn kernel_eval(p: &[f64], q: &[f64], params: &KernelParams) -> Result<f64, GpError> {
    let d = weighted_distance(p, q, &params.per_dim_lengths)?;
    Ok(params.variance * params.nu.profile(d / params.global_length))
}

/// Gram matrix `K_ij = k(x_i, x_j)` (no noise term).
pub fn gram_matrix(points: &[Vec<f64>], params: &KernelParams) -> Result<DMatrix<f64>, GpError> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel_eval(&points[i], &points[i], params)?;
        for j in 0..i {
            let v = kernel_eval(&points[i], &points[j], params)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub nu: MaternNu,
    pub variance_grid: Vec<f64>,
    pub noise_grid: Vec<f64>,
    pub jitter_ladder: Vec<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            nu: MaternNu::FiveHalves,
            variance_grid: vec![0.25, 1.0, 4.0],
            noise_grid: vec![1e-6, 1e-4, 1e-2],
            jitter_ladder: vec![1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4],
        }
    }
}

/// Serializable model summary for the run ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSummary {
    pub n: usize,
    pub kernel: KernelParams,
    pub noise_variance: f64,
    pub log_marginal_likelihood: f64,
}

/// Fitted posterior state. Immutable after fitting.
#[derive(Clone, Debug)]
pub struct GpModel {
    kernel: KernelParams,
    noise_variance: f64,
    train_x: Vec<Vec<f64>>,
    /// Row-major `n × d`, scaled by `1 / (ℓ_j · L)`.
    scaled_x: Vec<f64>,
    train_y: DVector<f64>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_std: f64,
    lml: f64,
}

fn validate_data(train_x: &[Vec<f64>], train_y: &[f64], dim: usize) -> Result<(), GpError> {
    if train_x.is_empty() {
        return Err(GpError::Empty);
    }
    if train_x.len() != train_y.len() {
        return Err(GpError::DimensionMismatch { expected: train_x.len(), got: train_y.len() });
    }
    for x in train_x {
        if x.len() != dim {
            return Err(GpError::DimensionMismatch { expected: dim, got: x.len() });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(GpError::NonFinite);
        }
    }
    if !train_y.iter().all(|v| v.is_finite()) {
        return Err(GpError::NonFinite);
    }
    Ok(())
}

fn standardize(y: &[f64]) -> (DVector<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / std)), mean, std)
}

/// Lower Cholesky factor of `a + jitter·I`, trying each jitter in turn.
fn cholesky_with_jitter(a: &DMatrix<f64>, ladder: &[f64]) -> Option<(DMatrix<f64>, f64)> {
    std::iter::once(0.0).chain(ladder.iter().copied()).find_map(|jitter| {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        m.cholesky().map(|c| (c.l(), jitter))
    })
}

fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

impl GpModel {
    /// Fits with uncertainty-derived length scales, selecting `(σ², noise)`
    /// by log marginal likelihood on the configured grid.
    pub fn fit(
        train_x: &[Vec<f64>],
        train_y: &[f64],
        lengths_from_uncertainty: &[f64],
        global_from_uncertainty: f64,
        config: &FitConfig,
    ) -> Result<Self, GpError> {
        let base = KernelParams::from_uncertainty(1.0, config.nu, lengths_from_uncertainty, global_from_uncertainty);
        base.validate()?;
        validate_data(train_x, train_y, base.dim())?;
        let unit_gram = gram_matrix(train_x, &base)?;
        let (y, y_mean, y_std) = standardize(train_y);

        let mut best: Option<GpModel> = None;
        for &variance in &config.variance_grid {
            for &noise in &config.noise_grid {
                let kernel = KernelParams { variance, ..base.clone() };
                let Some(model) = Self::from_gram(train_x, &unit_gram * variance, y.clone(), y_mean, y_std, kernel, noise, &config.jitter_ladder) else {
                    continue;
                };
                if best.as_ref().map_or(true, |b| model.lml > b.lml) {
                    best = Some(model);
                }
            }
        }
        best.ok_or(GpError::SingularKernel)
    }

    /// Fits with fully specified kernel parameters and noise.
    pub fn fit_fixed(train_x: &[Vec<f64>], train_y: &[f64], kernel: KernelParams, noise: f64) -> Result<Self, GpError> {
        kernel.validate()?;
        validate_data(train_x, train_y, kernel.dim())?;
        let gram = gram_matrix(train_x, &kernel)?;
        let (y, y_mean, y_std) = standardize(train_y);
        Self::from_gram(train_x, gram, y, y_mean, y_std, kernel, noise, &FitConfig::default().jitter_ladder).ok_or(GpError::SingularKernel)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_gram(
        train_x: &[Vec<f64>],
        mut gram: DMatrix<f64>,
        y: DVector<f64>,
        y_mean: f64,
        y_std: f64,
        kernel: KernelParams,
        noise: f64,
        ladder: &[f64],
    ) -> Option<Self> {
        let n = train_x.len();
        for i in 0..n {
            gram[(i, i)] += noise;
        }
        let (chol, jitter) = cholesky_with_jitter(&gram, ladder)?;
        let mut tmp: Vec<f64> = y.iter().copied().collect();
        forward_substitute(&chol, &mut tmp);
        let data_fit: f64 = tmp.iter().map(|v| v * v).sum();
        let alpha = chol.transpose().solve_upper_triangular(&DVector::from_vec(tmp))?;
        let log_det: f64 = (0..n).map(|i| chol[(i, i)].ln()).sum();
        let lml = -0.5 * data_fit - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        let d = kernel.dim();
        let mut scaled_x = vec![0.0; n * d];
        for (i, x) in train_x.iter().enumerate() {
            kernel.scale_point(x, &mut scaled_x[i * d..(i + 1) * d]);
        }
        Some(Self {
            kernel,
            noise_variance: noise + jitter,
            train_x: train_x.to_vec(),
            scaled_x,
            train_y: y,
            chol,
            alpha,
            y_mean,
            y_std,
            lml,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.is_empty()
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn train_x(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    /// Lower-triangular factor of `K + noise·I` (standardized units).
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_std)
    }

    pub fn standardized_targets(&self) -> &DVector<f64> {
        &self.train_y
    }

    pub fn summary(&self) -> GpSummary {
        GpSummary {
            n: self.len(),
            kernel: self.kernel.clone(),
            noise_variance: self.noise_variance,
            log_marginal_likelihood: self.lml,
        }
    }

    /// Predictive mean and variance of the latent function at `query`, in
    /// the original target units.
    ///
    /// Panics if `query` does not have the model's dimension.
    pub fn posterior(&self, query: &[f64]) -> (f64, f64) {
        assert_eq!(query.len(), self.dim(), "query dimension");
        let d = self.dim();
        let n = self.len();
        let mut q = vec![0.0; d];
        self.kernel.scale_point(query, &mut q);
        let mut k: Vec<f64> = (0..n)
            .map(|i| {
                let row = &self.scaled_x[i * d..(i + 1) * d];
                let r = row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                self.kernel.variance * self.kernel.nu.profile(r)
            })
            .collect();
        let mean_std: f64 = k.iter().zip(self.alpha.iter()).map(|(a, b)| a * b).sum();
        forward_substitute(&self.chol, &mut k);
        let explained: f64 = k.iter().map(|v| v * v).sum();
        let var_std = (self.kernel.variance - explained).max(0.0);
        (self.y_mean + self.y_std * mean_std, var_std * self.y_std * self.y_std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(lengths: Vec<f64>, global: f64) -> KernelParams {
        KernelParams { variance: 1.0, nu: MaternNu::FiveHalves, per_dim_lengths: lengths, global_length: global }
    }

    #[test]
    fn weighted_distance_examples() {
        assert_eq!(weighted_distance(&[0.3, 0.7], &[0.3, 0.7], &[1.0, 0.5]).unwrap(), 0.0);
        assert_eq!(weighted_distance(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 0.5]).unwrap(), 5f64.sqrt());
        assert_eq!(weighted_distance(&[3.0, 0.0], &[0.0, 4.0], &[1.0, 1.0]).unwrap(), 5.0);
        assert!(matches!(weighted_distance(&[1.0], &[1.0, 2.0], &[1.0]), Err(GpError::DimensionMismatch { .. })));
    }

    #[test]
    fn kernel_examples() {
        let p = params(vec![0.3, 0.9], 0.4);
        assert_eq!(kernel_eval(&[0.2, 0.5], &[0.2, 0.5], &p).unwrap(), 1.0);
        // d_u / U(R) = 1: (1 + √5 + 5/3)·e^{-√5}
        let p = params(vec![1.0], 1.0);
        let v = kernel_eval(&[0.0], &[1.0], &p).unwrap();
        assert!((v - 0.523_994_108_7).abs() < 1e-9, "{v}");
    }

    /// Modified Bessel function of the second kind by quadrature of
    /// `∫₀^∞ exp(-x cosh t) cosh(ν t) dt`.
    fn bessel_k(nu: f64, x: f64) -> f64 {
        let (h, steps) = (1e-4, 200_000);
        (0..=steps)
            .map(|i| {
                let t = i as f64 * h;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * (-x * t.cosh()).exp() * (nu * t).cosh()
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn closed_forms_match_bessel_definition() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for (nu, gamma) in [(MaternNu::Half, sqrt_pi), (MaternNu::ThreeHalves, sqrt_pi / 2.0), (MaternNu::FiveHalves, 0.75 * sqrt_pi)] {
            let v = nu.value();
            for r in [0.1, 0.5, 1.0, 2.0, 4.0] {
                let z = (2.0 * v).sqrt() * r;
                let general = 2f64.powf(1.0 - v) / gamma * z.powf(v) * bessel_k(v, z);
                assert!((nu.profile(r) - general).abs() < 1e-7, "nu={v} r={r}: {} vs {general}", nu.profile(r));
            }
        }
    }

    #[test]
    fn scaling_lengths_and_distances_together_is_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = rng.random_range(1..6);
            let p: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let q: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let lengths: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
            let c = rng.random_range(0.1..10.0);
            let base = kernel_eval(&p, &q, &params(lengths.clone(), 0.7)).unwrap();
            let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
            let qs: Vec<f64> = q.iter().map(|v| v * c).collect();
            let scaled = kernel_eval(&ps, &qs, &params(lengths.iter().map(|l| l * c).collect(), 0.7)).unwrap();
            assert!((base - scaled).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_interpolates() {
        let k = params(vec![0.5, 0.5], 1.0);
        let m = GpModel::fit_fixed(&[vec![0.2, 0.4]], &[3.5], k, 1e-10).unwrap();
        let (mean, _) = m.posterior(&[0.2, 0.4]);
        assert!((mean - 3.5).abs() < 1e-6 * 3.5);
        let m = GpModel::fit(&[vec![0.2, 0.4]], &[3.5], &[0.5, 0.5], 1.0, &FitConfig::default()).unwrap();
        let (mean, _) = m.posterior(&[0.2, 0.4]);
        assert!((mean - 3.5).abs() < 1e-2 * 3.5);
    }

    #[test]
    fn duplicate_rows_fit_via_noise_or_jitter() {
        let x = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.1, 0.9]];
        let m = GpModel::fit(&x, &[1.0, 2.0, 0.0], &[0.3, 0.3], 0.5, &FitConfig::default()).unwrap();
        let (mean, var) = m.posterior(&[0.5, 0.5]);
        assert!(mean.is_finite() && var >= 0.0);
        // Zero noise forces the jitter ladder.
        let k = params(vec![0.3, 0.3], 0.5);
        let m = GpModel::fit_fixed(&x, &[1.0, 2.0, 0.0], k, 0.0).unwrap();
        assert!(m.noise_variance() > 0.0);
    }

    #[test]
    fn far_queries_revert_to_prior() {
        let x = vec![vec![0.1, 0.2], vec![0.6, 0.3], vec![0.4, 0.9]];
        let y = [1.0, 3.0, 2.0];
        let m = GpModel::fit(&x, &y, &[0.5, 0.5], 0.5, &FitConfig::default()).unwrap();
        let (y_mean, y_std) = m.standardization();
        let far = [100.0 * 0.5 * 0.5, 100.0 * 0.5 * 0.5];
        let (mean, var) = m.posterior(&far);
        assert!((mean - y_mean).abs() < 1e-9);
        assert!((var - m.kernel().variance * y_std * y_std).abs() < 1e-9);
    }

    #[test]
    fn symmetric_pair_midpoint_is_average() {
        let x = vec![vec![0.2], vec![0.8]];
        let m = GpModel::fit(&x, &[1.0, 3.0], &[0.4], 1.0, &FitConfig::default()).unwrap();
        let (mean, _) = m.posterior(&[0.5]);
        assert!((mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nu_serializes_as_number() {
        assert_eq!(serde_json::to_string(&MaternNu::FiveHalves).unwrap(), "2.5");
        assert_eq!(serde_json::from_str::<MaternNu>("1.5").unwrap(), MaternNu::ThreeHalves);
        assert!(serde_json::from_str::<MaternNu>("2.0").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, prop_assert_eq, proptest, Strategy};

        fn point_set() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, f64)> {
            (1usize..8, 1usize..4).prop_flat_map(|(d, n)| {
                (
                    proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, d), n..=n + 6),
                    proptest::collection::vec(0.05f64..1.0, d),
                    0.05f64..1.0,
                )
            })
        }

        proptest! {
            #[test]
            fn kernel_is_symmetric((pts, lengths, global) in point_set()) {
                let p = params(lengths, global);
                for a in &pts {
                    for b in &pts {
                        prop_assert_eq!(kernel_eval(a, b, &p).unwrap(), kernel_eval(b, a, &p).unwrap());
                    }
                }
            }

            #[test]
            fn scaled_coordinates_equal_isotropic_kernel((pts, lengths, global) in point_set()) {
                let aniso = params(lengths.clone(), global);
                let iso = params(vec![1.0; lengths.len()], global);
                for a in &pts {
                    for b in &pts {
                        let sa: Vec<f64> = a.iter().zip(&lengths).map(|(x, l)| x / l).collect();
                        let sb: Vec<f64> = b.iter().zip(&lengths).map(|(x, l)| x / l).collect();
                        let lhs = kernel_eval(a, b, &aniso).unwrap();
                        let rhs = kernel_eval(&sa, &sb, &iso).unwrap();
                        prop_assert!((lhs - rhs).abs() <= 1e-12);
                    }
                }
            }

            #[test]
            fn cholesky_reconstructs_gram((pts, lengths, global) in point_set()) {
                let y: Vec<f64> = pts.iter().map(|p| p.iter().sum::<f64>().sin()).collect();
                let m = GpModel::fit(&pts, &y, &lengths, global, &FitConfig::default()).unwrap();
                let mut k = gram_matrix(&pts, m.kernel()).unwrap();
                for i in 0..pts.len() {
                    k[(i, i)] += m.noise_variance();
                }
                let l = m.cholesky_factor();
                let err = (l * l.transpose() - &k).norm() / k.norm();
                prop_assert!(err < 1e-8, "relative error {}", err);
            }

            #[test]
            fn adding_a_point_never_increases_variance((pts, lengths, global) in point_set(), extra in proptest::collection::vec(0.0f64..1.0, 8)) {
                let d = lengths.len();
                let kernel = KernelParams { variance: 1.0, nu: MaternNu::FiveHalves, per_dim_lengths: lengths.iter().map(|l| l.max(EPS_U)).collect(), global_length: global.max(EPS_U) };
                let y: Vec<f64> = pts.iter().map(|p| p[0]).collect();
                let before = GpModel::fit_fixed(&pts, &y, kernel.clone(), 1e-4).unwrap();
                let mut more = pts.clone();
                more.push(extra[..d].to_vec());
                let mut y2 = y.clone();
                y2.push(0.5);
                let after = GpModel::fit_fixed(&more, &y2, kernel, 1e-4).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(more.len() as u64);
                for _ in 0..10 {
                    let q: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                    // Compare in standardized units: the two fits standardize differently.
                    let vb = before.posterior(&q).1 / before.standardization().1.powi(2);
                    let va = after.posterior(&q).1 / after.standardization().1.powi(2);
                    prop_assert!(va <= vb + 1e-9, "{} > {}", va, vb);
                }
            }
        }
    }
}
