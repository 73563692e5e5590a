//! Exact posteriors for the three prior families.
//!
//! All three keep sufficient statistics only and are order invariant up to
//! floating-point summation.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::{information_lock_means, ActionSet, PriorSpec};
use crate::error::{Error, Result};

fn check_reward(r: f64) -> Result<()> {
    if r.is_finite() {
        Ok(())
    } else {
        Err(Error::Data(format!("reward must be finite, got {r}")))
    }
}

fn check_noise(noise_std: f64) -> Result<f64> {
    if noise_std.is_finite() && noise_std > 0.0 {
        Ok(noise_std * noise_std)
    } else {
        Err(Error::Config(format!(
            "posterior needs a positive noise std, got {noise_std}"
        )))
    }
}

/// Independent Gaussian posterior per arm with known noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianArmPosterior {
    prior_means: Vec<f64>,
    prior_var: f64,
    noise_var: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl GaussianArmPosterior {
    /// `prior_std == 0` gives a point-mass posterior that ignores data.
    pub fn new(prior_means: Vec<f64>, prior_std: f64, noise_std: f64) -> Result<Self> {
        if prior_means.is_empty() || prior_means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("prior means must be finite and non-empty".into()));
        }
        if !(prior_std.is_finite() && prior_std >= 0.0) {
            return Err(Error::Config(format!(
                "prior std must be non-negative, got {prior_std}"
            )));
        }
        let noise_var = check_noise(noise_std)?;
        let k = prior_means.len();
        Ok(Self {
            prior_means,
            prior_var: prior_std * prior_std,
            noise_var,
            counts: vec![0; k],
            sums: vec![0.0; k],
        })
    }

    pub fn num_arms(&self) -> usize {
        self.prior_means.len()
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn sum(&self, arm: usize) -> f64 {
        self.sums[arm]
    }

    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.num_arms() {
            return Err(Error::ActionIndex {
                action: arm,
                num_actions: self.num_arms(),
            });
        }
        check_reward(reward)?;
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }

    fn precision(&self, arm: usize) -> f64 {
        self.counts[arm] as f64 / self.noise_var + 1.0 / self.prior_var
    }

    pub fn mean(&self, arm: usize) -> f64 {
        if self.prior_var == 0.0 {
            return self.prior_means[arm];
        }
        (self.sums[arm] / self.noise_var + self.prior_means[arm] / self.prior_var) / self.precision(arm)
    }

    pub fn variance(&self, arm: usize) -> f64 {
        if self.prior_var == 0.0 {
            return 0.0;
        }
        1.0 / self.precision(arm)
    }

    /// One independent draw per arm.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.num_arms())
            .map(|a| {
                let z: f64 = rng.sample(StandardNormal);
                self.mean(a) + self.variance(a).sqrt() * z
            })
            .collect()
    }
}

/// Bayesian linear regression statistics `V = lambda I + sum x x^T`, `b = sum x r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianPosterior {
    precision: DMatrix<f64>,
    response: DVector<f64>,
    lambda: f64,
    observations: usize,
}

impl LinearGaussianPosterior {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 || !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "linear posterior needs dim >= 1 and lambda > 0, got dim={dim} lambda={lambda}"
            )));
        }
        Ok(Self {
            precision: DMatrix::identity(dim, dim) * lambda,
            response: DVector::zeros(dim),
            lambda,
            observations: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.response.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    /// Rank-one update with feature vector `x` and reward `r`.
    pub fn observe<'a>(&mut self, x: impl Into<nalgebra::DVectorView<'a, f64>>, reward: f64) -> Result<()> {
        check_reward(reward)?;
        let x = x.into();
        if x.len() != self.dim() {
            return Err(Error::Argument(format!(
                "feature dimension {} does not match posterior dimension {}",
                x.len(),
                self.dim()
            )));
        }
        self.precision.ger(1.0, &x, &x, 1.0);
        self.response.axpy(reward, &x, 1.0);
        self.observations += 1;
        Ok(())
    }

    fn factor(&self) -> Cholesky<f64, Dyn> {
        // V = lambda I + sum x x^T with lambda > 0 is always SPD.
        Cholesky::new(self.precision.clone()).expect("precision matrix is positive definite")
    }

    /// Regularized least-squares estimate `V^{-1} b`.
    pub fn estimate(&self) -> DVector<f64> {
        self.factor().solve(&self.response)
    }

    /// Draws `theta ~ N(V^{-1} b, scale * V^{-1})`.
    pub fn sample_theta(&self, scale: f64, rng: &mut impl Rng) -> DVector<f64> {
        let chol = self.factor();
        let mean = chol.solve(&self.response);
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        if scale == 0.0 {
            return mean;
        }
        // V = L L^T, so L^{-T} z has covariance V^{-1}.
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("cholesky factor has a positive diagonal");
        mean + noise * scale.sqrt()
    }
}

/// Exact posterior over a finite list of candidate mean vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHypothesisPosterior {
    hypotheses: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    noise_var: f64,
}

impl FiniteHypothesisPosterior {
    /// Uniform prior over `hypotheses`.
    pub fn uniform(hypotheses: Vec<Vec<f64>>, noise_std: f64) -> Result<Self> {
        let noise_var = check_noise(noise_std)?;
        let Some(first) = hypotheses.first() else {
            return Err(Error::Config("finite posterior needs at least one hypothesis".into()));
        };
        let k = first.len();
        if k == 0 || hypotheses.iter().any(|h| h.len() != k) {
            return Err(Error::Config("hypotheses must share a non-zero action count".into()));
        }
        let lw = -(hypotheses.len() as f64).ln();
        Ok(Self {
            log_weights: vec![lw; hypotheses.len()],
            hypotheses,
            noise_var,
        })
    }

    pub fn hypotheses(&self) -> &[Vec<f64>] {
        &self.hypotheses
    }

    pub fn num_actions(&self) -> usize {
        self.hypotheses[0].len()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    pub fn observe(&mut self, action: usize, reward: f64) -> Result<()> {
        if action >= self.num_actions() {
            return Err(Error::ActionIndex {
                action,
                num_actions: self.num_actions(),
            });
        }
        check_reward(reward)?;
        for (lw, h) in self.log_weights.iter_mut().zip(&self.hypotheses) {
            let e = reward - h[action];
            *lw -= e * e / (2.0 * self.noise_var);
        }
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + self.log_weights.iter().map(|lw| (lw - max).exp()).sum::<f64>().ln();
        for lw in &mut self.log_weights {
            *lw -= lse;
        }
        Ok(())
    }

    /// Index of a hypothesis drawn by posterior weight.
    pub fn sample_index(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, lw) in self.log_weights.iter().enumerate() {
            let w = lw.exp();
            if w > 0.0 {
                last_positive = i;
            }
            acc += w;
            if u < acc {
                return i;
            }
        }
        last_positive
    }

    pub fn sample(&self, rng: &mut impl Rng) -> &[f64] {
        &self.hypotheses[self.sample_index(rng)]
    }
}

/// A posterior over the mean-reward vector of every action.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    GaussianArms(GaussianArmPosterior),
    Linear {
        stats: LinearGaussianPosterior,
        features: Arc<DMatrix<f64>>,
        /// Covariance of the `theta` draw is `scale * V^{-1}`.
        scale: f64,
    },
    FiniteHypothesis(FiniteHypothesisPosterior),
}

impl Posterior {
    /// The exact posterior for `prior`, before any observation.
    ///
    /// For linear priors `V` is regularized by `noise_var / sigma0^2` and draws
    /// use covariance `noise_var * V^{-1}`; with unit noise this is
    /// `lambda I + sum x x^T` and `V^{-1}`.
    pub fn from_prior(prior: &PriorSpec, actions: &ActionSet) -> Result<Self> {
        prior.validate()?;
        if prior.num_actions() != actions.len() {
            return Err(Error::Config(format!(
                "prior covers {} actions but the environment has {}",
                prior.num_actions(),
                actions.len()
            )));
        }
        match prior {
            PriorSpec::IndependentGaussian {
                means,
                prior_std,
                noise_std,
            } => Ok(Posterior::GaussianArms(GaussianArmPosterior::new(
                means.clone(),
                *prior_std,
                *noise_std,
            )?)),
            PriorSpec::LinearGaussian {
                dim, lambda, noise_std, ..
            } => {
                let noise_var = check_noise(*noise_std)?;
                let features = match actions {
                    ActionSet::Linear(x) if x.ncols() == *dim => Arc::clone(x),
                    _ => {
                        return Err(Error::Config(format!(
                            "linear prior needs {dim}-dimensional action features"
                        )))
                    }
                };
                Ok(Posterior::Linear {
                    stats: LinearGaussianPosterior::new(*dim, noise_var * lambda)?,
                    features,
                    scale: noise_var,
                })
            }
            PriorSpec::InformationLock {
                regular_arms,
                noise_std,
            } => {
                let hypotheses = (0..*regular_arms)
                    .map(|j| information_lock_means(*regular_arms, j))
                    .collect();
                Ok(Posterior::FiniteHypothesis(FiniteHypothesisPosterior::uniform(
                    hypotheses, *noise_std,
                )?))
            }
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Posterior::GaussianArms(p) => p.num_arms(),
            Posterior::Linear { features, .. } => features.nrows(),
            Posterior::FiniteHypothesis(p) => p.num_actions(),
        }
    }

    pub fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        match self {
            Posterior::GaussianArms(p) => p.observe(action, reward),
            Posterior::Linear { stats, features, .. } => {
                if action >= features.nrows() {
                    return Err(Error::ActionIndex {
                        action,
                        num_actions: features.nrows(),
                    });
                }
                stats.observe(&features.row(action).transpose(), reward)
            }
            Posterior::FiniteHypothesis(p) => p.observe(action, reward),
        }
    }

    /// One joint draw of the mean reward of every action.
    pub fn sample_means(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Posterior::GaussianArms(p) => p.sample(rng),
            Posterior::Linear { stats, features, scale } => {
                let theta = stats.sample_theta(*scale, rng);
                (features.as_ref() * theta).iter().copied().collect()
            }
            Posterior::FiniteHypothesis(p) => p.sample(rng).to_vec(),
        }
    }
}

/// Posterior mean under unit noise, split into its prior and data parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedAverage {
    pub mean: f64,
    pub prior_weight: f64,
    pub sample_weight: f64,
}

/// `mean = w0 * prior_mean + (1 - w0) * sample_mean` with
/// `w0 = (1/sigma0^2) / (1/sigma0^2 + n)`.
pub fn posterior_mean_decomposition(prior_mean: f64, prior_std: f64, rewards: &[f64]) -> Result<WeightedAverage> {
    if !(prior_std.is_finite() && prior_std > 0.0) {
        return Err(Error::Argument(format!("prior std must be positive, got {prior_std}")));
    }
    if rewards.is_empty() {
        return Ok(WeightedAverage {
            mean: prior_mean,
            prior_weight: 1.0,
            sample_weight: 0.0,
        });
    }
    let n = rewards.len() as f64;
    let prior_precision = 1.0 / (prior_std * prior_std);
    let prior_weight = prior_precision / (prior_precision + n);
    let sample_weight = n / (prior_precision + n);
    let sample_mean = rewards.iter().sum::<f64>() / n;
    Ok(WeightedAverage {
        mean: prior_weight * prior_mean + sample_weight * sample_mean,
        prior_weight,
        sample_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_single_observation() {
        let mut p = GaussianArmPosterior::new(vec![0.0], 1.0, 1.0).unwrap();
        assert_eq!(p.mean(0), 0.0);
        assert_eq!(p.variance(0), 1.0);
        p.observe(0, 1.0).unwrap();
        assert_relative_eq!(p.mean(0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.variance(0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_rejects_bad_reward() {
        let mut p = GaussianArmPosterior::new(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert!(matches!(p.observe(0, f64::NAN), Err(Error::Data(_))));
        assert!(matches!(p.observe(0, f64::INFINITY), Err(Error::Data(_))));
        assert!(matches!(p.observe(2, 0.0), Err(Error::ActionIndex { .. })));
        assert_eq!(p.count(0), 0);
    }

    #[test]
    fn point_prior_samples_prior_mean() {
        let mut p = GaussianArmPosterior::new(vec![0.3, -0.2], 0.0, 1.0).unwrap();
        p.observe(0, 5.0).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(p.sample(&mut rng), vec![0.3, -0.2]);
    }

    #[test]
    fn prior_sample_moments() {
        let p = GaussianArmPosterior::new(vec![0.0], 1.0, 1.0).unwrap();
        let mut rng = RngStream::new(4, 4).rng();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn linear_one_observation() {
        let mut p = LinearGaussianPosterior::new(2, 1.0).unwrap();
        p.observe(&DVector::from_vec(vec![1.0, 0.0]), 2.0).unwrap();
        assert_eq!(p.precision(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        let theta = p.estimate();
        assert_relative_eq!(theta[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(theta[1], 0.0, epsilon = 1e-15);
        assert_eq!(p.sample_theta(0.0, &mut RngStream::new(0, 0).rng()), theta);
    }

    #[test]
    fn linear_sample_covariance() {
        let mut p = LinearGaussianPosterior::new(2, 1.0).unwrap();
        p.observe(&DVector::from_vec(vec![1.0, 1.0]), 1.0).unwrap();
        p.observe(&DVector::from_vec(vec![1.0, 0.0]), 0.0).unwrap();
        let cov = p.precision().clone().try_inverse().unwrap() * 2.0;
        let mean = p.estimate();
        let mut rng = RngStream::new(1, 2).rng();
        let n = 200_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        let mut m = DVector::<f64>::zeros(2);
        for _ in 0..n {
            let d = p.sample_theta(2.0, &mut rng) - &mean;
            m += &d;
            acc.ger(1.0, &d, &d, 1.0);
        }
        m /= n as f64;
        acc /= n as f64;
        assert!(m.norm() < 0.01);
        for (got, want) in acc.iter().zip(cov.iter()) {
            assert!((got - want).abs() < 0.01, "{got} vs {want}");
        }
    }

    #[test]
    fn finite_uninformative_observation() {
        let mut p = FiniteHypothesisPosterior::uniform(vec![vec![0.5, 1.0], vec![0.5, 0.0]], 1.0).unwrap();
        p.observe(1, 1.0).unwrap();
        let before = p.weights();
        p.observe(0, 0.9).unwrap();
        for (a, b) in before.iter().zip(p.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_degenerate_weight_returns_hypothesis() {
        let mut p = FiniteHypothesisPosterior::uniform(vec![vec![0.0, 3.0], vec![0.0, -3.0]], 0.1).unwrap();
        for _ in 0..20 {
            p.observe(1, 3.0).unwrap();
        }
        assert_eq!(p.weights()[1], 0.0);
        let mut rng = RngStream::new(0, 0).rng();
        for _ in 0..100 {
            assert_eq!(p.sample(&mut rng), &[0.0, 3.0]);
        }
    }

    #[test]
    fn information_lock_posterior_starts_uniform() {
        let prior = PriorSpec::InformationLock {
            regular_arms: 8,
            noise_std: 1.0,
        };
        let p = Posterior::from_prior(&prior, &ActionSet::Finite(11)).unwrap();
        let Posterior::FiniteHypothesis(p) = p else {
            panic!("expected finite posterior")
        };
        assert_eq!(p.hypotheses().len(), 8);
        for w in p.weights() {
            assert_relative_eq!(w, 0.125, epsilon = 1e-15);
        }
    }

    #[test]
    fn from_prior_checks_action_count() {
        let prior = PriorSpec::IndependentGaussian {
            means: vec![0.0; 3],
            prior_std: 1.0,
            noise_std: 1.0,
        };
        assert!(Posterior::from_prior(&prior, &ActionSet::Finite(4)).is_err());
        let linear = PriorSpec::LinearGaussian {
            dim: 2,
            lambda: 1.0,
            num_actions: 3,
            noise_std: 1.0,
        };
        assert!(Posterior::from_prior(&linear, &ActionSet::Finite(3)).is_err());
    }

    #[test]
    fn weighted_average_cases() {
        // Prior and data weigh equally once n = 1 / sigma0^2.
        let w = posterior_mean_decomposition(0.1, 0.05, &vec![0.0; 400]).unwrap();
        assert_relative_eq!(w.prior_weight, 0.5, epsilon = 1e-12);
        assert_relative_eq!(w.sample_weight, 0.5, epsilon = 1e-12);
        let w = posterior_mean_decomposition(0.1, 0.02, &vec![0.0; 2500]).unwrap();
        assert_relative_eq!(w.prior_weight, 0.5, epsilon = 1e-12);
        let w = posterior_mean_decomposition(0.1, 0.05, &vec![0.0; 2500]).unwrap();
        assert_relative_eq!(w.prior_weight, 400.0 / 2900.0, epsilon = 1e-12);
        let w = posterior_mean_decomposition(0.7, 1.0, &[]).unwrap();
        assert_eq!((w.mean, w.prior_weight, w.sample_weight), (0.7, 1.0, 0.0));
        let w = posterior_mean_decomposition(0.0, 1.0, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(w.mean, 2.0 / 3.0, epsilon = 1e-15);
        assert!(posterior_mean_decomposition(0.0, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn weighted_average_matches_conjugate_posterior() {
        let rewards = [0.3, -1.2, 0.8, 2.5, 0.1];
        let w = posterior_mean_decomposition(0.4, 0.3, &rewards).unwrap();
        let mut p = GaussianArmPosterior::new(vec![0.4], 0.3, 1.0).unwrap();
        for r in rewards {
            p.observe(0, r).unwrap();
        }
        assert_relative_eq!(w.mean, p.mean(0), epsilon = 1e-14);
        assert_relative_eq!(w.prior_weight + w.sample_weight, 1.0, epsilon = 1e-15);
    }
}
