//! Priors over bandit environments, sampled instances and reward generation.
//!
//! Rewards are Gaussian around the true means and are not clipped to `[0, 1]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngStream, SimRng};

fn default_noise_std() -> f64 {
    1.0
}

/// A Bayesian prior over environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSpec {
    /// `mu(a) ~ N(means[a], prior_std^2)` independently per arm.
    IndependentGaussian {
        means: Vec<f64>,
        prior_std: f64,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
    /// `theta ~ N(0, I / lambda)`, `num_actions` unit vectors drawn uniformly
    /// on the sphere, `mu(a) = <a, theta>`.
    LinearGaussian {
        dim: usize,
        lambda: f64,
        num_actions: usize,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
    /// `log2(regular_arms)` magic arms encoding the optimal regular arm in
    /// binary, followed by `regular_arms` regular arms.
    InformationLock {
        regular_arms: usize,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
}

fn check_std(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::IndependentGaussian {
                means,
                prior_std,
                noise_std,
            } => {
                if means.is_empty() {
                    return Err(Error::config("independent-gaussian prior needs at least one arm"));
                }
                if means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::config("prior means must be finite"));
                }
                check_std("prior_std", *prior_std)?;
                check_std("noise_std", *noise_std)
            }
            PriorSpec::LinearGaussian {
                dim,
                lambda,
                num_actions,
                noise_std,
            } => {
                if *dim == 0 || *num_actions == 0 {
                    return Err(Error::config("linear prior needs dim >= 1 and num_actions >= 1"));
                }
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::config(format!("lambda must be positive, got {lambda}")));
                }
                check_std("noise_std", *noise_std)
            }
            PriorSpec::InformationLock {
                regular_arms,
                noise_std,
            } => {
                if *regular_arms < 2 || !regular_arms.is_power_of_two() {
                    return Err(Error::config(format!(
                        "information lock needs a power-of-two number of regular arms >= 2, got {regular_arms}"
                    )));
                }
                check_std("noise_std", *noise_std)
            }
        }
    }

    /// Total number of actions of environments drawn from this prior.
    pub fn num_actions(&self) -> usize {
        match self {
            PriorSpec::IndependentGaussian { means, .. } => means.len(),
            PriorSpec::LinearGaussian { num_actions, .. } => *num_actions,
            PriorSpec::InformationLock { regular_arms, .. } => magic_arm_count(*regular_arms) + regular_arms,
        }
    }

    pub fn noise_std(&self) -> f64 {
        match self {
            PriorSpec::IndependentGaussian { noise_std, .. }
            | PriorSpec::LinearGaussian { noise_std, .. }
            | PriorSpec::InformationLock { noise_std, .. } => *noise_std,
        }
    }

    /// Prior standard deviation of `theta` for linear priors, `sqrt(1 / lambda)`.
    pub fn linear_prior_std(&self) -> Option<f64> {
        match self {
            PriorSpec::LinearGaussian { lambda, .. } => Some((1.0 / lambda).sqrt()),
            _ => None,
        }
    }
}

/// Number of magic arms for an information lock with `regular_arms` regular arms.
pub fn magic_arm_count(regular_arms: usize) -> usize {
    regular_arms.trailing_zeros() as usize
}

/// Bits of `offset` in `width` bits, most significant first.
pub fn encode_offset(offset: usize, width: usize) -> Vec<bool> {
    (0..width).map(|n| (offset >> (width - 1 - n)) & 1 == 1).collect()
}

/// Inverse of [`encode_offset`].
pub fn decode_offset(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// The actions available in an environment.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSet {
    /// `K` unstructured arms.
    Finite(usize),
    /// One unit-norm feature vector per row.
    Linear(Arc<DMatrix<f64>>),
}

impl ActionSet {
    pub fn len(&self) -> usize {
        match self {
            ActionSet::Finite(k) => *k,
            ActionSet::Linear(x) => x.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> Option<&DMatrix<f64>> {
        match self {
            ActionSet::Finite(_) => None,
            ActionSet::Linear(x) => Some(x),
        }
    }

    pub fn check(&self, action: usize) -> Result<()> {
        if action < self.len() {
            Ok(())
        } else {
            Err(Error::ActionIndex {
                action,
                num_actions: self.len(),
            })
        }
    }
}

/// Layout of an information-lock instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InformationLockLayout {
    pub magic_arms: usize,
    pub regular_arms: usize,
    /// Zero-based offset of the optimal arm among the regular arms.
    pub optimal_offset: usize,
}

/// Mean rewards of an information-lock instance whose optimal regular arm
/// has zero-based offset `offset`.
pub fn information_lock_means(regular_arms: usize, offset: usize) -> Vec<f64> {
    let n = magic_arm_count(regular_arms);
    let mut means: Vec<f64> = encode_offset(offset, n)
        .into_iter()
        .map(|b| if b { -1.0 } else { 0.0 })
        .collect();
    means.extend((0..regular_arms).map(|j| if j == offset { 1.0 } else { 0.5 }));
    means
}

/// A fixed environment drawn from a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentInstance {
    means: Vec<f64>,
    actions: ActionSet,
    theta: Option<DVector<f64>>,
    info_lock: Option<InformationLockLayout>,
    optimal_action: usize,
    noise_std: f64,
}

impl EnvironmentInstance {
    /// An unstructured `K`-armed environment with the given true means.
    pub fn from_means(means: Vec<f64>, noise_std: f64) -> Result<Self> {
        if means.is_empty() || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("environment means must be finite and non-empty"));
        }
        check_std("noise_std", noise_std)?;
        let optimal_action = crate::argmax(&means);
        Ok(Self {
            actions: ActionSet::Finite(means.len()),
            means,
            theta: None,
            info_lock: None,
            optimal_action,
            noise_std,
        })
    }

    /// A linear environment; rows of `features` are the actions.
    pub fn linear(theta: DVector<f64>, features: DMatrix<f64>, noise_std: f64) -> Result<Self> {
        if features.ncols() != theta.len() || features.nrows() == 0 {
            return Err(Error::config("feature matrix must be K x d with d = dim(theta)"));
        }
        check_std("noise_std", noise_std)?;
        let means: Vec<f64> = (&features * &theta).iter().copied().collect();
        let optimal_action = crate::argmax(&means);
        Ok(Self {
            means,
            actions: ActionSet::Linear(Arc::new(features)),
            theta: Some(theta),
            info_lock: None,
            optimal_action,
            noise_std,
        })
    }

    /// An information-lock instance whose optimal regular arm has offset `offset`.
    pub fn information_lock(regular_arms: usize, offset: usize, noise_std: f64) -> Result<Self> {
        PriorSpec::InformationLock {
            regular_arms,
            noise_std,
        }
        .validate()?;
        if offset >= regular_arms {
            return Err(Error::config(format!(
                "optimal offset {offset} out of range for {regular_arms} regular arms"
            )));
        }
        let means = information_lock_means(regular_arms, offset);
        let optimal_action = crate::argmax(&means);
        Ok(Self {
            actions: ActionSet::Finite(means.len()),
            means,
            theta: None,
            info_lock: Some(InformationLockLayout {
                magic_arms: magic_arm_count(regular_arms),
                regular_arms,
                optimal_offset: offset,
            }),
            optimal_action,
            noise_std,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, action: usize) -> Result<f64> {
        self.actions.check(action)?;
        Ok(self.means[action])
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.means.len()
    }

    pub fn theta(&self) -> Option<&DVector<f64>> {
        self.theta.as_ref()
    }

    pub fn information_lock_layout(&self) -> Option<InformationLockLayout> {
        self.info_lock
    }

    pub fn optimal_action(&self) -> usize {
        self.optimal_action
    }

    pub fn optimal_mean(&self) -> f64 {
        self.means[self.optimal_action]
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Gap between the optimal mean and the mean of `action`.
    pub fn gap(&self, action: usize) -> Result<f64> {
        Ok(self.optimal_mean() - self.mean(action)?)
    }
}

/// Draws an environment from `prior`.
pub fn sample_environment(prior: &PriorSpec, rng: &mut impl Rng) -> Result<EnvironmentInstance> {
    prior.validate()?;
    match prior {
        PriorSpec::IndependentGaussian {
            means,
            prior_std,
            noise_std,
        } => {
            let sampled = means
                .iter()
                .map(|&m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + prior_std * z
                })
                .collect();
            EnvironmentInstance::from_means(sampled, *noise_std)
        }
        PriorSpec::LinearGaussian {
            dim,
            lambda,
            num_actions,
            noise_std,
        } => {
            let sigma0 = (1.0 / lambda).sqrt();
            let theta = DVector::from_fn(*dim, |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                sigma0 * z
            });
            let mut features = DMatrix::zeros(*num_actions, *dim);
            for mut row in features.row_iter_mut() {
                loop {
                    for x in row.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    let norm = row.norm();
                    if norm > 1e-12 {
                        row /= norm;
                        break;
                    }
                }
            }
            EnvironmentInstance::linear(theta, features, *noise_std)
        }
        PriorSpec::InformationLock {
            regular_arms,
            noise_std,
        } => {
            let offset = rng.random_range(0..*regular_arms);
            EnvironmentInstance::information_lock(*regular_arms, offset, *noise_std)
        }
    }
}

/// One noisy reward for `action`: `mu(action) + noise_std * N(0, 1)`.
pub fn draw_reward(env: &EnvironmentInstance, action: usize, rng: &mut impl Rng) -> Result<f64> {
    let mean = env.mean(action)?;
    if env.noise_std == 0.0 {
        return Ok(mean);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(mean + env.noise_std * z)
}

/// Per-arm reward streams.
///
/// The `n`-th pull of arm `a` always returns the same reward for a given
/// stream, whichever algorithm is pulling. Runs of different algorithms on the
/// same environment therefore share their reward noise.
#[derive(Debug, Clone)]
pub struct RewardTape {
    root: RngStream,
    arms: Vec<Option<SimRng>>,
}

impl RewardTape {
    pub fn new(root: RngStream, num_actions: usize) -> Self {
        Self {
            root,
            arms: vec![None; num_actions],
        }
    }

    pub fn draw(&mut self, env: &EnvironmentInstance, action: usize) -> Result<f64> {
        env.actions.check(action)?;
        let root = self.root;
        let rng = self
            .arms
            .get_mut(action)
            .ok_or(Error::ActionIndex {
                action,
                num_actions: env.num_actions(),
            })?
            .get_or_insert_with(|| root.child(action as u64).rng());
        draw_reward(env, action, rng)
    }
}

/// One round of interaction as seen by the meta-learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    /// 1-based round.
    pub round: usize,
    /// Zero-based index of the base learner that acted.
    pub learner: usize,
    pub action: usize,
    pub reward: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    fn gaussian(means: Vec<f64>, prior_std: f64, noise_std: f64) -> PriorSpec {
        PriorSpec::IndependentGaussian {
            means,
            prior_std,
            noise_std,
        }
    }

    #[test]
    fn information_lock_offset_four() {
        let env = EnvironmentInstance::information_lock(8, 4, 1.0).unwrap();
        assert_eq!(&env.means()[..3], &[-1.0, 0.0, 0.0]);
        let regular = &env.means()[3..];
        for (j, &m) in regular.iter().enumerate() {
            assert_eq!(m, if j == 4 { 1.0 } else { 0.5 });
        }
        assert_eq!(env.optimal_action(), 3 + 4);
        assert_eq!(env.optimal_mean(), 1.0);
    }

    #[test]
    fn encode_decode_roundtrip() {
        for width in 1..=6 {
            for offset in 0..(1usize << width) {
                assert_eq!(decode_offset(&encode_offset(offset, width)), offset);
            }
        }
        assert_eq!(encode_offset(4, 3), vec![true, false, false]);
    }

    #[test]
    fn degenerate_prior_returns_prior_means() {
        let prior = gaussian(vec![0.1, -0.4, 0.3], 0.0, 1.0);
        let env = sample_environment(&prior, &mut RngStream::new(1, 0).rng()).unwrap();
        assert_eq!(env.means(), &[0.1, -0.4, 0.3]);
        assert_eq!(env.optimal_action(), 2);
    }

    #[test]
    fn invalid_priors_rejected() {
        assert!(matches!(gaussian(vec![], 1.0, 1.0).validate(), Err(Error::Config(_))));
        assert!(gaussian(vec![0.0], -1.0, 1.0).validate().is_err());
        assert!(gaussian(vec![f64::NAN], 1.0, 1.0).validate().is_err());
        assert!(PriorSpec::InformationLock {
            regular_arms: 6,
            noise_std: 1.0
        }
        .validate()
        .is_err());
        assert!(PriorSpec::LinearGaussian {
            dim: 3,
            lambda: 0.0,
            num_actions: 4,
            noise_std: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn noiseless_reward_is_mean() {
        let env = EnvironmentInstance::from_means(vec![0.2, 0.7], 0.0).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(draw_reward(&env, 1, &mut rng).unwrap(), 0.7);
    }

    #[test]
    fn out_of_range_action() {
        let env = EnvironmentInstance::from_means(vec![0.2, 0.7], 1.0).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(
            draw_reward(&env, 2, &mut rng),
            Err(Error::ActionIndex {
                action: 2,
                num_actions: 2
            })
        );
        let mut tape = RewardTape::new(RngStream::new(0, 1), 2);
        assert!(tape.draw(&env, 5).is_err());
    }

    #[test]
    fn reward_moments() {
        let env = EnvironmentInstance::from_means(vec![0.0, 0.3], 1.0).unwrap();
        let mut rng = RngStream::new(42, 0).rng();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_reward(&env, 1, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 0.02, "mean {mean}");
        let zero: Vec<f64> = (0..n).map(|_| draw_reward(&env, 0, &mut rng).unwrap()).collect();
        let m0 = zero.iter().sum::<f64>() / n as f64;
        let var = zero.iter().map(|x| (x - m0).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.97..=1.03).contains(&var), "variance {var}");
    }

    #[test]
    fn linear_theta_marginal_variance() {
        let prior = PriorSpec::LinearGaussian {
            dim: 10,
            lambda: 1.0,
            num_actions: 1,
            noise_std: 1.0,
        };
        let mut rng = RngStream::new(3, 9).rng();
        let n = 100_000;
        let mut sums = [0.0f64; 10];
        let mut sq = [0.0f64; 10];
        for _ in 0..n {
            let env = sample_environment(&prior, &mut rng).unwrap();
            for (k, &v) in env.theta().unwrap().iter().enumerate() {
                sums[k] += v;
                sq[k] += v * v;
            }
        }
        for k in 0..10 {
            let mean = sums[k] / n as f64;
            let var = (sq[k] - n as f64 * mean * mean) / (n - 1) as f64;
            assert!((0.97..=1.03).contains(&var), "coordinate {k} variance {var}");
        }
    }

    #[test]
    fn linear_actions_unit_norm_and_cauchy_schwarz() {
        let prior = PriorSpec::LinearGaussian {
            dim: 4,
            lambda: 2.0,
            num_actions: 50,
            noise_std: 1.0,
        };
        let mut rng = RngStream::new(5, 5).rng();
        for _ in 0..20 {
            let env = sample_environment(&prior, &mut rng).unwrap();
            let x = env.actions().features().unwrap();
            for row in x.row_iter() {
                assert!((row.norm() - 1.0).abs() <= 1e-12);
            }
            let theta = env.theta().unwrap();
            for (a, m) in env.means().iter().enumerate() {
                assert!((m - x.row(a).dot(&theta.transpose())).abs() < 1e-12);
            }
            assert!(env.optimal_mean() <= theta.norm() + 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let priors = [
            gaussian(vec![0.0; 5], 1.0, 1.0),
            PriorSpec::LinearGaussian {
                dim: 3,
                lambda: 1.0,
                num_actions: 7,
                noise_std: 1.0,
            },
            PriorSpec::InformationLock {
                regular_arms: 16,
                noise_std: 1.0,
            },
        ];
        for prior in &priors {
            let s = RngStream::new(11, 2);
            let a = sample_environment(prior, &mut s.rng()).unwrap();
            let b = sample_environment(prior, &mut s.rng()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn information_lock_bits_recover_optimum() {
        let prior = PriorSpec::InformationLock {
            regular_arms: 32,
            noise_std: 1.0,
        };
        let mut rng = RngStream::new(8, 8).rng();
        for _ in 0..200 {
            let env = sample_environment(&prior, &mut rng).unwrap();
            let layout = env.information_lock_layout().unwrap();
            let bits: Vec<bool> = env.means()[..layout.magic_arms].iter().map(|&m| m < -0.5).collect();
            assert_eq!(decode_offset(&bits), layout.optimal_offset);
            assert_eq!(env.optimal_action(), layout.magic_arms + layout.optimal_offset);
        }
    }

    #[test]
    fn reward_tape_is_per_arm() {
        let env = EnvironmentInstance::from_means(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let root = RngStream::new(1, 1);
        let mut a = RewardTape::new(root, 3);
        let mut b = RewardTape::new(root, 3);
        // Interleaving pulls of other arms does not shift arm 2's sequence.
        let a2: Vec<f64> = (0..5).map(|_| a.draw(&env, 2).unwrap()).collect();
        let mut b2 = Vec::new();
        for _ in 0..5 {
            b.draw(&env, 0).unwrap();
            b2.push(b.draw(&env, 2).unwrap());
        }
        assert_eq!(a2, b2);
    }
}
