//! Base learners: the bandit algorithms the meta-learner chooses between.
//!
//! Every learner exposes the same two calls. `select` proposes an action for
//! the current round and `update` absorbs an observed `(action, reward)` pair.
//! Learners only ever see the data they are handed.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::env::{decode_offset, magic_arm_count, ActionSet, PriorSpec};
use crate::error::{Error, Result};
use crate::posterior::{GaussianArmPosterior, LinearGaussianPosterior};
use crate::rng::SimRng;

/// A bandit algorithm driven one round at a time.
pub trait Learner {
    fn num_actions(&self) -> usize;
    fn select(&mut self, rng: &mut SimRng) -> usize;
    fn update(&mut self, action: usize, reward: f64) -> Result<()>;
}

fn check_update(action: usize, reward: f64, num_actions: usize) -> Result<()> {
    if action >= num_actions {
        return Err(Error::ActionIndex { action, num_actions });
    }
    if !reward.is_finite() {
        return Err(Error::Data(format!("reward must be finite, got {reward}")));
    }
    Ok(())
}

/// Always plays the same arm.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedArm {
    arm: usize,
    num_actions: usize,
}

impl FixedArm {
    pub fn new(arm: usize, num_actions: usize) -> Result<Self> {
        if arm >= num_actions {
            return Err(Error::ActionIndex {
                action: arm,
                num_actions,
            });
        }
        Ok(Self { arm, num_actions })
    }

    pub fn arm(&self) -> usize {
        self.arm
    }
}

impl Learner for FixedArm {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn select(&mut self, _rng: &mut SimRng) -> usize {
        self.arm
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        check_update(action, reward, self.num_actions)
    }
}

/// UCB with index `mean(a) + c * sqrt(log(2 K N / delta) / n(a))`, where `N`
/// is the learner's total pull count.
#[derive(Debug, Clone, PartialEq)]
pub struct Ucb {
    counts: Vec<u64>,
    sums: Vec<f64>,
    c: f64,
    delta: f64,
}

impl Ucb {
    pub fn new(num_actions: usize, c: f64, delta: f64) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Config("UCB needs at least one arm".into()));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Config(format!("UCB confidence constant must be >= 0, got {c}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("UCB delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self {
            counts: vec![0; num_actions],
            sums: vec![0.0; num_actions],
            c,
            delta,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// UCB index of every arm; `None` until every arm has been pulled once.
    pub fn indices(&self) -> Option<Vec<f64>> {
        if self.counts.contains(&0) {
            return None;
        }
        let k = self.counts.len() as f64;
        let total: u64 = self.counts.iter().sum();
        let log_term = (2.0 * k * total as f64 / self.delta).ln();
        Some(
            self.counts
                .iter()
                .zip(&self.sums)
                .map(|(&n, &s)| {
                    let n = n as f64;
                    s / n + self.c * (log_term / n).sqrt()
                })
                .collect(),
        )
    }
}

impl Learner for Ucb {
    fn num_actions(&self) -> usize {
        self.counts.len()
    }

    fn select(&mut self, _rng: &mut SimRng) -> usize {
        if let Some(unpulled) = self.counts.iter().position(|&n| n == 0) {
            return unpulled;
        }
        crate::argmax(&self.indices().expect("all arms pulled"))
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        check_update(action, reward, self.num_actions())?;
        self.counts[action] += 1;
        self.sums[action] += reward;
        Ok(())
    }
}

/// Thompson sampling with its own independent Gaussian prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTs {
    posterior: GaussianArmPosterior,
}

impl GaussianTs {
    pub fn new(prior_means: Vec<f64>, prior_std: f64, noise_std: f64) -> Result<Self> {
        Ok(Self {
            posterior: GaussianArmPosterior::new(prior_means, prior_std, noise_std)?,
        })
    }

    pub fn from_posterior(posterior: GaussianArmPosterior) -> Self {
        Self { posterior }
    }

    pub fn posterior(&self) -> &GaussianArmPosterior {
        &self.posterior
    }
}

impl Learner for GaussianTs {
    fn num_actions(&self) -> usize {
        self.posterior.num_arms()
    }

    fn select(&mut self, rng: &mut SimRng) -> usize {
        crate::argmax(&self.posterior.sample(rng))
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        self.posterior.observe(action, reward)
    }
}

/// Linear Thompson sampling, `theta ~ N(theta_hat, c^2 d V^{-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinTs {
    stats: LinearGaussianPosterior,
    features: Arc<DMatrix<f64>>,
    c: f64,
}

impl LinTs {
    pub fn new(features: Arc<DMatrix<f64>>, c: f64, lambda: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Config(format!("LinTS radius must be >= 0, got {c}")));
        }
        if features.nrows() == 0 {
            return Err(Error::Config("LinTS needs at least one action".into()));
        }
        Ok(Self {
            stats: LinearGaussianPosterior::new(features.ncols(), lambda)?,
            features,
            c,
        })
    }

    pub fn stats(&self) -> &LinearGaussianPosterior {
        &self.stats
    }

    fn sampling_scale(&self) -> f64 {
        self.c * self.c * self.stats.dim() as f64
    }
}

impl Learner for LinTs {
    fn num_actions(&self) -> usize {
        self.features.nrows()
    }

    fn select(&mut self, rng: &mut SimRng) -> usize {
        let theta = self.stats.sample_theta(self.sampling_scale(), rng);
        let scores = self.features.as_ref() * theta;
        crate::argmax(scores.as_slice())
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        check_update(action, reward, self.num_actions())?;
        self.stats.observe(&self.features.row(action).transpose(), reward)
    }
}

/// Information-lock solver.
///
/// Pulls each magic arm `pulls_per_magic_arm` times, reads bit `n` as set
/// when the empirical mean of magic arm `n` is below `-1/2`, then commits to
/// the decoded regular arm forever.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationLockSolver {
    magic_arms: usize,
    regular_arms: usize,
    pulls_per_magic_arm: u64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    decoded: Option<usize>,
}

impl InformationLockSolver {
    pub fn new(regular_arms: usize, pulls_per_magic_arm: u64) -> Result<Self> {
        if regular_arms < 2 || !regular_arms.is_power_of_two() {
            return Err(Error::Config(format!(
                "information-lock solver needs a power-of-two number of regular arms, got {regular_arms}"
            )));
        }
        if pulls_per_magic_arm == 0 {
            return Err(Error::Config("pulls per magic arm must be at least 1".into()));
        }
        let magic_arms = magic_arm_count(regular_arms);
        Ok(Self {
            magic_arms,
            regular_arms,
            pulls_per_magic_arm,
            counts: vec![0; magic_arms],
            sums: vec![0.0; magic_arms],
            decoded: None,
        })
    }

    /// `max(1, ceil(4 * noise_var * ln(horizon)))`.
    pub fn default_pulls(noise_std: f64, horizon: usize) -> u64 {
        let m = (4.0 * noise_std * noise_std * (horizon.max(1) as f64).ln()).ceil();
        (m as u64).max(1)
    }

    /// Zero-based index of the decoded regular arm among all actions.
    pub fn decoded_action(&self) -> Option<usize> {
        self.decoded
    }

    pub fn pulls_per_magic_arm(&self) -> u64 {
        self.pulls_per_magic_arm
    }
}

impl Learner for InformationLockSolver {
    fn num_actions(&self) -> usize {
        self.magic_arms + self.regular_arms
    }

    fn select(&mut self, _rng: &mut SimRng) -> usize {
        if let Some(arm) = self.decoded {
            return arm;
        }
        if let Some(n) = self.counts.iter().position(|&c| c < self.pulls_per_magic_arm) {
            return n;
        }
        let bits: Vec<bool> = self
            .counts
            .iter()
            .zip(&self.sums)
            .map(|(&c, &s)| s / (c as f64) < -0.5)
            .collect();
        let arm = self.magic_arms + decode_offset(&bits);
        self.decoded = Some(arm);
        arm
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        check_update(action, reward, self.num_actions())?;
        if action < self.magic_arms {
            self.counts[action] += 1;
            self.sums[action] += reward;
        }
        Ok(())
    }
}

fn default_delta() -> f64 {
    0.1
}

fn default_unit() -> f64 {
    1.0
}

/// Hyperparameters of a base learner, independent of any environment draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerSpec {
    FixedArm {
        arm: usize,
    },
    Ucb {
        c: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    GaussianTs {
        /// Defaults to a zero prior mean on every action.
        #[serde(default)]
        prior_means: Option<Vec<f64>>,
        prior_std: f64,
        #[serde(default = "default_unit")]
        noise_std: f64,
    },
    LinTs {
        c: f64,
        #[serde(default = "default_unit")]
        lambda: f64,
    },
    Ils {
        /// Defaults to [`InformationLockSolver::default_pulls`].
        #[serde(default)]
        pulls_per_magic_arm: Option<u64>,
        #[serde(default = "default_unit")]
        noise_std: f64,
    },
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl LearnerSpec {
    /// Short human-readable name used in result tables.
    pub fn label(&self) -> String {
        match self {
            LearnerSpec::FixedArm { arm } => format!("Fixed(a={arm})"),
            LearnerSpec::Ucb { c, .. } => format!("UCB(c={})", fmt_num(*c)),
            LearnerSpec::GaussianTs { prior_means: None, .. } => "TS".to_string(),
            LearnerSpec::GaussianTs {
                prior_means: Some(m), ..
            } => {
                let parts: Vec<String> = m.iter().map(|x| fmt_num(*x)).collect();
                format!("TS(mu0=[{}])", parts.join(" "))
            }
            LearnerSpec::LinTs { c, .. } => format!("LinTS(c={})", fmt_num(*c)),
            LearnerSpec::Ils { .. } => "ILS".to_string(),
        }
    }

    /// Checks that this learner can be built for environments drawn from `prior`.
    pub fn check_against(&self, prior: &PriorSpec, horizon: usize) -> Result<()> {
        let actions = match (self, prior) {
            (LearnerSpec::LinTs { .. }, PriorSpec::LinearGaussian { dim, num_actions, .. }) => {
                ActionSet::Linear(Arc::new(DMatrix::zeros(*num_actions, *dim)))
            }
            _ => ActionSet::Finite(prior.num_actions()),
        };
        self.build(&actions, horizon).map(|_| ())
    }

    /// Builds a fresh learner for an environment with `actions` over `horizon` rounds.
    pub fn build(&self, actions: &ActionSet, horizon: usize) -> Result<BaseLearner> {
        let k = actions.len();
        Ok(match self {
            LearnerSpec::FixedArm { arm } => BaseLearner::FixedArm(FixedArm::new(*arm, k)?),
            LearnerSpec::Ucb { c, delta } => BaseLearner::Ucb(Ucb::new(k, *c, *delta)?),
            LearnerSpec::GaussianTs {
                prior_means,
                prior_std,
                noise_std,
            } => {
                let means = prior_means.clone().unwrap_or_else(|| vec![0.0; k]);
                if means.len() != k {
                    return Err(Error::Config(format!(
                        "TS prior has {} means but the environment has {k} actions",
                        means.len()
                    )));
                }
                BaseLearner::GaussianTs(GaussianTs::new(means, *prior_std, *noise_std)?)
            }
            LearnerSpec::LinTs { c, lambda } => match actions {
                ActionSet::Linear(x) => BaseLearner::LinTs(LinTs::new(Arc::clone(x), *c, *lambda)?),
                ActionSet::Finite(_) => {
                    return Err(Error::Config("LinTS needs an environment with action features".into()))
                }
            },
            LearnerSpec::Ils {
                pulls_per_magic_arm,
                noise_std,
            } => {
                let regular = (1..usize::BITS as usize)
                    .map(|n| 1usize << n)
                    .take_while(|&r| r + magic_arm_count(r) <= k)
                    .find(|&r| r + magic_arm_count(r) == k)
                    .ok_or_else(|| Error::Config(format!("{k} actions is not an information-lock layout")))?;
                let m =
                    pulls_per_magic_arm.unwrap_or_else(|| InformationLockSolver::default_pulls(*noise_std, horizon));
                BaseLearner::Ils(InformationLockSolver::new(regular, m)?)
            }
        })
    }
}

/// Any of the concrete base learners.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseLearner {
    FixedArm(FixedArm),
    Ucb(Ucb),
    GaussianTs(GaussianTs),
    LinTs(LinTs),
    Ils(InformationLockSolver),
}

impl BaseLearner {
    fn inner(&self) -> &dyn Learner {
        match self {
            BaseLearner::FixedArm(l) => l,
            BaseLearner::Ucb(l) => l,
            BaseLearner::GaussianTs(l) => l,
            BaseLearner::LinTs(l) => l,
            BaseLearner::Ils(l) => l,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Learner {
        match self {
            BaseLearner::FixedArm(l) => l,
            BaseLearner::Ucb(l) => l,
            BaseLearner::GaussianTs(l) => l,
            BaseLearner::LinTs(l) => l,
            BaseLearner::Ils(l) => l,
        }
    }
}

impl Learner for BaseLearner {
    fn num_actions(&self) -> usize {
        self.inner().num_actions()
    }

    fn select(&mut self, rng: &mut SimRng) -> usize {
        self.inner_mut().select(rng)
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        self.inner_mut().update(action, reward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_environment, EnvironmentInstance, PriorSpec, RewardTape};
    use crate::RngStream;
    use approx::assert_relative_eq;

    fn rng() -> SimRng {
        RngStream::new(0, 0).rng()
    }

    #[test]
    fn fixed_arm_always_same() {
        let mut l = FixedArm::new(3, 5).unwrap();
        let mut r = rng();
        for _ in 0..10 {
            assert_eq!(l.select(&mut r), 3);
            l.update(1, 0.4).unwrap();
        }
        assert!(FixedArm::new(5, 5).is_err());
    }

    #[test]
    fn ucb_hand_evaluated_indices() {
        let mut l = Ucb::new(2, 1.0, 0.1).unwrap();
        for r in [0.5; 4] {
            l.update(0, r).unwrap();
        }
        l.update(1, 0.9).unwrap();
        assert_eq!(l.counts(), &[4, 1]);
        // 2 * K * N / delta = 2 * 2 * 5 / 0.1 = 200.
        let idx = l.indices().unwrap();
        assert_relative_eq!(idx[0], 0.5 + (200f64.ln() / 4.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(idx[1], 0.9 + 200f64.ln().sqrt(), epsilon = 1e-12);
        assert_relative_eq!(idx[0], 1.65090, epsilon = 1e-5);
        assert_relative_eq!(idx[1], 3.20180, epsilon = 1e-5);
        assert_eq!(l.select(&mut rng()), 1);
    }

    #[test]
    fn ucb_pulls_unpulled_first() {
        let mut l = Ucb::new(3, 1.0, 0.1).unwrap();
        let mut r = rng();
        let mut order = Vec::new();
        for _ in 0..3 {
            let a = l.select(&mut r);
            order.push(a);
            l.update(a, 0.0).unwrap();
        }
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn ucb_counter_arithmetic() {
        let mut l = Ucb::new(3, 1.0, 0.1).unwrap();
        l.update(1, 0.5).unwrap();
        l.update(1, 0.5).unwrap();
        assert_eq!(l.counts()[1], 2);
        assert_eq!(l.sums()[1], 1.0);
        assert!(matches!(l.update(1, f64::NAN), Err(Error::Data(_))));
    }

    #[test]
    fn ucb_zero_radius_is_greedy() {
        let mut l = Ucb::new(3, 0.0, 0.1).unwrap();
        for (a, r) in [(0, 0.2), (1, 0.9), (2, 0.1), (0, 0.3)] {
            l.update(a, r).unwrap();
        }
        assert_eq!(l.select(&mut rng()), 1);
    }

    #[test]
    fn ils_decodes_noiseless_bits() {
        let env = EnvironmentInstance::information_lock(8, 4, 0.0).unwrap();
        let mut l = InformationLockSolver::new(8, 1).unwrap();
        let mut r = rng();
        let mut tape = RewardTape::new(RngStream::new(0, 1), env.num_actions());
        let mut played = Vec::new();
        for _ in 0..6 {
            let a = l.select(&mut r);
            played.push(a);
            l.update(a, tape.draw(&env, a).unwrap()).unwrap();
        }
        assert_eq!(played, vec![0, 1, 2, 7, 7, 7]);
        // Offset 4 is the fifth regular arm: N + 5 in 1-based numbering.
        assert_eq!(l.decoded_action(), Some(3 + 4));
    }

    #[test]
    fn ils_noiseless_regret_is_warmup_cost() {
        let prior = PriorSpec::InformationLock {
            regular_arms: 16,
            noise_std: 0.0,
        };
        let mut r = RngStream::new(9, 9).rng();
        for _ in 0..50 {
            let env = sample_environment(&prior, &mut r).unwrap();
            let mut l = InformationLockSolver::new(16, 1).unwrap();
            let mut tape = RewardTape::new(RngStream::new(1, 1), env.num_actions());
            let mut regret = 0.0;
            for _ in 0..100 {
                let a = l.select(&mut r);
                regret += env.gap(a).unwrap();
                l.update(a, tape.draw(&env, a).unwrap()).unwrap();
            }
            // Magic arm n has mean -b_n, so its gap to the optimum (1) is 1 + b_n.
            let expected: f64 = env.means()[..4].iter().map(|m| 1.0 - m).sum();
            assert_relative_eq!(regret, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn ils_default_budget() {
        assert_eq!(InformationLockSolver::default_pulls(1.0, 1000), 28);
        assert_eq!(InformationLockSolver::default_pulls(0.0, 1000), 1);
        assert_eq!(InformationLockSolver::default_pulls(1.0, 1), 1);
    }

    #[test]
    fn lints_zero_radius_is_greedy() {
        let x = Arc::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0]));
        let mut l = LinTs::new(Arc::clone(&x), 0.0, 1.0).unwrap();
        l.update(1, 2.0).unwrap();
        l.update(0, -1.0).unwrap();
        let theta = l.stats().estimate();
        let scores = x.as_ref() * &theta;
        let greedy = crate::argmax(scores.as_slice());
        let mut r = rng();
        for _ in 0..20 {
            assert_eq!(l.select(&mut r), greedy);
        }
        assert_eq!(greedy, 1);
    }

    #[test]
    fn gaussian_ts_is_consistent() {
        let env = EnvironmentInstance::from_means(vec![0.0, 0.8], 1.0).unwrap();
        let mut l = GaussianTs::new(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let mut tape = RewardTape::new(RngStream::new(2, 2), 2);
        for _ in 0..10_000 {
            l.update(1, tape.draw(&env, 1).unwrap()).unwrap();
        }
        assert!((l.posterior().mean(1) - 0.8).abs() < 0.05);
    }

    #[test]
    fn select_is_pure_given_rng() {
        let x = Arc::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let learners = vec![
            BaseLearner::GaussianTs(GaussianTs::new(vec![0.0; 2], 1.0, 1.0).unwrap()),
            BaseLearner::LinTs(LinTs::new(x, 1.0, 1.0).unwrap()),
            BaseLearner::Ucb(Ucb::new(2, 1.0, 0.1).unwrap()),
        ];
        for l in learners {
            let a: Vec<usize> = {
                let mut l = l.clone();
                let mut r = RngStream::new(5, 1).rng();
                (0..50).map(|_| l.select(&mut r)).collect()
            };
            let b: Vec<usize> = {
                let mut l = l.clone();
                let mut r = RngStream::new(5, 1).rng();
                (0..50).map(|_| l.select(&mut r)).collect()
            };
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spec_build_and_labels() {
        let finite = ActionSet::Finite(11);
        let ils = LearnerSpec::Ils {
            pulls_per_magic_arm: None,
            noise_std: 1.0,
        };
        match ils.build(&finite, 1000).unwrap() {
            BaseLearner::Ils(l) => {
                assert_eq!(l.pulls_per_magic_arm(), 28);
                assert_eq!(l.num_actions(), 11);
            }
            other => panic!("unexpected learner {other:?}"),
        }
        assert!(ils.build(&ActionSet::Finite(10), 1000).is_err());
        assert!(LearnerSpec::LinTs { c: 1.0, lambda: 1.0 }.build(&finite, 10).is_err());
        let ts = LearnerSpec::GaussianTs {
            prior_means: Some(vec![0.0, 0.1]),
            prior_std: 0.05,
            noise_std: 1.0,
        };
        assert_eq!(ts.label(), "TS(mu0=[0 0.1])");
        assert!(ts.build(&finite, 10).is_err());
        assert_eq!(LearnerSpec::Ucb { c: 0.01, delta: 0.1 }.label(), "UCB(c=0.01)");
    }
}
