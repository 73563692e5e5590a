//! The balancing meta-learner.
//!
//! Rounds `1..=M` go to learners `0..M` in order. After that, every round
//! draws one joint sample `mu~` from the global posterior, scores each
//! learner by
//!
//! ```text
//! phi(i) = n_i * max_a mu~(a) - sum_{l in I_i} mu~(a_l)
//! ```
//!
//! and hands the round to the learner with the smallest score (lowest index
//! on ties). The global posterior sees every observation. Base learners see
//! only their own rounds unless data sharing is on.

use crate::env::{EnvironmentInstance, HistoryRecord, RewardTape};
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, Learner};
use crate::metrics::RunResult;
use crate::posterior::Posterior;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetaConfig {
    /// Pass every observation to all base learners instead of only the one that acted.
    pub share_data: bool,
}

/// Balancing potentials for one sampled mean vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialVector {
    pub potentials: Vec<f64>,
    pub sampled_means: Vec<f64>,
    pub sampled_optimum: f64,
}

impl PotentialVector {
    pub fn argmin(&self) -> usize {
        crate::argmin(&self.potentials)
    }
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub round: usize,
    pub learner: usize,
    pub action: usize,
    pub reward: f64,
    /// Learners whose statistics absorbed the observation.
    pub updated_learners: Vec<usize>,
    /// `None` during the round-robin warm start.
    pub potentials: Option<PotentialVector>,
}

#[derive(Debug, Clone)]
pub struct MetaLearner {
    round: usize,
    learners: Vec<BaseLearner>,
    posterior: Posterior,
    config: MetaConfig,
    selections: Vec<Vec<usize>>,
    action_counts: Vec<Vec<u64>>,
    reward_sums: Vec<f64>,
    history: Vec<HistoryRecord>,
}

impl MetaLearner {
    pub fn new(learners: Vec<BaseLearner>, posterior: Posterior, config: MetaConfig) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::Config("meta-learner needs at least one base learner".into()));
        }
        let k = posterior.num_actions();
        if let Some(bad) = learners.iter().position(|l| l.num_actions() != k) {
            return Err(Error::Config(format!(
                "learner {bad} has {} actions, posterior has {k}",
                learners[bad].num_actions()
            )));
        }
        let m = learners.len();
        Ok(Self {
            round: 1,
            learners,
            posterior,
            config,
            selections: vec![Vec::new(); m],
            action_counts: vec![vec![0; k]; m],
            reward_sums: vec![0.0; m],
            history: Vec::new(),
        })
    }

    /// The round about to be played (1-based).
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn num_learners(&self) -> usize {
        self.learners.len()
    }

    pub fn num_actions(&self) -> usize {
        self.posterior.num_actions()
    }

    pub fn learners(&self) -> &[BaseLearner] {
        &self.learners
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn config(&self) -> MetaConfig {
        self.config
    }

    /// `I^i`: rounds given to each learner so far.
    pub fn selections(&self) -> &[Vec<usize>] {
        &self.selections
    }

    /// `n^i`.
    pub fn selection_counts(&self) -> Vec<usize> {
        self.selections.iter().map(Vec::len).collect()
    }

    /// `u^i`.
    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn history(&self) -> &[HistoryRecord] {
        &self.history
    }

    /// Potentials of every learner under `means`.
    ///
    /// Passing the true means of the environment yields each learner's
    /// realized regret so far.
    pub fn compute_potentials(&self, means: &[f64]) -> PotentialVector {
        let best = crate::argmax(means);
        let optimum = means.get(best).copied().unwrap_or(0.0);
        let potentials = self
            .action_counts
            .iter()
            .map(|counts| {
                counts
                    .iter()
                    .zip(means)
                    .filter(|(&n, _)| n > 0)
                    .map(|(&n, &mu)| n as f64 * (optimum - mu))
                    .sum()
            })
            .collect();
        PotentialVector {
            potentials,
            sampled_means: means.to_vec(),
            sampled_optimum: optimum,
        }
    }

    /// Learner for the current round, with the potentials that chose it.
    pub fn select_learner(&self, rng: &mut SimRng) -> (usize, Option<PotentialVector>) {
        let m = self.num_learners();
        if self.round <= m {
            return ((self.round - 1) % m, None);
        }
        let sample = self.posterior.sample_means(rng);
        let potentials = self.compute_potentials(&sample);
        (potentials.argmin(), Some(potentials))
    }

    /// Plays one round against `env`.
    pub fn step(
        &mut self,
        env: &EnvironmentInstance,
        rewards: &mut RewardTape,
        rng: &mut SimRng,
    ) -> Result<StepOutcome> {
        if env.num_actions() != self.num_actions() {
            return Err(Error::Config(format!(
                "environment has {} actions, meta-learner expects {}",
                env.num_actions(),
                self.num_actions()
            )));
        }
        let (learner, potentials) = self.select_learner(rng);
        let action = self.learners[learner].select(rng);
        let reward = rewards.draw(env, action)?;

        let updated_learners: Vec<usize> = if self.config.share_data {
            (0..self.num_learners()).collect()
        } else {
            vec![learner]
        };
        for &i in &updated_learners {
            self.learners[i].update(action, reward)?;
        }
        self.posterior.update(action, reward)?;

        let round = self.round;
        self.selections[learner].push(round);
        self.action_counts[learner][action] += 1;
        self.reward_sums[learner] += reward;
        self.history.push(HistoryRecord {
            round,
            learner,
            action,
            reward,
        });
        self.round += 1;
        Ok(StepOutcome {
            round,
            learner,
            action,
            reward,
            updated_learners,
            potentials,
        })
    }

    /// Plays `horizon` rounds and records them.
    pub fn run_episode(
        &mut self,
        env: &EnvironmentInstance,
        horizon: usize,
        rewards: &mut RewardTape,
        rng: &mut SimRng,
    ) -> Result<RunResult> {
        if horizon < self.num_learners() {
            return Err(Error::Argument(format!(
                "horizon {horizon} is shorter than the {} warm-start rounds",
                self.num_learners()
            )));
        }
        let mut run = RunResult::new(self.num_learners(), horizon);
        for _ in 0..horizon {
            let out = self.step(env, rewards, rng)?;
            run.record(env, out.learner, out.action, out.reward)?;
        }
        Ok(run)
    }
}

/// Runs a single base learner on its own for `horizon` rounds.
pub fn run_standalone(
    learner: &mut BaseLearner,
    env: &EnvironmentInstance,
    horizon: usize,
    rewards: &mut RewardTape,
    rng: &mut SimRng,
) -> Result<RunResult> {
    if learner.num_actions() != env.num_actions() {
        return Err(Error::Config(format!(
            "learner has {} actions, environment has {}",
            learner.num_actions(),
            env.num_actions()
        )));
    }
    let mut run = RunResult::new(1, horizon);
    for _ in 0..horizon {
        let action = learner.select(rng);
        let reward = rewards.draw(env, action)?;
        learner.update(action, reward)?;
        run.record(env, 0, action, reward)?;
    }
    Ok(run)
}
