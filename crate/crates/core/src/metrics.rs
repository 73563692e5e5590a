//! Regret accounting for single runs and estimators across replications.

use crate::env::EnvironmentInstance;
use crate::error::{Error, Result};

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// Everything recorded about one episode.
///
/// Per-round vectors are indexed by `t - 1`. `learner_regret[i][t - 1]` is the
/// realized regret accumulated by learner `i` over its rounds up to and
/// including round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub learners: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub regrets: Vec<f64>,
    pub optimal: Vec<bool>,
    pub learner_regret: Vec<Vec<f64>>,
    /// `u^i`: observed rewards summed over each learner's rounds.
    pub observed_reward_sums: Vec<f64>,
    /// `u-bar^i`: true mean rewards of the played actions summed over each learner's rounds.
    pub expected_reward_sums: Vec<f64>,
}

impl RunResult {
    pub fn new(num_learners: usize, horizon: usize) -> Self {
        Self {
            learners: Vec::with_capacity(horizon),
            actions: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon),
            regrets: Vec::with_capacity(horizon),
            optimal: Vec::with_capacity(horizon),
            learner_regret: vec![Vec::with_capacity(horizon); num_learners],
            observed_reward_sums: vec![0.0; num_learners],
            expected_reward_sums: vec![0.0; num_learners],
        }
    }

    /// Appends one round played by `learner`.
    pub fn record(&mut self, env: &EnvironmentInstance, learner: usize, action: usize, reward: f64) -> Result<()> {
        if learner >= self.num_learners() {
            return Err(Error::Argument(format!(
                "learner {learner} out of range for {} learners",
                self.num_learners()
            )));
        }
        let mean = env.mean(action)?;
        let regret = env.optimal_mean() - mean;
        self.learners.push(learner);
        self.actions.push(action);
        self.rewards.push(reward);
        self.regrets.push(regret);
        self.optimal.push(action == env.optimal_action());
        for (i, traj) in self.learner_regret.iter_mut().enumerate() {
            let prev = traj.last().copied().unwrap_or(0.0);
            traj.push(if i == learner { prev + regret } else { prev });
        }
        self.observed_reward_sums[learner] += reward;
        self.expected_reward_sums[learner] += mean;
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn num_learners(&self) -> usize {
        self.learner_regret.len()
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.regrets
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    pub fn total_regret(&self) -> f64 {
        self.regrets.iter().sum()
    }

    /// `n^i` after the final round.
    pub fn selection_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_learners()];
        for &i in &self.learners {
            counts[i] += 1;
        }
        counts
    }
}

fn check_runs(runs: &[RunResult]) -> Result<usize> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Argument("no runs to aggregate".into()))?;
    let horizon = first.horizon();
    if runs.iter().any(|r| r.horizon() != horizon) {
        return Err(Error::Argument("runs have different horizons".into()));
    }
    Ok(horizon)
}

/// Mean cumulative regret at every round across `runs`.
pub fn empirical_bayes_regret(runs: &[RunResult]) -> Result<Vec<f64>> {
    let horizon = check_runs(runs)?;
    let mut total = vec![0.0; horizon];
    for run in runs {
        for (acc, c) in total.iter_mut().zip(run.cumulative_regret()) {
            *acc += c;
        }
    }
    let r = runs.len() as f64;
    Ok(total.into_iter().map(|s| s / r).collect())
}

/// Fraction of runs playing their environment's optimal action at every round.
pub fn optimal_action_rate(runs: &[RunResult]) -> Result<Vec<f64>> {
    let horizon = check_runs(runs)?;
    let mut hits = vec![0usize; horizon];
    for run in runs {
        for (h, &o) in hits.iter_mut().zip(&run.optimal) {
            *h += usize::from(o);
        }
    }
    let r = runs.len() as f64;
    Ok(hits.into_iter().map(|h| h as f64 / r).collect())
}

/// Smallest `d` with `regret[l-1] <= d * sqrt(l)` for every prefix `l`.
pub fn regret_coefficient(trajectory: &[f64]) -> f64 {
    trajectory
        .iter()
        .enumerate()
        .map(|(i, &r)| r / ((i + 1) as f64).sqrt())
        .fold(0.0, f64::max)
}

/// [`regret_coefficient`] of every prefix of `trajectory`.
pub fn regret_coefficient_path(trajectory: &[f64]) -> Vec<f64> {
    trajectory
        .iter()
        .enumerate()
        .scan(0.0f64, |best, (i, &r)| {
            *best = best.max(r / ((i + 1) as f64).sqrt());
            Some(*best)
        })
        .collect()
}

/// Monte-Carlo surrogate of `d*`: max over sampled environments of the
/// smallest regret coefficient among the learners run on it.
pub fn empirical_d_star(coefficients_per_env: &[Vec<f64>]) -> Option<f64> {
    coefficients_per_env
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .reduce(f64::max)
}

/// Normal-approximation 95% interval `(mean, 1.96 * s / sqrt(R))`; the
/// half-width is 0 for a single sample.
pub fn ci95(samples: &[f64]) -> Result<(f64, f64)> {
    let mut stat = RunningStat::default();
    if samples.is_empty() {
        return Err(Error::Argument("confidence interval of an empty sample".into()));
    }
    for &x in samples {
        stat.push(x);
    }
    Ok((stat.mean(), stat.ci95_half_width()))
}

/// Welford mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStat {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation (denominator `n - 1`).
    pub fn sample_std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn ci95_half_width(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            Z95 * self.sample_std() / (self.count as f64).sqrt()
        }
    }
}

/// Cross-replication summary of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub replications: usize,
    pub mean_regret: Vec<f64>,
    pub regret_ci: Vec<f64>,
    pub opt_rate: Vec<f64>,
    pub opt_ci: Vec<f64>,
    /// Mean fraction of rounds given to each learner.
    pub selection_frequencies: Vec<f64>,
}

impl AggregateResult {
    pub fn horizon(&self) -> usize {
        self.mean_regret.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_regret_ci(&self) -> f64 {
        self.regret_ci.last().copied().unwrap_or(0.0)
    }
}

/// Streaming accumulator over runs; feeding runs in a fixed order gives
/// bit-identical results.
#[derive(Debug, Clone)]
pub struct Aggregator {
    regret: Vec<RunningStat>,
    opt: Vec<RunningStat>,
    selections: Vec<f64>,
    runs: usize,
}

impl Aggregator {
    pub fn new(horizon: usize, num_learners: usize) -> Self {
        Self {
            regret: vec![RunningStat::default(); horizon],
            opt: vec![RunningStat::default(); horizon],
            selections: vec![0.0; num_learners],
            runs: 0,
        }
    }

    pub fn add(&mut self, run: &RunResult) -> Result<()> {
        self.add_summary(&RunSummary::from(run))
    }

    pub fn add_summary(&mut self, run: &RunSummary) -> Result<()> {
        if run.cumulative_regret.len() != self.regret.len() {
            return Err(Error::Argument(format!(
                "run horizon {} does not match aggregate horizon {}",
                run.cumulative_regret.len(),
                self.regret.len()
            )));
        }
        if run.selection_counts.len() != self.selections.len() {
            return Err(Error::Argument("run has a different number of learners".into()));
        }
        for (s, &c) in self.regret.iter_mut().zip(&run.cumulative_regret) {
            s.push(c);
        }
        for (s, &o) in self.opt.iter_mut().zip(&run.optimal) {
            s.push(if o { 1.0 } else { 0.0 });
        }
        let horizon = run.cumulative_regret.len().max(1) as f64;
        for (acc, &n) in self.selections.iter_mut().zip(&run.selection_counts) {
            *acc += n as f64 / horizon;
        }
        self.runs += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<AggregateResult> {
        if self.runs == 0 {
            return Err(Error::Argument("no runs to aggregate".into()));
        }
        let r = self.runs as f64;
        Ok(AggregateResult {
            replications: self.runs,
            mean_regret: self.regret.iter().map(RunningStat::mean).collect(),
            regret_ci: self.regret.iter().map(RunningStat::ci95_half_width).collect(),
            opt_rate: self.opt.iter().map(RunningStat::mean).collect(),
            opt_ci: self.opt.iter().map(RunningStat::ci95_half_width).collect(),
            selection_frequencies: self.selections.iter().map(|s| s / r).collect(),
        })
    }
}

/// The parts of a [`RunResult`] that aggregation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub cumulative_regret: Vec<f64>,
    pub optimal: Vec<bool>,
    pub selection_counts: Vec<usize>,
    pub learner_coefficients: Vec<f64>,
}

impl From<&RunResult> for RunSummary {
    fn from(run: &RunResult) -> Self {
        Self {
            cumulative_regret: run.cumulative_regret(),
            optimal: run.optimal.clone(),
            selection_counts: run.selection_counts(),
            learner_coefficients: run.learner_regret.iter().map(|t| regret_coefficient(t)).collect(),
        }
    }
}

/// Aggregates `runs` in order.
pub fn aggregate(runs: &[RunResult]) -> Result<AggregateResult> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Argument("no runs to aggregate".into()))?;
    let mut agg = Aggregator::new(first.horizon(), first.num_learners());
    for run in runs {
        agg.add(run)?;
    }
    agg.finish()
}
