//! Seeded, parallel replication of an experiment.
//!
//! Replication `j` draws its environment, its per-arm reward streams and the
//! internal randomness of every algorithm from streams derived from
//! `(seed, j)`. All algorithms of a replication face the same environment and
//! the same reward sequence per arm. Results are folded in replication order,
//! so output does not depend on the thread count.

use bms_core::env::{sample_environment, RewardTape};
use bms_core::meta::{run_standalone, MetaConfig, MetaLearner};
use bms_core::metrics::{empirical_d_star, regret_coefficient, Aggregator, RunSummary};
use bms_core::{AggregateResult, BaseLearner, EnvironmentInstance, Posterior, RngStream};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const META_LABEL: &str = "B-MS";

const ENV_TAG: u64 = 1;
const REWARD_TAG: u64 = 2;
const ALGO_TAG: u64 = 3;

/// Replications simulated between two folds into the aggregate.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

/// Aggregated output of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAggregate {
    pub label: String,
    pub aggregate: AggregateResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Meta-learner first, then pool learners, then baselines.
    pub results: Vec<LabeledAggregate>,
    /// Monte-Carlo surrogate of `d*` over the standalone pool learners.
    pub d_star_mc: Option<f64>,
}

impl ExperimentOutput {
    pub fn get(&self, label: &str) -> Option<&AggregateResult> {
        self.results.iter().find(|r| r.label == label).map(|r| &r.aggregate)
    }

    pub fn meta(&self) -> &AggregateResult {
        &self.results[0].aggregate
    }
}

/// Root stream of replication `j`.
pub fn replication_stream(seed: u64, j: usize) -> RngStream {
    RngStream::new(seed, 0).child(j as u64)
}

/// The environment replication `j` runs on.
pub fn replication_environment(config: &ExperimentConfig, j: usize) -> Result<EnvironmentInstance> {
    let mut rng = replication_stream(config.seed, j).child(ENV_TAG).rng();
    Ok(sample_environment(&config.env_prior, &mut rng)?)
}

/// Display labels, made unique by suffixing repeats.
pub fn labels(config: &ExperimentConfig) -> Vec<String> {
    let mut raw = vec![META_LABEL.to_string()];
    if config.standalone {
        raw.extend(config.learners.iter().map(|e| e.label()));
    }
    raw.extend(config.baselines.iter().map(|e| e.label()));
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    for label in raw {
        let seen = out
            .iter()
            .filter(|l| l.as_str() == label || l.starts_with(&format!("{label}#")))
            .count();
        out.push(if seen == 0 {
            label
        } else {
            format!("{label}#{}", seen + 1)
        });
    }
    out
}

fn build_pool(config: &ExperimentConfig, env: &EnvironmentInstance) -> Result<Vec<BaseLearner>> {
    config
        .learners
        .iter()
        .map(|e| Ok(e.spec.build(env.actions(), config.horizon)?))
        .collect()
}

struct Replication {
    summaries: Vec<RunSummary>,
    best_coefficient: Option<f64>,
}

fn run_replication(config: &ExperimentConfig, j: usize) -> Result<Replication> {
    let root = replication_stream(config.seed, j);
    let env = replication_environment(config, j)?;
    let rewards = root.child(REWARD_TAG);
    let algo = root.child(ALGO_TAG);
    let horizon = config.horizon;

    let posterior = Posterior::from_prior(config.meta_prior(), env.actions())?;
    let mut meta = MetaLearner::new(
        build_pool(config, &env)?,
        posterior,
        MetaConfig {
            share_data: config.share_data,
        },
    )?;
    let mut tape = RewardTape::new(rewards, env.num_actions());
    let run = meta.run_episode(&env, horizon, &mut tape, &mut algo.child(0).rng())?;
    let mut summaries = vec![RunSummary::from(&run)];

    let mut standalone: Vec<&crate::config::LearnerEntry> = Vec::new();
    if config.standalone {
        standalone.extend(&config.learners);
    }
    standalone.extend(&config.baselines);
    let mut coefficients = Vec::new();
    for (n, entry) in standalone.into_iter().enumerate() {
        let mut learner = entry.spec.build(env.actions(), horizon)?;
        let mut tape = RewardTape::new(rewards, env.num_actions());
        let mut rng = algo.child(n as u64 + 1).rng();
        let run = run_standalone(&mut learner, &env, horizon, &mut tape, &mut rng)?;
        let summary = RunSummary::from(&run);
        if config.standalone && n < config.learners.len() {
            coefficients.push(regret_coefficient(&summary.cumulative_regret));
        }
        summaries.push(summary);
    }
    let best_coefficient = empirical_d_star(&[coefficients]);
    Ok(Replication {
        summaries,
        best_coefficient,
    })
}

/// Runs every replication of `config` and aggregates per algorithm.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;

    let labels = labels(config);
    let m = config.num_learners();
    let mut aggregators: Vec<Aggregator> = labels
        .iter()
        .enumerate()
        .map(|(i, _)| Aggregator::new(config.horizon, if i == 0 { m } else { 1 }))
        .collect();
    let mut d_star: Option<f64> = None;

    let reps: Vec<usize> = (0..config.replications).collect();
    for chunk in reps.chunks(CHUNK) {
        let done: Vec<Replication> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&j| run_replication(config, j))
                .collect::<Result<_>>()
        })?;
        for rep in done {
            for (agg, summary) in aggregators.iter_mut().zip(&rep.summaries) {
                agg.add_summary(summary)?;
            }
            if let Some(c) = rep.best_coefficient {
                d_star = Some(d_star.map_or(c, |d| d.max(c)));
            }
        }
    }

    let results = labels
        .into_iter()
        .zip(aggregators)
        .map(|(label, agg)| {
            Ok(LabeledAggregate {
                label,
                aggregate: agg.finish()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput {
        config: config.clone(),
        results,
        d_star_mc: d_star,
    })
}
