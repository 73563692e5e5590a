//! Bayesian online model selection for stochastic bandits.
//!
//! A meta-learner holds a pool of base bandit algorithms and, every round,
//! samples mean rewards from a global posterior, scores each base learner by
//! its *balancing potential* (the sampled regret of the rounds it was given)
//! and hands the round to the learner with the smallest potential.
//!
//! Modules:
//! - [`env`]: priors, sampled environments, reward generation.
//! - [`posterior`]: exact conjugate posteriors used by the meta-learner and by
//!   Thompson-sampling base learners.
//! - [`learner`]: the base-learner interface and the concrete learners.
//! - [`meta`]: the balancing meta-learner and episode drivers.
//! - [`metrics`]: regret accounting and cross-replication estimators.
//! - [`rng`]: seeded, stream-addressable random number generation.

pub mod env;
pub mod error;
pub mod learner;
pub mod meta;
pub mod metrics;
pub mod posterior;
pub mod rng;

pub use env::{ActionSet, EnvironmentInstance, HistoryRecord, PriorSpec, RewardTape};
pub use error::{Error, Result};
pub use learner::{BaseLearner, LearnerSpec};
pub use meta::{MetaConfig, MetaLearner, PotentialVector};
pub use metrics::{AggregateResult, RunResult};
pub use posterior::Posterior;
pub use rng::RngStream;

/// Index of the largest value; ties go to the lowest index.
///
/// Returns 0 for an empty slice. NaN entries never win.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v < best_value {
            best = i;
            best_value = v;
        }
    }
    best
}
