//! The published experiment configurations.

use bms_core::{LearnerSpec, PriorSpec};

use crate::config::{ExperimentConfig, LearnerEntry};
use crate::error::{HarnessError, Result};

pub const BUILTIN_NAMES: [&str; 8] = [
    "ucb-grid",
    "lints-grid",
    "fixed-arm-ts",
    "misspec-a",
    "misspec-b",
    "misspec-c",
    "misspec-d",
    "info-lock",
];

pub const UCB_GRID: [f64; 6] = [0.01, 0.1, 1.0, 2.0, 5.0, 10.0];
pub const LINTS_GRID: [f64; 5] = [0.0, 0.16, 2.5, 5.0, 25.0];

/// Well-specified prior mean of the two-armed prior-specification study.
pub const TRUE_PRIOR_MEAN: [f64; 2] = [0.0, 0.1];
/// Meta prior mean with the wrong optimal-arm belief.
pub const WRONG_PRIOR_MEAN: [f64; 2] = [0.0, -0.1];
pub const MISSPEC_PRIOR_STD: f64 = 0.05;

fn entries(specs: impl IntoIterator<Item = LearnerSpec>) -> Vec<LearnerEntry> {
    specs.into_iter().map(LearnerEntry::new).collect()
}

fn standard_gaussian(k: usize) -> PriorSpec {
    PriorSpec::IndependentGaussian {
        means: vec![0.0; k],
        prior_std: 1.0,
        noise_std: 1.0,
    }
}

fn base(
    id: &str,
    horizon: usize,
    replications: usize,
    env_prior: PriorSpec,
    learners: Vec<LearnerEntry>,
) -> ExperimentConfig {
    ExperimentConfig {
        id: id.to_string(),
        horizon,
        replications,
        seed: 0,
        share_data: false,
        env_prior,
        meta_prior: None,
        learners,
        standalone: true,
        baselines: Vec::new(),
        output: None,
    }
}

fn ts(prior_means: [f64; 2]) -> LearnerSpec {
    LearnerSpec::GaussianTs {
        prior_means: Some(prior_means.to_vec()),
        prior_std: MISSPEC_PRIOR_STD,
        noise_std: 1.0,
    }
}

fn misspec(id: &str, meta_mean: [f64; 2], well_specified_base: bool) -> ExperimentConfig {
    let second = if well_specified_base {
        TRUE_PRIOR_MEAN
    } else {
        [0.3, 0.0]
    };
    let pool = entries([ts([0.0, 0.0]), ts(second), ts(WRONG_PRIOR_MEAN), ts([0.2, 0.1])]);
    let gaussian = |m: [f64; 2]| PriorSpec::IndependentGaussian {
        means: m.to_vec(),
        prior_std: MISSPEC_PRIOR_STD,
        noise_std: 1.0,
    };
    let mut c = base(id, 5_000, 500, gaussian(TRUE_PRIOR_MEAN), pool);
    c.meta_prior = Some(gaussian(meta_mean));
    c
}

/// Looks up a builtin experiment by name.
pub fn builtin_experiment(name: &str) -> Result<ExperimentConfig> {
    let config = match name {
        "ucb-grid" => base(
            name,
            1_000,
            100,
            standard_gaussian(5),
            entries(UCB_GRID.iter().map(|&c| LearnerSpec::Ucb { c, delta: 0.1 })),
        ),
        "lints-grid" => base(
            name,
            15_000,
            100,
            PriorSpec::LinearGaussian {
                dim: 10,
                lambda: 1.0,
                num_actions: 1_000,
                noise_std: 1.0,
            },
            entries(LINTS_GRID.iter().map(|&c| LearnerSpec::LinTs { c, lambda: 1.0 })),
        ),
        "fixed-arm-ts" => {
            let mut c = base(
                name,
                1_000,
                1_000,
                standard_gaussian(5),
                entries((0..5).map(|arm| LearnerSpec::FixedArm { arm })),
            );
            c.baselines = entries([LearnerSpec::GaussianTs {
                prior_means: None,
                prior_std: 1.0,
                noise_std: 1.0,
            }]);
            c
        }
        "misspec-a" => misspec(name, TRUE_PRIOR_MEAN, true),
        "misspec-b" => misspec(name, WRONG_PRIOR_MEAN, true),
        "misspec-c" => misspec(name, TRUE_PRIOR_MEAN, false),
        "misspec-d" => misspec(name, WRONG_PRIOR_MEAN, false),
        "info-lock" => {
            let regular_arms = 8;
            let magic = bms_core::env::magic_arm_count(regular_arms);
            let pool = entries([
                LearnerSpec::GaussianTs {
                    prior_means: None,
                    prior_std: 1.0,
                    noise_std: 1.0,
                },
                LearnerSpec::Ils {
                    pulls_per_magic_arm: None,
                    noise_std: 1.0,
                },
                LearnerSpec::FixedArm { arm: magic },
            ]);
            base(
                name,
                1_000,
                60,
                PriorSpec::InformationLock {
                    regular_arms,
                    noise_std: 1.0,
                },
                pool,
            )
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown builtin experiment {other:?}; expected one of {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    config.validate()?;
    Ok(config)
}
