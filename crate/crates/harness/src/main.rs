use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bms_harness::table::save_json;
use bms_harness::{
    builtin_experiment, run_experiment, ExperimentConfig, HarnessError, ResultTable, RunOptions, BUILTIN_NAMES,
};
use clap::{ArgGroup, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bms", version, about = "Bayesian online model selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its result table.
    #[command(group(ArgGroup::new("source").required(true).args(["config", "builtin"])))]
    Run {
        /// Experiment configuration file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Name of a builtin experiment.
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, action = clap::ArgAction::Set)]
        share_data: Option<bool>,
        /// Also write a JSON mirror next to the CSV (or print JSON when writing to stdout).
        #[arg(long)]
        json: bool,
        /// Override the number of replications.
        #[arg(long)]
        replications: Option<usize>,
        /// Override the horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// List the builtin experiments.
    List,
    /// Print a builtin experiment as a configuration file.
    Show { name: String },
}

fn json_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: Option<PathBuf>,
    builtin: Option<String>,
    seed: Option<u64>,
    threads: usize,
    out: Option<PathBuf>,
    share_data: Option<bool>,
    json: bool,
    replications: Option<usize>,
    horizon: Option<usize>,
) -> Result<(), HarnessError> {
    let mut cfg = match (config, builtin) {
        (Some(path), _) => ExperimentConfig::load(&path)?,
        (None, Some(name)) => builtin_experiment(&name)?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(share) = share_data {
        cfg.share_data = share;
    }
    if let Some(r) = replications {
        cfg.replications = r;
    }
    if let Some(t) = horizon {
        cfg.horizon = t;
    }
    cfg.validate()?;

    let output = run_experiment(&cfg, RunOptions { threads })?;
    let table = ResultTable::from_output(&output);
    for r in &output.results {
        eprintln!(
            "{:>20}  regret(T) = {:10.3} ± {:8.3}   opt_rate(T) = {:.3}",
            r.label,
            r.aggregate.final_regret(),
            r.aggregate.final_regret_ci(),
            r.aggregate.opt_rate.last().copied().unwrap_or(0.0)
        );
    }
    if let Some(d) = output.d_star_mc {
        eprintln!("d* (Monte-Carlo surrogate over standalone learners) = {d:.3}");
    }

    match out.or_else(|| cfg.output.clone()) {
        Some(path) => {
            table.save_csv(&path)?;
            if json {
                save_json(&output, &table, &json_path(&path))?;
            }
        }
        None if json => println!("{}", bms_harness::table::to_json(&output, &table)),
        None => print!("{}", table.to_csv_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            builtin,
            seed,
            threads,
            out,
            share_data,
            json,
            replications,
            horizon,
        } => run(
            config,
            builtin,
            seed,
            threads,
            out,
            share_data,
            json,
            replications,
            horizon,
        ),
        Command::List => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Show { name } => builtin_experiment(&name).map(|c| print!("{}", c.to_toml())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
