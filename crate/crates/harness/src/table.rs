//! Tabular output: one CSV row per `(label, t)`, with an optional JSON mirror.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::runner::ExperimentOutput;

pub const CSV_HEADER: &str = "experiment,label,t,mean_regret,regret_ci,opt_rate,opt_ci";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub label: String,
    pub t: usize,
    pub mean_regret: f64,
    pub regret_ci: f64,
    pub opt_rate: f64,
    pub opt_ci: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn from_output(output: &ExperimentOutput) -> Self {
        let experiment = &output.config.id;
        let rows = output
            .results
            .iter()
            .flat_map(|r| {
                let a = &r.aggregate;
                (0..a.horizon()).map(move |i| ResultRow {
                    experiment: experiment.clone(),
                    label: r.label.clone(),
                    t: i + 1,
                    mean_regret: a.mean_regret[i],
                    regret_ci: a.regret_ci[i],
                    opt_rate: a.opt_rate[i],
                    opt_ci: a.opt_ci[i],
                })
            })
            .collect();
        Self { rows }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER.split(','))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| HarnessError::Write {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            })
    }
}

#[derive(Serialize)]
struct LabelSummary<'a> {
    label: &'a str,
    final_regret: f64,
    final_regret_ci: f64,
    final_opt_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection_frequencies: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct JsonMirror<'a> {
    experiment: &'a str,
    horizon: usize,
    replications: usize,
    seed: u64,
    share_data: bool,
    /// Max over environments of the best standalone learner's regret coefficient.
    d_star_monte_carlo: Option<f64>,
    summary: Vec<LabelSummary<'a>>,
    rows: &'a [ResultRow],
}

pub fn to_json(output: &ExperimentOutput, table: &ResultTable) -> String {
    let summary = output
        .results
        .iter()
        .enumerate()
        .map(|(i, r)| LabelSummary {
            label: &r.label,
            final_regret: r.aggregate.final_regret(),
            final_regret_ci: r.aggregate.final_regret_ci(),
            final_opt_rate: r.aggregate.opt_rate.last().copied().unwrap_or(0.0),
            selection_frequencies: (i == 0).then_some(r.aggregate.selection_frequencies.as_slice()),
        })
        .collect();
    let mirror = JsonMirror {
        experiment: &output.config.id,
        horizon: output.config.horizon,
        replications: output.config.replications,
        seed: output.config.seed,
        share_data: output.config.share_data,
        d_star_monte_carlo: output.d_star_mc,
        summary,
        rows: &table.rows,
    };
    serde_json::to_string_pretty(&mirror).expect("result tables always serialize")
}

pub fn save_json(output: &ExperimentOutput, table: &ResultTable, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(output, table)).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}
