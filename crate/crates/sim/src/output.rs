//! CSV tables and the JSON manifest.
//!
//! Column names and order are fixed by the row types in
//! [`crate::experiments`]; floats are written in shortest round-trip form.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::experiments::{ExperimentOutput, Tables};

pub const MANIFEST: &str = "manifest.json";
/// Resolved configuration, loadable again with `--config`.
pub const CONFIG_ECHO: &str = "config.toml";

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

/// `(file name, contents)` of every CSV the experiment produces.
pub fn csv_files(out: &ExperimentOutput) -> Result<Vec<(&'static str, Vec<u8>)>> {
    const REGRET: &[&str] = &[
        "slot",
        "policy",
        "mean_regret",
        "stderr",
        "runs",
        "time_avg_regret",
    ];
    const ARMS: &[&str] = &["arm", "states", "mean_reward", "mean_sum_rate", "best"];
    const BY_STATES: &[&str] = &[
        "states",
        "arms",
        "policy",
        "mean_regret",
        "stderr",
        "runs",
        "time_avg_regret",
    ];
    const SUMRATE: &[&str] = &["power_db", "policy", "mean_sum_rate", "stderr", "runs"];
    const CDF: &[&str] = &["policy", "total_chordal", "cdf"];
    const DECILES: &[&str] = &["policy", "quantile", "total_chordal", "stderr", "runs"];
    const MODES: &[&str] = &[
        "power_db",
        "policy",
        "mode",
        "mean_sum_rate",
        "stderr",
        "runs",
    ];

    Ok(match &out.tables {
        Tables::RegretVsN { regret, arms } => vec![
            ("regret_vs_n.csv", to_csv(regret, REGRET)?),
            ("arm_means.csv", to_csv(arms, ARMS)?),
        ],
        Tables::RegretVsP(rows) => vec![("regret_vs_P.csv", to_csv(rows, BY_STATES)?)],
        Tables::SumrateVsPower(rows) => vec![("sumrate_vs_power.csv", to_csv(rows, SUMRATE)?)],
        Tables::ChordalCdf { cdf, deciles } => vec![
            ("chordal_cdf.csv", to_csv(cdf, CDF)?),
            ("chordal_deciles.csv", to_csv(deciles, DECILES)?),
        ],
        Tables::DistributedVsCombinational(rows) => {
            vec![("distributed_vs_combinational.csv", to_csv(rows, MODES)?)]
        }
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'static str,
    pub version: &'static str,
    pub seed: u64,
    /// Joint arm count for each `P` visited.
    pub arms: &'a [usize],
    pub resamples: u64,
    pub degenerate_entries: usize,
    pub wall_time_s: f64,
    pub files: Vec<&'static str>,
    pub config: &'a ExperimentSpec,
}

/// Writes the CSVs and the manifest into `dir`; returns the written paths.
pub fn write_outputs(
    dir: &Path,
    spec: &ExperimentSpec,
    out: &ExperimentOutput,
    wall_time_s: f64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = csv_files(out)?;
    let mut written = Vec::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    let manifest = Manifest {
        experiment: spec.experiment.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
        arms: &out.arms,
        resamples: out.resamples,
        degenerate_entries: out.degenerate_entries,
        wall_time_s,
        files: files.iter().map(|f| f.0).collect(),
        config: spec,
    };
    let path = dir.join(CONFIG_ECHO);
    std::fs::write(&path, spec.to_toml()).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    let path = dir.join(MANIFEST);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}
