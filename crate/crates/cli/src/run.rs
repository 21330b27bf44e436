use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use zrec_core::rng::RNG_ALGORITHM;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::{experiment, Check, RunContext};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub rng: String,
    pub seed: u64,
    /// The config as run: seed override applied, every parameter resolved.
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Validates `config`, runs its experiment and, when `out_dir` is given,
/// writes the CSV files and `report.json` there.
pub fn run(config: &ExperimentConfig, seed: Option<u64>, out_dir: Option<&Path>) -> CliResult<RunReport> {
    let started = Instant::now();
    let kind = &config.experiment.kind;
    let exp = experiment(kind).ok_or_else(|| CliError::UnknownKind(kind.clone()))?;
    let mut config = config.clone();
    config.experiment.params = exp.resolve(&config.experiment.params)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let outcome = exp.run(&RunContext { config: &config, seed: config.seed, out_dir })?;
    let mut report = RunReport {
        version: env!("ZREC_VERSION").to_string(),
        rng: RNG_ALGORITHM.to_string(),
        seed: config.seed,
        passed: outcome.checks.iter().all(|c| c.passed),
        config,
        wall_time_seconds: 0.0,
        results: outcome.results,
        checks: outcome.checks,
        files: outcome.files,
    };
    report.wall_time_seconds = started.elapsed().as_secs_f64();
    if let Some(dir) = out_dir {
        let path = dir.join("report.json");
        report.files.push(path.display().to_string());
        std::fs::write(&path, report.to_json())?;
    }
    Ok(report)
}
