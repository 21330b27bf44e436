//! Experiment registry. Each kind owns a parameter struct (unknown keys
//! rejected, every threshold defaulted) and turns a config into results,
//! threshold checks and CSV files.

mod as_exponent;
mod dvoretzky;
mod flow_clt;
mod gibbs;
mod llt;
mod quadrature;
mod return_dist;

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliResult;

/// Inputs shared by every experiment.
pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    /// `None` runs without writing files.
    pub out_dir: Option<&'a Path>,
}

impl RunContext<'_> {
    /// Opens `name` in the output directory; records the path in `outcome`.
    pub fn csv(&self, name: &str, header: &[&str], outcome: &mut Outcome) -> CliResult<Option<csv::Writer<File>>> {
        let Some(dir) = self.out_dir else { return Ok(None) };
        let path: PathBuf = dir.join(name);
        let mut w = csv::WriterBuilder::new().from_path(&path)?;
        w.write_record(header)?;
        outcome.files.push(path.display().to_string());
        Ok(Some(w))
    }
}

/// Floats in CSV files: 17 significant digits, round-trippable.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-12`.
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, threshold: format!("<= {limit:e}"), passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, threshold: format!(">= {limit:e}"), passed: value >= limit }
    }

    /// `|value - target| <= tol`.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("{target} ± {tol:e}"),
            passed: (value - target).abs() <= tol,
        }
    }

    /// `|value/target - 1| <= rel`.
    pub fn relative(name: impl Into<String>, value: f64, target: f64, rel: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("{target} within {:.3}%", rel * 100.0),
            passed: ((value - target) / target).abs() <= rel,
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;

    fn describe(&self) -> &'static str;

    fn params_schema(&self) -> serde_json::Value;

    /// Parameters with every default filled in, after validating `params`.
    fn resolve(&self, params: &serde_json::Value) -> CliResult<serde_json::Value>;

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome>;
}

/// Implements the plumbing half of [`Experiment`] for a parameter type.
macro_rules! experiment_params {
    ($params:ty) => {
        fn params_schema(&self) -> serde_json::Value {
            serde_json::to_value(schemars::schema_for!($params)).expect("schema serializes")
        }

        fn resolve(&self, params: &serde_json::Value) -> $crate::error::CliResult<serde_json::Value> {
            let p: $params = $crate::config::parse_params(self.kind(), params)?;
            Ok(serde_json::to_value(p).expect("params serialize"))
        }
    };
}
pub(crate) use experiment_params;

pub fn registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(gibbs::Gibbs),
        Box::new(llt::Llt),
        Box::new(return_dist::ReturnDist),
        Box::new(as_exponent::AsExponent),
        Box::new(flow_clt::FlowClt),
        Box::new(dvoretzky::Dvoretzky),
        Box::new(quadrature::Quadrature),
    ]
}

pub fn experiment(kind: &str) -> Option<Box<dyn Experiment>> {
    registry().into_iter().find(|e| e.kind() == kind)
}

pub fn kinds() -> Vec<&'static str> {
    registry().iter().map(|e| e.kind()).collect()
}

/// A cylinder in configs: `{"q": 0, "q_prime": 0, "word": "b"}`.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, Serialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub q: usize,
    pub q_prime: usize,
    pub word: String,
}

impl CylinderSpec {
    pub fn build(&self, shift: &zrec_core::sft::ShiftSpace) -> CliResult<zrec_core::sft::Cylinder> {
        let word = zrec_core::sft::parse_word(&self.word, shift.alphabet_size())?;
        Ok(zrec_core::sft::Cylinder::new(shift, self.q, self.q_prime, word)?)
    }
}

/// Seed for a routine that numbers its own streams from zero, kept apart
/// from every other block of the run.
pub fn derived_seed(seed: u64, block: u32) -> u64 {
    use rand::RngCore;
    zrec_core::rng::substream(seed, zrec_core::rng::block_stream(block, 0) | (1u64 << 39)).next_u64()
}

/// Serializes report structs that are known to be plain data.
pub fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report serializes")
}
