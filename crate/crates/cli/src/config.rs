//! Experiment configuration: JSON, unknown keys rejected, schema published
//! by `zrec schema`.

use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use zrec_core::sft::ShiftSpace;
use zrec_core::suspension::SuspensionSystem;
use zrec_core::thermo::{build_gibbs, Cocycle, FunctionSpec, GibbsModel, Potential};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form label copied into the report.
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    /// Roof, expansion profiles and cocycle; required by every experiment
    /// that needs a cocycle or a flow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub seed: u64,
    /// Directory for CSV files and `report.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub alphabet: usize,
    /// Row-major 0/1 matrix.
    pub transitions: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub shift: ShiftSpec,
    pub potential: FunctionSpec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub roof: FunctionSpec<f64>,
    /// `log a^u`, positive.
    pub expansion_u: FunctionSpec<f64>,
    /// `log a^s`, negative.
    pub expansion_s: FunctionSpec<f64>,
    pub cocycle: FunctionSpec<i64>,
    /// Replace the cocycle by `φ(w) - φ(reversed w)`.
    #[serde(default)]
    pub symmetrize: bool,
}

/// Experiment selector; `params` is validated by the experiment named by
/// `kind`, and missing parameters take their documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn shift(&self) -> CliResult<ShiftSpace> {
        Ok(ShiftSpace::new(self.model.shift.alphabet, &self.model.shift.transitions)?)
    }

    pub fn potential(&self, shift: &ShiftSpace) -> CliResult<Potential> {
        Ok(Potential::from_spec(shift, &self.model.potential)?)
    }

    pub fn gibbs(&self) -> CliResult<GibbsModel> {
        let shift = self.shift()?;
        Ok(build_gibbs(&shift, &self.potential(&shift)?)?)
    }

    fn system_spec(&self) -> CliResult<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("experiment '{}' needs a \"system\" section", self.experiment.kind)))
    }

    pub fn cocycle(&self, shift: &ShiftSpace) -> CliResult<Cocycle> {
        let spec = self.system_spec()?;
        let phi = Cocycle::from_spec(shift, &spec.cocycle)?;
        Ok(if spec.symmetrize { phi.symmetrized(shift)? } else { phi })
    }

    pub fn suspension(&self) -> CliResult<SuspensionSystem> {
        let spec = self.system_spec()?;
        let shift = self.shift()?;
        Ok(SuspensionSystem::new(
            &shift,
            &self.potential(&shift)?,
            Potential::from_spec(&shift, &spec.roof)?,
            Potential::from_spec(&shift, &spec.expansion_u)?,
            Potential::from_spec(&shift, &spec.expansion_s)?,
            self.cocycle(&shift)?,
        )?)
    }
}

/// Parses `params` into an experiment's parameter struct.
pub fn parse_params<T: for<'de> Deserialize<'de>>(kind: &str, params: &serde_json::Value) -> CliResult<T> {
    serde_json::from_value(params.clone()).map_err(|e| CliError::Config(format!("{kind} params: {e}")))
}

/// JSON schema of the configuration, with one `params` schema per
/// registered experiment kind.
pub fn config_schema() -> serde_json::Value {
    let mut root = serde_json::to_value(schemars::schema_for!(ExperimentConfig)).expect("schema serializes");
    let kinds: serde_json::Map<String, serde_json::Value> = crate::experiments::registry()
        .iter()
        .map(|e| (e.kind().to_string(), e.params_schema()))
        .collect();
    root.as_object_mut()
        .expect("object schema")
        .insert("x-experiment-params".into(), serde_json::Value::Object(kinds));
    root
}
