//! The built-in model zoo.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde_json::json;
use zrec_core::thermo::FunctionSpec;

use crate::config::{ExperimentConfig, ExperimentSpec, ModelSpec, ShiftSpec, SystemSpec};
use crate::error::{CliError, CliResult};

pub const PRESETS: [&str; 5] = ["bernoulli2", "trinomial3", "golden-mme", "golden-coboundary", "varroof-trinomial"];

fn spec<V>(depth: usize, entries: &[(&str, V)]) -> FunctionSpec<V>
where
    V: Copy,
{
    FunctionSpec { depth, values: entries.iter().map(|(w, v)| (w.to_string(), *v)).collect::<BTreeMap<_, _>>() }
}

fn full(n: usize) -> ShiftSpec {
    ShiftSpec { alphabet: n, transitions: vec![vec![1; n]; n] }
}

fn golden() -> ShiftSpec {
    ShiftSpec { alphabet: 2, transitions: vec![vec![1, 1], vec![1, 0]] }
}

fn trinomial_system(roof: [f64; 3]) -> SystemSpec {
    SystemSpec {
        roof: spec(1, &[("a", roof[0]), ("b", roof[1]), ("c", roof[2])]),
        expansion_u: spec(1, &[("a", LN_2), ("b", LN_2), ("c", LN_2)]),
        expansion_s: spec(1, &[("a", -LN_2), ("b", -LN_2), ("c", -LN_2)]),
        cocycle: spec(1, &[("a", -1), ("b", 0), ("c", 1)]),
        symmetrize: false,
    }
}

/// Closed-form targets a preset knows about, as experiment parameters.
fn known_values(name: &str, kind: &str) -> serde_json::Value {
    let golden_ratio = (1.0 + 5f64.sqrt()) / 2.0;
    match (name, kind) {
        ("bernoulli2", "gibbs") => json!({
            "expected_pressure": 0.0,
            "expected_entropy": LN_2,
            "expected_tolerance": 1e-12,
            "exact_ratio_tolerance": 1e-12,
        }),
        ("trinomial3" | "varroof-trinomial", "gibbs") => json!({
            "expected_pressure": 3f64.ln(),
            "expected_entropy": 3f64.ln(),
            "expected_tolerance": 1e-12,
            "exact_ratio_tolerance": 1e-12,
        }),
        ("golden-mme" | "golden-coboundary", "gibbs") => json!({
            "expected_pressure": golden_ratio.ln(),
            "expected_tolerance": 1e-10,
            "entropy_equals_pressure": true,
            "gibbs_k_max": 2.62,
        }),
        ("trinomial3" | "varroof-trinomial", "llt") => json!({ "expected_sigma2": 2.0 / 3.0 }),
        _ => json!({}),
    }
}

/// Canonical config for `name`; `kind` overrides the preset's default
/// experiment (with default parameters).
pub fn preset(name: &str, kind: Option<&str>) -> CliResult<ExperimentConfig> {
    let (model, system, default_kind) = match name {
        // Fair coin with the ±1 walk: periodic, the parity counterexample.
        "bernoulli2" => (
            ModelSpec { shift: full(2), potential: spec(1, &[("a", -LN_2), ("b", -LN_2)]) },
            SystemSpec {
                roof: spec(1, &[("a", 1.0), ("b", 1.0)]),
                expansion_u: spec(1, &[("a", LN_2), ("b", LN_2)]),
                expansion_s: spec(1, &[("a", -LN_2), ("b", -LN_2)]),
                cocycle: spec(1, &[("a", 1), ("b", -1)]),
                symmetrize: false,
            },
            "gibbs",
        ),
        // Uniform full 3-shift with steps -1, 0, +1: σ² = 2/3, aperiodic.
        "trinomial3" => (
            ModelSpec { shift: full(3), potential: spec(1, &[("a", 0.0), ("b", 0.0), ("c", 0.0)]) },
            trinomial_system([1.0, 1.0, 1.0]),
            "llt",
        ),
        // Measure of maximal entropy on the golden-mean shift.
        "golden-mme" => (
            ModelSpec { shift: golden(), potential: spec(1, &[("a", 0.0), ("b", 0.0)]) },
            SystemSpec {
                roof: spec(1, &[("a", 1.0), ("b", 1.0)]),
                expansion_u: spec(1, &[("a", LN_2), ("b", LN_2)]),
                expansion_s: spec(1, &[("a", -LN_2), ("b", -LN_2)]),
                cocycle: spec(2, &[("aa", 0), ("ab", 1), ("ba", 0)]),
                symmetrize: true,
            },
            "gibbs",
        ),
        // Symmetrized depth-2 cocycle ab -> +1, ba -> -1: the coboundary of
        // the indicator of b, so σ² = 0.
        "golden-coboundary" => (
            ModelSpec { shift: golden(), potential: spec(1, &[("a", 0.0), ("b", 0.0)]) },
            SystemSpec {
                roof: spec(1, &[("a", 1.0), ("b", 1.0)]),
                expansion_u: spec(1, &[("a", LN_2), ("b", LN_2)]),
                expansion_s: spec(1, &[("a", -LN_2), ("b", -LN_2)]),
                cocycle: spec(2, &[("aa", 0), ("ab", 1), ("ba", 0)]),
                symmetrize: true,
            },
            "llt",
        ),
        // Trinomial walk under a roof that varies with the symbol.
        "varroof-trinomial" => (
            ModelSpec { shift: full(3), potential: spec(1, &[("a", 0.0), ("b", 0.0), ("c", 0.0)]) },
            trinomial_system([1.0, 2.0, 1.5]),
            "flow-clt",
        ),
        other => return Err(CliError::UnknownPreset(other.to_string())),
    };
    let kind = kind.unwrap_or(default_kind);
    let exp = crate::experiments::experiment(kind).ok_or_else(|| CliError::UnknownKind(kind.to_string()))?;
    let params = exp.resolve(&known_values(name, kind))?;
    Ok(ExperimentConfig {
        name: name.to_string(),
        model,
        system: Some(system),
        experiment: ExperimentSpec { kind: kind.to_string(), params },
        seed: 1,
        output: None,
    })
}
