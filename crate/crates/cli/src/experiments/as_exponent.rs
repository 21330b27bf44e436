use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::recurrence::{exponent_sweep, DEFAULT_CAP, DEFAULT_MAX_CAPPED_FRACTION};

use super::{experiment_params, fmt_f64, json, Check, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::CliResult;

/// Median `log √τ_{q,q}` against `2q + 1`: the slope estimates the entropy.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct AsExponentParams {
    pub q_list: Vec<usize>,
    pub trials: usize,
    pub cap: u64,
    /// `|slope - h| / h` bound.
    pub relative_tolerance: f64,
    /// A larger capped fraction at any `q` aborts with `CapTooSmall`.
    pub max_capped_fraction: f64,
    /// Bound on the Lyapunov/dimension consistency residual.
    pub dimension_tolerance: f64,
}

impl Default for AsExponentParams {
    fn default() -> Self {
        AsExponentParams {
            q_list: vec![1, 2, 3],
            trials: 500,
            cap: DEFAULT_CAP,
            relative_tolerance: 0.15,
            max_capped_fraction: DEFAULT_MAX_CAPPED_FRACTION,
            dimension_tolerance: 1e-12,
        }
    }
}

pub struct AsExponent;

impl Experiment for AsExponent {
    fn kind(&self) -> &'static str {
        "as-exponent"
    }

    fn describe(&self) -> &'static str {
        "almost-sure return-time exponent by a sweep over cylinder depths"
    }

    experiment_params!(AsExponentParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: AsExponentParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        let system = ctx.config.suspension()?;
        let sweep = exponent_sweep(&system, &p.q_list, p.trials, p.cap, ctx.seed, p.max_capped_fraction)?;
        let mut out = Outcome::default();
        out.checks.push(Check::at_most("slope_relative_error", sweep.relative_error, p.relative_tolerance));
        out.checks.push(Check::at_most("dimension_residual", sweep.dimension_residual, p.dimension_tolerance));

        if let Some(mut w) = ctx.csv(
            "sweep.csv",
            &["q", "trials", "median_log_sqrt_tau", "q_width", "capped_fraction", "expected_scale"],
            &mut out,
        )? {
            for r in &sweep.rows {
                w.write_record([
                    r.q.to_string(),
                    r.trials.to_string(),
                    fmt_f64(r.median_log_sqrt_tau),
                    r.q_width.to_string(),
                    fmt_f64(r.capped_fraction),
                    fmt_f64(r.expected_scale),
                ])?;
            }
            w.flush()?;
        }
        out.results = json!({ "sweep": json(&sweep) });
        Ok(out)
    }
}
