use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::recurrence::{dvoretzky_check, DvoretzkyResidual};
use zrec_core::sft::{Cylinder, DEFAULT_CYLINDER_CAP};

use super::{experiment_params, fmt_f64, Check, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::CliResult;

/// Exact last-passage decomposition for every pair of cylinders `D, A`
/// whose words have length at most `max_length`, at every `n <= n_max`.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct DvoretzkyParams {
    /// Longest cylinder word `q + q' + 1`; all splits are included.
    pub max_length: usize,
    pub n_max: usize,
    /// Bound on `|lhs - rhs - no_visit| / lhs`.
    pub tolerance: f64,
}

impl Default for DvoretzkyParams {
    fn default() -> Self {
        DvoretzkyParams { max_length: 2, n_max: 12, tolerance: 1e-12 }
    }
}

pub struct Dvoretzky;

impl Experiment for Dvoretzky {
    fn kind(&self) -> &'static str {
        "dvoretzky"
    }

    fn describe(&self) -> &'static str {
        "last-passage decomposition checked exactly over cylinder pairs"
    }

    experiment_params!(DvoretzkyParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: DvoretzkyParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        let model = ctx.config.gibbs()?;
        let phi = ctx.config.cocycle(model.shift())?;
        let mut cylinders: Vec<Cylinder> = Vec::new();
        for len in 1..=p.max_length {
            for q in 0..len {
                cylinders.extend(model.shift().enumerate_cylinders(q, len - 1 - q, DEFAULT_CYLINDER_CAP)?);
            }
        }
        let jobs: Vec<(usize, usize, usize)> = (0..cylinders.len())
            .flat_map(|i| (0..cylinders.len()).flat_map(move |j| (0..=p.n_max).map(move |n| (i, j, n))))
            .collect();
        let rows: Vec<DvoretzkyResidual> = jobs
            .par_iter()
            .map(|&(i, j, n)| dvoretzky_check(&model, &phi, &cylinders[i], &cylinders[j], n))
            .collect::<zrec_core::Result<_>>()?;

        let mut out = Outcome::default();
        let worst = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
        out.checks.push(Check::at_most("max_relative_residual", worst, p.tolerance));
        if let Some(mut w) =
            ctx.csv("dvoretzky.csv", &["d", "a", "n", "lhs", "rhs", "no_visit", "residual", "relative"], &mut out)?
        {
            for (&(i, j, _), r) in jobs.iter().zip(&rows) {
                w.write_record([
                    cylinders[i].to_string(),
                    cylinders[j].to_string(),
                    r.n.to_string(),
                    fmt_f64(r.lhs),
                    fmt_f64(r.rhs),
                    fmt_f64(r.no_visit),
                    fmt_f64(r.residual),
                    fmt_f64(r.relative),
                ])?;
            }
            w.flush()?;
        }
        out.results = json!({
            "cylinders": cylinders.len(),
            "pairs": cylinders.len() * cylinders.len(),
            "checks": rows.len(),
            "max_relative_residual": worst,
            "max_absolute_residual": rows.iter().map(|r| r.residual).fold(0.0, f64::max),
            "with_no_visit_mass": rows.iter().filter(|r| r.no_visit > 0.0).count(),
        });
        Ok(out)
    }
}
