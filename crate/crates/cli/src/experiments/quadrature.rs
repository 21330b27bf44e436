use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::stats::{semicircle_integral, verify_integral_equation, LimitLaw};

use super::{experiment_params, fmt_f64, json, Check, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::CliResult;

/// Numerical constants behind the limit law: the semicircle integral
/// `∫_{-ε}^{ε} √(ε² - α²) dα / ε² = π/2` and the integral equation solved
/// by the closed-form survival function.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureParams {
    pub eps: Vec<f64>,
    pub quad_points: usize,
    /// Bound on `|integral / ε² - π/2|`.
    pub tolerance: f64,
    pub sigmas: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub integral_quad_points: usize,
    /// Bound on the integral-equation residual.
    pub integral_tolerance: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams {
            eps: vec![0.1, 0.01],
            quad_points: 64,
            tolerance: 1e-6,
            sigmas: vec![0.5, 1.0, 2.0],
            t_grid: vec![0.5, 1.0, 2.0, 5.0],
            integral_quad_points: 512,
            integral_tolerance: 1e-8,
        }
    }
}

pub struct Quadrature;

impl Experiment for Quadrature {
    fn kind(&self) -> &'static str {
        "quadrature-check"
    }

    fn describe(&self) -> &'static str {
        "semicircle constant and the limit-law integral equation"
    }

    experiment_params!(QuadratureParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: QuadratureParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        let mut out = Outcome::default();
        let half_pi = std::f64::consts::FRAC_PI_2;

        let mut semicircle = Vec::new();
        for &eps in &p.eps {
            let ratio = semicircle_integral(eps, p.quad_points) / (eps * eps);
            out.checks.push(Check::near(format!("semicircle_{eps}"), ratio, half_pi, p.tolerance));
            semicircle.push((eps, ratio));
        }
        let mut reports = Vec::new();
        for &sigma in &p.sigmas {
            let r = verify_integral_equation(&LimitLaw::new(sigma)?, &p.t_grid, p.integral_quad_points)?;
            out.checks.push(Check::at_most(format!("integral_equation_sigma_{sigma}"), r.max_residual, p.integral_tolerance));
            reports.push(r);
        }

        if let Some(mut w) = ctx.csv("quadrature.csv", &["eps", "ratio", "error"], &mut out)? {
            for &(eps, ratio) in &semicircle {
                w.write_record([fmt_f64(eps), fmt_f64(ratio), fmt_f64(ratio - half_pi)])?;
            }
            w.flush()?;
        }
        if let Some(mut w) = ctx.csv("integral_equation.csv", &["sigma", "t", "residual"], &mut out)? {
            for r in &reports {
                for (t, res) in r.t_grid.iter().zip(&r.residuals) {
                    w.write_record([fmt_f64(r.sigma), fmt_f64(*t), fmt_f64(*res)])?;
                }
            }
            w.flush()?;
        }

        out.results = json!({
            "semicircle": semicircle.iter().map(|(e, r)| json!({"eps": e, "ratio": r})).collect::<Vec<_>>(),
            "integral_equation": reports.iter().map(json).collect::<Vec<_>>(),
        });
        Ok(out)
    }
}
