use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::recurrence::{flow_return_ratio, return_time_batch_with, StartLaw};
use zrec_core::rng::block_stream;
use zrec_core::stats::{ks_statistic, mean_and_se, normal_cdf, sample_variance};
use zrec_core::suspension::LyapunovReport;

use super::{derived_seed, experiment_params, fmt_f64, json, Check, CylinderSpec, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::CliResult;

/// Flow-level checks: the CLT for `φ_t`, flow time of cylinder returns,
/// Birkhoff exponents, and how everything scales with the roof.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct FlowCltParams {
    /// Flow time of each CLT sample.
    pub t: f64,
    pub trials: usize,
    /// Relative bound on `|Var(φ_t/√t) - σ²_flow| / σ²_flow`.
    pub variance_tolerance: f64,
    /// KS bound of `φ_t/√t` against `N(0, σ²_flow)`.
    pub ks_normal_threshold: f64,
    pub ratio: RatioParams,
    /// Birkhoff estimate of the flow exponents; `null` skips it.
    pub lyapunov: Option<LyapunovParams>,
    /// The roof is multiplied by this and the flow quantities compared.
    pub roof_scale: f64,
    /// Bound on the roof-covariance residuals (exact for powers of two).
    pub covariance_tolerance: f64,
}

/// Returns to `condition` scanned on the base; `roof_time / (w ∫r dν)` is
/// averaged over trials with `w >= w_threshold`.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RatioParams {
    pub condition: CylinderSpec,
    pub trials: usize,
    pub cap: u64,
    pub w_threshold: u64,
    /// Bound on the mean of `|ratio - 1|`.
    pub tolerance: f64,
    /// Fewer qualifying trials than this fails the check.
    pub min_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    pub horizon: f64,
    pub trials: usize,
    /// Relative bound against the closed-form exponents.
    pub tolerance: f64,
}

impl Default for FlowCltParams {
    fn default() -> Self {
        FlowCltParams {
            t: 1e4,
            trials: 1000,
            variance_tolerance: 0.1,
            ks_normal_threshold: 0.05,
            ratio: RatioParams::default(),
            lyapunov: Some(LyapunovParams::default()),
            roof_scale: 2.0,
            covariance_tolerance: 0.0,
        }
    }
}

impl Default for RatioParams {
    fn default() -> Self {
        RatioParams {
            condition: CylinderSpec { q: 0, q_prime: 0, word: "b".into() },
            trials: 20_000,
            cap: 1_000_000,
            w_threshold: 10_000,
            tolerance: 0.02,
            min_count: 100,
        }
    }
}

impl Default for LyapunovParams {
    fn default() -> Self {
        LyapunovParams { horizon: 1e4, trials: 20, tolerance: 0.05 }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub struct FlowClt;

impl Experiment for FlowClt {
    fn kind(&self) -> &'static str {
        "flow-clt"
    }

    fn describe(&self) -> &'static str {
        "flow CLT, flow time of returns, flow exponents and roof covariance"
    }

    experiment_params!(FlowCltParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: FlowCltParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        let system = ctx.config.suspension()?;
        let sigma2_flow = system.flow_variance()?;
        let exact = system.lyapunov_exact();
        let mut out = Outcome::default();

        // CLT: trial i uses stream i of the run seed.
        let samples = system.clt_flow_samples(p.t, p.trials, ctx.seed)?;
        let var = sample_variance(&samples);
        let (mean, mean_se) = mean_and_se(&samples);
        let sd = sigma2_flow.sqrt();
        let ks = ks_statistic(&samples, |x| normal_cdf(x / sd))?;
        out.checks.push(Check::relative("clt_variance", var, sigma2_flow, p.variance_tolerance));
        out.checks.push(Check::at_most("clt_ks_normal", ks, p.ks_normal_threshold));
        if let Some(mut w) = ctx.csv("flow_clt.csv", &["trial", "phi_t_over_sqrt_t"], &mut out)? {
            for (i, x) in samples.iter().enumerate() {
                w.write_record([i.to_string(), fmt_f64(*x)])?;
            }
            w.flush()?;
        }

        // Flow time of returns.
        let rp = &p.ratio;
        let cyl = rp.condition.build(system.model().shift())?;
        let batch = return_time_batch_with(
            &system,
            &StartLaw::Conditioned(cyl.clone()),
            cyl.left(),
            cyl.right(),
            rp.trials,
            rp.cap,
            ctx.seed,
            block_stream(1, 0),
        )?;
        let ratio = flow_return_ratio(&system, &batch.samples, rp.w_threshold)?;
        out.checks.push(Check::at_least("ratio_count", ratio.count as f64, rp.min_count as f64));
        out.checks.push(Check::at_most("ratio_mean_abs_deviation", ratio.mean_abs_deviation, rp.tolerance));
        if let Some(mut w) = ctx.csv("flow_returns.csv", &["trial", "w", "roof_time", "capped"], &mut out)? {
            for (i, s) in batch.samples.iter().enumerate() {
                w.write_record([i.to_string(), s.w.to_string(), fmt_f64(s.roof_time), (s.capped as u8).to_string()])?;
            }
            w.flush()?;
        }

        let birkhoff = match &p.lyapunov {
            Some(lp) => {
                let b = system.lyapunov_birkhoff(lp.horizon, lp.trials, derived_seed(ctx.seed, 2))?;
                out.checks.push(Check::relative("birkhoff_lambda_u", b.report.lambda_u, exact.lambda_u, lp.tolerance));
                out.checks.push(Check::relative("birkhoff_lambda_s", b.report.lambda_s, exact.lambda_s, lp.tolerance));
                Some(b)
            }
            None => None,
        };

        // Roof covariance: dimension invariant, the rest scale by 1/c.
        let c = p.roof_scale;
        let scaled_system = system.with_roof_scaled(c)?;
        let scaled: LyapunovReport = scaled_system.lyapunov_exact();
        let scaled_sigma2 = scaled_system.flow_variance()?;
        let tol = p.covariance_tolerance;
        out.checks.push(Check::at_most("scaled_dimension", rel(scaled.dimension, exact.dimension), tol));
        out.checks.push(Check::at_most("scaled_entropy_flow", rel(scaled.entropy_flow * c, exact.entropy_flow), tol));
        out.checks.push(Check::at_most("scaled_lambda_u", rel(scaled.lambda_u * c, exact.lambda_u), tol));
        out.checks.push(Check::at_most("scaled_lambda_s", rel(scaled.lambda_s * c, exact.lambda_s), tol));
        out.checks.push(Check::at_most("scaled_sigma2_flow", rel(scaled_sigma2 * c, sigma2_flow), tol));

        out.results = json!({
            "sigma2_flow": sigma2_flow,
            "clt": {
                "t": p.t,
                "trials": p.trials,
                "sample_variance": var,
                "sample_mean": mean,
                "sample_mean_se": mean_se,
                "ks_normal": ks,
            },
            "return_ratio": json(&ratio),
            "return_ratio_capped_fraction": batch.capped_fraction,
            "lyapunov_exact": json(&exact),
            "lyapunov_birkhoff": json(&birkhoff),
            "roof_scaled": {
                "c": c,
                "lyapunov": json(&scaled),
                "sigma2_flow": scaled_sigma2,
            },
        });
        Ok(out)
    }
}
