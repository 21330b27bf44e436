use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::thermo::{
    check_centered, cocycle_aperiodicity, exact_sum_distribution, green_kubo_variance, green_kubo_variance_with,
    variance_estimator, VARIANCE_METHODS,
};
use zrec_core::Error;

use super::{experiment_params, fmt_f64, json, Check, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::CliResult;

/// Green–Kubo variance, exact `Var(S_n)/n` and the local limit ratio
/// `√(2πn) σ P(S_n = 0)`. Degenerate or periodic cocycles are errors.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct LltParams {
    /// Horizons for the local limit ratio.
    pub ns: Vec<usize>,
    /// Horizons for `Var(S_n)/n`.
    pub variance_ns: Vec<usize>,
    /// θ grid of the aperiodicity sweep.
    pub grid_size: usize,
    pub expected_sigma2: Option<f64>,
    pub sigma2_tolerance: f64,
    /// `|Var(S_n)/n - σ²| <= variance_tolerance + variance_slack / n`.
    pub variance_tolerance: f64,
    pub variance_slack: f64,
    /// Agreement of the other variance estimators with the fundamental matrix.
    pub method_tolerance: f64,
    /// `|ratio - 1| <= llt_band` for every `n >= llt_band_min_n`.
    pub llt_band: f64,
    pub llt_band_min_n: usize,
}

impl Default for LltParams {
    fn default() -> Self {
        LltParams {
            ns: vec![4, 100, 1000, 10_000],
            variance_ns: vec![64, 256],
            grid_size: 64,
            expected_sigma2: None,
            sigma2_tolerance: 1e-12,
            variance_tolerance: 1e-12,
            variance_slack: 0.0,
            method_tolerance: 1e-9,
            llt_band: 0.02,
            llt_band_min_n: 10_000,
        }
    }
}

pub struct Llt;

impl Experiment for Llt {
    fn kind(&self) -> &'static str {
        "llt"
    }

    fn describe(&self) -> &'static str {
        "cocycle variance by three methods and the exact local limit ratio"
    }

    experiment_params!(LltParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: LltParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        let model = ctx.config.gibbs()?;
        let phi = ctx.config.cocycle(model.shift())?;
        check_centered(&model, &phi)?;
        let mut out = Outcome::default();

        let gk = green_kubo_variance(&model, &phi)?;
        if gk.degenerate {
            return Err(Error::Degenerate { sigma2: gk.sigma2 }.into());
        }
        let aperiodicity = cocycle_aperiodicity(&model, &phi, p.grid_size)?;
        aperiodicity.require_aperiodic()?;
        let sigma2 = gk.sigma2;

        let mut methods = serde_json::Map::new();
        for name in VARIANCE_METHODS {
            let est = variance_estimator(name).expect("registered");
            let r = green_kubo_variance_with(&model, &phi, est.as_ref())?;
            if name != "fundamental-matrix" {
                out.checks.push(Check::near(format!("sigma2_{name}"), r.sigma2, sigma2, p.method_tolerance));
            }
            methods.insert(name.to_string(), json!(r.sigma2));
        }
        if let Some(x) = p.expected_sigma2 {
            out.checks.push(Check::near("sigma2", sigma2, x, p.sigma2_tolerance));
        }

        let mut variance_rows = Vec::new();
        for &n in &p.variance_ns {
            let v = exact_sum_distribution(&model, &phi, n)?.variance() / n as f64;
            out.checks.push(Check::near(
                format!("var_over_n_{n}"),
                v,
                sigma2,
                p.variance_tolerance + p.variance_slack / n as f64,
            ));
            variance_rows.push(json!({"n": n, "var_over_n": v}));
        }

        let mut llt_rows = Vec::new();
        let mut csv_rows = Vec::new();
        for &n in &p.ns {
            let p0 = exact_sum_distribution(&model, &phi, n)?.probability(0);
            let ratio = (2.0 * std::f64::consts::PI * n as f64 * sigma2).sqrt() * p0;
            if n >= p.llt_band_min_n {
                out.checks.push(Check::near(format!("llt_ratio_{n}"), ratio, 1.0, p.llt_band));
            }
            llt_rows.push(json!({"n": n, "p_zero": p0, "ratio": ratio}));
            csv_rows.push([n.to_string(), fmt_f64(p0), fmt_f64(ratio)]);
        }

        if let Some(mut w) = ctx.csv("llt.csv", &["n", "p_zero", "ratio"], &mut out)? {
            for r in &csv_rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }

        out.results = json!({
            "sigma2": sigma2,
            "sigma2_by_method": methods,
            "aperiodicity": json(&aperiodicity),
            "variance_growth": variance_rows,
            "llt": llt_rows,
        });
        Ok(out)
    }
}
