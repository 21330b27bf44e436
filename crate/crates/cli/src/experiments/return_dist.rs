use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::recurrence::{return_time_batch_with, ReturnBatch, StartLaw};
use zrec_core::rng::block_stream;
use zrec_core::stats::{ks_report, EmpiricalDistribution, LimitLaw};
use zrec_core::thermo::green_kubo_variance;
use zrec_core::Error;

use super::{experiment_params, fmt_f64, json, Check, CylinderSpec, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::{CliError, CliResult};

/// Normalized return times `ν(C_{-q,q'}(ω)) √w` for starts conditioned on a
/// cylinder, compared with the `σ_φ E/|N|` law by a censored KS distance.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ReturnDistParams {
    /// Starting points are drawn from `ν(· | condition)`.
    pub condition: CylinderSpec,
    /// Scanned windows `[q, q']`, one batch each.
    pub windows: Vec<[usize; 2]>,
    pub trials: usize,
    pub cap: u64,
    /// KS bound for the first window.
    pub ks_threshold: f64,
    /// Later windows may exceed the first window's KS by at most this.
    pub trend_margin: f64,
}

impl Default for ReturnDistParams {
    fn default() -> Self {
        ReturnDistParams {
            condition: CylinderSpec { q: 0, q_prime: 0, word: "b".into() },
            windows: vec![[0, 0], [1, 1]],
            trials: 10_000,
            cap: 10_000_000,
            ks_threshold: 0.05,
            trend_margin: 0.02,
        }
    }
}

/// `ν(C) √(roof_time / ∫r dν)`: the same statistic read off flow time,
/// censored where a capped trial could land.
fn flow_normalized(batch: &ReturnBatch, mean_roof: f64, roof_min: f64) -> CliResult<EmpiricalDistribution> {
    let values = batch.samples.iter().map(|s| s.window_measure * (s.roof_time / mean_roof).sqrt()).collect();
    let bound = batch
        .samples
        .iter()
        .map(|s| s.window_measure * (batch.cap as f64 * roof_min / mean_roof).sqrt())
        .fold(f64::INFINITY, f64::min);
    Ok(EmpiricalDistribution::new(values, Some(bound))?)
}

pub struct ReturnDist;

impl Experiment for ReturnDist {
    fn kind(&self) -> &'static str {
        "return-dist"
    }

    fn describe(&self) -> &'static str {
        "distribution of normalized cylinder return times against the E/|N| law"
    }

    experiment_params!(ReturnDistParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: ReturnDistParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        if p.windows.is_empty() {
            return Err(CliError::Config("return-dist needs at least one window".into()));
        }
        let system = ctx.config.suspension()?;
        let model = system.model();
        let cyl = p.condition.build(model.shift())?;
        let gk = green_kubo_variance(model, system.cocycle())?;
        if gk.degenerate {
            return Err(Error::Degenerate { sigma2: gk.sigma2 }.into());
        }
        let sigma_phi = gk.sigma2.sqrt();
        let law = LimitLaw::new(sigma_phi)?;
        let flow_sigma2 = system.flow_variance()?;
        let mean_roof = system.mean_roof();
        let mut out = Outcome::default();

        let start = StartLaw::Conditioned(cyl.clone());
        let mut rows = Vec::new();
        let mut first_ks = None;
        for (i, &[q, qp]) in p.windows.iter().enumerate() {
            let batch =
                return_time_batch_with(&system, &start, q, qp, p.trials, p.cap, ctx.seed, block_stream(i as u32, 0))?;
            let ks = ks_report(&batch.normalized()?, &law, p.ks_threshold)?;
            let ks_flow = ks_report(&flow_normalized(&batch, mean_roof, system.roof_min())?, &law, p.ks_threshold)?;
            match first_ks {
                None => {
                    out.checks.push(Check::at_most(format!("ks_{q}_{qp}"), ks.ks, p.ks_threshold));
                    first_ks = Some(ks.ks);
                }
                Some(k0) => out.checks.push(Check::at_most(format!("ks_{q}_{qp}_trend"), ks.ks, k0 + p.trend_margin)),
            }
            let name = format!("returns_{q}_{qp}.csv");
            if let Some(mut w) =
                ctx.csv(&name, &["trial", "w", "roof_time", "zero_count", "capped", "window_measure"], &mut out)?
            {
                for (t, s) in batch.samples.iter().enumerate() {
                    w.write_record([
                        t.to_string(),
                        s.w.to_string(),
                        fmt_f64(s.roof_time),
                        s.zero_count.to_string(),
                        (s.capped as u8).to_string(),
                        fmt_f64(s.window_measure),
                    ])?;
                }
                w.flush()?;
            }
            let median = batch.normalized()?.median();
            rows.push(json!({
                "q": q,
                "q_prime": qp,
                "trials": p.trials,
                "cap": p.cap,
                "capped_fraction": batch.capped_fraction,
                "ks": json(&ks),
                "ks_flow": json(&ks_flow),
                "median_normalized": median,
                "law_median": law.median(),
            }));
        }

        out.results = json!({
            "condition": cyl.to_string(),
            "condition_measure": model.cylinder_measure(&cyl),
            "sigma_phi": sigma_phi,
            "sigma2_flow": flow_sigma2,
            "mean_roof": mean_roof,
            // σ_flow √(∫r dν) recovers σ_φ: the flow-time normalization.
            "sigma_flow_times_sqrt_mean_roof": (flow_sigma2 * mean_roof).sqrt(),
            "windows": rows,
        });
        Ok(out)
    }
}
