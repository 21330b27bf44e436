use rand::Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::json;
use zrec_core::rng::{block_stream, substream};
use zrec_core::sft::{word_to_string, ShiftSpace};
use zrec_core::thermo::{build_gibbs, gibbs_bound_report, Potential};

use super::{experiment_params, fmt_f64, json, Check, Experiment, Outcome, RunContext};
use crate::config::parse_params;
use crate::error::CliResult;

/// Pressure, entropy, stationarity and Gibbs-bound checks for the configured
/// model, plus the variational identity on random models.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsParams {
    /// Longest cylinder word in the Gibbs-bound report.
    pub q_max: usize,
    /// Bound on stationarity and row-sum residuals.
    pub tolerance_stationarity: f64,
    /// Bound on `|h - (P - ∫h dν)|`, for the model and the random ones.
    pub tolerance_variational: f64,
    /// Random primitive models with depth-one potentials.
    pub random_models: usize,
    pub random_alphabet_max: usize,
    pub expected_pressure: Option<f64>,
    pub expected_entropy: Option<f64>,
    /// Tolerance for the expected values and for `entropy_equals_pressure`.
    pub expected_tolerance: f64,
    /// Measure of maximal entropy: entropy must equal pressure.
    pub entropy_equals_pressure: bool,
    /// Upper bound on the empirical Gibbs constant.
    pub gibbs_k_max: Option<f64>,
    /// Require every cylinder ratio to be 1 within this tolerance.
    pub exact_ratio_tolerance: Option<f64>,
}

impl Default for GibbsParams {
    fn default() -> Self {
        GibbsParams {
            q_max: 8,
            tolerance_stationarity: 1e-12,
            tolerance_variational: 1e-10,
            random_models: 100,
            random_alphabet_max: 5,
            expected_pressure: None,
            expected_entropy: None,
            expected_tolerance: 1e-10,
            entropy_equals_pressure: false,
            gibbs_k_max: None,
            exact_ratio_tolerance: None,
        }
    }
}

/// Primitive matrix on an irreducible cycle with a loop at symbol 0.
fn random_model(rng: &mut impl Rng, max_alphabet: usize) -> CliResult<(ShiftSpace, Potential)> {
    let n = rng.random_range(2..=max_alphabet.max(2));
    let mut m = vec![vec![0u8; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for cell in row.iter_mut() {
            *cell = rng.random_bool(0.4) as u8;
        }
        row[(i + 1) % n] = 1;
    }
    m[0][0] = 1;
    let shift = ShiftSpace::new(n, &m)?;
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let pot = Potential::per_symbol(&shift, &values)?;
    Ok((shift, pot))
}

pub struct Gibbs;

impl Experiment for Gibbs {
    fn kind(&self) -> &'static str {
        "gibbs"
    }

    fn describe(&self) -> &'static str {
        "equilibrium measure: pressure, entropy, Gibbs bounds, variational identity"
    }

    experiment_params!(GibbsParams);

    fn run(&self, ctx: &RunContext) -> CliResult<Outcome> {
        let p: GibbsParams = parse_params(self.kind(), &ctx.config.experiment.params)?;
        let model = ctx.config.gibbs()?;
        let mut out = Outcome::default();
        let summary = model.summary();

        out.checks.push(Check::at_most("stationarity_residual", model.stationarity_residual(), p.tolerance_stationarity));
        out.checks.push(Check::at_most("row_sum_residual", model.row_sum_residual(), p.tolerance_stationarity));
        out.checks.push(Check::at_most("variational_residual", model.variational_residual(), p.tolerance_variational));
        if let Some(x) = p.expected_pressure {
            out.checks.push(Check::near("pressure", model.pressure(), x, p.expected_tolerance));
        }
        if let Some(x) = p.expected_entropy {
            out.checks.push(Check::near("entropy", model.entropy(), x, p.expected_tolerance));
        }
        if p.entropy_equals_pressure {
            out.checks.push(Check::at_most(
                "entropy_minus_pressure",
                (model.entropy() - model.pressure()).abs(),
                p.expected_tolerance,
            ));
        }

        let mut bounds = Vec::new();
        for q in 1..=p.q_max {
            bounds.push(gibbs_bound_report(&model, q)?);
        }
        let bound = bounds.last().cloned();
        if let Some(b) = &bound {
            out.checks.push(Check::at_most("gibbs_k_within_constant", b.empirical_k, b.gibbs_constant * (1.0 + 1e-12)));
            if let Some(k) = p.gibbs_k_max {
                out.checks.push(Check::at_most("gibbs_k", b.empirical_k, k));
            }
            if let Some(tol) = p.exact_ratio_tolerance {
                let dev = (b.min_ratio - 1.0).abs().max((b.max_ratio - 1.0).abs());
                out.checks.push(Check::at_most("gibbs_ratio_deviation", dev, tol));
            }
        }

        let mut rng = substream(ctx.seed, block_stream(0, 0));
        let mut worst: f64 = 0.0;
        for _ in 0..p.random_models {
            let (shift, pot) = random_model(&mut rng, p.random_alphabet_max)?;
            worst = worst.max(build_gibbs(&shift, &pot)?.variational_residual());
        }
        if p.random_models > 0 {
            out.checks.push(Check::at_most("random_variational_residual", worst, p.tolerance_variational));
        }

        if let Some(mut w) = ctx.csv("stationary.csv", &["state", "probability"], &mut out)? {
            for (s, pi) in model.states().iter().zip(model.stationary()) {
                w.write_record([word_to_string(s), fmt_f64(*pi)])?;
            }
            w.flush()?;
        }
        if let Some(mut w) = ctx.csv("gibbs_bounds.csv", &["q_max", "words", "min_ratio", "max_ratio", "empirical_k"], &mut out)? {
            for b in &bounds {
                w.write_record([
                    b.q_max.to_string(),
                    b.words_checked.to_string(),
                    fmt_f64(b.min_ratio),
                    fmt_f64(b.max_ratio),
                    fmt_f64(b.empirical_k),
                ])?;
            }
            w.flush()?;
        }

        out.results = json!({
            "model": json(&summary),
            "gibbs_bounds": json(&bound),
            "random_models": p.random_models,
            "random_max_variational_residual": worst,
        });
        Ok(out)
    }
}
