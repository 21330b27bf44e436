//! Acceptance suite: one PASS/FAIL line per criterion, every criterion at its
//! stated tolerance. Runs as a plain binary so the lines always show.
//!
//! Criterion 6's section-level KS bound cannot be met by any correct
//! implementation (see `KNOWN_UNATTAINABLE`); it is evaluated and reported
//! as FAIL, but only fails the process under `ZREC_ACCEPTANCE_STRICT=1`.

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use zrec::{presets::preset, run, RunReport};
use zrec_core::sft::ShiftSpace;
use zrec_core::stats::LimitLaw;
use zrec_core::thermo::{build_gibbs, green_kubo_variance, Cocycle, FunctionSpec};

const KNOWN_UNATTAINABLE: &[&str] = &["6"];

struct Clause {
    ok: bool,
    text: String,
}

fn clause(ok: bool, text: impl Into<String>) -> Clause {
    Clause { ok, text: text.into() }
}

type Criterion = fn(&Path) -> Result<Vec<Clause>, String>;

fn merge(target: &mut Value, patch: Value) {
    if let (Value::Object(t), Value::Object(p)) = (target, patch) {
        for (k, v) in p {
            t.insert(k, v);
        }
    }
}

fn run_preset(name: &str, kind: &str, params: Value, out: &Path) -> Result<RunReport, String> {
    let mut cfg = preset(name, Some(kind)).map_err(|e| e.to_string())?;
    merge(&mut cfg.experiment.params, params);
    let dir = out.join(format!("{name}-{kind}"));
    run(&cfg, None, Some(&dir)).map_err(|e| format!("{}: {e}", e.code()))
}

fn check(report: &RunReport, name: &str) -> Result<Clause, String> {
    let c = report.check(name).ok_or_else(|| format!("missing check {name}"))?;
    Ok(clause(c.passed, format!("{name} = {:.6e} ({})", c.value, c.threshold)))
}

fn num(v: &Value, path: &[&str]) -> Result<f64, String> {
    let mut cur = v;
    for p in path {
        cur = cur.get(*p).ok_or_else(|| format!("missing {}", path.join(".")))?;
    }
    cur.as_f64().ok_or_else(|| format!("{} is not a number", path.join(".")))
}

fn runtime(label: &str, report: &RunReport, budget: f64) -> Clause {
    let t = report.wall_time_seconds;
    clause(t < budget, format!("{label} runtime {t:.2}s (< {budget}s)"))
}

fn c1_thermodynamics(out: &Path) -> Result<Vec<Clause>, String> {
    let b = run_preset("bernoulli2", "gibbs", json!({}), out)?;
    let g = run_preset("golden-mme", "gibbs", json!({}), out)?;
    let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let (bp, be) = (num(&b.results, &["model", "pressure"])?, num(&b.results, &["model", "entropy"])?);
    let (gp, ge) = (num(&g.results, &["model", "pressure"])?, num(&g.results, &["model", "entropy"])?);
    let random = num(&b.results, &["random_max_variational_residual"])?;
    Ok(vec![
        clause(bp.abs() <= 1e-12, format!("bernoulli2 pressure {bp:e} (0 ± 1e-12)")),
        clause((be - 2f64.ln()).abs() <= 1e-12, format!("bernoulli2 entropy {be} (log 2 ± 1e-12)")),
        clause((gp - ln_phi).abs() <= 1e-10, format!("golden-mme pressure {gp} (log φ ± 1e-10)")),
        clause((ge - gp).abs() <= 1e-10, format!("golden-mme |entropy - pressure| = {:e}", (ge - gp).abs())),
        clause(
            b.results["random_models"] == json!(100) && random <= 1e-10,
            format!("variational residual on 100 random models {random:e} (<= 1e-10)"),
        ),
        runtime("bernoulli2", &b, 1.0),
        runtime("golden-mme", &g, 1.0),
    ])
}

fn c2_gibbs_bounds(out: &Path) -> Result<Vec<Clause>, String> {
    let g = run_preset("golden-mme", "gibbs", json!({"q_max": 8, "random_models": 0}), out)?;
    let b = run_preset("bernoulli2", "gibbs", json!({"q_max": 8, "random_models": 0}), out)?;
    let k = num(&g.results, &["gibbs_bounds", "empirical_k"])?;
    let (lo, hi) = (num(&b.results, &["gibbs_bounds", "min_ratio"])?, num(&b.results, &["gibbs_bounds", "max_ratio"])?);
    Ok(vec![
        clause(k <= 2.62 && k >= 1.0, format!("golden-mme ratios within [1/k, k], k = {k} (<= 2.62)")),
        clause(lo == 1.0 && hi == 1.0, format!("bernoulli2 ratios [{lo}, {hi}] (exactly [1, 1])")),
        runtime("golden-mme", &g, 5.0),
        runtime("bernoulli2", &b, 5.0),
    ])
}

fn c3_variance(out: &Path) -> Result<Vec<Clause>, String> {
    let t = run_preset("trinomial3", "llt", json!({"ns": [4], "variance_ns": [64, 256]}), out)?;
    let s2 = num(&t.results, &["sigma2_by_method", "fundamental-matrix"])?;
    let mut clauses = vec![clause((s2 - 2.0 / 3.0).abs() <= 1e-12, format!("trinomial3 σ² = {s2} (2/3 ± 1e-12)"))];
    for n in [64, 256] {
        let rows = t.results["variance_growth"].as_array().ok_or("no variance rows")?;
        let row = rows.iter().find(|r| r["n"] == json!(n)).ok_or("missing row")?;
        let v = num(row, &["var_over_n"])?;
        clauses.push(clause((v - 2.0 / 3.0).abs() <= 1e-12, format!("Var(S_{n})/n = {v} (2/3 ± 1e-12)")));
    }
    let cfg = preset("golden-coboundary", Some("llt")).map_err(|e| e.to_string())?;
    let model = cfg.gibbs().map_err(|e| e.to_string())?;
    let phi = cfg.cocycle(model.shift()).map_err(|e| e.to_string())?;
    let gk = green_kubo_variance(&model, &phi).map_err(|e| e.to_string())?;
    clauses.push(clause(
        gk.degenerate && gk.sigma2 < 1e-10,
        format!("golden-coboundary σ² = {:e}, degenerate flag {}", gk.sigma2, gk.degenerate),
    ));
    let code = match run(&cfg, None, None) {
        Err(e) => e.code().to_string(),
        Ok(_) => "ok".into(),
    };
    clauses.push(clause(code == "Degenerate", format!("golden-coboundary run error code {code}")));
    clauses.push(runtime("trinomial3", &t, 1.0));
    Ok(clauses)
}

/// `P(S_4 = 0)` for the uniform ±1/0 walk by enumerating all 81 words.
fn trinomial_p0_n4() -> f64 {
    let mut hits = 0;
    for code in 0..81u32 {
        let mut c = code;
        let mut s = 0i32;
        for _ in 0..4 {
            s += (c % 3) as i32 - 1;
            c /= 3;
        }
        hits += (s == 0) as u32;
    }
    hits as f64 / 81.0
}

fn c4_llt(out: &Path) -> Result<Vec<Clause>, String> {
    let t = run_preset("trinomial3", "llt", json!({"ns": [4, 10000], "variance_ns": []}), out)?;
    let rows = t.results["llt"].as_array().ok_or("no llt rows")?;
    let at = |n: u64| -> Result<f64, String> {
        num(rows.iter().find(|r| r["n"] == json!(n)).ok_or("missing n")?, &["ratio"])
    };
    let r4 = at(4)?;
    let r4_oracle = (16.0 * std::f64::consts::PI / 3.0).sqrt() * trinomial_p0_n4();
    let r4_closed = (16.0 * std::f64::consts::PI / 3.0).sqrt() * 19.0 / 81.0;
    let big = at(10_000)?;
    Ok(vec![
        clause((0.98..=1.02).contains(&big), format!("ratio at n = 10^4: {big} (in [0.98, 1.02])")),
        clause(
            (r4 - r4_closed).abs() <= 1e-12 && (r4 - r4_oracle).abs() <= 1e-12,
            format!("ratio at n = 4: {r4} (√(16π/3)·19/81 = {r4_closed} ± 1e-12)"),
        ),
        runtime("trinomial3", &t, 10.0),
    ])
}

fn c5_dvoretzky(out: &Path) -> Result<Vec<Clause>, String> {
    let started = Instant::now();
    let mut clauses = Vec::new();
    for name in ["bernoulli2", "trinomial3"] {
        let r = run_preset(name, "dvoretzky", json!({"max_length": 2, "n_max": 12, "tolerance": 1e-12}), out)?;
        let mut c = check(&r, "max_relative_residual")?;
        c.text = format!("{name}: {} over {} checks", c.text, r.results["checks"]);
        clauses.push(c);
    }
    let t = started.elapsed().as_secs_f64();
    clauses.push(clause(t < 60.0, format!("suite runtime {t:.2}s (< 60s)")));
    Ok(clauses)
}

fn c6_section_limit(out: &Path) -> Result<Vec<Clause>, String> {
    let params = json!({
        "condition": {"q": 0, "q_prime": 0, "word": "b"},
        "windows": [[0, 0], [1, 1]],
        "trials": 10000,
        "cap": 10_000_000u64,
        "ks_threshold": 0.05,
        "trend_margin": 0.02,
    });
    let r = run_preset("trinomial3", "return-dist", params, out)?;
    let ks00 = num(&r.results["windows"][0], &["ks", "ks"])?;
    let ks11 = num(&r.results["windows"][1], &["ks", "ks"])?;
    // Why the first clause cannot pass: a return after one step has
    // probability ν(b) = 1/3 and puts an atom of that mass at 1/3·√1, which
    // a continuous law can match only to within half the jump.
    let mut rd = csv::Reader::from_path(out.join("trinomial3-return-dist/returns_0_0.csv")).map_err(|e| e.to_string())?;
    let mut ones = 0usize;
    let mut total = 0usize;
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        total += 1;
        ones += (&rec[1] == "1") as usize;
    }
    let atom = ones as f64 / total as f64;
    Ok(vec![
        clause(ks00 <= 0.05, format!("KS at depth (0,0) = {ks00:.4} (<= 0.05)")),
        clause(ks11 <= ks00 + 0.02, format!("KS at depth (1,1) = {ks11:.4} (<= depth-(0,0) KS + 0.02)")),
        clause(
            true,
            format!("diagnostic: fraction of one-step returns {atom:.4} (atom of mass 1/3 forces KS >= 1/6 at depth (0,0))"),
        ),
        runtime("return-dist", &r, 1800.0),
    ])
}

fn c7_integral_equation(out: &Path) -> Result<Vec<Clause>, String> {
    let r = run_preset(
        "trinomial3",
        "quadrature-check",
        json!({"sigmas": [0.5, 1.0, 2.0], "t_grid": [0.5, 1.0, 2.0, 5.0], "integral_tolerance": 1e-8}),
        out,
    )?;
    let mut clauses = Vec::new();
    for s in ["0.5", "1", "2"] {
        clauses.push(check(&r, &format!("integral_equation_sigma_{s}"))?);
    }
    // Independent spot check of the closed form against the E/|N| survival
    // 2 e^{t²/2} (1 - Φ(t)) at σ = 1, t = 1.
    let s = LimitLaw::new(1.0).map_err(|e| e.to_string())?.survival(1.0);
    clauses.push(clause((s - 0.523_156_583_730_246_8).abs() < 1e-13, format!("survival(1) at σ = 1: {s}")));
    clauses.push(runtime("quadrature-check", &r, 1.0));
    Ok(clauses)
}

fn c8_exponent(out: &Path) -> Result<Vec<Clause>, String> {
    let params = json!({"q_list": [1, 2, 3], "trials": 500, "cap": 100_000_000u64, "relative_tolerance": 0.15});
    let r = run_preset("trinomial3", "as-exponent", params, out)?;
    let sweep = &r.results["sweep"];
    let slope = num(sweep, &["regression", "slope"])?;
    let h = 3f64.ln();
    let dim = num(sweep, &["predicted_dimension"])?;
    // Roof 1, log a^u = -log a^s = log 2: entropy_flow (2 / log 2).
    let dim_oracle = 2.0 * h / 2f64.ln();
    Ok(vec![
        clause(((slope - h) / h).abs() <= 0.15, format!("slope {slope:.4} vs log 3 = {h:.4} (within 15%)")),
        check(&r, "dimension_residual")?,
        clause((dim - dim_oracle).abs() <= 1e-12, format!("dimension - 1 = {dim} (2 log 3 / log 2 ± 1e-12)")),
        runtime("as-exponent", &r, 1800.0),
    ])
}

fn c9_flow(out: &Path) -> Result<Vec<Clause>, String> {
    let r = run_preset("varroof-trinomial", "flow-clt", json!({"t": 1e4, "trials": 1000, "variance_tolerance": 0.1}), out)?;
    let s2 = num(&r.results, &["sigma2_flow"])?;
    // ∫R dν = (1 + 2 + 1.5)/3 = 3/2, so σ²_φ / ∫R = (2/3)/(3/2).
    Ok(vec![
        clause((s2 - 4.0 / 9.0).abs() <= 1e-12, format!("σ²_flow = {s2} (4/9)")),
        check(&r, "ratio_mean_abs_deviation")?,
        check(&r, "ratio_count")?,
        check(&r, "clt_variance")?,
        runtime("flow-clt", &r, 1800.0),
    ])
}

fn c10_covariance(out: &Path) -> Result<Vec<Clause>, String> {
    let r = run_preset(
        "varroof-trinomial",
        "flow-clt",
        json!({"trials": 100, "ratio": {"trials": 100, "w_threshold": 1, "min_count": 0}, "lyapunov": null, "roof_scale": 2.0, "covariance_tolerance": 0.0}),
        out,
    )?;
    let mut clauses = Vec::new();
    for name in ["scaled_dimension", "scaled_entropy_flow", "scaled_lambda_u", "scaled_lambda_s", "scaled_sigma2_flow"] {
        clauses.push(check(&r, name)?);
    }
    let q = run_preset("trinomial3", "quadrature-check", json!({"eps": [0.1, 0.01], "tolerance": 1e-6}), out)?;
    clauses.push(check(&q, "semicircle_0.1")?);
    clauses.push(check(&q, "semicircle_0.01")?);
    Ok(clauses)
}

/// Guards the oracle used by criterion 4 and the degenerate preset.
fn self_test() {
    assert_eq!(trinomial_p0_n4(), 19.0 / 81.0);
    let shift = ShiftSpace::full(3).unwrap();
    let model = build_gibbs(&shift, &zrec_core::thermo::Potential::constant(&shift, 0.0)).unwrap();
    let spec = FunctionSpec { depth: 1, values: [("a".into(), -1), ("b".into(), 0), ("c".into(), 1)].into() };
    let phi = Cocycle::from_spec(&shift, &spec).unwrap();
    assert!((green_kubo_variance(&model, &phi).unwrap().sigma2 - 2.0 / 3.0).abs() < 1e-12);
}

fn main() {
    self_test();
    let strict = std::env::var("ZREC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let dir = tempfile::tempdir().expect("tempdir");
    let criteria: [(&str, &str, Criterion); 10] = [
        ("1", "thermodynamics exactness", c1_thermodynamics),
        ("2", "Gibbs bounds", c2_gibbs_bounds),
        ("3", "Green-Kubo variance", c3_variance),
        ("4", "local limit theorem", c4_llt),
        ("5", "last-passage identity", c5_dvoretzky),
        ("6", "section-level return-time law", c6_section_limit),
        ("7", "limit-law integral equation", c7_integral_equation),
        ("8", "almost-sure exponent", c8_exponent),
        ("9", "flow correspondence and flow CLT", c9_flow),
        ("10", "roof covariance and semicircle constant", c10_covariance),
    ];
    let mut hard_failures = 0;
    for (id, title, f) in criteria {
        let started = Instant::now();
        let (ok, lines) = match f(dir.path()) {
            Ok(clauses) => (clauses.iter().all(|c| c.ok), clauses),
            Err(e) => (false, vec![clause(false, format!("error: {e}"))]),
        };
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {id}: {title} [{:.1}s]", started.elapsed().as_secs_f64());
        for c in &lines {
            println!("    {} {}", if c.ok { "ok  " } else { "FAIL" }, c.text);
        }
        if !ok && (strict || !known) {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
