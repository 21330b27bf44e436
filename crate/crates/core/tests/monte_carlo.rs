//! Monte Carlo checks at unit-test scale. Every run is seeded, so outcomes
//! are reproducible; tolerances are several standard errors wide.

use zrec_core::recurrence::{exponent_sweep, flow_return_ratio, return_time_batch, sample_conditioned};
use zrec_core::rng::substream;
use zrec_core::sft::{Cylinder, ShiftSpace};
use zrec_core::stats::{ks_distance, ks_two_sample, regression_slope, EmpiricalDistribution, LimitLaw};
use zrec_core::suspension::SuspensionSystem;
use zrec_core::thermo::{build_gibbs, Cocycle, Potential};

fn trinomial_system(roof: [f64; 3]) -> SuspensionSystem {
    let shift = ShiftSpace::full(3).unwrap();
    SuspensionSystem::new(
        &shift,
        &Potential::constant(&shift, 0.0),
        Potential::per_symbol(&shift, &roof).unwrap(),
        Potential::per_symbol(&shift, &[0.5, 1.0, 1.5]).unwrap(),
        Potential::per_symbol(&shift, &[-1.0, -0.5, -0.8]).unwrap(),
        Cocycle::per_symbol(&shift, &[-1, 0, 1]).unwrap(),
    )
    .unwrap()
}

#[test]
fn limit_law_sampler() {
    let law = LimitLaw::new(1.0).unwrap();
    let mut rng = substream(100, 0);
    let samples: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
    let above = samples.iter().filter(|&&x| x > 1.0).count() as f64 / samples.len() as f64;
    assert!((above - law.survival(1.0)).abs() <= 0.002, "{above}");
    let emp = EmpiricalDistribution::new(samples, None).unwrap();
    let med = emp.median().unwrap();
    assert!((med / law.median() - 1.0).abs() <= 0.01, "{med} vs {}", law.median());
}

#[test]
fn limit_law_scale_equivariance() {
    let one = LimitLaw::new(1.0).unwrap();
    let two = LimitLaw::new(2.0).unwrap();
    let mut r1 = substream(101, 0);
    let mut r2 = substream(101, 1);
    let a: Vec<f64> = (0..100_000).map(|_| 2.0 * one.sample(&mut r1)).collect();
    let b: Vec<f64> = (0..100_000).map(|_| two.sample(&mut r2)).collect();
    assert!(ks_two_sample(&a, &b) <= 0.01);
    // The one-sample distance is unchanged by rescaling samples and σ.
    let e1 = EmpiricalDistribution::new(b.iter().map(|x| x / 2.0).collect(), None).unwrap();
    let e2 = EmpiricalDistribution::new(b.clone(), None).unwrap();
    let (d1, d2) = (ks_distance(&e1, &one).unwrap(), ks_distance(&e2, &two).unwrap());
    assert!((d1 - d2).abs() < 1e-12);
}

#[test]
fn ks_critical_value_on_exact_samples() {
    // 1.36/√n is the 95% point of the Kolmogorov law, so the pass rate is
    // itself a binomial estimate of 0.95; allow three standard errors.
    let law = LimitLaw::new(1.0).unwrap();
    let seeds = 1000;
    let passes = (0..seeds)
        .filter(|&seed| {
            let mut rng = substream(200 + seed, 0);
            let s: Vec<f64> = (0..10_000).map(|_| law.sample(&mut rng)).collect();
            ks_distance(&EmpiricalDistribution::new(s, None).unwrap(), &law).unwrap() <= 1.36 / 100.0
        })
        .count();
    let rate = passes as f64 / seeds as f64;
    assert!(rate >= 0.95 - 3.0 * (0.95f64 * 0.05 / seeds as f64).sqrt(), "{passes} of {seeds} seeds");
}

#[test]
fn regression_on_a_noisy_line() {
    use rand_distr::{Distribution, Normal};
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = substream(300, 0);
    let xs: Vec<f64> = (0..1000).map(|i| i as f64 / 100.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x - 2.0 + noise.sample(&mut rng)).collect();
    let r = regression_slope(&xs, &ys).unwrap();
    assert!((r.slope - 0.7).abs() <= 3.0 * r.slope_se);
}

#[test]
fn conditioned_marginals() {
    let shift = ShiftSpace::full(3).unwrap();
    let pot = Potential::from_fn(&shift, 2, |w| [[0.0, 0.9, -0.4], [0.2, -0.3, 0.5], [-0.8, 0.1, 0.0]][w[0] as usize][w[1] as usize]).unwrap();
    let model = build_gibbs(&shift, &pot).unwrap();
    let cyl = Cylinder::new(&shift, 1, 1, vec![0, 1, 2]).unwrap();
    let trials = 100_000;
    let (mut fwd, mut bwd) = ([0usize; 3], [0usize; 3]);
    for t in 0..trials {
        let mut p = sample_conditioned(&model, &cyl, substream(400, t)).unwrap();
        fwd[p.coordinate(2) as usize] += 1;
        bwd[p.coordinate(-2) as usize] += 1;
    }
    let pi = |s: usize| model.stationary()[model.state_index(&[s as u8]).unwrap()];
    let p = |a: usize, b: usize| model.transition(model.state_index(&[a as u8]).unwrap(), model.state_index(&[b as u8]).unwrap());
    for s in 0..3 {
        let expect_f = p(2, s);
        let expect_b = pi(s) * p(s, 0) / pi(0);
        for (count, expect) in [(fwd[s], expect_f), (bwd[s], expect_b)] {
            let freq = count as f64 / trials as f64;
            let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
            assert!((freq - expect).abs() <= 3.0 * sd + 1e-12, "symbol {s}: {freq} vs {expect}");
        }
    }
}

#[test]
fn trinomial_return_batch() {
    let sys = trinomial_system([1.0; 3]);
    let cyl = Cylinder::new(sys.model().shift(), 0, 0, vec![1]).unwrap();
    let batch = return_time_batch(&sys, &cyl, 10_000, 10_000_000, 500).unwrap();
    assert!(batch.capped_fraction < 0.01);
    let mut ws: Vec<f64> = batch.samples.iter().map(|s| s.w as f64).collect();
    ws.sort_by(f64::total_cmp);
    let median = ws[ws.len() / 2];
    let mean = ws.iter().sum::<f64>() / ws.len() as f64;
    assert!((1.0..=100.0).contains(&median), "median {median}");
    assert!(median / mean < 0.5, "median {median} mean {mean}");
    // P(w > n) ~ c / √n.
    let ns: Vec<f64> = [1e2, 1e3, 1e4, 1e5, 1e6].to_vec();
    let tail: Vec<f64> = ns
        .iter()
        .map(|&n| batch.samples.iter().filter(|s| s.w as f64 > n).count() as f64 / ws.len() as f64)
        .collect();
    let fit = regression_slope(&ns.iter().map(|n| n.ln()).collect::<Vec<_>>(), &tail.iter().map(|p| p.ln()).collect::<Vec<_>>()).unwrap();
    assert!((fit.slope + 0.5).abs() <= 0.1, "slope {}", fit.slope);
}

#[test]
fn roof_time_tracks_return_time() {
    let sys = trinomial_system([1.0, 2.0, 1.5]);
    let cyl = Cylinder::new(sys.model().shift(), 0, 0, vec![1]).unwrap();
    let batch = return_time_batch(&sys, &cyl, 20_000, 1_000_000, 501).unwrap();
    let dev: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&th| flow_return_ratio(&sys, &batch.samples, th).unwrap().mean_abs_deviation)
        .collect();
    assert!(dev[1] <= 0.02, "{dev:?}");
    assert!(dev[0] > dev[2], "{dev:?}");
}

#[test]
fn birkhoff_lyapunov_matches_exact() {
    let sys = trinomial_system([1.0, 2.0, 1.5]);
    let exact = sys.lyapunov_exact();
    let est = sys.lyapunov_birkhoff(1e6, 100, 600).unwrap();
    for (e, x, se) in [
        (est.report.lambda_u, exact.lambda_u, est.lambda_u_se),
        (est.report.lambda_s, exact.lambda_s, est.lambda_s_se),
    ] {
        assert!((e - x).abs() <= 3.0 * se, "{e} vs {x} (se {se})");
        assert!((e / x - 1.0).abs() <= 0.01);
    }
    let short = sys.lyapunov_birkhoff(2.5e5, 100, 601).unwrap();
    assert!(short.lambda_u_se > est.lambda_u_se);
}

#[test]
fn small_exponent_sweep() {
    let sys = trinomial_system([1.0; 3]);
    let sweep = exponent_sweep(&sys, &[1, 2], 300, 10_000_000, 700, 0.2).unwrap();
    assert!(sweep.relative_error < 0.25, "{:?}", sweep.regression);
    assert!(sweep.dimension_residual <= 1e-12);
}

#[test]
fn flow_displacement_mean_is_clt_scale() {
    let sys = trinomial_system([1.0, 2.0, 1.5]);
    let samples = sys.clt_flow_samples(1e3, 1000, 800).unwrap();
    let sigma = sys.flow_variance().unwrap().sqrt();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    // Samples are φ_t/√t, so the bound on the mean of φ_t scales by 1/√t.
    assert!(mean.abs() <= 3.0 * sigma / (1000f64).sqrt());
}
