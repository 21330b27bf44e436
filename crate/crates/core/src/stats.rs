//! The limit law `σ·E/|N|`, empirical distributions, Kolmogorov–Smirnov
//! distance, quadrature and least squares.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;
use libm::erfc;

use crate::error::{Error, Result};

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 25.0 {
        // e^{625} is still finite and erfc(25) is a normal double; libm keeps
        // erfc to about one ulp across the range.
        return (x * x).exp() * erfc(x);
    }
    // Asymptotic series; at x >= 25 the terms drop by 1/(2x²) <= 1/1250.
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..6 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
    }
    sum / (x * PI.sqrt())
}

/// Law of `σ·E/|N|`, `E ~ Exp(1)` and `N ~ Normal(0, 1)` independent.
///
/// Conditioning on `|N|` gives the survival function
/// `P(σE/|N| > t) = E[e^{-u|N|}] = 2 e^{u²/2} (1 - Φ(u))`, `u = t/σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitLaw {
    pub sigma: f64,
}

impl LimitLaw {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(LimitLaw { sigma })
    }

    /// `P(X > t)`; one for `t <= 0`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        erfcx(t / (self.sigma * SQRT_2))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// Large-`t` envelope `σ√(2/π)/t`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        self.sigma * (2.0 / PI).sqrt() / t
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        let n: f64 = rng.sample(StandardNormal);
        self.sigma * e / n.abs()
    }

    /// Solves `survival(t) = p` by bisection.
    pub fn quantile_of_survival(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0);
        let (mut lo, mut hi) = (0.0, self.sigma);
        while self.survival(hi) > p {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn median(&self) -> f64 {
        self.quantile_of_survival(0.5)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_a^b f` by `n`-point Gauss–Legendre.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// `|1 - P(X>t) - t/(√(2π)σ) ∫_0^1 P(X > t√(1-u))/√u du|` with the integral
/// evaluated by `nodes`-point Gauss–Legendre after `u = v²`, `v = sin θ`:
/// `∫_0^1 F̄(t√(1-u))/√u du = 2 ∫_0^{π/2} F̄(t cos θ) cos θ dθ`.
pub(crate) fn integral_equation_residual(law: &LimitLaw, t: f64, nodes: usize) -> f64 {
    if t == 0.0 {
        return (1.0 - law.survival(0.0)).abs();
    }
    let integral = 2.0 * integrate(|th| law.survival(t * th.cos()) * th.cos(), 0.0, PI / 2.0, nodes);
    let lhs = law.survival(t) + t / ((2.0 * PI).sqrt() * law.sigma) * integral;
    (lhs - 1.0).abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralEquationReport {
    pub sigma: f64,
    pub quad_points: usize,
    pub t_grid: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Checks that the closed-form survival solves the renewal-type integral
/// equation on `t_grid`.
pub fn verify_integral_equation(law: &LimitLaw, t_grid: &[f64], quad_points: usize) -> Result<IntegralEquationReport> {
    if quad_points < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 quadrature points, got {quad_points}")));
    }
    if t_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument("t grid must be nonnegative".into()));
    }
    let residuals: Vec<f64> = t_grid.iter().map(|&t| integral_equation_residual(law, t, quad_points)).collect();
    Ok(IntegralEquationReport {
        sigma: law.sigma,
        quad_points,
        t_grid: t_grid.to_vec(),
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
    })
}

/// `∫_{-ε}^{ε} √(ε² - α²) dα` by Gauss–Legendre after `α = ε sin θ`.
pub fn semicircle_integral(eps: f64, quad_points: usize) -> f64 {
    eps * eps * integrate(|th| th.cos() * th.cos(), -PI / 2.0, PI / 2.0, quad_points)
}

/// Sorted nonnegative sample, optionally right-censored.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    censor_bound: Option<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>, censor_bound: Option<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("sample values must be nonnegative".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { values, censor_bound })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn censor_bound(&self) -> Option<f64> {
        self.censor_bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Observations at or above the censor bound.
    pub fn censored_count(&self) -> usize {
        match self.censor_bound {
            Some(b) => self.values.iter().filter(|&&v| v >= b).count(),
            None => 0,
        }
    }

    /// Fraction of the sample strictly above `t`.
    pub fn survival(&self, t: f64) -> f64 {
        let below = self.values.partition_point(|&v| v <= t);
        (self.values.len() - below) as f64 / self.values.len() as f64
    }

    pub fn median(&self) -> Option<f64> {
        median_sorted(&self.values)
    }
}

fn median_sorted(v: &[f64]) -> Option<f64> {
    match v.len() {
        0 => None,
        n if n % 2 == 1 => Some(v[n / 2]),
        n => Some(0.5 * (v[n / 2 - 1] + v[n / 2])),
    }
}

/// Median of an unsorted sample (`+inf` entries allowed).
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

/// One-sample KS statistic `sup |F_n - F|` against the limit law.
///
/// With a censor bound, only points below it enter, the empirical CDF keeps
/// the full sample size in its denominator and the gap just below the bound
/// is included.
pub fn ks_distance(empirical: &EmpiricalDistribution, law: &LimitLaw) -> Result<f64> {
    let n = empirical.len();
    let bound = empirical.censor_bound.unwrap_or(f64::INFINITY);
    let uncensored = empirical.values.partition_point(|&v| v < bound);
    if n == 0 || uncensored == 0 {
        return Err(Error::EmptySample);
    }
    let mut d = sup_distance(&empirical.values[..uncensored], n, |x| law.cdf(x));
    if bound.is_finite() {
        d = d.max(law.cdf(bound) - uncensored as f64 / n as f64);
    }
    Ok(d)
}

fn sup_distance(sorted: &[f64], n: usize, cdf: impl Fn(f64) -> f64) -> f64 {
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    d
}

/// One-sample KS distance of an uncensored sample against a continuous cdf.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sup_distance(&sorted, sorted.len(), cdf))
}

#[derive(Debug, Clone, Serialize)]
pub struct KsReport {
    pub sigma: f64,
    pub n: usize,
    pub n_censored: usize,
    pub ks: f64,
    pub pass_threshold: f64,
}

impl KsReport {
    pub fn passed(&self) -> bool {
        self.ks <= self.pass_threshold
    }
}

pub fn ks_report(empirical: &EmpiricalDistribution, law: &LimitLaw, pass_threshold: f64) -> Result<KsReport> {
    Ok(KsReport {
        sigma: law.sigma,
        n: empirical.len(),
        n_censored: empirical.censored_count(),
        ks: ks_distance(empirical, law)?,
        pass_threshold,
    })
}

/// Two-sample KS statistic (used for scale-equivariance checks).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope (NaN with two points).
    pub slope_se: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> Result<Regression> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("xs and ys differ in length".into()));
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::DegenerateX);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateX);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_se = if xs.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(Regression { slope, intercept, r2, slope_se })
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn ks_statistic_on_uniform_grid() {
        // Points at (i + 1/2)/n: distance exactly 1/(2n) from the uniform cdf.
        let n = 40;
        let xs: Vec<f64> = (0..n).rev().map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
        assert!(ks_statistic(&[], normal_cdf).is_err());
    }

    #[test]
    fn erfcx_matches_direct_evaluation_and_asymptotics() {
        for &x in &[0.0f64, 0.3, 1.0, 4.0, 10.0, 24.0] {
            let direct = (x * x).exp() * erfc(x);
            assert!((erfcx(x) - direct).abs() <= 1e-13 * direct, "{x}");
        }
        // Continuity across the switch to the asymptotic series.
        let (a, b) = (erfcx(25.0 - 1e-9), erfcx(25.0));
        assert!((a - b).abs() / b < 1e-9);
        assert!((erfcx(1e3) * 1e3 * PI.sqrt() - 1.0).abs() < 1e-6);
        assert!((erfcx(-1.0) - 2.0 * 1f64.exp() + erfcx(1.0)).abs() < 1e-14);
    }

    #[test]
    fn survival_values() {
        let law = LimitLaw::new(1.0).unwrap();
        assert_eq!(law.survival(0.0), 1.0);
        // 2 e^{1/2} (1 - Φ(1)).
        let expected = 2.0 * 0.5f64.exp() * (1.0 - normal_cdf(1.0));
        assert!((law.survival(1.0) - expected).abs() < 1e-14);
        assert!((law.survival(1.0) - 0.523_156_583_730_246_8).abs() < 1e-12);
        for &t in &[10.0, 50.0] {
            assert!(law.survival(t) <= law.tail_bound(t));
            assert!(law.survival(t) > 0.9 * law.tail_bound(t));
        }
        assert!(LimitLaw::new(0.0).is_err());
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i9: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i9 - 2.0 / 9.0).abs() < 1e-14);
        assert!((integrate(|t| t.exp(), 0.0, 1.0, 64) - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn integral_equation_converges() {
        let law = LimitLaw::new(1.0).unwrap();
        assert_eq!(integral_equation_residual(&law, 0.0, 64), 0.0);
        let coarse = integral_equation_residual(&law, 2.0, 4);
        let finer = integral_equation_residual(&law, 2.0, 16);
        assert!(finer < coarse / 100.0, "{coarse} {finer}");
        let r = verify_integral_equation(&law, &[0.5, 1.0, 2.0, 5.0], 512).unwrap();
        assert!(r.max_residual <= 1e-8, "{r:?}");
        assert!(verify_integral_equation(&law, &[1.0], 32).is_err());
    }

    #[test]
    fn semicircle_constant() {
        for &eps in &[0.1, 0.01] {
            let ratio = semicircle_integral(eps, 64) / (eps * eps);
            assert!((ratio - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ks_on_quantile_grid() {
        let law = LimitLaw::new(1.3).unwrap();
        let n = 200;
        let values: Vec<f64> = (1..=n).map(|k| law.quantile_of_survival(1.0 - k as f64 / (n + 1) as f64)).collect();
        let emp = EmpiricalDistribution::new(values, None).unwrap();
        assert!(ks_distance(&emp, &law).unwrap() <= 1.0 / (n + 1) as f64 + 1e-9);
    }

    #[test]
    fn ks_degenerate_and_empty() {
        let law = LimitLaw::new(1.0).unwrap();
        let emp = EmpiricalDistribution::new(vec![0.0], None).unwrap();
        assert_eq!(ks_distance(&emp, &law).unwrap(), 1.0);
        let empty = EmpiricalDistribution::new(vec![], None).unwrap();
        assert_eq!(ks_distance(&empty, &law), Err(Error::EmptySample));
        let all_censored = EmpiricalDistribution::new(vec![5.0, 6.0], Some(1.0)).unwrap();
        assert_eq!(ks_distance(&all_censored, &law), Err(Error::EmptySample));
        assert!(EmpiricalDistribution::new(vec![-1.0], None).is_err());
    }

    #[test]
    fn censoring_excludes_the_tail() {
        let law = LimitLaw::new(1.0).unwrap();
        let mut rng = substream(11, 0);
        let mut values: Vec<f64> = (0..4000).map(|_| law.sample(&mut rng)).collect();
        let bound = 3.0;
        // Wreck everything above the bound: the censored distance ignores it.
        values.iter_mut().filter(|v| **v >= bound).for_each(|v| *v = 1e9);
        let censored = EmpiricalDistribution::new(values, Some(bound)).unwrap();
        let d = ks_distance(&censored, &law).unwrap();
        assert!(d < 0.03, "{d}");
        assert!(censored.censored_count() > 0);
    }

    #[test]
    fn regression_examples() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let r = regression_slope(&xs, &ys).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-14 && (r.intercept - 1.0).abs() < 1e-13);
        assert!((r.r2 - 1.0).abs() < 1e-14);
        let flat = regression_slope(&xs, &[3.0; 10]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(regression_slope(&[1.0, 1.0], &[0.0, 1.0]).unwrap_err(), Error::DegenerateX);
        assert_eq!(regression_slope(&[1.0], &[0.0]).unwrap_err(), Error::DegenerateX);
    }

    #[test]
    fn two_sample_ks_on_identical_samples() {
        let a = [0.1, 0.5, 0.2, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
    }
}
