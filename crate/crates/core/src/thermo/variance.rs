//! Asymptotic variance `σ²_φ = ∫φ² dν + 2 Σ_{k>=1} ∫ φ·φ∘σ^k dν` of a
//! centered cocycle, behind interchangeable estimators, plus the
//! aperiodicity guard for the local limit theorem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::Cocycle;
use super::gibbs::GibbsModel;
use super::sums::exact_sum_distribution;
use crate::error::{Error, Result};

/// Tolerance on `|∫φ dν|` for a cocycle to count as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-12;
/// Variances below this are reported as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
/// Twisted spectral radii at or above `1 - PERIODICITY_MARGIN` flag a
/// periodic cocycle.
pub const PERIODICITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    FundamentalMatrix,
    TruncatedGreenKubo,
    DpGrowth,
}

impl VarianceMethod {
    pub fn name(self) -> &'static str {
        match self {
            VarianceMethod::FundamentalMatrix => "fundamental-matrix",
            VarianceMethod::TruncatedGreenKubo => "truncated-green-kubo",
            VarianceMethod::DpGrowth => "dp-growth",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub sigma2: f64,
    pub method: VarianceMethod,
    pub degenerate: bool,
}

/// A way of computing `σ²_φ` for a centered cocycle.
pub trait VarianceEstimator: Send + Sync {
    fn method(&self) -> VarianceMethod;

    fn estimate(&self, model: &GibbsModel, cocycle: &Cocycle) -> Result<f64>;
}

/// Solves the Poisson equation through `Z = (I - P + 1π)^{-1}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FundamentalMatrix;

/// Sums autocovariances until they drop below `tolerance` (or `max_lag`).
#[derive(Debug, Clone, Copy)]
pub struct TruncatedGreenKubo {
    pub max_lag: usize,
    pub tolerance: f64,
}

impl Default for TruncatedGreenKubo {
    fn default() -> Self {
        TruncatedGreenKubo { max_lag: 100_000, tolerance: 1e-16 }
    }
}

/// `(Var S_{2n} - Var S_n) / n` from the exact sum law; the boundary term of
/// `Var S_n = nσ² + c + O(ρ^n)` cancels.
#[derive(Debug, Clone, Copy)]
pub struct DpGrowth {
    pub n: usize,
}

impl Default for DpGrowth {
    fn default() -> Self {
        DpGrowth { n: 256 }
    }
}

/// Estimator registered under `name`.
pub fn variance_estimator(name: &str) -> Option<Box<dyn VarianceEstimator>> {
    match name {
        "fundamental-matrix" => Some(Box::new(FundamentalMatrix)),
        "truncated-green-kubo" => Some(Box::new(TruncatedGreenKubo::default())),
        "dp-growth" => Some(Box::new(DpGrowth::default())),
        _ => None,
    }
}

/// Names accepted by [`variance_estimator`].
pub const VARIANCE_METHODS: [&str; 3] = ["fundamental-matrix", "truncated-green-kubo", "dp-growth"];

/// Fails with `NotCentered` unless `|∫φ dν| <= 1e-12`.
pub fn check_centered(model: &GibbsModel, cocycle: &Cocycle) -> Result<()> {
    let mean = model.integrate_int(cocycle)?;
    if mean.abs() > CENTERING_TOLERANCE {
        return Err(Error::NotCentered { mean });
    }
    Ok(())
}

/// Per-state drift `g_i = Σ_j P_ij φ(ij)` and edge values.
fn drift(model: &GibbsModel, cocycle: &Cocycle) -> Result<(Vec<f64>, Vec<f64>)> {
    let values: Vec<f64> = model.edge_values(cocycle)?.into_iter().map(|v| v as f64).collect();
    let mut g = vec![0.0; model.state_count()];
    for (e, v) in model.edges().iter().zip(&values) {
        g[e.from] += model.transition(e.from, e.to) * v;
    }
    Ok((g, values))
}

/// `Σ_edges π_i P_ij φ(ij) (φ(ij) + 2 h_j)` for a vector `h`.
fn combine(model: &GibbsModel, values: &[f64], h: &[f64]) -> f64 {
    model
        .edges()
        .iter()
        .zip(values)
        .map(|(e, v)| model.edge_mass(e) * v * (v + 2.0 * h[e.to]))
        .sum()
}

impl VarianceEstimator for FundamentalMatrix {
    fn method(&self) -> VarianceMethod {
        VarianceMethod::FundamentalMatrix
    }

    fn estimate(&self, model: &GibbsModel, cocycle: &Cocycle) -> Result<f64> {
        check_centered(model, cocycle)?;
        let k = model.state_count();
        let (g, values) = drift(model, cocycle)?;
        let pi = model.stationary();
        let p = model.transition_matrix();
        let a = DMatrix::from_fn(k, k, |i, j| (i == j) as u8 as f64 - p[i * k + j] + pi[j]);
        let lu = a.lu();
        // Σ_{t>=0} P^t g = Z g, since πg = 0.
        let h = lu.solve(&DVector::from_vec(g)).ok_or(Error::SingularSolve)?;
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularSolve);
        }
        Ok(combine(model, &values, h.as_slice()))
    }
}

impl VarianceEstimator for TruncatedGreenKubo {
    fn method(&self) -> VarianceMethod {
        VarianceMethod::TruncatedGreenKubo
    }

    fn estimate(&self, model: &GibbsModel, cocycle: &Cocycle) -> Result<f64> {
        check_centered(model, cocycle)?;
        let k = model.state_count();
        let (g, values) = drift(model, cocycle)?;
        // h accumulates Σ_{t<lag} P^t g; the lag-(t+1) covariance is
        // Σ π_i P_ij φ(ij) (P^t g)_j.
        let mut h = vec![0.0; k];
        let mut term = g;
        for _ in 0..self.max_lag {
            let size = term.iter().map(|x| x.abs()).fold(0.0, f64::max);
            h.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
            if size < self.tolerance {
                break;
            }
            let mut next = vec![0.0; k];
            for e in model.edges() {
                next[e.from] += model.transition(e.from, e.to) * term[e.to];
            }
            term = next;
        }
        Ok(combine(model, &values, &h))
    }
}

impl VarianceEstimator for DpGrowth {
    fn method(&self) -> VarianceMethod {
        VarianceMethod::DpGrowth
    }

    fn estimate(&self, model: &GibbsModel, cocycle: &Cocycle) -> Result<f64> {
        check_centered(model, cocycle)?;
        let v1 = exact_sum_distribution(model, cocycle, self.n)?.variance();
        let v2 = exact_sum_distribution(model, cocycle, 2 * self.n)?.variance();
        Ok((v2 - v1) / self.n as f64)
    }
}

/// `σ²_φ` by the fundamental matrix.
pub fn green_kubo_variance(model: &GibbsModel, cocycle: &Cocycle) -> Result<VarianceReport> {
    green_kubo_variance_with(model, cocycle, &FundamentalMatrix)
}

pub fn green_kubo_variance_with(
    model: &GibbsModel,
    cocycle: &Cocycle,
    estimator: &dyn VarianceEstimator,
) -> Result<VarianceReport> {
    let raw = estimator.estimate(model, cocycle)?;
    // Rounding can push an exact zero slightly negative.
    let sigma2 = raw.max(0.0);
    Ok(VarianceReport { sigma2, method: estimator.method(), degenerate: sigma2 < DEGENERACY_TOLERANCE })
}

/// `Var(S_n φ)/n` from the exact sum law, for each `n`.
pub fn variance_growth(model: &GibbsModel, cocycle: &Cocycle, ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| Ok((n, exact_sum_distribution(model, cocycle, n)?.variance() / n as f64)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AperiodicityReport {
    pub grid_size: usize,
    pub max_radius: f64,
    pub theta_at_max: f64,
    pub periodic: bool,
}

impl AperiodicityReport {
    /// `Periodic` error when the guard failed.
    pub fn require_aperiodic(&self) -> Result<()> {
        if self.periodic {
            Err(Error::Periodic { radius: self.max_radius, theta: self.theta_at_max })
        } else {
            Ok(())
        }
    }
}

/// Spectral radius of `P_θ(i,j) = P_ij e^{iθφ(ij)}`.
pub fn twisted_radius(model: &GibbsModel, cocycle: &Cocycle, theta: f64) -> Result<f64> {
    let k = model.state_count();
    let values = model.edge_values(cocycle)?;
    let mut m = DMatrix::<Complex64>::zeros(k, k);
    for (e, &v) in model.edges().iter().zip(&values) {
        m[(e.from, e.to)] = Complex64::from_polar(model.transition(e.from, e.to), theta * v as f64);
    }
    let eig = m
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::InvalidArgument("complex Schur decomposition failed".into()))?;
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Sweeps `θ = 2πk/grid_size`, `k = 1..grid_size`, and reports the largest
/// twisted spectral radius.
pub fn cocycle_aperiodicity(model: &GibbsModel, cocycle: &Cocycle, grid_size: usize) -> Result<AperiodicityReport> {
    if grid_size < 16 {
        return Err(Error::InvalidArgument(format!("grid size {grid_size} < 16")));
    }
    let mut best = (0.0, 0.0);
    for k in 1..grid_size {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / grid_size as f64;
        let r = twisted_radius(model, cocycle, theta)?;
        if r > best.0 {
            best = (r, theta);
        }
    }
    Ok(AperiodicityReport {
        grid_size,
        max_radius: best.0,
        theta_at_max: best.1,
        periodic: best.0 >= 1.0 - PERIODICITY_MARGIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::ShiftSpace;
    use crate::thermo::{build_gibbs, Potential};

    fn uniform(n: usize) -> (ShiftSpace, GibbsModel) {
        let shift = ShiftSpace::full(n).unwrap();
        let model = build_gibbs(&shift, &Potential::constant(&shift, 0.0)).unwrap();
        (shift, model)
    }

    #[test]
    fn iid_variances() {
        let (s3, m3) = uniform(3);
        let phi = Cocycle::per_symbol(&s3, &[-1, 0, 1]).unwrap();
        let r = green_kubo_variance(&m3, &phi).unwrap();
        assert!((r.sigma2 - 2.0 / 3.0).abs() < 1e-14);
        assert!(!r.degenerate);
        let (s2, m2) = uniform(2);
        let pm = Cocycle::per_symbol(&s2, &[1, -1]).unwrap();
        assert!((green_kubo_variance(&m2, &pm).unwrap().sigma2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uncentered_is_rejected() {
        let (s3, m3) = uniform(3);
        let phi = Cocycle::per_symbol(&s3, &[1, 0, 1]).unwrap();
        for name in VARIANCE_METHODS {
            let est = variance_estimator(name).unwrap();
            assert!(matches!(est.estimate(&m3, &phi), Err(Error::NotCentered { .. })), "{name}");
        }
        assert!(variance_estimator("bogus").is_none());
    }

    #[test]
    fn estimators_agree_on_a_correlated_chain() {
        // Golden-mean shift with a non-trivial depth-two cocycle.
        let shift = ShiftSpace::new(2, &[vec![1, 1], vec![1, 0]]).unwrap();
        let model = build_gibbs(&shift, &Potential::constant(&shift, 0.0)).unwrap();
        let phi = Cocycle::new(&shift, 2, vec![(vec![0, 0], 1), (vec![0, 1], -1), (vec![1, 0], -1)]).unwrap();
        // Not centered: ν(aa) = π_a P_aa ≠ ν(ab) + ν(ba).
        assert!(check_centered(&model, &phi).is_err());
        let sym = Cocycle::new(&shift, 2, vec![(vec![0, 0], 0), (vec![0, 1], 2), (vec![1, 0], -2)]).unwrap();
        let fm = FundamentalMatrix.estimate(&model, &sym).unwrap();
        let tgk = TruncatedGreenKubo::default().estimate(&model, &sym).unwrap();
        assert!((fm - tgk).abs() < 1e-12);
        // Coboundary: variance zero.
        assert!(fm.abs() < 1e-12);
    }

    #[test]
    fn aperiodicity_examples() {
        let (s2, m2) = uniform(2);
        let pm = Cocycle::per_symbol(&s2, &[1, -1]).unwrap();
        let r = cocycle_aperiodicity(&m2, &pm, 16).unwrap();
        assert!(r.periodic);
        assert!((r.theta_at_max - std::f64::consts::PI).abs() < 1e-12);
        assert!(r.require_aperiodic().is_err());

        let (s3, m3) = uniform(3);
        let tri = Cocycle::per_symbol(&s3, &[-1, 0, 1]).unwrap();
        let r = cocycle_aperiodicity(&m3, &tri, 64).unwrap();
        assert!(!r.periodic);
        // iid: radius is |E e^{iθφ}| = |1 + 2cos θ|/3, maximal next to θ = 0.
        let theta = 2.0 * std::f64::consts::PI / 64.0;
        assert!((r.max_radius - (1.0 + 2.0 * theta.cos()) / 3.0).abs() < 1e-12);

        let zero = Cocycle::constant(&s3, 0);
        assert!(cocycle_aperiodicity(&m3, &zero, 16).unwrap().periodic);
        assert!(cocycle_aperiodicity(&m3, &zero, 8).is_err());
    }
}
