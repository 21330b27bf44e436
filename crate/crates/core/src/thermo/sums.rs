use serde::Serialize;

use super::function::Cocycle;
use super::gibbs::GibbsModel;
use crate::error::{Error, Result};

/// Default cap on the width `2 n max|φ| + 1` of a sum table.
pub const DEFAULT_RANGE_CAP: usize = 20_000_001;

/// Exact law of the Birkhoff sum `S_n φ` under `ν`.
#[derive(Debug, Clone, Serialize)]
pub struct SumDistribution {
    pub n: usize,
    /// Smallest value of the stored support.
    pub min_value: i64,
    /// `probabilities[k] = P(S_n φ = min_value + k)`.
    pub probabilities: Vec<f64>,
}

impl SumDistribution {
    pub fn support(&self) -> (i64, i64) {
        (self.min_value, self.min_value + self.probabilities.len() as i64 - 1)
    }

    pub fn probability(&self, value: i64) -> f64 {
        let idx = value - self.min_value;
        if idx < 0 || idx >= self.probabilities.len() as i64 {
            0.0
        } else {
            self.probabilities[idx as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(k, p)| p * (self.min_value + k as i64) as f64).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let d = (self.min_value + k as i64) as f64 - mean;
                p * d * d
            })
            .sum()
    }
}

/// Joint law of `(X_n, S_n φ)` for the recoded chain `X`, started from an
/// arbitrary initial weighting of the states.
#[derive(Debug, Clone)]
pub struct StateSumTable {
    pub n: usize,
    pub min_value: i64,
    /// `mass[state][k] = P(X_n = state, S_n = min_value + k)`.
    pub mass: Vec<Vec<f64>>,
}

impl StateSumTable {
    pub fn marginal(&self) -> SumDistribution {
        let width = self.mass.first().map_or(0, Vec::len);
        let mut probabilities = vec![0.0; width];
        for row in &self.mass {
            for (acc, p) in probabilities.iter_mut().zip(row) {
                *acc += p;
            }
        }
        SumDistribution { n: self.n, min_value: self.min_value, probabilities }
    }
}

/// Forward dynamic program over (state, partial sum).
pub fn state_sum_table(
    model: &GibbsModel,
    cocycle: &Cocycle,
    n: usize,
    initial: &[f64],
    range_cap: usize,
) -> Result<StateSumTable> {
    let k = model.state_count();
    if initial.len() != k {
        return Err(Error::InvalidArgument(format!("initial weights have length {} != {k}", initial.len())));
    }
    let values = model.edge_values(cocycle)?;
    let lo_step = values.iter().copied().min().unwrap_or(0).min(0);
    let hi_step = values.iter().copied().max().unwrap_or(0).max(0);
    let requested = 2 * (n as u128) * cocycle.max_abs() as u128 + 1;
    if requested > range_cap as u128 {
        return Err(Error::RangeOverflow { requested, cap: range_cap });
    }
    let width = n * (hi_step - lo_step) as usize + 1;
    let min_value = n as i64 * lo_step;
    // After `t` steps the sum lies in [t*lo_step, t*hi_step].
    let offset = |value: i64| (value - min_value) as usize;
    let mut cur = vec![vec![0.0; width]; k];
    for (row, &w) in cur.iter_mut().zip(initial) {
        row[offset(0)] = w;
    }
    let transitions: Vec<(usize, usize, f64, i64)> = model
        .edges()
        .iter()
        .zip(&values)
        .map(|(e, &v)| (e.from, e.to, model.transition(e.from, e.to), v))
        .filter(|t| t.2 > 0.0)
        .collect();
    let mut next = vec![vec![0.0; width]; k];
    for t in 0..n as i64 {
        if t > 0 {
            let (plo, phi) = (offset((t - 1) * lo_step), offset((t - 1) * hi_step));
            for row in next.iter_mut() {
                row[plo..=phi].iter_mut().for_each(|x| *x = 0.0);
            }
        }
        let (lo, hi) = (offset(t * lo_step), offset(t * hi_step));
        for &(from, to, p, v) in &transitions {
            let src = &cur[from][lo..=hi];
            let start = (lo as i64 + v) as usize;
            let dst = &mut next[to][start..start + src.len()];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += p * s;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(StateSumTable { n, min_value, mass: cur })
}

/// Exact law of `S_n φ` under the stationary measure.
pub fn exact_sum_distribution(model: &GibbsModel, cocycle: &Cocycle, n: usize) -> Result<SumDistribution> {
    exact_sum_distribution_capped(model, cocycle, n, DEFAULT_RANGE_CAP)
}

pub fn exact_sum_distribution_capped(
    model: &GibbsModel,
    cocycle: &Cocycle,
    n: usize,
    range_cap: usize,
) -> Result<SumDistribution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(state_sum_table(model, cocycle, n, model.stationary(), range_cap)?.marginal())
}

/// `√(2πn) σ_φ P(S_n φ = 0)`; tends to one for aperiodic cocycles.
pub fn llt_ratio(model: &GibbsModel, cocycle: &Cocycle, n: usize) -> Result<f64> {
    let report = super::variance::green_kubo_variance(model, cocycle)?;
    if report.degenerate {
        return Err(Error::Degenerate { sigma2: report.sigma2 });
    }
    let dist = exact_sum_distribution(model, cocycle, n)?;
    Ok((2.0 * std::f64::consts::PI * n as f64).sqrt() * report.sigma2.sqrt() * dist.probability(0))
}
