//! Return times of the ℤ-extension to cylinders: conditioned sampling, the
//! scan for `τ_{q,q'}`, the last-passage identity and the exponent sweep.
//!
//! `τ_{q,q'}(ω) = min{m >= 1 : S_m φ(ω) = 0 and σ^m ω ∈ C_{-q,q'}(ω)}`: the
//! orbit must come back to the same cell of the extension *and* to the
//! cylinder spelled by `ω` itself on `-q..q'`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{block_stream, substream, StreamRng};
use crate::sft::{cylinder_contains, Cylinder, SymbolPath, Symbol};
use crate::stats::{median, regression_slope, EmpiricalDistribution, Regression};
use crate::suspension::{LyapunovReport, SuspensionSystem};
use crate::thermo::{Cocycle, GibbsModel};

/// Default scan budget.
pub const DEFAULT_CAP: u64 = 100_000_000;
/// Largest capped fraction the exponent sweep accepts.
pub const DEFAULT_MAX_CAPPED_FRACTION: f64 = 0.2;
/// Largest DP table `dvoretzky_check` will allocate.
pub const DVORETZKY_STATE_CAP: usize = 50_000_000;

/// One scanned return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnSample {
    /// Return time, or the cap when `capped`.
    pub w: u64,
    /// `S_w r(ω)`, the flow time of the return.
    pub roof_time: f64,
    /// Number of `1 <= m <= w` with `S_m φ = 0`.
    pub zero_count: u64,
    pub capped: bool,
    /// `ν(C_{-q,q'}(ω))` of the window that was scanned for.
    pub window_measure: f64,
}

impl ReturnSample {
    /// `ν(C) √w`, the quantity with the `σ_φ E/|N|` limit.
    pub fn normalized(&self) -> f64 {
        self.window_measure * (self.w as f64).sqrt()
    }
}

/// Path distributed by `ν(· | C)`: the window is fixed to the cylinder word,
/// forward coordinates follow the chain and backward coordinates the
/// time-reversed chain.
pub fn sample_conditioned(model: &GibbsModel, cyl: &Cylinder, rng: StreamRng) -> Result<SymbolPath> {
    if model.cylinder_measure(cyl) <= 0.0 {
        return Err(Error::ZeroMeasure);
    }
    Ok(SymbolPath::with_window(model.law(), cyl.left(), cyl.word(), rng))
}

/// Reference scan on a stored path, written directly from the definition.
/// Keeps every generated coordinate; use
/// [`cylinder_return_time_streaming`] for long scans.
pub fn cylinder_return_time(system: &SuspensionSystem, path: &mut SymbolPath, q: usize, q_prime: usize, cap: u64) -> ReturnSample {
    assert!(cap >= 1);
    let word = path.window(-(q as i64), q_prime as i64 + 1);
    let window_measure = system.model().word_measure(&word);
    let cyl = Cylinder::new(system.model().shift(), q, q_prime, word).expect("a path spells admissible words");
    let mut sum = 0i64;
    let mut roof_time = 0.0;
    let mut zero_count = 0;
    for m in 1..=cap {
        let k = m as i64 - 1;
        sum += system.cocycle_at(path, k);
        roof_time += system.roof_at(path, k);
        if sum == 0 {
            zero_count += 1;
            if cylinder_contains(path, m as i64, &cyl) {
                return ReturnSample { w: m, roof_time, zero_count, capped: false, window_measure };
            }
        }
    }
    ReturnSample { w: cap, roof_time, zero_count, capped: true, window_measure }
}

/// Same scan as [`cylinder_return_time`], bit for bit, but keeps only a
/// small ring of recent symbols.
pub fn cylinder_return_time_streaming(
    system: &SuspensionSystem,
    mut path: SymbolPath,
    q: usize,
    q_prime: usize,
    cap: u64,
) -> ReturnSample {
    assert!(cap >= 1);
    let target = path.window(-(q as i64), q_prime as i64 + 1);
    let window_measure = system.model().word_measure(&target);
    let tables = system.tables();
    let width = tables.width as i64;
    let (q, q_prime) = (q as i64, q_prime as i64);

    let size = ((q + q_prime + width + 2) as usize).next_power_of_two();
    let mask = size - 1;
    let slot = |i: i64| (i as usize) & mask;
    let mut ring = vec![0 as Symbol; size];
    let mut stream = path.into_stream(-q);
    let mut fetched = -q;
    let mut fetch = |upto: i64, ring: &mut Vec<Symbol>| {
        while fetched <= upto {
            ring[slot(fetched)] = stream.next().expect("infinite stream");
            fetched += 1;
        }
    };

    fetch(width - 1, &mut ring);
    let mut code = (0..width).fold(0, |c, i| c * tables.alphabet + ring[slot(i)] as usize);
    let mut sum = 0i64;
    let mut roof_time = 0.0;
    let mut zero_count = 0;
    for m in 1..=cap {
        let k = m as i64 - 1;
        if k > 0 {
            fetch(k + width - 1, &mut ring);
            code = tables.roll(code, ring[slot(k + width - 1)]);
        }
        sum += tables.cocycle[code];
        roof_time += tables.roof[code];
        if sum == 0 {
            zero_count += 1;
            let m = m as i64;
            fetch(m + q_prime, &mut ring);
            if target.iter().enumerate().all(|(j, &a)| ring[slot(m - q + j as i64)] == a) {
                return ReturnSample { w: m as u64, roof_time, zero_count, capped: false, window_measure };
            }
        }
    }
    ReturnSample { w: cap, roof_time, zero_count, capped: true, window_measure }
}

/// How the starting point of each trial is drawn.
#[derive(Debug, Clone)]
pub enum StartLaw {
    /// `ν`: the scanned window is the path's own.
    Stationary,
    /// `ν(· | C)`.
    Conditioned(Cylinder),
}

impl StartLaw {
    fn path(&self, model: &GibbsModel, rng: StreamRng) -> Result<SymbolPath> {
        match self {
            StartLaw::Stationary => Ok(SymbolPath::new(model.law(), rng)),
            StartLaw::Conditioned(cyl) => sample_conditioned(model, cyl, rng),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnBatch {
    pub q: usize,
    pub q_prime: usize,
    pub cap: u64,
    pub samples: Vec<ReturnSample>,
    pub capped_fraction: f64,
}

impl ReturnBatch {
    /// `ν(C_{-q,q'}(ω)) √w` per trial, right-censored at the smallest
    /// value a capped trial could report.
    pub fn normalized(&self) -> Result<EmpiricalDistribution> {
        let values: Vec<f64> = self.samples.iter().map(ReturnSample::normalized).collect();
        let bound = self
            .samples
            .iter()
            .map(|s| s.window_measure * (self.cap as f64).sqrt())
            .fold(f64::INFINITY, f64::min);
        EmpiricalDistribution::new(values, Some(bound))
    }
}

/// Independent scans for `trials` starting points; trial `i` uses stream
/// `stream_base + i` of `seed`, so the batch is the same for any thread count.
pub fn return_time_batch_with(
    system: &SuspensionSystem,
    start: &StartLaw,
    q: usize,
    q_prime: usize,
    trials: usize,
    cap: u64,
    seed: u64,
    stream_base: u64,
) -> Result<ReturnBatch> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if cap == 0 {
        return Err(Error::InvalidArgument("cap must be at least 1".into()));
    }
    // The scanned window may be wider than the conditioning cylinder; its
    // remaining coordinates are then random.
    if let StartLaw::Conditioned(cyl) = start {
        if system.model().cylinder_measure(cyl) <= 0.0 {
            return Err(Error::ZeroMeasure);
        }
    }
    let samples: Vec<ReturnSample> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let path = start.path(system.model(), substream(seed, stream_base + trial))?;
            Ok(cylinder_return_time_streaming(system, path, q, q_prime, cap))
        })
        .collect::<Result<_>>()?;
    let capped = samples.iter().filter(|s| s.capped).count();
    Ok(ReturnBatch { q, q_prime, cap, capped_fraction: capped as f64 / trials as f64, samples })
}

/// Returns to `cyl` itself for paths conditioned on `cyl`.
pub fn return_time_batch(system: &SuspensionSystem, cyl: &Cylinder, trials: usize, cap: u64, seed: u64) -> Result<ReturnBatch> {
    return_time_batch_with(system, &StartLaw::Conditioned(cyl.clone()), cyl.left(), cyl.right(), trials, cap, seed, 0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowRatioReport {
    pub w_threshold: u64,
    pub count: usize,
    pub mean_ratio: f64,
    pub mean_abs_deviation: f64,
    pub max_abs_deviation: f64,
}

/// `roof_time / (w ∫ r dν)` over uncapped samples with `w >= w_threshold`.
pub fn flow_return_ratio(system: &SuspensionSystem, samples: &[ReturnSample], w_threshold: u64) -> Result<FlowRatioReport> {
    let mean_roof = system.mean_roof();
    let ratios: Vec<f64> = samples
        .iter()
        .filter(|s| !s.capped && s.w >= w_threshold)
        .map(|s| s.roof_time / (s.w as f64 * mean_roof))
        .collect();
    if ratios.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = ratios.len() as f64;
    Ok(FlowRatioReport {
        w_threshold,
        count: ratios.len(),
        mean_ratio: ratios.iter().sum::<f64>() / n,
        mean_abs_deviation: ratios.iter().map(|r| (r - 1.0).abs()).sum::<f64>() / n,
        max_abs_deviation: ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub q: usize,
    pub trials: usize,
    /// Median of `log √τ_{q,q}`; capped trials count as `+∞`.
    pub median_log_sqrt_tau: f64,
    /// `2q + 1`.
    pub q_width: usize,
    pub capped_fraction: f64,
    /// `e^{2 h (2q+1)}`, the scale the cap has to clear.
    pub expected_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentSweep {
    pub rows: Vec<SweepRow>,
    pub regression: Regression,
    pub entropy: f64,
    /// `|slope - h| / h`.
    pub relative_error: f64,
    pub lyapunov: LyapunovReport,
    /// Predicted ε-exponent `entropy_flow (1/λ_u - 1/λ_s)`.
    pub predicted_dimension: f64,
    /// Deviation of the Lyapunov report from its closed-form relations.
    pub dimension_residual: f64,
}

/// Median `log √τ_{q,q}` for stationary starts at each `q`, regressed on
/// `2q + 1`; the slope estimates the entropy.
pub fn exponent_sweep(
    system: &SuspensionSystem,
    q_list: &[usize],
    trials: usize,
    cap: u64,
    seed: u64,
    max_capped_fraction: f64,
) -> Result<ExponentSweep> {
    if q_list.len() < 2 || q_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("q list must be strictly increasing with at least two entries".into()));
    }
    let entropy = system.model().entropy();
    let mut rows = Vec::new();
    for &q in q_list {
        let batch = return_time_batch_with(
            system,
            &StartLaw::Stationary,
            q,
            q,
            trials,
            cap,
            seed,
            block_stream(q as u32, 0),
        )?;
        if batch.capped_fraction > max_capped_fraction {
            return Err(Error::CapTooSmall { q, fraction: batch.capped_fraction, limit: max_capped_fraction });
        }
        let logs: Vec<f64> = batch
            .samples
            .iter()
            .map(|s| if s.capped { f64::INFINITY } else { 0.5 * (s.w as f64).ln() })
            .collect();
        rows.push(SweepRow {
            q,
            trials,
            median_log_sqrt_tau: median(&logs).expect("trials >= 1"),
            q_width: 2 * q + 1,
            capped_fraction: batch.capped_fraction,
            expected_scale: (2.0 * entropy * (2 * q + 1) as f64).exp(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.q_width as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_log_sqrt_tau).collect();
    let regression = regression_slope(&xs, &ys)?;
    let lyapunov = system.lyapunov_exact();
    Ok(ExponentSweep {
        rows,
        relative_error: (regression.slope - entropy).abs() / entropy,
        regression,
        entropy,
        predicted_dimension: lyapunov.dimension,
        dimension_residual: lyapunov.consistency_residual(),
        lyapunov,
    })
}

/// Both sides of the last-passage decomposition of `D`.
#[derive(Debug, Clone, Serialize)]
pub struct DvoretzkyResidual {
    pub n: usize,
    /// `ν(D)`.
    pub lhs: f64,
    /// `Σ_{r=0}^{n} ν(D ∩ {S_r φ = 0} ∩ σ^{-r}(A ∩ {τ_A > n - r}))`.
    pub rhs: f64,
    /// `ν(D ∩ {no r <= n with S_r φ = 0 and σ^r ω ∈ A})`; zero when `D ⊆ A`.
    pub no_visit: f64,
    /// `|lhs - rhs - no_visit|`.
    pub residual: f64,
    /// `residual / lhs`.
    pub relative: f64,
    /// The individual terms, indexed by the last passage `r`.
    #[serde(skip)]
    pub terms: Vec<f64>,
}

/// Geometry of the last-passage dynamic program: which coordinates are read
/// when, and how long the sliding window must be.
#[derive(Debug, Clone, Copy)]
struct PassagePlan {
    /// The `A`-test for time `s` and the cocycle term `φ(σ^s ω)` are applied
    /// once coordinate `s + lag` is known.
    lag: i64,
    window: usize,
    first: i64,
    last: i64,
}

impl PassagePlan {
    fn new(memory: usize, depth: usize, d: &Cylinder, a: &Cylinder, n: usize) -> Self {
        let lag = (a.right() as i64).max(depth as i64 - 1);
        let window = ((lag as usize) + a.left() + 1).max(d.len()).max(memory);
        let first = -(d.left().max(a.left()) as i64);
        let last = (n as i64 + lag).max(d.right() as i64).max(first + window as i64 - 1);
        PassagePlan { lag, window, first, last }
    }
}

/// Exact evaluation of the last-passage identity by a dynamic program over
/// (window of the last few symbols, partial sum, last passage so far).
pub fn dvoretzky_check(model: &GibbsModel, cocycle: &Cocycle, d: &Cylinder, a: &Cylinder, n: usize) -> Result<DvoretzkyResidual> {
    model.edge_values(cocycle)?;
    let shift = model.shift();
    let alphabet = shift.alphabet_size();
    let plan = PassagePlan::new(model.memory(), cocycle.depth(), d, a, n);
    let w = plan.window;
    let windows = alphabet
        .checked_pow(w as u32)
        .ok_or(Error::SizeOverflow { requested: u128::MAX, cap: DVORETZKY_STATE_CAP })?;
    let bound = n as i64 * cocycle.max_abs();
    let sums = (2 * bound + 1) as usize;
    let lasts = n + 2;
    let size = windows as u128 * sums as u128 * lasts as u128;
    if size > DVORETZKY_STATE_CAP as u128 {
        return Err(Error::SizeOverflow { requested: size, cap: DVORETZKY_STATE_CAP });
    }
    let idx = |win: usize, sum: i64, last: usize| (win * sums + (sum + bound) as usize) * lasts + last;
    let decode = |win: usize| -> Vec<Symbol> {
        let mut word = vec![0; w];
        let mut c = win;
        for slot in word.iter_mut().rev() {
            *slot = (c % alphabet) as Symbol;
            c /= alphabet;
        }
        word
    };

    // Decoded windows, their admissibility and the one-step transition
    // probabilities of the chain given the window.
    let words: Vec<Vec<Symbol>> = (0..windows).map(decode).collect();
    let admissible: Vec<bool> = words.iter().map(|wd| shift.is_admissible(wd)).collect();
    let m = model.memory();
    let step: Vec<Vec<f64>> = words
        .iter()
        .zip(&admissible)
        .map(|(wd, &ok)| {
            (0..alphabet as Symbol)
                .map(|s| {
                    if !ok || !shift.allows(wd[w - 1], s) {
                        return 0.0;
                    }
                    let from = model.state_index(&wd[w - m..]).expect("admissible state");
                    let mut next = wd[w - m + 1..].to_vec();
                    next.push(s);
                    let to = model.state_index(&next).expect("admissible state");
                    model.transition(from, to)
                })
                .collect()
        })
        .collect();

    let mut mass = vec![0.0; windows * sums * lasts];
    for (win, wd) in words.iter().enumerate() {
        if admissible[win] {
            mass[idx(win, 0, 0)] = model.word_measure(wd);
        }
    }

    // Events that become decidable once coordinate `p` is known; the window
    // holds coordinates `base .. base + w`.
    let apply_events = |mass: &mut Vec<f64>, p: i64, base: i64| {
        let s = p - plan.lag;
        let test_a = (0..=n as i64).contains(&s);
        let add_phi = (0..n as i64).contains(&s);
        let filter_d = p == d.right() as i64;
        if !(test_a || add_phi || filter_d) {
            return;
        }
        let mut next = vec![0.0; mass.len()];
        for win in 0..windows {
            if !admissible[win] {
                continue;
            }
            let wd = &words[win];
            let at = |c: i64| wd[(c - base) as usize];
            if filter_d && !(0..d.len()).all(|j| at(j as i64 - d.left() as i64) == d.word()[j]) {
                continue;
            }
            let in_a = test_a && (0..a.len()).all(|j| at(s - a.left() as i64 + j as i64) == a.word()[j]);
            let phi = if add_phi {
                let word: Vec<Symbol> = (0..cocycle.depth() as i64).map(|j| at(s + j)).collect();
                cocycle.value(&word)
            } else {
                0
            };
            for sum in -bound..=bound {
                for last in 0..lasts {
                    let v = mass[idx(win, sum, last)];
                    if v == 0.0 {
                        continue;
                    }
                    let last = if in_a && sum == 0 { s as usize + 1 } else { last };
                    next[idx(win, sum + phi, last)] += v;
                }
            }
        }
        *mass = next;
    };

    let first_full = plan.first + w as i64 - 1;
    for p in plan.first..=first_full {
        apply_events(&mut mass, p, plan.first);
    }
    let high = windows / alphabet;
    for p in first_full + 1..=plan.last {
        let mut next = vec![0.0; mass.len()];
        for win in 0..windows {
            if !admissible[win] {
                continue;
            }
            for (s, &prob) in step[win].iter().enumerate() {
                if prob == 0.0 {
                    continue;
                }
                let to = (win % high) * alphabet + s;
                for sum in -bound..=bound {
                    for last in 0..lasts {
                        let v = mass[idx(win, sum, last)];
                        if v != 0.0 {
                            next[idx(to, sum, last)] += v * prob;
                        }
                    }
                }
            }
        }
        mass = next;
        apply_events(&mut mass, p, p - w as i64 + 1);
    }

    let mut terms = vec![0.0; n + 1];
    let mut no_visit = 0.0;
    for win in 0..windows {
        for sum in -bound..=bound {
            no_visit += mass[idx(win, sum, 0)];
            for (r, t) in terms.iter_mut().enumerate() {
                *t += mass[idx(win, sum, r + 1)];
            }
        }
    }
    let lhs = model.cylinder_measure(d);
    let rhs: f64 = terms.iter().sum();
    let residual = (lhs - rhs - no_visit).abs();
    Ok(DvoretzkyResidual { n, lhs, rhs, no_visit, residual, relative: residual / lhs, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::ShiftSpace;
    use crate::suspension::constant_expansion;
    use crate::thermo::{build_gibbs, Potential};
    use std::f64::consts::LN_2;

    fn trinomial() -> SuspensionSystem {
        let shift = ShiftSpace::full(3).unwrap();
        let (u, s) = constant_expansion(&shift, LN_2);
        SuspensionSystem::new(
            &shift,
            &Potential::constant(&shift, 0.0),
            Potential::per_symbol(&shift, &[1.0, 2.0, 1.5]).unwrap(),
            u,
            s,
            Cocycle::per_symbol(&shift, &[-1, 0, 1]).unwrap(),
        )
        .unwrap()
    }

    fn forced(system: &SuspensionSystem, q: usize, word: &[Symbol]) -> SymbolPath {
        SymbolPath::with_window(system.model().law(), q, word, substream(0, 0))
    }

    #[test]
    fn hand_checked_returns() {
        let sys = trinomial();
        let mut p = forced(&sys, 0, &[1, 1]);
        assert_eq!(cylinder_return_time(&sys, &mut p, 0, 0, 10).w, 1);
        let mut p = forced(&sys, 0, &[0, 2, 0]);
        let r = cylinder_return_time(&sys, &mut p, 0, 0, 10);
        assert_eq!((r.w, r.zero_count, r.capped), (2, 1, false));
        assert_eq!(r.roof_time, 1.0 + 1.5);
        let mut p = forced(&sys, 1, &[0, 2, 0, 2]);
        assert_eq!(cylinder_return_time(&sys, &mut p, 1, 0, 10).w, 2);
        let mut p = forced(&sys, 0, &[0, 0, 0]);
        let r = cylinder_return_time(&sys, &mut p, 0, 0, 1);
        assert!(r.capped && r.w == 1);
    }

    #[test]
    fn streaming_matches_stored_bit_for_bit() {
        let sys = trinomial();
        for trial in 0..200 {
            for (q, qp) in [(0, 0), (1, 1), (2, 0), (0, 2)] {
                let path = SymbolPath::new(sys.model().law(), substream(9, trial));
                let mut stored = path.clone();
                let a = cylinder_return_time(&sys, &mut stored, q, qp, 20_000);
                let b = cylinder_return_time_streaming(&sys, path, q, qp, 20_000);
                assert_eq!(a.w, b.w);
                assert_eq!(a.capped, b.capped);
                assert_eq!(a.zero_count, b.zero_count);
                assert_eq!(a.roof_time.to_bits(), b.roof_time.to_bits());
            }
        }
    }

    #[test]
    fn returns_are_minimal() {
        let sys = trinomial();
        for trial in 0..100 {
            let mut path = SymbolPath::new(sys.model().law(), substream(10, trial));
            let r = cylinder_return_time(&sys, &mut path, 1, 1, 1000);
            if r.capped {
                continue;
            }
            let word = path.window(-1, 2);
            let cyl = Cylinder::new(sys.model().shift(), 1, 1, word).unwrap();
            let mut sum = 0;
            for m in 1..=r.w as i64 {
                sum += sys.cocycle_at(&mut path, m - 1);
                let hit = sum == 0 && cylinder_contains(&mut path, m, &cyl);
                assert_eq!(hit, m == r.w as i64);
            }
            assert!(r.roof_time >= r.w as f64 * 1.0 && r.roof_time <= r.w as f64 * 2.0);
        }
    }

    #[test]
    fn conditioned_paths_carry_the_window() {
        let sys = trinomial();
        let cyl = Cylinder::new(sys.model().shift(), 1, 1, vec![2, 0, 1]).unwrap();
        for trial in 0..50 {
            let mut p = sample_conditioned(sys.model(), &cyl, substream(1, trial)).unwrap();
            assert!(cylinder_contains(&mut p, 0, &cyl));
        }
    }

    #[test]
    fn cap_one_batch() {
        let sys = trinomial();
        let cyl = Cylinder::new(sys.model().shift(), 0, 0, vec![1]).unwrap();
        let batch = return_time_batch(&sys, &cyl, 200, 1, 3).unwrap();
        assert!(batch.samples.iter().all(|s| s.w == 1));
        let again = return_time_batch(&sys, &cyl, 200, 1, 3).unwrap();
        assert_eq!(batch.capped_fraction, again.capped_fraction);
    }

    #[test]
    fn constant_roof_ratio_is_one() {
        let shift = ShiftSpace::full(3).unwrap();
        let (u, s) = constant_expansion(&shift, LN_2);
        let sys = SuspensionSystem::new(
            &shift,
            &Potential::constant(&shift, 0.0),
            Potential::constant(&shift, 0.75),
            u,
            s,
            Cocycle::per_symbol(&shift, &[-1, 0, 1]).unwrap(),
        )
        .unwrap();
        let cyl = Cylinder::new(&shift, 0, 0, vec![0]).unwrap();
        let batch = return_time_batch(&sys, &cyl, 100, 10_000, 4).unwrap();
        let r = flow_return_ratio(&sys, &batch.samples, 1).unwrap();
        assert!(r.max_abs_deviation < 1e-12, "{r:?}");
    }

    /// Direct evaluation over every word on the coordinates the identity
    /// reads.
    fn brute_force(model: &GibbsModel, phi: &Cocycle, d: &Cylinder, a: &Cylinder, n: usize) -> (Vec<f64>, f64) {
        let plan = PassagePlan::new(model.memory(), phi.depth(), d, a, n);
        let len = (plan.last - plan.first + 1) as usize;
        let words = model.shift().enumerate_words(len, 1 << 22).unwrap();
        let mut terms = vec![0.0; n + 1];
        let mut none = 0.0;
        for word in words {
            let at = |c: i64| word[(c - plan.first) as usize];
            if !(0..d.len()).all(|j| at(j as i64 - d.left() as i64) == d.word()[j]) {
                continue;
            }
            let nu = model.word_measure(&word);
            let mut sum = 0;
            let mut last = None;
            for s in 0..=n as i64 {
                if sum == 0 && (0..a.len()).all(|j| at(s - a.left() as i64 + j as i64) == a.word()[j]) {
                    last = Some(s as usize);
                }
                if s < n as i64 {
                    let w: Vec<Symbol> = (0..phi.depth() as i64).map(|j| at(s + j)).collect();
                    sum += phi.value(&w);
                }
            }
            match last {
                Some(r) => terms[r] += nu,
                None => none += nu,
            }
        }
        (terms, none)
    }

    #[test]
    fn dvoretzky_matches_enumeration() {
        let full2 = ShiftSpace::full(2).unwrap();
        let bern = build_gibbs(&full2, &Potential::constant(&full2, -LN_2)).unwrap();
        let walk = Cocycle::per_symbol(&full2, &[1, -1]).unwrap();
        let ca = Cylinder::new(&full2, 0, 0, vec![0]).unwrap();
        for n in [3, 12] {
            let r = dvoretzky_check(&bern, &walk, &ca, &ca, n).unwrap();
            assert_eq!(r.no_visit, 0.0);
            assert!(r.relative <= 1e-13, "{r:?}");
            let (terms, none) = brute_force(&bern, &walk, &ca, &ca, n);
            assert_eq!(none, 0.0);
            for (x, y) in r.terms.iter().zip(&terms) {
                assert!((x - y).abs() <= 1e-15);
            }
        }

        let golden = ShiftSpace::new(2, &[vec![1, 1], vec![1, 0]]).unwrap();
        let pot = Potential::from_fn(&golden, 2, |w| 0.3 * w[0] as f64 - 0.2 * w[1] as f64).unwrap();
        let model = build_gibbs(&golden, &pot).unwrap();
        let phi = Cocycle::new(&golden, 2, vec![(vec![0, 0], 0), (vec![0, 1], 1), (vec![1, 0], -1)]).unwrap();
        let d = Cylinder::new(&golden, 1, 0, vec![1, 0]).unwrap();
        let a = Cylinder::new(&golden, 0, 1, vec![0, 1]).unwrap();
        for n in 0..7 {
            let r = dvoretzky_check(&model, &phi, &d, &a, n).unwrap();
            let (terms, none) = brute_force(&model, &phi, &d, &a, n);
            assert!((r.no_visit - none).abs() <= 1e-14);
            for (x, y) in r.terms.iter().zip(&terms) {
                assert!((x - y).abs() <= 1e-14, "n={n}: {:?} vs {terms:?}", r.terms);
            }
            assert!(r.relative <= 1e-12);
        }
    }

    #[test]
    fn dvoretzky_with_zero_cocycle() {
        let full3 = ShiftSpace::full(3).unwrap();
        let model = build_gibbs(&full3, &Potential::constant(&full3, 0.0)).unwrap();
        let zero = Cocycle::constant(&full3, 0);
        let d = Cylinder::new(&full3, 0, 1, vec![0, 2]).unwrap();
        let a = Cylinder::new(&full3, 1, 0, vec![2, 1]).unwrap();
        let r = dvoretzky_check(&model, &zero, &d, &a, 5).unwrap();
        let (terms, none) = brute_force(&model, &zero, &d, &a, 5);
        assert!((r.no_visit - none).abs() < 1e-15 && r.relative < 1e-12);
        assert!(r.terms.iter().zip(&terms).all(|(x, y)| (x - y).abs() < 1e-15));
    }
}
