use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::function::{word_code, LocallyConstant, Potential};
use crate::error::{Error, Result};
use crate::sft::{Cylinder, PathLaw, ShiftSpace, Symbol, DEFAULT_CYLINDER_CAP};
use crate::rng::StreamRng;

/// Convergence tolerance of the Perron power iteration.
pub const POWER_TOLERANCE: f64 = 1e-14;
/// Iteration budget of the Perron power iteration.
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// One allowed transition of the recoded chain.
#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// The `memory + 1` symbols spelled by the transition.
    pub word: Vec<Symbol>,
}

/// Gibbs (Markov) equilibrium measure of a locally constant potential.
///
/// The shift is recoded to the chain on admissible `memory`-words; a
/// transition `u -> v` spells the `(memory+1)`-word `u ++ last(v)`. Depth-`d`
/// potentials need `memory >= d - 1`; depth one is treated as depth two.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    shift: ShiftSpace,
    potential: Potential,
    memory: usize,
    states: Vec<Vec<Symbol>>,
    lookup: Vec<usize>,
    edges: Vec<Edge>,
    transition: Vec<f64>,
    stationary: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    spectral_radius: f64,
    pressure: f64,
    entropy: f64,
    gibbs_constant: f64,
    law: Arc<MarkovLaw>,
}

/// Serializable summary of a [`GibbsModel`].
#[derive(Debug, Clone, Serialize)]
pub struct GibbsSummary {
    pub alphabet: usize,
    pub memory: usize,
    pub states: Vec<String>,
    pub pressure: f64,
    pub entropy: f64,
    pub stationary: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub gibbs_constant: f64,
    pub mean_potential: f64,
    pub variational_residual: f64,
    pub stationarity_residual: f64,
}

/// Builds the Gibbs measure of `potential`, recoding to the smallest memory
/// that accommodates it.
pub fn build_gibbs(shift: &ShiftSpace, potential: &Potential) -> Result<GibbsModel> {
    GibbsModel::with_memory(shift, potential, potential.depth().saturating_sub(1).max(1))
}

impl GibbsModel {
    /// Like [`build_gibbs`] but on `memory`-words, so that functions of
    /// depth up to `memory + 1` can be evaluated on transitions.
    pub fn with_memory(shift: &ShiftSpace, potential: &Potential, memory: usize) -> Result<Self> {
        let memory = memory.max(1);
        if potential.depth() > memory + 1 {
            return Err(Error::InvalidArgument(format!(
                "potential depth {} needs memory >= {}",
                potential.depth(),
                potential.depth() - 1
            )));
        }
        if potential.alphabet_size() != shift.alphabet_size() {
            return Err(Error::InvalidArgument("potential alphabet differs from the shift".into()));
        }
        let n = shift.alphabet_size();
        let states = shift.enumerate_words(memory, DEFAULT_CYLINDER_CAP)?;
        let k = states.len();
        let mut lookup = vec![usize::MAX; n.pow(memory as u32)];
        for (i, s) in states.iter().enumerate() {
            lookup[word_code(s, n)] = i;
        }
        let mut edges = Vec::new();
        let mut weights = vec![0.0; k * k];
        for (i, s) in states.iter().enumerate() {
            let last = *s.last().expect("memory >= 1");
            for sym in 0..n as Symbol {
                if !shift.allows(last, sym) {
                    continue;
                }
                let mut word = s.clone();
                word.push(sym);
                let j = lookup[word_code(&word[1..], n)];
                weights[i * k + j] = potential.value(&word).exp();
                edges.push(Edge { from: i, to: j, word });
            }
        }

        let (rho, right) = perron_vector(&weights, k, false)?;
        let (_, left) = perron_vector(&weights, k, true)?;

        let mut transition = vec![0.0; k * k];
        for e in &edges {
            transition[e.from * k + e.to] = weights[e.from * k + e.to] * right[e.to] / (rho * right[e.from]);
        }
        for row in transition.chunks_mut(k) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        let mut stationary: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l * r).collect();
        let total: f64 = stationary.iter().sum();
        stationary.iter_mut().for_each(|p| *p /= total);
        // A few sweeps of π <- πP remove the rounding left by the
        // eigenvector product.
        for _ in 0..4 {
            let mut next = vec![0.0; k];
            for e in &edges {
                next[e.to] += stationary[e.from] * transition[e.from * k + e.to];
            }
            let s: f64 = next.iter().sum();
            stationary = next.into_iter().map(|p| p / s).collect();
        }

        let entropy = -edges
            .iter()
            .map(|e| {
                let p = transition[e.from * k + e.to];
                if p > 0.0 { stationary[e.from] * p * p.ln() } else { 0.0 }
            })
            .sum::<f64>();

        let mut model = GibbsModel {
            shift: shift.clone(),
            potential: potential.clone(),
            memory,
            states,
            lookup,
            edges,
            transition,
            stationary,
            left,
            right,
            spectral_radius: rho,
            pressure: rho.ln(),
            entropy,
            gibbs_constant: 1.0,
            law: Arc::new(MarkovLaw::placeholder()),
        };
        model.gibbs_constant = model.analytic_gibbs_constant()?;
        model.law = Arc::new(MarkovLaw::new(&model));
        Ok(model)
    }

    pub fn shift(&self) -> &ShiftSpace {
        &self.shift
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Length of the words the chain runs on.
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn states(&self) -> &[Vec<Symbol>] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, word: &[Symbol]) -> Option<usize> {
        if word.len() != self.memory || !self.shift.is_admissible(word) {
            return None;
        }
        Some(self.lookup[word_code(word, self.shift.alphabet_size())])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.states.len() + to]
    }

    /// Row-major transition matrix.
    pub fn transition_matrix(&self) -> &[f64] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// Analytic constant `k` of the Gibbs bounds, from the Perron vectors.
    pub fn gibbs_constant(&self) -> f64 {
        self.gibbs_constant
    }

    /// Sampling law of the stationary chain, used by symbol paths.
    pub fn law(&self) -> Arc<dyn PathLaw> {
        self.law.clone()
    }

    /// Weight `π_from · P(from, to)` of an edge.
    pub fn edge_mass(&self, e: &Edge) -> f64 {
        self.stationary[e.from] * self.transition(e.from, e.to)
    }

    /// Values of `f` on the edges, in [`edges`](Self::edges) order.
    pub fn edge_values<V: Copy>(&self, f: &LocallyConstant<V>) -> Result<Vec<V>> {
        self.check_depth(f.depth())?;
        Ok(self.edges.iter().map(|e| f.value(&e.word)).collect())
    }

    pub(crate) fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.memory + 1 {
            return Err(Error::InvalidArgument(format!(
                "function depth {depth} exceeds model memory {} + 1",
                self.memory
            )));
        }
        Ok(())
    }

    /// `∫ f dν`.
    pub fn integrate(&self, f: &LocallyConstant<f64>) -> Result<f64> {
        let values = self.edge_values(f)?;
        Ok(self.edges.iter().zip(values).map(|(e, v)| self.edge_mass(e) * v).sum())
    }

    /// `∫ φ dν` for an integer function.
    pub fn integrate_int(&self, f: &LocallyConstant<i64>) -> Result<f64> {
        let values = self.edge_values(f)?;
        Ok(self.edges.iter().zip(values).map(|(e, v)| self.edge_mass(e) * v as f64).sum())
    }

    /// Measure of the cylinder spelled by `word` (anchor offset is irrelevant
    /// by shift invariance).
    pub fn word_measure(&self, word: &[Symbol]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        if !self.shift.is_admissible(word) {
            return 0.0;
        }
        let m = self.memory;
        if word.len() < m {
            return self
                .states
                .iter()
                .zip(&self.stationary)
                .filter(|(s, _)| s.starts_with(word))
                .map(|(_, p)| p)
                .sum();
        }
        let n = self.shift.alphabet_size();
        let mut state = self.lookup[word_code(&word[..m], n)];
        let mut mass = self.stationary[state];
        for end in m + 1..=word.len() {
            let next = self.lookup[word_code(&word[end - m..end], n)];
            mass *= self.transition(state, next);
            state = next;
        }
        mass
    }

    /// `ν(C)`.
    pub fn cylinder_measure(&self, cyl: &Cylinder) -> f64 {
        self.word_measure(cyl.word())
    }

    /// `max_i |(πP)_i - π_i|`.
    pub fn stationarity_residual(&self) -> f64 {
        let k = self.states.len();
        let mut next = vec![0.0; k];
        for e in &self.edges {
            next[e.to] += self.edge_mass(e);
        }
        next.iter().zip(&self.stationary).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `max_i |Σ_j P_ij - 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.transition
            .chunks(self.states.len())
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `|h_ν - (P(h) - ∫ h dν)|`.
    pub fn variational_residual(&self) -> f64 {
        let mean = self.integrate(&self.potential).expect("potential fits the model");
        (self.entropy - (self.pressure - mean)).abs()
    }

    pub fn summary(&self) -> GibbsSummary {
        let k = self.states.len();
        GibbsSummary {
            alphabet: self.shift.alphabet_size(),
            memory: self.memory,
            states: self.states.iter().map(|s| crate::sft::word_to_string(s)).collect(),
            pressure: self.pressure,
            entropy: self.entropy,
            stationary: self.stationary.clone(),
            transition: self.transition.chunks(k).map(<[f64]>::to_vec).collect(),
            gibbs_constant: self.gibbs_constant,
            mean_potential: self.integrate(&self.potential).expect("potential fits the model"),
            variational_residual: self.variational_residual(),
            stationarity_residual: self.stationarity_residual(),
        }
    }

    /// Bound on `ν(C) / exp(S h - |C| P)` over all cylinders.
    ///
    /// For words of length `n >= m` the ratio equals
    /// `l_first r_last ρ^m e^{-tail} / <l, r>`, where `tail` is the sum of the
    /// last `m` potential terms (which reach beyond the word); shorter words
    /// are bounded by enumeration.
    fn analytic_gibbs_constant(&self) -> Result<f64> {
        let m = self.memory as f64;
        let h_min = self.potential.min_value();
        let h_max = self.potential.max_value();
        let lr: f64 = self.left.iter().zip(&self.right).map(|(l, r)| l * r).sum();
        let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
        let hi = fold(&self.left, f64::max, 0.0) * fold(&self.right, f64::max, 0.0) * self.spectral_radius.powf(m)
            * (-m * h_min).exp()
            / lr;
        let lo = fold(&self.left, f64::min, f64::INFINITY)
            * fold(&self.right, f64::min, f64::INFINITY)
            * self.spectral_radius.powf(m)
            * (-m * h_max).exp()
            / lr;
        let mut k = hi.max(1.0 / lo);
        for len in 1..self.memory {
            for w in self.shift.enumerate_words(len, DEFAULT_CYLINDER_CAP)? {
                let base = self.word_measure(&w) * self.spectral_radius.powi(len as i32);
                let l = len as f64;
                k = k.max(base * (-l * h_min).exp()).max(1.0 / (base * (-l * h_max).exp()));
            }
        }
        Ok(k)
    }
}

/// Power iteration for the Perron eigenvalue and (max-normalized) vector of
/// a nonnegative primitive matrix; `transpose` selects the left vector.
fn perron_vector(m: &[f64], k: usize, transpose: bool) -> Result<(f64, Vec<f64>)> {
    let at = |i: usize, j: usize| if transpose { m[j * k + i] } else { m[i * k + j] };
    let mut v = vec![1.0; k];
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut next: Vec<f64> = (0..k).map(|i| (0..k).map(|j| at(i, j) * v[j]).sum()).collect();
        let norm = next.iter().copied().fold(0.0, f64::max);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::EigenFailure { iterations: 0 });
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta <= POWER_TOLERANCE {
            // Rayleigh-type estimate from the converged vector.
            let av: Vec<f64> = (0..k).map(|i| (0..k).map(|j| at(i, j) * v[j]).sum()).collect();
            let (num, den) = av.iter().zip(&v).fold((0.0, 0.0), |(n, d), (a, x)| (n + a * x, d + x * x));
            return Ok((num / den, v));
        }
    }
    Err(Error::EigenFailure { iterations: POWER_MAX_ITERATIONS })
}

/// Result of [`gibbs_bound_report`].
#[derive(Debug, Clone, Serialize)]
pub struct GibbsBoundReport {
    pub q_max: usize,
    pub words_checked: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1/min_ratio)`.
    pub empirical_k: f64,
    pub gibbs_constant: f64,
}

/// Extends `word` by `extra` symbols: periodically when that stays
/// admissible, otherwise with the lexicographically least admissible
/// continuation.
fn extend_word(shift: &ShiftSpace, word: &[Symbol], extra: usize) -> Vec<Symbol> {
    let mut periodic = word.to_vec();
    for i in 0..extra {
        periodic.push(word[i % word.len()]);
    }
    if shift.is_admissible(&periodic) {
        return periodic;
    }
    let mut out = word.to_vec();
    for _ in 0..extra {
        let last = *out.last().expect("non-empty");
        let next = (0..shift.alphabet_size() as Symbol)
            .find(|&s| shift.allows(last, s))
            .expect("no dead symbols");
        out.push(next);
    }
    out
}

/// Min and max over all cylinders with `q + q' + 1 <= q_max` of
/// `ν(C) / exp(Σ_{k=-q}^{q'} h(σ^k ω) - (q+q'+1) P)`.
///
/// The ratio depends only on the word, so each admissible word is evaluated
/// once (it stands for all of its `(q, q')` splits).
pub fn gibbs_bound_report(model: &GibbsModel, q_max: usize) -> Result<GibbsBoundReport> {
    let shift = model.shift();
    let h = model.potential();
    let mut total: u128 = 0;
    for len in 1..=q_max {
        total += shift.word_count(len);
    }
    if total > DEFAULT_CYLINDER_CAP as u128 {
        return Err(Error::SizeOverflow { requested: total, cap: DEFAULT_CYLINDER_CAP });
    }
    let extra = h.depth() - 1;
    let (mut lo, mut hi, mut count) = (f64::INFINITY, 0.0f64, 0);
    for len in 1..=q_max {
        for word in shift.enumerate_words(len, DEFAULT_CYLINDER_CAP)? {
            let point = extend_word(shift, &word, extra);
            let birkhoff: f64 = (0..len).map(|k| h.value(&point[k..])).sum();
            let log_ratio = model.word_measure(&word).ln() - (birkhoff - len as f64 * model.pressure());
            let ratio = log_ratio.exp();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            count += 1;
        }
    }
    Ok(GibbsBoundReport {
        q_max,
        words_checked: count,
        min_ratio: lo,
        max_ratio: hi,
        empirical_k: hi.max(1.0 / lo),
        gibbs_constant: model.gibbs_constant(),
    })
}

/// Stationary Markov law of a [`GibbsModel`] on symbol paths.
#[derive(Debug, Clone)]
pub struct MarkovLaw {
    alphabet: usize,
    memory: usize,
    lookup: Vec<usize>,
    states: Vec<Vec<Symbol>>,
    stationary: Vec<f64>,
    stationary_cdf: Vec<f64>,
    /// Per state: cumulative probabilities and (target state, appended symbol).
    forward: Vec<(Vec<f64>, Vec<(usize, Symbol)>)>,
    /// Per state: time-reversed chain, (source state, prepended symbol).
    backward: Vec<(Vec<f64>, Vec<(usize, Symbol)>)>,
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    let total = acc;
    out.iter_mut().for_each(|c| *c /= total);
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

#[inline]
fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

impl MarkovLaw {
    fn placeholder() -> Self {
        MarkovLaw {
            alphabet: 0,
            memory: 0,
            lookup: Vec::new(),
            states: Vec::new(),
            stationary: Vec::new(),
            stationary_cdf: Vec::new(),
            forward: Vec::new(),
            backward: Vec::new(),
        }
    }

    fn new(model: &GibbsModel) -> Self {
        let k = model.state_count();
        let mut forward = Vec::with_capacity(k);
        let mut backward = Vec::with_capacity(k);
        for i in 0..k {
            let out: Vec<&Edge> = model.edges.iter().filter(|e| e.from == i && model.transition(i, e.to) > 0.0).collect();
            forward.push((
                cumulative(out.iter().map(|e| model.transition(i, e.to))),
                out.iter().map(|e| (e.to, *e.word.last().unwrap())).collect(),
            ));
            let inc: Vec<&Edge> = model.edges.iter().filter(|e| e.to == i && model.transition(e.from, i) > 0.0).collect();
            backward.push((
                cumulative(inc.iter().map(|e| model.stationary[e.from] * model.transition(e.from, i))),
                inc.iter().map(|e| (e.from, e.word[0])).collect(),
            ));
        }
        MarkovLaw {
            alphabet: model.shift.alphabet_size(),
            memory: model.memory,
            lookup: model.lookup.clone(),
            states: model.states.clone(),
            stationary: model.stationary.clone(),
            stationary_cdf: cumulative(model.stationary.iter().copied()),
            forward,
            backward,
        }
    }
}

impl PathLaw for MarkovLaw {
    fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    fn memory(&self) -> usize {
        self.memory
    }

    fn state_of(&self, tail: &[Symbol]) -> usize {
        let idx = self.lookup[word_code(tail, self.alphabet)];
        assert!(idx != usize::MAX, "inadmissible chain state");
        idx
    }

    #[inline]
    fn step_forward(&self, state: usize, rng: &mut StreamRng) -> (usize, Symbol) {
        let (cdf, targets) = &self.forward[state];
        targets[pick(cdf, rng.random::<f64>())]
    }

    #[inline]
    fn step_backward(&self, state: usize, rng: &mut StreamRng) -> (usize, Symbol) {
        let (cdf, sources) = &self.backward[state];
        sources[pick(cdf, rng.random::<f64>())]
    }

    fn complete(&self, word: &[Symbol], rng: &mut StreamRng) -> Vec<Symbol> {
        let candidates: Vec<usize> = (0..self.states.len()).filter(|&i| self.states[i].starts_with(word)).collect();
        let cdf = cumulative(candidates.iter().map(|&i| self.stationary[i]));
        self.states[candidates[pick(&cdf, rng.random::<f64>())]].clone()
    }

    fn sample_start(&self, rng: &mut StreamRng) -> Vec<Symbol> {
        self.states[pick(&self.stationary_cdf, rng.random::<f64>())].clone()
    }
}
