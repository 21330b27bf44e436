//! Subshifts of finite type: transition matrices, admissible words,
//! cylinders and lazily realized bi-infinite symbol paths.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Symbols are small integers `0..alphabet_size`.
pub type Symbol = u8;

/// Default cap on the number of enumerated words or cylinders.
pub const DEFAULT_CYLINDER_CAP: usize = 1_000_000;

/// Largest supported alphabet.
pub const MAX_ALPHABET: usize = 26;

/// A primitive subshift of finite type `Σ_A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftSpace {
    alphabet_size: usize,
    transitions: Vec<bool>,
    primitivity_power: usize,
}

impl ShiftSpace {
    /// Validates a square 0/1 transition matrix and computes the smallest
    /// power with all entries positive.
    pub fn new(alphabet_size: usize, transitions: &[Vec<u8>]) -> Result<Self> {
        if alphabet_size == 0 || alphabet_size > MAX_ALPHABET {
            return Err(Error::MalformedMatrix(format!(
                "alphabet size {alphabet_size} outside 1..={MAX_ALPHABET}"
            )));
        }
        if transitions.len() != alphabet_size || transitions.iter().any(|r| r.len() != alphabet_size) {
            return Err(Error::MalformedMatrix(format!("expected a {alphabet_size}x{alphabet_size} matrix")));
        }
        if transitions.iter().flatten().any(|&v| v > 1) {
            return Err(Error::MalformedMatrix("entries must be 0 or 1".into()));
        }
        let flat: Vec<bool> = transitions.iter().flatten().map(|&v| v == 1).collect();
        let n = alphabet_size;
        for s in 0..n {
            if !(0..n).any(|j| flat[s * n + j]) {
                return Err(Error::DeadSymbol { symbol: s, side: "row" });
            }
            if !(0..n).any(|i| flat[i * n + s]) {
                return Err(Error::DeadSymbol { symbol: s, side: "column" });
            }
        }
        let bound = n * n - 2 * n + 2;
        let mut power = flat.clone();
        let mut exponent = 1;
        loop {
            if power.iter().all(|&b| b) {
                break;
            }
            if exponent >= bound {
                return Err(Error::NotPrimitive { bound });
            }
            power = bool_product(&power, &flat, n);
            exponent += 1;
        }
        Ok(ShiftSpace { alphabet_size, transitions: flat, primitivity_power: exponent })
    }

    /// The full shift on `n` symbols.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, &vec![vec![1; n]; n])
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn primitivity_power(&self) -> usize {
        self.primitivity_power
    }

    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        self.transitions[from as usize * self.alphabet_size + to as usize]
    }

    /// Transition matrix as rows of 0/1.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        self.transitions
            .chunks(self.alphabet_size)
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect()
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&s| (s as usize) < self.alphabet_size)
            && word.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// Number of admissible words of length `len`, saturating at `u128::MAX`.
    pub fn word_count(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let n = self.alphabet_size;
        let mut counts = vec![1u128; n];
        for _ in 1..len {
            let mut next = vec![0u128; n];
            for (i, &c) in counts.iter().enumerate() {
                for (j, slot) in next.iter_mut().enumerate() {
                    if self.transitions[i * n + j] {
                        *slot = slot.saturating_add(c);
                    }
                }
            }
            counts = next;
        }
        counts.into_iter().fold(0u128, |a, b| a.saturating_add(b))
    }

    /// All admissible words of length `len` in lexicographic order.
    pub fn enumerate_words(&self, len: usize, cap: usize) -> Result<Vec<Vec<Symbol>>> {
        let count = self.word_count(len);
        if count > cap as u128 {
            return Err(Error::SizeOverflow { requested: count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        if len == 0 {
            out.push(Vec::new());
            return Ok(out);
        }
        let mut word = Vec::with_capacity(len);
        self.extend_words(&mut word, len, &mut out);
        Ok(out)
    }

    fn extend_words(&self, word: &mut Vec<Symbol>, len: usize, out: &mut Vec<Vec<Symbol>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for s in 0..self.alphabet_size as Symbol {
            if word.last().is_none_or(|&p| self.allows(p, s)) {
                word.push(s);
                self.extend_words(word, len, out);
                word.pop();
            }
        }
    }

    /// All `(-q, q')`-cylinders, ordered lexicographically by word.
    pub fn enumerate_cylinders(&self, q: usize, q_prime: usize, cap: usize) -> Result<Vec<Cylinder>> {
        Ok(self
            .enumerate_words(q + q_prime + 1, cap)?
            .into_iter()
            .map(|word| Cylinder { left: q, right: q_prime, word })
            .collect())
    }
}

fn bool_product(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= b[k * n + j];
                }
            }
        }
    }
    out
}

/// Letter used for a symbol in configs and reports (`0 -> 'a'`).
pub fn symbol_letter(s: Symbol) -> char {
    (b'a' + s) as char
}

pub fn word_to_string(word: &[Symbol]) -> String {
    word.iter().map(|&s| symbol_letter(s)).collect()
}

/// Parses a word written with letters `a..z`.
pub fn parse_word(text: &str, alphabet_size: usize) -> Result<Vec<Symbol>> {
    text.chars()
        .map(|c| {
            let idx = (c as u32).wrapping_sub('a' as u32) as usize;
            if c.is_ascii_lowercase() && idx < alphabet_size {
                Ok(idx as Symbol)
            } else {
                Err(Error::InvalidArgument(format!("'{c}' in \"{text}\" is not a symbol of a {alphabet_size}-letter alphabet")))
            }
        })
        .collect()
}

/// The cylinder `C_{-q,q'}(a)`: sequences with `ω_i = a_i` for `-q <= i <= q'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cylinder {
    left: usize,
    right: usize,
    word: Vec<Symbol>,
}

impl Cylinder {
    pub fn new(shift: &ShiftSpace, q: usize, q_prime: usize, word: Vec<Symbol>) -> Result<Self> {
        if word.len() != q + q_prime + 1 {
            return Err(Error::InvalidArgument(format!(
                "cylinder ({q},{q_prime}) needs a word of length {}, got {}",
                q + q_prime + 1,
                word.len()
            )));
        }
        if !shift.is_admissible(&word) {
            return Err(Error::Inadmissible(word));
        }
        Ok(Cylinder { left: q, right: q_prime, word })
    }

    /// Left extent `q`.
    pub fn left(&self) -> usize {
        self.left
    }

    /// Right extent `q'`.
    pub fn right(&self) -> usize {
        self.right
    }

    /// Symbols at coordinates `-q..=q'`.
    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Symbol prescribed at coordinate `i`, if `i` lies in the window.
    pub fn symbol_at(&self, i: i64) -> Option<Symbol> {
        let idx = i + self.left as i64;
        (0..self.word.len() as i64).contains(&idx).then(|| self.word[idx as usize])
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C[-{},{}]({})", self.left, self.right, word_to_string(&self.word))
    }
}

/// Sampling law used to extend a [`SymbolPath`] in both directions.
///
/// The law is a Markov chain of order `memory()`: the next symbol depends on
/// the last `memory()` symbols. Forward and backward extensions must consume
/// exactly one `f64` from the stream per symbol so that stored and streamed
/// realizations of the same path coincide.
pub trait PathLaw: fmt::Debug + Send + Sync {
    fn alphabet_size(&self) -> usize;

    fn memory(&self) -> usize;

    /// Index of the chain state spelled by `tail` (`tail.len() == memory()`).
    fn state_of(&self, tail: &[Symbol]) -> usize;

    /// One forward step from chain state `state`; returns the new state and
    /// the appended symbol.
    fn step_forward(&self, state: usize, rng: &mut StreamRng) -> (usize, Symbol);

    /// One backward step: returns the new state and the prepended symbol.
    fn step_backward(&self, state: usize, rng: &mut StreamRng) -> (usize, Symbol);

    /// Extends `word` (shorter than `memory()`) forward to length `memory()`
    /// under the law conditioned on starting with `word`.
    fn complete(&self, word: &[Symbol], rng: &mut StreamRng) -> Vec<Symbol>;

    /// Stationary sample of the symbols at coordinates `0..memory()`.
    fn sample_start(&self, rng: &mut StreamRng) -> Vec<Symbol>;
}

/// A lazily realized point `ω = (ω_i)_{i∈ℤ}` of the shift.
///
/// Coordinates are generated on demand from the path's own random stream and
/// never change once generated.
#[derive(Debug, Clone)]
pub struct SymbolPath {
    /// Coordinates `0, 1, 2, ...`.
    forward: Vec<Symbol>,
    /// Coordinates `-1, -2, ...`.
    backward: Vec<Symbol>,
    law: Arc<dyn PathLaw>,
    rng: StreamRng,
}

impl SymbolPath {
    /// Stationary path.
    pub fn new(law: Arc<dyn PathLaw>, mut rng: StreamRng) -> Self {
        let forward = law.sample_start(&mut rng);
        SymbolPath { forward, backward: Vec::new(), law, rng }
    }

    /// Path whose coordinates `-q..` are preset to `word`; the rest is drawn
    /// from `law` conditioned on the window.
    pub fn with_window(law: Arc<dyn PathLaw>, q: usize, word: &[Symbol], mut rng: StreamRng) -> Self {
        assert!(word.len() > q, "window must cover coordinate 0");
        let mut backward: Vec<Symbol> = word[..q].iter().rev().copied().collect();
        let mut forward = word[q..].to_vec();
        if word.len() < law.memory() {
            let full = law.complete(word, &mut rng);
            forward.extend_from_slice(&full[word.len()..]);
        }
        backward.shrink_to_fit();
        SymbolPath { forward, backward, law, rng }
    }

    pub fn law(&self) -> &Arc<dyn PathLaw> {
        &self.law
    }

    /// Range `[lo, hi)` of coordinates generated so far.
    pub fn known_range(&self) -> (i64, i64) {
        (-(self.backward.len() as i64), self.forward.len() as i64)
    }

    fn stored(&self, i: i64) -> Symbol {
        if i >= 0 {
            self.forward[i as usize]
        } else {
            self.backward[(-i - 1) as usize]
        }
    }

    fn gather(&self, start: i64, len: usize) -> Vec<Symbol> {
        (start..start + len as i64).map(|i| self.stored(i)).collect()
    }

    /// `ω_i`, extending the path as needed.
    pub fn coordinate(&mut self, i: i64) -> Symbol {
        let m = self.law.memory();
        while i >= self.forward.len() as i64 {
            let hi = self.forward.len() as i64;
            let state = self.law.state_of(&self.gather(hi - m as i64, m));
            let (_, s) = self.law.step_forward(state, &mut self.rng);
            self.forward.push(s);
        }
        while i < -(self.backward.len() as i64) {
            let lo = -(self.backward.len() as i64);
            let state = self.law.state_of(&self.gather(lo, m));
            let (_, s) = self.law.step_backward(state, &mut self.rng);
            self.backward.push(s);
        }
        self.stored(i)
    }

    /// Coordinates `from..to`.
    pub fn window(&mut self, from: i64, to: i64) -> Vec<Symbol> {
        (from..to).map(|i| self.coordinate(i)).collect()
    }

    /// Turns the path into a forward stream of coordinates `start, start+1, ...`
    /// that stops storing symbols beyond the current frontier. The stream
    /// yields exactly the symbols [`SymbolPath::coordinate`] would have
    /// produced.
    pub fn into_stream(mut self, start: i64) -> PathStream {
        let m = self.law.memory();
        // Ensure the stored part reaches `start` and spans at least a state.
        let (lo, _) = self.known_range();
        if start < lo {
            self.coordinate(start);
        }
        let hi = self.forward.len() as i64;
        let state = self.law.state_of(&self.gather(hi - m as i64, m));
        PathStream { path: self, next: start, state }
    }
}

/// Forward stream over a [`SymbolPath`]; see [`SymbolPath::into_stream`].
#[derive(Debug)]
pub struct PathStream {
    path: SymbolPath,
    next: i64,
    state: usize,
}

impl PathStream {
    /// Coordinate of the next symbol the stream will yield.
    pub fn position(&self) -> i64 {
        self.next
    }
}

impl Iterator for PathStream {
    type Item = Symbol;

    #[inline]
    fn next(&mut self) -> Option<Symbol> {
        let i = self.next;
        self.next += 1;
        if i < self.path.forward.len() as i64 {
            return Some(self.path.stored(i));
        }
        let (state, s) = self.path.law.step_forward(self.state, &mut self.path.rng);
        self.state = state;
        Some(s)
    }
}

/// `d̂(ω, ω') = e^{-m}` where `m` is the largest integer `<= horizon` with
/// `ω_i = ω'_i` for all `|i| < m`.
pub fn shift_metric(p1: &mut SymbolPath, p2: &mut SymbolPath, horizon: usize) -> f64 {
    let mut m = horizon;
    for k in 0..horizon as i64 {
        if p1.coordinate(k) != p2.coordinate(k) || p1.coordinate(-k) != p2.coordinate(-k) {
            m = k as usize;
            break;
        }
    }
    (-(m as f64)).exp()
}

/// Whether `σ^m(ω)` lies in `cyl`, i.e. `ω_{m+i} = a_i` for `-q <= i <= q'`.
pub fn cylinder_contains(path: &mut SymbolPath, m: i64, cyl: &Cylinder) -> bool {
    let q = cyl.left() as i64;
    cyl.word().iter().enumerate().all(|(k, &a)| path.coordinate(m - q + k as i64) == a)
}
