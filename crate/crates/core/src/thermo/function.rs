use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{parse_word, word_to_string, ShiftSpace, Symbol};

/// A function on `Σ_A` that depends only on `ω_0 .. ω_{depth-1}`.
///
/// Used for potentials, roofs, expansion profiles (real valued) and
/// displacement cocycles (integer valued).
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstant<V> {
    alphabet: usize,
    depth: usize,
    /// Indexed by the base-`alphabet` code of the word; `None` for
    /// inadmissible words.
    table: Vec<Option<V>>,
}

pub type Potential = LocallyConstant<f64>;
pub type Cocycle = LocallyConstant<i64>;

/// Config/report form: `{"depth": d, "values": {"word": value, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec<V> {
    pub depth: usize,
    pub values: BTreeMap<String, V>,
}

pub(crate) fn word_code(word: &[Symbol], alphabet: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * alphabet + s as usize)
}

impl<V: Copy> LocallyConstant<V> {
    /// Builds the function from a table that must cover exactly the
    /// admissible words of length `depth`.
    pub fn new(shift: &ShiftSpace, depth: usize, values: impl IntoIterator<Item = (Vec<Symbol>, V)>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::BadFunction("depth must be positive".into()));
        }
        let alphabet = shift.alphabet_size();
        let size = alphabet
            .checked_pow(depth as u32)
            .filter(|&s| s <= 1 << 24)
            .ok_or_else(|| Error::BadFunction(format!("depth {depth} is too large")))?;
        let mut table = vec![None; size];
        for (word, value) in values {
            if word.len() != depth {
                return Err(Error::BadFunction(format!("word {} has length {} != depth {depth}", word_to_string(&word), word.len())));
            }
            if !shift.is_admissible(&word) {
                return Err(Error::BadFunction(format!("word {} is not admissible", word_to_string(&word))));
            }
            let slot = &mut table[word_code(&word, alphabet)];
            if slot.is_some() {
                return Err(Error::BadFunction(format!("word {} given twice", word_to_string(&word))));
            }
            *slot = Some(value);
        }
        let words = shift.enumerate_words(depth, size)?;
        if let Some(missing) = words.iter().find(|w| table[word_code(w, alphabet)].is_none()) {
            return Err(Error::BadFunction(format!("no value for admissible word {}", word_to_string(missing))));
        }
        Ok(LocallyConstant { alphabet, depth, table })
    }

    /// Depth-`depth` function with values computed by `f`.
    pub fn from_fn(shift: &ShiftSpace, depth: usize, f: impl Fn(&[Symbol]) -> V) -> Result<Self> {
        let words = shift.enumerate_words(depth, 1 << 24)?;
        Self::new(shift, depth, words.into_iter().map(|w| {
            let v = f(&w);
            (w, v)
        }))
    }

    /// Depth-one function with one value per symbol.
    pub fn per_symbol(shift: &ShiftSpace, values: &[V]) -> Result<Self> {
        if values.len() != shift.alphabet_size() {
            return Err(Error::BadFunction(format!(
                "{} values for a {}-symbol alphabet",
                values.len(),
                shift.alphabet_size()
            )));
        }
        Self::from_fn(shift, 1, |w| values[w[0] as usize])
    }

    pub fn constant(shift: &ShiftSpace, value: V) -> Self {
        Self::from_fn(shift, 1, |_| value).expect("depth-one table always fits")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    /// Value at a point whose coordinates `0..` start with `word`
    /// (`word.len() >= depth`). Returns `None` for inadmissible prefixes.
    #[inline]
    pub fn get(&self, word: &[Symbol]) -> Option<V> {
        self.table[word_code(&word[..self.depth], self.alphabet)]
    }

    /// Like [`get`](Self::get) but panics on an inadmissible prefix.
    #[inline]
    pub fn value(&self, word: &[Symbol]) -> V {
        self.get(word).expect("word is not admissible")
    }

    /// Admissible words with their values, in lexicographic order.
    pub fn entries(&self) -> Vec<(Vec<Symbol>, V)> {
        let mut out = Vec::new();
        for (code, v) in self.table.iter().enumerate() {
            if let Some(v) = v {
                let mut word = vec![0; self.depth];
                let mut c = code;
                for slot in word.iter_mut().rev() {
                    *slot = (c % self.alphabet) as Symbol;
                    c /= self.alphabet;
                }
                out.push((word, *v));
            }
        }
        out
    }

    pub fn values(&self) -> impl Iterator<Item = V> + '_ {
        self.table.iter().flatten().copied()
    }

    pub fn map<W: Copy>(&self, f: impl Fn(V) -> W) -> LocallyConstant<W> {
        LocallyConstant {
            alphabet: self.alphabet,
            depth: self.depth,
            table: self.table.iter().map(|v| v.map(&f)).collect(),
        }
    }

    pub fn to_spec(&self) -> FunctionSpec<V> {
        FunctionSpec {
            depth: self.depth,
            values: self.entries().into_iter().map(|(w, v)| (word_to_string(&w), v)).collect(),
        }
    }

    pub fn from_spec(shift: &ShiftSpace, spec: &FunctionSpec<V>) -> Result<Self> {
        let values = spec
            .values
            .iter()
            .map(|(word, &v)| Ok((parse_word(word, shift.alphabet_size())?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(shift, spec.depth, values)
    }
}

impl<V: Copy + PartialOrd> LocallyConstant<V> {
    pub fn min_value(&self) -> V {
        self.values().reduce(|a, b| if b < a { b } else { a }).expect("non-empty table")
    }

    pub fn max_value(&self) -> V {
        self.values().reduce(|a, b| if b > a { b } else { a }).expect("non-empty table")
    }
}

impl Cocycle {
    pub fn max_abs(&self) -> i64 {
        self.values().map(i64::abs).max().unwrap_or(0)
    }

    /// `φ'(w) = φ(w) - φ(reverse(w))`; antisymmetric, hence centered under
    /// any reversible model.
    pub fn symmetrized(&self, shift: &ShiftSpace) -> Result<Self> {
        let mut out = Vec::new();
        for (w, v) in self.entries() {
            let rev: Vec<Symbol> = w.iter().rev().copied().collect();
            let back = self
                .get(&rev)
                .ok_or_else(|| Error::BadFunction(format!("reversed word {} is not admissible", word_to_string(&rev))))?;
            out.push((w, v - back));
        }
        Self::new(shift, self.depth, out)
    }
}
