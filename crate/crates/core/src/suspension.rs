//! Suspension flow over the shift with a locally constant roof, integer
//! displacement along flow orbits, and Lyapunov/Abramov bookkeeping.
//!
//! The suspension space `{(ω, s) : 0 <= s < r(ω)}` is the ground truth; the
//! flow moves `s` at unit speed and jumps `(ω, r(ω)) -> (σω, 0)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{substream, StreamRng};
use crate::sft::{PathStream, ShiftSpace, SymbolPath, Symbol};
use crate::stats::mean_and_se;
use crate::thermo::{check_centered, green_kubo_variance, word_code, Cocycle, GibbsModel, LocallyConstant, Potential};

/// Values of the system's functions indexed by the code of the
/// `(memory + 1)`-word starting at the base point.
#[derive(Debug, Clone)]
pub(crate) struct WordTables {
    pub alphabet: usize,
    /// Word length `memory + 1`.
    pub width: usize,
    /// `alphabet^(width - 1)`, used to drop the oldest symbol.
    pub high: usize,
    pub cocycle: Vec<i64>,
    pub roof: Vec<f64>,
    pub log_u: Vec<f64>,
    pub log_s: Vec<f64>,
}

impl WordTables {
    fn new(system: &SuspensionSystem) -> Self {
        let alphabet = system.model.shift().alphabet_size();
        let width = system.model.memory() + 1;
        let size = alphabet.pow(width as u32);
        let mut t = WordTables {
            alphabet,
            width,
            high: alphabet.pow(width as u32 - 1),
            cocycle: vec![0; size],
            roof: vec![f64::NAN; size],
            log_u: vec![0.0; size],
            log_s: vec![0.0; size],
        };
        for e in system.model.edges() {
            let c = word_code(&e.word, alphabet);
            t.cocycle[c] = system.cocycle.value(&e.word);
            t.roof[c] = system.roof.value(&e.word);
            t.log_u[c] = system.expansion_u.value(&e.word);
            t.log_s[c] = system.expansion_s.value(&e.word);
        }
        t
    }

    #[inline]
    pub fn roll(&self, code: usize, next: Symbol) -> usize {
        (code % self.high) * self.alphabet + next as usize
    }
}

/// Base model plus roof, expansion profiles and displacement cocycle.
#[derive(Debug, Clone)]
pub struct SuspensionSystem {
    model: GibbsModel,
    roof: Potential,
    /// `log a^u > 0`.
    expansion_u: Potential,
    /// `log a^s < 0`.
    expansion_s: Potential,
    cocycle: Cocycle,
    roof_min: f64,
    roof_max: f64,
    tables: WordTables,
}

impl SuspensionSystem {
    /// Builds the Gibbs model with enough memory for every function.
    pub fn new(
        shift: &ShiftSpace,
        potential: &Potential,
        roof: Potential,
        expansion_u: Potential,
        expansion_s: Potential,
        cocycle: Cocycle,
    ) -> Result<Self> {
        let depth = [potential.depth(), roof.depth(), expansion_u.depth(), expansion_s.depth(), cocycle.depth()]
            .into_iter()
            .max()
            .unwrap_or(1);
        let model = GibbsModel::with_memory(shift, potential, depth.saturating_sub(1))?;
        Self::from_model(model, roof, expansion_u, expansion_s, cocycle)
    }

    pub fn from_model(
        model: GibbsModel,
        roof: Potential,
        expansion_u: Potential,
        expansion_s: Potential,
        cocycle: Cocycle,
    ) -> Result<Self> {
        let n = model.shift().alphabet_size();
        for (name, depth, alphabet) in [
            ("roof", roof.depth(), roof.alphabet_size()),
            ("expansion_u", expansion_u.depth(), expansion_u.alphabet_size()),
            ("expansion_s", expansion_s.depth(), expansion_s.alphabet_size()),
            ("cocycle", cocycle.depth(), cocycle.alphabet_size()),
        ] {
            if alphabet != n {
                return Err(Error::BadFunction(format!("{name} is defined on a different alphabet")));
            }
            if depth > model.memory() + 1 {
                return Err(Error::BadFunction(format!("{name} depth {depth} exceeds model memory {}", model.memory())));
            }
        }
        let (roof_min, roof_max) = (roof.min_value(), roof.max_value());
        if !(roof_min > 0.0) || !roof_max.is_finite() {
            return Err(Error::BadFunction(format!("roof must be positive and finite, range [{roof_min}, {roof_max}]")));
        }
        if !(expansion_u.min_value() > 0.0) {
            return Err(Error::BadFunction("log expansion_u must be positive".into()));
        }
        if !(expansion_s.max_value() < 0.0) {
            return Err(Error::BadFunction("log expansion_s must be negative".into()));
        }
        check_centered(&model, &cocycle)?;
        let mut system = SuspensionSystem {
            model,
            roof,
            expansion_u,
            expansion_s,
            cocycle,
            roof_min,
            roof_max,
            tables: WordTables {
                alphabet: 0,
                width: 0,
                high: 1,
                cocycle: vec![],
                roof: vec![],
                log_u: vec![],
                log_s: vec![],
            },
        };
        system.tables = WordTables::new(&system);
        Ok(system)
    }

    pub fn model(&self) -> &GibbsModel {
        &self.model
    }

    pub fn roof(&self) -> &Potential {
        &self.roof
    }

    pub fn expansion_u(&self) -> &Potential {
        &self.expansion_u
    }

    pub fn expansion_s(&self) -> &Potential {
        &self.expansion_s
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn roof_min(&self) -> f64 {
        self.roof_min
    }

    pub fn roof_max(&self) -> f64 {
        self.roof_max
    }

    pub(crate) fn tables(&self) -> &WordTables {
        &self.tables
    }

    /// Same system with the roof multiplied by `c > 0`.
    pub fn with_roof_scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("roof scale must be positive, got {c}")));
        }
        Self::from_model(
            self.model.clone(),
            self.roof.map(|r| r * c),
            self.expansion_u.clone(),
            self.expansion_s.clone(),
            self.cocycle.clone(),
        )
    }

    /// `∫ r dν`.
    pub fn mean_roof(&self) -> f64 {
        self.model.integrate(&self.roof).expect("roof depth checked at construction")
    }

    fn code_at(&self, path: &mut SymbolPath, n: i64) -> usize {
        let word: Vec<Symbol> = path.window(n, n + self.tables.width as i64);
        word_code(&word, self.tables.alphabet)
    }

    /// Roof over the base point `σ^n ω`.
    pub fn roof_at(&self, path: &mut SymbolPath, n: i64) -> f64 {
        self.tables.roof[self.code_at(path, n)]
    }

    /// Cocycle at the base point `σ^n ω`.
    pub fn cocycle_at(&self, path: &mut SymbolPath, n: i64) -> i64 {
        self.tables.cocycle[self.code_at(path, n)]
    }

    /// Point `(σ^n ω, s)` of the suspension space.
    pub fn state(&self, mut path: SymbolPath, base_index: i64, height: f64) -> Result<FlowState> {
        let r = self.roof_at(&mut path, base_index);
        if !(0.0..r).contains(&height) {
            return Err(Error::InvalidArgument(format!("height {height} outside [0, {r})")));
        }
        Ok(FlowState { path, base_index, height })
    }

    /// Point distributed by the normalized suspension measure
    /// `ν × Leb / ∫ r dν`: the base word is drawn with weight proportional to
    /// its roof and the height uniformly under it.
    pub fn stationary_state(&self, rng: &mut StreamRng) -> FlowState {
        let (word, height) = self.stationary_start(rng);
        let path = SymbolPath::with_window(self.model.law(), 0, &word, rng.clone());
        FlowState { path, base_index: 0, height }
    }

    fn stationary_start(&self, rng: &mut StreamRng) -> (Vec<Symbol>, f64) {
        let edges = self.model.edges();
        let weights: Vec<f64> = edges
            .iter()
            .map(|e| self.model.edge_mass(e) * self.tables.roof[word_code(&e.word, self.tables.alphabet)])
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = edges.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        let word = edges[pick].word.clone();
        let r = self.tables.roof[word_code(&word, self.tables.alphabet)];
        (word, rng.random::<f64>() * r)
    }

    /// `ψ_t(ω, s) = (σ^n ω, s + t - S_n r(ω))` with `S_n r <= s + t < S_{n+1} r`.
    pub fn flow_advance(&self, state: &mut FlowState, t: f64) -> FlowStep {
        assert!(t >= 0.0, "the flow only runs forward");
        let mut residual = state.height + t;
        let mut step = FlowStep { crossings: 0, displacement: 0 };
        loop {
            let code = self.code_at(&mut state.path, state.base_index);
            let r = self.tables.roof[code];
            if residual < r {
                break;
            }
            residual -= r;
            step.displacement += self.tables.cocycle[code];
            step.crossings += 1;
            state.base_index += 1;
        }
        state.height = residual;
        step
    }

    /// Integer displacement `φ_t` accumulated over the section crossings of
    /// `ψ_t`. In the symbolic model this equals the cell index of the lifted
    /// flow exactly.
    pub fn flow_displacement(&self, state: &mut FlowState, t: f64) -> i64 {
        self.flow_advance(state, t).displacement
    }

    /// Closed-form exponents, Abramov entropy and dimension.
    pub fn lyapunov_exact(&self) -> LyapunovReport {
        let l_u = self.model.integrate(&self.expansion_u).expect("depth checked");
        let l_s = self.model.integrate(&self.expansion_s).expect("depth checked");
        LyapunovReport::from_section(l_u, l_s, self.mean_roof(), self.model.entropy())
    }

    /// Time averages `(1/t) ∫_0^t a(ψ_ξ) dξ` along `trials` stationary
    /// orbits. The density of `log a^u` over a fiber is `log a^u / r`, so
    /// partial fibers at both ends are accounted for and constant profiles
    /// are reproduced exactly.
    pub fn lyapunov_birkhoff(&self, horizon: f64, trials: usize, seed: u64) -> Result<BirkhoffLyapunov> {
        if !(horizon >= 10.0 * self.roof_max) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} is below 10 x max roof {}",
                self.roof_max
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        let estimates: Vec<(f64, f64)> = (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = substream(seed, trial);
                let (word, height) = self.stationary_start(&mut rng);
                let mut orbit = Orbit::new(self, SymbolPath::with_window(self.model.law(), 0, &word, rng));
                let (mut iu, mut is) = (0.0, 0.0);
                let mut remaining = horizon;
                let mut h = height;
                loop {
                    let code = orbit.code();
                    let r = self.tables.roof[code];
                    let span = (r - h).min(remaining);
                    iu += self.tables.log_u[code] * span / r;
                    is += self.tables.log_s[code] * span / r;
                    remaining -= span;
                    if remaining <= 0.0 {
                        break;
                    }
                    h = 0.0;
                    orbit.advance();
                }
                (iu / horizon, is / horizon)
            })
            .collect();
        let (lambda_u, lambda_u_se) = mean_and_se(&estimates.iter().map(|e| e.0).collect::<Vec<_>>());
        let (lambda_s, lambda_s_se) = mean_and_se(&estimates.iter().map(|e| e.1).collect::<Vec<_>>());
        let mean_roof = self.mean_roof();
        Ok(BirkhoffLyapunov {
            horizon,
            trials,
            report: LyapunovReport::from_flow(lambda_u, lambda_s, mean_roof, self.model.entropy()),
            lambda_u_se,
            lambda_s_se,
        })
    }

    /// `σ²_flow = σ²_φ / ∫ r dν`.
    pub fn flow_variance(&self) -> Result<f64> {
        let report = green_kubo_variance(&self.model, &self.cocycle)?;
        if report.degenerate {
            return Err(Error::Degenerate { sigma2: report.sigma2 });
        }
        Ok(report.sigma2 / self.mean_roof())
    }

    /// `trials` independent draws of `φ_t / √t` from stationary starts.
    pub fn clt_flow_samples(&self, t: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
        if !(t >= 100.0 * self.roof_max) {
            return Err(Error::InvalidArgument(format!("t = {t} is below 100 x max roof {}", self.roof_max)));
        }
        Ok((0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = substream(seed, trial);
                let (word, height) = self.stationary_start(&mut rng);
                let mut orbit = Orbit::new(self, SymbolPath::with_window(self.model.law(), 0, &word, rng));
                let mut residual = height + t;
                let mut displacement = 0i64;
                loop {
                    let code = orbit.code();
                    let r = self.tables.roof[code];
                    if residual < r {
                        break;
                    }
                    residual -= r;
                    displacement += self.tables.cocycle[code];
                    orbit.advance();
                }
                displacement as f64 / t.sqrt()
            })
            .collect())
    }
}

/// Forward walk over base points `σ^k ω`, `k = 0, 1, ...`, keeping the code
/// of the `(memory + 1)`-word at the current point without storing the path.
pub(crate) struct Orbit<'a> {
    tables: &'a WordTables,
    stream: PathStream,
    code: usize,
}

impl<'a> Orbit<'a> {
    pub fn new(system: &'a SuspensionSystem, path: SymbolPath) -> Self {
        let tables = &system.tables;
        let mut stream = path.into_stream(0);
        let mut code = 0;
        for _ in 0..tables.width {
            code = code * tables.alphabet + stream.next().expect("infinite stream") as usize;
        }
        Orbit { tables, stream, code }
    }

    #[inline]
    pub fn code(&self) -> usize {
        self.code
    }

    #[inline]
    pub fn advance(&mut self) {
        let s = self.stream.next().expect("infinite stream");
        self.code = self.tables.roll(self.code, s);
    }
}

/// A point `(σ^n ω, s)` of the suspension space.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub path: SymbolPath,
    pub base_index: i64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlowStep {
    pub crossings: u64,
    pub displacement: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovReport {
    #[serde(rename = "L_u")]
    pub l_u: f64,
    #[serde(rename = "L_s")]
    pub l_s: f64,
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub mean_roof: f64,
    /// Entropy of the base measure.
    pub entropy: f64,
    /// Abramov: base entropy over mean roof.
    pub entropy_flow: f64,
    /// `entropy_flow · (1/λ_u - 1/λ_s)`, the dimension of the flow measure
    /// minus one.
    pub dimension: f64,
}

impl LyapunovReport {
    /// From section rates: `λ = L / ∫ r dν`.
    pub fn from_section(l_u: f64, l_s: f64, mean_roof: f64, entropy: f64) -> Self {
        let lambda_u = l_u / mean_roof;
        let lambda_s = l_s / mean_roof;
        let entropy_flow = entropy / mean_roof;
        LyapunovReport {
            l_u,
            l_s,
            lambda_u,
            lambda_s,
            mean_roof,
            entropy,
            entropy_flow,
            dimension: entropy_flow * (1.0 / lambda_u - 1.0 / lambda_s),
        }
    }

    /// From flow exponents: `L = λ · ∫ r dν`.
    pub fn from_flow(lambda_u: f64, lambda_s: f64, mean_roof: f64, entropy: f64) -> Self {
        let entropy_flow = entropy / mean_roof;
        LyapunovReport {
            l_u: lambda_u * mean_roof,
            l_s: lambda_s * mean_roof,
            lambda_u,
            lambda_s,
            mean_roof,
            entropy,
            entropy_flow,
            dimension: entropy_flow * (1.0 / lambda_u - 1.0 / lambda_s),
        }
    }

    /// Largest deviation from the closed-form relations between the fields.
    pub fn consistency_residual(&self) -> f64 {
        [
            self.lambda_u - self.l_u / self.mean_roof,
            self.lambda_s - self.l_s / self.mean_roof,
            self.entropy_flow - self.entropy / self.mean_roof,
            self.dimension - self.entropy_flow * (1.0 / self.lambda_u - 1.0 / self.lambda_s),
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffLyapunov {
    pub horizon: f64,
    pub trials: usize,
    pub report: LyapunovReport,
    pub lambda_u_se: f64,
    pub lambda_s_se: f64,
}

/// Constant expansion profiles `±log a` on every admissible word.
pub fn constant_expansion(shift: &ShiftSpace, log_a: f64) -> (Potential, Potential) {
    (LocallyConstant::constant(shift, log_a), LocallyConstant::constant(shift, -log_a))
}
