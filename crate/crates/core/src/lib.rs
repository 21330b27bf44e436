//! Symbolic models of ℤ-extensions of suspension flows over mixing
//! subshifts of finite type, with exact and Monte Carlo tools for their
//! quantitative recurrence.
//!
//! * [`sft`]: shifts, cylinders and lazily sampled symbol paths.
//! * [`thermo`]: Gibbs measures, pressure, entropy, exact Birkhoff-sum laws,
//!   cocycle variance and aperiodicity.
//! * [`suspension`]: the suspension flow, displacement along orbits and
//!   Lyapunov/Abramov bookkeeping.
//! * [`recurrence`]: conditioned sampling, return times to cylinders, the
//!   last-passage identity and the exponent sweep.
//! * [`stats`]: the `σ·E/|N|` law, KS distances and regression.

pub mod error;
pub mod recurrence;
pub mod rng;
pub mod sft;
pub mod stats;
pub mod suspension;
pub mod thermo;

pub use error::{Error, Result};
