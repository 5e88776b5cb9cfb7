//! Finite-memory models of stationary stochastic processes.
//!
//! The crate covers three nested model classes and the machinery used to tell
//! them apart:
//!
//! * [`QuasiRealization`]: a linear model `p(u) = π D_{u1} … D_{uℓ} τ` with no
//!   positivity structure,
//! * [`realizations::PositiveRealization`] (hidden Markov models) and
//!   [`realizations::HiddenQuantumModel`] (hidden quantum Markov models),
//! * explicit constructions: the FRDN family ([`frdn`]) and processes whose
//!   unique stable cone is the exponential or a power cone ([`separations`]).
//!
//! Supporting modules provide cone membership oracles ([`cones`]), finite
//! Hankel blocks and spectral learning ([`hankel`]) and spectral witnesses
//! against classical realizability ([`witnesses`]).

pub mod cones;
mod error;
pub mod frdn;
pub mod hankel;
pub mod linalg;
pub mod quasi;
pub mod realizations;
pub mod separations;
pub mod spectrum;
pub mod witnesses;
mod word;

pub use error::{Error, Result};
pub use quasi::{QuasiRealization, Tolerances, ValidationReport};
pub use spectrum::{spectrum, stationary_pair, SpectrumReport, StationaryPair};
pub use word::{words_of_length, words_up_to, Alphabet, Word};
