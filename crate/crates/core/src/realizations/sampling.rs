//! Forward sampling of classical and quantum models.
//!
//! Random numbers come from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64(seed)` and switched to stream `stream` with `set_stream`.
//! Every draw consumes exactly one uniform `f64` in `[0, 1)` (`Rng::random`),
//! and a categorical outcome is the first index whose cumulative weight
//! exceeds `u · total`. Classical samplers draw the initial state from `π`
//! and then one joint (symbol, next state) pair per step; quantum samplers
//! draw one symbol per step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::classical::PositiveRealization;
use super::quantum::HiddenQuantumModel;
use crate::linalg::{c, CMatrix};
use crate::word::Word;
use crate::{Error, Result};

/// Default probability floor below which sampling reports a collapse.
pub const TOL_PROB: f64 = 1e-9;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A model that can be sampled.
#[derive(Clone, Copy, Debug)]
pub enum SamplingModel<'a> {
    Classical(&'a PositiveRealization),
    Quantum(&'a HiddenQuantumModel),
}

impl<'a> From<&'a PositiveRealization> for SamplingModel<'a> {
    fn from(m: &'a PositiveRealization) -> Self {
        SamplingModel::Classical(m)
    }
}

impl<'a> From<&'a HiddenQuantumModel> for SamplingModel<'a> {
    fn from(m: &'a HiddenQuantumModel) -> Self {
        SamplingModel::Quantum(m)
    }
}

/// Index of the category selected by uniform `u` among non-negative weights.
fn categorical(weights: impl Iterator<Item = f64> + Clone, total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

pub struct ClassicalSampler<'a> {
    model: &'a PositiveRealization,
    rng: ChaCha20Rng,
    state: usize,
    step: usize,
}

impl<'a> ClassicalSampler<'a> {
    pub fn new(model: &'a PositiveRealization, rng: ChaCha20Rng) -> Self {
        let mut s = Self { model, rng, state: 0, step: 0 };
        s.restart();
        s
    }

    /// Redraws the hidden state from the stationary distribution.
    pub fn restart(&mut self) {
        let pi = self.model.pi();
        let total: f64 = pi.iter().map(|x| x.max(0.0)).sum();
        let u: f64 = self.rng.random();
        self.state = categorical(pi.iter().map(|x| x.max(0.0)), total, u);
    }

    pub fn next_symbol(&mut self) -> Result<usize> {
        let d = self.model.num_states();
        let mats = self.model.matrices();
        let i = self.state;
        let weights = mats.iter().flat_map(|m| (0..d).map(move |j| m[(i, j)].max(0.0)));
        let total: f64 = weights.clone().sum();
        if total < TOL_PROB {
            return Err(Error::NumericalCollapse { step: self.step });
        }
        let u: f64 = self.rng.random();
        let k = categorical(weights, total, u);
        self.state = k % d;
        self.step += 1;
        Ok(k / d)
    }
}

pub struct QuantumSampler<'a> {
    model: &'a HiddenQuantumModel,
    effects: Vec<CMatrix>,
    rng: ChaCha20Rng,
    rho: CMatrix,
    step: usize,
}

impl<'a> QuantumSampler<'a> {
    pub fn new(model: &'a HiddenQuantumModel, rng: ChaCha20Rng) -> Self {
        Self { model, effects: model.effects(), rng, rho: model.rho().clone(), step: 0 }
    }

    /// Resets the state to the stationary density matrix.
    pub fn restart(&mut self) {
        self.rho = self.model.rho().clone();
    }

    pub fn next_symbol(&mut self) -> Result<usize> {
        let probs: Vec<f64> = self
            .effects
            .iter()
            .map(|e| super::basis::trace_product(e, &self.rho).re.max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        if total < TOL_PROB {
            return Err(Error::NumericalCollapse { step: self.step });
        }
        let u: f64 = self.rng.random();
        let k = categorical(probs.iter().copied(), total, u);
        let next = self.model.maps()[k].apply(&self.rho);
        let tr = next.trace().re;
        if tr < TOL_PROB * TOL_PROB {
            return Err(Error::NumericalCollapse { step: self.step });
        }
        self.rho = (&next + next.adjoint()) * c(0.5 / tr, 0.0);
        self.step += 1;
        Ok(k)
    }
}

/// A stationary sample path of `length` symbols; deterministic given `seed`.
pub fn sample_sequence(model: SamplingModel<'_>, length: usize, seed: u64) -> Result<Word> {
    sample_sequence_stream(model, length, seed, 0)
}

/// As [`sample_sequence`] on an explicit ChaCha20 stream, so that parallel
/// samplers can split a seed deterministically as `(seed, stream)`.
pub fn sample_sequence_stream(model: SamplingModel<'_>, length: usize, seed: u64, stream: u64) -> Result<Word> {
    let rng = rng_for(seed, stream);
    let mut out = Vec::with_capacity(length);
    match model {
        SamplingModel::Classical(m) => {
            let mut s = ClassicalSampler::new(m, rng);
            for _ in 0..length {
                out.push(s.next_symbol()?);
            }
        }
        SamplingModel::Quantum(m) => {
            let mut s = QuantumSampler::new(m, rng);
            for _ in 0..length {
                out.push(s.next_symbol()?);
            }
        }
    }
    Ok(Word::from(out))
}

/// `count` independent windows of `window` symbols, each started afresh from
/// the stationary state, drawn from a single stream.
pub fn sample_windows(model: SamplingModel<'_>, window: usize, count: usize, seed: u64) -> Result<Vec<Word>> {
    let rng = rng_for(seed, 0);
    let mut out = Vec::with_capacity(count);
    match model {
        SamplingModel::Classical(m) => {
            let mut s = ClassicalSampler::new(m, rng);
            for i in 0..count {
                if i > 0 {
                    s.restart();
                }
                out.push(Word::from((0..window).map(|_| s.next_symbol()).collect::<Result<Vec<_>>>()?));
            }
        }
        SamplingModel::Quantum(m) => {
            let mut s = QuantumSampler::new(m, rng);
            for _ in 0..count {
                s.restart();
                out.push(Word::from((0..window).map(|_| s.next_symbol()).collect::<Result<Vec<_>>>()?));
            }
        }
    }
    Ok(out)
}
