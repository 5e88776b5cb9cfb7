//! Positive (classical) and completely positive (quantum) realizations,
//! their validity certificates, conversion to quasi-realizations, sampling
//! and sequence files.

mod basis;
mod classical;
mod quantum;
pub mod sampling;
pub mod seqio;

pub use basis::{trace_product, HermitianBasis};
pub use classical::PositiveRealization;
pub use quantum::{
    choi_from_superoperator, measure_prepare_map, measure_prepare_signed, spectral_norm, CpCertificate,
    HiddenQuantumModel, KrausMap, TOL_CP,
};
pub use sampling::{sample_sequence, sample_sequence_stream, sample_windows, SamplingModel};
