use nalgebra::DMatrix;
use proptest::prelude::*;
use quasireal::frdn::{self, FrdnParams};
use quasireal::realizations::sampling::{rng_for, sample_sequence, sample_windows};
use quasireal::realizations::seqio::{read_binary, write_binary};
use quasireal::realizations::PositiveRealization;
use quasireal::{words_of_length, words_up_to, Alphabet, QuasiRealization, Tolerances, Word};
use rand::Rng;

/// A random strictly positive HMM with `d` states and `m` symbols.
fn random_hmm(d: usize, m: usize, seed: u64) -> PositiveRealization {
    let mut rng = rng_for(seed, 0);
    let mut mats: Vec<DMatrix<f64>> = (0..m).map(|_| DMatrix::from_fn(d, d, |_, _| 0.05 + rng.random::<f64>())).collect();
    for i in 0..d {
        let row: f64 = mats.iter().map(|mm| mm.row(i).sum()).sum();
        for mm in &mut mats {
            mm.row_mut(i).scale_mut(1.0 / row);
        }
    }
    PositiveRealization::with_stationary(Alphabet::new(m).unwrap(), mats, 1e-12).unwrap()
}

/// Independent oracle: sum over every hidden path.
fn path_sum(hmm: &PositiveRealization, w: &Word) -> f64 {
    let d = hmm.num_states();
    let mut total = 0.0;
    let len = w.len();
    let paths = d.pow(len as u32 + 1);
    for code in 0..paths {
        let mut states = Vec::with_capacity(len + 1);
        let mut c = code;
        for _ in 0..=len {
            states.push(c % d);
            c /= d;
        }
        let mut p = hmm.pi()[states[0]];
        for (k, &s) in w.symbols().iter().enumerate() {
            p *= hmm.matrices()[s][(states[k], states[k + 1])];
        }
        total += p;
    }
    total
}

#[test]
fn hmm_embedding_matches_path_sum() {
    for seed in 0..5 {
        let hmm = random_hmm(3, 2, seed);
        let qr = hmm.to_quasi().unwrap();
        for w in words_up_to(2, 5) {
            assert!((qr.evaluate(&w).unwrap() - path_sum(&hmm, &w)).abs() < 1e-14, "{w:?}");
        }
        assert!(qr.validate(6, &Tolerances::default()).passed);
    }
}

#[test]
fn hqmm_quasi_form_matches_traces() {
    let params = FrdnParams::new(0.3, 0.7).unwrap();
    let hqmm = frdn::build_hqmm(&params).unwrap();
    let qr = hqmm.to_quasi().unwrap();
    assert_eq!(qr.dim(), 9);
    for w in words_up_to(2, 7) {
        assert!((qr.evaluate(&w).unwrap() - hqmm.trace_probability(&w).unwrap()).abs() < 1e-13);
    }
}

#[test]
fn frdn_hqmm_is_completely_positive() {
    let hqmm = frdn::build_hqmm(&FrdnParams::new(0.5, 2.3).unwrap()).unwrap();
    let cert = hqmm.certificate(quasireal::realizations::TOL_CP);
    assert!(cert.passed, "{cert:?}");
    assert!(cert.min_choi_eigenvalues.iter().all(|&e| e >= -1e-9));
}

#[test]
fn sampled_bigram_frequencies_match_probabilities() {
    let hmm = random_hmm(3, 2, 42);
    let qr = hmm.to_quasi().unwrap();
    let n = 200_000;
    let seq = sample_sequence((&hmm).into(), n, 9).unwrap();
    let s = seq.symbols();
    for w in words_of_length(2, 2) {
        let count = s.windows(2).filter(|x| *x == w.symbols()).count() as f64;
        let freq = count / (n - 1) as f64;
        let p = qr.evaluate(&w).unwrap();
        // Serial correlation inflates the variance; allow a wide margin of
        // binomial standard errors.
        assert!((freq - p).abs() < 18.0 * (p * (1.0 - p) / n as f64).sqrt(), "{w:?}: {freq} vs {p}");
    }
}

#[test]
fn sampling_is_deterministic_and_file_stable() {
    let hqmm = frdn::build_hqmm(&FrdnParams::new(0.4, 1.0).unwrap()).unwrap();
    let a = sample_sequence((&hqmm).into(), 5_000, 7).unwrap();
    let b = sample_sequence((&hqmm).into(), 5_000, 7).unwrap();
    let c = sample_sequence((&hqmm).into(), 5_000, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut buf = Vec::new();
    write_binary(&mut buf, &frdn::alphabet(), &a).unwrap();
    let (m, back) = read_binary(&mut buf.as_slice()).unwrap();
    assert_eq!((m, back), (2, a));
    let windows = sample_windows((&hqmm).into(), 10, 50, 3).unwrap();
    assert_eq!(windows, sample_windows((&hqmm).into(), 10, 50, 3).unwrap());
    assert!(windows.iter().all(|w| w.len() == 10));
}

fn invertible(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed, 1);
    DMatrix::from_fn(d, d, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random::<f64>() - 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_matrices_compose(u in prop::collection::vec(0usize..2, 0..6), v in prop::collection::vec(0usize..2, 0..6), seed in 0u64..1000) {
        let qr = random_hmm(3, 2, seed).to_quasi().unwrap();
        let (u, v) = (Word::from(u), Word::from(v));
        let lhs = qr.matrix_of(&u.concat(&v)).unwrap();
        let rhs = qr.matrix_of(&u).unwrap() * qr.matrix_of(&v).unwrap();
        prop_assert!((lhs - rhs).amax() < 1e-14);
    }

    #[test]
    fn similarity_preserves_probabilities(w in prop::collection::vec(0usize..2, 0..8), seed in 0u64..1000) {
        let qr = random_hmm(3, 2, seed).to_quasi().unwrap();
        let moved = qr.transform(&invertible(3, seed)).unwrap();
        let w = Word::from(w);
        prop_assert!((qr.evaluate(&w).unwrap() - moved.evaluate(&w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn marginals_are_consistent(w in prop::collection::vec(0usize..2, 0..7), seed in 0u64..1000) {
        let qr: QuasiRealization = random_hmm(4, 2, seed).to_quasi().unwrap();
        let w = Word::from(w);
        let p = qr.evaluate(&w).unwrap();
        let right: f64 = (0..2).map(|s| qr.evaluate(&w.pushed(s)).unwrap()).sum();
        let left: f64 = (0..2).map(|s| qr.evaluate(&Word::from(vec![s]).concat(&w)).unwrap()).sum();
        prop_assert!((p - right).abs() < 1e-13 && (p - left).abs() < 1e-13);
    }
}
