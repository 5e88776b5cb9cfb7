use std::f64::consts::PI;

use quasireal::frdn::{self, build_noisy_hqmm, ChainOracle, FrdnParams, NoiseParams};
use quasireal::linalg::c;
use quasireal::realizations::sampling::sample_sequence;
use quasireal::realizations::TOL_CP;
use quasireal::spectrum::eigenvalues;
use quasireal::{words_up_to, Tolerances, Word};

fn grid() -> Vec<FrdnParams> {
    let mut out = Vec::new();
    for lambda in [0.2, 0.4, 0.5] {
        for alpha in [1.0, PI / 5.0, 2.3] {
            out.push(FrdnParams::new(lambda, alpha).unwrap());
        }
    }
    out
}

#[test]
fn three_implementations_agree() {
    for params in grid() {
        let oracle = ChainOracle::new(params).unwrap();
        let qr = frdn::build_quasi(&params).unwrap();
        let hqmm = frdn::build_hqmm(&params).unwrap();
        for w in words_up_to(2, 6) {
            let p = oracle.prob(&w).unwrap();
            assert!((p - qr.evaluate(&w).unwrap()).abs() < 1e-9, "{params:?} {w:?}");
            assert!((p - hqmm.trace_probability(&w).unwrap()).abs() < 1e-9, "{params:?} {w:?}");
        }
    }
}

#[test]
fn b_map_phases_are_plus_minus_alpha() {
    for params in grid() {
        let alpha = params.alpha();
        let quasi = eigenvalues(&frdn::quasi_db(&params)).unwrap();
        let hqmm = frdn::build_hqmm(&params).unwrap();
        let quantum = eigenvalues(&hqmm.superoperators()[frdn::B]).unwrap();
        for ev in [quasi, quantum] {
            let complex: Vec<_> = ev.iter().filter(|z| z.im.abs() > 1e-9).collect();
            assert_eq!(complex.len(), 2, "{params:?}: {ev:?}");
            for z in complex {
                assert!((z.arg().abs() - alpha).abs() < 1e-9, "{params:?}: {z}");
                assert!((z.norm() - params.lambda()).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn stationary_frequency_of_a_is_the_renewal_rate() {
    for params in grid() {
        let qr = frdn::build_quasi(&params).unwrap();
        let pa = qr.evaluate(&Word::from(vec![frdn::A])).unwrap();
        assert!((pa - params.stationary_prob_a()).abs() < 1e-10, "{params:?}");
        // The inverse of 1 + Σh is a different number whenever some h_ℓ with
        // ℓ ≥ 2 is non-zero.
        assert!((pa - 1.0 / (1.0 + params.tail_sum())).abs() > 1e-3, "{params:?}");
    }
}

#[test]
fn sampled_frequency_matches_renewal_rate() {
    let params = FrdnParams::new(0.4, 1.0).unwrap();
    let hqmm = frdn::build_hqmm(&params).unwrap();
    let n = 100_000;
    let seq = sample_sequence((&hqmm).into(), n, 2024).unwrap();
    let p_hat = seq.count(frdn::A) as f64 / n as f64;
    let batches = 100;
    let means: Vec<f64> = seq
        .symbols()
        .chunks(n / batches)
        .map(|c| c.iter().filter(|&&s| s == frdn::A).count() as f64 / (n / batches) as f64)
        .collect();
    let var = means.iter().map(|m| (m - p_hat).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let se = (var / batches as f64).sqrt();
    assert!((p_hat - params.stationary_prob_a()).abs() <= 4.0 * se, "{p_hat} ± {se}");
    assert_eq!(seq, sample_sequence((&hqmm).into(), n, 2024).unwrap());
}

#[test]
fn noisy_eigenvalues_stay_within_perturbation_radius() {
    let (s, lambda, alpha) = (0.5, 0.4, PI / 8.0);
    for q in [0.9, 0.99, 0.999] {
        let np = NoiseParams::with_uniform_squeezing(q, s, lambda, alpha).unwrap();
        let model = build_noisy_hqmm(&np).unwrap();
        let ev = eigenvalues(&model.superoperators()[frdn::B]).unwrap();
        let radius = 2.0 * (1.0 - q) * s * (4.0 * np.r).cosh();
        let ql = q * lambda;
        let centers = [c(ql, 0.0), c(ql, 0.0), c(ql * alpha.cos(), ql * alpha.sin()), c(ql * alpha.cos(), -ql * alpha.sin())];
        for z in &ev {
            let nearest = centers.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= radius + 1e-12, "q = {q}: {z} is {nearest:.3e} from the noiseless spectrum (radius {radius:.3e})");
        }
    }
}

#[test]
fn noisy_model_is_valid() {
    let np = NoiseParams::with_uniform_squeezing(0.99, 0.5, 0.4, PI / 8.0).unwrap();
    let model = build_noisy_hqmm(&np).unwrap();
    assert!(model.certificate(TOL_CP).passed);
    let report = model.to_quasi().unwrap().validate(6, &Tolerances::default());
    assert!(report.passed, "{:?}", report.violations);
}

#[test]
fn fully_depolarized_model_always_emits_b() {
    let np = NoiseParams::with_uniform_squeezing(0.0, 1.0, 0.4, PI / 8.0).unwrap();
    let model = build_noisy_hqmm(&np).unwrap();
    for len in 1..=5 {
        let bs = Word::repeat(frdn::B, len);
        assert!((model.trace_probability(&bs).unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(model.trace_probability(&Word::from(vec![frdn::A])).unwrap().abs() < 1e-12);
}

#[test]
fn noisy_model_approaches_noiseless_qubit() {
    let (lambda, alpha) = (0.4, PI / 8.0);
    let clean = build_noisy_hqmm(&NoiseParams::with_uniform_squeezing(1.0 - 1e-12, 0.5, lambda, alpha).unwrap()).unwrap();
    let slightly = build_noisy_hqmm(&NoiseParams::with_uniform_squeezing(1.0 - 1e-6, 0.5, lambda, alpha).unwrap()).unwrap();
    for w in words_up_to(2, 5) {
        let (p, q) = (clean.trace_probability(&w).unwrap(), slightly.trace_probability(&w).unwrap());
        assert!((p - q).abs() < 1e-4, "{w:?}");
    }
}
