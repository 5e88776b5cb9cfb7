//! Acceptance checks: one line per criterion, `[PASS]` or `[FAIL]`.
//!
//! Criteria whose stated target is known to be unattainable are listed in
//! `KNOWN_UNATTAINABLE`; they are still evaluated and reported as `[FAIL]`,
//! but only abort the run when `ACCEPTANCE_STRICT=1` is set. A listed
//! criterion that starts passing is an error, so the list cannot go stale.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use quasireal::frdn::{self, ChainOracle, FrdnParams, NoiseParams};
use quasireal::hankel::{build_hankel, learn_regular, numerical_rank, DEFAULT_REL_THRESHOLD};
use quasireal::linalg::matching_distance;
use quasireal::realizations::sampling::{rng_for, sample_sequence};
use quasireal::realizations::seqio::write_binary;
use quasireal::separations::{verify_cone_sandwich, ConeProcess, ExpConeProcessParams, PowerConeProcessParams, SandwichConfig};
use quasireal::spectrum::eigenvalues;
use quasireal::witnesses::{classical_dim_witness, noise_dimension_bound, roots_hull_membership, HULL_ETA};
use quasireal::{words_of_length, words_up_to, QuasiRealization, Tolerances};
use rand::Rng;

/// Criteria whose literal target cannot be met, with the reason.
const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[
    (7, "e^{iπ/7} is a primitive 14th root of unity; its least hull order is 14, not 7"),
    (9, "1/(1+Σh) is not the stationary frequency of a; the renewal rate is 1/(1+Σℓh)"),
];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

const LAMBDAS: [f64; 3] = [0.2, 0.4, 0.5];

fn alphas() -> [f64; 3] {
    [1.0, PI / 5.0, 2.3]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for lambda in LAMBDAS {
        for alpha in alphas() {
            let params = FrdnParams::new(lambda, alpha).unwrap();
            let oracle = ChainOracle::new(params).unwrap();
            let qr = frdn::build_quasi(&params).unwrap();
            let hqmm = frdn::build_hqmm(&params).unwrap();
            for w in words_up_to(2, 8) {
                let p = oracle.prob(&w).unwrap();
                let q = qr.evaluate(&w).unwrap();
                let h = hqmm.trace_probability(&w).unwrap();
                worst = worst.max((p - q).abs()).max((p - h).abs()).max((q - h).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("max three-way deviation {worst:.3e} (≤ 1e-9), {:.2} s (< 10 s)", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in LAMBDAS {
        for alpha in alphas() {
            let ev = frdn::phi_adjoint_identity_eigenvalues(&FrdnParams::new(lambda, alpha).unwrap()).unwrap();
            worst = worst.max((ev[0] - lambda * lambda).abs()).max((ev[1] - 1.0).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max eigenvalue deviation from {{1, λ²}} {worst:.3e} (≤ 1e-10)"))
}

fn criterion_3() -> Outcome {
    let params = ExpConeProcessParams::new(std::f64::consts::E, 0.5, 0.0, -1.0).unwrap();
    let p = ConeProcess::exp(&params).unwrap();
    let ok_inputs = p.m0() == [1.0, 1.0, 0.0] && p.mu0() == [1.0, -1.0, -1.0];
    let (tau, pi) = p.scaled_fixed_points();
    let tau_ref = [17.855, 5.959, 1.0];
    let pi_ref = [2.996, -1.167, -1.0];
    let dev = tau.iter().zip(&tau_ref).chain(pi.iter().zip(&pi_ref)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        ok_inputs && dev <= 2e-3,
        format!("τ = {tau:.4?}, π = {pi:.4?}, max deviation {dev:.2e} (≤ 2e-3)"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let exp = ConeProcess::exp(&ExpConeProcessParams::default()).unwrap();
    let pow = ConeProcess::power(&PowerConeProcessParams::default()).unwrap();
    let pow_alpha_ok = matches!(pow.kind(), quasireal::separations::ProcessKind::Power { alpha } if (alpha - FRAC_1_SQRT_2).abs() < 1e-15);
    let re = verify_cone_sandwich(&exp, &exp.cone(), &exp.dual_cone(), &SandwichConfig { max_len: 12, ..Default::default() })
        .unwrap();
    let rp = verify_cone_sandwich(&pow, &pow.cone(), &pow.dual_cone(), &SandwichConfig { max_len: 10, ..Default::default() })
        .unwrap();
    let elapsed = start.elapsed();
    let passed = pow_alpha_ok
        && re.cmin_pass
        && re.cmax_pass
        && rp.cmin_pass
        && rp.cmax_pass
        && re.density_gap < 1.0
        && rp.density_gap < 1.0
        && elapsed < Duration::from_secs(60);
    outcome(
        passed,
        format!(
            "exp: {} generators, slack {:.2e}, gap {:.3}; power: {} generators, slack {:.2e}, gap {:.3}; {:.2} s (< 60 s)",
            re.generators_checked,
            re.worst_slack,
            re.density_gap,
            rp.generators_checked,
            rp.worst_slack,
            rp.density_gap,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let tol = Tolerances::default();
    let exp = ConeProcess::exp(&ExpConeProcessParams::default()).unwrap();
    let pow = ConeProcess::power(&PowerConeProcessParams::default()).unwrap();
    let re = exp.quasi().validate(6, &tol);
    let rp = pow.quasi().validate(4, &tol);
    // Independent re-check of the two stated inequalities.
    let direct = |qr: &QuasiRealization, len: usize| {
        let mut min_p = f64::INFINITY;
        let mut worst_sum = 0.0f64;
        for l in 1..=len {
            let ps: Vec<f64> = words_of_length(qr.num_symbols(), l).map(|w| qr.evaluate(&w).unwrap()).collect();
            min_p = ps.iter().copied().fold(min_p, f64::min);
            worst_sum = worst_sum.max((ps.iter().sum::<f64>() - 1.0).abs());
        }
        (min_p, worst_sum)
    };
    let (me, se) = direct(exp.quasi(), 6);
    let (mp, sp) = direct(pow.quasi(), 4);
    outcome(
        re.passed && rp.passed && me >= -1e-12 && mp >= -1e-12 && se <= 1e-9 && sp <= 1e-9,
        format!("exp ℓ≤6: min p {me:.3e}, sum dev {se:.2e}; power ℓ≤4: min p {mp:.3e}, sum dev {sp:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let sources: Vec<(&str, QuasiRealization, usize, usize)> = vec![
        ("frdn", frdn::build_quasi(&FrdnParams::new(0.4, 1.0).unwrap()).unwrap(), 4, 4),
        ("exp", ConeProcess::exp(&ExpConeProcessParams::default()).unwrap().into_quasi(), 3, 3),
        ("power", ConeProcess::power(&PowerConeProcessParams::default()).unwrap().into_quasi(), 3, 3),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, qr, d, len) in sources {
        let m = qr.num_symbols();
        let basis: Vec<_> = words_up_to(m, len).collect();
        let block = build_hankel(&qr, &basis, &basis, true).unwrap();
        let info = numerical_rank(&block.h, DEFAULT_REL_THRESHOLD).unwrap();
        let learned = learn_regular(&block, d).unwrap();
        let round_trip = words_up_to(m, 6)
            .map(|w| (qr.evaluate(&w).unwrap() - learned.evaluate(&w).unwrap()).abs())
            .fold(0.0, f64::max);
        let spectral = (0..m)
            .map(|s| {
                matching_distance(&eigenvalues(&qr.matrices()[s]).unwrap(), &eigenvalues(&learned.matrices()[s]).unwrap())
            })
            .fold(0.0, f64::max);
        passed &= info.rank == d && info.gap_ratio > 1e6 && round_trip <= 1e-8 && spectral <= 1e-6;
        parts.push(format!(
            "{name}: rank {} (want {d}), gap {:.1e}, round trip {round_trip:.1e}, spectra {spectral:.1e}",
            info.rank, info.gap_ratio
        ));
    }
    outcome(passed, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let db = frdn::quasi_db(&FrdnParams::new(0.4, PI / 7.0).unwrap());
    let w = classical_dim_witness(&db, HULL_ETA, 64).unwrap();
    let mut rng = rng_for(7, 0);
    let mut false_exclusions = 0;
    let mut tested = 0;
    while tested < 100 {
        let d = 1 + (rng.random::<f64>() * 8.0) as usize;
        let m = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>());
        let Ok(wm) = classical_dim_witness(&m, HULL_ETA, d) else { continue };
        tested += 1;
        if wm.entries.iter().any(|e| !roots_hull_membership(e.normalized, d, HULL_ETA)) {
            false_exclusions += 1;
        }
    }
    outcome(
        w.lower_bound == 7 && false_exclusions == 0,
        format!(
            "α = π/7 bound {} (want 7); random nonnegative matrices: {false_exclusions} false exclusions in {tested}",
            w.lower_bound
        ),
    )
}

fn criterion_8() -> Outcome {
    let (s, lambda, n) = (0.5, 0.4, 8);
    let mut ratios = Vec::new();
    let mut worst_dim = 0.0f64;
    for e in [2, 4, 6] {
        let q = 1.0 - 10f64.powi(-e);
        let np = NoiseParams::with_uniform_squeezing(q, s, lambda, PI / n as f64).unwrap();
        let b = noise_dimension_bound(&np, n).unwrap();
        ratios.push(b.n_star * (1.0 - q).sqrt());
        let direct = b.largest_excluded.map_or(f64::INFINITY, |m| m as f64);
        worst_dim = worst_dim.max((direct - b.n_star).abs());
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
    outcome(
        spread < 0.01 && worst_dim <= 1.0,
        format!("n*·√(1−q) = {ratios:.4?}, relative spread {spread:.2e} (< 1%); closed form vs direct {worst_dim:.2} (≤ 1)"),
    )
}

fn criterion_9() -> Outcome {
    let params = FrdnParams::new(0.4, 1.0).unwrap();
    let hqmm = frdn::build_hqmm(&params).unwrap();
    let n = 100_000;
    let seq = sample_sequence((&hqmm).into(), n, 2024).unwrap();
    let p_hat = seq.count(frdn::A) as f64 / n as f64;
    // Batch means account for the serial correlation of the sequence.
    let batches = 100;
    let size = n / batches;
    let means: Vec<f64> = seq
        .symbols()
        .chunks(size)
        .map(|c| c.iter().filter(|&&s| s == frdn::A).count() as f64 / size as f64)
        .collect();
    let var = means.iter().map(|m| (m - p_hat).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let se = (var / batches as f64).sqrt();
    let target = 1.0 / (1.0 + params.tail_sum());
    let renewal = params.stationary_prob_a();
    let z = (p_hat - target) / se;
    let z_renewal = (p_hat - renewal) / se;
    let bytes = |seed| {
        let w = sample_sequence((&hqmm).into(), 10_000, seed).unwrap();
        let mut buf = Vec::new();
        write_binary(&mut buf, &frdn::alphabet(), &w).unwrap();
        buf
    };
    let identical = bytes(99) == bytes(99);
    outcome(
        z.abs() <= 4.0 && identical,
        format!(
            "p̂(a) = {p_hat:.5} ± {se:.5}; [1+Σh]⁻¹ = {target:.5} (z = {z:.1}); \
             [1+Σℓh]⁻¹ = {renewal:.5} (z = {z_renewal:.2}); byte-identical reruns: {identical}"
        ),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut fatal = false;
    for (id, run) in criteria {
        let o = run();
        let known = KNOWN_UNATTAINABLE.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        match (o.passed, known) {
            (true, None) => println!("[{tag}] {id} {}", o.detail),
            (false, None) => {
                println!("[{tag}] {id} {}", o.detail);
                fatal = true;
            }
            (false, Some(why)) => {
                println!("[{tag}] {id} {} — unattainable: {why}", o.detail);
                fatal |= strict;
            }
            (true, Some(_)) => {
                println!("[{tag}] {id} {} — listed as unattainable but passed; update the list", o.detail);
                fatal = true;
            }
        }
    }
    if fatal {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
