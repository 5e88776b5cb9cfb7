use nalgebra::DMatrix;
use quasireal::cones::{check_map_stability, ConeOracle};
use quasireal::separations::{
    check_inclusions, verify_cone_sandwich, ConeProcess, ExpConeProcessParams, OrbitStart,
    PowerConeProcessParams, SandwichConfig,
};
use quasireal::{words_of_length, Tolerances};

fn exp_process() -> ConeProcess {
    ConeProcess::exp(&ExpConeProcessParams::default()).unwrap()
}

fn power_process() -> ConeProcess {
    ConeProcess::power(&PowerConeProcessParams::default()).unwrap()
}

#[test]
fn exp_fixed_points_are_interior() {
    let p = exp_process();
    let tau: Vec<f64> = p.quasi().tau().iter().copied().collect();
    let pi: Vec<f64> = p.quasi().pi().iter().copied().collect();
    assert!(ConeOracle::exp().margin(&tau) > 1e-3);
    assert!(ConeOracle::exp_dual().margin(&pi) > 1e-3);
}

#[test]
fn exp_process_validates_to_length_six() {
    let r = exp_process().quasi().validate(6, &Tolerances::default());
    assert!(r.passed, "{:?}", r.violations);
    assert!(r.min_probability >= -1e-12);
}

#[test]
fn power_process_validates_to_length_four() {
    let p = power_process();
    let r = p.quasi().validate(4, &Tolerances::default());
    assert!(r.passed, "{:?}", r.violations);
    assert!((p.quasi().evaluate(&Default::default()).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn shear_maps_commute_and_compose_in_normal_form() {
    let p = exp_process();
    let m = p.quasi().matrices();
    let (d1, d2) = (&m[1], &m[2]);
    assert!((d1 * d2 - d2 * d1).amax() < 1e-15);
    let (a, b) = p.ab();
    let nu = p.nu();
    for (s, t) in [(3, 5), (10, 2), (0, 7)] {
        let mut prod = DMatrix::identity(3, 3);
        for _ in 0..s {
            prod = &prod * d1;
        }
        for _ in 0..t {
            prod = &prod * d2;
        }
        prod /= nu.powi(s + t);
        let x = s as f64 * a.ln() + t as f64 * b.ln();
        let expected = DMatrix::from_row_slice(3, 3, &[x.exp(), 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, x, 1.0]);
        let scale = expected.amax();
        assert!((prod - expected).amax() < 1e-12 * scale, "s = {s}, t = {t}");
    }
    let pm = power_process();
    let m = pm.quasi().matrices();
    for i in 1..4 {
        for j in 1..4 {
            assert!((&m[i] * &m[j] - &m[j] * &m[i]).amax() < 1e-15);
        }
    }
}

#[test]
fn reset_has_rank_one() {
    let p = exp_process();
    let d0 = &p.quasi().matrices()[0];
    let sv = d0.clone().svd(false, false).singular_values;
    assert!(sv[1] < 1e-14 * sv[0]);
    let probe = DMatrix::from_row_slice(3, 3, &[0.3, -1.0, 2.0, 0.5, 0.1, 0.0, 1.0, 1.0, -0.7]);
    let lhs = d0 * &probe * d0;
    let ratio = lhs[(0, 0)] / d0[(0, 0)];
    assert!((lhs - d0 * ratio).amax() < 1e-12 * d0.amax());
}

#[test]
fn orbit_matches_boundary_curve() {
    let p = exp_process();
    let m0 = p.m0();
    for pt in p.orbit(OrbitStart::Vector(m0), 60) {
        let x = pt.x;
        let raw = [x.exp(), 1.0, x];
        let n = raw.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (got, want) in pt.ray.iter().zip(raw) {
            assert!((got - want / n).abs() < 1e-12, "{pt:?}");
        }
    }
    let first = p.orbit(OrbitStart::Vector(m0), 0);
    assert_eq!(first.len(), 1);
    assert_eq!(first[0].ray, [1.0, 1.0, 0.0]);
}

#[test]
fn orbit_agrees_with_matrix_powers() {
    let p = power_process();
    let m = p.quasi().matrices();
    let nu = p.nu();
    let m0 = nalgebra::DVector::from_row_slice(&p.m0());
    for pt in p.orbit(OrbitStart::Vector(p.m0()), 8) {
        let mut v = m0.clone();
        for _ in 0..pt.s {
            v = &m[1] * v / nu;
        }
        for _ in 0..pt.t {
            v = &m[2] * v / nu;
        }
        for _ in 0..pt.k {
            v = &m[3] * v / nu;
        }
        v /= v.amax();
        for i in 0..3 {
            assert!((v[i] - pt.ray[i]).abs() < 1e-12, "{pt:?} vs {v}");
        }
        assert!(p.cone().contains(&pt.ray));
    }
}

#[test]
fn orbit_survives_extreme_parameters() {
    let p = exp_process();
    let pts = p.orbit(OrbitStart::Vector(p.m0()), 1200);
    assert!(pts.iter().any(|pt| pt.x > 700.0));
    assert!(pts.iter().all(|pt| pt.ray.iter().all(|v| v.is_finite())));
    assert!(pts.iter().all(|pt| p.cone().contains(&pt.ray)));
    let dual = p.orbit(OrbitStart::Covector(p.mu0()), 400);
    assert!(dual.iter().all(|pt| p.dual_cone().contains(&pt.ray)));
}

#[test]
fn orbit_covers_window_densely() {
    let p = exp_process();
    let xs: Vec<f64> = p.orbit(OrbitStart::Vector(p.m0()), 200).iter().map(|pt| pt.x).collect();
    let gap = quasireal::separations::max_gap(&xs, (-20.0, 20.0));
    assert!(gap < 0.8, "gap {gap}");
}

#[test]
fn density_gap_shrinks_with_budget() {
    let p = exp_process();
    let gaps: Vec<f64> = [20, 50, 100, 200]
        .iter()
        .map(|&b| quasireal::separations::max_gap(&p.achieved_parameters(b), (-15.0, 15.0)))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
}

#[test]
fn exp_sandwich_passes() {
    let p = exp_process();
    let cfg = SandwichConfig { max_len: 12, ..Default::default() };
    let r = verify_cone_sandwich(&p, &p.cone(), &p.dual_cone(), &cfg).unwrap();
    assert!(r.cmin_pass && r.cmax_pass, "{r:?}");
    assert!(r.density_gap < 1.0);
    assert!(r.consistent);
}

#[test]
fn power_sandwich_passes() {
    let p = power_process();
    let cfg = SandwichConfig { max_len: 10, ..Default::default() };
    let r = verify_cone_sandwich(&p, &p.cone(), &p.dual_cone(), &cfg).unwrap();
    assert!(r.cmin_pass && r.cmax_pass, "{r:?}");
    assert!(r.consistent);
}

#[test]
fn exp_process_is_not_contained_in_square_root_cone() {
    let p = exp_process();
    let k = ConeOracle::power(0.5).unwrap();
    let r = check_inclusions(p.quasi(), &k, &k.dual(), 6).unwrap();
    assert!(!r.cmin_pass);
    let w = r.witness.expect("witness");
    assert_eq!(w.side, "primal");
    assert!(!k.contains(&w.vector));
}

#[test]
fn symbol_maps_are_cone_stable() {
    for p in [exp_process(), power_process()] {
        let r = check_map_stability(p.quasi().matrices(), &p.cone(), &p.dual_cone(), 10_000, 11).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn probabilities_of_short_words_are_nonnegative() {
    let p = power_process();
    for w in words_of_length(4, 3) {
        assert!(p.quasi().evaluate(&w).unwrap() >= -1e-12);
    }
}
