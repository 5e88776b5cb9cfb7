//! Quasi-realizations whose unique stable cone is the exponential cone or a
//! power cone, together with orbit generation and the inclusion battery
//! `cl C_min ⊆ K ⊆ C_max` that supports their non-quantum-realizability.
//!
//! Both processes share one shape: a rank-one "reset" `D₀ = ν m₀ μ₀ᵀ` and
//! commuting invertible maps whose joint orbit of `m₀` (resp. `μ₀`) sweeps the
//! boundary curve of the cone (resp. its dual). Incommensurability of
//! `ln a / ln b` makes the sweep dense; floating point cannot certify
//! irrationality, so the surrogate used here is "no continued-fraction
//! convergent with denominator ≤ 10⁶ reproduces the ratio to 1e−14".

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::Serialize;

use crate::cones::ConeOracle;
use crate::linalg::inf_norm;
use crate::spectrum::stationary_pair;
use crate::word::Alphabet;
use crate::{Error, QuasiRealization, Result};

/// Largest denominator tried by the commensurability surrogate.
pub const MAX_DENOMINATOR: u64 = 1_000_000;
/// Relative tolerance of the commensurability surrogate.
pub const RATIONAL_TOL: f64 = 1e-14;

const TOL_EIG: f64 = 1e-8;

/// Parameters of the three-letter process whose stable cone is `K_exp`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpConeProcessParams {
    pub a: f64,
    pub b: f64,
    pub m0: [f64; 3],
    pub mu0: [f64; 3],
}

impl ExpConeProcessParams {
    /// `m₀ = (e^{m03}, 1, m03)` lies on the boundary curve of `K_exp` and
    /// `μ₀ = (e^{−μ02−1}, μ02, −1)` on that of `K_exp*`.
    pub fn new(a: f64, b: f64, m03: f64, mu02: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && m03.is_finite() && mu02.is_finite()) {
            return Err(Error::NonFinite("exponential-cone process parameters".into()));
        }
        if !(a > 1.0 && b > 0.0 && b < 1.0) {
            return Err(Error::Parameter(format!("need a > 1 > b > 0, got a = {a}, b = {b}")));
        }
        if (a + b - 2.0).abs() < 1e-12 {
            return Err(Error::Parameter("need a + b ≠ 2".into()));
        }
        Ok(Self { a, b, m0: [m03.exp(), 1.0, m03], mu0: [(-mu02 - 1.0).exp(), mu02, -1.0] })
    }
}

impl Default for ExpConeProcessParams {
    /// `a = e`, `b = 1/2`, `m₀ = (1, 1, 0)`, `μ₀ = (1, −1, −1)`.
    fn default() -> Self {
        Self::new(std::f64::consts::E, 0.5, 0.0, -1.0).expect("valid defaults")
    }
}

/// Parameters of the four-letter process whose stable cone is `K_α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerConeProcessParams {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub m0: [f64; 3],
    pub mu0: [f64; 3],
}

impl PowerConeProcessParams {
    /// `m₀ = (m03^{(α−1)/α}, 1, m03)` lies on the boundary of `K_α` and
    /// `μ₀ = (α (μ03/(1−α))^{(α−1)/α}, 1, μ03)` on that of `K_α*`.
    pub fn new(alpha: f64, a: f64, b: f64, m03: f64, mu03: f64) -> Result<Self> {
        if ![alpha, a, b, m03, mu03].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("power-cone process parameters".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!("α = {alpha} must lie in (0, 1)")));
        }
        if !(a > 1.0 && b > 0.0 && b < 1.0) {
            return Err(Error::Parameter(format!("need a > 1 > b > 0, got a = {a}, b = {b}")));
        }
        if !(m03 > 0.0 && mu03 > 0.0) {
            return Err(Error::Parameter("m03 and μ03 must be positive".into()));
        }
        let e = alpha / (alpha - 1.0);
        let (pa, pb) = (a.powf(e), b.powf(e));
        let distinct = |x: f64, y: f64| (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0);
        if !distinct(a + b, 1.0) || !distinct(pa + pb, 1.0) || !distinct(a + b, pa + pb) {
            return Err(Error::Parameter(
                "need a + b, a^{α/(α−1)} + b^{α/(α−1)} and 1 pairwise distinct".into(),
            ));
        }
        let k = (alpha - 1.0) / alpha;
        Ok(Self {
            alpha,
            a,
            b,
            m0: [m03.powf(k), 1.0, m03],
            mu0: [alpha * (mu03 / (1.0 - alpha)).powf(k), 1.0, mu03],
        })
    }
}

impl Default for PowerConeProcessParams {
    /// `α = 1/√2`, `a = e`, `b = 1/2`, `m03 = μ03 = 1`.
    fn default() -> Self {
        Self::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::E, 0.5, 1.0, 1.0).expect("valid defaults")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Exp,
    Power { alpha: f64 },
}

/// A rational `p/q` reproducing a quantity that should be irrational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RationalMatch {
    pub numerator: i64,
    pub denominator: u64,
}

/// One of the two separating processes.
#[derive(Clone, Debug)]
pub struct ConeProcess {
    kind: ProcessKind,
    qr: QuasiRealization,
    nu: f64,
    a: f64,
    b: f64,
    m0: [f64; 3],
    mu0: [f64; 3],
    gap_ratio: f64,
    log_ratio_match: Option<RationalMatch>,
    alpha_match: Option<RationalMatch>,
}

/// Where an orbit starts: a column vector (pushed by `D x`) or a row
/// covector (pushed by `f D`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitStart {
    Vector([f64; 3]),
    Covector([f64; 3]),
}

/// `D₁^s D₂^t D₃^k` applied to the start, as a ray of unit max-norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub s: usize,
    pub t: usize,
    pub k: usize,
    /// `s ln a + t ln b`.
    pub x: f64,
    pub ray: [f64; 3],
}

impl ConeProcess {
    pub fn exp(params: &ExpConeProcessParams) -> Result<Self> {
        let (a, b) = (params.a, params.b);
        let shear = |c: f64| DMatrix::from_row_slice(3, 3, &[c, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, c.ln(), 1.0]);
        let mats = vec![outer(&params.m0, &params.mu0), shear(a), shear(b)];
        let ratio = a.ln() / b.ln();
        Self::assemble(ProcessKind::Exp, mats, a, b, params.m0, params.mu0, ratio, None)
    }

    pub fn power(params: &PowerConeProcessParams) -> Result<Self> {
        let (a, b, alpha) = (params.a, params.b, params.alpha);
        let e = alpha / (alpha - 1.0);
        let diag = |x: [f64; 3]| DMatrix::from_diagonal(&DVector::from_row_slice(&x));
        let mats = vec![
            outer(&params.m0, &params.mu0),
            diag([a, 1.0, a.powf(e)]),
            diag([b, 1.0, b.powf(e)]),
            diag([1.0, -1.0, 1.0]),
        ];
        let ratio = a.ln() / b.ln();
        let alpha_match = rational_surrogate(alpha, MAX_DENOMINATOR, RATIONAL_TOL);
        Self::assemble(ProcessKind::Power { alpha }, mats, a, b, params.m0, params.mu0, ratio, alpha_match)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: ProcessKind,
        mats: Vec<DMatrix<f64>>,
        a: f64,
        b: f64,
        m0: [f64; 3],
        mu0: [f64; 3],
        ratio: f64,
        alpha_match: Option<RationalMatch>,
    ) -> Result<Self> {
        let pair = stationary_pair(&mats, TOL_EIG)?;
        let nu = pair.nu;
        let mats: Vec<DMatrix<f64>> = mats.into_iter().map(|m| m * nu).collect();
        let (pi, tau) = (pair.pi, pair.tau);

        let m0v = DVector::from_row_slice(&m0);
        let mu0v = RowDVector::from_row_slice(&mu0);
        let reset_tau = (&mu0v * &tau)[0];
        let reset_pi = (&pi * &m0v)[0];
        if reset_tau.abs() <= 1e-12 * mu0v.norm() * tau.norm() {
            return Err(Error::Construction("the reset annihilates τ (D₀τ = 0)".into()));
        }
        if reset_pi.abs() <= 1e-12 * pi.norm() * m0v.norm() {
            return Err(Error::Construction("the reset annihilates π (πD₀ = 0)".into()));
        }
        let labels: Vec<String> = (0..mats.len()).map(|i| i.to_string()).collect();
        let qr = QuasiRealization::new(Alphabet::with_labels(labels)?, pi, tau, mats)?;
        Ok(Self {
            kind,
            qr,
            nu,
            a,
            b,
            m0,
            mu0,
            gap_ratio: pair.gap_ratio,
            log_ratio_match: rational_surrogate(ratio, MAX_DENOMINATOR, RATIONAL_TOL),
            alpha_match,
        })
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn quasi(&self) -> &QuasiRealization {
        &self.qr
    }

    pub fn into_quasi(self) -> QuasiRealization {
        self.qr
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn m0(&self) -> [f64; 3] {
        self.m0
    }

    pub fn mu0(&self) -> [f64; 3] {
        self.mu0
    }

    pub fn ab(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// `|λ₂| / ρ` of the letter sum.
    pub fn gap_ratio(&self) -> f64 {
        self.gap_ratio
    }

    /// A rational matching `ln a / ln b`, if the surrogate finds one.
    pub fn log_ratio_match(&self) -> Option<RationalMatch> {
        self.log_ratio_match
    }

    /// A rational matching `α`, if the surrogate finds one (power process only).
    pub fn alpha_match(&self) -> Option<RationalMatch> {
        self.alpha_match
    }

    /// Whether the parameters pass the incommensurability surrogate.
    pub fn is_incommensurate(&self) -> bool {
        self.log_ratio_match.is_none() && self.alpha_match.is_none()
    }

    /// The cone the process is built around.
    pub fn cone(&self) -> ConeOracle {
        match self.kind {
            ProcessKind::Exp => ConeOracle::exp(),
            ProcessKind::Power { alpha } => ConeOracle::power(alpha).expect("validated exponent"),
        }
    }

    pub fn dual_cone(&self) -> ConeOracle {
        self.cone().dual()
    }

    /// Fixed points rescaled so that `τ₃ = 1` and `|π₃| = 1`.
    pub fn scaled_fixed_points(&self) -> ([f64; 3], [f64; 3]) {
        let (t, p) = (self.qr.tau(), self.qr.pi());
        let ts = t[2];
        let ps = p[2].abs();
        ([t[0] / ts, t[1] / ts, 1.0], [p[0] / ps, p[1] / ps, p[2] / ps])
    }

    /// Orbit of `start` under `ν^{−s−t−k} D₁^s D₂^t D₃^k` for
    /// `s + t (+ k) ≤ max_len`, ordered by total length, then by decreasing
    /// `s`, then by `k`. Coordinates are composed in log space, so the
    /// orbit is exact in direction even where `e^{±x}` overflows.
    pub fn orbit(&self, start: OrbitStart, max_len: usize) -> Vec<OrbitPoint> {
        let (la, lb) = (self.a.ln(), self.b.ln());
        let max_k = match self.kind {
            ProcessKind::Exp => 0,
            ProcessKind::Power { .. } => 1,
        };
        let mut out = Vec::new();
        for n in 0..=max_len {
            for k in 0..=max_k.min(n) {
                for s in (0..=n - k).rev() {
                    let t = n - k - s;
                    let x = s as f64 * la + t as f64 * lb;
                    out.push(OrbitPoint { s, t, k, x, ray: self.normal_form_ray(start, x, k) });
                }
            }
        }
        out
    }

    fn normal_form_ray(&self, start: OrbitStart, x: f64, k: usize) -> [f64; 3] {
        // Each coordinate is a sum of terms (log magnitude, sign).
        let terms: [Vec<(f64, f64)>; 3] = match (self.kind, start) {
            (ProcessKind::Exp, OrbitStart::Vector(v)) => {
                [vec![lterm(v[0], x)], vec![lterm(v[1], 0.0)], vec![lterm(v[1] * x, 0.0), lterm(v[2], 0.0)]]
            }
            (ProcessKind::Exp, OrbitStart::Covector(f)) => {
                [vec![lterm(f[0], x)], vec![lterm(f[1], 0.0), lterm(f[2] * x, 0.0)], vec![lterm(f[2], 0.0)]]
            }
            (ProcessKind::Power { alpha }, OrbitStart::Vector(v) | OrbitStart::Covector(v)) => {
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                let e = alpha / (alpha - 1.0);
                [vec![lterm(v[0], x)], vec![lterm(sign * v[1], 0.0)], vec![lterm(v[2], e * x)]]
            }
        };
        let top = terms
            .iter()
            .flatten()
            .filter(|(_, s)| *s != 0.0)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return [0.0; 3];
        }
        let eval = |c: &Vec<(f64, f64)>| c.iter().map(|(l, s)| s * (l - top).exp()).sum::<f64>();
        let ray = [eval(&terms[0]), eval(&terms[1]), eval(&terms[2])];
        let m = ray.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        [ray[0] / m, ray[1] / m, ray[2] / m]
    }

    /// Boundary-curve parameters reached by the `m₀` orbit with
    /// `s + t ≤ budget`, read off the rays by the process's own cone.
    pub fn achieved_parameters(&self, budget: usize) -> Vec<f64> {
        let cone = self.cone();
        let mut xs: Vec<f64> = self
            .orbit(OrbitStart::Vector(self.m0), budget)
            .iter()
            .filter(|p| p.k == 0)
            .filter_map(|p| cone.boundary_parameter(&p.ray))
            .collect();
        xs.sort_by(f64::total_cmp);
        xs
    }
}

/// `sign(v)·e^{ln|v| + shift}` as a (log magnitude, sign) pair.
fn lterm(v: f64, shift: f64) -> (f64, f64) {
    if v == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (v.abs().ln() + shift, v.signum())
    }
}

fn outer(m: &[f64; 3], mu: &[f64; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| m[i] * mu[j])
}

/// Continued-fraction search for `p/q` with `q ≤ max_den` and
/// `|x − p/q| ≤ rel_tol · max(1, |x|)`.
pub fn rational_surrogate(x: f64, max_den: u64, rel_tol: f64) -> Option<RationalMatch> {
    if !x.is_finite() {
        return None;
    }
    let tol = rel_tol * x.abs().max(1.0);
    let (mut h_prev, mut h) = (1i128, x.floor() as i128);
    let (mut k_prev, mut k) = (0i128, 1i128);
    let mut frac = x - x.floor();
    loop {
        if (x - h as f64 / k as f64).abs() <= tol {
            return Some(RationalMatch { numerator: h as i64, denominator: k as u64 });
        }
        if frac.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        if a > max_den as f64 {
            return None;
        }
        let a = a as i128;
        let (h_next, k_next) = (a * h + h_prev, a * k + k_prev);
        if k_next > max_den as i128 {
            return None;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
    }
}

/// Largest gap between consecutive sorted `xs` inside `[lo, hi]`, counting
/// the distance from each window edge to the nearest point.
pub fn max_gap(xs: &[f64], window: (f64, f64)) -> f64 {
    let (lo, hi) = window;
    let mut inside: Vec<f64> = xs.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
    inside.sort_by(f64::total_cmp);
    let mut prev = lo;
    let mut gap = 0.0f64;
    for x in inside {
        gap = gap.max(x - prev);
        prev = x;
    }
    gap.max(hi - prev)
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichConfig {
    /// Longest word whose `D^(u)τ` and `πD^(u)` are tested.
    pub max_len: usize,
    pub density_window: (f64, f64),
    /// Orbit budget `s + t` for the density metric.
    pub orbit_budget: usize,
    /// Largest acceptable density gap.
    pub gap_threshold: f64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        Self { max_len: 12, density_window: (-15.0, 15.0), orbit_budget: 200, gap_threshold: 1.0 }
    }
}

/// A generator that fails its membership test.
#[derive(Clone, Debug, Serialize)]
pub struct InclusionWitness {
    pub word: Vec<usize>,
    pub side: &'static str,
    pub vector: Vec<f64>,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub max_len: usize,
    pub generators_checked: usize,
    pub cmin_pass: bool,
    pub cmax_pass: bool,
    pub worst_primal_slack: f64,
    pub worst_dual_slack: f64,
    pub witness: Option<InclusionWitness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub cmin_pass: bool,
    pub cmax_pass: bool,
    pub worst_slack: f64,
    pub density_gap: f64,
    pub density_window: (f64, f64),
    pub orbit_budget: usize,
    pub density_flagged: bool,
    pub log_ratio_match: Option<RationalMatch>,
    pub alpha_match: Option<RationalMatch>,
    pub witness: Option<InclusionWitness>,
    pub generators_checked: usize,
    /// All inclusions hold and the orbit is (numerically) dense: the
    /// evidence is consistent with `cone` being the unique stable cone.
    pub consistent: bool,
}

/// Tests every generator `D^(u)τ` of `C_min` against `cone` and every
/// generator `πD^(u)` of `C_max*` against `dual`, for `|u| ≤ max_len`.
pub fn check_inclusions(
    qr: &QuasiRealization,
    cone: &ConeOracle,
    dual: &ConeOracle,
    max_len: usize,
) -> Result<InclusionReport> {
    let d = qr.dim();
    if cone.dim() != d || dual.dim() != d {
        return Err(Error::Dimension(format!("cones of dimension {} do not match the model dimension {d}", cone.dim())));
    }
    let mats = qr.matrices();
    let transposed: Vec<DMatrix<f64>> = mats.iter().map(|m| m.transpose()).collect();
    let mut primal = Walk::new(cone);
    // D^(σu)τ = D_σ (D^(u)τ): prepend symbols to a column vector.
    primal.run(mats, qr.tau().clone(), max_len);
    let mut dual_walk = Walk::new(dual);
    // πD^(uσ) = (πD^(u)) D_σ: append symbols to a row vector.
    dual_walk.run(&transposed, qr.pi().transpose(), max_len);

    let witness = primal
        .witness
        .map(|(word, vector, slack)| InclusionWitness { word: reversed(word), side: "primal", vector, slack })
        .or(dual_walk.witness.map(|(word, vector, slack)| InclusionWitness { word, side: "dual", vector, slack }));
    Ok(InclusionReport {
        max_len,
        generators_checked: primal.count + dual_walk.count,
        cmin_pass: primal.worst >= -cone.eta,
        cmax_pass: dual_walk.worst >= -dual.eta,
        worst_primal_slack: primal.worst,
        worst_dual_slack: dual_walk.worst,
        witness,
    })
}

fn reversed(mut w: Vec<usize>) -> Vec<usize> {
    w.reverse();
    w
}

struct Walk<'a> {
    cone: &'a ConeOracle,
    worst: f64,
    count: usize,
    witness: Option<(Vec<usize>, Vec<f64>, f64)>,
}

impl<'a> Walk<'a> {
    fn new(cone: &'a ConeOracle) -> Self {
        Self { cone, worst: f64::INFINITY, count: 0, witness: None }
    }

    fn run(&mut self, mats: &[DMatrix<f64>], start: DVector<f64>, max_len: usize) {
        let mut path = Vec::with_capacity(max_len);
        let norms: Vec<f64> = mats.iter().map(inf_norm).collect();
        let scale = start.amax();
        self.visit(mats, &norms, &start, scale, &mut path, max_len);
    }

    /// `scale` is `‖D_σ‖∞ ‖v_prev‖∞` for the step that produced `v`, so an
    /// image that cancels to rounding noise is judged against the size of
    /// the map rather than magnified to unit length.
    fn visit(
        &mut self,
        mats: &[DMatrix<f64>],
        norms: &[f64],
        v: &DVector<f64>,
        scale: f64,
        path: &mut Vec<usize>,
        left: usize,
    ) {
        self.count += 1;
        let slack = if scale > 0.0 { self.cone.margin_scaled(v.as_slice(), scale) } else { 0.0 };
        if slack < self.worst {
            self.worst = slack;
            if slack < -self.cone.eta {
                self.witness = Some((path.clone(), v.iter().copied().collect(), slack));
            }
        }
        if left == 0 {
            return;
        }
        let vn = v.amax();
        for (sigma, m) in mats.iter().enumerate() {
            path.push(sigma);
            let next = m * v;
            self.visit(mats, norms, &next, norms[sigma] * vn, path, left - 1);
            path.pop();
        }
    }
}

/// The full battery: inclusions for words up to `max_len` and the density of
/// the boundary-curve orbit within `density_window`.
pub fn verify_cone_sandwich(
    process: &ConeProcess,
    cone: &ConeOracle,
    dual: &ConeOracle,
    config: &SandwichConfig,
) -> Result<SandwichReport> {
    let inc = check_inclusions(process.quasi(), cone, dual, config.max_len)?;
    let xs = process.achieved_parameters(config.orbit_budget);
    let density_gap = max_gap(&xs, config.density_window);
    let density_flagged = !process.is_incommensurate() || density_gap.partial_cmp(&config.gap_threshold) != Some(std::cmp::Ordering::Less);
    let worst_slack = inc.worst_primal_slack.min(inc.worst_dual_slack);
    Ok(SandwichReport {
        cmin_pass: inc.cmin_pass,
        cmax_pass: inc.cmax_pass,
        worst_slack,
        density_gap,
        density_window: config.density_window,
        orbit_budget: config.orbit_budget,
        density_flagged,
        log_ratio_match: process.log_ratio_match(),
        alpha_match: process.alpha_match(),
        witness: inc.witness,
        generators_checked: inc.generators_checked,
        consistent: inc.cmin_pass && inc.cmax_pass && !density_flagged,
    })
}
