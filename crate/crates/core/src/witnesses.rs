//! Spectral witnesses against classical (non-negative) realizability.
//!
//! * Every normalized eigenvalue of an `n×n` non-negative matrix lies in the
//!   convex hull of the `k`-th roots of unity, `k ≤ n`; an eigenvalue outside
//!   that hull excludes classical realizations of dimension `n`.
//! * Poles of `Σ_n z^{−n} p(a bⁿ a)` are realization-independent, so only
//!   eigenvalues of `D_b` that are genuine poles may feed the witness.
//! * For the depolarized qubit family, a perturbation bound turns the pole
//!   argument into an explicit excluded dimension growing like `(1−q)^{−1/2}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::frdn::NoiseParams;
use crate::linalg::{c, null_space_complex, to_complex, CMatrix, C64};
use crate::spectrum::eigenvalues;
use crate::{Error, QuasiRealization, Result};

/// Default tolerance of the hull test in the complex plane.
pub const HULL_ETA: f64 = 1e-9;
/// Relative width of a modulus shell.
pub const SHELL_WIDTH: f64 = 1e-8;

fn serialize_complex<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// Exact comparison key for a fraction `j/k` of a full turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Turn {
    j: u64,
    k: u64,
}

impl Turn {
    fn less(self, other: Turn) -> bool {
        (self.j as u128) * (other.k as u128) < (other.j as u128) * (self.k as u128)
    }

    fn point(self) -> C64 {
        let t = 2.0 * PI * self.j as f64 / self.k as f64;
        c(t.cos(), t.sin())
    }
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// Angular neighbours of `x ∈ [0, 1)` among fractions with denominator ≤ n:
/// the largest `j/k ≤ x` and the smallest `j/k > x` (as computed in floating
/// point; ties are harmless because distances are measured geometrically).
fn farey_neighbours(x: f64, n: u64) -> (Turn, Turn) {
    let mut lo = Turn { j: 0, k: 1 };
    let mut hi = Turn { j: 1, k: 1 };
    for k in 1..=n {
        let j = ((x * k as f64).floor().max(0.0) as u64).min(k);
        let below = Turn { j, k };
        if lo.less(below) {
            lo = below;
        }
        let above = Turn { j: (j + 1).min(k), k };
        if lo.less(above) && above.less(hi) {
            hi = above;
        }
    }
    (lo, hi)
}

/// The nearest neighbour on the other side of `t` (for adjacent edges).
fn farey_step(t: Turn, n: u64, up: bool) -> Turn {
    let mut best = if up { Turn { j: 1, k: 1 } } else { Turn { j: 0, k: 1 } };
    for k in 1..=n {
        // Candidates j/k strictly beyond t.
        let base = (t.j as u128 * k as u128) / t.k as u128;
        let cand = if up {
            let j = base as u64 + 1;
            if j > k {
                continue;
            }
            Turn { j, k }
        } else {
            let exact = base * t.k as u128 == t.j as u128 * k as u128;
            let j = if exact { base as i128 - 1 } else { base as i128 };
            if j < 0 {
                continue;
            }
            Turn { j: j as u64, k }
        };
        let better = if up { cand.less(best) && t.less(cand) } else { best.less(cand) && cand.less(t) };
        if better {
            best = cand;
        }
    }
    best
}

/// Whether `z` lies within distance `eta` of `conv{e^{2πij/k} : k ≤ n}`.
///
/// All roots of unity lie on the unit circle, so every distinct root is a
/// hull vertex and the edge crossed by the ray through `z` joins the two
/// angular (Farey) neighbours of `arg z / 2π`.
pub fn roots_hull_membership(z: C64, n: usize, eta: f64) -> bool {
    if !(z.re.is_finite() && z.im.is_finite()) || n == 0 || z.norm() > 1.0 + eta {
        return false;
    }
    match n {
        1 => return (z - c(1.0, 0.0)).norm() <= eta,
        2 => return segment_distance(z, c(-1.0, 0.0), c(1.0, 0.0)) <= eta,
        _ => {}
    }
    let n = n as u64;
    let mut x = z.arg() / (2.0 * PI);
    if x < 0.0 {
        x += 1.0;
    }
    if x >= 1.0 {
        x = 0.0;
    }
    let (lo, hi) = farey_neighbours(x, n);
    let (a, b) = (lo.point(), hi.point());
    // The hull contains the origin for n ≥ 3; inside iff on the origin side of ab.
    let cross = (b - a).re * (z - a).im - (b - a).im * (z - a).re;
    if cross >= 0.0 {
        return true;
    }
    let prev = farey_step(lo, n, false).point();
    let next = farey_step(hi, n, true).point();
    let d = segment_distance(z, a, b)
        .min(segment_distance(z, prev, a))
        .min(segment_distance(z, b, next));
    d <= eta
}

/// Least `n ≤ n_max` with `z` in the hull, by bisection (membership is
/// monotone in `n` because the hulls are nested).
pub fn least_hull_order(z: C64, n_max: usize, eta: f64) -> Option<usize> {
    if n_max == 0 || !roots_hull_membership(z, n_max, eta) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, n_max); // invariant: fails at lo (or lo = 0), passes at hi
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if roots_hull_membership(z, mid, eta) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseEntry {
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalue: C64,
    /// `z / ρ`.
    #[serde(serialize_with = "serialize_complex")]
    pub normalized: C64,
    pub top_shell: bool,
    /// Least `n` whose roots-of-unity hull contains `z/ρ`; `None` if it
    /// exceeds the search limit.
    pub least_n: Option<usize>,
}

/// Phase-based lower bound on the dimension of a non-negative realization.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseWitness {
    pub spectral_radius: f64,
    pub eta: f64,
    pub n_max: usize,
    pub entries: Vec<PhaseEntry>,
    /// Largest `least_n` over the top shell; `n_max + 1` if any top-shell
    /// eigenvalue escapes every tested hull.
    pub lower_bound: usize,
    pub exceeds_search: bool,
}

impl PhaseWitness {
    /// The bound restricted to top-shell eigenvalues that are certified
    /// poles (matched within `tol`).
    pub fn bound_over_poles(&self, poles: &[C64], tol: f64) -> usize {
        self.entries
            .iter()
            .filter(|e| e.top_shell && poles.iter().any(|p| (p - e.eigenvalue).norm() <= tol))
            .map(|e| e.least_n.unwrap_or(self.n_max + 1))
            .max()
            .unwrap_or(1)
    }
}

/// Hull orders of the normalized eigenvalues of `db`; only the maximal
/// modulus shell contributes to the bound.
pub fn classical_dim_witness(db: &DMatrix<f64>, eta: f64, n_max: usize) -> Result<PhaseWitness> {
    let ev = eigenvalues(db)?;
    let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = db.amax();
    if rho <= 1e-14 * scale.max(f64::MIN_POSITIVE) || rho == 0.0 {
        return Err(Error::Parameter("spectral radius vanishes; phases are undefined".into()));
    }
    let entries: Vec<PhaseEntry> = ev
        .iter()
        .map(|&z| {
            let top = z.norm() >= rho * (1.0 - SHELL_WIDTH);
            let normalized = z / rho;
            PhaseEntry { eigenvalue: z, normalized, top_shell: top, least_n: least_hull_order(normalized, n_max, eta) }
        })
        .collect();
    let exceeds_search = entries.iter().any(|e| e.top_shell && e.least_n.is_none());
    let lower_bound = entries
        .iter()
        .filter(|e| e.top_shell)
        .map(|e| e.least_n.unwrap_or(n_max + 1))
        .max()
        .unwrap_or(1)
        .max(1);
    Ok(PhaseWitness { spectral_radius: rho, eta, n_max, entries, lower_bound, exceeds_search })
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleEntry {
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalue: C64,
    /// `c_i = π D_a P_i D_a τ`, so that `p(a bⁿ a) = Σ_i c_i λ_iⁿ` for `n ≥ 1`;
    /// this is the residue of `π D_a (zI − D_b)⁻¹ D_a τ` at `λ_i`.
    #[serde(serialize_with = "serialize_complex")]
    pub residue: C64,
    pub multiplicity: usize,
    pub is_pole: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleReport {
    pub entries: Vec<PoleEntry>,
    /// `D_a τ = 0` or `π D_a = 0`: the generating function vanishes.
    pub degenerate: bool,
    pub tol: f64,
}

impl PoleReport {
    pub fn poles(&self) -> Vec<C64> {
        self.entries.iter().filter(|e| e.is_pole).map(|e| e.eigenvalue).collect()
    }
}

/// Clusters eigenvalues and returns (representative, multiplicity).
fn cluster(ev: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize, C64)> = Vec::new();
    for &z in ev {
        if let Some(c) = out.iter_mut().find(|c| (c.0 - z).norm() <= tol) {
            c.1 += 1;
            c.2 += z;
        } else {
            out.push((z, 1, z));
        }
    }
    out.into_iter().map(|(_, m, s)| (s / m as f64, m)).collect()
}

/// Spectral projector onto the eigenspace of `lambda` (multiplicity `m`).
fn projector(d: &CMatrix, lambda: C64, m: usize, rank_tol: f64) -> Result<CMatrix> {
    let n = d.nrows();
    let shifted = d - CMatrix::identity(n, n) * lambda;
    let (right, sv_r) = null_space_complex(&shifted, m)?;
    let (left, sv_l) = null_space_complex(&shifted.transpose(), m)?;
    let small_r = sv_r[n - m];
    let small_l = sv_l[n - m];
    if small_r > rank_tol || small_l > rank_tol {
        return Err(Error::JordanStructure { re: lambda.re, im: lambda.im });
    }
    let gram = left.transpose() * &right;
    let inv = gram
        .clone()
        .try_inverse()
        .ok_or(Error::JordanStructure { re: lambda.re, im: lambda.im })?;
    // A near-singular pairing of left and right eigenvectors signals a
    // (numerically) defective eigenvalue.
    let cond = gram.norm() * inv.norm();
    if !cond.is_finite() || cond > 1e10 {
        return Err(Error::JordanStructure { re: lambda.re, im: lambda.im });
    }
    Ok(&right * inv * left.transpose())
}

/// Eigenvalues of `D_b` with their residues in the generating function of
/// `p(a bⁿ a)`; eigenvalues with `|residue| > tol·‖πD_a‖‖D_aτ‖` (and
/// non-zero modulus) are certified poles.
pub fn pole_report(qr: &QuasiRealization, b: usize, a: usize, tol: f64) -> Result<PoleReport> {
    let db = qr.matrix(b)?;
    let da = qr.matrix(a)?;
    let left = qr.pi() * da;
    let right = da * qr.tau();
    let scale = left.norm() * right.norm();
    let n = qr.dim();
    if scale <= 1e-300 || left.amax() <= 1e-14 * qr.pi().amax() * da.amax() || right.amax() <= 1e-14 * qr.tau().amax() * da.amax() {
        return Ok(PoleReport { entries: Vec::new(), degenerate: true, tol });
    }
    let ev = eigenvalues(db)?;
    let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let norm = db.amax().max(f64::MIN_POSITIVE) * n as f64;
    let cluster_tol = 1e-8 * norm.max(1e-300);
    let dc = to_complex(db);
    let lc = CMatrix::from_fn(1, n, |_, j| c(left[j], 0.0));
    let rc = CMatrix::from_fn(n, 1, |i, _| c(right[i], 0.0));
    let mut entries = Vec::new();
    for (lambda, m) in cluster(&ev, cluster_tol) {
        let p = projector(&dc, lambda, m, 1e-7 * norm)?;
        let residue = (&lc * p * &rc)[(0, 0)];
        let nonzero = lambda.norm() > 1e-12 * rho.max(f64::MIN_POSITIVE);
        entries.push(PoleEntry { eigenvalue: lambda, residue, multiplicity: m, is_pole: nonzero && residue.norm() > tol * scale });
    }
    Ok(PoleReport { entries, degenerate: false, tol })
}

/// `(1/2πi) ∮ π D_a (zI − D_b)⁻¹ D_a τ dz` over a circle of radius `radius`
/// around `center`, by the trapezoidal rule with `points` nodes.
pub fn contour_residue(
    qr: &QuasiRealization,
    b: usize,
    a: usize,
    center: C64,
    radius: f64,
    points: usize,
) -> Result<C64> {
    let db = to_complex(qr.matrix(b)?);
    let da = qr.matrix(a)?;
    let n = qr.dim();
    let (left, right) = (qr.pi() * da, da * qr.tau());
    let l = CMatrix::from_fn(1, n, |_, j| c(left[j], 0.0));
    let r = CMatrix::from_fn(n, 1, |i, _| c(right[i], 0.0));
    let mut acc = c(0.0, 0.0);
    for k in 0..points {
        let t = 2.0 * PI * k as f64 / points as f64;
        let w = c(t.cos(), t.sin()) * radius;
        let z = center + w;
        let resolvent = (CMatrix::identity(n, n) * z - &db)
            .try_inverse()
            .ok_or_else(|| Error::Numerical("contour passes through an eigenvalue".into()))?;
        // dz = i w dt, and 1/(2πi) · i w · (2π/points) = w / points.
        acc += (&l * resolvent * &r)[(0, 0)] * w / points as f64;
    }
    Ok(acc)
}

/// Classical-dimension exclusion for the depolarized qubit family with
/// `α = π/n`.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionBound {
    pub q: f64,
    pub s: f64,
    pub r: f64,
    pub lambda: f64,
    pub n: usize,
    /// `2(1−q)s cosh 4r`: radius of the eigenvalue perturbation.
    pub perturbation: f64,
    /// `2(1−q)s cosh 4r ≤ qλ |sin(π/n)|`: the noisy complex pair stays
    /// separated from the real axis.
    pub applicable: bool,
    /// `4(1−q)s cosh 4r ≤ qλ (π/n)²/6`: dimension below `n` is excluded.
    pub excluded: bool,
    /// Largest `n'` satisfying both inequalities, by direct evaluation.
    pub largest_excluded: Option<usize>,
    /// `π √(qλ / (24 (1−q) s cosh 4r))`.
    pub n_star: f64,
    /// `n* √(1−q)`, asymptotically constant as `q → 1`.
    pub constant: f64,
}

fn applicable_at(np: &NoiseParams, n: usize) -> bool {
    let pert = 2.0 * (1.0 - np.q) * np.s * (4.0 * np.r).cosh();
    pert <= np.q * np.lambda * (PI / n as f64).sin().abs()
}

fn excluded_at(np: &NoiseParams, n: usize) -> bool {
    let lhs = 4.0 * (1.0 - np.q) * np.s * (4.0 * np.r).cosh();
    lhs <= np.q * np.lambda * (PI / n as f64).powi(2) / 6.0
}

pub fn noise_dimension_bound(np: &NoiseParams, n: usize) -> Result<DimensionBound> {
    if n < 2 {
        return Err(Error::Parameter(format!("the phase π/n needs n ≥ 2, got {n}")));
    }
    let ch = (4.0 * np.r).cosh();
    let perturbation = 2.0 * (1.0 - np.q) * np.s * ch;
    let n_star = PI * (np.q * np.lambda / (24.0 * (1.0 - np.q) * np.s * ch)).sqrt();
    // The second inequality is monotone in n', so scanning just past n*
    // suffices; applicability only shrinks the set further.
    let limit = if n_star.is_finite() { n_star.ceil() as usize + 2 } else { 2 };
    let largest_excluded = (2..=limit.max(2)).filter(|&m| applicable_at(np, m) && excluded_at(np, m)).max();
    Ok(DimensionBound {
        q: np.q,
        s: np.s,
        r: np.r,
        lambda: np.lambda,
        n,
        perturbation,
        applicable: applicable_at(np, n),
        excluded: applicable_at(np, n) && excluded_at(np, n),
        largest_excluded,
        n_star,
        constant: n_star * (1.0 - np.q).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_examples() {
        let one = c(1.0, 0.0);
        for n in 1..10 {
            assert!(roots_hull_membership(one, n, HULL_ETA));
        }
        let z = c((PI / 3.0).cos(), (PI / 3.0).sin());
        assert!(!roots_hull_membership(z, 2, HULL_ETA));
        assert!(roots_hull_membership(z, 6, HULL_ETA));
        assert!(roots_hull_membership(c(0.0, 0.0), 3, HULL_ETA));
        assert!(!roots_hull_membership(c(0.0, 0.5), 2, HULL_ETA));
        assert!(roots_hull_membership(c(-0.3, 0.0), 2, HULL_ETA));
    }

    #[test]
    fn least_order_of_primitive_root() {
        let t = PI / 7.0;
        assert_eq!(least_hull_order(c(t.cos(), t.sin()), 64, HULL_ETA), Some(14));
        let t = 2.0 * PI / 7.0;
        assert_eq!(least_hull_order(c(t.cos(), t.sin()), 64, HULL_ETA), Some(7));
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        assert!(classical_dim_witness(&DMatrix::zeros(3, 3), HULL_ETA, 10).is_err());
    }

    #[test]
    fn defective_matrix_aborts_pole_analysis() {
        let db = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, 0.0, 0.3]);
        let da = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.1, 0.3]);
        let qr = QuasiRealization::from_parts(vec![0.5, 0.5], vec![1.0, 1.0], vec![da, db]).unwrap();
        assert!(matches!(pole_report(&qr, 1, 0, 1e-10), Err(Error::JordanStructure { .. })));
    }

    #[test]
    fn bound_needs_phase_order() {
        let np = NoiseParams::with_uniform_squeezing(0.9, 0.5, 0.4, 1.0).unwrap();
        assert!(noise_dimension_bound(&np, 1).is_err());
    }
}
