//! Membership oracles with tolerance for closed convex cones: the
//! exponential cone, power cones, their duals, PSD cones and finitely
//! generated cones.
//!
//! Every oracle is built on a signed, positively 1-homogeneous *margin*:
//! non-negative on the cone, negative outside, and of the order of the
//! distance to the cone near its boundary. Membership of `x` means
//! `margin(x / ‖x‖_∞) ≥ −η`. Margins are evaluated in log form so that
//! coordinates like `e^{±700}` never overflow.

mod nnls;
mod stability;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigenvalues, to_complex};
use crate::{Error, Result};

pub use nnls::{nnls, NnlsSolution};
pub use stability::{check_map_stability, StabilityReport, StabilityWitness};

/// Default relative tolerance for cones with closed-form membership.
pub const ETA_ANALYTIC: f64 = 1e-9;
/// Default relative tolerance for finitely generated cones.
pub const ETA_GENERATED: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeKind {
    /// `cl{x : x₁ ≥ x₂ e^{x₃/x₂}, x₂ > 0}`.
    Exp,
    /// `cl{y : y₁ ≥ −y₃ e^{y₂/y₃ − 1}, y₁ > 0, y₃ < 0}`.
    ExpDual,
    /// `{x : x₁, x₃ ≥ 0, x₁^α x₃^{1−α} ≥ |x₂|}`.
    Power { alpha: f64 },
    /// `B_α K_α` with `B_α = diag(α, 1, 1−α)`.
    PowerDual { alpha: f64 },
    /// Symmetric `d×d` matrices, stored row-major as `d²` coordinates.
    Psd { dim: usize },
    /// `cone{g_i}`.
    Generated { generators: Vec<Vec<f64>> },
    /// `{f : ⟨f, g_i⟩ ≥ 0 ∀i}`, the dual of a generated cone.
    GeneratedDual { generators: Vec<Vec<f64>> },
}

/// A membership predicate with relative tolerance `eta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeOracle {
    pub kind: ConeKind,
    pub eta: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("power-cone exponent {alpha} must lie in (0, 1)")))
    }
}

impl ConeOracle {
    pub fn exp() -> Self {
        Self { kind: ConeKind::Exp, eta: ETA_ANALYTIC }
    }

    pub fn exp_dual() -> Self {
        Self { kind: ConeKind::ExpDual, eta: ETA_ANALYTIC }
    }

    pub fn power(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { kind: ConeKind::Power { alpha }, eta: ETA_ANALYTIC })
    }

    pub fn power_dual(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { kind: ConeKind::PowerDual { alpha }, eta: ETA_ANALYTIC })
    }

    pub fn psd(dim: usize) -> Self {
        Self { kind: ConeKind::Psd { dim }, eta: ETA_ANALYTIC }
    }

    pub fn generated(generators: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_generators(&generators)?;
        Ok(Self { kind: ConeKind::Generated { generators }, eta: ETA_GENERATED })
    }

    pub fn generated_dual(generators: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_generators(&generators)?;
        Ok(Self { kind: ConeKind::GeneratedDual { generators }, eta: ETA_GENERATED })
    }

    fn check_generators(generators: &[Vec<f64>]) -> Result<()> {
        let n = generators.first().map(Vec::len).ok_or_else(|| Error::Parameter("no generators".into()))?;
        if n == 0 || generators.iter().any(|g| g.len() != n) {
            return Err(Error::Dimension("generators must share a positive dimension".into()));
        }
        if generators.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("generators".into()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ConeKind::Exp | ConeKind::ExpDual | ConeKind::Power { .. } | ConeKind::PowerDual { .. } => 3,
            ConeKind::Psd { dim } => dim * dim,
            ConeKind::Generated { generators } | ConeKind::GeneratedDual { generators } => generators[0].len(),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ConeKind::Exp => "exp".into(),
            ConeKind::ExpDual => "exp_dual".into(),
            ConeKind::Power { alpha } => format!("power({alpha})"),
            ConeKind::PowerDual { alpha } => format!("power_dual({alpha})"),
            ConeKind::Psd { dim } => format!("psd({dim})"),
            ConeKind::Generated { generators } => format!("generated({})", generators.len()),
            ConeKind::GeneratedDual { generators } => format!("generated_dual({})", generators.len()),
        }
    }

    /// The dual cone with the same tolerance.
    pub fn dual(&self) -> ConeOracle {
        let kind = match &self.kind {
            ConeKind::Exp => ConeKind::ExpDual,
            ConeKind::ExpDual => ConeKind::Exp,
            ConeKind::Power { alpha } => ConeKind::PowerDual { alpha: *alpha },
            ConeKind::PowerDual { alpha } => ConeKind::Power { alpha: *alpha },
            ConeKind::Psd { dim } => ConeKind::Psd { dim: *dim },
            ConeKind::Generated { generators } => ConeKind::GeneratedDual { generators: generators.clone() },
            ConeKind::GeneratedDual { generators } => ConeKind::Generated { generators: generators.clone() },
        };
        ConeOracle { kind, eta: self.eta }
    }

    /// Margin of `x` after scaling to unit max-norm (0 for the zero vector).
    pub fn margin(&self, x: &[f64]) -> f64 {
        let s = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            return 0.0;
        }
        self.margin_scaled(x, s)
    }

    /// Margin of `x / scale`. Used when `x` is the image of a unit vector
    /// under a map of norm `scale`, so that tiny images are judged against
    /// the map's size rather than their own.
    pub fn margin_scaled(&self, x: &[f64], scale: f64) -> f64 {
        assert_eq!(x.len(), self.dim(), "vector dimension does not match the cone");
        if x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        let v: Vec<f64> = x.iter().map(|a| a / scale).collect();
        match &self.kind {
            ConeKind::Exp => exp_margin(v[0], v[1], v[2]),
            ConeKind::ExpDual => exp_dual_margin(v[0], v[1], v[2]),
            ConeKind::Power { alpha } => power_margin(v[0], v[1], v[2], *alpha),
            ConeKind::PowerDual { alpha } => power_margin(v[0] / alpha, v[1], v[2] / (1.0 - alpha), *alpha),
            ConeKind::Psd { dim } => {
                let m = DMatrix::from_row_slice(*dim, *dim, &v);
                let asym = (&m - m.transpose()).amax();
                hermitian_eigenvalues(&to_complex(&((&m + m.transpose()) * 0.5)))[0] - asym
            }
            ConeKind::Generated { generators } => {
                let a = DMatrix::from_fn(v.len(), generators.len(), |i, j| generators[j][i]);
                let b = DVector::from_vec(v.clone());
                -nnls(&a, &b).residual
            }
            ConeKind::GeneratedDual { generators } => generators
                .iter()
                .map(|g| {
                    let gn = g.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
                    g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / gn
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.margin(x) >= -self.eta
    }

    /// A random member, biased towards the boundary.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let scale = (rng.random::<f64>() * 6.0 - 3.0).exp();
        let kind: f64 = rng.random();
        let mut x = match &self.kind {
            ConeKind::Exp => {
                let z = rng.random::<f64>() * 40.0 - 20.0;
                if kind < 0.6 {
                    vec![z.exp(), 1.0, z]
                } else if kind < 0.75 {
                    vec![rng.random::<f64>(), 0.0, -rng.random::<f64>()]
                } else {
                    vec![z.exp() * (1.0 + rng.random::<f64>()), 1.0, z]
                }
            }
            ConeKind::ExpDual => {
                let z = rng.random::<f64>() * 40.0 - 20.0;
                if kind < 0.6 {
                    vec![(-z - 1.0).exp(), z, -1.0]
                } else if kind < 0.75 {
                    vec![rng.random::<f64>(), rng.random::<f64>(), 0.0]
                } else {
                    vec![(-z - 1.0).exp() * (1.0 + rng.random::<f64>()), z, -1.0]
                }
            }
            ConeKind::Power { alpha } => power_sample(rng, *alpha, kind),
            ConeKind::PowerDual { alpha } => {
                let p = power_sample(rng, *alpha, kind);
                vec![alpha * p[0], p[1], (1.0 - alpha) * p[2]]
            }
            ConeKind::Psd { dim } => {
                let rank = 1 + (rng.random::<f64>() * *dim as f64) as usize;
                let g = DMatrix::from_fn(*dim, rank.min(*dim), |_, _| rng.random::<f64>() * 2.0 - 1.0);
                (&g * g.transpose()).transpose().iter().copied().collect()
            }
            ConeKind::Generated { generators } => {
                let n = generators[0].len();
                let mut out = vec![0.0; n];
                for g in generators {
                    if rng.random::<f64>() < 0.5 {
                        let c: f64 = rng.random();
                        out.iter_mut().zip(g).for_each(|(o, x)| *o += c * x);
                    }
                }
                out
            }
            ConeKind::GeneratedDual { generators } => {
                // Rejection sampling from a Gaussian-like proposal; falls back
                // to the zero functional if nothing is accepted.
                let n = generators[0].len();
                (0..1000)
                    .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect::<Vec<_>>())
                    .find(|f| self.contains(f))
                    .unwrap_or_else(|| vec![0.0; n])
            }
        };
        x.iter_mut().for_each(|v| *v *= scale);
        x
    }

    /// Position of a ray along the cone's boundary curve:
    /// `x₃/x₂` for the exponential cone, `−y₂/y₃` for its dual and
    /// `ln(x₁/|x₂|)` for power cones (`ln(y₁/(α|y₂|))` for the dual).
    pub fn boundary_parameter(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            ConeKind::Exp if x[1] > 0.0 => Some(x[2] / x[1]),
            ConeKind::ExpDual if x[2] < 0.0 => Some(-x[1] / x[2]),
            ConeKind::Power { .. } if x[1] != 0.0 && x[0] > 0.0 => Some((x[0] / x[1].abs()).ln()),
            ConeKind::PowerDual { alpha } if x[1] != 0.0 && x[0] > 0.0 => Some((x[0] / (alpha * x[1].abs())).ln()),
            _ => None,
        }
    }
}

fn power_sample<R: Rng + ?Sized>(rng: &mut R, alpha: f64, kind: f64) -> Vec<f64> {
    let z = rng.random::<f64>() * 20.0 - 10.0;
    let w = rng.random::<f64>() * 20.0 - 10.0;
    let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
    let g = (alpha * z + (1.0 - alpha) * w).exp();
    if kind < 0.6 {
        vec![z.exp(), sign * g, w.exp()]
    } else if kind < 0.75 {
        if rng.random::<f64>() < 0.5 {
            vec![rng.random::<f64>(), 0.0, 0.0]
        } else {
            vec![0.0, 0.0, rng.random::<f64>()]
        }
    } else {
        vec![z.exp(), sign * g * rng.random::<f64>(), w.exp()]
    }
}

/// Two residuals of the same defining inequality, each measured along one
/// coordinate axis. Both upper-bound the distance to the boundary, so the
/// smaller magnitude is the sharper estimate; a sign disagreement can only
/// come from rounding at the boundary and counts as membership.
fn combine(r_log: f64, r_lin: f64) -> f64 {
    if r_log >= 0.0 && r_lin >= 0.0 {
        r_log.min(r_lin)
    } else {
        r_log.min(0.0).max(r_lin.min(0.0))
    }
}

/// Margin for `K_exp`: on `x₂ > 0` the inequality `x₁ ≥ x₂ e^{x₃/x₂}` is
/// measured along `x₃` (`x₂ ln(x₁/x₂) − x₃`) and along `x₁`.
fn exp_margin(x1: f64, x2: f64, x3: f64) -> f64 {
    if x2 > 0.0 {
        let r_log = if x1 > 0.0 { x2 * (x1 / x2).ln() - x3 } else { f64::NEG_INFINITY };
        let r_lin = x1 - (x2.ln() + x3 / x2).exp();
        combine(r_log, r_lin)
    } else {
        x2.min(x1).min(-x3)
    }
}

/// Margin for `K_exp*`, with `s = −y₃ > 0`: `y₁ ≥ s e^{−y₂/s − 1}` measured
/// along `y₂` (`s ln(y₁/s) + y₂ + s`) and along `y₁`.
fn exp_dual_margin(y1: f64, y2: f64, y3: f64) -> f64 {
    let s = -y3;
    if s > 0.0 {
        let r_log = if y1 > 0.0 { s * (y1 / s).ln() + y2 + s } else { f64::NEG_INFINITY };
        let r_lin = y1 - (s.ln() - y2 / s - 1.0).exp();
        combine(r_log, r_lin)
    } else {
        y1.min(y2).min(-s)
    }
}

/// Margin for `K_α`: `x₁^α x₃^{1−α} − |x₂|`, evaluated in log form.
fn power_margin(x1: f64, x2: f64, x3: f64, alpha: f64) -> f64 {
    if x1 < 0.0 || x3 < 0.0 {
        return x1.min(x3).min(0.0) - x2.abs();
    }
    let g = if x1 == 0.0 || x3 == 0.0 {
        0.0
    } else {
        (alpha * x1.ln() + (1.0 - alpha) * x3.ln()).exp()
    };
    g - x2.abs()
}

pub fn in_exp_cone(x: &[f64; 3], eta: f64) -> bool {
    ConeOracle::exp().with_tolerance(eta).contains(x)
}

pub fn in_exp_dual(y: &[f64; 3], eta: f64) -> bool {
    ConeOracle::exp_dual().with_tolerance(eta).contains(y)
}

pub fn in_power_cone(x: &[f64; 3], alpha: f64, eta: f64) -> Result<bool> {
    Ok(ConeOracle::power(alpha)?.with_tolerance(eta).contains(x))
}

pub fn in_power_dual(y: &[f64; 3], alpha: f64, eta: f64) -> Result<bool> {
    Ok(ConeOracle::power_dual(alpha)?.with_tolerance(eta).contains(y))
}

/// `min_{c ≥ 0} ‖x − Σ c_i g_i‖ ≤ η‖x‖`.
pub fn in_generated_cone(x: &[f64], generators: &[Vec<f64>], eta: f64) -> Result<bool> {
    let oracle = ConeOracle::generated(generators.to_vec())?.with_tolerance(eta);
    if x.len() != oracle.dim() {
        return Err(Error::Dimension("point and generators differ in dimension".into()));
    }
    let a = DMatrix::from_fn(x.len(), generators.len(), |i, j| generators[j][i]);
    let b = DVector::from_row_slice(x);
    Ok(nnls(&a, &b).residual <= eta * b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn exp_cone_examples() {
        assert!(in_exp_cone(&[1.0, 1.0, 0.0], 1e-9));
        assert!(in_exp_cone(&[1.0, 0.0, -1.0], 1e-9));
        assert!(!in_exp_cone(&[0.5, 1.0, 0.0], 1e-9));
    }

    #[test]
    fn exp_dual_examples() {
        assert!(in_exp_dual(&[1.0, -1.0, -1.0], 1e-9));
        assert!(in_exp_dual(&[1.0 / E, 0.0, -1.0], 1e-9));
        assert!(!in_exp_dual(&[0.0, 1.0, -1.0], 1e-9));
    }

    #[test]
    fn power_cone_examples() {
        assert!(in_power_cone(&[4.0, 2.0, 1.0], 0.5, 1e-9).unwrap());
        for a in [0.1, 0.5, std::f64::consts::FRAC_1_SQRT_2] {
            assert!(in_power_cone(&[1.0, 1.0, 1.0], a, 1e-9).unwrap());
            assert!(!in_power_cone(&[1.0, 2.0, 1.0], a, 1e-9).unwrap());
        }
        assert!(matches!(in_power_cone(&[1.0, 1.0, 1.0], 1.0, 1e-9), Err(Error::Parameter(_))));
        assert!(in_power_dual(&[1.0, 1.0, 1.0], 1.5, 1e-9).is_err());
    }

    #[test]
    fn extreme_coordinates_do_not_overflow() {
        let z: f64 = 650.0;
        assert!(in_exp_cone(&[z.exp(), 1.0, z], 1e-9));
        assert!(in_exp_cone(&[(-z).exp(), 1.0, -z], 1e-9));
        // Within e^{-649} of the boundary, hence a member at any sane tolerance.
        assert!(in_exp_cone(&[(-z).exp(), 1.0, -z + 1.0], 1e-9));
        // x₃/x₂ = 1000 would overflow a direct evaluation of e^{x₃/x₂}.
        assert!(!in_exp_cone(&[1.0, 1e-3, 1.0], 1e-9));
        assert!(!in_exp_dual(&[1e-3, -1.0, -1e-3], 1e-9));
    }

    #[test]
    fn generated_examples() {
        let g = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 3.0]];
        let sum: Vec<f64> = g[0].iter().zip(&g[1]).map(|(a, b)| a + b).collect();
        assert!(in_generated_cone(&sum, &g, 1e-6).unwrap());
        let neg: Vec<f64> = g[0].iter().map(|x| -x).collect();
        assert!(!in_generated_cone(&neg, &g, 1e-6).unwrap());
    }

    #[test]
    fn psd_membership() {
        let c = ConeOracle::psd(2);
        assert!(c.contains(&[1.0, 0.5, 0.5, 1.0]));
        assert!(!c.contains(&[1.0, 2.0, 2.0, 1.0]));
    }
}
