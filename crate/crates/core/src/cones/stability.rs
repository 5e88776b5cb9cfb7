//! Sampled verification that a family of linear maps preserves a cone and
//! (through transposes) its dual.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::ConeOracle;
use crate::realizations::sampling::rng_for;
use crate::{Error, Result};

/// A sampled member that some map sends outside the cone.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityWitness {
    pub symbol: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub samples: usize,
    pub maps: usize,
    pub eta: f64,
    pub worst_primal_slack: f64,
    pub worst_dual_slack: f64,
    pub primal_witness: Option<StabilityWitness>,
    pub dual_witness: Option<StabilityWitness>,
    pub passed: bool,
}

/// Draws `samples` members of `cone` and of `dual`, applies every map (its
/// transpose for dual members) and records the worst membership margin.
///
/// Outputs are judged relative to `‖D_u‖_∞ ‖x‖_∞`, so a map that sends a
/// member to a vector much shorter than itself is not flagged for rounding
/// noise in that vector's direction.
pub fn check_map_stability(
    matrices: &[DMatrix<f64>],
    cone: &ConeOracle,
    dual: &ConeOracle,
    samples: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let n = cone.dim();
    if dual.dim() != n {
        return Err(Error::Dimension("cone and dual cone differ in dimension".into()));
    }
    if let Some(m) = matrices.iter().find(|m| m.shape() != (n, n)) {
        return Err(Error::Dimension(format!("map of shape {:?} does not act on R^{n}", m.shape())));
    }
    let mut rng = rng_for(seed, 0);
    let primal = worst_slack(matrices, cone, samples, &mut rng, false);
    let dual_result = worst_slack(matrices, dual, samples, &mut rng, true);
    let passed = primal.0 >= -cone.eta && dual_result.0 >= -dual.eta;
    Ok(StabilityReport {
        samples,
        maps: matrices.len(),
        eta: cone.eta,
        worst_primal_slack: primal.0,
        worst_dual_slack: dual_result.0,
        primal_witness: primal.1.filter(|w| w.slack < -cone.eta),
        dual_witness: dual_result.1.filter(|w| w.slack < -dual.eta),
        passed,
    })
}

fn worst_slack<R: Rng>(
    matrices: &[DMatrix<f64>],
    cone: &ConeOracle,
    samples: usize,
    rng: &mut R,
    transpose: bool,
) -> (f64, Option<StabilityWitness>) {
    let maps: Vec<DMatrix<f64>> = matrices.iter().map(|m| if transpose { m.transpose() } else { m.clone() }).collect();
    let norms: Vec<f64> = maps.iter().map(crate::linalg::inf_norm).collect();
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let x = cone.sample(rng);
        let xn = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if xn == 0.0 {
            continue;
        }
        let xv = DVector::from_vec(x.clone());
        for (symbol, (m, &norm)) in maps.iter().zip(&norms).enumerate() {
            let y = m * &xv;
            let slack = cone.margin_scaled(y.as_slice(), norm.max(f64::MIN_POSITIVE) * xn);
            if slack < worst {
                worst = slack;
                witness = Some(StabilityWitness { symbol, input: x.clone(), output: y.iter().copied().collect(), slack });
            }
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    (worst, witness)
}
