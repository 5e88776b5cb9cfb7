use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use quasireal::frdn::{self, FrdnParams, NoiseParams};
use quasireal::witnesses::{
    classical_dim_witness, noise_dimension_bound, pole_report, roots_hull_membership, DimensionBound, PhaseWitness,
    PoleReport, HULL_ETA,
};
use quasireal::QuasiRealization;
use serde::{Deserialize, Serialize};

use crate::driver::{overlay, CommandConfig, Outcome};
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct WitnessArgs {
    /// Quasi-realization JSON to analyse instead of the FRDN model.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// FRDN decay λ [default: 0.4].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// FRDN phase α [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Symbol whose matrix is tested, for --model [default: 1].
    #[arg(long)]
    pub symbol: Option<usize>,
    /// Reset symbol for the pole analysis, for --model [default: 0].
    #[arg(long)]
    pub reset_symbol: Option<usize>,
    /// Largest dimension tested [default: 64].
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Hull tolerance [default: 1e-9].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Depolarizing mixture q for the noise bound (omit to skip).
    #[arg(long)]
    pub noise_q: Option<f64>,
    /// Share s of the noise on the b map [default: 0.5].
    #[arg(long)]
    pub noise_s: Option<f64>,
    /// Phase order n of the noisy model, α = π/n [default: 8].
    #[arg(long)]
    pub noise_n: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessConfig {
    pub model: Option<PathBuf>,
    pub lambda: f64,
    pub alpha: f64,
    pub symbol: usize,
    pub reset_symbol: usize,
    pub n_max: usize,
    pub eta: f64,
    pub pole_tol: f64,
    pub noise_q: Option<f64>,
    pub noise_s: f64,
    pub noise_n: usize,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            model: None,
            lambda: 0.4,
            alpha: 1.0,
            symbol: frdn::B,
            reset_symbol: frdn::A,
            n_max: 64,
            eta: HULL_ETA,
            pole_tol: 1e-10,
            noise_q: None,
            noise_s: 0.5,
            noise_n: 8,
            seed: 0,
            parallel: 1,
        }
    }
}

impl CommandConfig for WitnessConfig {
    const NAME: &'static str = "witness";

    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }

    fn parallel_mut(&mut self) -> &mut usize {
        &mut self.parallel
    }

    fn finalize(&mut self) -> CliResult<()> {
        if self.n_max == 0 {
            return Err(CliError::Config("n_max must be positive".into()));
        }
        Ok(())
    }
}

impl WitnessConfig {
    pub fn apply(&mut self, args: &WitnessArgs) {
        overlay!(self, args; model, lambda, alpha, symbol, reset_symbol, n_max, eta, noise_q, noise_s, noise_n);
    }
}

#[derive(Debug, Serialize)]
struct DimensionFlag {
    n: usize,
    /// Some top-shell eigenvalue lies outside the roots-of-unity hull of
    /// order `n`, so no non-negative realization of dimension `n` exists.
    excluded: bool,
}

#[derive(Debug, Serialize)]
struct WitnessReport {
    source: String,
    phases: PhaseWitness,
    per_dimension: Vec<DimensionFlag>,
    poles: Option<PoleReport>,
    bound_over_poles: Option<usize>,
    noise: Option<DimensionBound>,
}

pub fn run(cfg: &WitnessConfig) -> CliResult<Outcome> {
    let (source, qr): (String, QuasiRealization) = match &cfg.model {
        Some(path) => (path.display().to_string(), QuasiRealization::load(path)?),
        None => {
            let params = FrdnParams::new(cfg.lambda, cfg.alpha)?;
            (format!("frdn(lambda={}, alpha={})", cfg.lambda, cfg.alpha), frdn::build_quasi(&params)?)
        }
    };
    let db = qr.matrix(cfg.symbol)?;
    let phases = classical_dim_witness(db, cfg.eta, cfg.n_max)?;
    let per_dimension = (1..=cfg.n_max)
        .map(|n| DimensionFlag {
            n,
            excluded: phases
                .entries
                .iter()
                .any(|e| e.top_shell && !roots_hull_membership(e.normalized, n, cfg.eta)),
        })
        .collect();
    // Pole analysis needs a diagonalizable matrix; report its absence
    // rather than failing the whole run.
    let poles = if cfg.reset_symbol != cfg.symbol {
        match pole_report(&qr, cfg.symbol, cfg.reset_symbol, cfg.pole_tol) {
            Ok(r) => Some(r),
            Err(quasireal::Error::JordanStructure { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let bound_over_poles = poles.as_ref().map(|p| phases.bound_over_poles(&p.poles(), 1e-8));
    let noise = match cfg.noise_q {
        Some(q) => {
            let np = NoiseParams::with_uniform_squeezing(q, cfg.noise_s, cfg.lambda, PI / cfg.noise_n as f64)?;
            Some(noise_dimension_bound(&np, cfg.noise_n)?)
        }
        None => None,
    };
    let summary = format!(
        "classical dimension ≥ {}{}{}",
        phases.lower_bound,
        if phases.exceeds_search { format!(" (exceeds every tested n ≤ {})", cfg.n_max) } else { String::new() },
        noise
            .as_ref()
            .and_then(|b| b.largest_excluded)
            .map(|n| format!("; noisy model excludes dimensions below {n}"))
            .unwrap_or_default()
    );
    let report = WitnessReport { source, phases, per_dimension, poles, bound_over_poles, noise };
    Outcome::new(true, summary, &report)
}
