use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use quasireal::cones::{check_map_stability, StabilityReport, ETA_ANALYTIC};
use quasireal::separations::{
    verify_cone_sandwich, ConeProcess, ExpConeProcessParams, PowerConeProcessParams, SandwichConfig, SandwichReport,
};
use serde::{Deserialize, Serialize};

use crate::driver::{overlay, CommandConfig, Outcome};
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProcessCone {
    /// Three-letter process stabilizing the exponential cone.
    Exp,
    /// Four-letter process stabilizing the power cone `K_α`.
    Power,
}

#[derive(Args, Debug)]
pub struct SeparationArgs {
    /// Which construction to verify [default: exp].
    #[arg(long, value_enum)]
    pub cone: Option<ProcessCone>,
    /// Shear parameter a > 1 [default: e].
    #[arg(long)]
    pub a: Option<f64>,
    /// Shear parameter b in (0, 1) [default: 1/2].
    #[arg(long)]
    pub b: Option<f64>,
    /// Third coordinate of the reset vector m₀ [default: 0 (exp), 1 (power)].
    #[arg(long)]
    pub m03: Option<f64>,
    /// Second coordinate of the reset covector μ₀, exp process [default: -1].
    #[arg(long, allow_hyphen_values = true)]
    pub mu02: Option<f64>,
    /// Third coordinate of the reset covector μ₀, power process [default: 1].
    #[arg(long)]
    pub mu03: Option<f64>,
    /// Power-cone exponent α in (0, 1) [default: 1/√2].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Longest word in the inclusion checks [default: 12 (exp), 10 (power)].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Orbit budget s + t for the density metric [default: 200].
    #[arg(long)]
    pub budget: Option<usize>,
    /// Largest acceptable density gap [default: 1].
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    /// Cone membership tolerance [default: 1e-9].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Random cone members pushed through every map [default: 10000].
    #[arg(long)]
    pub stability_samples: Option<usize>,
    /// Write (x, nearest achieved parameter) pairs over the window as CSV.
    #[arg(long, value_name = "PATH")]
    pub density_csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationConfig {
    pub cone: ProcessCone,
    pub a: f64,
    pub b: f64,
    pub m03: Option<f64>,
    pub mu02: f64,
    pub mu03: f64,
    pub alpha: f64,
    pub max_len: Option<usize>,
    pub window: (f64, f64),
    pub budget: usize,
    pub gap_threshold: f64,
    pub eta: f64,
    pub stability_samples: usize,
    pub density_csv: Option<PathBuf>,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        let s = SandwichConfig::default();
        Self {
            cone: ProcessCone::Exp,
            a: std::f64::consts::E,
            b: 0.5,
            m03: None,
            mu02: -1.0,
            mu03: 1.0,
            alpha: std::f64::consts::FRAC_1_SQRT_2,
            max_len: None,
            window: s.density_window,
            budget: s.orbit_budget,
            gap_threshold: s.gap_threshold,
            eta: ETA_ANALYTIC,
            stability_samples: 10_000,
            density_csv: None,
            seed: 0,
            parallel: 1,
        }
    }
}

impl CommandConfig for SeparationConfig {
    const NAME: &'static str = "separation";

    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }

    fn parallel_mut(&mut self) -> &mut usize {
        &mut self.parallel
    }

    fn finalize(&mut self) -> CliResult<()> {
        let exp = self.cone == ProcessCone::Exp;
        self.m03.get_or_insert(if exp { 0.0 } else { 1.0 });
        self.max_len.get_or_insert(if exp { 12 } else { 10 });
        if self.window.0.partial_cmp(&self.window.1) != Some(std::cmp::Ordering::Less) {
            return Err(CliError::Config("window must satisfy lo < hi".into()));
        }
        if self.eta.is_nan() || self.eta < 0.0 {
            return Err(CliError::Config("eta must be non-negative".into()));
        }
        Ok(())
    }
}

impl SeparationConfig {
    pub fn apply(&mut self, args: &SeparationArgs) {
        overlay!(self, args; cone, a, b, m03, mu02, mu03, alpha, max_len, budget, gap_threshold, eta,
            stability_samples, density_csv);
    }
}

#[derive(Debug, Serialize)]
struct SeparationReport {
    process: quasireal::separations::ProcessKind,
    symbols: usize,
    nu: f64,
    m0: [f64; 3],
    mu0: [f64; 3],
    tau_scaled: [f64; 3],
    pi_scaled: [f64; 3],
    cone: String,
    sandwich: SandwichReport,
    stability: StabilityReport,
}

pub fn run(cfg: &SeparationConfig) -> CliResult<Outcome> {
    let m03 = cfg.m03.expect("resolved in finalize");
    let process = match cfg.cone {
        ProcessCone::Exp => ConeProcess::exp(&ExpConeProcessParams::new(cfg.a, cfg.b, m03, cfg.mu02)?)?,
        ProcessCone::Power => {
            ConeProcess::power(&PowerConeProcessParams::new(cfg.alpha, cfg.a, cfg.b, m03, cfg.mu03)?)?
        }
    };
    let cone = process.cone().with_tolerance(cfg.eta);
    let dual = process.dual_cone().with_tolerance(cfg.eta);
    let sandwich_cfg = SandwichConfig {
        max_len: cfg.max_len.expect("resolved in finalize"),
        density_window: cfg.window,
        orbit_budget: cfg.budget,
        gap_threshold: cfg.gap_threshold,
    };
    let sandwich = verify_cone_sandwich(&process, &cone, &dual, &sandwich_cfg)?;
    let stability = check_map_stability(process.quasi().matrices(), &cone, &dual, cfg.stability_samples, cfg.seed)?;
    if let Some(path) = &cfg.density_csv {
        std::fs::write(path, density_csv(&process.achieved_parameters(cfg.budget), cfg.window))?;
    }
    let (tau_scaled, pi_scaled) = process.scaled_fixed_points();
    let passed = sandwich.consistent && stability.passed;
    let summary = format!(
        "{}: {} generators, worst slack {:.2e}, density gap {:.3}{}, stability {}",
        cone.name(),
        sandwich.generators_checked,
        sandwich.worst_slack,
        sandwich.density_gap,
        if sandwich.density_flagged { " (flagged)" } else { "" },
        if stability.passed { "ok" } else { "violated" }
    );
    let report = SeparationReport {
        process: process.kind(),
        symbols: process.quasi().num_symbols(),
        nu: process.nu(),
        m0: process.m0(),
        mu0: process.mu0(),
        tau_scaled,
        pi_scaled,
        cone: cone.name(),
        sandwich,
        stability,
    };
    Outcome::new(passed, summary, &report)
}

/// `x,achieved,distance` on a 601-point grid over the window, where
/// `achieved` is the nearest boundary parameter reached by the orbit.
fn density_csv(achieved: &[f64], window: (f64, f64)) -> String {
    let mut out = String::from("x,achieved,distance\n");
    let steps = 600;
    for i in 0..=steps {
        let x = window.0 + (window.1 - window.0) * i as f64 / steps as f64;
        let nearest = achieved.iter().copied().min_by(|p, q| (p - x).abs().total_cmp(&(q - x).abs()));
        match nearest {
            Some(y) => writeln!(out, "{x:.17e},{y:.17e},{:.17e}", (y - x).abs()),
            None => writeln!(out, "{x:.17e},,"),
        }
        .expect("string write");
    }
    out
}
