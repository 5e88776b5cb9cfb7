use clap::Args;
use quasireal::frdn::{self, ChainOracle, FrdnParams};
use quasireal::realizations::TOL_CP;
use quasireal::{words_up_to, Word};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{overlay, CommandConfig, Outcome};
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct FrdnCheckArgs {
    /// Decay λ in (0, 1/2] [default: 0.4].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Phase α [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Chain truncation N [default: max(200, ⌈16 ln 10 / ln(1/λ)⌉)].
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Longest word compared [default: 8].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Largest acceptable absolute discrepancy [default: 1e-9].
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrdnCheckConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub truncation: Option<usize>,
    pub max_len: usize,
    pub tol: f64,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for FrdnCheckConfig {
    fn default() -> Self {
        Self { lambda: 0.4, alpha: 1.0, truncation: None, max_len: 8, tol: 1e-9, seed: 0, parallel: 1 }
    }
}

impl CommandConfig for FrdnCheckConfig {
    const NAME: &'static str = "frdn-check";

    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }

    fn parallel_mut(&mut self) -> &mut usize {
        &mut self.parallel
    }

    fn finalize(&mut self) -> CliResult<()> {
        if self.max_len > 20 {
            return Err(CliError::Config("max_len above 20 is not supported (2^ℓ words)".into()));
        }
        Ok(())
    }
}

impl FrdnCheckConfig {
    pub fn apply(&mut self, args: &FrdnCheckArgs) {
        overlay!(self, args; lambda, alpha, truncation, max_len, tol);
    }
}

#[derive(Debug, Serialize)]
struct FrdnCheckReport {
    lambda: f64,
    alpha: f64,
    truncation: usize,
    squeezing: f64,
    words_checked: usize,
    max_chain_vs_quasi: f64,
    max_chain_vs_qutrit: f64,
    max_quasi_vs_qutrit: f64,
    max_discrepancy: f64,
    worst_word: String,
    probability_of_a: f64,
    renewal_rate: f64,
    cp_certificate_passed: bool,
    tol: f64,
}

pub fn run(cfg: &FrdnCheckConfig) -> CliResult<Outcome> {
    let mut params = FrdnParams::new(cfg.lambda, cfg.alpha)?;
    if let Some(n) = cfg.truncation {
        params = params.with_truncation(n)?;
    }
    let oracle = ChainOracle::new(params)?;
    let qr = frdn::build_quasi(&params)?;
    let hqmm = frdn::build_hqmm(&params)?;
    let words: Vec<Word> = words_up_to(2, cfg.max_len).collect();
    let compare = |w: &Word| -> quasireal::Result<[f64; 3]> {
        let p = oracle.prob(w)?;
        let q = qr.evaluate(w)?;
        let h = hqmm.trace_probability(w)?;
        Ok([(p - q).abs(), (p - h).abs(), (q - h).abs()])
    };
    let devs: Vec<[f64; 3]> = if cfg.parallel > 1 {
        words.par_iter().map(compare).collect::<quasireal::Result<_>>()?
    } else {
        words.iter().map(compare).collect::<quasireal::Result<_>>()?
    };
    let column_max = |k: usize| devs.iter().map(|d| d[k]).fold(0.0, f64::max);
    let (worst_index, max_discrepancy) = devs
        .iter()
        .map(|d| d[0].max(d[1]).max(d[2]))
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let alphabet = frdn::alphabet();
    let report = FrdnCheckReport {
        lambda: params.lambda(),
        alpha: params.alpha(),
        truncation: params.truncation(),
        squeezing: params.squeezing()?,
        words_checked: words.len(),
        max_chain_vs_quasi: column_max(0),
        max_chain_vs_qutrit: column_max(1),
        max_quasi_vs_qutrit: column_max(2),
        max_discrepancy,
        worst_word: alphabet.format(&words[worst_index]),
        probability_of_a: qr.evaluate(&Word::from(vec![frdn::A]))?,
        renewal_rate: params.stationary_prob_a(),
        cp_certificate_passed: hqmm.certificate(TOL_CP).passed,
        tol: cfg.tol,
    };
    let passed = report.max_discrepancy <= cfg.tol && report.cp_certificate_passed;
    let summary = format!(
        "max discrepancy {:.3e} over {} words (tol {:.1e})",
        report.max_discrepancy, report.words_checked, cfg.tol
    );
    Outcome::new(passed, summary, &report)
}
