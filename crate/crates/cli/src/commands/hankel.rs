use std::path::PathBuf;

use clap::{Args, ValueEnum};
use quasireal::frdn::{self, FrdnParams};
use quasireal::hankel::{build_hankel, learn_regular, numerical_rank, DEFAULT_REL_THRESHOLD};
use quasireal::separations::{ConeProcess, ExpConeProcessParams, PowerConeProcessParams};
use quasireal::{words_up_to, QuasiRealization, Word};
use serde::{Deserialize, Serialize};

use crate::driver::{overlay, CommandConfig, Outcome};
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HankelSource {
    /// The four-dimensional FRDN quasi-realization.
    Frdn,
    /// The exponential-cone process with default parameters.
    Exp,
    /// The power-cone process with default parameters.
    Power,
    /// A quasi-realization JSON file given by --model.
    Model,
}

#[derive(Args, Debug)]
pub struct HankelArgs {
    /// Process whose Hankel block is built [default: frdn].
    #[arg(long, value_enum)]
    pub source: Option<HankelSource>,
    /// Quasi-realization JSON (implies --source model).
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// FRDN decay λ [default: 0.4].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// FRDN phase α [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Prefix and suffix bases are all words up to this length [default: 4].
    #[arg(long)]
    pub basis_len: Option<usize>,
    /// Relative singular-value threshold [default: 1e-8].
    #[arg(long)]
    pub rel_threshold: Option<f64>,
    /// Fail (exit 1) unless the numerical rank equals this.
    #[arg(long)]
    pub expected_rank: Option<usize>,
    /// Longest word in the learned model's round-trip check [default: 6].
    #[arg(long)]
    pub check_len: Option<usize>,
    /// Save the learned quasi-realization here.
    #[arg(long, value_name = "PATH")]
    pub learned: Option<PathBuf>,
    /// Write the Hankel block as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HankelConfig {
    pub source: HankelSource,
    pub model: Option<PathBuf>,
    pub lambda: f64,
    pub alpha: f64,
    pub basis_len: usize,
    pub rel_threshold: f64,
    pub expected_rank: Option<usize>,
    pub check_len: usize,
    pub learned: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for HankelConfig {
    fn default() -> Self {
        Self {
            source: HankelSource::Frdn,
            model: None,
            lambda: 0.4,
            alpha: 1.0,
            basis_len: 4,
            rel_threshold: DEFAULT_REL_THRESHOLD,
            expected_rank: None,
            check_len: 6,
            learned: None,
            csv: None,
            seed: 0,
            parallel: 1,
        }
    }
}

impl CommandConfig for HankelConfig {
    const NAME: &'static str = "hankel";

    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }

    fn parallel_mut(&mut self) -> &mut usize {
        &mut self.parallel
    }

    fn finalize(&mut self) -> CliResult<()> {
        if self.model.is_some() {
            self.source = HankelSource::Model;
        }
        if self.source == HankelSource::Model && self.model.is_none() {
            return Err(CliError::Config("source \"model\" needs a model path".into()));
        }
        if self.basis_len > 10 {
            return Err(CliError::Config("basis_len above 10 is not supported".into()));
        }
        Ok(())
    }
}

impl HankelConfig {
    pub fn apply(&mut self, args: &HankelArgs) {
        overlay!(self, args; source, model, lambda, alpha, basis_len, rel_threshold, expected_rank, check_len,
            learned, csv);
    }
}

#[derive(Debug, Serialize)]
struct HankelReport {
    source: HankelSource,
    basis_size: usize,
    rank: usize,
    singular_values: Vec<f64>,
    gap_ratio: f64,
    expected_rank: Option<usize>,
    /// Largest `|p(u) − p̂(u)|` of the learned model over `|u| ≤ check_len`.
    round_trip_error: Option<f64>,
    learn_error: Option<String>,
}

fn load_source(cfg: &HankelConfig) -> CliResult<QuasiRealization> {
    Ok(match cfg.source {
        HankelSource::Frdn => frdn::build_quasi(&FrdnParams::new(cfg.lambda, cfg.alpha)?)?,
        HankelSource::Exp => ConeProcess::exp(&ExpConeProcessParams::default())?.into_quasi(),
        HankelSource::Power => ConeProcess::power(&PowerConeProcessParams::default())?.into_quasi(),
        HankelSource::Model => QuasiRealization::load(cfg.model.as_ref().expect("checked in finalize"))?,
    })
}

pub fn run(cfg: &HankelConfig) -> CliResult<Outcome> {
    let qr = load_source(cfg)?;
    let m = qr.num_symbols();
    let basis: Vec<Word> = words_up_to(m, cfg.basis_len).collect();
    let block = build_hankel(&qr, &basis, &basis, cfg.parallel > 1)?;
    if let Some(path) = &cfg.csv {
        std::fs::write(path, block.to_csv(qr.alphabet(), None)?)?;
    }
    let info = numerical_rank(&block.h, cfg.rel_threshold)?;
    let (round_trip_error, learn_error) = match learn_regular(&block, info.rank) {
        Ok(learned) => {
            let err = words_up_to(m, cfg.check_len)
                .map(|w| Ok((qr.evaluate(&w)? - learned.evaluate(&w)?).abs()))
                .collect::<quasireal::Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            if let Some(path) = &cfg.learned {
                learned.with_alphabet(qr.alphabet().clone())?.save(path)?;
            }
            (Some(err), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let passed = cfg.expected_rank.is_none_or(|r| r == info.rank);
    let summary = format!(
        "rank {} over {} words (gap ratio {:.2e}){}",
        info.rank,
        basis.len(),
        info.gap_ratio,
        round_trip_error.map(|e| format!(", learned round-trip error {e:.2e}")).unwrap_or_default()
    );
    let report = HankelReport {
        source: cfg.source,
        basis_size: basis.len(),
        rank: info.rank,
        singular_values: info.singular_values,
        gap_ratio: info.gap_ratio,
        expected_rank: cfg.expected_rank,
        round_trip_error,
        learn_error,
    };
    Outcome::new(passed, summary, &report)
}
