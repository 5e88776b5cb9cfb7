use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use quasireal::frdn::{self, FrdnParams};
use quasireal::realizations::sampling::sample_sequence;
use quasireal::realizations::seqio::{write_binary, write_text};
use quasireal::realizations::HiddenQuantumModel;
use serde::{Deserialize, Serialize};

use crate::driver::{overlay, CommandConfig, Outcome};
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SeqFormat {
    /// Space-separated symbol labels.
    Text,
    /// Header plus one byte per symbol.
    Binary,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// HQMM JSON to sample instead of the FRDN qutrit model.
    #[arg(long, value_name = "PATH")]
    pub hqmm: Option<PathBuf>,
    /// FRDN decay λ [default: 0.4].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// FRDN phase α [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of symbols [default: 100000].
    #[arg(long)]
    pub length: Option<usize>,
    /// Sequence file format [default: text].
    #[arg(long, value_enum)]
    pub format: Option<SeqFormat>,
    /// Sequence file to write.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub hqmm: Option<PathBuf>,
    pub lambda: f64,
    pub alpha: f64,
    pub length: usize,
    pub format: SeqFormat,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            hqmm: None,
            lambda: 0.4,
            alpha: 1.0,
            length: 100_000,
            format: SeqFormat::Text,
            output: None,
            seed: 0,
            parallel: 1,
        }
    }
}

impl CommandConfig for SampleConfig {
    const NAME: &'static str = "sample";

    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }

    fn parallel_mut(&mut self) -> &mut usize {
        &mut self.parallel
    }

    fn finalize(&mut self) -> CliResult<()> {
        if self.output.is_none() {
            return Err(CliError::Config("an output path is required".into()));
        }
        Ok(())
    }
}

impl SampleConfig {
    pub fn apply(&mut self, args: &SampleArgs) {
        overlay!(self, args; hqmm, lambda, alpha, length, format, output);
    }
}

#[derive(Debug, Serialize)]
struct SymbolCount {
    symbol: String,
    count: usize,
    frequency: f64,
}

#[derive(Debug, Serialize)]
struct SampleReport {
    source: String,
    length: usize,
    seed: u64,
    format: SeqFormat,
    output: PathBuf,
    counts: Vec<SymbolCount>,
}

pub fn run(cfg: &SampleConfig) -> CliResult<Outcome> {
    let (source, model) = match &cfg.hqmm {
        Some(path) => (path.display().to_string(), HiddenQuantumModel::load(path)?),
        None => (
            format!("frdn(lambda={}, alpha={})", cfg.lambda, cfg.alpha),
            frdn::build_hqmm(&FrdnParams::new(cfg.lambda, cfg.alpha)?)?,
        ),
    };
    let seq = sample_sequence((&model).into(), cfg.length, cfg.seed)?;
    let output = cfg.output.clone().expect("checked in finalize");
    let mut out = BufWriter::new(std::fs::File::create(&output)?);
    match cfg.format {
        SeqFormat::Text => write_text(&mut out, model.alphabet(), &seq)?,
        SeqFormat::Binary => write_binary(&mut out, model.alphabet(), &seq)?,
    }
    out.flush()?;
    let counts: Vec<SymbolCount> = (0..model.alphabet().size())
        .map(|s| {
            let count = seq.count(s);
            SymbolCount {
                symbol: model.alphabet().label(s),
                count,
                frequency: if cfg.length > 0 { count as f64 / cfg.length as f64 } else { 0.0 },
            }
        })
        .collect();
    let summary = format!(
        "{} symbols to {} ({})",
        cfg.length,
        output.display(),
        counts.iter().map(|c| format!("{}: {:.5}", c.symbol, c.frequency)).collect::<Vec<_>>().join(", ")
    );
    let report = SampleReport { source, length: cfg.length, seed: cfg.seed, format: cfg.format, output, counts };
    Outcome::new(true, summary, &report)
}
