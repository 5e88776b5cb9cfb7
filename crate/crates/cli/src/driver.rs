//! Shared plumbing: configuration layering (defaults < config file < flags),
//! `--describe`, optional thread pools and report emission.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, EXIT_CHECK_FAILED, EXIT_PASS};
use crate::output::{to_precise_string, write_json, SCHEMA};

/// Options accepted by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// JSON file with the subcommand's parameter block; unknown keys are errors.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the machine-readable report here (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub describe: bool,
    /// Seed for every random draw [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs single-threaded [default: 1].
    #[arg(long, value_name = "N")]
    pub parallel: Option<usize>,
}

/// A subcommand's full parameter block.
pub trait CommandConfig: Serialize + DeserializeOwned + Default + Sync {
    const NAME: &'static str;

    fn seed_mut(&mut self) -> &mut u64;
    fn parallel_mut(&mut self) -> &mut usize;

    /// Resolves defaults that depend on other fields and validates ranges.
    fn finalize(&mut self) -> CliResult<()> {
        Ok(())
    }
}

/// Result of a subcommand: pass/fail, a one-line summary and the report.
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub report: Value,
}

impl Outcome {
    pub fn new<R: Serialize>(passed: bool, summary: String, report: &R) -> CliResult<Self> {
        Ok(Self { passed, summary, report: serde_json::to_value(report)? })
    }
}

pub fn load_config<C: CommandConfig>(path: Option<&Path>) -> CliResult<C> {
    let Some(path) = path else { return Ok(C::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Runs one subcommand end to end and maps the outcome to an exit code.
pub fn drive<C: CommandConfig>(
    common: &Common,
    overlay: impl FnOnce(&mut C),
    run: impl FnOnce(&C) -> CliResult<Outcome> + Send,
) -> CliResult<ExitCode> {
    let mut cfg: C = load_config(common.config.as_deref())?;
    overlay(&mut cfg);
    if let Some(seed) = common.seed {
        *cfg.seed_mut() = seed;
    }
    if let Some(n) = common.parallel {
        *cfg.parallel_mut() = n;
    }
    cfg.finalize()?;
    if *cfg.parallel_mut() == 0 {
        return Err(CliError::Config("parallel must be at least 1".into()));
    }
    if common.describe {
        print!("{}", to_precise_string(&json!({ "schema": SCHEMA, "command": C::NAME, "config": &cfg }))?);
        return Ok(ExitCode::from(EXIT_PASS));
    }
    let threads = *cfg.parallel_mut();
    let cfg_ref = &cfg;
    let outcome = if threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?
            .install(|| run(cfg_ref))?
    } else {
        run(cfg_ref)?
    };
    let status = if outcome.passed { "PASS" } else { "FAIL" };
    let to_stdout = common.json.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if to_stdout {
        eprintln!("{}: {status} — {}", C::NAME, outcome.summary);
    } else {
        println!("{}: {status} — {}", C::NAME, outcome.summary);
    }
    if let Some(path) = &common.json {
        let doc = json!({
            "schema": SCHEMA,
            "command": C::NAME,
            "passed": outcome.passed,
            "config": &cfg,
            "report": outcome.report,
        });
        write_json(path, &doc)?;
    }
    Ok(ExitCode::from(if outcome.passed { EXIT_PASS } else { EXIT_CHECK_FAILED }))
}

/// Copies each `Some` flag into the configuration.
macro_rules! overlay {
    ($cfg:expr, $args:expr; $($field:ident),* $(,)?) => {
        $( if let Some(v) = $args.$field.clone() { $cfg.$field = v.into(); } )*
    };
}
pub(crate) use overlay;
