use std::path::PathBuf;

use clap::Args;
use quasireal::realizations::{CpCertificate, HiddenQuantumModel, TOL_CP};
use quasireal::{QuasiRealization, Tolerances, ValidationReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::driver::{overlay, CommandConfig, Outcome};
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct ValidateModelArgs {
    /// Quasi-realization or HQMM JSON file.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Longest word in the exhaustive checks [default: 6].
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Relative fixed-point tolerance [default: 1e-10].
    #[arg(long)]
    pub fix_rel: Option<f64>,
    /// Absolute probability tolerance [default: 1e-9].
    #[arg(long)]
    pub prob: Option<f64>,
    /// Complete-positivity tolerance for HQMM files [default: 1e-9].
    #[arg(long)]
    pub tol_cp: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateModelConfig {
    pub model: Option<PathBuf>,
    pub max_len: usize,
    pub fix_rel: f64,
    pub prob: f64,
    pub eig: f64,
    pub tol_cp: f64,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for ValidateModelConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { model: None, max_len: 6, fix_rel: t.fix_rel, prob: t.prob, eig: t.eig, tol_cp: TOL_CP, seed: 0, parallel: 1 }
    }
}

impl CommandConfig for ValidateModelConfig {
    const NAME: &'static str = "validate-model";

    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }

    fn parallel_mut(&mut self) -> &mut usize {
        &mut self.parallel
    }

    fn finalize(&mut self) -> CliResult<()> {
        if self.model.is_none() {
            return Err(CliError::Config("a model path is required".into()));
        }
        Ok(())
    }
}

impl ValidateModelConfig {
    pub fn apply(&mut self, args: &ValidateModelArgs) {
        overlay!(self, args; model, max_len, fix_rel, prob, tol_cp);
    }
}

#[derive(Debug, Serialize)]
struct ValidateModelReport {
    kind: &'static str,
    dim: usize,
    symbols: usize,
    validation: ValidationReport,
    cp_certificate: Option<CpCertificate>,
}

pub fn run(cfg: &ValidateModelConfig) -> CliResult<Outcome> {
    let path = cfg.model.as_ref().expect("checked in finalize");
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let tol = Tolerances { fix_rel: cfg.fix_rel, prob: cfg.prob, eig: cfg.eig };
    // HQMM files are recognised by their Kraus lists.
    let (kind, qr, cert) = if value.get("kraus").is_some() {
        let model = HiddenQuantumModel::from_json_value(&value)?;
        let cert = model.certificate(cfg.tol_cp);
        ("hqmm", model.to_quasi_unchecked()?, Some(cert))
    } else {
        ("quasi", QuasiRealization::from_json_str(&serde_json::to_string(&value)?)?, None)
    };
    let validation = qr.validate(cfg.max_len, &tol);
    let passed = validation.passed && cert.as_ref().is_none_or(|c| c.passed);
    let summary = if passed {
        format!("{} words up to length {} checked", validation.words_checked, cfg.max_len)
    } else {
        let mut reasons = validation.violations.clone();
        if cert.as_ref().is_some_and(|c| !c.passed) {
            reasons.push("complete-positivity certificate failed".into());
        }
        reasons.join("; ")
    };
    let report = ValidateModelReport { kind, dim: qr.dim(), symbols: qr.num_symbols(), validation, cp_certificate: cert };
    Outcome::new(passed, summary, &report)
}
