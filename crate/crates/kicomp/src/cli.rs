//! Command-line front end: file ingestion, decomposition, rate reports,
//! codec experiments and fixture generation.
//!
//! Exit codes are a stable contract: 0 success, 1 input error,
//! 2 decomposition failure, 3 internal assertion (a bug surfaced).
//! Data goes to stdout, diagnostics to stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ensemble::{self, Ensemble, EnsembleError};
use crate::kidecomp::{ki_decompose, DecompConfig, KiDecomposition, KiError};
use crate::rates::{self, RateError, RateReport};
use crate::vlfcodec::{self, CodecError, NBlockOutcome, SampleStats};

#[derive(Parser, Debug)]
#[command(
    name = "kicomp",
    version,
    about = "Block decomposition, compression rates and the variable-length \
             faithful codec for quantum-state ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

/// Global knobs; defaults mirror the library tolerances.
#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Seed for every randomized internal draw.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Override the P1 reconstruction tolerance.
    #[arg(long = "tol-p1", global = true)]
    pub tol_p1: Option<f64>,
    /// Override the P2 product-form tolerance.
    #[arg(long = "tol-p2", global = true)]
    pub tol_p2: Option<f64>,
    /// Modular-flow samples on the first decomposition attempt.
    #[arg(long = "t-samples", global = true, default_value_t = 5)]
    pub t_samples: usize,
    /// Extra decomposition attempts after the first.
    #[arg(long = "max-retries", global = true, default_value_t = 4)]
    pub max_retries: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Cap on composite dimensions (tensor powers).
    #[arg(long = "max-dim", global = true, default_value_t = 256)]
    pub max_dim: usize,
    /// Accept unknown fields in input files.
    #[arg(long, global = true)]
    pub lenient: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the block decomposition of an ensemble file.
    Decompose { input: PathBuf },
    /// Compute every rate quantity and gap of an ensemble file.
    Rates {
        input: PathBuf,
        /// Also print the gap-pattern classification cell.
        #[arg(long)]
        table1: bool,
    },
    /// Code n-letter blocks: expected length, window and faithfulness.
    Codec {
        input: PathBuf,
        /// Letters coded jointly.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Add a Monte Carlo length summary with this many trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Write built-in fixture ensembles (E1..E7 or `all`) to a directory.
    Fixtures {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

impl RunConfig {
    pub fn decomp_config(&self) -> DecompConfig {
        let mut cfg = DecompConfig {
            seed: self.seed,
            t_sample_count: self.t_samples,
            max_retries: self.max_retries,
            max_dim: self.max_dim,
            ..DecompConfig::default()
        };
        if let Some(t) = self.tol_p1 {
            cfg.tol_p1 = t;
        }
        if let Some(t) = self.tol_p2 {
            cfg.tol_p2 = t;
        }
        cfg
    }
}

#[derive(Debug)]
pub enum CliError {
    Ensemble(EnsembleError),
    Ki(KiError),
    Rate(RateError),
    Codec(CodecError),
    Io(std::io::Error),
    BadArgument(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Ensemble(e) => write!(f, "{e}"),
            CliError::Ki(e) => write!(f, "{e}"),
            CliError::Rate(e) => write!(f, "{e}"),
            CliError::Codec(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::BadArgument(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        CliError::Ensemble(e)
    }
}
impl From<KiError> for CliError {
    fn from(e: KiError) -> Self {
        CliError::Ki(e)
    }
}
impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        CliError::Rate(e)
    }
}
impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        CliError::Codec(e)
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn ki_exit_code(e: &KiError) -> i32 {
    match e {
        KiError::InvalidEnsemble(_) | KiError::BadData(_) => 1,
        KiError::Ensemble(e) => ensemble_exit_code(e),
        KiError::DecompositionFailed { .. }
        | KiError::VerifyFailed(_)
        | KiError::DegenerateSample { .. }
        | KiError::NonProductResidual { .. }
        | KiError::NotCommuting { .. } => 2,
        KiError::ClosureDiverged { .. } | KiError::Mat(_) => 3,
    }
}

fn ensemble_exit_code(_e: &EnsembleError) -> i32 {
    1
}

fn rate_exit_code(e: &RateError) -> i32 {
    match e {
        RateError::Ki(inner) => ki_exit_code(inner),
        RateError::Ensemble(inner) => ensemble_exit_code(inner),
        RateError::InconsistentBound { .. } | RateError::Internal(_) | RateError::Mat(_) => 3,
    }
}

fn codec_exit_code(e: &CodecError) -> i32 {
    match e {
        CodecError::Ki(inner) => ki_exit_code(inner),
        CodecError::Ensemble(inner) => ensemble_exit_code(inner),
        CodecError::Rate(inner) => rate_exit_code(inner),
        _ => 3,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ensemble(e) => ensemble_exit_code(e),
            CliError::Ki(e) => ki_exit_code(e),
            CliError::Rate(e) => rate_exit_code(e),
            CliError::Codec(e) => codec_exit_code(e),
            CliError::Io(_) | CliError::BadArgument(_) => 1,
        }
    }
}

/// Dispatches a parsed invocation; prints data to stdout and diagnostics to
/// stderr, returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Decompose { input } => cmd_decompose(input, &cli.config),
        Command::Rates { input, table1 } => cmd_rates(input, *table1, &cli.config),
        Command::Codec { input, n, trials } => cmd_codec(input, *n, *trials, &cli.config),
        Command::Fixtures { name, out } => cmd_fixtures(name, out),
    };
    match result {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            if let CliError::Ki(KiError::DecompositionFailed {
                last_report: Some(report), ..
            }) = &err
            {
                eprintln!(
                    "last verification report: {}",
                    ensemble::to_json_17sig(report)
                );
            }
            err.exit_code()
        }
    }
}

fn load(input: &Path, config: &RunConfig) -> Result<Ensemble, CliError> {
    Ok(Ensemble::read_file(input, config.lenient)?)
}

pub fn cmd_decompose(input: &Path, config: &RunConfig) -> Result<String, CliError> {
    let e = load(input, config)?;
    let d = ki_decompose(&e, &config.decomp_config())?;
    Ok(match config.format {
        OutputFormat::Json => d.to_json(),
        OutputFormat::Text => render_decomposition_text(&d),
    })
}

#[derive(Serialize)]
struct Table1Cell {
    row: &'static str,
    column: &'static str,
    cell: &'static str,
}

#[derive(Serialize)]
struct RatesOutput {
    #[serde(flatten)]
    report: RateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    table1: Option<Table1Cell>,
}

pub fn cmd_rates(input: &Path, table1: bool, config: &RunConfig) -> Result<String, CliError> {
    let e = load(input, config)?;
    let report = rates::full_report(&e, &config.decomp_config())?;
    let cell = table1.then(|| Table1Cell {
        row: if report.classification.is_pure() { "pure" } else { "mixed" },
        column: if report.classification.is_classical() { "classical" } else { "quantum" },
        cell: report.classification.gap_pattern(),
    });
    Ok(match config.format {
        OutputFormat::Json => {
            let mut s = ensemble::to_json_17sig(&RatesOutput { report, table1: cell });
            s.push('\n');
            s
        }
        OutputFormat::Text => render_rates_text(&report, cell.as_ref()),
    })
}

#[derive(Serialize)]
struct CodecOutput {
    block_len: usize,
    code: Vec<CodeEntry>,
    expected_length: f64,
    per_letter_rate: f64,
    window: [f64; 2],
    roundtrip_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampling: Option<SampleStats>,
}

#[derive(Serialize)]
struct CodeEntry {
    block: usize,
    bits: String,
    prob: f64,
    codeword_len: usize,
    payload_qubits: usize,
}

pub fn cmd_codec(
    input: &Path,
    n: usize,
    trials: Option<usize>,
    config: &RunConfig,
) -> Result<String, CliError> {
    if n == 0 {
        return Err(CliError::BadArgument("--n must be at least 1".into()));
    }
    let e = load(input, config)?;
    let outcome = vlfcodec::nblock_experiment(&e, n, &config.decomp_config())?;
    let sampling = match trials {
        Some(t) if t >= 1 => Some(vlfcodec::sample_lengths(
            &outcome.decomposition,
            &outcome.code,
            &outcome.power,
            t,
            config.seed,
        )?),
        Some(_) => return Err(CliError::BadArgument("--trials must be at least 1".into())),
        None => None,
    };
    let out = CodecOutput {
        block_len: n,
        code: outcome
            .stats
            .per_block
            .iter()
            .map(|b| CodeEntry {
                block: b.block,
                bits: outcome.code.codeword(b.block).unwrap_or("").to_string(),
                prob: b.prob,
                codeword_len: b.codeword_len,
                payload_qubits: b.payload_qubits,
            })
            .collect(),
        expected_length: outcome.stats.expected_length,
        per_letter_rate: outcome.stats.per_letter_rate,
        window: outcome.window,
        roundtrip_residual: outcome.roundtrip_residual,
        sampling,
    };
    Ok(match config.format {
        OutputFormat::Json => {
            let mut s = ensemble::to_json_17sig(&out);
            s.push('\n');
            s
        }
        OutputFormat::Text => render_codec_text(&out, &outcome),
    })
}

pub fn cmd_fixtures(name: &str, out: &Path) -> Result<String, CliError> {
    let names: Vec<&str> = if name.eq_ignore_ascii_case("all") {
        ensemble::FIXTURE_NAMES.to_vec()
    } else {
        let canonical = ensemble::FIXTURE_NAMES
            .iter()
            .find(|n| n.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                CliError::BadArgument(format!(
                    "unknown fixture `{name}`; expected one of E1..E7 or `all`"
                ))
            })?;
        vec![canonical]
    };
    std::fs::create_dir_all(out)?;
    let mut listing = String::new();
    for n in names {
        let e = ensemble::fixture(n).expect("fixture names are exhaustive");
        let path = out.join(format!("{n}.json"));
        e.write_file(&path)?;
        listing.push_str(&format!("{}\n", path.display()));
    }
    Ok(listing)
}

// ---------------------------------------------------------------------------
// Text rendering
// ---------------------------------------------------------------------------

fn render_decomposition_text(d: &KiDecomposition) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "support: {} of {} dims\n",
        d.support_dim, d.source_dim
    ));
    s.push_str("block  dim_J  dim_K  p(l)\n");
    for (l, b) in d.blocks.iter().enumerate() {
        s.push_str(&format!(
            "{:<6} {:<6} {:<6} {:.9}\n",
            l + 1,
            b.dim_j,
            b.dim_k,
            b.prob
        ));
    }
    let v = &d.verification;
    s.push_str(&format!(
        "verification: P1 {:.3e} (tol {:.1e}) {}; P2 {:.3e} (tol {:.1e}) {}; P3 commutant dims {:?} {}\n",
        v.p1_reconstruction.residual,
        v.p1_reconstruction.tolerance,
        pass_str(v.p1_reconstruction.passed),
        v.p2_product_form.residual,
        v.p2_product_form.tolerance,
        pass_str(v.p2_product_form.passed),
        v.p3_commutant_dims,
        pass_str(v.p3_passed),
    ));
    s
}

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn render_rates_text(r: &RateReport, cell: Option<&Table1Cell>) -> String {
    let mut s = String::new();
    s.push_str(&format!("classification : {}\n", r.classification));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "I_C", r.i_c));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "D_NC", r.d_nc));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "I_NC", r.i_nc));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "I_LH", r.i_lh));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "R_vlf_opt", r.r_vlf_opt));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "R_flaf_opt", r.r_flaf_opt));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "gap_F-AF", r.gap_f_af));
    s.push_str(&format!("{:<14}: {:.9} bits\n", "defect_upper", r.defect_upper));
    s.push_str(&format!(
        "I_eff interval : [{:.9}, {:.9}] bits\n",
        r.i_eff_interval[0], r.i_eff_interval[1]
    ));
    s.push_str("blocks (dim_J, dim_K, p):");
    for b in &r.blocks {
        s.push_str(&format!(" ({}, {}, {:.6})", b.dim_j, b.dim_k, b.prob));
    }
    s.push('\n');
    if let Some(c) = cell {
        s.push_str(&format!("table-1 cell   : {} / {}: {}\n", c.row, c.column, c.cell));
    }
    s
}

fn render_codec_text(out: &CodecOutput, outcome: &NBlockOutcome) -> String {
    let mut s = String::new();
    s.push_str(&format!("block length n : {}\n", out.block_len));
    s.push_str("block  codeword    p(l)        qubits\n");
    for c in &out.code {
        s.push_str(&format!(
            "{:<6} {:<11} {:<11.6} {}\n",
            c.block + 1,
            if c.bits.is_empty() { "(empty)" } else { &c.bits },
            c.prob,
            c.payload_qubits
        ));
    }
    s.push_str(&format!("expected length  : {:.9} qubits\n", out.expected_length));
    s.push_str(&format!("per-letter rate  : {:.9} qubits\n", out.per_letter_rate));
    s.push_str(&format!(
        "window           : [{:.9}, {:.9}]\n",
        out.window[0], out.window[1]
    ));
    s.push_str(&format!("roundtrip residual: {:.3e}\n", out.roundtrip_residual));
    s.push_str(&format!(
        "kraft sum        : {:.12}\n",
        outcome.code.kraft_sum()
    ));
    if let Some(samp) = &out.sampling {
        s.push_str(&format!(
            "sampled mean     : {:.6} +- {:.6} ({} trials)\n",
            samp.mean, samp.std_err, samp.trials
        ));
    }
    s
}
