//! Batch front end: `run`, `sweep`, `tables` and `oracle`.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 invariant violation,
//! 4 numerical failure.

pub mod files;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use crate::bases::{computational_basis, device_table, hadamard_mub};
use crate::conveyance::{convey_outcomes, ConveyMode};
use crate::error::Error;
use crate::estimator::{correlation, correlation_oracle_diag, reconstruct_matrix, Backend, CorrelationOptions, Outcomes};
use crate::pointer::PointerConfig;
use crate::qcore::DensityMatrix;
use files::{OutcomeKeyword, OutcomeSpec, RunConfig, StateFile};
use report::{pair, BranchEntry, ElementEntry, Num, OracleReport, RunReport, SweepRow};

/// Largest Hilbert-space dimension accepted from input files and flags.
pub const MAX_DIM: usize = 1 << 12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn parse(origin: &Path, e: &serde_json::Error) -> Self {
        CliError::Usage(format!(
            "{}: parse error at line {} column {}: {e}",
            origin.display(),
            e.line(),
            e.column()
        ))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            Error::Invariant(_) => CliError::Invariant(e.to_string()),
            other => CliError::Invariant(format!("invariant-violation: {other}")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "weakcorr", version, about = "Weak-coupling correlation measurement of multipartite states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full protocol and report the correlation.
    Run(RunArgs),
    /// Circuit-backend correlation against the diagonal oracle over a descending list of g.
    Sweep(RunArgs),
    /// Print the device operator table and the postselection basis.
    Tables(TablesArgs),
    /// Direct matrix elements against their weak-value reconstruction.
    Oracle(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// State file; a seeded random state is used when absent.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// analytic | circuit
    #[arg(long)]
    pub backend: Option<String>,
    /// literal | idealized
    #[arg(long)]
    pub mode: Option<String>,
    /// Coupling strength; a comma-separated descending list for `sweep`.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Party dimensions of the random state.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// Number of qubits.
    #[arg(default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("weakcorr: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(a) => {
            let (rho, cfg) = load_inputs(a)?;
            let g = match &a.g {
                Some(s) => parse_g(s)?,
                None => cfg.g,
            };
            let cfg = RunConfig { g, ..cfg };
            cfg.validate()?;
            let report = run_report(&rho, &cfg)?;
            let text = match a.format {
                Format::Csv => report.to_csv(),
                _ => report::to_json(&report),
            };
            emit(a.out.as_deref(), &text)
        }
        Command::Sweep(a) => {
            let (rho, cfg) = load_inputs(a)?;
            let gs = parse_g_list(a.g.as_deref())?;
            let rows = sweep(&rho, &cfg, &gs)?;
            let text = match a.format {
                Format::Json => report::to_json(&rows),
                _ => report::sweep_csv(&rows),
            };
            emit(a.out.as_deref(), &text)
        }
        Command::Tables(t) => emit(t.out.as_deref(), &tables(t.n, t.format)?),
        Command::Oracle(a) => {
            let (rho, cfg) = load_inputs(a)?;
            let report = oracle(&rho, &cfg)?;
            let text = match a.format {
                Format::Csv => report.to_csv(),
                _ => report::to_json(&report),
            };
            emit(a.out.as_deref(), &text)
        }
    }
}

fn load_inputs(a: &RunArgs) -> Result<(DensityMatrix<f64>, RunConfig), CliError> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(b) = &a.backend {
        cfg.backend = keyword::<Backend>(b, "backend")?;
    }
    if let Some(m) = &a.mode {
        cfg.mode = keyword::<ConveyMode>(m, "mode")?;
    }
    if let Some(s) = a.sigma {
        cfg.sigma = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let rho = match &a.state {
        Some(p) => StateFile::load(p)?.density()?,
        None => {
            check_size(&a.dims)?;
            info!("random state on dims {:?} with seed {}", a.dims, cfg.seed);
            DensityMatrix::random(&a.dims, cfg.seed)?
        }
    };
    Ok((rho, cfg))
}

pub(crate) fn check_size(dims: &[usize]) -> Result<(), CliError> {
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match total {
        Some(t) if t <= MAX_DIM => Ok(()),
        _ => Err(CliError::Invariant(format!("invariant-violation: dims {dims:?} exceed dimension {MAX_DIM}"))),
    }
}

fn keyword<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| CliError::Usage(format!("unknown {what} `{s}`")))
}

fn parse_g(s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad coupling strength `{s}`")))
}

/// Nonempty, positive, strictly descending.
pub fn parse_g_list(s: Option<&str>) -> Result<Vec<f64>, CliError> {
    let s = s.ok_or_else(|| CliError::Usage("sweep needs --g with a comma-separated list".into()))?;
    let gs = s.split(',').filter(|t| !t.trim().is_empty()).map(parse_g).collect::<Result<Vec<_>, _>>()?;
    if gs.is_empty() {
        return Err(CliError::Usage("empty g list".into()));
    }
    if gs.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
        return Err(CliError::Usage("g values must be positive".into()));
    }
    if gs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Usage("g values must be strictly descending".into()));
    }
    Ok(gs)
}

fn options(rho: &DensityMatrix<f64>, cfg: &RunConfig, outcomes: Outcomes) -> Result<CorrelationOptions<f64>, CliError> {
    let pointer = PointerConfig::new(cfg.g, cfg.sigma)?;
    let mut opts = CorrelationOptions::new(cfg.backend, cfg.mode, pointer, rho.dims().len());
    opts.outcomes = outcomes;
    opts.skip_broadcast = cfg.skip_broadcast;
    opts.postselection = Some(cfg.basis(rho.dims())?);
    Ok(opts)
}

/// The readings to simulate; the first one is the headline result.
fn outcome_list(dims: &[usize], cfg: &RunConfig) -> Vec<Outcomes> {
    match &cfg.outcomes {
        OutcomeSpec::Named(OutcomeKeyword::Zero) => vec![Outcomes::zero(dims.len())],
        OutcomeSpec::Fixed(o) => vec![o.clone()],
        OutcomeSpec::Named(OutcomeKeyword::Enumerate) => {
            let mus = if cfg.backend == Backend::Circuit && !cfg.skip_broadcast {
                dims.iter().copied().min().unwrap_or(1)
            } else {
                1
            };
            convey_outcomes(dims)
                .into_iter()
                .flat_map(|c| (0..mus).map(move |mu| Outcomes { convey: c.clone(), broadcast: mu }))
                .collect()
        }
    }
}

pub fn run_report(rho: &DensityMatrix<f64>, cfg: &RunConfig) -> Result<RunReport, CliError> {
    let list = outcome_list(rho.dims(), cfg);
    let mut branches = Vec::with_capacity(list.len());
    let mut headline = None;
    for outcomes in list {
        debug!("outcomes {outcomes:?}");
        match correlation(rho, &options(rho, cfg, outcomes.clone())?) {
            Ok(r) => {
                branches.push(BranchEntry::from_report(&r));
                headline.get_or_insert(r);
            }
            Err(Error::ImpossibleOutcome(_)) if headline.is_some() => branches.push(BranchEntry::impossible(outcomes)),
            Err(e) => return Err(e.into()),
        }
    }
    let r = headline.expect("outcome list is never empty");
    info!("correlation {} ({} backend, {} mode)", r.value, r.backend, r.mode);
    let mut report = RunReport::new(&r, cfg.g, cfg.sigma, cfg.skip_broadcast, rho.dims());
    report.branches = branches;
    Ok(report)
}

pub fn sweep(rho: &DensityMatrix<f64>, cfg: &RunConfig, gs: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(gs.len());
    let outcomes = outcome_list(rho.dims(), cfg).swap_remove(0);
    for &g in gs {
        let c = RunConfig { g, backend: Backend::Circuit, ..cfg.clone() };
        c.validate()?;
        let r = correlation(rho, &options(rho, &c, outcomes.clone())?)?;
        let err = (r.value - r.oracle_diag).abs();
        let (ratio, monotone) = match rows.last() {
            Some(prev) => (Some(Num(prev.abs_error.0 / err)), Some(err <= prev.abs_error.0)),
            None => (None, None),
        };
        rows.push(SweepRow {
            g: Num(g),
            correlation: Num(r.value),
            abs_error: Num(err),
            max_weak_value_residual: Num(r.weak_limit_residual),
            error_ratio: ratio,
            monotone,
        });
    }
    Ok(rows)
}

pub fn oracle(rho: &DensityMatrix<f64>, cfg: &RunConfig) -> Result<OracleReport, CliError> {
    let measured = computational_basis(rho.dims())?;
    let post = cfg.basis(rho.dims())?;
    let rec = reconstruct_matrix(rho, &measured, &post)?;
    let d = rho.dim();
    let mut elements = Vec::with_capacity(d * d);
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (direct, r) = (rho.element(i, j), rec.get(i, j));
            worst = worst.max((direct - r).norm());
            elements.push(ElementEntry { i, j, direct: pair(direct), reconstructed: pair(r) });
        }
    }
    Ok(OracleReport {
        dims: rho.dims().to_vec(),
        elements,
        max_residual: Num(worst),
        oracle_diag: Num(correlation_oracle_diag(rho)?),
        trace_distance_to_product: Num(rho.trace_distance(&rho.product_of_marginals()?)?),
    })
}

/// Device operator table and postselection basis for `n` qubits.
pub fn tables(n: usize, format: Format) -> Result<String, CliError> {
    if n < 1 {
        return Err(CliError::Usage("tables needs at least one qubit".into()));
    }
    if n > 12 {
        return Err(CliError::Usage(format!("at most 12 qubits, got {n}")));
    }
    let table = device_table(&vec![2; n])?;
    let basis = hadamard_mub::<f64>(n)?;
    let titled = format != Format::Csv;
    let mut out = String::new();
    if titled {
        out += "device operators\n";
    }
    out += "i";
    for i in 0..table.columns() {
        out += &format!(",{}", i + 1);
    }
    out += "\n";
    for line in 0..table.lines() {
        out += &format!("A{}i", line + 1);
        for i in 0..table.columns() {
            out += &format!(",{}", table.render(line, i));
        }
        out += "\n";
    }
    out += &format!("reconstruction,{}\n", if table.reconstruction_holds() { "OK" } else { "FAILED" });
    out += "\n";
    if titled {
        out += &format!("postselection states (amplitudes times 1/sqrt({}))\n", table.columns());
    }
    out += "k,b_k\n";
    for k in 0..basis.len() {
        out += &format!("{},", k + 1);
        for (x, amp) in basis.vector(k).amplitudes().iter().enumerate() {
            let sign = if amp.re < 0.0 { "-" } else if x == 0 { "" } else { "+" };
            out += &format!("{sign}|{}>", table.column_label(x));
        }
        out += "\n";
    }
    Ok(out)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))
        }
    }
}
