//! `markov-recovery` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error (a JSON object on
//! stderr), 2 when the computation ran but a check failed. Reports are
//! written before exit 2 is returned.

mod emit;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use markov_recovery::channel::{choi_and_verify, kraus_from_anchor, ChannelExport, CPTP_TOL};
use markov_recovery::correlations::{identity_suite, CorrelationReport, OptimizerConfig};
use markov_recovery::entropy::{entropy_report, is_markov_state, EntropyReport, MarkovCheck, DEFAULT_MARKOV_TOL};
use markov_recovery::linalg::random::seeded_rng;
use markov_recovery::linalg::{trace_norm_distance, ComplexMatrix};
use markov_recovery::markovscan::{scan, ScanInput, ScanReport};
use markov_recovery::qstate::{
    make_pure_markov, random_state, DensityMatrix, Label, PureMarkovSpec, PureState, QuantumState, SystemLayout,
};
use markov_recovery::recovery::{reconstruct_tripartite, PetzMap};
use markov_recovery::{io, Error};
use serde::Serialize;

const THREADS_ENV: &str = "MARKOV_RECOVERY_THREADS";
const RECOVERY_TOL: f64 = 1e-9;
const DIVISIBILITY_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct CliError {
    kind: String,
    message: String,
}

impl CliError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("IOError", format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "markov-recovery",
    version,
    about = "Pure Markov states, Petz recovery, reduced-dynamics channels and correlation measures",
    after_help = "Set MARKOV_RECOVERY_THREADS to cap the number of worker threads."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a pure Markov state (or a Haar-random tripartite state) to JSON.
    GenState(GenStateArgs),
    /// Test whether a tripartite state is Markov. Exits 2 if it is not.
    CheckMarkov(CheckMarkovArgs),
    /// Rebuild ρ^RQE from ρ^RQ through the Petz map of ρ^QE. Exits 2 if the
    /// reconstruction misses the input.
    PetzRecover(PetzRecoverArgs),
    /// Kraus operators of the reduced channel on supp ρ^Q. Exits 2 if the
    /// CPTP check fails.
    ExtractChannel(ExtractChannelArgs),
    /// Correlation measures and the Markov identity suite for a pure RQE state.
    Correlations(CorrelationsArgs),
    /// Product residual and divisibility along a Hamiltonian trajectory.
    MarkovScan(MarkovScanArgs),
}

#[derive(Args, Debug)]
struct GenStateArgs {
    /// Comma-separated spectrum of ρ^R.
    #[arg(long, value_delimiter = ',', requires = "mu", conflicts_with_all = ["random", "haar"])]
    kappa: Option<Vec<f64>>,
    /// Comma-separated spectrum of ρ^E.
    #[arg(long, value_delimiter = ',', requires = "kappa")]
    mu: Option<Vec<f64>>,
    /// Random spectra and Haar bases with the given Schmidt counts `N_KAPPA,N_MU`.
    #[arg(long, value_delimiter = ',', value_name = "N_KAPPA,N_MU", conflicts_with = "haar")]
    random: Option<Vec<usize>>,
    /// Haar-random pure state on R⊗Q⊗E, generally not Markov.
    #[arg(long)]
    haar: bool,
    /// Factor dimensions `D_R,D_Q,D_E`. Defaults to the smallest that fit.
    #[arg(long, value_delimiter = ',', value_name = "D_R,D_Q,D_E")]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the generating spec.
    #[arg(long)]
    spec_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckMarkovArgs {
    #[arg(long)]
    state: PathBuf,
    /// Largest conditional mutual information, in bits, accepted as Markov.
    #[arg(long, default_value_t = DEFAULT_MARKOV_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PetzRecoverArgs {
    #[arg(long)]
    state: PathBuf,
    /// Largest trace distance between input and reconstruction.
    #[arg(long, default_value_t = RECOVERY_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExtractChannelArgs {
    /// Pure or mixed R⊗Q⊗E state.
    #[arg(long)]
    state: PathBuf,
    /// Unitary on Q⊗E as `{rows, cols, matrix}`.
    #[arg(long)]
    unitary: PathBuf,
    /// Tolerance on the Choi minimum eigenvalue and the completeness residual.
    #[arg(long, default_value_t = CPTP_TOL)]
    cptp_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CorrelationsArgs {
    /// Pure R⊗Q⊗E state.
    #[arg(long)]
    state: PathBuf,
    /// Optimizer settings as JSON. Missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the Bloch grid, `THETA,PHI`. Defaults to 60,120.
    #[arg(long, value_delimiter = ',', value_name = "THETA,PHI")]
    grid: Option<Vec<usize>>,
    /// Overrides the number of random frames for measured dimension above 2. Default 5000.
    #[arg(long)]
    random_frames: Option<usize>,
    /// Overrides the pattern-search iteration budget. Default 200.
    #[arg(long)]
    refine_iters: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MarkovScanArgs {
    /// `{spec, hamiltonian, times, tol}`.
    #[arg(long)]
    input: PathBuf,
    /// Overrides the product-residual tolerance from the input. Default 1e-7.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest divisibility residual accepted.
    #[arg(long, default_value_t = DIVISIBILITY_TOL)]
    divisibility_tol: f64,
    #[arg(long)]
    out: PathBuf,
    /// Per-time CSV `time,product_residual,flag`.
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Outcome {
    Ok,
    CheckFailed(String),
}

#[derive(Serialize)]
struct MarkovCheckReport {
    check: MarkovCheck,
    entropies: EntropyReport,
}

#[derive(Serialize)]
struct RecoveryReport {
    trace_distance: f64,
    recovered: bool,
    tol: f64,
    reconstructed: DensityMatrix,
}

#[derive(Serialize)]
struct ScanOutput<'a> {
    #[serde(flatten)]
    report: &'a ScanReport,
    max_divisibility_residual: f64,
    divisibility_holds: bool,
}

/// A pure or mixed state read from disk.
enum AnyState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl AnyState {
    fn as_state(&self) -> &dyn QuantumState {
        match self {
            AnyState::Pure(p) => p,
            AnyState::Mixed(m) => m,
        }
    }
}

fn load_state(path: &Path) -> Result<AnyState, CliError> {
    let text = emit::read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    if value.get("amplitudes").is_some() {
        Ok(AnyState::Pure(io::from_str(&text)?))
    } else {
        Ok(AnyState::Mixed(io::from_str(&text)?))
    }
}

fn load_pure(path: &Path) -> Result<PureState, CliError> {
    match load_state(path)? {
        AnyState::Pure(p) => Ok(p),
        AnyState::Mixed(_) => Err(CliError::new(
            "InvalidState",
            format!("{}: a pure state with amplitudes is required", path.display()),
        )),
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    Ok(io::from_str(&emit::read_text(path)?)?)
}

fn expect_len<T>(flag: &str, v: &Option<Vec<T>>, n: usize) -> Result<(), CliError> {
    match v {
        Some(v) if v.len() != n => Err(CliError::new(
            "Usage",
            format!("--{flag} takes {n} comma-separated values, got {}", v.len()),
        )),
        _ => Ok(()),
    }
}

fn gen_state(a: &GenStateArgs) -> Result<Outcome, CliError> {
    expect_len("random", &a.random, 2)?;
    expect_len("dims", &a.dims, 3)?;
    let dims = a.dims.as_ref().map(|d| (d[0], d[1], d[2]));
    let (state, spec) = if a.haar {
        let (d_r, d_q, d_e) = dims.unwrap_or((2, 2, 2));
        (random_state(SystemLayout::rqe(d_r, d_q, d_e)?, a.seed), None)
    } else {
        let spec = if let Some(r) = &a.random {
            let (nk, nm) = (r[0], r[1]);
            let dims = dims.unwrap_or((nk, nk * nm, nm));
            PureMarkovSpec::random(nk, nm, dims, &mut seeded_rng(a.seed))?
        } else {
            let (kappa, mu) = match (&a.kappa, &a.mu) {
                (Some(k), Some(m)) => (k.clone(), m.clone()),
                _ => {
                    return Err(CliError::new(
                        "Usage",
                        "gen-state needs --kappa and --mu, --random, or --haar",
                    ))
                }
            };
            match dims {
                Some((d_r, d_q, d_e)) => PureMarkovSpec::with_dims(kappa, mu, d_r, d_q, d_e)?,
                None => PureMarkovSpec::standard(kappa, mu)?,
            }
        };
        (make_pure_markov(&spec), Some(spec))
    };
    emit::write_json(&a.out, &state)?;
    match (&a.spec_out, spec) {
        (Some(path), Some(spec)) => emit::write_json(path, &spec)?,
        (Some(_), None) => return Err(CliError::new("Usage", "--spec-out has no spec to write with --haar")),
        _ => {}
    }
    Ok(Outcome::Ok)
}

fn check_markov(a: &CheckMarkovArgs) -> Result<Outcome, CliError> {
    let state = load_state(&a.state)?;
    let s = state.as_state();
    let check = is_markov_state(s, a.tol)?;
    let report = MarkovCheckReport {
        entropies: entropy_report(s)?,
        check,
    };
    emit::write_json(&a.out, &report)?;
    Ok(if report.check.is_markov {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("conditional mutual information {:e} exceeds {:e}", report.check.cmi, a.tol))
    })
}

fn petz_recover(a: &PetzRecoverArgs) -> Result<Outcome, CliError> {
    let state = load_state(&a.state)?;
    let s = state.as_state();
    let rho = s.density();
    let map = PetzMap::new(&s.marginal(&[Label::Q, Label::E])?)?;
    let reconstructed = reconstruct_tripartite(&s.marginal(&[Label::R, Label::Q])?, &map)?;
    let trace_distance = trace_norm_distance(
        rho.marginal_ordered(reconstructed.layout().labels())?.matrix(),
        reconstructed.matrix(),
    )?;
    let report = RecoveryReport {
        trace_distance,
        recovered: trace_distance <= a.tol,
        tol: a.tol,
        reconstructed,
    };
    emit::write_json(&a.out, &report)?;
    Ok(if report.recovered {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("reconstruction trace distance {trace_distance:e} exceeds {:e}", a.tol))
    })
}

fn extract_channel(a: &ExtractChannelArgs) -> Result<Outcome, CliError> {
    let state = load_state(&a.state)?;
    let u: ComplexMatrix = load(&a.unitary)?;
    let rho_qe = state.as_state().marginal(&[Label::Q, Label::E])?;
    let channel = kraus_from_anchor(&rho_qe, &u)?;
    let choi = choi_and_verify(&channel)?;
    let mut export = ChannelExport::new(&channel, &choi);
    export.report.cp_flag = export.report.min_eigenvalue >= -a.cptp_tol;
    export.report.tp_flag = export.report.completeness_residual <= a.cptp_tol;
    emit::write_json(&a.out, &export)?;
    Ok(if export.report.cp_flag && export.report.tp_flag {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!(
            "CPTP check failed: min eigenvalue {:e}, completeness residual {:e}",
            export.report.min_eigenvalue, export.report.completeness_residual
        ))
    })
}

fn correlations(a: &CorrelationsArgs) -> Result<Outcome, CliError> {
    expect_len("grid", &a.grid, 2)?;
    let psi = load_pure(&a.state)?;
    let mut config: OptimizerConfig = match &a.config {
        Some(p) => load(p)?,
        None => OptimizerConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(g) = &a.grid {
        config.grid_theta = g[0];
        config.grid_phi = g[1];
    }
    if let Some(n) = a.random_frames {
        config.random_frames = n;
    }
    if let Some(n) = a.refine_iters {
        config.refine_iters = n;
    }
    let report = identity_suite(&psi, &config)?;
    match a.format {
        Format::Json => emit::write_json(&a.out, &report)?,
        Format::Csv => emit::write_csv(&a.out, &CorrelationReport::CSV_HEADER, [report.csv_row()])?,
    }
    Ok(match &report.markov_identities {
        Some(m) if !(m.degeneracy_holds && m.equalities_hold) => Outcome::CheckFailed(format!(
            "Markov identities violated: degeneracy {:e}, spread {:e}",
            m.degeneracy_max, m.equality_spread
        )),
        _ => Outcome::Ok,
    })
}

fn markov_scan(a: &MarkovScanArgs) -> Result<Outcome, CliError> {
    let input: ScanInput = load(&a.input)?;
    let tol = a.tol.unwrap_or(input.tol);
    let report = scan(&input.spec, &input.hamiltonian, &input.times, tol)?;
    let max_div = report.divisibility.iter().map(|d| d.residual).fold(0.0, f64::max);
    let out = ScanOutput {
        report: &report,
        max_divisibility_residual: max_div,
        divisibility_holds: max_div <= a.divisibility_tol,
    };
    emit::write_json(&a.out, &out)?;
    if let Some(path) = &a.csv {
        emit::write_csv(path, &ScanReport::CSV_HEADER, report.csv_rows())?;
    }
    Ok(if out.divisibility_holds {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("divisibility residual {max_div:e} exceeds {:e}", a.divisibility_tol))
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::new("Usage", format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new("Usage", e.to_string()))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match &cli.command {
        Command::GenState(a) => gen_state(a),
        Command::CheckMarkov(a) => check_markov(a),
        Command::PetzRecover(a) => petz_recover(a),
        Command::ExtractChannel(a) => extract_channel(a),
        Command::Correlations(a) => correlations(a),
        Command::MarkovScan(a) => markov_scan(a),
    }
}

fn report_error(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("Usage", e.to_string().trim_end());
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(msg)) => {
            report_error("CheckFailed", &msg);
            ExitCode::from(2)
        }
        Err(e) => {
            report_error(&e.kind, &e.message);
            ExitCode::from(1)
        }
    }
}
