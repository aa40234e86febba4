use std::path::PathBuf;
use std::process::ExitCode;

use bipartite::chsh::Budget;
use bipartite::ppt::Side;
use bipartite::state::{normalize, parse_state, StateFormat, StateMatrix};
use bipartite::{Error, QuadSelector};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod render;
mod sweep;

#[derive(Parser)]
#[command(
    name = "bipartite",
    version,
    about = "Separability and entanglement diagnostics for pure bipartite states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Separability verdict, entanglement parameters and optional PPT/CHSH sections.
    Analyze(AnalyzeArgs),
    /// Spectrum of the partial transpose.
    Ppt(PptArgs),
    /// Numerical CHSH maximum on a 2x2 state or on one 2x2 block.
    Chsh(ChshArgs),
    /// Generate a maximally entangled state, or certify one with --input.
    Maxent(MaxentArgs),
    /// Run seeded random states through every check and report worst cases.
    Sweep(SweepArgs),
    /// Check the shipped golden corpus and a random batch against the oracles.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    A,
    B,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::A => Side::A,
            SideArg::B => Side::B,
        }
    }
}

#[derive(Args, Clone)]
pub struct Output {
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Add per-stage wall times in milliseconds (makes output non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Clone)]
pub struct InputArgs {
    /// State file, JSON or plain text; `-` reads standard input.
    #[arg(long)]
    pub input: PathBuf,
    /// Rescale the state to unit norm after loading.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Args, Clone)]
pub struct SearchArgs {
    /// Random restarts of the CHSH search.
    #[arg(long, default_value_t = Budget::default().restarts)]
    pub budget: usize,
    /// Coordinate sweeps per restart.
    #[arg(long, default_value_t = Budget::default().passes)]
    pub passes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SearchArgs {
    pub fn budget(&self) -> Budget {
        Budget {
            restarts: self.budget,
            passes: self.passes,
        }
    }
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Zero and separability threshold.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Negative-eigenvalue threshold for the PPT section.
    #[arg(long, default_value_t = 1e-9)]
    pub ppt_tol: f64,
    /// List every entanglement parameter instead of the largest few.
    #[arg(long)]
    pub all_params: bool,
    /// Parameters listed without --all-params.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Include the partial transpose spectrum (needs a normalized state).
    #[arg(long)]
    pub ppt: bool,
    #[arg(long, value_enum, default_value = "a")]
    pub side: SideArg,
    /// Include a CHSH search: on the whole state if 2x2, else on the witness block.
    #[arg(long)]
    pub chsh: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct PptArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1e-9)]
    pub ppt_tol: f64,
    #[arg(long, value_enum, default_value = "a")]
    pub side: SideArg,
    /// Compare with the closed-form spectrum (2xm, mx2 and 3x3 states).
    #[arg(long)]
    pub closed_form: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct ChshArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Block "s,t,u,v" (1-based) to search instead of the whole 2x2 state.
    #[arg(long)]
    pub selector: Option<QuadSelector>,
    /// Also run the exhaustive grid oracle at this resolution (at most 12).
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct MaxentArgs {
    /// State to certify; without it a state is generated from --n, --m, --seed.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "m")]
    pub n: Option<usize>,
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the generated state here in JSON form.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Allowed Gram residual and distance from the bound.
    #[arg(long, default_value_t = 1e-10)]
    pub cert_tol: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub ppt_tol: f64,
    /// Random restarts for the CHSH checks (2x2 sweeps only).
    #[arg(long, default_value_t = Budget::default().restarts)]
    pub budget: usize,
    /// States that get the CHSH optimizer and grid checks (2x2 sweeps only).
    #[arg(long, default_value_t = 20)]
    pub chsh_count: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Extra directory of JSON states for the four-way and closed-form checks.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Random states checked after the golden corpus.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub ppt_tol: f64,
    #[command(flatten)]
    pub output: Output,
}

/// Loaded state plus how it was obtained.
#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub source: String,
    pub rows: usize,
    pub cols: usize,
    pub norm2: f64,
    pub normalized_on_load: bool,
}

pub fn read_state(args: &InputArgs) -> Result<(StateMatrix, InputInfo), Error> {
    let source = args.input.display().to_string();
    let bytes = if source == "-" {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut std::io::stdin(), &mut buf)
            .map_err(|e| Error::Parse(e.to_string()))?;
        buf
    } else {
        std::fs::read(&args.input).map_err(|e| Error::Parse(format!("{source}: {e}")))?
    };
    let raw = parse_state(&bytes, StateFormat::detect(&bytes))?;
    let state = if args.normalize {
        normalize(&raw)?
    } else {
        raw
    };
    let info = InputInfo {
        source,
        rows: state.rows(),
        cols: state.cols(),
        norm2: state.norm2(),
        normalized_on_load: args.normalize,
    };
    Ok((state, info))
}

/// Prints a report in the requested format, newline-terminated.
pub fn emit<T: Serialize>(
    format: Format,
    report: &T,
    text: impl FnOnce(&T) -> String,
) -> Result<(), Error> {
    let out = match format {
        Format::Json => {
            serde_json::to_string_pretty(report).map_err(|e| Error::Numerical(e.to_string()))?
        }
        Format::Text => text(report),
    };
    println!("{}", out.trim_end());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Ppt(a) => commands::ppt(&a),
        Command::Chsh(a) => commands::chsh(&a),
        Command::Maxent(a) => commands::maxent(&a),
        Command::Sweep(a) => sweep::sweep(&a),
        Command::Verify(a) => sweep::verify(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
