use clap::{Args, Parser, Subcommand};
use pencilforge::suite::{run, Command, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact verification of deformed Poisson pencils of hydrodynamic type.
#[derive(Parser)]
#[command(name = "pencilforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Balinskii-Novikov operators, algebra axioms and compatibility of the metric pairs.
    VerifyDispersionless(Flags),
    /// Poisson property of the second-order deformations through the truncation order.
    VerifyDeformation(Flags),
    /// Truncated structures and their reduction by a Miura flow (F1 = f, F2 = h).
    VerifyTruncated(Flags),
    /// First-order families and their trivializers (F1 = h, F2 = k, F3 = s).
    VerifyFirstorder(Flags),
    /// Central invariants by root expansion, closed form and residue.
    Invariants(Flags),
    /// Complete lifts to the tangent bundle.
    VerifyLift(Flags),
    /// Lift of the scalar second-order deformations (F1 = f).
    LiftDemo(Flags),
    /// Catalogued cases.
    ListCases(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Case id: T1..T3, N1..N5, N6(k).
    #[arg(long)]
    case: Option<String>,
    /// η¹² as a rational, or `sym`.
    #[arg(long, allow_hyphen_values = true)]
    eta12: Option<String>,
    /// η²² as a rational, or `sym`.
    #[arg(long, allow_hyphen_values = true)]
    eta22: Option<String>,
    #[arg(long = "F1", allow_hyphen_values = true)]
    f1: Option<String>,
    #[arg(long = "F2", allow_hyphen_values = true)]
    f2: Option<String>,
    #[arg(long = "F3", allow_hyphen_values = true)]
    f3: Option<String>,
    #[arg(long = "F4", allow_hyphen_values = true)]
    f4: Option<String>,
    /// Seed for functions left unset.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

impl Cmd {
    fn split(self) -> (Command, Flags) {
        match self {
            Cmd::VerifyDispersionless(f) => (Command::VerifyDispersionless, f),
            Cmd::VerifyDeformation(f) => (Command::VerifyDeformation, f),
            Cmd::VerifyTruncated(f) => (Command::VerifyTruncated, f),
            Cmd::VerifyFirstorder(f) => (Command::VerifyFirstorder, f),
            Cmd::Invariants(f) => (Command::Invariants, f),
            Cmd::VerifyLift(f) => (Command::VerifyLift, f),
            Cmd::LiftDemo(f) => (Command::LiftDemo, f),
            Cmd::ListCases(f) => (Command::ListCases, f),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    let opts = RunOptions {
        case: flags.case,
        eta12: flags.eta12,
        eta22: flags.eta22,
        f: [flags.f1, flags.f2, flags.f3, flags.f4],
        seed: flags.seed,
        truncation: None,
    };
    let report = match run(command, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    print!("{}", report.to_text());
    if let Some(path) = flags.json {
        if let Err(e) = std::fs::write(&path, report.to_json()) {
            eprintln!("error: cannot write {}: {}", path.display(), e);
            return ExitCode::from(1);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
