use std::io::IsTerminal;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kpa_core::config::load_basis;
use kpa_core::expr::{EqualityMode, DEFAULT_TOL};
use kpa_core::suite::{cmd_bracket, cmd_derive, run_suite, verify_exit_code, BracketEngine, Format, SuiteConfig};
use kpa_core::Error;

#[derive(Parser)]
#[command(name = "kpa", version, about = "Symbolic verification of deformed Poincare algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Shell,
    Numeric,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Poisson,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Abd,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites against a basis.
    Verify {
        /// Built-in basis (sr, dsr1, dual) or config path, optionally `path:section`.
        #[arg(long)]
        basis: String,
        /// Comma-separated suites, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Force one equality mode for every claim.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Relative tolerance of the numeric oracle.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Series order for the limits suite.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compute a single bracket {A, B}.
    Bracket {
        a: String,
        b: String,
        #[arg(long)]
        basis: String,
        #[arg(long, value_enum, default_value = "poisson")]
        engine: EngineArg,
    },
    /// Derive A, B, D (or the relation table) from the defining functions.
    Derive {
        #[arg(long)]
        basis: String,
        #[arg(long, value_enum, default_value = "abd")]
        what: What,
    },
}

fn color_enabled() -> bool {
    match std::env::var("KPA_COLOR").as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => std::io::stdout().is_terminal(),
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("kpa: {e}");
    match e {
        Error::Tripwire { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Verify {
            basis,
            suite,
            mode,
            seed,
            samples,
            tol,
            order,
            format,
            jobs,
        } => {
            let cfg = SuiteConfig {
                basis,
                suites: suite.split(',').map(|s| s.trim().to_string()).collect(),
                mode: mode.map(|m| match m {
                    ModeArg::Exact => EqualityMode::Exact,
                    ModeArg::Shell => EqualityMode::ModuloShell,
                    ModeArg::Numeric => EqualityMode::Numeric,
                }),
                seed,
                samples,
                tol,
                order,
                format: match format {
                    FormatArg::Text => Format::Text,
                    FormatArg::Json => Format::Json,
                },
                jobs,
            };
            let result = run_suite(&cfg);
            let code = verify_exit_code(&result);
            match result {
                Ok(report) => match cfg.format {
                    Format::Text => print!("{}", report.to_text(color_enabled())),
                    Format::Json => println!("{}", report.to_json()),
                },
                Err(e) => eprintln!("kpa: {e}"),
            }
            ExitCode::from(code)
        }
        Command::Bracket { a, b, basis, engine } => {
            let run = || -> kpa_core::Result<String> {
                let basis = load_basis(&basis)?;
                let engine = match engine {
                    EngineArg::Poisson => BracketEngine::Poisson,
                    EngineArg::Table => BracketEngine::Table,
                };
                let out = cmd_bracket(&basis, &a, &b, engine)?;
                let mut s = format!("{}\n", out.display);
                if !out.recognized {
                    s.push_str("note: not expressible in the basis generators; shown over SR phase space\n");
                }
                s.push_str("note: Poisson side, the commutator is [A,B] = i{A,B}\n");
                Ok(s)
            };
            match run() {
                Ok(s) => {
                    let mut lines = s.lines();
                    println!("{}", lines.next().unwrap_or_default());
                    for l in lines {
                        eprintln!("{l}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Derive { basis, what } => {
            let run = || -> kpa_core::Result<String> {
                let basis = load_basis(&basis)?;
                cmd_derive(
                    &basis,
                    match what {
                        What::Abd => "abd",
                        What::Table => "table",
                    },
                )
            };
            match run() {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
