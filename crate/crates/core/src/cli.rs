//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::grammar::Grammar;
use crate::harness::{differential_test, GenParams};
use crate::normalize::to_simple_form;
use crate::pipeline::{solve, stats};
use crate::semantics::{decide_grammar, Verdict, DEFAULT_BUDGET};
use crate::textio::{parse_grammar, print_grammar};
use crate::transform::dagger_grammar;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DIVERGENT: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Parser, Debug)]
#[command(name = "stepdown", version, about = "Decide convergence of higher-order grammars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and type check.
    Check { file: PathBuf },
    /// Print order, size, arity, application depth and nonterminal count.
    Stats { file: PathBuf },
    /// Print an equivalent grammar in simple form.
    Normalize {
        file: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        output: Option<PathBuf>,
    },
    /// Apply the order-reducing transformation.
    Reduce {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(short = 'o', value_name = "OUT")]
        output: Option<PathBuf>,
    },
    /// Decide convergence by reduction to order 0.
    Solve {
        file: PathBuf,
        /// Print per-step statistics first.
        #[arg(long)]
        trace: bool,
    },
    /// Decide convergence by bounded exploration of reductions.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Compare `solve` with `oracle` on generated grammars.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        max_order: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
    },
}

/// Failure of a subcommand, already carrying its exit code.
struct Exit(i32);

fn load(file: &Path, err: &mut dyn Write) -> Result<Grammar, Exit> {
    let text = std::fs::read_to_string(file).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", file.display());
        Exit(EXIT_IO)
    })?;
    parse_grammar(&text).map_err(|diags| {
        for d in diags {
            let _ = writeln!(err, "{}:{d}", file.display());
        }
        Exit(EXIT_FAILURE)
    })
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Exit> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            let _ = writeln!(err, "{}: {e}", path.display());
            Exit(EXIT_IO)
        }),
        None => out.write_all(text.as_bytes()).map_err(|_| Exit(EXIT_IO)),
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let io = |_| Exit(EXIT_IO);
    match cmd {
        Command::Check { file } => {
            load(&file, err)?;
            Ok(EXIT_OK)
        }
        Command::Stats { file } => {
            let g = load(&file, err)?;
            writeln!(out, "{}", stats(&g)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Normalize { file, output } => {
            let g = load(&file, err)?;
            emit(&print_grammar(&to_simple_form(&g)), output.as_deref(), out, err)?;
            Ok(EXIT_OK)
        }
        Command::Reduce { file, steps, output } => {
            let mut g = load(&file, err)?;
            if steps > g.order() {
                let _ = writeln!(
                    err,
                    "{}: cannot apply {steps} steps to a grammar of order {}",
                    file.display(),
                    g.order()
                );
                return Err(Exit(EXIT_USAGE));
            }
            for _ in 0..steps {
                g = dagger_grammar(&g);
            }
            emit(&print_grammar(&g), output.as_deref(), out, err)?;
            Ok(EXIT_OK)
        }
        Command::Solve { file, trace } => {
            let g = load(&file, err)?;
            let s = solve(&g).map_err(|_| Exit(EXIT_INTERNAL))?;
            if trace {
                for step in &s.trace {
                    writeln!(out, "{step}").map_err(io)?;
                }
            }
            let verdict = if s.convergent { "CONVERGENT" } else { "DIVERGENT" };
            writeln!(out, "{verdict}").map_err(io)?;
            Ok(if s.convergent { EXIT_OK } else { EXIT_DIVERGENT })
        }
        Command::Oracle { file, budget } => {
            let g = load(&file, err)?;
            let v = decide_grammar(&g, budget);
            writeln!(out, "{v}").map_err(io)?;
            Ok(match v {
                Verdict::Convergent(_) => EXIT_OK,
                Verdict::Divergent => EXIT_DIVERGENT,
                Verdict::BoundExceeded(_) => EXIT_UNKNOWN,
            })
        }
        Command::Fuzz { count, budget, seed, max_order, max_arity } => {
            if max_arity == 0 {
                let _ = writeln!(err, "--max-arity must be at least 1");
                return Err(Exit(EXIT_USAGE));
            }
            let p = GenParams { max_order, max_arity, seed, ..GenParams::default() };
            let report = differential_test(&p, count, budget);
            write!(out, "{report}").map_err(io)?;
            Ok(if report.failed() == 0 { EXIT_OK } else { EXIT_FAILURE })
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match catch_unwind(AssertUnwindSafe(|| execute(cli.command, &mut *out, &mut *err))) {
        Ok(Ok(code)) | Ok(Err(Exit(code))) => code,
        Err(_) => {
            let _ = writeln!(err, "internal error");
            EXIT_INTERNAL
        }
    }
}
