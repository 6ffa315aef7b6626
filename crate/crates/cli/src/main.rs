mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "nmifc", version, about = "Type checker, interpreter and security harness for a nonmalleable information flow calculus")]
pub struct Cli {
    /// Lattice config (JSON). Overrides a `#lattice` directive.
    #[arg(long, global = true, alias = "config")]
    pub lattice: Option<PathBuf>,
    /// Program counter label. Overrides a `#pc` directive.
    #[arg(long, global = true)]
    pub pc: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for generated pools.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Step budget per evaluation.
    #[arg(long, global = true, default_value_t = nmifc::eval::DEFAULT_FUEL, value_parser = parse_fuel)]
    pub fuel: usize,
    /// Run and verify programs that fail to type-check.
    #[arg(long = "unsafe", global = true)]
    pub unsafe_: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lattice query: `actsfor p q`, `flows l l'`, `voice l`, `view l`, `join l l'`, `meet l l'`.
    Lattice {
        query: String,
        /// Show the clause coverage behind an acts-for or flows-to answer.
        #[arg(long)]
        explain: bool,
    },
    /// Type-check a program and print its type.
    Check {
        file: PathBuf,
        /// Print the AST as JSON instead of the type.
        #[arg(long)]
        ast: bool,
    },
    /// Evaluate a program and print its value and trace.
    Run {
        file: PathBuf,
        /// `name=value`; a leading `lam` binding `name` is applied, otherwise
        /// the free variable is substituted.
        #[arg(long = "input", value_name = "NAME=VALUE")]
        inputs: Vec<String>,
    },
    /// Check a security condition over finite input pools.
    Verify {
        file: PathBuf,
        /// rd, te, nmif, ni-1, ni-2 or ni-3.
        #[arg(long)]
        condition: String,
        /// Attacker atoms, comma separated.
        #[arg(long, value_delimiter = ',')]
        attacker: Vec<String>,
        /// Pools JSON. Generated from `--seed` when absent.
        #[arg(long)]
        pools: Option<PathBuf>,
        /// High set for noninterference, e.g. `secret(U)` or `above(T)`.
        #[arg(long)]
        high: Option<String>,
        /// Size of each generated pool.
        #[arg(long, default_value_t = 3)]
        pool_size: usize,
    },
    /// Replace holes by projections of a fresh attacker input.
    Desugar { file: PathBuf },
}

fn parse_fuel(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("fuel must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Failure::Parse(String::new()).code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            f.report(cli.format);
            ExitCode::from(f.code())
        }
    }
}
