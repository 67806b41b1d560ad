//! `fairsolve`: exact optimal randomized fair classifiers, loss curves,
//! zero-cost fair representations, and brute-force cross-checks, from the
//! command line.
//!
//! All rationals print as lowest-terms `num/den` strings; inputs accept
//! fractions and finite decimals. Errors are single-line JSON diagnostics on
//! stderr with exit code 2 (validation), 3 (undefined metric), or
//! 4 (enumeration cap); the `oracle` command exits 1 when solver and oracle
//! disagree.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairsolve_core::Notion;

#[derive(Parser)]
#[command(name = "fairsolve", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NotionArg {
    Dp,
    Pe,
    Eo,
}

impl From<NotionArg> for Notion {
    fn from(arg: NotionArg) -> Notion {
        match arg {
            NotionArg::Dp => Notion::Dp,
            NotionArg::Pe => Notion::Pe,
            NotionArg::Eo => Notion::Eo,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// Distribution file: JSON records, or CSV when the path ends in .csv
    #[arg(long)]
    input: std::path::PathBuf,

    /// Fairness notion
    #[arg(long, value_enum)]
    notion: NotionArg,

    /// False-positive weight of the cost-sensitive loss, in (0, 1)
    #[arg(long, default_value = "1/2")]
    alpha: String,

    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal randomized fair classifier
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Emit the loss curve over the candidate rates
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Build a fair representation and audit its cost of fairness
    Represent {
        #[command(flatten)]
        common: CommonArgs,
        /// Cap on representation points for the exhaustive audit
        #[arg(long, default_value_t = fairsolve_core::DEFAULT_AUDIT_CAP)]
        cap: usize,
    },
    /// Check a classifier file for exact fairness and report its loss
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Classifier file: {"accept":[{"x","z","p"}, ...]} or a solve report
        #[arg(long)]
        classifier: std::path::PathBuf,
    },
    /// Cross-check the solver against brute-force enumeration
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Cap on distribution cells for the enumeration
        #[arg(long, default_value_t = fairsolve_core::DEFAULT_ORACLE_CAP)]
        cap: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("{}", failure.diagnostic());
            failure.exit_code()
        }
    }
}
