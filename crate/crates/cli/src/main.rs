//! `lutcim`: command-line front end for the LUT multiplier models.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags, operands that do
//! not fit, unsupported widths), 1 when an internal check fails.

mod commands;
mod operand;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lutcim_core::MultiplierKind;

fn parse_kind(s: &str) -> Result<MultiplierKind, String> {
    s.parse()
}

#[derive(Debug, Parser)]
#[command(
    name = "lutcim",
    version,
    about = "LUT-based compute-in-memory multiplier simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Multiply one pair of operands through a multiplier model.
    Mul {
        /// traditional, dc, opt-dc, approx-dc or approx-dc2
        #[arg(long, value_parser = parse_kind)]
        kind: MultiplierKind,
        /// Weight, binary MSB-first (0110) or decimal with a 0d prefix (0d6).
        #[arg(long)]
        w: String,
        /// Input, same notation as --w.
        #[arg(long)]
        y: String,
        /// Operand width; required for widths other than 4 with 0d operands.
        #[arg(long)]
        width: Option<u32>,
        /// Print the per-position adder trace.
        #[arg(long)]
        trace: bool,
    },
    /// Component counts and weighted area as JSON, or a table of every kind.
    Cost {
        #[arg(long, value_parser = parse_kind, required_unless_present = "all", conflicts_with = "all")]
        kind: Option<MultiplierKind>,
        /// Print every kind side by side.
        #[arg(long)]
        all: bool,
        /// Operand width.
        #[arg(long)]
        n: u32,
        /// `name=value` area weights (sram_cell, mux2to1_1b, half_adder, full_adder).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Chunk muxes served by one LUT bank.
        #[arg(long, default_value_t = 2)]
        fanout: u32,
        /// Constant lower partial product for approx-dc (6 bits).
        #[arg(long, default_value = "000000")]
        zlsb: String,
    },
    /// Write error-analysis CSVs and print a summary.
    Analyze {
        #[arg(value_enum)]
        target: AnalyzeTarget,
        /// approx-dc or approx-dc2; required for heatmap and histogram.
        #[arg(long, value_parser = parse_kind)]
        kind: Option<MultiplierKind>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Mean absolute error of each multiplier inside a quantized network.
    Nn {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layer sizes joined by `-`.
        #[arg(long, default_value = "4-8-2")]
        topology: String,
    },
    /// Replay the W=0110 test vectors on every exact multiplier.
    Vectors,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AnalyzeTarget {
    Dist,
    Hamming,
    Heatmap,
    Histogram,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mul {
            kind,
            w,
            y,
            width,
            trace,
        } => commands::mul(kind, &w, &y, width, trace),
        Command::Cost {
            kind,
            all,
            n,
            weights,
            fanout,
            zlsb,
        } => commands::cost(kind, all, n, weights.as_deref(), fanout, &zlsb),
        Command::Analyze { target, kind, out } => commands::analyze(target, kind, &out),
        Command::Nn {
            trials,
            seed,
            topology,
        } => commands::nn(trials as usize, seed, &topology),
        Command::Vectors => commands::vectors(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
