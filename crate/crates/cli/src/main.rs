use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use orthostab::ModelParams;
use orthostab_cli::bench::{bench, write_csv, BenchOptions};
use orthostab_cli::instance::{gen, read_boxes, read_queries, write_boxes, Kind};
use orthostab_cli::verify::{verify, verify_with, RunOptions, Structure};
use orthostab_cli::HarnessError;

#[derive(Parser)]
#[command(name = "orthostab", about = "Generate instances, verify structures against oracles, benchmark")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a random instance.
    Gen {
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        universe: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// z-universe of zr4 / zr6 instances.
        #[arg(long, default_value_t = 4)]
        fanout: usize,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Check a structure against the oracle; exits 1 on a mismatch.
    Verify {
        #[arg(long)]
        structure: Structure,
        #[arg(short = 'i', long)]
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Queries to use instead of generated ones.
        #[arg(long)]
        query_file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
        levels: Vec<usize>,
        #[arg(long)]
        leaf_threshold: Option<usize>,
        #[arg(long)]
        check_dichotomy: bool,
        /// Damage the index before querying.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Build and query over generated instances of several sizes.
    Bench {
        #[arg(long)]
        structure: Structure,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        universe: Option<i64>,
        #[arg(long, default_value_t = 4)]
        fanout: usize,
        #[arg(long, default_value_t = 16)]
        level: usize,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
}

fn params(leaf_threshold: Option<usize>) -> ModelParams {
    let mut p = ModelParams::default();
    if let Some(t) = leaf_threshold {
        p.leaf_threshold = t;
    }
    p
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.cmd {
        Cmd::Gen { kind, n, universe, seed, fanout, out } => {
            let text = write_boxes(&gen(kind, n, universe, seed, fanout)?);
            match out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        Cmd::Verify { structure, input, queries, seed, query_file, levels, leaf_threshold, check_dichotomy, corrupt } => {
            let inst = read_boxes(&fs::read_to_string(input)?)?;
            let opts = RunOptions { queries, seed, params: params(leaf_threshold), levels, check_dichotomy, corrupt };
            let rep = match query_file {
                Some(p) => verify_with(structure, &inst, &read_queries(&fs::read_to_string(p)?)?, &opts)?,
                None => verify(structure, &inst, &opts)?,
            };
            if rep.passed() {
                println!("{rep}");
            } else {
                eprintln!("{rep}");
            }
            Ok(rep.passed())
        }
        Cmd::Bench { structure, sizes, queries, seed, universe, fanout, level, out } => {
            let o = BenchOptions { queries, seed, params: ModelParams::default(), universe, fanout, level };
            let rows = bench(structure, &sizes, &o)?;
            match out {
                Some(p) => write_csv(&rows, fs::File::create(p)?)?,
                None => write_csv(&rows, io::stdout().lock())?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
