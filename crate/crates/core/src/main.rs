use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use molpack::cli::{
    cmd_bench, cmd_forward, cmd_pack, cmd_plan, cmd_stats, CliError, Overrides, RunConfig,
};
use molpack::planner::{OpKind, OpSpec};

#[derive(Parser)]
#[command(name = "molpack", version, about = "Graph packing, tile planning and SchNet inference for molecular datasets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pack capacities; repeat the flag or separate with commas.
    #[arg(long = "s-max", global = true, value_delimiter = ',')]
    s_max: Vec<usize>,
    /// Hardware profile for `plan`.
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multi-frame XYZ dataset.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// `size,count` histogram CSV for `pack`.
    #[arg(long, global = true)]
    histogram: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Node, edge and sparsity histograms of a dataset.
    Stats,
    /// Padding sweep over pack capacities and a pack manifest.
    Pack,
    /// Cheapest tile partitioning for a gather or scatter.
    Plan {
        kind: OpKind,
        i: usize,
        m: usize,
        n: usize,
        /// Simulate every small plan and compare with the reference kernel.
        #[arg(long)]
        verify: bool,
    },
    /// Packed SchNet predictions checked against unpacked ones.
    Forward,
    /// LPFHP scaling with dataset size.
    Bench,
}

fn print<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serialises"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let cfg = RunConfig::resolve(
        g.config.as_deref(),
        Overrides {
            dataset: g.dataset,
            histogram: g.histogram,
            seed: g.seed,
            s_max: g.s_max,
            profile: g.profile,
            workers: g.workers,
            out: g.out,
        },
    )?;
    match cli.command {
        Command::Stats => print(&cmd_stats(&cfg)?),
        Command::Pack => print(&cmd_pack(&cfg)?),
        Command::Plan { kind, i, m, n, verify } => {
            let outcome = cmd_plan(&cfg, OpSpec::new(kind, i, m, n), verify)?;
            if let Some(count) = outcome.verified_plans {
                eprintln!("all plans equivalent ({count} checked)");
            }
            print(&outcome);
        }
        Command::Forward => print(&cmd_forward(&cfg)?),
        Command::Bench => print(&cmd_bench(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
