use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppacdc::commands::{self, Options};
use ppacdc::{edgelist, presets, CliError, Experiment};

#[derive(Parser)]
#[command(version, about = "Quantized average consensus over directed graphs")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "PPACDC_OUT")]
    out: Option<PathBuf>,
    /// Base seed; replaces the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dotted-key override into the JSON config, e.g. `protocol.bits=8`.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or each of its named variants).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the sweep grid of an experiment and write a summary CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Spectral check of the augmented system for a graph and gain.
    Analyze(AnalyzeArgs),
    /// Generate a random strongly connected digraph as an edge list.
    GenGraph {
        #[arg(long, short)]
        nodes: usize,
        /// Probability of each edge beyond the Hamiltonian cycle.
        #[arg(long, short, default_value_t = 0.0)]
        prob: f64,
        path: PathBuf,
    },
    /// Run a built-in experiment.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::names().collect::<Vec<_>>()))]
        name: String,
    },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).multiple(false)))]
struct AnalyzeArgs {
    /// Take the graph (and default gain) from an experiment file.
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
    /// Edge-list file.
    #[arg(long, group = "source")]
    graph: Option<PathBuf>,
    /// Take the graph (and default gain) from a built-in experiment.
    #[arg(long, group = "source")]
    preset: Option<String>,
    /// Surplus gain; defaults to the experiment's value.
    #[arg(long)]
    gamma: Option<f64>,
}

fn analyze(args: &AnalyzeArgs, opts: &Options) -> ppacdc::Result<u8> {
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let exp = match (&args.config, &args.preset) {
        (Some(path), _) => Some(Experiment::load(path)?),
        (_, Some(name)) => Some(commands::load_preset(name)?),
        _ => None,
    };
    let exp = exp.map(|e| e.with_overrides(&opts.overrides)).transpose()?;
    let graph = match (&exp, &args.graph) {
        (Some(e), _) => e.graph()?,
        (None, Some(path)) => edgelist::load(path)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let gamma = args
        .gamma
        .or(exp.as_ref().map(|e| e.file.protocol.gamma))
        .ok_or_else(|| CliError::Config("--gamma is required with --graph".into()))?;
    commands::cmd_analyze(&graph, gamma, &mut out, &mut err)
}

fn dispatch(cli: Cli) -> ppacdc::Result<u8> {
    let opts = Options {
        out: cli.out,
        seed: cli.seed,
        overrides: cli.overrides,
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    match cli.command {
        Command::Run { config } => commands::cmd_run(&Experiment::load(&config)?, &opts, &mut out, &mut err),
        Command::Sweep { config } => commands::cmd_sweep(&Experiment::load(&config)?, &opts, &mut out, &mut err),
        Command::Analyze(args) => {
            drop((out, err));
            analyze(&args, &opts)
        }
        Command::GenGraph { nodes, prob, path } => {
            commands::cmd_gen_graph(nodes, prob, opts.seed.unwrap_or(0), &path, &mut out)
        }
        Command::Preset { name } => commands::cmd_preset(&name, &opts, &mut out, &mut err),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1 so that 2 always means "did not converge".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
