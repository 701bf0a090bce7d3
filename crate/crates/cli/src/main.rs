//! Batch front end: every command prints one report and exits nonzero if
//! any check in it failed.

mod report;
mod suites;

use std::io;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use treekoszul::homalg::CoefficientRing;
use treekoszul::iteratedbar::DEFAULT_TENSOR_CAP;
use treekoszul::trees::PrunedTree;

use report::Report;
use suites::Settings;

#[derive(Parser)]
#[command(
    name = "treekoszul",
    version,
    about = "Koszul duality computations for pruned level trees"
)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct RunConfig {
    /// Number of levels.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    n: u16,
    /// Maximal number of leaves.
    #[arg(long, global = true, default_value_t = 3)]
    leaves: usize,
    /// Coefficients: q, z or fp:<p>.
    #[arg(long, global = true, default_value = "q")]
    ring: CoefficientRing,
    /// Degree bound for the iterated bar comparison.
    #[arg(long, global = true, default_value_t = 3)]
    bound: usize,
    /// Enumeration cap.
    #[arg(long, global = true, default_value_t = DEFAULT_TENSOR_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    cap: u64,
    /// Seed for sampled diagrams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of sampled diagram pairs.
    #[arg(long, global = true, default_value_t = 20)]
    samples: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Source tree, e.g. `2:[1,1,2];[1,1]`.
    #[arg(long, requires = "sigma")]
    tau: Option<PrunedTree>,
    /// Target tree.
    #[arg(long, requires = "tau")]
    sigma: Option<PrunedTree>,
}

impl PairArgs {
    fn pair(&self) -> Option<(PrunedTree, PrunedTree)> {
        self.tau.clone().zip(self.sigma.clone())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the trees with at most `--leaves` leaves.
    Trees,
    /// Morphism sets.
    Hom(PairArgs),
    /// Homology of the bar complexes.
    Bar(PairArgs),
    /// Homology of the nerve complexes, checked against the bar complexes.
    Nerve(PairArgs),
    /// ι-cycle certificates and Koszulity.
    KoszulCheck(PairArgs),
    /// Quadratic relations and their classification.
    Relations,
    /// Tor via Koszul and bar complexes, and the contracting homotopy.
    Tor,
    /// Ext via Koszul and bar complexes on sampled diagrams.
    Ext,
    /// Acyclicity of the L complexes and the E¹ recursion.
    Acyclicity(PairArgs),
    /// The cobar minimal model.
    CobarCheck(PairArgs),
    /// Iterated bar complex against the classical oracle.
    IteratedBar {
        /// `dual-numbers`, `exterior`, `trivial` or a path to an algebra JSON file.
        #[arg(long, default_value = "dual-numbers")]
        algebra: String,
    },
    /// Every verification suite.
    All,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trees => "trees",
            Command::Hom(_) => "hom",
            Command::Bar(_) => "bar",
            Command::Nerve(_) => "nerve",
            Command::KoszulCheck(_) => "koszul-check",
            Command::Relations => "relations",
            Command::Tor => "tor",
            Command::Ext => "ext",
            Command::Acyclicity(_) => "acyclicity",
            Command::CobarCheck(_) => "cobar-check",
            Command::IteratedBar { .. } => "iterated-bar",
            Command::All => "all",
        }
    }
}

fn run(command: &Command, s: &Settings) -> Result<Vec<report::Record>, String> {
    let pairs = |p: &PairArgs| suites::pairs(s, p.pair());
    Ok(match command {
        Command::Trees => suites::list_trees(s),
        Command::Hom(p) => suites::hom(&pairs(p)?),
        Command::Bar(p) => suites::bar(s, &pairs(p)?),
        Command::Nerve(p) => suites::nerve(s, &pairs(p)?),
        Command::KoszulCheck(p) => suites::koszul_check(s, &pairs(p)?),
        Command::Relations => suites::relations(s),
        Command::Tor => suites::tor_suite(s),
        Command::Ext => suites::ext_suite(s),
        Command::Acyclicity(p) => suites::acyclicity(s, &pairs(p)?),
        Command::CobarCheck(p) => suites::cobar_check(s, &pairs(p)?),
        Command::IteratedBar { algebra } => suites::iterated_bar(s, algebra),
        Command::All => suites::all(s),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.config;
    if c.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(c.jobs)
            .build_global()
        {
            eprintln!("treekoszul: {e}");
            return ExitCode::from(2);
        }
    }
    let settings = Settings {
        n: c.n as usize,
        leaves: c.leaves,
        ring: c.ring,
        bound: c.bound,
        cap: c.cap as usize,
        seed: c.seed,
        samples: c.samples,
    };
    let records = match run(&cli.command, &settings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("treekoszul: {e}");
            return ExitCode::from(2);
        }
    };
    let config = json!({
        "n": settings.n,
        "leaves": settings.leaves,
        "ring": settings.ring.to_string(),
        "bound": settings.bound,
        "cap": settings.cap,
        "seed": settings.seed,
        "samples": settings.samples,
        "jobs": c.jobs,
    });
    let report = Report::new(cli.command.name(), config, records);
    let written: Result<(), io::Error> = match c.format {
        Format::Json => report
            .write_json(io::stdout().lock())
            .map_err(io::Error::from),
        Format::Csv => report
            .write_csv(io::stdout().lock())
            .map_err(io::Error::from),
    };
    match written {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
        Err(e) => {
            eprintln!("treekoszul: {e}");
            return ExitCode::from(2);
        }
        Ok(()) => {}
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
