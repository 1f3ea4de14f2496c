//! `islandga`: run island-model GAs from a config file and inspect the
//! results.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data or storage
//! error, 4 failure inside a generation phase.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use islandga_core::persistence::{decode_snapshot, write_individuals};
use islandga_core::{
    driver, filter_solutions, write_report, Error, Executor, FitnessThreshold, OneMax,
    OperatorSuite, PopulationSnapshot, RunDir, Suite64,
};
use islandga_fss::{
    accuracy, build_tree, fss_operator_suite, load_dataset, project, split_train_test,
    AttributeMask, FssError,
};

use config::{load_config, Problem, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config { field: &'static str, reason: String },
    Data(String),
    Phase(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Data(_) => 3,
            CliError::Phase(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Phase(m) => f.write_str(m),
            CliError::Config { field, reason } => write!(f, "invalid configuration `{field}`: {reason}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Config { field, reason } => CliError::Config {
                field,
                reason: reason.clone(),
            },
            Error::Persist(_) => CliError::Data(e.to_string()),
            _ => CliError::Phase(e.to_string()),
        }
    }
}

impl From<islandga_core::PersistError> for CliError {
    fn from(e: islandga_core::PersistError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FssError> for CliError {
    fn from(e: FssError) -> Self {
        match e {
            FssError::Folds { .. } => CliError::Config {
                field: "folds",
                reason: e.to_string(),
            },
            FssError::Split(_) => CliError::Config {
                field: "train_ratio",
                reason: e.to_string(),
            },
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "islandga", version, about = "Island-model genetic algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run_dir` from the config file.
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// Replace existing artifacts in the run directory.
    #[arg(long)]
    force: bool,
    /// Overrides `threads` from the config file.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Create generation 0 in the run directory.
    Init(RunArgs),
    /// Run the GA to completion and print the report.
    Run(RunArgs),
    /// Split the latest generation by a fitness threshold.
    Filter {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        threshold: f64,
    },
    /// Per-generation best and mean fitness and solution counts.
    Stats {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Init(args) => cmd_init(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Filter { run_dir, threshold } => cmd_filter(&run_dir, threshold),
        Command::Stats { run_dir } => cmd_stats(&run_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct Prepared {
    config: RunConfig,
    run: RunDir,
    suite: Suite64,
    /// Training and held-out sets of the fss problem.
    split: Option<(islandga_fss::Dataset, islandga_fss::Dataset)>,
}

fn prepare(args: &RunArgs) -> Result<Prepared, CliError> {
    let mut config = load_config(&args.config)?;
    if args.threads.is_some() {
        config.ga.threads = args.threads;
    }
    let dir = args
        .run_dir
        .clone()
        .or_else(|| config.run_dir.clone())
        .ok_or_else(|| CliError::Usage("no run directory: pass --run-dir or set run_dir".into()))?;
    let criterion = |t: Option<f64>| match t {
        Some(t) => FitnessThreshold::new(t),
        None => FitnessThreshold::disabled(),
    };
    let (suite, split) = match &config.problem {
        Problem::OneMax => {
            config.ga.validate()?;
            let suite = OperatorSuite::standard(&config.ga, OneMax, Some(Box::new(criterion(config.target))));
            (suite, None)
        }
        Problem::Fss {
            dataset,
            folds,
            train_ratio,
        } => {
            let data = load_dataset(dataset)?;
            let (train, test) = split_train_test(&data, *train_ratio)?;
            if !config.genome_length_set {
                config.ga.genome_length = train.num_attributes();
            } else if config.ga.genome_length != train.num_attributes() {
                return Err(CliError::Config {
                    field: "genome_length",
                    reason: format!("the dataset has {} attributes", train.num_attributes()),
                });
            }
            config.ga.validate()?;
            let suite = fss_operator_suite(Arc::new(train.clone()), *folds, config.target, &config.ga)?;
            (suite, Some((train, test)))
        }
    };
    Ok(Prepared {
        config,
        run: RunDir::new(dir),
        suite,
        split,
    })
}

fn cmd_init(args: &RunArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let path = p.run.generation(0);
    if path.exists() {
        if !args.force {
            return Err(CliError::Usage(format!(
                "{} already exists; pass --force to replace it",
                path.display()
            )));
        }
        p.run.clear_outputs()?;
        std::fs::remove_file(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    let executor = Executor::new(p.config.ga.threads)?;
    driver::initialise(&executor, &p.config.ga, &p.suite, &p.run)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    if p.run.report().exists() && !args.force {
        return Err(CliError::Usage(format!(
            "{} holds a finished run; pass --force to replace it",
            p.run.root().display()
        )));
    }
    let mut report = driver::evolve(&p.config.ga, &p.suite, &p.run)?;
    let problem = match p.config.problem {
        Problem::OneMax => "onemax",
        Problem::Fss { .. } => "fss",
    };
    report.extra.push(("problem".into(), problem.into()));
    if let (Some((train, test)), Some(best)) = (&p.split, &report.best) {
        let mask = AttributeMask::from(&best.genome);
        let tree = build_tree(&project(train, &mask)?)?;
        let acc = accuracy(&tree, &project(test, &mask)?)?;
        report.extra.push(("selected_attributes".into(), mask.count().to_string()));
        report.extra.push(("test_accuracy".into(), acc.to_string()));
    }
    write_report(&p.run.report(), &report)?;
    print!("{}", report.render());
    Ok(())
}

fn latest_snapshot(run: &RunDir) -> Result<(u64, PopulationSnapshot, u64), CliError> {
    let latest = *run
        .generations()?
        .last()
        .ok_or_else(|| CliError::Data(format!("no snapshots in {}", run.generations_dir().display())))?;
    let (seed, snap) = read_with_seed(&run.generation(latest))?;
    Ok((latest, snap, seed))
}

fn read_with_seed(path: &Path) -> Result<(u64, PopulationSnapshot), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (header, snap) = decode_snapshot(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((header.master_seed, snap))
}

fn cmd_filter(run_dir: &Path, threshold: f64) -> Result<(), CliError> {
    let run = RunDir::new(run_dir);
    let (generation, snap, seed) = latest_snapshot(&run)?;
    let (yes, no) = filter_solutions(&snap, &FitnessThreshold::new(threshold))?;
    let m = snap.genome_length().expect("snapshots are non-empty");
    write_individuals(&run.solutions(), &yes, m, generation, seed)?;
    write_individuals(&run.non_solutions(), &no, m, generation, seed)?;
    println!("generation\t{generation}");
    println!("solutions\t{}", yes.len());
    println!("non_solutions\t{}", no.len());
    Ok(())
}

fn cmd_stats(run_dir: &Path) -> Result<(), CliError> {
    let run = RunDir::new(run_dir);
    let generations = run.generations()?;
    if generations.is_empty() {
        return Err(CliError::Data(format!("no snapshots in {}", run.generations_dir().display())));
    }
    println!("generation\tindividuals\tevaluated\tbest\tmean\tsolutions");
    for g in generations {
        let (_, snap) = read_with_seed(&run.generation(g))?;
        let fits: Vec<f64> = snap.individuals().filter_map(|i| i.fitness).collect();
        let dash = || "-".to_string();
        let best = snap.best().and_then(|b| b.fitness).map_or_else(dash, |f| f.to_string());
        let mean = if fits.is_empty() {
            dash()
        } else {
            (fits.iter().sum::<f64>() / fits.len() as f64).to_string()
        };
        let solutions = snap.individuals().filter(|i| i.is_solution).count();
        println!("{g}\t{}\t{}\t{best}\t{mean}\t{solutions}", snap.len(), fits.len());
    }
    Ok(())
}
