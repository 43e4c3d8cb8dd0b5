use clap::{Parser, Subcommand};
use photostyle_cli::commands;
use photostyle_cli::config::{self, Settings};
use photostyle_cli::CliError;
use std::path::PathBuf;

/// Exit codes: 0 success, 1 operational failure, 2 usage or configuration
/// error (clap's own parse failures also exit 2).
#[derive(Parser)]
#[command(
    name = "photostyle",
    about = "Photo demographics pipeline: ingest, detect, classify, analyze, plot",
    version
)]
struct Cli {
    /// Config file (TOML); also honored via PHOTOSTYLE_CONFIG
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run seed for anything randomized (overrides the config)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker cap for stages that fan out (overrides the config)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Artifact directory (overrides the config)
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Validate inputs and print the report without writing anything
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the legislator and photo tables from the manifest and corpus
    Ingest(commands::ingest::Args),
    /// Run the face cascade over every photo and table the boxes
    Detect(commands::detect::Args),
    /// Train a fresh base model on labeled crops
    Train(commands::train::Args),
    /// Fine-tune the base model and hold out a validation split
    Finetune(commands::finetune::Args),
    /// Write a review sheet, or fold a completed one back into the model
    Bootstrap(commands::bootstrap::Args),
    /// Label every corpus face with the tuned model
    Classify(commands::classify::Args),
    /// Roll classified faces up to per-member demographics
    Aggregate(commands::aggregate::Args),
    /// Join census shares and fit the per-party regressions
    Compare(commands::compare::Args),
    /// Summarize the survey experiment per treatment arm
    Experiment(commands::experiment::Args),
    /// Render an SVG figure from a pipeline table
    Plot(commands::plotcmd::Args),
}

fn init_pool(settings: &Settings) {
    if let Some(jobs) = settings.jobs {
        // a second init in the same process is harmless; keep the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (mut settings, source) = config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        settings.output_dir = dir.clone();
    }
    if let Some(jobs) = cli.jobs {
        settings.jobs = Some(jobs);
    }
    let src = source.as_deref();
    let dry = cli.dry_run;

    match &cli.command {
        Command::Ingest(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::ingest::run(&settings, dry, src)
        }
        Command::Detect(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::detect::run(&settings, dry, src)
        }
        Command::Train(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::train::run(&settings, dry, src)
        }
        Command::Finetune(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::finetune::run(&settings, dry, src)
        }
        Command::Bootstrap(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::bootstrap::run(&settings, dry, src, args)
        }
        Command::Classify(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::classify::run(&settings, dry, src)
        }
        Command::Aggregate(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::aggregate::run(&settings, dry, src)
        }
        Command::Compare(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::compare::run(&settings, dry, src)
        }
        Command::Experiment(args) => {
            args.apply(&mut settings);
            settings.validate()?;
            init_pool(&settings);
            commands::experiment::run(&settings, dry, src)
        }
        Command::Plot(args) => {
            settings.validate()?;
            init_pool(&settings);
            commands::plotcmd::run(&settings, dry, src, args)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
