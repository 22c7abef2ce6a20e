use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ratcov::pipeline;
use ratcov::{CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "ratcov",
    version,
    about = "Measure how well LLM rationales cover a reference model's top features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML). Defaults to `<run-dir>/config.toml` for
    /// every stage except `train` and `all`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory shared by all stages.
    #[arg(long, global = true, default_value = "run")]
    run_dir: PathBuf,
    /// Never contact the LLM endpoint; cache misses become errors.
    #[arg(long, global = true)]
    offline: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Split the dataset and train the TF-IDF logistic regression model.
    Train,
    /// Collect LLM labels and rationales (replay file or endpoint).
    Annotate,
    /// Extract features, compute coverage and run the bootstrap tests.
    Evaluate,
    /// Write tables and SVG figures.
    Report,
    /// Run every stage in order.
    All,
}

fn config_for(cli: &Cli, needs_explicit: bool) -> Result<RunConfig, CliError> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None if needs_explicit => Err(CliError::Config(
            "--config is required for this command".into(),
        )),
        None => RunConfig::load(&cli.run_dir.join("config.toml")),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let dir: &Path = &cli.run_dir;
    let do_train = |cfg: &RunConfig| -> Result<(), CliError> {
        let r = pipeline::train(cfg, dir)?;
        println!(
            "train: {} train / {} eval instances, {} features, eval accuracy {:.3}{}",
            r.n_train,
            r.n_eval,
            r.vocabulary_size,
            r.eval_accuracy,
            if r.converged { "" } else { " (not converged)" }
        );
        Ok(())
    };
    let do_annotate = |cfg: &RunConfig| -> Result<(), CliError> {
        let r = pipeline::annotate(cfg, dir, cli.offline)?;
        println!(
            "annotate: {} records from {}, {} parse failures, {} skipped",
            r.n_records,
            r.source,
            r.parse_failures.len(),
            r.skipped.len()
        );
        Ok(())
    };
    let do_evaluate = |cfg: &RunConfig| -> Result<(), CliError> {
        let s = pipeline::evaluate(cfg, dir)?;
        println!(
            "evaluate: {} of {} instances scored, LLM accuracy {}",
            s.n_scored,
            s.n_eval,
            s.llm_accuracy
                .map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"))
        );
        print!("{}", ratcov_core::report::coverage_table_text(&s.groups));
        for b in &s.bootstrap {
            println!(
                "  {:<16} {:<5} {:+.3} [{:+.3}, {:+.3}]{}",
                b.statistic.to_string(),
                b.matcher.to_string(),
                b.estimate,
                b.ci_low,
                b.ci_high,
                if b.significant { " *" } else { "" }
            );
        }
        Ok(())
    };
    let do_report = || -> Result<(), CliError> {
        let files = pipeline::report(dir)?;
        println!(
            "report: wrote {} files under {}",
            files.len(),
            dir.display()
        );
        Ok(())
    };

    match cli.command {
        Command::Train => do_train(&config_for(cli, true)?),
        Command::Annotate => do_annotate(&config_for(cli, false)?),
        Command::Evaluate => do_evaluate(&config_for(cli, false)?),
        Command::Report => do_report(),
        Command::All => {
            let cfg = config_for(cli, true)?;
            do_train(&cfg)?;
            do_annotate(&cfg)?;
            do_evaluate(&cfg)?;
            do_report()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
