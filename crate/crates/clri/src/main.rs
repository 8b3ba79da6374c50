use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clri::config::{validate, ExperimentConfig};
use clri::repro::PRESET_NAMES;
use clri::runner::{resolve_out_dir, run, RunError};

#[derive(Parser)]
#[command(
    name = "clri",
    about = "Error dynamics of learning agents in multi-agent systems: predictions, simulations, and parameter estimation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a named preset.
    Run(RunArgs),
    /// Check a config file and list every violation without running it.
    Validate {
        /// Path to a TOML experiment config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample-complexity and learning-rate bounds, straight from flags.
    Pac(PacArgs),
    /// List the available presets.
    Presets,
}

#[derive(Args)]
struct PacArgs {
    /// Hypothesis-space size |H|.
    #[arg(long, conflicts_with_all = ["actions", "worlds"])]
    hypotheses: Option<u64>,
    /// Derive |H| = actions^worlds instead of giving it directly.
    #[arg(long, requires = "worlds")]
    actions: Option<usize>,
    #[arg(long, requires = "actions")]
    worlds: Option<usize>,
    /// Target error bound.
    #[arg(long)]
    epsilon: f64,
    /// Confidence parameter.
    #[arg(long)]
    gamma: f64,
    /// Starting error for the learning-rate bound (default 1).
    #[arg(long)]
    initial_error: Option<f64>,
    /// Sample budget for the learning-rate bound (default: the derived m).
    #[arg(long)]
    samples: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a TOML experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset to run.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (default: config, then $CLRI_OUT_DIR, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo run count.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("reading {}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text)
        .map_err(|e| RunError::Validation(format!("parsing {}: {e}", path.display())))
}

fn run_command(args: &RunArgs) -> Result<(), RunError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => clri::repro::preset_by_name(name)?,
        _ => {
            return Err(RunError::Validation(
                "give exactly one of --config or --preset".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = Some(runs);
    }
    if let Some(steps) = args.steps {
        config.steps = Some(steps);
    }
    let out_dir = resolve_out_dir(args.out.as_deref(), &config);
    let outcome = run(&config, &out_dir)?;
    if !args.quiet {
        print!("{}", outcome.summary);
        for file in &outcome.files {
            println!("wrote {}", file.display());
        }
    }
    Ok(())
}

fn pac_command(args: &PacArgs) -> Result<(), RunError> {
    let config = ExperimentConfig {
        mode: clri::config::Mode::Pac,
        seed: 0,
        steps: None,
        runs: None,
        tolerance: None,
        max_iterations: None,
        resolution: None,
        out_dir: None,
        preset: None,
        trace_in: None,
        trace_out: None,
        system: None,
        game: None,
        pac: Some(clri::config::PacConfig {
            hypothesis_count: args.hypotheses,
            action_count: args.actions,
            world_count: args.worlds,
            epsilon: args.epsilon,
            gamma: args.gamma,
            initial_error: args.initial_error,
            samples: args.samples,
        }),
        shoham: None,
    };
    let out_dir = resolve_out_dir(args.out.as_deref(), &config);
    let outcome = run(&config, &out_dir)?;
    if !args.quiet {
        print!("{}", outcome.summary);
        for file in &outcome.files {
            println!("wrote {}", file.display());
        }
    }
    Ok(())
}

fn validate_command(path: &PathBuf) -> Result<(), RunError> {
    let config = load_config(path)?;
    let diagnostics = validate(&config);
    if diagnostics.is_empty() {
        println!("ok: no violations found");
        Ok(())
    } else {
        for d in &diagnostics {
            println!("{d}");
        }
        Err(RunError::Validation(format!(
            "{} violation(s) found",
            diagnostics.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Validate { config } => validate_command(config),
        Command::Pac(args) => pac_command(args),
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
