use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contra_cli::{cmd_design, cmd_list, cmd_run, resolve_preset, CliError, PresetSource, RunOverrides, SEED_ENV};

#[derive(Parser)]
#[command(name = "contra", version, about = "Baseline vs contraction-scaled learner benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the builtin presets.
    List,
    /// Run a preset (or a config file) and write curve.csv and summary.txt.
    Run {
        /// Builtin preset name.
        #[arg(required_unless_present = "config", conflicts_with = "config")]
        preset: Option<String>,
        /// `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        /// Defaults to $CONTRA_SEED, then the preset's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// both, baseline or modified.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        embed_dim: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
        /// Also write a gnuplot script.
        #[arg(long)]
        plot: bool,
    },
    /// Evaluate the step-size design equations.
    Design {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
        #[arg(long, default_value_t = 1.0)]
        k2: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List => print!("{}", cmd_list()),
        Command::Run {
            preset,
            config,
            runs,
            seed,
            variant,
            out,
            mu,
            sigma,
            lambda,
            embed_dim,
            record_every,
            plot,
        } => {
            let source = match (preset, config) {
                (_, Some(path)) => PresetSource::ConfigFile(path),
                (Some(name), None) => PresetSource::Builtin(name),
                (None, None) => return Err(CliError::Config("no preset or config given".into())),
            };
            let overrides = RunOverrides {
                runs,
                seed,
                variant,
                mu,
                sigma,
                lambda,
                embed_dim,
                record_every,
            };
            let env_seed = std::env::var(SEED_ENV).ok();
            let preset = resolve_preset(&source, &overrides, env_seed.as_deref())?;
            let output = cmd_run(&preset, &out, plot)?;
            for (k, v) in output.report.summary.entries() {
                println!("{k} = {v}");
            }
            println!("wrote {}", out.display());
        }
        Command::Design { eps, n_max, mu, k1, k2 } => print!("{}", cmd_design(eps, n_max, mu, k1, k2)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
