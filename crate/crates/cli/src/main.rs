use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use layerpc_cli::{apply_overrides, load_document, prepare_experiment, run_experiment, CliError, ExperimentSpec, PRESETS};

#[derive(Parser)]
#[command(name = "layerpc", version, about = "Discrete power control experiments for clustered ad hoc networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or an experiment file and write CSV.
    Run(Target),
    /// Print the embedded presets.
    ListPresets,
    /// Check an experiment without running it.
    Validate(Target),
}

#[derive(Args)]
struct Target {
    /// Preset id (fig1..fig7) or path to a TOML experiment file.
    experiment: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path; standard output when neither this nor `out` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` replacing a document key; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Target {
    fn spec(&self) -> Result<ExperimentSpec, CliError> {
        let mut doc = load_document(&self.experiment)?;
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(trials) = self.trials {
            overrides.push(format!("trials={trials}"));
        }
        apply_overrides(&mut doc, &overrides)?;
        if let Some(out) = &self.out {
            doc.insert("out".into(), toml::Value::String(out.display().to_string()));
        }
        ExperimentSpec::from_table(doc)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListPresets => {
            for (id, _) in PRESETS {
                let spec = ExperimentSpec::preset(id).expect("embedded preset");
                println!("{id}\t{}", spec.description);
            }
        }
        Command::Validate(target) => {
            let spec = target.spec()?;
            let schemes = prepare_experiment(&spec)?;
            println!(
                "{}: ok ({} {} points, {} schemes, {} trials)",
                spec.name,
                spec.sweep_points,
                spec.sweep.name(),
                schemes.len(),
                spec.trials
            );
        }
        Command::Run(target) => {
            let spec = target.spec()?;
            let table = run_experiment(&spec)?;
            if spec.out.is_none() {
                let stdout = std::io::stdout();
                table.write_csv(stdout.lock()).map_err(|source| CliError::Csv {
                    path: "<stdout>".into(),
                    source,
                })?;
                std::io::stdout().flush().ok();
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
