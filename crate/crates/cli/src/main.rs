use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellsim::scenario::{self, FitModel, Pipeline, RunOptions, ScenarioConfig};
use cellsim::Error;
use clap::{Args, Parser, Subcommand};

/// Coated-cell EIT and slow-light simulator.
#[derive(Parser)]
#[command(name = "cellsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonFlags,
}

#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// Output directory; defaults to the config's output_dir or out/<id>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (and fit) a spectrum.
    Spectrum(RunFlags),
    /// Propagate one pulse through the cell.
    Pulse(RunFlags),
    /// Evaluate the cell over the config's sweep axes.
    Sweep(RunFlags),
    /// Fit a spectrum or pulse CSV.
    Fit {
        /// Data file; overrides [fit].input of --config.
        input: Option<PathBuf>,
        /// lorentzian or dual_lorentzian.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Run a built-in figure preset.
    Preset {
        /// One of fig2a-dr, fig2b-eit, fig3-dual, fig4-delay, fig5-repump, fig6-vg.
        name: String,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Check a scenario file and list every problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rerun the scenario recorded in a manifest and verify its artifacts.
    Replay {
        manifest: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
}

fn read(path: &Path) -> cellsim::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load(path: &Path) -> cellsim::Result<ScenarioConfig> {
    ScenarioConfig::from_toml(&read(path)?).map_err(|e| e.context(&path.display().to_string()))
}

fn execute(mut config: ScenarioConfig, common: &CommonFlags) -> cellsim::Result<()> {
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&config.id));
    config.output_dir = Some(out.display().to_string());
    let set = scenario::run_scenario(&config, &RunOptions { workers: common.workers })?;
    if let Some(fit) = set.get("fit.csv") {
        print!("{fit}");
    }
    for path in set.write(&out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn with_pipeline(flags: &RunFlags, pipeline: Pipeline) -> cellsim::Result<()> {
    let mut config = load(&flags.config)?;
    config.pipeline = pipeline;
    execute(config, &flags.common)
}

fn run(cli: Cli) -> cellsim::Result<()> {
    match cli.command {
        Command::Spectrum(f) => with_pipeline(&f, Pipeline::Spectrum),
        Command::Pulse(f) => with_pipeline(&f, Pipeline::Pulse),
        Command::Sweep(f) => with_pipeline(&f, Pipeline::Sweep),
        Command::Fit {
            input,
            model,
            config,
            common,
        } => {
            let mut c = match &config {
                Some(p) => load(p)?,
                None => ScenarioConfig::from_toml("id = \"fit\"\npipeline = \"fit\"\n")?,
            };
            c.pipeline = Pipeline::Fit;
            let mut section = c.fit.take().unwrap_or(scenario::FitSection {
                input: String::new(),
                model: FitModel::Lorentzian,
            });
            if let Some(i) = input {
                section.input = i.display().to_string();
            }
            if let Some(m) = model {
                section.model = m.parse()?;
            }
            if section.input.is_empty() {
                return Err(Error::Validation(vec!["fit needs an input file".into()]));
            }
            c.fit = Some(section);
            execute(c, &common)
        }
        Command::Preset { name, common } => execute(scenario::preset(&name)?, &common),
        Command::Validate { config } => {
            load(&config)?.validate()?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Replay { manifest, common } => {
            let set = scenario::replay_manifest(&read(&manifest)?, &RunOptions { workers: common.workers })?;
            if let Some(out) = &common.out {
                set.write(out)?;
            }
            println!("{}: {} artifacts reproduced", manifest.display(), set.files.len() - 1);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Validation(list) => {
                    eprintln!("validation failed:");
                    for m in list {
                        eprintln!("  - {m}");
                    }
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
