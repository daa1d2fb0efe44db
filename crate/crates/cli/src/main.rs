use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use earlywarn_core::experiment::{
    generate_synthetic, run_experiment, run_pca, write_gradebook_csv, DatasetSource,
    ExperimentConfig, SchemaSource, SyntheticSpec,
};
use earlywarn_core::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(
    name = "earlywarn",
    version,
    about = "Midpoint student performance prediction experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Replace the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the config's output directory (relative to the working directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and the inputs it references.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every model in a config and write all artifacts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write pca.csv (pc1, pc2, label) for the config's dataset.
    Pca {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Draw a synthetic gradebook CSV and write its schema next to it.
    Generate {
        spec: PathBuf,
        out: PathBuf,
        /// Replace the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &Path, flags: &RunFlags) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &flags.out_dir {
        cfg.output_dir = std::path::absolute(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if let DatasetSource::Csv { path, schema } = &cfg.dataset {
        let csv = cfg.resolve(path);
        if !csv.is_file() {
            return Err(Error::io(&csv, std::io::ErrorKind::NotFound.into()));
        }
        if let SchemaSource::Path(p) = schema {
            earlywarn_core::data::Schema::from_json_file(&cfg.resolve(p))?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config, flags } => {
            let cfg = load_config(&config, &flags)?;
            validate(&cfg)?;
            match flags.format {
                Format::Table => println!(
                    "ok {} (config hash {})",
                    config.display(),
                    cfg.config_hash()
                ),
                Format::Json => println!(
                    "{}",
                    serde_json::json!({"status": "ok", "config_hash": cfg.config_hash()})
                ),
            }
        }
        Command::Run { config, flags } => {
            let cfg = load_config(&config, &flags)?;
            let artifacts = run_experiment(&cfg)?;
            match flags.format {
                Format::Table => {
                    print!("{}", artifacts.table);
                    for r in artifacts
                        .reports
                        .iter()
                        .filter(|r| r.flags.weak_recall_below_half)
                    {
                        println!(
                            "warning: {} recalls fewer than half of the weak students",
                            r.model_name
                        );
                    }
                    println!("artifacts: {}", artifacts.output_dir.display());
                }
                Format::Json => {
                    let text =
                        std::fs::read_to_string(artifacts.output_dir.join("comparison.json"))
                            .map_err(|e| Error::io(&artifacts.output_dir, e))?;
                    print!("{text}");
                }
            }
        }
        Command::Pca { config, flags } => {
            let cfg = load_config(&config, &flags)?;
            let dir = cfg.output_path();
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let out = dir.join("pca.csv");
            run_pca(&cfg, &out)?;
            println!("{}", out.display());
        }
        Command::Generate { spec, out, seed } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let mut s: SyntheticSpec = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("{}: {e}", spec.display())))?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let table = generate_synthetic(&s)?;
            let file = std::fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
            write_gradebook_csv(&table, std::io::BufWriter::new(file))?;
            let schema_path = out.with_extension("schema.json");
            let schema = serde_json::to_string_pretty(&s.schema())?;
            std::fs::write(&schema_path, schema + "\n").map_err(|e| Error::io(&schema_path, e))?;
            println!(
                "{} ({} students), schema {}",
                out.display(),
                table.len(),
                schema_path.display()
            );
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
