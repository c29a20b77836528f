use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dynboot::harness::cli::{self, Artifact};
use dynboot::harness::{Config, Format};
use dynboot::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dynboot",
    version,
    about = "Bootstrap confidence intervals for time averages of chaotic maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Plain-text key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed; overrides experiment.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write all artifacts into this directory instead of printing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Text,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Emit one trajectory as index,x.
    Simulate,
    /// One data set, one interval per method and side.
    Bootstrap,
    /// Simulated mean and long-run standard deviation per cell.
    Sigma,
    /// Compare the Monte Carlo law, the normal, the Edgeworth and the
    /// bootstrap distribution functions.
    Edgeworth,
    /// The full coverage study.
    Coverage,
}

fn run(cli: &Cli) -> Result<Vec<Artifact>> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let format = match cli.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Text => Format::AlignedText,
    };
    let f = match cli.command {
        Command::Simulate => cli::simulate,
        Command::Bootstrap => cli::bootstrap,
        Command::Sigma => cli::sigma,
        Command::Edgeworth => cli::edgeworth,
        Command::Coverage => cli::coverage,
    };
    f(&config, cli.seed, format)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let artifacts = match run(&cli) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &cli.out {
        None => print!("{}", artifacts[0].body),
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("error: cannot create {}: {e}", dir.display());
                return ExitCode::from(2);
            }
            for a in &artifacts {
                let path = dir.join(&a.name);
                if let Err(e) = std::fs::write(&path, &a.body) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
        }
    }
    ExitCode::SUCCESS
}
