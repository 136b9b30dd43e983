use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conflict_game_cli::config::RunConfig;
use conflict_game_cli::{commands, Failure};

/// Production-and-appropriation differential game solver.
#[derive(Parser)]
#[command(name = "conflict-game", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium path for one configuration.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write plot.csv and plot.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Solve the cooperative plan on pooled wealth.
    Cooperate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the grid in the config's `sweep` section.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Check the trivial steady state and search for an interior one.
    Steady {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the equilibrium path with the cooperative plan.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrator relative tolerance, overriding `tolerances.rtol`.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        if let Some(tol) = self.tol {
            cfg.tolerances.rtol = tol;
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Simulate { common, plot } => commands::simulate(&common.load()?, plot),
        Command::Cooperate { common } => commands::cooperate(&common.load()?),
        Command::Sweep { common } => commands::sweep(&common.load()?),
        Command::Steady { common } => commands::steady(&common.load()?),
        Command::Compare { common } => commands::compare(&common.load()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            let color = std::io::stderr().is_terminal() && std::env::var_os("NO_COLOR").is_none();
            if color {
                eprintln!("\x1b[1;31merror:\x1b[0m {f}");
            } else {
                eprintln!("error: {f}");
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
