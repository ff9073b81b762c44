use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use greenstream::cli::{self, Overrides, Run, RunConfig};

#[derive(Parser)]
#[command(
    name = "greenstream",
    version,
    about = "Plan carbon-capped video quality reductions and 2-tier subscription terms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one period at one cap; writes schedule.csv and plan.json
    Plan(Common),
    /// Plan once per cap; writes sweep.csv
    Sweep(Common),
    /// Count remote-preferred days for each CDN size pair; writes cdn_days.csv
    CdnDays(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Local region carbon-intensity CSV
    #[arg(long)]
    local_ci: Option<PathBuf>,
    /// Remote region carbon-intensity CSV (enables dual-CDN planning)
    #[arg(long)]
    remote_ci: Option<PathBuf>,
    /// Carbon-intensity cap in gCO2e/kWh (repeatable)
    #[arg(long = "cap")]
    caps: Vec<f64>,
    /// single-fhd | single:<tier> | mixed:<n>:<deep>:<rest>
    #[arg(long)]
    strategy: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn into_run(self) -> anyhow::Result<Run> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let over = Overrides {
            local_ci: self.local_ci,
            remote_ci: self.remote_ci,
            caps: self.caps,
            strategy: self.strategy,
            out: self.out,
        };
        Run::resolve(cfg, over)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(c) => c.into_run().and_then(|r| cli::cmd_plan(&r)),
        Command::Sweep(c) => c.into_run().and_then(|r| cli::cmd_sweep(&r)),
        Command::CdnDays(c) => c.into_run().and_then(|r| cli::cmd_cdn_days(&r)),
    };
    match result {
        Ok(outcome) => {
            // a closed stdout (e.g. piped into `head`) must not change the exit code
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", outcome.summary);
            for f in &outcome.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(cli::EXIT_ERROR as u8)
        }
    }
}
