use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use occauth::{export_dataset, run_scenario, AttackSpec, ScenarioConfig};
use occauth_core::adversary::{AttackKind, CampaignResult};

#[derive(Parser)]
#[command(
    name = "occauth",
    version,
    about = "Radio plus headlight-flash vehicle authentication simulator"
)]
struct Cli {
    /// Override the scenario's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's trials and write metrics.csv, summary.csv and transcripts/.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a labelled clip dataset (PGM frames plus manifests) under <out>/clips.
    ExportDataset {
        config: PathBuf,
        /// Defaults to the scenario's export.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an attack campaign and print its success rate.
    Attack {
        config: PathBuf,
        /// remote, replay, guess or obstruct.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        trials: Option<u64>,
        /// Lock a vehicle out after this many failed optical responses.
        #[arg(long)]
        lockout: Option<u32>,
        /// Also write the full report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn run_and_write(
    cfg: &ScenarioConfig,
    out: Option<&Path>,
) -> anyhow::Result<occauth::MetricsReport> {
    let report = run_scenario(cfg)?;
    let failures = report.audit();
    if let Some(dir) = out {
        report
            .write(dir)
            .with_context(|| format!("writing report to {}", dir.display()))?;
    }
    if let Some((name, err)) = failures.first() {
        bail!(
            "{} transcript(s) failed audit; first: {name}: {err}",
            failures.len()
        );
    }
    Ok(report)
}

fn main_inner(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config, cli.seed)?;
            let report = run_and_write(&cfg, Some(&out))?;
            print!("{}", report.summary.to_csv());
        }
        Command::ExportDataset { config, out } => {
            let cfg = load(&config, cli.seed)?;
            let dir = out
                .or_else(|| cfg.export.as_ref().and_then(|e| e.dir.clone()))
                .context("no --out given and the scenario sets no export.dir")?;
            let clips = export_dataset(&cfg, &dir)?;
            println!(
                "wrote {} clips to {}",
                clips.len(),
                dir.join("clips").display()
            );
        }
        Command::Attack {
            config,
            profile,
            trials,
            lockout,
            out,
        } => {
            let mut cfg = load(&config, cli.seed)?;
            let kind = AttackKind::from_name(&profile).with_context(|| {
                format!("unknown profile {profile:?} (expected remote, replay, guess or obstruct)")
            })?;
            let bystanders = cfg.attack.as_ref().map_or(2, |a| a.bystanders);
            let lockout = lockout.or(cfg.attack.as_ref().and_then(|a| a.lockout));
            cfg.attack = Some(AttackSpec {
                profile: kind,
                lockout,
                bystanders,
            });
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let report = run_and_write(&cfg, out.as_deref())?;
            let result = report
                .campaign
                .context("attack run produced no campaign result")?;
            println!("{}\n{}", CampaignResult::CSV_HEADER, result.csv_row());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
