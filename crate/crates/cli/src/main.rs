//! `msqg` command-line driver.
//!
//! Exit status: 0 on success, 2 when the run's acceptance checks fail, 1 on any
//! configuration or runtime error (with a JSON diagnostic on stderr).

mod config;
mod emit;
mod error;
mod run;

use clap::{Parser, Subcommand};
use config::{load_config, to_toml, RunConfig};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "msqg",
    version,
    about = "Point-vortex, Galerkin and Fock-space experiments for stochastic mSQG"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-key override, e.g. `--set vortex.n_vortices=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Seed root for every ensemble in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replica count for every ensemble in the run.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides `MSQG_OUTPUT_DIR` and `report_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Simulate point-vortex trajectories (`[vortex]`).
    VortexSim,
    /// Integrate the Galerkin-truncated SPDE from its invariant law (`[galerkin]`).
    GalerkinSim,
    /// Compare scaled vortex ensembles with the stationary SPDE (`[scaling]`).
    ScalingStudy,
    /// Adjointness and dissipativity of the Fock-space generator (`[chaos]`).
    ChaosAudit,
    /// Tabulate the regularized Biot-Savart kernel (`[kernel]`).
    KernelTable,
    /// Exact identities of the transport noise (`[identity]`).
    IdentityCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VortexSim => "vortex-sim",
            Command::GalerkinSim => "galerkin-sim",
            Command::ScalingStudy => "scaling-study",
            Command::ChaosAudit => "chaos-audit",
            Command::KernelTable => "kernel-table",
            Command::IdentityCheck => "identity-check",
        }
    }

    fn runner(self) -> run::Runner {
        match self {
            Command::VortexSim => run::vortex_sim,
            Command::GalerkinSim => run::galerkin_sim,
            Command::ScalingStudy => run::scaling_study,
            Command::ChaosAudit => run::chaos_audit,
            Command::KernelTable => run::kernel_table,
            Command::IdentityCheck => run::identity_check,
        }
    }
}

/// Parameter checks that would otherwise only surface mid-run.
fn validate(cmd: Command, cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.replicas == 0 {
        return Err(CliError::config(
            Some("replicas".into()),
            "must be positive",
        ));
    }
    match cmd {
        Command::VortexSim => {
            cfg.vortex.vortex_config().validate()?;
            cfg.vortex.theta()?;
        }
        Command::GalerkinSim => cfg.galerkin.validate()?,
        Command::ScalingStudy => cfg.scaling.validate()?,
        Command::ChaosAudit => {
            msqg::kernel::check_eps(cfg.chaos.epsilon)?;
            if cfg.chaos.n_max == 0 || cfg.chaos.m_modes == 0 || cfg.chaos.galerkin_m == 0 {
                return Err(CliError::config(
                    Some("chaos".into()),
                    "n_max, m_modes and galerkin_m must be >= 1",
                ));
            }
        }
        Command::KernelTable => msqg::kernel::check_eps(cfg.kernel.epsilon)?,
        Command::IdentityCheck => {
            for &g in &cfg.identity.gammas {
                msqg::theta::theta_power(g, cfg.identity.max_cutoff.max(1))?;
            }
        }
    }
    Ok(())
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("MSQG_OUTPUT_DIR").map(PathBuf::from))
        .or_else(|| cfg.report_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("msqg-out"))
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = load_config(cli.config.as_deref(), &cli.set)?;
    if let Some(s) = cli.seed {
        cfg.seed_root = s;
        cfg.scaling.seed_root = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
        cfg.scaling.replicas = r;
    }
    if cli.print_config {
        print!("{}", to_toml(&cfg));
        return Ok(true);
    }
    validate(cli.command, &cfg)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::config(Some("threads".into()), e.to_string()))?;
    }
    let out = output_dir(cli, &cfg);
    let (pass, manifest) = run::dispatch(cli.command.name(), cli.command.runner(), &cfg, out)?;
    println!(
        "{} {}: {}",
        cli.command.name(),
        if pass { "ok" } else { "FAILED" },
        manifest.display()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::config(None, e.to_string()).to_json());
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
