use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use greenlab_cli::{run, Command, ExperimentConfig, Inputs};

#[derive(Parser)]
#[command(
    name = "greenlab",
    version,
    about = "Green energies and Wasserstein distances of point sets on tori and spheres"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the report here instead of `output` from the config or stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Points CSV, overriding the config's generator.
    #[arg(long, global = true)]
    points: Option<PathBuf>,

    /// Replace the config's seeds with this one.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; GREENLAB_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the transport plan CSV here (w2 only).
    #[arg(long, global = true)]
    plan: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Pair energy of one configuration.
    Energy,
    /// Gradient descent on the configured kernel.
    Minimize,
    /// Wasserstein distance to the uniform measure and the Ḣ⁻¹ norm.
    W2,
    /// Diaphony, star discrepancy and W₁/W₂ on the circle.
    Diaphony,
    /// W₂ against the torus Green energy bound.
    VerifyT1,
    /// W₂ against the renormalized Coulomb bound on S^d.
    VerifyT2,
    /// Fitted exponents over n or heat time.
    Scaling,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Energy => Command::Energy,
            Cmd::Minimize => Command::Minimize,
            Cmd::W2 => Command::W2,
            Cmd::Diaphony => Command::Diaphony,
            Cmd::VerifyT1 => Command::VerifyT1,
            Cmd::VerifyT2 => Command::VerifyT2,
            Cmd::Scaling => Command::Scaling,
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("GREENLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("GREENLAB_THREADS must be a positive integer, got `{v}`")),
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match thread_count(cli.threads) {
        Ok(Some(n)) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        Ok(_) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }

    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path),
        None => ExperimentConfig::from_toml(""),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    let inputs = Inputs {
        points: cli.points.clone(),
        plan: cli.plan.clone(),
    };

    let (report, failure) = match run(cli.command.into(), &cfg, &inputs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match cli.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => std::fs::write(path, &report),
        None => std::io::stdout().write_all(report.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    match failure {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}
