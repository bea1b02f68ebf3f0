//! Experiment runner behind the `greenlab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;

use std::fmt::Write as _;

use serde::Serialize;

pub use commands::Inputs;
pub use config::ExperimentConfig;
pub use error::CliError;

pub const TOOL: &str = "greenlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Energy,
    Minimize,
    W2,
    Diaphony,
    VerifyT1,
    VerifyT2,
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Minimize => "minimize",
            Command::W2 => "w2",
            Command::Diaphony => "diaphony",
            Command::VerifyT1 => "verify-t1",
            Command::VerifyT2 => "verify-t2",
            Command::Scaling => "scaling",
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    result: T,
}

fn envelope<T: Serialize>(command: Command, cfg: &ExperimentConfig, result: T) -> String {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command: command.name(),
        config: cfg,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

/// CSV rendering of a scaling run: `#` header lines, the rows, then the fit.
pub fn scaling_csv(cfg: &ExperimentConfig, report: &commands::ScalingReport) -> String {
    let mut s = String::new();
    let config = serde_json::to_string(cfg).expect("configs serialize");
    let _ = writeln!(s, "# tool={TOOL} version={VERSION} command=scaling");
    let _ = writeln!(s, "# config={config}");
    let _ = writeln!(
        s,
        "n,seed,t,energy,w2,w2_error_bound,min_separation,diaphony"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.seed,
            opt(r.t),
            opt(r.energy),
            opt(r.w2),
            opt(r.w2_error_bound),
            opt(r.min_separation),
            opt(r.diaphony)
        );
    }
    let f = &report.fit;
    let _ = writeln!(s, "# fit log({}) ~ log({})", report.fit_y, report.fit_x);
    let _ = writeln!(
        s,
        "# slope={:.6} stderr={:.6} intercept={:.6} r2={:.6}",
        f.slope, f.slope_stderr, f.intercept, f.r_squared
    );
    let _ = writeln!(s, "# predicted_slope={:.6}", report.predicted_slope);
    let _ = writeln!(
        s,
        "# constant={:.6e} ({})",
        report.constant, report.constant_meaning
    );
    if let Some(c) = report.calibrated_constant {
        let _ = writeln!(s, "# calibrated_constant={c}");
    }
    if let Some(e) = cfg.scaling.expected_slope {
        let _ = writeln!(
            s,
            "# expected_slope={e} tolerance={} pass={}",
            cfg.scaling.slope_tolerance, report.pass
        );
    }
    s
}

/// Runs one command. The rendered report comes back even when the command
/// ends in a verification failure or a stall, so it can be written before
/// exiting with the error's code.
pub fn run(
    command: Command,
    cfg: &ExperimentConfig,
    inputs: &Inputs,
) -> Result<(String, Option<CliError>), CliError> {
    Ok(match command {
        Command::Energy => (envelope(command, cfg, commands::energy(cfg, inputs)?), None),
        Command::Minimize => {
            let (result, stalled) = commands::run_minimize(cfg, inputs)?;
            if let Some(path) = &cfg.save_points {
                let file = std::fs::File::create(path)?;
                result.config.write_csv(std::io::BufWriter::new(file))?;
            }
            let failure = stalled
                .then(|| CliError::Core(greenlab_core::Error::Stall(Box::new(result.clone()))));
            (envelope(command, cfg, result), failure)
        }
        Command::W2 => (envelope(command, cfg, commands::w2(cfg, inputs)?), None),
        Command::Diaphony => {
            let r = commands::diaphony(cfg, inputs)?;
            let failure = (!r.pass).then(|| {
                CliError::Verification(format!(
                    "W2/F_N = {:.4} against C = {} (W1 = {:.4e}, D_N = {:.4e})",
                    r.w2_over_diaphony, r.constant, r.w1, r.star_discrepancy
                ))
            });
            (envelope(command, cfg, r), failure)
        }
        Command::VerifyT1 | Command::VerifyT2 => {
            let bound = if command == Command::VerifyT1 {
                commands::Bound::Green
            } else {
                commands::Bound::Coulomb
            };
            let r = commands::verify(cfg, bound)?;
            let failure = (!r.pass).then(|| {
                CliError::Verification(format!(
                    "max ratio {:.4} exceeds C = {}",
                    r.max_ratio, r.constant
                ))
            });
            (envelope(command, cfg, r), failure)
        }
        Command::Scaling => {
            let r = commands::scaling(cfg)?;
            let failure = (!r.pass).then(|| {
                CliError::Verification(format!(
                    "fitted slope {:.4} (expected {:?} ± {}), constant {:.4} (calibrated {:?})",
                    r.fit.slope,
                    cfg.scaling.expected_slope,
                    cfg.scaling.slope_tolerance,
                    r.constant,
                    r.calibrated_constant
                ))
            });
            (scaling_csv(cfg, &r), failure)
        }
    })
}
