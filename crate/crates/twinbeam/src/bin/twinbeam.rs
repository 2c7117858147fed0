//! Command-line front end: parse a JSON config (plus key overrides), run one
//! experiment, write CSV/JSON outputs.
//!
//! Exit status: 0 on success, 2 on configuration/validation errors, 3 on
//! numerical failures (including an oracle-verify disagreement).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twinbeam::config::{Experiment, RunConfig};
use twinbeam::error::{Error, Result};
use twinbeam::runner;

#[derive(Parser)]
#[command(name = "twinbeam", version, about = "Multimode twin-beam amplifier simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gain and intensity-difference squeezing vs probe angle
    AngleSweep(RunArgs),
    /// Mandel Q of the clipped/attenuated probe beam
    MandelProbe(RunArgs),
    /// Mandel Q of the intensity difference under edge clipping
    MandelDiff(RunArgs),
    /// Coherence-area measurement with scanned slits
    SlitScan(RunArgs),
    /// Parallel squeezing of two seeded spots
    TwoSpot(RunArgs),
    /// Twin Laguerre-Gauss beams and their interferograms
    Lg(LgArgs),
    /// Gaussian-state vs Fock-oracle comparison battery
    OracleVerify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; paper defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config key, e.g. --set target_gain=9 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct LgArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Azimuthal index of the seed mode (overrides lg_ell from the config)
    #[arg(long)]
    ell: Option<i32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let (experiment, args, ell) = match cli.cmd {
        Cmd::AngleSweep(a) => (Experiment::AngleSweep, a, None),
        Cmd::MandelProbe(a) => (Experiment::MandelProbe, a, None),
        Cmd::MandelDiff(a) => (Experiment::MandelDiff, a, None),
        Cmd::SlitScan(a) => (Experiment::SlitScan, a, None),
        Cmd::TwoSpot(a) => (Experiment::TwoSpot, a, None),
        Cmd::Lg(a) => (Experiment::Lg, a.run, a.ell),
        Cmd::OracleVerify(a) => (Experiment::OracleVerify, a, None),
    };

    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "<file>".into(),
            message: format!("{}: {e}", path.display()),
        })?,
        None => "{}".into(),
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config {
        key: "<file>".into(),
        message: e.to_string(),
    })?;

    for kv in &args.set {
        let (key, raw) = kv.split_once('=').ok_or_else(|| Error::Config {
            key: kv.clone(),
            message: "override must look like KEY=VALUE".into(),
        })?;
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        value
            .as_object_mut()
            .ok_or_else(|| Error::Config {
                key: "<file>".into(),
                message: "config root must be a JSON object".into(),
            })?
            .insert(key.to_string(), parsed);
    }
    if let Some(ell) = ell {
        value
            .as_object_mut()
            .expect("checked above")
            .insert("lg_ell".into(), serde_json::Value::from(ell));
    }

    let run_cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config {
        key: "<file>".into(),
        message: e.to_string(),
    })?;
    if let Some(name) = &run_cfg.experiment {
        // A config may name its experiment; it must agree with the subcommand.
        if Experiment::from_name(name)? != experiment {
            return Err(Error::Config {
                key: "experiment".into(),
                message: format!(
                    "config names `{name}` but the `{}` subcommand was invoked",
                    experiment.name()
                ),
            });
        }
    }
    let resolved = run_cfg.resolve(experiment)?;
    let out_dir = resolved
        .out_dir
        .clone()
        .map(PathBuf::from)
        .unwrap_or_else(|| args.out.clone());
    runner::dispatch(&resolved, &out_dir)
}
