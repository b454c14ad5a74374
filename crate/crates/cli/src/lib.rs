//! Batch experiments for the `dissipwave` binary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod preset;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use dissipwave::analysis::TimeSeries;
use dissipwave::Real;
use thiserror::Error;

use crate::config::Config;
use crate::experiments::Verdict;
use crate::preset::{builtin_preset, ExperimentPreset, Precision};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical instability at t = {time}: sup|u| = {sup_norm:e} exceeds {limit:e}")]
    Instability { time: f64, sup_norm: f64, limit: f64 },

    #[error(transparent)]
    Numeric(dissipwave::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<dissipwave::Error> for CliError {
    fn from(e: dissipwave::Error) -> Self {
        use dissipwave::Error as E;
        match e {
            E::Instability { time, sup_norm, limit } => CliError::Instability { time, sup_norm, limit },
            E::InvalidGrid(_)
            | E::InvalidCutoff(_)
            | E::UnderResolved(_)
            | E::InvalidArgument(_)
            | E::TooFewPoints { .. }
            | E::Snapshot(_) => CliError::Config(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Instability { .. } => exit::INSTABILITY,
            CliError::Numeric(_) | CliError::Io(_) => exit::RUNTIME,
        }
    }
}

/// Process exit statuses.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERDICT_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INSTABILITY: i32 = 3;
    pub const RUNTIME: i32 = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    VerifySymbols,
    GreenBands,
    Simulate,
    DecayReport,
    EnergyAudit,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::VerifySymbols => "verify-symbols",
            Subcommand::GreenBands => "green-bands",
            Subcommand::Simulate => "simulate",
            Subcommand::DecayReport => "decay-report",
            Subcommand::EnergyAudit => "energy-audit",
        }
    }
}

/// Reads `path`, falling back to a built-in preset of that name.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<Config, CliError> {
    let mut config = if path.exists() {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)?
    } else {
        path.to_str().and_then(builtin_preset).ok_or_else(|| {
            CliError::Config(format!(
                "{} does not exist and is not a built-in preset",
                path.display()
            ))
        })?
    };
    for o in overrides {
        config.apply_override(o)?;
    }
    Ok(config)
}

/// Result of one subcommand: where it wrote and what it judged.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            exit::PASS
        } else {
            exit::VERDICT_FAILED
        }
    }
}

/// Runs `sub` and writes its artifacts under `out_root`.
pub fn run(sub: Subcommand, config: &Config, out_root: &Path) -> Result<Outcome, CliError> {
    let preset = ExperimentPreset::from_config(config)?;
    let dir = output::create_run_dir(out_root, &preset.name)?;
    let start = Instant::now();
    let result = match preset.precision {
        Precision::F64 => execute::<f64>(sub, &preset, &dir),
        Precision::F32 => execute::<f32>(sub, &preset, &dir),
    };
    let status = match &result {
        Ok(v) if v.iter().all(|v| v.pass) => "pass".to_string(),
        Ok(_) => "fail".to_string(),
        Err(e) => format!("error: {e}"),
    };
    output::write_manifest(&dir, sub.name(), config, start.elapsed(), &status)?;
    let verdicts = result?;
    output::write_verdicts(&dir, &verdicts)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "{} {}: {}", sub.name(), preset.name, dir.display());
    for v in &verdicts {
        let _ = writeln!(summary, "  {}", output::verdict_line(v));
    }
    fs::write(dir.join("summary.txt"), &summary)?;
    Ok(Outcome { dir, verdicts, summary })
}

fn execute<T: Real>(sub: Subcommand, p: &ExperimentPreset, dir: &Path) -> Result<Vec<Verdict>, CliError> {
    let snapshots = dir.join("snapshots");
    match sub {
        Subcommand::VerifySymbols => {
            let out = experiments::verify_symbols::<T>(p)?;
            let mut w = BufWriter::new(fs::File::create(dir.join("symbols.csv"))?);
            writeln!(w, "xi_sq,t,green_hat,ode_value,green_hat_dt,ode_derivative,deviation")?;
            for s in &out.samples {
                writeln!(
                    w,
                    "{},{},{:e},{:e},{:e},{:e},{:e}",
                    s.xi_sq,
                    s.t,
                    s.g,
                    s.ode_g,
                    s.gt,
                    s.ode_gt,
                    s.deviation()
                )?;
            }
            w.flush()?;
            let mut b = String::from("t,deviation_below,deviation_above\n");
            for (t, lo, hi) in &out.branch {
                let _ = writeln!(b, "{t},{lo:e},{hi:e}");
            }
            fs::write(dir.join("branch.csv"), b)?;
            Ok(out.verdicts)
        }
        Subcommand::GreenBands => {
            let out = experiments::green_bands::<T>(p, Some(&snapshots))?;
            output::write_series(&dir.join("bands.csv"), &out.series)?;
            output::write_reports(dir, &out.reports)?;
            Ok(out.verdicts)
        }
        Subcommand::Simulate => {
            let sim = experiments::simulate::<T>(p, false, Some(&snapshots))?;
            output::write_series(&dir.join("series.csv"), &sim.series)?;
            Ok(Vec::new())
        }
        Subcommand::DecayReport => {
            let out = experiments::decay::<T>(p, false, Some(&snapshots))?;
            output::write_series(&dir.join("series.csv"), &out.simulation.series)?;
            output::write_reports(dir, &out.reports)?;
            Ok(out.verdicts)
        }
        Subcommand::EnergyAudit => {
            let out = experiments::energy_audit::<T>(p, Some(&snapshots))?;
            if let Some(ledger) = &out.simulation.ledger {
                output::write_series(&dir.join("energy.csv"), &ledger_series(ledger, p))?;
            }
            Ok(out.verdicts)
        }
    }
}

/// Every `energy_every`-th ledger row (and the last) as a time series.
fn ledger_series<T: Real>(ledger: &dissipwave::analysis::EnergyLedger<T>, p: &ExperimentPreset) -> TimeSeries<T> {
    let mut series = TimeSeries::new();
    let e0 = ledger.initial_energy();
    let s = p.audit.sobolev_s;
    let apriori = ledger
        .sobolev_norms
        .iter()
        .find(|(si, _)| *si == s)
        .map(|(_, v)| v.as_slice())
        .unwrap_or(&[]);
    let last = ledger.times.len().saturating_sub(1);
    for k in (0..ledger.times.len()).filter(|&k| k % p.run.energy_every == 0 || k == last) {
        let t = ledger.times[k];
        series.push(t, "energy", ledger.energy[k]);
        series.push(t, "dissipation_integral", ledger.dissipation_integral[k]);
        series.push(t, "balance_residual", ledger.energy[k] - e0 + ledger.dissipation_integral[k]);
        series.push(t, "sup_norm", ledger.sup_norm[k]);
        if let Some(&a) = apriori.get(k) {
            series.push(t, format!("sobolev_s{s}"), a);
        }
    }
    series
}
