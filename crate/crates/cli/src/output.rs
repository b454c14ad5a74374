//! Run directories, manifests and summary files.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use dissipwave::analysis::{DecayReport, TimeSeries};
use dissipwave::io::{write_report_csv, write_series_csv};
use dissipwave::Real;

use crate::config::Config;
use crate::experiments::Verdict;
use crate::CliError;

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "DISSIPWAVE_OUT";
pub const DEFAULT_OUT: &str = "dissipwave-runs";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Creates `<root>/<preset>/<unix seconds>[-k]/snapshots/` and returns the
/// run directory.
pub fn create_run_dir(root: &Path, preset: &str) -> Result<PathBuf, CliError> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_secs();
    let base = root.join(preset);
    fs::create_dir_all(&base)?;
    for k in 0.. {
        let name = if k == 0 { secs.to_string() } else { format!("{secs}-{k}") };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => {
                fs::create_dir(dir.join("snapshots"))?;
                return Ok(dir);
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("unbounded search for a free run directory")
}

/// Resolved config followed by `#` comment lines, so the manifest parses
/// back as a config.
pub fn write_manifest(
    dir: &Path,
    subcommand: &str,
    config: &Config,
    wall_time: Duration,
    status: &str,
) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "# dissipwave {subcommand}");
    let _ = writeln!(text, "# version = {}", env!("CARGO_PKG_VERSION"));
    text.push_str(&config.to_text());
    let _ = writeln!(text, "# wall_time_s = {:.3}", wall_time.as_secs_f64());
    let _ = writeln!(text, "# status = {status}");
    fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

pub fn write_series<T: Real>(path: &Path, series: &TimeSeries<T>) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_series_csv(&mut w, series)?;
    w.flush()?;
    Ok(())
}

pub fn write_reports(dir: &Path, reports: &[DecayReport]) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(dir.join("decay.csv"))?);
    write_report_csv(&mut w, reports)?;
    w.flush()?;
    let text: String = reports.iter().map(|r| format!("{r}\n")).collect();
    fs::write(dir.join("decay.txt"), text)?;
    Ok(())
}

pub fn write_verdicts(dir: &Path, verdicts: &[Verdict]) -> Result<(), CliError> {
    let mut text = String::from("check,value,limit,verdict\n");
    for v in verdicts {
        let _ = writeln!(text, "{},{:e},{:e},{}", v.name, v.value, v.limit, verdict_word(v.pass));
    }
    fs::write(dir.join("checks.csv"), text)?;
    Ok(())
}

pub fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

pub fn verdict_line(v: &Verdict) -> String {
    format!(
        "{:<28} {:>14.6e}  limit {:>12.4e}  {}",
        v.name,
        v.value,
        v.limit,
        verdict_word(v.pass).to_uppercase()
    )
}
