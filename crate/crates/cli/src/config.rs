//! Flat `key = value` configuration with `#` comments and comma lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::CliError;

/// Every recognised key with its default value.
pub const KEYS: &[(&str, &str)] = &[
    ("preset", "custom"),
    ("precision", "f64"),
    ("seed", "0"),
    // grid
    ("n_dims", "1"),
    ("points", "1024"),
    ("half_width", "50"),
    // equation and time stepping
    ("theta", "3"),
    ("forcing", "absorbing"),
    ("integrator", "exponential_duhamel"),
    ("dealias", "auto"),
    ("dt", "0.01"),
    ("t_final", "10"),
    ("delta_bar", "0.5"),
    // initial data: u0 = amplitude * exp(-|x|^2 / width^2), u1 = velocity_ratio * u0
    ("amplitude", "0.05"),
    ("width", "2"),
    ("velocity_ratio", "0.1"),
    ("u0_file", ""),
    ("u1_file", ""),
    // sampling and output
    ("sample_interval", "1"),
    ("snapshot_times", ""),
    ("energy_every", "100"),
    // decay report
    ("quantities", "linf_a0_h0"),
    ("fit_window", ""),
    ("profile_r", ""),
    ("profile_window", ""),
    ("profile_factor", "3"),
    ("diffusion_check", "false"),
    ("diffusion_max_slope", "-0.6"),
    // energy audit
    ("sobolev_s", ""),
    ("step_tol", "1e-8"),
    ("balance_tol", "1e-6"),
    ("apriori_factor", "10"),
    // frequency bands
    ("cutoff_eps", "0.125"),
    ("cutoff_r", "2"),
    ("band_low_window", "10,80"),
    ("band_mid_window", "5,40"),
    ("band_samples", "15"),
    ("band_slope_tol", "0.1"),
    ("band_mid_max_slope", "-0.05"),
    ("band_mid_min_r2", "0.99"),
    // symbol verification
    ("symbol_xi_sq_max", "4"),
    ("symbol_t_max", "10"),
    ("symbol_samples", "32"),
    ("symbol_random", "64"),
    ("symbol_tol", "1e-8"),
    ("ode_tol", "1e-11"),
    ("branch_times", "0.1,1,10,50"),
];

/// Resolved configuration: defaults, then file values, then overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

fn is_known(key: &str) -> bool {
    KEYS.iter().any(|&(k, _)| k == key)
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}

impl Config {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        config.merge_text(text)?;
        Ok(config)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = split_assignment(line)
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{raw}`", no + 1)))?;
            if let Some(prev) = seen.insert(key.to_string(), no + 1) {
                return Err(CliError::Config(format!(
                    "line {}: key `{key}` already set on line {prev}",
                    no + 1
                )));
            }
            self.set(key, value)
                .map_err(|e| CliError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = split_assignment(assignment)
            .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not `key=value`")))?;
        self.set(key, value)
            .map_err(|e| CliError::Config(format!("override `{assignment}`: {e}")))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !is_known(key) {
            return Err(format!("unknown key `{key}`"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key `{key}` missing from the key table"))
    }

    pub fn get<V: FromStr>(&self, key: &str) -> Result<V, CliError> {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|_| CliError::Config(format!("`{key}` = `{raw}` is not a valid value")))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(CliError::Config(format!("`{key}` = `{other}` is not a boolean"))),
        }
    }

    /// Comma list; an empty value is an empty list.
    pub fn get_list<V: FromStr>(&self, key: &str) -> Result<Vec<V>, CliError> {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("`{key}`: `{}` is not a valid item", item.trim())))
            })
            .collect()
    }

    /// Optional pair `lo,hi`; empty means `None`.
    pub fn get_window(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        match self.get_list::<f64>(key)?.as_slice() {
            [] => Ok(None),
            &[lo, hi] if lo < hi => Ok(Some((lo, hi))),
            _ => Err(CliError::Config(format!("`{key}` must be `lo,hi` with lo < hi"))),
        }
    }

    /// Empty string means unset.
    pub fn get_opt<V: FromStr>(&self, key: &str) -> Result<Option<V>, CliError> {
        if self.raw(key).trim().is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    /// Config text that parses back to this configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(key, _) in KEYS {
            let _ = writeln!(out, "{key} = {}", self.values[key]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_lists_and_defaults() {
        let c = Config::parse("# header\npoints = 64   # inline\nsnapshot_times = 1, 2.5 ,4\n").unwrap();
        assert_eq!(c.get::<usize>("points").unwrap(), 64);
        assert_eq!(c.get_list::<f64>("snapshot_times").unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(c.get::<f64>("delta_bar").unwrap(), 0.5);
        assert!(c.get_list::<f64>("profile_r").unwrap().is_empty());
    }

    #[test]
    fn unknown_and_malformed_lines_are_errors() {
        assert!(matches!(Config::parse("pionts = 64"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("points 64"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("points = 64\npoints = 32"), Err(CliError::Config(_))));
        let c = Config::parse("points = many").unwrap();
        assert!(c.get::<usize>("points").is_err());
    }

    #[test]
    fn overrides_win_and_text_round_trips() {
        let mut c = Config::parse("dt = 0.1").unwrap();
        c.apply_override("dt=0.05").unwrap();
        assert_eq!(c.raw("dt"), "0.05");
        assert!(c.apply_override("nope=1").is_err());
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }
}
