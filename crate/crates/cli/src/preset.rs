//! Typed, validated view of a [`Config`].

use std::path::PathBuf;

use dissipwave::analysis::Quantity;
use dissipwave::solver::{Forcing, Integrator};

use crate::config::Config;
use crate::CliError;

/// Presets shipped with the binary, by name.
pub const BUILTIN_PRESETS: &[(&str, &str)] = &[
    ("lin1d", include_str!("../presets/lin1d.conf")),
    ("lin2d", include_str!("../presets/lin2d.conf")),
    ("semi1d-theta3", include_str!("../presets/semi1d-theta3.conf")),
    ("semi2d-theta2", include_str!("../presets/semi2d-theta2.conf")),
    ("bands1d", include_str!("../presets/bands1d.conf")),
];

pub fn builtin_preset(name: &str) -> Option<Config> {
    BUILTIN_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Config::parse(text).expect("shipped presets parse"))
}

/// Ratio `L / t_final` below which waves reach the periodic boundary.
pub const MIN_WIDTH_PER_TIME: f64 = 1.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `u0 = amplitude * exp(-|x|^2 / width^2)`, `u1 = velocity_ratio * u0`
    Gaussian {
        amplitude: f64,
        width: f64,
        velocity_ratio: f64,
    },
    /// Snapshot files; a missing `u1` means `velocity_ratio * u0`.
    Files {
        u0: PathBuf,
        u1: Option<PathBuf>,
        velocity_ratio: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub n_dims: usize,
    pub points: usize,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub theta: u32,
    pub forcing: Forcing,
    pub integrator: Integrator,
    /// `None` follows the solver default (on for `theta >= 2`).
    pub dealias: Option<bool>,
    pub dt: f64,
    pub t_final: f64,
    pub delta_bar: f64,
    pub sample_interval: f64,
    pub snapshot_times: Vec<f64>,
    pub energy_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportSpec {
    pub quantities: Vec<Quantity>,
    pub fit_window: (f64, f64),
    pub profile_r: Vec<f64>,
    pub profile_window: (f64, f64),
    pub profile_factor: f64,
    pub diffusion_check: bool,
    pub diffusion_max_slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditSpec {
    pub sobolev_s: u32,
    pub step_tol: f64,
    pub balance_tol: f64,
    pub apriori_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandSpec {
    pub eps: f64,
    pub r_outer: f64,
    pub low_window: (f64, f64),
    pub mid_window: (f64, f64),
    pub samples: usize,
    pub slope_tol: f64,
    pub mid_max_slope: f64,
    pub mid_min_r2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSpec {
    pub xi_sq_max: f64,
    pub t_max: f64,
    pub samples: usize,
    pub random: usize,
    pub tol: f64,
    pub ode_tol: f64,
    pub branch_times: Vec<f64>,
}

/// One experiment's full parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub precision: Precision,
    pub seed: u64,
    pub grid: GridSpec,
    pub run: RunSpec,
    pub data: InitialData,
    pub report: ReportSpec,
    pub audit: AuditSpec,
    pub bands: BandSpec,
    pub symbols: SymbolSpec,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("`{key}` must be positive, got {v}")))
    }
}

impl ExperimentPreset {
    pub fn from_config(c: &Config) -> Result<Self, CliError> {
        let name: String = c.get("preset")?;
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(config_err(format!("preset name `{name}` is not a plain directory name")));
        }
        let precision = match c.raw("precision") {
            "f64" => Precision::F64,
            "f32" => Precision::F32,
            other => return Err(config_err(format!("precision `{other}` is not f32 or f64"))),
        };
        let grid = GridSpec {
            n_dims: c.get("n_dims")?,
            points: c.get("points")?,
            half_width: positive("half_width", c.get("half_width")?)?,
        };
        let forcing = match c.raw("forcing") {
            "absorbing" => Forcing::Absorbing,
            "focusing" => Forcing::Focusing,
            "off" => Forcing::Off,
            other => return Err(config_err(format!("forcing `{other}` is not absorbing, focusing or off"))),
        };
        let integrator = match c.raw("integrator") {
            "exponential_duhamel" => Integrator::ExponentialDuhamel,
            "reference_rk4" => Integrator::ReferenceRk4,
            other => {
                return Err(config_err(format!(
                    "integrator `{other}` is not exponential_duhamel or reference_rk4"
                )))
            }
        };
        let dealias = match c.raw("dealias") {
            "auto" => None,
            _ => Some(c.get_bool("dealias")?),
        };
        let t_final = positive("t_final", c.get("t_final")?)?;
        let run = RunSpec {
            theta: c.get("theta")?,
            forcing,
            integrator,
            dealias,
            dt: positive("dt", c.get("dt")?)?,
            t_final,
            delta_bar: c.get("delta_bar")?,
            sample_interval: positive("sample_interval", c.get("sample_interval")?)?,
            snapshot_times: c.get_list("snapshot_times")?,
            energy_every: c.get::<usize>("energy_every")?.max(1),
        };
        let velocity_ratio = c.get("velocity_ratio")?;
        let data = match c.get_opt::<PathBuf>("u0_file")? {
            None => InitialData::Gaussian {
                amplitude: c.get("amplitude")?,
                width: positive("width", c.get("width")?)?,
                velocity_ratio,
            },
            Some(u0) => InitialData::Files {
                u0,
                u1: c.get_opt("u1_file")?,
                velocity_ratio,
            },
        };
        let quantities = c
            .get_list::<String>("quantities")?
            .iter()
            .map(|s| {
                Quantity::parse_label(s)
                    .filter(|q| q.h <= 2)
                    .ok_or_else(|| config_err(format!("quantity `{s}` is not of the form linf_a0_h0 with h <= 2")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let default_window = (t_final / 5.0, t_final);
        let report = ReportSpec {
            quantities,
            fit_window: c.get_window("fit_window")?.unwrap_or(default_window),
            profile_r: c.get_list("profile_r")?,
            profile_window: c.get_window("profile_window")?.unwrap_or(default_window),
            profile_factor: positive("profile_factor", c.get("profile_factor")?)?,
            diffusion_check: c.get_bool("diffusion_check")?,
            diffusion_max_slope: c.get("diffusion_max_slope")?,
        };
        let audit = AuditSpec {
            sobolev_s: c.get_opt("sobolev_s")?.unwrap_or(grid.n_dims as u32 + 1),
            step_tol: c.get("step_tol")?,
            balance_tol: c.get("balance_tol")?,
            apriori_factor: c.get("apriori_factor")?,
        };
        let window = |key: &str| {
            c.get_window(key)?
                .ok_or_else(|| config_err(format!("`{key}` must be set")))
        };
        let bands = BandSpec {
            eps: c.get("cutoff_eps")?,
            r_outer: c.get("cutoff_r")?,
            low_window: window("band_low_window")?,
            mid_window: window("band_mid_window")?,
            samples: c.get("band_samples")?,
            slope_tol: c.get("band_slope_tol")?,
            mid_max_slope: c.get("band_mid_max_slope")?,
            mid_min_r2: c.get("band_mid_min_r2")?,
        };
        let symbols = SymbolSpec {
            xi_sq_max: positive("symbol_xi_sq_max", c.get("symbol_xi_sq_max")?)?,
            t_max: positive("symbol_t_max", c.get("symbol_t_max")?)?,
            samples: c.get("symbol_samples")?,
            random: c.get("symbol_random")?,
            tol: c.get("symbol_tol")?,
            ode_tol: c.get("ode_tol")?,
            branch_times: c.get_list("branch_times")?,
        };
        if bands.samples < 5 || symbols.samples < 2 {
            return Err(config_err("band_samples must be >= 5 and symbol_samples >= 2"));
        }
        Ok(Self {
            name,
            precision,
            seed: c.get("seed")?,
            grid,
            run,
            data,
            report,
            audit,
            bands,
            symbols,
        })
    }

    /// The run must end before waves wrap around the periodic box.
    pub fn check_horizon(&self) -> Result<(), CliError> {
        let limit = self.grid.half_width / MIN_WIDTH_PER_TIME;
        if self.run.t_final > limit {
            return Err(config_err(format!(
                "t_final = {} exceeds half_width / {MIN_WIDTH_PER_TIME} = {limit}",
                self.run.t_final
            )));
        }
        Ok(())
    }

    /// Hypothesis `theta >= 2 + floor(1/n)` behind the semilinear targets.
    pub fn check_decay_hypothesis(&self) -> Result<(), CliError> {
        let need = 2 + 1 / self.grid.n_dims as u32;
        if self.run.forcing != Forcing::Off && self.run.theta < need {
            return Err(config_err(format!(
                "semilinear decay targets need theta >= {need} for n = {}, got {}",
                self.grid.n_dims, self.run.theta
            )));
        }
        Ok(())
    }

    /// Sample times `0, dt_s, 2 dt_s, ..., t_final`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.run.t_final / self.run.sample_interval).round() as usize;
        (0..=n).map(|k| (k as f64 * self.run.sample_interval).min(self.run.t_final)).collect()
    }
}

/// `count` evenly spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_presets_resolve() {
        for (name, _) in BUILTIN_PRESETS {
            let c = builtin_preset(name).unwrap();
            let p = ExperimentPreset::from_config(&c).unwrap();
            assert_eq!(&p.name, name);
            p.check_horizon().unwrap();
            p.check_decay_hypothesis().unwrap();
            assert!(p.grid.points.is_power_of_two());
            assert!(2.0 * p.bands.eps < p.bands.r_outer - 1.0);
        }
    }

    #[test]
    fn horizon_and_hypothesis_checks() {
        let mut c = builtin_preset("semi1d-theta3").unwrap();
        c.set("t_final", "200").unwrap();
        assert!(ExperimentPreset::from_config(&c).unwrap().check_horizon().is_err());
        c.set("t_final", "100").unwrap();
        c.set("theta", "2").unwrap();
        assert!(ExperimentPreset::from_config(&c).unwrap().check_decay_hypothesis().is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        for (k, v) in [("forcing", "sideways"), ("quantities", "linf_a0_h3"), ("dt", "-1"), ("preset", "../x")] {
            let mut c = Config::default();
            c.set(k, v).unwrap();
            assert!(matches!(ExperimentPreset::from_config(&c), Err(CliError::Config(_))), "{k}");
        }
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(5.0, 40.0, 8), vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
    }
}
