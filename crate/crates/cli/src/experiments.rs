//! The computations behind each subcommand, returning structured results.
//! Writing files is left to [`crate::output`].

use std::path::Path;
use std::sync::Arc;

use dissipwave::analysis::{
    decay_report, e0_norm, fit_decay_rate, fit_exponential_rate, lp_norm, weighted_profile, Check,
    DecayReport, EnergyLedger, LineFit, Regime, TimeSeries,
};
use dissipwave::grid::{derivative, make_grid, Field, Grid, MultiIndex};
use dissipwave::io::{read_snapshot_on, write_snapshot};
use dissipwave::oracle::{heat_reference, mode_ode};
use dissipwave::solver::{solve, Forcing, Observer, RunRecord, SolverConfig, SolverState};
use dissipwave::symbols::{green_band, green_hat_pair, Band, CutoffSpec};
use dissipwave::Real;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::preset::{linspace, ExperimentPreset, InitialData};
use crate::CliError;

/// A named pass/fail check with its measured value and limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value >= limit,
        }
    }

    fn from_report(r: &DecayReport) -> Self {
        Self {
            name: format!("slope_{}", r.quantity),
            value: r.slope,
            limit: r.target,
            pass: r.pass,
        }
    }
}

pub fn build_grid<T: Real>(p: &ExperimentPreset) -> Result<Arc<Grid<T>>, CliError> {
    Ok(make_grid(p.grid.n_dims, p.grid.points, T::lit(p.grid.half_width))?)
}

pub fn initial_data<T: Real>(
    p: &ExperimentPreset,
    grid: &Arc<Grid<T>>,
) -> Result<(Field<T>, Field<T>), CliError> {
    let (u0, u1, ratio) = match &p.data {
        InitialData::Gaussian {
            amplitude,
            width,
            velocity_ratio,
        } => {
            let (a, w2) = (T::lit(*amplitude), T::lit(width * width));
            let u0 = Field::from_fn(grid.clone(), |x| {
                a * (-x.iter().map(|&v| v * v).sum::<T>() / w2).exp()
            })?;
            (u0, None, *velocity_ratio)
        }
        InitialData::Files {
            u0,
            u1,
            velocity_ratio,
        } => {
            let load = |path: &Path| -> Result<Field<T>, CliError> {
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
                Ok(read_snapshot_on(file, grid)?.field)
            };
            let u1 = u1.as_deref().map(load).transpose()?;
            (load(u0)?, u1, *velocity_ratio)
        }
    };
    let u1 = match u1 {
        Some(f) => f,
        None => u0.map(|v| v * T::lit(ratio))?,
    };
    Ok((u0, u1))
}

pub fn solver_config<T: Real>(p: &ExperimentPreset, snapshot_times: Vec<f64>) -> SolverConfig<T> {
    let mut c = SolverConfig::new(p.run.theta, T::lit(p.run.dt), T::lit(p.run.t_final));
    c.integrator = p.run.integrator;
    if let Some(d) = p.run.dealias {
        c.dealias = d;
    }
    c.delta_bar = T::lit(p.run.delta_bar);
    c.forcing = p.run.forcing;
    c.snapshot_times = snapshot_times.into_iter().map(T::lit).collect();
    c
}

pub fn regime(p: &ExperimentPreset) -> Regime {
    match p.run.forcing {
        Forcing::Off => Regime::Linear,
        _ => Regime::Semilinear,
    }
}

/// Label of the diffusion-phenomenon gap `||u - exp(t Lap)(u0 + u1)||_inf`.
pub const DIFFUSION_LABEL: &str = "heat_gap_linf";

fn near(times: &[f64], t: f64, tol: f64) -> bool {
    times.iter().any(|&s| (s - t).abs() <= tol)
}

/// Samples quantities, weighted profiles and the heat gap, and dumps `u`
/// at snapshot times.
struct RunObserver<'a, T: Real> {
    preset: &'a ExperimentPreset,
    samples: Vec<f64>,
    series: TimeSeries<T>,
    heat_data: Option<Field<T>>,
    dump_dir: Option<&'a Path>,
    ledger: Option<EnergyLedger<T>>,
}

impl<T: Real> Observer<T> for RunObserver<'_, T> {
    fn on_step(&mut self, state: &SolverState<T>) -> dissipwave::Result<()> {
        match &mut self.ledger {
            Some(ledger) => ledger.record(state),
            None => Ok(()),
        }
    }

    fn on_snapshot(&mut self, state: &SolverState<T>) -> dissipwave::Result<()> {
        let t = state.time;
        let tol = 0.5 * self.preset.run.dt;
        let u = state.u()?;
        if near(&self.samples, t.as_f64(), tol) {
            for q in &self.preset.report.quantities {
                let value = if q.h == 0 && q.alpha == 0 {
                    lp_norm(&u, q.norm)
                } else {
                    q.measure(state)?
                };
                self.series.push(t, q.label(), value);
            }
            for &r in &self.preset.report.profile_r {
                let value = weighted_profile(&u, t, T::lit(r))?;
                self.series.push(t, profile_label(r), value);
            }
            if let Some(data) = &self.heat_data {
                if t > T::zero() {
                    let heat = heat_reference(data, t)?;
                    let gap = u.combine(T::one(), &heat, -T::one())?;
                    self.series.push(t, DIFFUSION_LABEL, gap.max_abs());
                }
            }
        }
        if let Some(dir) = self.dump_dir {
            if near(&self.preset.run.snapshot_times, t.as_f64(), tol) {
                let path = dir.join(snapshot_name(t.as_f64()));
                write_snapshot(std::io::BufWriter::new(std::fs::File::create(path)?), &u, t)?;
            }
        }
        Ok(())
    }
}

pub fn profile_label(r: f64) -> String {
    format!("weighted_r{r}")
}

pub fn snapshot_name(t: f64) -> String {
    format!("u_t{t:010.4}.dwf")
}

/// Everything measured along one solver run.
pub struct Simulation<T: Real> {
    pub series: TimeSeries<T>,
    pub ledger: Option<EnergyLedger<T>>,
    /// `||u0||_{H^{s+1}} + ||u1||_{H^s}`
    pub e0: T,
    pub record: RunRecord<T>,
}

/// Runs the solver for `p`, optionally with a per-step energy ledger and
/// writing snapshots into `dump_dir`.
pub fn simulate<T: Real>(
    p: &ExperimentPreset,
    with_ledger: bool,
    dump_dir: Option<&Path>,
) -> Result<Simulation<T>, CliError> {
    p.check_horizon()?;
    let grid = build_grid::<T>(p)?;
    let (u0, u1) = initial_data(p, &grid)?;
    let samples = p.sample_times();
    let mut times = samples.clone();
    times.extend(&p.run.snapshot_times);
    let config = solver_config::<T>(p, times);
    config.validate()?;
    let s = p.audit.sobolev_s;
    let e0 = e0_norm(&u0, &u1, s)?;
    let heat_data = match (p.report.diffusion_check, p.run.forcing) {
        (true, Forcing::Off) => Some(u0.combine(T::one(), &u1, T::one())?),
        (true, _) => {
            return Err(CliError::Config(
                "diffusion_check compares against the linear flow; set forcing = off".into(),
            ))
        }
        _ => None,
    };
    let mut obs = RunObserver {
        preset: p,
        samples,
        series: TimeSeries::new(),
        heat_data,
        dump_dir,
        ledger: with_ledger.then(|| EnergyLedger::new(&grid, &[s], e0)),
    };
    let record = solve(&u0, &u1, &config, &mut [&mut obs])?;
    Ok(Simulation {
        series: obs.series,
        ledger: obs.ledger,
        e0,
        record,
    })
}

/// Decay fits plus the weighted-profile and sup-norm checks.
pub struct DecayOutcome<T: Real> {
    pub simulation: Simulation<T>,
    pub reports: Vec<DecayReport>,
    pub verdicts: Vec<Verdict>,
}

pub fn decay<T: Real>(
    p: &ExperimentPreset,
    with_ledger: bool,
    dump_dir: Option<&Path>,
) -> Result<DecayOutcome<T>, CliError> {
    p.check_decay_hypothesis()?;
    let sim = simulate::<T>(p, with_ledger, dump_dir)?;
    let window = (T::lit(p.report.fit_window.0), T::lit(p.report.fit_window.1));
    let mut reports = decay_report(&sim.series, &p.report.quantities, regime(p), p.grid.n_dims, window)?;
    if p.report.diffusion_check {
        let data = to_f64(&sim.series.get(DIFFUSION_LABEL));
        let fit = fit_decay_rate(&data, p.report.fit_window)?;
        reports.push(DecayReport::judge(
            DIFFUSION_LABEL.into(),
            fit,
            p.report.fit_window,
            p.report.diffusion_max_slope,
            0.0,
            Check::UpperBound,
        ));
    }
    let mut verdicts: Vec<Verdict> = reports.iter().map(Verdict::from_report).collect();
    for &r in &p.report.profile_r {
        verdicts.push(profile_verdict(&sim.series, r, p.report.profile_window, p.report.profile_factor)?);
    }
    Ok(DecayOutcome {
        simulation: sim,
        reports,
        verdicts,
    })
}

fn to_f64<T: Real>(data: &[(T, T)]) -> Vec<(f64, f64)> {
    data.iter().map(|&(t, v)| (t.as_f64(), v.as_f64())).collect()
}

/// `max_{t in window} profile(t) / profile(t_lo)`, which must stay below
/// `factor`.
pub fn profile_verdict<T: Real>(
    series: &TimeSeries<T>,
    r: f64,
    window: (f64, f64),
    factor: f64,
) -> Result<Verdict, CliError> {
    let label = profile_label(r);
    let data: Vec<(f64, f64)> = to_f64(&series.get(&label))
        .into_iter()
        .filter(|&(t, _)| t >= window.0 - 1e-9 && t <= window.1 + 1e-9)
        .collect();
    let first = data
        .first()
        .ok_or_else(|| CliError::Config(format!("no `{label}` samples in the profile window")))?
        .1;
    let max = data.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let ratio = if first > 0.0 { max / first } else { f64::INFINITY };
    Ok(Verdict::at_most(format!("{label}_growth"), ratio, factor))
}

/// Energy ledger checks.
pub struct AuditOutcome<T: Real> {
    pub simulation: Simulation<T>,
    pub verdicts: Vec<Verdict>,
}

pub fn energy_audit<T: Real>(p: &ExperimentPreset, dump_dir: Option<&Path>) -> Result<AuditOutcome<T>, CliError> {
    let sim = simulate::<T>(p, true, dump_dir)?;
    let verdicts = audit_verdicts(p, &sim);
    Ok(AuditOutcome { simulation: sim, verdicts })
}

pub fn audit_verdicts<T: Real>(p: &ExperimentPreset, sim: &Simulation<T>) -> Vec<Verdict> {
    let Some(ledger) = &sim.ledger else {
        return Vec::new();
    };
    let e_init = ledger.initial_energy().as_f64();
    let s = p.audit.sobolev_s;
    let e0 = sim.e0.as_f64();
    vec![
        Verdict::at_most(
            "energy_step_increase",
            ledger.max_step_increase().as_f64(),
            p.audit.step_tol * e_init,
        ),
        Verdict::at_most(
            "energy_balance_residual",
            ledger.max_balance_residual().as_f64(),
            p.audit.balance_tol * e_init,
        ),
        Verdict::at_most(
            format!("apriori_sup_s{s}"),
            ledger.apriori_sup(s).map(|v| v.as_f64()).unwrap_or(f64::INFINITY),
            p.audit.apriori_factor * e0 * e0,
        ),
        Verdict::at_most("sup_norm", ledger.max_sup_norm().as_f64(), p.run.delta_bar),
    ]
}

/// One row of the symbol sweep.
#[derive(Clone, Debug)]
pub struct SymbolSample {
    pub xi_sq: f64,
    pub t: f64,
    pub g: f64,
    pub ode_g: f64,
    pub gt: f64,
    pub ode_gt: f64,
}

impl SymbolSample {
    pub fn deviation(&self) -> f64 {
        (self.g - self.ode_g).abs().max((self.gt - self.ode_gt).abs())
    }
}

pub struct SymbolOutcome {
    pub samples: Vec<SymbolSample>,
    /// `(t, |G(1/4 - 1e-10, t) - t e^{-t/2}|, |G(1/4 + 1e-10, t) - t e^{-t/2}|)`
    pub branch: Vec<(f64, f64, f64)>,
    pub verdicts: Vec<Verdict>,
}

/// Half-width of the probe around the branch point `|xi|^2 = 1/4`.
pub const BRANCH_OFFSET: f64 = 1e-10;

/// Compares the closed-form symbol against the mode ODE (always in
/// double precision) on a regular sweep plus seeded random points.
pub fn verify_symbols<T: Real>(p: &ExperimentPreset) -> Result<SymbolOutcome, CliError> {
    let s = &p.symbols;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for xi_sq in linspace(0.0, s.xi_sq_max, s.samples) {
        for t in linspace(0.0, s.t_max, s.samples) {
            points.push((xi_sq, t));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for _ in 0..s.random {
        points.push((rng.random_range(0.0..s.xi_sq_max), rng.random_range(0.0..s.t_max)));
    }
    let samples = points
        .into_iter()
        .map(|(xi_sq, t)| {
            let (g, gt) = green_hat_pair(T::lit(xi_sq), T::lit(t));
            let ode = mode_ode(xi_sq, t, s.ode_tol)?;
            Ok(SymbolSample {
                xi_sq,
                t,
                g: g.as_f64(),
                ode_g: ode.value,
                gt: gt.as_f64(),
                ode_gt: ode.derivative,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let branch: Vec<(f64, f64, f64)> = s
        .branch_times
        .iter()
        .map(|&t| {
            let exact = t * (-t / 2.0).exp();
            let below = green_hat_pair(T::lit(0.25 - BRANCH_OFFSET), T::lit(t)).0.as_f64();
            let above = green_hat_pair(T::lit(0.25 + BRANCH_OFFSET), T::lit(t)).0.as_f64();
            (t, (below - exact).abs(), (above - exact).abs())
        })
        .collect();
    let max_dev = samples.iter().map(SymbolSample::deviation).fold(0.0, f64::max);
    let max_branch = branch.iter().map(|&(_, a, b)| a.max(b)).fold(0.0, f64::max);
    let verdicts = vec![
        Verdict::at_most("symbol_vs_ode", max_dev, s.tol),
        Verdict::at_most("branch_continuity", max_branch, s.tol),
    ];
    Ok(SymbolOutcome {
        samples,
        branch,
        verdicts,
    })
}

pub const G1_LABEL: &str = "g1_linf";
pub const G1_DX_LABEL: &str = "g1_dx_linf";
pub const G2_LABEL: &str = "g2_linf";

pub struct BandOutcome {
    pub series: TimeSeries<f64>,
    pub reports: Vec<DecayReport>,
    /// Fit of `log sup |G2|` against `t`.
    pub g2_fit: LineFit<f64>,
    pub verdicts: Vec<Verdict>,
}

/// Sup norms of the low and middle band kernels and their decay fits.
pub fn green_bands<T: Real>(p: &ExperimentPreset, dump_dir: Option<&Path>) -> Result<BandOutcome, CliError> {
    let b = &p.bands;
    let grid = build_grid::<T>(p)?;
    let spec = CutoffSpec::new(T::lit(b.eps), T::lit(b.r_outer))?;
    let mut series = TimeSeries::new();
    let n = p.grid.n_dims as f64;
    for t in linspace(b.low_window.0, b.low_window.1, b.samples) {
        let g1 = green_band(Band::Low, &grid, T::lit(t), &spec)?;
        let dx = derivative(&g1, MultiIndex::along(0, 1))?;
        series.push(t, G1_LABEL, g1.max_abs().as_f64());
        series.push(t, G1_DX_LABEL, dx.max_abs().as_f64());
        if let Some(dir) = dump_dir {
            if near(&p.run.snapshot_times, t, 1e-9) {
                let path = dir.join(format!("g1_t{t:010.4}.dwf"));
                write_snapshot(std::io::BufWriter::new(std::fs::File::create(path)?), &g1, T::lit(t))?;
            }
        }
    }
    for t in linspace(b.mid_window.0, b.mid_window.1, b.samples) {
        let g2 = green_band(Band::Middle, &grid, T::lit(t), &spec)?;
        series.push(t, G2_LABEL, g2.max_abs().as_f64());
    }
    let fit_low = |label: &str, target: f64| -> Result<DecayReport, CliError> {
        let fit = fit_decay_rate(&series.get(label), b.low_window)?;
        Ok(DecayReport::judge(label.into(), fit, b.low_window, target, b.slope_tol, Check::TwoSided))
    };
    let reports = vec![
        fit_low(G1_LABEL, -n / 2.0)?,
        fit_low(G1_DX_LABEL, -n / 2.0 - 0.5)?,
    ];
    let g2_fit = fit_exponential_rate(&series.get(G2_LABEL), b.mid_window)?;
    let mut verdicts: Vec<Verdict> = reports.iter().map(Verdict::from_report).collect();
    verdicts.push(Verdict::at_most("g2_exponential_rate", g2_fit.slope, b.mid_max_slope));
    verdicts.push(Verdict::at_least("g2_fit_r_squared", g2_fit.r_squared, b.mid_min_r2));
    Ok(BandOutcome {
        series,
        reports,
        g2_fit,
        verdicts,
    })
}
