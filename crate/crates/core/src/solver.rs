//! Time integration of `u_tt - Lap u + u_t = f(u)` on a periodic grid.
//!
//! The state is kept in Fourier space as `(u_hat, v_hat)` with `v = u_t`.
//! The linear part is propagated exactly with the per-mode Green symbols;
//! the nonlinearity is evaluated pseudo-spectrally.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::grid::{forward_transform, inverse_transform, Field, Grid, SpectralField};
use crate::scalar::Real;
use crate::symbols::{green_hat_pair, SymbolTable};

/// Sign convention of the power nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Forcing {
    /// `f(u) = -|u|^theta u`
    Absorbing,
    /// `f(u) = +|u|^theta u`
    Focusing,
    /// `f = 0`
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Integrator {
    /// Classical explicit RK4 on the first-order spectral system.
    ReferenceRk4,
    /// Exact linear propagator plus a predictor-corrector Duhamel term.
    ExponentialDuhamel,
}

#[derive(Clone, Debug)]
pub struct SolverConfig<T: Real> {
    pub theta: u32,
    pub dt: T,
    pub t_final: T,
    pub integrator: Integrator,
    pub dealias: bool,
    pub snapshot_times: Vec<T>,
    /// Expected bound on `sup |u|`; runs abort at ten times this value.
    pub delta_bar: T,
    pub forcing: Forcing,
}

/// Abort threshold relative to `delta_bar`.
pub const INSTABILITY_FACTOR: f64 = 10.0;

impl<T: Real> SolverConfig<T> {
    /// Absorbing nonlinearity, exponential integrator, `delta_bar = 0.5`,
    /// dealiasing on for `theta >= 2`, no snapshots.
    pub fn new(theta: u32, dt: T, t_final: T) -> Self {
        Self {
            theta,
            dt,
            t_final,
            integrator: Integrator::ExponentialDuhamel,
            dealias: theta >= 2,
            snapshot_times: Vec::new(),
            delta_bar: T::half(),
            forcing: Forcing::Absorbing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.theta == 0 {
            return bad("theta must be a positive integer".into());
        }
        if !(self.dt > T::zero()) || !(self.dt < self.t_final) || !self.t_final.is_finite() {
            return bad(format!(
                "need 0 < dt < t_final, got dt = {}, t_final = {}",
                self.dt, self.t_final
            ));
        }
        if !(self.delta_bar > T::zero() && self.delta_bar < T::one()) {
            return bad(format!("delta_bar = {} must lie in (0, 1)", self.delta_bar));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(t >= T::zero() && t <= self.t_final))
        {
            return bad(format!("snapshot time {t} outside [0, t_final]"));
        }
        self.step_count().map(|_| ())
    }

    /// Number of steps; `t_final` must be an integer multiple of `dt`.
    pub fn step_count(&self) -> Result<usize> {
        let n = (self.t_final / self.dt).round();
        if ((n * self.dt - self.t_final) / self.t_final).abs() > T::lit(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n.to_usize().unwrap_or(0))
    }

    /// Hypothesis `theta >= 2 + floor(1/n)` of the pointwise decay estimate.
    pub fn satisfies_pointwise_hypothesis(&self, n_dims: usize) -> bool {
        self.theta as usize >= 2 + 1 / n_dims
    }

    pub fn instability_limit(&self) -> T {
        T::lit(INSTABILITY_FACTOR) * self.delta_bar
    }
}

/// `(u_hat, v_hat)` at a time stamp.
#[derive(Clone, Debug)]
pub struct SolverState<T: Real> {
    pub u_hat: SpectralField<T>,
    pub v_hat: SpectralField<T>,
    pub time: T,
    pub theta: u32,
    pub forcing: Forcing,
}

impl<T: Real> SolverState<T> {
    pub fn from_fields(u0: &Field<T>, u1: &Field<T>, theta: u32, forcing: Forcing) -> Result<Self> {
        if !u0.grid().same_as(u1.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            u_hat: forward_transform(u0),
            v_hat: forward_transform(u1),
            time: T::zero(),
            theta,
            forcing,
        })
    }

    pub fn zeros(grid: Arc<Grid<T>>, theta: u32, forcing: Forcing) -> Self {
        Self {
            u_hat: SpectralField::zeros(grid.clone()),
            v_hat: SpectralField::zeros(grid),
            time: T::zero(),
            theta,
            forcing,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.u_hat.grid()
    }

    pub fn u(&self) -> Result<Field<T>> {
        inverse_transform(&self.u_hat)
    }

    pub fn v(&self) -> Result<Field<T>> {
        inverse_transform(&self.v_hat)
    }
}

/// `(u(t), u_t(t))` of the linear problem, computed per mode as
/// `u = G (u0 + u1) + G' u0`, `v = G' (u0 + u1) + G'' u0`.
pub fn linear_solution<T: Real>(u0: &Field<T>, u1: &Field<T>, t: T) -> Result<(Field<T>, Field<T>)> {
    if !u0.grid().same_as(u1.grid()) {
        return Err(Error::GridMismatch);
    }
    if !(t >= T::zero()) {
        return Err(Error::InvalidArgument(format!("time {t} must be nonnegative")));
    }
    let grid = u0.grid().clone();
    let a = forward_transform(u0);
    let b = forward_transform(u1);
    let mut u_hat = Vec::with_capacity(grid.len());
    let mut v_hat = Vec::with_capacity(grid.len());
    for (m, (&c0, &c1)) in a.coeffs().iter().zip(b.coeffs()).enumerate() {
        let k2 = grid.xi_sq_at(m);
        let (g, gt) = green_hat_pair(k2, t);
        let gtt = -gt - k2 * g;
        let sum = c0 + c1;
        u_hat.push(sum * g + c0 * gt);
        v_hat.push(sum * gt + c0 * gtt);
    }
    Ok((
        inverse_transform(&SpectralField::new(grid.clone(), u_hat)?)?,
        inverse_transform(&SpectralField::new(grid, v_hat)?)?,
    ))
}

fn check_table<T: Real>(state: &SolverState<T>, table: &SymbolTable<T>) -> Result<()> {
    if state.grid().same_as(table.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn propagate<T: Real>(
    table: &SymbolTable<T>,
    u: &[Complex<T>],
    v: &[Complex<T>],
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let mut un = Vec::with_capacity(u.len());
    let mut vn = Vec::with_capacity(u.len());
    for m in 0..u.len() {
        let [[p11, p12], [p21, p22]] = table.propagator(m);
        un.push(u[m] * p11 + v[m] * p12);
        vn.push(u[m] * p21 + v[m] * p22);
    }
    (un, vn)
}

/// Advances the linear flow by the table's step.
pub fn linear_step<T: Real>(state: &SolverState<T>, table: &SymbolTable<T>) -> Result<SolverState<T>> {
    check_table(state, table)?;
    let (u, v) = propagate(table, state.u_hat.coeffs(), state.v_hat.coeffs());
    let grid = state.grid().clone();
    Ok(SolverState {
        u_hat: SpectralField::new(grid.clone(), u)?,
        v_hat: SpectralField::new(grid, v)?,
        time: state.time + table.step(),
        theta: state.theta,
        forcing: state.forcing,
    })
}

/// `|u|^theta u` for integer `theta >= 1`.
#[inline]
pub fn power_term<T: Real>(u: T, theta: u32) -> T {
    let sq = u * u;
    if theta.is_multiple_of(2) {
        u * sq.powi((theta / 2) as i32)
    } else {
        u.abs() * u * sq.powi(((theta - 1) / 2) as i32)
    }
}

/// Absorbing nonlinearity `-|u|^theta u`, pointwise.
pub fn apply_nonlinearity<T: Real>(u: &Field<T>, theta: u32) -> Field<T> {
    nonlinear_term(u, theta, Forcing::Absorbing)
}

/// `f(u)` for the given sign convention, pointwise.
pub fn nonlinear_term<T: Real>(u: &Field<T>, theta: u32, forcing: Forcing) -> Field<T> {
    let sign = match forcing {
        Forcing::Absorbing => -T::one(),
        Forcing::Focusing => T::one(),
        Forcing::Off => T::zero(),
    };
    let values = u.values().iter().map(|&x| sign * power_term(x, theta)).collect();
    Field::new(u.grid().clone(), values).expect("pointwise power of a finite field")
}

/// Mask of the modes kept by the 2/3 rule (`3 |j| <= N` on every axis).
pub fn two_thirds_mask<T: Real>(grid: &Grid<T>) -> Vec<bool> {
    let n = grid.points_per_dim() as i64;
    (0..grid.len())
        .map(|m| {
            let idx = grid.axis_indices(m);
            idx.iter()
                .take(grid.n_dims())
                .all(|&k| 3 * grid.lattice_index(k).abs() <= n)
        })
        .collect()
}

/// 8-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Per-mode weights of the Duhamel integral against a forcing that is
/// linear in time across one step:
/// `int_0^D K(D - s) [(1 - s/D) F_0 + (s/D) F_1] ds = w0 F_0 + w1 F_1`
/// for `K = G` (the `u` update) and `K = G'` (the `v` update).
#[derive(Clone, Debug)]
struct DuhamelWeights<T> {
    g0: Vec<T>,
    g1: Vec<T>,
    gt0: Vec<T>,
    gt1: Vec<T>,
}

impl<T: Real> DuhamelWeights<T> {
    fn new(xi_sq: &[T], delta: T) -> Self {
        let n = xi_sq.len();
        let mut w = Self {
            g0: Vec::with_capacity(n),
            g1: Vec::with_capacity(n),
            gt0: Vec::with_capacity(n),
            gt1: Vec::with_capacity(n),
        };
        let half = T::half() * delta;
        for &k2 in xi_sq {
            let (mut a0, mut a1, mut b0, mut b1) = (T::zero(), T::zero(), T::zero(), T::zero());
            for &(node, weight) in &GAUSS_LEGENDRE_8 {
                let s = half * (T::one() + T::lit(node));
                let frac = s / delta;
                let (g, gt) = green_hat_pair(k2, delta - s);
                let wq = half * T::lit(weight);
                a0 = a0 + wq * g * (T::one() - frac);
                a1 = a1 + wq * g * frac;
                b0 = b0 + wq * gt * (T::one() - frac);
                b1 = b1 + wq * gt * frac;
            }
            w.g0.push(a0);
            w.g1.push(a1);
            w.gt0.push(b0);
            w.gt1.push(b1);
        }
        w
    }
}

/// One-step integrator with its precomputed per-mode data.
#[derive(Clone, Debug)]
pub struct Stepper<T: Real> {
    config: SolverConfig<T>,
    table: SymbolTable<T>,
    weights: Option<DuhamelWeights<T>>,
    mask: Option<Vec<bool>>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: Arc<Grid<T>>, config: &SolverConfig<T>) -> Result<Self> {
        let table = SymbolTable::new(grid, config.dt)?;
        Self::with_table(table, config)
    }

    pub fn with_table(table: SymbolTable<T>, config: &SolverConfig<T>) -> Result<Self> {
        if config.theta == 0 || !(config.dt > T::zero()) {
            return Err(Error::InvalidArgument("theta >= 1 and dt > 0 required".into()));
        }
        if (table.step() - config.dt).abs() > T::lit(1e-12) * config.dt {
            return Err(Error::InvalidArgument(format!(
                "symbol table step {} differs from dt {}",
                table.step(),
                config.dt
            )));
        }
        let weights = (config.integrator == Integrator::ExponentialDuhamel)
            .then(|| DuhamelWeights::new(table.xi_sq(), config.dt));
        let mask = config.dealias.then(|| two_thirds_mask(table.grid()));
        Ok(Self {
            config: config.clone(),
            table,
            weights,
            mask,
        })
    }

    pub fn table(&self) -> &SymbolTable<T> {
        &self.table
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    /// Zeros the modes removed by dealiasing (no-op when it is off).
    pub fn project(&self, spec: &mut SpectralField<T>) {
        if let Some(mask) = &self.mask {
            for (c, &keep) in spec.coeffs_mut().iter_mut().zip(mask) {
                if !keep {
                    *c = Complex::zero();
                }
            }
        }
    }

    /// `(F_hat(u), sup |u|)` with the configured dealiasing.
    fn forcing_hat(&self, u_hat: &SpectralField<T>, forcing: Forcing) -> Result<(SpectralField<T>, T)> {
        let u = inverse_transform(u_hat)?;
        let sup = u.max_abs();
        let mut f = forward_transform(&nonlinear_term(&u, self.config.theta, forcing));
        self.project(&mut f);
        Ok((f, sup))
    }

    fn guard(&self, time: T, sup: T) -> Result<()> {
        let limit = self.config.instability_limit();
        if !(sup <= limit) {
            return Err(Error::Instability {
                time: time.as_f64(),
                sup_norm: sup.as_f64(),
                limit: limit.as_f64(),
            });
        }
        Ok(())
    }

    /// Advances `state` by `dt`.
    pub fn step(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        check_table(state, &self.table)?;
        if state.forcing == Forcing::Off {
            return linear_step(state, &self.table);
        }
        match self.config.integrator {
            Integrator::ExponentialDuhamel => self.step_exponential(state),
            Integrator::ReferenceRk4 => self.step_rk4(state),
        }
    }

    fn step_exponential(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        let w = self.weights.as_ref().expect("weights built for the exponential integrator");
        let (f0, sup) = self.forcing_hat(&state.u_hat, state.forcing)?;
        self.guard(state.time, sup)?;
        let (u_lin, v_lin) = propagate(&self.table, state.u_hat.coeffs(), state.v_hat.coeffs());
        let grid = state.grid().clone();
        // predictor: forcing at the end of a purely linear step
        let predicted = SpectralField::new(grid.clone(), u_lin.clone())?;
        let (f1, _) = self.forcing_hat(&predicted, state.forcing)?;
        let (f0, f1) = (f0.coeffs(), f1.coeffs());
        let u: Vec<_> = (0..u_lin.len())
            .map(|m| u_lin[m] + f0[m] * w.g0[m] + f1[m] * w.g1[m])
            .collect();
        let v: Vec<_> = (0..v_lin.len())
            .map(|m| v_lin[m] + f0[m] * w.gt0[m] + f1[m] * w.gt1[m])
            .collect();
        Ok(SolverState {
            u_hat: SpectralField::new(grid.clone(), u)?,
            v_hat: SpectralField::new(grid, v)?,
            time: state.time + self.config.dt,
            theta: state.theta,
            forcing: state.forcing,
        })
    }

    /// Right-hand side `(v, -|xi|^2 u - v + F(u))`.
    fn rhs(
        &self,
        u: &SpectralField<T>,
        v: &[Complex<T>],
        forcing: Forcing,
    ) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>, T)> {
        let (f, sup) = self.forcing_hat(u, forcing)?;
        let k2 = self.table.xi_sq();
        let dv = (0..v.len())
            .map(|m| -(u.coeffs()[m] * k2[m]) - v[m] + f.coeffs()[m])
            .collect();
        Ok((v.to_vec(), dv, sup))
    }

    fn step_rk4(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        let dt = self.config.dt;
        let grid = state.grid().clone();
        let u0 = state.u_hat.coeffs();
        let v0 = state.v_hat.coeffs();
        let axpy = |base: &[Complex<T>], k: &[Complex<T>], h: T| -> Vec<Complex<T>> {
            base.iter().zip(k).map(|(&b, &d)| b + d * h).collect()
        };
        let (ku1, kv1, sup) = self.rhs(&state.u_hat, v0, state.forcing)?;
        self.guard(state.time, sup)?;
        let half = T::half() * dt;
        let u2 = SpectralField::new(grid.clone(), axpy(u0, &ku1, half))?;
        let (ku2, kv2, _) = self.rhs(&u2, &axpy(v0, &kv1, half), state.forcing)?;
        let u3 = SpectralField::new(grid.clone(), axpy(u0, &ku2, half))?;
        let (ku3, kv3, _) = self.rhs(&u3, &axpy(v0, &kv2, half), state.forcing)?;
        let u4 = SpectralField::new(grid.clone(), axpy(u0, &ku3, dt))?;
        let (ku4, kv4, _) = self.rhs(&u4, &axpy(v0, &kv3, dt), state.forcing)?;
        let sixth = dt / T::lit(6.0);
        let combine = |base: &[Complex<T>], k: [&[Complex<T>]; 4]| -> Vec<Complex<T>> {
            (0..base.len())
                .map(|m| base[m] + (k[0][m] + (k[1][m] + k[2][m]) * T::two() + k[3][m]) * sixth)
                .collect()
        };
        Ok(SolverState {
            u_hat: SpectralField::new(grid.clone(), combine(u0, [&ku1, &ku2, &ku3, &ku4]))?,
            v_hat: SpectralField::new(grid, combine(v0, [&kv1, &kv2, &kv3, &kv4]))?,
            time: state.time + dt,
            theta: state.theta,
            forcing: state.forcing,
        })
    }
}

/// One step of the configured integrator. Builds the per-step data on every
/// call; use [`Stepper`] when stepping repeatedly.
pub fn step_semilinear<T: Real>(
    state: &SolverState<T>,
    config: &SolverConfig<T>,
    table: &SymbolTable<T>,
) -> Result<SolverState<T>> {
    Stepper::with_table(table.clone(), config)?.step(state)
}

/// `d^h u / dt^h` for `h <= 2`, the second derivative read off the PDE as
/// `Lap u - u_t + f(u)`.
pub fn time_derivative<T: Real>(state: &SolverState<T>, h: u32) -> Result<Field<T>> {
    match h {
        0 => state.u(),
        1 => state.v(),
        2 => {
            let grid = state.grid();
            let coeffs = state
                .u_hat
                .coeffs()
                .iter()
                .zip(state.v_hat.coeffs())
                .enumerate()
                .map(|(m, (&u, &v))| -(u * grid.xi_sq_at(m)) - v)
                .collect();
            let linear = inverse_transform(&SpectralField::new(grid.clone(), coeffs)?)?;
            let f = nonlinear_term(&state.u()?, state.theta, state.forcing);
            linear.combine(T::one(), &f, T::one())
        }
        _ => Err(Error::InvalidArgument(format!(
            "time derivative order {h} unsupported (max 2)"
        ))),
    }
}

/// Receives states during [`solve`].
pub trait Observer<T: Real> {
    /// Called with the initial state and after every step.
    fn on_step(&mut self, _state: &SolverState<T>) -> Result<()> {
        Ok(())
    }

    /// Called at the configured snapshot times.
    fn on_snapshot(&mut self, state: &SolverState<T>) -> Result<()>;
}

/// Summary of a completed run.
#[derive(Clone, Debug)]
pub struct RunRecord<T: Real> {
    pub final_state: SolverState<T>,
    pub steps: usize,
    pub snapshot_times: Vec<T>,
    pub wall_time: Duration,
}

/// Integrates from `(u0, u1)` to `config.t_final`.
///
/// Snapshot times are rounded to the nearest step. With dealiasing on, the
/// initial data are projected onto the retained modes first.
pub fn solve<T: Real>(
    u0: &Field<T>,
    u1: &Field<T>,
    config: &SolverConfig<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<RunRecord<T>> {
    config.validate()?;
    let start = Instant::now();
    let grid = u0.grid().clone();
    let stepper = Stepper::new(grid, config)?;
    let mut state = SolverState::from_fields(u0, u1, config.theta, config.forcing)?;
    stepper.project(&mut state.u_hat);
    stepper.project(&mut state.v_hat);

    let n_steps = config.step_count()?;
    let mut snapshot_steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|&t| (t / config.dt).round().to_usize().unwrap_or(0).min(n_steps))
        .collect();
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();
    let mut next_snapshot = snapshot_steps.iter().peekable();
    let mut snapshot_times = Vec::with_capacity(snapshot_steps.len());

    for k in 0..=n_steps {
        if k > 0 {
            state = stepper.step(&state)?;
            state.time = T::from_usize_exact(k) * config.dt;
        }
        for obs in observers.iter_mut() {
            obs.on_step(&state)?;
        }
        if next_snapshot.peek() == Some(&&k) {
            next_snapshot.next();
            snapshot_times.push(state.time);
            for obs in observers.iter_mut() {
                obs.on_snapshot(&state)?;
            }
        }
    }
    if state.forcing != Forcing::Off {
        let sup = state.u()?.max_abs();
        stepper.guard(state.time, sup)?;
    }
    Ok(RunRecord {
        final_state: state,
        steps: n_steps,
        snapshot_times,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::symbols::build_symbol_table;

    fn gaussian(grid: &Arc<Grid<f64>>, amp: f64) -> Field<f64> {
        Field::from_fn(grid.clone(), |x| {
            amp * (-x.iter().map(|v| v * v).sum::<f64>() / 4.0).exp()
        })
        .unwrap()
    }

    fn max_diff(a: &Field<f64>, b: &Field<f64>) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn nonlinearity_values() {
        let g = make_grid::<f64>(1, 16, 1.0).unwrap();
        let zero = apply_nonlinearity(&Field::zeros(g.clone()), 3);
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let two = apply_nonlinearity(&Field::new(g.clone(), vec![2.0; 16]).unwrap(), 3);
        assert!(two.values().iter().all(|&v| v == -16.0));
        let neg = apply_nonlinearity(&Field::new(g, vec![-1.0; 16]).unwrap(), 2);
        assert!(neg.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn power_term_is_odd_with_opposite_sign() {
        for theta in 1..6 {
            for &u in &[0.0f64, 0.3, 1.7, 2.0] {
                assert_eq!(power_term(-u, theta), -power_term(u, theta));
                assert!((power_term(u, theta) - u.abs().powi(theta as i32) * u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_solution_at_time_zero_returns_data() {
        let g = make_grid::<f64>(1, 256, 20.0).unwrap();
        let u0 = gaussian(&g, 1.0);
        let u1 = gaussian(&g, 0.3).map(|v| v * v).unwrap();
        let (u, v) = linear_solution(&u0, &u1, 0.0).unwrap();
        assert!(max_diff(&u, &u0) <= 1e-12);
        assert!(max_diff(&v, &u1) <= 1e-12);
        let (u, v) = linear_solution(&Field::zeros(g.clone()), &Field::zeros(g), 3.0).unwrap();
        assert!(u.max_abs() == 0.0 && v.max_abs() == 0.0);
    }

    #[test]
    fn linear_solution_rejects_foreign_grid() {
        let a = make_grid::<f64>(1, 16, 1.0).unwrap();
        let b = make_grid::<f64>(1, 32, 1.0).unwrap();
        assert!(matches!(
            linear_solution(&Field::zeros(a), &Field::zeros(b), 1.0),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn linear_steps_compose() {
        let g = make_grid::<f64>(1, 512, 40.0).unwrap();
        let u0 = gaussian(&g, 1.0);
        let u1 = gaussian(&g, -0.4);
        let table = build_symbol_table(g.clone(), 0.25).unwrap();
        let mut state = SolverState::from_fields(&u0, &u1, 3, Forcing::Off).unwrap();
        for _ in 0..16 {
            state = linear_step(&state, &table).unwrap();
        }
        assert!((state.time - 4.0).abs() < 1e-14);
        let (u, v) = linear_solution(&u0, &u1, 4.0).unwrap();
        assert!(max_diff(&state.u().unwrap(), &u) <= 1e-9);
        assert!(max_diff(&state.v().unwrap(), &v) <= 1e-9);
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = make_grid::<f64>(1, 64, 8.0).unwrap();
        let table = build_symbol_table(g.clone(), 0.1).unwrap();
        let zero = SolverState::zeros(g, 3, Forcing::Absorbing);
        for integrator in [Integrator::ReferenceRk4, Integrator::ExponentialDuhamel] {
            let mut cfg = SolverConfig::new(3, 0.1, 1.0);
            cfg.integrator = integrator;
            let next = step_semilinear(&zero, &cfg, &table).unwrap();
            assert!(next.u_hat.coeffs().iter().all(|c| c.norm() == 0.0));
            assert!(next.v_hat.coeffs().iter().all(|c| c.norm() == 0.0));
        }
        let lin = linear_step(&zero, &table).unwrap();
        assert!(lin.u_hat.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn tiny_amplitude_step_is_linear() {
        let g = make_grid::<f64>(1, 256, 20.0).unwrap();
        let u0 = gaussian(&g, 1e-8);
        let u1 = Field::zeros(g.clone());
        // F ~ 1e-16 enters u through weights of size dt^2 / 2
        let table = build_symbol_table(g.clone(), 0.01).unwrap();
        let state = SolverState::from_fields(&u0, &u1, 1, Forcing::Absorbing).unwrap();
        let mut cfg = SolverConfig::new(1, 0.01, 1.0);
        cfg.dealias = false;
        let semi = step_semilinear(&state, &cfg, &table).unwrap().u().unwrap();
        let lin = linear_step(&state, &table).unwrap().u().unwrap();
        assert!(max_diff(&semi, &lin) <= 1e-20);
    }

    #[test]
    fn instability_guard_aborts() {
        let g = make_grid::<f64>(1, 64, 8.0).unwrap();
        let u0 = gaussian(&g, 6.0);
        let cfg = SolverConfig::new(3, 0.01, 0.1);
        let err = solve(&u0, &Field::zeros(g), &cfg, &mut []).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(3, 0.1, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.dt = 2.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 0.3;
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::new(0, 0.1, 1.0);
        assert!(cfg.validate().is_err());
        cfg.theta = 2;
        cfg.delta_bar = 1.5;
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig::new(2, 0.1, 1.0);
        assert!(cfg.satisfies_pointwise_hypothesis(2));
        assert!(!cfg.satisfies_pointwise_hypothesis(1));
        assert!(SolverConfig::new(3, 0.1, 1.0).satisfies_pointwise_hypothesis(1));
    }

    #[test]
    fn time_derivative_orders() {
        let g = make_grid::<f64>(1, 64, 8.0).unwrap();
        let zero = SolverState::zeros(g.clone(), 3, Forcing::Absorbing);
        for h in 0..=2 {
            assert_eq!(time_derivative(&zero, h).unwrap().max_abs(), 0.0);
        }
        assert!(time_derivative(&zero, 3).is_err());
    }

    #[test]
    fn second_time_derivative_of_single_mode() {
        let g = make_grid::<f64>(1, 64, 8.0).unwrap();
        let k = std::f64::consts::PI / 8.0 * 3.0;
        let u0 = Field::from_fn(g.clone(), |x| (k * x[0]).cos()).unwrap();
        let u1 = u0.map(|v| -0.7 * v).unwrap();
        let mut state = SolverState::from_fields(&u0, &u1, 3, Forcing::Off).unwrap();
        let table = build_symbol_table(g.clone(), 0.37).unwrap();
        state = linear_step(&state, &table).unwrap();
        let utt = time_derivative(&state, 2).unwrap();
        let expected = state
            .u()
            .unwrap()
            .combine(-k * k, &state.v().unwrap(), -1.0)
            .unwrap();
        assert!(max_diff(&utt, &expected) <= 1e-10);
    }

    #[test]
    fn dealias_mask_counts() {
        let g = make_grid::<f64>(1, 48usize.next_power_of_two(), 1.0).unwrap();
        let mask = two_thirds_mask(&g);
        let kept = mask.iter().filter(|&&k| k).count();
        // |j| <= 21 for N = 64
        assert_eq!(kept, 43);
    }
}
