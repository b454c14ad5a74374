//! Fourier symbol of the damped wave Green function and its frequency bands.
//!
//! Per mode, `G(xi, t)` solves `G'' + G' + |xi|^2 G = 0` with `G(0) = 0`,
//! `G'(0) = 1`. With `m = 1 - 4|xi|^2` and characteristic roots
//! `mu_{+-} = (-1 +- sqrt(m)) / 2`,
//!
//! ```text
//! G(xi, t) = (exp(mu_+ t) - exp(mu_- t)) / sqrt(m)
//!          = t exp(-t/2) S(t^2 m / 4),   S(w) = sinh(sqrt w) / sqrt w
//! ```
//!
//! The second form is entire in `w` and is what keeps the evaluation
//! continuous through the branch point `|xi| = 1/2`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{inverse_transform, Field, Grid, SpectralField};
use crate::scalar::Real;

/// Below this `|w| = |t^2 m / 4|` (i.e. `|z| < 1e-2`) the Taylor series of
/// `sinh(z)/z` and `cosh(z)` is used.
const SERIES_CUTOFF: f64 = 1e-4;

/// Roots `(mu_+, mu_-)` of `tau^2 + tau + |xi|^2 = 0`.
pub fn mu_pm<T: Real>(xi_sq: T) -> (Complex<T>, Complex<T>) {
    let half = T::half();
    let disc = T::one() - T::lit(4.0) * xi_sq;
    if disc >= T::zero() {
        let s = disc.sqrt();
        // -2 xi^2 / (1 + s) avoids cancellation for small xi
        let plus = -T::two() * xi_sq / (T::one() + s);
        let minus = -half * (T::one() + s);
        (Complex::new(plus, T::zero()), Complex::new(minus, T::zero()))
    } else {
        let w = half * (-disc).sqrt();
        (Complex::new(-half, w), Complex::new(-half, -w))
    }
}

/// `mu_0 = sqrt(1 - 4|xi|^2)`, imaginary above the branch point.
pub fn mu_0<T: Real>(xi_sq: T) -> Complex<T> {
    let disc = T::one() - T::lit(4.0) * xi_sq;
    if disc >= T::zero() {
        Complex::new(disc.sqrt(), T::zero())
    } else {
        Complex::new(T::zero(), (-disc).sqrt())
    }
}

/// `(sinh(sqrt w)/sqrt w, cosh(sqrt w))` continued to `w < 0` as
/// `(sin(sqrt -w)/sqrt -w, cos(sqrt -w))`, valid only for small `|w|`.
fn sinhc_cosh_series<T: Real>(w: T) -> (T, T) {
    let s = T::one()
        + w * (T::lit(1.0 / 6.0) + w * (T::lit(1.0 / 120.0) + w * T::lit(1.0 / 5040.0)));
    let c = T::one() + w * (T::half() + w * (T::lit(1.0 / 24.0) + w * T::lit(1.0 / 720.0)));
    (s, c)
}

/// `(G(xi, t), dG/dt(xi, t))`.
pub fn green_hat_pair<T: Real>(xi_sq: T, t: T) -> (T, T) {
    if t == T::zero() {
        return (T::zero(), T::one());
    }
    let half = T::half();
    let m = T::one() - T::lit(4.0) * xi_sq;
    let w = t * t * m / T::lit(4.0);
    if w.abs() < T::lit(SERIES_CUTOFF) {
        let (s, c) = sinhc_cosh_series(w);
        let decay = (-half * t).exp();
        return (t * decay * s, decay * (c - half * t * s));
    }
    if m > T::zero() {
        let sm = m.sqrt();
        let plus = -T::two() * xi_sq / (T::one() + sm);
        let minus = -half * (T::one() + sm);
        let e_plus = (plus * t).exp();
        // exp(mu_+ t) - exp(mu_- t) = -exp(mu_+ t) expm1(-sqrt(m) t)
        let g = -e_plus * (-sm * t).exp_m1() / sm;
        let gt = (plus * e_plus - minus * (minus * t).exp()) / sm;
        (g, gt)
    } else {
        let omega = half * (-m).sqrt();
        let decay = (-half * t).exp();
        let (sin, cos) = (omega * t).sin_cos();
        (decay * sin / omega, decay * (cos - half * sin / omega))
    }
}

/// Fourier symbol `G(xi, t)` of the Green function.
pub fn green_hat<T: Real>(xi_sq: T, t: T) -> T {
    green_hat_pair(xi_sq, t).0
}

/// Time derivative `dG/dt(xi, t)`; equals 1 at `t = 0`.
pub fn green_hat_dt<T: Real>(xi_sq: T, t: T) -> T {
    green_hat_pair(xi_sq, t).1
}

/// `d^2G/dt^2` from the mode equation `G'' = -G' - |xi|^2 G`.
pub fn green_hat_dtt<T: Real>(xi_sq: T, t: T) -> T {
    let (g, gt) = green_hat_pair(xi_sq, t);
    -gt - xi_sq * g
}

/// Per-mode symbols for a fixed step.
#[derive(Clone, Debug)]
pub struct SymbolTable<T: Real> {
    grid: Arc<Grid<T>>,
    step: T,
    xi_sq: Vec<T>,
    g: Vec<T>,
    gt: Vec<T>,
    gtt: Vec<T>,
}

impl<T: Real> SymbolTable<T> {
    /// Builds the table for step `delta >= 0` (zero is accepted and gives
    /// the identity propagator).
    pub fn new(grid: Arc<Grid<T>>, delta: T) -> Result<Self> {
        if !(delta >= T::zero()) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "symbol table step {delta} must be finite and nonnegative"
            )));
        }
        let xi_sq = grid.xi_sq();
        let mut g = Vec::with_capacity(xi_sq.len());
        let mut gt = Vec::with_capacity(xi_sq.len());
        let mut gtt = Vec::with_capacity(xi_sq.len());
        for &k2 in &xi_sq {
            let (a, b) = green_hat_pair(k2, delta);
            g.push(a);
            gt.push(b);
            gtt.push(-b - k2 * a);
        }
        Ok(Self {
            grid,
            step: delta,
            xi_sq,
            g,
            gt,
            gtt,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn xi_sq(&self) -> &[T] {
        &self.xi_sq
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    pub fn gt(&self) -> &[T] {
        &self.gt
    }

    pub fn gtt(&self) -> &[T] {
        &self.gtt
    }

    /// Mode-`m` propagator acting on `(u_hat, v_hat)`:
    /// `[[G' + G, G], [G'' + G', G']]`.
    pub fn propagator(&self, m: usize) -> [[T; 2]; 2] {
        let (g, gt, gtt) = (self.g[m], self.gt[m], self.gtt[m]);
        [[gt + g, g], [gtt + gt, gt]]
    }
}

pub fn build_symbol_table<T: Real>(grid: Arc<Grid<T>>, delta: T) -> Result<SymbolTable<T>> {
    SymbolTable::new(grid, delta)
}

/// Radii `eps` and `R` of the low/high frequency cutoffs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec<T: Real> {
    eps: T,
    r_outer: T,
}

impl<T: Real> CutoffSpec<T> {
    /// Requires `0 < eps` and `2 eps < R - 1`.
    pub fn new(eps: T, r_outer: T) -> Result<Self> {
        if !(eps > T::zero()) || !(T::two() * eps < r_outer - T::one()) {
            return Err(Error::InvalidCutoff(format!(
                "need 0 < eps and 2 eps < R - 1, got eps = {eps}, R = {r_outer}"
            )));
        }
        Ok(Self { eps, r_outer })
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn r_outer(&self) -> T {
        self.r_outer
    }

    /// Transition intervals `(lo, hi)` of the cutoffs that shape `band`.
    pub fn transitions(&self, band: Band) -> Vec<(T, T)> {
        let low = (self.eps, T::two() * self.eps);
        let high = (self.r_outer - T::one(), self.r_outer);
        match band {
            Band::Low => vec![low],
            Band::Middle => vec![low, high],
            Band::High => vec![high],
        }
    }
}

impl<T: Real> Default for CutoffSpec<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(0.125),
            r_outer: T::two(),
        }
    }
}

/// Frequency band of the cutoff partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Band {
    Low = 1,
    Middle = 2,
    High = 3,
}

impl TryFrom<u32> for Band {
    type Error = Error;

    fn try_from(i: u32) -> Result<Self> {
        match i {
            1 => Ok(Band::Low),
            2 => Ok(Band::Middle),
            3 => Ok(Band::High),
            _ => Err(Error::InvalidArgument(format!("band index {i} not in 1..=3"))),
        }
    }
}

/// `exp(-1/s)` for `s > 0`, zero otherwise.
fn mollifier<T: Real>(s: T) -> T {
    if s > T::zero() {
        (-s.recip()).exp()
    } else {
        T::zero()
    }
}

/// Smooth step: 0 for `s <= 0`, 1 for `s >= 1`.
fn smooth_step<T: Real>(s: T) -> T {
    if s <= T::zero() {
        return T::zero();
    }
    if s >= T::one() {
        return T::one();
    }
    let a = mollifier(s);
    a / (a + mollifier(T::one() - s))
}

/// Smooth partition of unity `chi_1 + chi_2 + chi_3 = 1` in `|xi|`.
pub fn cutoff<T: Real>(band: Band, xi_norm: T, spec: &CutoffSpec<T>) -> T {
    let chi1 = T::one() - smooth_step((xi_norm - spec.eps) / spec.eps);
    let chi3 = smooth_step(xi_norm - (spec.r_outer - T::one()));
    match band {
        Band::Low => chi1,
        Band::High => chi3,
        Band::Middle => T::one() - chi1 - chi3,
    }
}

/// Minimum lattice frequencies strictly inside each cutoff transition.
pub const MIN_TRANSITION_MODES: usize = 8;

fn check_resolution<T: Real>(band: Band, grid: &Grid<T>, spec: &CutoffSpec<T>) -> Result<()> {
    let spacing = grid.frequency_spacing();
    let xi_max = spacing * T::from_usize_exact(grid.points_per_dim() / 2);
    for (lo, hi) in spec.transitions(band) {
        if lo >= xi_max {
            // transition beyond the lattice: the cutoff is constant on it
            continue;
        }
        let mut count = 0usize;
        let mut j = 1usize;
        loop {
            let xi = spacing * T::from_usize_exact(j);
            if xi >= hi || xi > xi_max {
                break;
            }
            if xi > lo {
                count += 1;
            }
            j += 1;
        }
        if count < MIN_TRANSITION_MODES || hi > xi_max {
            return Err(Error::UnderResolved(format!(
                "{count} modes inside ({lo}, {hi}), need {MIN_TRANSITION_MODES} below the Nyquist frequency {xi_max}"
            )));
        }
    }
    Ok(())
}

/// Spectrum `chi_i(xi) G(xi, t)` of the band-restricted Green function.
pub fn green_band_spectrum<T: Real>(
    band: Band,
    grid: &Arc<Grid<T>>,
    t: T,
    spec: &CutoffSpec<T>,
) -> Result<SpectralField<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("band time {t} must be positive")));
    }
    check_resolution(band, grid, spec)?;
    // a unit-mass impulse at x = 0 has coefficients (-1)^j / dx^n
    let delta_coeff = grid.cell_volume().recip();
    let coeffs = (0..grid.len())
        .map(|m| {
            let k2 = grid.xi_sq_at(m);
            let w = cutoff(band, k2.sqrt(), spec)
                * green_hat(k2, t)
                * delta_coeff
                * grid.origin_phase(m);
            Complex::new(w, T::zero())
        })
        .collect();
    SpectralField::new(grid.clone(), coeffs)
}

/// Band-restricted Green function `G_i(x, t)` sampled on the grid.
pub fn green_band<T: Real>(
    band: Band,
    grid: &Arc<Grid<T>>,
    t: T,
    spec: &CutoffSpec<T>,
) -> Result<Field<T>> {
    inverse_transform(&green_band_spectrum(band, grid, t, spec)?)
}

/// Free wave symbols `(sin(|xi| t)/|xi|, cos(|xi| t))`, the limit at
/// `xi = 0` being `(t, 1)`.
pub fn free_wave_hat<T: Real>(xi_sq: T, t: T) -> (T, T) {
    let k = xi_sq.sqrt();
    let z = k * t;
    if z.abs() < T::lit(1e-4) {
        let z2 = z * z;
        let s = t * (T::one() - z2 / T::lit(6.0) + z2 * z2 / T::lit(120.0));
        let c = T::one() - z2 / T::two() + z2 * z2 / T::lit(24.0);
        (s, c)
    } else {
        let (sin, cos) = z.sin_cos();
        (sin / k, cos)
    }
}

/// Applies the free wave operators `(W(t)*, dW/dt(t)*)` to `h` spectrally.
pub fn apply_free_wave<T: Real>(h: &Field<T>, t: T) -> Result<(Field<T>, Field<T>)> {
    let spec = crate::grid::forward_transform(h);
    let w = spec.apply_radial(|k2| free_wave_hat(k2, t).0);
    let wt = spec.apply_radial(|k2| free_wave_hat(k2, t).1);
    Ok((inverse_transform(&w)?, inverse_transform(&wt)?))
}
