//! Independent reference computations.
//!
//! Nothing here calls into the symbol or solver modules: the mode equation
//! is integrated numerically, the free wave is evaluated from the
//! d'Alembert formula by direct trigonometric summation, and the heat
//! semigroup uses its own multiplier.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{forward_transform, inverse_transform, Field};
use crate::scalar::Real;

/// Result of [`mode_ode`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeResult<T> {
    /// `G(xi, t)`
    pub value: T,
    /// `dG/dt(xi, t)`
    pub derivative: T,
    /// Sum of the accepted local error estimates.
    pub est_error: T,
}

// Dormand-Prince 5(4) tableau
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y'' + y' + xi_sq y = 0`, `y(0) = 0`, `y'(0) = 1` to time `t`
/// with an adaptive Dormand-Prince 5(4) scheme.
///
/// Steps are accepted when the local error estimate is below
/// `tol * h / t` (error per unit step), so the accumulated estimate stays
/// below `tol`.
pub fn mode_ode<T: Real>(xi_sq: T, t: T, tol: T) -> Result<OdeResult<T>> {
    if !(tol >= T::lit(1e-12)) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below 1e-12")));
    }
    if !(xi_sq >= T::zero()) || !(t >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "need xi_sq >= 0 and t >= 0, got ({xi_sq}, {t})"
        )));
    }
    let rhs = |y: [T; 2]| [y[1], -y[1] - xi_sq * y[0]];
    let mut y = [T::zero(), T::one()];
    let mut time = T::zero();
    let mut est = T::zero();
    if t == T::zero() {
        return Ok(OdeResult {
            value: y[0],
            derivative: y[1],
            est_error: est,
        });
    }
    let per_unit = tol / t;
    let mut h = (t * T::lit(1e-3)).min(T::lit(0.01));
    let h_min = t * T::lit(1e-14);
    while time < t {
        if h < h_min {
            return Err(Error::StepUnderflow(time.as_f64()));
        }
        let h_step = h.min(t - time);
        let mut k = [[T::zero(); 2]; 7];
        k[0] = rhs(y);
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = T::lit(DP_A[stage][j]);
                ys[0] = ys[0] + h_step * a * kj[0];
                ys[1] = ys[1] + h_step * a * kj[1];
            }
            k[stage] = rhs(ys);
        }
        let _ = DP_C;
        let mut y5 = y;
        let mut err = [T::zero(); 2];
        for (s, ks) in k.iter().enumerate() {
            let b5 = T::lit(DP_B5[s]);
            let db = T::lit(DP_B5[s] - DP_B4[s]);
            for c in 0..2 {
                y5[c] = y5[c] + h_step * b5 * ks[c];
                err[c] = err[c] + h_step * db * ks[c];
            }
        }
        let err_norm = err[0].abs().max(err[1].abs());
        let allowed = per_unit * h_step;
        if err_norm <= allowed {
            y = y5;
            time = if t - time <= h_step { t } else { time + h_step };
            est = est + err_norm;
        }
        let factor = if err_norm == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * (allowed / err_norm).powf(T::lit(0.2)))
                .max(T::lit(0.2))
                .min(T::lit(5.0))
        };
        h = h_step * factor;
    }
    Ok(OdeResult {
        value: y[0],
        derivative: y[1],
        est_error: est,
    })
}

/// Free wave operators on a 1-D periodic field from d'Alembert's formula:
/// `(W*h)(x) = (1/2) int_{x-t}^{x+t} h` and `(W_t*h)(x) = (h(x-t) + h(x+t))/2`.
///
/// Off-grid values and the integral are taken from the band-limited
/// interpolant of `h`, evaluated by direct summation. Requires `t < L/2`.
pub fn dalembert<T: Real>(h: &Field<T>, t: T) -> Result<(Field<T>, Field<T>)> {
    let grid = h.grid();
    if grid.n_dims() != 1 {
        return Err(Error::InvalidArgument("d'Alembert oracle is one-dimensional".into()));
    }
    if !(t > T::zero()) || !(t < T::half() * grid.half_width()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < t < L/2 = {} to avoid wrap-around, got t = {t}",
            T::half() * grid.half_width()
        )));
    }
    let n = grid.points_per_dim();
    let l = grid.half_width().as_f64();
    let dx = grid.dx().as_f64();
    let tf = t.as_f64();
    let samples: Vec<f64> = h.values().iter().map(|v| v.as_f64()).collect();

    // direct DFT with lattice indices j in [-N/2, N/2); the unpaired
    // Nyquist coefficient is split evenly between +-N/2 so the interpolant
    // stays real
    let half = n as i64 / 2;
    let coeff = |j: i64| -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (i, &s) in samples.iter().enumerate() {
            let phase = -2.0 * PI * (j as f64) * (i as f64) / n as f64;
            acc += Complex::from_polar(s, phase);
        }
        acc / n as f64
    };
    let coeffs: Vec<(i64, Complex<f64>)> = (-half..=half)
        .map(|j| {
            let c = if j.abs() == half { coeff(-half) * 0.5 } else { coeff(j) };
            (j, c)
        })
        .collect();
    let mean = coeffs.iter().find(|(j, _)| *j == 0).map(|(_, c)| c.re).unwrap_or(0.0);
    let k0 = PI / l;

    // interpolant p(y) = sum_j c_j exp(i k0 j (y + L)) and its oscillating
    // antiderivative; the mean contributes mean * (b - a) separately
    let eval = |y: f64| -> (f64, f64) {
        let base = Complex::from_polar(1.0, k0 * (y + l));
        let mut value = Complex::new(0.0, 0.0);
        let mut anti = Complex::new(0.0, 0.0);
        let mut pw = Complex::from_polar(1.0, -k0 * half as f64 * (y + l));
        for &(j, c) in &coeffs {
            value += c * pw;
            if j != 0 {
                anti += c * pw / Complex::new(0.0, k0 * j as f64);
            }
            pw *= base;
        }
        (value.re, anti.re)
    };

    let mut w = Vec::with_capacity(n);
    let mut wt = Vec::with_capacity(n);
    for i in 0..n {
        let x = -l + i as f64 * dx;
        let (hp, ap) = eval(x + tf);
        let (hm, am) = eval(x - tf);
        w.push(T::lit(0.5 * (mean * 2.0 * tf + ap - am)));
        wt.push(T::lit(0.5 * (hp + hm)));
    }
    Ok((Field::new(grid.clone(), w)?, Field::new(grid.clone(), wt)?))
}

/// Heat semigroup `exp(t Lap) g` via the multiplier `exp(-|xi|^2 t)`.
pub fn heat_reference<T: Real>(g: &Field<T>, t: T) -> Result<Field<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("heat time {t} must be positive")));
    }
    let spec = forward_transform(g);
    inverse_transform(&spec.apply_radial(|k2| (-k2 * t).exp()))
}
