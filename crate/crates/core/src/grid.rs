//! Periodic grids on `[-L, L)^n`, sampled fields and their discrete Fourier
//! transforms.
//!
//! Transform normalization: the forward transform is the plain sum
//! `F_k = sum_i f_i exp(-2 pi i k.i / N)` over all grid points, the inverse
//! carries `1/N` per axis. With this convention Parseval reads
//!
//! ```text
//! sum_i |f_i|^2 dx^n = (dx^n / N^n) sum_k |F_k|^2
//! ```
//!
//! Mode `k` along an axis (FFT order) has lattice index `j = k` for
//! `k < N/2` and `j = k - N` otherwise, and wavenumber `xi = (pi / L) j`.
//! Real-space samples sit at `x_i = -L + i dx`; the resulting phase factor
//! `(-1)^j` relative to the continuous transform is irrelevant for the
//! diagonal (multiplier) operators used throughout.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported spatial dimension.
pub const MAX_DIMS: usize = 3;

/// Relative imaginary residue tolerated (and discarded) by
/// [`inverse_transform`]; raised to `1000 * epsilon` for `f32`.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;

fn residue_limit<T: Real>() -> f64 {
    IMAGINARY_RESIDUE_TOL.max(1e3 * T::epsilon().as_f64())
}

/// Periodic box `[-L, L)^n` with `N` points per axis.
pub struct Grid<T: Real> {
    n_dims: usize,
    points: usize,
    half_width: T,
    dx: T,
    wavenumbers: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Grid<T> {
    pub fn new(n_dims: usize, points_per_dim: usize, half_width: T) -> Result<Arc<Self>> {
        if !(1..=MAX_DIMS).contains(&n_dims) {
            return Err(Error::InvalidGrid(format!(
                "dimension {n_dims} not in 1..={MAX_DIMS}"
            )));
        }
        if points_per_dim < 16 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension {points_per_dim} is not a power of two >= 16"
            )));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be positive and finite"
            )));
        }
        let n = points_per_dim;
        let dx = T::two() * half_width / T::from_usize_exact(n);
        let base = T::PI() / half_width;
        let wavenumbers = (0..n)
            .map(|k| base * T::from_i64(signed_index(k, n)).unwrap())
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n_dims,
            points: n,
            half_width,
            dx,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// Volume element `dx^n`.
    pub fn cell_volume(&self) -> T {
        self.dx.powi(self.n_dims as i32)
    }

    /// Total number of samples (and of modes), `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.n_dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice spacing `pi / L` of the frequency grid.
    pub fn frequency_spacing(&self) -> T {
        T::PI() / self.half_width
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// Signed lattice index `j` of FFT-order mode `k`.
    pub fn lattice_index(&self, k: usize) -> i64 {
        signed_index(k, self.points)
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.points / 2
    }

    /// Wavenumber used for differentiation. The unpaired Nyquist mode is
    /// mapped to zero so derivatives of real fields stay real and
    /// derivative orders compose exactly.
    pub fn derivative_wavenumber(&self, k: usize) -> T {
        if self.is_nyquist(k) {
            T::zero()
        } else {
            self.wavenumbers[k]
        }
    }

    /// Per-axis indices of a flat row-major index; unused axes are 0.
    pub fn axis_indices(&self, flat: usize) -> [usize; MAX_DIMS] {
        let mut out = [0; MAX_DIMS];
        let mut rest = flat;
        for axis in (0..self.n_dims).rev() {
            out[axis] = rest % self.points;
            rest /= self.points;
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.n_dims)
            .fold(0, |acc, &i| acc * self.points + i % self.points)
    }

    /// Coordinates `x_i = -L + i dx` of a flat index; unused axes are 0.
    pub fn position(&self, flat: usize) -> [T; MAX_DIMS] {
        let idx = self.axis_indices(flat);
        let mut x = [T::zero(); MAX_DIMS];
        for axis in 0..self.n_dims {
            x[axis] = -self.half_width + T::from_usize_exact(idx[axis]) * self.dx;
        }
        x
    }

    /// `|xi|^2` of one mode.
    pub fn xi_sq_at(&self, flat: usize) -> T {
        let idx = self.axis_indices(flat);
        idx.iter()
            .take(self.n_dims)
            .map(|&k| self.wavenumbers[k] * self.wavenumbers[k])
            .fold(T::zero(), |a, b| a + b)
    }

    /// `|xi|^2` for every mode, flat order.
    pub fn xi_sq(&self) -> Vec<T> {
        (0..self.len()).map(|m| self.xi_sq_at(m)).collect()
    }

    /// Coefficient sign `(-1)^(sum_k j_k)` of a unit impulse placed at the
    /// origin `x = 0` (grid index `N/2` on every axis).
    pub fn origin_phase(&self, flat: usize) -> T {
        let idx = self.axis_indices(flat);
        let parity: usize = idx.iter().take(self.n_dims).sum();
        if parity.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Flat index of the mode with negated lattice indices.
    pub fn conjugate_mode(&self, flat: usize) -> usize {
        let idx = self.axis_indices(flat);
        let mut neg = [0; MAX_DIMS];
        for axis in 0..self.n_dims {
            neg[axis] = (self.points - idx[axis]) % self.points;
        }
        self.flat_index(&neg[..self.n_dims])
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        std::ptr::eq(self, other)
            || (self.n_dims == other.n_dims
                && self.points == other.points
                && self.half_width == other.half_width)
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.points;
        let mut scratch = vec![Complex::zero(); plan.get_inplace_scratch_len()];
        for axis in 0..self.n_dims {
            let stride = n.pow((self.n_dims - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            // gather `stride` lines of one block contiguously, transform, scatter
            let block = n * stride;
            let mut lines = vec![Complex::zero(); block];
            for chunk in data.chunks_exact_mut(block) {
                for i in 0..n {
                    for inner in 0..stride {
                        lines[inner * n + i] = chunk[i * stride + inner];
                    }
                }
                plan.process_with_scratch(&mut lines, &mut scratch);
                for i in 0..n {
                    for inner in 0..stride {
                        chunk[i * stride + inner] = lines[inner * n + i];
                    }
                }
            }
        }
        if inverse {
            let scale = T::one() / T::from_usize_exact(self.len());
            data.iter_mut().for_each(|c| *c = *c * scale);
        }
    }
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_dims", &self.n_dims)
            .field("points_per_dim", &self.points)
            .field("half_width", &self.half_width)
            .field("dx", &self.dx)
            .finish()
    }
}

fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Builds a periodic grid; see [`Grid::new`].
pub fn make_grid<T: Real>(n_dims: usize, points_per_dim: usize, half_width: T) -> Result<Arc<Grid<T>>> {
    Grid::new(n_dims, points_per_dim, half_width)
}

/// Real samples on a [`Grid`], row-major with the last axis contiguous.
#[derive(Clone, Debug)]
pub struct Field<T: Real> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    /// Samples `f(x)` at every grid point; `x` has `n_dims` entries.
    pub fn from_fn(grid: Arc<Grid<T>>, mut f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let n = grid.n_dims();
        let values = (0..grid.len())
            .map(|m| f(&grid.position(m)[..n]))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: T, other: &Field<T>, b: T) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    /// Cyclic shift by `shift[axis]` cells: `out[i] = self[i - shift]`.
    pub fn shift_cyclic(&self, shift: &[isize]) -> Self {
        let n = self.grid.points_per_dim() as isize;
        let mut values = vec![T::zero(); self.values.len()];
        for (m, &v) in self.values.iter().enumerate() {
            let mut idx = self.grid.axis_indices(m);
            for (axis, &s) in shift.iter().enumerate().take(self.grid.n_dims()) {
                idx[axis] = (idx[axis] as isize + s).rem_euclid(n) as usize;
            }
            values[self.grid.flat_index(&idx[..self.grid.n_dims()])] = v;
        }
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients on a [`Grid`], flat FFT order.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn new(grid: Arc<Grid<T>>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let coeffs = vec![Complex::zero(); grid.len()];
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    /// Multiplies mode `m` by `multiplier[m]`.
    pub fn apply_multiplier(&self, multiplier: &[T]) -> Self {
        assert_eq!(multiplier.len(), self.coeffs.len());
        let coeffs = self
            .coeffs
            .iter()
            .zip(multiplier)
            .map(|(c, &w)| c * w)
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Multiplies every mode by `g(|xi|^2)`.
    pub fn apply_radial(&self, g: impl Fn(T) -> T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * g(self.grid.xi_sq_at(m)))
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Largest violation of `c(-j) = conj(c(j))` relative to the largest
    /// coefficient magnitude.
    pub fn hermitian_defect(&self) -> T {
        let scale = self
            .coeffs
            .iter()
            .fold(T::zero(), |m, c| m.max(c.norm()));
        if scale == T::zero() {
            return T::zero();
        }
        let defect = (0..self.coeffs.len()).fold(T::zero(), |m, k| {
            let partner = self.grid.conjugate_mode(k);
            m.max((self.coeffs[partner] - self.coeffs[k].conj()).norm())
        });
        defect / scale
    }

    /// `(dx^n / N^n) sum |c|^2`, the squared discrete L2 norm of the
    /// represented field.
    pub fn l2_norm_sq(&self) -> T {
        self.weighted_norm_sq(|_| T::one())
    }

    /// `(dx^n / N^n) sum_m w(m) |c_m|^2`.
    pub fn weighted_norm_sq(&self, w: impl Fn(usize) -> T) -> T {
        let sum: T = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| w(m) * c.norm_sqr())
            .sum();
        sum * self.grid.cell_volume() / T::from_usize_exact(self.grid.len())
    }
}

/// Forward transform (plain sum normalization).
pub fn forward_transform<T: Real>(f: &Field<T>) -> SpectralField<T> {
    let grid = f.grid.clone();
    let mut data: Vec<Complex<T>> = f.values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    grid.transform(&mut data, false);
    SpectralField { grid, coeffs: data }
}

/// Inverse transform (`1/N` per axis). The imaginary part of the result is
/// discarded when it is below [`IMAGINARY_RESIDUE_TOL`] relative to
/// `sum |c| / N^n`, the triangle bound on the output; larger residues mean
/// the input did not represent a real field.
pub fn inverse_transform<T: Real>(spec: &SpectralField<T>) -> Result<Field<T>> {
    let grid = spec.grid.clone();
    let mut data = spec.coeffs.clone();
    grid.transform(&mut data, true);
    let scale: T =
        spec.coeffs.iter().map(|c| c.norm()).sum::<T>() / T::from_usize_exact(grid.len());
    let residue = data.iter().fold(T::zero(), |m, c| m.max(c.im.abs()));
    if scale > T::zero() {
        let rel = (residue / scale).as_f64();
        let limit = residue_limit::<T>();
        if rel > limit {
            return Err(Error::ImaginaryResidue {
                residue: rel,
                limit,
            });
        }
    }
    Field::new(grid, data.into_iter().map(|c| c.re).collect())
}

/// Spatial multi-index `alpha`, one order per axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub [u32; MAX_DIMS]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; MAX_DIMS]);

    pub fn new(orders: &[u32]) -> Self {
        let mut a = [0; MAX_DIMS];
        for (slot, &o) in a.iter_mut().zip(orders) {
            *slot = o;
        }
        MultiIndex(a)
    }

    /// `d^k / dx_axis^k`
    pub fn along(axis: usize, k: u32) -> Self {
        let mut a = [0; MAX_DIMS];
        a[axis] = k;
        MultiIndex(a)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// All multi-indices in `n_dims` dimensions with `|alpha| = order`.
    pub fn all_of_order(n_dims: usize, order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = [0u32; MAX_DIMS];
        fn rec(axis: usize, n: usize, left: u32, cur: &mut [u32; MAX_DIMS], out: &mut Vec<MultiIndex>) {
            if axis + 1 == n {
                cur[axis] = left;
                out.push(MultiIndex(*cur));
                cur[axis] = 0;
                return;
            }
            for k in 0..=left {
                cur[axis] = k;
                rec(axis + 1, n, left - k, cur, out);
            }
            cur[axis] = 0;
        }
        rec(0, n_dims, order, &mut cur, &mut out);
        out
    }
}

/// Multiplies coefficients by `prod_k (i xi_k)^alpha_k`.
///
/// Any nonzero order along an axis annihilates that axis' Nyquist mode
/// (see [`Grid::derivative_wavenumber`]).
pub fn spectral_derivative<T: Real>(
    spec: &SpectralField<T>,
    alpha: MultiIndex,
) -> Result<SpectralField<T>> {
    let grid = &spec.grid;
    let cap = (grid.points_per_dim() / 4) as u32;
    if alpha.order() > cap {
        return Err(Error::InvalidArgument(format!(
            "derivative order {} exceeds cap {cap}",
            alpha.order()
        )));
    }
    if alpha.0[grid.n_dims()..].iter().any(|&o| o != 0) {
        return Err(Error::InvalidArgument(format!(
            "multi-index {:?} has orders beyond dimension {}",
            alpha.0,
            grid.n_dims()
        )));
    }
    if alpha.order() == 0 {
        return Ok(spec.clone());
    }
    // per-axis factor tables (i xi)^a
    let tables: Vec<Vec<Complex<T>>> = (0..grid.n_dims())
        .map(|axis| {
            (0..grid.points_per_dim())
                .map(|k| i_pow(grid.derivative_wavenumber(k), alpha.0[axis]))
                .collect()
        })
        .collect();
    let coeffs = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let idx = grid.axis_indices(m);
            tables
                .iter()
                .zip(idx.iter())
                .fold(c, |acc, (t, &k)| acc * t[k])
        })
        .collect();
    Ok(SpectralField {
        grid: grid.clone(),
        coeffs,
    })
}

/// `(i xi)^a`
fn i_pow<T: Real>(xi: T, a: u32) -> Complex<T> {
    let mag = xi.powi(a as i32);
    match a % 4 {
        0 => Complex::new(mag, T::zero()),
        1 => Complex::new(T::zero(), mag),
        2 => Complex::new(-mag, T::zero()),
        _ => Complex::new(T::zero(), -mag),
    }
}

/// Physical-space derivative `D^alpha f`.
pub fn derivative<T: Real>(f: &Field<T>, alpha: MultiIndex) -> Result<Field<T>> {
    inverse_transform(&spectral_derivative(&forward_transform(f), alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Arc<Grid<f64>>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::new(grid.clone(), values).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_1d_spacing_and_lattice() {
        let g = make_grid(1, 16, 1.0).unwrap();
        assert_eq!(g.dx(), 0.125);
        let mut js: Vec<i64> = (0..16).map(|k| g.lattice_index(k)).collect();
        js.sort();
        assert_eq!(js, (-8..8).collect::<Vec<_>>());
        for k in 0..16 {
            let j = g.lattice_index(k) as f64;
            assert!((g.wavenumbers()[k] - std::f64::consts::PI * j).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_2d_mode_count_and_spacing() {
        let g = make_grid(2, 16, 2.0).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.frequency_spacing() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(g.dx() * 16.0, 4.0);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(make_grid(1, 17, 1.0).is_err());
        assert!(make_grid(1, 8, 1.0).is_err());
        assert!(make_grid(1, 16, 0.0).is_err());
        assert!(make_grid(1, 16, -1.0).is_err());
        assert!(make_grid(4, 16, 1.0).is_err());
        assert!(make_grid(0, 16, 1.0).is_err());
    }

    #[test]
    fn lattice_is_symmetric_except_nyquist() {
        let g = make_grid(1, 32, 3.0).unwrap();
        for k in 0..32 {
            if g.is_nyquist(k) {
                continue;
            }
            let j = g.lattice_index(k);
            assert!((0..32).any(|q| g.lattice_index(q) == -j));
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = make_grid(2, 16, 1.0).unwrap();
        let spec = forward_transform(&Field::zeros(g));
        assert!(spec.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_cosine_has_two_modes() {
        let g = make_grid(1, 32, 1.5).unwrap();
        let l = g.half_width();
        let f = Field::from_fn(g.clone(), |x| (std::f64::consts::PI * x[0] / l).cos()).unwrap();
        let spec = forward_transform(&f);
        let big: Vec<usize> = (0..32).filter(|&k| spec.coeffs()[k].norm() > 1e-10).collect();
        assert_eq!(big.len(), 2);
        let js: Vec<i64> = big.iter().map(|&k| g.lattice_index(k)).collect();
        assert!(js.contains(&1) && js.contains(&-1));
        assert!((spec.coeffs()[big[0]].norm() - spec.coeffs()[big[1]].norm()).abs() < 1e-12);
        let back = inverse_transform(&spec).unwrap();
        assert!(max_diff(back.values(), f.values()) < 1e-12);
    }

    #[test]
    fn parseval_with_documented_constant() {
        for (dims, n) in [(1, 256), (2, 32), (3, 16)] {
            let g = make_grid(dims, n, 2.5).unwrap();
            let f = random_field(&g, 11 + dims as u64);
            let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
            let spec = forward_transform(&f);
            let via = spec.l2_norm_sq();
            assert!((direct - via).abs() <= 1e-10 * direct, "{dims}d: {direct} vs {via}");
            assert!(spec.hermitian_defect() < 1e-13);
        }
    }

    #[test]
    fn round_trip_random_fields() {
        for (dims, n) in [(1, 1024), (2, 64), (3, 16)] {
            let g = make_grid(dims, n, 1.0).unwrap();
            let f = random_field(&g, 3);
            let back = inverse_transform(&forward_transform(&f)).unwrap();
            let scale = f.max_abs();
            assert!(max_diff(back.values(), f.values()) <= 1e-12 * scale);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let g = make_grid(1, 16, 1.0).unwrap();
        let mut spec = SpectralField::zeros(g);
        spec.coeffs_mut()[1] = Complex::new(1.0, 0.0);
        assert!(matches!(
            inverse_transform(&spec),
            Err(Error::ImaginaryResidue { .. })
        ));
    }

    #[test]
    fn derivative_of_sine() {
        let g = make_grid(1, 64, 2.0).unwrap();
        let k = std::f64::consts::PI / 2.0;
        let f = Field::from_fn(g.clone(), |x| (k * x[0]).sin()).unwrap();
        let df = derivative(&f, MultiIndex::along(0, 1)).unwrap();
        for (m, v) in df.values().iter().enumerate() {
            let x = g.position(m)[0];
            assert!((v - k * (k * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_order_is_identity_and_orders_compose() {
        let g = make_grid(1, 128, 1.0).unwrap();
        let spec = forward_transform(&random_field(&g, 5));
        let same = spectral_derivative(&spec, MultiIndex::ZERO).unwrap();
        assert_eq!(same.coeffs(), spec.coeffs());
        let d1 = spectral_derivative(&spec, MultiIndex::along(0, 1)).unwrap();
        let d11 = spectral_derivative(&d1, MultiIndex::along(0, 1)).unwrap();
        let d2 = spectral_derivative(&spec, MultiIndex::along(0, 2)).unwrap();
        let a = inverse_transform(&d11).unwrap();
        let b = inverse_transform(&d2).unwrap();
        let scale = b.max_abs();
        assert!(max_diff(a.values(), b.values()) <= 1e-12 * scale);
    }

    #[test]
    fn mixed_partials_commute() {
        let g = make_grid(2, 32, 1.0).unwrap();
        let spec = forward_transform(&random_field(&g, 9));
        let xy = spectral_derivative(
            &spectral_derivative(&spec, MultiIndex::along(0, 1)).unwrap(),
            MultiIndex::along(1, 1),
        )
        .unwrap();
        let yx = spectral_derivative(
            &spectral_derivative(&spec, MultiIndex::along(1, 1)).unwrap(),
            MultiIndex::along(0, 1),
        )
        .unwrap();
        let a = inverse_transform(&xy).unwrap();
        let b = inverse_transform(&yx).unwrap();
        assert!(max_diff(a.values(), b.values()) <= 1e-12 * b.max_abs().max(1.0));
    }

    #[test]
    fn derivative_order_cap_and_dimension_checks() {
        let g = make_grid(1, 16, 1.0).unwrap();
        let spec = SpectralField::zeros(g);
        assert!(spectral_derivative(&spec, MultiIndex::along(0, 5)).is_err());
        assert!(spectral_derivative(&spec, MultiIndex::along(1, 1)).is_err());
        assert!(spectral_derivative(&spec, MultiIndex::along(0, 4)).is_ok());
    }

    #[test]
    fn field_validation() {
        let g = make_grid::<f64>(1, 16, 1.0).unwrap();
        assert!(Field::new(g.clone(), vec![0.0; 15]).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite(3))));
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(MultiIndex::all_of_order(1, 3), vec![MultiIndex::along(0, 3)]);
        assert_eq!(MultiIndex::all_of_order(2, 2).len(), 3);
        assert_eq!(MultiIndex::all_of_order(3, 2).len(), 6);
        assert!(MultiIndex::all_of_order(3, 2).iter().all(|a| a.order() == 2));
    }

    #[test]
    fn works_in_single_precision() {
        let g = make_grid::<f32>(1, 64, 1.0).unwrap();
        let f = Field::from_fn(g.clone(), |x| (-(x[0] * x[0]) * 8.0).exp()).unwrap();
        let back = inverse_transform(&forward_transform(&f)).unwrap();
        let err = back
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(err < 1e-6);
    }
}
