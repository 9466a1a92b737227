//! Uniform periodic-box grids, real fields, spectral transforms, quadrature
//! and point queries.
//!
//! The box is `[-L, L)^N` sampled at `x_j = -L + j h`, `h = 2L / n`.
//! Spectral coefficients use the unitary Fourier-series convention
//!
//! ```text
//! û_m = (2L)^{-N/2} ∫ u(x) e^{-i k_m·x} dx  ≈  (h / sqrt(2L))^N Σ_j u_j e^{-i k_m·x_j},
//! u_j = (2L)^{-N/2} Σ_m û_m e^{i k_m·x_j},         k_m = π m / L,  m ∈ [-n/2, n/2),
//! ```
//!
//! so that `Σ_m û_m conj(v̂_m) = h^N Σ_j u_j v_j` exactly (Plancherel). Every
//! Fourier multiplier in this crate is stated against this convention; since
//! multipliers are diagonal, the normalization cancels in them.
//! Coefficient buffers are stored in FFT order (non-negative `m` first).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// A point of `R^N`, `N` = grid dimension.
pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    dim: usize,
    half_length: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    dim: usize,
    half_length: f64,
    points_per_axis: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        make_grid(r.dim, r.half_length, r.points_per_axis)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            dim: g.dim,
            half_length: g.half_length,
            points_per_axis: g.n,
        }
    }
}

/// Build a validated grid on `[-half_length, half_length]^dim`.
pub fn make_grid(dim: usize, half_length: f64, points_per_axis: usize) -> Result<GridSpec> {
    if !(1..=2).contains(&dim) {
        return Err(Error::UnsupportedDim(dim));
    }
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::BadHalfLength(half_length));
    }
    if points_per_axis < 8 || !points_per_axis.is_multiple_of(2) {
        return Err(Error::BadPointCount(points_per_axis));
    }
    Ok(GridSpec {
        dim,
        half_length,
        n: points_per_axis,
    })
}

impl GridSpec {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Mesh width `h = 2L/n`, always derived.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Cell volume `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of axis index `j`.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// All axis coordinates.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Per-axis indices of a flat row-major index.
    pub fn unflatten(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i / self.n, i % self.n]
        }
    }

    pub fn point(&self, i: usize) -> Point {
        let idx = self.unflatten(i);
        (0..self.dim).map(|a| self.coord(idx[a])).collect()
    }

    /// Signed frequency index of FFT-order position `j` on one axis.
    pub fn signed_mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavenumber `π m / L` of FFT-order position `j` on one axis.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.signed_mode(j) as f64 / self.half_length
    }

    /// Per-axis wavenumbers in ascending order `m = -n/2 .. n/2-1`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as i64;
        (-n / 2..n / 2)
            .map(|m| std::f64::consts::PI * m as f64 / self.half_length)
            .collect()
    }

    /// `|k|` for every coefficient, FFT order, row-major.
    pub fn abs_wavenumbers(&self) -> Vec<f64> {
        let k: Vec<f64> = (0..self.n).map(|j| self.wavenumber(j)).collect();
        match self.dim {
            1 => k.iter().map(|v| v.abs()).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for a in &k {
                    for b in &k {
                        out.push((a * a + b * b).sqrt());
                    }
                }
                out
            }
        }
    }

    /// Diagonal symbol `scale·|k|^{2s}` in FFT order (zero mode maps to 0).
    pub fn fractional_symbol(&self, s: f64, scale: f64) -> Vec<f64> {
        self.abs_wavenumbers()
            .into_iter()
            .map(|k| if k == 0.0 { 0.0 } else { scale * k.powf(2.0 * s) })
            .collect()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Real samples on a grid. Values are finite and match the grid shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Field {
            values: vec![c; grid.len()],
            grid,
        }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn from_parts_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Field { grid, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field::from_parts_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn positive_part(&self) -> Field {
        self.map(|v| v.max(0.0))
    }

    /// `h^N Σ u v`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.cell_volume() * dot(&self.values, &other.values))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * dot(&self.values, &self.values)).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Cyclic shift by `shift[a]` samples along each axis.
    pub fn roll(&self, shift: [i64; 2]) -> Field {
        let n = self.grid.n;
        let wrap = |j: usize, s: i64| ((j as i64 + s).rem_euclid(n as i64)) as usize;
        let mut out = vec![0.0; self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            let [a, b] = self.grid.unflatten(i);
            let dst = if self.grid.dim == 1 {
                wrap(a, shift[0])
            } else {
                wrap(a, shift[0]) * n + wrap(b, shift[1])
            };
            out[dst] = *v;
        }
        Field::from_parts_unchecked(self.grid, out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Fourier coefficients in FFT order under the unitary convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn fft_index(&self, m: i64) -> usize {
        let n = self.grid.n as i64;
        m.rem_euclid(n) as usize
    }

    /// Coefficient for signed mode indices (one per axis).
    pub fn mode(&self, m: &[i64]) -> Complex64 {
        match self.grid.dim {
            1 => self.coeffs[self.fft_index(m[0])],
            _ => self.coeffs[self.fft_index(m[0]) * self.grid.n + self.fft_index(m[1])],
        }
    }

    /// `Σ_m a_m conj(b_m)`, real part.
    pub fn inner(&self, other: &Spectrum) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }
}

/// Phase `(-1)^{m_1 + m_2}` that moves the DFT origin from `x = -L` to `x = 0`.
fn phase_sign(grid: &GridSpec, i: usize) -> f64 {
    let [a, b] = grid.unflatten(i);
    let mut m = grid.signed_mode(a);
    if grid.dim == 2 {
        m += grid.signed_mode(b);
    }
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Forward or inverse unitary transform of a raw coefficient buffer.
pub fn spectral_transform(
    grid: &GridSpec,
    data: &[Complex64],
    direction: Direction,
) -> Result<Vec<Complex64>> {
    grid.check_len(data.len())?;
    let mut buf = data.to_vec();
    let two_l = 2.0 * grid.half_length;
    match direction {
        Direction::Forward => {
            fft::transform(&mut buf, grid.dim, grid.n, false);
            let c = (grid.spacing() / two_l.sqrt()).powi(grid.dim as i32);
            for (i, v) in buf.iter_mut().enumerate() {
                *v *= c * phase_sign(grid, i);
            }
        }
        Direction::Inverse => {
            for (i, v) in buf.iter_mut().enumerate() {
                *v *= phase_sign(grid, i);
            }
            fft::transform(&mut buf, grid.dim, grid.n, true);
            let c = two_l.powf(-(grid.dim as f64) / 2.0);
            for v in buf.iter_mut() {
                *v *= c;
            }
        }
    }
    Ok(buf)
}

pub fn forward(u: &Field) -> Spectrum {
    let data: Vec<Complex64> = u.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let coeffs = spectral_transform(&u.grid, &data, Direction::Forward).expect("shape checked");
    Spectrum { grid: u.grid, coeffs }
}

/// Inverse transform, keeping the real part (exact for Hermitian spectra).
pub fn inverse(spec: &Spectrum) -> Result<Field> {
    let data = spectral_transform(&spec.grid, &spec.coeffs, Direction::Inverse)?;
    Field::new(spec.grid, data.into_iter().map(|c| c.re).collect())
}

/// `h^N Σ u` (rectangle rule = trapezoid rule on the periodic grid).
pub fn integrate(u: &Field) -> f64 {
    u.grid.cell_volume() * u.values.iter().sum::<f64>()
}

/// Grid point of the maximum value; ties go to the lowest flat index.
pub fn argmax_point(u: &Field) -> (Point, f64) {
    let (i, v) = argmax_index(u);
    (u.grid.point(i), v)
}

pub fn argmax_index(u: &Field) -> (usize, f64) {
    let mut best = (0, u.values[0]);
    for (i, &v) in u.values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Width of the boundary layer used by [`boundary_mass_rel`], in cells.
pub const BOUNDARY_LAYER_CELLS: usize = 4;

/// Relative threshold above which the truncation of `R^N` to the box is flagged.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;

/// `∫_{dist(x, ∂box) < 4h} u² / ∫ u²`; zero for the zero field.
pub fn boundary_mass_rel(u: &Field) -> f64 {
    let g = &u.grid;
    let n = g.n;
    let near = |j: usize| j < BOUNDARY_LAYER_CELLS || n - j < BOUNDARY_LAYER_CELLS;
    let (mut edge, mut total) = (0.0, 0.0);
    for (i, v) in u.values.iter().enumerate() {
        let [a, b] = g.unflatten(i);
        let sq = v * v;
        total += sq;
        if near(a) || (g.dim == 2 && near(b)) {
            edge += sq;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

/// Evaluate the band-limited (trigonometric) interpolant of `u` on the
/// tensor product of per-axis target coordinates. Output is row-major over
/// the target axes. The Nyquist mode enters as a cosine so that the
/// interpolant is real.
pub fn interpolate_band_limited(u: &Field, targets: &[Vec<f64>]) -> Result<Vec<f64>> {
    let g = u.grid;
    if targets.len() != g.dim {
        return Err(Error::UnsupportedDim(targets.len()));
    }
    let l = g.half_length;
    for t in targets.iter().flatten() {
        if t.abs() > l {
            return Err(Error::InterpolationRange {
                needed: t.abs(),
                available: l,
            });
        }
    }
    let spec = forward(u);
    let n = g.n;
    let norm = (2.0 * l).powf(-(g.dim as f64) / 2.0);
    // basis[j][m]: value of mode m (FFT order) at target j on one axis
    let basis = |zs: &[f64]| -> Vec<Vec<Complex64>> {
        zs.iter()
            .map(|&z| {
                (0..n)
                    .map(|j| {
                        let k = g.wavenumber(j);
                        if g.signed_mode(j) == -(n as i64) / 2 {
                            Complex64::new((k * z).cos(), 0.0)
                        } else {
                            Complex64::from_polar(1.0, k * z)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let c = spec.coeffs();
    match g.dim {
        1 => {
            let e = basis(&targets[0]);
            Ok(e.iter()
                .map(|row| norm * row.iter().zip(c).map(|(b, a)| (b * a).re).sum::<f64>())
                .collect())
        }
        _ => {
            let ex = basis(&targets[0]);
            let ey = basis(&targets[1]);
            // partial[i][l] = Σ_m ex[i][m] c[m][l]
            let mut out = Vec::with_capacity(ex.len() * ey.len());
            for rx in &ex {
                let mut partial = vec![Complex64::default(); n];
                for (m, bx) in rx.iter().enumerate() {
                    let row = &c[m * n..(m + 1) * n];
                    for (p, a) in partial.iter_mut().zip(row) {
                        *p += bx * a;
                    }
                }
                for ry in &ey {
                    let v: Complex64 = ry.iter().zip(&partial).map(|(b, p)| b * p).sum();
                    out.push(norm * v.re);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_arithmetic() {
        let g = make_grid(1, 10.0, 16).unwrap();
        assert_eq!(g.spacing(), 1.25);
        let f = g.frequencies();
        assert_eq!(f.len(), 16);
        assert_abs_diff_eq!(f[0], -8.0 * PI / 10.0);
        assert_abs_diff_eq!(f[15], 7.0 * PI / 10.0);
        let g2 = make_grid(2, 5.0, 8).unwrap();
        assert_eq!(g2.len(), 64);
        assert_eq!(g2.spacing(), 1.25);
    }

    #[test]
    fn grid_rejections() {
        assert_eq!(make_grid(3, 10.0, 16), Err(Error::UnsupportedDim(3)));
        assert_eq!(make_grid(1, 10.0, 15), Err(Error::BadPointCount(15)));
        assert_eq!(make_grid(1, 10.0, 6), Err(Error::BadPointCount(6)));
        assert!(matches!(make_grid(1, 0.0, 16), Err(Error::BadHalfLength(_))));
        assert!(matches!(make_grid(1, -1.0, 16), Err(Error::BadHalfLength(_))));
    }

    #[test]
    fn constant_spectrum_is_zero_mode() {
        let g = make_grid(1, 3.0, 16).unwrap();
        let s = forward(&Field::constant(g, 2.0));
        assert!((s.mode(&[0]).re - 2.0 * 6.0_f64.sqrt()).abs() < 1e-12);
        for j in 1..16 {
            assert!(s.coeffs()[j].norm() < 1e-12);
        }
        let g2 = make_grid(2, 3.0, 8).unwrap();
        let s2 = forward(&Field::constant(g2, 1.5));
        assert!((s2.mode(&[0, 0]).re - 1.5 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_has_two_modes() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let u = Field::from_fn(g, |x| (PI * x[0] / 4.0).cos());
        let s = forward(&u);
        for j in 0..32 {
            let m = g.signed_mode(j);
            let c = s.coeffs()[j].norm();
            if m.abs() == 1 {
                assert!(c > 0.1);
            } else {
                assert!(c < 1e-12, "mode {m} = {c}");
            }
        }
    }

    #[test]
    fn integrate_examples() {
        let g = make_grid(1, 10.0, 64).unwrap();
        assert_abs_diff_eq!(integrate(&Field::constant(g, 1.0)), 20.0, epsilon = 1e-12);
        let odd = Field::from_fn(g, |x| x[0].powi(3) * (-x[0] * x[0]).exp());
        // x = -L sample has no mirror on the periodic grid; it carries ~0 mass here
        assert!(integrate(&odd).abs() < 1e-12);
    }

    #[test]
    fn argmax_rules() {
        let g = make_grid(1, 10.0, 16).unwrap();
        let (p, v) = argmax_point(&Field::constant(g, 1.0));
        assert_eq!(p, vec![-10.0]);
        assert_eq!(v, 1.0);
        let mut vals = vec![0.0; 16];
        vals[3] = 5.0;
        vals[9] = 5.0;
        let (p, _) = argmax_point(&Field::new(g, vals).unwrap());
        assert_eq!(p, vec![g.coord(3)]);
        let peak = Field::from_fn(g, |x| -(x[0] - 2.5).powi(2));
        let (p, v) = argmax_point(&peak);
        assert_eq!(p, vec![2.5]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn field_validation() {
        let g = make_grid(1, 1.0, 8).unwrap();
        assert!(matches!(
            Field::new(g, vec![0.0; 7]),
            Err(Error::ShapeMismatch { .. })
        ));
        let mut v = vec![0.0; 8];
        v[2] = f64::NAN;
        assert_eq!(Field::new(g, v), Err(Error::NonFinite(2)));
        assert!(spectral_transform(&g, &[Complex64::default(); 9], Direction::Forward).is_err());
    }

    #[test]
    fn roll_moves_peak() {
        let g = make_grid(2, 1.0, 8).unwrap();
        let mut v = vec![0.0; 64];
        v[8 + 2] = 1.0;
        let r = Field::new(g, v).unwrap().roll([3, -1]);
        assert_eq!(r.values()[4 * 8 + 1], 1.0);
    }

    #[test]
    fn boundary_mass_of_localized_and_flat_fields() {
        let g = make_grid(1, 10.0, 128).unwrap();
        let bump = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        assert!(boundary_mass_rel(&bump) < 1e-30);
        let flat = Field::constant(g, 1.0);
        assert_abs_diff_eq!(boundary_mass_rel(&flat), 7.0 / 128.0, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_reproduces_trig_polynomial() {
        let g = make_grid(2, 3.0, 16).unwrap();
        let f = |x: f64, y: f64| 1.0 + (PI * x / 3.0).cos() * (2.0 * PI * y / 3.0).sin();
        let u = Field::from_fn(g, |p| f(p[0], p[1]));
        let tx = vec![-2.9, 0.1234, 1.7];
        let ty = vec![0.0, 2.2];
        let vals = interpolate_band_limited(&u, &[tx.clone(), ty.clone()]).unwrap();
        for (i, x) in tx.iter().enumerate() {
            for (j, y) in ty.iter().enumerate() {
                assert_abs_diff_eq!(vals[i * 2 + j], f(*x, *y), epsilon = 1e-12);
            }
        }
        assert!(interpolate_band_limited(&u, &[vec![3.5], vec![0.0]]).is_err());
    }
}
