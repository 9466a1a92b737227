//! The fractional Laplacian `(-Δ)^s` as the Fourier multiplier `|k|^{2s}`,
//! and the free-space Riesz convolution `|x|^{-μ} * h`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{self, Field, GridSpec};

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::BadOrder(s))
    }
}

/// `scale · (-Δ)^s u`, zero mode mapped to 0.
pub fn frac_laplacian(u: &Field, s: f64, scale: f64) -> Result<Field> {
    check_order(s)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::BadScale(scale));
    }
    let g = u.grid();
    let symbol = g.fractional_symbol(s, scale);
    Ok(apply_symbol(u, &symbol))
}

/// Apply a precomputed diagonal symbol (FFT order).
pub(crate) fn apply_symbol(u: &Field, symbol: &[f64]) -> Field {
    let g = u.grid();
    let out = fft::apply_real_multiplier(u.values(), g.dim(), g.points_per_axis(), symbol);
    Field::from_parts_unchecked(*g, out)
}

/// `Σ_m w_m |û_m|²` for a diagonal weight in FFT order.
pub(crate) fn weighted_energy(u: &Field, weight: &[f64]) -> f64 {
    let spec = grid::forward(u);
    spec.coeffs()
        .iter()
        .zip(weight)
        .map(|(c, w)| w * c.norm_sqr())
        .sum()
}

/// `Σ_m w_m Re(û_m conj(v̂_m))`.
pub(crate) fn weighted_bilinear(u: &Field, v: &Field, weight: &[f64]) -> f64 {
    let a = grid::forward(u);
    let b = grid::forward(v);
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .zip(weight)
        .map(|((x, y), w)| w * (x * y.conj()).re)
        .sum()
}

/// `‖(-Δ)^{s/2} u‖² = Σ |k|^{2s} |û_k|²`.
pub fn frac_seminorm_sq(u: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(weighted_energy(u, &u.grid().fractional_symbol(s, 1.0)))
}

/// Sampled `|x|^{-μ}` on the zero-padded doubled grid, origin cell replaced
/// by the exact cell average, together with its (real) spectrum.
#[derive(Debug, Clone)]
pub struct RieszKernel {
    grid: GridSpec,
    mu: f64,
    samples: Vec<f64>,
    spectrum: Vec<f64>,
    cell_average_origin: f64,
}

impl RieszKernel {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Samples on the `(2n)^N` doubled grid; offsets are in FFT wrap order
    /// (index `j ≥ n` stands for offset `j - 2n`).
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn cell_average_origin(&self) -> f64 {
        self.cell_average_origin
    }

    /// Kernel value at integer lattice offset `m` (per axis, `|m_a| ≤ n`).
    pub fn at_offset(&self, m: &[i64]) -> f64 {
        let n2 = 2 * self.grid.points_per_axis() as i64;
        let idx = |v: i64| v.rem_euclid(n2) as usize;
        match self.grid.dim() {
            1 => self.samples[idx(m[0])],
            _ => self.samples[idx(m[0]) * n2 as usize + idx(m[1])],
        }
    }
}

/// Exact average of `|x|^{-μ}` over the 1D cell `[-h/2, h/2]`.
pub fn cell_average_1d(h: f64, mu: f64) -> f64 {
    2.0 / (h * (1.0 - mu)) * (0.5 * h).powf(1.0 - mu)
}

/// Average of `|x|^{-μ}` over the square cell `[-h/2, h/2]²`, in polar
/// coordinates over the eight symmetric triangles:
/// `8/h² ∫_0^{π/4} (h/(2 cos θ))^{2-μ} / (2-μ) dθ`.
pub fn cell_average_2d(h: f64, mu: f64) -> f64 {
    let p = 2.0 - mu;
    let integrand = |th: f64| (1.0 / th.cos()).powf(p);
    let angular = adaptive_simpson(&integrand, 0.0, std::f64::consts::FRAC_PI_4, 1e-14, 40);
    8.0 / (h * h) * (0.5 * h).powf(p) / p * angular
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// Precompute the Riesz kernel for a grid. Requires `0 < μ < N`.
pub fn build_riesz_kernel(grid: &GridSpec, mu: f64) -> Result<RieszKernel> {
    let dim = grid.dim();
    if !(mu > 0.0 && mu < dim as f64) {
        return Err(Error::BadRieszExponent { mu, dim });
    }
    let n = grid.points_per_axis();
    let n2 = 2 * n;
    let h = grid.spacing();
    let origin = match dim {
        1 => cell_average_1d(h, mu),
        _ => cell_average_2d(h, mu),
    };
    let offset = |j: usize| -> f64 {
        let m = if j < n { j as i64 } else { j as i64 - n2 as i64 };
        m as f64 * h
    };
    let value = |r2: f64| if r2 == 0.0 { origin } else { r2.powf(-0.5 * mu) };
    let samples: Vec<f64> = match dim {
        1 => (0..n2).map(|j| value(offset(j).powi(2))).collect(),
        _ => {
            let mut s = Vec::with_capacity(n2 * n2);
            for a in 0..n2 {
                for b in 0..n2 {
                    s.push(value(offset(a).powi(2) + offset(b).powi(2)));
                }
            }
            s
        }
    };
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&mut buf, dim, n2, false);
    let spectrum = buf.iter().map(|c| c.re).collect();
    Ok(RieszKernel {
        grid: *grid,
        mu,
        samples,
        spectrum,
        cell_average_origin: origin,
    })
}

/// Free-space convolution `h^N Σ_y K(x - y) u(y)` on the original grid.
pub fn riesz_convolve(u: &Field, kernel: &RieszKernel) -> Result<Field> {
    if u.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(Field::from_parts_unchecked(
        *u.grid(),
        convolve_raw(u.values(), kernel),
    ))
}

pub(crate) fn convolve_raw(values: &[f64], kernel: &RieszKernel) -> Vec<f64> {
    let g = kernel.grid;
    let dim = g.dim();
    let n = g.points_per_axis();
    let n2 = 2 * n;
    let mut buf = vec![Complex64::default(); n2.pow(dim as u32)];
    match dim {
        1 => {
            for (b, v) in buf.iter_mut().zip(values) {
                b.re = *v;
            }
        }
        _ => {
            for a in 0..n {
                for (b, v) in buf[a * n2..a * n2 + n]
                    .iter_mut()
                    .zip(&values[a * n..(a + 1) * n])
                {
                    b.re = *v;
                }
            }
        }
    }
    fft::transform(&mut buf, dim, n2, false);
    for (b, k) in buf.iter_mut().zip(&kernel.spectrum) {
        *b *= *k;
    }
    fft::transform(&mut buf, dim, n2, true);
    let scale = g.cell_volume() / buf.len() as f64;
    match dim {
        1 => buf[..n].iter().map(|c| c.re * scale).collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                out.extend(buf[a * n2..a * n2 + n].iter().map(|c| c.re * scale));
            }
            out
        }
    }
}

/// `∫ (K * g) h`.
pub fn riesz_energy(g_field: &Field, h_field: &Field, kernel: &RieszKernel) -> Result<f64> {
    g_field.same_grid(h_field)?;
    let conv = riesz_convolve(g_field, kernel)?;
    conv.dot(h_field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_annihilated() {
        let g = make_grid(1, 5.0, 32).unwrap();
        let c = Field::constant(g, 3.0);
        assert!(frac_laplacian(&c, 0.4, 1.0).unwrap().linf_norm() < 1e-12);
        assert!(frac_seminorm_sq(&c, 0.4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cosine_eigenfunction() {
        let l = 5.0;
        let g = make_grid(1, l, 32).unwrap();
        let u = Field::from_fn(g, |x| (PI * x[0] / l).cos());
        let lu = frac_laplacian(&u, 0.4, 1.0).unwrap();
        let lam = (PI / l).powf(0.8);
        for (a, b) in lu.values().iter().zip(u.values()) {
            assert_abs_diff_eq!(*a, lam * b, epsilon = 1e-13);
        }
        let semi = frac_seminorm_sq(&u, 0.4).unwrap();
        assert_abs_diff_eq!(semi, lam * u.l2_norm().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn order_and_scale_errors() {
        let g = make_grid(1, 5.0, 16).unwrap();
        let u = Field::zeros(g);
        assert_eq!(frac_laplacian(&u, 1.0, 1.0), Err(Error::BadOrder(1.0)));
        assert_eq!(frac_laplacian(&u, 0.0, 1.0), Err(Error::BadOrder(0.0)));
        assert_eq!(frac_seminorm_sq(&u, -0.2), Err(Error::BadOrder(-0.2)));
        assert_eq!(frac_laplacian(&u, 0.5, 0.0), Err(Error::BadScale(0.0)));
    }

    #[test]
    fn origin_cell_average_1d() {
        assert_abs_diff_eq!(cell_average_1d(1.0, 0.5), 2.0 * 2.0_f64.sqrt(), epsilon = 1e-12);
        let g = make_grid(1, 8.0, 16).unwrap();
        let k = build_riesz_kernel(&g, 0.5).unwrap();
        assert_abs_diff_eq!(k.cell_average_origin(), 2.0 * 2.0_f64.sqrt(), epsilon = 1e-12);
        assert!(k.cell_average_origin() >= k.at_offset(&[1]));
    }

    #[test]
    fn kernel_invariants() {
        for g in [make_grid(1, 3.0, 16).unwrap(), make_grid(2, 3.0, 8).unwrap()] {
            let k = build_riesz_kernel(&g, 0.7).unwrap();
            assert!(k.samples().iter().all(|v| *v > 0.0));
            let n = g.points_per_axis() as i64;
            for m in -n + 1..n {
                if g.dim() == 1 {
                    assert_eq!(k.at_offset(&[m]), k.at_offset(&[-m]));
                } else {
                    for p in -n + 1..n {
                        assert_eq!(k.at_offset(&[m, p]), k.at_offset(&[-m, -p]));
                        assert_eq!(k.at_offset(&[m, p]), k.at_offset(&[p, m]));
                    }
                }
            }
            let nearest = if g.dim() == 1 {
                k.at_offset(&[1])
            } else {
                k.at_offset(&[1, 0])
            };
            assert!(k.cell_average_origin() >= nearest);
        }
    }

    #[test]
    fn kernel_exponent_window() {
        let g = make_grid(1, 3.0, 16).unwrap();
        assert!(matches!(
            build_riesz_kernel(&g, 1.0),
            Err(Error::BadRieszExponent { .. })
        ));
        assert!(matches!(
            build_riesz_kernel(&g, 0.0),
            Err(Error::BadRieszExponent { .. })
        ));
        let g2 = make_grid(2, 3.0, 8).unwrap();
        assert!(build_riesz_kernel(&g2, 1.5).is_ok());
    }

    #[test]
    fn convolution_of_zero_and_positive() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let k = build_riesz_kernel(&g, 0.5).unwrap();
        assert!(riesz_convolve(&Field::zeros(g), &k).unwrap().linf_norm() == 0.0);
        let mut v = vec![0.0; 32];
        v[5] = 1.0;
        let c = riesz_convolve(&Field::new(g, v).unwrap(), &k).unwrap();
        assert!(c.values().iter().all(|x| *x > 0.0));
        let other = make_grid(1, 4.0, 64).unwrap();
        assert_eq!(riesz_convolve(&Field::zeros(other), &k), Err(Error::GridMismatch));
    }
}
