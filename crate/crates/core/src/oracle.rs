//! Slow reference computations used to check the fast paths: dense DFTs,
//! direct `O(n²)` Riesz sums, finite differences and pure-power closed forms.
//! Nothing here calls into the FFT code.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, GridSpec};
use crate::nonlocal::RieszKernel;
use crate::parallel::{self, Exec};

/// Unitary forward coefficients `û_m` for signed modes, by direct summation
/// of `(h/sqrt(2L))^N Σ_j u_j e^{-i k_m·x_j}`; output in FFT order.
pub fn dense_dft(u: &Field) -> Vec<Complex64> {
    let g = u.grid();
    let n = g.points_per_axis();
    let c = (g.spacing() / (2.0 * g.half_length()).sqrt()).powi(g.dim() as i32);
    let k: Vec<f64> = (0..n).map(|j| g.wavenumber(j)).collect();
    let x = g.axis();
    let coeff = |m: usize| -> Complex64 {
        let [ma, mb] = g.unflatten(m);
        let mut acc = Complex64::default();
        for (i, v) in u.values().iter().enumerate() {
            let [a, b] = g.unflatten(i);
            let mut phase = k[ma] * x[a];
            if g.dim() == 2 {
                phase += k[mb] * x[b];
            }
            acc += v * Complex64::from_polar(1.0, -phase);
        }
        c * acc
    };
    parallel::map_range(parallel::global(), g.len(), coeff)
}

/// Inverse of [`dense_dft`] by direct summation; real part.
pub fn dense_idft(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let n = grid.points_per_axis();
    let c = (2.0 * grid.half_length()).powf(-(grid.dim() as f64) / 2.0);
    let k: Vec<f64> = (0..n).map(|j| grid.wavenumber(j)).collect();
    let x = grid.axis();
    parallel::map_range(parallel::global(), grid.len(), |i| {
        let [a, b] = grid.unflatten(i);
        let mut acc = Complex64::default();
        for (m, cm) in coeffs.iter().enumerate() {
            let [ma, mb] = grid.unflatten(m);
            let mut phase = k[ma] * x[a];
            if grid.dim() == 2 {
                phase += k[mb] * x[b];
            }
            acc += cm * Complex64::from_polar(1.0, phase);
        }
        c * acc.re
    })
}

/// `scale·|k|^{2s}` applied through the dense DFT pair.
pub fn dense_frac_laplacian(u: &Field, s: f64, scale: f64) -> Vec<f64> {
    let g = u.grid();
    let n = g.points_per_axis();
    let mut coeffs = dense_dft(u);
    for (m, c) in coeffs.iter_mut().enumerate() {
        let [ma, mb] = g.unflatten(m);
        let mut k2 = g.wavenumber(ma).powi(2);
        if g.dim() == 2 {
            k2 += g.wavenumber(mb).powi(2);
        }
        let _ = n;
        *c *= if k2 == 0.0 { 0.0 } else { scale * k2.powf(s) };
    }
    dense_idft(g, &coeffs)
}

/// `h^N Σ_y K(x − y) u(y)` by direct summation with the kernel's samples.
pub fn direct_convolution(u: &Field, kernel: &RieszKernel) -> Vec<f64> {
    let g = u.grid();
    let cell = g.cell_volume();
    parallel::map_range(parallel::global(), g.len(), |i| {
        let [a, b] = g.unflatten(i);
        let mut acc = 0.0;
        for (j, v) in u.values().iter().enumerate() {
            let [c, d] = g.unflatten(j);
            let off = if g.dim() == 1 {
                kernel.at_offset(&[a as i64 - c as i64])
            } else {
                kernel.at_offset(&[a as i64 - c as i64, b as i64 - d as i64])
            };
            acc += off * v;
        }
        cell * acc
    })
}

/// `h^{2N} Σ_x Σ_y g(x) K(x − y) h(y)`.
pub fn direct_riesz_energy(gf: &Field, hf: &Field, kernel: &RieszKernel) -> f64 {
    let conv = direct_convolution(gf, kernel);
    gf.grid().cell_volume() * conv.iter().zip(hf.values()).map(|(a, b)| a * b).sum::<f64>()
}

/// Central difference `(φ(δ) − φ(−δ)) / 2δ`.
pub fn central_difference(phi: impl Fn(f64) -> f64, delta: f64) -> f64 {
    (phi(delta) - phi(-delta)) / (2.0 * delta)
}

/// Root of `tQ − q t^{2q-1} D`: the Nehari scaling of a pure power.
pub fn pure_power_fiber_root(quad: f64, d: f64, q: f64) -> f64 {
    (quad / (q * d)).powf(1.0 / (2.0 * q - 2.0))
}

/// `J(t* u) = (½ − 1/(2q)) Q t*²` on the pure-power Nehari manifold.
pub fn pure_power_nehari_energy(quad: f64, t_star: f64, q: f64) -> f64 {
    (0.5 - 0.5 / q) * quad * t_star * t_star
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Composite Gauss–Legendre quadrature of `f` on `[a, b]`.
pub fn composite_gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let hp = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * hp;
            let mid = lo + 0.5 * hp;
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(mid + 0.5 * hp * xi))
                .sum::<f64>()
                * 0.5
                * hp
        })
        .sum()
}

/// Average of `|x|^{-μ}` over `[-h/2, h/2]²` by the Duffy substitution
/// `y = x t` on the triangle `0 ≤ y ≤ x ≤ h/2`:
/// `8/h² · (h/2)^{2-μ}/(2-μ) · ∫_0^1 (1+t²)^{-μ/2} dt`.
pub fn cell_average_2d_duffy(h: f64, mu: f64) -> f64 {
    let inner = composite_gauss(|t| (1.0 + t * t).powf(-0.5 * mu), 0.0, 1.0, 8, 20);
    8.0 / (h * h) * (0.5 * h).powf(2.0 - mu) / (2.0 - mu) * inner
}

/// Deterministic uniform random field on `[lo, hi)`.
pub fn random_field(grid: GridSpec, seed: u64, lo: f64, hi: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| rng.random_range(lo..hi)).collect();
    Field::new(grid, values).expect("finite samples")
}

/// Smooth random bump: a few random Gaussians, nonnegative.
pub fn random_bumps(grid: GridSpec, seed: u64, amplitude: f64, width: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_length();
    let bumps: Vec<(Vec<f64>, f64)> = (0..3)
        .map(|_| {
            let c = (0..grid.dim())
                .map(|_| rng.random_range(-0.3 * l..0.3 * l))
                .collect();
            (c, rng.random_range(0.2..1.0) * amplitude)
        })
        .collect();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, a)| {
                let r2: f64 = x.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum();
                a * (-r2 / (width * width)).exp()
            })
            .sum()
    })
}

/// Max relative error `max|a−b| / max|b|`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let err = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Run `f` for each of `count` seeds, in parallel when enabled.
pub fn for_seeds<R: Send>(exec: Exec, base: u64, count: usize, f: impl Fn(u64) -> R + Sync + Send) -> Vec<R> {
    parallel::map_range(exec, count, |i| f(base + i as u64))
}

/// Sharp Hardy–Littlewood–Sobolev constant for the diagonal case
/// `r = t = 2N/(2N − μ)` (Lieb):
/// `π^{μ/2} Γ(N/2 − μ/2)/Γ(N − μ/2) · (Γ(N/2)/Γ(N))^{μ/N − 1}`.
pub fn hls_sharp_constant(dim: usize, mu: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let n = dim as f64;
    std::f64::consts::PI.powf(0.5 * mu) * gamma(0.5 * n - 0.5 * mu) / gamma(n - 0.5 * mu)
        * (gamma(0.5 * n) / gamma(n)).powf(mu / n - 1.0)
}
