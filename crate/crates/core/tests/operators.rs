use std::f64::consts::PI;

use approx::assert_relative_eq;
use choquard_core::grid::{self, forward, inverse};
use choquard_core::model::{self, Problem};
use choquard_core::nonlocal::{cell_average_1d, cell_average_2d};
use choquard_core::oracle::{self, rel_err};
use choquard_core::solver::precondition;
use choquard_core::*;

#[test]
fn gaussian_integral_is_exact_to_round_off() {
    let g = make_grid(1, 10.0, 256).unwrap();
    let u = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
    assert!((integrate(&u) - PI.sqrt()).abs() < 1e-10);
    let g2 = make_grid(2, 8.0, 128).unwrap();
    let u2 = Field::from_fn(g2, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    assert!((integrate(&u2) - PI).abs() < 1e-10);
}

#[test]
fn transform_linearity_and_round_trip() {
    for g in [make_grid(1, 5.0, 64).unwrap(), make_grid(2, 2.0, 32).unwrap()] {
        let u = oracle::random_field(g, 1, -1.0, 1.0);
        let v = oracle::random_field(g, 2, -1.0, 1.0);
        let lhs = forward(&u.axpy(2.5, &v).unwrap());
        let (fu, fv) = (forward(&u), forward(&v));
        let err = lhs
            .coeffs()
            .iter()
            .zip(fu.coeffs().iter().zip(fv.coeffs()))
            .fold(0.0_f64, |m, (l, (a, b))| m.max((l - (a + 2.5 * b)).norm()));
        assert!(err < 1e-12);
        assert!(rel_err(inverse(&fu).unwrap().values(), u.values()) < 1e-12);
        assert!((u.dot(&v).unwrap() - fu.inner(&fv).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn dense_oracles_match_on_small_grids() {
    for (g, s) in [
        (make_grid(1, 3.0, 48).unwrap(), 0.25),
        (make_grid(2, 3.0, 12).unwrap(), 0.75),
    ] {
        let u = oracle::random_field(g, 9, -1.0, 1.0);
        let fast = frac_laplacian(&u, s, 2.0).unwrap();
        assert!(rel_err(fast.values(), &oracle::dense_frac_laplacian(&u, s, 2.0)) < 1e-10);
        let back = oracle::dense_idft(&g, &oracle::dense_dft(&u));
        assert!(rel_err(&back, u.values()) < 1e-12);
    }
}

#[test]
fn cell_averages_against_independent_quadrature() {
    // 1D closed form against composite Gauss on a singular-free substitution x = r^{1/(1-μ)}
    let (h, mu): (f64, f64) = (0.3, 0.5);
    let p = 1.0 / (1.0 - mu);
    let integral = oracle::composite_gauss(
        |r| p * r.powf(p - 1.0) * r.powf(-mu * p),
        0.0,
        (0.5 * h).powf(1.0 / p),
        4,
        20,
    );
    assert_relative_eq!(cell_average_1d(h, mu), 2.0 * integral / h, max_relative = 1e-12);
    for mu in [0.2, 0.8, 1.5] {
        let a = cell_average_2d(0.25, mu);
        let b = oracle::cell_average_2d_duffy(0.25, mu);
        assert!((a - b).abs() / b < 1e-8, "mu={mu}: {a} vs {b}");
    }
}

#[test]
fn riesz_symmetry_psd_and_hls() {
    for (g, mu) in [
        (make_grid(1, 6.0, 128).unwrap(), 0.5),
        (make_grid(2, 4.0, 32).unwrap(), 1.2),
    ] {
        let k = build_riesz_kernel(&g, mu).unwrap();
        for seed in 0..5 {
            let u = oracle::random_field(g, seed, -1.0, 1.0);
            let v = oracle::random_field(g, seed + 50, -1.0, 1.0);
            let uv = riesz_energy(&u, &v, &k).unwrap();
            let vu = riesz_energy(&v, &u, &k).unwrap();
            let uu = riesz_energy(&u, &u, &k).unwrap();
            assert!((uv - vu).abs() <= 1e-10 * uu.abs().max(1.0));
            assert!(uu > 0.0);
            let pos = u.map(f64::abs);
            let t = 2.0 * g.dim() as f64 / (2.0 * g.dim() as f64 - mu);
            let lt = integrate(&pos.map(|x| x.powf(t))).powf(1.0 / t);
            let ratio = riesz_energy(&pos, &pos, &k).unwrap() / (lt * lt);
            assert!(ratio <= selftest::HLS_SAFETY * oracle::hls_sharp_constant(g.dim(), mu));
        }
    }
}

#[test]
fn hls_constant_reference_values() {
    // N = 1, μ = 0.5 (Lieb's formula); recomputed in closed form with known Γ values.
    // Γ(1/4)/Γ(3/4) · Γ(1/2)^{-1/2} · π^{1/4}
    let gamma_quarter = 3.625_609_908_221_908;
    let gamma_three_quarter = 1.225_416_702_465_178;
    let expect = PI.powf(0.25) * gamma_quarter / gamma_three_quarter * PI.sqrt().powf(-0.5);
    assert_relative_eq!(oracle::hls_sharp_constant(1, 0.5), expect, max_relative = 1e-12);
}

#[test]
fn precondition_single_mode_and_symmetry() {
    let cfg_p = selftest::standard_problem(256, 0.25);
    let (cfg, p) = cfg_p;
    let l = cfg.grid.half_length();
    let u = Field::from_fn(cfg.grid, |x| (PI * x[0] / l).cos());
    let factor = 1.0 / (cfg.eps.powf(2.0 * cfg.s) * (PI / l).powf(2.0 * cfg.s) + cfg.v0);
    let pu = precondition(&u, &p).unwrap();
    assert!(rel_err(pu.values(), u.scale(factor).values()) < 1e-12);
    assert_eq!(
        precondition(&Field::zeros(cfg.grid), &p).unwrap().linf_norm(),
        0.0
    );
    let r = oracle::random_field(cfg.grid, 4, -1.0, 1.0);
    let w = oracle::random_field(cfg.grid, 5, -1.0, 1.0);
    let a = integrate(&precondition(&r, &p).unwrap().zip_map(&w, |x, y| x * y).unwrap());
    let b = integrate(&precondition(&w, &p).unwrap().zip_map(&r, |x, y| x * y).unwrap());
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn quadratic_form_is_coercive() {
    let (cfg, p) = selftest::standard_problem(512, 0.5);
    for seed in 0..10 {
        let u = oracle::random_field(cfg.grid, seed, -1.0, 1.0);
        let q = model::norm_eps_sq(&u, &p).unwrap();
        let l2 = integrate(&u.map(|x| x * x));
        assert!(q >= cfg.v0 * l2 * (1.0 - 1e-12));
    }
}

#[test]
fn autonomous_problem_has_no_cap() {
    let g = make_grid(1, 10.0, 128).unwrap();
    let p = Problem::autonomous(1.0, 0.4, 0.5, 3.0, g).unwrap();
    let (f, _) = eval_f(&[5.0], 3.0);
    assert_eq!(p.nonlinearity(0, 5.0).0, f[0]);
}

#[test]
fn boundary_mass_and_band_limited_interpolation() {
    let g = make_grid(1, 10.0, 128).unwrap();
    let centered = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
    assert!(grid::boundary_mass_rel(&centered) < 1e-30);
    let smooth = Field::from_fn(g, |x| {
        (PI * x[0] / 10.0).sin() + 0.5 * (3.0 * PI * x[0] / 10.0).cos()
    });
    let targets = vec![vec![-3.3, 0.01, 7.77]];
    let vals = grid::interpolate_band_limited(&smooth, &targets).unwrap();
    for (t, v) in targets[0].iter().zip(vals) {
        let exact = (PI * t / 10.0).sin() + 0.5 * (3.0 * PI * t / 10.0).cos();
        assert!((v - exact).abs() < 1e-12);
    }
}
