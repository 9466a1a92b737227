//! Operator oracle suite behind the `selftest` subcommand. Each check pairs
//! a fast path with an independent route from [`crate::oracle`].

use serde::Serialize;

use crate::energy;
use crate::grid::{self, make_grid, Direction, Field};
use crate::model::{self, ModelParams, PotentialSpec, Problem, RegionSpec};
use crate::nonlocal::{self, build_riesz_kernel};
use crate::oracle::{self, rel_err};
use crate::parallel::Exec;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }
}

/// Multiple of the sharp HLS constant accepted for discrete fields.
pub const HLS_SAFETY: f64 = 2.0;

/// Standard 1D scenario (wells ±2, `Λ = (−4, 4)`) on a small grid.
pub fn standard_problem(n: usize, eps: f64) -> (model::ModelConfig, Problem) {
    let cfg = model::validate_config(&ModelParams {
        s: 0.4,
        mu: 0.5,
        q: 3.0,
        eps,
        potential: PotentialSpec::product_well(1.0, 2.0, 1.0, vec![vec![-2.0], vec![2.0]]),
        region: Some(RegionSpec::Box {
            center: vec![0.0],
            half_extents: vec![4.0],
        }),
        ell: 10.0,
        delta: None,
        grid: make_grid(1, 12.0, n).expect("valid grid"),
    })
    .expect("standard scenario is valid");
    let p = Problem::from_config(&cfg);
    (cfg, p)
}

pub fn transform_checks(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let grids = [make_grid(1, 7.0, 64).unwrap(), make_grid(2, 3.0, 16).unwrap()];
    let mut round = 0.0_f64;
    let mut dft = 0.0_f64;
    let mut lap = 0.0_f64;
    let mut plancherel = 0.0_f64;
    for (gi, g) in grids.iter().enumerate() {
        let u = oracle::random_field(*g, seed + gi as u64, -1.0, 1.0);
        let v = oracle::random_field(*g, seed + 10 + gi as u64, -1.0, 1.0);
        let spec = grid::forward(&u);
        let back = grid::inverse(&spec).unwrap();
        round = round.max(rel_err(back.values(), u.values()));
        let dense = oracle::dense_dft(&u);
        let scale = dense.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let err = spec
            .coeffs()
            .iter()
            .zip(&dense)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        dft = dft.max(err / scale);
        let fast = nonlocal::frac_laplacian(&u, 0.4, 0.7).unwrap();
        lap = lap.max(rel_err(
            fast.values(),
            &oracle::dense_frac_laplacian(&u, 0.4, 0.7),
        ));
        let lhs = u.dot(&v).unwrap();
        let rhs = spec.inner(&grid::forward(&v)).unwrap();
        plancherel = plancherel.max((lhs - rhs).abs() / (u.l2_norm() * v.l2_norm()));
        // complex round trip through the raw interface
        let raw: Vec<_> = u
            .values()
            .iter()
            .map(|x| num_complex::Complex64::new(*x, 0.0))
            .collect();
        let f = grid::spectral_transform(g, &raw, Direction::Forward).unwrap();
        let b = grid::spectral_transform(g, &f, Direction::Inverse).unwrap();
        let re: Vec<f64> = b.iter().map(|c| c.re).collect();
        round = round.max(rel_err(&re, u.values()));
    }
    out.push(Check::at_most("transform round trip", round, 1e-12));
    out.push(Check::at_most("FFT vs dense DFT", dft, 1e-12));
    out.push(Check::at_most("frac_laplacian vs dense multiplier", lap, 1e-12));
    out.push(Check::at_most("Plancherel", plancherel, 1e-10));
    out
}

pub fn fractional_checks(seed: u64) -> Vec<Check> {
    let g = make_grid(1, 5.0, 64).unwrap();
    let g2 = make_grid(2, 4.0, 32).unwrap();
    let mut consistency = 0.0_f64;
    let mut adjoint = 0.0_f64;
    for (i, grid) in [g, g2].iter().enumerate() {
        let u = oracle::random_field(*grid, seed + 20 + i as u64, -1.0, 1.0);
        let v = oracle::random_field(*grid, seed + 30 + i as u64, -1.0, 1.0);
        let au = nonlocal::frac_laplacian(&u, 0.3, 1.0).unwrap();
        let av = nonlocal::frac_laplacian(&v, 0.3, 1.0).unwrap();
        let semi = nonlocal::frac_seminorm_sq(&u, 0.3).unwrap();
        let quad = grid::integrate(&u.zip_map(&au, |a, b| a * b).unwrap());
        consistency = consistency.max((semi - quad).abs() / semi);
        let l = v.dot(&au).unwrap();
        let r = u.dot(&av).unwrap();
        adjoint = adjoint.max((l - r).abs() / (au.l2_norm() * v.l2_norm()));
    }
    vec![
        Check::at_most("seminorm vs integrate(u (-Δ)^s u)", consistency, 1e-10),
        Check::at_most("fractional Laplacian self-adjointness", adjoint, 1e-10),
    ]
}

pub fn riesz_checks(seed: u64) -> Vec<Check> {
    let mut conv = 0.0_f64;
    let mut energy = 0.0_f64;
    let mut symmetry = 0.0_f64;
    let mut psd = f64::INFINITY;
    let mut hls = 0.0_f64;
    let cases = [
        (make_grid(1, 6.0, 64).unwrap(), 0.5),
        (make_grid(1, 6.0, 32).unwrap(), 0.3),
        (make_grid(2, 3.0, 16).unwrap(), 0.8),
    ];
    for (i, (g, mu)) in cases.iter().enumerate() {
        let k = build_riesz_kernel(g, *mu).unwrap();
        let u = oracle::random_field(*g, seed + 40 + i as u64, -1.0, 1.0);
        let v = oracle::random_field(*g, seed + 50 + i as u64, -1.0, 1.0);
        let fast = nonlocal::riesz_convolve(&u, &k).unwrap();
        conv = conv.max(rel_err(fast.values(), &oracle::direct_convolution(&u, &k)));
        let e = nonlocal::riesz_energy(&u, &v, &k).unwrap();
        let d = oracle::direct_riesz_energy(&u, &v, &k);
        let scale = nonlocal::riesz_energy(&u, &u, &k)
            .unwrap()
            .abs()
            .max(nonlocal::riesz_energy(&v, &v, &k).unwrap().abs());
        energy = energy.max((e - d).abs() / scale);
        let e2 = nonlocal::riesz_energy(&v, &u, &k).unwrap();
        symmetry = symmetry.max((e - e2).abs() / scale);
        psd = psd.min(nonlocal::riesz_energy(&u, &u, &k).unwrap());
        let pos = oracle::random_field(*g, seed + 60 + i as u64, 0.0, 1.0);
        let n = g.dim() as f64;
        let t = 2.0 * n / (2.0 * n - mu);
        let lt = (g.cell_volume() * pos.values().iter().map(|x| x.powf(t)).sum::<f64>()).powf(1.0 / t);
        let ratio = nonlocal::riesz_energy(&pos, &pos, &k).unwrap() / (lt * lt);
        hls = hls.max(ratio / (HLS_SAFETY * oracle::hls_sharp_constant(g.dim(), *mu)));
    }
    let h = 0.25;
    let polar = nonlocal::cell_average_2d(h, 0.8);
    let duffy = oracle::cell_average_2d_duffy(h, 0.8);
    vec![
        Check::at_most("riesz_convolve vs direct sum", conv, 1e-10),
        Check::at_most("riesz_energy vs direct double sum", energy, 1e-10),
        Check::at_most("Riesz bilinear symmetry", symmetry, 1e-10),
        Check::at_most("Riesz form positive semidefinite (-min)", -psd, 1e-12),
        Check::at_most("HLS ratio / (2 x sharp constant)", hls, 1.0),
        Check::at_most(
            "2D origin cell average: polar vs Duffy",
            (polar - duffy).abs() / duffy,
            1e-8,
        ),
    ]
}

/// Worst relative error of central differences against `grad_j` over `pairs` random pairs.
pub fn gradient_check(seed: u64, pairs: usize, exec: Exec) -> f64 {
    let (_, p) = standard_problem(256, 0.5);
    let k = build_riesz_kernel(&p.grid, p.mu).unwrap();
    let errs = oracle::for_seeds(exec, seed + 100, pairs, |sd| {
        let u = oracle::random_bumps(p.grid, sd, 0.8, 0.7)
            .axpy(0.05, &oracle::random_field(p.grid, sd + 1000, -1.0, 1.0))
            .unwrap();
        let v = oracle::random_field(p.grid, sd + 2000, -1.0, 1.0);
        let grad = energy::grad_j(&u, &p, &k).unwrap();
        let analytic = grad.dot(&v).unwrap();
        let fd = oracle::central_difference(
            |d| energy::j_eps(&u.axpy(d, &v).unwrap(), &p, &k).unwrap().total,
            1e-5,
        );
        (fd - analytic).abs() / analytic.abs().max(1e-300)
    });
    errs.into_iter().fold(0.0, f64::max)
}

/// Closed-form Nehari checks on the autonomous pure power: bracketed root vs
/// `(Q/(qD))^{1/(2q-2)}`, ray invariance, and `J(t*u) = (½ − 1/(2q)) Q t*²`.
pub fn nehari_checks(seed: u64) -> Vec<Check> {
    let g = make_grid(1, 10.0, 256).unwrap();
    let p = Problem::autonomous(1.0, 0.4, 0.5, 3.0, g).unwrap();
    let k = build_riesz_kernel(&g, 0.5).unwrap();
    let u = oracle::random_bumps(g, seed + 200, 1.0, 1.0);
    let quad = model::norm_eps_sq(&u, &p).unwrap();
    let (_, big_f) = model::eval_f(u.values(), p.q);
    let d = p.coupling
        * nonlocal::riesz_energy(
            &Field::new(g, big_f.clone()).unwrap(),
            &Field::new(g, big_f).unwrap(),
            &k,
        )
        .unwrap();
    let t_star = oracle::pure_power_fiber_root(quad, d, p.q);
    let bis = energy::nehari_project_bracketed(&u, &p, &k).unwrap();
    let root_err = (bis.t - t_star).abs() / t_star;
    let mut ray = 0.0_f64;
    for c in [0.1, 1.0, 10.0] {
        let pc = energy::nehari_project_bracketed(&u.scale(c), &p, &k).unwrap();
        ray = ray.max(pc.projected.sub(&bis.projected).unwrap().l2_norm() / bis.projected.l2_norm());
    }
    let e = energy::j_eps(&bis.projected, &p, &k).unwrap().total;
    let closed = oracle::pure_power_nehari_energy(quad, t_star, p.q);
    let fixed = energy::nehari_project_bracketed(&bis.projected, &p, &k).unwrap();
    vec![
        Check::at_most("Nehari root vs closed form", root_err, 1e-9),
        Check::at_most("Nehari ray invariance", ray, 1e-9),
        Check::at_most("Nehari energy identity", (e - closed).abs() / closed.abs(), 1e-9),
        Check::at_most("Nehari fixed point t = 1", (fixed.t - 1.0).abs(), 1e-9),
    ]
}

/// Penalization laws on an `(x, t)` lattice of the standard scenario.
pub fn penalization_checks() -> Vec<Check> {
    let (cfg, p) = standard_problem(1000, 0.5);
    let a = cfg.pen.a;
    let slope = cfg.v0 / cfg.pen.ell;
    let ts: Vec<f64> = (1..=1000).map(|j| 1e-3 * j as f64 * 5.0 * a).collect();
    let xs: Vec<usize> = (0..cfg.grid.len())
        .step_by(cfg.grid.len() / 1000)
        .take(1000)
        .collect();
    let mut worst = 0.0_f64;
    let mut monotone = true;
    for &i in &xs {
        let (f_vals, _) = model::eval_f(&ts, p.q);
        let mut prev_ratio = 0.0;
        for (t, f) in ts.iter().zip(&f_vals) {
            let (g, big_g) = p.nonlinearity(i, *t);
            let tol = 1e-14 * (g * t).max(1e-300);
            worst = worst.max(g - f);
            if p.inside[i] {
                worst = worst.max(4.0 * big_g - 2.0 * g * t - tol);
            } else {
                worst = worst.max(g * t - slope * t * t - tol);
                worst = worst.max(2.0 * big_g - g * t - tol);
            }
            let ratio = g / t;
            if ratio < prev_ratio * (1.0 - 1e-14) {
                monotone = false;
            }
            prev_ratio = ratio;
        }
    }
    let outside = 0;
    let h = 1e-9;
    let left = p.nonlinearity(outside, a - h).0;
    let right = p.nonlinearity(outside, a + h).0;
    let cont = (left - slope * a).abs().max((right - slope * a).abs());
    let mut fd = 0.0_f64;
    for j in 1..200 {
        let t = 0.01 * j as f64 * a;
        let dt = 1e-6 * a;
        let d = (p.nonlinearity(outside, t + dt).1 - p.nonlinearity(outside, t - dt).1) / (2.0 * dt);
        fd = fd.max((d - p.nonlinearity(outside, t).0).abs());
    }
    vec![
        Check::at_most("g <= f and (g3) inequalities (max violation)", worst, 0.0),
        Check::at_most(
            "g(x,t)/t nondecreasing (0 = ok)",
            if monotone { 0.0 } else { 1.0 },
            0.0,
        ),
        Check::at_most("continuity of capped f at a", cont, 1e-8),
        Check::at_most("capped F' = capped f by differences", fd, 1e-6),
    ]
}

/// Every check of the suite.
pub fn run(seed: u64, exec: Exec) -> Vec<Check> {
    let mut out = transform_checks(seed);
    out.extend(fractional_checks(seed));
    out.extend(riesz_checks(seed));
    out.push(Check::at_most(
        "gradient vs central differences (10 pairs)",
        gradient_check(seed, 10, exec),
        1e-6,
    ));
    out.extend(nehari_checks(seed));
    out.extend(penalization_checks());
    out
}
