use choquard_core::model::{ModelParams, Problem};
use choquard_core::solver::{
    autonomous_ground_state_from, certify, cluster_solutions, gaussian_seed, multistart_from_points,
    relative_distance,
};
use choquard_core::*;

fn options() -> SolverOptions {
    SolverOptions::default()
}

fn autonomous_w() -> Field {
    let g = make_grid(1, 24.0, 1024).unwrap();
    autonomous_ground_state(1.0, 0.4, 0.5, 3.0, g, &options())
        .unwrap()
        .w
}

fn single_well(eps: f64, n: usize) -> (ModelConfig, Problem) {
    let cfg = validate_config(&ModelParams {
        s: 0.4,
        mu: 0.5,
        q: 3.0,
        eps,
        potential: PotentialSpec::product_well(1.0, 2.0, 1.0, vec![vec![0.0]]),
        region: Some(RegionSpec::Ball {
            center: vec![0.0],
            radius: 3.0,
        }),
        ell: 10.0,
        delta: None,
        grid: make_grid(1, 12.0, n).unwrap(),
    })
    .unwrap();
    let p = Problem::from_config(&cfg);
    (cfg, p)
}

#[test]
fn descent_is_monotone_and_certified() {
    let (cfg, p) = selftest::standard_problem(1024, 0.5);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let seed = build_concentrating_seed(&[2.0], &autonomous_w(), &cfg, &p, &k).unwrap();
    let res = minimize_ground_state(&seed.phi, &p, &k, &options()).unwrap();
    assert!(res.converged);
    assert!(res.decreases.iter().all(|d| *d <= 0.0));
    assert!(res
        .energy_trace
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
    assert!(res.report.nehari_residual_rel <= options().tol_nehari);
    assert!(res.report.all_pass());
    assert!(res.u.min_value() > 0.0);
    assert!((res.argmax[0] - 2.0).abs() < 0.5);
    // certificate closure: recomputation agrees exactly
    let again = verify_solution(&res, &p, &k).unwrap();
    assert_eq!(again, res.report);
}

#[test]
fn scale_robustness() {
    let (cfg, p) = selftest::standard_problem(512, 0.5);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let seed = build_concentrating_seed(&[-2.0], &autonomous_w(), &cfg, &p, &k).unwrap();
    let base = minimize_ground_state(&seed.phi, &p, &k, &options()).unwrap();
    for c in [0.5, 2.0] {
        let r = minimize_ground_state(&seed.phi.scale(c), &p, &k, &options()).unwrap();
        assert!(r.converged);
        assert!(relative_distance(&r.u, &base.u).unwrap() <= options().cluster_radius);
    }
}

#[test]
fn dead_seed_is_an_error() {
    let (cfg, p) = selftest::standard_problem(256, 0.5);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let neg = Field::constant(cfg.grid, -0.3);
    assert_eq!(
        minimize_ground_state(&neg, &p, &k, &options()).unwrap_err(),
        Error::DeadSeed
    );
    assert_eq!(
        minimize_ground_state(&Field::zeros(cfg.grid), &p, &k, &options()).unwrap_err(),
        Error::DeadSeed
    );
}

#[test]
fn autonomous_ground_state_is_seed_independent() {
    let g = make_grid(1, 24.0, 1024).unwrap();
    let a = autonomous_ground_state_from(&gaussian_seed(g, 1.0), 1.0, 0.4, 0.5, 3.0, &options()).unwrap();
    let b = autonomous_ground_state_from(&gaussian_seed(g, 2.0), 1.0, 0.4, 0.5, 3.0, &options()).unwrap();
    assert!(a.result.converged && b.result.converged);
    assert!(relative_distance(&a.w, &b.w).unwrap() <= 0.05);
    assert!(a.w.min_value() > 0.0);
    assert!(a.evenness_residual < solver::EVENNESS_TOL);
    // coercivity identity on the manifold: J = (½ − 1/(2q))‖w‖²
    let e = a.result.energy;
    assert!((e.total - (1.0 - 1.0 / 3.0) * e.quad).abs() <= 1e-8 * e.total);
    // argmax recentered onto the origin grid point
    assert_eq!(argmax_point(&a.w).0, vec![0.0]);
}

#[test]
fn concentrating_seed_support_and_peak() {
    let (cfg, p) = selftest::standard_problem(2048, 0.125);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let y = [2.0];
    let seed = build_concentrating_seed(&y, &autonomous_w(), &cfg, &p, &k).unwrap();
    let g = cfg.grid;
    for i in 0..g.len() {
        if (g.coord(i) - y[0]).abs() >= cfg.delta {
            assert_eq!(seed.phi.values()[i], 0.0);
        }
    }
    let (peak, _) = argmax_point(&seed.phi);
    assert!((peak[0] - y[0]).abs() <= g.spacing());
    let err = build_concentrating_seed(&[3.5], &autonomous_w(), &cfg, &p, &k).unwrap_err();
    assert!(matches!(err, Error::WellOutsideRegion { .. }));
}

#[test]
fn barycenter_of_narrow_bump() {
    let g = make_grid(1, 12.0, 1024).unwrap();
    let u = Field::from_fn(g, |x| (-((x[0] - 1.3) / 0.05).powi(2)).exp());
    assert!((barycenter(&u, 3.0).unwrap()[0] - 1.3).abs() <= g.spacing());
}

#[test]
fn multistart_single_well_and_duplicates() {
    let w = autonomous_w();
    let (cfg, p) = single_well(0.5, 512);
    assert_eq!(cfg.expected_solution_count, 1);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let out = multistart_search(&w, &cfg, &p, &k, &options()).unwrap();
    assert_eq!(out.distinct.len(), 1);
    let dup = multistart_from_points(&[vec![0.0], vec![0.0]], &w, &cfg, &p, &k, &options()).unwrap();
    assert_eq!(dup.runs.len(), 2);
    assert_eq!(dup.distinct.len(), 1);
}

#[test]
fn multistart_two_wells_is_exec_independent() {
    let w = autonomous_w();
    let (cfg, p) = selftest::standard_problem(1024, 0.25);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let seq = SolverOptions {
        exec: Exec::Sequential,
        ..options()
    };
    let a = multistart_search(&w, &cfg, &p, &k, &seq).unwrap();
    let b = multistart_search(&w, &cfg, &p, &k, &options()).unwrap();
    assert_eq!(a.distinct.len(), 2);
    for (x, y) in a.distinct.iter().zip(&b.distinct) {
        assert_eq!(x.u, y.u);
        assert_eq!(x.energy, y.energy);
    }
    let mut wells: Vec<f64> = a.distinct.iter().map(|r| r.barycenter[0]).collect();
    wells.sort_by(f64::total_cmp);
    assert!((wells[0] + 2.0).abs() < cfg.delta && (wells[1] - 2.0).abs() < cfg.delta);
    // clustering with an enormous radius merges everything into the lowest energy
    assert_eq!(cluster_solutions(&a.distinct, 10.0).unwrap().len(), 1);
}

#[test]
fn handcrafted_violation_breaks_original_certificate() {
    let (cfg, p) = selftest::standard_problem(512, 0.5);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let u = Field::from_fn(cfg.grid, |x| if (x[0] - 6.0).abs() < 0.5 { 1.0 } else { 0.01 });
    let rep = certify(&u, &p, &k).unwrap();
    assert!(!rep.original_certificate);
    assert!(rep.sup_outside >= 1.0);
    assert!(certify(&Field::zeros(cfg.grid), &p, &k)
        .map(|r| !r.nontrivial)
        .unwrap_or(true));
}

#[test]
fn two_dimensional_solve_converges() {
    let cfg = validate_config(&ModelParams {
        s: 0.6,
        mu: 1.0,
        q: 2.3,
        eps: 0.5,
        potential: PotentialSpec::product_well(1.0, 2.0, 1.0, vec![vec![1.5, 0.0], vec![-1.5, 0.0]]),
        region: Some(RegionSpec::Ball {
            center: vec![0.0, 0.0],
            radius: 3.0,
        }),
        ell: 10.0,
        delta: None,
        grid: make_grid(2, 8.0, 128).unwrap(),
    })
    .unwrap();
    let p = Problem::from_config(&cfg);
    let k = build_riesz_kernel(&cfg.grid, cfg.mu).unwrap();
    let gw = make_grid(2, 16.0, 64).unwrap();
    let w = autonomous_ground_state(1.0, 0.6, 1.0, 2.3, gw, &options()).unwrap();
    assert!(w.result.converged);
    let out = multistart_search(&w.w, &cfg, &p, &k, &options()).unwrap();
    assert!(!out.distinct.is_empty());
    for r in &out.distinct {
        assert!(
            r.u.min_value() >= 0.0,
            "min {:e} linf {:e} conv {} {:?}",
            r.u.min_value(),
            r.u.linf_norm(),
            r.converged,
            r.report
        );
        assert!(
            r.report.riesz_certificate,
            "{:?} conv={} it={}",
            r.report, r.converged, r.iterations
        );
    }
}
