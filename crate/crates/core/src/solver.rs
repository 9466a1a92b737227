//! Ground states by preconditioned descent on the Nehari-projected energy,
//! the autonomous ground state, concentrating seeds, the barycenter map, the
//! multistart multiplicity search and solution certificates.

use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{self, Field, GridSpec, Point};
use crate::model::{self, ModelConfig, Problem};
use crate::nonlocal::{self, RieszKernel};
use crate::parallel::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when `‖J'(u)‖_{L²} / ‖u‖_{L²}` drops below this.
    pub tol_grad: f64,
    pub tol_nehari: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub step0: f64,
    /// Relative L² distance under which two solutions are the same.
    pub cluster_radius: f64,
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_grad: 1e-8,
            tol_nehari: 1e-10,
            max_iter: 5000,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            step0: 1.0,
            cluster_radius: 0.05,
            exec: Exec::Parallel,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.tol_grad,
            self.tol_nehari,
            self.armijo_c,
            self.step0,
            self.cluster_radius,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.max_iter == 0 {
            return Err(Error::BadOptions(
                "tolerances, step and max_iter must be positive".into(),
            ));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::BadOptions(format!(
                "armijo_shrink must lie in (0,1), got {}",
                self.armijo_shrink
            )));
        }
        Ok(())
    }
}

/// Recomputable solution certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// The field is not identically zero (the Nehari manifold stays away from 0).
    pub nontrivial: bool,
    pub positive: bool,
    pub min_value: f64,
    pub linf: f64,
    pub grad_norm_rel: f64,
    pub nehari_residual_rel: f64,
    /// `sup u` over grid points outside `Λ`.
    pub sup_outside: f64,
    pub threshold_a: f64,
    /// `u < a` outside `Λ`: the penalized solution solves the original equation.
    pub original_certificate: bool,
    /// `‖ε^{μ-N} K * G(u)‖_∞`.
    pub riesz_sup: f64,
    pub riesz_ratio: f64,
    /// `riesz_sup / ℓ < ½`.
    pub riesz_certificate: bool,
    pub boundary_mass_rel: f64,
    pub boundary_ok: bool,
}

impl CertificateReport {
    /// All certificate booleans hold.
    pub fn all_pass(&self) -> bool {
        self.nontrivial
            && self.positive
            && self.original_certificate
            && self.riesz_certificate
            && self.boundary_ok
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: Field,
    pub energy: EnergyBreakdown,
    pub converged: bool,
    pub iterations: usize,
    /// Nehari scaling applied at the last projection.
    pub t_last: f64,
    pub argmax: Point,
    pub argmax_value: f64,
    pub v_at_argmax: f64,
    pub barycenter: Point,
    #[serde(flatten)]
    pub report: CertificateReport,
    /// Directly evaluated `J` of the start point and every accepted iterate.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
    /// `J(new) − J(old)` of every accepted step, computed by differences.
    #[serde(skip)]
    pub decreases: Vec<f64>,
}

impl SolveResult {
    pub fn grad_norm_rel(&self) -> f64 {
        self.report.grad_norm_rel
    }

    pub fn nehari_residual_rel(&self) -> f64 {
        self.report.nehari_residual_rel
    }
}

/// Riesz representative of `r` in the metric `ε^{2s}|k|^{2s} + V0`.
pub fn precondition(r: &Field, p: &Problem) -> Result<Field> {
    if *r.grid() != p.grid {
        return Err(Error::GridMismatch);
    }
    Ok(nonlocal::apply_symbol(r, &p.precond))
}

/// Recompute every certificate of `u` from scratch.
pub fn certify(u: &Field, p: &Problem, k: &RieszKernel) -> Result<CertificateReport> {
    let norm = u.l2_norm();
    let nontrivial = norm > 0.0;
    let big_g = p.primitive_values(u.values());
    let conv = nonlocal::riesz_convolve(&Field::from_parts_unchecked(p.grid, big_g), k)?;
    let riesz_sup = p.coupling * conv.linf_norm();
    let riesz_ratio = if p.penalized { riesz_sup / p.pen.ell } else { 0.0 };
    let grad = energy::grad_j(u, p, k)?;
    let grad_norm_rel = if nontrivial { grad.l2_norm() / norm } else { 0.0 };
    let nehari_residual_rel = energy::nehari_residual_rel(u, p, k)?;
    let sup_outside = p.sup_outside(u.values());
    let min_value = u.min_value();
    let boundary_mass_rel = grid::boundary_mass_rel(u);
    Ok(CertificateReport {
        nontrivial,
        positive: nontrivial && min_value > 0.0,
        min_value,
        linf: u.linf_norm(),
        grad_norm_rel,
        nehari_residual_rel,
        sup_outside,
        threshold_a: p.pen.a,
        original_certificate: sup_outside < p.pen.a,
        riesz_sup,
        riesz_ratio,
        riesz_certificate: riesz_ratio < 0.5,
        boundary_mass_rel,
        boundary_ok: boundary_mass_rel <= grid::BOUNDARY_MASS_TOL,
    })
}

/// Recompute the certificates of a stored result.
pub fn verify_solution(res: &SolveResult, p: &Problem, k: &RieszKernel) -> Result<CertificateReport> {
    certify(&res.u, p, k)
}

/// Truncated `u²`-weighted center of mass: `Υ(x) = x` for `|x| ≤ ρ`, `ρx/|x|` beyond.
pub fn barycenter(u: &Field, rho: f64) -> Result<Point> {
    let g = u.grid();
    let dim = g.dim();
    let mut num = vec![0.0; dim];
    let mut den = 0.0;
    for (i, v) in u.values().iter().enumerate() {
        let w = v * v;
        if w == 0.0 {
            continue;
        }
        let x = g.point(i);
        let r = model::norm(&x);
        let scale = if r <= rho { 1.0 } else { rho / r };
        for (a, xa) in num.iter_mut().zip(&x) {
            *a += w * scale * xa;
        }
        den += w;
    }
    if den == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(num.into_iter().map(|a| a / den).collect())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    u: Field,
    p: &Problem,
    k: &RieszKernel,
    opts: &SolverOptions,
    iterations: usize,
    t_last: f64,
    energy_trace: Vec<f64>,
    decreases: Vec<f64>,
) -> Result<SolveResult> {
    let report = certify(&u, p, k)?;
    let energy = energy::j_eps(&u, p, k)?;
    let (idx, argmax_value) = grid::argmax_index(&u);
    let barycenter = barycenter(&u, p.rho)?;
    Ok(SolveResult {
        converged: report.grad_norm_rel <= opts.tol_grad && report.nehari_residual_rel <= opts.tol_nehari,
        argmax: p.grid.point(idx),
        argmax_value,
        v_at_argmax: p.potential[idx],
        barycenter,
        energy,
        iterations,
        t_last,
        report,
        energy_trace,
        decreases,
        u,
    })
}

/// Minimize `J` over the Nehari manifold starting from the ray of `seed`.
///
/// Each step moves along the preconditioned negative gradient, re-projects
/// onto the manifold and accepts by Armijo backtracking on the projected
/// energy. The trial step starts from a Barzilai–Borwein estimate.
pub fn minimize_ground_state(
    seed: &Field,
    p: &Problem,
    k: &RieszKernel,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    if *seed.grid() != p.grid || *k.grid() != p.grid {
        return Err(Error::GridMismatch);
    }
    let start = seed.positive_part();
    let proj = energy::nehari_project(&start, p, k)?;
    let mut t_last = proj.t;
    let mut u = proj.projected;
    let mut trace = vec![energy::j_eps(&u, p, k)?.total];
    let mut decreases = Vec::new();
    let mut grad = energy::grad_j(&u, p, k)?;
    let mut alpha = opts.step0;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if grad.l2_norm() <= opts.tol_grad * u.l2_norm() {
            break;
        }
        let dir = precondition(&grad, p)?;
        let slope = grad.dot(&dir)?;
        if !(slope > 0.0) {
            break;
        }
        let mut accepted = None;
        while alpha >= 1e-14 * opts.step0 {
            let trial = u.axpy(-alpha, &dir)?;
            match energy::nehari_project(&trial, p, k) {
                Ok(pr) => {
                    let de = energy::energy_difference(&pr.projected, &u, p, k)?;
                    if de <= -opts.armijo_c * alpha * slope {
                        accepted = Some((pr, de));
                        break;
                    }
                }
                Err(Error::DeadSeed) | Err(Error::NehariBracket(_)) => {}
                Err(e) => return Err(e),
            }
            alpha *= opts.armijo_shrink;
        }
        let Some((pr, de)) = accepted else {
            // no admissible step above round-off: stalled
            break;
        };
        iterations += 1;
        t_last = pr.t;
        let new_u = pr.projected;
        let new_grad = energy::grad_j(&new_u, p, k)?;
        // Barzilai–Borwein step in the preconditioned metric for the next trial
        let s = new_u.sub(&u)?;
        let y = new_grad.sub(&grad)?;
        let sy = s.dot(&y)?;
        let pyy = precondition(&y, p)?.dot(&y)?;
        alpha = if sy > 0.0 && pyy > 0.0 {
            (sy / pyy).clamp(1e-6 * opts.step0, 1e6 * opts.step0)
        } else {
            opts.step0
        };
        u = new_u;
        grad = new_grad;
        decreases.push(de);
        trace.push(energy::j_eps(&u, p, k)?.total);
    }
    finish(u, p, k, opts, iterations, t_last, trace, decreases)
}

/// Ground state `w` of the autonomous problem and its level `c_{V0}`.
#[derive(Debug, Clone)]
pub struct AutonomousGroundState {
    /// Recentered so that its maximum sits at the origin grid point.
    pub w: Field,
    pub c_v0: f64,
    pub result: SolveResult,
    /// `‖w(x) − w(−x)‖ / ‖w‖`.
    pub evenness_residual: f64,
    pub warnings: Vec<String>,
}

/// Tolerance of the evenness check on `w` (reported as a warning only).
pub const EVENNESS_TOL: f64 = 1e-6;

/// Gaussian seed `exp(-|x|²/width²)` centered at the origin.
pub fn gaussian_seed(grid: GridSpec, width: f64) -> Field {
    Field::from_fn(grid, |x| {
        (-x.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp()
    })
}

pub fn autonomous_ground_state(
    v0: f64,
    s: f64,
    mu: f64,
    q: f64,
    grid: GridSpec,
    opts: &SolverOptions,
) -> Result<AutonomousGroundState> {
    autonomous_ground_state_from(&gaussian_seed(grid, 1.0), v0, s, mu, q, opts)
}

pub fn autonomous_ground_state_from(
    seed: &Field,
    v0: f64,
    s: f64,
    mu: f64,
    q: f64,
    opts: &SolverOptions,
) -> Result<AutonomousGroundState> {
    let grid = *seed.grid();
    let p = Problem::autonomous(v0, s, mu, q, grid).map_err(|e| Error::BadOptions(e.to_string()))?;
    let k = nonlocal::build_riesz_kernel(&grid, mu)?;
    let res = minimize_ground_state(seed, &p, &k, opts)?;
    let (idx, _) = grid::argmax_index(&res.u);
    let [a, b] = grid.unflatten(idx);
    let c = (grid.points_per_axis() / 2) as i64;
    let shift = [c - a as i64, if grid.dim() == 2 { c - b as i64 } else { 0 }];
    let w = res.u.roll(shift);
    let evenness_residual = reflect(&w).sub(&w)?.l2_norm() / w.l2_norm();
    let mut warnings = Vec::new();
    if evenness_residual > EVENNESS_TOL {
        warnings.push(format!(
            "autonomous ground state is not even: residual {evenness_residual:.3e}"
        ));
    }
    Ok(AutonomousGroundState {
        c_v0: res.energy.total,
        w,
        result: res,
        evenness_residual,
        warnings,
    })
}

/// `x ↦ u(−x)` on the grid (index `j ↦ (n − j) mod n` per axis).
pub fn reflect(u: &Field) -> Field {
    let g = *u.grid();
    let n = g.points_per_axis();
    let flip = |j: usize| (n - j) % n;
    let values = (0..g.len())
        .map(|i| {
            let [a, b] = g.unflatten(i);
            let src = if g.dim() == 1 {
                flip(a)
            } else {
                flip(a) * n + flip(b)
            };
            u.values()[src]
        })
        .collect();
    Field::from_parts_unchecked(g, values)
}

/// Cutoff `η`: 1 on `[0, δ/2]`, 0 on `[δ, ∞)`, cosine ramp in between.
pub fn cutoff(t: f64, delta: f64) -> f64 {
    if t <= 0.5 * delta {
        1.0
    } else if t >= delta {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (2.0 * t / delta - 1.0)).cos())
    }
}

/// `Ψ_{ε,y}` and its Nehari projection `Φ_ε(y) = t_ε Ψ_{ε,y}`.
#[derive(Debug, Clone)]
pub struct ConcentratingSeed {
    pub psi: Field,
    pub t: f64,
    pub phi: Field,
}

/// `Ψ(x) = η(|x − y|) w((x − y)/ε)` sampled on the configuration grid by
/// band-limited interpolation of `w`, then projected onto the manifold.
pub fn build_concentrating_seed(
    y: &[f64],
    w: &Field,
    cfg: &ModelConfig,
    p: &Problem,
    k: &RieszKernel,
) -> Result<ConcentratingSeed> {
    let delta = cfg.delta;
    if y.len() != cfg.dim() || cfg.lambda_region.signed_distance(y) <= delta {
        return Err(Error::WellOutsideRegion {
            well: y.to_vec(),
            delta,
        });
    }
    let g = cfg.grid;
    let n = g.points_per_axis();
    let eps = cfg.eps;
    // per-axis indices within δ of y, and the matching w-coordinates
    let mut idx: Vec<Vec<usize>> = Vec::with_capacity(g.dim());
    let mut targets: Vec<Vec<f64>> = Vec::with_capacity(g.dim());
    for ya in y {
        let ids: Vec<usize> = (0..n).filter(|&j| (g.coord(j) - ya).abs() <= delta).collect();
        targets.push(ids.iter().map(|&j| (g.coord(j) - ya) / eps).collect());
        idx.push(ids);
    }
    let sampled = grid::interpolate_band_limited(w, &targets)?;
    let mut psi = vec![0.0; g.len()];
    match g.dim() {
        1 => {
            for (m, &j) in idx[0].iter().enumerate() {
                let r = (g.coord(j) - y[0]).abs();
                psi[j] = cutoff(r, delta) * sampled[m];
            }
        }
        _ => {
            let ny = idx[1].len();
            for (ma, &ja) in idx[0].iter().enumerate() {
                for (mb, &jb) in idx[1].iter().enumerate() {
                    let r = model::dist_sq(&[g.coord(ja), g.coord(jb)], y).sqrt();
                    psi[ja * n + jb] = cutoff(r, delta) * sampled[ma * ny + mb];
                }
            }
        }
    }
    let psi = Field::new(g, psi)?;
    let proj = energy::nehari_project(&psi, p, k)?;
    Ok(ConcentratingSeed {
        psi,
        t: proj.t,
        phi: proj.projected,
    })
}

/// Outcome of one multistart seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub well: Point,
    pub seed: std::result::Result<ConcentratingSeed, Error>,
    pub seed_energy: Option<EnergyBreakdown>,
    pub seed_barycenter: Option<Point>,
    pub result: std::result::Result<SolveResult, Error>,
}

#[derive(Debug, Clone)]
pub struct MultistartOutcome {
    pub runs: Vec<SeedRun>,
    /// Distinct converged solutions, sorted by energy.
    pub distinct: Vec<SolveResult>,
    pub expected: usize,
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`.
pub fn relative_distance(a: &Field, b: &Field) -> Result<f64> {
    let scale = a.l2_norm().max(b.l2_norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(a.sub(b)?.l2_norm() / scale)
}

/// Greedy clustering in input order; each cluster keeps its lowest-energy
/// member. Representatives are returned sorted by energy.
pub fn cluster_solutions(results: &[SolveResult], radius: f64) -> Result<Vec<SolveResult>> {
    let mut reps: Vec<SolveResult> = Vec::new();
    for r in results {
        let mut merged = false;
        for rep in reps.iter_mut() {
            if relative_distance(&rep.u, &r.u)? <= radius {
                if r.energy.total < rep.energy.total {
                    *rep = r.clone();
                }
                merged = true;
                break;
            }
        }
        if !merged {
            reps.push(r.clone());
        }
    }
    reps.sort_by(|a, b| a.energy.total.total_cmp(&b.energy.total));
    Ok(reps)
}

/// Run one descent per seed point `Φ_ε(y)` and deduplicate.
pub fn multistart_from_points(
    points: &[Point],
    w: &Field,
    cfg: &ModelConfig,
    p: &Problem,
    k: &RieszKernel,
    opts: &SolverOptions,
) -> Result<MultistartOutcome> {
    opts.validate()?;
    let runs: Vec<SeedRun> = parallel::map(opts.exec, points, |y| {
        let seed = build_concentrating_seed(y, w, cfg, p, k);
        let (seed_energy, seed_barycenter, result) = match &seed {
            Ok(sd) => (
                energy::j_eps(&sd.phi, p, k).ok(),
                barycenter(&sd.phi, cfg.rho).ok(),
                minimize_ground_state(&sd.phi, p, k, opts),
            ),
            Err(e) => (None, None, Err(e.clone())),
        };
        SeedRun {
            well: y.clone(),
            seed,
            seed_energy,
            seed_barycenter,
            result,
        }
    });
    let converged: Vec<SolveResult> = runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .filter(|r| r.converged)
        .cloned()
        .collect();
    let distinct = cluster_solutions(&converged, opts.cluster_radius)?;
    Ok(MultistartOutcome {
        runs,
        distinct,
        expected: cfg.expected_solution_count,
    })
}

/// One seed per component (well) of the minimum set.
pub fn multistart_search(
    w: &Field,
    cfg: &ModelConfig,
    p: &Problem,
    k: &RieszKernel,
    opts: &SolverOptions,
) -> Result<MultistartOutcome> {
    multistart_from_points(cfg.wells(), w, cfg, p, k, opts)
}
