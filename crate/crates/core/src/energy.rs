//! Penalized energy `J = ½‖u‖²_ε − Σ(u)`, its L² gradient, the fibering
//! derivative `h'_u(t) = d/dt J(tu)` and the Nehari projection `u ↦ t_u u`.
//!
//! All quantities are in the original variables:
//! `J(u) = ½(ε^{2s}[u]² + ∫V u²) − ½ ε^{μ-N} ∫ (K * G(x,u)) G(x,u)`.
//! The rescaled energy is `ε^{-N} J`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, Field};
use crate::model::{self, ConfigError, Problem};
use crate::nonlocal::{self, RieszKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `½ ‖u‖²_ε` (original variables).
    pub quad: f64,
    /// `½ ε^{μ-N} ∫ (K * G(u)) G(u)`.
    pub interaction: f64,
    /// `quad − interaction`.
    pub total: f64,
    /// `ε^{-N} total`.
    pub rescaled_total: f64,
}

fn check(u: &Field, p: &Problem, k: &RieszKernel) -> Result<()> {
    if *u.grid() != p.grid || *k.grid() != p.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn rescale(p: &Problem) -> f64 {
    p.eps.powi(-(p.grid.dim() as i32))
}

/// `h^N Σ a b`.
fn quad_dot(p: &Problem, a: &[f64], b: &[f64]) -> f64 {
    p.grid.cell_volume() * dot(a, b)
}

/// `½ ε^{μ-N} ∫ (K * G(u)) G(u)`.
pub fn sigma_eps(u: &Field, p: &Problem, k: &RieszKernel) -> Result<f64> {
    check(u, p, k)?;
    let big_g = p.primitive_values(u.values());
    let conv = nonlocal::convolve_raw(&big_g, k);
    Ok(0.5 * p.coupling * quad_dot(p, &conv, &big_g))
}

pub fn j_eps(u: &Field, p: &Problem, k: &RieszKernel) -> Result<EnergyBreakdown> {
    let quad = 0.5 * model::norm_eps_sq(u, p)?;
    let interaction = sigma_eps(u, p, k)?;
    let total = quad - interaction;
    Ok(EnergyBreakdown {
        quad,
        interaction,
        total,
        rescaled_total: rescale(p) * total,
    })
}

/// Energy of the autonomous problem `(-Δ)^s u + V0 u = (K * F(u)) f(u)`
/// (ε = 1, no penalization) on the kernel's grid.
pub fn j_autonomous(u: &Field, v0: f64, s: f64, q: f64, k: &RieszKernel) -> Result<EnergyBreakdown> {
    let p = Problem::autonomous(v0, s, k.mu(), q, *k.grid()).map_err(|e| match e {
        ConfigError::Grid(g) => g,
        other => Error::BadOptions(other.to_string()),
    })?;
    j_eps(u, &p, k)
}

/// L² representative of `J'(u)`:
/// `ε^{2s}(-Δ)^s u + V u − ε^{μ-N} (K * G(u)) g(u)`.
pub fn grad_j(u: &Field, p: &Problem, k: &RieszKernel) -> Result<Field> {
    check(u, p, k)?;
    let (g, big_g) = p.eval_g_values(u.values());
    let conv = nonlocal::convolve_raw(&big_g, k);
    let lap = nonlocal::apply_symbol(u, &p.symbol);
    let values = lap
        .values()
        .iter()
        .zip(u.values())
        .zip(&p.potential)
        .zip(conv.iter().zip(&g))
        .map(|(((l, v), pot), (c, gi))| l + pot * v - p.coupling * c * gi)
        .collect();
    Ok(Field::from_parts_unchecked(p.grid, values))
}

/// `ε^{μ-N} ∫ (K * G(tu)) g(tu) u`.
fn fiber_nonlinear(t: f64, u: &[f64], p: &Problem, k: &RieszKernel) -> f64 {
    let tu: Vec<f64> = u.iter().map(|v| t * v).collect();
    let (g, big_g) = p.eval_g_values(&tu);
    let conv = nonlocal::convolve_raw(&big_g, k);
    let weighted: Vec<f64> = g.iter().zip(u).map(|(a, b)| a * b).collect();
    p.coupling * quad_dot(p, &conv, &weighted)
}

/// `h'_u(t) = t ‖u‖²_ε − ε^{μ-N} ∫ (K * G(tu)) g(tu) u`.
pub fn nehari_h_prime(t: f64, u: &Field, p: &Problem, k: &RieszKernel) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::BadFiberParameter(t));
    }
    check(u, p, k)?;
    let q = model::norm_eps_sq(u, p)?;
    Ok(t * q - fiber_nonlinear(t, u.values(), p, k))
}

/// `|⟨J'(v), v⟩| / ‖v‖²_ε`, zero exactly on the Nehari manifold.
pub fn nehari_residual_rel(v: &Field, p: &Problem, k: &RieszKernel) -> Result<f64> {
    check(v, p, k)?;
    let q = model::norm_eps_sq(v, p)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok((q - fiber_nonlinear(1.0, v.values(), p, k)).abs() / q)
}

/// Result of projecting a ray onto the Nehari manifold.
#[derive(Debug, Clone)]
pub struct NehariProjection {
    pub t: f64,
    pub projected: Field,
    /// True when the pure-power closed form was used (no cap active on the ray up to `t`).
    pub closed_form: bool,
}

/// Growth factor of the bracket search around `t = 1`.
pub const BRACKET_GROWTH: f64 = 4.0;
pub const BRACKET_MAX_EXPANSIONS: usize = 60;
pub const ROOT_MAX_ITER: usize = 100;

/// Stop on an exact zero or when the bracket shrinks to a few ulps.
struct RelativeStep;

impl roots::Convergency<f64> for RelativeStep {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, a: f64, b: f64) -> bool {
        (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= ROOT_MAX_ITER
    }
}

fn positive_part_vanishes(u: &Field) -> bool {
    !u.values().iter().any(|v| *v > 0.0)
}

/// Project `u` onto the Nehari manifold along its ray.
///
/// When no penalized point can reach the threshold `a` before the
/// pure-power root `t* = (Q/(qD))^{1/(2q-2)}`, `h'` coincides with
/// `tQ − q t^{2q-1} D` on `(0, t*]` and `t*` is returned directly.
/// Otherwise the root is bracketed and refined by Brent's method.
pub fn nehari_project(u: &Field, p: &Problem, k: &RieszKernel) -> Result<NehariProjection> {
    check(u, p, k)?;
    if positive_part_vanishes(u) {
        return Err(Error::DeadSeed);
    }
    let quad = model::norm_eps_sq(u, p)?;
    let (_, pure_f) = model::eval_f(u.values(), p.q);
    let conv = nonlocal::convolve_raw(&pure_f, k);
    let d = p.coupling * quad_dot(p, &conv, &pure_f);
    if d > 0.0 && quad > 0.0 {
        let t_star = (quad / (p.q * d)).powf(1.0 / (2.0 * p.q - 2.0));
        if t_star.is_finite() && t_star * p.sup_outside(u.values()) <= p.pen.a {
            return Ok(NehariProjection {
                t: t_star,
                projected: u.scale(t_star),
                closed_form: true,
            });
        }
    }
    bracketed(u, quad, p, k)
}

/// Same as [`nehari_project`] but always by bracketing and Brent's method.
pub fn nehari_project_bracketed(u: &Field, p: &Problem, k: &RieszKernel) -> Result<NehariProjection> {
    check(u, p, k)?;
    if positive_part_vanishes(u) {
        return Err(Error::DeadSeed);
    }
    let quad = model::norm_eps_sq(u, p)?;
    bracketed(u, quad, p, k)
}

fn bracketed(u: &Field, quad: f64, p: &Problem, k: &RieszKernel) -> Result<NehariProjection> {
    let h_prime = |t: f64| t * quad - fiber_nonlinear(t, u.values(), p, k);
    let (mut lo, mut hi);
    let at_one = h_prime(1.0);
    if at_one == 0.0 {
        return Ok(NehariProjection {
            t: 1.0,
            projected: u.clone(),
            closed_form: false,
        });
    }
    if at_one > 0.0 {
        lo = 1.0;
        hi = BRACKET_GROWTH;
        let mut n = 0;
        while h_prime(hi) > 0.0 {
            n += 1;
            if n > BRACKET_MAX_EXPANSIONS {
                return Err(Error::NehariBracket(BRACKET_MAX_EXPANSIONS));
            }
            lo = hi;
            hi *= BRACKET_GROWTH;
        }
    } else {
        hi = 1.0;
        lo = 1.0 / BRACKET_GROWTH;
        let mut n = 0;
        while h_prime(lo) <= 0.0 {
            n += 1;
            if n > BRACKET_MAX_EXPANSIONS {
                return Err(Error::NehariBracket(BRACKET_MAX_EXPANSIONS));
            }
            hi = lo;
            lo /= BRACKET_GROWTH;
        }
    }
    // the solver re-queries bracket endpoints; each query costs a convolution
    let mut recent: Vec<(f64, f64)> = Vec::with_capacity(8);
    let memo = |t: f64| {
        if let Some(&(_, v)) = recent.iter().find(|(x, _)| *x == t) {
            return v;
        }
        let v = h_prime(t);
        if recent.len() == 8 {
            recent.remove(0);
        }
        recent.push((t, v));
        v
    };
    let t = roots::find_root_brent(lo, hi, memo, &mut RelativeStep)
        .map_err(|_| Error::NehariBracket(ROOT_MAX_ITER))?;
    Ok(NehariProjection {
        t,
        projected: u.scale(t),
        closed_form: false,
    })
}

/// `J(new) − J(old)` evaluated through differences, so that it stays
/// accurate when the two fields are close.
pub fn energy_difference(new: &Field, old: &Field, p: &Problem, k: &RieszKernel) -> Result<f64> {
    check(new, p, k)?;
    check(old, p, k)?;
    let diff = new.sub(old)?;
    let sum = new.axpy(1.0, old)?;
    let d_quad = model::inner_eps(&diff, &sum, p)?;
    let (nv, ov) = (new.values(), old.values());
    let d_big_g: Vec<f64> = (0..nv.len())
        .map(|i| p.primitive_difference(i, nv[i], ov[i]))
        .collect();
    let s_big_g: Vec<f64> = (0..nv.len())
        .map(|i| p.nonlinearity(i, nv[i]).1 + p.nonlinearity(i, ov[i]).1)
        .collect();
    let conv = nonlocal::convolve_raw(&d_big_g, k);
    let d_inter = 0.5 * p.coupling * quad_dot(p, &conv, &s_big_g);
    Ok(0.5 * d_quad - d_inter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::nonlocal::build_riesz_kernel;
    use approx::assert_abs_diff_eq;

    fn setup(n: usize) -> (Problem, RieszKernel) {
        let g = make_grid(1, 10.0, n).unwrap();
        let p = Problem::autonomous(1.0, 0.4, 0.5, 3.0, g).unwrap();
        let k = build_riesz_kernel(&g, 0.5).unwrap();
        (p, k)
    }

    #[test]
    fn zero_and_negative_fields() {
        let (p, k) = setup(64);
        let z = Field::zeros(p.grid);
        let e = j_eps(&z, &p, &k).unwrap();
        assert_eq!((e.quad, e.interaction, e.total), (0.0, 0.0, 0.0));
        assert!(grad_j(&z, &p, &k).unwrap().linf_norm() == 0.0);
        let neg = Field::from_fn(p.grid, |x| -(-x[0] * x[0]).exp());
        assert_eq!(sigma_eps(&neg, &p, &k).unwrap(), 0.0);
        let e = j_eps(&neg, &p, &k).unwrap();
        assert!(e.total > 0.0 && e.total == e.quad);
        assert!(matches!(nehari_project(&neg, &p, &k), Err(Error::DeadSeed)));
    }

    #[test]
    fn fiber_parameter_must_be_positive() {
        let (p, k) = setup(32);
        let u = Field::constant(p.grid, 0.1);
        assert_eq!(
            nehari_h_prime(0.0, &u, &p, &k),
            Err(Error::BadFiberParameter(0.0))
        );
    }

    #[test]
    fn projection_routes_agree() {
        let (p, k) = setup(128);
        let u = Field::from_fn(p.grid, |x| 0.3 * (-x[0] * x[0] / 2.0).exp());
        let fast = nehari_project(&u, &p, &k).unwrap();
        let slow = nehari_project_bracketed(&u, &p, &k).unwrap();
        assert!(fast.closed_form && !slow.closed_form);
        assert!((fast.t - slow.t).abs() / fast.t < 1e-12);
        assert!(nehari_residual_rel(&slow.projected, &p, &k).unwrap() < 1e-12);
    }

    #[test]
    fn small_t_is_increasing() {
        let (p, k) = setup(64);
        let u = Field::from_fn(p.grid, |x| (-x[0] * x[0]).exp());
        assert!(nehari_h_prime(1e-6, &u, &p, &k).unwrap() > 0.0);
    }

    #[test]
    fn energy_difference_matches_direct_for_distant_fields() {
        let (p, k) = setup(64);
        let a = Field::from_fn(p.grid, |x| 1.2 * (-x[0] * x[0]).exp());
        let b = Field::from_fn(p.grid, |x| 0.8 * (-(x[0] - 0.5).powi(2)).exp());
        let direct = j_eps(&a, &p, &k).unwrap().total - j_eps(&b, &p, &k).unwrap().total;
        assert_abs_diff_eq!(
            energy_difference(&a, &b, &p, &k).unwrap(),
            direct,
            epsilon = 1e-13
        );
    }
}
