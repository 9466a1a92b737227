//! Physical configuration and its validation: exponents, the potential `V`,
//! the region `Λ` and minimum set `M`, the power nonlinearity `f(t) = t_+^{q-1}`
//! and the penalized nonlinearity `g` with the calibration `f(a)/a = V0/ℓ`.
//!
//! The solver works in the original variables `x` of
//! `ε^{2s}(-Δ)^s u + V(x) u = ε^{μ-N} (|x|^{-μ} * F(u)) f(u)`. Rescaled
//! quantities (`u(x) ↦ u(εx)`) differ by the factor `ε^{-N}`, applied
//! explicitly where reported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::grid::{self, Field, GridSpec, Point};
use crate::nonlocal;

/// Validation failures, named after the hypothesis they violate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("(V1) violated: {0}")]
    V1(String),
    #[error("(V2) violated: {0}")]
    V2(String),
    #[error("exponent window violated: need 2 < q < 2(N-mu)/(N-2s) = {upper}, got q = {q}")]
    ExponentWindow { q: f64, upper: f64 },
    #[error("mu window violated: need 0 < mu < 2s = {two_s}, got mu = {mu}")]
    MuWindow { mu: f64, two_s: f64 },
    #[error("N > 2s violated: N = {dim}, s = {s}")]
    DimensionVsOrder { dim: usize, s: f64 },
    #[error("Lambda containment violated: {0}")]
    LambdaContainment(String),
    #[error("penalization: {0}")]
    Penalization(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid: {0}")]
    Grid(#[from] Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialFamily {
    Constant,
    ProductWell,
}

/// `V(x) = V0 + A ∏_i (1 - exp(-|x - y_i|²/σ²))` (product well) or `V ≡ V0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    pub base: f64,
    pub amplitude: f64,
    pub width: f64,
    pub wells: Vec<Point>,
}

impl PotentialSpec {
    pub fn constant(base: f64) -> Self {
        PotentialSpec {
            family: PotentialFamily::Constant,
            base,
            amplitude: 0.0,
            width: 1.0,
            wells: Vec::new(),
        }
    }

    pub fn product_well(base: f64, amplitude: f64, width: f64, wells: Vec<Point>) -> Self {
        PotentialSpec {
            family: PotentialFamily::ProductWell,
            base,
            amplitude,
            width,
            wells,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.family {
            PotentialFamily::Constant => self.base,
            PotentialFamily::ProductWell => {
                let s2 = self.width * self.width;
                let prod: f64 = self
                    .wells
                    .iter()
                    .map(|y| -(-dist_sq(x, y) / s2).exp_m1())
                    .product();
                self.base + self.amplitude * prod
            }
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Field {
        Field::from_fn(*grid, |x| self.eval(x))
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The bounded open region `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RegionSpec {
    Box { center: Point, half_extents: Vec<f64> },
    Ball { center: Point, radius: f64 },
}

impl RegionSpec {
    pub fn dim(&self) -> usize {
        match self {
            RegionSpec::Box { center, .. } | RegionSpec::Ball { center, .. } => center.len(),
        }
    }

    /// Open-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Distance to `∂Λ`, positive inside (exact for balls, exact inside boxes).
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            RegionSpec::Box { center, half_extents } => x
                .iter()
                .zip(center)
                .zip(half_extents)
                .map(|((p, c), e)| e - (p - c).abs())
                .fold(f64::INFINITY, f64::min),
            RegionSpec::Ball { center, radius } => radius - dist_sq(x, center).sqrt(),
        }
    }

    /// Lebesgue measure of `Λ`.
    pub fn measure(&self) -> f64 {
        match self {
            RegionSpec::Box { half_extents, .. } => half_extents.iter().map(|e| 2.0 * e).product(),
            RegionSpec::Ball { radius, .. } => match self.dim() {
                1 => 2.0 * radius,
                _ => std::f64::consts::PI * radius * radius,
            },
        }
    }

    /// Largest `|x_a|` over the closure of `Λ`.
    pub fn max_abs_coordinate(&self) -> f64 {
        match self {
            RegionSpec::Box { center, half_extents } => center
                .iter()
                .zip(half_extents)
                .map(|(c, e)| c.abs() + e)
                .fold(0.0, f64::max),
            RegionSpec::Ball { center, radius } => {
                center.iter().map(|c| c.abs() + radius).fold(0.0, f64::max)
            }
        }
    }

    /// At least `count` points of `∂Λ` (both endpoints in 1D).
    pub fn boundary_samples(&self, count: usize) -> Vec<Point> {
        match (self, self.dim()) {
            (RegionSpec::Box { center, half_extents }, 1) => {
                vec![
                    vec![center[0] - half_extents[0]],
                    vec![center[0] + half_extents[0]],
                ]
            }
            (RegionSpec::Ball { center, radius }, 1) => {
                vec![vec![center[0] - radius], vec![center[0] + radius]]
            }
            (RegionSpec::Box { center, half_extents }, _) => {
                let per_side = count.div_ceil(4).max(2);
                let (cx, cy, ex, ey) = (center[0], center[1], half_extents[0], half_extents[1]);
                let mut pts = Vec::with_capacity(4 * per_side);
                for i in 0..per_side {
                    let t = -1.0 + 2.0 * i as f64 / per_side as f64;
                    pts.push(vec![cx + t * ex, cy - ey]);
                    pts.push(vec![cx + ex, cy + t * ey]);
                    pts.push(vec![cx - t * ex, cy + ey]);
                    pts.push(vec![cx - ex, cy - t * ey]);
                }
                pts
            }
            (RegionSpec::Ball { center, radius }, _) => (0..count.max(4))
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / count.max(4) as f64;
                    vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
                })
                .collect(),
        }
    }
}

/// `ℓ > 2` and the threshold `a = (V0/ℓ)^{1/(q-2)}`, i.e. `f(a)/a = V0/ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizationParams {
    pub ell: f64,
    pub a: f64,
}

impl PenalizationParams {
    pub fn calibrated(v0: f64, ell: f64, q: f64) -> Self {
        PenalizationParams {
            ell,
            a: (v0 / ell).powf(1.0 / (q - 2.0)),
        }
    }
}

/// Unvalidated model input.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub s: f64,
    pub mu: f64,
    pub q: f64,
    pub eps: f64,
    pub potential: PotentialSpec,
    pub region: Option<RegionSpec>,
    pub ell: f64,
    /// Margin of `M_δ`; defaults to half the smallest well-to-`∂Λ` distance.
    pub delta: Option<f64>,
    pub grid: GridSpec,
}

/// A configuration that satisfied every hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub s: f64,
    pub mu: f64,
    pub q: f64,
    pub eps: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    pub potential: PotentialSpec,
    pub lambda_region: RegionSpec,
    pub pen: PenalizationParams,
    pub grid: GridSpec,
    pub delta: f64,
    /// Truncation radius of the barycenter map, `max |y_i| + δ`.
    pub rho: f64,
    pub expected_solution_count: usize,
    pub warnings: Vec<String>,
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn wells(&self) -> &[Point] {
        &self.potential.wells
    }

    /// Same physics at another `ε` and grid (re-validated).
    pub fn with_eps_and_grid(&self, eps: f64, grid: GridSpec) -> Result<ModelConfig, ConfigError> {
        validate_config(&ModelParams {
            s: self.s,
            mu: self.mu,
            q: self.q,
            eps,
            potential: self.potential.clone(),
            region: Some(self.lambda_region.clone()),
            ell: self.pen.ell,
            delta: Some(self.delta),
            grid,
        })
    }
}

/// Upper end `2(N-μ)/(N-2s)` of the admissible exponent window.
pub fn exponent_upper(dim: usize, s: f64, mu: f64) -> f64 {
    let n = dim as f64;
    2.0 * (n - mu) / (n - 2.0 * s)
}

/// Checks shared by the penalized and the autonomous problems.
pub fn validate_exponents(dim: usize, s: f64, mu: f64, q: f64) -> Result<Vec<String>, ConfigError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(ConfigError::Parameter(format!("s must lie in (0,1), got {s}")));
    }
    if (dim as f64) <= 2.0 * s {
        return Err(ConfigError::DimensionVsOrder { dim, s });
    }
    if !(mu > 0.0 && mu < 2.0 * s) {
        return Err(ConfigError::MuWindow { mu, two_s: 2.0 * s });
    }
    let upper = exponent_upper(dim, s, mu);
    if !(q > 2.0 && q < upper) {
        return Err(ConfigError::ExponentWindow { q, upper });
    }
    let mut warnings = Vec::new();
    let n = dim as f64;
    let growth_upper = (2.0 * n - mu) / (n - 2.0 * s);
    if q >= growth_upper {
        warnings.push(format!(
            "(f2) growth window 2 < q < (2*_s/2)(2 - mu/N) = {growth_upper} not met by q = {q}"
        ));
    }
    Ok(warnings)
}

const V0_TOL: f64 = 1e-10;
const BOUNDARY_SAMPLES: usize = 256;

/// Check every hypothesis and derive `V0`, `a`, `δ`, `ρ` and the expected
/// solution count.
pub fn validate_config(p: &ModelParams) -> Result<ModelConfig, ConfigError> {
    let dim = p.grid.dim();
    let warnings = validate_exponents(dim, p.s, p.mu, p.q)?;
    if !(p.eps > 0.0 && p.eps.is_finite()) {
        return Err(ConfigError::Parameter(format!(
            "eps must be positive, got {}",
            p.eps
        )));
    }
    let pot = &p.potential;
    if !(pot.base > 0.0 && pot.base.is_finite()) {
        return Err(ConfigError::V1(format!(
            "inf V = V0 must be positive, got {}",
            pot.base
        )));
    }
    if pot.family == PotentialFamily::ProductWell {
        if !(pot.amplitude > 0.0 && pot.width > 0.0) {
            return Err(ConfigError::Parameter(
                "product well needs amplitude > 0 and width > 0".into(),
            ));
        }
        if pot.wells.is_empty() {
            return Err(ConfigError::Parameter(
                "product well needs at least one well".into(),
            ));
        }
        if pot.wells.iter().any(|y| y.len() != dim) {
            return Err(ConfigError::Parameter(format!(
                "wells must have {dim} coordinates"
            )));
        }
    }

    // Infimum of V over the grid and the wells; the wells attain V0 exactly.
    let sampled = pot.sample(&p.grid);
    let grid_min = sampled.min_value();
    let well_min = pot
        .wells
        .iter()
        .map(|y| pot.eval(y))
        .fold(f64::INFINITY, f64::min);
    let v0 = grid_min.min(well_min);
    if (v0 - pot.base).abs() > V0_TOL {
        return Err(ConfigError::V1(format!(
            "computed inf V = {v0} differs from the declared base {}",
            pot.base
        )));
    }
    for y in &pot.wells {
        if (pot.eval(y) - v0).abs() > V0_TOL {
            return Err(ConfigError::V1(format!("V does not attain V0 at well {y:?}")));
        }
    }

    let region = p
        .region
        .as_ref()
        .ok_or_else(|| ConfigError::V2("no bounded open set Lambda was given".into()))?;
    if region.dim() != dim {
        return Err(ConfigError::Parameter(format!(
            "region must be {dim}-dimensional"
        )));
    }
    let bad_extent = match region {
        RegionSpec::Box { half_extents, .. } => {
            half_extents.len() != dim || half_extents.iter().any(|e| !(*e > 0.0))
        }
        RegionSpec::Ball { radius, .. } => !(*radius > 0.0),
    };
    if bad_extent {
        return Err(ConfigError::Parameter("region extents must be positive".into()));
    }
    if region.max_abs_coordinate() >= p.grid.half_length() {
        return Err(ConfigError::LambdaContainment(format!(
            "Lambda reaches |x| = {} but the computational box is [-{L}, {L}]",
            region.max_abs_coordinate(),
            L = p.grid.half_length()
        )));
    }
    let boundary_min = region
        .boundary_samples(BOUNDARY_SAMPLES)
        .iter()
        .map(|x| pot.eval(x))
        .fold(f64::INFINITY, f64::min);
    if !(boundary_min > v0) {
        return Err(ConfigError::V2(format!(
            "min of V on the boundary of Lambda is {boundary_min}, not above V0 = {v0}"
        )));
    }

    let mut min_margin = f64::INFINITY;
    for y in &pot.wells {
        let d = region.signed_distance(y);
        if d <= 0.0 {
            return Err(ConfigError::LambdaContainment(format!(
                "well {y:?} is not inside Lambda"
            )));
        }
        min_margin = min_margin.min(d);
    }
    let delta = match p.delta {
        Some(d) if !(d > 0.0 && d < min_margin) => {
            return Err(ConfigError::LambdaContainment(format!(
                "M_delta must lie inside Lambda: delta = {d}, well margin = {min_margin}"
            )))
        }
        Some(d) => d,
        None if min_margin.is_finite() => 0.5 * min_margin,
        None => 0.5 * region.measure().powf(1.0 / dim as f64),
    };

    if !(p.ell > 2.0) {
        return Err(ConfigError::Penalization(format!("need ell > 2, got {}", p.ell)));
    }
    let pen = PenalizationParams::calibrated(v0, p.ell, p.q);
    let rho = pot.wells.iter().map(|y| norm(y)).fold(0.0, f64::max) + delta;
    let mut distinct: Vec<&Point> = Vec::new();
    for y in &pot.wells {
        if !distinct.contains(&y) {
            distinct.push(y);
        }
    }

    Ok(ModelConfig {
        s: p.s,
        mu: p.mu,
        q: p.q,
        eps: p.eps,
        v0,
        potential: pot.clone(),
        lambda_region: region.clone(),
        pen,
        grid: p.grid,
        delta,
        rho,
        expected_solution_count: distinct.len(),
        warnings,
    })
}

/// `V` sampled on the configuration grid.
pub fn eval_potential(cfg: &ModelConfig) -> Field {
    cfg.potential.sample(&cfg.grid)
}

/// Sharp indicator of `Λ` on the grid.
pub fn indicator_lambda(cfg: &ModelConfig) -> Field {
    Field::from_fn(
        cfg.grid,
        |x| if cfg.lambda_region.contains(x) { 1.0 } else { 0.0 },
    )
}

#[inline]
pub(crate) fn pow(t: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

/// `f(t) = max(t,0)^{q-1}` and `F(t) = max(t,0)^q / q`, elementwise.
pub fn eval_f(t: &[f64], q: f64) -> (Vec<f64>, Vec<f64>) {
    t.iter()
        .map(|&v| {
            let p = v.max(0.0);
            (pow(p, q - 1.0), pow(p, q) / q)
        })
        .unzip()
}

/// Pointwise data needed to evaluate `g(x, t)` and `G(x, t)`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: GridSpec,
    pub s: f64,
    pub mu: f64,
    pub q: f64,
    pub eps: f64,
    pub v0: f64,
    pub pen: PenalizationParams,
    /// `false` for the autonomous problem (`g ≡ f`).
    pub penalized: bool,
    pub potential: Vec<f64>,
    pub inside: Vec<bool>,
    /// `ε^{2s} |k|^{2s}` in FFT order.
    pub symbol: Vec<f64>,
    /// `1 / (ε^{2s}|k|^{2s} + V0)` in FFT order.
    pub precond: Vec<f64>,
    /// `ε^{μ-N}`.
    pub coupling: f64,
    pub rho: f64,
}

impl Problem {
    pub fn from_config(cfg: &ModelConfig) -> Problem {
        let g = cfg.grid;
        Problem::build(
            g,
            cfg.s,
            cfg.mu,
            cfg.q,
            cfg.eps,
            cfg.v0,
            cfg.pen,
            true,
            eval_potential(cfg).into_values(),
            (0..g.len())
                .map(|i| cfg.lambda_region.contains(&g.point(i)))
                .collect(),
            cfg.rho,
        )
    }

    /// `(-Δ)^s u + V0 u = (|x|^{-μ} * F(u)) f(u)` on `grid`, in its own variables (ε = 1).
    pub fn autonomous(v0: f64, s: f64, mu: f64, q: f64, grid: GridSpec) -> Result<Problem, ConfigError> {
        validate_exponents(grid.dim(), s, mu, q)?;
        if !(v0 > 0.0) {
            return Err(ConfigError::V1(format!("V0 must be positive, got {v0}")));
        }
        Ok(Problem::build(
            grid,
            s,
            mu,
            q,
            1.0,
            v0,
            PenalizationParams {
                ell: f64::INFINITY,
                a: f64::INFINITY,
            },
            false,
            vec![v0; grid.len()],
            vec![true; grid.len()],
            grid.half_length(),
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        grid: GridSpec,
        s: f64,
        mu: f64,
        q: f64,
        eps: f64,
        v0: f64,
        pen: PenalizationParams,
        penalized: bool,
        potential: Vec<f64>,
        inside: Vec<bool>,
        rho: f64,
    ) -> Problem {
        let symbol = grid.fractional_symbol(s, eps.powf(2.0 * s));
        let precond = symbol.iter().map(|k| 1.0 / (k + v0)).collect();
        let coupling = eps.powf(mu - grid.dim() as f64);
        Problem {
            grid,
            s,
            mu,
            q,
            eps,
            v0,
            pen,
            penalized,
            potential,
            inside,
            symbol,
            precond,
            coupling,
            rho,
        }
    }

    /// Whether the linear cap applies at flat index `i`.
    #[inline]
    pub fn capped(&self, i: usize) -> bool {
        self.penalized && !self.inside[i]
    }

    /// `(g(x_i, t), G(x_i, t))`.
    #[inline]
    pub fn nonlinearity(&self, i: usize, t: f64) -> (f64, f64) {
        let p = t.max(0.0);
        let a = self.pen.a;
        if !self.capped(i) || p <= a {
            (pow(p, self.q - 1.0), pow(p, self.q) / self.q)
        } else {
            let slope = self.v0 / self.pen.ell;
            (slope * p, pow(a, self.q) / self.q + 0.5 * slope * (p * p - a * a))
        }
    }

    /// `G(x_i, t1) - G(x_i, t2)` without cancellation between nearby arguments.
    pub fn primitive_difference(&self, i: usize, t1: f64, t2: f64) -> f64 {
        let (p1, p2) = (t1.max(0.0), t2.max(0.0));
        if !self.capped(i) {
            return pow_difference(p1, p2, self.q) / self.q;
        }
        let a = self.pen.a;
        let slope = self.v0 / self.pen.ell;
        let (m1, m2) = (p1.min(a), p2.min(a));
        let (x1, x2) = (p1.max(a), p2.max(a));
        pow_difference(m1, m2, self.q) / self.q + 0.5 * slope * (x1 - x2) * (x1 + x2)
    }

    pub fn eval_g_values(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        u.iter()
            .enumerate()
            .map(|(i, &t)| self.nonlinearity(i, t))
            .unzip()
    }

    pub fn primitive_values(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &t)| self.nonlinearity(i, t).1)
            .collect()
    }

    pub fn potential_field(&self) -> Field {
        Field::from_parts_unchecked(self.grid, self.potential.clone())
    }

    /// Largest positive value of `u` at grid points outside `Λ` (0 if none).
    pub fn sup_outside(&self, u: &[f64]) -> f64 {
        if !self.penalized {
            return 0.0;
        }
        u.iter()
            .zip(&self.inside)
            .filter(|(_, inside)| !**inside)
            .fold(0.0, |m, (v, _)| m.max(*v))
    }
}

/// `x^q - y^q` for `x, y ≥ 0`, accurate when `x ≈ y`.
fn pow_difference(x: f64, y: f64, q: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    if x == 0.0 || y == 0.0 {
        return pow(x, q) - pow(y, q);
    }
    let (big, small, sign) = if x > y { (x, y, 1.0) } else { (y, x, -1.0) };
    if big > 2.0 * small {
        // no cancellation to fear, and small^q may underflow
        return sign * (pow(big, q) - pow(small, q));
    }
    sign * pow(small, q) * (q * ((big - small) / small).ln_1p()).exp_m1()
}

/// Pointwise `(g, G)` of a field.
pub fn eval_g(u: &Field, problem: &Problem) -> Result<(Field, Field), Error> {
    problem.grid.check_len(u.values().len())?;
    if *u.grid() != problem.grid {
        return Err(Error::GridMismatch);
    }
    let (g, big_g) = problem.eval_g_values(u.values());
    Ok((
        Field::from_parts_unchecked(problem.grid, g),
        Field::from_parts_unchecked(problem.grid, big_g),
    ))
}

/// Original-variable quadratic form `ε^{2s}[u]² + ∫ V u²`.
pub fn norm_eps_sq(u: &Field, problem: &Problem) -> Result<f64, Error> {
    if *u.grid() != problem.grid {
        return Err(Error::GridMismatch);
    }
    let semi = nonlocal::weighted_energy(u, &problem.symbol);
    let pot: f64 = u
        .values()
        .iter()
        .zip(&problem.potential)
        .map(|(v, p)| p * v * v)
        .sum::<f64>()
        * problem.grid.cell_volume();
    Ok(semi + pot)
}

/// Symmetric bilinear form of [`norm_eps_sq`].
pub fn inner_eps(u: &Field, v: &Field, problem: &Problem) -> Result<f64, Error> {
    u.same_grid(v)?;
    if *u.grid() != problem.grid {
        return Err(Error::GridMismatch);
    }
    let semi = nonlocal::weighted_bilinear(u, v, &problem.symbol);
    let pot: f64 = u
        .values()
        .iter()
        .zip(v.values())
        .zip(&problem.potential)
        .map(|((a, b), p)| p * a * b)
        .sum::<f64>()
        * problem.grid.cell_volume();
    Ok(semi + pot)
}

/// Sample an indicator's fraction of ones; used by tests of the measure.
pub fn indicator_fraction(ind: &Field) -> f64 {
    grid::integrate(ind) / (2.0 * ind.grid().half_length()).powi(ind.grid().dim() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;

    pub(crate) fn standard_params() -> ModelParams {
        ModelParams {
            s: 0.4,
            mu: 0.5,
            q: 3.0,
            eps: 0.5,
            potential: PotentialSpec::product_well(1.0, 2.0, 1.0, vec![vec![-2.0], vec![2.0]]),
            region: Some(RegionSpec::Box {
                center: vec![0.0],
                half_extents: vec![4.0],
            }),
            ell: 10.0,
            delta: None,
            grid: make_grid(1, 12.0, 256).unwrap(),
        }
    }

    #[test]
    fn standard_scenario_is_valid() {
        let cfg = validate_config(&standard_params()).unwrap();
        assert_eq!(cfg.v0, 1.0);
        assert_abs_diff_eq!(cfg.pen.a, 0.1, epsilon = 1e-15);
        assert_eq!(cfg.delta, 1.0);
        assert_eq!(cfg.rho, 3.0);
        assert_eq!(cfg.expected_solution_count, 2);
        assert_abs_diff_eq!(exponent_upper(1, 0.4, 0.5), 5.0, epsilon = 1e-12);
        assert!(cfg.warnings.is_empty());
    }

    #[test]
    fn exponent_and_mu_windows() {
        let mut p = standard_params();
        p.q = 6.0;
        assert!(matches!(
            validate_config(&p),
            Err(ConfigError::ExponentWindow { .. })
        ));
        p.q = 2.0;
        assert!(matches!(
            validate_config(&p),
            Err(ConfigError::ExponentWindow { .. })
        ));
        let mut p = standard_params();
        p.mu = 0.9;
        assert!(matches!(validate_config(&p), Err(ConfigError::MuWindow { .. })));
        let mut p = standard_params();
        p.s = 0.6;
        assert!(matches!(
            validate_config(&p),
            Err(ConfigError::DimensionVsOrder { .. })
        ));
    }

    #[test]
    fn hypothesis_failures_are_named() {
        let mut p = standard_params();
        p.region = None;
        let e = validate_config(&p).unwrap_err();
        assert!(e.to_string().starts_with("(V2)"));
        let mut p = standard_params();
        p.potential = PotentialSpec::constant(1.0);
        assert!(matches!(validate_config(&p), Err(ConfigError::V2(_))));
        let mut p = standard_params();
        p.potential.base = -1.0;
        assert!(matches!(validate_config(&p), Err(ConfigError::V1(_))));
        let mut p = standard_params();
        p.region = Some(RegionSpec::Box {
            center: vec![0.0],
            half_extents: vec![1.0],
        });
        assert!(matches!(
            validate_config(&p),
            Err(ConfigError::LambdaContainment(_))
        ));
        let mut p = standard_params();
        p.region = Some(RegionSpec::Box {
            center: vec![0.0],
            half_extents: vec![13.0],
        });
        assert!(matches!(
            validate_config(&p),
            Err(ConfigError::LambdaContainment(_))
        ));
        let mut p = standard_params();
        p.delta = Some(2.5);
        assert!(matches!(
            validate_config(&p),
            Err(ConfigError::LambdaContainment(_))
        ));
        let mut p = standard_params();
        p.ell = 2.0;
        assert!(matches!(validate_config(&p), Err(ConfigError::Penalization(_))));
    }

    #[test]
    fn f2_window_is_a_warning() {
        // 2D: Theorem window upper 2(2-0.5)/(2-0.8) = 2.5, (f2) upper 3.5/1.2
        let g = make_grid(2, 8.0, 16).unwrap();
        let w = validate_exponents(g.dim(), 0.4, 0.5, 2.4).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn potential_values() {
        let g = make_grid(1, 12.0, 64).unwrap();
        let c = PotentialSpec::constant(1.0).sample(&g);
        assert!(c.values().iter().all(|v| *v == 1.0));
        let pw = PotentialSpec::product_well(1.0, 2.0, 1.0, vec![vec![-2.0], vec![2.0]]);
        assert_eq!(pw.eval(&[2.0]), 1.0);
        assert_eq!(pw.eval(&[-2.0]), 1.0);
        let x = 7.3_f64;
        let direct =
            1.0 + 2.0 * (1.0 - (-(x - 2.0) * (x - 2.0)).exp()) * (1.0 - (-(x + 2.0) * (x + 2.0)).exp());
        assert_abs_diff_eq!(pw.eval(&[x]), direct, epsilon = 1e-14);
        let mut prev = pw.eval(&[2.5]);
        for k in 1..40 {
            let v = pw.eval(&[2.5 + 0.25 * k as f64]);
            assert!(v >= prev);
            prev = v;
        }
        assert!((pw.eval(&[11.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_and_measure() {
        let cfg = validate_config(&standard_params()).unwrap();
        let ind = indicator_lambda(&cfg);
        assert_eq!(ind.values()[cfg.grid.len() / 2], 1.0);
        assert_eq!(ind.values()[0], 0.0);
        let frac = indicator_fraction(&ind);
        let expect = cfg.lambda_region.measure() / 24.0;
        assert!((frac - expect).abs() <= 2.0 / cfg.grid.points_per_axis() as f64);
    }

    #[test]
    fn indicator_measure_2d_ball() {
        let g = make_grid(2, 6.0, 64).unwrap();
        let r = RegionSpec::Ball {
            center: vec![0.5, -0.5],
            radius: 3.0,
        };
        let ind = Field::from_fn(g, |x| if r.contains(x) { 1.0 } else { 0.0 });
        let frac = indicator_fraction(&ind);
        let expect = r.measure() / 144.0;
        assert!((frac - expect).abs() <= 2.0 * 2.0 / 64.0, "{frac} vs {expect}");
    }

    #[test]
    fn f_values() {
        let (f, big_f) = eval_f(&[-1.0, 2.0], 3.0);
        assert_eq!((f[0], big_f[0]), (0.0, 0.0));
        assert_eq!(f[1], 4.0);
        assert_abs_diff_eq!(big_f[1], 8.0 / 3.0, epsilon = 1e-15);
        let cfg = validate_config(&standard_params()).unwrap();
        let a = cfg.pen.a;
        let (fa, _) = eval_f(&[a], cfg.q);
        assert_abs_diff_eq!(fa[0] / a, cfg.v0 / cfg.pen.ell, epsilon = 1e-14);
    }

    #[test]
    fn g_branches() {
        let cfg = validate_config(&standard_params()).unwrap();
        let p = Problem::from_config(&cfg);
        let a = cfg.pen.a;
        let outside = 0;
        let inside = cfg.grid.len() / 2;
        assert!(!p.inside[outside] && p.inside[inside]);
        let (g, _) = p.nonlinearity(outside, 2.0 * a);
        assert_abs_diff_eq!(g, cfg.v0 / cfg.pen.ell * 2.0 * a, epsilon = 1e-15);
        let (g, big_g) = p.nonlinearity(inside, 5.0);
        assert_eq!(g, 25.0);
        assert_abs_diff_eq!(big_g, 125.0 / 3.0, epsilon = 1e-12);
        let u = Field::from_fn(cfg.grid, |x| 0.5 * a * (-x[0] * x[0]).exp());
        let (gf, gg) = eval_g(&u, &p).unwrap();
        let (f, big_f) = eval_f(u.values(), cfg.q);
        assert_eq!(gf.values(), &f[..]);
        assert_eq!(gg.values(), &big_f[..]);
    }

    #[test]
    fn primitive_difference_is_accurate() {
        let cfg = validate_config(&standard_params()).unwrap();
        let p = Problem::from_config(&cfg);
        for i in [0, cfg.grid.len() / 2] {
            for (t1, t2) in [
                (0.3, 0.2),
                (0.05, 0.2),
                (1e-3, 0.0),
                (0.0, 0.7),
                (0.12, 0.08),
                (-1.0, 0.5),
                (1e-250, 3e-200),
            ] {
                let direct = p.nonlinearity(i, t1).1 - p.nonlinearity(i, t2).1;
                assert_abs_diff_eq!(p.primitive_difference(i, t1, t2), direct, epsilon = 1e-15);
            }
            let t = 0.7;
            let dt = (t + 1e-12) - t;
            let d = p.primitive_difference(i, t + dt, t);
            let g = p.nonlinearity(i, t).0;
            assert!((d / dt - g).abs() / g < 1e-6);
        }
    }

    #[test]
    fn quadratic_form_single_mode() {
        let l = 6.0;
        let g = make_grid(1, l, 64).unwrap();
        let p = Problem::autonomous(1.0, 0.4, 0.5, 3.0, g).unwrap();
        let u = Field::from_fn(g, |x| (std::f64::consts::PI * x[0] / l).cos());
        let n2 = u.l2_norm().powi(2);
        let expect = (std::f64::consts::PI / l).powf(0.8) * n2 + n2;
        assert_abs_diff_eq!(norm_eps_sq(&u, &p).unwrap(), expect, epsilon = 1e-12);
        assert_eq!(norm_eps_sq(&Field::zeros(g), &p).unwrap(), 0.0);
    }
}
