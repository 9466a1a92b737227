//! TOML run configuration. See the README for the schema.

use std::path::Path;

use choquard_core::model::{
    ConfigError, ModelConfig, ModelParams, PotentialFamily, PotentialSpec, RegionSpec,
};
use choquard_core::{make_grid, GridSpec, SolverOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ELL: f64 = 10.0;
pub const DEFAULT_LADDER: [f64; 3] = [0.5, 0.25, 0.125];

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Validation(#[from] ConfigError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    potential: RawPotential,
    region: Option<RegionSpec>,
    #[serde(default)]
    penalization: RawPenalization,
    grid: RawGrid,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    autonomous: RawAutonomous,
    #[serde(default)]
    solver: SolverOptions,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dim: usize,
    s: f64,
    mu: f64,
    q: f64,
    eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Wells {
    Line(Vec<f64>),
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    #[serde(default = "product_well")]
    family: PotentialFamily,
    base: f64,
    #[serde(default)]
    amplitude: f64,
    #[serde(default = "unit")]
    width: f64,
    wells: Wells,
}

fn product_well() -> PotentialFamily {
    PotentialFamily::ProductWell
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPenalization {
    ell: Option<f64>,
    delta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    half_length: f64,
    points_per_axis: usize,
    /// `ε` at which `points_per_axis` applies; defaults to the largest ladder entry.
    reference_eps: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAutonomous {
    half_length: Option<f64>,
    points_per_axis: Option<usize>,
}

/// Everything a driver needs, validated.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Validated at `default_eps` on its scheduled grid.
    pub model: ModelConfig,
    pub ladder: Vec<f64>,
    pub default_eps: f64,
    pub reference_eps: f64,
    pub base_points: usize,
    pub half_length: f64,
    pub autonomous_grid: GridSpec,
    pub solver: SolverOptions,
}

/// `n(ε) = n_ref · ε_ref / ε`, rounded to the nearest even integer.
pub fn scheduled_points(base_points: usize, reference_eps: f64, eps: f64) -> usize {
    let raw = base_points as f64 * reference_eps / eps;
    (2.0 * (0.5 * raw).round()).max(8.0) as usize
}

impl RunConfig {
    pub fn grid_for(&self, eps: f64) -> Result<GridSpec, LoadError> {
        let n = scheduled_points(self.base_points, self.reference_eps, eps);
        make_grid(self.model.dim(), self.half_length, n).map_err(|e| LoadError::Validation(e.into()))
    }

    /// The model re-validated at `eps` on its scheduled grid.
    pub fn at_eps(&self, eps: f64) -> Result<ModelConfig, LoadError> {
        Ok(self.model.with_eps_and_grid(eps, self.grid_for(eps)?)?)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, LoadError> {
    let raw: RawConfig = toml::from_str(text)?;
    let dim = raw.model.dim;
    let wells = match raw.potential.wells {
        Wells::Line(xs) if dim == 1 => xs.into_iter().map(|x| vec![x]).collect(),
        Wells::Line(xs) if xs.len() == dim => vec![xs],
        Wells::Line(_) => {
            return Err(LoadError::Invalid(format!(
                "wells: expected a list of {dim}-component points"
            )))
        }
        Wells::Points(ps) => ps,
    };
    let potential = PotentialSpec {
        family: raw.potential.family,
        base: raw.potential.base,
        amplitude: raw.potential.amplitude,
        width: raw.potential.width,
        wells,
    };
    let ladder = raw.sweep.eps.unwrap_or_else(|| DEFAULT_LADDER.to_vec());
    if ladder.is_empty() || ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(LoadError::Invalid(
            "sweep.eps must be a nonempty list of positive numbers".into(),
        ));
    }
    let largest = ladder.iter().cloned().fold(f64::MIN, f64::max);
    let smallest = ladder.iter().cloned().fold(f64::MAX, f64::min);
    let reference_eps = raw.grid.reference_eps.unwrap_or(largest);
    let default_eps = raw.model.eps.unwrap_or(smallest);
    let half_length = raw.grid.half_length;
    let base_points = raw.grid.points_per_axis;
    let n = scheduled_points(base_points, reference_eps, default_eps);
    let grid = make_grid(dim, half_length, n).map_err(|e| LoadError::Validation(e.into()))?;
    let model = choquard_core::validate_config(&ModelParams {
        s: raw.model.s,
        mu: raw.model.mu,
        q: raw.model.q,
        eps: default_eps,
        potential,
        region: raw.region,
        ell: raw.penalization.ell.unwrap_or(DEFAULT_ELL),
        delta: raw.penalization.delta,
        grid,
    })?;
    // matched discretization: the w-grid spacing equals h/ε_ref, on a box
    // four times wider than Λ's host box in the stretched variable
    let auto_l = raw
        .autonomous
        .half_length
        .unwrap_or(4.0 * half_length / reference_eps);
    let auto_n = raw.autonomous.points_per_axis.unwrap_or(4 * base_points);
    let autonomous_grid = make_grid(dim, auto_l, auto_n).map_err(|e| LoadError::Validation(e.into()))?;
    raw.solver
        .validate()
        .map_err(|e| LoadError::Invalid(e.to_string()))?;
    Ok(RunConfig {
        model,
        ladder,
        default_eps,
        reference_eps,
        base_points,
        half_length,
        autonomous_grid,
        solver: raw.solver,
    })
}
