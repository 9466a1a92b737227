//! Pseudospectral solver for positive solutions of the singularly perturbed
//! fractional Choquard equation
//!
//! ```text
//! ε^{2s}(-Δ)^s u + V(x) u = ε^{μ-N} (|x|^{-μ} * F(u)) f(u)   in R^N,
//! ```
//!
//! computed through a penalized nonlinearity `g` (linear cap outside a region
//! `Λ` around the minima of `V`) and minimization of the penalized energy
//! over its Nehari manifold.
//!
//! Modules, bottom-up: [`grid`] (periodic grids, transforms, quadrature),
//! [`nonlocal`] (fractional Laplacian, Riesz convolution), [`model`]
//! (validated configuration, `f`, `g`), [`energy`] (`J`, gradient, Nehari
//! projection) and [`solver`] (descent, seeds, barycenter, multistart,
//! certificates). [`oracle`] and [`selftest`] hold slow reference routes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
mod fft;
pub mod grid;
pub mod model;
pub mod nonlocal;
pub mod oracle;
pub mod parallel;
pub mod selftest;
pub mod solver;

pub use energy::{
    energy_difference, grad_j, j_autonomous, j_eps, nehari_h_prime, nehari_project, nehari_project_bracketed,
    nehari_residual_rel, sigma_eps, EnergyBreakdown, NehariProjection,
};
pub use error::{Error, Result};
pub use grid::{
    argmax_point, integrate, make_grid, spectral_transform, Direction, Field, GridSpec, Point, Spectrum,
};
pub use model::{
    eval_f, eval_g, eval_potential, indicator_lambda, norm_eps_sq, validate_config, ConfigError, ModelConfig,
    ModelParams, PenalizationParams, PotentialFamily, PotentialSpec, Problem, RegionSpec,
};
pub use nonlocal::{
    build_riesz_kernel, frac_laplacian, frac_seminorm_sq, riesz_convolve, riesz_energy, RieszKernel,
};
pub use parallel::Exec;
pub use solver::{
    autonomous_ground_state, barycenter, build_concentrating_seed, minimize_ground_state, multistart_search,
    precondition, verify_solution, AutonomousGroundState, CertificateReport, ConcentratingSeed,
    MultistartOutcome, SolveResult, SolverOptions,
};
