//! Sweep records. The CSV column order below is frozen; bump
//! [`SCHEMA_VERSION`] on any change.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_COLUMNS: [&str; 27] = [
    "schema_version",
    "eps",
    "grid_n",
    "x_eps",
    "V_at_xeps",
    "V_gap",
    "rescaled_energy",
    "c_V0",
    "energy_gap",
    "barycenter",
    "barycenter_well_error",
    "distinct_count",
    "expected_count",
    "converged",
    "positive",
    "original_certificate",
    "riesz_certificate",
    "boundary_ok",
    "sup_outside",
    "threshold_a",
    "riesz_ratio",
    "boundary_mass_rel",
    "grad_norm_rel",
    "nehari_residual_rel",
    "iterations",
    "all_converged_riesz_ok",
    "wall_time_s",
];

pub const SEED_COLUMNS: [&str; 9] = [
    "schema_version",
    "eps",
    "well_index",
    "well",
    "seed_t",
    "seed_rescaled_energy",
    "seed_energy_gap",
    "seed_barycenter",
    "seed_barycenter_error",
];

/// Seed `Φ_ε(y)` diagnostics at one well.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRecord {
    pub eps: f64,
    pub well_index: usize,
    pub well: Vec<f64>,
    pub seed_t: f64,
    pub seed_rescaled_energy: f64,
    /// `|ε^{-N} J(Φ_ε(y)) − c_{V0}|`.
    pub seed_energy_gap: f64,
    pub seed_barycenter: Vec<f64>,
    pub seed_barycenter_error: f64,
}

/// One row per `ε`, describing the lowest-energy distinct solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub schema_version: u32,
    pub eps: f64,
    pub grid_n: usize,
    pub x_eps: Vec<f64>,
    #[serde(rename = "V_at_xeps")]
    pub v_at_xeps: f64,
    /// `V(x_ε) − V0`.
    #[serde(rename = "V_gap")]
    pub v_gap: f64,
    pub rescaled_energy: f64,
    #[serde(rename = "c_V0")]
    pub c_v0: f64,
    /// `ε^{-N} J(u_ε) − c_{V0}`.
    pub energy_gap: f64,
    pub barycenter: Vec<f64>,
    pub barycenter_well_error: f64,
    pub distinct_count: usize,
    pub expected_count: usize,
    pub converged: bool,
    pub positive: bool,
    pub original_certificate: bool,
    pub riesz_certificate: bool,
    pub boundary_ok: bool,
    pub sup_outside: f64,
    pub threshold_a: f64,
    pub riesz_ratio: f64,
    pub boundary_mass_rel: f64,
    pub grad_norm_rel: f64,
    pub nehari_residual_rel: f64,
    pub iterations: usize,
    /// Riesz certificate over every converged multistart solution at this `ε`.
    pub all_converged_riesz_ok: bool,
    pub seeds: Vec<SeedRecord>,
    pub wall_time_s: f64,
}

/// Shortest representation that parses back to the same bits.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn point(p: &[f64]) -> String {
    p.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

impl SweepRecord {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            num(self.eps),
            self.grid_n.to_string(),
            point(&self.x_eps),
            num(self.v_at_xeps),
            num(self.v_gap),
            num(self.rescaled_energy),
            num(self.c_v0),
            num(self.energy_gap),
            point(&self.barycenter),
            num(self.barycenter_well_error),
            self.distinct_count.to_string(),
            self.expected_count.to_string(),
            self.converged.to_string(),
            self.positive.to_string(),
            self.original_certificate.to_string(),
            self.riesz_certificate.to_string(),
            self.boundary_ok.to_string(),
            num(self.sup_outside),
            num(self.threshold_a),
            num(self.riesz_ratio),
            num(self.boundary_mass_rel),
            num(self.grad_norm_rel),
            num(self.nehari_residual_rel),
            self.iterations.to_string(),
            self.all_converged_riesz_ok.to_string(),
            num(self.wall_time_s),
        ]
    }

    /// Every reported number is finite.
    pub fn is_finite(&self) -> bool {
        let scalars = [
            self.eps,
            self.v_at_xeps,
            self.v_gap,
            self.rescaled_energy,
            self.c_v0,
            self.energy_gap,
            self.barycenter_well_error,
            self.sup_outside,
            self.threshold_a,
            self.riesz_ratio,
            self.boundary_mass_rel,
            self.grad_norm_rel,
            self.nehari_residual_rel,
            self.wall_time_s,
        ];
        scalars
            .iter()
            .chain(&self.x_eps)
            .chain(&self.barycenter)
            .all(|v| v.is_finite())
    }
}

impl SeedRecord {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            num(self.eps),
            self.well_index.to_string(),
            point(&self.well),
            num(self.seed_t),
            num(self.seed_rescaled_energy),
            num(self.seed_energy_gap),
            point(&self.seed_barycenter),
            num(self.seed_barycenter_error),
        ]
    }
}

/// Append rows to a CSV, writing the header only when the file is new.
pub fn append_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(header)?;
    }
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

pub fn append_json_line<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(value).map_err(std::io::Error::other)?;
    writeln!(file, "{line}")
}

/// Parse a sweep CSV into rows with the `wall_time_s` column removed.
pub fn csv_without_wall_time(path: &Path) -> Result<Vec<Vec<String>>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let skip = headers.iter().position(|h| h == "wall_time_s");
    let mut rows = vec![headers
        .iter()
        .filter(|h| *h != "wall_time_s")
        .map(String::from)
        .collect()];
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(_, v)| v.to_string())
                .collect(),
        );
    }
    Ok(rows)
}
