//! Serializable run records and report schemas.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Every command writes one of these next to its artifacts; replaying the
/// recorded command with the recorded parameters reproduces the run.
#[derive(Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: String,
    pub parameters: serde_json::Value,
    pub outcome: serde_json::Value,
    pub artifacts: Vec<String>,
    pub wall_time_seconds: f64,
}

#[derive(Serialize)]
pub struct CertificateRecord {
    pub schema_version: u32,
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    pub bound_radius: f64,
    pub lambda0: f64,
    pub sampling_resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<CertificateVerification>,
}

#[derive(Serialize)]
pub struct CertificateVerification {
    pub lambda_probe: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub distinct_solutions: usize,
    pub smallest_hessian_eigenvalue: f64,
}

#[derive(Serialize)]
pub struct SymmetryRecord {
    pub lambda_mismatch: f64,
    pub profile_mismatch: f64,
    pub energy_mismatch: f64,
}

#[derive(Serialize)]
pub struct BifurcationRecord {
    pub schema_version: u32,
    pub theta: f64,
    pub grid_nodes: usize,
    pub condition_i: bool,
    pub condition_ii: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_slope_at_lambda_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_at: Option<f64>,
    pub inconclusive_at_cap: bool,
    /// Measured curvature of lambda(t) at onset; positive = supercritical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_second_derivative: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry_residuals: Option<SymmetryRecord>,
    pub ee_points: usize,
    pub bd_points_per_arm: usize,
}
