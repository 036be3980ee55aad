//! Command-line front end: equilibrium solves, bifurcation-diagram data,
//! thin-cell uniqueness certificates, and thick-cell convergence tables.
//!
//! Exit codes: 0 on success, 1 on computational failure (a solver or a
//! verification did not converge), 2 on usage errors. All output files are
//! deterministic for identical flags; seeds are flags with defaults.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too

mod records;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nemcell_core::asymptotics::{h1_distance, uniaxial_limit_profile, uniqueness_radius};
use nemcell_core::continuation::{
    bifurcation_report, check_bifurcation_conditions, continue_ee_branch, diagram_rows, Branch,
    DiagramRow,
};
use nemcell_core::energy::{energy_hessian, total_energy};
use nemcell_core::newton::{gradient_flow_descent, multi_start, SolveOptions};
use nemcell_core::{boundary_data, Grid, Profile, ReducedTemperature};

use records::{
    BifurcationRecord, CertificateRecord, CertificateVerification, RunRecord, SymmetryRecord,
    SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(
    name = "nemcell",
    about = "Equilibria, stability and bifurcation of a frustrated nematic hybrid cell",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Reduced temperature (must be < 1)
    #[arg(long)]
    theta: f64,
    /// Number of grid nodes (odd, >= 3)
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    /// Output directory for artifacts
    #[arg(long, default_value = "nemcell-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for one equilibrium profile at fixed parameters
    #[command(allow_negative_numbers = true)]
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Reduced thickness (must be > 0)
        #[arg(long)]
        lambda: f64,
        /// `ee` restricts to the eigenvalue-exchange subspace
        #[arg(long, value_parser = ["full", "ee"], default_value = "ee")]
        mode: String,
    },
    /// Trace the exchange branch, locate the critical thickness, follow
    /// both bent-director arms, and export the diagram data
    #[command(allow_negative_numbers = true)]
    Bifurcate {
        #[command(flatten)]
        common: CommonArgs,
        /// Upper end of the traced thickness range
        #[arg(long, default_value_t = 20.0)]
        lambda_max: f64,
        /// Amplitude step along the bent-director arms
        #[arg(long, default_value_t = 0.05)]
        t_step: f64,
        /// Largest amplitude followed on each arm
        #[arg(long, default_value_t = 3.0)]
        t_max: f64,
    },
    /// Emit the thin-cell uniqueness certificate
    #[command(allow_negative_numbers = true)]
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// Also run the empirical multi-start check at 0.9 * lambda0
        #[arg(long, default_value_t = false)]
        verify: bool,
        /// Seed for the multi-start verification
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Tabulate the approach of minimizers to the thick-cell uniaxial limit
    #[command(allow_negative_numbers = true)]
    Limits {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated thickness list
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
        lambdas: Vec<f64>,
        /// Worker threads (NEMCELL_JOBS is the fallback; output order is
        /// always by thickness)
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

struct UsageError(String);

fn run(cli: Cli) -> Result<ExitCode, UsageError> {
    match cli.command {
        Command::Solve {
            common,
            lambda,
            mode,
        } => {
            let (theta, grid) = validate(&common)?;
            if !(lambda > 0.0) {
                return Err(UsageError("--lambda must be positive".into()));
            }
            Ok(cmd_solve(common, theta, grid, lambda, &mode))
        }
        Command::Bifurcate {
            common,
            lambda_max,
            t_step,
            t_max,
        } => {
            let (theta, grid) = validate(&common)?;
            if !(lambda_max > 0.2) {
                return Err(UsageError("--lambda-max must exceed 0.2".into()));
            }
            if !(t_step > 0.0 && t_max > t_step) {
                return Err(UsageError("need 0 < --t-step < --t-max".into()));
            }
            Ok(cmd_bifurcate(common, theta, grid, lambda_max, t_step, t_max))
        }
        Command::Certify {
            common,
            verify,
            seed,
        } => {
            let (theta, grid) = validate(&common)?;
            Ok(cmd_certify(common, theta, grid, verify, seed))
        }
        Command::Limits {
            common,
            lambdas,
            jobs,
        } => {
            let (theta, grid) = validate(&common)?;
            if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
                return Err(UsageError("--lambdas must be positive".into()));
            }
            let jobs = jobs
                .or_else(|| {
                    std::env::var("NEMCELL_JOBS")
                        .ok()
                        .and_then(|v| v.parse().ok())
                })
                .unwrap_or(1)
                .max(1);
            Ok(cmd_limits(common, theta, grid, lambdas, jobs))
        }
    }
}

fn validate(common: &CommonArgs) -> Result<(ReducedTemperature, Grid), UsageError> {
    let theta = ReducedTemperature::new(common.theta)
        .map_err(|e| UsageError(format!("--theta: {e}")))?;
    let grid = Grid::uniform(common.grid).map_err(|e| UsageError(format!("--grid: {e}")))?;
    Ok((theta, grid))
}

fn write_file(path: &Path, contents: &str) -> String {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).expect("cannot create output directory");
    }
    fs::write(path, contents).expect("cannot write output file");
    path.display().to_string()
}

fn profile_csv(p: &Profile) -> String {
    let mut out = String::from("x,q1,q2,q3\n");
    for (i, &x) in p.grid.nodes().iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", x, p.q1[i], p.q2[i], p.q3[i]));
    }
    out
}

fn diagram_csv(rows: &[DiagramRow]) -> String {
    let mut out = String::from("branch_id,lambda,t,energy,nu,mu,q3_mid\n");
    for r in rows {
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.branch_id.as_str(),
            r.lambda,
            r.t,
            r.energy,
            fmt_opt(r.nu),
            fmt_opt(r.mu),
            r.q3_mid
        ));
    }
    out
}

fn write_run_record(
    out_dir: &Path,
    command: &str,
    parameters: serde_json::Value,
    outcome: serde_json::Value,
    artifacts: Vec<String>,
    started: Instant,
) {
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        parameters,
        outcome,
        artifacts,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let path = out_dir.join("run.json");
    write_file(&path, &serde_json::to_string_pretty(&record).unwrap());
}

fn cmd_solve(
    common: CommonArgs,
    theta: ReducedTemperature,
    grid: Grid,
    lambda: f64,
    mode: &str,
) -> ExitCode {
    let started = Instant::now();
    let opts = SolveOptions::default();
    let parameters = json!({
        "theta": common.theta,
        "lambda": lambda,
        "mode": mode,
        "grid_nodes": common.grid,
        "residual_tolerance": opts.residual_tolerance,
    });

    let solved: Result<(Profile, f64, usize), String> = if mode == "ee" {
        nemcell_core::continuation::ee_solution_at(theta, lambda, &grid, None, &opts)
            .map(|chi| (chi.embed(), 0.0, 0))
            .map_err(|e| e.to_string())
    } else {
        let init = uniaxial_limit_profile(&grid, theta);
        match gradient_flow_descent(&init, lambda, theta, &opts) {
            Ok(out) if out.converged => Ok((out.profile, out.final_residual, out.iterations)),
            Ok(out) => Err(format!(
                "no convergence after {} iterations (residual {:e})",
                out.iterations, out.final_residual
            )),
            Err(e) => Err(e.to_string()),
        }
    };

    match solved {
        Ok((profile, residual, iterations)) => {
            let energy = total_energy(&profile, lambda, theta).unwrap();
            let csv = write_file(&common.out.join("profile.csv"), &profile_csv(&profile));
            let outcome = json!({
                "converged": true,
                "energy": energy,
                "q3_mid": profile.q3[grid.mid()],
                "final_residual": residual,
                "iterations": iterations,
            });
            write_run_record(
                &common.out,
                "solve",
                parameters,
                outcome,
                vec![csv],
                started,
            );
            println!(
                "solve: converged at theta={}, lambda={lambda}; energy {energy:.9}",
                common.theta
            );
            ExitCode::SUCCESS
        }
        Err(msg) => {
            write_run_record(
                &common.out,
                "solve",
                parameters,
                json!({"converged": false, "error": msg}),
                vec![],
                started,
            );
            eprintln!("solve failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_bifurcate(
    common: CommonArgs,
    theta: ReducedTemperature,
    grid: Grid,
    lambda_max: f64,
    t_step: f64,
    t_max: f64,
) -> ExitCode {
    let started = Instant::now();
    let opts = SolveOptions::default();
    let parameters = json!({
        "theta": common.theta,
        "lambda_max": lambda_max,
        "t_step": t_step,
        "t_max": t_max,
        "grid_nodes": common.grid,
    });

    let conditions = match check_bifurcation_conditions(theta, lambda_max, &grid, &opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bifurcate failed: {e}");
            return ExitCode::from(1);
        }
    };
    if !(conditions.condition_i && conditions.condition_ii) {
        let record = BifurcationRecord {
            schema_version: SCHEMA_VERSION,
            theta: common.theta,
            grid_nodes: common.grid,
            condition_i: conditions.condition_i,
            condition_ii: conditions.condition_ii,
            lambda_c: conditions.lambda_c,
            mu_slope_at_lambda_c: conditions.mu_slope_at_lambda_c,
            truncated_at: conditions.truncated_at,
            inconclusive_at_cap: conditions.inconclusive_at_cap,
            lambda_second_derivative: None,
            symmetry_residuals: None,
            ee_points: 0,
            bd_points_per_arm: 0,
        };
        let report = write_file(
            &common.out.join("report.json"),
            &serde_json::to_string_pretty(&record).unwrap(),
        );
        write_run_record(
            &common.out,
            "bifurcate",
            parameters,
            json!({"conditions_hold": false}),
            vec![report],
            started,
        );
        eprintln!(
            "bifurcate: conditions failed (i={}, ii={}, truncated_at={:?}, at_cap={})",
            conditions.condition_i,
            conditions.condition_ii,
            conditions.truncated_at,
            conditions.inconclusive_at_cap
        );
        return ExitCode::from(1);
    }

    let lambda_c = conditions.lambda_c.unwrap();
    let bracket = (0.5 * lambda_c, (1.5 * lambda_c).min(lambda_max));
    let analysis = (|| -> nemcell_core::Result<(BifurcationRecord, Vec<DiagramRow>)> {
        let trace = continue_ee_branch(theta, 0.1, lambda_max, 0.05, &grid, &opts)?;
        let report = bifurcation_report(theta, bracket, t_step, t_max, lambda_max, &grid, &opts)?;
        let arms: Vec<&Branch> = vec![&trace.branch, &report.bd_plus, &report.bd_minus];
        let rows = diagram_rows(&arms);
        let record = BifurcationRecord {
            schema_version: SCHEMA_VERSION,
            theta: common.theta,
            grid_nodes: common.grid,
            condition_i: true,
            condition_ii: true,
            lambda_c: Some(report.lambda_c),
            mu_slope_at_lambda_c: conditions.mu_slope_at_lambda_c,
            truncated_at: trace.truncated_at,
            inconclusive_at_cap: false,
            lambda_second_derivative: Some(report.lambda_second_derivative),
            symmetry_residuals: Some(SymmetryRecord {
                lambda_mismatch: report.symmetry.lambda_mismatch,
                profile_mismatch: report.symmetry.profile_mismatch,
                energy_mismatch: report.symmetry.energy_mismatch,
            }),
            ee_points: trace.branch.points.len(),
            bd_points_per_arm: report.bd_plus.points.len(),
        };
        Ok((record, rows))
    })();

    match analysis {
        Ok((record, rows)) => {
            let csv = write_file(&common.out.join("diagram.csv"), &diagram_csv(&rows));
            let report = write_file(
                &common.out.join("report.json"),
                &serde_json::to_string_pretty(&record).unwrap(),
            );
            write_run_record(
                &common.out,
                "bifurcate",
                parameters,
                json!({
                    "conditions_hold": true,
                    "lambda_c": record.lambda_c,
                    "lambda_second_derivative": record.lambda_second_derivative,
                }),
                vec![csv, report],
                started,
            );
            println!(
                "bifurcate: lambda_c = {:.8} at theta={}; diagram written",
                record.lambda_c.unwrap(),
                common.theta
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bifurcate failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_certify(
    common: CommonArgs,
    theta: ReducedTemperature,
    grid: Grid,
    verify: bool,
    seed: u64,
) -> ExitCode {
    let started = Instant::now();
    let opts = SolveOptions::default();
    let g_inf = boundary_data(theta).left.frobenius_norm();
    let cert = match uniqueness_radius(theta, g_inf) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("certify failed: {e}");
            return ExitCode::from(1);
        }
    };
    let parameters = json!({
        "theta": common.theta,
        "grid_nodes": common.grid,
        "boundary_sup_norm": g_inf,
        "verify": verify,
        "seed": seed,
    });

    let mut verification = None;
    let mut contradiction = false;
    if verify {
        let lambda_probe = 0.9 * cert.lambda0;
        match multi_start(lambda_probe, theta, &grid, 20, seed, &opts) {
            Ok(sols) if !sols.is_empty() => {
                let hess = energy_hessian(&sols[0].profile, lambda_probe, theta).unwrap();
                let min_eig = hess.smallest_eigenpair().map(|s| s.eigenvalue).unwrap_or(f64::NAN);
                contradiction = sols.len() >= 2;
                verification = Some(CertificateVerification {
                    lambda_probe,
                    n_starts: 20,
                    seed,
                    distinct_solutions: sols.len(),
                    smallest_hessian_eigenvalue: min_eig,
                });
            }
            _ => {
                eprintln!("certify: verification solves failed");
                return ExitCode::from(1);
            }
        }
    }

    let record = CertificateRecord {
        schema_version: SCHEMA_VERSION,
        theta: cert.theta,
        c1: cert.c1,
        c2: cert.c2,
        bound_radius: cert.bound_radius,
        lambda0: cert.lambda0,
        sampling_resolution: cert.sampling_resolution,
        verification,
    };
    let path = write_file(
        &common.out.join("certificate.json"),
        &serde_json::to_string_pretty(&record).unwrap(),
    );
    write_run_record(
        &common.out,
        "certify",
        parameters,
        json!({"lambda0": cert.lambda0, "contradiction": contradiction}),
        vec![path],
        started,
    );
    if contradiction {
        eprintln!(
            "certify: CONTRADICTION - multiple solutions below the certified lambda0; \
             this indicates a bug, not a physical finding"
        );
        return ExitCode::from(1);
    }
    println!(
        "certify: lambda0 = {:.6} (c1 = {:.6}, c2 = {:.4}) at theta={}",
        cert.lambda0, cert.c1, cert.c2, common.theta
    );
    ExitCode::SUCCESS
}

fn cmd_limits(
    common: CommonArgs,
    theta: ReducedTemperature,
    grid: Grid,
    mut lambdas: Vec<f64>,
    jobs: usize,
) -> ExitCode {
    let started = Instant::now();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let parameters = json!({
        "theta": common.theta,
        "grid_nodes": common.grid,
        "lambdas": lambdas,
        "jobs": jobs,
    });
    let geodesic = uniaxial_limit_profile(&grid, theta);
    let opts = SolveOptions {
        residual_tolerance: 1e-8,
        ..SolveOptions::default()
    };

    // fan out over a bounded worker pool; rows keep parameter order, never
    // completion order
    type Row = (f64, f64, f64, f64);
    let chunk_size = lambdas.len().div_ceil(jobs);
    let mut rows: Vec<Option<Row>> = vec![None; lambdas.len()];
    let gathered: Vec<Vec<(usize, Option<Row>)>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = lambdas
                .chunks(chunk_size)
                .enumerate()
                .map(|(chunk_idx, chunk)| {
                    let geodesic = &geodesic;
                    let grid = &grid;
                    let opts = &opts;
                    scope.spawn(move || {
                        let mut local = Vec::new();
                        for (k, &lambda) in chunk.iter().enumerate() {
                            let idx = chunk_idx * chunk_size + k;
                            let row = match gradient_flow_descent(geodesic, lambda, theta, opts) {
                                Ok(o) if o.converged => {
                                    let e = total_energy(&o.profile, lambda, theta).unwrap();
                                    let d = h1_distance(&o.profile, geodesic).unwrap();
                                    Some((lambda, e, o.profile.q3[grid.mid()], d))
                                }
                                _ => None,
                            };
                            local.push((idx, row));
                        }
                        local
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
    let mut failed = Vec::new();
    for (idx, row) in gathered.into_iter().flatten() {
        if row.is_none() {
            failed.push(lambdas[idx]);
        }
        rows[idx] = row;
    }
    failed.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut csv = String::from("lambda,energy,q3_mid,h1_distance_to_uniaxial_limit\n");
    for row in rows.iter().flatten() {
        csv.push_str(&format!("{},{},{},{}\n", row.0, row.1, row.2, row.3));
    }
    let path = write_file(&common.out.join("limits.csv"), &csv);
    let ok = failed.is_empty();
    write_run_record(
        &common.out,
        "limits",
        parameters,
        json!({"complete": ok, "failed_lambdas": failed}),
        vec![path],
        started,
    );
    if !ok {
        eprintln!("limits: some solves failed: {failed:?} (partial table written)");
        return ExitCode::from(1);
    }
    println!("limits: table written for {} thicknesses", lambdas.len());
    ExitCode::SUCCESS
}
