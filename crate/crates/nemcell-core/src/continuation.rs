//! Continuation of the eigenvalue-exchange branch in the thickness
//! parameter, location of the critical thickness, pitchfork branch
//! switching, and the two bent-director arms.
//!
//! The eigenvalue-exchange branch is traced by natural-parameter stepping
//! with warm starts (no folds exist while `nu > 0`). The bent-director
//! branches are amplitude-parameterized: the extended system
//!
//! ```text
//!     { Euler-Lagrange residual = 0,   <q3, h_c> = t }
//! ```
//!
//! is solved for the profile and the thickness together, because
//! `lambda'(0) = 0` at a symmetric pitchfork makes the thickness a bad
//! parameter near onset. The kernel `h_c` is fixed at the critical point,
//! L2-normalized with `h_c(0) > 0`, so the `BD+` arm is the one with
//! `q3(0) > 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::BandLu;
use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::fp;
use crate::grid::{EEProfile, Grid, Profile};
use crate::newton::{
    full_hess, full_rhs, newton_matrix, residual_interleaved, solve_ee, SolveOptions,
};
use crate::qtensor::{euler_lagrange_rhs, QComponents, ReducedTemperature, METRIC_WEIGHTS};
use crate::rng::SeededRng;
use crate::stability::{assemble_phi, assemble_psi, mu};

/// Identity of a solution branch in the bifurcation diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchId {
    Ee,
    BdPlus,
    BdMinus,
}

impl BranchId {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchId::Ee => "EE",
            BranchId::BdPlus => "BD+",
            BranchId::BdMinus => "BD-",
        }
    }
}

/// One converged point along a branch. `nu`/`mu` are recorded on
/// eigenvalue-exchange points; `t` is the kernel amplitude on
/// bent-director points (zero on the EE branch).
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub lambda: f64,
    pub t: f64,
    pub energy: f64,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub q3_mid: f64,
    pub profile: Profile,
}

/// An ordered list of branch points.
#[derive(Debug, Clone)]
pub struct Branch {
    pub id: BranchId,
    pub points: Vec<BranchPoint>,
}

/// Eigenvalue-exchange branch trace; `truncated_at` is set if the
/// symmetry-preserving eigenvalue was found negative beyond its numerical
/// resolution (the branch's continuation horizon).
#[derive(Debug, Clone)]
pub struct EeBranch {
    pub branch: Branch,
    pub truncated_at: Option<f64>,
}

/// Outcome of the general-temperature bifurcation test: condition (i),
/// a symmetry-breaking instability occurs along the branch, and condition
/// (ii), the crossing is non-degenerate.
#[derive(Debug, Clone)]
pub struct BifurcationConditions {
    pub condition_i: bool,
    pub condition_ii: bool,
    pub lambda_c: Option<f64>,
    pub mu_slope_at_lambda_c: Option<f64>,
    /// Branch truncation by a non-positive `nu` before any sign change.
    pub truncated_at: Option<f64>,
    /// The thickness cap was reached with `mu` still positive.
    pub inconclusive_at_cap: bool,
}

/// Mirror-symmetry defects between the two bent-director arms.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetryResiduals {
    /// max |lambda(t) - lambda(-t)| over matched amplitudes.
    pub lambda_mismatch: f64,
    /// max nodal defect of (q1, q2 equal; q3 opposite) between the arms.
    pub profile_mismatch: f64,
    /// max |E(t) - E(-t)| over matched amplitudes.
    pub energy_mismatch: f64,
}

/// Everything the pitchfork analysis produces.
#[derive(Debug, Clone)]
pub struct BifurcationReport {
    pub theta: f64,
    pub lambda_c: f64,
    /// Critical eigenvalue-exchange solution.
    pub chi_c: EEProfile,
    /// L2-normalized kernel eigenfunction, `h_c(0) > 0` (interior nodes).
    pub kernel: Vec<f64>,
    /// Measured `lambda''(0)`; positive means the arms open supercritically.
    /// Reported, not asserted: its sign is an empirical finding.
    pub lambda_second_derivative: f64,
    pub bd_plus: Branch,
    pub bd_minus: Branch,
    pub symmetry: SymmetryResiduals,
}

/// Result of the local-exhaustiveness probe around the critical point.
#[derive(Debug, Clone)]
pub struct PitchforkCheck {
    pub symmetry: SymmetryResiduals,
    pub n_local_below: usize,
    pub n_local_above: usize,
    pub probe_offset: f64,
    pub passed: bool,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("lambda must be positive"))
    }
}

/// Converged eigenvalue-exchange solution at `lambda`, warm-started from
/// `warm` when given, otherwise ramped up from the thin-cell regime.
/// The returned profile is the symmetric-gauge representative (even `q1`,
/// odd `q2`), re-polished after the projection.
pub fn ee_solution_at(
    theta: ReducedTemperature,
    lambda: f64,
    grid: &Grid,
    warm: Option<&EEProfile>,
    opts: &SolveOptions,
) -> Result<EEProfile> {
    check_lambda(lambda)?;
    if let Some(w) = warm {
        if let Ok(chi) = solve_ee_pinned(w, lambda, theta, opts) {
            return Ok(chi);
        }
    }
    // ramp: thin cells converge from the linear interpolation directly
    let mut current = EEProfile::linear_interpolation(grid, theta);
    let mut l = lambda.min(0.5);
    loop {
        current = solve_ee_pinned(&current, l, theta, opts)?;
        if l >= lambda {
            return Ok(current);
        }
        l = (l + 0.25).min(lambda);
    }
}

/// Newton solve followed by a symmetric-gauge projection and polish.
///
/// The projection also rescues solves that stall just above tolerance:
/// on wide cells the stall is pollution along the even flat mode, which
/// the projection removes exactly.
fn solve_ee_pinned(
    start: &EEProfile,
    lambda: f64,
    theta: ReducedTemperature,
    opts: &SolveOptions,
) -> Result<EEProfile> {
    let out = solve_ee(start, lambda, theta, opts)?;
    let polished = solve_ee(&out.profile.symmetrized_gauge(), lambda, theta, opts)?;
    if polished.converged {
        Ok(polished.profile)
    } else if out.converged {
        Ok(out.profile)
    } else {
        Err(Error::NonConvergence {
            iterations: out.iterations + polished.iterations,
            residual: polished.final_residual,
        })
    }
}

/// Traces the eigenvalue-exchange branch over `[lambda_min, lambda_max]`
/// with natural-parameter warm-started steps, recording `nu` and `mu` at
/// every point. The trace stops early, flagged rather than failing, if
/// `nu` falls below the negative of its numerical noise floor (the
/// continuation horizon); sub-resolution values are treated as
/// nonnegative because the true eigenvalue decays to zero exponentially
/// while its discrete sign becomes rounding noise.
pub fn continue_ee_branch(
    theta: ReducedTemperature,
    lambda_min: f64,
    lambda_max: f64,
    step: f64,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<EeBranch> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min) {
        return Err(Error::Domain("need 0 < lambda_min < lambda_max"));
    }
    if !(step > 0.0) {
        return Err(Error::Domain("step must be positive"));
    }
    let mut points = Vec::new();
    let mut truncated_at = None;
    let mut lambda = lambda_min;
    let mut warm: Option<EEProfile> = None;
    let mut current_step = step;
    loop {
        let chi = match ee_solution_at(theta, lambda, grid, warm.as_ref(), opts) {
            Ok(c) => c,
            Err(e) => {
                // halve the step and retry from the last converged point
                current_step *= 0.5;
                if current_step < step * 1e-3 || points.is_empty() {
                    return Err(e);
                }
                lambda = points.last().map(|p: &BranchPoint| p.lambda).unwrap() + current_step;
                continue;
            }
        };
        let phi = assemble_phi(&chi, lambda, theta)?;
        let nu_val = phi.smallest_eigenpair()?.eigenvalue;
        let mu_val = mu(&chi, lambda, theta)?;
        if nu_val < -phi.noise_floor() {
            truncated_at = Some(lambda);
            break;
        }
        let full = chi.embed();
        let energy = total_energy(&full, lambda, theta)?;
        points.push(BranchPoint {
            lambda,
            t: 0.0,
            energy,
            nu: Some(nu_val),
            mu: Some(mu_val),
            q3_mid: 0.0,
            profile: full,
        });
        warm = Some(chi);
        if lambda >= lambda_max {
            break;
        }
        current_step = step;
        lambda = (lambda + current_step).min(lambda_max);
    }
    Ok(EeBranch {
        branch: Branch {
            id: BranchId::Ee,
            points,
        },
        truncated_at,
    })
}

/// Locates the critical thickness by bisection on the sign of `mu`, with
/// the eigenvalue-exchange solution re-converged at every probe.
/// The bracket must straddle the sign change.
pub fn find_lambda_c(
    theta: ReducedTemperature,
    bracket: (f64, f64),
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain("bracket must satisfy 0 < lo < hi"));
    }
    let chi_lo = ee_solution_at(theta, lo, grid, None, opts)?;
    let mu_lo = mu(&chi_lo, lo, theta)?;
    let chi_hi = ee_solution_at(theta, hi, grid, Some(&chi_lo), opts)?;
    let mu_hi = mu(&chi_hi, hi, theta)?;
    if mu_lo <= 0.0 || mu_hi >= 0.0 {
        return Err(Error::Bracket(
            "mu does not change sign from + to - on the bracket",
        ));
    }
    let mut warm = chi_lo;
    loop {
        let mid = 0.5 * (lo + hi);
        let chi = ee_solution_at(theta, mid, grid, Some(&warm), opts)?;
        let mu_mid = mu(&chi, mid, theta)?;
        if fp::abs(mu_mid) < 1e-8 || hi - lo < 1e-10 {
            return Ok(mid);
        }
        if mu_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        warm = chi;
    }
}

/// Critical solution and L2-normalized kernel eigenfunction at `lambda_c`,
/// sign-fixed so the kernel is positive at `x = 0`.
pub fn bifurcation_kernel(
    theta: ReducedTemperature,
    lambda_c: f64,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<(EEProfile, Vec<f64>)> {
    let chi = ee_solution_at(theta, lambda_c, grid, None, opts)?;
    let psi = assemble_psi(&chi, lambda_c, theta)?;
    let sp = psi.smallest_eigenpair()?;
    let mut kernel = sp.eigenfunction;
    let mid_interior = (kernel.len() - 1) / 2;
    if kernel[mid_interior] < 0.0 {
        for v in kernel.iter_mut() {
            *v = -*v;
        }
    }
    Ok((chi, kernel))
}

/// Checks the two bifurcation conditions for a general temperature by
/// tracing the branch until `mu` turns negative, `nu` hits its horizon,
/// or the thickness cap is reached.
pub fn check_bifurcation_conditions(
    theta: ReducedTemperature,
    lambda_cap: f64,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<BifurcationConditions> {
    let step = 0.05;
    let mut lambda = 0.1;
    let mut warm: Option<EEProfile> = None;
    let mut prev: Option<(f64, f64)> = None; // (lambda, mu)
    loop {
        let chi = ee_solution_at(theta, lambda, grid, warm.as_ref(), opts)?;
        let phi = assemble_phi(&chi, lambda, theta)?;
        let nu_val = phi.smallest_eigenpair()?.eigenvalue;
        if nu_val < -phi.noise_floor() {
            return Ok(BifurcationConditions {
                condition_i: false,
                condition_ii: false,
                lambda_c: None,
                mu_slope_at_lambda_c: None,
                truncated_at: Some(lambda),
                inconclusive_at_cap: false,
            });
        }
        let mu_val = mu(&chi, lambda, theta)?;
        if mu_val < 0.0 {
            let bracket_lo = prev.map(|(l, _)| l).unwrap_or(lambda / 2.0);
            let lambda_c = find_lambda_c(theta, (bracket_lo, lambda), grid, opts)?;
            // centered difference of mu at the crossing
            let delta = 0.01;
            let chi_m = ee_solution_at(theta, lambda_c - delta, grid, Some(&chi), opts)?;
            let chi_p = ee_solution_at(theta, lambda_c + delta, grid, Some(&chi), opts)?;
            let slope = (mu(&chi_p, lambda_c + delta, theta)?
                - mu(&chi_m, lambda_c - delta, theta)?)
                / (2.0 * delta);
            return Ok(BifurcationConditions {
                condition_i: true,
                condition_ii: slope < 0.0,
                lambda_c: Some(lambda_c),
                mu_slope_at_lambda_c: Some(slope),
                truncated_at: None,
                inconclusive_at_cap: false,
            });
        }
        if lambda >= lambda_cap {
            return Ok(BifurcationConditions {
                condition_i: false,
                condition_ii: false,
                lambda_c: None,
                mu_slope_at_lambda_c: None,
                truncated_at: None,
                inconclusive_at_cap: true,
            });
        }
        prev = Some((lambda, mu_val));
        warm = Some(chi);
        lambda = (lambda + step).min(lambda_cap);
    }
}

/// Solves the amplitude-pinned extended system
/// `{residual = 0, <q3, h_c> = t}` for the profile and the thickness,
/// starting from the critical solution plus `t` times the kernel.
///
/// Returns the bent-director solution and its `lambda(t)`. A Newton
/// failure usually means the amplitude is too large for the local branch;
/// retry with a smaller `|t|`.
pub fn branch_switch(
    theta: ReducedTemperature,
    lambda_c: f64,
    chi_c: &EEProfile,
    kernel: &[f64],
    t: f64,
    opts: &SolveOptions,
) -> Result<(Profile, f64)> {
    let mut profile = chi_c.embed();
    let m = profile.grid.n_interior();
    if kernel.len() != m {
        return Err(Error::Domain("kernel must be an interior-node array"));
    }
    for i in 0..m {
        profile.q3[i + 1] = t * kernel[i];
    }
    extend_bd_solution(theta, lambda_c, &mut profile, kernel, t, opts)
        .map(|lambda| (profile, lambda))
}

/// Newton on the bordered system; mutates `profile` in place and returns
/// the converged `lambda`.
fn extend_bd_solution(
    theta: ReducedTemperature,
    lambda_start: f64,
    profile: &mut Profile,
    kernel: &[f64],
    t: f64,
    opts: &SolveOptions,
) -> Result<f64> {
    let grid = profile.grid.clone();
    let h = grid.spacing();
    let m = grid.n_interior();
    let rhs_fn = full_rhs(theta);
    let hess_fn = full_hess(theta);
    let mut lambda = lambda_start;

    let residual_pair = |p: &Profile, lambda: f64| -> (Vec<f64>, f64) {
        let refs: [&[f64]; 3] = [&p.q1, &p.q2, &p.q3];
        let r = residual_interleaved(&refs, h, lambda, &rhs_fn);
        let mut g = -t;
        for i in 0..m {
            g += h * p.q3[i + 1] * kernel[i];
        }
        (r, g)
    };
    let norm_of = |r: &[f64], g: f64| -> f64 {
        r.iter()
            .fold(fp::abs(g), |acc, v| acc.max(fp::abs(*v)))
    };

    let (mut r, mut g) = residual_pair(profile, lambda);
    let mut rn = norm_of(&r, g);
    for iterations in 0..opts.max_iterations {
        if rn <= opts.residual_tolerance {
            return Ok(lambda);
        }
        let refs: [&[f64]; 3] = [&profile.q1, &profile.q2, &profile.q3];
        let jmat = newton_matrix(&refs, h, lambda, METRIC_WEIGHTS, &hess_fn);
        let lu = BandLu::factor(&jmat, 0.0).map_err(|_| Error::NonConvergence {
            iterations,
            residual: rn,
        })?;
        // bordered elimination: J a = -W r, J b = -W dr/dlambda
        let mut a = vec![0.0; 3 * m];
        let mut b = vec![0.0; 3 * m];
        for i in 0..m {
            let q = QComponents::new(profile.q1[i + 1], profile.q2[i + 1], profile.q3[i + 1]);
            let rhs = euler_lagrange_rhs(q, theta);
            let rhs = [rhs.q1, rhs.q2, rhs.q3];
            for c in 0..3 {
                a[3 * i + c] = -METRIC_WEIGHTS[c] * r[3 * i + c];
                // d(residual)/d lambda = -2 lambda rhs
                b[3 * i + c] = METRIC_WEIGHTS[c] * 2.0 * lambda * rhs[c];
            }
        }
        lu.solve_in_place(&mut a);
        lu.solve_in_place(&mut b);
        let mut ca = 0.0;
        let mut cb = 0.0;
        for i in 0..m {
            ca += h * kernel[i] * a[3 * i + 2];
            cb += h * kernel[i] * b[3 * i + 2];
        }
        if cb == 0.0 {
            return Err(Error::NonConvergence {
                iterations,
                residual: rn,
            });
        }
        let dlambda = -(g + ca) / cb;
        let mut step = 1.0;
        let mut accepted = false;
        while step >= opts.damping_min_step {
            let mut trial = profile.clone();
            for i in 0..m {
                trial.q1[i + 1] += step * (a[3 * i] + dlambda * b[3 * i]);
                trial.q2[i + 1] += step * (a[3 * i + 1] + dlambda * b[3 * i + 1]);
                trial.q3[i + 1] += step * (a[3 * i + 2] + dlambda * b[3 * i + 2]);
            }
            let trial_lambda = lambda + step * dlambda;
            if trial_lambda > 0.0 {
                let (tr, tg) = residual_pair(&trial, trial_lambda);
                let trn = norm_of(&tr, tg);
                if trn <= opts.residual_tolerance || trn < rn * (1.0 - 1e-4 * step) {
                    *profile = trial;
                    lambda = trial_lambda;
                    r = tr;
                    g = tg;
                    rn = trn;
                    accepted = true;
                    break;
                }
            }
            step *= opts.damping_shrink;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations,
                residual: rn,
            });
        }
    }
    if rn <= opts.residual_tolerance {
        Ok(lambda)
    } else {
        Err(Error::NonConvergence {
            iterations: opts.max_iterations,
            residual: rn,
        })
    }
}

/// Follows one bent-director arm by amplitude continuation with warm
/// starts. `t_step`'s sign selects the arm. Stops at `t_max` in magnitude,
/// when `lambda` exceeds `lambda_cap`, or when the amplitude step
/// underflows after repeated halving.
#[allow(clippy::too_many_arguments)]
pub fn follow_bd_branch(
    theta: ReducedTemperature,
    lambda_c: f64,
    chi_c: &EEProfile,
    kernel: &[f64],
    t_step: f64,
    t_max: f64,
    lambda_cap: f64,
    opts: &SolveOptions,
) -> Result<Branch> {
    if t_step == 0.0 || !(t_max > 0.0) {
        return Err(Error::Domain("need a nonzero amplitude step and t_max > 0"));
    }
    let id = if t_step > 0.0 {
        BranchId::BdPlus
    } else {
        BranchId::BdMinus
    };
    let mut points = Vec::new();
    let mut profile = chi_c.embed();
    let m = profile.grid.n_interior();
    let mut lambda = lambda_c;
    let mut t = 0.0;
    let mut dt = t_step;
    let mid = profile.grid.mid();
    while fp::abs(t) < t_max && lambda <= lambda_cap {
        let t_next = t + dt;
        let mut trial = profile.clone();
        if points.is_empty() {
            for i in 0..m {
                trial.q3[i + 1] = t_next * kernel[i];
            }
        }
        match extend_bd_solution(theta, lambda, &mut trial, kernel, t_next, opts) {
            Ok(l_next) => {
                if l_next > lambda_cap && !points.is_empty() {
                    break;
                }
                profile = trial;
                lambda = l_next;
                t = t_next;
                dt = t_step;
                let energy = total_energy(&profile, lambda, theta)?;
                points.push(BranchPoint {
                    lambda,
                    t,
                    energy,
                    nu: None,
                    mu: None,
                    q3_mid: profile.q3[mid],
                    profile: profile.clone(),
                });
            }
            Err(e) => {
                dt *= 0.5;
                if fp::abs(dt) < fp::abs(t_step) * 1e-3 {
                    if points.is_empty() {
                        return Err(e);
                    }
                    break;
                }
            }
        }
    }
    Ok(Branch { id, points })
}

/// Runs the whole pitchfork analysis at a given temperature: critical
/// thickness, kernel, both arms, measured `lambda''(0)`, and the
/// arm-symmetry residuals.
pub fn bifurcation_report(
    theta: ReducedTemperature,
    bracket: (f64, f64),
    t_step: f64,
    t_max: f64,
    lambda_cap: f64,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<BifurcationReport> {
    let lambda_c = find_lambda_c(theta, bracket, grid, opts)?;
    let (chi_c, kernel) = bifurcation_kernel(theta, lambda_c, grid, opts)?;
    let bd_plus = follow_bd_branch(
        theta, lambda_c, &chi_c, &kernel, t_step, t_max, lambda_cap, opts,
    )?;
    let bd_minus = follow_bd_branch(
        theta, lambda_c, &chi_c, &kernel, -t_step, t_max, lambda_cap, opts,
    )?;
    let symmetry = arm_symmetry_residuals(&bd_plus, &bd_minus)?;
    // curvature of lambda(t) at onset from the smallest recorded amplitude
    let lambda_second_derivative = bd_plus
        .points
        .first()
        .map(|p| 2.0 * (p.lambda - lambda_c) / (p.t * p.t))
        .unwrap_or(0.0);
    Ok(BifurcationReport {
        theta: theta.value(),
        lambda_c,
        chi_c,
        kernel,
        lambda_second_derivative,
        bd_plus,
        bd_minus,
        symmetry,
    })
}

/// Pairs up the two arms at matched amplitudes and measures the mirror
/// defects.
pub fn arm_symmetry_residuals(plus: &Branch, minus: &Branch) -> Result<SymmetryResiduals> {
    let mut out = SymmetryResiduals::default();
    for (p, q) in plus.points.iter().zip(&minus.points) {
        if fp::abs(p.t + q.t) > 1e-12 {
            continue; // arms advanced with different adaptive steps
        }
        out.lambda_mismatch = out.lambda_mismatch.max(fp::abs(p.lambda - q.lambda));
        out.energy_mismatch = out.energy_mismatch.max(fp::abs(p.energy - q.energy));
        let n = p.profile.grid.n_nodes();
        if q.profile.grid.n_nodes() != n {
            return Err(Error::GridMismatch);
        }
        for i in 0..n {
            out.profile_mismatch = out
                .profile_mismatch
                .max(fp::abs(p.profile.q1[i] - q.profile.q1[i]))
                .max(fp::abs(p.profile.q2[i] - q.profile.q2[i]))
                .max(fp::abs(p.profile.q3[i] + q.profile.q3[i]));
        }
    }
    Ok(out)
}

/// Probes local exhaustiveness around the critical point: perturbed
/// multi-start near the eigenvalue-exchange solution must find exactly one
/// local solution below `lambda_c` and exactly three above (the exchange
/// solution and the two arms), and the arm symmetries must hold.
pub fn verify_pitchfork(
    report: &BifurcationReport,
    grid: &Grid,
    opts: &SolveOptions,
    probe_offset: f64,
    seed: u64,
) -> Result<PitchforkCheck> {
    let theta = ReducedTemperature::new(report.theta)?;
    let below = local_solution_count(
        theta,
        report.lambda_c - probe_offset,
        &report.chi_c,
        &report.kernel,
        grid,
        opts,
        seed,
    )?;
    let above = local_solution_count(
        theta,
        report.lambda_c + probe_offset,
        &report.chi_c,
        &report.kernel,
        grid,
        opts,
        seed,
    )?;
    let sym_ok = report.symmetry.lambda_mismatch < 1e-8
        && report.symmetry.profile_mismatch < 1e-8
        && report.symmetry.energy_mismatch < 1e-10;
    Ok(PitchforkCheck {
        symmetry: report.symmetry,
        n_local_below: below,
        n_local_above: above,
        probe_offset,
        passed: sym_ok && below == 1 && above == 3,
    })
}

/// Local multi-start around the eigenvalue-exchange solution at `lambda`:
/// kernel-direction kicks of both signs, the unperturbed solution, and
/// seeded smooth perturbations; converged results are deduplicated and
/// restricted to an L2 ball around the exchange solution.
fn local_solution_count(
    theta: ReducedTemperature,
    lambda: f64,
    chi_c: &EEProfile,
    kernel: &[f64],
    grid: &Grid,
    opts: &SolveOptions,
    seed: u64,
) -> Result<usize> {
    let chi = ee_solution_at(theta, lambda, grid, Some(chi_c), opts)?;
    let base = chi.embed();
    let m = grid.n_interior();
    let mut rng = SeededRng::new(seed);
    let mut starts: Vec<Profile> = vec![base.clone()];
    for amp in [0.2, 0.5, -0.2, -0.5] {
        let mut p = base.clone();
        for i in 0..m {
            p.q3[i + 1] += amp * kernel[i];
        }
        starts.push(p);
    }
    for k in 0..4 {
        let mut p = base.clone();
        let coef: Vec<f64> = (0..3).map(|_| 0.2 * rng.symmetric()).collect();
        for (i, &x) in grid.nodes().iter().enumerate().take(grid.n_nodes() - 1).skip(1) {
            let s1 = fp::sin(core::f64::consts::PI * (x + 1.0) / 2.0);
            let s2 = fp::sin(core::f64::consts::PI * (x + 1.0));
            let s3 = fp::sin(1.5 * core::f64::consts::PI * (x + 1.0));
            let bump = coef[0] * s1 + coef[1] * s2 + coef[2] * s3;
            p.q1[i] += 0.3 * bump;
            p.q2[i] += bump;
            if k % 2 == 0 {
                p.q3[i] += coef[1] * s1 - coef[0] * s2;
            }
        }
        starts.push(p);
    }

    let mut found: Vec<Profile> = Vec::new();
    for start in &starts {
        let out = crate::newton::gradient_flow_descent(start, lambda, theta, opts)?;
        if !out.converged {
            continue;
        }
        if out.profile.l2_distance(&base)? > 3.0 {
            continue; // left the local neighborhood
        }
        if found
            .iter()
            .all(|p| p.l2_distance(&out.profile).unwrap_or(f64::INFINITY) >= 1e-6)
        {
            found.push(out.profile);
        }
    }
    Ok(found.len())
}

/// One row of the exported bifurcation diagram.
#[derive(Debug, Clone)]
pub struct DiagramRow {
    pub branch_id: BranchId,
    pub lambda: f64,
    pub t: f64,
    pub energy: f64,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub q3_mid: f64,
}

/// Flattens branches into diagram rows, EE first, then the arms, each in
/// parameter order.
pub fn diagram_rows(branches: &[&Branch]) -> Vec<DiagramRow> {
    let mut rows = Vec::new();
    for b in branches {
        for p in &b.points {
            rows.push(DiagramRow {
                branch_id: b.id,
                lambda: p.lambda,
                t: p.t,
                energy: p.energy,
                nu: p.nu,
                mu: p.mu,
                q3_mid: p.q3_mid,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(v: f64) -> ReducedTemperature {
        ReducedTemperature::new(v).unwrap()
    }

    // moderate grid keeps these structural tests quick; the full-size runs
    // live in the acceptance suite
    fn grid() -> Grid {
        Grid::uniform(501).unwrap()
    }

    #[test]
    fn lambda_c_bracket_without_sign_change_is_rejected() {
        let g = grid();
        let err = find_lambda_c(th(-8.0), (0.2, 0.4), &g, &SolveOptions::default());
        assert!(matches!(err, Err(Error::Bracket(_))), "{err:?}");
    }

    #[test]
    fn lambda_c_and_slope_at_theta_minus_8() {
        let g = grid();
        let opts = SolveOptions::default();
        let t = th(-8.0);
        let lc = find_lambda_c(t, (0.2, 2.0), &g, &opts).unwrap();
        assert!((0.5..1.5).contains(&lc), "lambda_c = {lc}");
        // mu changes sign across lambda_c
        let chi_m = ee_solution_at(t, lc - 0.1, &g, None, &opts).unwrap();
        let chi_p = ee_solution_at(t, lc + 0.1, &g, Some(&chi_m), &opts).unwrap();
        assert!(mu(&chi_m, lc - 0.1, t).unwrap() > 0.0);
        assert!(mu(&chi_p, lc + 0.1, t).unwrap() < 0.0);
    }

    #[test]
    fn ee_branch_records_positive_nu_and_constant_q1() {
        let g = grid();
        let t = th(-8.0);
        let trace =
            continue_ee_branch(t, 0.2, 3.0, 0.2, &g, &SolveOptions::default()).unwrap();
        assert!(trace.truncated_at.is_none());
        assert!(trace.branch.points.len() >= 14);
        for p in &trace.branch.points {
            assert!(p.nu.unwrap() > 0.0, "nu at lambda={}", p.lambda);
            let worst = p
                .profile
                .q1
                .iter()
                .fold(0.0_f64, |a, v| a.max((v - 2.0 / 3.0).abs()));
            assert!(worst < 1e-8);
        }
        // mu decreasing over this thin range
        let mus: Vec<f64> = trace.branch.points.iter().map(|p| p.mu.unwrap()).collect();
        for w in mus.windows(2) {
            assert!(w[1] < w[0], "mu not decreasing: {w:?}");
        }
    }

    #[test]
    fn branch_switch_produces_a_symmetric_pair() {
        let g = grid();
        let t = th(-8.0);
        let opts = SolveOptions::default();
        let lc = find_lambda_c(t, (0.2, 2.0), &g, &opts).unwrap();
        let (chi_c, kernel) = bifurcation_kernel(t, lc, &g, &opts).unwrap();
        // kernel sign convention
        assert!(kernel[(kernel.len() - 1) / 2] > 0.0);
        let (p_plus, l_plus) = branch_switch(t, lc, &chi_c, &kernel, 0.05, &opts).unwrap();
        let (p_minus, l_minus) = branch_switch(t, lc, &chi_c, &kernel, -0.05, &opts).unwrap();
        assert!((l_plus - l_minus).abs() < 1e-8);
        let mid = g.mid();
        assert!(p_plus.q3[mid] > 0.0 && p_minus.q3[mid] < 0.0);
        let e_plus = total_energy(&p_plus, l_plus, t).unwrap();
        let e_minus = total_energy(&p_minus, l_minus, t).unwrap();
        assert!((e_plus - e_minus).abs() < 1e-10);
        // amplitude pinned by the kernel projection
        let h = g.spacing();
        let dot: f64 = (0..g.n_interior())
            .map(|i| h * p_plus.q3[i + 1] * kernel[i])
            .sum();
        assert!((dot - 0.05).abs() < 1e-9);
        // genuine full-system solutions, not exchange profiles
        let r = crate::energy::energy_gradient(&p_plus, l_plus, t).unwrap();
        let worst = r.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
        assert!(worst < 1e-9);
        assert!(p_plus.q3.iter().fold(0.0_f64, |a, v| a.max(v.abs())) > 0.005);
        // vanishing amplitude recovers the critical point
        let (p0, l0) = branch_switch(t, lc, &chi_c, &kernel, 1e-8, &opts).unwrap();
        assert!((l0 - lc).abs() < 1e-6);
        assert!(p0.l2_distance(&chi_c.embed()).unwrap() < 1e-6);
    }

    #[test]
    fn bd_arms_are_mirror_images() {
        let g = grid();
        let t = th(-8.0);
        let opts = SolveOptions::default();
        let report =
            bifurcation_report(t, (0.2, 2.0), 0.1, 0.45, 20.0, &g, &opts).unwrap();
        assert!(report.bd_plus.points.len() >= 4);
        assert_eq!(report.bd_plus.points.len(), report.bd_minus.points.len());
        assert!(report.symmetry.lambda_mismatch < 1e-8);
        assert!(report.symmetry.profile_mismatch < 1e-8);
        assert!(report.symmetry.energy_mismatch < 1e-10);
        // lambda increases along the arm (the measured pitchfork opens
        // towards thicker cells)
        let ls: Vec<f64> = report.bd_plus.points.iter().map(|p| p.lambda).collect();
        for w in ls.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(report.lambda_second_derivative > 0.0);
    }

    #[test]
    fn conditions_hold_for_theta_near_minus_8() {
        let g = Grid::uniform(301).unwrap();
        let opts = SolveOptions::default();
        for theta in [-8.0, -7.9] {
            let c = check_bifurcation_conditions(th(theta), 20.0, &g, &opts).unwrap();
            assert!(c.condition_i && c.condition_ii, "theta={theta}: {c:?}");
            assert!(c.mu_slope_at_lambda_c.unwrap() < 0.0);
        }
    }
}
