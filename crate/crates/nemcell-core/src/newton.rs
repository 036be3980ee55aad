//! Nonlinear solves: damped Newton on the discrete Euler-Lagrange systems,
//! semi-implicit gradient-flow descent, and a seeded multi-start harness.
//!
//! Residuals are measured in the curvature form `q'' - lambda^2 rhs(q)`
//! (the Euler-Lagrange equation multiplied through by `lambda^2`), whose
//! floating-point floor is independent of `lambda`; this keeps one
//! tolerance meaningful from the thin-cell to the thick-cell regime.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandLu, SymBanded};
use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::fp;
use crate::grid::{EEProfile, Grid, Profile};
use crate::qtensor::{
    bulk_hessian, euler_lagrange_rhs, MaterialConstants, QComponents, ReducedTemperature,
    METRIC_WEIGHTS,
};
use crate::rng::SeededRng;

/// Tuning knobs for the Newton and gradient-flow drivers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Tolerance on the max-norm of the curvature-form residual. The
    /// solver applies it relative to the representable floor
    /// `~4 eps |q| / h^2` of that residual, which dominates on grids finer
    /// than a couple thousand nodes.
    pub residual_tolerance: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub damping_shrink: f64,
    /// Smallest accepted backtracking step.
    pub damping_min_step: f64,
    /// Initial pseudo-time step of the gradient flow.
    pub flow_step: f64,
    /// Budget of accepted flow steps before every Newton polish attempt.
    pub flow_max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            residual_tolerance: 1e-9,
            damping_shrink: 0.5,
            damping_min_step: 1e-12,
            flow_step: 5e-3,
            flow_max_steps: 1200,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.residual_tolerance > 0.0) {
            return Err(Error::Domain("residual tolerance must be positive"));
        }
        if !(self.damping_shrink > 0.0 && self.damping_shrink < 1.0) {
            return Err(Error::Domain("damping shrink factor must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Result of a nonlinear solve. `converged` implies `final_residual` is
/// below the requested tolerance or the floating-point floor of the
/// residual evaluation, whichever is larger.
#[derive(Debug, Clone)]
pub struct SolveOutcome<P> {
    pub profile: P,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Max-norm residual before each Newton iteration (and after the last).
    pub residual_history: Vec<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("lambda must be positive"))
    }
}

/// Curvature-form residual, interleaved over interior nodes.
pub(crate) fn residual_interleaved<const C: usize>(
    comps: &[&[f64]; C],
    h: f64,
    lambda: f64,
    rhs_fn: &impl Fn([f64; C]) -> [f64; C],
) -> Vec<f64> {
    let n = comps[0].len();
    let m = n - 2;
    let l2 = lambda * lambda;
    let h2 = h * h;
    let mut out = vec![0.0; C * m];
    for i in 1..n - 1 {
        let mut at = [0.0; C];
        for c in 0..C {
            at[c] = comps[c][i];
        }
        let rhs = rhs_fn(at);
        for c in 0..C {
            let q = comps[c];
            // (a + b) - 2c stencil order: exactly equivariant under reflection
            out[(i - 1) * C + c] = ((q[i + 1] + q[i - 1]) - 2.0 * q[i]) / h2 - l2 * rhs[c];
        }
    }
    out
}

/// Symmetric Newton matrix `W T / h^2 - lambda^2 Hf` over interleaved
/// interior unknowns (the row-weighted Jacobian of the curvature residual).
pub(crate) fn newton_matrix<const C: usize>(
    comps: &[&[f64]; C],
    h: f64,
    lambda: f64,
    weights: [f64; C],
    hess_fn: &impl Fn([f64; C]) -> [[f64; C]; C],
) -> SymBanded {
    let n = comps[0].len();
    let m = n - 2;
    let l2 = lambda * lambda;
    let h2 = h * h;
    let mut j = SymBanded::zeros(C * m, C);
    for ii in 0..m {
        let mut at = [0.0; C];
        for c in 0..C {
            at[c] = comps[c][ii + 1];
        }
        let hf = hess_fn(at);
        for c in 0..C {
            let row = ii * C + c;
            j.add(row, row, -2.0 * weights[c] / h2);
            if ii + 1 < m {
                j.add(row, row + C, weights[c] / h2);
            }
            for d in c..C {
                j.add(row, ii * C + d, -l2 * hf[c][d]);
            }
        }
    }
    j
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(fp::abs(*x)))
}

/// Damped Newton driver over `C` interleaved components. Mutates the node
/// arrays in place; boundary entries are left untouched.
pub(crate) fn newton_drive<const C: usize>(
    q: &mut [Vec<f64>; C],
    h: f64,
    lambda: f64,
    weights: [f64; C],
    rhs_fn: &impl Fn([f64; C]) -> [f64; C],
    hess_fn: &impl Fn([f64; C]) -> [[f64; C]; C],
    opts: &SolveOptions,
) -> (usize, f64, bool, Vec<f64>) {
    let n = q[0].len();
    let m = n - 2;
    let mut history = Vec::new();
    let resid = |q: &[Vec<f64>; C]| -> Vec<f64> {
        let refs: [&[f64]; C] = core::array::from_fn(|c| q[c].as_slice());
        residual_interleaved(&refs, h, lambda, rhs_fn)
    };
    let mut r = resid(q);
    let mut rn = max_abs(&r);
    history.push(rn);
    for iter in 0..opts.max_iterations {
        // the curvature-form residual cannot be evaluated below
        // ~eps |q| / h^2; on fine grids that floor exceeds any fixed
        // tolerance, so convergence is declared relative to it
        let amp = q
            .iter()
            .map(|comp| max_abs(comp))
            .fold(0.0_f64, f64::max);
        let floor = 4.0 * f64::EPSILON * (1.0 + amp) / (h * h);
        let effective_tol = opts.residual_tolerance.max(floor);
        if rn <= effective_tol {
            return (iter, rn, true, history);
        }
        let refs: [&[f64]; C] = core::array::from_fn(|c| q[c].as_slice());
        let jmat = newton_matrix(&refs, h, lambda, weights, hess_fn);
        let lu = match BandLu::factor(&jmat, 0.0) {
            Ok(f) => f,
            Err(_) => return (iter, rn, false, history),
        };
        let mut delta = vec![0.0; C * m];
        for ii in 0..m {
            for c in 0..C {
                delta[ii * C + c] = -weights[c] * r[ii * C + c];
            }
        }
        lu.solve_in_place(&mut delta);
        // backtracking on the residual max-norm
        let mut t = 1.0;
        let mut accepted = false;
        while t >= opts.damping_min_step {
            let mut trial = q.clone();
            for ii in 0..m {
                for c in 0..C {
                    trial[c][ii + 1] += t * delta[ii * C + c];
                }
            }
            let trial_r = resid(&trial);
            let trial_rn = max_abs(&trial_r);
            if trial_rn <= effective_tol || trial_rn < rn * (1.0 - 1e-4 * t) {
                *q = trial;
                r = trial_r;
                rn = trial_rn;
                accepted = true;
                break;
            }
            t *= opts.damping_shrink;
        }
        history.push(rn);
        if !accepted {
            return (iter + 1, rn, rn <= effective_tol, history);
        }
    }
    let amp = q.iter().map(|comp| max_abs(comp)).fold(0.0_f64, f64::max);
    let floor = 4.0 * f64::EPSILON * (1.0 + amp) / (h * h);
    (
        opts.max_iterations,
        rn,
        rn <= opts.residual_tolerance.max(floor),
        history,
    )
}

pub(crate) fn full_rhs(theta: ReducedTemperature) -> impl Fn([f64; 3]) -> [f64; 3] {
    move |q| {
        let r = euler_lagrange_rhs(QComponents::new(q[0], q[1], q[2]), theta);
        [r.q1, r.q2, r.q3]
    }
}

pub(crate) fn full_hess(theta: ReducedTemperature) -> impl Fn([f64; 3]) -> [[f64; 3]; 3] {
    move |q| bulk_hessian(QComponents::new(q[0], q[1], q[2]), theta)
}

fn ee_rhs(theta: ReducedTemperature) -> impl Fn([f64; 2]) -> [f64; 2] {
    move |q| {
        let r = euler_lagrange_rhs(QComponents::new(q[0], q[1], 0.0), theta);
        [r.q1, r.q2]
    }
}

fn ee_hess(theta: ReducedTemperature) -> impl Fn([f64; 2]) -> [[f64; 2]; 2] {
    move |q| {
        let h = bulk_hessian(QComponents::new(q[0], q[1], 0.0), theta);
        [[h[0][0], h[0][1]], [h[1][0], h[1][1]]]
    }
}

/// Damped Newton on the full three-component Euler-Lagrange system.
/// The initial profile must satisfy the boundary conditions; the endpoint
/// nodes are clamped to the exact boundary data before iterating.
/// Non-convergence is reported through the outcome flag, never silently.
pub fn solve_full(
    initial: &Profile,
    lambda: f64,
    theta: ReducedTemperature,
    opts: &SolveOptions,
) -> Result<SolveOutcome<Profile>> {
    check_lambda(lambda)?;
    opts.validate()?;
    let mut p = initial.clone();
    p.clamp_boundary(theta);
    let h = p.grid.spacing();
    let mut q = [p.q1, p.q2, p.q3];
    let (iterations, final_residual, converged, residual_history) = newton_drive(
        &mut q,
        h,
        lambda,
        METRIC_WEIGHTS,
        &full_rhs(theta),
        &full_hess(theta),
        opts,
    );
    let [q1, q2, q3] = q;
    Ok(SolveOutcome {
        profile: Profile::new(p.grid, q1, q2, q3)?,
        iterations,
        final_residual,
        converged,
        residual_history,
    })
}

/// Damped Newton on the two-component eigenvalue-exchange restriction.
pub fn solve_ee(
    initial: &EEProfile,
    lambda: f64,
    theta: ReducedTemperature,
    opts: &SolveOptions,
) -> Result<SolveOutcome<EEProfile>> {
    check_lambda(lambda)?;
    opts.validate()?;
    let mut p = initial.clone();
    p.clamp_boundary(theta);
    let h = p.grid.spacing();
    let mut q = [p.q1, p.q2];
    let (iterations, final_residual, converged, residual_history) = newton_drive(
        &mut q,
        h,
        lambda,
        [METRIC_WEIGHTS[0], METRIC_WEIGHTS[1]],
        &ee_rhs(theta),
        &ee_hess(theta),
        opts,
    );
    let [q1, q2] = q;
    Ok(SolveOutcome {
        profile: EEProfile::new(p.grid, q1, q2)?,
        iterations,
        final_residual,
        converged,
        residual_history,
    })
}

/// Semi-implicit gradient flow (backward Euler on the elastic term) that
/// descends the energy until Newton's basin is reached, then polishes with
/// [`solve_full`]. Energy decreases monotonically across accepted flow
/// steps; a step that fails to decrease it is rejected and retried with
/// half the pseudo-time step. Step underflow yields `converged = false`.
pub fn gradient_flow_descent(
    initial: &Profile,
    lambda: f64,
    theta: ReducedTemperature,
    opts: &SolveOptions,
) -> Result<SolveOutcome<Profile>> {
    check_lambda(lambda)?;
    opts.validate()?;
    let mut p = initial.clone();
    p.clamp_boundary(theta);
    let grid = p.grid.clone();
    let h = grid.spacing();
    let n = grid.n_nodes();
    let m = n - 2;
    let l2h2 = lambda * lambda * h * h;
    let rhs_fn = full_rhs(theta);

    let mut dt = opts.flow_step;
    let mut energy = total_energy(&p, lambda, theta)?;
    let mut exit_residual = 1.0_f64.max(opts.residual_tolerance * 1e6);
    let mut total_flow_steps = 0usize;

    for _round in 0..6 {
        // (1/dt - D2 / (lambda h)^2 ...) tridiagonal operator, SPD
        let flow_matrix = |dt: f64| -> SymBanded {
            let mut a = SymBanded::zeros(m, 1);
            for i in 0..m {
                a.add(i, i, 1.0 / dt + 2.0 / l2h2);
                if i + 1 < m {
                    a.add(i, i + 1, -1.0 / l2h2);
                }
            }
            a
        };
        let mut lu = BandLu::factor(&flow_matrix(dt), 0.0)
            .map_err(|_| Error::Domain("flow operator factorization failed"))?;
        let mut lu_dt = dt;
        let mut steps = 0usize;
        // the flow must also be stationary before Newton takes over, or a
        // start near a saddle would be polished straight back onto it
        let mut marked_energy = energy;
        let mut marked_step = 0usize;
        loop {
            if steps >= opts.flow_max_steps {
                break;
            }
            let stalled = steps.saturating_sub(marked_step) >= 25;
            let refs: [&[f64]; 3] = [&p.q1, &p.q2, &p.q3];
            let r = residual_interleaved(&refs, h, lambda, &rhs_fn);
            if max_abs(&r) <= exit_residual && stalled {
                break;
            }
            if lu_dt != dt {
                lu = BandLu::factor(&flow_matrix(dt), 0.0)
                    .map_err(|_| Error::Domain("flow operator factorization failed"))?;
                lu_dt = dt;
            }
            let mut trial = p.clone();
            {
                let comps: [&mut Vec<f64>; 3] = [&mut trial.q1, &mut trial.q2, &mut trial.q3];
                for (c, comp) in comps.into_iter().enumerate() {
                    let mut b = vec![0.0; m];
                    for i in 0..m {
                        let at = QComponents::new(p.q1[i + 1], p.q2[i + 1], p.q3[i + 1]);
                        let rhs = euler_lagrange_rhs(at, theta);
                        let rhs = [rhs.q1, rhs.q2, rhs.q3][c];
                        b[i] = comp[i + 1] / dt - rhs;
                    }
                    b[0] += comp[0] / l2h2;
                    b[m - 1] += comp[n - 1] / l2h2;
                    lu.solve_in_place(&mut b);
                    comp[1..(m + 1)].copy_from_slice(&b);
                }
            }
            let trial_energy = total_energy(&trial, lambda, theta)?;
            if trial_energy <= energy {
                p = trial;
                energy = trial_energy;
                steps += 1;
                total_flow_steps += 1;
                if energy < marked_energy - 1e-12 * (1.0 + fp::abs(energy)) {
                    marked_energy = energy;
                    marked_step = steps;
                }
            } else {
                // a refused step at an already-small residual means the flow
                // has equilibrated to rounding level: hand over to Newton
                if max_abs(&r) <= exit_residual {
                    break;
                }
                dt *= 0.5;
                if dt < 1e-14 {
                    return Ok(SolveOutcome {
                        profile: p,
                        iterations: total_flow_steps,
                        final_residual: f64::INFINITY,
                        converged: false,
                        residual_history: vec![],
                    });
                }
            }
        }
        let polished = solve_full(&p, lambda, theta, opts)?;
        if polished.converged {
            return Ok(SolveOutcome {
                iterations: total_flow_steps + polished.iterations,
                ..polished
            });
        }
        // not in the basin yet: flow further before the next attempt
        exit_residual *= 0.1;
    }
    let last = solve_full(&p, lambda, theta, opts)?;
    Ok(SolveOutcome {
        iterations: total_flow_steps + last.iterations,
        ..last
    })
}

/// Multi-start search for distinct equilibria at fixed parameters.
///
/// Starts are deterministic for a fixed seed: the linear interpolation of
/// the boundary data, the uniaxial geodesic and its mirror image, then
/// nodewise-uniform random profiles in the max-norm ball (boundary values
/// clamped); every fourth random start has `q3` zeroed so the invariant
/// subspace is always probed. Converged results are deduplicated by L2
/// distance below `1e-6` and ordered by energy, then by `q3(0)`.
pub fn multi_start(
    lambda: f64,
    theta: ReducedTemperature,
    grid: &Grid,
    n_starts: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<Vec<SolveOutcome<Profile>>> {
    check_lambda(lambda)?;
    if n_starts == 0 {
        return Err(Error::Domain("n_starts must be at least 1"));
    }
    let constants = MaterialConstants::new(theta)?;
    let ball = constants.max_norm;
    let mut rng = SeededRng::new(seed);
    let n = grid.n_nodes();
    let mut found: Vec<(SolveOutcome<Profile>, f64)> = Vec::new();

    for k in 0..n_starts {
        let start = match k {
            0 => Profile::linear_interpolation(grid, theta),
            1 => crate::asymptotics::uniaxial_limit_profile(grid, theta),
            2 => crate::asymptotics::uniaxial_limit_profile(grid, theta).mirror_q3(),
            _ => {
                let mut p = Profile::linear_interpolation(grid, theta);
                for i in 1..n - 1 {
                    // rejection sampling: uniform in the Frobenius ball
                    let q = loop {
                        let q1 = rng.symmetric() * ball / fp::sqrt(6.0);
                        let q2 = rng.symmetric() * ball / fp::sqrt(2.0);
                        let q3 = rng.symmetric() * ball / fp::sqrt(2.0);
                        let q = QComponents::new(q1, q2, q3);
                        if q.frobenius_norm() <= ball {
                            break q;
                        }
                    };
                    p.q1[i] = q.q1;
                    p.q2[i] = q.q2;
                    p.q3[i] = if k % 4 == 3 { 0.0 } else { q.q3 };
                }
                p
            }
        };
        let outcome = gradient_flow_descent(&start, lambda, theta, opts)?;
        if !outcome.converged {
            continue;
        }
        let is_new = found
            .iter()
            .map(|(o, _)| o.profile.l2_distance(&outcome.profile).unwrap_or(f64::INFINITY))
            .all(|d| d >= 1e-6);
        if is_new {
            let e = total_energy(&outcome.profile, lambda, theta)?;
            found.push((outcome, e));
        }
    }
    found.sort_by(|a, b| {
        let mid = a.0.profile.grid.mid();
        (a.1, a.0.profile.q3[mid])
            .partial_cmp(&(b.1, b.0.profile.q3[mid]))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(found.into_iter().map(|(o, _)| o).collect())
}
