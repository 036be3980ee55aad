//! Both limiting regimes: the thick-cell uniaxial geodesic limit with its
//! rescaled heteroclinic front, and the thin-cell uniqueness certificate.
//!
//! Thick cells: minimizers converge in H1 to the uniaxial geodesic
//! `Q*(x) = 6 q_+ (n* (x) n* - I/3)` with the director rotating along a
//! great circle, and the rescaled `q2(y / lambda)` converges to the
//! heteroclinic front `-2 tanh(sqrt(2) y)` connecting the two wells.
//!
//! Thin cells: the energy is strictly convex below
//! `lambda0 = sqrt(c1 / (2 c2))`, so there is at most one critical point.
//! Here `c1` is one eighth of the first Dirichlet eigenvalue of the domain
//! (the Poincare constant of the midpoint-convexity argument; on `(-1, 1)`
//! this is `(pi/2)^2 / 8`) and `c2` bounds the operator norm of the bulk
//! Hessian over an a-priori ball. The formulas hold verbatim for a general
//! domain with its own first Dirichlet eigenvalue; only the 1D cell
//! instance is computed here.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::fp;
use crate::grid::{Grid, Profile};
use crate::newton::{newton_drive, SolveOptions};
use crate::qtensor::{
    bulk_hessian, q_plus, radial_derivative, MaterialConstants, QComponents, ReducedTemperature,
    sym3_eigenvalues,
};
use crate::rng::SeededRng;

/// Samples the closed-form uniaxial geodesic limit on the grid:
/// `q1 = q_+`, `q2 = -3 q_+ sin(pi x / 2)`, `q3 = 3 q_+ cos(pi x / 2)`.
///
/// Boundary nodes carry the exact boundary data; the bulk density vanishes
/// at every node.
pub fn uniaxial_limit_profile(grid: &Grid, theta: ReducedTemperature) -> Profile {
    let qp = q_plus(theta);
    let n = grid.n_nodes();
    let mut q1 = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    let mut q3 = Vec::with_capacity(n);
    for &x in grid.nodes() {
        let half = core::f64::consts::FRAC_PI_2 * x;
        q1.push(qp);
        q2.push(-3.0 * qp * fp::sin(half));
        q3.push(3.0 * qp * fp::cos(half));
    }
    let mut p = Profile {
        grid: grid.clone(),
        q1,
        q2,
        q3,
    };
    p.clamp_boundary(theta);
    p
}

/// Discrete H1 distance between two profiles on the same grid: the
/// cell-wise difference quotients and the nodal values, both with the
/// Frobenius component weights `(6, 2, 2)`.
pub fn h1_distance(a: &Profile, b: &Profile) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let h = a.grid.spacing();
    let n = a.grid.n_nodes();
    let mut acc = 0.0;
    for c in 0..3 {
        let (pa, pb, w) = match c {
            0 => (&a.q1, &b.q1, 6.0),
            1 => (&a.q2, &b.q2, 2.0),
            _ => (&a.q3, &b.q3, 2.0),
        };
        for i in 0..n - 1 {
            let d = (pa[i + 1] - pb[i + 1]) - (pa[i] - pb[i]);
            acc += w * d * d / h;
        }
        for i in 0..n {
            let wt = if i == 0 || i == n - 1 { h / 2.0 } else { h };
            let d = pa[i] - pb[i];
            acc += w * wt * d * d;
        }
    }
    Ok(fp::sqrt(acc))
}

/// Samples of the (rescaled) front variable on a symmetric `y`-grid,
/// extended by the constants `+2` / `-2` outside the sampled range.
#[derive(Debug, Clone)]
pub struct HeteroclinicProfile {
    pub y: Vec<f64>,
    pub values: Vec<f64>,
}

impl HeteroclinicProfile {
    /// Value at `y`, with constant extension beyond the sampled range and
    /// linear interpolation inside it.
    pub fn eval(&self, y: f64) -> f64 {
        let first = self.y[0];
        let last = *self.y.last().unwrap();
        if y <= first {
            return 2.0;
        }
        if y >= last {
            return -2.0;
        }
        let hy = self.y[1] - self.y[0];
        let idx = ((y - first) / hy) as usize;
        let idx = idx.min(self.y.len() - 2);
        let frac = (y - self.y[idx]) / hy;
        self.values[idx] * (1.0 - frac) + self.values[idx + 1] * frac
    }

    pub fn half_width(&self) -> f64 {
        *self.y.last().unwrap()
    }
}

/// Rescales a converged `q2` field to the front variable `y = lambda x`.
pub fn rescaled_profile(q2: &[f64], grid: &Grid, lambda: f64) -> Result<HeteroclinicProfile> {
    if q2.len() != grid.n_nodes() {
        return Err(Error::Domain("q2 array must match the grid"));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain("lambda must be positive"));
    }
    Ok(HeteroclinicProfile {
        y: grid.nodes().iter().map(|&x| lambda * x).collect(),
        values: q2.to_vec(),
    })
}

/// Newton solve of the front equation `q'' = (q^2 - 4) q` on `[-Y, Y]` with
/// `q(-Y) = 2`, `q(Y) = -2`. The result is odd and strictly decreasing; it
/// matches `-2 tanh(sqrt(2) y)` up to boundary-truncation error.
pub fn heteroclinic_solver(half_width: f64, n_nodes: usize) -> Result<HeteroclinicProfile> {
    if half_width < 10.0 {
        return Err(Error::Domain("half-width must be at least 10"));
    }
    if n_nodes < 3 || n_nodes.is_multiple_of(2) {
        return Err(Error::Domain("node count must be odd and at least 3"));
    }
    let m = (n_nodes - 1) as f64;
    let y: Vec<f64> = (0..n_nodes)
        .map(|j| (2.0 * j as f64 - m) * half_width / m)
        .collect();
    let hy = 2.0 * half_width / m;
    // The solution is odd, so solve on [-Y, 0] with q(0) = 0 and reflect.
    // On a wide domain the full-interval linearization carries an
    // exponentially flat translation direction that lets the front drift
    // at rounding level; pinning the midpoint removes it, and the glued
    // reflection satisfies the interior stencil at y = 0 exactly.
    let mid = (n_nodes - 1) / 2;
    let mut q: Vec<f64> = y[..=mid]
        .iter()
        .map(|&yy| -2.0 * fp::tanh(fp::sqrt(2.0) * yy))
        .collect();
    q[0] = 2.0;
    q[mid] = 0.0;
    let mut state = [q];
    let opts = SolveOptions::default();
    let (iterations, residual, converged, _) = newton_drive(
        &mut state,
        hy,
        1.0,
        [1.0],
        &|v: [f64; 1]| [(v[0] * v[0] - 4.0) * v[0]],
        &|v: [f64; 1]| [[3.0 * v[0] * v[0] - 4.0]],
        &opts,
    );
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }
    let [half] = state;
    let mut values = vec![0.0; n_nodes];
    for (i, &v) in half.iter().enumerate() {
        values[i] = v;
        values[n_nodes - 1 - i] = -v;
    }
    Ok(HeteroclinicProfile { y, values })
}

/// Estimates of the infinite-thickness limit of the symmetry-breaking
/// eigenvalue, from a converged front:
///
/// - `test_value`: Rayleigh quotient of the derivative test function
///   `h = q'` for the limit form `int (h')^2 + (q^2 - 4) h^2` against
///   `int h^2`; its closed-form value on the exact front is `-8/5`.
/// - `eigen_value`: twice the smallest eigenvalue of the limit operator
///   `-h'' + (q^2 - 4) h` on the truncated domain, i.e. the limit of
///   `mu(lambda)` itself; `-4` on the exact front.
pub fn mu_infinity_estimate(front: &HeteroclinicProfile) -> Result<(f64, f64)> {
    let n = front.values.len();
    if n < 5 {
        return Err(Error::Domain("front is sampled too coarsely"));
    }
    let hy = front.y[1] - front.y[0];
    let m = n - 2;
    let q = &front.values;

    // derivative test function on interior nodes
    let mut test = Vec::with_capacity(m);
    for i in 1..n - 1 {
        test.push((q[i + 1] - q[i - 1]) / (2.0 * hy));
    }
    let mut grad = 0.0;
    for i in 0..=m {
        let a = if i == 0 { 0.0 } else { test[i - 1] };
        let b = if i == m { 0.0 } else { test[i] };
        grad += (b - a) * (b - a) / hy;
    }
    let mut pot = 0.0;
    let mut mass = 0.0;
    for i in 0..m {
        let qq = q[i + 1];
        pot += hy * (qq * qq - 4.0) * test[i] * test[i];
        mass += hy * test[i] * test[i];
    }
    let test_value = (grad + pot) / mass;

    // limit operator -h'' + (q^2 - 4) h, Dirichlet on the truncation
    let mut s = SymBanded::zeros(m, 1);
    for i in 0..m {
        let qq = q[i + 1];
        s.add(i, i, 2.0 / hy + hy * (qq * qq - 4.0));
        if i + 1 < m {
            s.add(i, i + 1, -1.0 / hy);
        }
    }
    let mass_vec = alloc::vec![hy; m];
    let (ground, _) = crate::banded::smallest_generalized_eigenpair(&s, &mass_vec)?;
    Ok((test_value, 2.0 * ground))
}

/// Convexity-based thin-cell uniqueness certificate,
/// `lambda0 = sqrt(c1 / (2 c2))`.
#[derive(Debug, Clone, Copy)]
pub struct UniquenessCertificate {
    pub theta: f64,
    /// Poincare constant of the convexity argument, `(pi/2)^2 / 8`.
    pub c1: f64,
    /// Supremum of the (Frobenius-weighted) bulk Hessian operator norm
    /// over the a-priori ball.
    pub c2: f64,
    /// Radius of the a-priori ball: `max(C_radial, |g|_inf)` where
    /// `C_radial` is the smallest radius outside which `grad f . q >= 0`.
    pub bound_radius: f64,
    pub lambda0: f64,
    /// Grid resolution per component axis of the `c2` sampling sweep.
    pub sampling_resolution: usize,
}

/// Computes the certificate for the given temperature and boundary
/// sup-norm (Frobenius norm of the boundary data).
///
/// The radial radius is searched inside the maximum-principle ball
/// inflated by 20%, over ten thousand seeded directions; `c2` is a dense
/// deterministic sweep of the component box at the stated resolution.
pub fn uniqueness_radius(
    theta: ReducedTemperature,
    boundary_sup_norm: f64,
) -> Result<UniquenessCertificate> {
    let constants = MaterialConstants::new(theta)?;
    let ceiling = 1.2 * constants.max_norm;

    // smallest radius with grad f . q >= 0 outside, sampled directions
    let mut rng = SeededRng::new(0xC0FF_EE00);
    let n_dirs = 10_000;
    let n_radii = 480;
    let dr = ceiling / n_radii as f64;
    let mut c_radial = 0.0_f64;
    for _ in 0..n_dirs {
        let (a, b, c) = (rng.symmetric(), rng.symmetric(), rng.symmetric());
        let dir = QComponents::new(a, b, c);
        let norm = dir.frobenius_norm();
        if norm < 1e-9 {
            continue;
        }
        // scan from the ceiling inward: the first bad radius is the largest
        for k in (1..=n_radii).rev() {
            let r = k as f64 * dr;
            if r <= c_radial {
                break;
            }
            let q = QComponents::new(r * a / norm, r * b / norm, r * c / norm);
            if radial_derivative(q, theta) < 0.0 {
                c_radial = r;
                break;
            }
        }
    }
    // pad by one scan cell so the certificate radius is conservative
    if c_radial > 0.0 {
        c_radial += dr;
    }

    let bound_radius = c_radial.max(boundary_sup_norm);

    // c2: weighted Hessian operator norm over the component ball
    let res = 61usize;
    let w_inv_sqrt = [1.0 / fp::sqrt(6.0), 1.0 / fp::sqrt(2.0), 1.0 / fp::sqrt(2.0)];
    let axes = [
        bound_radius / fp::sqrt(6.0),
        bound_radius / fp::sqrt(2.0),
        bound_radius / fp::sqrt(2.0),
    ];
    let mut c2 = 0.0_f64;
    for i in 0..res {
        let q1 = axes[0] * (2.0 * i as f64 / (res - 1) as f64 - 1.0);
        for j in 0..res {
            let q2 = axes[1] * (2.0 * j as f64 / (res - 1) as f64 - 1.0);
            for k in 0..res {
                let q3 = axes[2] * (2.0 * k as f64 / (res - 1) as f64 - 1.0);
                let q = QComponents::new(q1, q2, q3);
                if q.frobenius_norm() > bound_radius {
                    continue;
                }
                let h = bulk_hessian(q, theta);
                let mut hw = [[0.0; 3]; 3];
                for r in 0..3 {
                    for c in 0..3 {
                        hw[r][c] = w_inv_sqrt[r] * h[r][c] * w_inv_sqrt[c];
                    }
                }
                let e = sym3_eigenvalues(&hw);
                c2 = c2.max(fp::abs(e[0])).max(fp::abs(e[2]));
            }
        }
    }

    let c1 = core::f64::consts::FRAC_PI_2 * core::f64::consts::FRAC_PI_2 / 8.0;
    Ok(UniquenessCertificate {
        theta: theta.value(),
        c1,
        c2,
        bound_radius,
        lambda0: fp::sqrt(c1 / (2.0 * c2)),
        sampling_resolution: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::boundary_data;
    use crate::qtensor::bulk_energy;

    fn th(v: f64) -> ReducedTemperature {
        ReducedTemperature::new(v).unwrap()
    }

    #[test]
    fn geodesic_limit_matches_boundary_and_midpoint() {
        let g = Grid::uniform(401).unwrap();
        let t = th(-8.0);
        let p = uniaxial_limit_profile(&g, t);
        let bc = boundary_data(t);
        assert_eq!(p.components_at(0), bc.left);
        assert_eq!(p.components_at(g.n_nodes() - 1), bc.right);
        assert!((p.q3[g.mid()] - 2.0).abs() < 1e-14);
        // pointwise uniaxial minimizers
        let worst = (0..g.n_nodes())
            .map(|i| bulk_energy(p.components_at(i), t).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "max bulk density {worst}");
    }

    #[test]
    fn h1_distance_axioms() {
        let g = Grid::uniform(101).unwrap();
        let t = th(-8.0);
        let a = uniaxial_limit_profile(&g, t);
        let mut b = a.clone();
        for i in 1..g.n_nodes() - 1 {
            b.q3[i] *= 0.9;
        }
        assert_eq!(h1_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(h1_distance(&a, &b).unwrap(), h1_distance(&b, &a).unwrap());
        assert!(h1_distance(&a, &b).unwrap() > 0.0);
    }

    #[test]
    fn heteroclinic_matches_tanh_front() {
        let front = heteroclinic_solver(20.0, 40001).unwrap();
        let mut sup = 0.0_f64;
        for (i, &y) in front.y.iter().enumerate() {
            if y.abs() <= 5.0 {
                let exact = -2.0 * (2.0_f64.sqrt() * y).tanh();
                sup = sup.max((front.values[i] - exact).abs());
            }
        }
        assert!(sup < 1e-6, "sup error {sup}");
        // odd, decreasing (up to rounding in the flat tails), bounded by 2
        let n = front.values.len();
        assert_eq!(front.values[(n - 1) / 2], 0.0);
        for i in 0..n {
            assert_eq!(front.values[i], -front.values[n - 1 - i]);
        }
        for i in 0..n - 1 {
            assert!(front.values[i + 1] <= front.values[i] + 1e-12);
        }
        let mid = (n - 1) / 2;
        for i in mid.saturating_sub(2000)..mid + 2000 {
            assert!(front.values[i + 1] < front.values[i], "front not strictly decreasing at {i}");
        }
        assert!(front.values.iter().all(|v| v.abs() <= 2.0 + 1e-12));
    }

    #[test]
    fn heteroclinic_energy_stabilizes_in_the_half_width() {
        // matched grid spacing, so the comparison isolates the truncation
        let energy_of = |yw: f64| {
            let front = heteroclinic_solver(yw, (yw * 800.0) as usize + 1).unwrap();
            let hy = front.y[1] - front.y[0];
            let q = &front.values;
            let mut e = 0.0;
            for i in 0..q.len() - 1 {
                let d = (q[i + 1] - q[i]) / hy;
                e += hy * d * d;
            }
            for (i, &v) in q.iter().enumerate() {
                let w = if i == 0 || i == q.len() - 1 { hy / 2.0 } else { hy };
                e += w * (v * v - 4.0) * (v * v - 4.0);
            }
            e
        };
        let e15 = energy_of(15.0);
        let e20 = energy_of(20.0);
        assert!(
            (e15 - e20).abs() < 1e-8,
            "front energy drifts with the truncation: {}",
            (e15 - e20).abs()
        );
    }

    #[test]
    fn rescaled_profile_extends_by_the_well_constants() {
        let g = Grid::uniform(11).unwrap();
        let q2: Vec<f64> = g.nodes().iter().map(|x| -2.0 * x).collect();
        let r = rescaled_profile(&q2, &g, 4.0).unwrap();
        assert_eq!(r.eval(-100.0), 2.0);
        assert_eq!(r.eval(100.0), -2.0);
        assert!((r.eval(0.0)).abs() < 1e-15);
        assert!((r.eval(2.0) + 1.0).abs() < 1e-12); // interior interpolation
    }

    #[test]
    fn mu_limit_estimates_hit_the_closed_forms() {
        let front = heteroclinic_solver(20.0, 16001).unwrap();
        let (test_value, eigen_value) = mu_infinity_estimate(&front).unwrap();
        assert!(
            (test_value + 1.6).abs() < 1e-3,
            "test value {test_value} (expect -8/5)"
        );
        assert!(
            (eigen_value + 4.0).abs() < 1e-3,
            "eigen value {eigen_value} (expect -4)"
        );
        assert!(test_value < 0.0 && eigen_value < 0.0);
    }

    #[test]
    fn certificate_constants_and_monotonicity() {
        let t = th(-8.0);
        let g_inf = boundary_data(t).left.frobenius_norm();
        let cert = uniqueness_radius(t, g_inf).unwrap();
        assert!((cert.c1 - core::f64::consts::PI.powi(2) / 32.0).abs() < 1e-15);
        assert!(
            (cert.lambda0 - (cert.c1 / (2.0 * cert.c2)).sqrt()).abs() < 1e-15,
            "lambda0 inconsistent with its own constants"
        );
        assert!(cert.c2 > 0.0 && cert.bound_radius > 0.0);

        // colder temperatures inflate the ball and shrink lambda0
        let mut last = cert.lambda0;
        for theta in [-12.0, -16.0] {
            let t = th(theta);
            let g_inf = boundary_data(t).left.frobenius_norm();
            let c = uniqueness_radius(t, g_inf).unwrap();
            assert!(
                c.lambda0 < last,
                "lambda0 not decreasing: {} -> {}",
                last,
                c.lambda0
            );
            last = c.lambda0;
        }
    }
}
