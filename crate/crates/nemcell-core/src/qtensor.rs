//! Grid-free domain mathematics: material constants, the bulk potential and
//! its derivatives, and component/matrix conversions.
//!
//! The admissible Q-tensors are traceless symmetric matrices with `e_x` as
//! an eigenvector, parameterized by three reals:
//!
//! ```text
//!         | -2 q1    0        0     |
//!     Q = |  0     q1 - q2    q3    |
//!         |  0       q3     q1 + q2 |
//! ```
//!
//! so that `|Q|^2 = 6 q1^2 + 2 q2^2 + 2 q3^2`. The bulk free-energy density
//! in component form is
//!
//! ```text
//!     f = (theta/3) s + 4 q1 (q1^2 - q2^2 - q3^2) + s^2 / 2 + c(theta),
//!     s = 3 q1^2 + q2^2 + q3^2,
//! ```
//!
//! with `c(theta)` fixed so that `min f = 0`. The minimum is attained at the
//! uniaxial states `6 q_plus (n (x) n - I/3)` with `6 q_plus = 1 + sqrt(1 - theta)`.
//!
//! Component-space gradients carry the metric weights `(6, 2, 2)` coming
//! from the Frobenius norm above: `d f / d q1 = 6 * rhs1`, etc., where
//! `rhs_i` are the Euler-Lagrange right-hand sides. Both views are exposed
//! ([`bulk_gradient`] and [`euler_lagrange_rhs`]); conflating them silently
//! breaks Newton convergence, hence the two names.

use crate::error::{Error, Result};
use crate::fp;

/// Metric weights of the component parameterization, `|Q|^2 = 6 q1^2 + 2 q2^2 + 2 q3^2`.
pub const METRIC_WEIGHTS: [f64; 3] = [6.0, 2.0, 2.0];

/// Absolute tolerance for the shape preconditions of [`matrix_to_components`].
pub const MATRIX_SHAPE_TOL: f64 = 1e-10;

/// Dimensionless reduced temperature, restricted to `theta < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedTemperature(f64);

impl ReducedTemperature {
    /// Validates `theta < 1` strictly (`q_plus` needs `sqrt(1 - theta)` real
    /// and positive).
    pub fn new(theta: f64) -> Result<Self> {
        if theta < 1.0 && theta.is_finite() {
            Ok(Self(theta))
        } else {
            Err(Error::Domain("reduced temperature must satisfy theta < 1"))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `q_plus(theta) = (1 + sqrt(1 - theta)) / 6`, the uniaxial order parameter
/// of the bulk minimizers.
pub fn q_plus(theta: ReducedTemperature) -> f64 {
    (1.0 + fp::sqrt(1.0 - theta.value())) / 6.0
}

/// The additive constant `c(theta)` that normalizes `min f = 0`.
///
/// In closed form `c = -(4 theta q_+^2 - 32 q_+^3 + 72 q_+^4)`, obtained by
/// evaluating the un-offset density at a uniaxial minimizer.
pub fn bulk_offset(theta: ReducedTemperature) -> f64 {
    let qp = q_plus(theta);
    let qp2 = qp * qp;
    -(4.0 * theta.value() * qp2 - 32.0 * qp2 * qp + 72.0 * qp2 * qp2)
}

/// Material constants derived from the reduced temperature.
///
/// `max_norm = 2 sqrt(6) q_plus` is the a-priori Frobenius bound satisfied
/// by every solution of the Euler-Lagrange system (maximum principle).
#[derive(Debug, Clone, Copy)]
pub struct MaterialConstants {
    pub theta: ReducedTemperature,
    pub q_plus: f64,
    pub bulk_offset: f64,
    pub max_norm: f64,
}

impl MaterialConstants {
    /// Builds the constants and cross-validates the offset: the uniaxial
    /// state must be a zero-energy critical point with positive
    /// semi-definite Hessian.
    pub fn new(theta: ReducedTemperature) -> Result<Self> {
        let qp = q_plus(theta);
        let c = Self {
            theta,
            q_plus: qp,
            bulk_offset: bulk_offset(theta),
            max_norm: 2.0 * fp::sqrt(6.0) * qp,
        };
        let minimizer = QComponents::new(qp, 3.0 * qp, 0.0);
        let scale = 1.0 + c.bulk_offset.abs_value();
        if fp::abs(bulk_energy(minimizer, theta)) > 1e-12 * scale {
            return Err(Error::Domain("bulk offset does not normalize min f = 0"));
        }
        let g = bulk_gradient(minimizer, theta);
        if g.frobenius_norm() > 1e-10 * scale {
            return Err(Error::Domain("uniaxial state is not a critical point of f"));
        }
        let h = bulk_hessian(minimizer, theta);
        let eigs = sym3_eigenvalues(&h);
        if eigs[0] < -1e-9 * scale {
            return Err(Error::Domain("bulk Hessian not PSD at the uniaxial state"));
        }
        Ok(c)
    }
}

trait AbsValue {
    fn abs_value(self) -> f64;
}
impl AbsValue for f64 {
    fn abs_value(self) -> f64 {
        fp::abs(self)
    }
}

/// The component triple `(q1, q2, q3)` of an admissible Q-tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QComponents {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl QComponents {
    pub fn new(q1: f64, q2: f64, q3: f64) -> Self {
        Self { q1, q2, q3 }
    }

    /// Squared Frobenius norm of the associated matrix,
    /// `6 q1^2 + 2 q2^2 + 2 q3^2`.
    #[inline]
    pub fn frobenius_norm_sq(self) -> f64 {
        6.0 * self.q1 * self.q1 + 2.0 * self.q2 * self.q2 + 2.0 * self.q3 * self.q3
    }

    #[inline]
    pub fn frobenius_norm(self) -> f64 {
        fp::sqrt(self.frobenius_norm_sq())
    }
}

/// A full 3x3 matrix representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QMatrix(pub [[f64; 3]; 3]);

impl QMatrix {
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for row in &self.0 {
            for v in row {
                s += v * v;
            }
        }
        s
    }
}

/// `diag(-2 q1, q1 - q2, q1 + q2)` with `(2,3) = (3,2) = q3`.
pub fn components_to_matrix(q: QComponents) -> QMatrix {
    QMatrix([
        [-2.0 * q.q1, 0.0, 0.0],
        [0.0, q.q1 - q.q2, q.q3],
        [0.0, q.q3, q.q1 + q.q2],
    ])
}

/// Inverse of [`components_to_matrix`]; rejects matrices that are not
/// symmetric traceless with zero (1,2)/(1,3) entries, to absolute tolerance
/// [`MATRIX_SHAPE_TOL`].
pub fn matrix_to_components(m: &QMatrix) -> Result<QComponents> {
    let a = &m.0;
    let mut defect: f64 = 0.0;
    for v in [a[0][1], a[1][0], a[0][2], a[2][0], m.trace(), a[1][2] - a[2][1]] {
        defect = defect.max(fp::abs(v));
    }
    // Diagonal consistency beyond trace: a11 = -2 q1 must match a22 + a33 = 2 q1.
    defect = defect.max(fp::abs(a[0][0] + a[1][1] + a[2][2]));
    if defect > MATRIX_SHAPE_TOL {
        return Err(Error::MatrixShape { defect });
    }
    Ok(QComponents::new(
        -a[0][0] / 2.0,
        (a[2][2] - a[1][1]) / 2.0,
        (a[1][2] + a[2][1]) / 2.0,
    ))
}

/// Bulk free-energy density in component form. Non-negative, with zeros
/// exactly at the uniaxial minimizers.
pub fn bulk_energy(q: QComponents, theta: ReducedTemperature) -> f64 {
    let s = 3.0 * q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3;
    theta.value() / 3.0 * s
        + 4.0 * q.q1 * (q.q1 * q.q1 - q.q2 * q.q2 - q.q3 * q.q3)
        + 0.5 * s * s
        + bulk_offset(theta)
}

/// Bulk density evaluated on a full matrix:
/// `(theta/6)|Q|^2 - (2/3) tr Q^3 + |Q|^4 / 8 + c(theta)`.
///
/// Agrees with [`bulk_energy`] on the image of [`components_to_matrix`];
/// used as an independent route in tests.
pub fn bulk_energy_matrix(m: &QMatrix, theta: ReducedTemperature) -> f64 {
    let n2 = m.frobenius_norm_sq();
    let mut tr3 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                tr3 += m.0[i][j] * m.0[j][k] * m.0[k][i];
            }
        }
    }
    theta.value() / 6.0 * n2 - 2.0 / 3.0 * tr3 + n2 * n2 / 8.0 + bulk_offset(theta)
}

/// Exact partial derivatives `(df/dq1, df/dq2, df/dq3)` of [`bulk_energy`].
///
/// These carry the metric weights: `df/dq_i = w_i * rhs_i` with
/// `w = (6, 2, 2)`; see [`euler_lagrange_rhs`] for the unweighted view.
pub fn bulk_gradient(q: QComponents, theta: ReducedTemperature) -> QComponents {
    let r = euler_lagrange_rhs(q, theta);
    QComponents::new(6.0 * r.q1, 2.0 * r.q2, 2.0 * r.q3)
}

/// Right-hand sides of the Euler-Lagrange system `q_i'' / lambda^2 = rhs_i`:
///
/// ```text
///     rhs1 = (theta/3) q1 - (2/3)(q2^2 + q3^2 - 3 q1^2) + s q1
///     rhs2 = (theta/3) q2 - 4 q1 q2 + s q2
///     rhs3 = (theta/3) q3 - 4 q1 q3 + s q3
/// ```
pub fn euler_lagrange_rhs(q: QComponents, theta: ReducedTemperature) -> QComponents {
    let th3 = theta.value() / 3.0;
    let s = 3.0 * q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3;
    QComponents::new(
        th3 * q.q1 - 2.0 / 3.0 * (q.q2 * q.q2 + q.q3 * q.q3 - 3.0 * q.q1 * q.q1) + s * q.q1,
        th3 * q.q2 - 4.0 * q.q1 * q.q2 + s * q.q2,
        th3 * q.q3 - 4.0 * q.q1 * q.q3 + s * q.q3,
    )
}

/// Exact Hessian of [`bulk_energy`] with respect to `(q1, q2, q3)`.
///
/// At `q3 = 0` the `(1,3)` and `(2,3)` entries vanish identically, so the
/// form block-decouples into symmetry-preserving and symmetry-breaking
/// perturbations; the `(3,3)` entry is then
/// `2 (theta/3 - 4 q1 + 3 q1^2 + q2^2)`.
pub fn bulk_hessian(q: QComponents, theta: ReducedTemperature) -> [[f64; 3]; 3] {
    let th = theta.value();
    let s = 3.0 * q.q1 * q.q1 + q.q2 * q.q2 + q.q3 * q.q3;
    let h11 = 2.0 * th + 24.0 * q.q1 + 54.0 * q.q1 * q.q1 + 6.0 * (q.q2 * q.q2 + q.q3 * q.q3);
    let h22 = 2.0 * th / 3.0 - 8.0 * q.q1 + 2.0 * s + 4.0 * q.q2 * q.q2;
    let h33 = 2.0 * th / 3.0 - 8.0 * q.q1 + 2.0 * s + 4.0 * q.q3 * q.q3;
    let h12 = 4.0 * q.q2 * (3.0 * q.q1 - 2.0);
    let h13 = 4.0 * q.q3 * (3.0 * q.q1 - 2.0);
    let h23 = 4.0 * q.q2 * q.q3;
    [[h11, h12, h13], [h12, h22, h23], [h13, h23, h33]]
}

/// Radial derivative `grad f(q) . q` in plain component coordinates.
///
/// Non-negative outside a computable radius; this is the hypothesis of the
/// thin-cell uniqueness certificate.
pub fn radial_derivative(q: QComponents, theta: ReducedTemperature) -> f64 {
    let g = bulk_gradient(q, theta);
    g.q1 * q.q1 + g.q2 * q.q2 + g.q3 * q.q3
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending (closed-form trig method).
pub fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let tr = m[0][0] + m[1][1] + m[2][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let q = tr / 3.0;
    let d0 = m[0][0] - q;
    let d1 = m[1][1] - q;
    let d2 = m[2][2] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    let p = fp::sqrt(p2 / 6.0);
    // r = det(B)/2 with B = (M - qI)/p, clamped into [-1, 1] against rounding
    let b = [
        [d0 / p, m[0][1] / p, m[0][2] / p],
        [m[0][1] / p, d1 / p, m[1][2] / p],
        [m[0][2] / p, m[1][2] / p, d2 / p],
    ];
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos_safe() / 3.0;
    let e_hi = q + 2.0 * p * fp::cos(phi);
    let e_lo = q + 2.0 * p * fp::cos(phi + 2.0 * core::f64::consts::PI / 3.0);
    let e_mid = tr - e_hi - e_lo;
    [e_lo, e_mid, e_hi]
}

trait AcosSafe {
    fn acos_safe(self) -> f64;
}
impl AcosSafe for f64 {
    fn acos_safe(self) -> f64 {
        // acos via atan2-free polynomial-safe route: acos(x) = pi/2 - asin(x);
        // delegate to the shim through sqrt/atan-free identity.
        #[cfg(feature = "std")]
        {
            self.acos()
        }
        #[cfg(not(feature = "std"))]
        {
            libm::acos(self)
        }
    }
}
