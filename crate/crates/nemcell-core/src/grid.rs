//! Uniform grid on `[-1, 1]`, boundary data, and the sampled field types.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::qtensor::{q_plus, QComponents, ReducedTemperature};

/// Uniform grid with an odd number of nodes spanning `[-1, 1]`, so that
/// `x = 0` is a node (oddness checks need it).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    h: f64,
}

impl Grid {
    /// `n_nodes >= 3` and odd; even counts are rejected, not rounded.
    pub fn uniform(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 || n_nodes.is_multiple_of(2) {
            return Err(Error::Domain("grid must have an odd node count >= 3"));
        }
        let m = (n_nodes - 1) as f64;
        // (2i - (n-1)) / (n-1): exact endpoints, exactly antisymmetric nodes
        let nodes = (0..n_nodes)
            .map(|i| (2.0 * i as f64 - m) / m)
            .collect();
        Ok(Self {
            nodes,
            h: 2.0 / m,
        })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of interior nodes.
    #[inline]
    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index of the midpoint node `x = 0`.
    #[inline]
    pub fn mid(&self) -> usize {
        (self.nodes.len() - 1) / 2
    }
}

/// Dirichlet data of the hybrid cell: uniaxial states with orthogonal
/// directors, `left = (q_+, 3 q_+, 0)` and `right = (q_+, -3 q_+, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub left: QComponents,
    pub right: QComponents,
}

/// Boundary data for the given temperature; both endpoint states are bulk
/// minimizers, so they carry zero bulk energy.
pub fn boundary_data(theta: ReducedTemperature) -> BoundaryData {
    let qp = q_plus(theta);
    BoundaryData {
        left: QComponents::new(qp, 3.0 * qp, 0.0),
        right: QComponents::new(qp, -3.0 * qp, 0.0),
    }
}

/// Grid-sampled fields of all three components.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub grid: Grid,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub q3: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid, q1: Vec<f64>, q2: Vec<f64>, q3: Vec<f64>) -> Result<Self> {
        let n = grid.n_nodes();
        if q1.len() != n || q2.len() != n || q3.len() != n {
            return Err(Error::Domain("component arrays must match the grid"));
        }
        Ok(Self { grid, q1, q2, q3 })
    }

    /// Linear interpolation of the boundary data (the default thin-cell
    /// initial guess); `q3` is identically zero.
    pub fn linear_interpolation(grid: &Grid, theta: ReducedTemperature) -> Self {
        let bc = boundary_data(theta);
        let interp = |l: f64, r: f64| -> Vec<f64> {
            grid.nodes()
                .iter()
                .map(|&x| l + (r - l) * (x + 1.0) / 2.0)
                .collect()
        };
        Self {
            grid: grid.clone(),
            q1: interp(bc.left.q1, bc.right.q1),
            q2: interp(bc.left.q2, bc.right.q2),
            q3: vec![0.0; grid.n_nodes()],
        }
    }

    /// Overwrites the endpoint nodes with the exact boundary data.
    pub fn clamp_boundary(&mut self, theta: ReducedTemperature) {
        let bc = boundary_data(theta);
        let last = self.grid.n_nodes() - 1;
        self.q1[0] = bc.left.q1;
        self.q2[0] = bc.left.q2;
        self.q3[0] = bc.left.q3;
        self.q1[last] = bc.right.q1;
        self.q2[last] = bc.right.q2;
        self.q3[last] = bc.right.q3;
    }

    pub fn components_at(&self, i: usize) -> QComponents {
        QComponents::new(self.q1[i], self.q2[i], self.q3[i])
    }

    /// Largest nodal Frobenius norm.
    pub fn max_frobenius_norm(&self) -> f64 {
        (0..self.grid.n_nodes())
            .map(|i| self.components_at(i).frobenius_norm())
            .fold(0.0, f64::max)
    }

    /// Discrete (lumped, Frobenius-weighted) L2 distance between profiles.
    pub fn l2_distance(&self, other: &Profile) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let h = self.grid.spacing();
        let n = self.grid.n_nodes();
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
            let d1 = self.q1[i] - other.q1[i];
            let d2 = self.q2[i] - other.q2[i];
            let d3 = self.q3[i] - other.q3[i];
            acc += w * (6.0 * d1 * d1 + 2.0 * d2 * d2 + 2.0 * d3 * d3);
        }
        Ok(crate::fp::sqrt(acc))
    }

    /// The conjugate profile with `q3` negated; maps solutions to solutions
    /// of equal energy.
    pub fn mirror_q3(&self) -> Profile {
        Profile {
            grid: self.grid.clone(),
            q1: self.q1.clone(),
            q2: self.q2.clone(),
            q3: self.q3.iter().map(|v| -v).collect(),
        }
    }

    /// Restriction to the invariant subspace; fails if `q3` is not
    /// identically zero (tolerance-gated).
    pub fn restrict_ee(&self, tol: f64) -> Result<EEProfile> {
        if self.q3.iter().any(|v| crate::fp::abs(*v) > tol) {
            return Err(Error::Domain("profile has a nonzero q3 component"));
        }
        Ok(EEProfile {
            grid: self.grid.clone(),
            q1: self.q1.clone(),
            q2: self.q2.clone(),
        })
    }
}

/// Grid-sampled fields of an eigenvalue-exchange configuration (`q3 = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct EEProfile {
    pub grid: Grid,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

impl EEProfile {
    pub fn new(grid: Grid, q1: Vec<f64>, q2: Vec<f64>) -> Result<Self> {
        let n = grid.n_nodes();
        if q1.len() != n || q2.len() != n {
            return Err(Error::Domain("component arrays must match the grid"));
        }
        Ok(Self { grid, q1, q2 })
    }

    pub fn linear_interpolation(grid: &Grid, theta: ReducedTemperature) -> Self {
        let p = Profile::linear_interpolation(grid, theta);
        EEProfile {
            grid: p.grid,
            q1: p.q1,
            q2: p.q2,
        }
    }

    pub fn clamp_boundary(&mut self, theta: ReducedTemperature) {
        let bc = boundary_data(theta);
        let last = self.grid.n_nodes() - 1;
        self.q1[0] = bc.left.q1;
        self.q2[0] = bc.left.q2;
        self.q1[last] = bc.right.q1;
        self.q2[last] = bc.right.q2;
    }

    /// Projection onto the reflection-symmetric gauge: even part of `q1`,
    /// odd part of `q2`.
    ///
    /// The restricted system is invariant under `x -> -x` with
    /// `(q1, q2) -> (q1, -q2)` and its minimizer is symmetric, but on wide
    /// cells the discretized front carries an exponentially flat
    /// translation direction, so a Newton solve may park anywhere inside a
    /// gauge tube of width `tolerance / mu_flat`. Projecting and taking one
    /// more Newton step recovers the symmetric representative to machine
    /// accuracy.
    pub fn symmetrized_gauge(&self) -> EEProfile {
        let n = self.grid.n_nodes();
        let mut out = self.clone();
        for i in 0..n {
            out.q1[i] = 0.5 * (self.q1[i] + self.q1[n - 1 - i]);
            out.q2[i] = 0.5 * (self.q2[i] - self.q2[n - 1 - i]);
        }
        out
    }

    /// Embedding into the full space with `q3` identically zero.
    pub fn embed(&self) -> Profile {
        Profile {
            grid: self.grid.clone(),
            q1: self.q1.clone(),
            q2: self.q2.clone(),
            q3: vec![0.0; self.grid.n_nodes()],
        }
    }
}
