//! Second-variation quadratic forms at an eigenvalue-exchange profile and
//! the stability eigenvalues `nu`, `mu`, `eta`.
//!
//! At a configuration with `q3 = 0` the second variation of the energy
//! splits orthogonally into a symmetry-preserving form `Phi[h1, h2]` and a
//! symmetry-breaking form `Psi[h3]`:
//!
//! ```text
//!   Phi[h1,h2] = int (6 (h1')^2 + 2 (h2')^2) / lambda^2
//!                + 6 (theta/3 + 4 q1 + 9 q1^2 + q2^2) h1^2
//!                + 2 (theta/3 - 4 q1 + 3 q1^2 + 3 q2^2) h2^2
//!                + 8 q2 (3 q1 - 2) h1 h2
//!   Psi[h3]    = int 2 (h3')^2 / lambda^2
//!                + 2 (theta/3 - 4 q1 + 3 q1^2 + q2^2) h3^2
//! ```
//!
//! and the stability eigenvalues are the smallest eigenvalues of these
//! forms against the plain L2 norms, `nu = inf Phi / int (h1^2 + h2^2)` and
//! `mu = inf Psi / int h^2`. The coefficients above are the entries of the
//! exact bulk Hessian restricted to `q3 = 0`; they are assembled here from
//! closed-form expressions, independently of the generic Hessian assembly
//! in [`crate::energy`], and the two routes are required to agree in tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{smallest_generalized_eigenpair, SymBanded};
use crate::energy::{assemble_hessian, energy_hessian};
use crate::error::{Error, Result};
use crate::grid::{EEProfile, Profile};
use crate::qtensor::ReducedTemperature;

/// A symmetric (block-)tridiagonal discretization of a second-variation
/// quadratic form, together with its lumped diagonal mass weights.
#[derive(Debug, Clone)]
pub struct QuadFormOperator {
    stiffness: SymBanded,
    mass: Vec<f64>,
}

/// Smallest eigenvalue and its mass-normalized eigenfunction.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalue: f64,
    /// Interior-node values, normalized to `sum_i m_i v_i^2 = 1`.
    pub eigenfunction: Vec<f64>,
}

impl QuadFormOperator {
    pub fn new(stiffness: SymBanded, mass: Vec<f64>) -> Self {
        debug_assert_eq!(stiffness.n(), mass.len());
        Self { stiffness, mass }
    }

    pub fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Value of the quadratic form on a perturbation vector.
    pub fn apply(&self, v: &[f64]) -> f64 {
        self.stiffness.quad_form(v)
    }

    /// Eigenvalue magnitude below which a computed sign is dominated by
    /// floating-point noise of the mass-scaled operator. Used as the
    /// resolution limit when certifying positivity of exponentially small
    /// eigenvalues.
    pub fn noise_floor(&self) -> f64 {
        let min_mass = self.mass.iter().cloned().fold(f64::INFINITY, f64::min);
        256.0 * f64::EPSILON * self.stiffness.inf_norm() / min_mass
    }

    /// Smallest eigenpair of `S v = mu M v`.
    pub fn smallest_eigenpair(&self) -> Result<SpectrumResult> {
        let (eigenvalue, eigenfunction) =
            smallest_generalized_eigenpair(&self.stiffness, &self.mass)?;
        Ok(SpectrumResult {
            eigenvalue,
            eigenfunction,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("lambda must be positive"))
    }
}

/// Symmetry-preserving second-variation form `Phi` at `chi`, as a
/// 2x2-block-tridiagonal operator over interleaved `(h1, h2)` interior
/// values, with plain lumped mass `h` (the `nu` normalization).
pub fn assemble_phi(
    chi: &EEProfile,
    lambda: f64,
    theta: ReducedTemperature,
) -> Result<QuadFormOperator> {
    check_lambda(lambda)?;
    let th = theta.value();
    Ok(assemble_hessian::<2>(&chi.grid, lambda, [6.0, 2.0], |i| {
        let q1 = chi.q1[i];
        let q2 = chi.q2[i];
        let a11 = 6.0 * (th / 3.0 + 4.0 * q1 + 9.0 * q1 * q1 + q2 * q2);
        let a22 = 2.0 * (th / 3.0 - 4.0 * q1 + 3.0 * q1 * q1 + 3.0 * q2 * q2);
        let a12 = 4.0 * q2 * (3.0 * q1 - 2.0);
        [[a11, a12], [a12, a22]]
    }))
}

/// Symmetry-breaking second-variation form `Psi` at `chi`, a scalar
/// tridiagonal operator over interior `h3` values.
pub fn assemble_psi(
    chi: &EEProfile,
    lambda: f64,
    theta: ReducedTemperature,
) -> Result<QuadFormOperator> {
    check_lambda(lambda)?;
    let th = theta.value();
    Ok(assemble_hessian::<1>(&chi.grid, lambda, [2.0], |i| {
        let q1 = chi.q1[i];
        let q2 = chi.q2[i];
        [[2.0 * (th / 3.0 - 4.0 * q1 + 3.0 * q1 * q1 + q2 * q2)]]
    }))
}

/// Scalar operator of `Psi` shape with a constant potential `w` replacing
/// the profile-dependent coefficient; its smallest eigenvalue is the
/// explicit `2 (pi/2)^2 / lambda^2 + 2 w` up to `O(h^2)`.
pub fn assemble_psi_constant_potential(
    grid: &crate::grid::Grid,
    lambda: f64,
    w: f64,
) -> Result<QuadFormOperator> {
    check_lambda(lambda)?;
    Ok(assemble_hessian::<1>(grid, lambda, [2.0], |_| [[2.0 * w]]))
}

/// First eigenvalue of `Phi` against `int (h1^2 + h2^2)`; positive iff the
/// profile is a non-degenerate minimum within the invariant subspace.
pub fn nu(chi: &EEProfile, lambda: f64, theta: ReducedTemperature) -> Result<f64> {
    Ok(assemble_phi(chi, lambda, theta)?
        .smallest_eigenpair()?
        .eigenvalue)
}

/// First eigenvalue of `Psi` against `int h^2`; its sign decides stability
/// against symmetry-breaking perturbations.
pub fn mu(chi: &EEProfile, lambda: f64, theta: ReducedTemperature) -> Result<f64> {
    Ok(assemble_psi(chi, lambda, theta)?
        .smallest_eigenpair()?
        .eigenvalue)
}

/// Smallest eigenvalue of the `h2`-block of `Phi`: the second variation of
/// the reduced scalar functional at the constant-`q1` solution (only
/// meaningful at `theta = -8` where `q1 = 2/3` identically).
pub fn eta(chi: &EEProfile, lambda: f64, theta: ReducedTemperature) -> Result<f64> {
    check_lambda(lambda)?;
    let th = theta.value();
    let op = assemble_hessian::<1>(&chi.grid, lambda, [2.0], |i| {
        let q1 = chi.q1[i];
        let q2 = chi.q2[i];
        [[2.0 * (th / 3.0 - 4.0 * q1 + 3.0 * q1 * q1 + 3.0 * q2 * q2)]]
    });
    Ok(op.smallest_eigenpair()?.eigenvalue)
}

/// Mixed second-variation value `D^2 E(p)[h_sp, h_sb]` between a
/// symmetry-preserving perturbation `(h1, h2, 0)` and a symmetry-breaking
/// one `(0, 0, h3)`, both vanishing on the boundary (interior-node arrays).
///
/// Exactly zero whenever `p` has `q3 = 0`.
pub fn cross_term_check(
    p: &Profile,
    hsp: (&[f64], &[f64]),
    hsb: &[f64],
    lambda: f64,
    theta: ReducedTemperature,
) -> Result<f64> {
    let m = p.grid.n_interior();
    if hsp.0.len() != m || hsp.1.len() != m || hsb.len() != m {
        return Err(Error::Domain("perturbations must be interior-node arrays"));
    }
    let op = energy_hessian(p, lambda, theta)?;
    let mut u = vec![0.0; 3 * m];
    let mut v = vec![0.0; 3 * m];
    for i in 0..m {
        u[3 * i] = hsp.0[i];
        u[3 * i + 1] = hsp.1[i];
        v[3 * i + 2] = hsb[i];
    }
    Ok(op.stiffness().bilinear_form(&u, &v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{ee_energy, ee_hessian, total_energy};
    use crate::grid::Grid;

    fn th(v: f64) -> ReducedTemperature {
        ReducedTemperature::new(v).unwrap()
    }

    fn wavy_ee(grid: &Grid, theta: ReducedTemperature, seed: u64) -> EEProfile {
        let mut p = EEProfile::linear_interpolation(grid, theta);
        let mut state = seed | 1;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 1..grid.n_nodes() - 1 {
            p.q1[i] += 0.4 * next();
            p.q2[i] += 0.8 * next();
        }
        p
    }

    #[test]
    fn phi_equals_ee_hessian_form() {
        // two independent assembly routes must produce the same form
        let g = Grid::uniform(41).unwrap();
        let t = th(-6.5);
        let chi = wavy_ee(&g, t, 3);
        let lambda = 0.9;
        let phi = assemble_phi(&chi, lambda, t).unwrap();
        let hee = ee_hessian(&chi, lambda, t).unwrap();
        let m = g.n_interior();
        let v: Vec<f64> = (0..2 * m).map(|k| ((k as f64) * 0.37).sin()).collect();
        let a = phi.apply(&v);
        let b = hee.apply(&v);
        assert!(
            (a - b).abs() <= 1e-11 * (1.0 + a.abs()),
            "phi {a} vs ee hessian {b}"
        );
    }

    #[test]
    fn phi_matches_second_difference_of_ee_energy() {
        let g = Grid::uniform(31).unwrap();
        let t = th(-8.0);
        let chi = wavy_ee(&g, t, 7);
        let lambda = 1.2;
        let phi = assemble_phi(&chi, lambda, t).unwrap();
        let m = g.n_interior();
        let v: Vec<f64> = (0..2 * m).map(|k| ((k as f64) * 0.53).cos()).collect();
        let quad = phi.apply(&v);
        let eps = 1e-5;
        let perturbed = |sign: f64| {
            let mut p = chi.clone();
            for i in 0..m {
                p.q1[i + 1] += sign * eps * v[2 * i];
                p.q2[i + 1] += sign * eps * v[2 * i + 1];
            }
            ee_energy(&p, lambda, t).unwrap()
        };
        let e0 = ee_energy(&chi, lambda, t).unwrap();
        let second = (perturbed(1.0) - 2.0 * e0 + perturbed(-1.0)) / (eps * eps);
        assert!(
            (second - quad).abs() <= 1e-5 * (1.0 + quad.abs()),
            "fd {second} vs form {quad}"
        );
        // zero perturbation gives zero
        assert_eq!(phi.apply(&vec![0.0; 2 * m]), 0.0);
    }

    #[test]
    fn phi_cross_coefficient_vanishes_at_theta_minus_8_constant_q1() {
        let g = Grid::uniform(21).unwrap();
        let t = th(-8.0);
        let mut chi = EEProfile::linear_interpolation(&g, t);
        for v in chi.q1.iter_mut() {
            *v = 2.0 / 3.0;
        }
        let phi = assemble_phi(&chi, 1.0, t).unwrap();
        let m = g.n_interior();
        // no coupling between the interleaved components: S[2i, 2i+1] == 0
        for i in 0..m {
            assert_eq!(phi.stiffness().at(2 * i, 2 * i + 1), 0.0);
        }
    }

    #[test]
    fn psi_matches_second_difference_of_total_energy_in_q3() {
        let g = Grid::uniform(31).unwrap();
        let t = th(-8.0);
        let chi = wavy_ee(&g, t, 13);
        let lambda = 0.7;
        let psi = assemble_psi(&chi, lambda, t).unwrap();
        let m = g.n_interior();
        let v: Vec<f64> = (0..m).map(|k| ((k as f64) * 0.71).sin() + 0.2).collect();
        let quad = psi.apply(&v);
        let eps = 1e-5;
        let full = chi.embed();
        let perturbed = |sign: f64| {
            let mut p = full.clone();
            for i in 0..m {
                p.q3[i + 1] += sign * eps * v[i];
            }
            total_energy(&p, lambda, t).unwrap()
        };
        let e0 = total_energy(&full, lambda, t).unwrap();
        let second = (perturbed(1.0) - 2.0 * e0 + perturbed(-1.0)) / (eps * eps);
        assert!(
            (second - quad).abs() <= 1e-5 * (1.0 + quad.abs()),
            "fd {second} vs form {quad}"
        );
    }

    #[test]
    fn constant_potential_spectrum_is_explicit() {
        let g = Grid::uniform(801).unwrap();
        let lambda = 1.0;
        for w in [0.0, -3.0, 2.5] {
            let op = assemble_psi_constant_potential(&g, lambda, w).unwrap();
            let got = op.smallest_eigenpair().unwrap().eigenvalue;
            let expect = 2.0 * (core::f64::consts::FRAC_PI_2 / lambda).powi(2) + 2.0 * w;
            let h = g.spacing();
            assert!(
                (got - expect).abs() < 20.0 * h * h + 1e-10,
                "w={w}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn eigenfunction_rayleigh_quotient_reproduces_eigenvalue() {
        let g = Grid::uniform(201).unwrap();
        let t = th(-8.0);
        let chi = wavy_ee(&g, t, 5);
        let op = assemble_psi(&chi, 1.5, t).unwrap();
        let sp = op.smallest_eigenpair().unwrap();
        let num = op.apply(&sp.eigenfunction);
        let den: f64 = sp
            .eigenfunction
            .iter()
            .zip(op.mass())
            .map(|(v, m)| m * v * v)
            .sum();
        assert!((den - 1.0).abs() < 1e-12);
        assert!(
            (num / den - sp.eigenvalue).abs() <= 1e-10 * (1.0 + sp.eigenvalue.abs()),
            "rq {} vs {}",
            num / den,
            sp.eigenvalue
        );
    }

    #[test]
    fn ground_state_is_sign_definite() {
        let g = Grid::uniform(301).unwrap();
        let t = th(-8.0);
        let chi = wavy_ee(&g, t, 21);
        let sp = assemble_psi(&chi, 2.0, t)
            .unwrap()
            .smallest_eigenpair()
            .unwrap();
        let positive = sp.eigenfunction.iter().filter(|v| **v > 0.0).count();
        let negative = sp.eigenfunction.iter().filter(|v| **v < 0.0).count();
        assert!(
            positive == 0 || negative == 0,
            "ground state changes sign ({positive} pos, {negative} neg)"
        );
    }

    #[test]
    fn cross_term_is_exactly_zero_at_ee_profiles() {
        let g = Grid::uniform(41).unwrap();
        let t = th(-8.0);
        let chi = wavy_ee(&g, t, 9).embed();
        let m = g.n_interior();
        let h1: Vec<f64> = (0..m).map(|k| (k as f64 * 0.3).sin()).collect();
        let h2: Vec<f64> = (0..m).map(|k| (k as f64 * 0.4).cos()).collect();
        let h3: Vec<f64> = (0..m).map(|k| (k as f64 * 0.5).sin() + 0.1).collect();
        let v = cross_term_check(&chi, (&h1, &h2), &h3, 1.0, t).unwrap();
        assert_eq!(v, 0.0);
        // bilinearity: zero sp side gives zero
        let z = vec![0.0; m];
        let v0 = cross_term_check(&chi, (&z, &z), &h3, 1.0, t).unwrap();
        assert_eq!(v0, 0.0);
    }

    #[test]
    fn cross_term_matches_mixed_difference_off_subspace() {
        let g = Grid::uniform(31).unwrap();
        let t = th(-8.0);
        let mut p = crate::grid::Profile::linear_interpolation(&g, t);
        for (i, &x) in g.nodes().iter().enumerate() {
            p.q3[i] = 0.8 * (1.0 - x * x);
        }
        let m = g.n_interior();
        let h1: Vec<f64> = (0..m).map(|k| (k as f64 * 0.3).sin()).collect();
        let h2: Vec<f64> = (0..m).map(|k| (k as f64 * 0.4).cos()).collect();
        let h3: Vec<f64> = (0..m).map(|k| (k as f64 * 0.5).sin() + 0.1).collect();
        let lambda = 1.0;
        let v = cross_term_check(&p, (&h1, &h2), &h3, lambda, t).unwrap();
        assert!(v.abs() > 1e-6, "generic profile should couple, got {v}");
        // mixed finite difference of the energy: d^2/ds dt E(p + s hsp + t hsb);
        // eps balances truncation against the rounding floor eps_mach*E/eps^2
        let eps = 2e-4;
        let eval = |s: f64, tt: f64| {
            let mut q = p.clone();
            for i in 0..m {
                q.q1[i + 1] += s * eps * h1[i];
                q.q2[i + 1] += s * eps * h2[i];
                q.q3[i + 1] += tt * eps * h3[i];
            }
            total_energy(&q, lambda, t).unwrap()
        };
        let mixed = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
            / (4.0 * eps * eps);
        assert!(
            (mixed - v).abs() <= 2e-6 * (1.0 + v.abs()),
            "fd {mixed} vs bilinear {v}"
        );
    }
}
