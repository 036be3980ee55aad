//! Symmetric banded matrices, banded LU with partial pivoting, and a
//! certified smallest-eigenpair solver (Sturm/inertia bisection plus shifted
//! inverse iteration).
//!
//! Everything here is dense-in-band with half-bandwidths of at most a few;
//! no general sparse machinery.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fp;

/// Symmetric banded matrix; `diags[k][i]` stores `A[i][i + k]`, `k = 0..=bw`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    diags: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let diags = (0..=bw).map(|k| vec![0.0; n - k.min(n)]).collect();
        Self { n, bw, diags }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `A[i][j]`; zero outside the band.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bw {
            0.0
        } else {
            self.diags[k][lo]
        }
    }

    /// Adds `v` to `A[i][j]` (and by symmetry `A[j][i]`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        debug_assert!(k <= self.bw, "entry outside the band");
        self.diags[k][lo] += v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = self.diags[0][i] * v[i];
            for k in 1..=self.bw {
                if i + k < self.n {
                    acc += self.diags[k][i] * v[i + k];
                }
                if i >= k {
                    acc += self.diags[k][i - k] * v[i - k];
                }
            }
            out[i] = acc;
        }
        out
    }

    /// Quadratic form `v^T A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.bilinear_form(v, v)
    }

    /// Bilinear form `u^T A v`.
    pub fn bilinear_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let av = self.matvec(v);
        u.iter().zip(&av).map(|(a, b)| a * b).sum()
    }

    /// Row-sum norm; used to size rounding floors for eigenvalue signs.
    pub fn inf_norm(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let mut acc = fp::abs(self.diags[0][i]);
            for k in 1..=self.bw {
                if i + k < self.n {
                    acc += fp::abs(self.diags[k][i]);
                }
                if i >= k {
                    acc += fp::abs(self.diags[k][i - k]);
                }
            }
            worst = worst.max(acc);
        }
        worst
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let c = self.diags[0][i];
            let mut r = 0.0;
            for k in 1..=self.bw {
                if i + k < self.n {
                    r += fp::abs(self.diags[k][i]);
                }
                if i >= k {
                    r += fp::abs(self.diags[k][i - k]);
                }
            }
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `shift`, by counting negative
    /// pivots of the (unpivoted) LDL^T factorization of `A - shift I`.
    /// `None` signals a pivot breakdown; the caller should nudge the shift.
    pub fn inertia_below(&self, shift: f64) -> Option<usize> {
        let n = self.n;
        let bw = self.bw;
        let mut w: Vec<Vec<f64>> = (0..=bw)
            .map(|k| {
                (0..n - k)
                    .map(|i| self.diags[k][i] - if k == 0 { shift } else { 0.0 })
                    .collect()
            })
            .collect();
        let scale = 1.0 + self.inf_norm() + fp::abs(shift);
        let tiny = 1e-300_f64.max(f64::EPSILON * scale * 1e-4);
        let mut neg = 0usize;
        for j in 0..n {
            let d = w[0][j];
            if fp::abs(d) < tiny {
                return None;
            }
            if d < 0.0 {
                neg += 1;
            }
            let kmax = bw.min(n - 1 - j);
            for r in 1..=kmax {
                let vr = w[r][j];
                if vr == 0.0 {
                    continue;
                }
                for s in r..=kmax {
                    // A[j+s][j+r] -= v_s * v_r / d
                    w[s - r][j + r] -= w[s][j] * vr / d;
                }
            }
        }
        Some(neg)
    }
}

/// Banded LU with partial pivoting of `A - shift I`, for robust solves with
/// indefinite shifts. Fill-in widens the upper band to `2 bw`.
pub struct BandLu {
    n: usize,
    bw: usize,
    width: usize,
    /// Row-major working array; row `r` covers columns `r-bw ..= r+2bw`.
    w: Vec<f64>,
    /// Multipliers per column (rows k+1..=k+bw), after pivoting.
    mults: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn idx(&self, r: usize, c: usize) -> Option<usize> {
        let lo = r.saturating_sub(self.bw);
        if c < lo || c > r + 2 * self.bw || c >= self.n {
            None
        } else {
            Some(r * self.width + (c - lo))
        }
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        match self.idx(r, c) {
            Some(i) => self.w[i],
            None => 0.0,
        }
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        let i = self.idx(r, c).expect("write outside the working band");
        self.w[i] = v;
    }

    /// Factors `A - shift I`. Fails on exact singularity.
    pub fn factor(a: &SymBanded, shift: f64) -> Result<Self> {
        let n = a.n();
        let bw = a.bandwidth();
        let width = 3 * bw + 1;
        let mut lu = BandLu {
            n,
            bw,
            width,
            w: vec![0.0; n * width],
            mults: vec![0.0; n * bw],
            pivots: vec![0; n],
        };
        for r in 0..n {
            let lo = r.saturating_sub(bw);
            let hi = (r + bw).min(n - 1);
            for c in lo..=hi {
                let mut v = a.at(r, c);
                if r == c {
                    v -= shift;
                }
                lu.set(r, c, v);
            }
        }
        let scale = 1.0 + a.inf_norm() + fp::abs(shift);
        for k in 0..n {
            // partial pivot among rows k..=k+bw
            let rmax = (k + bw).min(n - 1);
            let mut piv = k;
            let mut best = fp::abs(lu.get(k, k));
            for r in k + 1..=rmax {
                let v = fp::abs(lu.get(r, k));
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < f64::EPSILON * scale * 1e-6 + 1e-300 {
                return Err(Error::Eigen("singular pivot in banded factorization"));
            }
            lu.pivots[k] = piv;
            if piv != k {
                let cmax = (k + 2 * bw).min(n - 1);
                for c in k..=cmax {
                    let x = lu.get(k, c);
                    let y = lu.get(piv, c);
                    lu.set(k, c, y);
                    lu.set(piv, c, x);
                }
            }
            let dk = lu.get(k, k);
            let cmax = (k + 2 * bw).min(n - 1);
            for r in k + 1..=rmax {
                let m = lu.get(r, k) / dk;
                lu.mults[k * bw + (r - k - 1)] = m;
                if m != 0.0 {
                    for c in k + 1..=cmax {
                        let v = lu.get(r, c) - m * lu.get(k, c);
                        lu.set(r, c, v);
                    }
                }
                lu.set(r, k, 0.0);
            }
        }
        Ok(lu)
    }

    /// Solves `(A - shift I) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let piv = self.pivots[k];
            if piv != k {
                b.swap(k, piv);
            }
            let rmax = (k + bw).min(n - 1);
            for r in k + 1..=rmax {
                b[r] -= self.mults[k * bw + (r - k - 1)] * b[k];
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + 2 * bw).min(n - 1);
            let mut acc = b[k];
            for c in k + 1..=cmax {
                acc -= self.get(k, c) * b[c];
            }
            b[k] = acc / self.get(k, k);
        }
    }
}

/// Smallest eigenpair of the generalized problem `S v = mu M v` with a
/// positive diagonal (lumped) mass `M`.
///
/// The eigenvalue is localized by bisection on the inertia count of the
/// mass-scaled operator and the eigenvector is produced by shifted inverse
/// iteration; the two routes cross-check each other. The returned vector is
/// normalized to `sum_i m_i v_i^2 = 1`.
pub fn smallest_generalized_eigenpair(s: &SymBanded, mass: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = s.n();
    if mass.len() != n {
        return Err(Error::Domain("mass vector length must match the operator"));
    }
    if mass.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Domain("mass weights must be positive"));
    }
    // A = M^{-1/2} S M^{-1/2}
    let mut a = SymBanded::zeros(n, s.bandwidth());
    let root: Vec<f64> = mass.iter().map(|&m| fp::sqrt(m)).collect();
    for i in 0..n {
        for k in 0..=s.bandwidth() {
            if i + k < n {
                let v = s.at(i, i + k) / (root[i] * root[i + k]);
                if k == 0 {
                    a.add(i, i, v);
                } else {
                    a.add(i, i + k, v);
                }
            }
        }
    }

    let (glo, ghi) = a.gershgorin();
    let span = (ghi - glo).max(1.0);
    let scale = 1.0 + a.inf_norm();
    let count = |sigma: f64| -> usize {
        let mut s0 = sigma;
        for _ in 0..8 {
            if let Some(c) = a.inertia_below(s0) {
                return c;
            }
            s0 += f64::EPSILON * scale * 64.0;
        }
        // a persistent breakdown means sigma keeps hitting an exact
        // eigenvalue of a leading minor; treat as "at least one below"
        a.inertia_below(s0 + 1e-8 * span).unwrap_or(1)
    };

    let mut lo = glo - 1e-8 * span;
    let mut hi = ghi + 1e-8 * span;
    if count(lo) != 0 {
        return Err(Error::Eigen("Gershgorin bound failed to bracket from below"));
    }
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // inverse iteration shifted just below the certified interval
    let mut sigma = lo;
    let mut lu = None;
    for attempt in 0..6 {
        match BandLu::factor(&a, sigma) {
            Ok(f) => {
                lu = Some(f);
                break;
            }
            Err(_) => {
                sigma -= (hi - lo).max(f64::EPSILON * scale) * (1 << attempt) as f64;
            }
        }
    }
    let lu = lu.ok_or(Error::Eigen("could not factor the shifted operator"))?;

    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            // fixed pseudo-random start; any vector with a component along
            // the ground state works
            let x = (i as u64).wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x2545f4914f6cdd1d);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5 + 1.0
        })
        .collect();
    normalize(&mut v);
    let mut rho = 0.0;
    let mut ok = false;
    for _ in 0..200 {
        lu.solve_in_place(&mut v);
        normalize(&mut v);
        let av = a.matvec(&v);
        rho = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        let mut res = 0.0_f64;
        for i in 0..n {
            res = res.max(fp::abs(av[i] - rho * v[i]));
        }
        if res <= 1e-13 * scale {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(Error::Eigen("inverse iteration did not converge"));
    }
    let slack = 1e-10 * scale + 4.0 * (hi - lo).max(0.0);
    if rho < lo - slack || rho > hi + slack {
        return Err(Error::Eigen("inverse iteration left the certified interval"));
    }

    // back to the generalized problem: w = M^{-1/2} v is M-normalized
    let w: Vec<f64> = v.iter().zip(&root).map(|(x, r)| x / r).collect();
    Ok((rho, w))
}

fn normalize(v: &mut [f64]) {
    let norm = fp::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}
