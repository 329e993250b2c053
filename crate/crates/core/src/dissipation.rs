//! Dissipation matrices M* for both laws.
//!
//! The block matrix D* acting on Ξ = (a, b) is block diagonal with one copy
//! of M per coordinate, so only M is stored.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::energy::Law;
use crate::error::{Error, Result};
use crate::mesh::{det_f, require_admissible, Configuration, Dim, Triangulation};
use crate::sparse::{norm_inf, Cholesky, SparseMatrix};

/// Exact P1 mass matrix of a unit-measure triangle, (1/12)[[2,1,1],[1,2,1],[1,1,2]].
const MASS_TRI: [[f64; 3]; 3] =
    [[2.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0], [1.0 / 12.0, 2.0 / 12.0, 1.0 / 12.0], [1.0 / 12.0, 1.0 / 12.0, 2.0 / 12.0]];
/// Exact P1 mass matrix of a unit-length segment.
const MASS_SEG: [[f64; 2]; 2] = [[2.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 6.0]];

#[derive(Debug, Clone)]
pub struct DissipationMatrix {
    law: Law,
    dim: Dim,
    m: SparseMatrix,
    snapshot: u64,
}

/// Σ_e w_e × (P1 mass matrix of the unit simplex), scattered in element order.
fn weighted_mass(tri: &Triangulation, weights: impl Fn(usize) -> f64) -> SparseMatrix {
    let k = tri.dim().simplex_size();
    let mut trips = Vec::with_capacity(tri.n_elements() * k * k);
    for e in 0..tri.n_elements() {
        let w = weights(e);
        let nodes = tri.element_nodes(e);
        for l in 0..k {
            for m in 0..k {
                let ref_entry = match tri.dim() {
                    Dim::One => MASS_SEG[l][m],
                    Dim::Two => MASS_TRI[l][m],
                };
                trips.push((nodes[l], nodes[m], w * ref_entry));
            }
        }
    }
    SparseMatrix::from_triplets(tri.n_nodes(), &trips)
}

fn fingerprint(cfg: &Configuration) -> u64 {
    let mut h = DefaultHasher::new();
    for v in cfg.dof() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

impl DissipationMatrix {
    /// Law 1: M_ij = Σ_e ρ_e^0 |τ_e| (P1 mass)_ij, independent of time.
    pub fn assemble_law1(tri: &Triangulation, rho0_c: &[f64]) -> Result<Self> {
        if rho0_c.len() != tri.n_elements() {
            return Err(Error::SizeMismatch { expected: tri.n_elements(), got: rho0_c.len() });
        }
        if let Some(&r) = rho0_c.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::NegativeDensity(r));
        }
        let m = weighted_mass(tri, |e| rho0_c[e] * tri.element(e).measure());
        Ok(Self { law: Law::Law1, dim: tri.dim(), m, snapshot: 0 })
    }

    /// Law 2: M_ij = Σ_e |τ_e| det F_e^n (P1 mass)_ij at the configuration Ξⁿ.
    pub fn assemble_law2(tri: &Triangulation, cfg_n: &Configuration) -> Result<Self> {
        require_admissible(tri, cfg_n)?;
        let m = weighted_mass(tri, |e| tri.element(e).measure() * det_f(tri, cfg_n, e));
        Ok(Self { law: Law::Law2, dim: tri.dim(), m, snapshot: fingerprint(cfg_n) })
    }

    pub fn assemble(tri: &Triangulation, law: Law, cfg_n: &Configuration, rho0_c: &[f64]) -> Result<Self> {
        match law {
            Law::Law1 => Self::assemble_law1(tri, rho0_c),
            Law::Law2 => Self::assemble_law2(tri, cfg_n),
        }
    }

    pub fn law(&self) -> Law {
        self.law
    }

    /// Hash of the configuration the matrix was assembled at (0 for law 1).
    pub fn snapshot(&self) -> u64 {
        self.snapshot
    }

    /// The N×N matrix M.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.m
    }

    pub fn n_nodes(&self) -> usize {
        self.m.n()
    }

    pub fn n_dof(&self) -> usize {
        self.m.n() * self.dim.n()
    }

    /// M v for a nodal vector.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.m.n() {
            return Err(Error::SizeMismatch { expected: self.m.n(), got: v.len() });
        }
        Ok(self.m.mul_vec(v))
    }

    /// D* Ξ for a vector laid out like Ξ.
    pub fn apply_d(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.n_dof() {
            return Err(Error::SizeMismatch { expected: self.n_dof(), got: xi.len() });
        }
        let n = self.m.n();
        Ok(xi.chunks(n).flat_map(|block| self.m.mul_vec(block)).collect())
    }

    /// Solves M x = rhs for a nodal vector.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.m.n() {
            return Err(Error::SizeMismatch { expected: self.m.n(), got: rhs.len() });
        }
        let chol = Cholesky::factorize(&self.m)?;
        self.solve_refined(&chol, rhs)
    }

    /// Solves D* x = rhs block by block with one factorization of M.
    pub fn solve_d(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n_dof() {
            return Err(Error::SizeMismatch { expected: self.n_dof(), got: rhs.len() });
        }
        let chol = Cholesky::factorize(&self.m)?;
        let n = self.m.n();
        let mut out = Vec::with_capacity(rhs.len());
        for block in rhs.chunks(n) {
            out.extend(self.solve_refined(&chol, block)?);
        }
        Ok(out)
    }

    /// Direct solve followed by iterative refinement until the relative
    /// residual is at most 1e-12.
    fn solve_refined(&self, chol: &Cholesky, rhs: &[f64]) -> Result<Vec<f64>> {
        let scale = norm_inf(rhs);
        let mut x = chol.solve(rhs);
        if scale == 0.0 {
            return Ok(x);
        }
        for _ in 0..3 {
            let mx = self.m.mul_vec(&x);
            let r: Vec<f64> = rhs.iter().zip(&mx).map(|(b, y)| b - y).collect();
            if norm_inf(&r) <= 1e-12 * scale {
                return Ok(x);
            }
            let dx = chol.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        let mx = self.m.mul_vec(&x);
        let res = rhs.iter().zip(&mx).map(|(b, y)| (b - y).abs()).fold(0.0, f64::max);
        if res <= 1e-12 * scale {
            Ok(x)
        } else {
            Err(Error::Solver(format!("relative residual {:e} above 1e-12", res / scale)))
        }
    }
}
