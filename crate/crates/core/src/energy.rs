//! Free-energy densities, the discrete energy E_h, and its derivatives.
//!
//! On each element the energy is `|τ_e| · g(J)` with `J = det F_e` and
//! `g(J) = ω(ρ_e^0 / J) · J`. Differentiating gives `g'(J) = -p(ρ)` and
//! `g''(J) = ρ p'(ρ) / J` with `ρ = ρ_e^0 / J`, which is all the assembly
//! below needs.

use crate::dissipation::DissipationMatrix;
use crate::error::{Error, Result};
use crate::mesh::{element_det_hessian, element_jacobian, require_admissible, Configuration, Triangulation};

/// Which energy-dissipation law drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Law {
    /// ω(ρ) = ρ^α/(α-1), η(ρ) = ρ.
    Law1,
    /// ω(ρ) = 2ρ ln ρ (α = 2) or αρ^{α-1}/((α-1)(α-2)) (α > 2), η ≡ 1.
    Law2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLaw {
    law: Law,
    alpha: f64,
}

impl EnergyLaw {
    /// Any α > 1 is accepted. Law 2 with α < 2 has no free energy; such a law
    /// is "formal" and only pressure-based operations work with it.
    pub fn new(law: Law, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
        }
        Ok(Self { law, alpha })
    }

    pub fn law(&self) -> Law {
        self.law
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_formal(&self) -> bool {
        self.law == Law::Law2 && self.alpha < 2.0
    }

    fn check_rho(rho: f64) -> Result<()> {
        if rho >= 0.0 {
            Ok(())
        } else {
            Err(Error::NegativeDensity(rho))
        }
    }

    fn check_defined(&self) -> Result<()> {
        if self.is_formal() {
            Err(Error::FormalMode { alpha: self.alpha })
        } else {
            Ok(())
        }
    }

    /// Free-energy density ω(ρ).
    pub fn omega(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        self.check_defined()?;
        Ok(self.omega_unchecked(rho))
    }

    /// ω'(ρ).
    pub fn omega_rho(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        self.check_defined()?;
        let a = self.alpha;
        Ok(match self.law {
            Law::Law1 => a * rho.powf(a - 1.0) / (a - 1.0),
            Law::Law2 if a == 2.0 => {
                if rho == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    2.0 * rho.ln() + 2.0
                }
            }
            Law::Law2 => a * rho.powf(a - 2.0) / (a - 2.0),
        })
    }

    /// Friction coefficient η(ρ).
    pub fn eta(&self, rho: f64) -> f64 {
        match self.law {
            Law::Law1 => rho,
            Law::Law2 => 1.0,
        }
    }

    /// Pressure p = ω'(ρ)ρ - ω(ρ): ρ^α for law 1, αρ^{α-1}/(α-1) for law 2.
    /// The law-2 expression stays defined in formal mode.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        Ok(self.pressure_unchecked(rho))
    }

    pub(crate) fn omega_unchecked(&self, rho: f64) -> f64 {
        let a = self.alpha;
        match self.law {
            Law::Law1 => rho.powf(a) / (a - 1.0),
            Law::Law2 if a == 2.0 => {
                if rho == 0.0 {
                    0.0
                } else {
                    2.0 * rho * rho.ln()
                }
            }
            Law::Law2 => a * rho.powf(a - 1.0) / ((a - 1.0) * (a - 2.0)),
        }
    }

    pub(crate) fn pressure_unchecked(&self, rho: f64) -> f64 {
        let a = self.alpha;
        match self.law {
            Law::Law1 => rho.powf(a),
            Law::Law2 => a * rho.powf(a - 1.0) / (a - 1.0),
        }
    }

    /// ρ·p'(ρ), finite at ρ = 0 for every α > 1.
    pub(crate) fn rho_dpressure(&self, rho: f64) -> f64 {
        let a = self.alpha;
        match self.law {
            Law::Law1 => a * rho.powf(a),
            Law::Law2 => a * rho.powf(a - 1.0),
        }
    }
}

/// ρ_e^0 = ρ_0(X_c^e) at every reference centroid.
pub fn sample_centroids(tri: &Triangulation, rho0: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    tri.elements().iter().map(|e| rho0(e.centroid())).collect()
}

fn check_density(tri: &Triangulation, rho0_c: &[f64]) -> Result<()> {
    if rho0_c.len() != tri.n_elements() {
        return Err(Error::SizeMismatch { expected: tri.n_elements(), got: rho0_c.len() });
    }
    if let Some(&r) = rho0_c.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::NegativeDensity(r));
    }
    Ok(())
}

/// E_h(Ξ) = Σ_e ω(ρ_e^0 / det F_e) det F_e |τ_e|.
pub fn discrete_energy(tri: &Triangulation, cfg: &Configuration, law: &EnergyLaw, rho0_c: &[f64]) -> Result<f64> {
    law.check_defined()?;
    check_density(tri, rho0_c)?;
    require_admissible(tri, cfg)?;
    Ok(energy_unchecked(tri, cfg, law, rho0_c))
}

/// E_h without admissibility or input checks; returns +∞ for inadmissible
/// configurations so it can serve as a line-search merit function.
pub(crate) fn energy_unchecked(tri: &Triangulation, cfg: &Configuration, law: &EnergyLaw, rho0_c: &[f64]) -> f64 {
    let mut total = 0.0;
    for (e, el) in tri.elements().iter().enumerate() {
        let j = crate::mesh::det_f(tri, cfg, e);
        if !(j > 0.0) {
            return f64::INFINITY;
        }
        let r0 = rho0_c[e];
        if r0 == 0.0 {
            continue;
        }
        total += law.omega_unchecked(r0 / j) * j * el.measure();
    }
    total
}

/// Gradient ∇_Ξ E_h, assembled element by element.
pub(crate) fn energy_gradient_unchecked(
    tri: &Triangulation,
    cfg: &Configuration,
    law: &EnergyLaw,
    rho0_c: &[f64],
) -> Vec<f64> {
    let mut g = vec![0.0; tri.n_dof()];
    for (e, el) in tri.elements().iter().enumerate() {
        let r0 = rho0_c[e];
        if r0 == 0.0 {
            continue;
        }
        let jac = element_jacobian(tri, cfg, e);
        let dg = -law.pressure_unchecked(r0 / jac.det) * el.measure();
        let (dofs, len) = tri.element_dofs(e);
        for k in 0..len {
            g[dofs[k]] += dg * jac.grad[k];
        }
    }
    g
}

/// δA_h/δΞ = -∇_Ξ E_h: per element, |τ_e| p(ρ) ∂(det F_e)/∂χ, which is the
/// centroid evaluation of ∫(-ω_ρ ρ + ω)(F^{-T} : ∂F/∂χ) det F dX, scattered to
/// the global nodes in element order.
pub fn action_gradient(tri: &Triangulation, cfg: &Configuration, law: &EnergyLaw, rho0_c: &[f64]) -> Result<Vec<f64>> {
    check_density(tri, rho0_c)?;
    require_admissible(tri, cfg)?;
    let mut g = energy_gradient_unchecked(tri, cfg, law, rho0_c);
    for v in &mut g {
        *v = -*v;
    }
    Ok(g)
}

/// Hessian ∇²_Ξ E_h as (row, col, value) triplets, one dense local block per
/// element with non-zero density. Duplicate coordinates are meant to be summed.
pub fn energy_hessian_triplets(
    tri: &Triangulation,
    cfg: &Configuration,
    law: &EnergyLaw,
    rho0_c: &[f64],
) -> Result<Vec<(usize, usize, f64)>> {
    check_density(tri, rho0_c)?;
    require_admissible(tri, cfg)?;
    let mut out = Vec::new();
    energy_hessian_into(tri, cfg, law, rho0_c, &mut out);
    Ok(out)
}

pub(crate) fn energy_hessian_into(
    tri: &Triangulation,
    cfg: &Configuration,
    law: &EnergyLaw,
    rho0_c: &[f64],
    out: &mut Vec<(usize, usize, f64)>,
) {
    for (e, el) in tri.elements().iter().enumerate() {
        let r0 = rho0_c[e];
        let jac = element_jacobian(tri, cfg, e);
        let (dofs, len) = tri.element_dofs(e);
        let (d1, d2) = if r0 == 0.0 {
            (0.0, 0.0)
        } else {
            let rho = r0 / jac.det;
            (-law.pressure_unchecked(rho), law.rho_dpressure(rho) / jac.det)
        };
        let hj = element_det_hessian(tri, e);
        let w = el.measure();
        for k in 0..len {
            for l in 0..len {
                let v = w * (d2 * jac.grad[k] * jac.grad[l] + d1 * hj[k][l]);
                out.push((dofs[k], dofs[l], v));
            }
        }
    }
}

/// 2·D_h(Ξ, Ξ') = Ξ'ᵀ D(Ξ) Ξ' with D assembled for the given law.
pub fn dissipation_value(
    tri: &Triangulation,
    cfg: &Configuration,
    rate: &[f64],
    law: &EnergyLaw,
    rho0_c: &[f64],
) -> Result<f64> {
    if rate.len() != tri.n_dof() {
        return Err(Error::SizeMismatch { expected: tri.n_dof(), got: rate.len() });
    }
    let m = match law.law() {
        Law::Law1 => {
            require_admissible(tri, cfg)?;
            DissipationMatrix::assemble_law1(tri, rho0_c)?
        }
        Law::Law2 => DissipationMatrix::assemble_law2(tri, cfg)?,
    };
    let d = m.apply_d(rate)?;
    Ok(d.iter().zip(rate).map(|(x, y)| x * y).sum())
}
