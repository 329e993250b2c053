//! Closed-form 1D schemes on a node partition, solved by a tridiagonal Newton
//! iteration, plus the radially symmetric reduction of the 2D problem.
//!
//! The equation at node i reads
//! `Σ_j M_ij (a_j − a_j^n)/τ + P(ρ_{i+1/2}) − P(ρ_{i−1/2}) = 0`
//! with ρ_{i+1/2} = ρ0(X_{i+1/2}) h_i / (a_{i+1} − a_i) and terms outside the
//! partition equal to zero.

use std::f64::consts::PI;

use crate::energy::{EnergyLaw, Law};
use crate::error::{Error, Result};

/// Node partition with midpoint densities.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    h: Vec<f64>,
    rho_mid: Vec<f64>,
}

impl Grid1D {
    /// Samples ρ0 at the midpoints X_{i+1/2}.
    pub fn new(nodes: Vec<f64>, rho0: impl Fn(f64) -> f64) -> Result<Self> {
        let rho_mid = nodes.windows(2).map(|w| rho0(0.5 * (w[0] + w[1]))).collect();
        Self::from_parts(nodes, rho_mid)
    }

    pub fn from_parts(nodes: Vec<f64>, rho_mid: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("a partition needs at least two nodes".into()));
        }
        if rho_mid.len() != nodes.len() - 1 {
            return Err(Error::SizeMismatch { expected: nodes.len() - 1, got: rho_mid.len() });
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMesh(format!("nodes must be strictly increasing ({} then {})", w[0], w[1])));
        }
        if let Some(&r) = rho_mid.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::NegativeDensity(r));
        }
        let h = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { nodes, h, rho_mid })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacings(&self) -> &[f64] {
        &self.h
    }

    pub fn rho_mid(&self) -> &[f64] {
        &self.rho_mid
    }

    /// Mass ρ0(X_{i+1/2}) h_i of element i.
    fn mass(&self, e: usize) -> f64 {
        self.rho_mid[e] * self.h[e]
    }
}

/// Flux stencil of scheme 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Each density uses the gap of its own element.
    #[default]
    Symmetric,
    /// Both densities divide by a_i − a_{i−1} (a_2 − a_1 at the first node).
    Verbatim,
}

/// Tridiagonal matrix stored by bands; `lower[i]` couples i+1 to i and
/// `upper[i]` couples i to i+1.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n.saturating_sub(1)], diag: vec![0.0; n], upper: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm; fails on a vanishing pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let sub = if i > 0 { self.lower[i - 1] } else { 0.0 };
            let pivot = self.diag[i] - if i > 0 { sub * c[i - 1] } else { 0.0 };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { reason: format!("tridiagonal pivot {i}"), pivot });
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - if i > 0 { sub * d[i - 1] } else { 0.0 }) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

fn min_gap(a: &[f64]) -> f64 {
    a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn require_increasing(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: a.len() });
    }
    let m = min_gap(a);
    if !(m > 0.0) {
        return Err(Error::NotAdmissible { margin: m });
    }
    Ok(())
}

/// Dissipation matrix of the closed form: element weights w_e give the
/// contribution w_e [[1/3, 1/6], [1/6, 1/3]].
fn mass_matrix(weights: impl Iterator<Item = f64>, n: usize) -> Tridiagonal {
    let mut m = Tridiagonal::zeros(n);
    for (e, w) in weights.enumerate() {
        m.diag[e] += w / 3.0;
        m.diag[e + 1] += w / 3.0;
        m.upper[e] += w / 6.0;
        m.lower[e] += w / 6.0;
    }
    m
}

/// M of the chosen scheme: ρ0(X_{i+1/2}) h_i weights for law 1, deformed
/// gaps a^n_{i+1} − a^n_i for law 2.
pub fn closed_form_matrix(grid: &Grid1D, law: Law, a_n: &[f64]) -> Tridiagonal {
    match law {
        Law::Law1 => mass_matrix((0..grid.n() - 1).map(|e| grid.mass(e)), grid.n()),
        Law::Law2 => mass_matrix(a_n.windows(2).map(|w| w[1] - w[0]), grid.n()),
    }
}

/// Closed-form residual and its Jacobian for either scheme.
fn residual_and_jacobian(
    grid: &Grid1D,
    law: &EnergyLaw,
    stencil: Stencil,
    m: &Tridiagonal,
    a_n: &[f64],
    a: &[f64],
    tau: f64,
) -> (Vec<f64>, Tridiagonal) {
    let n = grid.n();
    let delta: Vec<f64> = a.iter().zip(a_n).map(|(x, y)| x - y).collect();
    let mut r: Vec<f64> = m.mul_vec(&delta).iter().map(|v| v / tau).collect();
    let mut jac = Tridiagonal {
        lower: m.lower.iter().map(|v| v / tau).collect(),
        diag: m.diag.iter().map(|v| v / tau).collect(),
        upper: m.upper.iter().map(|v| v / tau).collect(),
    };
    let gap = |e: usize| a[e + 1] - a[e];
    match stencil {
        Stencil::Symmetric => {
            for e in 0..n - 1 {
                let mass = grid.mass(e);
                if mass == 0.0 {
                    continue;
                }
                let g = gap(e);
                let rho = mass / g;
                let p = law.pressure_unchecked(rho);
                let q = law.rho_dpressure(rho) / g;
                // P(ρ_e) enters node e with + and node e+1 with −.
                r[e] += p;
                r[e + 1] -= p;
                jac.diag[e] += q;
                jac.upper[e] -= q;
                jac.diag[e + 1] += q;
                jac.lower[e] -= q;
            }
        }
        Stencil::Verbatim => {
            for i in 0..n {
                // left gap, or the first gap at the first node
                let (l, gl) = if i == 0 { (0, gap(0)) } else { (i - 1, gap(i - 1)) };
                let mut val = 0.0;
                let mut dg = 0.0;
                if i + 1 < n && grid.mass(i) > 0.0 {
                    let rho = grid.mass(i) / gl;
                    val += law.pressure_unchecked(rho);
                    dg -= law.rho_dpressure(rho) / gl;
                }
                if i > 0 && grid.mass(i - 1) > 0.0 {
                    let rho = grid.mass(i - 1) / gl;
                    val -= law.pressure_unchecked(rho);
                    dg += law.rho_dpressure(rho) / gl;
                }
                r[i] += val;
                // dF/da_{l+1} = dg, dF/da_l = −dg
                let (hi, lo) = (l + 1, l);
                for (col, v) in [(hi, dg), (lo, -dg)] {
                    if col == i {
                        jac.diag[i] += v;
                    } else if col + 1 == i {
                        jac.lower[col] += v;
                    } else {
                        jac.upper[i] += v;
                    }
                }
            }
        }
    }
    (r, jac)
}

fn residual_checked(
    grid: &Grid1D,
    law: Law,
    alpha: f64,
    stencil: Stencil,
    a_n: &[f64],
    a: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    require_increasing(a_n, grid.n())?;
    require_increasing(a, grid.n())?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    let law = EnergyLaw::new(law, alpha)?;
    let m = closed_form_matrix(grid, law.law(), a_n);
    Ok(residual_and_jacobian(grid, &law, stencil, &m, a_n, a, tau).0)
}

/// Scheme 1 residual: pressure ρ^α, time-independent matrix.
pub fn residual_scheme1(grid: &Grid1D, alpha: f64, a_n: &[f64], a: &[f64], tau: f64) -> Result<Vec<f64>> {
    residual_checked(grid, Law::Law1, alpha, Stencil::Symmetric, a_n, a, tau)
}

/// Scheme 2 residual: pressure α/(α−1) ρ^{α−1}, matrix from the gaps of a_n.
pub fn residual_scheme2(
    grid: &Grid1D,
    alpha: f64,
    stencil: Stencil,
    a_n: &[f64],
    a: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    residual_checked(grid, Law::Law2, alpha, stencil, a_n, a, tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TridiagonalNewton {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TridiagonalNewton {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 50 }
    }
}

/// Newton on F(a) = 0 with a tridiagonal Jacobian; steps are halved while
/// the guard fails or the residual 2-norm grows.
fn tridiagonal_newton(
    guess: Vec<f64>,
    opts: &TridiagonalNewton,
    eval: impl Fn(&[f64]) -> (Vec<f64>, Tridiagonal),
    guard: impl Fn(&[f64]) -> bool,
) -> Result<(Vec<f64>, usize)> {
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut a = guess;
    let (mut r, mut jac) = eval(&a);
    for iter in 0..=opts.max_iter {
        let res = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if res <= opts.tol {
            return Ok((a, iter));
        }
        if iter == opts.max_iter {
            return Err(Error::NewtonMaxIterations { iterations: iter, residual: res });
        }
        let dx = jac.solve(&r)?;
        let mut s = 1.0;
        loop {
            let trial: Vec<f64> = a.iter().zip(&dx).map(|(x, d)| x - s * d).collect();
            if guard(&trial) {
                let (rt, jt) = eval(&trial);
                if norm2(&rt) <= norm2(&r) * (1.0 + 1e-12) || s < 1e-3 {
                    a = trial;
                    r = rt;
                    jac = jt;
                    break;
                }
            }
            s *= 0.5;
            if s < 2f64.powi(-20) {
                return Err(Error::DampingFloor { iteration: iter, residual: res });
            }
        }
    }
    unreachable!()
}

/// Solves one step of the closed-form scheme from a_n; returns the new nodes
/// and the Newton iteration count.
pub fn step_closed_form(
    grid: &Grid1D,
    law: &EnergyLaw,
    stencil: Stencil,
    a_n: &[f64],
    tau: f64,
    opts: &TridiagonalNewton,
) -> Result<(Vec<f64>, usize)> {
    require_increasing(a_n, grid.n())?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    let m = closed_form_matrix(grid, law.law(), a_n);
    tridiagonal_newton(
        a_n.to_vec(),
        opts,
        |a| residual_and_jacobian(grid, law, stencil, &m, a_n, a, tau),
        |a| min_gap(a) > 0.0,
    )
}

/// Radial partition 0 = R_0 < R_1 < … < R_{N−1} of a disk, with element
/// densities sampled at the midpoints in R. The center node stays at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    grid: Grid1D,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>, rho0: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes.first() != Some(&0.0) {
            return Err(Error::InvalidMesh("a radial partition must start at R = 0".into()));
        }
        Ok(Self { grid: Grid1D::new(nodes, rho0)? })
    }

    pub fn uniform(radius: f64, n_nodes: usize, rho0: impl Fn(f64) -> f64) -> Result<Self> {
        if n_nodes < 2 || !(radius > 0.0) {
            return Err(Error::InvalidParameter("radial grid needs two nodes and a positive radius".into()));
        }
        let nodes = (0..n_nodes).map(|i| radius * i as f64 / (n_nodes - 1) as f64).collect();
        Self::new(nodes, rho0)
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn rho_mid(&self) -> &[f64] {
        self.grid.rho_mid()
    }

    /// π (R_{e+1}² − R_e²).
    fn area(&self, e: usize) -> f64 {
        let r = self.grid.nodes();
        PI * (r[e + 1] * r[e + 1] - r[e] * r[e])
    }

    /// J_e = (r_{e+1}² − r_e²)/(R_{e+1}² − R_e²).
    pub fn jacobians(&self, r: &[f64]) -> Vec<f64> {
        let rr = self.grid.nodes();
        (0..self.n() - 1)
            .map(|e| (r[e + 1] * r[e + 1] - r[e] * r[e]) / (rr[e + 1] * rr[e + 1] - rr[e] * rr[e]))
            .collect()
    }

    /// Σ_e ω(ρ0_e/J_e) J_e π(R_{e+1}² − R_e²).
    pub fn energy(&self, law: &EnergyLaw, r: &[f64]) -> Result<f64> {
        require_increasing(r, self.n())?;
        let mut total = 0.0;
        for (e, j) in self.jacobians(r).into_iter().enumerate() {
            let r0 = self.grid.rho_mid[e];
            if r0 > 0.0 {
                total += law.omega(r0 / j)? * j * self.area(e);
            }
        }
        Ok(total)
    }

    /// Dissipation matrix 2π ∫ w φ_i φ_j over each annulus: deformed radii for
    /// law 2, reference radii weighted by ρ0 for law 1.
    pub fn dissipation_matrix(&self, law: Law, r_n: &[f64]) -> Tridiagonal {
        let n = self.n();
        let (x, weight): (&[f64], Box<dyn Fn(usize) -> f64>) = match law {
            Law::Law1 => (self.grid.nodes(), Box::new(|e| self.grid.rho_mid[e])),
            Law::Law2 => (r_n, Box::new(|_| 1.0)),
        };
        let mut m = Tridiagonal::zeros(n);
        for e in 0..n - 1 {
            let (p, q) = (x[e], x[e + 1]);
            let w = 2.0 * PI * (q - p) * weight(e);
            m.diag[e] += w * (p / 4.0 + q / 12.0);
            m.diag[e + 1] += w * (p / 12.0 + q / 4.0);
            m.upper[e] += w * (p + q) / 12.0;
            m.lower[e] += w * (p + q) / 12.0;
        }
        m
    }

    /// Residual and Jacobian over the free nodes 1..N−1.
    fn residual_and_jacobian(
        &self,
        law: &EnergyLaw,
        m: &Tridiagonal,
        r_n: &[f64],
        r: &[f64],
        tau: f64,
    ) -> (Vec<f64>, Tridiagonal) {
        let n = self.n();
        let rr = self.grid.nodes();
        let delta: Vec<f64> = r.iter().zip(r_n).map(|(x, y)| x - y).collect();
        let md = m.mul_vec(&delta);
        let mut res: Vec<f64> = md.iter().map(|v| v / tau).collect();
        let mut jac = Tridiagonal {
            lower: m.lower.iter().map(|v| v / tau).collect(),
            diag: m.diag.iter().map(|v| v / tau).collect(),
            upper: m.upper.iter().map(|v| v / tau).collect(),
        };
        for e in 0..n - 1 {
            let r0 = self.grid.rho_mid[e];
            if r0 == 0.0 {
                continue;
            }
            let dr2 = rr[e + 1] * rr[e + 1] - rr[e] * rr[e];
            let j = (r[e + 1] * r[e + 1] - r[e] * r[e]) / dr2;
            let rho = r0 / j;
            let p = law.pressure_unchecked(rho);
            let s = law.rho_dpressure(rho) / j;
            // ∂E/∂r_e gets +2π r_e p, ∂E/∂r_{e+1} gets −2π r_{e+1} p
            let (a, b) = (r[e], r[e + 1]);
            res[e] += 2.0 * PI * a * p;
            res[e + 1] -= 2.0 * PI * b * p;
            let k = 4.0 * PI * s / dr2;
            jac.diag[e] += 2.0 * PI * p + k * a * a;
            jac.upper[e] -= k * a * b;
            jac.lower[e] -= k * a * b;
            jac.diag[e + 1] += -2.0 * PI * p + k * b * b;
        }
        // drop the pinned center row and column
        let res = res[1..].to_vec();
        let jac = Tridiagonal {
            lower: jac.lower[1..].to_vec(),
            diag: jac.diag[1..].to_vec(),
            upper: jac.upper[1..].to_vec(),
        };
        (res, jac)
    }

    /// One backward-Euler step of the radial scheme.
    pub fn step(&self, law: &EnergyLaw, r_n: &[f64], tau: f64, opts: &TridiagonalNewton) -> Result<(Vec<f64>, usize)> {
        require_increasing(r_n, self.n())?;
        if r_n[0] != 0.0 {
            return Err(Error::InvalidParameter("the center node must stay at r = 0".into()));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
        }
        let m = self.dissipation_matrix(law.law(), r_n);
        let full = |x: &[f64]| std::iter::once(0.0).chain(x.iter().copied()).collect::<Vec<f64>>();
        let (x, it) = tridiagonal_newton(
            r_n[1..].to_vec(),
            opts,
            |x| self.residual_and_jacobian(law, &m, r_n, &full(x), tau),
            |x| x[0] > 0.0 && min_gap(x) > 0.0,
        )?;
        Ok((full(&x), it))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub t: f64,
    pub r: Vec<f64>,
    pub energy: Option<f64>,
    pub newton_iterations: usize,
}

/// Runs the radial scheme for ⌈T/τ⌉ steps, checking the discrete energy
/// inequality at each step, and calls `on_state` for every state.
pub fn run_radial(
    grid: &RadialGrid,
    law: &EnergyLaw,
    tau: f64,
    t_final: f64,
    opts: &TridiagonalNewton,
    mut on_state: impl FnMut(&RadialState),
) -> Result<RadialState> {
    let n_steps = crate::solver::RunOptions::new(tau, t_final).n_steps();
    let energy = |r: &[f64]| if law.is_formal() { Ok(None) } else { grid.energy(law, r).map(Some) };
    let mut state =
        RadialState { t: 0.0, r: grid.nodes().to_vec(), energy: energy(grid.nodes())?, newton_iterations: 0 };
    on_state(&state);
    for step in 1..=n_steps {
        let wrap = |e: Error| Error::Step { step, source: Box::new(e) };
        let (r, it) = grid.step(law, &state.r, tau, opts).map_err(wrap)?;
        let e1 = energy(&r).map_err(wrap)?;
        if let (Some(a), Some(b)) = (state.energy, e1) {
            let m = grid.dissipation_matrix(law.law(), &state.r);
            let d: Vec<f64> = r.iter().zip(&state.r).map(|(x, y)| x - y).collect();
            let q = m.mul_vec(&d).iter().zip(&d).map(|(x, y)| x * y).sum::<f64>() / (2.0 * tau * tau);
            if (b - a) / tau > -q + 1e-9 {
                return Err(wrap(Error::EnergyInequality { lhs: (b - a) / tau, rhs: -q + 1e-9 }));
            }
        }
        state = RadialState { t: step as f64 * tau, r, energy: e1, newton_iterations: it };
        on_state(&state);
    }
    Ok(state)
}
