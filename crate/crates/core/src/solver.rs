//! Time stepping: backward Euler as a damped-Newton minimization inside the
//! admissible set, explicit Euler, and the driver loop.

use faer::sparse::linalg::solvers::SymbolicLlt;

use crate::dissipation::DissipationMatrix;
use crate::energy::{energy_gradient_unchecked, energy_hessian_into, energy_unchecked, EnergyLaw, Law};
use crate::error::{Error, Result};
use crate::mesh::{is_admissible, Configuration, Triangulation};
use crate::sparse::{norm_inf, Cholesky, SparseMatrix};

/// Which nodes are allowed to move.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Every node moves; boundary nodes carry the free boundary.
    #[default]
    FreeSupport,
    /// The listed nodes keep their positions exactly.
    Pinned(Vec<usize>),
}

impl BoundaryMode {
    /// Pins every boundary node of the triangulation.
    pub fn pinned_boundary(tri: &Triangulation) -> Self {
        Self::Pinned(tri.boundary_nodes())
    }

    pub fn pinned_nodes(&self) -> &[usize] {
        match self {
            Self::FreeSupport => &[],
            Self::Pinned(nodes) => nodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub damping_floor: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, damping: 1.0, damping_floor: 2f64.powi(-20) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    BackwardEuler,
    ExplicitEuler,
}

/// Per-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub tau: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    /// `None` when the energy is not defined (law 2 with α < 2).
    pub energy_before: Option<f64>,
    pub energy_after: Option<f64>,
    /// (1/(2τ²)) ΔΞᵀ D* ΔΞ.
    pub dissipation: f64,
    pub margin: f64,
    pub accepted: bool,
}

/// Smooth objective minimized by [`newton_inner`].
pub trait Objective {
    fn len(&self) -> usize;
    /// Objective value, or `None` when it is not defined.
    fn value(&self, x: &[f64]) -> Option<f64>;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Hessian; the sparsity pattern must not depend on `x` and must
    /// contain the diagonal.
    fn hessian(&self, x: &[f64]) -> SparseMatrix;
    /// Admissibility margin; the guard holds when it is positive.
    fn margin(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Adds `shift` to every diagonal entry.
fn shift_diagonal(h: &SparseMatrix, shift: f64) -> SparseMatrix {
    let trips: Vec<_> = h.triplets().map(|(i, j, v)| (i, j, if i == j { v + shift } else { v })).collect();
    SparseMatrix::from_triplets(h.n(), &trips)
}

/// Factorizes H, shifting the diagonal by growing multiples of max|H_ii|
/// until the factorization succeeds.
fn factorize_shifted(h: &SparseMatrix, symbolic: &mut Option<SymbolicLlt<usize>>) -> Result<Cholesky> {
    let first = Cholesky::factorize_with(h, symbolic.as_ref());
    let err = match first {
        Ok(c) => {
            symbolic.get_or_insert_with(|| c.symbolic().clone());
            return Ok(c);
        }
        Err(e) => e,
    };
    let scale = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut mu = 1e-8;
    while mu <= 1e8 {
        if let Ok(c) = Cholesky::factorize_with(&shift_diagonal(h, mu * scale), symbolic.as_ref()) {
            symbolic.get_or_insert_with(|| c.symbolic().clone());
            return Ok(c);
        }
        mu *= 10.0;
    }
    Err(err)
}

/// Damped Newton: x ← x − s H⁻¹g with fixed damping s, halving s for a single
/// trial whenever the trial leaves the admissible set or increases the
/// objective.
pub fn newton_inner<O: Objective>(obj: &O, guess: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome> {
    if guess.len() != obj.len() {
        return Err(Error::SizeMismatch { expected: obj.len(), got: guess.len() });
    }
    let margin = obj.margin(guess);
    if !(margin > 0.0) {
        return Err(Error::NotAdmissible { margin });
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    let mut x = guess.to_vec();
    let mut value = obj.value(&x);
    let mut symbolic = None;
    for iter in 0..=opts.max_iter {
        let g = obj.gradient(&x);
        let res = norm_inf(&g);
        if res <= opts.tol {
            return Ok(NewtonOutcome { x, iterations: iter, residual: res });
        }
        if iter == opts.max_iter {
            return Err(Error::NewtonMaxIterations { iterations: iter, residual: res });
        }
        let h = obj.hessian(&x);
        let dx = factorize_shifted(&h, &mut symbolic)?.solve(&g);
        let mut s = opts.damping;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, d)| xi - s * d).collect();
            if obj.margin(&trial) > 0.0 {
                let tv = obj.value(&trial);
                let ok = match (value, tv) {
                    (Some(v), Some(t)) => t <= v + 1e-12 * (1.0 + v.abs()),
                    _ => true,
                };
                if ok {
                    x = trial;
                    value = tv;
                    break;
                }
            }
            s *= 0.5;
            if s < opts.damping_floor {
                return Err(Error::DampingFloor { iteration: iter, residual: res });
            }
        }
    }
    unreachable!()
}

/// Restriction of the full dof vector to the free dofs.
#[derive(Debug, Clone)]
struct FreeDofs {
    free: Vec<usize>,
    map: Vec<Option<usize>>,
}

impl FreeDofs {
    fn new(tri: &Triangulation, mode: &BoundaryMode) -> Result<Self> {
        let mut pinned = vec![false; tri.n_dof()];
        for &i in mode.pinned_nodes() {
            if i >= tri.n_nodes() {
                return Err(Error::InvalidParameter(format!("pinned node {i} out of range")));
            }
            for c in 0..tri.dim().n() {
                pinned[tri.dof_index(i, c)] = true;
            }
        }
        let free: Vec<usize> = (0..tri.n_dof()).filter(|&k| !pinned[k]).collect();
        let mut map = vec![None; tri.n_dof()];
        for (k, &f) in free.iter().enumerate() {
            map[f] = Some(k);
        }
        Ok(Self { free, map })
    }

    fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| full[k]).collect()
    }

    fn expand(&self, base: &[f64], x: &[f64]) -> Vec<f64> {
        let mut full = base.to_vec();
        for (&k, v) in self.free.iter().zip(x) {
            full[k] = *v;
        }
        full
    }

    /// Keeps triplets whose row and column are both free, renumbered.
    fn restrict_triplets(&self, trips: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
        trips.iter().filter_map(|&(i, j, v)| Some((self.map[i]?, self.map[j]?, v))).collect()
    }
}

/// Triplets of D*: one copy of M per coordinate block.
fn block_triplets(m: &DissipationMatrix, n_blocks: usize, scale: f64) -> Vec<(usize, usize, f64)> {
    let n = m.n_nodes();
    let mut out = Vec::with_capacity(m.matrix().nnz() * n_blocks);
    for c in 0..n_blocks {
        out.extend(m.matrix().triplets().map(|(i, j, v)| (c * n + i, c * n + j, v * scale)));
    }
    out
}

/// J(Ξ) = (1/2τ) (Ξ−Ξⁿ)ᵀ D* (Ξ−Ξⁿ) + E_h(Ξ) on the free dofs.
struct StepObjective<'a> {
    tri: &'a Triangulation,
    law: &'a EnergyLaw,
    rho0_c: &'a [f64],
    xn: &'a [f64],
    d: &'a DissipationMatrix,
    tau: f64,
    free: &'a FreeDofs,
    d_trips: Vec<(usize, usize, f64)>,
}

impl StepObjective<'_> {
    fn config(&self, x: &[f64]) -> Configuration {
        Configuration::from_dof(self.tri, self.free.expand(self.xn, x)).expect("sized by construction")
    }

    fn delta(&self, cfg: &Configuration) -> Vec<f64> {
        cfg.dof().iter().zip(self.xn).map(|(a, b)| a - b).collect()
    }
}

impl Objective for StepObjective<'_> {
    fn len(&self) -> usize {
        self.free.free.len()
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        if self.law.is_formal() {
            return None;
        }
        let cfg = self.config(x);
        let delta = self.delta(&cfg);
        let dd = self.d.apply_d(&delta).expect("sized by construction");
        let q: f64 = dd.iter().zip(&delta).map(|(a, b)| a * b).sum();
        Some(q / (2.0 * self.tau) + energy_unchecked(self.tri, &cfg, self.law, self.rho0_c))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let cfg = self.config(x);
        let delta = self.delta(&cfg);
        let dd = self.d.apply_d(&delta).expect("sized by construction");
        let ge = energy_gradient_unchecked(self.tri, &cfg, self.law, self.rho0_c);
        let full: Vec<f64> = dd.iter().zip(&ge).map(|(a, b)| a / self.tau + b).collect();
        self.free.restrict(&full)
    }

    fn hessian(&self, x: &[f64]) -> SparseMatrix {
        let cfg = self.config(x);
        let mut trips = self.d_trips.clone();
        energy_hessian_into(self.tri, &cfg, self.law, self.rho0_c, &mut trips);
        let mut local = self.free.restrict_triplets(&trips);
        local.extend((0..self.len()).map(|k| (k, k, 0.0)));
        SparseMatrix::from_triplets(self.len(), &local)
    }

    fn margin(&self, x: &[f64]) -> f64 {
        is_admissible(self.tri, &self.config(x)).margin
    }
}

fn check_inputs(tri: &Triangulation, cfg: &Configuration, rho0_c: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    if cfg.dof().len() != tri.n_dof() {
        return Err(Error::SizeMismatch { expected: tri.n_dof(), got: cfg.dof().len() });
    }
    if rho0_c.len() != tri.n_elements() {
        return Err(Error::SizeMismatch { expected: tri.n_elements(), got: rho0_c.len() });
    }
    if let Some(&r) = rho0_c.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::NegativeDensity(r));
    }
    let margin = is_admissible(tri, cfg).margin;
    if !(margin > 0.0) {
        return Err(Error::NotAdmissible { margin });
    }
    Ok(margin)
}

/// Advances one trajectory, caching the law-1 matrix and the free-dof map.
pub struct Stepper<'a> {
    tri: &'a Triangulation,
    law: EnergyLaw,
    rho0_c: &'a [f64],
    mode: BoundaryMode,
    newton: NewtonOptions,
    free: FreeDofs,
    law1_matrix: Option<DissipationMatrix>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        tri: &'a Triangulation,
        law: EnergyLaw,
        rho0_c: &'a [f64],
        mode: BoundaryMode,
        newton: NewtonOptions,
    ) -> Result<Self> {
        let free = FreeDofs::new(tri, &mode)?;
        let law1_matrix = match law.law() {
            Law::Law1 => Some(DissipationMatrix::assemble_law1(tri, rho0_c)?),
            Law::Law2 => None,
        };
        Ok(Self { tri, law, rho0_c, mode, newton, free, law1_matrix })
    }

    pub fn mode(&self) -> &BoundaryMode {
        &self.mode
    }

    fn matrix(&self, cfg_n: &Configuration) -> Result<DissipationMatrix> {
        match &self.law1_matrix {
            Some(m) => Ok(m.clone()),
            None => DissipationMatrix::assemble_law2(self.tri, cfg_n),
        }
    }

    fn energy(&self, cfg: &Configuration) -> Option<f64> {
        (!self.law.is_formal()).then(|| energy_unchecked(self.tri, cfg, &self.law, self.rho0_c))
    }

    fn quadratic(d: &DissipationMatrix, delta: &[f64], tau: f64) -> f64 {
        let dd = d.apply_d(delta).expect("sized by construction");
        dd.iter().zip(delta).map(|(a, b)| a * b).sum::<f64>() / (2.0 * tau * tau)
    }

    /// One backward-Euler step from `cfg_n`.
    pub fn backward_euler(&self, cfg_n: &Configuration, tau: f64) -> Result<(Configuration, StepReport)> {
        check_inputs(self.tri, cfg_n, self.rho0_c, tau)?;
        let d = self.matrix(cfg_n)?;
        let obj = StepObjective {
            tri: self.tri,
            law: &self.law,
            rho0_c: self.rho0_c,
            xn: cfg_n.dof(),
            d: &d,
            tau,
            free: &self.free,
            d_trips: block_triplets(&d, self.tri.dim().n(), 1.0 / tau),
        };
        let guess = self.free.restrict(cfg_n.dof());
        let e0 = self.energy(cfg_n);
        let mut opts = self.newton;
        let mut last_err = None;
        for _attempt in 0..2 {
            let out = newton_inner(&obj, &guess, &opts)?;
            let cfg = obj.config(&out.x);
            let delta = obj.delta(&cfg);
            let q = Self::quadratic(&d, &delta, tau);
            let e1 = self.energy(&cfg);
            let margin = is_admissible(self.tri, &cfg).margin;
            let report = StepReport {
                step: 0,
                tau,
                newton_iterations: out.iterations,
                residual: out.residual,
                energy_before: e0,
                energy_after: e1,
                dissipation: q,
                margin,
                accepted: true,
            };
            match (e0, e1) {
                (Some(a), Some(b)) if (b - a) / tau > -q + 1e-9 => {
                    last_err = Some(Error::EnergyInequality { lhs: (b - a) / tau, rhs: -q + 1e-9 });
                    opts.damping *= 0.5;
                }
                _ => return Ok((cfg, report)),
            }
        }
        Err(last_err.expect("set on violation"))
    }

    /// One explicit-Euler step: D*ₙ ΔΞ = τ δA_h/δΞ(Ξⁿ) on the free dofs.
    pub fn explicit_euler(&self, cfg_n: &Configuration, tau: f64) -> Result<(Configuration, StepReport)> {
        check_inputs(self.tri, cfg_n, self.rho0_c, tau)?;
        let d = self.matrix(cfg_n)?;
        let ge = energy_gradient_unchecked(self.tri, cfg_n, &self.law, self.rho0_c);
        let rhs: Vec<f64> = self.free.restrict(&ge).iter().map(|g| -tau * g).collect();
        let dm = SparseMatrix::from_triplets(
            self.free.free.len(),
            &self.free.restrict_triplets(&block_triplets(&d, self.tri.dim().n(), 1.0)),
        );
        let step = Cholesky::factorize(&dm)?.solve(&rhs);
        let x: Vec<f64> = self.free.restrict(cfg_n.dof()).iter().zip(&step).map(|(a, b)| a + b).collect();
        let cfg = Configuration::from_dof(self.tri, self.free.expand(cfg_n.dof(), &x))?;
        let delta: Vec<f64> = cfg.dof().iter().zip(cfg_n.dof()).map(|(a, b)| a - b).collect();
        let margin = is_admissible(self.tri, &cfg).margin;
        let e0 = self.energy(cfg_n);
        let e1 = if margin > 0.0 { self.energy(&cfg) } else { None };
        let increased = matches!((e0, e1), (Some(a), Some(b)) if b > a);
        let report = StepReport {
            step: 0,
            tau,
            newton_iterations: 0,
            residual: 0.0,
            energy_before: e0,
            energy_after: e1,
            dissipation: Self::quadratic(&d, &delta, tau),
            margin,
            accepted: margin > 0.0 && !increased,
        };
        Ok((cfg, report))
    }

    pub fn step(&self, integrator: Integrator, cfg_n: &Configuration, tau: f64) -> Result<(Configuration, StepReport)> {
        match integrator {
            Integrator::BackwardEuler => self.backward_euler(cfg_n, tau),
            Integrator::ExplicitEuler => self.explicit_euler(cfg_n, tau),
        }
    }
}

/// One backward-Euler step.
pub fn step_backward_euler(
    tri: &Triangulation,
    cfg_n: &Configuration,
    law: &EnergyLaw,
    rho0_c: &[f64],
    tau: f64,
    mode: &BoundaryMode,
    newton: &NewtonOptions,
) -> Result<(Configuration, StepReport)> {
    Stepper::new(tri, *law, rho0_c, mode.clone(), *newton)?.backward_euler(cfg_n, tau)
}

/// One explicit-Euler step.
pub fn step_explicit_euler(
    tri: &Triangulation,
    cfg_n: &Configuration,
    law: &EnergyLaw,
    rho0_c: &[f64],
    tau: f64,
    mode: &BoundaryMode,
) -> Result<(Configuration, StepReport)> {
    Stepper::new(tri, *law, rho0_c, mode.clone(), NewtonOptions::default())?.explicit_euler(cfg_n, tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub tau: f64,
    pub t_final: f64,
    pub mode: BoundaryMode,
    pub integrator: Integrator,
    pub newton: NewtonOptions,
    /// Keep every configuration in the trajectory; reports are always kept.
    pub record_states: bool,
}

impl RunOptions {
    pub fn new(tau: f64, t_final: f64) -> Self {
        Self {
            tau,
            t_final,
            mode: BoundaryMode::FreeSupport,
            integrator: Integrator::BackwardEuler,
            newton: NewtonOptions::default(),
            record_states: true,
        }
    }

    /// ⌈T/τ⌉, ignoring round-off in the ratio.
    pub fn n_steps(&self) -> usize {
        let r = self.t_final / self.tau;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub cfg: Option<Configuration>,
    pub report: Option<StepReport>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub last: Configuration,
    pub t_last: f64,
    /// Set when a step failed; `points` holds everything accepted before it.
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn reports(&self) -> impl Iterator<Item = &StepReport> {
        self.points.iter().filter_map(|p| p.report.as_ref())
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs ⌈T/τ⌉ uniform steps, calling `on_state(t, cfg, report)` for the
/// initial state and every accepted state.
pub fn run(
    tri: &Triangulation,
    cfg0: &Configuration,
    law: &EnergyLaw,
    rho0_c: &[f64],
    opts: &RunOptions,
    mut on_state: impl FnMut(f64, &Configuration, Option<&StepReport>),
) -> Result<Trajectory> {
    if !(opts.t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("final time must be non-negative, got {}", opts.t_final)));
    }
    check_inputs(tri, cfg0, rho0_c, opts.tau)?;
    let stepper = Stepper::new(tri, *law, rho0_c, opts.mode.clone(), opts.newton)?;
    on_state(0.0, cfg0, None);
    let mut traj = Trajectory {
        points: vec![TrajectoryPoint { t: 0.0, cfg: Some(cfg0.clone()), report: None }],
        last: cfg0.clone(),
        t_last: 0.0,
        failure: None,
    };
    for n in 1..=opts.n_steps() {
        let outcome = stepper.step(opts.integrator, &traj.last, opts.tau).and_then(|(cfg, mut rep)| {
            rep.step = n;
            if rep.accepted {
                Ok((cfg, rep))
            } else {
                Err(Error::Solver(format!(
                    "explicit step rejected (margin {:e}, energy {:?} -> {:?})",
                    rep.margin, rep.energy_before, rep.energy_after
                )))
            }
        });
        match outcome {
            Ok((cfg, rep)) => {
                let t = n as f64 * opts.tau;
                on_state(t, &cfg, Some(&rep));
                traj.points.push(TrajectoryPoint {
                    t,
                    cfg: opts.record_states.then(|| cfg.clone()),
                    report: Some(rep),
                });
                traj.last = cfg;
                traj.t_last = t;
            }
            Err(e) => {
                traj.failure = Some(Error::Step { step: n, source: Box::new(e) });
                break;
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::sample_centroids;
    use crate::mesh::{build_interval, build_structured};
    use crate::oracle::Barenblatt;

    struct Quadratic {
        h: SparseMatrix,
        b: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn len(&self) -> usize {
            self.b.len()
        }
        fn value(&self, x: &[f64]) -> Option<f64> {
            let hx = self.h.mul_vec(x);
            Some(
                0.5 * hx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    - self.b.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
            )
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            self.h.mul_vec(x).iter().zip(&self.b).map(|(a, b)| a - b).collect()
        }
        fn hessian(&self, _x: &[f64]) -> SparseMatrix {
            self.h.clone()
        }
        fn margin(&self, x: &[f64]) -> f64 {
            1.0 - x[0]
        }
    }

    #[test]
    fn quadratic_converges_in_one_iteration() {
        let h = SparseMatrix::from_triplets(3, &[(0, 0, 4.0), (1, 1, 3.0), (2, 2, 2.0), (0, 1, 1.0), (1, 0, 1.0)]);
        let q = Quadratic { h, b: vec![1.0, 2.0, 3.0] };
        let out = newton_inner(&q, &[0.0; 3], &NewtonOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.residual <= 1e-10);
        assert!(matches!(
            newton_inner(&q, &[2.0, 0.0, 0.0], &NewtonOptions::default()),
            Err(Error::NotAdmissible { .. })
        ));
    }

    #[test]
    fn stationary_pinned_box_stays_put() {
        let tri = build_structured((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        let rho = vec![0.7; tri.n_elements()];
        let law = EnergyLaw::new(Law::Law2, 2.0).unwrap();
        let mode = BoundaryMode::pinned_boundary(&tri);
        let cfg0 = tri.identity();
        let (cfg1, rep) = step_backward_euler(&tri, &cfg0, &law, &rho, 0.01, &mode, &NewtonOptions::default()).unwrap();
        assert!(rep.newton_iterations <= 1);
        for (a, b) in cfg1.dof().iter().zip(cfg0.dof()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_step_rejected() {
        let tri = build_interval(-1.0, 1.0, 5).unwrap();
        let law = EnergyLaw::new(Law::Law2, 3.0).unwrap();
        let rho = vec![1.0; 4];
        let r = step_backward_euler(
            &tri,
            &tri.identity(),
            &law,
            &rho,
            0.0,
            &BoundaryMode::FreeSupport,
            &NewtonOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn barenblatt_step_spreads_and_dissipates() {
        let b = Barenblatt::one_d(4.0).unwrap();
        let xi = b.interface_radius(1.0);
        let tri = build_interval(-xi, xi, 51).unwrap();
        let rho = sample_centroids(&tri, |p| b.value(p, 1.0));
        let law = EnergyLaw::new(Law::Law2, 4.0).unwrap();
        let cfg0 = tri.identity();
        let (cfg1, rep) =
            step_backward_euler(&tri, &cfg0, &law, &rho, 0.01, &BoundaryMode::FreeSupport, &NewtonOptions::default())
                .unwrap();
        assert!(rep.energy_after.unwrap() < rep.energy_before.unwrap());
        assert!(rep.residual <= 1e-10);
        let a0 = cfg0.a();
        let a1 = cfg1.a();
        assert!(a1[1] - a1[0] > a0[1] - a0[0]);
        assert!(a1[50] - a1[49] > a0[50] - a0[49]);
        assert!(a1[0] < a0[0] && a1[50] > a0[50]);
    }

    #[test]
    fn run_with_zero_final_time() {
        let tri = build_interval(-1.0, 1.0, 5).unwrap();
        let law = EnergyLaw::new(Law::Law1, 2.0).unwrap();
        let rho = vec![1.0; 4];
        let mut calls = 0;
        let traj = run(&tri, &tri.identity(), &law, &rho, &RunOptions::new(0.1, 0.0), |_, _, _| calls += 1).unwrap();
        assert_eq!(traj.points.len(), 1);
        assert_eq!(calls, 1);
        assert!(traj.is_complete());
    }

    #[test]
    fn step_count_rounds_up() {
        assert_eq!(RunOptions::new(0.01, 1.0).n_steps(), 100);
        assert_eq!(RunOptions::new(1.0 / 1600.0, 0.1).n_steps(), 160);
        assert_eq!(RunOptions::new(0.3, 1.0).n_steps(), 4);
    }

    #[test]
    fn explicit_zero_gradient_is_fixed_point() {
        let tri = build_structured((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let rho = vec![0.0; tri.n_elements()];
        let law = EnergyLaw::new(Law::Law2, 2.0).unwrap();
        let (cfg1, rep) =
            step_explicit_euler(&tri, &tri.identity(), &law, &rho, 0.1, &BoundaryMode::FreeSupport).unwrap();
        assert!(rep.accepted);
        assert_eq!(cfg1.dof(), tri.identity().dof());
    }
}
