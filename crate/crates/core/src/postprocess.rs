//! Density reconstruction, error norms, interfaces, waiting times and
//! convergence orders.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{det_f, require_admissible, Configuration, Dim, Triangulation};

/// Reconstructed state at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub centroids: Vec<[f64; 2]>,
    pub rho_centroids: Vec<f64>,
    pub det_f: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    pub rho_nodes: Vec<f64>,
}

impl Snapshot {
    pub fn new(t: f64, tri: &Triangulation, cfg: &Configuration, rho0_c: &[f64], rho0_nodes: &[f64]) -> Result<Self> {
        let cd = density_at_centroids(tri, cfg, rho0_c)?;
        let rho_nodes = density_at_nodes(tri, cfg, rho0_nodes)?;
        let det_f = (0..tri.n_elements()).map(|e| det_f(tri, cfg, e)).collect();
        let positions = (0..tri.n_nodes()).map(|i| cfg.position(i)).collect();
        Ok(Self { t, centroids: cd.positions, rho_centroids: cd.densities, det_f, positions, rho_nodes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidDensity {
    pub positions: Vec<[f64; 2]>,
    pub densities: Vec<f64>,
}

fn deformed_centroid(tri: &Triangulation, cfg: &Configuration, e: usize) -> [f64; 2] {
    let nodes = tri.element_nodes(e);
    let k = nodes.len() as f64;
    let mut c = [0.0; 2];
    for &i in nodes {
        let p = cfg.position(i);
        c[0] += p[0] / k;
        c[1] += p[1] / k;
    }
    c
}

/// ρ_h(x_c^e) = ρ_e^0 / det F_e at the deformed centroids.
pub fn density_at_centroids(tri: &Triangulation, cfg: &Configuration, rho0_c: &[f64]) -> Result<CentroidDensity> {
    if rho0_c.len() != tri.n_elements() {
        return Err(Error::SizeMismatch { expected: tri.n_elements(), got: rho0_c.len() });
    }
    require_admissible(tri, cfg)?;
    let positions = (0..tri.n_elements()).map(|e| deformed_centroid(tri, cfg, e)).collect();
    let densities = (0..tri.n_elements()).map(|e| rho0_c[e] / det_f(tri, cfg, e)).collect();
    Ok(CentroidDensity { positions, densities })
}

/// ρ0(X_i) Σ|τ_e| / Σ|τ_e| det F_e over the elements around node i.
pub fn density_at_nodes(tri: &Triangulation, cfg: &Configuration, rho0_nodes: &[f64]) -> Result<Vec<f64>> {
    if rho0_nodes.len() != tri.n_nodes() {
        return Err(Error::SizeMismatch { expected: tri.n_nodes(), got: rho0_nodes.len() });
    }
    require_admissible(tri, cfg)?;
    let jac: Vec<f64> = (0..tri.n_elements()).map(|e| det_f(tri, cfg, e)).collect();
    Ok((0..tri.n_nodes())
        .map(|i| {
            let (mut ref_area, mut cur_area) = (0.0, 0.0);
            for &e in tri.node_elements(i) {
                let m = tri.element(e).measure();
                ref_area += m;
                cur_area += m * jac[e];
            }
            rho0_nodes[i] * ref_area / cur_area
        })
        .collect())
}

/// sqrt(Σ_e (ρ_h(x_c^e) − exact(x_c^e))² |τ_e| det F_e).
pub fn l2_error(
    tri: &Triangulation,
    cfg: &Configuration,
    rho0_c: &[f64],
    exact: impl Fn([f64; 2]) -> f64,
) -> Result<f64> {
    let cd = density_at_centroids(tri, cfg, rho0_c)?;
    let mut s = 0.0;
    for e in 0..tri.n_elements() {
        let d = cd.densities[e] - exact(cd.positions[e]);
        s += d * d * tri.element(e).measure() * det_f(tri, cfg, e);
    }
    Ok(s.sqrt())
}

/// Largest pointwise error at the deformed centroids.
pub fn max_error(
    tri: &Triangulation,
    cfg: &Configuration,
    rho0_c: &[f64],
    exact: impl Fn([f64; 2]) -> f64,
) -> Result<f64> {
    let cd = density_at_centroids(tri, cfg, rho0_c)?;
    Ok(cd.positions.iter().zip(&cd.densities).map(|(x, r)| (r - exact(*x)).abs()).fold(0.0, f64::max))
}

/// Σ_e ρ_h(x_c^e) |τ_e| det F_e.
pub fn reconstructed_mass(tri: &Triangulation, cfg: &Configuration, rho0_c: &[f64]) -> Result<f64> {
    let cd = density_at_centroids(tri, cfg, rho0_c)?;
    Ok((0..tri.n_elements()).map(|e| cd.densities[e] * tri.element(e).measure() * det_f(tri, cfg, e)).sum())
}

/// Location of the free boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Interface {
    /// Positions of the first and last node.
    Endpoints { left: f64, right: f64 },
    /// max(min_b |x_b|, ξ0) and the ordered boundary loops.
    Radial { radius: f64, polylines: Vec<Vec<[f64; 2]>> },
}

impl Interface {
    pub fn radius(&self) -> Option<f64> {
        match self {
            Self::Radial { radius, .. } => Some(*radius),
            Self::Endpoints { .. } => None,
        }
    }
}

/// min over boundary nodes of |X_b| in the reference domain.
pub fn reference_radius(tri: &Triangulation) -> f64 {
    tri.boundary_nodes()
        .iter()
        .map(|&i| {
            let p = tri.node(i);
            p[0].hypot(p[1])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Closed boundary loops as node index lists, each starting at its
/// smallest index and following the element orientation.
pub fn boundary_loops(tri: &Triangulation) -> Vec<Vec<usize>> {
    if tri.dim() == Dim::One {
        return vec![vec![0], vec![tri.n_nodes() - 1]];
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for e in 0..tri.n_elements() {
        let n = tri.element_nodes(e);
        for k in 0..3 {
            let (a, b) = (n[k], n[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    // oriented boundary edges a → b (counter-clockwise around the domain)
    let mut next: HashMap<usize, usize> = HashMap::new();
    for e in 0..tri.n_elements() {
        let n = tri.element_nodes(e);
        for k in 0..3 {
            let (a, b) = (n[k], n[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                next.insert(a, b);
            }
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut seen = vec![false; tri.n_nodes()];
    let mut loops = Vec::new();
    for s in starts {
        if seen[s] {
            continue;
        }
        let mut lp = vec![s];
        seen[s] = true;
        let mut cur = next[&s];
        while cur != s && !seen[cur] {
            seen[cur] = true;
            lp.push(cur);
            cur = next[&cur];
        }
        loops.push(lp);
    }
    loops
}

/// Free-boundary location: endpoints in 1D; in 2D the radial location
/// max(min_b |x_h(X_b)|, ξ0) together with the deformed boundary loops.
pub fn interface_extract(tri: &Triangulation, cfg: &Configuration, xi0: f64) -> Result<Interface> {
    require_admissible(tri, cfg)?;
    match tri.dim() {
        Dim::One => Ok(Interface::Endpoints { left: cfg.a()[0], right: cfg.a()[tri.n_nodes() - 1] }),
        Dim::Two => {
            let rmin = tri
                .boundary_nodes()
                .iter()
                .map(|&i| {
                    let p = cfg.position(i);
                    p[0].hypot(p[1])
                })
                .fold(f64::INFINITY, f64::min);
            let polylines =
                boundary_loops(tri).into_iter().map(|lp| lp.into_iter().map(|i| cfg.position(i)).collect()).collect();
            Ok(Interface::Radial { radius: rmin.max(xi0), polylines })
        }
    }
}

fn expanded(initial: &Interface, now: &Interface) -> bool {
    match (initial, now) {
        (Interface::Endpoints { left: l0, right: r0 }, Interface::Endpoints { left, right }) => left < l0 && right > r0,
        (Interface::Radial { radius: x0, .. }, Interface::Radial { radius, .. }) => radius > x0,
        _ => false,
    }
}

/// First time at which the support has expanded: both endpoints moved
/// outward (1D), or the radial location exceeds ξ0 (2D). `None` if never.
pub fn numerical_waiting_time(history: &[(f64, Interface)], initial: &Interface) -> Option<f64> {
    history.iter().find(|(_, now)| expanded(initial, now)).map(|(t, _)| *t)
}

/// Start of the final run of expanded states: the first time after which
/// the support stays expanded until the end of `history`. `None` if the last
/// state is not expanded.
pub fn sustained_waiting_time(history: &[(f64, Interface)], initial: &Interface) -> Option<f64> {
    let mut start = None;
    for (t, now) in history {
        if expanded(initial, now) {
            start.get_or_insert(*t);
        } else {
            start = None;
        }
    }
    start
}

/// Observed orders log(e_c/e_f)/log(h_c/h_f) between successive rows, with
/// h ∝ 1/(N−1) in 1D and h ∝ N^{-1/2} in 2D.
pub fn convergence_order(rows: &[(usize, f64)], dim: Dim) -> Result<Vec<f64>> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!("need at least two refinements, got {}", rows.len())));
    }
    let h = |n: usize| match dim {
        Dim::One => 1.0 / (n as f64 - 1.0),
        Dim::Two => 1.0 / (n as f64).sqrt(),
    };
    Ok(rows.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (h(w[0].0) / h(w[1].0)).ln()).collect())
}
