use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lagdiff::energy::{sample_centroids, EnergyLaw};
use lagdiff::mesh::{
    build_arc_tube_with_nodes, build_disk_level, build_disk_with_nodes, build_interval, build_interval_refined,
    build_structured, det_f, load_mesh,
};
use lagdiff::oracle::{waiting_time_theory, DatumParams};
use lagdiff::pme1d::{run_radial, RadialGrid, TridiagonalNewton};
use lagdiff::postprocess::{
    boundary_loops, density_at_nodes, interface_extract, l2_error, max_error, numerical_waiting_time,
    reconstructed_mass, reference_radius, sustained_waiting_time, Interface,
};
use lagdiff::solver::{run, RunOptions};
use lagdiff::{BoundaryMode, Configuration, Dim, InitialDatum, StepReport, Triangulation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BoundaryKind, ConfigError, ExperimentConfig, Length, MeshSource};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] lagdiff::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    write_file(path, &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

/// Errors against the exact solution at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Errors {
    pub l2: f64,
    /// Nodal density error at the node with reference coordinate 0 (1D).
    pub x0: Option<f64>,
    /// Right endpoint in 1D, largest radial deviation of the boundary in 2D.
    pub interface: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterfaceSummary {
    Endpoints { left: f64, right: f64 },
    Radial { radius: f64 },
}

/// Contents of summary.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: BTreeMap<String, String>,
    pub dim: usize,
    pub nodes: usize,
    pub elements: usize,
    pub steps: usize,
    pub t_reached: f64,
    pub completed: bool,
    pub failure: Option<String>,
    pub energy_mode: String,
    pub energy_initial: Option<f64>,
    pub energy_final: Option<f64>,
    pub energy_monotone: Option<bool>,
    /// Largest (E1 − E0)/τ + dissipation over the accepted steps.
    pub max_energy_slack: Option<f64>,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub max_mass_drift: f64,
    pub min_margin: f64,
    pub newton_iterations: usize,
    pub errors: Option<Errors>,
    pub interface_final: InterfaceSummary,
    pub t_star: Option<f64>,
    pub t_star_sustained: Option<f64>,
    pub t_star_theory: Option<f64>,
}

fn config_map(cfg: &ExperimentConfig) -> BTreeMap<String, String> {
    cfg.to_text()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .filter(|(k, _)| *k != "out")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub(crate) fn datum(cfg: &ExperimentConfig) -> Result<InitialDatum, ConfigError> {
    // the radial reduction carries a 2D datum on a 1D grid
    let dim = if matches!(cfg.mesh, MeshSource::Radial { .. }) { 2 } else { cfg.dim };
    let p = DatumParams { alpha: cfg.alpha, dim, theta: cfg.theta, c0: cfg.c0, t0: cfg.t0 };
    InitialDatum::from_name(&cfg.datum, &p).map_err(|e| ConfigError::new("datum", e.to_string()))
}

fn support_radius(d: &InitialDatum) -> Option<f64> {
    match d {
        InitialDatum::Barenblatt { profile, t0 } => Some(profile.interface_radius(*t0)),
        InitialDatum::CosineBump | InitialDatum::Donut { .. } => Some(1.0),
        InitialDatum::SinePower { .. } | InitialDatum::TwoPeaks => None,
    }
}

fn resolve(len: Length, support: Option<f64>, sign: f64) -> Result<f64, ConfigError> {
    match len {
        Length::Value(v) => Ok(v),
        Length::Support => support
            .map(|r| sign * r)
            .ok_or_else(|| ConfigError::new("mesh", "'support' needs a datum with a known support radius")),
    }
}

/// Level of the ring-doubling family from `base` nodes closest to `nodes`.
pub fn disk_level(base: usize, nodes: usize) -> u32 {
    ((nodes as f64 / base as f64).log(4.0).round().max(0.0)) as u32
}

pub fn build_mesh(src: &MeshSource, d: &InitialDatum) -> Result<Triangulation, RunError> {
    let support = support_radius(d);
    let tri = match *src {
        MeshSource::Interval { left, right, nodes } => {
            build_interval(resolve(left, support, -1.0)?, resolve(right, support, 1.0)?, nodes)?
        }
        MeshSource::IntervalRefined { left, right, nodes, splits } => {
            build_interval_refined(resolve(left, support, -1.0)?, resolve(right, support, 1.0)?, nodes, splits)?
        }
        MeshSource::Structured { x, y, nx, ny } => build_structured(x, y, nx, ny)?,
        MeshSource::Disk { radius, nodes, grading, base: None } => {
            build_disk_with_nodes(resolve(radius, support, 1.0)?, nodes, grading)?
        }
        MeshSource::Disk { radius, nodes, grading, base: Some(base) } => {
            build_disk_level(resolve(radius, support, 1.0)?, base, grading, disk_level(base, nodes), Some(nodes))?
        }
        MeshSource::ArcTube { center_radius, half_width, theta0, theta1, nodes } => {
            build_arc_tube_with_nodes(center_radius, half_width, theta0, theta1, nodes)?
        }
        MeshSource::File(ref p) => load_mesh(p)?,
        MeshSource::Radial { .. } => {
            return Err(ConfigError::new("mesh", "the radial reduction has no triangulation").into());
        }
    };
    Ok(tri)
}

fn snapshot_csv(tri: &Triangulation, cfg: &Configuration, rho0_c: &[f64]) -> String {
    let mut s = String::from("elem,xc,yc,detF,rho\n");
    for e in 0..tri.n_elements() {
        let nodes = tri.element_nodes(e);
        let k = nodes.len() as f64;
        let (mut x, mut y) = (0.0, 0.0);
        for &i in nodes {
            let p = cfg.position(i);
            x += p[0] / k;
            y += p[1] / k;
        }
        let j = det_f(tri, cfg, e);
        let _ = writeln!(s, "{e},{x:e},{y:e},{j:e},{:e}", rho0_c[e] / j);
    }
    s
}

fn nodes_csv(positions: impl Iterator<Item = [f64; 2]>, rho: &[f64]) -> String {
    let mut s = String::from("node,x,y,rho\n");
    for (i, p) in positions.enumerate() {
        let _ = writeln!(s, "{i},{:e},{:e},{:e}", p[0], p[1], rho[i]);
    }
    s
}

fn boundary_csv(tri: &Triangulation, cfg: &Configuration) -> String {
    let mut s = String::from("loop,node,x,y\n");
    for (k, lp) in boundary_loops(tri).iter().enumerate() {
        for &i in lp {
            let p = cfg.position(i);
            let _ = writeln!(s, "{k},{i},{:e},{:e}", p[0], p[1]);
        }
    }
    s
}

const STEPS_HEADER: &str =
    "step,t,tau,newton_iterations,residual,energy_before,energy_after,dissipation,margin,accepted\n";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn step_row(s: &mut String, t: f64, r: &StepReport) {
    let _ = writeln!(
        s,
        "{},{t:e},{:e},{},{:e},{},{},{:e},{:e},{}",
        r.step,
        r.tau,
        r.newton_iterations,
        r.residual,
        opt(r.energy_before),
        opt(r.energy_after),
        r.dissipation,
        r.margin,
        r.accepted
    );
}

fn energy_mode(cfg: &ExperimentConfig) -> String {
    if cfg.formal() { "formal mode: energy not defined" } else { "energy" }.to_string()
}

fn is_snapshot(n: usize, n_steps: usize, cadence: usize) -> bool {
    n.is_multiple_of(cadence) || n == n_steps
}

/// Runs one experiment and writes its artifacts under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let started = Instant::now();
    let summary = match cfg.mesh {
        MeshSource::Radial { radius, nodes } => run_radial_experiment(cfg, radius, nodes, out),
        _ => run_mesh_experiment(cfg, out),
    };
    write_json(&out.join("timing.json"), &Timing { wall_clock_seconds: started.elapsed().as_secs_f64() })?;
    let summary = summary?;
    match &summary.failure {
        None => Ok(summary),
        Some(_) => Err(RunError::Solver(failure_of(&summary))),
    }
}

fn failure_of(summary: &RunSummary) -> lagdiff::Error {
    lagdiff::Error::Step {
        step: summary.steps + 1,
        source: Box::new(lagdiff::Error::Solver(summary.failure.clone().unwrap_or_default())),
    }
}

fn run_mesh_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, RunError> {
    let d = datum(cfg)?;
    let tri = build_mesh(&cfg.mesh, &d)?;
    if tri.dim().n() != cfg.dim {
        return Err(ConfigError::new("mesh", format!("{}D mesh for a {}D run", tri.dim().n(), cfg.dim)).into());
    }
    let law = EnergyLaw::new(cfg.law, cfg.alpha)?;
    let rho0_c = sample_centroids(&tri, |x| d.value(x));
    let rho0_nodes: Vec<f64> = tri.nodes().iter().map(|&x| d.value(x)).collect();
    let mode = match cfg.boundary {
        BoundaryKind::Free => BoundaryMode::FreeSupport,
        BoundaryKind::Pinned => BoundaryMode::pinned_boundary(&tri),
    };
    let opts = RunOptions {
        mode,
        integrator: cfg.integrator,
        newton: cfg.newton(),
        record_states: false,
        ..RunOptions::new(cfg.tau, cfg.t_final)
    };
    let n_steps = opts.n_steps();
    let xi0 = match tri.dim() {
        Dim::One => 0.0,
        Dim::Two => reference_radius(&tri),
    };

    let cfg0 = tri.identity();
    let mass_initial = reconstructed_mass(&tri, &cfg0, &rho0_c)?;
    let mut steps = String::from(STEPS_HEADER);
    let mut interface = String::from(match tri.dim() {
        Dim::One => "t,xi_left,xi_right\n",
        Dim::Two => "t,xi_radial\n",
    });
    let mut history: Vec<(f64, Interface)> = Vec::new();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut max_mass_drift: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut slack: Option<f64> = None;
    let mut monotone = true;
    let mut newton_iterations = 0;
    let mut post_error: Option<lagdiff::Error> = None;
    let mut n = 0usize;

    let mut observe = |t: f64, c: &Configuration, rep: Option<&StepReport>| {
        let result = (|| -> lagdiff::Result<()> {
            if let Some(r) = rep {
                step_row(&mut steps, t, r);
                min_margin = min_margin.min(r.margin);
                newton_iterations += r.newton_iterations;
                if let (Some(e0), Some(e1)) = (r.energy_before, r.energy_after) {
                    let s = (e1 - e0) / r.tau + r.dissipation;
                    slack = Some(slack.map_or(s, |m: f64| m.max(s)));
                    monotone &= e1 <= e0;
                }
            }
            let mass = reconstructed_mass(&tri, c, &rho0_c)?;
            max_mass_drift =
                max_mass_drift.max((mass - mass_initial).abs() / mass_initial.abs().max(f64::MIN_POSITIVE));
            let itf = interface_extract(&tri, c, xi0)?;
            match &itf {
                Interface::Endpoints { left, right } => {
                    let _ = writeln!(interface, "{t:e},{left:e},{right:e}");
                }
                Interface::Radial { radius, .. } => {
                    let _ = writeln!(interface, "{t:e},{radius:e}");
                }
            }
            history.push((t, itf));
            if is_snapshot(n, n_steps, cfg.cadence) {
                files.push((out.join(format!("snapshots/{n}.csv")), snapshot_csv(&tri, c, &rho0_c)));
                let rho_nodes = density_at_nodes(&tri, c, &rho0_nodes)?;
                files.push((
                    out.join(format!("nodes/{n}.csv")),
                    nodes_csv((0..tri.n_nodes()).map(|i| c.position(i)), &rho_nodes),
                ));
                if tri.dim() == Dim::Two {
                    files.push((out.join(format!("boundary/{n}.csv")), boundary_csv(&tri, c)));
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            post_error.get_or_insert(e);
        }
        n += 1;
    };
    let traj = run(&tri, &cfg0, &law, &rho0_c, &opts, &mut observe)?;
    if let Some(e) = post_error {
        return Err(e.into());
    }
    // the last state before a failure still gets a snapshot
    if traj.failure.is_some() {
        let k = n - 1;
        if !is_snapshot(k, n_steps, cfg.cadence) {
            files.push((out.join(format!("snapshots/{k}.csv")), snapshot_csv(&tri, &traj.last, &rho0_c)));
            let rho_nodes = density_at_nodes(&tri, &traj.last, &rho0_nodes)?;
            files.push((
                out.join(format!("nodes/{k}.csv")),
                nodes_csv((0..tri.n_nodes()).map(|i| traj.last.position(i)), &rho_nodes),
            ));
        }
    }
    for (path, text) in &files {
        write_file(path, text)?;
    }
    write_file(&out.join("steps.csv"), &steps)?;
    write_file(&out.join("interface.csv"), &interface)?;

    let last = &traj.last;
    let energy = |c: &Configuration| {
        if law.is_formal() {
            None
        } else {
            lagdiff::energy::discrete_energy(&tri, c, &law, &rho0_c).ok()
        }
    };
    let errors = match d {
        InitialDatum::Barenblatt { profile, t0 } => {
            let t = t0 + traj.t_last;
            let exact = |x: [f64; 2]| profile.value(x, t);
            let rho_nodes = density_at_nodes(&tri, last, &rho0_nodes)?;
            let x0 = match tri.dim() {
                Dim::One => (0..tri.n_nodes())
                    .find(|&i| tri.node(i)[0].abs() < 1e-12)
                    .map(|i| (rho_nodes[i] - exact(last.position(i))).abs()),
                Dim::Two => None,
            };
            let xi = profile.interface_radius(t);
            let interface = match tri.dim() {
                Dim::One => (last.a()[tri.n_nodes() - 1] - xi).abs(),
                Dim::Two => tri
                    .boundary_nodes()
                    .iter()
                    .map(|&i| {
                        let p = last.position(i);
                        (p[0].hypot(p[1]) - xi).abs()
                    })
                    .fold(0.0, f64::max),
            };
            Some(Errors {
                l2: l2_error(&tri, last, &rho0_c, exact)?,
                x0,
                interface,
                max: max_error(&tri, last, &rho0_c, exact)?,
            })
        }
        _ => None,
    };
    let initial = &history[0].1;
    let interface_final = match &history[history.len() - 1].1 {
        Interface::Endpoints { left, right } => InterfaceSummary::Endpoints { left: *left, right: *right },
        Interface::Radial { radius, .. } => InterfaceSummary::Radial { radius: *radius },
    };
    let summary = RunSummary {
        config: config_map(cfg),
        dim: cfg.dim,
        nodes: tri.n_nodes(),
        elements: tri.n_elements(),
        steps: traj.points.len() - 1,
        t_reached: traj.t_last,
        completed: traj.is_complete(),
        failure: traj.failure.as_ref().map(|e| e.to_string()),
        energy_mode: energy_mode(cfg),
        energy_initial: energy(&cfg0),
        energy_final: energy(last),
        energy_monotone: (!law.is_formal()).then_some(monotone),
        max_energy_slack: slack,
        mass_initial,
        mass_final: reconstructed_mass(&tri, last, &rho0_c)?,
        max_mass_drift,
        min_margin: if min_margin.is_finite() { min_margin } else { 1.0 },
        newton_iterations,
        errors,
        interface_final,
        t_star: numerical_waiting_time(&history, initial),
        t_star_sustained: sustained_waiting_time(&history, initial),
        t_star_theory: match d {
            InitialDatum::SinePower { theta, alpha } => waiting_time_theory(theta, alpha),
            _ => None,
        },
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn run_radial_experiment(
    cfg: &ExperimentConfig,
    radius: Length,
    nodes: usize,
    out: &Path,
) -> Result<RunSummary, RunError> {
    let d = datum(cfg)?;
    if !matches!(d, InitialDatum::CosineBump | InitialDatum::Barenblatt { .. }) {
        return Err(ConfigError::new("datum", "the radial reduction needs a radially symmetric 2D datum").into());
    }
    let radius = resolve(radius, support_radius(&d), 1.0)?;
    let law = EnergyLaw::new(cfg.law, cfg.alpha)?;
    let profile = |r: f64| d.value([r, 0.0]);
    let grid = RadialGrid::uniform(radius, nodes, profile)?;
    let rr = grid.nodes().to_vec();
    let areas: Vec<f64> = rr.windows(2).map(|w| std::f64::consts::PI * (w[1] * w[1] - w[0] * w[0])).collect();
    let rho0_nodes: Vec<f64> = rr.iter().map(|&r| profile(r)).collect();
    let n_steps = RunOptions::new(cfg.tau, cfg.t_final).n_steps();
    let newton = TridiagonalNewton { tol: cfg.newton_tol.min(1e-12), max_iter: cfg.newton_max_iter };
    let mass = |r: &[f64]| -> f64 {
        let j = grid.jacobians(r);
        (0..areas.len()).map(|e| grid.rho_mid()[e] / j[e] * j[e] * areas[e]).sum()
    };
    let mass_initial = mass(&rr);

    let mut steps = String::from(STEPS_HEADER);
    let mut interface = String::from("t,xi_radial\n");
    let mut history: Vec<(f64, Interface)> = Vec::new();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut prev: Option<(Vec<f64>, Option<f64>)> = None;
    let mut monotone = true;
    let mut newton_iterations = 0;
    let mut max_mass_drift: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut energies = (None, None);
    let mut slack: Option<f64> = None;
    let mut n = 0usize;
    let xi0 = radius;
    let result = run_radial(&grid, &law, cfg.tau, cfg.t_final, &newton, |s| {
        let j = grid.jacobians(&s.r);
        let margin = j.iter().copied().fold(f64::INFINITY, f64::min);
        if let Some((_, e0)) = &prev {
            min_margin = min_margin.min(margin);
            newton_iterations += s.newton_iterations;
            if let (Some(a), Some(b)) = (*e0, s.energy) {
                monotone &= b <= a;
            }
            let rep = StepReport {
                step: n,
                tau: cfg.tau,
                newton_iterations: s.newton_iterations,
                residual: f64::NAN,
                energy_before: *e0,
                energy_after: s.energy,
                dissipation: {
                    let (r_n, _) = prev.as_ref().expect("checked");
                    let m = grid.dissipation_matrix(law.law(), r_n);
                    let dr: Vec<f64> = s.r.iter().zip(r_n).map(|(x, y)| x - y).collect();
                    m.mul_vec(&dr).iter().zip(&dr).map(|(x, y)| x * y).sum::<f64>() / (2.0 * cfg.tau * cfg.tau)
                },
                margin,
                accepted: true,
            };
            if let (Some(a), Some(b)) = (*e0, s.energy) {
                let v = (b - a) / cfg.tau + rep.dissipation;
                slack = Some(slack.map_or(v, |m: f64| m.max(v)));
            }
            step_row(&mut steps, s.t, &rep);
        } else {
            energies.0 = s.energy;
        }
        energies.1 = s.energy;
        max_mass_drift = max_mass_drift.max((mass(&s.r) - mass_initial).abs() / mass_initial);
        let xi = s.r[s.r.len() - 1].max(xi0);
        let _ = writeln!(interface, "{:e},{xi:e}", s.t);
        history.push((s.t, Interface::Radial { radius: xi, polylines: Vec::new() }));
        if is_snapshot(n, n_steps, cfg.cadence) {
            let mut snap = String::from("elem,xc,yc,detF,rho\n");
            for e in 0..j.len() {
                let _ = writeln!(
                    snap,
                    "{e},{:e},{:e},{:e},{:e}",
                    0.5 * (s.r[e] + s.r[e + 1]),
                    0.0,
                    j[e],
                    grid.rho_mid()[e] / j[e]
                );
            }
            files.push((out.join(format!("snapshots/{n}.csv")), snap));
            let rho_nodes: Vec<f64> = (0..s.r.len())
                .map(|i| {
                    let around = [i.checked_sub(1), (i < j.len()).then_some(i)];
                    let (mut a_ref, mut a_cur) = (0.0, 0.0);
                    for e in around.into_iter().flatten() {
                        a_ref += areas[e];
                        a_cur += areas[e] * j[e];
                    }
                    rho0_nodes[i] * a_ref / a_cur
                })
                .collect();
            files.push((out.join(format!("nodes/{n}.csv")), nodes_csv(s.r.iter().map(|&r| [r, 0.0]), &rho_nodes)));
        }
        prev = Some((s.r.clone(), s.energy));
        n += 1;
    });
    for (path, text) in &files {
        write_file(path, text)?;
    }
    write_file(&out.join("steps.csv"), &steps)?;
    write_file(&out.join("interface.csv"), &interface)?;
    let (last_r, _) = prev.expect("initial state is always reported");
    let initial = &history[0].1;
    let summary = RunSummary {
        config: config_map(cfg),
        dim: 1,
        nodes,
        elements: nodes - 1,
        steps: history.len() - 1,
        t_reached: history[history.len() - 1].0,
        completed: result.is_ok(),
        failure: result.as_ref().err().map(|e| e.to_string()),
        energy_mode: energy_mode(cfg),
        energy_initial: energies.0,
        energy_final: energies.1,
        energy_monotone: (!law.is_formal()).then_some(monotone),
        max_energy_slack: slack,
        mass_initial,
        mass_final: mass(&last_r),
        max_mass_drift,
        min_margin: if min_margin.is_finite() { min_margin } else { 1.0 },
        newton_iterations,
        errors: None,
        interface_final: InterfaceSummary::Radial { radius: last_r[last_r.len() - 1].max(xi0) },
        t_star: numerical_waiting_time(&history, initial),
        t_star_sustained: sustained_waiting_time(&history, initial),
        t_star_theory: None,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
