use crate::config::{BoundaryKind, ExperimentConfig, Length, MeshSource};
use crate::sweep::Rung;
use lagdiff::energy::Law;

/// A named experiment: a single run or a refinement sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Run(ExperimentConfig),
    Sweep(ExperimentConfig, Vec<Rung>),
}

const LADDER_1D: [(usize, f64); 3] = [(51, 0.01), (101, 0.0025), (201, 0.000625)];
const LADDER_3: [(usize, f64); 3] = [(132, 0.01), (524, 0.0025), (2103, 0.000625)];
const LADDER_3_ALPHA4: [(usize, f64); 3] = [(135, 0.01), (516, 0.0025), (2124, 0.000625)];

fn rungs(l: &[(usize, f64)]) -> Vec<Rung> {
    l.iter().map(|&(nodes, tau)| Rung { nodes, tau }).collect()
}

fn steps_per_snapshot(tau: f64, t_final: f64, snapshots: usize) -> usize {
    ((t_final / tau).round() as usize / snapshots).max(1)
}

fn barenblatt_1d(law: Law, alpha: f64, nodes: usize, tau: f64, t_final: f64) -> ExperimentConfig {
    ExperimentConfig {
        law,
        alpha,
        dim: 1,
        mesh: MeshSource::Interval { left: Length::Support, right: Length::Support, nodes },
        datum: "barenblatt".into(),
        tau,
        t_final,
        cadence: steps_per_snapshot(tau, t_final, 10),
        ..ExperimentConfig::default()
    }
}

/// Ring grading of the 2D Barenblatt meshes: uniform for α = 2, dense near
/// the steep free boundary for α = 4.
fn disk_grading(alpha: f64) -> f64 {
    if alpha >= 4.0 {
        6.0
    } else {
        0.0
    }
}

fn barenblatt_2d(alpha: f64, nodes: usize, base: Option<usize>, tau: f64, t_final: f64) -> ExperimentConfig {
    ExperimentConfig {
        law: Law::Law2,
        alpha,
        dim: 2,
        mesh: MeshSource::Disk { radius: Length::Support, nodes, grading: disk_grading(alpha), base },
        datum: "barenblatt".into(),
        c0: 0.1,
        tau,
        t_final,
        cadence: steps_per_snapshot(tau, t_final, 10),
        ..ExperimentConfig::default()
    }
}

fn law_of_scheme(s: &str) -> Option<Law> {
    match s {
        "scheme1" => Some(Law::Law1),
        "scheme2" => Some(Law::Law2),
        _ => None,
    }
}

fn alpha_of(s: &str) -> Option<f64> {
    s.strip_prefix("alpha")?.parse().ok()
}

fn nodes_of(s: &str) -> Option<usize> {
    s.strip_prefix('N')?.parse().ok()
}

fn in_ladder(ladder: &[(usize, f64)], n: usize) -> Option<f64> {
    ladder.iter().find(|r| r.0 == n).map(|r| r.1)
}

/// Every preset name, in listing order.
pub fn preset_names() -> Vec<String> {
    let mut v = Vec::new();
    for scheme in ["scheme1", "scheme2"] {
        for alpha in [3, 4] {
            v.push(format!("table1-{scheme}-alpha{alpha}"));
            for (n, _) in LADDER_1D {
                v.push(format!("table1-{scheme}-alpha{alpha}-N{n}"));
            }
        }
    }
    for alpha in [4, 5, 6, 8] {
        v.push(format!("table2-alpha{alpha}"));
        for (n, _) in &LADDER_1D[..2] {
            v.push(format!("table2-alpha{alpha}-N{n}"));
        }
    }
    for (alpha, ladder) in [(2, LADDER_3), (4, LADDER_3_ALPHA4)] {
        v.push(format!("table3-alpha{alpha}"));
        for (n, _) in ladder {
            v.push(format!("table3-alpha{alpha}-N{n}"));
        }
    }
    for s in [
        "barenblatt-1d-scheme1-alpha4-T10",
        "barenblatt-1d-scheme2-alpha4-T10",
        "barenblatt-2d-alpha4-N516",
        "waiting-1d-theta0-alpha4",
        "waiting-1d-theta-half-alpha7",
        "waiting-2d-cosine",
        "waiting-2d-axisymmetric",
        "donut-alpha3",
        "peaks-merge-alpha4",
    ] {
        v.push(s.to_string());
    }
    v
}

pub fn preset(name: &str) -> Option<Preset> {
    let parts: Vec<&str> = name.split('-').collect();
    match parts.as_slice() {
        ["table1", scheme, alpha] => {
            let (law, alpha) = (law_of_scheme(scheme)?, alpha_of(alpha)?);
            (alpha == 3.0 || alpha == 4.0)
                .then(|| Preset::Sweep(barenblatt_1d(law, alpha, 51, 0.01, 1.0), rungs(&LADDER_1D)))
        }
        ["table1", scheme, alpha, n] => {
            let (law, alpha, n) = (law_of_scheme(scheme)?, alpha_of(alpha)?, nodes_of(n)?);
            let tau = in_ladder(&LADDER_1D, n)?;
            (alpha == 3.0 || alpha == 4.0).then(|| Preset::Run(barenblatt_1d(law, alpha, n, tau, 1.0)))
        }
        ["table2", alpha] => {
            let alpha = alpha_of(alpha)?;
            [4.0, 5.0, 6.0, 8.0]
                .contains(&alpha)
                .then(|| Preset::Sweep(barenblatt_1d(Law::Law2, alpha, 51, 0.01, 1.0), rungs(&LADDER_1D[..2])))
        }
        ["table2", alpha, n] => {
            let (alpha, n) = (alpha_of(alpha)?, nodes_of(n)?);
            let tau = in_ladder(&LADDER_1D[..2], n)?;
            [4.0, 5.0, 6.0, 8.0].contains(&alpha).then(|| Preset::Run(barenblatt_1d(Law::Law2, alpha, n, tau, 1.0)))
        }
        ["table3", alpha] => {
            let alpha = alpha_of(alpha)?;
            let ladder = table3_ladder(alpha)?;
            Some(Preset::Sweep(barenblatt_2d(alpha, ladder[0].0, None, ladder[0].1, 0.1), rungs(&ladder)))
        }
        ["table3", alpha, n] => {
            let (alpha, n) = (alpha_of(alpha)?, nodes_of(n)?);
            let ladder = table3_ladder(alpha)?;
            let tau = in_ladder(&ladder, n)?;
            Some(Preset::Run(barenblatt_2d(alpha, n, Some(ladder[0].0), tau, 0.1)))
        }
        ["barenblatt", "1d", scheme, "alpha4", "T10"] => {
            Some(Preset::Run(barenblatt_1d(law_of_scheme(scheme)?, 4.0, 51, 0.01, 10.0)))
        }
        ["barenblatt", "2d", "alpha4", "N516"] => {
            Some(Preset::Run(barenblatt_2d(4.0, 516, Some(LADDER_3_ALPHA4[0].0), 0.01, 1.0)))
        }
        ["waiting", "1d", "theta0", "alpha4"] => Some(Preset::Run(waiting_1d(0.0, 4.0))),
        ["waiting", "1d", "theta", "half", "alpha7"] => Some(Preset::Run(waiting_1d(0.5, 7.0))),
        ["waiting", "2d", "cosine"] => Some(Preset::Run(ExperimentConfig {
            alpha: 4.0,
            dim: 2,
            mesh: MeshSource::Disk { radius: Length::Value(1.0), nodes: 2105, grading: 3.0, base: None },
            datum: "cosine-bump-2d".into(),
            tau: 1e-3,
            t_final: 0.5,
            cadence: 50,
            ..ExperimentConfig::default()
        })),
        ["waiting", "2d", "axisymmetric"] => Some(Preset::Run(ExperimentConfig {
            alpha: 4.0,
            dim: 1,
            mesh: MeshSource::Radial { radius: Length::Value(1.0), nodes: 201 },
            datum: "cosine-bump-2d".into(),
            tau: 1e-4,
            t_final: 0.5,
            cadence: 500,
            ..ExperimentConfig::default()
        })),
        ["donut", "alpha3"] => Some(Preset::Run(ExperimentConfig {
            alpha: 3.0,
            dim: 2,
            mesh: MeshSource::ArcTube {
                center_radius: 0.75,
                half_width: 0.25,
                theta0: std::f64::consts::FRAC_PI_2,
                theta1: 2.0 * std::f64::consts::PI,
                nodes: 910,
            },
            datum: "donut".into(),
            tau: 1e-2,
            t_final: 0.2,
            cadence: 5,
            ..ExperimentConfig::default()
        })),
        ["peaks", "merge", "alpha4"] => Some(Preset::Run(ExperimentConfig {
            alpha: 4.0,
            dim: 2,
            mesh: MeshSource::Structured { x: (-1.0, 1.0), y: (-1.0, 1.0), nx: 28, ny: 28 },
            datum: "two-peaks".into(),
            boundary: BoundaryKind::Pinned,
            tau: 1e-2,
            t_final: 5.0,
            cadence: 50,
            ..ExperimentConfig::default()
        })),
        _ => None,
    }
}

fn table3_ladder(alpha: f64) -> Option<[(usize, f64); 3]> {
    if alpha == 2.0 {
        Some(LADDER_3)
    } else if alpha == 4.0 {
        Some(LADDER_3_ALPHA4)
    } else {
        None
    }
}

fn waiting_1d(theta: f64, alpha: f64) -> ExperimentConfig {
    ExperimentConfig {
        alpha,
        theta,
        dim: 1,
        mesh: MeshSource::IntervalRefined {
            left: Length::Value(-std::f64::consts::PI),
            right: Length::Value(0.0),
            nodes: 101,
            splits: 4,
        },
        datum: "sine-power".into(),
        tau: 1e-4,
        t_final: 0.2,
        cadence: 100,
        ..ExperimentConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_resolves_and_validates() {
        let names = preset_names();
        assert!(names.len() > 30);
        for name in &names {
            match preset(name).unwrap_or_else(|| panic!("{name}")) {
                Preset::Run(c) => c.validate().unwrap(),
                Preset::Sweep(c, l) => {
                    c.validate().unwrap();
                    assert!(l.len() >= 2);
                }
            }
        }
    }

    #[test]
    fn unknown_names() {
        for name in ["table1-scheme3-alpha3", "table1-scheme1-alpha5-N51", "table2-alpha4-N201", "nope"] {
            assert!(preset(name).is_none(), "{name}");
        }
    }

    #[test]
    fn presets_survive_the_config_format() {
        for name in preset_names() {
            let (Preset::Run(c) | Preset::Sweep(c, _)) = preset(&name).unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c, "{name}");
        }
    }
}
