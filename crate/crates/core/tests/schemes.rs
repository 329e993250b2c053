mod common;

use common::max_abs;
use lagdiff::energy::{sample_centroids, EnergyLaw, Law};
use lagdiff::mesh::{build_disk_with_nodes, build_interval, Configuration};
use lagdiff::pme1d::{step_closed_form, Grid1D, Stencil, TridiagonalNewton};
use lagdiff::postprocess::reconstructed_mass;
use lagdiff::solver::{run, step_backward_euler, step_explicit_euler, Stepper};
use lagdiff::{Barenblatt, BoundaryMode, NewtonOptions, RunOptions};

#[test]
fn general_machinery_matches_closed_form_in_1d() {
    let profile = Barenblatt::one_d(3.0).unwrap();
    let r0 = profile.interface_radius(1.0);
    let tri = build_interval(-r0, r0, 41).unwrap();
    let rho = sample_centroids(&tri, |x| profile.value(x, 1.0));
    let grid = Grid1D::from_parts(tri.nodes().iter().map(|p| p[0]).collect(), rho.clone()).unwrap();
    for law in [Law::Law1, Law::Law2] {
        let law = EnergyLaw::new(law, 3.0).unwrap();
        let mut cfg = tri.identity();
        let mut a = cfg.a().to_vec();
        for _ in 0..5 {
            let (next, _) = step_backward_euler(
                &tri,
                &cfg,
                &law,
                &rho,
                0.01,
                &BoundaryMode::FreeSupport,
                &NewtonOptions::default(),
            )
            .unwrap();
            cfg = next;
            a = step_closed_form(&grid, &law, Stencil::Symmetric, &a, 0.01, &TridiagonalNewton::default()).unwrap().0;
            let diff: Vec<f64> = cfg.a().iter().zip(&a).map(|(x, y)| x - y).collect();
            assert!(max_abs(&diff) <= 1e-10, "{law:?}: {}", max_abs(&diff));
        }
    }
}

fn one_step_gap(tri: &lagdiff::Triangulation, rho: &[f64], law: &EnergyLaw, tau: f64) -> f64 {
    let cfg = tri.identity();
    let (be, _) =
        step_backward_euler(tri, &cfg, law, rho, tau, &BoundaryMode::FreeSupport, &NewtonOptions::default()).unwrap();
    let (ee, _) = step_explicit_euler(tri, &cfg, law, rho, tau, &BoundaryMode::FreeSupport).unwrap();
    let diff: Vec<f64> = be.dof().iter().zip(ee.dof()).map(|(x, y)| x - y).collect();
    max_abs(&diff)
}

#[test]
fn explicit_and_implicit_agree_to_second_order_per_step() {
    let profile = Barenblatt::one_d(2.0).unwrap();
    let r0 = profile.interface_radius(1.0);
    let tri = build_interval(-r0, r0, 31).unwrap();
    let rho = sample_centroids(&tri, |x| profile.value(x, 1.0));
    for law in [Law::Law1, Law::Law2] {
        let law = EnergyLaw::new(law, 2.0).unwrap();
        let gaps: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&t| one_step_gap(&tri, &rho, &law, t)).collect();
        for w in gaps.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..=4.4).contains(&ratio), "{law:?}: ratio {ratio}");
        }
    }
}

#[test]
fn oversized_explicit_step_is_rejected() {
    let profile = Barenblatt::one_d(4.0).unwrap();
    let r0 = profile.interface_radius(1.0);
    let tri = build_interval(-r0, r0, 41).unwrap();
    let rho = sample_centroids(&tri, |x| profile.value(x, 1.0));
    let law = EnergyLaw::new(Law::Law1, 4.0).unwrap();
    let stepper = Stepper::new(&tri, law, &rho, BoundaryMode::FreeSupport, NewtonOptions::default()).unwrap();
    let (_, small) = stepper.explicit_euler(&tri.identity(), 1e-5).unwrap();
    assert!(small.accepted);
    let (_, big) = stepper.explicit_euler(&tri.identity(), 10.0).unwrap();
    assert!(!big.accepted);
}

#[test]
fn runs_dissipate_energy_and_conserve_mass() {
    let profile = Barenblatt::new(3.0, 2, 1.0).unwrap();
    let r0 = profile.interface_radius(1.0);
    let tri = build_disk_with_nodes(r0, 120, 0.0).unwrap();
    let rho = sample_centroids(&tri, |x| profile.value(x, 1.0));
    for law in [Law::Law1, Law::Law2] {
        let law = EnergyLaw::new(law, 3.0).unwrap();
        let mut masses = Vec::new();
        let mut collect = |_: f64, cfg: &Configuration, _: Option<&lagdiff::StepReport>| {
            masses.push(reconstructed_mass(&tri, cfg, &rho).unwrap());
        };
        let traj = run(&tri, &tri.identity(), &law, &rho, &RunOptions::new(0.02, 0.2), &mut collect).unwrap();
        assert!(traj.is_complete());
        for rep in traj.reports() {
            let (e0, e1) = (rep.energy_before.unwrap(), rep.energy_after.unwrap());
            assert!(e1 <= e0);
            assert!((e1 - e0) / rep.tau <= -rep.dissipation + 1e-9);
        }
        assert!(masses.iter().all(|m| (m - masses[0]).abs() <= 1e-12 * masses[0]));
    }
}
