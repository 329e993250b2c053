use lagdiff::energy::{discrete_energy, EnergyLaw, Law};
use lagdiff::mesh::{build_structured, deformation_gradient, det_f, is_admissible};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn det_f_matches_gradient_determinant(
        shifts in prop::collection::vec(-0.08f64..0.08, 2 * 16),
    ) {
        let tri = build_structured((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let mut cfg = tri.identity();
        for (v, s) in cfg.dof_mut().iter_mut().zip(&shifts) {
            *v += s;
        }
        for e in 0..tri.n_elements() {
            let f = deformation_gradient(&tri, &cfg, e);
            prop_assert!((f.det() - det_f(&tri, &cfg, e)).abs() <= 1e-14);
        }
    }

    #[test]
    fn energy_is_translation_invariant(
        shifts in prop::collection::vec(-0.08f64..0.08, 2 * 16),
        dx in -5.0f64..5.0,
        dy in -5.0f64..5.0,
        alpha in 2.0f64..6.0,
    ) {
        let tri = build_structured((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let mut cfg = tri.identity();
        for (v, s) in cfg.dof_mut().iter_mut().zip(&shifts) {
            *v += s;
        }
        prop_assume!(is_admissible(&tri, &cfg).admissible);
        let rho = vec![0.7; tri.n_elements()];
        for law in [Law::Law1, Law::Law2] {
            let law = EnergyLaw::new(law, alpha).unwrap();
            let e0 = discrete_energy(&tri, &cfg, &law, &rho).unwrap();
            let mut moved = cfg.clone();
            moved.translate([dx, dy]);
            let e1 = discrete_energy(&tri, &moved, &law, &rho).unwrap();
            prop_assert!((e0 - e1).abs() <= 1e-12 * e0.abs().max(1.0));
        }
    }
}
