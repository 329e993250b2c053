mod common;

use common::*;
use lagdiff::dissipation::DissipationMatrix;
use lagdiff::mesh::{build_interval, build_structured, Dim};
use lagdiff::pme1d::{closed_form_matrix, Grid1D};
use lagdiff::sparse::Cholesky;
use lagdiff::Law;
use rand::Rng;

#[test]
fn dissipation_is_symmetric_positive_definite() {
    let mut rng = rng(21);
    for dim in [Dim::One, Dim::Two] {
        for tri in meshes(dim) {
            for _ in 0..5 {
                let cfg = random_state(&tri, 0.2, &mut rng);
                let rho = random_density(&tri, &mut rng);
                for m in [
                    DissipationMatrix::assemble_law1(&tri, &rho).unwrap(),
                    DissipationMatrix::assemble_law2(&tri, &cfg).unwrap(),
                ] {
                    assert!(m.matrix().is_symmetric());
                    assert!(Cholesky::factorize(m.matrix()).is_ok());
                    for (i, j, _) in m.matrix().triplets() {
                        assert!(i == j || tri.node_elements(i).iter().any(|e| tri.element_nodes(*e).contains(&j)));
                    }
                    for _ in 0..1000 {
                        let v: Vec<f64> = (0..tri.n_dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        let q: f64 = m.apply_d(&v).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
                        assert!(q >= 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn solve_round_trip_on_random_vectors() {
    let mut rng = rng(22);
    let tri = jittered_square(6, &mut rng);
    let cfg = random_state(&tri, 0.2, &mut rng);
    let m = DissipationMatrix::assemble_law2(&tri, &cfg).unwrap();
    for _ in 0..10 {
        let v: Vec<f64> = (0..tri.n_dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = m.solve_d(&m.apply_d(&v).unwrap()).unwrap();
        assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-10));
    }
}

/// On a one-element-high strip, testing with functions constant across the
/// strip gives back the 1D matrices.
#[test]
fn strip_mesh_reproduces_closed_forms() {
    let n = 8;
    let strip = build_structured((0.0, 2.0), (0.0, 1.0), n, 1).unwrap();
    let line = build_interval(0.0, 2.0, n + 1).unwrap();
    let h = 2.0 / n as f64;
    let column = |x: f64| ((x / h).floor() as usize).min(n - 1);
    let rho_col: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * k as f64).collect();
    let rho_strip: Vec<f64> = strip.elements().iter().map(|e| rho_col[column(e.centroid()[0])]).collect();
    let gaps: Vec<f64> = (0..=n).map(|i| 2.0 * (i as f64 / n as f64).powf(1.3)).collect();
    let cfg_strip = strip.map_nodes(|p| [2.0 * (p[0] / 2.0).powf(1.3), p[1]]);
    let grid = Grid1D::from_parts(line.nodes().iter().map(|p| p[0]).collect(), rho_col.clone()).unwrap();

    let col_of_node = |i: usize| (strip.node(i)[0] / h).round() as usize;
    for law in [Law::Law1, Law::Law2] {
        let m2 = match law {
            Law::Law1 => DissipationMatrix::assemble_law1(&strip, &rho_strip).unwrap(),
            Law::Law2 => DissipationMatrix::assemble_law2(&strip, &cfg_strip).unwrap(),
        };
        let mut lumped = vec![vec![0.0; n + 1]; n + 1];
        for (i, j, v) in m2.matrix().triplets() {
            lumped[col_of_node(i)][col_of_node(j)] += v;
        }
        let m1 = closed_form_matrix(&grid, law, &gaps);
        for i in 0..=n {
            assert!((lumped[i][i] - m1.diag[i]).abs() < 1e-13);
            if i < n {
                assert!((lumped[i][i + 1] - m1.upper[i]).abs() < 1e-13);
                assert!((lumped[i + 1][i] - m1.lower[i]).abs() < 1e-13);
            }
        }
    }
}
