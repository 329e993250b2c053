#![allow(dead_code)]

use lagdiff::mesh::{
    build_disk_with_nodes, build_interval, build_structured, is_admissible, Configuration, Dim, Triangulation,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Structured square with interior nodes jittered by up to 20% of the spacing.
pub fn jittered_square(n: usize, rng: &mut ChaCha8Rng) -> Triangulation {
    let base = build_structured((0.0, 1.0), (0.0, 1.0), n, n).unwrap();
    let h = 1.0 / n as f64;
    let nodes: Vec<[f64; 2]> = (0..base.n_nodes())
        .map(|i| {
            let p = base.node(i);
            if base.is_boundary(i) {
                p
            } else {
                [p[0] + 0.2 * h * rng.gen_range(-1.0..1.0), p[1] + 0.2 * h * rng.gen_range(-1.0..1.0)]
            }
        })
        .collect();
    let tris: Vec<[usize; 3]> = (0..base.n_elements())
        .map(|e| {
            let n = base.element_nodes(e);
            [n[0], n[1], n[2]]
        })
        .collect();
    Triangulation::new_2d(nodes, &tris).unwrap()
}

pub fn meshes(dim: Dim) -> Vec<Triangulation> {
    match dim {
        Dim::One => vec![
            build_interval(-1.0, 2.0, 9).unwrap(),
            Triangulation::from_points_1d(&[-1.0, -0.7, -0.2, 0.1, 0.15, 0.6, 1.3]).unwrap(),
        ],
        Dim::Two => vec![jittered_square(4, &mut rng(7)), build_disk_with_nodes(1.0, 40, 1.0).unwrap()],
    }
}

/// Random admissible perturbation of the identity.
pub fn random_state(tri: &Triangulation, amplitude: f64, rng: &mut ChaCha8Rng) -> Configuration {
    loop {
        let h = match tri.dim() {
            Dim::One => tri.elements().iter().map(|e| e.measure()).fold(f64::INFINITY, f64::min),
            Dim::Two => tri.elements().iter().map(|e| e.measure().sqrt()).fold(f64::INFINITY, f64::min),
        };
        let mut cfg = tri.identity();
        for v in cfg.dof_mut() {
            *v += amplitude * h * rng.gen_range(-1.0..1.0);
        }
        if is_admissible(tri, &cfg).admissible {
            return cfg;
        }
    }
}

pub fn random_density(tri: &Triangulation, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..tri.n_elements()).map(|_| rng.gen_range(0.2..1.5)).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
