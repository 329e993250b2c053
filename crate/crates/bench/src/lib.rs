//! Benchmarks live in benches/. The helpers here build the shared inputs.

use lagdiff::energy::sample_centroids;
use lagdiff::mesh::{build_disk_with_nodes, build_interval};
use lagdiff::{Barenblatt, Triangulation};

/// 2D Barenblatt profile at t = 1 on a disk mesh with about `nodes` nodes,
/// with its centroid densities.
pub fn disk_case(alpha: f64, nodes: usize) -> (Triangulation, Vec<f64>) {
    let b = Barenblatt::new(alpha, 2, 0.1).expect("valid profile");
    let tri = build_disk_with_nodes(b.interface_radius(1.0), nodes, 0.0).expect("disk mesh");
    let rho = sample_centroids(&tri, |x| b.value(x, 1.0));
    (tri, rho)
}

/// 1D Barenblatt profile at t = 1 on a uniform grid of its support.
pub fn interval_case(alpha: f64, nodes: usize) -> (Triangulation, Vec<f64>) {
    let b = Barenblatt::one_d(alpha).expect("valid profile");
    let r = b.interface_radius(1.0);
    let tri = build_interval(-r, r, nodes).expect("interval mesh");
    let rho = sample_centroids(&tri, |x| b.value(x, 1.0));
    (tri, rho)
}
