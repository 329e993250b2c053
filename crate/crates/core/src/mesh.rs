//! Reference-domain meshes and the piecewise-linear flow map defined on them.
//!
//! A [`Triangulation`] is built once and never changes; the time-dependent
//! state is a [`Configuration`] holding the current position of every node.
//! Degrees of freedom are stored in coordinate blocks: all x-coordinates
//! first, then (in 2D) all y-coordinates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Spatial dimension of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    /// Number of vertices of a simplex in this dimension.
    pub fn simplex_size(self) -> usize {
        self.n() + 1
    }
}

/// Precomputed reference geometry of one simplex.
#[derive(Debug, Clone)]
pub struct Element {
    /// Node indices, counter-clockwise in 2D, left-to-right in 1D. The third
    /// slot is unused in 1D.
    nodes: [usize; 3],
    /// Reference measure |τ_e| (length in 1D, area in 2D).
    measure: f64,
    /// det A_e of the affine map from the unit simplex (equals h in 1D).
    det_map: f64,
    /// A_e^{-1}; in 1D only `[0][0] = 1/h` is meaningful.
    inv_map: [[f64; 2]; 2],
    centroid: [f64; 2],
}

impl Element {
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn det_map(&self) -> f64 {
        self.det_map
    }

    pub fn inv_map(&self) -> [[f64; 2]; 2] {
        self.inv_map
    }

    pub fn centroid(&self) -> [f64; 2] {
        self.centroid
    }
}

/// An immutable simplicial mesh of the reference domain Ω_0.
#[derive(Debug, Clone)]
pub struct Triangulation {
    dim: Dim,
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    node_elements: Vec<Vec<usize>>,
    boundary: Vec<bool>,
}

impl Triangulation {
    /// Builds a 1D mesh from strictly increasing nodes joined consecutively.
    pub fn from_points_1d(points: &[f64]) -> Result<Self> {
        let pairs: Vec<[usize; 2]> = (1..points.len()).map(|i| [i - 1, i]).collect();
        Self::new_1d(points.to_vec(), &pairs)
    }

    /// Builds a 1D mesh from explicit element pairs. Nodes must be strictly
    /// increasing; pairs given right-to-left are reordered.
    pub fn new_1d(points: Vec<f64>, pairs: &[[usize; 2]]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMesh("a 1D mesh needs at least two nodes".into()));
        }
        for i in 1..points.len() {
            if !(points[i] > points[i - 1]) {
                return Err(Error::InvalidMesh(format!(
                    "1D nodes must be strictly increasing (node {} = {} after {})",
                    i,
                    points[i],
                    points[i - 1]
                )));
            }
        }
        let n = points.len();
        let mut elements = Vec::with_capacity(pairs.len());
        for (e, &[i, j]) in pairs.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidMesh(format!("element {e} references node out of range")));
            }
            if i == j {
                return Err(Error::DegenerateElement {
                    element: e,
                    message: "degenerate element (repeated node)".into(),
                });
            }
            let (l, r) = if points[i] < points[j] { (i, j) } else { (j, i) };
            let h = points[r] - points[l];
            elements.push(Element {
                nodes: [l, r, usize::MAX],
                measure: h,
                det_map: h,
                inv_map: [[1.0 / h, 0.0], [0.0, 0.0]],
                centroid: [0.5 * (points[l] + points[r]), 0.0],
            });
        }
        let nodes = points.into_iter().map(|x| [x, 0.0]).collect();
        Self::finish(Dim::One, nodes, elements)
    }

    /// Builds a 2D triangulation. Clockwise triples are reordered to
    /// counter-clockwise; zero-area triangles and duplicate nodes are rejected.
    pub fn new_2d(nodes: Vec<[f64; 2]>, triangles: &[[usize; 3]]) -> Result<Self> {
        let n = nodes.len();
        let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(n);
        for (i, p) in nodes.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidMesh(format!("node {i} has non-finite coordinates")));
            }
            let key = ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits());
            if let Some(first) = seen.insert(key, i) {
                return Err(Error::InvalidMesh(format!("duplicate node: {i} coincides with {first}")));
            }
        }
        let mut elements = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            let mut t = *tri;
            if t.iter().any(|&k| k >= n) {
                return Err(Error::InvalidMesh(format!("element {e} references node out of range")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateElement {
                    element: e,
                    message: "degenerate element (repeated node)".into(),
                });
            }
            let mut det = cross(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if det < 0.0 {
                t.swap(1, 2);
                det = -det;
            }
            if det <= 0.0 {
                return Err(Error::DegenerateElement { element: e, message: "degenerate element (zero area)".into() });
            }
            let [p1, p2, p3] = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            // A_e^{-1} = (1/det A_e) [[Y3-Y1, X1-X3], [Y1-Y2, X2-X1]]
            let inv_map =
                [[(p3[1] - p1[1]) / det, (p1[0] - p3[0]) / det], [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det]];
            elements.push(Element {
                nodes: t,
                measure: 0.5 * det,
                det_map: det,
                inv_map,
                centroid: [(p1[0] + p2[0] + p3[0]) / 3.0, (p1[1] + p2[1] + p3[1]) / 3.0],
            });
        }
        Self::finish(Dim::Two, nodes, elements)
    }

    fn finish(dim: Dim, nodes: Vec<[f64; 2]>, elements: Vec<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let n = nodes.len();
        let k = dim.simplex_size();
        let mut node_elements = vec![Vec::new(); n];
        for (e, el) in elements.iter().enumerate() {
            for &i in &el.nodes[..k] {
                node_elements[i].push(e);
            }
        }
        if let Some(i) = node_elements.iter().position(|v| v.is_empty()) {
            return Err(Error::InvalidMesh(format!("node {i} belongs to no element")));
        }
        let mut boundary = vec![false; n];
        match dim {
            Dim::One => {
                // Facets are nodes: a node on exactly one element is on the boundary.
                for (i, adj) in node_elements.iter().enumerate() {
                    boundary[i] = adj.len() == 1;
                }
            }
            Dim::Two => {
                let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
                for el in &elements {
                    for l in 0..3 {
                        let (a, b) = (el.nodes[l], el.nodes[(l + 1) % 3]);
                        *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                    }
                }
                for (&(a, b), &count) in &edges {
                    if count == 1 {
                        boundary[a] = true;
                        boundary[b] = true;
                    } else if count > 2 {
                        return Err(Error::InvalidMesh(format!("edge ({a}, {b}) is shared by {count} elements")));
                    }
                }
            }
        }
        Ok(Self { dim, nodes, elements, node_elements, boundary })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Number of degrees of freedom N·d.
    pub fn n_dof(&self) -> usize {
        self.nodes.len() * self.dim.n()
    }

    /// Reference coordinates; the second component is zero in 1D.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    /// Global node indices en(e, ·) of element `e`.
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e].nodes[..self.dim.simplex_size()]
    }

    /// N(i): the elements containing node `i`.
    pub fn node_elements(&self, i: usize) -> &[usize] {
        &self.node_elements[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    /// Σ_e |τ_e|.
    pub fn total_measure(&self) -> f64 {
        self.elements.iter().map(|e| e.measure).sum()
    }

    /// Global degree-of-freedom index of coordinate `c` of node `i`.
    #[inline]
    pub fn dof_index(&self, i: usize, c: usize) -> usize {
        c * self.nodes.len() + i
    }

    /// Local degrees of freedom of element `e` in the order used by the
    /// element kernels: (x_1, x_2[, x_3, y_1, y_2, y_3]).
    pub fn element_dofs(&self, e: usize) -> ([usize; 6], usize) {
        let el = &self.elements[e];
        let n = self.nodes.len();
        match self.dim {
            Dim::One => ([el.nodes[0], el.nodes[1], 0, 0, 0, 0], 2),
            Dim::Two => ([el.nodes[0], el.nodes[1], el.nodes[2], n + el.nodes[0], n + el.nodes[1], n + el.nodes[2]], 6),
        }
    }

    /// The identity flow map x_h(X) = X.
    pub fn identity(&self) -> Configuration {
        let mut dof = Vec::with_capacity(self.n_dof());
        for c in 0..self.dim.n() {
            dof.extend(self.nodes.iter().map(|p| p[c]));
        }
        Configuration { dim: self.dim, n_nodes: self.n_nodes(), dof }
    }

    /// Configuration from a map applied to every reference node.
    pub fn map_nodes(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Configuration {
        let mut cfg = self.identity();
        for i in 0..self.n_nodes() {
            let p = f(self.nodes[i]);
            cfg.set_position(i, p);
        }
        cfg
    }

    fn check_cfg(&self, cfg: &Configuration) -> Result<()> {
        if cfg.dof.len() != self.n_dof() || cfg.dim != self.dim {
            return Err(Error::SizeMismatch { expected: self.n_dof(), got: cfg.dof.len() });
        }
        Ok(())
    }
}

fn cross(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]) -> f64 {
    (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1])
}

/// Degrees of freedom Ξ of the discrete flow map: the current node positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: Dim,
    n_nodes: usize,
    dof: Vec<f64>,
}

impl Configuration {
    pub fn from_dof(tri: &Triangulation, dof: Vec<f64>) -> Result<Self> {
        let cfg = Self { dim: tri.dim, n_nodes: tri.n_nodes(), dof };
        tri.check_cfg(&cfg)?;
        Ok(cfg)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dof(&self) -> &[f64] {
        &self.dof
    }

    pub fn dof_mut(&mut self) -> &mut [f64] {
        &mut self.dof
    }

    pub fn into_dof(self) -> Vec<f64> {
        self.dof
    }

    /// x-coordinate block `a`.
    pub fn a(&self) -> &[f64] {
        &self.dof[..self.n_nodes]
    }

    /// y-coordinate block `b` (empty in 1D).
    pub fn b(&self) -> &[f64] {
        &self.dof[self.n_nodes..]
    }

    pub fn position(&self, i: usize) -> [f64; 2] {
        match self.dim {
            Dim::One => [self.dof[i], 0.0],
            Dim::Two => [self.dof[i], self.dof[self.n_nodes + i]],
        }
    }

    pub fn set_position(&mut self, i: usize, p: [f64; 2]) {
        self.dof[i] = p[0];
        if self.dim == Dim::Two {
            self.dof[self.n_nodes + i] = p[1];
        }
    }

    /// Adds a constant vector to every node.
    pub fn translate(&mut self, shift: [f64; 2]) {
        for c in 0..self.dim.n() {
            for v in &mut self.dof[c * self.n_nodes..(c + 1) * self.n_nodes] {
                *v += shift[c];
            }
        }
    }
}

/// Deformation gradient F_e, a d×d matrix. In 1D only `m[0][0]` is used and
/// the remaining diagonal entry is 1 so that the determinant equals F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationGradient {
    pub dim: Dim,
    pub m: [[f64; 2]; 2],
}

impl DeformationGradient {
    pub fn det(&self) -> f64 {
        match self.dim {
            Dim::One => self.m[0][0],
            Dim::Two => self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0],
        }
    }
}

/// F_e = Σ_l x_l ⊗ ∇_X λ_l on element `e`, written out in closed form.
pub fn deformation_gradient(tri: &Triangulation, cfg: &Configuration, e: usize) -> DeformationGradient {
    let el = &tri.elements[e];
    match tri.dim {
        Dim::One => {
            let a = cfg.a();
            DeformationGradient {
                dim: Dim::One,
                m: [[(a[el.nodes[1]] - a[el.nodes[0]]) / el.det_map, 0.0], [0.0, 1.0]],
            }
        }
        Dim::Two => {
            let [i1, i2, i3] = el.nodes;
            let (a, b) = (cfg.a(), cfg.b());
            let [p1, p2, p3] = [tri.nodes[i1], tri.nodes[i2], tri.nodes[i3]];
            let y23 = p2[1] - p3[1];
            let y31 = p3[1] - p1[1];
            let y12 = p1[1] - p2[1];
            let x32 = p3[0] - p2[0];
            let x13 = p1[0] - p3[0];
            let x21 = p2[0] - p1[0];
            let d = el.det_map;
            DeformationGradient {
                dim: Dim::Two,
                m: [
                    [(a[i1] * y23 + a[i2] * y31 + a[i3] * y12) / d, (a[i1] * x32 + a[i2] * x13 + a[i3] * x21) / d],
                    [(b[i1] * y23 + b[i2] * y31 + b[i3] * y12) / d, (b[i1] * x32 + b[i2] * x13 + b[i3] * x21) / d],
                ],
            }
        }
    }
}

/// det F_e, computed from the ratio of deformed to reference signed measure.
pub fn det_f(tri: &Triangulation, cfg: &Configuration, e: usize) -> f64 {
    let el = &tri.elements[e];
    match tri.dim {
        Dim::One => {
            let a = cfg.a();
            (a[el.nodes[1]] - a[el.nodes[0]]) / el.det_map
        }
        Dim::Two => {
            let [i1, i2, i3] = el.nodes;
            cross(cfg.position(i1), cfg.position(i2), cfg.position(i3)) / el.det_map
        }
    }
}

/// Result of an admissibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// min_e det F_e in 2D; min_i (a_{i+1} - a_i) in 1D.
    pub margin: f64,
}

pub fn is_admissible(tri: &Triangulation, cfg: &Configuration) -> Admissibility {
    let margin = match tri.dim {
        Dim::One => {
            let a = cfg.a();
            a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
        }
        Dim::Two => (0..tri.n_elements()).map(|e| det_f(tri, cfg, e)).fold(f64::INFINITY, f64::min),
    };
    // NaN margins (from non-finite coordinates) are inadmissible.
    Admissibility { admissible: margin > 0.0, margin }
}

pub(crate) fn require_admissible(tri: &Triangulation, cfg: &Configuration) -> Result<()> {
    tri.check_cfg(cfg)?;
    let adm = is_admissible(tri, cfg);
    if adm.admissible {
        Ok(())
    } else {
        Err(Error::NotAdmissible { margin: adm.margin })
    }
}

/// Jacobian J = det F_e of one element together with its first derivatives
/// with respect to the element's local degrees of freedom. The second
/// derivatives are constant per element and returned separately by
/// [`element_det_hessian`].
#[derive(Debug, Clone, Copy)]
pub struct ElementJacobian {
    pub det: f64,
    pub grad: [f64; 6],
    pub len: usize,
}

pub fn element_jacobian(tri: &Triangulation, cfg: &Configuration, e: usize) -> ElementJacobian {
    let el = &tri.elements[e];
    match tri.dim {
        Dim::One => {
            let a = cfg.a();
            let h = el.det_map;
            ElementJacobian {
                det: (a[el.nodes[1]] - a[el.nodes[0]]) / h,
                grad: [-1.0 / h, 1.0 / h, 0.0, 0.0, 0.0, 0.0],
                len: 2,
            }
        }
        Dim::Two => {
            let [i1, i2, i3] = el.nodes;
            let [x1, y1] = cfg.position(i1);
            let [x2, y2] = cfg.position(i2);
            let [x3, y3] = cfg.position(i3);
            let d = el.det_map;
            let area2 = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
            ElementJacobian {
                det: area2 / d,
                grad: [(y2 - y3) / d, (y3 - y1) / d, (y1 - y2) / d, (x3 - x2) / d, (x1 - x3) / d, (x2 - x1) / d],
                len: 6,
            }
        }
    }
}

/// ∂²(det F_e)/∂χ∂χ' over local degrees of freedom. Zero in 1D; in 2D only
/// the mixed x/y blocks are non-zero.
pub fn element_det_hessian(tri: &Triangulation, e: usize) -> [[f64; 6]; 6] {
    let mut h = [[0.0; 6]; 6];
    if tri.dim == Dim::Two {
        let d = tri.elements[e].det_map;
        const C: [[f64; 3]; 3] = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                h[i][3 + j] = C[i][j] / d;
                h[3 + j][i] = C[i][j] / d;
            }
        }
    }
    h
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Uniform partition of [left, right] with `n_nodes` nodes.
pub fn build_interval(left: f64, right: f64, n_nodes: usize) -> Result<Triangulation> {
    build_interval_refined(left, right, n_nodes, 1)
}

/// Uniform partition of [left, right] with `n_uniform` nodes whose first and
/// last elements are each split into `end_splits` equal pieces. The result has
/// `n_uniform + 2 (end_splits - 1)` nodes.
pub fn build_interval_refined(left: f64, right: f64, n_uniform: usize, end_splits: usize) -> Result<Triangulation> {
    if n_uniform < 2 || !(right > left) || end_splits == 0 {
        return Err(Error::InvalidParameter(format!(
            "interval [{left}, {right}] with {n_uniform} nodes and {end_splits} end splits"
        )));
    }
    let h = (right - left) / (n_uniform - 1) as f64;
    let at = |i: usize| {
        if i == n_uniform - 1 {
            right
        } else {
            left + i as f64 * h
        }
    };
    let mut pts = Vec::with_capacity(n_uniform + 2 * end_splits);
    pts.push(left);
    if n_uniform == 2 {
        for k in 1..end_splits {
            pts.push(left + (right - left) * k as f64 / end_splits as f64);
        }
    } else {
        for k in 1..end_splits {
            pts.push(left + h * k as f64 / end_splits as f64);
        }
        for i in 1..n_uniform - 1 {
            pts.push(at(i));
        }
        let last = at(n_uniform - 2);
        for k in 1..end_splits {
            pts.push(last + (right - last) * k as f64 / end_splits as f64);
        }
    }
    pts.push(right);
    Triangulation::from_points_1d(&pts)
}

/// Structured triangulation of [x0, x1] × [y0, y1] with `nx` × `ny` cells,
/// each cut along its lower-left to upper-right diagonal.
pub fn build_structured(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Triangulation> {
    if nx == 0 || ny == 0 || !(x.1 > x.0) || !(y.1 > y.0) {
        return Err(Error::InvalidParameter(format!(
            "rectangle [{}, {}] x [{}, {}] with {nx} x {ny} cells",
            x.0, x.1, y.0, y.1
        )));
    }
    let coord = |lo: f64, hi: f64, k: usize, n: usize| {
        if k == n {
            hi
        } else {
            lo + (hi - lo) * k as f64 / n as f64
        }
    };
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([coord(x.0, x.1, i, nx), coord(y.0, y.1, j, ny)]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Triangulation::new_2d(nodes, &tris)
}

/// Sizing for the ring-based disk builder: the node spacing at radius r is
/// `spacing * (1 + grading * (1 - r / radius))`, so a positive grading makes
/// the mesh denser near the rim than at the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSizing {
    pub spacing: f64,
    pub grading: f64,
}

/// Triangulation of the disk |X| ≤ radius built from concentric rings of
/// nodes, joined ring-to-ring by an angular sweep.
pub fn build_disk(radius: f64, sizing: DiskSizing) -> Result<Triangulation> {
    build_disk_rings(radius, sizing, None, 1.0)
}

/// Ring construction with an optional fixed ring count and a factor on the
/// number of nodes per ring.
fn build_disk_rings(
    radius: f64,
    sizing: DiskSizing,
    rings_override: Option<usize>,
    angular: f64,
) -> Result<Triangulation> {
    let DiskSizing { spacing, grading } = sizing;
    if !(radius > 0.0) || !(spacing > 0.0) || !(grading >= 0.0) {
        return Err(Error::InvalidParameter(format!("disk radius {radius}, spacing {spacing}, grading {grading}")));
    }
    let c0 = spacing;
    let c1 = spacing * grading / radius;
    let size = |r: f64| c0 + c1 * (radius - r);
    // ring coordinate φ(r) = ∫_r^R ds / h(s) and its inverse
    let phi = |r: f64| {
        if c1 > 0.0 {
            ((c0 + c1 * (radius - r)) / c0).ln() / c1
        } else {
            (radius - r) / c0
        }
    };
    let phi_inv = |p: f64| {
        if c1 > 0.0 {
            radius - c0 * ((c1 * p).exp() - 1.0) / c1
        } else {
            radius - c0 * p
        }
    };
    let n_rings = rings_override.unwrap_or_else(|| (phi(0.0).round() as usize).max(1));
    let step = phi(0.0) / n_rings as f64;

    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for k in 0..n_rings {
        let r = if k == 0 { radius } else { phi_inv(k as f64 * step) };
        let m = ((angular * 2.0 * PI * r / size(r)).round() as usize).max(6);
        let offset = if k % 2 == 0 { 0.0 } else { PI / m as f64 };
        let ring: Vec<usize> = (0..m)
            .map(|j| {
                let t = offset + 2.0 * PI * j as f64 / m as f64;
                nodes.push([r * t.cos(), r * t.sin()]);
                nodes.len() - 1
            })
            .collect();
        rings.push(ring);
    }
    nodes.push([0.0, 0.0]);
    let center = nodes.len() - 1;

    let angle = |p: [f64; 2]| {
        let t = p[1].atan2(p[0]);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    };
    let mut tris = Vec::new();
    for k in 0..rings.len() {
        let outer = &rings[k];
        if k + 1 < rings.len() {
            let inner = &rings[k + 1];
            let oa: Vec<f64> = outer.iter().map(|&i| angle(nodes[i])).collect();
            let ia: Vec<f64> = inner.iter().map(|&i| angle(nodes[i])).collect();
            zip_polylines(outer, &oa, inner, &ia, true, &mut tris);
        } else {
            for j in 0..outer.len() {
                tris.push([center, outer[j], outer[(j + 1) % outer.len()]]);
            }
        }
    }
    Triangulation::new_2d(nodes, &tris)
}

/// Disk mesh whose node count is as close as possible to `target_nodes`,
/// found by bisection on the spacing.
pub fn build_disk_with_nodes(radius: f64, target_nodes: usize, grading: f64) -> Result<Triangulation> {
    build_disk_level(radius, target_nodes, grading, 0, None)
}

/// Ring count, spacing and angular factor of the disk with about
/// `target_nodes` nodes.
fn disk_parameters(radius: f64, target_nodes: usize, grading: f64) -> Result<(usize, f64, f64)> {
    if target_nodes < 7 {
        return Err(Error::InvalidParameter(format!("disk needs at least 7 nodes, got {target_nodes}")));
    }
    let count = |s: f64| build_disk(radius, DiskSizing { spacing: s, grading }).map(|t| t.n_nodes());
    let (mut lo, mut hi) = (radius * 1e-3, radius * 2.0);
    let mut best: Option<(usize, f64)> = None;
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let n = count(mid)?;
        let d = n.abs_diff(target_nodes);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, mid));
        }
        if n == target_nodes {
            break;
        }
        if n > target_nodes {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, spacing) = best.expect("bisection ran");
    let sizing = DiskSizing { spacing, grading };
    // keep the ring count and tune the nodes per ring to close the gap
    let n_rings = {
        let c1 = grading / radius;
        let phi0 = if c1 > 0.0 { (1.0 + c1 * radius).ln() / (c1 * spacing) } else { radius / spacing };
        (phi0.round() as usize).max(1)
    };
    let count = |f: f64| build_disk_rings(radius, sizing, Some(n_rings), f).map(|t| t.n_nodes());
    let (mut lo, mut hi) = (0.7, 1.4);
    let mut best = (count(1.0)?.abs_diff(target_nodes), 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let n = count(mid)?;
        if n.abs_diff(target_nodes) < best.0 {
            best = (n.abs_diff(target_nodes), mid);
        }
        if n == target_nodes {
            break;
        }
        if n > target_nodes {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((n_rings, spacing, best.1))
}

/// Member `level` of a disk mesh family: level 0 has about `base_nodes`
/// nodes, and each level doubles the ring count and halves the spacing. With
/// `target_nodes` the nodes per ring are scaled to match that count.
pub fn build_disk_level(
    radius: f64,
    base_nodes: usize,
    grading: f64,
    level: u32,
    target_nodes: Option<usize>,
) -> Result<Triangulation> {
    let (n_rings, spacing, angular) = disk_parameters(radius, base_nodes, grading)?;
    let f = 2f64.powi(level as i32);
    let sizing = DiskSizing { spacing: spacing / f, grading };
    let rings = n_rings << level;
    let Some(target) = target_nodes else {
        return build_disk_rings(radius, sizing, Some(rings), angular);
    };
    let count = |a: f64| build_disk_rings(radius, sizing, Some(rings), a).map(|t| t.n_nodes());
    let (mut lo, mut hi) = (0.5 * angular, 2.0 * angular);
    let mut best = (count(angular)?.abs_diff(target), angular);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let n = count(mid)?;
        if n.abs_diff(target) < best.0 {
            best = (n.abs_diff(target), mid);
        }
        if n == target {
            break;
        }
        if n > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    build_disk_rings(radius, sizing, Some(rings), best.1)
}

/// Joins two polylines of nodes sorted by a monotone parameter (angle) with
/// a strip of triangles. With `closed`, both are closed rings.
fn zip_polylines(
    outer: &[usize],
    outer_t: &[f64],
    inner: &[usize],
    inner_t: &[f64],
    closed: bool,
    tris: &mut Vec<[usize; 3]>,
) {
    let (m, n) = (outer.len(), inner.len());
    let (steps_o, steps_i) = if closed { (m, n) } else { (m - 1, n - 1) };
    let period = if closed { 2.0 * PI } else { 0.0 };
    let next_t = |ts: &[f64], k: usize, len: usize| {
        if k + 1 < len {
            ts[k + 1]
        } else {
            ts[0] + period
        }
    };
    let (mut i, mut j) = (0usize, 0usize);
    while i < steps_o || j < steps_i {
        let advance_outer = if i == steps_o {
            false
        } else if j == steps_i {
            true
        } else {
            next_t(outer_t, i, m) <= next_t(inner_t, j, n)
        };
        if advance_outer {
            tris.push([outer[i % m], outer[(i + 1) % m], inner[j % n]]);
            i += 1;
        } else {
            tris.push([inner[j % n], outer[i % m], inner[(j + 1) % n]]);
            j += 1;
        }
    }
}

/// Triangulation of the tube of half-width `half_width` around the circular
/// arc of radius `arc_radius` from angle `theta_start` to `theta_end`
/// (counter-clockwise), closed by half-disk caps at both ends.
pub fn build_arc_tube(
    arc_radius: f64,
    half_width: f64,
    theta_start: f64,
    theta_end: f64,
    spacing: f64,
) -> Result<Triangulation> {
    if !(half_width > 0.0) || !(arc_radius > half_width) || !(theta_end > theta_start) || !(spacing > 0.0) {
        return Err(Error::InvalidParameter("arc tube parameters".into()));
    }
    let half = ((half_width / spacing).round() as usize).max(1);
    let nr = 2 * half;
    let sweep = theta_end - theta_start;
    let nt = ((sweep * arc_radius / spacing).round() as usize).max(2);
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let id = |ir: usize, it: usize| it * (nr + 1) + ir;
    for it in 0..=nt {
        let th = theta_start + sweep * it as f64 / nt as f64;
        for ir in 0..=nr {
            let r = arc_radius - half_width + 2.0 * half_width * ir as f64 / nr as f64;
            nodes.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut tris = Vec::new();
    for it in 0..nt {
        for ir in 0..nr {
            let (p00, p10, p01, p11) = (id(ir, it), id(ir + 1, it), id(ir, it + 1), id(ir + 1, it + 1));
            if (ir + it) % 2 == 0 {
                tris.push([p00, p10, p11]);
                tris.push([p00, p11, p01]);
            } else {
                tris.push([p00, p10, p01]);
                tris.push([p10, p11, p01]);
            }
        }
    }
    // caps: (end slice index, outward tangential sign)
    for (it, sign) in [(0usize, -1.0f64), (nt, 1.0)] {
        let th = theta_start + sweep * it as f64 / nt as f64;
        let u = [th.cos(), th.sin()];
        let v = [-sign * th.sin(), sign * th.cos()];
        let c = [arc_radius * u[0], arc_radius * u[1]];
        let mut prev: Vec<usize> = vec![id(half, it)];
        let mut prev_t: Vec<f64> = vec![0.0];
        for k in 1..=half {
            let s = half_width * k as f64 / half as f64;
            let m = ((PI * s / spacing).round() as usize).max(2);
            let mut ring = Vec::with_capacity(m + 1);
            let mut ring_t = Vec::with_capacity(m + 1);
            for q in 0..=m {
                let phi = PI * q as f64 / m as f64;
                let idx = if q == 0 {
                    id(half + k, it)
                } else if q == m {
                    id(half - k, it)
                } else {
                    nodes.push([
                        c[0] + s * (phi.cos() * u[0] + phi.sin() * v[0]),
                        c[1] + s * (phi.cos() * u[1] + phi.sin() * v[1]),
                    ]);
                    nodes.len() - 1
                };
                ring.push(idx);
                ring_t.push(phi);
            }
            if prev.len() == 1 {
                for q in 0..m {
                    tris.push([prev[0], ring[q], ring[q + 1]]);
                }
            } else {
                zip_polylines(&ring, &ring_t, &prev, &prev_t, false, &mut tris);
            }
            prev = ring;
            prev_t = ring_t;
        }
    }
    Triangulation::new_2d(nodes, &tris)
}

/// Arc-tube mesh with node count close to `target_nodes`.
pub fn build_arc_tube_with_nodes(
    arc_radius: f64,
    half_width: f64,
    theta_start: f64,
    theta_end: f64,
    target_nodes: usize,
) -> Result<Triangulation> {
    let mut best: Option<(usize, Triangulation)> = None;
    let mut spacing = half_width;
    while spacing > half_width / 200.0 {
        let t = build_arc_tube(arc_radius, half_width, theta_start, theta_end, spacing)?;
        let d = t.n_nodes().abs_diff(target_nodes);
        let overshoot = t.n_nodes() > target_nodes;
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, t));
        }
        if overshoot {
            break;
        }
        spacing *= 0.995;
    }
    Ok(best.expect("at least one mesh built").1)
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses the plain-text mesh format:
///
/// ```text
/// nodes <M_n>
/// x y        # M_n lines, or a single x in 1D
/// elements <M_e>
/// i j k      # M_e lines of zero-based indices, or i j in 1D
/// ```
pub fn parse_mesh(text: &str) -> Result<Triangulation> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<usize> {
        let (no, l) = lines.next().ok_or(Error::Parse { line: 0, message: format!("missing `{key}` header") })?;
        let mut it = l.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some(k), Some(Ok(n)), None) if k == key => Ok(n),
            _ => Err(Error::Parse { line: no, message: format!("expected `{key} <count>`, got `{l}`") }),
        }
    };

    let n_nodes = header(&mut lines, "nodes")?;
    let mut coords: Vec<[f64; 2]> = Vec::with_capacity(n_nodes);
    let mut node_lines = Vec::with_capacity(n_nodes);
    let mut dim: Option<usize> = None;
    for _ in 0..n_nodes {
        let (no, l) =
            lines.next().ok_or(Error::Parse { line: 0, message: format!("expected {n_nodes} node lines") })?;
        let vals: std::result::Result<Vec<f64>, _> = l.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|e| Error::Parse { line: no, message: format!("bad coordinate: {e}") })?;
        if vals.is_empty() || vals.len() > 2 || dim.is_some_and(|d| d != vals.len()) {
            return Err(Error::Parse {
                line: no,
                message: format!("node line must hold 1 or 2 coordinates consistently, got `{l}`"),
            });
        }
        dim = Some(vals.len());
        coords.push([vals[0], vals.get(1).copied().unwrap_or(0.0)]);
        node_lines.push(no);
    }
    let dim = dim.ok_or(Error::Parse { line: 0, message: "mesh has no nodes".into() })?;
    // duplicate nodes, reported at the offending line
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, p) in coords.iter().enumerate() {
        if let Some(first) = seen.insert(((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits()), i) {
            return Err(Error::Parse {
                line: node_lines[i],
                message: format!("duplicate node {i} (same coordinates as node {first})"),
            });
        }
    }

    let n_elems = header(&mut lines, "elements")?;
    let mut conn: Vec<[usize; 3]> = Vec::with_capacity(n_elems);
    let mut elem_lines = Vec::with_capacity(n_elems);
    for _ in 0..n_elems {
        let (no, l) =
            lines.next().ok_or(Error::Parse { line: 0, message: format!("expected {n_elems} element lines") })?;
        let vals: std::result::Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|e| Error::Parse { line: no, message: format!("bad index: {e}") })?;
        if vals.len() != dim + 1 {
            return Err(Error::Parse { line: no, message: format!("expected {} indices, got `{l}`", dim + 1) });
        }
        if let Some(&bad) = vals.iter().find(|&&v| v >= n_nodes) {
            return Err(Error::Parse { line: no, message: format!("node index {bad} out of range") });
        }
        let distinct = match dim {
            1 => vals[0] != vals[1],
            _ => vals[0] != vals[1] && vals[1] != vals[2] && vals[0] != vals[2],
        };
        if !distinct {
            return Err(Error::Parse { line: no, message: format!("degenerate element {} (`{l}`)", conn.len()) });
        }
        conn.push([vals[0], vals[1], vals.get(2).copied().unwrap_or(0)]);
        elem_lines.push(no);
    }
    if let Some((no, l)) = lines.next() {
        return Err(Error::Parse { line: no, message: format!("unexpected trailing content `{l}`") });
    }

    let at_line = |err: Error| match err {
        Error::DegenerateElement { element, message } => {
            Error::Parse { line: elem_lines[element], message: format!("element {element}: {message}") }
        }
        other => other,
    };
    if dim == 1 {
        let pts: Vec<f64> = coords.iter().map(|p| p[0]).collect();
        let pairs: Vec<[usize; 2]> = conn.iter().map(|c| [c[0], c[1]]).collect();
        Triangulation::new_1d(pts, &pairs).map_err(at_line)
    } else {
        Triangulation::new_2d(coords, &conn).map_err(at_line)
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Triangulation> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse { line: 0, message: format!("{}: {e}", path.display()) })?;
    parse_mesh(&text)
}

/// Serializes a mesh in the text format read by [`parse_mesh`].
pub fn write_mesh(tri: &Triangulation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", tri.n_nodes());
    for p in &tri.nodes {
        match tri.dim {
            Dim::One => {
                let _ = writeln!(s, "{:e}", p[0]);
            }
            Dim::Two => {
                let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
            }
        }
    }
    let _ = writeln!(s, "elements {}", tri.n_elements());
    for e in 0..tri.n_elements() {
        let nodes: Vec<String> = tri.element_nodes(e).iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", nodes.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_triangle() -> Triangulation {
        Triangulation::new_2d(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[[0, 1, 2]]).unwrap()
    }

    #[test]
    fn identity_has_unit_gradient() {
        let tri = build_structured((0.0, 1.0), (0.0, 2.0), 3, 2).unwrap();
        let cfg = tri.identity();
        for e in 0..tri.n_elements() {
            let f = deformation_gradient(&tri, &cfg, e);
            assert_relative_eq!(f.m[0][0], 1.0, epsilon = 1e-14);
            assert_relative_eq!(f.m[1][1], 1.0, epsilon = 1e-14);
            assert!(f.m[0][1].abs() < 1e-14 && f.m[1][0].abs() < 1e-14);
            assert_relative_eq!(det_f(&tri, &cfg, e), 1.0, epsilon = 1e-14);
        }
        let adm = is_admissible(&tri, &cfg);
        assert!(adm.admissible);
        assert_relative_eq!(adm.margin, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn scaling_and_shear() {
        let tri = unit_triangle();
        let cfg = tri.map_nodes(|p| [2.0 * p[0], 2.0 * p[1]]);
        let f = deformation_gradient(&tri, &cfg, 0);
        assert_eq!(f.m, [[2.0, 0.0], [0.0, 2.0]]);
        assert_eq!(det_f(&tri, &cfg, 0), 4.0);

        let shear = tri.map_nodes(|p| [p[0] + 0.3 * p[1], p[1]]);
        assert_relative_eq!(det_f(&tri, &shear, 0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(deformation_gradient(&tri, &shear, 0).m[0][1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn reflection_and_collapse() {
        let tri = unit_triangle();
        let mut cfg = tri.identity();
        cfg.set_position(1, [0.0, 1.0]);
        cfg.set_position(2, [1.0, 0.0]);
        assert!(det_f(&tri, &cfg, 0) < 0.0);

        let mut collapsed = tri.identity();
        collapsed.set_position(2, [1.0, 0.0]);
        let adm = is_admissible(&tri, &collapsed);
        assert!(!adm.admissible);
        assert_eq!(adm.margin, 0.0);
    }

    #[test]
    fn one_dimensional_gradient() {
        let tri = Triangulation::from_points_1d(&[0.0, 0.1, 0.2]).unwrap();
        let cfg = Configuration::from_dof(&tri, vec![0.0, 0.25, 0.3]).unwrap();
        let f = deformation_gradient(&tri, &cfg, 0);
        assert_relative_eq!(f.m[0][0], 2.5, epsilon = 1e-14);
        assert_relative_eq!(f.det(), 2.5, epsilon = 1e-14);

        let bad = Configuration::from_dof(&tri, vec![0.0, 0.3, 0.25]).unwrap();
        assert!(!is_admissible(&tri, &bad).admissible);
    }

    #[test]
    fn builders() {
        let sq = build_structured((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        assert_eq!((sq.n_nodes(), sq.n_elements()), (9, 8));
        assert_eq!(sq.boundary_nodes().len(), 8);

        let iv = build_interval(-PI, 0.0, 5).unwrap();
        let xs: Vec<f64> = iv.nodes().iter().map(|p| p[0]).collect();
        for (x, want) in xs.iter().zip([-PI, -0.75 * PI, -0.5 * PI, -0.25 * PI, 0.0]) {
            assert_relative_eq!(*x, want, epsilon = 1e-15);
        }

        let refined = build_interval_refined(-PI, 0.0, 101, 4).unwrap();
        assert_eq!(refined.n_nodes(), 107);
        assert_relative_eq!(refined.node(4)[0], -PI + PI / 100.0, epsilon = 1e-14);
    }

    #[test]
    fn disk_is_valid_and_targets_node_count() {
        for (target, grading) in [(132, 0.0), (524, 1.0), (2103, 1.0)] {
            let d = build_disk_with_nodes(1.3, target, grading).unwrap();
            assert!(d.n_nodes().abs_diff(target) <= target / 20, "{} vs {target}", d.n_nodes());
            assert_relative_eq!(d.total_measure(), PI * 1.69, max_relative = 0.02);
            for i in d.boundary_nodes() {
                let p = d.node(i);
                assert_relative_eq!(p[0].hypot(p[1]), 1.3, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn arc_tube_is_valid() {
        let t = build_arc_tube_with_nodes(0.75, 0.25, 0.5 * PI, 2.0 * PI, 910).unwrap();
        assert!(t.n_nodes().abs_diff(910) < 60, "{}", t.n_nodes());
        // tube area: sweep * 2 r w plus one full disk of radius w from the caps
        let area = 1.5 * PI * 2.0 * 0.75 * 0.25 + PI * 0.0625;
        assert_relative_eq!(t.total_measure(), area, max_relative = 0.02);
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let tri = Triangulation::new_2d(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], &[[0, 1, 2]]).unwrap();
        assert!(tri.element(0).det_map() > 0.0);
        assert_relative_eq!(tri.element(0).measure(), 0.5);
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let sq = build_structured((0.0, 1.0), (0.0, 1.0), 2, 1).unwrap();
        let text = write_mesh(&sq);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.n_elements(), sq.n_elements());
        assert_eq!(back.nodes(), sq.nodes());

        let one_d = parse_mesh("# a line\nnodes 3\n0\n0.5 # mid\n1\nelements 2\n0 1\n1 2\n").unwrap();
        assert_eq!(one_d.dim(), Dim::One);

        let degenerate = "nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 1\n";
        match parse_mesh(degenerate) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("degenerate element"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let collinear = "nodes 3\n0 0\n1 0\n2 0\nelements 1\n0 1 2\n";
        assert!(matches!(parse_mesh(collinear), Err(Error::Parse { line: 6, .. })));
        let dup = "nodes 3\n0 0\n1 0\n0 0\nelements 1\n0 1 2\n";
        assert!(matches!(parse_mesh(dup), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse_mesh("nodes 2\n0 0\nx 1\n"), Err(Error::Parse { line: 3, .. })));
    }
}
