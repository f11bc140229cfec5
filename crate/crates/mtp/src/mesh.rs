//! Simplicial meshes in one and two dimensions.
//!
//! A [`SpatialMesh`] stores vertices, elements (intervals or triangles with
//! positive orientation), and the derived facet topology: every facet
//! carries a unit normal with a deterministic orientation (out of the
//! lower-index adjacent element; outward on the domain boundary), its
//! measure, and a boundary marker where it lies on the domain boundary.
//!
//! Generators: uniform interval meshes, structured unit-square meshes, and
//! the Peterson band family used in the worst-case advection study.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Coordinates are stored padded to 2D; a 1D mesh uses only the first entry.
pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// A mesh facet: a vertex in 1D, an edge in 2D.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Facet {
    /// Vertex indices (length 1 in 1D, 2 in 2D).
    pub vertices: Vec<usize>,
    /// Unit normal. Interior facets: points out of `elements.0` (the
    /// lower-index adjacent element). Boundary facets: outward.
    pub normal: Point,
    /// Adjacent elements, lower index first.
    pub elements: (usize, Option<usize>),
    /// Facet measure (1 for points, edge length in 2D).
    pub measure: f64,
    /// Boundary marker; `None` on interior facets.
    pub marker: Option<i32>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.elements.1.is_none()
    }
}

/// Precomputed affine geometry of one element.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub volume: f64,
    pub centroid: Point,
    pub diameter: f64,
    /// Gradient of the barycentric coordinate of each local vertex.
    pub bary_grads: Vec<Point>,
}

/// The vertex patch of a mesh vertex: all elements containing it, plus the
/// facets containing it split into patch-interior and domain-boundary sets.
/// Patch-perimeter facets (not containing the center vertex) never enter
/// tent assembly since the tent height function vanishes on them.
#[derive(Debug, Clone)]
pub struct VertexPatch {
    pub center: usize,
    /// Element indices, ascending.
    pub elements: Vec<usize>,
    /// All patch vertices, ascending (always contains `center`).
    pub vertices: Vec<usize>,
    /// Facets containing the center vertex that are interior to the mesh.
    pub interior_facets: Vec<usize>,
    /// Facets containing the center vertex that lie on the domain boundary.
    pub boundary_facets: Vec<usize>,
}

/// Diagonal direction for structured square meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonal {
    /// Diagonal from bottom-left to top-right.
    NE,
    /// Diagonal from bottom-right to top-left.
    NW,
}

#[derive(Debug, Clone)]
pub struct SpatialMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Element vertex indices, `dim + 1` per element, positively oriented.
    pub elements: Vec<Vec<usize>>,
    pub facets: Vec<Facet>,
    pub geometry: Vec<ElementGeometry>,
    /// Elements containing each vertex, ascending.
    pub vertex_elements: Vec<Vec<usize>>,
    /// Vertices sharing an element with each vertex, ascending.
    pub vertex_neighbors: Vec<Vec<usize>>,
}

impl SpatialMesh {
    /// Build a mesh from raw vertex/element lists. Validates orientation,
    /// computes facets, normals and adjacency. `boundary_markers` assigns
    /// labels to boundary facets by their (unordered) vertex sets; facets
    /// without an entry get marker 0.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        elements: Vec<Vec<usize>>,
        boundary_markers: &[(Vec<usize>, i32)],
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("dim must be 1 or 2, got {dim}")));
        }
        if elements.is_empty() {
            return Err(Error::invalid("mesh has no elements"));
        }
        for (k, elem) in elements.iter().enumerate() {
            if elem.len() != dim + 1 {
                return Err(Error::Topology(format!(
                    "element {k} has {} vertices, expected {}",
                    elem.len(),
                    dim + 1
                )));
            }
            for &v in elem {
                if v >= vertices.len() {
                    return Err(Error::Topology(format!(
                        "element {k} references missing vertex {v}"
                    )));
                }
            }
        }

        let geometry: Vec<ElementGeometry> = elements
            .iter()
            .enumerate()
            .map(|(k, elem)| element_geometry(dim, &vertices, elem, k))
            .collect::<Result<_>>()?;

        let facets = compute_facets(dim, &vertices, &elements, &geometry, boundary_markers)?;

        let mut vertex_elements = vec![Vec::new(); vertices.len()];
        for (k, elem) in elements.iter().enumerate() {
            for &v in elem {
                vertex_elements[v].push(k);
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); vertices.len()];
        for elem in &elements {
            for &v in elem {
                for &u in elem {
                    if u != v && !vertex_neighbors[v].contains(&u) {
                        vertex_neighbors[v].push(u);
                    }
                }
            }
        }
        for nb in &mut vertex_neighbors {
            nb.sort_unstable();
        }

        Ok(SpatialMesh {
            dim,
            vertices,
            elements,
            facets,
            geometry,
            vertex_elements,
            vertex_neighbors,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Maximal element diameter.
    pub fn h_max(&self) -> f64 {
        self.geometry
            .iter()
            .map(|g| g.diameter)
            .fold(0.0, f64::max)
    }

    /// Total mesh measure.
    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    /// Worst circumradius/inradius ratio over all elements (1 in 1D).
    pub fn shape_regularity(&self) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        self.elements
            .iter()
            .map(|elem| {
                let p: Vec<Point> = elem.iter().map(|&v| self.vertices[v]).collect();
                let a = norm(sub(p[1], p[0]));
                let b = norm(sub(p[2], p[1]));
                let c = norm(sub(p[0], p[2]));
                let s = 0.5 * (a + b + c);
                let area = triangle_area(p[0], p[1], p[2]);
                let circum = a * b * c / (4.0 * area);
                let inr = area / s;
                circum / inr
            })
            .fold(0.0, f64::max)
    }

    /// The vertex patch of `v`.
    pub fn vertex_patch(&self, v: usize) -> VertexPatch {
        let elements = self.vertex_elements[v].clone();
        let mut vertices: Vec<usize> = elements
            .iter()
            .flat_map(|&k| self.elements[k].iter().copied())
            .collect();
        vertices.sort_unstable();
        vertices.dedup();
        let mut interior_facets = Vec::new();
        let mut boundary_facets = Vec::new();
        for (fi, f) in self.facets.iter().enumerate() {
            if f.vertices.contains(&v) {
                if f.is_boundary() {
                    boundary_facets.push(fi);
                } else {
                    interior_facets.push(fi);
                }
            }
        }
        VertexPatch {
            center: v,
            elements,
            vertices,
            interior_facets,
            boundary_facets,
        }
    }

    /// Per-element constant gradient of a vertex-nodal scalar field.
    pub fn element_gradient(&self, elem: usize, nodal: impl Fn(usize) -> f64) -> Point {
        let g = &self.geometry[elem];
        let mut grad = [0.0, 0.0];
        for (loc, &v) in self.elements[elem].iter().enumerate() {
            let val = nodal(v);
            grad[0] += val * g.bary_grads[loc][0];
            grad[1] += val * g.bary_grads[loc][1];
        }
        grad
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = MeshFile {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|p| p[..self.dim].to_vec())
                .collect(),
            elements: self.elements.clone(),
            boundary_markers: self
                .facets
                .iter()
                .filter_map(|f| {
                    f.marker.map(|m| BoundaryMarker {
                        vertices: f.vertices.clone(),
                        marker: m,
                    })
                })
                .collect(),
        };
        serde_json::to_value(file).expect("mesh serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let file: MeshFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::Format(format!("bad mesh file: {e}")))?;
        let dim = file.dim;
        let vertices: Vec<Point> = file
            .vertices
            .iter()
            .map(|coords| {
                let mut p = [0.0, 0.0];
                for (i, &c) in coords.iter().take(2).enumerate() {
                    p[i] = c;
                }
                p
            })
            .collect();
        let markers: Vec<(Vec<usize>, i32)> = file
            .boundary_markers
            .iter()
            .map(|bm| (bm.vertices.clone(), bm.marker))
            .collect();
        SpatialMesh::new(dim, vertices, file.elements, &markers)
    }
}

/// JSON mesh document: `{"dim", "vertices", "elements", "boundary_markers"}`.
#[derive(Serialize, Deserialize)]
struct MeshFile {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    elements: Vec<Vec<usize>>,
    #[serde(default)]
    boundary_markers: Vec<BoundaryMarker>,
}

#[derive(Serialize, Deserialize)]
struct BoundaryMarker {
    vertices: Vec<usize>,
    marker: i32,
}

fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn element_geometry(
    dim: usize,
    vertices: &[Point],
    elem: &[usize],
    k: usize,
) -> Result<ElementGeometry> {
    let p: Vec<Point> = elem.iter().map(|&v| vertices[v]).collect();
    match dim {
        1 => {
            let len = p[1][0] - p[0][0];
            if len <= 0.0 {
                return Err(Error::Topology(format!(
                    "element {k} has nonpositive length {len}"
                )));
            }
            Ok(ElementGeometry {
                volume: len,
                centroid: [0.5 * (p[0][0] + p[1][0]), 0.0],
                diameter: len,
                bary_grads: vec![[-1.0 / len, 0.0], [1.0 / len, 0.0]],
            })
        }
        2 => {
            let area = triangle_area(p[0], p[1], p[2]);
            if area <= 0.0 {
                return Err(Error::Topology(format!(
                    "element {k} has nonpositive signed area {area}"
                )));
            }
            let centroid = [
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
            ];
            let diameter = norm(sub(p[1], p[0]))
                .max(norm(sub(p[2], p[1])))
                .max(norm(sub(p[0], p[2])));
            // grad of barycentric coordinate i: rotate the opposite edge.
            let mut bary_grads = Vec::with_capacity(3);
            for i in 0..3 {
                let a = p[(i + 1) % 3];
                let b = p[(i + 2) % 3];
                let edge = sub(b, a);
                bary_grads.push([-edge[1] / (2.0 * area), edge[0] / (2.0 * area)]);
            }
            Ok(ElementGeometry {
                volume: area,
                centroid,
                diameter,
                bary_grads,
            })
        }
        _ => unreachable!(),
    }
}

fn compute_facets(
    dim: usize,
    vertices: &[Point],
    elements: &[Vec<usize>],
    geometry: &[ElementGeometry],
    boundary_markers: &[(Vec<usize>, i32)],
) -> Result<Vec<Facet>> {
    // Collect facets as sorted vertex keys -> adjacent elements.
    let mut by_key: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (k, elem) in elements.iter().enumerate() {
        let local_facets: Vec<Vec<usize>> = match dim {
            1 => vec![vec![elem[0]], vec![elem[1]]],
            2 => vec![
                vec![elem[0], elem[1]],
                vec![elem[1], elem[2]],
                vec![elem[2], elem[0]],
            ],
            _ => unreachable!(),
        };
        for mut key in local_facets {
            key.sort_unstable();
            by_key.entry(key).or_default().push(k);
        }
    }

    let marker_map: HashMap<Vec<usize>, i32> = boundary_markers
        .iter()
        .map(|(vs, m)| {
            let mut key = vs.clone();
            key.sort_unstable();
            (key, *m)
        })
        .collect();

    let mut keys: Vec<Vec<usize>> = by_key.keys().cloned().collect();
    keys.sort();

    let mut facets = Vec::with_capacity(keys.len());
    for key in keys {
        let mut adj = by_key.remove(&key).unwrap();
        adj.sort_unstable();
        if adj.len() > 2 {
            return Err(Error::Topology(format!(
                "facet {key:?} is shared by {} elements",
                adj.len()
            )));
        }
        let lower = adj[0];
        let other = adj.get(1).copied();

        let (normal, measure) = match dim {
            1 => {
                let x = vertices[key[0]][0];
                let c = geometry[lower].centroid[0];
                ([if x > c { 1.0 } else { -1.0 }, 0.0], 1.0)
            }
            2 => {
                let a = vertices[key[0]];
                let b = vertices[key[1]];
                let t = sub(b, a);
                let len = norm(t);
                let mut n = [t[1] / len, -t[0] / len];
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                if dot(n, sub(mid, geometry[lower].centroid)) < 0.0 {
                    n = [-n[0], -n[1]];
                }
                (n, len)
            }
            _ => unreachable!(),
        };

        let marker = if other.is_none() {
            Some(*marker_map.get(&key).unwrap_or(&0))
        } else {
            None
        };

        facets.push(Facet {
            vertices: key,
            normal,
            elements: (lower, other),
            measure,
            marker,
        });
    }
    Ok(facets)
}

/// `n` equal intervals on `[x0, x1]`; boundary markers 0 at `x0`, 1 at `x1`.
pub fn build_interval_mesh(n: usize, x0: f64, x1: f64) -> Result<SpatialMesh> {
    if n == 0 {
        return Err(Error::invalid("interval mesh needs n >= 1"));
    }
    if x0 >= x1 {
        return Err(Error::invalid(format!(
            "interval mesh needs x0 < x1, got [{x0}, {x1}]"
        )));
    }
    let vertices: Vec<Point> = (0..=n)
        .map(|i| [x0 + (x1 - x0) * i as f64 / n as f64, 0.0])
        .collect();
    let elements: Vec<Vec<usize>> = (0..n).map(|i| vec![i, i + 1]).collect();
    let markers = vec![(vec![0usize], 0), (vec![n], 1)];
    SpatialMesh::new(1, vertices, elements, &markers)
}

/// Unit square, `n x n` grid cells each split into two right triangles by
/// the chosen diagonal. Boundary markers: bottom 0, right 1, top 2, left 3.
pub fn build_uniform_square_mesh(n: usize, diagonal: Diagonal) -> Result<SpatialMesh> {
    if n == 0 {
        return Err(Error::invalid("square mesh needs n >= 1"));
    }
    let dir = vec![diagonal; n];
    structured_square(n, &dir)
}

/// Peterson band mesh on the unit square: `n` horizontal layers of height
/// `1/n`; the `n` columns are grouped into `m = max(1, round(n^sigma))`
/// vertical bands of near-equal width (integer multiples of `1/n`, so the
/// mesh is conforming); the cell diagonal direction alternates between
/// adjacent bands.
pub fn build_peterson_mesh(n: usize, sigma: f64) -> Result<SpatialMesh> {
    if n < 2 {
        return Err(Error::invalid("peterson mesh needs n >= 2"));
    }
    if !(0.0..=1.0).contains(&sigma) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "peterson sigma must lie in [0,1], got {sigma}"
        )));
    }
    let m = ((n as f64).powf(sigma).round() as usize).clamp(1, n);
    // Distribute n columns over m bands, widths as equal as possible.
    let base = n / m;
    let rem = n % m;
    let mut dir = Vec::with_capacity(n);
    for band in 0..m {
        let w = base + usize::from(band < rem);
        let d = if band % 2 == 0 { Diagonal::NE } else { Diagonal::NW };
        dir.extend(std::iter::repeat(d).take(w));
    }
    debug_assert_eq!(dir.len(), n);
    structured_square(n, &dir)
}

/// Number of vertical bands the Peterson generator uses for `(n, sigma)`.
pub fn peterson_band_count(n: usize, sigma: f64) -> usize {
    ((n as f64).powf(sigma).round() as usize).clamp(1, n)
}

fn structured_square(n: usize, column_diagonal: &[Diagonal]) -> Result<SpatialMesh> {
    let np = n + 1;
    let vid = |i: usize, j: usize| j * np + i;
    let vertices: Vec<Point> = (0..np)
        .flat_map(|j| (0..np).map(move |i| [i as f64 / n as f64, j as f64 / n as f64]))
        .collect();
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let bl = vid(i, j);
            let br = vid(i + 1, j);
            let tr = vid(i + 1, j + 1);
            let tl = vid(i, j + 1);
            match column_diagonal[i] {
                Diagonal::NE => {
                    elements.push(vec![bl, br, tr]);
                    elements.push(vec![bl, tr, tl]);
                }
                Diagonal::NW => {
                    elements.push(vec![bl, br, tl]);
                    elements.push(vec![br, tr, tl]);
                }
            }
        }
    }
    let mut markers = Vec::new();
    for i in 0..n {
        markers.push((vec![vid(i, 0), vid(i + 1, 0)], 0)); // bottom
        markers.push((vec![vid(i, n), vid(i + 1, n)], 2)); // top
        markers.push((vec![vid(n, i), vid(n, i + 1)], 1)); // right
        markers.push((vec![vid(0, i), vid(0, i + 1)], 3)); // left
    }
    SpatialMesh::new(2, vertices, elements, &markers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_minimal_case() {
        let mesh = build_interval_mesh(1, 0.0, 1.0).unwrap();
        assert_eq!(mesh.n_vertices(), 2);
        assert_eq!(mesh.n_elements(), 1);
        let boundary: Vec<_> = mesh.facets.iter().filter(|f| f.is_boundary()).collect();
        assert_eq!(boundary.len(), 2);
    }

    #[test]
    fn interval_uniform_spacing() {
        let mesh = build_interval_mesh(4, 0.0, 1.0).unwrap();
        assert_eq!(mesh.n_elements(), 4);
        let interior = mesh.facets.iter().filter(|f| !f.is_boundary()).count();
        assert_eq!(interior, 3);
        for g in &mesh.geometry {
            assert!((g.volume - 0.25).abs() < 1e-15);
        }
        let mesh = build_interval_mesh(10, -1.0, 1.0).unwrap();
        for g in &mesh.geometry {
            assert!((g.volume - 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn interval_rejects_bad_args() {
        assert!(build_interval_mesh(0, 0.0, 1.0).is_err());
        assert!(build_interval_mesh(3, 1.0, 1.0).is_err());
        assert!(build_interval_mesh(3, 2.0, 1.0).is_err());
    }

    #[test]
    fn interval_facet_orientation() {
        let mesh = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let interior: Vec<_> = mesh.facets.iter().filter(|f| !f.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        let f = interior[0];
        assert!((mesh.vertices[f.vertices[0]][0] - 0.5).abs() < 1e-15);
        // Out of lower-index element (the left one): +1.
        assert_eq!(f.elements.0, 0);
        assert_eq!(f.normal[0], 1.0);
        // Boundary facets point outward.
        for f in mesh.facets.iter().filter(|f| f.is_boundary()) {
            let x = mesh.vertices[f.vertices[0]][0];
            if x < 0.25 {
                assert_eq!(f.normal[0], -1.0);
            } else {
                assert_eq!(f.normal[0], 1.0);
            }
        }
    }

    #[test]
    fn square_minimal_case() {
        let mesh = build_uniform_square_mesh(1, Diagonal::NE).unwrap();
        assert_eq!(mesh.n_elements(), 2);
        let interior: Vec<_> = mesh.facets.iter().filter(|f| !f.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        assert!((norm(interior[0].normal) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_area_conservation() {
        let mesh = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        assert_eq!(mesh.n_elements(), 8);
        assert!((mesh.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_nw_element_diameters() {
        let mesh = build_uniform_square_mesh(4, Diagonal::NW).unwrap();
        let h = 2.0f64.sqrt() / 4.0;
        for g in &mesh.geometry {
            assert!((g.diameter - h).abs() < 1e-14);
        }
    }

    #[test]
    fn square_rejects_zero() {
        assert!(build_uniform_square_mesh(0, Diagonal::NE).is_err());
    }

    #[test]
    fn peterson_sigma_zero_is_single_band() {
        let mesh = build_peterson_mesh(4, 0.0).unwrap();
        let uniform = build_uniform_square_mesh(4, Diagonal::NE).unwrap();
        assert_eq!(mesh.elements, uniform.elements);
        assert_eq!(peterson_band_count(4, 0.0), 1);
    }

    #[test]
    fn peterson_sigma_one_alternates_every_column() {
        assert_eq!(peterson_band_count(4, 1.0), 4);
        let mesh = build_peterson_mesh(4, 1.0).unwrap();
        assert_eq!(mesh.n_elements(), 32);
        assert!((mesh.total_volume() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn peterson_band_count_and_area() {
        // Brute-force derived: 8^0.75 = 4.76 -> 5 bands; area sums to 1.
        assert_eq!(peterson_band_count(8, 0.75), 5);
        let mesh = build_peterson_mesh(8, 0.75).unwrap();
        assert_eq!(mesh.n_elements(), 2 * 8 * 8);
        assert!((mesh.total_volume() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn peterson_rejects_bad_sigma() {
        assert!(build_peterson_mesh(8, 1.5).is_err());
        assert!(build_peterson_mesh(8, -0.1).is_err());
        assert!(build_peterson_mesh(1, 0.5).is_err());
    }

    #[test]
    fn peterson_every_interior_facet_has_two_elements() {
        let mesh = build_peterson_mesh(4, 0.75).unwrap();
        for f in &mesh.facets {
            match f.elements.1 {
                Some(hi) => {
                    assert!(f.elements.0 < hi);
                    assert!(f.marker.is_none());
                }
                None => assert!(f.marker.is_some()),
            }
        }
        // Exhaustive adjacency recount from scratch.
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for elem in &mesh.elements {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let mut key = vec![elem[a], elem[b]];
                key.sort_unstable();
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        for f in &mesh.facets {
            let expect = if f.is_boundary() { 1 } else { 2 };
            assert_eq!(counts[&f.vertices], expect);
        }
    }

    #[test]
    fn interior_normals_match_adjacent_element_orientations() {
        let mesh = build_peterson_mesh(4, 0.75).unwrap();
        for f in mesh.facets.iter().filter(|f| !f.is_boundary()) {
            let lo = f.elements.0;
            let hi = f.elements.1.unwrap();
            let mid = if mesh.dim == 2 {
                let a = mesh.vertices[f.vertices[0]];
                let b = mesh.vertices[f.vertices[1]];
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            } else {
                mesh.vertices[f.vertices[0]]
            };
            assert!(dot(f.normal, sub(mid, mesh.geometry[lo].centroid)) > 0.0);
            assert!(dot(f.normal, sub(mid, mesh.geometry[hi].centroid)) < 0.0);
            assert!((norm(f.normal) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn facet_shared_by_three_elements_is_topology_error() {
        // Three triangles sharing the edge (0,1).
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 2.0], [1.0, 1.0]];
        let elements = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]];
        let err = SpatialMesh::new(2, vertices, elements, &[]);
        assert!(matches!(err, Err(Error::Topology(_))));
    }

    #[test]
    fn vertex_patch_interval_interior() {
        let mesh = build_interval_mesh(4, 0.0, 1.0).unwrap();
        let patch = mesh.vertex_patch(2);
        assert_eq!(patch.elements, vec![1, 2]);
        assert_eq!(patch.interior_facets.len(), 1);
        assert_eq!(patch.boundary_facets.len(), 0);
    }

    #[test]
    fn vertex_patch_interval_boundary() {
        let mesh = build_interval_mesh(4, 0.0, 1.0).unwrap();
        let patch = mesh.vertex_patch(0);
        assert_eq!(patch.elements, vec![0]);
        assert_eq!(patch.interior_facets.len(), 0);
        assert_eq!(patch.boundary_facets.len(), 1);
    }

    #[test]
    fn vertex_patch_square_center() {
        let mesh = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        // Center vertex of the 2x2 grid is (1,1) -> index 4.
        let patch = mesh.vertex_patch(4);
        assert_eq!(patch.elements.len(), 6);
        // Count by adjacency scan.
        let count = mesh
            .elements
            .iter()
            .filter(|elem| elem.contains(&4))
            .count();
        assert_eq!(patch.elements.len(), count);
        for &k in &patch.elements {
            assert!(mesh.elements[k].contains(&4));
        }
    }

    #[test]
    fn generated_meshes_cover_domain_measure() {
        let cases: Vec<(SpatialMesh, f64)> = vec![
            (build_interval_mesh(7, -2.0, 3.0).unwrap(), 5.0),
            (build_uniform_square_mesh(5, Diagonal::NW).unwrap(), 1.0),
            (build_peterson_mesh(9, 0.6).unwrap(), 1.0),
        ];
        for (mesh, measure) in cases {
            assert!((mesh.total_volume() - measure).abs() / measure < 1e-12);
            assert!(mesh.shape_regularity() <= 10.0);
        }
    }

    #[test]
    fn peterson_refinement_halves_h() {
        for sigma in [0.0, 0.5, 0.75, 1.0] {
            let coarse = build_peterson_mesh(8, sigma).unwrap();
            let fine = build_peterson_mesh(16, sigma).unwrap();
            assert!((coarse.h_max() / fine.h_max() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let mesh = build_peterson_mesh(4, 0.75).unwrap();
        let json = mesh.to_json();
        let back = SpatialMesh::from_json(&json).unwrap();
        assert_eq!(back.n_elements(), mesh.n_elements());
        assert_eq!(back.elements, mesh.elements);
        for (f, g) in mesh.facets.iter().zip(&back.facets) {
            assert_eq!(f.vertices, g.vertices);
            assert_eq!(f.marker, g.marker);
        }
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let mesh = build_peterson_mesh(3, 1.0).unwrap();
        for g in &mesh.geometry {
            let sum = g.bary_grads.iter().fold([0.0, 0.0], |acc, v| {
                [acc[0] + v[0], acc[1] + v[1]]
            });
            assert!(norm(sum) < 1e-12);
        }
    }
}
