//! Causal tent slab construction.
//!
//! An advancing front assigns a time value to every mesh vertex; the front
//! is causal when the per-element gradient of that piecewise linear field
//! stays within `1/hat_c`, where `hat_c` strictly exceeds the maximal wave
//! speed. A layer is pitched by raising a maximal element-disjoint set of
//! vertices that can advance by a fixed fraction of their flat-front
//! reference height, each to the largest causally admissible value (capped
//! at the final time); repeating until the front is flat at the final time
//! yields a [`TentSlab`].
//!
//! The selection rule (advance threshold with a positive-advance fallback,
//! candidates scanned by ascending front value with index tie-breaks) is
//! deterministic, so slabs are reproducible, and keeps layers dense enough
//! that the accumulated layer heights stay proportional to the slab
//! duration.

use crate::error::{Error, Result};
use crate::hypersys::SystemDef;
use crate::mesh::{dot, norm, SpatialMesh, VertexPatch};

const CAUSALITY_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;
const PROGRESS_TOL: f64 = 1e-14;
const SNAP_REL_TOL: f64 = 4e-13;
const MAX_LAYERS: usize = 1_000_000;

/// An advancing front: one time value per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Front {
    pub phi: Vec<f64>,
}

impl Front {
    pub fn flat(n_vertices: usize, t: f64) -> Front {
        Front {
            phi: vec![t; n_vertices],
        }
    }

    pub fn min(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One pitched tent: the vertex patch with bottom/top front values and the
/// height function delta on the patch vertices.
#[derive(Debug, Clone)]
pub struct Tent {
    pub vertex: usize,
    pub patch: VertexPatch,
    /// Per patch-vertex values, parallel to `patch.vertices`.
    pub phi_bot: Vec<f64>,
    pub phi_top: Vec<f64>,
    pub delta: Vec<f64>,
    pub pole_height: f64,
    /// Largest element diameter in the patch.
    pub h_v: f64,
}

impl Tent {
    /// Value of a per-patch-vertex array at a mesh vertex.
    pub fn patch_value<'a>(&self, values: &'a [f64], mesh_vertex: usize) -> Option<&'a f64> {
        self.patch
            .vertices
            .iter()
            .position(|&v| v == mesh_vertex)
            .map(|i| &values[i])
    }

    /// Per-element constant gradient of phi_bot on a patch element.
    pub fn grad_phi_bot(&self, mesh: &SpatialMesh, elem: usize) -> [f64; 2] {
        self.patch_gradient(mesh, elem, &self.phi_bot)
    }

    /// Per-element constant gradient of delta on a patch element.
    pub fn grad_delta(&self, mesh: &SpatialMesh, elem: usize) -> [f64; 2] {
        self.patch_gradient(mesh, elem, &self.delta)
    }

    fn patch_gradient(&self, mesh: &SpatialMesh, elem: usize, values: &[f64]) -> [f64; 2] {
        mesh.element_gradient(elem, |v| {
            let idx = self
                .patch
                .vertices
                .iter()
                .position(|&u| u == v)
                .expect("element vertex must belong to the patch");
            values[idx]
        })
    }

    /// Linear interpolation of delta at a point of a patch element.
    pub fn delta_at(&self, mesh: &SpatialMesh, elem: usize, x: [f64; 2]) -> f64 {
        let grad = self.grad_delta(mesh, elem);
        let v0 = mesh.elements[elem][0];
        let p0 = mesh.vertices[v0];
        let d0 = *self
            .patch_value(&self.delta, v0)
            .expect("element vertex must belong to the patch");
        d0 + grad[0] * (x[0] - p0[0]) + grad[1] * (x[1] - p0[1])
    }
}

/// A full slab of layers filling `Ω x (0, T)`.
#[derive(Debug, Clone)]
pub struct TentSlab {
    pub fronts: Vec<Front>,
    pub layers: Vec<Vec<Tent>>,
    pub hat_c: f64,
    pub t_final: f64,
}

/// Largest admissible new time value for vertex `v` over front `front`:
/// per patch element the gradient constraint is a quadratic in the pole
/// value, and the minimum upper root over elements is taken, capped at
/// `t_final`.
pub fn max_pole_height(
    mesh: &SpatialMesh,
    front: &Front,
    v: usize,
    hat_c: f64,
    t_final: f64,
) -> Result<f64> {
    let inv_c2 = 1.0 / (hat_c * hat_c);
    let mut t_star = f64::INFINITY;
    for &k in &mesh.vertex_elements[v] {
        let geo = &mesh.geometry[k];
        // grad phi|_K = a_K + t g_v with the contribution of v removed.
        let mut a_k = [0.0, 0.0];
        let mut g_v = [0.0, 0.0];
        for (loc, &u) in mesh.elements[k].iter().enumerate() {
            let g = geo.bary_grads[loc];
            if u == v {
                g_v = g;
            } else {
                a_k[0] += front.phi[u] * g[0];
                a_k[1] += front.phi[u] * g[1];
            }
        }
        // ||g_v||^2 t^2 + 2 (a_K . g_v) t + ||a_K||^2 - 1/hat_c^2 <= 0
        let qa = dot(g_v, g_v);
        let qb = dot(a_k, g_v);
        let qc = dot(a_k, a_k) - inv_c2;
        let disc = qb * qb - qa * qc;
        // A tangent constraint (admissible set shrunk to one point) can
        // round to a slightly negative discriminant.
        let scale = qb * qb + qa * (dot(a_k, a_k) + inv_c2) + 1e-300;
        if qa == 0.0 || disc < -1e-12 * scale {
            return Err(Error::Causality(format!(
                "no admissible pole height for vertex {v} on element {k}"
            )));
        }
        let root = (-qb + disc.max(0.0).sqrt()) / qa;
        t_star = t_star.min(root);
    }
    if t_star < front.phi[v] - 1e-9 * (1.0 + front.phi[v].abs()) {
        return Err(Error::Causality(format!(
            "front already violates causality at vertex {v}"
        )));
    }
    // Roots within roundoff of the final time snap to it exactly; without
    // the snap, deficits of a few ulps leave unreachable micro-advances.
    if t_star >= t_final - SNAP_REL_TOL * (1.0 + t_final.abs()) {
        return Ok(t_final);
    }
    Ok(t_star.max(front.phi[v]))
}

/// Fraction of the flat-front reference advance a vertex must achieve to
/// enter the fill pass of a layer.
const FILL_FRACTION: f64 = 0.3;

/// Pitch one layer greedily, in two passes over vertices strictly below
/// the final time that can advance at all (a vertex at a tangent
/// constraint is skipped; selecting it would only block the neighbors
/// whose progress eventually releases it):
///
/// 1. local minima of the front among their neighbors (ties within
///    `1e-12`), scanned in ascending vertex index — these are the ripest
///    pitch locations;
/// 2. a fill pass over vertices whose advance reaches `FILL_FRACTION` of
///    their flat-front reference height (or of the remaining time),
///    scanned by ascending front value with index tie-breaks — this keeps
///    layers dense so the layer count stays proportional to `T / h`.
///
/// Both passes extend the same maximal element-disjoint set; if neither
/// selects anything, any positive advance qualifies (guaranteeing
/// progress). Since selected patches are element-disjoint, the admissible
/// heights computed against the entry front remain valid for every
/// selected vertex.
pub fn pitch_layer(
    mesh: &SpatialMesh,
    front: &Front,
    hat_c: f64,
    t_final: f64,
) -> Result<(Vec<Tent>, Front)> {
    // (vertex, admissible top)
    let mut movable: Vec<(usize, f64)> = Vec::new();
    for v in 0..mesh.n_vertices() {
        if front.phi[v] >= t_final {
            continue;
        }
        let t_top = max_pole_height(mesh, front, v, hat_c, t_final)?;
        if t_top - front.phi[v] <= PROGRESS_TOL {
            continue;
        }
        movable.push((v, t_top));
    }

    let mut used = vec![false; mesh.n_elements()];
    let mut selected: Vec<(usize, f64)> = Vec::new();
    fn try_select(
        mesh: &SpatialMesh,
        v: usize,
        t_top: f64,
        used: &mut [bool],
        selected: &mut Vec<(usize, f64)>,
    ) {
        for &k in &mesh.vertex_elements[v] {
            if used[k] {
                return;
            }
        }
        for &k in &mesh.vertex_elements[v] {
            used[k] = true;
        }
        selected.push((v, t_top));
    }

    // Pass 1: local minima in index order (movable is index-sorted).
    for &(v, t_top) in &movable {
        let is_min = mesh.vertex_neighbors[v]
            .iter()
            .all(|&u| front.phi[v] <= front.phi[u] + TIE_TOL);
        if is_min {
            try_select(mesh, v, t_top, &mut used, &mut selected);
        }
    }

    // Pass 2: fill with vertices that advance a useful fraction of their
    // reference height, lowest front value first.
    let mut fill: Vec<(usize, f64)> = movable
        .iter()
        .filter(|&&(v, t_top)| {
            let mut reference = f64::INFINITY;
            for &k in &mesh.vertex_elements[v] {
                let geo = &mesh.geometry[k];
                let loc = mesh.elements[k]
                    .iter()
                    .position(|&u| u == v)
                    .expect("vertex in its own element");
                reference = reference.min(1.0 / (hat_c * norm(geo.bary_grads[loc])));
            }
            let threshold = FILL_FRACTION * reference.min(t_final - front.phi[v]);
            t_top - front.phi[v] + TIE_TOL >= threshold
        })
        .copied()
        .collect();
    fill.sort_by(|a, b| {
        front.phi[a.0]
            .partial_cmp(&front.phi[b.0])
            .expect("front values are finite")
            .then(a.0.cmp(&b.0))
    });
    for &(v, t_top) in &fill {
        try_select(mesh, v, t_top, &mut used, &mut selected);
    }

    // Fallback: any admissible advance at all.
    if selected.is_empty() {
        for &(v, t_top) in &movable {
            try_select(mesh, v, t_top, &mut used, &mut selected);
        }
    }

    let mut new_front = front.clone();
    let mut layer = Vec::with_capacity(selected.len());
    for (v, t_top) in selected {
        new_front.phi[v] = t_top;
        let patch = mesh.vertex_patch(v);
        let phi_bot: Vec<f64> = patch.vertices.iter().map(|&u| front.phi[u]).collect();
        let phi_top: Vec<f64> = patch
            .vertices
            .iter()
            .map(|&u| if u == v { t_top } else { front.phi[u] })
            .collect();
        let delta: Vec<f64> = phi_top
            .iter()
            .zip(&phi_bot)
            .map(|(t, b)| t - b)
            .collect();
        let h_v = patch
            .elements
            .iter()
            .map(|&k| mesh.geometry[k].diameter)
            .fold(0.0, f64::max);
        layer.push(Tent {
            vertex: v,
            patch,
            phi_bot,
            phi_top,
            delta,
            pole_height: t_top - front.phi[v],
            h_v,
        });
    }
    if layer.is_empty() {
        return Err(Error::PitchStall(format!(
            "no vertex can advance above {PROGRESS_TOL} (front min {})",
            front.min()
        )));
    }
    Ok((layer, new_front))
}

/// Build the full slab for a system: the causality speed is
/// `hat_c = c / gamma` with `gamma` in (0,1), layers are pitched until the
/// front is flat at `t_final`.
pub fn build_tent_slab(
    mesh: &SpatialMesh,
    sys: &SystemDef,
    t_final: f64,
    gamma: f64,
) -> Result<TentSlab> {
    if !(t_final > 0.0) {
        return Err(Error::invalid(format!("final time must be > 0, got {t_final}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0,1), got {gamma}")));
    }
    let hat_c = sys.wave_speed / gamma;
    build_tent_slab_with_speed(mesh, hat_c, t_final)
}

/// Slab construction with an explicit causality speed bound.
pub fn build_tent_slab_with_speed(
    mesh: &SpatialMesh,
    hat_c: f64,
    t_final: f64,
) -> Result<TentSlab> {
    let mut fronts = vec![Front::flat(mesh.n_vertices(), 0.0)];
    let mut layers = Vec::new();
    while fronts.last().unwrap().min() < t_final {
        if layers.len() >= MAX_LAYERS {
            return Err(Error::PitchStall(format!(
                "layer cap {MAX_LAYERS} exceeded before reaching t = {t_final}"
            )));
        }
        let (layer, next) = pitch_layer(mesh, fronts.last().unwrap(), hat_c, t_final)?;
        layers.push(layer);
        fronts.push(next);
    }
    // The cap at t_final makes the last front exactly flat.
    debug_assert!(fronts.last().unwrap().phi.iter().all(|&t| t == t_final));
    Ok(TentSlab {
        fronts,
        layers,
        hat_c,
        t_final,
    })
}

impl TentSlab {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_tents(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// Worst per-element front gradient excess over `1/hat_c` (negative
    /// when every front is strictly causal).
    pub fn causality_excess(&self, mesh: &SpatialMesh) -> f64 {
        let bound = 1.0 / self.hat_c;
        let mut worst = f64::NEG_INFINITY;
        for front in &self.fronts {
            for k in 0..mesh.n_elements() {
                let g = mesh.element_gradient(k, |v| front.phi[v]);
                worst = worst.max(norm(g) - bound);
            }
        }
        worst
    }

    /// Worst causality excess beyond the per-element roundoff allowance:
    /// poles are pitched exactly to the bound, so evaluating the gradient
    /// (products of front values with barycentric gradients of size `1/h`)
    /// carries an epsilon-scaled error that grows under refinement.
    pub fn causality_excess_adjusted(&self, mesh: &SpatialMesh) -> f64 {
        let bound = 1.0 / self.hat_c;
        let mut worst = f64::NEG_INFINITY;
        for front in &self.fronts {
            for k in 0..mesh.n_elements() {
                let g = mesh.element_gradient(k, |v| front.phi[v]);
                let mut scale = 0.0;
                let mut max_grad: f64 = 0.0;
                for (loc, &u) in mesh.elements[k].iter().enumerate() {
                    let gn = norm(mesh.geometry[k].bary_grads[loc]);
                    scale += front.phi[u].abs() * gn;
                    max_grad = max_grad.max(gn);
                }
                let allowance = 32.0 * f64::EPSILON * scale
                    + SNAP_REL_TOL * (1.0 + self.t_final.abs()) * max_grad;
                worst = worst.max(norm(g) - bound - allowance);
            }
        }
        worst
    }

    /// Layer heights `h_i = max_{v in V_i} h_v`.
    pub fn layer_heights(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| l.iter().map(|t| t.h_v).fold(0.0, f64::max))
            .collect()
    }

    /// Structural validation: monotone fronts, flat first/last front,
    /// causal fronts, per-layer element disjointness, positive poles.
    pub fn validate(&self, mesh: &SpatialMesh) -> Result<()> {
        if self.fronts.is_empty() || self.fronts[0].phi.iter().any(|&t| t != 0.0) {
            return Err(Error::Causality("first front is not flat zero".into()));
        }
        let last = self.fronts.last().unwrap();
        if last.phi.iter().any(|&t| (t - self.t_final).abs() > 1e-14) {
            return Err(Error::Causality("final front is not flat".into()));
        }
        if self.causality_excess_adjusted(mesh) > CAUSALITY_TOL {
            return Err(Error::Causality("a front violates the causality bound".into()));
        }
        // Fronts never move backward; minima are nondecreasing and each
        // layer raises at least one vertex near the current minimum (a
        // blocked minimum vertex is always blocked by a raised tie), so the
        // minimum strictly increases within a bounded number of layers.
        let mut prev_min = -f64::INFINITY;
        for (i, pair) in self.fronts.windows(2).enumerate() {
            let mut advanced = false;
            for (a, b) in pair[0].phi.iter().zip(&pair[1].phi) {
                if b < a {
                    return Err(Error::Causality(format!(
                        "front {} moves backward in time",
                        i + 1
                    )));
                }
                advanced |= b > a;
            }
            if !advanced {
                return Err(Error::PitchStall(format!("layer {} made no progress", i + 1)));
            }
            let mn = pair[1].min();
            if mn < prev_min {
                return Err(Error::Causality("front minima are not monotone".into()));
            }
            prev_min = mn;
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let mut seen = vec![false; mesh.n_elements()];
            for tent in layer {
                if tent.pole_height <= 0.0 {
                    return Err(Error::Causality(format!(
                        "tent at vertex {} in layer {} has nonpositive pole",
                        tent.vertex, i
                    )));
                }
                for &k in &tent.patch.elements {
                    if seen[k] {
                        return Err(Error::Topology(format!(
                            "element {k} appears in two tents of layer {i}"
                        )));
                    }
                    seen[k] = true;
                }
            }
        }
        Ok(())
    }
}

/// A logical schedule replaying one slab several times; fronts of
/// repetition `k` are offset by `k * t_final` without re-meshing.
#[derive(Debug, Clone, Copy)]
pub struct SlabSchedule<'a> {
    pub slab: &'a TentSlab,
    pub n_slabs: usize,
}

impl<'a> SlabSchedule<'a> {
    pub fn total_time(&self) -> f64 {
        self.slab.t_final * self.n_slabs as f64
    }

    pub fn total_tents(&self) -> usize {
        self.slab.n_tents() * self.n_slabs
    }
}

/// Tile a slab `n_slabs` times in time.
pub fn tile_slab(slab: &TentSlab, n_slabs: usize) -> Result<SlabSchedule<'_>> {
    if n_slabs == 0 {
        return Err(Error::invalid("n_slabs must be >= 1"));
    }
    let last = slab.fronts.last().unwrap();
    if last.phi.iter().any(|&t| (t - slab.t_final).abs() > 1e-14) {
        return Err(Error::invalid("slab final front must be flat to tile"));
    }
    Ok(SlabSchedule { slab, n_slabs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersys::advection_system;
    use crate::mesh::{build_interval_mesh, build_uniform_square_mesh, Diagonal};

    #[test]
    fn pole_height_uniform_interval_flat_front() {
        let mesh = build_interval_mesh(4, 0.0, 1.0).unwrap();
        let front = Front::flat(mesh.n_vertices(), 0.0);
        // h = 0.25, hat_c = 1: interior vertex may rise to h / hat_c.
        let t = max_pole_height(&mesh, &front, 2, 1.0, 10.0).unwrap();
        assert!((t - 0.25).abs() < 1e-14);
    }

    #[test]
    fn pole_height_with_uneven_neighbors() {
        // Neighbor values (0, ., 0.1), h = 0.25, hat_c = 1: left element
        // allows 0.25, right allows 0.35; closed form must match a scan.
        let mesh = build_interval_mesh(2, 0.0, 0.5).unwrap();
        let mut front = Front::flat(3, 0.0);
        front.phi[2] = 0.1;
        let t = max_pole_height(&mesh, &front, 1, 1.0, 10.0).unwrap();
        assert!((t - 0.25).abs() < 1e-12);

        // Brute-force scan of the admissibility region.
        let mut best = 0.0;
        let mut t_try = 0.0;
        while t_try <= 0.5 {
            let ok = mesh.vertex_elements[1].iter().all(|&k| {
                let g = mesh.element_gradient(k, |v| if v == 1 { t_try } else { front.phi[v] });
                norm(g) <= 1.0 + 1e-12
            });
            if ok {
                best = t_try;
            }
            t_try += 1e-5;
        }
        assert!((best - t).abs() < 2e-5);
    }

    #[test]
    fn pole_height_2d_matches_scan() {
        let mesh = build_uniform_square_mesh(1, Diagonal::NE).unwrap();
        let front = Front::flat(mesh.n_vertices(), 0.0);
        let hat_c = 2.0;
        for v in 0..mesh.n_vertices() {
            let t = max_pole_height(&mesh, &front, v, hat_c, 10.0).unwrap();
            // Flat front: bound is 1/(hat_c * max ||g_v||) over elements.
            let mut expect = f64::INFINITY;
            for &k in &mesh.vertex_elements[v] {
                let geo = &mesh.geometry[k];
                let loc = mesh.elements[k].iter().position(|&u| u == v).unwrap();
                expect = expect.min(0.5 / norm(geo.bary_grads[loc]));
            }
            assert!((t - expect).abs() < 1e-13, "vertex {v}: {t} vs {expect}");

            let mut best = 0.0;
            let mut t_try = 0.0;
            while t_try <= 1.0 {
                let ok = mesh.vertex_elements[v].iter().all(|&k| {
                    let g =
                        mesh.element_gradient(k, |u| if u == v { t_try } else { front.phi[u] });
                    norm(g) <= 1.0 / hat_c + 1e-12
                });
                if ok {
                    best = t_try;
                }
                t_try += 1e-5;
            }
            assert!((best - t).abs() < 2e-5);
        }
    }

    #[test]
    fn greedy_layers_on_two_intervals() {
        // n = 2, flat front, hat_c = 1, T = 1: boundary vertices pitch
        // first (vertex 1 shares elements with both), to height 0.5.
        let mesh = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let front = Front::flat(3, 0.0);
        let (layer, next) = pitch_layer(&mesh, &front, 1.0, 1.0).unwrap();
        let pitched: Vec<usize> = layer.iter().map(|t| t.vertex).collect();
        assert_eq!(pitched, vec![0, 2]);
        assert!((next.phi[0] - 0.5).abs() < 1e-14);
        assert!((next.phi[2] - 0.5).abs() < 1e-14);
        assert_eq!(next.phi[1], 0.0);

        // Second layer: vertex 1 is the unique local minimum.
        let (layer2, next2) = pitch_layer(&mesh, &next, 1.0, 1.0).unwrap();
        let pitched2: Vec<usize> = layer2.iter().map(|t| t.vertex).collect();
        assert_eq!(pitched2, vec![1]);
        assert!((next2.phi[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn slab_on_two_intervals_has_three_layers() {
        // hat_c = 2 (gamma = 0.5 for unit speed), T = 0.5: layer 1 raises
        // the boundary vertices by 0.25, layer 2 takes the middle vertex to
        // T, layer 3 flattens the rest at T.
        let mesh = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let sys = advection_system(&mesh, [1.0, 0.0], |_| 0.0);
        let slab = build_tent_slab(&mesh, &sys, 0.5, 0.5).unwrap();
        assert_eq!(slab.n_layers(), 3);
        assert!((slab.fronts[1].phi[0] - 0.25).abs() < 1e-14);
        assert_eq!(slab.fronts[1].phi[1], 0.0);
        assert!((slab.fronts[2].phi[1] - 0.5).abs() < 1e-14);
        slab.validate(&mesh).unwrap();
    }

    #[test]
    fn slab_final_front_is_exactly_flat() {
        let mesh = build_uniform_square_mesh(3, Diagonal::NE).unwrap();
        let sys = advection_system(&mesh, [0.0, 1.0], |_| 0.0);
        let slab = build_tent_slab(&mesh, &sys, 0.37, 0.9).unwrap();
        let last = slab.fronts.last().unwrap();
        assert!(last.phi.iter().all(|&t| t == 0.37));
        slab.validate(&mesh).unwrap();
    }

    #[test]
    fn slab_rejects_bad_parameters() {
        let mesh = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let sys = advection_system(&mesh, [1.0, 0.0], |_| 0.0);
        assert!(build_tent_slab(&mesh, &sys, 0.0, 0.5).is_err());
        assert!(build_tent_slab(&mesh, &sys, 1.0, 1.0).is_err());
        assert!(build_tent_slab(&mesh, &sys, 1.0, 0.0).is_err());
    }

    #[test]
    fn every_tent_front_pair_is_causal() {
        let mesh = build_uniform_square_mesh(4, Diagonal::NE).unwrap();
        let hat_c = 1.0 / 0.9;
        let slab = build_tent_slab_with_speed(&mesh, hat_c, 0.25).unwrap();
        slab.validate(&mesh).unwrap();
        let bound = 1.0 / hat_c + 1e-12;
        for layer in &slab.layers {
            for tent in layer {
                for &k in &tent.patch.elements {
                    for tau in [0.0, 0.5, 1.0] {
                        let g = mesh.element_gradient(k, |v| {
                            let bot = tent.patch_value(&tent.phi_bot, v).unwrap();
                            let top = tent.patch_value(&tent.phi_top, v).unwrap();
                            (1.0 - tau) * bot + tau * top
                        });
                        assert!(norm(g) <= bound);
                    }
                }
            }
        }
    }

    #[test]
    fn front_minimum_is_monotone_and_reaches_final_time() {
        let mesh = build_uniform_square_mesh(3, Diagonal::NW).unwrap();
        let slab = build_tent_slab_with_speed(&mesh, 2.0, 0.3).unwrap();
        let mut prev = -1.0;
        for front in &slab.fronts {
            let mn = front.min();
            assert!(mn >= prev);
            prev = mn;
        }
        assert_eq!(prev, 0.3);
        // The minimum strictly increases within a bounded number of layers.
        let minima: Vec<f64> = slab.fronts.iter().map(|f| f.min()).collect();
        for w in minima.windows(mesh.n_vertices()) {
            assert!(w.last().unwrap() > w.first().unwrap() || *w.first().unwrap() >= 0.3);
        }
    }

    #[test]
    fn tile_slab_schedule() {
        let mesh = build_interval_mesh(4, 0.0, 1.0).unwrap();
        let sys = advection_system(&mesh, [1.0, 0.0], |_| 0.0);
        let slab = build_tent_slab(&mesh, &sys, 0.5, 0.9).unwrap();
        let sched = tile_slab(&slab, 1).unwrap();
        assert_eq!(sched.total_tents(), slab.n_tents());
        let sched = tile_slab(&slab, 3).unwrap();
        assert!((sched.total_time() - 1.5).abs() < 1e-15);
        assert_eq!(sched.total_tents(), 3 * slab.n_tents());
        assert!(tile_slab(&slab, 0).is_err());
    }

    #[test]
    fn delta_is_a_hat_function() {
        let mesh = build_uniform_square_mesh(3, Diagonal::NE).unwrap();
        let slab = build_tent_slab_with_speed(&mesh, 1.5, 0.2).unwrap();
        for layer in &slab.layers {
            for tent in layer {
                for (i, &v) in tent.patch.vertices.iter().enumerate() {
                    if v == tent.vertex {
                        assert!(tent.delta[i] > 0.0);
                    } else {
                        assert_eq!(tent.delta[i], 0.0);
                    }
                }
            }
        }
    }
}
