//! Shared oracles and helpers for integration tests. Everything here is
//! implemented independently of the assembly/propagation paths it checks.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mtp::basis::{element_quadrature, facet_quadrature, DgSpace};
use mtp::hypersys::SystemDef;
use mtp::mesh::{Point, SpatialMesh};
use mtp::pitch::{build_tent_slab, Tent, TentSlab};
use mtp::tentops::PatchSpace;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Build a slab and return up to `max_n` tents sampled evenly across it.
pub fn sample_tents(
    mesh: &SpatialMesh,
    sys: &SystemDef,
    t_final: f64,
    gamma: f64,
    max_n: usize,
) -> (TentSlab, Vec<(usize, usize)>) {
    let slab = build_tent_slab(mesh, sys, t_final, gamma).expect("slab builds");
    let mut ids: Vec<(usize, usize)> = Vec::new();
    for (li, layer) in slab.layers.iter().enumerate() {
        for ti in 0..layer.len() {
            ids.push((li, ti));
        }
    }
    let stride = (ids.len() / max_n.max(1)).max(1);
    let sampled = ids.into_iter().step_by(stride).take(max_n).collect();
    (slab, sampled)
}

/// Independent evaluation of the dissipation form from its facet-sum
/// representation: interior facets contribute twice the stabilization
/// quadratic form of the jump, boundary facets the boundary operator
/// quadratic form, all weighted by the tent height.
pub fn facet_d_form(ps: &PatchSpace, sys: &SystemDef, w: &DVector<f64>) -> f64 {
    let mesh = ps.mesh;
    let tent = ps.tent;
    let nb = ps.nb();
    let l_dim = ps.n_comp;
    let degree = 2 * ps.space.p + 2;
    let eval = |elem_local: usize, basis_vals: &DMatrix<f64>, q: usize| -> DVector<f64> {
        DVector::from_fn(l_dim, |c, _| {
            (0..nb)
                .map(|a| w[ps.dof(elem_local, a, c)] * basis_vals[(q, a)])
                .sum()
        })
    };
    let mut total = 0.0;
    for &fi in &tent.patch.interior_facets {
        let f = &mesh.facets[fi];
        let lo = ps.local_elem(f.elements.0).unwrap();
        let hi = ps.local_elem(f.elements.1.unwrap()).unwrap();
        let (pts, wts) = facet_quadrature(mesh, fi, degree);
        let vals_lo = ps.space.elements[f.elements.0].basis.values(&pts);
        let vals_hi = ps.space.elements[f.elements.1.unwrap()].basis.values(&pts);
        let s = sys.interior_s(f.normal);
        for (q, &x) in pts.iter().enumerate() {
            let delta = tent.delta_at(mesh, f.elements.0, x);
            let jump = eval(lo, &vals_lo, q) - eval(hi, &vals_hi, q);
            total += 2.0 * wts[q] * delta * (&s * &jump).dot(&jump);
        }
    }
    for &fi in &tent.patch.boundary_facets {
        let f = &mesh.facets[fi];
        let lo = ps.local_elem(f.elements.0).unwrap();
        let (pts, wts) = facet_quadrature(mesh, fi, degree);
        let vals = ps.space.elements[f.elements.0].basis.values(&pts);
        let b = sys.boundary_b(f.marker.unwrap_or(0), f.normal);
        for (q, &x) in pts.iter().enumerate() {
            let delta = tent.delta_at(mesh, f.elements.0, x);
            let wv = eval(lo, &vals, q);
            total += wts[q] * delta * (&b * &wv).dot(&wv);
        }
    }
    total
}

/// Independent quadrature of the front-trace norm squared
/// `∫ [g(w) - f(w) grad phi] . w` over the patch, with `phi` the bottom
/// (`tau = 0`) or top (`tau = 1`) tent front.
pub fn trace_norm_sq_quadrature(
    ps: &PatchSpace,
    sys: &SystemDef,
    tau: f64,
    w: &DVector<f64>,
) -> f64 {
    let mesh = ps.mesh;
    let tent = ps.tent;
    let nb = ps.nb();
    let l_dim = ps.n_comp;
    let mut total = 0.0;
    for (e, &ke) in tent.patch.elements.iter().enumerate() {
        let gb = tent.grad_phi_bot(mesh, ke);
        let gd = tent.grad_delta(mesh, ke);
        let grad = [gb[0] + tau * gd[0], gb[1] + tau * gd[1]];
        let coeffs = sys.coeffs(ke);
        let mut blk = coeffs.g.clone();
        for j in 0..mesh.dim {
            blk -= grad[j] * &coeffs.l[j];
        }
        let (pts, wts) = element_quadrature(mesh, ke, 2 * ps.space.p + 2);
        let vals = ps.space.elements[ke].basis.values(&pts);
        for q in 0..pts.len() {
            let wv = DVector::from_fn(l_dim, |c, _| {
                (0..nb)
                    .map(|a| w[ps.dof(e, a, c)] * vals[(q, a)])
                    .sum()
            });
            total += wts[q] * (&blk * &wv).dot(&wv);
        }
    }
    total
}

/// Coefficients of a globally continuous polynomial field on the patch
/// (componentwise polynomials in x of total degree <= p).
pub fn project_global_poly(
    ps: &PatchSpace,
    poly: impl Fn(Point) -> DVector<f64>,
) -> DVector<f64> {
    let mesh = ps.mesh;
    let nb = ps.nb();
    let l_dim = ps.n_comp;
    let mut out = DVector::zeros(ps.dim());
    for (e, &ke) in ps.tent.patch.elements.iter().enumerate() {
        let (pts, wts) = element_quadrature(mesh, ke, 2 * ps.space.p + 2);
        let vals = ps.space.elements[ke].basis.values(&pts);
        for (q, &x) in pts.iter().enumerate() {
            let f = poly(x);
            for a in 0..nb {
                for c in 0..l_dim {
                    out[ps.dof(e, a, c)] += wts[q] * vals[(q, a)] * f[c];
                }
            }
        }
    }
    out
}

/// Moment vector of `-div(delta f(w))` against all test functions, for a
/// continuous polynomial field `w` with gradient `grad_w` (columns are
/// coordinate directions). This is the right side of the divergence
/// identity that `A w` must reproduce on interior tents.
pub fn divergence_moments(
    ps: &PatchSpace,
    sys: &SystemDef,
    poly: impl Fn(Point) -> DVector<f64>,
    poly_grad: impl Fn(Point) -> Vec<DVector<f64>>,
) -> DVector<f64> {
    let mesh = ps.mesh;
    let tent = ps.tent;
    let nb = ps.nb();
    let l_dim = ps.n_comp;
    let mut out = DVector::zeros(ps.dim());
    for (e, &ke) in tent.patch.elements.iter().enumerate() {
        let coeffs = sys.coeffs(ke);
        let gd = tent.grad_delta(mesh, ke);
        let (pts, wts) = element_quadrature(mesh, ke, 2 * ps.space.p + 2);
        let vals = ps.space.elements[ke].basis.values(&pts);
        for (q, &x) in pts.iter().enumerate() {
            let wv = poly(x);
            let gw = poly_grad(x);
            let delta = tent.delta_at(mesh, ke, x);
            // div(delta f(w)) = sum_j (d_j delta) L^j w + delta L^j d_j w
            let mut div = DVector::zeros(l_dim);
            for j in 0..mesh.dim {
                div += gd[j] * (&coeffs.l[j] * &wv);
                div += delta * (&coeffs.l[j] * &gw[j]);
            }
            for a in 0..nb {
                for c in 0..l_dim {
                    out[ps.dof(e, a, c)] -= wts[q] * vals[(q, a)] * div[c];
                }
            }
        }
    }
    out
}

/// Coefficients of the constant field with the given component values.
pub fn constant_field(ps: &PatchSpace, space: &DgSpace, values: &DVector<f64>) -> DVector<f64> {
    let mesh = ps.mesh;
    let nb = ps.nb();
    let l_dim = ps.n_comp;
    let mut out = DVector::zeros(ps.dim());
    for (e, &ke) in ps.tent.patch.elements.iter().enumerate() {
        let (pts, wts) = element_quadrature(mesh, ke, 2 * space.p + 2);
        let vals = space.elements[ke].basis.values(&pts);
        for q in 0..pts.len() {
            for a in 0..nb {
                for c in 0..l_dim {
                    out[ps.dof(e, a, c)] += wts[q] * vals[(q, a)] * values[c];
                }
            }
        }
    }
    out
}
