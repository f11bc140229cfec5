//! Per-tent DG operator assembly for the mapped equation.
//!
//! On the cylinder over a vertex patch, the mapped system reads
//! `d/dt [ M(t) u ] = A u + l` with `M(t) = M0 - t M1`. With the
//! per-element orthonormal basis, `M0` and `M1` are block diagonal: one
//! `L x L` coefficient block per (element, scalar basis function), namely
//! `G_K - sum_j (d_j phi_bot) L^j_K` and `sum_j (d_j delta) L^j_K`. The
//! stiffness operator `A` carries the volume transport term and the upwind
//! numerical flux (interior: central flux plus stabilization jump penalty;
//! boundary: half-sum flux), all weighted by the tent height function
//! `delta`. Inhomogeneous time-independent boundary data enters as a load.
//!
//! Degrees of freedom are ordered component-fastest:
//! `idx = (local_element * nb + basis) * L + component`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::DgSpace;
use crate::error::{Error, Result};
use crate::hypersys::{matrix_d, SystemDef};
use crate::mesh::SpatialMesh;
use crate::pitch::Tent;

/// The DG space restricted to a tent's vertex patch.
#[derive(Clone, Copy)]
pub struct PatchSpace<'a> {
    pub mesh: &'a SpatialMesh,
    pub space: &'a DgSpace,
    pub tent: &'a Tent,
    /// Number of unknowns per point (L).
    pub n_comp: usize,
}

/// View of the global DG tables restricted to one tent.
pub fn build_patch_space<'a>(
    mesh: &'a SpatialMesh,
    space: &'a DgSpace,
    tent: &'a Tent,
    n_comp: usize,
) -> PatchSpace<'a> {
    PatchSpace {
        mesh,
        space,
        tent,
        n_comp,
    }
}

impl<'a> PatchSpace<'a> {
    pub fn nb(&self) -> usize {
        self.space.nb
    }

    pub fn n_elements(&self) -> usize {
        self.tent.patch.elements.len()
    }

    /// Total number of degrees of freedom.
    pub fn dim(&self) -> usize {
        self.n_elements() * self.nb() * self.n_comp
    }

    /// Local index of a mesh element within the patch.
    pub fn local_elem(&self, mesh_elem: usize) -> Option<usize> {
        self.tent.patch.elements.iter().position(|&k| k == mesh_elem)
    }

    #[inline]
    pub fn dof(&self, local_elem: usize, basis: usize, comp: usize) -> usize {
        (local_elem * self.nb() + basis) * self.n_comp + comp
    }
}

/// Precomputed per-facet system matrices and boundary data values at the
/// facet quadrature points of a [`DgSpace`]. Built once per
/// (mesh, system, degree) and shared by all tents.
pub struct SystemTables {
    /// Directional flux matrix at the facet normal, from the lower element.
    pub d_nf: Vec<DMatrix<f64>>,
    /// Stabilization at interior facets.
    pub s_nf: Vec<Option<DMatrix<f64>>>,
    /// `(D + B)/2` at boundary facets.
    pub half_sum: Vec<Option<DMatrix<f64>>>,
    /// `(D - B)/2 g(x_q)` at boundary facets, one row per quadrature point.
    pub flux_data: Vec<Option<DMatrix<f64>>>,
}

impl SystemTables {
    pub fn build(mesh: &SpatialMesh, space: &DgSpace, sys: &SystemDef) -> SystemTables {
        let nf = mesh.facets.len();
        let mut d_nf = Vec::with_capacity(nf);
        let mut s_nf = Vec::with_capacity(nf);
        let mut half_sum = Vec::with_capacity(nf);
        let mut flux_data = Vec::with_capacity(nf);
        for (fi, f) in mesh.facets.iter().enumerate() {
            let d = matrix_d(sys, f.elements.0, f.normal);
            if f.is_boundary() {
                let marker = f.marker.unwrap_or(0);
                let b = sys.boundary_b(marker, f.normal);
                let hs = 0.5 * (&d + &b);
                let hd = 0.5 * (&d - &b);
                let pts = &space.facets[fi].points;
                let mut fd = DMatrix::zeros(pts.len(), sys.n_comp);
                for (q, &x) in pts.iter().enumerate() {
                    let val = &hd * sys.boundary_data(marker, x);
                    for l in 0..sys.n_comp {
                        fd[(q, l)] = val[l];
                    }
                }
                s_nf.push(None);
                half_sum.push(Some(hs));
                flux_data.push(Some(fd));
            } else {
                s_nf.push(Some(sys.interior_s(f.normal)));
                half_sum.push(None);
                flux_data.push(None);
            }
            d_nf.push(d);
        }
        SystemTables {
            d_nf,
            s_nf,
            half_sum,
            flux_data,
        }
    }
}

/// Dense operators of one tent.
pub struct TentOperators {
    pub n_comp: usize,
    pub nb: usize,
    pub p: usize,
    /// Mesh element ids of the patch (assembly order).
    pub elements: Vec<usize>,
    /// Per-element `L x L` block of `M0`.
    pub m0_blocks: Vec<DMatrix<f64>>,
    /// Per-element `L x L` block of `M1`.
    pub m1_blocks: Vec<DMatrix<f64>>,
    /// Dense stiffness matrix of the DG form.
    pub a: DMatrix<f64>,
    /// Boundary-data load vector.
    pub load: DVector<f64>,
    pub h_v: f64,
}

/// Block-diagonal Cholesky solver for `M(tau)`.
pub struct MassSolver {
    chols: Vec<Cholesky<f64, Dyn>>,
    nb: usize,
    n_comp: usize,
}

impl MassSolver {
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        self.solve_in_place(&mut out);
        out
    }

    pub fn solve_in_place(&self, v: &mut DVector<f64>) {
        let l = self.n_comp;
        let mut chunk = DVector::zeros(l);
        for (e, chol) in self.chols.iter().enumerate() {
            for a in 0..self.nb {
                let base = (e * self.nb + a) * l;
                for k in 0..l {
                    chunk[k] = v[base + k];
                }
                chol.solve_mut(&mut chunk);
                for k in 0..l {
                    v[base + k] = chunk[k];
                }
            }
        }
    }
}

impl TentOperators {
    pub fn dim(&self) -> usize {
        self.elements.len() * self.nb * self.n_comp
    }

    fn block_diag_dense(&self, blocks: impl Fn(usize) -> DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let l = self.n_comp;
        let mut out = DMatrix::zeros(n, n);
        for e in 0..self.elements.len() {
            let blk = blocks(e);
            for a in 0..self.nb {
                let base = (e * self.nb + a) * l;
                for i in 0..l {
                    for j in 0..l {
                        out[(base + i, base + j)] = blk[(i, j)];
                    }
                }
            }
        }
        out
    }

    pub fn m0_dense(&self) -> DMatrix<f64> {
        self.block_diag_dense(|e| self.m0_blocks[e].clone())
    }

    pub fn m1_dense(&self) -> DMatrix<f64> {
        self.block_diag_dense(|e| self.m1_blocks[e].clone())
    }

    /// Dense `M(tau) = M0 - tau M1`.
    pub fn m_tau_dense(&self, tau: f64) -> DMatrix<f64> {
        self.block_diag_dense(|e| &self.m0_blocks[e] - tau * &self.m1_blocks[e])
    }

    /// Apply `M(tau)` blockwise.
    pub fn m_apply(&self, tau: f64, v: &DVector<f64>) -> DVector<f64> {
        let l = self.n_comp;
        let mut out = DVector::zeros(v.len());
        let mut chunk = DVector::zeros(l);
        for e in 0..self.elements.len() {
            let blk = &self.m0_blocks[e] - tau * &self.m1_blocks[e];
            for a in 0..self.nb {
                let base = (e * self.nb + a) * l;
                for k in 0..l {
                    chunk[k] = v[base + k];
                }
                let res = &blk * &chunk;
                for k in 0..l {
                    out[base + k] = res[k];
                }
            }
        }
        out
    }

    /// Apply `M1` blockwise.
    pub fn m1_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let l = self.n_comp;
        let mut out = DVector::zeros(v.len());
        let mut chunk = DVector::zeros(l);
        for e in 0..self.elements.len() {
            for a in 0..self.nb {
                let base = (e * self.nb + a) * l;
                for k in 0..l {
                    chunk[k] = v[base + k];
                }
                let res = &self.m1_blocks[e] * &chunk;
                for k in 0..l {
                    out[base + k] = res[k];
                }
            }
        }
        out
    }

    /// Blockwise Cholesky factorization of `M(tau)`; fails when the tent is
    /// not causal enough for `M(tau)` to stay positive definite.
    pub fn m_solver(&self, tau: f64) -> Result<MassSolver> {
        let chols = self
            .m0_blocks
            .iter()
            .zip(&self.m1_blocks)
            .map(|(m0, m1)| {
                Cholesky::new(m0 - tau * m1).ok_or_else(|| {
                    Error::Singular(format!("mass operator M({tau}) is not positive definite"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MassSolver {
            chols,
            nb: self.nb,
            n_comp: self.n_comp,
        })
    }

    /// The symmetric dissipation matrix `-(A + A^t + M1)`, positive
    /// semidefinite for admissible systems.
    pub fn d_psd_dense(&self) -> DMatrix<f64> {
        let mut d = -(&self.a + self.a.transpose());
        let m1 = self.m1_dense();
        d -= m1;
        d
    }
}

/// `M(tau) = M0 - tau M1` as a dense matrix.
pub fn m_of_tau(ops: &TentOperators, tau: f64) -> DMatrix<f64> {
    ops.m_tau_dense(tau)
}

/// `sqrt(v^t M(tau) v)`; a clearly negative quadratic form signals a
/// causality violation and is reported as an error.
pub fn norm_m(ops: &TentOperators, tau: f64, v: &DVector<f64>) -> Result<f64> {
    let q = ops.m_apply(tau, v).dot(v);
    if q < -1e-12 {
        return Err(Error::Causality(format!(
            "M({tau}) quadratic form is negative: {q}"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

/// The nonnegative dissipation form `-w^t (A + A^t + M1) w`.
pub fn d_form(ops: &TentOperators, w: &DVector<f64>) -> f64 {
    let aw = &ops.a * w;
    let m1w = ops.m1_apply(w);
    -(2.0 * aw.dot(w) + m1w.dot(w))
}

/// Assemble all operators of one tent.
pub fn assemble_tent_operators(
    ps: &PatchSpace,
    sys: &SystemDef,
    tables: &SystemTables,
) -> TentOperators {
    let mesh = ps.mesh;
    let tent = ps.tent;
    let space = ps.space;
    let l_dim = ps.n_comp;
    let nb = ps.nb();
    let n = ps.dim();

    let mut m0_blocks = Vec::with_capacity(ps.n_elements());
    let mut m1_blocks = Vec::with_capacity(ps.n_elements());
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut load = DVector::<f64>::zeros(n);

    // Volume contributions.
    for (e, &ke) in tent.patch.elements.iter().enumerate() {
        let coeffs = sys.coeffs(ke);
        let gpb = tent.grad_phi_bot(mesh, ke);
        let gd = tent.grad_delta(mesh, ke);

        let mut m0 = coeffs.g.clone();
        let mut m1 = DMatrix::zeros(l_dim, l_dim);
        for j in 0..mesh.dim {
            m0 -= gpb[j] * &coeffs.l[j];
            m1 += gd[j] * &coeffs.l[j];
        }
        m0_blocks.push(m0);
        m1_blocks.push(m1);

        // sum_j (delta L^j w, d_j v)_K
        let et = &space.elements[ke];
        let nq = et.points.len();
        let mut delta_w: Vec<f64> = Vec::with_capacity(nq);
        for (q, &x) in et.points.iter().enumerate() {
            delta_w.push(et.weights[q] * tent.delta_at(mesh, ke, x));
        }
        for j in 0..mesh.dim {
            let lj = &coeffs.l[j];
            if lj.amax() == 0.0 {
                continue;
            }
            // V[a, b] = sum_q w_q delta_q psi_a(q) d_j psi_b(q)
            let mut v = DMatrix::<f64>::zeros(nb, nb);
            for q in 0..nq {
                let dw = delta_w[q];
                if dw == 0.0 {
                    continue;
                }
                for bi in 0..nb {
                    let gb = et.grads[j][(q, bi)] * dw;
                    if gb == 0.0 {
                        continue;
                    }
                    for ai in 0..nb {
                        v[(ai, bi)] += et.values[(q, ai)] * gb;
                    }
                }
            }
            for ai in 0..nb {
                for bi in 0..nb {
                    let vab = v[(ai, bi)];
                    if vab == 0.0 {
                        continue;
                    }
                    for li in 0..l_dim {
                        for ki in 0..l_dim {
                            let c = lj[(li, ki)];
                            if c != 0.0 {
                                a[(ps.dof(e, bi, li), ps.dof(e, ai, ki))] += vab * c;
                            }
                        }
                    }
                }
            }
        }
    }

    // Interior facet fluxes. Both adjacent elements belong to the patch.
    for &fi in &tent.patch.interior_facets {
        let f = &mesh.facets[fi];
        let lo = f.elements.0;
        let hi = f.elements.1.expect("interior facet");
        let e_lo = ps.local_elem(lo).expect("facet element in patch");
        let e_hi = ps.local_elem(hi).expect("facet element in patch");
        let ft = &space.facets[fi];
        let vals_lo = &ft.values_lo;
        let vals_hi = ft.values_hi.as_ref().expect("interior facet tabulation");

        let d = &tables.d_nf[fi];
        let s = tables.s_nf[fi].as_ref().expect("interior stabilization");
        // Component matrices multiplying the trial side, per (test, trial)
        // element pair; assembled as A -= Q ⊗ C.
        let c_ll = 0.5 * d + s;
        let c_lh = 0.5 * d - s;
        let c_hh = -0.5 * d + s;
        let c_hl = -0.5 * d - s;

        let nq = ft.points.len();
        let mut dw: Vec<f64> = Vec::with_capacity(nq);
        for (q, &x) in ft.points.iter().enumerate() {
            dw.push(ft.weights[q] * tent.delta_at(mesh, lo, x));
        }

        let pairs = [
            (e_lo, vals_lo, e_lo, vals_lo, &c_ll),
            (e_lo, vals_lo, e_hi, vals_hi, &c_lh),
            (e_hi, vals_hi, e_hi, vals_hi, &c_hh),
            (e_hi, vals_hi, e_lo, vals_lo, &c_hl),
        ];
        for (e_test, v_test, e_trial, v_trial, comp) in pairs {
            add_facet_block(
                &mut a, ps, e_test, v_test, e_trial, v_trial, comp, &dw, -1.0,
            );
        }
    }

    // Boundary facet fluxes and load.
    for &fi in &tent.patch.boundary_facets {
        let f = &mesh.facets[fi];
        let lo = f.elements.0;
        let e_lo = ps.local_elem(lo).expect("facet element in patch");
        let ft = &space.facets[fi];
        let nq = ft.points.len();
        let mut dw: Vec<f64> = Vec::with_capacity(nq);
        for (q, &x) in ft.points.iter().enumerate() {
            dw.push(ft.weights[q] * tent.delta_at(mesh, lo, x));
        }
        let half_sum = tables.half_sum[fi].as_ref().expect("boundary operator");
        add_facet_block(
            &mut a, ps, e_lo, &ft.values_lo, e_lo, &ft.values_lo, half_sum, &dw, -1.0,
        );
        let flux_g = tables.flux_data[fi].as_ref().expect("boundary data");
        for q in 0..nq {
            if dw[q] == 0.0 {
                continue;
            }
            for bi in 0..ps.nb() {
                let w = dw[q] * ft.values_lo[(q, bi)];
                for li in 0..l_dim {
                    load[ps.dof(e_lo, bi, li)] -= w * flux_g[(q, li)];
                }
            }
        }
    }

    TentOperators {
        n_comp: l_dim,
        nb,
        p: space.p,
        elements: tent.patch.elements.clone(),
        m0_blocks,
        m1_blocks,
        a,
        load,
        h_v: tent.h_v,
    }
}

/// Accumulate `sign * Q ⊗ C` into the stiffness matrix, where
/// `Q[b, a] = sum_q dw_q v_test[q, b] v_trial[q, a]`.
#[allow(clippy::too_many_arguments)]
fn add_facet_block(
    a: &mut DMatrix<f64>,
    ps: &PatchSpace,
    e_test: usize,
    v_test: &DMatrix<f64>,
    e_trial: usize,
    v_trial: &DMatrix<f64>,
    comp: &DMatrix<f64>,
    dw: &[f64],
    sign: f64,
) {
    let nb = ps.nb();
    let l_dim = ps.n_comp;
    let mut q_mat = DMatrix::<f64>::zeros(nb, nb);
    for (q, &w) in dw.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for bi in 0..nb {
            let tb = v_test[(q, bi)] * w;
            if tb == 0.0 {
                continue;
            }
            for ai in 0..nb {
                q_mat[(bi, ai)] += tb * v_trial[(q, ai)];
            }
        }
    }
    for bi in 0..nb {
        for ai in 0..nb {
            let qv = q_mat[(bi, ai)] * sign;
            if qv == 0.0 {
                continue;
            }
            for li in 0..l_dim {
                for ki in 0..l_dim {
                    let c = comp[(li, ki)];
                    if c != 0.0 {
                        a[(ps.dof(e_test, bi, li), ps.dof(e_trial, ai, ki))] += qv * c;
                    }
                }
            }
        }
    }
}

/// Dense `M0` of one tent (assembles only the mass blocks).
pub fn assemble_m0(ps: &PatchSpace, sys: &SystemDef) -> DMatrix<f64> {
    mass_dense(ps, sys, |tent, mesh, ke| tent.grad_phi_bot(mesh, ke), true)
}

/// Dense `M1` of one tent.
pub fn assemble_m1(ps: &PatchSpace, sys: &SystemDef) -> DMatrix<f64> {
    mass_dense(ps, sys, |tent, mesh, ke| tent.grad_delta(mesh, ke), false)
}

fn mass_dense(
    ps: &PatchSpace,
    sys: &SystemDef,
    grad: impl Fn(&Tent, &SpatialMesh, usize) -> [f64; 2],
    with_g: bool,
) -> DMatrix<f64> {
    let l_dim = ps.n_comp;
    let n = ps.dim();
    let mut out = DMatrix::zeros(n, n);
    for (e, &ke) in ps.tent.patch.elements.iter().enumerate() {
        let coeffs = sys.coeffs(ke);
        let gv = grad(ps.tent, ps.mesh, ke);
        let mut blk = if with_g {
            coeffs.g.clone()
        } else {
            DMatrix::zeros(l_dim, l_dim)
        };
        for j in 0..ps.mesh.dim {
            if with_g {
                blk -= gv[j] * &coeffs.l[j];
            } else {
                blk += gv[j] * &coeffs.l[j];
            }
        }
        for a in 0..ps.nb() {
            for i in 0..l_dim {
                for j in 0..l_dim {
                    out[(ps.dof(e, a, i), ps.dof(e, a, j))] = blk[(i, j)];
                }
            }
        }
    }
    out
}

/// Dense stiffness matrix alone.
pub fn assemble_a(ps: &PatchSpace, sys: &SystemDef, tables: &SystemTables) -> DMatrix<f64> {
    assemble_tent_operators(ps, sys, tables).a
}

/// Boundary-data load vector alone.
pub fn assemble_load(ps: &PatchSpace, sys: &SystemDef, tables: &SystemTables) -> DVector<f64> {
    assemble_tent_operators(ps, sys, tables).load
}
