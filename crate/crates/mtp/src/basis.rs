//! Per-element orthonormal DG bases and their quadrature tabulations.
//!
//! Each element carries a basis of `P_p` that is L2-orthonormal with
//! respect to the Lebesgue measure of the physical element, built by
//! Cholesky orthonormalization of centered, scaled monomials (run twice for
//! orthogonality down to roundoff). The plain mass matrix is then the
//! identity and the L2 projector is coefficient truncation.
//!
//! [`DgSpace`] tabulates bases and gradients at volume and facet quadrature
//! points once per (mesh, degree); tent assembly reuses the tables.

use nalgebra::{Cholesky, DMatrix};

use crate::mesh::{Point, SpatialMesh};
use crate::quadrature::{segment_rule, simplex_rule};

/// Dimension of `P_p` in `dim` variables.
pub fn poly_space_dim(dim: usize, p: usize) -> usize {
    match dim {
        1 => p + 1,
        2 => (p + 1) * (p + 2) / 2,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Monomial exponent multi-indices with |alpha| <= p, graded order.
fn monomial_powers(dim: usize, p: usize) -> Vec<[u32; 2]> {
    let mut powers = Vec::new();
    for total in 0..=p as u32 {
        match dim {
            1 => powers.push([total, 0]),
            2 => {
                for i in (0..=total).rev() {
                    powers.push([i, total - i]);
                }
            }
            _ => unreachable!(),
        }
    }
    powers
}

/// Orthonormal polynomial basis on one physical element.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    powers: Vec<[u32; 2]>,
    center: Point,
    inv_scale: f64,
    /// Row i holds the monomial coefficients of basis function i.
    coeff: DMatrix<f64>,
}

impl ElementBasis {
    /// Build the basis for element `elem` of `mesh` at degree `p`.
    pub fn build(mesh: &SpatialMesh, elem: usize, p: usize) -> ElementBasis {
        let dim = mesh.dim;
        let geo = &mesh.geometry[elem];
        let powers = monomial_powers(dim, p);
        let nb = powers.len();
        let mut basis = ElementBasis {
            powers,
            center: geo.centroid,
            inv_scale: 2.0 / geo.diameter,
            coeff: DMatrix::identity(nb, nb),
        };
        let (pts, wts) = element_quadrature(mesh, elem, 2 * p);
        // Two Cholesky orthonormalization passes.
        for _ in 0..2 {
            let vals = basis.values(&pts);
            let mut gram = DMatrix::zeros(nb, nb);
            for (q, &w) in wts.iter().enumerate() {
                for a in 0..nb {
                    for b in a..nb {
                        gram[(a, b)] += w * vals[(q, a)] * vals[(q, b)];
                    }
                }
            }
            for a in 0..nb {
                for b in 0..a {
                    gram[(a, b)] = gram[(b, a)];
                }
            }
            let chol = Cholesky::new(gram).expect("element Gram matrix must be SPD");
            // psi_new = L^{-1} psi_old  =>  C_new = L^{-1} C_old.
            let mut c = basis.coeff.clone();
            chol.l().solve_lower_triangular_mut(&mut c);
            basis.coeff = c;
        }
        basis
    }

    pub fn nb(&self) -> usize {
        self.coeff.nrows()
    }

    fn monomials_at(&self, x: Point) -> Vec<f64> {
        let u = (x[0] - self.center[0]) * self.inv_scale;
        let v = (x[1] - self.center[1]) * self.inv_scale;
        self.powers
            .iter()
            .map(|&[a, b]| u.powi(a as i32) * v.powi(b as i32))
            .collect()
    }

    fn monomial_grads_at(&self, x: Point) -> Vec<Point> {
        let u = (x[0] - self.center[0]) * self.inv_scale;
        let v = (x[1] - self.center[1]) * self.inv_scale;
        self.powers
            .iter()
            .map(|&[a, b]| {
                let du = if a == 0 {
                    0.0
                } else {
                    a as f64 * u.powi(a as i32 - 1) * v.powi(b as i32) * self.inv_scale
                };
                let dv = if b == 0 {
                    0.0
                } else {
                    b as f64 * u.powi(a as i32) * v.powi(b as i32 - 1) * self.inv_scale
                };
                [du, dv]
            })
            .collect()
    }

    /// Basis values at the given points, one row per point.
    pub fn values(&self, points: &[Point]) -> DMatrix<f64> {
        let nb = self.nb();
        let mut out = DMatrix::zeros(points.len(), nb);
        for (q, &x) in points.iter().enumerate() {
            let mono = self.monomials_at(x);
            for i in 0..nb {
                let mut acc = 0.0;
                for j in 0..nb {
                    acc += self.coeff[(i, j)] * mono[j];
                }
                out[(q, i)] = acc;
            }
        }
        out
    }

    /// Basis gradients at the given points, per coordinate direction.
    pub fn gradients(&self, points: &[Point]) -> [DMatrix<f64>; 2] {
        let nb = self.nb();
        let mut gx = DMatrix::zeros(points.len(), nb);
        let mut gy = DMatrix::zeros(points.len(), nb);
        for (q, &x) in points.iter().enumerate() {
            let grads = self.monomial_grads_at(x);
            for i in 0..nb {
                let mut ax = 0.0;
                let mut ay = 0.0;
                for j in 0..nb {
                    ax += self.coeff[(i, j)] * grads[j][0];
                    ay += self.coeff[(i, j)] * grads[j][1];
                }
                gx[(q, i)] = ax;
                gy[(q, i)] = ay;
            }
        }
        [gx, gy]
    }
}

/// Physical quadrature points and weights on an element, exact for the
/// requested polynomial degree.
pub fn element_quadrature(mesh: &SpatialMesh, elem: usize, degree: usize) -> (Vec<Point>, Vec<f64>) {
    let rule = simplex_rule(mesh.dim, degree);
    let verts: Vec<Point> = mesh.elements[elem]
        .iter()
        .map(|&v| mesh.vertices[v])
        .collect();
    match mesh.dim {
        1 => {
            let (a, b) = (verts[0][0], verts[1][0]);
            let len = b - a;
            let pts = rule.points.iter().map(|p| [a + p[0] * len, 0.0]).collect();
            let wts = rule.weights.iter().map(|w| w * len).collect();
            (pts, wts)
        }
        2 => {
            let jac = 2.0 * mesh.geometry[elem].volume;
            let pts = rule
                .points
                .iter()
                .map(|p| {
                    [
                        verts[0][0] + p[0] * (verts[1][0] - verts[0][0])
                            + p[1] * (verts[2][0] - verts[0][0]),
                        verts[0][1] + p[0] * (verts[1][1] - verts[0][1])
                            + p[1] * (verts[2][1] - verts[0][1]),
                    ]
                })
                .collect();
            let wts = rule.weights.iter().map(|w| w * jac).collect();
            (pts, wts)
        }
        _ => unreachable!(),
    }
}

/// Physical quadrature on a facet (a point in 1D, a segment in 2D).
pub fn facet_quadrature(
    mesh: &SpatialMesh,
    facet: usize,
    degree: usize,
) -> (Vec<Point>, Vec<f64>) {
    let f = &mesh.facets[facet];
    match mesh.dim {
        1 => (vec![mesh.vertices[f.vertices[0]]], vec![1.0]),
        2 => {
            let a = mesh.vertices[f.vertices[0]];
            let b = mesh.vertices[f.vertices[1]];
            let rule = segment_rule(degree);
            let pts = rule
                .points
                .iter()
                .map(|p| [a[0] + p[0] * (b[0] - a[0]), a[1] + p[0] * (b[1] - a[1])])
                .collect();
            let wts = rule.weights.iter().map(|w| w * f.measure).collect();
            (pts, wts)
        }
        _ => unreachable!(),
    }
}

/// Per-element tabulations at volume quadrature points.
#[derive(Debug, Clone)]
pub struct ElementTables {
    pub basis: ElementBasis,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// nq x nb basis values.
    pub values: DMatrix<f64>,
    /// nq x nb basis gradients per direction.
    pub grads: [DMatrix<f64>; 2],
}

/// Per-facet quadrature with both adjacent bases tabulated.
#[derive(Debug, Clone)]
pub struct FacetTables {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Basis values of the lower-index adjacent element.
    pub values_lo: DMatrix<f64>,
    /// Basis values of the higher-index adjacent element (interior facets).
    pub values_hi: Option<DMatrix<f64>>,
}

/// The broken polynomial space of one mesh at one degree, fully tabulated
/// for tent assembly. Quadrature degree is `2p + 2` throughout, which is
/// exact for every integrand the mapped-tent forms produce (constant
/// coefficients, a linear height weight, and two factors of degree p).
#[derive(Debug, Clone)]
pub struct DgSpace {
    pub p: usize,
    pub nb: usize,
    pub elements: Vec<ElementTables>,
    pub facets: Vec<FacetTables>,
}

impl DgSpace {
    pub fn build(mesh: &SpatialMesh, p: usize) -> DgSpace {
        let degree = 2 * p + 2;
        let elements: Vec<ElementTables> = (0..mesh.n_elements())
            .map(|k| {
                let basis = ElementBasis::build(mesh, k, p);
                let (points, weights) = element_quadrature(mesh, k, degree);
                let values = basis.values(&points);
                let grads = basis.gradients(&points);
                ElementTables {
                    basis,
                    points,
                    weights,
                    values,
                    grads,
                }
            })
            .collect();
        let facets = (0..mesh.facets.len())
            .map(|fi| {
                let f = &mesh.facets[fi];
                let (points, weights) = facet_quadrature(mesh, fi, degree);
                let values_lo = elements[f.elements.0].basis.values(&points);
                let values_hi = f.elements.1.map(|hi| elements[hi].basis.values(&points));
                FacetTables {
                    points,
                    weights,
                    values_lo,
                    values_hi,
                }
            })
            .collect();
        DgSpace {
            p,
            nb: poly_space_dim(mesh.dim, p),
            elements,
            facets,
        }
    }
}
