//! Quadrature rules on reference simplices and facets.
//!
//! Rules are exact for polynomials up to a requested degree. The segment
//! rule is Gauss-Legendre (nodes from the symmetric eigenproblem of the
//! Jacobi matrix); the triangle rule is a collapsed tensor product on the
//! unit square, which stays exact because the collapse Jacobian `(1-b)` is
//! itself polynomial.

use nalgebra::{DMatrix, SymmetricEigen};

/// Points and weights on a reference domain.
///
/// Reference domains: segment `[0,1]` (points stored as `[t, 0]`) and the
/// unit triangle `{(u,v): u,v >= 0, u+v <= 1}`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0,1]`, exact for degree `2n-1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Jacobi matrix of the Legendre recurrence on [-1,1]:
    // off-diagonal b_k = k / sqrt(4k^2 - 1).
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes_weights: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (x, 2.0 * v0 * v0)
        })
        .collect();
    nodes_weights.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Map [-1,1] -> [0,1].
    let nodes = nodes_weights.iter().map(|(x, _)| 0.5 * (x + 1.0)).collect();
    let weights = nodes_weights.iter().map(|(_, w)| 0.5 * w).collect();
    (nodes, weights)
}

/// Rule on the reference segment `[0,1]`, exact for polynomials of the
/// given degree.
pub fn segment_rule(degree: usize) -> QuadratureRule {
    let n = degree / 2 + 1;
    let (nodes, weights) = gauss_legendre(n);
    QuadratureRule {
        points: nodes.iter().map(|&t| [t, 0.0]).collect(),
        weights,
    }
}

/// Rule on the reference triangle with vertices (0,0), (1,0), (0,1),
/// exact for bivariate polynomials of the given total degree.
///
/// Built by collapsing a Gauss-Legendre tensor rule through
/// `u = a(1-b), v = b`; the extra factor `(1-b)` raises the degree in `b`
/// by one, so the `b` rule uses one more point where needed.
pub fn triangle_rule(degree: usize) -> QuadratureRule {
    let na = degree / 2 + 1;
    let nb = (degree + 1) / 2 + 1;
    let (xa, wa) = gauss_legendre(na);
    let (xb, wb) = gauss_legendre(nb);
    let mut points = Vec::with_capacity(na * nb);
    let mut weights = Vec::with_capacity(na * nb);
    for (b, wbj) in xb.iter().zip(&wb) {
        for (a, wai) in xa.iter().zip(&wa) {
            points.push([a * (1.0 - b), *b]);
            weights.push(wai * wbj * (1.0 - b));
        }
    }
    QuadratureRule { points, weights }
}

/// Reference rule for a `dim`-simplex (segment or triangle).
pub fn simplex_rule(dim: usize, degree: usize) -> QuadratureRule {
    match dim {
        1 => segment_rule(degree),
        2 => triangle_rule(degree),
        _ => panic!("unsupported dimension {dim}"),
    }
}
