//! Small dense helpers shared by assembly, steppers and diagnostics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

/// Eigenvalue range of a (numerically) symmetric matrix.
pub fn sym_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &l in eig.eigenvalues.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    (lo, hi)
}

/// Spectral (2-)norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Largest eigenvalue of the generalized symmetric problem `A x = λ B x`
/// with `B` symmetric positive definite: whiten with the Cholesky factor of
/// `B` and solve the ordinary symmetric problem.
pub fn gen_sym_eig_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(0.5 * (b + b.transpose()))?;
    Some(whitened_eig(a, &chol).1)
}

/// Eigenvalue range of `A x = λ B x` with `B` SPD.
pub fn gen_sym_eig_range(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<(f64, f64)> {
    let chol = Cholesky::new(0.5 * (b + b.transpose()))?;
    Some(whitened_eig(a, &chol))
}

fn whitened_eig(a: &DMatrix<f64>, chol_b: &Cholesky<f64, Dyn>) -> (f64, f64) {
    // C = L^{-1} A L^{-T}, symmetric when A is.
    let l = chol_b.l();
    let mut c = 0.5 * (a + a.transpose());
    // L^{-1} C
    l.solve_lower_triangular_mut(&mut c);
    // (L^{-1} C) L^{-T} = (L^{-1} (L^{-1} C)^T)^T
    let mut ct = c.transpose();
    l.solve_lower_triangular_mut(&mut ct);
    sym_eig_range(&ct)
}

/// Largest |λ| of `A x = λ B x` with `B` SPD.
pub fn gen_sym_eig_max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let (lo, hi) = gen_sym_eig_range(a, b)?;
    Some(lo.abs().max(hi.abs()))
}

/// Orthonormal basis for the near-kernel of a symmetric PSD matrix, using a
/// relative eigenvalue threshold, together with the complement basis.
/// Returns `(kernel, complement, complement_eigenvalues)`.
pub fn psd_kernel_split(
    m: &DMatrix<f64>,
    rel_tol: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    let max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let thresh = rel_tol * max.max(1e-300);
    let mut ker_idx = Vec::new();
    let mut comp_idx = Vec::new();
    let mut comp_vals = Vec::new();
    for i in 0..n {
        let l = eig.eigenvalues[i];
        if l.abs() <= thresh {
            ker_idx.push(i);
        } else {
            comp_idx.push(i);
            comp_vals.push(l);
        }
    }
    let mut ker = DMatrix::zeros(n, ker_idx.len());
    for (j, &i) in ker_idx.iter().enumerate() {
        ker.set_column(j, &eig.eigenvectors.column(i));
    }
    let mut comp = DMatrix::zeros(n, comp_idx.len());
    for (j, &i) in comp_idx.iter().enumerate() {
        comp.set_column(j, &eig.eigenvectors.column(i));
    }
    (ker, comp, DVector::from_vec(comp_vals))
}

/// Deterministic 64-bit generator for sampling test vectors; splitmix64.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }

    pub fn unit_vector(&mut self, n: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(n, |_, _| self.next_f64());
            let norm = v.norm();
            if norm > 1e-3 {
                return v / norm;
            }
        }
    }
}
