//! Symmetric linear hyperbolic system definitions and numeric checks of
//! their structural assumptions.
//!
//! A [`SystemDef`] holds the per-element coefficient matrices (the symmetric
//! positive definite temporal coefficient and the symmetric spatial flux
//! matrices), the discrete boundary operator `B`, the interior stabilization
//! `S`, the exact boundary operator where known, time-independent boundary
//! data, and the maximal wave speed. Built-ins cover constant-field
//! advection and the acoustic wave system with Dirichlet / Robin / Neumann
//! boundary conditions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, SplitMix64};
use crate::mesh::{Point, SpatialMesh};

/// Matrix-valued function of a boundary marker and unit outward normal.
pub type BoundaryMatrixFn = Box<dyn Fn(i32, Point) -> DMatrix<f64> + Send + Sync>;
/// Matrix-valued function of a facet normal.
pub type FacetMatrixFn = Box<dyn Fn(Point) -> DMatrix<f64> + Send + Sync>;
/// Boundary data as a function of marker and position.
pub type BoundaryDataFn = Box<dyn Fn(i32, Point) -> DVector<f64> + Send + Sync>;

/// Per-element coefficient matrices.
#[derive(Debug, Clone)]
pub struct ElementCoeffs {
    /// Temporal coefficient, symmetric positive definite, L x L.
    pub g: DMatrix<f64>,
    /// Spatial flux matrices, one symmetric L x L matrix per dimension.
    pub l: Vec<DMatrix<f64>>,
}

enum Coeffs {
    Uniform(ElementCoeffs),
    PerElement(Vec<ElementCoeffs>),
}

pub struct SystemDef {
    pub n_dim: usize,
    pub n_comp: usize,
    coeffs: Coeffs,
    boundary_b: BoundaryMatrixFn,
    exact_boundary: Option<BoundaryMatrixFn>,
    interior_s: FacetMatrixFn,
    boundary_data: BoundaryDataFn,
    /// Maximal wave speed; analytic for built-ins.
    pub wave_speed: f64,
    analytic_speed: bool,
    pub name: String,
}

impl SystemDef {
    /// Assemble a system from explicit parts. The wave speed is estimated by
    /// directional eigenvalue sampling.
    pub fn from_parts(
        n_dim: usize,
        n_comp: usize,
        coeffs_per_element: Vec<ElementCoeffs>,
        boundary_b: BoundaryMatrixFn,
        interior_s: FacetMatrixFn,
        boundary_data: BoundaryDataFn,
    ) -> Result<Self> {
        let mut sys = SystemDef {
            n_dim,
            n_comp,
            coeffs: Coeffs::PerElement(coeffs_per_element),
            boundary_b,
            exact_boundary: None,
            interior_s,
            boundary_data,
            wave_speed: 0.0,
            analytic_speed: false,
            name: "custom".to_string(),
        };
        sys.validate()?;
        sys.wave_speed = sampled_wave_speed(&sys, 360);
        if sys.wave_speed <= 0.0 {
            return Err(Error::invalid("system has zero wave speed"));
        }
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let check = |c: &ElementCoeffs, k: usize| -> Result<()> {
            if c.g.nrows() != self.n_comp || c.l.len() != self.n_dim {
                return Err(Error::invalid(format!("coefficient shape mismatch at {k}")));
            }
            let (gmin, _) = linalg::sym_eig_range(&c.g);
            if gmin <= 0.0 {
                return Err(Error::invalid(format!(
                    "temporal coefficient not positive definite on element {k}"
                )));
            }
            for lj in &c.l {
                if (lj - lj.transpose()).amax() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "flux matrix not symmetric on element {k}"
                    )));
                }
            }
            Ok(())
        };
        match &self.coeffs {
            Coeffs::Uniform(c) => check(c, 0),
            Coeffs::PerElement(cs) => {
                for (k, c) in cs.iter().enumerate() {
                    check(c, k)?;
                }
                Ok(())
            }
        }
    }

    pub fn coeffs(&self, elem: usize) -> &ElementCoeffs {
        match &self.coeffs {
            Coeffs::Uniform(c) => c,
            Coeffs::PerElement(cs) => &cs[elem],
        }
    }

    pub fn boundary_b(&self, marker: i32, n: Point) -> DMatrix<f64> {
        (self.boundary_b)(marker, n)
    }

    pub fn exact_boundary(&self, marker: i32, n: Point) -> Option<DMatrix<f64>> {
        self.exact_boundary.as_ref().map(|f| f(marker, n))
    }

    pub fn interior_s(&self, n: Point) -> DMatrix<f64> {
        (self.interior_s)(n)
    }

    pub fn boundary_data(&self, marker: i32, x: Point) -> DVector<f64> {
        (self.boundary_data)(marker, x)
    }

    /// Replace the interior stabilization (used to study broken choices).
    pub fn with_interior_s(mut self, s: FacetMatrixFn) -> Self {
        self.interior_s = s;
        self
    }

    /// Replace the boundary data, keeping operators unchanged.
    pub fn with_boundary_data(mut self, g: BoundaryDataFn) -> Self {
        self.boundary_data = g;
        self
    }
}

/// The directional flux matrix `sum_j n_j L^j` on an element.
pub fn matrix_d(sys: &SystemDef, elem: usize, n: Point) -> DMatrix<f64> {
    let c = sys.coeffs(elem);
    let mut d = DMatrix::zeros(sys.n_comp, sys.n_comp);
    for (j, lj) in c.l.iter().enumerate() {
        d += lj * n[j];
    }
    d
}

/// Maximal wave speed: the analytic value for built-ins, otherwise the
/// sampled directional eigenvalue bound.
pub fn max_wave_speed(sys: &SystemDef) -> f64 {
    if sys.analytic_speed {
        sys.wave_speed
    } else {
        sampled_wave_speed(sys, 360)
    }
}

/// Largest |λ| of the directional generalized eigenproblem over sampled
/// unit directions (2 directions in 1D, `n_dirs` in 2D) and all elements.
pub fn sampled_wave_speed(sys: &SystemDef, n_dirs: usize) -> f64 {
    let dirs: Vec<Point> = if sys.n_dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..n_dirs)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / n_dirs as f64;
                [th.cos(), th.sin()]
            })
            .collect()
    };
    let n_elems = match &sys.coeffs {
        Coeffs::Uniform(_) => 1,
        Coeffs::PerElement(cs) => cs.len(),
    };
    let mut c_max: f64 = 0.0;
    for k in 0..n_elems {
        let g = &sys.coeffs(k).g;
        for &nu in &dirs {
            let d = matrix_d(sys, k, nu);
            if let Some(lam) = linalg::gen_sym_eig_max_abs(&d, g) {
                c_max = c_max.max(lam);
            }
        }
    }
    c_max
}

/// Maximal jump of the directional flux matrix across interior facets; zero
/// is required by the distributional divergence-free assumption on the flux
/// coefficients.
pub fn check_normal_continuity(sys: &SystemDef, mesh: &SpatialMesh) -> f64 {
    let mut worst: f64 = 0.0;
    for f in mesh.facets.iter().filter(|f| !f.is_boundary()) {
        let lo = f.elements.0;
        let hi = f.elements.1.unwrap();
        let d_lo = matrix_d(sys, lo, f.normal);
        let d_hi = matrix_d(sys, hi, f.normal);
        worst = worst.max(linalg::spectral_norm(&(d_lo - d_hi)));
    }
    worst
}

/// Constant-field advection: one unknown, flux matrices `b_j`, upwind
/// boundary operator `|b.n|` and stabilization `|b.n|/2`. Inflow data is
/// supplied on every marker; the discrete operators annihilate it on
/// outflow parts automatically.
pub fn advection_system(
    mesh: &SpatialMesh,
    b: Point,
    inflow_data: impl Fn(Point) -> f64 + Send + Sync + 'static,
) -> SystemDef {
    let n_dim = mesh.dim;
    let coeffs = ElementCoeffs {
        g: DMatrix::identity(1, 1),
        l: (0..n_dim)
            .map(|j| DMatrix::from_element(1, 1, b[j]))
            .collect(),
    };
    let b_for = move |n: Point| b[0] * n[0] + b[1] * n[1];
    SystemDef {
        n_dim,
        n_comp: 1,
        coeffs: Coeffs::Uniform(coeffs),
        boundary_b: Box::new(move |_m, n| DMatrix::from_element(1, 1, b_for(n).abs())),
        exact_boundary: Some(Box::new(move |_m, n| {
            DMatrix::from_element(1, 1, b_for(n).abs())
        })),
        interior_s: Box::new(move |n| DMatrix::from_element(1, 1, 0.5 * b_for(n).abs())),
        boundary_data: Box::new(move |_m, x| DVector::from_element(1, inflow_data(x))),
        wave_speed: crate::mesh::norm(b),
        analytic_speed: true,
        name: format!("advection{}d", n_dim),
    }
}

/// Boundary condition selector for the wave system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveBc {
    Dirichlet,
    Robin(f64),
    Neumann,
}

/// First-order acoustic wave system in the flux/velocity variables:
/// `L = N + 1` unknowns, identity temporal coefficient, flux matrices
/// coupling the normal flux with the last component.
pub fn wave_system(mesh: &SpatialMesh, bc: WaveBc) -> Result<SystemDef> {
    let n_dim = mesh.dim;
    let l_dim = n_dim + 1;
    if let WaveBc::Robin(rho) = bc {
        if rho <= 0.0 {
            return Err(Error::invalid(format!(
                "robin parameter must be positive, got {rho}"
            )));
        }
    }
    let mut l = Vec::with_capacity(n_dim);
    for j in 0..n_dim {
        let mut lj = DMatrix::zeros(l_dim, l_dim);
        lj[(j, l_dim - 1)] = 1.0;
        lj[(l_dim - 1, j)] = 1.0;
        l.push(lj);
    }
    let coeffs = ElementCoeffs {
        g: DMatrix::identity(l_dim, l_dim),
        l,
    };
    let s_fn = move |n: Point| {
        // [[n n^t, 0], [0, 1]]
        let mut s = DMatrix::zeros(l_dim, l_dim);
        for i in 0..n_dim {
            for j in 0..n_dim {
                s[(i, j)] = n[i] * n[j];
            }
        }
        s[(l_dim - 1, l_dim - 1)] = 1.0;
        s
    };
    let b_fn: BoundaryMatrixFn = match bc {
        WaveBc::Dirichlet => Box::new(move |_m, n| {
            // [[0, -n], [n^t, 2]]
            let mut b = DMatrix::zeros(l_dim, l_dim);
            for j in 0..n_dim {
                b[(j, l_dim - 1)] = -n[j];
                b[(l_dim - 1, j)] = n[j];
            }
            b[(l_dim - 1, l_dim - 1)] = 2.0;
            b
        }),
        WaveBc::Robin(rho) => Box::new(move |_m, n| {
            // [[rho^{-1} n n^t, 0], [0, rho]]
            let mut b = DMatrix::zeros(l_dim, l_dim);
            for i in 0..n_dim {
                for j in 0..n_dim {
                    b[(i, j)] = n[i] * n[j] / rho;
                }
            }
            b[(l_dim - 1, l_dim - 1)] = rho;
            b
        }),
        WaveBc::Neumann => Box::new(move |_m, n| {
            // [[n n^t, n], [-n^t, 0]]
            let mut b = DMatrix::zeros(l_dim, l_dim);
            for i in 0..n_dim {
                for j in 0..n_dim {
                    b[(i, j)] = n[i] * n[j];
                }
                b[(i, l_dim - 1)] = n[i];
                b[(l_dim - 1, i)] = -n[i];
            }
            b
        }),
    };
    let exact_fn: BoundaryMatrixFn = match bc {
        WaveBc::Dirichlet => Box::new(move |_m, n| {
            let mut b = DMatrix::zeros(l_dim, l_dim);
            for j in 0..n_dim {
                b[(j, l_dim - 1)] = -n[j];
                b[(l_dim - 1, j)] = n[j];
            }
            b[(l_dim - 1, l_dim - 1)] = 2.0;
            b
        }),
        WaveBc::Robin(rho) => Box::new(move |_m, n| {
            let mut b = DMatrix::zeros(l_dim, l_dim);
            for j in 0..n_dim {
                b[(j, l_dim - 1)] = n[j];
                b[(l_dim - 1, j)] = -n[j];
            }
            b[(l_dim - 1, l_dim - 1)] = 2.0 * rho;
            b
        }),
        WaveBc::Neumann => Box::new(move |_m, n| {
            let mut b = DMatrix::zeros(l_dim, l_dim);
            for j in 0..n_dim {
                b[(j, l_dim - 1)] = n[j];
                b[(l_dim - 1, j)] = -n[j];
            }
            b
        }),
    };
    let _ = mesh;
    Ok(SystemDef {
        n_dim,
        n_comp: l_dim,
        coeffs: Coeffs::Uniform(coeffs),
        boundary_b: b_fn,
        exact_boundary: Some(exact_fn),
        interior_s: Box::new(s_fn),
        boundary_data: Box::new(move |_m, _x| DVector::zeros(l_dim)),
        wave_speed: 1.0,
        analytic_speed: true,
        name: match bc {
            WaveBc::Dirichlet => format!("wave{}d:dirichlet", n_dim),
            WaveBc::Robin(rho) => format!("wave{}d:robin:rho={}", n_dim, rho),
            WaveBc::Neumann => format!("wave{}d:neumann", n_dim),
        },
    })
}

/// Outcome of one of the six DG design conditions.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub name: &'static str,
    pub pass: bool,
    /// Worst violation magnitude observed (0 when the condition holds).
    pub violation: f64,
    /// Best observed bounding constant where the condition is an
    /// inequality of the form `lhs <= C rhs`.
    pub constant: f64,
    /// True when the condition could not be evaluated (e.g. the exact
    /// boundary operator was not supplied).
    pub skipped: bool,
}

/// Per-condition results of the DG design-condition check.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub conditions: Vec<ConditionReport>,
}

impl DesignReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass || c.skipped)
    }

    pub fn condition(&self, name: &str) -> &ConditionReport {
        self.conditions
            .iter()
            .find(|c| c.name == name)
            .expect("unknown condition name")
    }
}

const KERNEL_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const ZERO_DENOM: f64 = 1e-12;

/// Verify the six DG design conditions by sampling boundary/interior facet
/// normals and random unit vectors. Failures are recorded in the report,
/// not raised as errors.
pub fn check_design_conditions(
    sys: &SystemDef,
    mesh: &SpatialMesh,
    n_samples: usize,
) -> DesignReport {
    let n_samples = n_samples.max(1);
    let mut rng = SplitMix64::new(0x7455_u64);
    let l_dim = sys.n_comp;

    let boundary: Vec<_> = mesh.facets.iter().filter(|f| f.is_boundary()).collect();
    let interior: Vec<_> = mesh.facets.iter().filter(|f| !f.is_boundary()).collect();

    // (a) kernel inclusion: ker(D - exact_B) ⊆ ker(D - B).
    let mut a_rep = ConditionReport {
        name: "kernel-inclusion",
        pass: true,
        violation: 0.0,
        constant: 0.0,
        skipped: sys.exact_boundary.is_none(),
    };
    if sys.exact_boundary.is_some() {
        for f in &boundary {
            let marker = f.marker.unwrap_or(0);
            let d = matrix_d(sys, f.elements.0, f.normal);
            let exact = sys.exact_boundary(marker, f.normal).unwrap();
            let b = sys.boundary_b(marker, f.normal);
            let diff_exact = &d - &exact;
            let svd = diff_exact.svd(false, true);
            let smax = svd.singular_values.max();
            let v_t = svd.v_t.as_ref().unwrap();
            for (i, &s) in svd.singular_values.iter().enumerate() {
                if s <= KERNEL_TOL * smax.max(1.0) {
                    let y = v_t.row(i).transpose();
                    let resid = ((&d - &b) * &y).norm();
                    a_rep.violation = a_rep.violation.max(resid);
                }
            }
            // Rank-deficient directions beyond those listed do not exist:
            // svd covers the full space.
        }
        a_rep.pass = a_rep.violation <= 1e-9;
    }

    // (b) B + B^t PSD, bounded.
    let mut b_rep = ConditionReport {
        name: "boundary-psd",
        pass: true,
        violation: 0.0,
        constant: 0.0,
        skipped: boundary.is_empty(),
    };
    for f in &boundary {
        let b = sys.boundary_b(f.marker.unwrap_or(0), f.normal);
        let (lmin, _) = linalg::sym_eig_range(&(&b + b.transpose()));
        b_rep.violation = b_rep.violation.max((-lmin).max(0.0));
        b_rep.constant = b_rep.constant.max(linalg::spectral_norm(&b));
    }
    b_rep.pass = b_rep.violation <= PSD_TOL;

    // (c) |(D + B) y . z| <= C ||y|| |z|_B.
    let mut c_rep = ConditionReport {
        name: "boundary-control",
        pass: true,
        violation: 0.0,
        constant: 0.0,
        skipped: boundary.is_empty(),
    };
    for f in &boundary {
        let marker = f.marker.unwrap_or(0);
        let d = matrix_d(sys, f.elements.0, f.normal);
        let b = sys.boundary_b(marker, f.normal);
        let db = &d + &b;
        for _ in 0..n_samples {
            let y = rng.unit_vector(l_dim);
            let z = rng.unit_vector(l_dim);
            let lhs = (&db * &y).dot(&z).abs();
            let zb = (&b * &z).dot(&z).max(0.0).sqrt();
            if zb < ZERO_DENOM {
                if lhs > 1e-10 {
                    c_rep.pass = false;
                    c_rep.violation = c_rep.violation.max(lhs);
                    c_rep.constant = f64::INFINITY;
                }
            } else {
                c_rep.constant = c_rep.constant.max(lhs / zb);
            }
        }
    }

    // (d) S + S^t PSD, bounded.
    let mut d_rep = ConditionReport {
        name: "stabilization-psd",
        pass: true,
        violation: 0.0,
        constant: 0.0,
        skipped: interior.is_empty(),
    };
    for f in &interior {
        let s = sys.interior_s(f.normal);
        let (lmin, _) = linalg::sym_eig_range(&(&s + s.transpose()));
        d_rep.violation = d_rep.violation.max((-lmin).max(0.0));
        d_rep.constant = d_rep.constant.max(linalg::spectral_norm(&s));
    }
    d_rep.pass = d_rep.violation <= PSD_TOL;

    // (e) |S y . z| <= C |y|_S |z|_S.
    let mut e_rep = ConditionReport {
        name: "stabilization-control",
        pass: true,
        violation: 0.0,
        constant: 0.0,
        skipped: interior.is_empty(),
    };
    // (f) |D y . z| <= C ||y|| |z|_S.
    let mut f_rep = ConditionReport {
        name: "flux-stabilization-control",
        pass: true,
        violation: 0.0,
        constant: 0.0,
        skipped: interior.is_empty(),
    };
    for f in &interior {
        let s = sys.interior_s(f.normal);
        let d = matrix_d(sys, f.elements.0, f.normal);
        for _ in 0..n_samples {
            let y = rng.unit_vector(l_dim);
            let z = rng.unit_vector(l_dim);
            let ys = (&s * &y).dot(&y).max(0.0).sqrt();
            let zs = (&s * &z).dot(&z).max(0.0).sqrt();
            let lhs_e = (&s * &y).dot(&z).abs();
            if ys * zs < ZERO_DENOM {
                if lhs_e > 1e-10 {
                    e_rep.pass = false;
                    e_rep.violation = e_rep.violation.max(lhs_e);
                    e_rep.constant = f64::INFINITY;
                }
            } else {
                e_rep.constant = e_rep.constant.max(lhs_e / (ys * zs));
            }
            let lhs_f = (&d * &y).dot(&z).abs();
            if zs < ZERO_DENOM {
                if lhs_f > 1e-10 {
                    f_rep.pass = false;
                    f_rep.violation = f_rep.violation.max(lhs_f);
                    f_rep.constant = f64::INFINITY;
                }
            } else {
                f_rep.constant = f_rep.constant.max(lhs_f / zs);
            }
        }
    }

    DesignReport {
        conditions: vec![a_rep, b_rep, c_rep, d_rep, e_rep, f_rep],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_uniform_square_mesh, Diagonal};

    #[test]
    fn advection_directional_flux_on_square() {
        let mesh = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        let sys = advection_system(&mesh, [0.0, 1.0], |_| 0.0);
        for f in mesh.facets.iter().filter(|f| f.is_boundary()) {
            let d = matrix_d(&sys, f.elements.0, f.normal)[(0, 0)];
            match f.marker.unwrap() {
                0 => assert!((d + 1.0).abs() < 1e-14), // bottom: inflow
                2 => assert!((d - 1.0).abs() < 1e-14), // top: outflow
                _ => assert!(d.abs() < 1e-14),         // sides
            }
        }
    }

    #[test]
    fn advection_1d_boundary_and_stabilization() {
        let mesh = build_interval_mesh(4, 0.0, 1.0).unwrap();
        let sys = advection_system(&mesh, [1.0, 0.0], |_| 0.0);
        assert!((sys.boundary_b(0, [-1.0, 0.0])[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((sys.boundary_b(1, [1.0, 0.0])[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((sys.interior_s([1.0, 0.0])[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn advection_unit_speed_for_unit_field() {
        let mesh = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let sys = advection_system(&mesh, [s, s], |_| 0.0);
        assert!((max_wave_speed(&sys) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wave_dirichlet_boundary_matrix_1d() {
        let mesh = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let sys = wave_system(&mesh, WaveBc::Dirichlet).unwrap();
        let b = sys.boundary_b(1, [1.0, 0.0]);
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 2.0]);
        assert!((b - expect).amax() < 1e-14);
    }

    #[test]
    fn wave_robin_boundary_matrix_1d() {
        let mesh = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let sys = wave_system(&mesh, WaveBc::Robin(1.0)).unwrap();
        for n in [[1.0, 0.0], [-1.0, 0.0]] {
            let b = sys.boundary_b(0, n);
            assert!((b - DMatrix::identity(2, 2)).amax() < 1e-14);
        }
        assert!(wave_system(&mesh, WaveBc::Robin(0.0)).is_err());
        assert!(wave_system(&mesh, WaveBc::Robin(-1.0)).is_err());
    }

    #[test]
    fn wave_neumann_boundary_matrix_2d() {
        let mesh = build_uniform_square_mesh(1, Diagonal::NE).unwrap();
        let sys = wave_system(&mesh, WaveBc::Neumann).unwrap();
        let b = sys.boundary_b(1, [1.0, 0.0]);
        let expect =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert!((b - expect).amax() < 1e-14);
    }

    #[test]
    fn directional_flux_hand_cases() {
        let mesh = build_uniform_square_mesh(1, Diagonal::NE).unwrap();
        let adv = advection_system(&mesh, [0.0, 1.0], |_| 0.0);
        assert!((matrix_d(&adv, 0, [0.0, 1.0])[(0, 0)] - 1.0).abs() < 1e-15);

        let mesh1 = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let wave1 = wave_system(&mesh1, WaveBc::Dirichlet).unwrap();
        let d = matrix_d(&wave1, 0, [1.0, 0.0]);
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((&d - expect).amax() < 1e-15);

        let wave2 = wave_system(&mesh, WaveBc::Dirichlet).unwrap();
        let d = matrix_d(&wave2, 0, [0.0, 1.0]);
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        );
        assert!((&d - expect).amax() < 1e-15);
        assert!((&d - d.transpose()).amax() < 1e-14);
    }

    #[test]
    fn wave_speeds_match_analytic_values() {
        let mesh1 = build_interval_mesh(2, 0.0, 1.0).unwrap();
        let wave1 = wave_system(&mesh1, WaveBc::Dirichlet).unwrap();
        assert!((max_wave_speed(&wave1) - 1.0).abs() < 1e-14);
        assert!((sampled_wave_speed(&wave1, 16) - 1.0).abs() < 1e-12);

        let mesh2 = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        let wave2 = wave_system(&mesh2, WaveBc::Neumann).unwrap();
        // Dense eigenvalues over sampled directions are {-1, 0, 1}.
        assert!((sampled_wave_speed(&wave2, 360) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_continuity_zero_for_constant_coefficients() {
        let mesh = build_uniform_square_mesh(3, Diagonal::NE).unwrap();
        let adv = advection_system(&mesh, [0.3, 0.7], |_| 0.0);
        assert_eq!(check_normal_continuity(&adv, &mesh), 0.0);
        let wave = wave_system(&mesh, WaveBc::Dirichlet).unwrap();
        assert_eq!(check_normal_continuity(&wave, &mesh), 0.0);
    }

    #[test]
    fn normal_continuity_flags_tangential_jump() {
        // Two triangles sharing the vertical edge x=1 of [0,2]x[0,1]:
        // b jumps tangentially (y-direction) across a facet with normal
        // e_x, so D = b.n stays continuous; a normal jump breaks it.
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [2.0, 1.0]];
        let elements = vec![vec![0, 1, 2], vec![1, 3, 2]];
        let mesh = SpatialMesh::new(2, vertices, elements, &[]).unwrap();
        let mk = |b: Point| ElementCoeffs {
            g: DMatrix::identity(1, 1),
            l: vec![
                DMatrix::from_element(1, 1, b[0]),
                DMatrix::from_element(1, 1, b[1]),
            ],
        };
        //

        // Shared facet (1,2) has normal e_x (up to sign).
        let tangential = SystemDef::from_parts(
            2,
            1,
            vec![mk([0.5, 1.0]), mk([0.5, -2.0])],
            Box::new(|_, _| DMatrix::zeros(1, 1)),
            Box::new(|_| DMatrix::zeros(1, 1)),
            Box::new(|_, _| DVector::zeros(1)),
        )
        .unwrap();
        assert!(check_normal_continuity(&tangential, &mesh) < 1e-14);

        let normal_jump = SystemDef::from_parts(
            2,
            1,
            vec![mk([0.5, 1.0]), mk([1.5, 1.0])],
            Box::new(|_, _| DMatrix::zeros(1, 1)),
            Box::new(|_| DMatrix::zeros(1, 1)),
            Box::new(|_, _| DVector::zeros(1)),
        )
        .unwrap();
        assert!(check_normal_continuity(&normal_jump, &mesh) > 0.9);
    }

    #[test]
    fn design_conditions_pass_for_builtins() {
        let mesh2 = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        let adv = advection_system(&mesh2, [0.0, 1.0], |_| 0.0);
        let report = check_design_conditions(&adv, &mesh2, 100);
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.conditions.len(), 6);
        for c in &report.conditions {
            if !c.skipped && c.constant.is_finite() {
                assert!(c.constant <= 2.0 + 1e-9, "{c:?}");
            }
        }

        let mesh1 = build_interval_mesh(4, 0.0, 1.0).unwrap();
        for bc in [WaveBc::Dirichlet, WaveBc::Robin(1.0), WaveBc::Neumann] {
            let sys = wave_system(&mesh1, bc).unwrap();
            let report = check_design_conditions(&sys, &mesh1, 100);
            assert!(report.all_pass(), "{bc:?}: {report:?}");
        }
        for bc in [WaveBc::Dirichlet, WaveBc::Robin(2.0), WaveBc::Neumann] {
            let sys = wave_system(&mesh2, bc).unwrap();
            let report = check_design_conditions(&sys, &mesh2, 50);
            assert!(report.all_pass(), "{bc:?}: {report:?}");
        }
    }

    #[test]
    fn zero_stabilization_breaks_flux_control() {
        let mesh = build_uniform_square_mesh(2, Diagonal::NE).unwrap();
        let adv = advection_system(&mesh, [0.0, 1.0], |_| 0.0)
            .with_interior_s(Box::new(|_| DMatrix::zeros(1, 1)));
        let report = check_design_conditions(&adv, &mesh, 100);
        let f = report.condition("flux-stabilization-control");
        assert!(!f.pass);
        assert!(f.constant.is_infinite());
    }

    #[test]
    fn wave_stabilization_seminorm_reduces_to_normal_component() {
        let mesh = build_uniform_square_mesh(1, Diagonal::NE).unwrap();
        let sys = wave_system(&mesh, WaveBc::Dirichlet).unwrap();
        let mut rng = SplitMix64::new(7);
        for _ in 0..50 {
            let th = rng.next_f64() * std::f64::consts::PI;
            let n = [th.cos(), th.sin()];
            let s = sys.interior_s(n);
            let y = DVector::from_fn(3, |_, _| rng.next_f64());
            let quad = (&s * &y).dot(&y);
            let nq = n[0] * y[0] + n[1] * y[1];
            let expect = nq * nq + y[2] * y[2];
            assert!((quad - expect).abs() < 1e-13);
        }
    }
}
