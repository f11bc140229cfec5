//! Tent propagators and per-tent stability diagnostics.
//!
//! All propagators advance DG coefficients from the tent bottom
//! (pseudotime 0) toward the top (pseudotime 1) for the mapped system
//! `d/dt [M(t) u] = A u + l`:
//!
//! - the lowest-order tent-implicit resolvent,
//! - the iterated explicit scheme (Richardson iterations for the implicit
//!   solve),
//! - the s-stage structure-aware Taylor (SAT) scheme built from the
//!   recursion `y_k = M0^{-1} (A + k M1) y_{k-1}`, optionally applied on
//!   `r` equal pseudotime subtents,
//! - a sub-stepped implicit-midpoint integrator of the semidiscrete flow,
//!   used as a reference oracle.
//!
//! A pseudotime-constant load enters the Taylor recursion only at the
//! first stage, which is the unique consistent extension for
//! time-independent boundary data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tentops::{d_form, TentOperators};

/// Tent stepper selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepperConfig {
    /// Lowest-order tent-implicit scheme.
    Implicit1,
    /// `q` Richardson iterations of the explicit scheme.
    ExplicitIter { q: usize },
    /// `s`-stage SAT scheme on `r` subtents.
    Sat { s: usize, r: usize },
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepperConfig::Implicit1 => Ok(()),
            StepperConfig::ExplicitIter { q } if q >= 1 => Ok(()),
            StepperConfig::Sat { s, r } if s >= 1 && r >= 1 => Ok(()),
            other => Err(Error::invalid(format!("bad stepper config {other:?}"))),
        }
    }
}

/// One step of the Taylor recursion: `M0^{-1} (A + k M1) v`.
pub fn apply_x(ops: &TentOperators, v: &DVector<f64>, k_shift: usize) -> Result<DVector<f64>> {
    let mut rhs = &ops.a * v;
    if k_shift > 0 {
        rhs += k_shift as f64 * ops.m1_apply(v);
    }
    let solver = ops.m_solver(0.0)?;
    Ok(solver.solve(&rhs))
}

fn implicit1_impl(
    ops: &TentOperators,
    u0: &DVector<f64>,
    tau: f64,
    load: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let mut system = ops.m_tau_dense(tau);
    system -= tau * &ops.a;
    let mut rhs = ops.m_apply(0.0, u0);
    if let Some(l) = load {
        rhs += tau * l;
    }
    system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("tent-implicit system is singular".into()))
}

/// Tent-implicit propagation: solve `(M(tau) - tau A) u = M0 u0 + tau l`.
pub fn propagate_implicit1(
    ops: &TentOperators,
    u0: &DVector<f64>,
    tau: f64,
) -> Result<DVector<f64>> {
    implicit1_impl(ops, u0, tau, Some(&ops.load))
}

fn explicit_q_impl(
    ops: &TentOperators,
    u0: &DVector<f64>,
    tau: f64,
    q: usize,
    load: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if q < 1 {
        return Err(Error::invalid("explicit stepper needs q >= 1"));
    }
    let solver = ops.m_solver(0.0)?;
    let mut v = u0.clone();
    for _ in 0..q {
        let mut rhs = &ops.a * &v;
        rhs += ops.m1_apply(&v);
        if let Some(l) = load {
            rhs += l;
        }
        let mut x = solver.solve(&rhs);
        x *= tau;
        x += u0;
        v = x;
    }
    Ok(v)
}

/// Iterated explicit propagation: `q` Richardson iterations
/// `v <- u0 + tau M0^{-1} ((A + M1) v + l)`.
pub fn propagate_explicit_q(
    ops: &TentOperators,
    u0: &DVector<f64>,
    tau: f64,
    q: usize,
) -> Result<DVector<f64>> {
    explicit_q_impl(ops, u0, tau, q, Some(&ops.load))
}

/// Core SAT stage shared by whole-tent and subtent application: the base
/// mass operator is `M(t_base)`, every stiffness application is scaled by
/// `op_scale`, and the remainder stage uses `M(t_base + tau * op_scale)`.
fn sat_apply(
    ops: &TentOperators,
    u0: &DVector<f64>,
    s: usize,
    tau: f64,
    t_base: f64,
    op_scale: f64,
    load: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if s < 1 {
        return Err(Error::invalid("SAT stepper needs s >= 1"));
    }
    let base_solver = ops.m_solver(t_base)?;
    let mut acc = u0.clone();
    let mut y = u0.clone();
    let mut factorial = 1.0;
    let mut tau_pow = 1.0;
    for k in 1..=s {
        let mut rhs = &ops.a * &y;
        rhs += k as f64 * ops.m1_apply(&y);
        if k == 1 {
            if let Some(l) = load {
                rhs += l;
            }
        }
        let mut next = base_solver.solve(&rhs);
        next *= op_scale;
        y = next;
        factorial *= k as f64;
        tau_pow *= tau;
        if k < s {
            acc.axpy(tau_pow / factorial, &y, 1.0);
        } else {
            let z = ops.m_apply(t_base, &y);
            let final_solver = ops.m_solver(t_base + tau * op_scale)?;
            let z = final_solver.solve(&z);
            acc.axpy(tau_pow / factorial, &z, 1.0);
        }
    }
    Ok(acc)
}

/// `s`-stage SAT propagation over pseudotime `tau` on the whole tent.
pub fn propagate_sat(
    ops: &TentOperators,
    u0: &DVector<f64>,
    s: usize,
    tau: f64,
) -> Result<DVector<f64>> {
    sat_apply(ops, u0, s, tau, 0.0, 1.0, Some(&ops.load))
}

fn sat_subtents_impl(
    ops: &TentOperators,
    u0: &DVector<f64>,
    s: usize,
    r: usize,
    load: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if r < 1 {
        return Err(Error::invalid("SAT stepper needs r >= 1"));
    }
    let scale = 1.0 / r as f64;
    let mut u = u0.clone();
    for l in 0..r {
        let t_base = l as f64 * scale;
        u = sat_apply(ops, &u, s, 1.0, t_base, scale, load)?;
    }
    Ok(u)
}

/// `s`-stage SAT applied on `r` equal subtents: the stiffness and the
/// pseudotime derivative of the mass shrink by `1/r` and the base mass
/// operator shifts across the subtents.
pub fn propagate_sat_subtents(
    ops: &TentOperators,
    u0: &DVector<f64>,
    s: usize,
    r: usize,
) -> Result<DVector<f64>> {
    sat_subtents_impl(ops, u0, s, r, Some(&ops.load))
}

fn reference_impl(
    ops: &TentOperators,
    u0: &DVector<f64>,
    n_sub: usize,
    load: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if n_sub < 1 {
        return Err(Error::invalid("reference integrator needs n_sub >= 1"));
    }
    let dt = 1.0 / n_sub as f64;
    // Integrate y' = A M(t)^{-1} y + l for y = M(t) u by implicit midpoint:
    // solve (M(t_mid) - dt/2 A) u_mid = y_n + dt/2 l, then
    // y_{n+1} = y_n + dt (A u_mid + l).
    let mut y = ops.m_apply(0.0, u0);
    for i in 0..n_sub {
        let t_mid = (i as f64 + 0.5) * dt;
        let mut system = ops.m_tau_dense(t_mid);
        system -= (dt / 2.0) * &ops.a;
        let mut rhs = y.clone();
        if let Some(l) = load {
            rhs += (dt / 2.0) * l;
        }
        let u_mid = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("midpoint system is singular".into()))?;
        y += dt * (&ops.a * &u_mid);
        if let Some(l) = load {
            y += dt * l;
        }
    }
    let solver = ops.m_solver(1.0)?;
    Ok(solver.solve(&y))
}

/// Sub-stepped second-order integration of the semidiscrete tent flow;
/// serves as the reference oracle for the fully discrete schemes.
pub fn reference_semidiscrete(
    ops: &TentOperators,
    u0: &DVector<f64>,
    n_sub: usize,
) -> Result<DVector<f64>> {
    reference_impl(ops, u0, n_sub, Some(&ops.load))
}

/// Apply the configured propagator across the whole tent (pseudotime 1).
pub fn propagate(
    ops: &TentOperators,
    u0: &DVector<f64>,
    config: &StepperConfig,
) -> Result<DVector<f64>> {
    match *config {
        StepperConfig::Implicit1 => propagate_implicit1(ops, u0, 1.0),
        StepperConfig::ExplicitIter { q } => propagate_explicit_q(ops, u0, 1.0, q),
        StepperConfig::Sat { s, r } => propagate_sat_subtents(ops, u0, s, r),
    }
}

/// Homogeneous variant (boundary load dropped); stability concerns only
/// the homogeneous part of the propagator.
pub fn propagate_homogeneous(
    ops: &TentOperators,
    u0: &DVector<f64>,
    config: &StepperConfig,
) -> Result<DVector<f64>> {
    match *config {
        StepperConfig::Implicit1 => implicit1_impl(ops, u0, 1.0, None),
        StepperConfig::ExplicitIter { q } => explicit_q_impl(ops, u0, 1.0, q, None),
        StepperConfig::Sat { s, r } => sat_subtents_impl(ops, u0, s, r, None),
    }
}

/// Materialize the homogeneous propagator column by column.
pub fn propagator_matrix(ops: &TentOperators, config: &StepperConfig) -> Result<DMatrix<f64>> {
    let n = ops.dim();
    let mut r = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e[j] = 1.0;
        let col = propagate_homogeneous(ops, &e, config)?;
        r.set_column(j, &col);
        e[j] = 0.0;
    }
    Ok(r)
}

/// Largest generalized singular value
/// `sigma = sup ||R v||_{M(1)} / ||v||_{M0}` of the configured propagator.
pub fn stability_factor(ops: &TentOperators, config: &StepperConfig) -> Result<f64> {
    let r = propagator_matrix(ops, config)?;
    // R^t M(1) R via blockwise application to columns.
    let n = ops.dim();
    let mut m1r = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = ops.m_apply(1.0, &r.column(j).into_owned());
        m1r.set_column(j, &col);
    }
    let gram = r.transpose() * m1r;
    let m0 = ops.m_tau_dense(0.0);
    let lam = linalg::gen_sym_eig_max(&gram, &m0)
        .ok_or_else(|| Error::Singular("M0 is not positive definite".into()))?;
    Ok(lam.max(0.0).sqrt())
}

/// Result of the local CFL constant estimate for the finite volume case.
#[derive(Debug, Clone, Copy)]
pub struct KappaEstimate {
    pub value: f64,
    /// Set when the dissipation form vanishes identically and the constant
    /// is undefined (no constraint on the pseudotime step).
    pub degenerate: bool,
}

const KERNEL_REL_TOL: f64 = 1e-10;

/// Approximate the piecewise-constant CFL constant: the supremum over a
/// pseudotime grid of the generalized eigenvalue of
/// `||M(tau)^{-1}(A + M1) v||^2_{M(tau)}` against the dissipation form,
/// restricted to the orthogonal complement of the dissipation kernel.
pub fn kappa_p0(ops: &TentOperators, tau_grid: usize) -> Result<KappaEstimate> {
    if ops.p != 0 {
        return Err(Error::invalid(format!(
            "kappa estimate is defined for degree 0, got p = {}",
            ops.p
        )));
    }
    let d = ops.d_psd_dense();
    // Degenerate when the dissipation form vanishes relative to the
    // operator scale (e.g. zero stabilization on an interior tent).
    let op_scale = ops.a.amax().max(ops.m1_dense().amax()).max(1e-300);
    let (_, dmax) = linalg::sym_eig_range(&d);
    if dmax <= 1e-12 * op_scale {
        return Ok(KappaEstimate {
            value: 0.0,
            degenerate: true,
        });
    }
    let (_, comp, vals) = linalg::psd_kernel_split(&d, KERNEL_REL_TOL);
    if comp.ncols() == 0 {
        return Ok(KappaEstimate {
            value: 0.0,
            degenerate: true,
        });
    }
    let w = {
        let mut w = ops.a.clone();
        w += ops.m1_dense();
        w
    };
    let mut kappa: f64 = 0.0;
    for i in 0..=tau_grid {
        let tau = i as f64 / tau_grid.max(1) as f64;
        let solver = ops.m_solver(tau)?;
        let n = ops.dim();
        let mut minv_w = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = solver.solve(&w.column(j).into_owned());
            minv_w.set_column(j, &col);
        }
        let num = w.transpose() * minv_w;
        // Restrict to the kernel complement; the denominator is diagonal
        // there (eigenvalues of the dissipation form).
        let num_r = comp.transpose() * &num * &comp;
        let den_r = DMatrix::from_diagonal(&vals);
        let lam = linalg::gen_sym_eig_max(&num_r, &den_r)
            .ok_or_else(|| Error::Singular("dissipation restriction not SPD".into()))?;
        kappa = kappa.max(lam);
    }
    Ok(KappaEstimate {
        value: kappa,
        degenerate: false,
    })
}

/// The two-stage remainder form `Z(tau, v)` of the SAT stability identity.
pub fn z_form(ops: &TentOperators, tau: f64, v: &DVector<f64>) -> Result<f64> {
    let x1 = apply_x(ops, v, 1)?;
    let x2 = apply_x(ops, &x1, 2)?;
    let t1 = 2.0 * ops.m1_apply(&x1).dot(&x1);
    let t2 = d_form(ops, &x1);
    let z = ops.m_apply(0.0, &x2);
    let y = ops.m_solver(tau)?.solve(&z);
    let t3 = tau * z.dot(&y);
    Ok((t1 - t2 + t3) / 4.0)
}

/// Approximate `kappa_2 = sup_tau sup_v Z(tau, v) / ||v||_{M0}^2` on a
/// pseudotime grid by a generalized eigensolve.
pub fn kappa2(ops: &TentOperators, tau_grid: usize) -> Result<f64> {
    let n = ops.dim();
    let m1 = ops.m1_dense();
    let w = &ops.a + &m1;
    let solver0 = ops.m_solver(0.0)?;
    let mut x1 = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = solver0.solve(&w.column(j).into_owned());
        x1.set_column(j, &col);
    }
    // M0 X2 = (A + 2 M1) X1.
    let w2 = (&ops.a + 2.0 * &m1) * &x1;
    let d = ops.d_psd_dense();
    let fixed = 2.0 * x1.transpose() * &m1 * &x1 - x1.transpose() * &d * &x1;
    let m0 = ops.m_tau_dense(0.0);
    let mut kappa: f64 = f64::NEG_INFINITY;
    for i in 0..=tau_grid {
        let tau = i as f64 / tau_grid.max(1) as f64;
        let solver = ops.m_solver(tau)?;
        let mut minv_w2 = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = solver.solve(&w2.column(j).into_owned());
            minv_w2.set_column(j, &col);
        }
        let z_mat = (&fixed + tau * (w2.transpose() * minv_w2)) / 4.0;
        let lam = linalg::gen_sym_eig_max(&z_mat, &m0)
            .ok_or_else(|| Error::Singular("M0 is not positive definite".into()))?;
        kappa = kappa.max(lam);
    }
    Ok(kappa)
}
