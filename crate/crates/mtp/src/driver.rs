//! Global propagation: initial projection, layer-by-layer application of
//! tent propagators, front norms and final-time error measurement.
//!
//! A [`FrontSolution`] holds the DG coefficients of the solution trace on
//! the current advancing front, one block per mesh element. Advancing a
//! layer gathers patch coefficients per tent, applies the configured tent
//! propagator, and scatters the results back; elements under no tent are
//! untouched. Tents of one layer have element-disjoint patches, so they
//! are processed by a parallel map with non-aliasing writes.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::basis::{element_quadrature, DgSpace};
use crate::error::{Error, Result};
use crate::hypersys::SystemDef;
use crate::mesh::{Point, SpatialMesh};
use crate::pitch::{Front, SlabSchedule, Tent, TentSlab};
use crate::steppers::{propagate, stability_factor, StepperConfig};
use crate::tentops::{assemble_tent_operators, build_patch_space, SystemTables, TentOperators};

/// DG coefficients of the solution trace on an advancing front.
#[derive(Debug, Clone)]
pub struct FrontSolution {
    /// Flat coefficients, `(element * nb + basis) * L + component`.
    pub data: DVector<f64>,
    pub nb: usize,
    pub n_comp: usize,
    /// Index of the front the trace lives on.
    pub front_index: usize,
}

impl FrontSolution {
    pub fn block_len(&self) -> usize {
        self.nb * self.n_comp
    }

    pub fn n_elements(&self) -> usize {
        self.data.len() / self.block_len()
    }

    /// Coefficient slice of one element.
    pub fn element_block(&self, elem: usize) -> &[f64] {
        let b = self.block_len();
        &self.data.as_slice()[elem * b..(elem + 1) * b]
    }

    fn gather(&self, tent: &Tent) -> DVector<f64> {
        let b = self.block_len();
        let mut out = DVector::zeros(tent.patch.elements.len() * b);
        for (e, &ke) in tent.patch.elements.iter().enumerate() {
            out.rows_mut(e * b, b)
                .copy_from_slice(self.element_block(ke));
        }
        out
    }

    fn scatter(&mut self, tent: &Tent, local: &DVector<f64>) {
        let b = self.block_len();
        for (e, &ke) in tent.patch.elements.iter().enumerate() {
            self.data
                .rows_mut(ke * b, b)
                .copy_from_slice(&local.as_slice()[e * b..(e + 1) * b]);
        }
    }
}

/// Elementwise L2 projection of initial data onto the DG space. The
/// quadrature degree is doubled beyond the assembly rule since the data
/// need not be polynomial.
pub fn project_initial(
    mesh: &SpatialMesh,
    space: &DgSpace,
    sys: &SystemDef,
    u0: impl Fn(Point) -> DVector<f64>,
) -> FrontSolution {
    let nb = space.nb;
    let l_dim = sys.n_comp;
    let mut data = DVector::zeros(mesh.n_elements() * nb * l_dim);
    let degree = 2 * (2 * space.p + 2);
    for k in 0..mesh.n_elements() {
        let (pts, wts) = element_quadrature(mesh, k, degree);
        let vals = space.elements[k].basis.values(&pts);
        for (q, &x) in pts.iter().enumerate() {
            let f = u0(x);
            for a in 0..nb {
                let w = wts[q] * vals[(q, a)];
                for c in 0..l_dim {
                    data[(k * nb + a) * l_dim + c] += w * f[c];
                }
            }
        }
    }
    FrontSolution {
        data,
        nb,
        n_comp: l_dim,
        front_index: 0,
    }
}

/// Options for a global run.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub stepper: StepperConfig,
    /// Also compute per-tent stability factors (slow; materializes the
    /// propagator on every tent).
    pub collect_stability: bool,
}

/// Outcome of a global run.
#[derive(Debug)]
pub struct RunResult {
    pub solution: FrontSolution,
    /// Front norm after each front (index 0 = initial front).
    pub front_norms: Vec<f64>,
    pub wall_ms: f64,
    pub tent_count: usize,
    pub max_stability: Option<f64>,
}

struct TentOutcome {
    local: DVector<f64>,
    sigma: Option<f64>,
    ops: Option<Arc<TentOperators>>,
}

fn process_tent(
    mesh: &SpatialMesh,
    space: &DgSpace,
    tables: &SystemTables,
    sys: &SystemDef,
    tent: &Tent,
    solution: &FrontSolution,
    cfg: &RunConfig,
    cached: Option<&Arc<TentOperators>>,
    keep_ops: bool,
) -> Result<TentOutcome> {
    let owned: Option<Arc<TentOperators>> = match cached {
        Some(_) => None,
        None => {
            let ps = build_patch_space(mesh, space, tent, sys.n_comp);
            Some(Arc::new(assemble_tent_operators(&ps, sys, tables)))
        }
    };
    let ops: &TentOperators = cached.or(owned.as_ref()).expect("operators present");
    let u0 = solution.gather(tent);
    let out = propagate(ops, &u0, &cfg.stepper)?;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite value after tent at vertex {}",
            tent.vertex
        )));
    }
    let sigma = if cfg.collect_stability {
        Some(stability_factor(ops, &cfg.stepper)?)
    } else {
        None
    };
    let ops_out = if keep_ops {
        Some(match cached {
            Some(a) => Arc::clone(a),
            None => owned.expect("owned operators when no cache"),
        })
    } else {
        None
    };
    Ok(TentOutcome {
        local: out,
        sigma,
        ops: ops_out,
    })
}

/// Advance the solution across one layer of element-disjoint tents.
pub fn advance_layer(
    mesh: &SpatialMesh,
    space: &DgSpace,
    tables: &SystemTables,
    sys: &SystemDef,
    solution: &FrontSolution,
    layer: &[Tent],
    cfg: &RunConfig,
) -> Result<FrontSolution> {
    let (next, _) = advance_layer_inner(mesh, space, tables, sys, solution, layer, cfg, None, false)?;
    Ok(next)
}

#[allow(clippy::too_many_arguments)]
fn advance_layer_inner(
    mesh: &SpatialMesh,
    space: &DgSpace,
    tables: &SystemTables,
    sys: &SystemDef,
    solution: &FrontSolution,
    layer: &[Tent],
    cfg: &RunConfig,
    cache: Option<&[Arc<TentOperators>]>,
    keep_ops: bool,
) -> Result<(FrontSolution, LayerOutcome)> {
    let results: Vec<Result<TentOutcome>> = layer
        .par_iter()
        .enumerate()
        .map(|(i, tent)| {
            process_tent(
                mesh,
                space,
                tables,
                sys,
                tent,
                solution,
                cfg,
                cache.map(|c| &c[i]),
                keep_ops,
            )
        })
        .collect();
    let mut next = solution.clone();
    next.front_index += 1;
    let mut max_sigma: f64 = 0.0;
    let mut ops = Vec::new();
    for (tent, res) in layer.iter().zip(results) {
        let outcome = res?;
        next.scatter(tent, &outcome.local);
        if let Some(s) = outcome.sigma {
            max_sigma = max_sigma.max(s);
        }
        if let Some(o) = outcome.ops {
            ops.push(o);
        }
    }
    Ok((
        next,
        LayerOutcome {
            max_sigma: cfg.collect_stability.then_some(max_sigma),
            ops,
        },
    ))
}

struct LayerOutcome {
    max_sigma: Option<f64>,
    ops: Vec<Arc<TentOperators>>,
}

/// Project the initial data and sweep all layers of the slab.
pub fn run(
    mesh: &SpatialMesh,
    sys: &SystemDef,
    slab: &TentSlab,
    p: usize,
    cfg: &RunConfig,
    u0: impl Fn(Point) -> DVector<f64>,
) -> Result<RunResult> {
    cfg.stepper.validate()?;
    let start = Instant::now();
    let space = DgSpace::build(mesh, p);
    let tables = SystemTables::build(mesh, &space, sys);
    let mut solution = project_initial(mesh, &space, sys, u0);
    let mut front_norms = vec![front_norm(mesh, sys, &slab.fronts[0], &solution)?];
    let mut max_sigma: f64 = 0.0;
    for (i, layer) in slab.layers.iter().enumerate() {
        let (next, outcome) =
            advance_layer_inner(mesh, &space, &tables, sys, &solution, layer, cfg, None, false)
                .map_err(|e| annotate_layer(e, i))?;
        solution = next;
        if let Some(s) = outcome.max_sigma {
            max_sigma = max_sigma.max(s);
        }
        front_norms.push(front_norm(mesh, sys, &slab.fronts[i + 1], &solution)?);
    }
    Ok(RunResult {
        solution,
        front_norms,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        tent_count: slab.n_tents(),
        max_stability: cfg.collect_stability.then_some(max_sigma),
    })
}

/// Run a tiled schedule: the slab is replayed with cached tent operators,
/// since the operators depend only on front differences and are invariant
/// under time translation.
pub fn run_tiled(
    mesh: &SpatialMesh,
    sys: &SystemDef,
    schedule: &SlabSchedule,
    p: usize,
    cfg: &RunConfig,
    u0: impl Fn(Point) -> DVector<f64>,
) -> Result<RunResult> {
    cfg.stepper.validate()?;
    let start = Instant::now();
    let slab = schedule.slab;
    let space = DgSpace::build(mesh, p);
    let tables = SystemTables::build(mesh, &space, sys);
    let mut solution = project_initial(mesh, &space, sys, u0);
    let mut front_norms = vec![front_norm(mesh, sys, &slab.fronts[0], &solution)?];
    let mut max_sigma: f64 = 0.0;
    let mut cache: Vec<Vec<Arc<TentOperators>>> = Vec::new();
    for rep in 0..schedule.n_slabs {
        for (i, layer) in slab.layers.iter().enumerate() {
            let cached = if rep > 0 { Some(cache[i].as_slice()) } else { None };
            let (next, outcome) = advance_layer_inner(
                mesh,
                &space,
                &tables,
                sys,
                &solution,
                layer,
                cfg,
                cached,
                rep == 0,
            )
            .map_err(|e| annotate_layer(e, i))?;
            solution = next;
            if rep == 0 {
                cache.push(outcome.ops);
            }
            if let Some(s) = outcome.max_sigma {
                max_sigma = max_sigma.max(s);
            }
            front_norms.push(front_norm(mesh, sys, &slab.fronts[i + 1], &solution)?);
        }
    }
    Ok(RunResult {
        solution,
        front_norms,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        tent_count: schedule.total_tents(),
        max_stability: cfg.collect_stability.then_some(max_sigma),
    })
}

fn annotate_layer(e: Error, layer: usize) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("layer {layer}: {msg}")),
        other => other,
    }
}

/// Front norm `(∫ [g(w) - f(w) grad phi] . w)^{1/2}`. The integrand is
/// blockwise exact for the orthonormal basis: per element and scalar basis
/// function, the coefficient vector is contracted with
/// `G - sum_j d_j(phi) L^j`. Flat fronts reduce to the weighted L2 norm.
pub fn front_norm(
    mesh: &SpatialMesh,
    sys: &SystemDef,
    front: &Front,
    solution: &FrontSolution,
) -> Result<f64> {
    let l_dim = solution.n_comp;
    let nb = solution.nb;
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let grad = mesh.element_gradient(k, |v| front.phi[v]);
        let coeffs = sys.coeffs(k);
        let mut blk = coeffs.g.clone();
        for j in 0..mesh.dim {
            blk -= grad[j] * &coeffs.l[j];
        }
        let block = solution.element_block(k);
        for a in 0..nb {
            let c = &block[a * l_dim..(a + 1) * l_dim];
            for i in 0..l_dim {
                for j in 0..l_dim {
                    total += c[i] * blk[(i, j)] * c[j];
                }
            }
        }
    }
    if total < -1e-10 {
        return Err(Error::Causality(format!(
            "front norm quadratic form is negative: {total}"
        )));
    }
    Ok(total.max(0.0).sqrt())
}

/// Per-patch front norm restricted to a tent (used in additivity checks).
pub fn front_norm_on_elements(
    mesh: &SpatialMesh,
    sys: &SystemDef,
    front: &Front,
    solution: &FrontSolution,
    elements: &[usize],
) -> f64 {
    let l_dim = solution.n_comp;
    let nb = solution.nb;
    let mut total = 0.0;
    for &k in elements {
        let grad = mesh.element_gradient(k, |v| front.phi[v]);
        let coeffs = sys.coeffs(k);
        let mut blk = coeffs.g.clone();
        for j in 0..mesh.dim {
            blk -= grad[j] * &coeffs.l[j];
        }
        let block = solution.element_block(k);
        for a in 0..nb {
            let c = &block[a * l_dim..(a + 1) * l_dim];
            for i in 0..l_dim {
                for j in 0..l_dim {
                    total += c[i] * blk[(i, j)] * c[j];
                }
            }
        }
    }
    total
}

/// Plain L2 distance between the discrete solution and a reference field,
/// with oversampled quadrature.
pub fn l2_error_at_t(
    mesh: &SpatialMesh,
    space: &DgSpace,
    solution: &FrontSolution,
    exact: impl Fn(Point) -> DVector<f64>,
) -> f64 {
    let nb = space.nb;
    let l_dim = solution.n_comp;
    let degree = 2 * space.p + 4;
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let (pts, wts) = element_quadrature(mesh, k, degree);
        let vals = space.elements[k].basis.values(&pts);
        let block = solution.element_block(k);
        for (q, &x) in pts.iter().enumerate() {
            let ex = exact(x);
            for c in 0..l_dim {
                let mut uh = 0.0;
                for a in 0..nb {
                    uh += block[a * l_dim + c] * vals[(q, a)];
                }
                let diff = uh - ex[c];
                total += wts[q] * diff * diff;
            }
        }
    }
    total.sqrt()
}

/// Evaluate the discrete solution at a point of a given element.
pub fn eval_solution(
    space: &DgSpace,
    solution: &FrontSolution,
    elem: usize,
    x: Point,
) -> DVector<f64> {
    let vals = space.elements[elem].basis.values(&[x]);
    let block = solution.element_block(elem);
    let l_dim = solution.n_comp;
    DVector::from_fn(l_dim, |c, _| {
        (0..space.nb).map(|a| block[a * l_dim + c] * vals[(0, a)]).sum()
    })
}
