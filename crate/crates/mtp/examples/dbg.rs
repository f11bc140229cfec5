use mtp::basis::DgSpace;
use mtp::driver::*;
use mtp::hypersys::*;
use mtp::mesh::*;
use mtp::pitch::*;
use mtp::steppers::StepperConfig;
use nalgebra::DVector;
use std::time::Instant;

// true Peterson bands: cells span the full band width
fn peterson_bands(n: usize, sigma: f64) -> SpatialMesh {
    let m = ((n as f64).powf(sigma).round() as usize).clamp(1, n);
    let base = n / m; let rem = n % m;
    let mut xs = vec![0.0f64];
    for b in 0..m {
        let w = base + usize::from(b < rem);
        xs.push(xs.last().unwrap() + w as f64 / n as f64);
    }
    let np_rows = n + 1;
    let mut vertices = Vec::new();
    let vid = |i: usize, j: usize| j * (m + 1) + i;
    for j in 0..np_rows {
        for &x in &xs { vertices.push([x, j as f64 / n as f64]); }
    }
    let mut elements = Vec::new();
    for j in 0..n {
        for i in 0..m {
            let bl = vid(i, j); let br = vid(i + 1, j);
            let tr = vid(i + 1, j + 1); let tl = vid(i, j + 1);
            if i % 2 == 0 {
                elements.push(vec![bl, br, tr]);
                elements.push(vec![bl, tr, tl]);
            } else {
                elements.push(vec![bl, br, tl]);
                elements.push(vec![br, tr, tl]);
            }
        }
    }
    let mut markers = Vec::new();
    for i in 0..m {
        markers.push((vec![vid(i,0), vid(i+1,0)], 0));
        markers.push((vec![vid(i,n), vid(i+1,n)], 2));
    }
    for j in 0..n {
        markers.push((vec![vid(m,j), vid(m,j+1)], 1));
        markers.push((vec![vid(0,j), vid(0,j+1)], 3));
    }
    SpatialMesh::new(2, vertices, elements, &markers).unwrap()
}

fn main() {
    for (p, sigma, gamma) in [(1usize, 0.75, 0.3), (1, 0.75, 0.2), (2, 0.75, 0.3), (2, 0.75, 0.2), (3, 0.75, 0.2)] {
        let mut prev: Option<f64> = None;
        for n in [8usize, 16, 32] {
            let t0 = Instant::now();
            let mesh = peterson_bands(n, sigma);
            let k = (p + 1) as i32;
            let data = move |x: [f64; 2]| x[0].powi(k);
            let sys = advection_system(&mesh, [0.0, 1.0], data);
            let slab = build_tent_slab(&mesh, &sys, 1.0, gamma).unwrap();
            let cfg = RunConfig { stepper: StepperConfig::Sat { s: p + 1, r: (2 * p).max(1) }, collect_stability: false };
            let result = run(&mesh, &sys, &slab, p, &cfg, move |x| DVector::from_element(1, data(x))).unwrap();
            let space = DgSpace::build(&mesh, p);
            let err = l2_error_at_t(&mesh, &space, &result.solution, move |x| DVector::from_element(1, data(x)));
            let eoc = prev.map(|e: f64| (e / err).log2()).unwrap_or(f64::NAN);
            println!("p={p} sigma={sigma} gamma={gamma} n={n}: elems={} shape={:.1} err={err:.4e} eoc={eoc:.3} {:.1}s",
                mesh.n_elements(), mesh.shape_regularity(), t0.elapsed().as_secs_f64());
            prev = Some(err);
        }
    }
}
