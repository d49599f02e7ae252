//! One-off diagnostic: which operator injects the grid-scale wall sawtooth
//! into the ideal tendency?
//!
//! Evaluates the ideal-variant tendency pieces on a smooth initial state and
//! measures, for each piece, how far its tangential component at the first
//! two wall nodes deviates from the quartic continuation of the interior
//! values (nodes 2..=6). A smooth field has deviation O(h^5); a sawtooth
//! injection shows up as an O(1)-vs-h deviation with a node-1/node-0 ratio
//! near -1/2.

use std::collections::BTreeMap;

use mhd_core::field::VectorField;
use mhd_core::leray::LerayProjector;
use mhd_core::ops;
use mhd_core::solver::{self, SimConfig, Variant};

fn config() -> SimConfig {
    let mut ic_params = BTreeMap::new();
    ic_params.insert("modes".to_string(), 1.0);
    ic_params.insert("amplitude".to_string(), 0.25);
    SimConfig {
        dim: 2,
        n_tangential: 32,
        n_normal: 257,
        epsilon: 0.0,
        zeta: 0.5,
        dt: 1.25e-4,
        t_end: 1.0,
        variant: Variant::Ideal,
        ic_name: "random-smooth".to_string(),
        ic_params,
        checkpoint_times: vec![],
        regularity_order: 2,
        sample_stride: 8,
    }
}

/// rms over lines of the deviation of nodes 0 and 1 (from each wall) from
/// the quartic extrapolation of nodes 2..=6 (counted from that wall).
fn sawtooth_residual(f: &VectorField, comp: usize) -> [(f64, f64); 2] {
    let nz = f.grid().n_normal();
    let n_lines = f.grid().n_lines();
    let mut acc = [(0.0f64, 0.0f64); 2]; // [wall][node 0/1] sums of squares
    for line in f.comp(comp).chunks_exact(nz) {
        for (w, idx) in [(0usize, [2usize, 3, 4, 5, 6]), (1, [nz - 3, nz - 4, nz - 5, nz - 6, nz - 7])] {
            let g = |i: usize| line[idx[i]];
            // Quartic through nodes at distances 2,3,4,5,6 from the wall,
            // evaluated at distances 0 and 1 (Lagrange coefficients).
            let at0 = 15.0 * g(0) - 40.0 * g(1) + 45.0 * g(2) - 24.0 * g(3) + 5.0 * g(4);
            let at1 = 5.0 * g(0) - 10.0 * g(1) + 10.0 * g(2) - 5.0 * g(3) + g(4);
            let (n0, n1) = if w == 0 {
                (line[0], line[1])
            } else {
                (line[nz - 1], line[nz - 2])
            };
            let (d0, d1) = (n0 - at0, n1 - at1);
            acc[w].0 += d0 * d0;
            acc[w].1 += d1 * d1;
        }
    }
    let m = n_lines as f64;
    [
        ((acc[0].0 / m).sqrt(), (acc[0].1 / m).sqrt()),
        ((acc[1].0 / m).sqrt(), (acc[1].1 / m).sqrt()),
    ]
}

/// Signed mean residuals (to read off the node1/node0 ratio with sign).
fn sawtooth_signed(f: &VectorField, comp: usize) -> [(f64, f64); 2] {
    let nz = f.grid().n_normal();
    let n_lines = f.grid().n_lines();
    let mut acc = [(0.0f64, 0.0f64); 2];
    for line in f.comp(comp).chunks_exact(nz) {
        for (w, idx) in [(0usize, [2usize, 3, 4, 5, 6]), (1, [nz - 3, nz - 4, nz - 5, nz - 6, nz - 7])] {
            let g = |i: usize| line[idx[i]];
            let at0 = 15.0 * g(0) - 40.0 * g(1) + 45.0 * g(2) - 24.0 * g(3) + 5.0 * g(4);
            let at1 = 5.0 * g(0) - 10.0 * g(1) + 10.0 * g(2) - 5.0 * g(3) + g(4);
            let (n0, n1) = if w == 0 {
                (line[0], line[1])
            } else {
                (line[nz - 1], line[nz - 2])
            };
            // Correlate against node-0 sign so lines do not cancel.
            let s = (n0 - at0).signum();
            acc[w].0 += s * (n0 - at0);
            acc[w].1 += s * (n1 - at1);
        }
    }
    let m = n_lines as f64;
    [
        (acc[0].0 / m, acc[0].1 / m),
        (acc[1].0 / m, acc[1].1 / m),
    ]
}

fn report(label: &str, f: &VectorField) {
    let r = sawtooth_residual(f, 0);
    let s = sawtooth_signed(f, 0);
    println!(
        "[saw] {label:<22} lower rms=({:.3e}, {:.3e}) ratio={:+.3} ; upper rms=({:.3e}, {:.3e}) ratio={:+.3}",
        r[0].0,
        r[0].1,
        s[0].1 / s[0].0,
        r[1].0,
        r[1].1,
        s[1].1 / s[1].0,
    );
}

fn main() {
    let cfg = config();
    let ic = solver::initial_condition(&cfg).expect("ic");
    let grid = ic.v.grid().clone();
    let projector = LerayProjector::new(&grid);

    report("state v", &ic.v);

    let vv = ops::advect_skew(&ic.v, &ic.v).expect("vv");
    let hh = ops::advect_skew(&ic.h, &ic.h).expect("hh");
    report("advect_skew(v,v)", &vv);
    report("advect_skew(h,h)", &hh);

    let mut pre = hh.clone();
    pre.add_scaled(&vv, -1.0);
    report("pre-projection", &pre);

    let post = projector.project(&pre).expect("project");
    report("post-projection", &post);

    // Dissect advect_skew(v,v) into its tangential-axis and z-axis parts.
    let dim = grid.dim();
    let nz = grid.n_normal();
    let mut zpart = VectorField::zeros(&grid);
    let mut prod = vec![0.0; grid.n_nodes()];
    for c in 0..dim {
        let dw = {
            let mut out = vec![0.0; grid.n_nodes()];
            for (src, dst) in ic.v.comp(c).chunks_exact(nz).zip(out.chunks_exact_mut(nz)) {
                let h = grid.h_normal();
                let n = src.len();
                dst[0] = (src[1] - src[0]) / h;
                for i in 1..n - 1 {
                    dst[i] = (src[i + 1] - src[i - 1]) / (2.0 * h);
                }
                dst[n - 1] = (src[n - 1] - src[n - 2]) / h;
            }
            out
        };
        let ua = ic.v.comp(dim - 1);
        for ((p, x), y) in prod.iter_mut().zip(ua).zip(ic.v.comp(c)) {
            *p = x * y;
        }
        let dprod = {
            let mut out = vec![0.0; grid.n_nodes()];
            for (src, dst) in prod.chunks_exact(nz).zip(out.chunks_exact_mut(nz)) {
                let h = grid.h_normal();
                let n = src.len();
                dst[0] = (src[1] - src[0]) / h;
                for i in 1..n - 1 {
                    dst[i] = (src[i + 1] - src[i - 1]) / (2.0 * h);
                }
                dst[n - 1] = (src[n - 1] - src[n - 2]) / h;
            }
            out
        };
        let dst = zpart.comp_mut(c);
        for i in 0..dst.len() {
            dst[i] += 0.5 * (ua[i] * dw[i] + dprod[i]);
        }
    }
    report("z-axis skew part", &zpart);

    let mut xpart = vv.clone();
    xpart.add_scaled(&zpart, -1.0);
    report("tangential skew part", &xpart);

    // And the projection of the z-part alone.
    let pz = projector.project(&zpart).expect("project z");
    report("project(z-part)", &pz);
}
