//! One-off diagnostic: how fast does the ideal reference run steepen its
//! wall-normal tangential gradients for different smooth-random data sizes?
//!
//! For each (modes, amplitude) candidate the ideal variant runs to t = 1
//! and prints the wall traction defect and the near-wall shear profile at
//! checkpoints, exposing whether the wall feature stays grid-resolved.

use std::collections::BTreeMap;
use std::time::Instant;

use mhd_core::boundary::{self, WallLaw};
use mhd_core::field::VectorField;
use mhd_core::solver::{self, SimConfig, Variant};

fn config(modes: f64, amplitude: f64) -> SimConfig {
    let mut ic_params = BTreeMap::new();
    ic_params.insert("modes".to_string(), modes);
    ic_params.insert("amplitude".to_string(), amplitude);
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
        checkpoint_times: vec![0.25, 0.5, 1.0],
        regularity_order: 2,
        sample_stride: 8,
    }
}

fn defect_rms(f: &VectorField, law: WallLaw) -> (f64, f64) {
    let d = boundary::traction_defect(f, law);
    let rms = |per_comp: &Vec<Vec<f64>>| -> f64 {
        let vals = &per_comp[0];
        (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt()
    };
    (rms(&d.lower), rms(&d.upper))
}

/// Per-z rms of d_z v_tan (one-sided second order at walls).
fn dz_rms(f: &VectorField) -> Vec<f64> {
    let nz = f.grid().n_normal();
    let n_lines = f.grid().n_lines();
    let h = 1.0 / (nz as f64 - 1.0);
    let mut out = vec![0.0f64; nz];
    for line in f.comp(0).chunks_exact(nz) {
        for iz in 0..nz {
            let d = if iz == 0 {
                (-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * h)
            } else if iz == nz - 1 {
                (3.0 * line[nz - 1] - 4.0 * line[nz - 2] + line[nz - 3]) / (2.0 * h)
            } else {
                (line[iz + 1] - line[iz - 1]) / (2.0 * h)
            };
            out[iz] += d * d;
        }
    }
    for v in out.iter_mut() {
        *v = (*v / n_lines as f64).sqrt();
    }
    out
}

fn main() {
    let law = WallLaw::Navier { zeta: 0.5 };
    let candidates: &[(f64, f64)] = &[(2.0, 0.25), (1.0, 0.5), (1.0, 0.25)];
    for &(modes, amp) in candidates {
        let cfg = config(modes, amp);
        let ic = solver::initial_condition(&cfg).expect("ic");
        let (l0, u0) = defect_rms(&ic.v, law);
        println!("[cand m={modes} a={amp}] chi(0) lower={l0:.4e} upper={u0:.4e}");
        let t0 = Instant::now();
        let out = solver::run(&cfg).expect("run");
        for snap in &out.snapshots {
            let (l, u) = defect_rms(&snap.v, law);
            println!(
                "[cand m={modes} a={amp}] chi({:.2}) lower={l:.4e} upper={u:.4e}",
                snap.t
            );
            let prof = dz_rms(&snap.v);
            let head: Vec<String> = prof[..12].iter().map(|v| format!("{v:.3e}")).collect();
            println!(
                "[cand m={modes} a={amp}] t={:.2} dz v_tan nodes 0..12: {}",
                snap.t,
                head.join(" ")
            );
        }
        eprintln!("[t] m={modes} a={amp}: {}s", t0.elapsed().as_secs());
    }
}
