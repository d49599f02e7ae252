//! One-off diagnostic: decompose the dissipative-vs-ideal difference field
//! into wall-layer and interior contributions at two ladder points.
//!
//! Prints per-z rms profiles of the difference and of its z-derivative,
//! wall traction defects of both runs, and region-split gradient norms.

use std::collections::BTreeMap;
use std::time::Instant;

use mhd_core::boundary::{self, WallLaw};
use mhd_core::field::VectorField;
use mhd_core::solver::{self, FieldState, SimConfig, Variant};

fn config(epsilon: f64, variant: Variant) -> SimConfig {
    let amplitude: f64 = std::env::var("ANATOMY_AMPLITUDE")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.5);
    let mut ic_params = BTreeMap::new();
    ic_params.insert("amplitude".to_string(), amplitude);
    SimConfig {
        dim: 2,
        n_tangential: 32,
        n_normal: 257,
        epsilon,
        zeta: 0.5,
        dt: 1.25e-4,
        t_end: 0.5,
        variant,
        ic_name: "random-smooth".to_string(),
        ic_params,
        checkpoint_times: vec![0.5],
        regularity_order: 2,
        sample_stride: 8,
    }
}

fn final_state(cfg: &SimConfig) -> FieldState {
    let out = solver::run(cfg).expect("run");
    out.snapshots.into_iter().last().expect("snapshot")
}

/// Per-z rms over lines of one component.
fn rms_profile(f: &VectorField, comp: usize) -> Vec<f64> {
    let nz = f.grid().n_normal();
    let n_lines = f.grid().n_lines();
    let mut out = vec![0.0f64; nz];
    for line in f.comp(comp).chunks_exact(nz) {
        for (iz, v) in line.iter().enumerate() {
            out[iz] += v * v;
        }
    }
    for v in out.iter_mut() {
        *v = (*v / n_lines as f64).sqrt();
    }
    out
}

/// Per-z rms of the z-derivative of one component (centered interior,
/// one-sided second-order at the walls; no ghost laws involved).
fn dz_rms_profile(f: &VectorField, comp: usize) -> Vec<f64> {
    let nz = f.grid().n_normal();
    let n_lines = f.grid().n_lines();
    let h = 1.0 / (nz as f64 - 1.0);
    let mut out = vec![0.0f64; nz];
    for line in f.comp(comp).chunks_exact(nz) {
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

/// Quad-weighted region split of sum_c integral |d_z f_c|^p over
/// z < cut, cut <= z <= 1-cut, z > 1-cut.
fn dz_region_split(f: &VectorField, cut: f64, p: f64) -> (f64, f64, f64) {
    let nz = f.grid().n_normal();
    let n_lines = f.grid().n_lines();
    let h = 1.0 / (nz as f64 - 1.0);
    let dx_meas = 1.0 / n_lines as f64; // normalized tangential measure
    let (mut lo, mut mid, mut hi) = (0.0, 0.0, 0.0);
    for c in 0..f.dim() {
        for line in f.comp(c).chunks_exact(nz) {
            for iz in 0..nz {
                let d = if iz == 0 {
                    (-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * h)
                } else if iz == nz - 1 {
                    (3.0 * line[nz - 1] - 4.0 * line[nz - 2] + line[nz - 3]) / (2.0 * h)
                } else {
                    (line[iz + 1] - line[iz - 1]) / (2.0 * h)
                };
                let w = if iz == 0 || iz == nz - 1 { 0.5 } else { 1.0 } * h * dx_meas;
                let z = iz as f64 * h;
                let val = d.abs().powf(p) * w;
                if z < cut {
                    lo += val;
                } else if z > 1.0 - cut {
                    hi += val;
                } else {
                    mid += val;
                }
            }
        }
    }
    (lo, mid, hi)
}

/// rms of the tangential-component traction defect on each wall.
fn defect_rms(f: &VectorField, law: WallLaw) -> (f64, f64) {
    let d = boundary::traction_defect(f, law);
    let rms = |per_comp: &Vec<Vec<f64>>| -> f64 {
        // component 0 is tangential in 2D
        let vals = &per_comp[0];
        (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt()
    };
    (rms(&d.lower), rms(&d.upper))
}

fn main() {
    let t0 = Instant::now();
    let law = WallLaw::Navier { zeta: 0.5 };
    let ic = solver::initial_condition(&config(0.0, Variant::Ideal)).expect("ic");
    let (d0l, d0u) = defect_rms(&ic.v, law);
    println!("[chi0] initial-state defect rms lower={d0l:.4e} upper={d0u:.4e}");

    let ideal = final_state(&config(0.0, Variant::Ideal));
    eprintln!("[t] ideal run {}s", t0.elapsed().as_secs());

    for &eps in &[2.5e-3f64, 6.25e-4] {
        let t1 = Instant::now();
        let visc = final_state(&config(eps, Variant::Viscous));
        eprintln!("[t] eps={eps:.2e} run {}s", t1.elapsed().as_secs());

        let (dl_i, du_i) = defect_rms(&ideal.v, law);
        let (dl_v, du_v) = defect_rms(&visc.v, law);
        println!(
            "[chi] eps={eps:.2e} ideal defect rms lower={dl_i:.4e} upper={du_i:.4e} ; \
             viscous lower={dl_v:.4e} upper={du_v:.4e}"
        );
        let delta = (eps * 0.5f64).sqrt();
        println!(
            "[chi] predicted weak-layer amplitude 1.128*chi*delta: lower={:.4e} upper={:.4e} (delta={delta:.4e})",
            1.128 * dl_i * delta,
            1.128 * du_i * delta
        );

        let diff = visc.v.difference(&ideal.v).expect("diff");
        let hdiff = visc.h.difference(&ideal.h).expect("hdiff");

        let nz = diff.grid().n_normal();
        let h = 1.0 / (nz as f64 - 1.0);
        let r0 = rms_profile(&diff, 0);
        let r1 = rms_profile(&diff, 1);
        let g0 = dz_rms_profile(&diff, 0);
        let g1 = dz_rms_profile(&diff, 1);
        for iz in 0..nz {
            let z = iz as f64 * h;
            if z <= 0.12 || z >= 0.88 || iz % 16 == 0 {
                println!(
                    "[prof] {eps:.2e} {z:.6} {:.4e} {:.4e} {:.4e} {:.4e}",
                    r0[iz], r1[iz], g0[iz], g1[iz]
                );
            }
        }

        // Region splits of the squared gradient (p=2) and 4th power (p=4),
        // with the cut at 3 predicted layer widths.
        let cut = 3.0 * delta;
        let (lo2, mid2, hi2) = dz_region_split(&diff, cut, 2.0);
        let (lo4, mid4, hi4) = dz_region_split(&diff, cut, 4.0);
        println!(
            "[split] v eps={eps:.2e} cut={cut:.4} dz^2: lo={lo2:.4e} mid={mid2:.4e} hi={hi2:.4e} ; \
             dz^4: lo={lo4:.4e} mid={mid4:.4e} hi={hi4:.4e}"
        );
        let (hlo2, hmid2, hhi2) = dz_region_split(&hdiff, cut, 2.0);
        println!("[split] h eps={eps:.2e} dz^2: lo={hlo2:.4e} mid={hmid2:.4e} hi={hhi2:.4e}");
    }
    eprintln!("[t] total {}s", t0.elapsed().as_secs());
}
