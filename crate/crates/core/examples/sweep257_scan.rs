//! Scratch scan: ladder sweeps at doubled wall-normal resolution, plus a
//! tangential-resolution cross-check and full layer-profile dumps.

use std::collections::BTreeMap;
use std::time::Instant;

use mhd_core::harness;
use mhd_core::norms;
use mhd_core::solver::{self, SimConfig, Variant};

fn cfg(
    n_t: usize,
    n_z: usize,
    epsilon: f64,
    zeta: f64,
    dt: f64,
    t_end: f64,
    variant: Variant,
    ic: &str,
) -> SimConfig {
    SimConfig {
        dim: 2,
        n_tangential: n_t,
        n_normal: n_z,
        epsilon,
        zeta,
        dt,
        t_end,
        variant,
        ic_name: ic.to_string(),
        ic_params: BTreeMap::new(),
        checkpoint_times: Vec::new(),
        regularity_order: 2,
        sample_stride: 8,
    }
}

fn main() {
    let t_all = Instant::now();

    // ---- Block 0: does 32 tangential resolve the same dynamics as 48? ----
    {
        let t0 = Instant::now();
        let mut norms_of = |n_t: usize| -> Vec<f64> {
            let mut c = cfg(n_t, 257, 1e-2, 0.5, 1.25e-4, 0.25, Variant::Viscous, "random-smooth");
            c.checkpoint_times = vec![0.25];
            let out = solver::run(&c).unwrap();
            let v = &out.snapshots[0].v;
            let table = norms::norm_table(v, &[4.0]).unwrap();
            vec![table["l2"], table["h1"], table["linf"], table["w1p4"]]
        };
        let a = norms_of(32);
        let b = norms_of(48);
        for (i, name) in ["l2", "h1", "linf", "w1p4"].iter().enumerate() {
            println!(
                "[tan] {name}: 32t={:.9e} 48t={:.9e} rel={:.3e}",
                a[i],
                b[i],
                (a[i] - b[i]).abs() / b[i]
            );
        }
        println!("[tan] block time {:.0}s", t0.elapsed().as_secs_f64());
    }

    // ---- Block A: criteria 4/5/6 sweep at 32x257 ----
    {
        let t0 = Instant::now();
        let base = cfg(32, 257, 1e-2, 0.5, 1.25e-4, 1.0, Variant::Viscous, "random-smooth");
        let result = harness::epsilon_sweep(
            &base,
            &harness::DEFAULT_EPSILONS,
            &[harness::DEFAULT_COMPARE_TIME],
            None,
        )
        .unwrap();
        println!("[c4] sweep wall time {:.0}s", t0.elapsed().as_secs_f64());
        for norm in harness::SWEEP_NORMS {
            let pts: Vec<(f64, f64)> = result
                .rows
                .iter()
                .filter(|r| r.norm == norm)
                .map(|r| (r.epsilon, r.v_error))
                .collect();
            let fit = harness::fit_rate(&pts).unwrap();
            let hpts: Vec<(f64, f64)> = result
                .rows
                .iter()
                .filter(|r| r.norm == norm)
                .map(|r| (r.epsilon, r.h_error))
                .collect();
            let hfit = harness::fit_rate(&hpts).unwrap();
            println!(
                "[c4] {norm}: v slope={:.3} (r2={:.4}) h slope={:.3}; v errors={:?} h errors={:?}",
                fit.slope,
                fit.r_squared,
                hfit.slope,
                pts.iter().map(|p| p.1).collect::<Vec<_>>(),
                hpts.iter().map(|p| p.1).collect::<Vec<_>>()
            );
        }
        let viols = harness::monotonicity_violations(&result.rows);
        println!("[c4] monotonicity violations: {}", viols.len());
        for m in &viols {
            println!("[c4]   {m}");
        }
        let n_sups: Vec<f64> = result.dissipation.iter().map(|d| d.n_sup).collect();
        let g2: Vec<f64> = result.dissipation.iter().map(|d| d.run_v_grad2).collect();
        println!("[c5] n_sup={n_sups:?}");
        println!(
            "[c5] n_sup band={:.3}",
            n_sups.iter().fold(0.0f64, |a, &b| a.max(b))
                / n_sups.iter().fold(f64::INFINITY, |a, &b| a.min(b))
        );
        println!("[c5] run_v_grad2={g2:?} (largest-eps value {:.3e})", g2[0]);
        let ratios: Vec<f64> = result.pressure.iter().map(|p| p.ratio).collect();
        println!(
            "[c6] ratios={ratios:?} band={:.3}",
            ratios.iter().fold(0.0f64, |a, &b| a.max(b))
                / ratios.iter().fold(f64::INFINITY, |a, &b| a.min(b))
        );
    }

    // ---- Block B: criterion 8 ladder with full profile dumps ----
    {
        let t0 = Instant::now();
        let base = cfg(48, 257, 1e-2, 0.5, 1.5625e-4, 0.5, Variant::Viscous, "random-smooth");
        let (rows, profiles) =
            harness::layer_sweep(&base, &harness::DEFAULT_EPSILONS, 0.5).unwrap();
        println!("[c8] layer sweep wall time {:.0}s", t0.elapsed().as_secs_f64());
        for r in &rows {
            println!(
                "[c8] eps={:.2e} amp={:.4e} width={:.4e} scaled_amp={:.4} scaled_width={:.4}",
                r.epsilon, r.amplitude, r.width, r.scaled_amplitude, r.scaled_width
            );
        }
        for p in &profiles {
            for (i, (&z, &rms)) in p.z.iter().zip(&p.rms).enumerate() {
                if z <= 0.3 || z >= 0.7 || i % 8 == 0 {
                    println!("[c8prof] {:.6e},{:.9e},{:.9e}", p.epsilon, z, rms);
                }
            }
        }
    }

    println!("total scan time {:.0}s", t_all.elapsed().as_secs_f64());
}
