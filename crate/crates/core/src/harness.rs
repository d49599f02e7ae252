//! Experiment drivers: energy audits of recorded runs, viscosity-ladder
//! sweeps against a shared dissipation-free reference, log-log rate fits,
//! boundary-layer extraction, and the plot-ready CSV tables they produce.
//!
//! Ladder runs are embarrassingly parallel; a bounded worker pool (sized by
//! the `MHD_WORKERS` environment variable, defaulting to the machine's
//! available parallelism) executes them concurrently and the result tables
//! are assembled deterministically in ladder order regardless of completion
//! order.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::elliptic;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::norms::{self, LayerProfile};
use crate::ops;
use crate::records::RunRecord;
use crate::solver::{self, RunOutput, SimConfig, Variant};

/// Default viscosity ladder: geometric, spanning a full decade and a half
/// step, which keeps log-log fits well conditioned.
pub const DEFAULT_EPSILONS: [f64; 5] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];

/// Default comparison time for sweep error rows (with a horizon of 1.0).
pub const DEFAULT_COMPARE_TIME: f64 = 0.5;

/// Norm columns of the sweep error table, in row order.
pub const SWEEP_NORMS: [&str; 4] = ["l2", "h1", "linf", "w1p4"];

/// The Sobolev exponent behind the `w1p4` column.
const SOBOLEV_EXPONENT: f64 = 4.0;

/// Uniform intervals sampled for the time-integrated dissipation columns.
const INTEGRAL_INTERVALS: usize = 25;

/// Worker-pool size for ladder runs: `MHD_WORKERS` when set to a positive
/// integer, otherwise the machine's available parallelism.
pub fn worker_count() -> usize {
    std::env::var("MHD_WORKERS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Run `n` indexed jobs over a bounded worker pool, returning results in
/// index order regardless of completion order.
fn run_pool<T: Send, F: Fn(usize) -> T + Sync>(n: usize, job: F) -> Vec<T> {
    let workers = worker_count().min(n).max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = job(i);
                *slots[i].lock().expect("worker slot poisoned") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("worker slot poisoned")
                .expect("every job index was claimed")
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Energy audit
// ---------------------------------------------------------------------------

/// Result of checking the discrete energy balance of a recorded run.
///
/// For each interior sample the audit evaluates
/// `dE/dt + 2 eps (|Sv|^2 + |SH|^2) + 2 eps zeta OINT(|v_tau|^2 + |H_tau|^2)`
/// with a three-point slope of the recorded energy, and reports the result
/// relative to the scale of the balance: the largest magnitude any single
/// term attains, floored at `E(0) / duration` so that dissipation-free runs
/// are judged against their own energy budget rather than against noise.
#[derive(Debug, Clone)]
pub struct EnergyAudit {
    /// Times of the interior samples (the end samples have no slope).
    pub t: Vec<f64>,
    /// Relative residual of the balance at each interior sample.
    pub residual: Vec<f64>,
    pub max_residual: f64,
    pub rms_residual: f64,
    /// Normalization scale used for the relative residuals.
    pub scale: f64,
}

/// Audit the discrete energy balance of a recorded run at the stated
/// dissipation and friction coefficients. Needs at least 3 samples.
pub fn energy_audit(record: &RunRecord, epsilon: f64, zeta: f64) -> Result<EnergyAudit> {
    record.validate()?;
    let s = &record.series;
    let n = s.t.len();
    if n < 3 {
        return Err(Error::Usage(format!(
            "energy audit needs at least 3 samples, got {n}"
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 || !zeta.is_finite() {
        return Err(Error::Usage(format!(
            "energy audit needs finite epsilon >= 0 and finite zeta, got {epsilon} and {zeta}"
        )));
    }

    let diss: Vec<f64> = (0..n)
        .map(|i| 2.0 * epsilon * (s.strain_v_sq[i] + s.strain_h_sq[i]))
        .collect();
    let wall: Vec<f64> = (0..n)
        .map(|i| 2.0 * epsilon * zeta * s.wall_flux[i])
        .collect();

    let duration = s.t[n - 1] - s.t[0];
    let mut scale = (s.energy[0] / duration).abs();
    let mut slopes = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let slope = three_point_slope(
            s.t[i - 1],
            s.t[i],
            s.t[i + 1],
            s.energy[i - 1],
            s.energy[i],
            s.energy[i + 1],
        );
        scale = scale.max(slope.abs()).max(diss[i]).max(wall[i].abs());
        slopes.push(slope);
    }
    if scale == 0.0 {
        scale = 1.0; // all-zero record: report absolute residuals
    }

    let mut t = Vec::with_capacity(n - 2);
    let mut residual = Vec::with_capacity(n - 2);
    let mut max_residual = 0.0f64;
    let mut sum_sq = 0.0;
    for (k, i) in (1..n - 1).enumerate() {
        let r = (slopes[k] + diss[i] + wall[i]).abs() / scale;
        max_residual = max_residual.max(r);
        sum_sq += r * r;
        t.push(s.t[i]);
        residual.push(r);
    }
    let rms_residual = (sum_sq / (n - 2) as f64).sqrt();
    Ok(EnergyAudit {
        t,
        residual,
        max_residual,
        rms_residual,
        scale,
    })
}

/// Three-point derivative at the middle node of a (possibly nonuniform)
/// stencil; exact on quadratics.
fn three_point_slope(t0: f64, t1: f64, t2: f64, e0: f64, e1: f64, e2: f64) -> f64 {
    let a = t1 - t0;
    let b = t2 - t1;
    (e2 * a * a - e0 * b * b + e1 * (b * b - a * a)) / (a * b * (a + b))
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

/// Least-squares fit of `log(error)` against `log(epsilon)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RateFit {
    /// Fitted log-log exponent.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    /// Number of points used.
    pub points: usize,
}

/// Fit a power law through `(epsilon, error)` samples. Requires at least 3
/// points with positive, finite coordinates; a non-positive error value is
/// rejected because it means the measurement sits at or below the
/// floating-point floor and the caller must raise resolution instead.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Usage(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(eps, err) in points {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Usage(format!(
                "rate fit needs positive finite epsilon values, got {eps}"
            )));
        }
        if !(err.is_finite() && err > 0.0) {
            return Err(Error::Usage(format!(
                "rate fit needs positive error values, got {err}; a vanishing \
                 error means the measurement is at the floating-point floor — \
                 raise resolution"
            )));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Usage(
            "rate fit needs at least two distinct epsilon values".to_string(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.len(),
    })
}

// ---------------------------------------------------------------------------
// Viscosity-ladder sweep
// ---------------------------------------------------------------------------

/// One error-table row: both field errors in one norm at one
/// `(epsilon, time)` pair, measured against the shared dissipation-free
/// reference run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub time: f64,
    pub norm: String,
    pub v_error: f64,
    pub h_error: f64,
}

/// Per-ladder-entry integrated dissipation and regularity summary.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DissipationRow {
    pub epsilon: f64,
    /// `eps * INT ||v_eps - v_ref||_{H1}^2 dt` over the run horizon.
    pub diff_v_h1: f64,
    pub diff_h_h1: f64,
    /// `eps * INT ||v_eps - v_ref||_{H2}^2 dt`.
    pub diff_v_h2: f64,
    pub diff_h_h2: f64,
    /// `eps * INT ||grad^2 v_eps||^2 dt` of the dissipative run itself.
    pub run_v_grad2: f64,
    /// Largest recorded order-m regularity budget over the run.
    pub n_sup: f64,
}

/// Pressure-scaling diagnostic at one `(epsilon, time)`: size of the
/// wall-driven pressure gradient against its dimensional estimate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PressureRow {
    pub epsilon: f64,
    pub time: f64,
    /// `||grad p_wall||` — gradient of the wall-driven pressure part.
    pub grad_p2: f64,
    /// `grad_p2 / (eps * (||v||_{H2} + ||grad v||_{H1}))`.
    pub ratio: f64,
}

/// Everything a ladder sweep produces.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Error rows: one per `(epsilon, compare time, norm)` in ladder order.
    pub rows: Vec<SweepRow>,
    pub dissipation: Vec<DissipationRow>,
    pub pressure: Vec<PressureRow>,
    /// Times at which states were captured for the time integrals.
    pub sample_times: Vec<f64>,
}

/// Reduction-order diagnostic: sweeps are expected (not guaranteed) to show
/// every error column non-increasing as the dissipation shrinks; violations
/// are returned as human-readable messages for logging.
pub fn monotonicity_violations(rows: &[SweepRow]) -> Vec<String> {
    let mut msgs = Vec::new();
    let mut keys: Vec<(f64, String)> = rows
        .iter()
        .map(|r| (r.time, r.norm.clone()))
        .collect();
    keys.sort_by(|a, b| a.partial_cmp(b).expect("finite keys"));
    keys.dedup();
    for (time, norm) in keys {
        let mut group: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.time == time && r.norm == norm)
            .collect();
        group.sort_by(|a, b| b.epsilon.partial_cmp(&a.epsilon).expect("finite eps"));
        for pair in group.windows(2) {
            for (field, hi, lo) in [
                ("v", pair[0].v_error, pair[1].v_error),
                ("h", pair[0].h_error, pair[1].h_error),
            ] {
                if lo > hi * (1.0 + 1e-9) {
                    msgs.push(format!(
                        "{norm} {field}-error increased from {hi:.6e} at eps={:.3e} \
                         to {lo:.6e} at eps={:.3e} (t={time})",
                        pair[0].epsilon, pair[1].epsilon
                    ));
                }
            }
        }
    }
    msgs
}

fn validate_ladder(epsilons: &[f64], minimum: usize) -> Result<()> {
    if epsilons.len() < minimum {
        return Err(Error::Usage(format!(
            "ladder needs at least {minimum} dissipation values, got {}",
            epsilons.len()
        )));
    }
    for &e in epsilons {
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::Usage(format!(
                "ladder values must be positive and finite, got {e}"
            )));
        }
    }
    Ok(())
}

/// Sample times shared by every run of a ladder: a uniform grid for the time
/// integrals plus the requested comparison times, snapped to whole steps.
fn ladder_sample_steps(base: &SimConfig, compare_times: &[f64]) -> Vec<usize> {
    let n_steps = base.n_steps();
    let mut steps: Vec<usize> = (0..=INTEGRAL_INTERVALS)
        .map(|i| {
            let t = base.t_end * i as f64 / INTEGRAL_INTERVALS as f64;
            ((t / base.dt).round() as usize).min(n_steps)
        })
        .collect();
    steps.extend(
        compare_times
            .iter()
            .map(|t| ((t / base.dt).round() as usize).min(n_steps)),
    );
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Run the shared reference plus one dissipative run per ladder entry, all
/// capturing states at the same steps. Index 0 of the result is the
/// reference; index `i + 1` belongs to `epsilons[i]`.
fn run_ladder(
    base: &SimConfig,
    epsilons: &[f64],
    sample_times: &[f64],
) -> Vec<Result<RunOutput>> {
    let mut cfgs = Vec::with_capacity(epsilons.len() + 1);
    let mut reference = base.clone();
    reference.variant = Variant::Ideal;
    reference.epsilon = 0.0;
    reference.checkpoint_times = sample_times.to_vec();
    cfgs.push(reference);
    for &eps in epsilons {
        let mut cfg = base.clone();
        cfg.variant = Variant::Viscous;
        cfg.epsilon = eps;
        cfg.checkpoint_times = sample_times.to_vec();
        cfgs.push(cfg);
    }
    run_pool(cfgs.len(), |i| solver::run(&cfgs[i]))
}

/// Squared Frobenius norm of the gradient (quadrature of all first
/// derivatives).
fn grad_sq(f: &VectorField) -> f64 {
    ops::gradient_tensor(f).frobenius_sq()
}

/// Quadrature of all second derivatives (full Hessian Frobenius norm,
/// squared, mixed entries counted from both orders).
fn grad2_sq(f: &VectorField) -> f64 {
    let grid = f.grid();
    let mut acc = 0.0;
    let mut sq = vec![0.0; grid.n_nodes()];
    for c in 0..grid.dim() {
        for b in 0..grid.dim() {
            let db = ops::derivative_axis(grid, f.comp(c), b);
            for a in 0..grid.dim() {
                let dab = ops::derivative_axis(grid, &db, a);
                for (s, v) in sq.iter_mut().zip(&dab) {
                    *s = v * v;
                }
                acc += grid.integrate(&sq);
            }
        }
    }
    acc
}

fn time_integral(ts: &[f64], vals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..ts.len() {
        acc += 0.5 * (vals[i] + vals[i - 1]) * (ts[i] - ts[i - 1]);
    }
    acc
}

/// Rows, integrals, and pressure diagnostics for one completed ladder entry.
fn assemble_entry(
    eps: f64,
    base: &SimConfig,
    out: &RunOutput,
    reference: &RunOutput,
    sample_steps: &[usize],
    compare_times: &[f64],
) -> Result<(Vec<SweepRow>, DissipationRow, Vec<PressureRow>)> {
    let m = sample_steps.len();
    if out.snapshots.len() != m || reference.snapshots.len() != m {
        return Err(Error::Numerical(format!(
            "ladder runs captured {} and {} states, expected {m}",
            out.snapshots.len(),
            reference.snapshots.len()
        )));
    }

    // Error rows at the comparison times.
    let mut rows = Vec::with_capacity(compare_times.len() * SWEEP_NORMS.len());
    for &ct in compare_times {
        let step = ((ct / base.dt).round() as usize).min(base.n_steps());
        let k = sample_steps
            .binary_search(&step)
            .expect("comparison times are part of the sample steps");
        let sv = &out.snapshots[k];
        let sr = &reference.snapshots[k];
        let v_err = norms::error_norms(&sv.v, &sr.v, &[SOBOLEV_EXPONENT])?;
        let h_err = norms::error_norms(&sv.h, &sr.h, &[SOBOLEV_EXPONENT])?;
        for name in SWEEP_NORMS {
            rows.push(SweepRow {
                epsilon: eps,
                time: sv.t,
                norm: name.to_string(),
                v_error: v_err[name],
                h_error: h_err[name],
            });
        }
    }

    // Time-integrated dissipation columns over every captured state.
    let ts: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
    let mut dv_h1 = Vec::with_capacity(m);
    let mut dh_h1 = Vec::with_capacity(m);
    let mut dv_h2 = Vec::with_capacity(m);
    let mut dh_h2 = Vec::with_capacity(m);
    let mut rv_g2 = Vec::with_capacity(m);
    for k in 0..m {
        let dv = out.snapshots[k].v.difference(&reference.snapshots[k].v)?;
        let dh = out.snapshots[k].h.difference(&reference.snapshots[k].h)?;
        let dv_l2 = dv.l2_norm();
        let dh_l2 = dh.l2_norm();
        let dv_g1 = grad_sq(&dv);
        let dh_g1 = grad_sq(&dh);
        let dv_g2 = grad2_sq(&dv);
        let dh_g2 = grad2_sq(&dh);
        dv_h1.push(dv_l2 * dv_l2 + dv_g1);
        dh_h1.push(dh_l2 * dh_l2 + dh_g1);
        dv_h2.push(dv_l2 * dv_l2 + dv_g1 + dv_g2);
        dh_h2.push(dh_l2 * dh_l2 + dh_g1 + dh_g2);
        rv_g2.push(grad2_sq(&out.snapshots[k].v));
    }
    let n_sup = out
        .record
        .regularity
        .iter()
        .fold(0.0f64, |acc, s| acc.max(s.value));
    let dissipation = DissipationRow {
        epsilon: eps,
        diff_v_h1: eps * time_integral(&ts, &dv_h1),
        diff_h_h1: eps * time_integral(&ts, &dh_h1),
        diff_v_h2: eps * time_integral(&ts, &dv_h2),
        diff_h_h2: eps * time_integral(&ts, &dh_h2),
        run_v_grad2: eps * time_integral(&ts, &rv_g2),
        n_sup,
    };

    // Pressure scaling at the comparison times.
    let mut pressure = Vec::with_capacity(compare_times.len());
    for &ct in compare_times {
        let step = ((ct / base.dt).round() as usize).min(base.n_steps());
        let k = sample_steps
            .binary_search(&step)
            .expect("comparison times are part of the sample steps");
        let st = &out.snapshots[k];
        let mut cfg = base.clone();
        cfg.variant = Variant::Viscous;
        cfg.epsilon = eps;
        let split = elliptic::pressure_split(&st.v, &st.h, eps, cfg.wall_law())?;
        let grad_p2 = ops::gradient(&split.viscous).l2_norm();
        let v_l2 = st.v.l2_norm();
        let v_g1 = grad_sq(&st.v);
        let v_g2 = grad2_sq(&st.v);
        let v_h2 = (v_l2 * v_l2 + v_g1 + v_g2).sqrt();
        let gv_h1 = (v_g1 + v_g2).sqrt();
        pressure.push(PressureRow {
            epsilon: eps,
            time: st.t,
            grad_p2,
            ratio: grad_p2 / (eps * (v_h2 + gv_h1)),
        });
    }

    Ok((rows, dissipation, pressure))
}

/// Run the viscosity ladder against a shared dissipation-free reference and
/// tabulate errors, integrated dissipation, and pressure scaling.
///
/// `base` supplies grid, step size, horizon, initial data, and the wall law;
/// its dissipation strength is overridden per run. All runs share the same
/// initial data and step policy. Requires at least 3 positive ladder values
/// spanning at least one decade.
///
/// When `persist_dir` is given, the tables are written there as CSV. If any
/// run fails, the tables assembled from the runs that did complete are
/// persisted with `.partial.csv` names and the first failure (in ladder
/// order, reference first) is returned as the error.
pub fn epsilon_sweep(
    base: &SimConfig,
    epsilons: &[f64],
    compare_times: &[f64],
    persist_dir: Option<&Path>,
) -> Result<SweepResult> {
    base.validate()?;
    if base.variant != Variant::Viscous {
        return Err(Error::Usage(
            "sweep base must use the dissipative variant; the reference run \
             is derived internally"
                .to_string(),
        ));
    }
    validate_ladder(epsilons, 3)?;
    let (lo, hi) = epsilons
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::Usage(format!(
            "ladder must span at least one decade, got {lo:e}..{hi:e}"
        )));
    }
    if compare_times.is_empty() {
        return Err(Error::Usage("no comparison times given".to_string()));
    }
    for &t in compare_times {
        if !(t.is_finite() && t > 0.0 && t <= base.t_end + 0.5 * base.dt) {
            return Err(Error::Usage(format!(
                "comparison time {t} outside (0, {}]",
                base.t_end
            )));
        }
    }

    let sample_steps = ladder_sample_steps(base, compare_times);
    let sample_times: Vec<f64> = sample_steps.iter().map(|&s| s as f64 * base.dt).collect();
    let mut outs = run_ladder(base, epsilons, &sample_times);

    let reference = outs.remove(0);
    let mut first_error: Option<Error> = None;
    let mut rows = Vec::new();
    let mut dissipation = Vec::new();
    let mut pressure = Vec::new();

    match reference {
        Ok(reference) => {
            for (i, out) in outs.into_iter().enumerate() {
                let assembled = out.and_then(|out| {
                    assemble_entry(
                        epsilons[i],
                        base,
                        &out,
                        &reference,
                        &sample_steps,
                        compare_times,
                    )
                });
                match assembled {
                    Ok((r, d, p)) => {
                        rows.extend(r);
                        dissipation.push(d);
                        pressure.extend(p);
                    }
                    Err(e) => {
                        if first_error.is_none() {
                            first_error = Some(e);
                        }
                    }
                }
            }
        }
        Err(e) => first_error = Some(e),
    }

    let result = SweepResult {
        rows,
        dissipation,
        pressure,
        sample_times,
    };
    match first_error {
        None => {
            if let Some(dir) = persist_dir {
                persist_sweep(dir, &result, false)?;
            }
            Ok(result)
        }
        Some(e) => {
            if let Some(dir) = persist_dir {
                persist_sweep(dir, &result, true)?;
            }
            Err(e)
        }
    }
}

// ---------------------------------------------------------------------------
// Boundary-layer ladder
// ---------------------------------------------------------------------------

/// Layer summary for one ladder entry (velocity field).
#[derive(Debug, Clone, serde::Serialize)]
pub struct LayerRow {
    pub epsilon: f64,
    pub amplitude: f64,
    pub width: f64,
    pub scaled_amplitude: f64,
    pub scaled_width: f64,
}

/// Extract near-wall correction profiles across a ladder: each dissipative
/// run is differenced against the shared reference at `time` and the
/// velocity profile is summarized. Returns one row and one full profile per
/// ladder entry, in ladder order.
pub fn layer_sweep(
    base: &SimConfig,
    epsilons: &[f64],
    time: f64,
) -> Result<(Vec<LayerRow>, Vec<LayerProfile>)> {
    base.validate()?;
    if base.variant != Variant::Viscous {
        return Err(Error::Usage(
            "layer sweep base must use the dissipative variant".to_string(),
        ));
    }
    validate_ladder(epsilons, 2)?;
    if !(time.is_finite() && time > 0.0 && time <= base.t_end + 0.5 * base.dt) {
        return Err(Error::Usage(format!(
            "extraction time {time} outside (0, {}]",
            base.t_end
        )));
    }
    let step = ((time / base.dt).round() as usize).min(base.n_steps());
    let sample_times = vec![step as f64 * base.dt];
    let outs = run_ladder(base, epsilons, &sample_times);
    let mut iter = outs.into_iter();
    let reference = iter.next().expect("reference job present")?;
    let mut rows = Vec::with_capacity(epsilons.len());
    let mut profiles = Vec::with_capacity(epsilons.len());
    for (i, out) in iter.enumerate() {
        let out = out?;
        let profile = norms::boundary_layer_profile(
            &out.snapshots[0].v,
            &reference.snapshots[0].v,
            epsilons[i],
        )?;
        rows.push(LayerRow {
            epsilon: epsilons[i],
            amplitude: profile.amplitude,
            width: profile.width,
            scaled_amplitude: profile.scaled_amplitude,
            scaled_width: profile.scaled_width,
        });
        profiles.push(profile);
    }
    Ok((rows, profiles))
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

fn open_out(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(fs::File::create(path)?)
}

/// Write the sweep error table.
/// Columns: `epsilon` (dissipation), `time` (comparison time), `norm` (one of
/// `l2|h1|linf|w1p4`), `v_error` and `h_error` (field errors against the
/// reference run in that norm).
pub fn write_error_table(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut f = open_out(path)?;
    writeln!(f, "epsilon,time,norm,v_error,h_error")?;
    for r in rows {
        writeln!(
            f,
            "{:e},{:e},{},{:e},{:e}",
            r.epsilon, r.time, r.norm, r.v_error, r.h_error
        )?;
    }
    Ok(())
}

/// Write the per-ladder-entry dissipation table.
/// Columns: `epsilon`; `diff_v_h1`, `diff_h_h1` (eps times the time integral
/// of the squared first-order Sobolev norm of the field difference);
/// `diff_v_h2`, `diff_h_h2` (same with second derivatives included);
/// `run_v_grad2` (eps times the integral of the run's own squared second
/// gradient); `n_sup` (largest recorded regularity budget).
pub fn write_dissipation_table(path: &Path, rows: &[DissipationRow]) -> Result<()> {
    let mut f = open_out(path)?;
    writeln!(
        f,
        "epsilon,diff_v_h1,diff_h_h1,diff_v_h2,diff_h_h2,run_v_grad2,n_sup"
    )?;
    for r in rows {
        writeln!(
            f,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.epsilon, r.diff_v_h1, r.diff_h_h1, r.diff_v_h2, r.diff_h_h2, r.run_v_grad2, r.n_sup
        )?;
    }
    Ok(())
}

/// Write the pressure-scaling table.
/// Columns: `epsilon`, `time`, `grad_p2` (gradient norm of the wall-driven
/// pressure part), `ratio` (`grad_p2` over its dimensional estimate
/// `eps * (||v||_{H2} + ||grad v||_{H1})`).
pub fn write_pressure_table(path: &Path, rows: &[PressureRow]) -> Result<()> {
    let mut f = open_out(path)?;
    writeln!(f, "epsilon,time,grad_p2,ratio")?;
    for r in rows {
        writeln!(f, "{:e},{:e},{:e},{:e}", r.epsilon, r.time, r.grad_p2, r.ratio)?;
    }
    Ok(())
}

/// Write a recorded time series.
/// Columns: `t`, `energy`, `strain_v_sq`, `strain_h_sq`, `wall_flux`,
/// `div_v`, `div_h`, `wall_vorticity`, `cross_helicity` — one row per sample,
/// naming the same quantities as the record fields.
pub fn write_series_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let s = &record.series;
    let mut f = open_out(path)?;
    writeln!(
        f,
        "t,energy,strain_v_sq,strain_h_sq,wall_flux,div_v,div_h,wall_vorticity,cross_helicity"
    )?;
    for i in 0..s.len() {
        writeln!(
            f,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            s.t[i],
            s.energy[i],
            s.strain_v_sq[i],
            s.strain_h_sq[i],
            s.wall_flux[i],
            s.div_v[i],
            s.div_h[i],
            s.wall_vorticity[i],
            s.cross_helicity[i]
        )?;
    }
    Ok(())
}

/// Write an audit residual series. Columns: `t`, `relative_residual`.
pub fn write_audit_csv(path: &Path, audit: &EnergyAudit) -> Result<()> {
    let mut f = open_out(path)?;
    writeln!(f, "t,relative_residual")?;
    for (t, r) in audit.t.iter().zip(&audit.residual) {
        writeln!(f, "{t:e},{r:e}")?;
    }
    Ok(())
}

/// Write the layer summary table.
/// Columns: `epsilon`, `amplitude` (peak tangential-RMS of the correction),
/// `width` (wall distance where the profile falls to `amplitude / e`),
/// `scaled_amplitude` and `scaled_width` (both divided by `sqrt(epsilon)`).
pub fn write_layer_table(path: &Path, rows: &[LayerRow]) -> Result<()> {
    let mut f = open_out(path)?;
    writeln!(f, "epsilon,amplitude,width,scaled_amplitude,scaled_width")?;
    for r in rows {
        writeln!(
            f,
            "{:e},{:e},{:e},{:e},{:e}",
            r.epsilon, r.amplitude, r.width, r.scaled_amplitude, r.scaled_width
        )?;
    }
    Ok(())
}

/// Write full layer profiles in long form. Columns: `epsilon`, `z`
/// (wall-normal coordinate), `rms` (tangential RMS of the correction there).
pub fn write_profile_points(path: &Path, profiles: &[LayerProfile]) -> Result<()> {
    let mut f = open_out(path)?;
    writeln!(f, "epsilon,z,rms")?;
    for p in profiles {
        for (z, r) in p.z.iter().zip(&p.rms) {
            writeln!(f, "{:e},{z:e},{r:e}", p.epsilon)?;
        }
    }
    Ok(())
}

/// Persist all sweep tables into `dir`; partial results (after a failed run)
/// are marked by `.partial.csv` names.
pub fn persist_sweep(dir: &Path, result: &SweepResult, partial: bool) -> Result<()> {
    let suffix = if partial { ".partial.csv" } else { ".csv" };
    write_error_table(&dir.join(format!("sweep_errors{suffix}")), &result.rows)?;
    write_dissipation_table(
        &dir.join(format!("sweep_dissipation{suffix}")),
        &result.dissipation,
    )?;
    write_pressure_table(&dir.join(format!("sweep_pressure{suffix}")), &result.pressure)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    fn base_config() -> SimConfig {
        SimConfig {
            dim: 2,
            n_tangential: 16,
            n_normal: 17,
            epsilon: 1e-2,
            zeta: 0.5,
            dt: 2e-3,
            t_end: 0.1,
            variant: Variant::Viscous,
            ic_name: "random-smooth".to_string(),
            ic_params: BTreeMap::new(),
            checkpoint_times: Vec::new(),
            regularity_order: 2,
            sample_stride: 8,
        }
    }

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "mhd-harness-{tag}-{}",
            std::process::id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws() {
        let fit = fit_rate(&[(1e-2, 1e-3), (1e-3, 1e-4), (1e-4, 1e-5)]).unwrap();
        assert!((fit.slope - 1.0).abs() <= 1e-12, "slope {}", fit.slope);
        assert!((fit.r_squared - 1.0).abs() <= 1e-12);
        assert_eq!(fit.points, 3);

        let pts: Vec<(f64, f64)> = [1e-2, 4e-3, 1.6e-3, 6.4e-4]
            .iter()
            .map(|&e| (e, 3.0 * f64::powf(e, 0.75)))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope - 0.75).abs() <= 1e-12, "slope {}", fit.slope);
        assert!((fit.intercept - 3.0f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn rate_fit_rejects_bad_inputs() {
        assert!(fit_rate(&[(1e-2, 1e-3), (1e-3, 1e-4)]).is_err());
        assert!(fit_rate(&[(1e-2, 1e-3), (1e-3, 0.0), (1e-4, 1e-5)]).is_err());
        assert!(fit_rate(&[(1e-2, 1e-3), (-1e-3, 1e-4), (1e-4, 1e-5)]).is_err());
        // Degenerate abscissa: three copies of the same epsilon.
        assert!(fit_rate(&[(1e-2, 1e-3), (1e-2, 1e-4), (1e-2, 1e-5)]).is_err());
    }

    /// Shear-profile decay has a closed-form energy balance; the audit must
    /// confirm it to within the scheme's truncation (about h^2, far under
    /// 1%), and the measured slope must match the closed form.
    #[test]
    fn audit_confirms_shear_flow_energy_balance() {
        let mut cfg = base_config();
        cfg.n_tangential = 16;
        cfg.n_normal = 33;
        cfg.epsilon = 0.05;
        cfg.zeta = 0.0;
        cfg.dt = 1e-3;
        cfg.t_end = 0.5;
        cfg.ic_name = "parallel-shear".to_string();
        let out = solver::run(&cfg).unwrap();
        let audit = energy_audit(&out.record, cfg.epsilon, cfg.zeta).unwrap();
        assert!(
            audit.max_residual <= 1e-2,
            "max residual {}",
            audit.max_residual
        );
        assert!(audit.rms_residual <= audit.max_residual);
        assert_eq!(audit.t.len(), out.record.series.len() - 2);

        // Midpoint slope against the closed form -2 eps pi^2 E(t).
        let mid = audit.t.len() / 2;
        let i = mid + 1;
        let s = &out.record.series;
        let expect = -2.0 * cfg.epsilon * std::f64::consts::PI.powi(2) * s.energy[i];
        let slope = (s.energy[i + 1] - s.energy[i - 1]) / (s.t[i + 1] - s.t[i - 1]);
        assert!(
            (slope - expect).abs() <= 0.02 * expect.abs(),
            "slope {slope} vs {expect}"
        );
    }

    /// Without dissipation the audit reduces to the energy drift, which the
    /// integrator holds at rounding level.
    #[test]
    fn audit_of_ideal_run_reports_tiny_drift() {
        let mut cfg = base_config();
        cfg.variant = Variant::Ideal;
        cfg.epsilon = 0.0;
        let out = solver::run(&cfg).unwrap();
        let audit = energy_audit(&out.record, 0.0, 0.0).unwrap();
        assert!(
            audit.max_residual <= 1e-8,
            "ideal residual {}",
            audit.max_residual
        );
    }

    #[test]
    fn audit_rejects_short_series() {
        let mut cfg = base_config();
        cfg.dt = 0.02;
        cfg.t_end = 0.02; // a single step: two samples
        let out = solver::run(&cfg).unwrap();
        assert!(energy_audit(&out.record, cfg.epsilon, cfg.zeta).is_err());
    }

    #[test]
    fn sweep_validates_ladder_shape() {
        let cfg = base_config();
        // Too few values.
        assert!(epsilon_sweep(&cfg, &[1e-2, 1e-3], &[0.1], None).is_err());
        // Less than a decade of span.
        assert!(epsilon_sweep(&cfg, &[1e-2, 8e-3, 5e-3], &[0.1], None).is_err());
        // Comparison time outside the horizon.
        assert!(epsilon_sweep(&cfg, &[1e-2, 3e-3, 1e-3], &[0.5], None).is_err());
        // Non-dissipative base.
        let mut ideal = cfg.clone();
        ideal.variant = Variant::Ideal;
        ideal.epsilon = 0.0;
        assert!(epsilon_sweep(&ideal, &[1e-2, 3e-3, 1e-3], &[0.1], None).is_err());
    }

    #[test]
    fn sweep_produces_full_tables_and_persists_them() {
        let cfg = base_config();
        let eps = [1e-2, 3e-3, 1e-3];
        let times = [0.05, 0.1];
        let dir = temp_dir("sweep");
        let result = epsilon_sweep(&cfg, &eps, &times, Some(&dir)).unwrap();

        // Cardinality: one row per (epsilon, time, norm).
        assert_eq!(result.rows.len(), eps.len() * times.len() * SWEEP_NORMS.len());
        assert_eq!(result.dissipation.len(), eps.len());
        assert_eq!(result.pressure.len(), eps.len() * times.len());
        for r in &result.rows {
            assert!(r.v_error.is_finite() && r.v_error > 0.0);
            assert!(r.h_error.is_finite() && r.h_error > 0.0);
        }
        for d in &result.dissipation {
            for v in [d.diff_v_h1, d.diff_h_h1, d.diff_v_h2, d.diff_h_h2, d.run_v_grad2] {
                assert!(v.is_finite() && v >= 0.0);
            }
            assert!(d.n_sup > 0.0);
        }
        for p in &result.pressure {
            assert!(p.ratio.is_finite() && p.ratio > 0.0);
        }

        // Persisted tables exist with the documented headers.
        let errors = std::fs::read_to_string(dir.join("sweep_errors.csv")).unwrap();
        assert!(errors.starts_with("epsilon,time,norm,v_error,h_error\n"));
        assert_eq!(errors.lines().count(), 1 + result.rows.len());
        let diss = std::fs::read_to_string(dir.join("sweep_dissipation.csv")).unwrap();
        assert!(diss.starts_with(
            "epsilon,diff_v_h1,diff_h_h1,diff_v_h2,diff_h_h2,run_v_grad2,n_sup\n"
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    /// With identical initial fields the two field errors must agree at
    /// every (epsilon, time): the system is symmetric under swapping them.
    #[test]
    fn sweep_with_identical_fields_is_symmetric() {
        let mut cfg = base_config();
        cfg.ic_name = "elsasser".to_string();
        let result = epsilon_sweep(&cfg, &[1e-2, 3e-3, 1e-3], &[0.1], None).unwrap();
        for r in &result.rows {
            let scale = r.v_error.abs().max(1e-300);
            assert!(
                ((r.v_error - r.h_error) / scale).abs() <= 1e-12,
                "{} vs {} in {}",
                r.v_error,
                r.h_error,
                r.norm
            );
        }
    }

    #[test]
    fn monotonicity_report_flags_an_inverted_pair() {
        let rows = vec![
            SweepRow {
                epsilon: 1e-2,
                time: 0.5,
                norm: "l2".into(),
                v_error: 1e-3,
                h_error: 1e-3,
            },
            SweepRow {
                epsilon: 1e-3,
                time: 0.5,
                norm: "l2".into(),
                v_error: 2e-3, // grew as dissipation shrank
                h_error: 5e-4,
            },
        ];
        let msgs = monotonicity_violations(&rows);
        assert_eq!(msgs.len(), 1, "{msgs:?}");
        assert!(msgs[0].contains("v-error"));
    }

    #[test]
    fn layer_sweep_returns_scaled_profiles() {
        let mut cfg = base_config();
        cfg.n_normal = 33;
        cfg.dt = 1e-3;
        let eps = [4e-3, 1e-3];
        let (rows, profiles) = layer_sweep(&cfg, &eps, 0.1).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(profiles.len(), 2);
        for (r, p) in rows.iter().zip(&profiles) {
            assert!(r.amplitude > 0.0 && r.amplitude.is_finite());
            assert!(r.width > 0.0 && r.width <= 0.5 + 1e-12);
            let expect = r.width / r.epsilon.sqrt();
            assert!((r.scaled_width - expect).abs() <= 1e-12 * expect.abs());
            assert_eq!(p.z.len(), p.rms.len());
        }
    }

    #[test]
    fn csv_writers_emit_documented_headers() {
        let dir = temp_dir("csv");
        let mut cfg = base_config();
        cfg.dt = 0.02;
        cfg.t_end = 0.1;
        let out = solver::run(&cfg).unwrap();

        let series_path = dir.join("series.csv");
        write_series_csv(&series_path, &out.record).unwrap();
        let text = std::fs::read_to_string(&series_path).unwrap();
        assert!(text.starts_with(
            "t,energy,strain_v_sq,strain_h_sq,wall_flux,div_v,div_h,wall_vorticity,cross_helicity\n"
        ));
        assert_eq!(text.lines().count(), 1 + out.record.series.len());

        let audit = energy_audit(&out.record, cfg.epsilon, cfg.zeta).unwrap();
        let audit_path = dir.join("audit.csv");
        write_audit_csv(&audit_path, &audit).unwrap();
        let text = std::fs::read_to_string(&audit_path).unwrap();
        assert!(text.starts_with("t,relative_residual\n"));
        assert_eq!(text.lines().count(), 1 + audit.t.len());
        std::fs::remove_dir_all(&dir).ok();
    }
}
