//! Neumann–Poisson solves and the pressure decomposition.
//!
//! The scalar problem is `Laplace q = rhs` in the channel with the outward
//! normal derivative prescribed on both walls. Tangentially the operator
//! diagonalizes over Fourier modes (second-derivative symbols, so the Nyquist
//! mode stays invertible); in `z` each mode is a tridiagonal system whose wall
//! rows eliminate the ghost value through the centered first-derivative
//! stencil, keeping the Neumann rows second-order.
//!
//! Only the mean tangential mode is singular; its left null functional is the
//! trapezoid sum in `z`. The solver measures the corresponding solvability
//! defect, repairs it by a uniform shift when it is small (quadrature-level),
//! and reports data as incompatible otherwise. Solutions are gauged to zero
//! quadrature mean.
//!
//! The pressure of the channel flow splits into an advective part, driven by
//! the convective source, and a viscous part, a harmonic function driven by
//! wall traces of the diffusion term. The advective right-hand side is
//! assembled with the summation-by-parts divergence so its defect telescopes
//! to rounding; the viscous data has quadrature-exact zero mean for any
//! discretely solenoidal state.

use rustfft::num_complex::Complex;

use crate::boundary::{self, WallLaw, WallPair};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{ScalarField, VectorField};
use crate::ops;

type C64 = Complex<f64>;

/// Largest relative solvability defect the solver will repair silently.
pub const COMPATIBILITY_THRESHOLD: f64 = 1e-8;

/// Result of a Neumann–Poisson solve.
pub struct NeumannSolution {
    /// Zero-mean solution.
    pub field: ScalarField,
    /// Relative solvability defect of the mean mode before repair.
    pub defect: f64,
}

/// Trapezoid weights in `z` — the left null functional of the discrete
/// Neumann operator's mean mode.
fn trapezoid_weights(nz: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; nz];
    w[0] = 0.5 * h;
    w[nz - 1] = 0.5 * h;
    w
}

/// Solve one tridiagonal mode system in place. `lower[i]` multiplies
/// `q[i-1]` in row `i`, `upper[i]` multiplies `q[i+1]`.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [C64], scratch: &mut [f64]) {
    let n = diag.len();
    scratch[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * scratch[i];
    }
}

/// Solve `Laplace q = rhs` with outward normal derivative `data` on the
/// walls (`data.lower` at `z = 0`, `data.upper` at `z = 1`, one value per
/// tangential line). `label` names the subproblem in incompatibility errors.
pub fn solve_poisson_neumann(
    rhs: &ScalarField,
    data: &WallPair<Vec<f64>>,
    label: &str,
) -> Result<NeumannSolution> {
    let grid = rhs.grid().clone();
    let nz = grid.n_normal();
    let h = grid.h_normal();
    if data.lower.len() != grid.n_lines() || data.upper.len() != grid.n_lines() {
        return Err(Error::Usage(format!(
            "wall data must carry one value per tangential line ({} expected)",
            grid.n_lines()
        )));
    }

    // Fold the Neumann data into the right-hand side: the ghost elimination
    // turns the wall rows into (2 q_1 - 2 q_0)/h^2 and moves the data here.
    let mut b = rhs.data.clone();
    for (il, line) in b.chunks_exact_mut(nz).enumerate() {
        line[0] -= 2.0 * data.lower[il] / h;
        line[nz - 1] -= 2.0 * data.upper[il] / h;
    }

    let mut modes = fft::forward_tangential(&grid, &b);
    let trapz = trapezoid_weights(nz, h);
    let inv_h2 = 1.0 / (h * h);

    let mut lower = vec![inv_h2; nz];
    let mut upper = vec![inv_h2; nz];
    lower[0] = 0.0;
    upper[0] = 2.0 * inv_h2;
    lower[nz - 1] = 2.0 * inv_h2;
    upper[nz - 1] = 0.0;
    let mut diag = vec![0.0; nz];
    let mut scratch = vec![0.0; nz];
    let mut defect_rel = 0.0;

    for (line, _, sym_sq) in fft::mode_lines(&grid) {
        let k_sq = sym_sq[0] + sym_sq[1];
        let profile = &mut modes[line * nz..(line + 1) * nz];
        if k_sq == 0.0 {
            // Singular mean mode: measure the defect against the null
            // functional, repair a quadrature-small one, reject the rest.
            let mut delta = C64::default();
            let mut scale = 0.0f64;
            for (v, w) in profile.iter().zip(&trapz) {
                delta += *v * *w;
                scale = scale.max(v.norm());
            }
            defect_rel = delta.norm() / scale.max(1.0);
            if defect_rel > COMPATIBILITY_THRESHOLD {
                return Err(Error::Incompatible {
                    subproblem: label.to_string(),
                    defect: defect_rel,
                    threshold: COMPATIBILITY_THRESHOLD,
                });
            }
            // The trapezoid weights sum to 1, so a uniform shift removes the
            // defect exactly.
            for v in profile.iter_mut() {
                *v -= delta;
            }
            for d in diag.iter_mut() {
                *d = -2.0 * inv_h2;
            }
            // Pin the top node to fix the additive constant, then re-gauge.
            let saved = (lower[nz - 1], upper[nz - 1]);
            lower[nz - 1] = 0.0;
            diag[nz - 1] = 1.0;
            profile[nz - 1] = C64::default();
            thomas(&lower, &diag, &upper, profile, &mut scratch);
            lower[nz - 1] = saved.0;
            upper[nz - 1] = saved.1;
        } else {
            for d in diag.iter_mut() {
                *d = -2.0 * inv_h2 - k_sq;
            }
            thomas(&lower, &diag, &upper, profile, &mut scratch);
        }
    }

    let mut field = ScalarField::from_data(&grid, fft::inverse_tangential(&grid, modes));
    field.subtract_mean();
    Ok(NeumannSolution {
        field,
        defect: defect_rel,
    })
}

/// The two pressure contributions of the viscous channel system.
pub struct PressureSplit {
    /// Pressure balancing the convective source `(v.grad)v - (H.grad)H`.
    pub advective: ScalarField,
    /// Harmonic pressure driven by the wall traces of the diffusion term.
    pub viscous: ScalarField,
    pub advective_defect: f64,
    pub viscous_defect: f64,
}

/// Solve both pressure problems for the state `(v, h)` at viscosity
/// `epsilon` under the wall law `law`.
///
/// The advective part solves `Laplace p = -div F` with `d_n p = -F . n`,
/// `F = (v.grad)v - (H.grad)H`; the viscous part solves `Laplace p = 0` with
/// `d_n p = epsilon (Laplace v) . n`, the Laplacian closed by `law`.
pub fn pressure_split(
    v: &VectorField,
    h: &VectorField,
    epsilon: f64,
    law: WallLaw,
) -> Result<PressureSplit> {
    v.grid().compatible(h.grid())?;
    let grid = v.grid().clone();

    let mut force = ops::advect(v, v)?;
    let adv_h = ops::advect(h, h)?;
    force.add_scaled(&adv_h, -1.0);

    let mut rhs = ops::divergence_sbp(&force);
    for x in rhs.data.iter_mut() {
        *x = -*x;
    }
    let fz_lo = boundary::wall_slice(&grid, force.normal_comp(), false);
    let fz_hi = boundary::wall_slice(&grid, force.normal_comp(), true);
    let data = WallPair {
        lower: fz_lo,
        upper: fz_hi.iter().map(|v| -v).collect(),
    };
    let advective = solve_poisson_neumann(&rhs, &data, "advective pressure")?;

    let lap = boundary::laplacian_closed(v, law);
    let lz_lo = boundary::wall_slice(&grid, lap.normal_comp(), false);
    let lz_hi = boundary::wall_slice(&grid, lap.normal_comp(), true);
    let data = WallPair {
        lower: lz_lo.iter().map(|v| -epsilon * v).collect(),
        upper: lz_hi.iter().map(|v| epsilon * v).collect(),
    };
    let zeros = ScalarField::zeros(&grid);
    let viscous = solve_poisson_neumann(&zeros, &data, "viscous pressure")?;

    Ok(PressureSplit {
        advective: advective.field,
        viscous: viscous.field,
        advective_defect: advective.defect,
        viscous_defect: viscous.defect,
    })
}

/// Pressure implied by removing the gradient part of a vector field `r`:
/// solves `Laplace q = div r` with `d_n q = r . n`.
pub fn projection_pressure(r: &VectorField) -> Result<NeumannSolution> {
    let grid = r.grid().clone();
    let rhs = ops::divergence_sbp(r);
    let lo = boundary::wall_slice(&grid, r.normal_comp(), false);
    let hi = boundary::wall_slice(&grid, r.normal_comp(), true);
    let data = WallPair {
        lower: lo.iter().map(|v| -v).collect(),
        upper: hi,
    };
    solve_poisson_neumann(&rhs, &data, "projection pressure")
}

/// Largest interior residual of `Laplace q` — a harmonicity check for the
/// viscous pressure (wall rows encode the boundary condition and are skipped).
pub fn interior_laplacian_residual(q: &ScalarField) -> f64 {
    let grid = q.grid();
    let nz = grid.n_normal();
    let lap = ops::laplacian_scalar(q);
    let mut sup = 0.0f64;
    for line in lap.data.chunks_exact(nz) {
        for v in &line[1..nz - 1] {
            sup = sup.max(v.abs());
        }
    }
    sup
}
