//! Conormal norms, error norms, and boundary-layer profiling.
//!
//! The conormal vector fields on the channel are the tangential derivatives
//! and the weighted normal derivative `Z = phi(z) d_z` with `phi(z) =
//! z(1 - z)`, which degenerates at the walls. Norms of order `m` sum over all
//! *ordered* tuples of conormal derivatives up to length `m`; on the flat
//! channel the fields commute, so ordered enumeration counts each mixed
//! derivative with its multinomial multiplicity.
//!
//! The layer profiler reduces a difference field to its tangential
//! root-mean-square amplitude per z-level and extracts an amplitude and a
//! decay width; the width interpolates the first crossing of `amplitude / e`
//! log-linearly, which is exact for exponential layers.

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::geometry::ChannelGrid;
use crate::{fft, ops};

/// Largest supported conormal order.
pub const MAX_CONORMAL_ORDER: usize = 4;

/// Apply one conormal derivative: spectral in tangential directions, the
/// wall-degenerate `phi(z) d_z` in the normal direction.
pub fn conormal_derivative(grid: &ChannelGrid, values: &[f64], dir: usize) -> Vec<f64> {
    if dir + 1 == grid.dim() {
        let mut dz = ops::derivative_axis(grid, values, dir);
        let nz = grid.n_normal();
        let phi = grid.phi();
        for line in dz.chunks_exact_mut(nz) {
            for (v, p) in line.iter_mut().zip(phi) {
                *v *= p;
            }
        }
        dz
    } else {
        fft::tangential_derivative(grid, values, dir, 1)
    }
}

fn check_order(m: usize) -> Result<()> {
    if m > MAX_CONORMAL_ORDER {
        return Err(Error::Usage(format!(
            "conormal order {m} exceeds the supported maximum {MAX_CONORMAL_ORDER}"
        )));
    }
    Ok(())
}

/// Depth-first walk over all ordered conormal tuples of length `<= m`,
/// invoking `visit` on the derivative of each component for every tuple
/// (including the empty one).
fn fold_tuples(
    grid: &ChannelGrid,
    comps: &[Vec<f64>],
    m: usize,
    visit: &mut impl FnMut(&[Vec<f64>]),
) {
    visit(comps);
    if m == 0 {
        return;
    }
    for dir in 0..grid.dim() {
        let next: Vec<Vec<f64>> = comps
            .iter()
            .map(|c| conormal_derivative(grid, c, dir))
            .collect();
        fold_tuples(grid, &next, m - 1, visit);
    }
}

fn l2_sq(grid: &ChannelGrid, comps: &[Vec<f64>]) -> f64 {
    let nz = grid.n_normal();
    let mut sum = 0.0;
    for c in comps {
        for line in c.chunks_exact(nz) {
            for (iz, v) in line.iter().enumerate() {
                sum += grid.quad_weight(iz) * v * v;
            }
        }
    }
    sum
}

fn sup_magnitude(comps: &[Vec<f64>]) -> f64 {
    let n = comps[0].len();
    let mut sup = 0.0f64;
    for i in 0..n {
        let mut sq = 0.0;
        for c in comps {
            sq += c[i] * c[i];
        }
        sup = sup.max(sq);
    }
    sup.sqrt()
}

fn conormal_sq_comps(grid: &ChannelGrid, comps: &[Vec<f64>], m: usize) -> f64 {
    let mut acc = 0.0;
    fold_tuples(grid, comps, m, &mut |c| acc += l2_sq(grid, c));
    acc
}

fn conormal_sup_comps(grid: &ChannelGrid, comps: &[Vec<f64>], m: usize) -> f64 {
    let mut acc = 0.0;
    fold_tuples(grid, comps, m, &mut |c| acc += sup_magnitude(c));
    acc
}

/// Conormal Sobolev norm of order `m` of a scalar field.
pub fn conormal_norm_scalar(f: &ScalarField, m: usize) -> Result<f64> {
    check_order(m)?;
    Ok(conormal_sq_comps(f.grid(), std::slice::from_ref(&f.data), m).sqrt())
}

/// Conormal Sobolev norm of order `m` of a vector field.
pub fn conormal_norm(f: &VectorField, m: usize) -> Result<f64> {
    check_order(m)?;
    let comps: Vec<Vec<f64>> = (0..f.dim()).map(|c| f.comp(c).to_vec()).collect();
    Ok(conormal_sq_comps(f.grid(), &comps, m).sqrt())
}

/// Conormal sup norm of order `m`: the sum over tuples of the pointwise
/// magnitude maxima.
pub fn conormal_sup_norm(f: &VectorField, m: usize) -> Result<f64> {
    check_order(m)?;
    let comps: Vec<Vec<f64>> = (0..f.dim()).map(|c| f.comp(c).to_vec()).collect();
    Ok(conormal_sup_comps(f.grid(), &comps, m))
}

fn tensor_comps(t: &TensorField, dim: usize) -> Vec<Vec<f64>> {
    let mut comps = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            comps.push(t.entry(a, b).to_vec());
        }
    }
    comps
}

/// The six summands of the order-`m` regularity functional of a state
/// `(v, h)`: for each field, the squared conormal norm of the field, the
/// squared conormal norm of its gradient one order lower, and the squared
/// conormal Lipschitz norm (order-1 sup norm of the gradient).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RegularityBudget {
    pub v_sq: f64,
    pub grad_v_sq: f64,
    pub grad_v_lip_sq: f64,
    pub h_sq: f64,
    pub grad_h_sq: f64,
    pub grad_h_lip_sq: f64,
}

impl RegularityBudget {
    pub fn total(&self) -> f64 {
        self.v_sq
            + self.grad_v_sq
            + self.grad_v_lip_sq
            + self.h_sq
            + self.grad_h_sq
            + self.grad_h_lip_sq
    }
}

/// Evaluate the order-`m` regularity functional (`1 <= m <= 4`).
pub fn regularity_budget(v: &VectorField, h: &VectorField, m: usize) -> Result<RegularityBudget> {
    if m == 0 {
        return Err(Error::Usage(
            "regularity functional needs order m >= 1".to_string(),
        ));
    }
    check_order(m)?;
    v.grid().compatible(h.grid())?;
    let grid = v.grid();
    let dim = grid.dim();

    let part = |f: &VectorField| -> (f64, f64, f64) {
        let comps: Vec<Vec<f64>> = (0..dim).map(|c| f.comp(c).to_vec()).collect();
        let f_sq = conormal_sq_comps(grid, &comps, m);
        let grad = tensor_comps(&ops::gradient_tensor(f), dim);
        let grad_sq = conormal_sq_comps(grid, &grad, m - 1);
        let lip = conormal_sup_comps(grid, &grad, 1);
        (f_sq, grad_sq, lip * lip)
    };
    let (v_sq, grad_v_sq, grad_v_lip_sq) = part(v);
    let (h_sq, grad_h_sq, grad_h_lip_sq) = part(h);
    Ok(RegularityBudget {
        v_sq,
        grad_v_sq,
        grad_v_lip_sq,
        h_sq,
        grad_h_sq,
        grad_h_lip_sq,
    })
}

fn lp_pow(grid: &ChannelGrid, comps: &[&[f64]], p: f64) -> f64 {
    let nz = grid.n_normal();
    let n = comps[0].len();
    let mut sum = 0.0;
    for i in 0..n {
        let mut sq = 0.0;
        for c in comps {
            sq += c[i] * c[i];
        }
        sum += grid.quad_weight(i % nz) * sq.powf(0.5 * p);
    }
    sum
}

/// L^p norm of the pointwise magnitude of a vector field.
pub fn lebesgue_norm(f: &VectorField, p: f64) -> f64 {
    let comps: Vec<&[f64]> = (0..f.dim()).map(|c| f.comp(c)).collect();
    lp_pow(f.grid(), &comps, p).powf(1.0 / p)
}

/// Full W^{1,p} norm: `(|f|_p^p + |grad f|_p^p)^{1/p}` with the Frobenius
/// magnitude of the gradient.
pub fn sobolev_w1p_norm(f: &VectorField, p: f64) -> f64 {
    let grid = f.grid();
    let dim = f.dim();
    let grad = ops::gradient_tensor(f);
    let comps: Vec<&[f64]> = (0..f.dim()).map(|c| f.comp(c)).collect();
    let mut gcomps: Vec<&[f64]> = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            gcomps.push(grad.entry(a, b));
        }
    }
    (lp_pow(grid, &comps, p) + lp_pow(grid, &gcomps, p)).powf(1.0 / p)
}

fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p < 2.0 {
        return Err(Error::Usage(format!(
            "Sobolev exponent p = {p} is outside the supported range 2 <= p < infinity"
        )));
    }
    Ok(())
}

/// Evaluate the norms of a single field: `"l2"`, `"h1"`, `"linf"`, and
/// `"w1p{p}"` for every exponent in `p_list` (each must satisfy
/// `2 <= p < infinity`).
pub fn norm_table(f: &VectorField, p_list: &[f64]) -> Result<std::collections::BTreeMap<String, f64>> {
    let mut out = std::collections::BTreeMap::new();
    let l2 = f.l2_norm();
    let h1 = {
        let grad = ops::gradient_tensor(f);
        (l2 * l2 + grad.frobenius_sq()).sqrt()
    };
    out.insert("l2".to_string(), l2);
    out.insert("h1".to_string(), h1);
    out.insert("linf".to_string(), f.max_magnitude());
    for &p in p_list {
        check_exponent(p)?;
        out.insert(format!("w1p{p}"), sobolev_w1p_norm(f, p));
    }
    Ok(out)
}

/// Evaluate all difference norms of `a - b`: always `"l2"`, `"h1"`, and
/// `"linf"`, plus `"w1p{p}"` for every requested exponent.
pub fn error_norms(
    a: &VectorField,
    b: &VectorField,
    p_list: &[f64],
) -> Result<std::collections::BTreeMap<String, f64>> {
    let diff = a.difference(b)?;
    norm_table(&diff, p_list)
}

/// Tangential RMS profile of a difference field with layer descriptors.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LayerProfile {
    /// Dissipation coefficient the comparison was run at.
    pub epsilon: f64,
    /// z-coordinates of the levels.
    pub z: Vec<f64>,
    /// Tangential root-mean-square magnitude per level.
    pub rms: Vec<f64>,
    /// Peak RMS value.
    pub amplitude: f64,
    /// Distance from the peak to the log-linear interpolated first crossing
    /// of `amplitude / e`, scanning away from the peak's wall. Exact for
    /// exponential layers.
    pub width: f64,
    /// Amplitude divided by `sqrt(epsilon)`, the expected layer scale.
    pub scaled_amplitude: f64,
    /// Width divided by `sqrt(epsilon)`.
    pub scaled_width: f64,
}

/// Profile the wall layer of the difference between a dissipative solution
/// and its zero-dissipation counterpart. `epsilon` must be positive: the
/// `sqrt(epsilon)` rescaling of the descriptors is undefined otherwise.
pub fn boundary_layer_profile(
    dissipative: &VectorField,
    ideal: &VectorField,
    epsilon: f64,
) -> Result<LayerProfile> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Usage(format!(
            "layer rescaling by sqrt(epsilon) is undefined for epsilon = {epsilon}; \
             it must be positive"
        )));
    }
    let diff = dissipative.difference(ideal)?;
    Ok(profile_difference(&diff, epsilon))
}

/// Profile an already-formed difference field.
pub fn profile_difference(diff: &VectorField, epsilon: f64) -> LayerProfile {
    let grid = diff.grid();
    let nz = grid.n_normal();
    let n_lines = grid.n_lines();
    let mut rms = vec![0.0f64; nz];
    for c in 0..diff.dim() {
        for line in diff.comp(c).chunks_exact(nz) {
            for (iz, v) in line.iter().enumerate() {
                rms[iz] += v * v;
            }
        }
    }
    for v in rms.iter_mut() {
        *v = (*v / n_lines as f64).sqrt();
    }
    let z = grid.z_nodes().to_vec();

    let (peak, amplitude) = rms
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let scale = epsilon.sqrt();
    if amplitude == 0.0 {
        return LayerProfile {
            epsilon,
            z,
            rms,
            amplitude,
            width: 0.0,
            scaled_amplitude: 0.0,
            scaled_width: 0.0,
        };
    }

    let threshold = amplitude / std::f64::consts::E;
    // Scan from the peak away from its wall.
    let towards_upper = z[peak] <= 0.5;
    let mut width = 0.0;
    let mut prev = peak;
    let mut found = false;
    let next = |i: usize| -> Option<usize> {
        if towards_upper {
            (i + 1 < nz).then_some(i + 1)
        } else {
            (i > 0).then(|| i - 1)
        }
    };
    let mut i = peak;
    while let Some(j) = next(i) {
        if rms[j] < threshold {
            // Log-linear interpolation between prev and j.
            let (za, ra) = (z[prev], rms[prev].max(f64::MIN_POSITIVE));
            let (zb, rb) = (z[j], rms[j].max(f64::MIN_POSITIVE));
            let t = (ra.ln() - threshold.ln()) / (ra.ln() - rb.ln());
            let zc = za + (zb - za) * t;
            width = (zc - z[peak]).abs();
            found = true;
            break;
        }
        prev = j;
        i = j;
    }
    if !found {
        // Layer never decays below threshold inside the channel.
        width = (z[prev] - z[peak]).abs();
    }

    LayerProfile {
        epsilon,
        z,
        rms,
        amplitude,
        width,
        scaled_amplitude: amplitude / scale,
        scaled_width: width / scale,
    }
}
