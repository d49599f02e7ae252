//! Differential operators on collocated fields.
//!
//! Tangential directions are differentiated spectrally (exact for
//! band-limited grid data). The wall-normal direction uses second-order
//! centered differences in the interior and second-order one-sided stencils
//! on the wall rows, so every public operator has formal order two across the
//! channel without assuming any boundary condition. Operators that must see
//! the wall closure (diffusion, wall traces of `Delta v . n`) live in
//! [`crate::boundary`] and consume ghost planes instead.

use crate::error::Result;
use crate::fft;
use crate::field::{ScalarField, TensorField, VectorField};
use crate::geometry::ChannelGrid;

/// Wall-normal first derivative of one contiguous z-line:
/// centered inside, second-order one-sided at the walls.
pub(crate) fn dz_line(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (line[i + 1] - line[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) / (2.0 * h);
}

/// Same stencil but with first-order wall rows `(f1 - f0)/h`. This variant
/// satisfies the exact discrete divergence theorem against the trapezoid
/// functional (summation by parts), which the elliptic module uses to
/// assemble compatible right-hand sides. Interior accuracy is unchanged.
pub(crate) fn dz_line_sbp(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    out[0] = (line[1] - line[0]) / h;
    for i in 1..n - 1 {
        out[i] = (line[i + 1] - line[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (line[n - 1] - line[n - 2]) / h;
}

/// Wall-normal second derivative: 3-point inside, second-order one-sided at
/// the walls.
pub(crate) fn dzz_line(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    let h2 = h * h;
    out[0] = (2.0 * line[0] - 5.0 * line[1] + 4.0 * line[2] - line[3]) / h2;
    for i in 1..n - 1 {
        out[i] = (line[i + 1] - 2.0 * line[i] + line[i - 1]) / h2;
    }
    out[n - 1] =
        (2.0 * line[n - 1] - 5.0 * line[n - 2] + 4.0 * line[n - 3] - line[n - 4]) / h2;
}

fn apply_z(grid: &ChannelGrid, values: &[f64], op: fn(&[f64], f64, &mut [f64])) -> Vec<f64> {
    let nz = grid.n_normal();
    let h = grid.h_normal();
    let mut out = vec![0.0; values.len()];
    for (src, dst) in values.chunks_exact(nz).zip(out.chunks_exact_mut(nz)) {
        op(src, h, dst);
    }
    out
}

/// First derivative along coordinate axis `a` (tangential axes spectral,
/// last axis wall-normal one-sided/centered).
pub fn derivative_axis(grid: &ChannelGrid, values: &[f64], a: usize) -> Vec<f64> {
    if a + 1 == grid.dim() {
        apply_z(grid, values, dz_line)
    } else {
        fft::tangential_derivative(grid, values, a, 1)
    }
}

/// Second derivative along coordinate axis `a`.
pub fn second_derivative_axis(grid: &ChannelGrid, values: &[f64], a: usize) -> Vec<f64> {
    if a + 1 == grid.dim() {
        apply_z(grid, values, dzz_line)
    } else {
        fft::tangential_derivative(grid, values, a, 2)
    }
}

pub(crate) fn derivative_z_sbp(grid: &ChannelGrid, values: &[f64]) -> Vec<f64> {
    apply_z(grid, values, dz_line_sbp)
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let comps = (0..grid.dim())
        .map(|a| derivative_axis(grid, &f.data, a))
        .collect();
    VectorField::from_comps(grid, comps)
}

pub fn divergence(f: &VectorField) -> ScalarField {
    let grid = f.grid();
    let mut acc = derivative_axis(grid, f.comp(0), 0);
    for a in 1..grid.dim() {
        let d = derivative_axis(grid, f.comp(a), a);
        for (x, y) in acc.iter_mut().zip(&d) {
            *x += y;
        }
    }
    ScalarField::from_data(grid, acc)
}

/// Divergence assembled with the summation-by-parts z-stencil (exact discrete
/// divergence theorem against the trapezoid functional). Used to build
/// compatible elliptic right-hand sides.
pub(crate) fn divergence_sbp(f: &VectorField) -> ScalarField {
    let grid = f.grid();
    let mut acc = derivative_axis(grid, f.comp(0), 0);
    for a in 1..grid.dim() - 1 {
        let d = derivative_axis(grid, f.comp(a), a);
        for (x, y) in acc.iter_mut().zip(&d) {
            *x += y;
        }
    }
    let dz = derivative_z_sbp(grid, f.comp(grid.dim() - 1));
    for (x, y) in acc.iter_mut().zip(&dz) {
        *x += y;
    }
    ScalarField::from_data(grid, acc)
}

/// Curl. In 2D (components `(f_x, f_z)` on the `(x, z)` plane) this is the
/// out-of-plane scalar `d_z f_x - d_x f_z`; in 3D the usual vector curl.
pub enum Vorticity {
    Scalar(ScalarField),
    Vector(VectorField),
}

pub fn curl(f: &VectorField) -> Vorticity {
    let grid = f.grid();
    match grid.dim() {
        2 => {
            let dz_fx = derivative_axis(grid, f.comp(0), 1);
            let dx_fz = derivative_axis(grid, f.comp(1), 0);
            let data = dz_fx.iter().zip(&dx_fz).map(|(a, b)| a - b).collect();
            Vorticity::Scalar(ScalarField::from_data(grid, data))
        }
        3 => {
            let d = |comp: usize, axis: usize| derivative_axis(grid, f.comp(comp), axis);
            let (dy_f2, dz_f1) = (d(2, 1), d(1, 2));
            let (dz_f0, dx_f2) = (d(0, 2), d(2, 0));
            let (dx_f1, dy_f0) = (d(1, 0), d(0, 1));
            let sub = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> {
                a.iter().zip(&b).map(|(x, y)| x - y).collect()
            };
            Vorticity::Vector(VectorField::from_comps(
                grid,
                vec![sub(dy_f2, dz_f1), sub(dz_f0, dx_f2), sub(dx_f1, dy_f0)],
            ))
        }
        _ => unreachable!(),
    }
}

pub fn laplacian_scalar(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut acc = second_derivative_axis(grid, &f.data, 0);
    for a in 1..grid.dim() {
        let d = second_derivative_axis(grid, &f.data, a);
        for (x, y) in acc.iter_mut().zip(&d) {
            *x += y;
        }
    }
    ScalarField::from_data(grid, acc)
}

/// Component-wise Laplacian with no boundary closure (one-sided wall rows).
/// The solver's diffusion term uses the ghost-closed variant in
/// [`crate::boundary`] instead.
pub fn laplacian_vector(f: &VectorField) -> VectorField {
    let grid = f.grid();
    let comps = (0..grid.dim())
        .map(|c| {
            let sf = ScalarField::from_data(grid, f.comp(c).to_vec());
            laplacian_scalar(&sf).data
        })
        .collect();
    VectorField::from_comps(grid, comps)
}

/// Gradient tensor `G_ab = d_a f_b`.
pub fn gradient_tensor(f: &VectorField) -> TensorField {
    let grid = f.grid();
    let mut t = TensorField::zeros(grid);
    for a in 0..grid.dim() {
        for b in 0..grid.dim() {
            t.set_entry(a, b, derivative_axis(grid, f.comp(b), a));
        }
    }
    t
}

/// Symmetric strain tensor `S_ab = (d_a f_b + d_b f_a) / 2`.
pub fn strain(f: &VectorField) -> TensorField {
    let grid = f.grid();
    let g = gradient_tensor(f);
    let mut s = TensorField::zeros(grid);
    for a in 0..grid.dim() {
        for b in 0..grid.dim() {
            let ab = g.entry(a, b);
            let ba = g.entry(b, a);
            let data = ab.iter().zip(ba).map(|(x, y)| 0.5 * (x + y)).collect();
            s.set_entry(a, b, data);
        }
    }
    s
}

/// Convective derivative `(u . grad) w`.
pub fn advect(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    u.grid().compatible(w.grid())?;
    let grid = u.grid();
    let mut out = VectorField::zeros(grid);
    for c in 0..grid.dim() {
        for a in 0..grid.dim() {
            let dw = derivative_axis(grid, w.comp(c), a);
            let ua = u.comp(a);
            let dst = out.comp_mut(c);
            for i in 0..dst.len() {
                dst[i] += ua[i] * dw[i];
            }
        }
    }
    Ok(out)
}

/// Transport `(u . grad) w` in skew-symmetric (split) form:
/// `1/2 [ u_a D_a w_c + D_a (u_a w_c) ]` summed over axes `a`, with the
/// wall-normal derivative in its summation-by-parts variant.
///
/// Against the trapezoid-in-z quadrature, `<advect_skew(u, w), w> = 1/2 *
/// [u_n w^2]_wall` exactly — no smoothness, divergence-freeness, or aliasing
/// assumptions enter — so transport by a field with zero normal trace is
/// exactly energy-neutral. Likewise `<advect_skew(u, a), b> +
/// <advect_skew(u, b), a>` reduces to wall terms, which makes coupled
/// exchange terms conservative in pairs. The time integrator uses this form
/// for all transport; the plain `advect` remains the analysis-facing
/// convective derivative.
pub fn advect_skew(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    u.grid().compatible(w.grid())?;
    let grid = u.grid();
    let dim = grid.dim();
    let mut out = VectorField::zeros(grid);
    let mut prod = vec![0.0; grid.n_nodes()];
    for c in 0..dim {
        for a in 0..dim {
            let deriv = |vals: &[f64]| -> Vec<f64> {
                if a + 1 == dim {
                    derivative_z_sbp(grid, vals)
                } else {
                    fft::tangential_derivative(grid, vals, a, 1)
                }
            };
            let dw = deriv(w.comp(c));
            let ua = u.comp(a);
            for ((p, x), y) in prod.iter_mut().zip(ua).zip(w.comp(c)) {
                *p = x * y;
            }
            let dprod = deriv(&prod);
            let dst = out.comp_mut(c);
            for i in 0..dst.len() {
                dst[i] += 0.5 * (ua[i] * dw[i] + dprod[i]);
            }
        }
    }
    Ok(out)
}
