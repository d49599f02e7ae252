//! Tangential spectral machinery.
//!
//! Periodic directions are differentiated exactly (for band-limited data) by
//! FFT: transform, multiply by the derivative symbol, transform back. Odd
//! derivatives zero the Nyquist mode (the standard symmetric choice); even
//! derivatives keep it with symbol `-(n/2)^2`.
//!
//! The same transforms expose per-mode wall-normal profiles for the mode-wise
//! elliptic solves: `forward_tangential` maps node samples
//! `[line..., iz]` to complex mode profiles `[mode..., iz]` with `z`
//! contiguous, so each tangential mode's z-profile is one contiguous slice.

use crate::geometry::ChannelGrid;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<usize, Plans>> = RefCell::new(HashMap::new());
}

fn plans(n: usize) -> Plans {
    PLAN_CACHE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    })
}

/// First-derivative wavenumber of mode index `j` for an `n`-point transform
/// (Nyquist zeroed).
pub fn wavenumber(n: usize, j: usize) -> f64 {
    if 2 * j < n {
        j as f64
    } else if 2 * j == n {
        0.0
    } else {
        j as f64 - n as f64
    }
}

/// Squared wavenumber for even derivatives (Nyquist kept).
pub fn wavenumber_sq(n: usize, j: usize) -> f64 {
    let k = if 2 * j <= n {
        j as f64
    } else {
        j as f64 - n as f64
    };
    k * k
}

/// Stride and line count for walking all 1D lines along `axis`
/// (0 = x, 1 = y; the wall-normal direction is not an FFT axis).
fn axis_geometry(grid: &ChannelGrid, axis: usize) -> (usize, Vec<usize>) {
    let nt = grid.n_tangential();
    let nn = grid.n_normal();
    assert!(axis < grid.n_tan_dirs(), "axis {axis} out of range");
    match (grid.dim(), axis) {
        // 2D, x-axis: lines indexed by iz, elements at ix*nn + iz.
        (2, 0) => (nn, (0..nn).collect()),
        // 3D, x-axis: lines indexed by (iy, iz), elements at (ix*nt+iy)*nn + iz.
        (3, 0) => (
            nt * nn,
            (0..nt * nn).collect(),
        ),
        // 3D, y-axis: lines indexed by (ix, iz), elements at (ix*nt+iy)*nn + iz.
        (3, 1) => {
            let mut starts = Vec::with_capacity(nt * nn);
            for ix in 0..nt {
                for iz in 0..nn {
                    starts.push(ix * nt * nn + iz);
                }
            }
            (nn, starts)
        }
        _ => unreachable!(),
    }
}

/// Spectral derivative of a real grid function along a tangential axis.
/// `order` is 1 or 2.
pub fn tangential_derivative(
    grid: &ChannelGrid,
    values: &[f64],
    axis: usize,
    order: u32,
) -> Vec<f64> {
    assert!(order == 1 || order == 2);
    let n = grid.n_tangential();
    let (fwd, inv) = plans(n);
    let mut scratch = vec![Complex::default(); fwd.get_inplace_scratch_len()];
    let mut line = vec![Complex::default(); n];
    let mut out = vec![0.0; values.len()];
    let (stride, starts) = axis_geometry(grid, axis);
    let norm = 1.0 / n as f64;
    for start in starts {
        for (j, c) in line.iter_mut().enumerate() {
            *c = Complex::new(values[start + j * stride], 0.0);
        }
        fwd.process_with_scratch(&mut line, &mut scratch);
        if order == 1 {
            for (j, c) in line.iter_mut().enumerate() {
                let k = wavenumber(n, j);
                *c = Complex::new(-k * c.im, k * c.re); // multiply by i*k
            }
        } else {
            for (j, c) in line.iter_mut().enumerate() {
                *c *= -wavenumber_sq(n, j);
            }
        }
        inv.process_with_scratch(&mut line, &mut scratch);
        for (j, c) in line.iter().enumerate() {
            out[start + j * stride] = c.re * norm;
        }
    }
    out
}

/// Transform node samples to tangential-mode z-profiles.
/// Output layout matches the input layout with tangential indices replaced by
/// mode indices; each mode's z-profile is contiguous.
pub fn forward_tangential(grid: &ChannelGrid, values: &[f64]) -> Vec<Complex<f64>> {
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    for axis in 0..grid.n_tan_dirs() {
        fft_axis_inplace(grid, &mut data, axis, true);
    }
    data
}

/// Inverse of [`forward_tangential`]; returns the real part (the imaginary
/// part of a round-trip is rounding noise).
pub fn inverse_tangential(grid: &ChannelGrid, mut data: Vec<Complex<f64>>) -> Vec<f64> {
    for axis in 0..grid.n_tan_dirs() {
        fft_axis_inplace(grid, &mut data, axis, false);
    }
    let norm = 1.0 / grid.n_lines() as f64;
    data.iter().map(|c| c.re * norm).collect()
}

fn fft_axis_inplace(grid: &ChannelGrid, data: &mut [Complex<f64>], axis: usize, forward: bool) {
    let n = grid.n_tangential();
    let (fwd, inv) = plans(n);
    let fft = if forward { fwd } else { inv };
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex::default(); n];
    let (stride, starts) = axis_geometry(grid, axis);
    for start in starts {
        for (j, c) in line.iter_mut().enumerate() {
            *c = data[start + j * stride];
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        for (j, c) in line.iter().enumerate() {
            data[start + j * stride] = *c;
        }
    }
}

/// Iterate the tangential mode tuples in storage order, yielding
/// (flat mode-line index, first-derivative symbols, squared symbols).
pub fn mode_lines(grid: &ChannelGrid) -> Vec<(usize, [f64; 2], [f64; 2])> {
    let n = grid.n_tangential();
    match grid.dim() {
        2 => (0..n)
            .map(|j| (j, [wavenumber(n, j), 0.0], [wavenumber_sq(n, j), 0.0]))
            .collect(),
        3 => {
            let mut v = Vec::with_capacity(n * n);
            for jx in 0..n {
                for jy in 0..n {
                    v.push((
                        jx * n + jy,
                        [wavenumber(n, jx), wavenumber(n, jy)],
                        [wavenumber_sq(n, jx), wavenumber_sq(n, jy)],
                    ));
                }
            }
            v
        }
        _ => unreachable!(),
    }
}
