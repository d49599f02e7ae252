//! Discrete solenoidal (Leray) projection on the channel.
//!
//! The projector returns the closest field, in the trapezoid-in-z quadrature
//! inner product (the metric whose wall-normal derivative satisfies exact
//! summation by parts, hence the one in which the time integrator conserves
//! energy), that satisfies *exactly* the constraints the rest of the code
//! checks:
//!
//! * the compatible discrete divergence (spectral tangentially, in z the
//!   derivative that is summation-by-parts exact against the trapezoid
//!   weights: centered interior rows, one-cell flux rows at the walls)
//!   vanishes at every node, and
//! * the normal component vanishes on both walls.
//!
//! Using the summation-by-parts derivative in the constraint is load-bearing,
//! not cosmetic. The least-squares correction is `W^-1 C^H mu`, so the wall
//! rows of the constraint matrix reappear *transposed* in the output. For the
//! summation-by-parts pair `(D, W)` the transpose is again a consistent
//! derivative (`W D + D^T W` collapses to the boundary), the normal equations
//! discretize the continuum Neumann problem uniformly up to the walls, and
//! the multiplier divided by the weights is a smooth pressure sample. A
//! higher-order one-sided wall row looks more accurate in isolation, but its
//! transpose against the trapezoid weights is not a consistent stencil; the
//! multiplier then carries a grid-scale wall transient and the projection of
//! a *smooth* field acquires an O(h) two-node oscillation in the tangential
//! components at the walls. An undamped run integrates that injection into a
//! secularly growing wall defect, which is how the flaw was found.
//!
//! Per tangential Fourier mode the constraints are linear in the mode's
//! z-profiles, so the projection is a small equality-constrained least-squares
//! problem solved through its normal (KKT) equations: with `C` the constraint
//! matrix and `W` the diagonal of quadrature weights, the multiplier solves
//! `(C W^-1 C^H) mu = C u` and the correction is `u <- u - W^-1 C^H mu`. The
//! KKT matrix is real, symmetric, and banded (bandwidth 3) and depends only on
//! the squared tangential wavenumber, so one factorization per distinct
//! wavenumber magnitude serves the whole grid. Modes whose first-derivative
//! symbol vanishes entirely (the mean mode and bare Nyquist modes) have a
//! two-dimensional multiplier kernel; any least-squares multiplier yields the
//! same correction, so those use a dense pseudo-inverse instead.
//!
//! Because the construction is an orthogonal projection in exact arithmetic,
//! idempotence, self-adjointness, and orthogonality of the residual hold to
//! rounding — they are structural, not tuned.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;

use crate::error::Result;
use crate::fft;
use crate::field::VectorField;
use crate::geometry::ChannelGrid;

type C64 = Complex<f64>;

/// Sparse rows of the wall-normal first-derivative matrix that is
/// summation-by-parts exact against the trapezoid weights (one-cell flux
/// rows at the walls, centered interior), as `(column, value)` pairs. These
/// must stay in lockstep with the z-part of the compatible divergence in
/// `ops`; the module docs explain why the projector cannot use the
/// higher-order one-sided wall rows here.
fn dz_rows(nz: usize, h: f64) -> Vec<Vec<(usize, f64)>> {
    let mut rows = Vec::with_capacity(nz);
    let inv_h = 1.0 / h;
    let inv2h = 0.5 * inv_h;
    rows.push(vec![(0, -inv_h), (1, inv_h)]);
    for l in 1..nz - 1 {
        rows.push(vec![(l - 1, -inv2h), (l + 1, inv2h)]);
    }
    rows.push(vec![(nz - 2, -inv_h), (nz - 1, inv_h)]);
    rows
}

const BAND: usize = 3;

/// Symmetric banded LDL^T factorization (lower bandwidth 3).
struct BandedLdlt {
    m: usize,
    /// `low[i][k-1] = L[i][i-k]` for `k = 1..=3`.
    low: Vec<[f64; BAND]>,
    d: Vec<f64>,
}

impl BandedLdlt {
    /// Factor a symmetric banded matrix given in lower band storage
    /// `a[i][k] = A[i][i-k]` for `k = 0..=3`.
    fn factor(a: Vec<[f64; BAND + 1]>) -> Self {
        let m = a.len();
        let mut low = vec![[0.0; BAND]; m];
        let mut d = vec![0.0; m];
        for i in 0..m {
            let j0 = i.saturating_sub(BAND);
            for j in j0..i {
                let mut v = a[i][i - j];
                for k in j0..j {
                    v -= low[i][i - k - 1] * low[j][j - k - 1] * d[k];
                }
                low[i][i - j - 1] = v / d[j];
            }
            let mut v = a[i][0];
            for k in j0..i {
                let l = low[i][i - k - 1];
                v -= l * l * d[k];
            }
            d[i] = v;
        }
        BandedLdlt { m, low, d }
    }

    /// Solve `A x = b` in place; the factors are real so complex right-hand
    /// sides split component-wise for free.
    fn solve(&self, b: &mut [C64]) {
        let m = self.m;
        for i in 0..m {
            let j0 = i.saturating_sub(BAND);
            let mut v = b[i];
            for k in j0..i {
                v -= b[k] * self.low[i][i - k - 1];
            }
            b[i] = v;
        }
        for i in 0..m {
            b[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            let jmax = (i + BAND).min(m - 1);
            let mut v = b[i];
            for j in i + 1..=jmax {
                v -= b[j] * self.low[j][j - i - 1];
            }
            b[i] = v;
        }
    }
}

/// Assemble the KKT matrix `C W^-1 C^H` for one squared tangential
/// wavenumber, in lower band storage. Row order: lower-wall trace, divergence
/// at each z node, upper-wall trace.
fn assemble_kkt(
    nz: usize,
    weights: &[f64],
    rows: &[Vec<(usize, f64)>],
    k_sq: f64,
) -> Vec<[f64; BAND + 1]> {
    let m = nz + 2;
    let mut a = vec![[0.0; BAND + 1]; m];
    // Sparse dot of two derivative rows through the inverse weights.
    let dot = |ri: &[(usize, f64)], rj: &[(usize, f64)]| -> f64 {
        let mut s = 0.0;
        for &(ca, va) in ri {
            for &(cb, vb) in rj {
                if ca == cb {
                    s += va * vb / weights[ca];
                }
            }
        }
        s
    };
    a[0][0] = 1.0 / weights[0];
    a[m - 1][0] = 1.0 / weights[nz - 1];
    for i in 0..nz {
        for k in 0..=BAND.min(i) {
            let j = i - k;
            let mut v = dot(&rows[i], &rows[j]);
            if i == j {
                v += k_sq / weights[i];
            }
            a[1 + i][k] = v;
        }
        // Coupling between divergence rows and the trace rows.
        for &(c, v) in &rows[i] {
            if c == 0 && 1 + i <= BAND {
                a[1 + i][1 + i] = v / weights[0];
            }
            if c == nz - 1 && (m - 1) - (1 + i) <= BAND {
                a[m - 1][m - 2 - i] = v / weights[nz - 1];
            }
        }
    }
    a
}

/// Orthogonal projection onto discretely divergence-free fields with
/// impermeable walls. Construct once per grid and reuse; the constructor
/// factors one small banded system per distinct tangential wavenumber.
pub struct LerayProjector {
    grid: Arc<ChannelGrid>,
    rows: Vec<Vec<(usize, f64)>>,
    factors: HashMap<u64, BandedLdlt>,
    /// Pseudo-inverse of the KKT matrix for modes with no tangential symbol.
    singular: DMatrix<f64>,
}

impl LerayProjector {
    pub fn new(grid: &Arc<ChannelGrid>) -> Self {
        let nz = grid.n_normal();
        let weights = grid.z_weights_trapezoid();
        let rows = dz_rows(nz, grid.h_normal());
        let mut factors = HashMap::new();
        for (_, sym, _) in fft::mode_lines(grid) {
            let k_sq = sym[0] * sym[0] + sym[1] * sym[1];
            if k_sq > 0.0 {
                factors
                    .entry(k_sq.to_bits())
                    .or_insert_with(|| BandedLdlt::factor(assemble_kkt(nz, weights, &rows, k_sq)));
            }
        }
        let m = nz + 2;
        let band = assemble_kkt(nz, weights, &rows, 0.0);
        let dense = DMatrix::from_fn(m, m, |i, j| {
            let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
            if hi - lo <= BAND {
                band[hi][hi - lo]
            } else {
                0.0
            }
        });
        let svd = dense.svd(true, true);
        let sigma_max = svd.singular_values.max();
        let singular = svd
            .pseudo_inverse(1e-12 * sigma_max)
            .expect("pseudo-inverse of banded KKT matrix");
        LerayProjector {
            grid: Arc::clone(grid),
            rows,
            factors,
            singular,
        }
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }

    /// Project `f`, returning the corrected field.
    pub fn project(&self, f: &VectorField) -> Result<VectorField> {
        let mut out = f.clone();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    /// Project in place. After the call the discrete divergence vanishes at
    /// every node and the normal component vanishes on both walls, to
    /// rounding.
    pub fn project_in_place(&self, f: &mut VectorField) -> Result<()> {
        self.grid.compatible(f.grid())?;
        let grid = &self.grid;
        let nz = grid.n_normal();
        let dim = grid.dim();
        let weights = grid.z_weights_trapezoid();
        let m = nz + 2;

        let mut spectra: Vec<Vec<C64>> = (0..dim)
            .map(|c| fft::forward_tangential(grid, f.comp(c)))
            .collect();

        let mut rhs = vec![C64::default(); m];
        let mut dzt = vec![C64::default(); nz];
        for (line, sym, _) in fft::mode_lines(grid) {
            let k_sq = sym[0] * sym[0] + sym[1] * sym[1];
            let span = line * nz..(line + 1) * nz;
            // Right-hand side: wall traces and nodal divergence of the mode.
            {
                let un = &spectra[dim - 1][span.clone()];
                rhs[0] = un[0];
                rhs[m - 1] = un[nz - 1];
                for l in 0..nz {
                    let mut v = C64::default();
                    for &(c, w) in &self.rows[l] {
                        v += un[c] * w;
                    }
                    rhs[1 + l] = v;
                }
            }
            for (a, &k) in sym.iter().enumerate().take(dim - 1) {
                if k != 0.0 {
                    let ua = &spectra[a][span.clone()];
                    for l in 0..nz {
                        rhs[1 + l] += C64::new(0.0, k) * ua[l];
                    }
                }
            }

            if k_sq > 0.0 {
                self.factors[&k_sq.to_bits()].solve(&mut rhs);
            } else {
                let re = DVector::from_fn(m, |i, _| rhs[i].re);
                let im = DVector::from_fn(m, |i, _| rhs[i].im);
                let re = &self.singular * re;
                let im = &self.singular * im;
                for i in 0..m {
                    rhs[i] = C64::new(re[i], im[i]);
                }
            }

            // Correction u <- u - W^-1 C^H mu.
            for (a, &k) in sym.iter().enumerate().take(dim - 1) {
                if k != 0.0 {
                    let ua = &mut spectra[a][span.clone()];
                    for l in 0..nz {
                        ua[l] += C64::new(0.0, k) * rhs[1 + l] / weights[l];
                    }
                }
            }
            {
                for v in dzt.iter_mut() {
                    *v = C64::default();
                }
                for l in 0..nz {
                    for &(c, w) in &self.rows[l] {
                        dzt[c] += rhs[1 + l] * w;
                    }
                }
                dzt[0] += rhs[0];
                dzt[nz - 1] += rhs[m - 1];
                let un = &mut spectra[dim - 1][span];
                for l in 0..nz {
                    un[l] -= dzt[l] / weights[l];
                }
            }
        }

        for (c, spectrum) in spectra.into_iter().enumerate() {
            let values = fft::inverse_tangential(grid, spectrum);
            f.comp_mut(c).copy_from_slice(&values);
        }
        Ok(())
    }
}
