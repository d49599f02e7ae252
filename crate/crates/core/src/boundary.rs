//! Wall closures and boundary diagnostics for the slip channel.
//!
//! The walls are impermeable (`f . n = 0`) and the tangential components obey
//! a friction (Navier) law written pointwise with the outward normal `n`:
//! `d_n f_tau = -2 zeta f_tau`. On the flat walls of the channel this reads
//!
//! * lower wall `z = 0` (n = -e_z):  `d_z f_tau =  2 zeta f_tau`,
//! * upper wall `z = 1` (n = +e_z):  `d_z f_tau = -2 zeta f_tau`.
//!
//! Diffusion terms see the wall through one ghost plane per side. Tangential
//! components get a Robin ghost that encodes the friction law through the
//! centered first-derivative stencil; with `zeta = 0` this degenerates to an
//! even (mirror) extension. The normal component is closed by cubic
//! extrapolation, which keeps the wall rows of the Laplacian second-order
//! accurate without imposing any spurious symmetry on `d_zz f_n`.
//!
//! Diagnostics (`traction_defect`, `vorticity_residual`) deliberately avoid
//! the ghost closure: they measure the boundary condition with independent
//! one-sided wall stencils, so a field that merely *stores* consistent ghosts
//! still has to earn a small residual.

use crate::field::VectorField;
use crate::geometry::ChannelGrid;
use crate::fft;

/// Friction law applied at both walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallLaw {
    /// Impermeable wall with tangential friction coefficient `zeta`.
    Navier { zeta: f64 },
    /// Impermeable free-slip wall (no tangential condition; ghosts use the
    /// frictionless mirror extension so diffusion remains well defined).
    Slip,
}

impl WallLaw {
    pub fn zeta(&self) -> f64 {
        match self {
            WallLaw::Navier { zeta } => *zeta,
            WallLaw::Slip => 0.0,
        }
    }
}

/// Values attached to the lower (`z = 0`) and upper (`z = 1`) walls.
#[derive(Debug, Clone)]
pub struct WallPair<T> {
    pub lower: T,
    pub upper: T,
}

/// One ghost plane per wall and component, indexed `[component][line]`.
pub struct GhostPlanes {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// Extract the wall slice (`iz = 0` or `iz = nz - 1`) of a node array.
pub fn wall_slice(grid: &ChannelGrid, values: &[f64], upper: bool) -> Vec<f64> {
    let nz = grid.n_normal();
    let iz = if upper { nz - 1 } else { 0 };
    values.chunks_exact(nz).map(|line| line[iz]).collect()
}

/// Per-line squared magnitude of the tangential part on each wall.
pub fn wall_tangential_square(f: &VectorField) -> WallPair<Vec<f64>> {
    let grid = f.grid();
    let mut pair = WallPair {
        lower: vec![0.0; grid.n_lines()],
        upper: vec![0.0; grid.n_lines()],
    };
    for c in 0..grid.dim() - 1 {
        for (acc, v) in pair.lower.iter_mut().zip(wall_slice(grid, f.comp(c), false)) {
            *acc += v * v;
        }
        for (acc, v) in pair.upper.iter_mut().zip(wall_slice(grid, f.comp(c), true)) {
            *acc += v * v;
        }
    }
    pair
}

/// Compute ghost planes for every component of `f` under `law`.
///
/// Tangential components use the Robin ghost derived from the centered
/// stencil of the friction law; the normal component is extrapolated
/// cubically through the four nodes nearest each wall.
pub fn close_ghosts(f: &VectorField, law: WallLaw) -> GhostPlanes {
    let grid = f.grid();
    let nz = grid.n_normal();
    let s = 4.0 * law.zeta() * grid.h_normal();
    let dim = grid.dim();
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    for c in 0..dim {
        let data = f.comp(c);
        let mut lo = Vec::with_capacity(grid.n_lines());
        let mut hi = Vec::with_capacity(grid.n_lines());
        for line in data.chunks_exact(nz) {
            if c + 1 == dim {
                lo.push(4.0 * line[0] - 6.0 * line[1] + 4.0 * line[2] - line[3]);
                hi.push(
                    4.0 * line[nz - 1] - 6.0 * line[nz - 2] + 4.0 * line[nz - 3]
                        - line[nz - 4],
                );
            } else {
                lo.push(line[1] - s * line[0]);
                hi.push(line[nz - 2] - s * line[nz - 1]);
            }
        }
        lower.push(lo);
        upper.push(hi);
    }
    GhostPlanes { lower, upper }
}

/// Component-wise Laplacian whose wall rows are closed with the ghost planes
/// of `law`. This is the diffusion operator of the viscous system; the wall
/// rows are where the friction law enters the evolution.
pub fn laplacian_closed(f: &VectorField, law: WallLaw) -> VectorField {
    let grid = f.grid();
    let nz = grid.n_normal();
    let h2 = grid.h_normal() * grid.h_normal();
    let ghosts = close_ghosts(f, law);
    let mut out = VectorField::zeros(grid);
    for c in 0..grid.dim() {
        let mut acc = fft::tangential_derivative(grid, f.comp(c), 0, 2);
        for a in 1..grid.dim() - 1 {
            let d = fft::tangential_derivative(grid, f.comp(c), a, 2);
            for (x, y) in acc.iter_mut().zip(&d) {
                *x += y;
            }
        }
        let data = f.comp(c);
        for (il, (line, dst)) in data
            .chunks_exact(nz)
            .zip(acc.chunks_exact_mut(nz))
            .enumerate()
        {
            dst[0] += (line[1] - 2.0 * line[0] + ghosts.lower[c][il]) / h2;
            for i in 1..nz - 1 {
                dst[i] += (line[i + 1] - 2.0 * line[i] + line[i - 1]) / h2;
            }
            dst[nz - 1] += (ghosts.upper[c][il] - 2.0 * line[nz - 1] + line[nz - 2]) / h2;
        }
        out.comp_mut(c).copy_from_slice(&acc);
    }
    out
}

fn one_sided_wall_dz(grid: &ChannelGrid, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nz = grid.n_normal();
    let h = grid.h_normal();
    let mut lo = Vec::with_capacity(grid.n_lines());
    let mut hi = Vec::with_capacity(grid.n_lines());
    for line in values.chunks_exact(nz) {
        lo.push((-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * h));
        hi.push((3.0 * line[nz - 1] - 4.0 * line[nz - 2] + line[nz - 3]) / (2.0 * h));
    }
    (lo, hi)
}

/// Tangential traction defect of the friction law, per wall.
///
/// For each tangential direction `c` this evaluates
/// `eta_c = ((grad f + grad f^T) n)_c + 2 zeta f_c`
/// on the wall, with `n` the *outward* normal, using one-sided wall stencils
/// for `d_z` and spectral derivatives tangentially. A field satisfying the
/// friction law and impermeability exactly has `eta = 0`; the returned values
/// are indexed `[tangential component][line]`.
pub fn traction_defect(f: &VectorField, law: WallLaw) -> WallPair<Vec<Vec<f64>>> {
    let grid = f.grid();
    let zeta = law.zeta();
    let dim = grid.dim();
    let normal = f.comp(dim - 1);
    let mut lower = Vec::with_capacity(dim - 1);
    let mut upper = Vec::with_capacity(dim - 1);
    for c in 0..dim - 1 {
        let (dz_lo, dz_hi) = one_sided_wall_dz(grid, f.comp(c));
        let dtan_n = fft::tangential_derivative(grid, normal, c, 1);
        let dn_lo = wall_slice(grid, &dtan_n, false);
        let dn_hi = wall_slice(grid, &dtan_n, true);
        let f_lo = wall_slice(grid, f.comp(c), false);
        let f_hi = wall_slice(grid, f.comp(c), true);
        let lo = (0..grid.n_lines())
            .map(|i| -(dz_lo[i] + dn_lo[i]) + 2.0 * zeta * f_lo[i])
            .collect();
        let hi = (0..grid.n_lines())
            .map(|i| (dz_hi[i] + dn_hi[i]) + 2.0 * zeta * f_hi[i])
            .collect();
        lower.push(lo);
        upper.push(hi);
    }
    WallPair { lower, upper }
}

/// Largest traction defect on each wall.
pub fn traction_defect_max(f: &VectorField, law: WallLaw) -> WallPair<f64> {
    let d = traction_defect(f, law);
    let sup = |comps: &[Vec<f64>]| {
        comps
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    };
    WallPair {
        lower: sup(&d.lower),
        upper: sup(&d.upper),
    }
}

/// Residual of the vorticity form of the friction law, per wall.
///
/// On a flat wall the friction law forces the tangential vorticity trace to
/// `omega_tau = -2 zeta (n x f)_tau`. In 2D the single residual component is
/// `omega - 2 zeta f_x` on the lower wall and `omega + 2 zeta f_x` on the
/// upper wall. Derivatives use the one-sided wall stencils, so this is an
/// independent check rather than a restatement of the ghost closure.
pub fn vorticity_residual(f: &VectorField, law: WallLaw) -> WallPair<Vec<Vec<f64>>> {
    let grid = f.grid();
    let zeta = law.zeta();
    let dim = grid.dim();
    let normal = f.comp(dim - 1);
    if dim == 2 {
        let (dz_lo, dz_hi) = one_sided_wall_dz(grid, f.comp(0));
        let dx_n = fft::tangential_derivative(grid, normal, 0, 1);
        let dxn_lo = wall_slice(grid, &dx_n, false);
        let dxn_hi = wall_slice(grid, &dx_n, true);
        let f_lo = wall_slice(grid, f.comp(0), false);
        let f_hi = wall_slice(grid, f.comp(0), true);
        let lo: Vec<f64> = (0..grid.n_lines())
            .map(|i| (dz_lo[i] - dxn_lo[i]) - 2.0 * zeta * f_lo[i])
            .collect();
        let hi: Vec<f64> = (0..grid.n_lines())
            .map(|i| (dz_hi[i] - dxn_hi[i]) + 2.0 * zeta * f_hi[i])
            .collect();
        return WallPair {
            lower: vec![lo],
            upper: vec![hi],
        };
    }
    // 3D: omega_1 = d_y f_3 - d_z f_2, omega_2 = d_z f_1 - d_x f_3.
    let (dz1_lo, dz1_hi) = one_sided_wall_dz(grid, f.comp(0));
    let (dz2_lo, dz2_hi) = one_sided_wall_dz(grid, f.comp(1));
    let dx_n = fft::tangential_derivative(grid, normal, 0, 1);
    let dy_n = fft::tangential_derivative(grid, normal, 1, 1);
    let slices = |v: &[f64]| (wall_slice(grid, v, false), wall_slice(grid, v, true));
    let (dxn_lo, dxn_hi) = slices(&dx_n);
    let (dyn_lo, dyn_hi) = slices(&dy_n);
    let (f1_lo, f1_hi) = slices(f.comp(0));
    let (f2_lo, f2_hi) = slices(f.comp(1));
    let n = grid.n_lines();
    // Lower wall (n = -e_z): residuals omega_1 + 2 zeta f_2, omega_2 - 2 zeta f_1.
    let lo1: Vec<f64> = (0..n)
        .map(|i| (dyn_lo[i] - dz2_lo[i]) + 2.0 * zeta * f2_lo[i])
        .collect();
    let lo2: Vec<f64> = (0..n)
        .map(|i| (dz1_lo[i] - dxn_lo[i]) - 2.0 * zeta * f1_lo[i])
        .collect();
    // Upper wall (n = +e_z): residuals omega_1 - 2 zeta f_2, omega_2 + 2 zeta f_1.
    let hi1: Vec<f64> = (0..n)
        .map(|i| (dyn_hi[i] - dz2_hi[i]) - 2.0 * zeta * f2_hi[i])
        .collect();
    let hi2: Vec<f64> = (0..n)
        .map(|i| (dz1_hi[i] - dxn_hi[i]) + 2.0 * zeta * f1_hi[i])
        .collect();
    WallPair {
        lower: vec![lo1, lo2],
        upper: vec![hi1, hi2],
    }
}

/// Largest vorticity-law residual on each wall.
pub fn vorticity_residual_max(f: &VectorField, law: WallLaw) -> WallPair<f64> {
    let r = vorticity_residual(f, law);
    let sup = |comps: &[Vec<f64>]| {
        comps
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    };
    WallPair {
        lower: sup(&r.lower),
        upper: sup(&r.upper),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::geometry::ChannelGrid;

    /// `f(z) = 1 + 2 zeta z (1 - z)` satisfies the friction law exactly at
    /// both walls, and because it is quadratic the Robin ghost reproduces its
    /// analytic continuation to machine precision.
    #[test]
    fn robin_ghost_matches_analytic_continuation_of_quadratic_profile() {
        let zeta = 0.7;
        let grid = ChannelGrid::new(2, 4, 17).unwrap();
        let h = grid.h_normal();
        let profile = |z: f64| 1.0 + 2.0 * zeta * z * (1.0 - z);
        let f = VectorField::from_fn(&grid, |c, comp| if comp == 0 { profile(c[1]) } else { 0.0 });
        let ghosts = close_ghosts(&f, WallLaw::Navier { zeta });
        for il in 0..grid.n_lines() {
            assert!((ghosts.lower[0][il] - profile(-h)).abs() < 1e-14);
            assert!((ghosts.upper[0][il] - profile(1.0 + h)).abs() < 1e-14);
        }
    }

    #[test]
    fn slip_ghost_is_a_mirror_extension() {
        let grid = ChannelGrid::new(2, 4, 9).unwrap();
        let f = VectorField::from_fn(&grid, |c, comp| {
            if comp == 0 {
                (std::f64::consts::PI * c[1]).cos()
            } else {
                0.0
            }
        });
        let ghosts = close_ghosts(&f, WallLaw::Slip);
        let nz = grid.n_normal();
        for il in 0..grid.n_lines() {
            let line = &f.comp(0)[il * nz..(il + 1) * nz];
            assert_eq!(ghosts.lower[0][il], line[1]);
            assert_eq!(ghosts.upper[0][il], line[nz - 2]);
        }
    }

    #[test]
    fn normal_component_ghost_is_exact_for_cubics() {
        let grid = ChannelGrid::new(2, 4, 17).unwrap();
        let h = grid.h_normal();
        let profile = |z: f64| z - 2.0 * z * z + 0.5 * z * z * z;
        let f = VectorField::from_fn(&grid, |c, comp| if comp == 1 { profile(c[1]) } else { 0.0 });
        let ghosts = close_ghosts(&f, WallLaw::Navier { zeta: 0.3 });
        for il in 0..grid.n_lines() {
            assert!((ghosts.lower[1][il] - profile(-h)).abs() < 1e-13);
            assert!((ghosts.upper[1][il] - profile(1.0 + h)).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_laplacian_is_exact_on_the_quadratic_friction_profile() {
        let zeta = 0.45;
        let grid = ChannelGrid::new(2, 8, 33).unwrap();
        let f = VectorField::from_fn(&grid, |c, comp| {
            if comp == 0 {
                1.0 + 2.0 * zeta * c[1] * (1.0 - c[1])
            } else {
                0.0
            }
        });
        let lap = laplacian_closed(&f, WallLaw::Navier { zeta });
        for v in lap.comp(0) {
            assert!((v + 4.0 * zeta).abs() < 1e-10);
        }
        assert!(lap.comp(1).iter().all(|v| v.abs() < 1e-10));
    }

    /// Transcendental friction eigenprofile: `cos(a (z - 1/2))` with
    /// `a tan(a/2) = 2 zeta` satisfies the friction law at both walls. The
    /// one-sided traction diagnostic must then converge at second order.
    #[test]
    fn traction_defect_is_second_order_on_transcendental_profile() {
        let zeta = 0.5;
        let target = 2.0 * zeta;
        let g = |a: f64| a * (a / 2.0).tan() - target;
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        assert!(g(a).abs() < 1e-10);

        let defect = |nz: usize| {
            let grid = ChannelGrid::new(2, 4, nz).unwrap();
            let f = VectorField::from_fn(&grid, |c, comp| {
                if comp == 0 {
                    (a * (c[1] - 0.5)).cos()
                } else {
                    0.0
                }
            });
            let d = traction_defect_max(&f, WallLaw::Navier { zeta });
            d.lower.max(d.upper)
        };
        let coarse = defect(33);
        let fine = defect(65);
        let ratio = coarse / fine;
        assert!(
            (3.2..=5.2).contains(&ratio),
            "expected ~4x reduction, got {ratio} (coarse {coarse}, fine {fine})"
        );
    }

    /// With a vanishing normal trace the traction and vorticity forms of the
    /// friction law agree identically: lower-wall traction equals minus the
    /// vorticity residual, upper-wall traction equals plus the residual.
    #[test]
    fn traction_and_vorticity_diagnostics_agree_in_2d() {
        let zeta = 0.8;
        let grid = ChannelGrid::new(2, 16, 17).unwrap();
        let f = VectorField::from_fn(&grid, |c, comp| {
            if comp == 0 {
                (c[0].sin() + 0.3) * (1.0 + c[1] - 0.5 * c[1] * c[1])
            } else {
                (2.0 * c[0]).cos() * c[1] * (1.0 - c[1])
            }
        });
        let law = WallLaw::Navier { zeta };
        let eta = traction_defect(&f, law);
        let res = vorticity_residual(&f, law);
        let scale = eta.lower[0]
            .iter()
            .chain(&eta.upper[0])
            .fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..grid.n_lines() {
            assert!((eta.lower[0][i] + res.lower[0][i]).abs() < 1e-12 * scale);
            assert!((eta.upper[0][i] - res.upper[0][i]).abs() < 1e-12 * scale);
        }
    }

    /// Sign convention: outward normal, friction term `+2 zeta f_tau`. For
    /// the frictionless law and `f = (z^2, 0)` the upper-wall traction is
    /// `d_z f_x |_{z=1} = +2`.
    #[test]
    fn traction_sign_convention_upper_wall() {
        let grid = ChannelGrid::new(2, 4, 17).unwrap();
        let f = VectorField::from_fn(&grid, |c, comp| if comp == 0 { c[1] * c[1] } else { 0.0 });
        let eta = traction_defect(&f, WallLaw::Slip);
        for i in 0..grid.n_lines() {
            assert!((eta.upper[0][i] - 2.0).abs() < 1e-11);
            assert!(eta.lower[0][i].abs() < 1e-11);
        }
    }

    #[test]
    fn vorticity_residual_vanishes_for_consistent_3d_field() {
        let zeta = 0.6;
        let grid = ChannelGrid::new(3, 8, 33).unwrap();
        // Tangential components built from the quadratic friction profile,
        // normal component zero: satisfies the law exactly.
        let f = VectorField::from_fn(&grid, |c, comp| {
            let profile = 1.0 + 2.0 * zeta * c[2] * (1.0 - c[2]);
            match comp {
                0 => c[1].sin().mul_add(0.0, profile),
                1 => -0.5 * profile,
                _ => 0.0,
            }
        });
        let r = vorticity_residual_max(&f, WallLaw::Navier { zeta });
        // One-sided stencils are exact on quadratics.
        assert!(r.lower < 1e-11, "lower {}", r.lower);
        assert!(r.upper < 1e-11, "upper {}", r.upper);
    }
}
