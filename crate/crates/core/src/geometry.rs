//! Channel grid: `T^(dim-1) x (0,1)` with periodic tangential directions of
//! length `2*pi` and walls at `z = 0`, `z = 1`.
//!
//! Tangential directions carry `n_tangential` uniform nodes (the point at
//! `2*pi` is identified with the one at `0`); the wall-normal direction
//! carries `n_normal` uniform nodes including both walls. Node quadrature is
//! the exact trapezoidal/uniform rule tangentially (exact for band-limited
//! integrands) times composite Simpson across the channel, so integrands that
//! are trigonometric polynomials tangentially and low-degree polynomials in
//! `z` are integrated to rounding error. Composite Simpson requires an odd
//! node count, hence `n_normal` must be odd.
//!
//! Storage layout for collocated fields is row-major with `z` contiguous:
//! `idx = ix * n_normal + iz` in 2D and
//! `idx = (ix * n_tangential + iy) * n_normal + iz` in 3D.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Conormal weight `phi(z) = z (1 - z)`: vanishes linearly at both walls,
/// positive inside, so `phi * d/dz` is a derivative field tangent to the
/// boundary of the channel.
pub fn conormal_weight(z: f64) -> f64 {
    z * (1.0 - z)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelGrid {
    dim: usize,
    n_tangential: usize,
    n_normal: usize,
    h_tangential: f64,
    h_normal: f64,
    z_nodes: Vec<f64>,
    /// Simpson weights along `z`; sum to exactly 1 up to rounding.
    z_weights: Vec<f64>,
    /// Trapezoid weights along `z`. This is the quadrature the wall-normal
    /// summation-by-parts derivative pairs with exactly, so conservation
    /// statements in the time integrator use these weights.
    z_weights_trap: Vec<f64>,
    /// `phi(z)` sampled at the nodes.
    phi: Vec<f64>,
}

impl PartialEq for ChannelGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n_tangential == other.n_tangential
            && self.n_normal == other.n_normal
    }
}

impl ChannelGrid {
    /// Build a channel grid. `dim` is 2 or 3; `n_tangential` (nodes per
    /// periodic direction) must be even and at least 4 for symmetric spectral
    /// differentiation; `n_normal` must be odd and at least 5 for the
    /// composite Simpson rule and one-sided wall stencils.
    pub fn new(dim: usize, n_tangential: usize, n_normal: usize) -> Result<Arc<ChannelGrid>> {
        if dim != 2 && dim != 3 {
            return Err(Error::config("dim", format!("must be 2 or 3, got {dim}")));
        }
        if n_tangential < 4 || n_tangential % 2 != 0 {
            return Err(Error::config(
                "n_tangential",
                format!("must be even and >= 4, got {n_tangential}"),
            ));
        }
        if n_normal < 5 || n_normal % 2 == 0 {
            return Err(Error::config(
                "n_normal",
                format!("must be odd and >= 5 (composite Simpson quadrature), got {n_normal}"),
            ));
        }
        let h_normal = 1.0 / (n_normal - 1) as f64;
        let z_nodes: Vec<f64> = (0..n_normal).map(|i| i as f64 * h_normal).collect();
        let mut z_weights = vec![0.0; n_normal];
        for i in 0..n_normal {
            let c = if i == 0 || i == n_normal - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            z_weights[i] = c * h_normal / 3.0;
        }
        let mut z_weights_trap = vec![h_normal; n_normal];
        z_weights_trap[0] = 0.5 * h_normal;
        z_weights_trap[n_normal - 1] = 0.5 * h_normal;
        let phi = z_nodes.iter().map(|&z| conormal_weight(z)).collect();
        Ok(Arc::new(ChannelGrid {
            dim,
            n_tangential,
            n_normal,
            h_tangential: 2.0 * std::f64::consts::PI / n_tangential as f64,
            h_normal,
            z_nodes,
            z_weights,
            z_weights_trap,
            phi,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of tangential (periodic) directions: `dim - 1`.
    pub fn n_tan_dirs(&self) -> usize {
        self.dim - 1
    }

    pub fn n_tangential(&self) -> usize {
        self.n_tangential
    }

    pub fn n_normal(&self) -> usize {
        self.n_normal
    }

    pub fn h_tangential(&self) -> f64 {
        self.h_tangential
    }

    pub fn h_normal(&self) -> f64 {
        self.h_normal
    }

    pub fn z_nodes(&self) -> &[f64] {
        &self.z_nodes
    }

    pub fn z_weights(&self) -> &[f64] {
        &self.z_weights
    }

    /// Trapezoid weights along `z` (half weight at the walls). These form an
    /// exact summation-by-parts pair with the one-sided/centered wall-normal
    /// derivative, so discrete conservation arguments use them.
    pub fn z_weights_trapezoid(&self) -> &[f64] {
        &self.z_weights_trap
    }

    /// `phi(z)` at the wall-normal nodes.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Tangential coordinate of node index `j` (same in every periodic
    /// direction).
    pub fn tangential_node(&self, j: usize) -> f64 {
        j as f64 * self.h_tangential
    }

    /// Total number of collocation nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_tangential.pow(self.n_tan_dirs() as u32) * self.n_normal
    }

    /// Number of tangential lines (nodes per z-level).
    pub fn n_lines(&self) -> usize {
        self.n_tangential.pow(self.n_tan_dirs() as u32)
    }

    /// Volume of the domain: `(2*pi)^(dim-1) * 1`.
    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.n_tan_dirs() as i32)
    }

    /// Area of one wall plane: `(2*pi)^(dim-1)`.
    pub fn wall_area(&self) -> f64 {
        self.volume()
    }

    /// Uniform tangential quadrature weight per tangential node (one wall
    /// plane integrates with this weight alone).
    pub fn tangential_weight(&self) -> f64 {
        self.h_tangential.powi(self.n_tan_dirs() as i32)
    }

    /// Volume quadrature weight of the node at z-index `iz` (independent of
    /// the tangential indices).
    pub fn quad_weight(&self, iz: usize) -> f64 {
        self.tangential_weight() * self.z_weights[iz]
    }

    /// Flat index of a node. `tan` lists the tangential indices
    /// (1 entry in 2D, 2 in 3D), `iz` the wall-normal index.
    pub fn index(&self, tan: &[usize], iz: usize) -> usize {
        debug_assert_eq!(tan.len(), self.n_tan_dirs());
        let mut line = 0;
        for &t in tan {
            line = line * self.n_tangential + t;
        }
        line * self.n_normal + iz
    }

    /// Integrate a grid function given as node samples.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_nodes());
        let tw = self.tangential_weight();
        let nz = self.n_normal;
        let mut acc = 0.0;
        for line in values.chunks_exact(nz) {
            let mut line_acc = 0.0;
            for (v, w) in line.iter().zip(&self.z_weights) {
                line_acc += v * w;
            }
            acc += line_acc;
        }
        acc * tw
    }

    /// Integrate a grid function with the trapezoid rule along `z` (uniform
    /// tangential weights as usual). Second-order accurate; used wherever a
    /// discretely conserved quadratic form is required rather than the most
    /// accurate value.
    pub fn integrate_trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_nodes());
        let tw = self.tangential_weight();
        let nz = self.n_normal;
        let mut acc = 0.0;
        for line in values.chunks_exact(nz) {
            let mut line_acc = 0.0;
            for (v, w) in line.iter().zip(&self.z_weights_trap) {
                line_acc += v * w;
            }
            acc += line_acc;
        }
        acc * tw
    }

    /// Integrate samples over one wall plane (`iz = 0` or `iz = n_normal-1`):
    /// `values` must hold one entry per tangential line in line order.
    pub fn integrate_wall(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_lines());
        values.iter().sum::<f64>() * self.tangential_weight()
    }

    /// Check that another grid is the same discretization.
    pub fn compatible(&self, other: &ChannelGrid) -> Result<()> {
        if self != other {
            return Err(Error::Usage(format!(
                "grid mismatch: {}x{}^{} vs {}x{}^{}",
                self.n_tangential,
                self.n_normal,
                self.dim,
                other.n_tangential,
                other.n_normal,
                other.dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangential_spacing_matches_period() {
        let g = ChannelGrid::new(3, 8, 9).unwrap();
        assert!((g.h_tangential() - 0.7853981633974483).abs() < 1e-15);
        assert_eq!(g.tangential_node(0), 0.0);
        assert!((g.tangential_node(7) - 7.0 * 2.0 * std::f64::consts::PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn z_nodes_span_channel_and_increase() {
        let g = ChannelGrid::new(2, 8, 17).unwrap();
        let z = g.z_nodes();
        assert_eq!(z[0], 0.0);
        assert_eq!(*z.last().unwrap(), 1.0);
        assert!(z.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn quad_weights_sum_to_volume() {
        for (dim, expect) in [(2, 2.0 * std::f64::consts::PI), (3, 39.47841760435743)] {
            let g = ChannelGrid::new(dim, 16, 17).unwrap();
            let total: f64 = (0..g.n_normal())
                .map(|iz| g.quad_weight(iz))
                .sum::<f64>()
                * g.n_lines() as f64;
            assert!(
                (total - expect).abs() <= 1e-12 * expect,
                "dim {dim}: {total} vs {expect}"
            );
            let ones = vec![1.0; g.n_nodes()];
            assert!((g.integrate(&ones) - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn conormal_weight_vanishes_at_walls_positive_inside() {
        let g = ChannelGrid::new(2, 8, 33).unwrap();
        let phi = g.phi();
        assert_eq!(phi[0], 0.0);
        assert_eq!(*phi.last().unwrap(), 0.0);
        assert!(phi[1..phi.len() - 1].iter().all(|&p| p > 0.0));
    }

    #[test]
    fn rejects_bad_resolutions() {
        for (dim, nt, nn, field) in [
            (4, 8, 9, "dim"),
            (2, 3, 9, "n_tangential"),
            (2, 7, 9, "n_tangential"),
            (2, 8, 4, "n_normal"),
            (2, 8, 8, "n_normal"),
        ] {
            match ChannelGrid::new(dim, nt, nn) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error naming {field}, got {other:?}"),
            }
        }
    }

    /// Band-limited tangentially, polynomial (degree 3) in z: the quadrature
    /// must agree with a 4x-refined evaluation to rounding error, and with
    /// the closed-form integral 17*pi/3.
    #[test]
    fn quadrature_matches_refined_oracle_on_banded_polynomial() {
        let integrand = |x: f64, z: f64| (2.0 + x.sin()) * (1.0 + z - z * z + z * z * z);
        let eval = |g: &ChannelGrid| {
            let mut vals = vec![0.0; g.n_nodes()];
            for ix in 0..g.n_tangential() {
                for iz in 0..g.n_normal() {
                    vals[g.index(&[ix], iz)] = integrand(g.tangential_node(ix), g.z_nodes()[iz]);
                }
            }
            g.integrate(&vals)
        };
        let coarse = eval(&ChannelGrid::new(2, 8, 9).unwrap());
        let fine = eval(&ChannelGrid::new(2, 32, 33).unwrap());
        let exact = 17.0 * std::f64::consts::PI / 3.0;
        assert!((coarse - fine).abs() <= 1e-10 * fine.abs());
        assert!((coarse - exact).abs() <= 1e-12 * exact);
    }
}
