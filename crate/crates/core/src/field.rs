//! Collocated fields on a [`ChannelGrid`] and their weighted inner products.
//!
//! All integrals and norms use the grid quadrature (uniform tangential rule
//! times composite Simpson in `z`), so `inner_product(f, f)` is the discrete
//! `L^2` norm squared that every other module (projection, energy audit,
//! error norms) refers to.

use crate::error::Result;
use crate::geometry::ChannelGrid;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<ChannelGrid>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<ChannelGrid>,
    comps: Vec<Vec<f64>>,
}

/// Rank-2 tensor samples; entry `(a, b)` holds `T_ab`, e.g. `d_a f_b` for a
/// gradient. Stored row-major in `a`.
#[derive(Debug, Clone)]
pub struct TensorField {
    grid: Arc<ChannelGrid>,
    comps: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<ChannelGrid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            data: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn from_data(grid: &Arc<ChannelGrid>, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.n_nodes());
        ScalarField {
            grid: grid.clone(),
            data,
        }
    }

    /// Sample a closure of the node coordinates (`[x, z]` or `[x, y, z]`).
    pub fn from_fn(grid: &Arc<ChannelGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut data = vec![0.0; grid.n_nodes()];
        for_each_node(grid, |idx, coords| data[idx] = f(coords));
        ScalarField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.data)
    }

    /// Volume mean.
    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.volume()
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.data {
            *v -= m;
        }
    }

    pub fn inner_product(&self, other: &ScalarField) -> Result<f64> {
        self.grid.compatible(&other.grid)?;
        let prod: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(self.grid.integrate(&prod))
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner_product(self).expect("same grid").max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<ChannelGrid>) -> Self {
        VectorField {
            grid: grid.clone(),
            comps: (0..grid.dim()).map(|_| vec![0.0; grid.n_nodes()]).collect(),
        }
    }

    /// Sample a closure `(coords, component) -> value`.
    pub fn from_fn(grid: &Arc<ChannelGrid>, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let mut comps: Vec<Vec<f64>> =
            (0..grid.dim()).map(|_| vec![0.0; grid.n_nodes()]).collect();
        for_each_node(grid, |idx, coords| {
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[idx] = f(coords, c);
            }
        });
        VectorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn from_comps(grid: &Arc<ChannelGrid>, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), grid.dim());
        for c in &comps {
            assert_eq!(c.len(), grid.n_nodes());
        }
        VectorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    /// The wall-normal component (last index).
    pub fn normal_comp(&self) -> &[f64] {
        self.comps.last().unwrap()
    }

    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn inner_product(&self, other: &VectorField) -> Result<f64> {
        self.grid.compatible(&other.grid)?;
        let mut acc = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            acc += self.grid.integrate(&prod);
        }
        Ok(acc)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner_product(self).expect("same grid").max(0.0).sqrt()
    }

    /// Max over nodes of the Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        let n = self.grid.n_nodes();
        let mut m: f64 = 0.0;
        for i in 0..n {
            let s: f64 = self.comps.iter().map(|c| c[i] * c[i]).sum();
            m = m.max(s);
        }
        m.sqrt()
    }

    /// Max over nodes and components of the absolute value.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &VectorField, c: f64) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for comp in &mut self.comps {
            for x in comp.iter_mut() {
                *x *= c;
            }
        }
    }

    pub fn difference(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.compatible(&other.grid)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(VectorField {
            grid: self.grid.clone(),
            comps,
        })
    }
}

impl TensorField {
    pub fn zeros(grid: &Arc<ChannelGrid>) -> Self {
        let d = grid.dim();
        TensorField {
            grid: grid.clone(),
            comps: (0..d * d).map(|_| vec![0.0; grid.n_nodes()]).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<ChannelGrid> {
        &self.grid
    }

    pub fn entry(&self, a: usize, b: usize) -> &[f64] {
        &self.comps[a * self.grid.dim() + b]
    }

    pub fn entry_mut(&mut self, a: usize, b: usize) -> &mut [f64] {
        let d = self.grid.dim();
        &mut self.comps[a * d + b]
    }

    pub fn set_entry(&mut self, a: usize, b: usize, data: Vec<f64>) {
        let d = self.grid.dim();
        assert_eq!(data.len(), self.grid.n_nodes());
        self.comps[a * d + b] = data;
    }

    /// Squared Frobenius `L^2` norm: `sum_ab ||T_ab||^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| {
                let sq: Vec<f64> = c.iter().map(|v| v * v).collect();
                self.grid.integrate(&sq)
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .fold(0.0, f64::max)
    }
}

/// Visit every node with its flat index and coordinates.
pub fn for_each_node(grid: &ChannelGrid, mut f: impl FnMut(usize, &[f64])) {
    let nn = grid.n_normal();
    let nt = grid.n_tangential();
    match grid.dim() {
        2 => {
            let mut coords = [0.0; 2];
            for ix in 0..nt {
                coords[0] = grid.tangential_node(ix);
                for iz in 0..nn {
                    coords[1] = grid.z_nodes()[iz];
                    f(ix * nn + iz, &coords);
                }
            }
        }
        3 => {
            let mut coords = [0.0; 3];
            for ix in 0..nt {
                coords[0] = grid.tangential_node(ix);
                for iy in 0..nt {
                    coords[1] = grid.tangential_node(iy);
                    for iz in 0..nn {
                        coords[2] = grid.z_nodes()[iz];
                        f((ix * nt + iy) * nn + iz, &coords);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Convenience free function mirroring the method, with the grid check.
pub fn inner_product(a: &VectorField, b: &VectorField) -> Result<f64> {
    a.inner_product(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn sine_inner_product_on_three_dimensional_channel() {
        let grid = ChannelGrid::new(3, 16, 9).unwrap();
        let f = ScalarField::from_fn(&grid, |c| c[0].sin());
        let ip = f.inner_product(&f).unwrap();
        assert!((ip - 19.739208802178716).abs() < 1e-10 * 19.74);
    }

    #[test]
    fn constant_field_integrates_to_volume() {
        let grid = ChannelGrid::new(3, 8, 9).unwrap();
        let one = ScalarField::from_fn(&grid, |_| 1.0);
        assert!((one.integrate() - 39.47841760435743).abs() < 1e-10);
    }

    #[test]
    fn inner_product_is_symmetric_and_bilinear() {
        let grid = ChannelGrid::new(2, 8, 9).unwrap();
        let f = ScalarField::from_fn(&grid, |c| c[0].sin() + c[1]);
        let g = ScalarField::from_fn(&grid, |c| c[0].cos() * (1.0 - c[1]));
        let h = ScalarField::from_fn(&grid, |c| c[1] * c[1]);
        let fg = f.inner_product(&g).unwrap();
        let gf = g.inner_product(&f).unwrap();
        assert!((fg - gf).abs() < 1e-14);
        let mut g_plus_2h = g.clone();
        for (a, b) in g_plus_2h.data.iter_mut().zip(&h.data) {
            *a += 2.0 * b;
        }
        let lhs = f.inner_product(&g_plus_2h).unwrap();
        let rhs = fg + 2.0 * f.inner_product(&h).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn mismatched_grids_are_a_usage_error() {
        let g1 = ChannelGrid::new(2, 8, 9).unwrap();
        let g2 = ChannelGrid::new(2, 8, 17).unwrap();
        let f = ScalarField::zeros(&g1);
        let g = ScalarField::zeros(&g2);
        match f.inner_product(&g) {
            Err(Error::Usage(_)) => {}
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn orthogonal_modes_have_zero_inner_product() {
        let grid = ChannelGrid::new(2, 16, 9).unwrap();
        let f = ScalarField::from_fn(&grid, |c| c[0].sin());
        let g = ScalarField::from_fn(&grid, |c| c[0].cos());
        assert!(f.inner_product(&g).unwrap().abs() < 1e-12);
    }
}
