//! Incompressible viscous MHD in a flat periodic channel with slip-friction walls.
//!
//! The domain is `T^(dim-1) x (0,1)`: periodic of length `2*pi` in each
//! tangential direction, walls at `z = 0` and `z = 1`. Fields are collocated
//! on a tensor grid, differentiated spectrally in the tangential directions
//! and with second-order finite differences across the channel. The wall
//! condition is impermeability plus a slip-friction (Robin) relation on the
//! tangential components, `d_n u_tau = -2 zeta u_tau` in outward-normal form,
//! entering the discretization through ghost-plane closures.
//!
//! Module map:
//! - [`geometry`]: grid construction, quadrature, conormal weight
//! - [`field`]: scalar/vector/tensor fields and weighted inner products
//! - [`ops`]: differential operators (gradient, divergence, curl, Laplacian,
//!   strain, advection)
//! - [`boundary`]: wall closures, ghost rules, traction/vorticity residuals
//! - [`leray`]: discrete divergence-free projection
//! - [`elliptic`]: wall-normal Neumann Poisson solves and the pressure split
//! - [`norms`]: conormal norms, regularity diagnostics, error norms, layer fits
//! - [`solver`]: initial conditions, RK4 stepping, full runs
//! - [`records`]: run records and checkpoint persistence
//! - [`harness`]: energy audits, viscosity sweeps, rate fitting

pub mod boundary;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod fft;
pub mod geometry;
pub mod harness;
pub mod leray;
pub mod norms;
pub mod ops;
pub mod records;
pub mod solver;

pub use error::{Error, Result};
pub use field::{ScalarField, TensorField, VectorField};
pub use geometry::ChannelGrid;
