//! Two-species nonlocal diffusion with a common free boundary.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: dispersal kernels and their tail mass;
//! * [`growth`]: Lotka-Volterra reaction terms and their structural bounds;
//! * [`field`]: the ambient grid, quadrature and convolution;
//! * [`evolver`]: time stepping of densities and boundaries;
//! * [`spectral`]: principal eigenvalues and critical lengths;
//! * [`analysis`]: classification, spreading criteria, threshold sweeps and
//!   long-time limits.
//!
//! With the default `parallel` feature, convolutions, matrix-vector products
//! and parameter sweeps run on rayon; without it everything is sequential and
//! produces identical numbers.

pub mod analysis;
pub mod evolver;
pub mod field;
pub mod growth;
pub mod kernel;
pub mod spectral;
