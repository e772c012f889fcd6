//! Multi-marginal entropic optimal transport for repulsive costs.
//!
//! The crate is organised around the pipeline used for every experiment:
//!
//! - [`measures`]: uniform 1D grids, the density catalog, CDF/quantile tables.
//! - [`costs`]: the cost families (Coulomb, log, harmonic, determinant, ...)
//!   evaluated lazily at any multi-index.
//! - [`ipfp`]: the log-domain Sinkhorn/IPFP solver. The N-index coupling is
//!   never stored; every contraction streams over multi-indices.
//! - [`analysis`]: pair projections, supports, c-cyclical monotonicity and
//!   diagonal-gap checks, concentration on map graphs.
//! - [`oracles`]: closed-form optimal maps and plans used as references.
//!
//! ```
//! use mmot::{costs::CostSpec, ipfp::{ipfp_solve, SolveOptions}, measures::{Grid1D, make_density}};
//!
//! let grid = Grid1D::new(0.0, 1.0, 8).unwrap();
//! let mu = make_density("uniform", &[], &grid).unwrap();
//! let spec = CostSpec::harmonic_sum(2).unwrap();
//! let (_state, report) = ipfp_solve(&spec, &[mu.clone(), mu], &SolveOptions::new(0.05)).unwrap();
//! assert!(report.converged);
//! ```

#![forbid(unsafe_code)]

pub mod analysis;
pub mod costs;
mod error;
pub mod ipfp;
pub mod measures;
pub mod oracles;

pub use error::{Error, Result};
