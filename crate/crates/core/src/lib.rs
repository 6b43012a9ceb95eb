//! Numerics for maximal and `k`-maximal spacelike hypersurfaces in
//! generalized Robertson–Walker spacetimes.
//!
//! The crate is organised bottom-up:
//!
//! * [`symalg`]: pointwise algebra of symmetric endomorphisms (higher order
//!   mean curvatures, Newton tensors, `k`-stability potentials).
//! * [`spacetime`]: the warped product `I ×_ρ F`, its curvature tensors and
//!   curvature certificates.
//! * [`meshlab`]: triangle meshes with intrinsic edge lengths and the
//!   Galerkin assembly of `div(P∇·) − q` operators.
//! * [`hypersurface`]: graphs over fiber charts, their extrinsic geometry,
//!   identity audits and a maximal-graph Newton solver.
//! * [`spectral`]: first eigenvalues, Barta/Picone tools and the radial
//!   oscillation ODE.

pub mod error;
pub mod hypersurface;
pub mod kv;
pub mod meshlab;
pub mod spacetime;
pub mod sparse;
pub mod spectral;
pub mod symalg;

pub use error::{Error, Result};
