//! Lagrangian energetic-variational schemes for porous-medium type diffusion
//! on simplicial meshes in one and two dimensions.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod dissipation;
pub mod energy;
pub mod error;
pub mod mesh;
pub mod oracle;
pub mod pme1d;
pub mod postprocess;
pub mod solver;
pub mod sparse;

pub use dissipation::DissipationMatrix;
pub use energy::{EnergyLaw, Law};
pub use error::{Error, Result};
pub use mesh::{Configuration, Dim, Triangulation};
pub use oracle::{Barenblatt, InitialDatum};
pub use postprocess::{Interface, Snapshot};
pub use solver::{BoundaryMode, Integrator, NewtonOptions, RunOptions, StepReport, Trajectory};
