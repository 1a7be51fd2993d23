//! Component-based model order reduction for nonlinear quasi-static 2D solids.
//!
//! Substructures are discretized with bilinear quadrilaterals and a compressible
//! Neo-Hookean law, tied together with dual-basis mortar coupling, and condensed to a
//! symmetric system in the internal and master-interface unknowns. Each substructure can
//! be reduced independently with a POD basis built from randomly sampled boundary
//! conditions; the reduced model keeps the mortar coupling operator and recovers slave
//! interface displacements and Lagrange multipliers from the master side.
//!
//! Module map:
//!
//! * [`geometry`]: structured quad meshes, text persistence and the DOF layout of a
//!   multi-substructure system.
//! * [`mechanics`]: material law, element routines, assembly and a single-domain solver.
//! * [`mortar`]: dual shape functions, segmentation and the operators `D`, `M`, `P`.
//! * [`coupled`]: condensation, the saddle-point reference solve, multiplier recovery and
//!   the penalty baseline.
//! * [`solver`]: the load-stepping Newton driver shared by full and reduced models.
//! * [`pod`], [`rom`], [`sampler`]: snapshot reduction, the reduced coupled model and
//!   the randomized snapshot sampler.

pub mod coupled;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod mechanics;
pub mod mortar;
pub mod pod;
pub mod quadrature;
pub mod rom;
pub mod sampler;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use exec::Execution;
