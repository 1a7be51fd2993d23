//! Meshes, boundary edge sets and the DOF layout of a system of tied substructures.
//!
//! Nodal DOFs are numbered `2 * node + component` within each substructure.

mod layout;
mod mesh;

pub(crate) use layout::node_dofs;
pub use layout::{block_grid, build_layout, InterfaceLayout, InterfacePairing, SubstructureLayout, SystemLayout};
pub use mesh::{Mesh, Point};
