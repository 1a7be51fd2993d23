//! Neo-Hookean plane-strain mechanics on bilinear quadrilaterals.

mod assembly;
mod element;
mod material;

pub use assembly::{assemble, AssembledSystem, Dirichlet, DisplacementState, Loads, Substructure};
pub use element::{edge_traction_forces, element_cauchy_stresses, element_residual_tangent, element_stresses};
pub use material::{pk2_stress_and_tangent, NeoHooke, Tangent4};

use crate::error::Result;
use crate::exec::Execution;
use crate::solver::{self, Discretization, Evaluation, NewtonOptions, Trajectory};

/// One substructure with Dirichlet conditions, solved on its own.
#[derive(Debug, Clone)]
pub struct SingleDomain<'a> {
    pub substructure: &'a Substructure,
    prescribed: Vec<(usize, f64)>,
    pub exec: Execution,
}

impl<'a> SingleDomain<'a> {
    pub fn new(substructure: &'a Substructure, dirichlet: &Dirichlet, exec: Execution) -> Self {
        Self { substructure, prescribed: dirichlet.iter().map(|(&d, &v)| (d, v)).collect(), exec }
    }
}

impl Discretization for SingleDomain<'_> {
    fn n_unknowns(&self) -> usize {
        self.substructure.n_dofs()
    }

    fn prescribed(&self) -> &[(usize, f64)] {
        &self.prescribed
    }

    fn evaluate(&self, u: &[f64], load_factor: f64) -> Result<Evaluation> {
        let (residual, tangent) = self.substructure.residual_tangent(u, load_factor, self.exec)?;
        Ok(Evaluation { residual, tangent })
    }
}

/// Newton load stepping for a single substructure. Returns the converged states at the
/// scheduled load factors, or the first unrecoverable error.
pub fn newton_solve(
    substructure: &Substructure,
    dirichlet: &Dirichlet,
    initial: &DisplacementState,
    schedule: &[f64],
    options: NewtonOptions,
    exec: Execution,
) -> Result<(Vec<DisplacementState>, Trajectory)> {
    let problem = SingleDomain::new(substructure, dirichlet, exec);
    let traj = solver::solve_full(&problem, &initial.u, schedule, options).into_result()?;
    let states = traj
        .states
        .iter()
        .zip(&traj.steps)
        .map(|(u, s)| DisplacementState { u: u.clone(), load_factor: s.load_factor })
        .collect();
    Ok((states, traj))
}
