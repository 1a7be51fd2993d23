//! Full-order tied-contact coupling of several substructures.
//!
//! [`CoupledModel`] holds the substructures, their layout and the mortar operators.
//! [`CoupledSystem`] is the condensed formulation in internal and master-interface unknowns
//! that the Newton driver solves; [`PenaltySystem`] is the penalty baseline on all DOFs.

mod condense;
mod penalty;
mod saddle;

pub use condense::{Condensation, MapRow};
pub use penalty::{physical_penalty, PenaltySystem};
pub use saddle::solve_saddle_point;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{build_layout, InterfacePairing, SystemLayout};
use crate::mechanics::{Dirichlet, Substructure};
use crate::mortar::{assemble_mortar, MortarOperators};
use crate::solver::{self, Discretization, Evaluation, NewtonOptions, Trajectory};
use crate::sparse::CsrMatrix;

/// Substructures tied along mortar interfaces, with Dirichlet conditions per substructure.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub substructures: Vec<Substructure>,
    pub layout: SystemLayout,
    pub mortar: Vec<MortarOperators>,
    pub dirichlet: Vec<Dirichlet>,
    pub exec: Execution,
}

impl CoupledModel {
    pub fn new(
        substructures: Vec<Substructure>,
        pairs: &[InterfacePairing],
        dirichlet: Vec<Dirichlet>,
        exec: Execution,
    ) -> Result<Self> {
        if dirichlet.len() != substructures.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} Dirichlet maps for {} substructures",
                dirichlet.len(),
                substructures.len()
            )));
        }
        for (s, (sub, dir)) in substructures.iter().zip(&dirichlet).enumerate() {
            if let Some((&d, _)) = dir.range(sub.n_dofs()..).next() {
                return Err(Error::InvalidArgument(format!("substructure {s}: Dirichlet DOF {d} out of range")));
            }
        }
        let meshes: Vec<_> = substructures.iter().map(|s| s.mesh.clone()).collect();
        let layout = build_layout(&meshes, pairs)?;
        let mortar = layout
            .interfaces
            .iter()
            .map(|itf| assemble_mortar(itf, &meshes[itf.slave], &meshes[itf.master]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { substructures, layout, mortar, dirichlet, exec })
    }

    pub fn n_substructures(&self) -> usize {
        self.substructures.len()
    }

    /// Residuals and tangents of all substructures. Substructures are assembled
    /// concurrently; element loops inside run sequentially so the work split is fixed.
    pub fn assemble_substructures(&self, states: &[Vec<f64>], t: f64) -> Result<Vec<(Vec<f64>, CsrMatrix)>> {
        if states.len() != self.substructures.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states for {} substructures",
                states.len(),
                self.substructures.len()
            )));
        }
        let inner = if self.substructures.len() == 1 { self.exec } else { Execution::Sequential };
        self.exec.map(&self.substructures, |s, sub| sub.residual_tangent(&states[s], t, inner)).into_iter().collect()
    }

    /// Largest mortar-weighted gap `|D U_s - M U_m|` over all interfaces.
    pub fn max_gap(&self, states: &[Vec<f64>]) -> f64 {
        self.layout
            .interfaces
            .iter()
            .zip(&self.mortar)
            .flat_map(|(itf, ops)| ops.gap(&states[itf.slave], &states[itf.master]))
            .fold(0.0, |m, g: f64| m.max(g.abs()))
    }

    /// Local DOFs of component `component` (0 = x, 1 = y) on the nodes of an edge set.
    pub fn edge_dofs(&self, substructure: usize, edge_set: &str, component: usize) -> Result<Vec<usize>> {
        let sub = self
            .substructures
            .get(substructure)
            .ok_or_else(|| Error::InvalidArgument(format!("no substructure {substructure}")))?;
        Ok(sub.mesh.edge_set_nodes(edge_set)?.into_iter().map(|n| 2 * n + component).collect())
    }
}

/// Lagrange multipliers from the slave equations, `Lambda = D^-1 (-g_s - K_s dU_s + M^T Lambda')`.
///
/// `systems` are the substructure residuals and tangents at the start of the iteration and
/// `increments` the substructure displacement increments. The `M^T Lambda'` term collects
/// multipliers of other interfaces whose master side touches the same node; those always
/// have a higher index, so interfaces are processed from last to first.
pub fn recover_lagrange(
    model: &CoupledModel,
    systems: &[(Vec<f64>, CsrMatrix)],
    increments: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n_itf = model.layout.n_interfaces();
    let mut lambda: Vec<Vec<f64>> = vec![Vec::new(); n_itf];
    // force on each substructure DOF from multipliers of interfaces already processed
    let mut coupling: Vec<Vec<f64>> = model.substructures.iter().map(|s| vec![0.0; s.n_dofs()]).collect();
    for j in (0..n_itf).rev() {
        let itf = &model.layout.interfaces[j];
        let ops = &model.mortar[j];
        let (g, k) = &systems[itf.slave];
        let du = &increments[itf.slave];
        let mut lj = vec![0.0; 2 * ops.slave_nodes.len()];
        for (r, &node) in ops.slave_nodes.iter().enumerate() {
            let d = ops.d[(r, r)];
            if d == 0.0 {
                return Err(Error::NonPositiveMortarDiagonal { node, value: d });
            }
            for c in 0..2 {
                let i = 2 * node + c;
                let (cols, vals) = k.row(i);
                let kdu: f64 = cols.iter().zip(vals).map(|(&col, v)| v * du[col]).sum();
                lj[2 * r + c] = (-g[i] - kdu - coupling[itf.slave][i]) / d;
            }
        }
        for (r, _) in ops.slave_nodes.iter().enumerate() {
            for (kk, &mnode) in ops.master_nodes.iter().enumerate() {
                for c in 0..2 {
                    coupling[itf.master][2 * mnode + c] -= ops.m[(r, kk)] * lj[2 * r + c];
                }
            }
        }
        lambda[j] = lj;
    }
    Ok(lambda)
}

/// Condensed formulation of a [`CoupledModel`]: `K_cond = sum T^T K T`, `G_cond = sum T^T G`.
#[derive(Debug, Clone)]
pub struct CoupledSystem<'a> {
    pub model: &'a CoupledModel,
    pub condensation: Condensation,
    prescribed: Vec<(usize, f64)>,
    pattern: CsrMatrix,
    /// Per substructure, CSR-like plan: tangent entry `k` adds `w * K_s[k]` to slots
    /// `plan_entries[plan_ptr[k]..plan_ptr[k + 1]]`.
    plan_ptr: Vec<Vec<usize>>,
    plan_entries: Vec<Vec<(usize, f64)>>,
    /// Prescribed values on slave contact DOFs, which follow the master side instead.
    pub ignored_dirichlet: Vec<(usize, usize)>,
}

impl<'a> CoupledSystem<'a> {
    pub fn new(model: &'a CoupledModel) -> Result<Self> {
        let condensation = Condensation::new(&model.layout, &model.mortar)?;
        let mut prescribed = Vec::new();
        let mut ignored_dirichlet = Vec::new();
        for (s, dir) in model.dirichlet.iter().enumerate() {
            for (&d, &v) in dir {
                match condensation.unknown_of(s, d) {
                    Some(j) => prescribed.push((j, v)),
                    None => ignored_dirichlet.push((s, d)),
                }
            }
        }
        prescribed.sort_by_key(|p| p.0);

        let n = condensation.n_condensed;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, sub) in model.substructures.iter().enumerate() {
            let p = sub.pattern();
            let map = &condensation.maps[s];
            for i in 0..p.nrows() {
                for &j in p.row(i).0 {
                    for &(a, _) in &map[i] {
                        rows[a].extend(map[j].iter().map(|&(b, _)| b));
                    }
                }
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(n, rows);
        let mut plan_ptr = Vec::new();
        let mut plan_entries = Vec::new();
        for (s, sub) in model.substructures.iter().enumerate() {
            let p = sub.pattern();
            let map = &condensation.maps[s];
            let mut ptr = vec![0];
            let mut entries = Vec::new();
            for i in 0..p.nrows() {
                for &j in p.row(i).0 {
                    for &(a, wa) in &map[i] {
                        for &(b, wb) in &map[j] {
                            entries.push((pattern.slot(a, b).expect("pattern built above"), wa * wb));
                        }
                    }
                    ptr.push(entries.len());
                }
            }
            plan_ptr.push(ptr);
            plan_entries.push(entries);
        }
        Ok(Self { model, condensation, prescribed, pattern, plan_ptr, plan_entries, ignored_dirichlet })
    }

    pub fn n_condensed(&self) -> usize {
        self.condensation.n_condensed
    }

    /// Substructure displacements for condensed unknowns `u`.
    pub fn expand(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.condensation.expand(u)
    }

    /// Folds substructure residuals and tangents into `(G_cond, K_cond)`.
    pub fn assemble_condensed(&self, systems: &[(Vec<f64>, CsrMatrix)]) -> (Vec<f64>, CsrMatrix) {
        let g: Vec<Vec<f64>> = systems.iter().map(|(g, _)| g.clone()).collect();
        let g = self.condensation.fold_vector(&g);
        let mut k = self.pattern.clone();
        let vals = k.values_mut();
        for (s, (_, ks)) in systems.iter().enumerate() {
            let (ptr, entries) = (&self.plan_ptr[s], &self.plan_entries[s]);
            for (idx, &v) in ks.values().iter().enumerate() {
                for &(slot, w) in &entries[ptr[idx]..ptr[idx + 1]] {
                    vals[slot] += w * v;
                }
            }
        }
        (g, k)
    }

    /// Condensed unknowns that carry prescribed values on the given edge and component.
    pub fn constrained_edge_unknowns(
        &self,
        substructure: usize,
        edge_set: &str,
        component: usize,
    ) -> Result<Vec<usize>> {
        let fixed: std::collections::BTreeSet<usize> = self.prescribed.iter().map(|p| p.0).collect();
        Ok(self
            .model
            .edge_dofs(substructure, edge_set, component)?
            .into_iter()
            .filter_map(|d| self.condensation.unknown_of(substructure, d))
            .filter(|j| fixed.contains(j))
            .collect())
    }

    /// One linearized step at `u`: the condensed increment, substructure increments and the
    /// recovered multipliers.
    pub fn linear_increment(&self, u: &[f64], t: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let states = self.expand(u);
        let systems = self.model.assemble_substructures(&states, t)?;
        let (g, k) = self.assemble_condensed(&systems);
        let n = g.len();
        let mut delta = vec![0.0; n];
        let mut free: Vec<Option<usize>> = vec![Some(0); n];
        for &(d, v) in &self.prescribed {
            delta[d] = t * v - u[d];
            free[d] = None;
        }
        let mut nf = 0;
        for f in free.iter_mut().flatten() {
            *f = nf;
            nf += 1;
        }
        let kd = k.mul_vec(&delta);
        let rhs: Vec<f64> = (0..n).filter(|&i| free[i].is_some()).map(|i| -g[i] - kd[i]).collect();
        let kff = k.select(&free, nf).to_dense();
        let x = solver::dense_solve(kff, nalgebra::DVector::from_vec(rhs))?;
        let mut du = delta;
        for i in 0..n {
            if let Some(f) = free[i] {
                du[i] = x[f];
            }
        }
        let dus = self.expand(&du);
        let lambda = recover_lagrange(self.model, &systems, &dus)?;
        Ok((du, dus, lambda))
    }
}

impl Discretization for CoupledSystem<'_> {
    fn n_unknowns(&self) -> usize {
        self.condensation.n_condensed
    }

    fn prescribed(&self) -> &[(usize, f64)] {
        &self.prescribed
    }

    fn evaluate(&self, u: &[f64], load_factor: f64) -> Result<Evaluation> {
        let states = self.expand(u);
        let systems = self.model.assemble_substructures(&states, load_factor)?;
        let (residual, tangent) = self.assemble_condensed(&systems);
        Ok(Evaluation { residual, tangent })
    }
}

/// One point of a force-displacement curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub load_factor: f64,
    pub displacement: f64,
    pub force: f64,
    pub iterations: usize,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

/// Reaction force as the sum of residual entries at `unknowns`, assuming no external load
/// acts on them.
pub fn reaction<P: Discretization + ?Sized>(problem: &P, u: &[f64], t: f64, unknowns: &[usize]) -> Result<f64> {
    let ev = problem.evaluate(u, t)?;
    Ok(unknowns.iter().map(|&i| ev.residual[i]).sum())
}

/// Force-displacement curve of a trajectory. `displacement_scale` is the controlled
/// displacement at load factor 1.
pub fn reaction_curve<P: Discretization + ?Sized>(
    problem: &P,
    traj: &Trajectory,
    unknowns: &[usize],
    displacement_scale: f64,
) -> Result<Vec<CurvePoint>> {
    traj.states
        .iter()
        .zip(&traj.steps)
        .enumerate()
        .map(|(k, (u, s))| {
            Ok(CurvePoint {
                step: k + 1,
                load_factor: s.load_factor,
                displacement: s.load_factor * displacement_scale,
                force: reaction(problem, u, s.load_factor, unknowns)?,
                iterations: s.iterations,
                assembly_seconds: s.assembly_seconds,
                solve_seconds: s.solve_seconds,
            })
        })
        .collect()
}

/// Full-order coupled load stepping from the undeformed state.
pub fn newton_solve_coupled(system: &CoupledSystem, schedule: &[f64], options: NewtonOptions) -> Trajectory {
    let u0 = vec![0.0; system.n_condensed()];
    solver::solve_full(system, &u0, schedule, options)
}
