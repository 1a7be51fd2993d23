//! Galerkin-reduced coupled model.
//!
//! The reduced unknowns live in a block-diagonal basis over the condensed unknowns: one
//! internal block `Psi_I` per substructure and one interface block `Psi_C` per interface
//! (master side). Slave interface displacements follow from the master side through the
//! condensation map, so they never carry reduced unknowns. Element assembly stays
//! full-order; only the linear solve is reduced.

use nalgebra::{DMatrix, DVector};

use crate::coupled::{recover_lagrange, CoupledSystem, PenaltySystem};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pod::{orthonormalize, select_rows};
use crate::solver::{self, NewtonOptions, Trajectory};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
struct Block {
    start: usize,
    modes: DMatrix<f64>,
    modes_t: DMatrix<f64>,
    col_offset: usize,
}

/// Block-diagonal reduction basis `Psi` over a vector of unknowns. Unknowns outside all
/// blocks have zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    n: usize,
    blocks: Vec<Block>,
    locate: Vec<Option<(u32, u32)>>,
    dim: usize,
    pub exec: Execution,
}

impl ReducedBasis {
    /// `blocks` are `(first row, modes)` pairs covering disjoint row ranges.
    pub fn new(n: usize, blocks: Vec<(usize, DMatrix<f64>)>) -> Result<Self> {
        let mut locate = vec![None; n];
        let mut out = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for (b, (start, modes)) in blocks.into_iter().enumerate() {
            if start + modes.nrows() > n {
                return Err(Error::DimensionMismatch(format!(
                    "basis block {b} covers rows {start}..{} of {n}",
                    start + modes.nrows()
                )));
            }
            for r in 0..modes.nrows() {
                if locate[start + r].is_some() {
                    return Err(Error::InvalidArgument(format!("basis blocks overlap at row {}", start + r)));
                }
                locate[start + r] = Some((b as u32, r as u32));
            }
            let modes_t = modes.transpose();
            let m = modes.ncols();
            out.push(Block { start, modes, modes_t, col_offset: dim });
            dim += m;
        }
        Ok(Self { n, blocks: out, locate, dim, exec: Execution::default() })
    }

    /// Identity basis on every unknown except `constrained`.
    pub fn identity(n: usize, constrained: &[usize]) -> Self {
        let mut fixed = vec![false; n];
        for &c in constrained {
            fixed[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let mut modes = DMatrix::zeros(n, free.len());
        for (c, &i) in free.iter().enumerate() {
            modes[(i, c)] = 1.0;
        }
        Self::new(n, vec![(0, modes)]).expect("single block")
    }

    pub fn n_unknowns(&self) -> usize {
        self.n
    }

    /// Number of reduced unknowns.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.modes.ncols()).collect()
    }

    pub fn block(&self, b: usize) -> (usize, &DMatrix<f64>) {
        (self.blocks[b].start, &self.blocks[b].modes)
    }

    /// `Psi^T v`.
    pub fn project_vec(&self, v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for b in &self.blocks {
            let len = b.modes.nrows();
            let part = &b.modes_t * DVector::from_column_slice(&v[b.start..b.start + len]);
            out.rows_mut(b.col_offset, part.len()).copy_from(&part);
        }
        out
    }

    /// `u += Psi a`.
    pub fn expand_add(&self, a: &DVector<f64>, u: &mut [f64]) {
        for b in &self.blocks {
            let m = b.modes.ncols();
            let part = &b.modes * a.rows(b.col_offset, m);
            for (r, v) in part.iter().enumerate() {
                u[b.start + r] += v;
            }
        }
    }

    /// `Psi a`.
    pub fn expand(&self, a: &DVector<f64>) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        self.expand_add(a, &mut u);
        u
    }

    /// `Psi^T K Psi`, computed block by block from the sparse rows of `K`.
    pub fn project_matrix(&self, k: &CsrMatrix) -> DMatrix<f64> {
        let nb = self.blocks.len();
        let parts = self.exec.map(&self.blocks, |_, b1| {
            let len1 = b1.modes.nrows();
            let mut yt: Vec<Option<DMatrix<f64>>> = vec![None; nb];
            for r in 0..len1 {
                let (cols, vals) = k.row(b1.start + r);
                for (&j, &v) in cols.iter().zip(vals) {
                    if let Some((b2, r2)) = self.locate[j] {
                        let b2 = b2 as usize;
                        let blk2 = &self.blocks[b2];
                        let y = yt[b2].get_or_insert_with(|| DMatrix::zeros(blk2.modes.ncols(), len1));
                        y.column_mut(r).axpy(v, &blk2.modes_t.column(r2 as usize), 1.0);
                    }
                }
            }
            yt.into_iter()
                .enumerate()
                .filter_map(|(b2, y)| y.map(|y| (b2, (y * &b1.modes).transpose())))
                .collect::<Vec<_>>()
        });
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (b1, blocks) in parts.into_iter().enumerate() {
            let c1 = self.blocks[b1].col_offset;
            for (b2, m) in blocks {
                let c2 = self.blocks[b2].col_offset;
                out.view_mut((c1, c2), (m.nrows(), m.ncols())).copy_from(&m);
            }
        }
        out
    }
}

/// Rows `rows` of a substructure basis with `constrained` rows (positions within `rows`)
/// zeroed, re-orthonormalized and cut to `m` columns.
pub(crate) fn block_modes(psi: &DMatrix<f64>, rows: &[usize], constrained: &[usize], m: usize) -> Result<DMatrix<f64>> {
    let mut sel = select_rows(psi, rows)?;
    for &c in constrained {
        sel.row_mut(c).fill(0.0);
    }
    let q = orthonormalize(&sel);
    let keep = m.min(q.ncols());
    Ok(q.columns(0, keep).into_owned())
}

fn identity_block(len: usize, constrained: &[usize]) -> DMatrix<f64> {
    let mut fixed = vec![false; len];
    for &c in constrained {
        fixed[c] = true;
    }
    let free: Vec<usize> = (0..len).filter(|&i| !fixed[i]).collect();
    let mut q = DMatrix::zeros(len, free.len());
    for (c, &i) in free.iter().enumerate() {
        q[(i, c)] = 1.0;
    }
    q
}

/// Mode counts of a reduced model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeCounts {
    /// Internal modes per substructure.
    pub internal: Vec<usize>,
    /// Interface modes per interface; `None` keeps the interface unreduced.
    pub interface: Vec<Option<usize>>,
}

impl ModeCounts {
    pub fn uniform(n_substructures: usize, n_interfaces: usize, m_internal: usize, m_interface: Option<usize>) -> Self {
        Self { internal: vec![m_internal; n_substructures], interface: vec![m_interface; n_interfaces] }
    }
}

/// Reduced coupled model over a [`CoupledSystem`].
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub internal: Vec<DMatrix<f64>>,
    pub interface: Vec<DMatrix<f64>>,
    pub basis: ReducedBasis,
    pub n_full: usize,
}

impl ReducedModel {
    /// Builds `Psi_I` and `Psi_C` blocks from full substructure bases (`n_s x m_s`).
    ///
    /// `Psi_I` spans the internal rows of the first `m_I` modes; `Psi_C` takes the first
    /// `m_C` directions of the master contact rows of the interface's master basis. Rows of
    /// prescribed unknowns are zeroed before re-orthonormalization.
    pub fn from_bases(system: &CoupledSystem, bases: &[DMatrix<f64>], counts: &ModeCounts) -> Result<Self> {
        let opt: Vec<Option<&DMatrix<f64>>> = bases.iter().map(Some).collect();
        Self::from_partial_bases(system, &opt, counts)
    }

    /// Like [`ReducedModel::from_bases`], but substructures without a basis stay unreduced:
    /// their internal block is the identity and their mode count is ignored. Interfaces whose
    /// master has no basis must be unreduced too.
    pub fn from_partial_bases(
        system: &CoupledSystem,
        bases: &[Option<&DMatrix<f64>>],
        counts: &ModeCounts,
    ) -> Result<Self> {
        let model = system.model;
        let cond = &system.condensation;
        if bases.len() != model.n_substructures() || counts.internal.len() != bases.len() {
            return Err(Error::DimensionMismatch("one basis and one mode count per substructure".into()));
        }
        if counts.interface.len() != model.layout.n_interfaces() {
            return Err(Error::DimensionMismatch("one interface mode count per interface".into()));
        }
        for (s, (b, sub)) in bases.iter().zip(&model.substructures).enumerate() {
            if let Some(b) = b {
                if b.nrows() != sub.n_dofs() {
                    return Err(Error::DimensionMismatch(format!(
                        "basis of substructure {s} has {} rows, expected {}",
                        b.nrows(),
                        sub.n_dofs()
                    )));
                }
            }
        }
        let mut fixed = vec![false; cond.n_condensed];
        for &(d, _) in solver::Discretization::prescribed(system) {
            fixed[d] = true;
        }
        let block_dofs = cond.block_dofs(&model.layout);
        let ranges: Vec<_> = cond.internal_blocks.iter().chain(&cond.interface_blocks).cloned().collect();
        let mut internal = Vec::new();
        let mut interface = Vec::new();
        let mut blocks = Vec::new();
        for (b, ((s, dofs), range)) in block_dofs.iter().zip(&ranges).enumerate() {
            let constrained: Vec<usize> =
                range.clone().enumerate().filter(|(_, g)| fixed[*g]).map(|(l, _)| l).collect();
            let m = if b < bases.len() { Some(counts.internal[b]) } else { counts.interface[b - bases.len()] };
            let q = match (bases[*s], m) {
                (Some(psi), Some(m)) => block_modes(psi, dofs, &constrained, m)?,
                (_, None) => identity_block(dofs.len(), &constrained),
                (None, Some(_)) if b < bases.len() => identity_block(dofs.len(), &constrained),
                (None, Some(_)) => {
                    return Err(Error::InvalidArgument(format!(
                        "interface {} is reduced but its master substructure {s} has no basis",
                        b - bases.len()
                    )))
                }
            };
            if b < bases.len() {
                internal.push(q.clone());
            } else {
                interface.push(q.clone());
            }
            blocks.push((range.start, q));
        }
        let mut basis = ReducedBasis::new(cond.n_condensed, blocks)?;
        basis.exec = model.exec;
        let n_full = model.layout.total_dofs();
        Ok(Self { internal, interface, basis, n_full })
    }

    /// Identity blocks everywhere: the reduced model reproduces the full one.
    pub fn identity(system: &CoupledSystem) -> Result<Self> {
        let bases: Vec<DMatrix<f64>> =
            system.model.substructures.iter().map(|s| DMatrix::identity(s.n_dofs(), s.n_dofs())).collect();
        let counts = ModeCounts {
            internal: bases.iter().map(|b| b.ncols()).collect(),
            interface: vec![None; system.model.layout.n_interfaces()],
        };
        Self::from_bases(system, &bases, &counts)
    }

    /// `(n_full, n_reduced, n_full / n_reduced)`.
    pub fn count_reduced_dofs(&self) -> (usize, usize, f64) {
        let r = self.basis.dim();
        (self.n_full, r, self.n_full as f64 / r as f64)
    }
}

/// Reduced unknown count `sum m_I + sum m_C`.
pub fn reduced_dof_count(internal: &[usize], interface: &[usize]) -> usize {
    internal.iter().sum::<usize>() + interface.iter().sum::<usize>()
}

/// Reduced condensed system `(K_bar, G_bar) = (Psi^T K_cond Psi, Psi^T G_cond)`.
pub fn reduce_system(g_cond: &[f64], k_cond: &CsrMatrix, basis: &ReducedBasis) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if g_cond.len() != basis.n_unknowns() || k_cond.nrows() != basis.n_unknowns() {
        return Err(Error::DimensionMismatch(format!(
            "condensed system of size {} for a basis over {} unknowns",
            g_cond.len(),
            basis.n_unknowns()
        )));
    }
    Ok((basis.project_matrix(k_cond), basis.project_vec(g_cond)))
}

/// Reduced Newton load stepping from the undeformed state.
pub fn newton_solve_rom(
    system: &CoupledSystem,
    model: &ReducedModel,
    schedule: &[f64],
    options: NewtonOptions,
) -> Trajectory {
    let u0 = vec![0.0; system.n_condensed()];
    solver::solve_reduced(system, &model.basis, &u0, schedule, options)
}

/// Multipliers for a reduced increment `da`, evaluated with the substructure blocks at `u`.
pub fn recover_lagrange_rom(
    system: &CoupledSystem,
    model: &ReducedModel,
    u: &[f64],
    t: f64,
    da: &DVector<f64>,
) -> Result<Vec<Vec<f64>>> {
    let states = system.expand(u);
    let systems = system.model.assemble_substructures(&states, t)?;
    let du = system.expand(&model.basis.expand(da));
    recover_lagrange(system.model, &systems, &du)
}

/// Reduced penalty model: one basis block per substructure over its stacked DOFs.
pub fn penalty_basis(system: &PenaltySystem, bases: &[DMatrix<f64>], counts: &[usize]) -> Result<ReducedBasis> {
    let model = system.model;
    if bases.len() != model.n_substructures() || counts.len() != bases.len() {
        return Err(Error::DimensionMismatch("one basis and one mode count per substructure".into()));
    }
    let mut blocks = Vec::new();
    for (s, sub) in model.layout.substructures.iter().enumerate() {
        let rows: Vec<usize> = (0..sub.n_dofs).collect();
        let constrained: Vec<usize> = model.dirichlet[s].keys().copied().collect();
        blocks.push((sub.offset, block_modes(&bases[s], &rows, &constrained, counts[s])?));
    }
    let mut basis = ReducedBasis::new(model.layout.total_dofs(), blocks)?;
    basis.exec = model.exec;
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_dof_counts() {
        assert_eq!(reduced_dof_count(&[90; 6], &[20; 7]), 680);
        assert_eq!(reduced_dof_count(&[50; 9], &[20; 12]), 690);
        assert_eq!(reduced_dof_count(&[120; 5], &[40; 4]), 760);
    }

    #[test]
    fn projection_matches_dense_product() {
        let n = 7;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + i as f64));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let k = CsrMatrix::from_triplets(n, n, &trip);
        let b1 = orthonormalize(&DMatrix::from_fn(3, 2, |i, j| (i + 2 * j + 1) as f64));
        let b2 = orthonormalize(&DMatrix::from_fn(3, 2, |i, j| ((i * j) as f64).sin() + 1.0));
        let basis = ReducedBasis::new(n, vec![(0, b1.clone()), (4, b2.clone())]).unwrap();
        let mut psi = DMatrix::zeros(n, 4);
        psi.view_mut((0, 0), (3, 2)).copy_from(&b1);
        psi.view_mut((4, 2), (3, 2)).copy_from(&b2);
        let expect = psi.transpose() * k.to_dense() * &psi;
        let got = basis.project_matrix(&k);
        assert!((expect - &got).abs().max() < 1e-12);
        assert!((&got - got.transpose()).abs().max() < 1e-12);
        let v: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let pv = basis.project_vec(&v);
        let ev = psi.transpose() * DVector::from_vec(v);
        assert!((pv - ev).abs().max() < 1e-12);
    }

    #[test]
    fn overlapping_blocks_rejected() {
        let b = DMatrix::identity(3, 3);
        assert!(ReducedBasis::new(5, vec![(0, b.clone()), (2, b)]).is_err());
    }
}
