use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::{node_dofs, SystemLayout};
use crate::mortar::MortarOperators;

/// One row of a substructure's condensation map: `U_s[i] = sum w * u_cond[j]`.
pub type MapRow = Vec<(usize, f64)>;

/// Maps condensed unknowns to substructure displacements, `U_s = T_s u_cond`.
///
/// Condensed unknowns are the internal DOFs of every substructure followed by the master
/// contact DOFs of every interface. Slave contact DOFs follow `U_s = P U_m`, where master
/// DOFs that belong to other interfaces are resolved through those interfaces in turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Condensation {
    pub n_condensed: usize,
    pub maps: Vec<Vec<MapRow>>,
    /// Condensed index range of each substructure's internal DOFs.
    pub internal_blocks: Vec<Range<usize>>,
    /// Condensed index range of each interface's master contact DOFs.
    pub interface_blocks: Vec<Range<usize>>,
    /// Owning `(substructure, local DOF)` of every condensed unknown.
    pub owner: Vec<(usize, usize)>,
    /// Whether each local DOF of each substructure is a slave contact DOF.
    pub is_slave: Vec<Vec<bool>>,
}

impl Condensation {
    pub fn new(layout: &SystemLayout, mortar: &[MortarOperators]) -> Result<Self> {
        if mortar.len() != layout.n_interfaces() {
            return Err(Error::DimensionMismatch(format!(
                "{} mortar operators for {} interfaces",
                mortar.len(),
                layout.n_interfaces()
            )));
        }
        let mut maps: Vec<Vec<Option<MapRow>>> = layout.substructures.iter().map(|s| vec![None; s.n_dofs]).collect();
        let mut owner = Vec::new();
        let mut internal_blocks = Vec::new();
        for (s, sub) in layout.substructures.iter().enumerate() {
            let start = owner.len();
            for &d in &sub.internal {
                maps[s][d] = Some(vec![(owner.len(), 1.0)]);
                owner.push((s, d));
            }
            internal_blocks.push(start..owner.len());
        }
        let mut interface_blocks = Vec::new();
        for itf in &layout.interfaces {
            let start = owner.len();
            for d in itf.master_dofs() {
                maps[itf.master][d] = Some(vec![(owner.len(), 1.0)]);
                owner.push((itf.master, d));
            }
            interface_blocks.push(start..owner.len());
        }
        let mut is_slave: Vec<Vec<bool>> = layout.substructures.iter().map(|s| vec![false; s.n_dofs]).collect();
        for (j, (itf, ops)) in layout.interfaces.iter().zip(mortar).enumerate() {
            for (r, &node) in ops.slave_nodes.iter().enumerate() {
                for c in 0..2 {
                    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                    for (k, &mnode) in ops.master_nodes.iter().enumerate() {
                        let w = ops.p[(r, k)];
                        if w == 0.0 {
                            continue;
                        }
                        let row = maps[itf.master][2 * mnode + c].as_ref().ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "interface {j}: master node {mnode} of substructure {} is not resolved",
                                itf.master
                            ))
                        })?;
                        for &(idx, v) in row {
                            *acc.entry(idx).or_insert(0.0) += w * v;
                        }
                    }
                    let big = acc.values().fold(0.0f64, |m, v| m.max(v.abs()));
                    let row: MapRow = acc.into_iter().filter(|(_, v)| v.abs() > 1e-13 * big).collect();
                    let d = 2 * node + c;
                    maps[itf.slave][d] = Some(row);
                    is_slave[itf.slave][d] = true;
                }
            }
        }
        let maps = maps
            .into_iter()
            .enumerate()
            .map(|(s, rows)| {
                rows.into_iter()
                    .enumerate()
                    .map(|(d, r)| {
                        r.ok_or_else(|| Error::InvalidArgument(format!("substructure {s}: DOF {d} is not mapped")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_condensed: owner.len(), maps, internal_blocks, interface_blocks, owner, is_slave })
    }

    pub fn n_substructures(&self) -> usize {
        self.maps.len()
    }

    /// `U_s = T_s u` for every substructure.
    pub fn expand(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.maps.iter().map(|rows| rows.iter().map(|row| row.iter().map(|&(j, w)| w * u[j]).sum()).collect()).collect()
    }

    /// `sum_s T_s^T g_s`.
    pub fn fold_vector(&self, per_substructure: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_condensed];
        for (rows, g) in self.maps.iter().zip(per_substructure) {
            for (row, &gi) in rows.iter().zip(g) {
                for &(j, w) in row {
                    out[j] += w * gi;
                }
            }
        }
        out
    }

    /// Local DOFs behind each condensed block, internal blocks first, as
    /// `(substructure, local DOFs in block order)`.
    pub fn block_dofs(&self, layout: &SystemLayout) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> =
            layout.substructures.iter().enumerate().map(|(s, sub)| (s, sub.internal.clone())).collect();
        for itf in &layout.interfaces {
            out.push((itf.master, node_dofs(&itf.master_nodes)));
        }
        out
    }

    /// Condensed index of a local DOF, if it is a condensed unknown itself.
    pub fn unknown_of(&self, substructure: usize, dof: usize) -> Option<usize> {
        if self.is_slave[substructure][dof] {
            return None;
        }
        match self.maps[substructure][dof].as_slice() {
            [(j, w)] if *w == 1.0 && self.owner[*j] == (substructure, dof) => Some(*j),
            _ => None,
        }
    }
}
