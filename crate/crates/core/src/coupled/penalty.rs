use super::CoupledModel;
use crate::error::{Error, Result};
use crate::solver::{Discretization, Evaluation};
use crate::sparse::CsrMatrix;

/// Penalty coupling on all substructure DOFs: the energy `eps/2 |B U|^2` with the mortar
/// constraint `B = [D, -M]` replaces the multipliers.
#[derive(Debug, Clone)]
pub struct PenaltySystem<'a> {
    pub model: &'a CoupledModel,
    pub epsilon: f64,
    /// Constraint rows, one per slave contact DOF, in global (stacked) numbering.
    b: CsrMatrix,
    btb: CsrMatrix,
    pattern: CsrMatrix,
    sub_slots: Vec<Vec<usize>>,
    btb_slots: Vec<usize>,
    prescribed: Vec<(usize, f64)>,
}

/// Penalty parameter scaled by the shear modulus and the mean slave edge length `h`:
/// `eps = scaled * mu / h^2`, so that `eps B^T B` is comparable to element stiffness when
/// `scaled` is of order one.
pub fn physical_penalty(model: &CoupledModel, scaled: f64) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for itf in &model.layout.interfaces {
        let mesh = &model.substructures[itf.slave].mesh;
        for &[a, b] in &itf.slave_edges {
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            total += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            count += 1;
        }
    }
    let mu = model.substructures.iter().map(|s| s.material.mu).fold(0.0, f64::max);
    let h = if count > 0 { total / count as f64 } else { 1.0 };
    scaled * mu / (h * h)
}

impl<'a> PenaltySystem<'a> {
    pub fn new(model: &'a CoupledModel, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("penalty parameter must be positive, got {epsilon}")));
        }
        let n = model.layout.total_dofs();
        let offsets: Vec<usize> = model.layout.substructures.iter().map(|s| s.offset).collect();
        let mut trip = Vec::new();
        let mut row = 0;
        for (itf, ops) in model.layout.interfaces.iter().zip(&model.mortar) {
            let (os, om) = (offsets[itf.slave], offsets[itf.master]);
            for (r, &sn) in ops.slave_nodes.iter().enumerate() {
                for c in 0..2 {
                    trip.push((row, os + 2 * sn + c, ops.d[(r, r)]));
                    for (k, &mn) in ops.master_nodes.iter().enumerate() {
                        if ops.m[(r, k)] != 0.0 {
                            trip.push((row, om + 2 * mn + c, -ops.m[(r, k)]));
                        }
                    }
                    row += 1;
                }
            }
        }
        let b = CsrMatrix::from_triplets(row, n, &trip);
        let mut btb_trip = Vec::new();
        for r in 0..b.nrows() {
            let (cols, vals) = b.row(r);
            for (&i, &vi) in cols.iter().zip(vals) {
                for (&j, &vj) in cols.iter().zip(vals) {
                    btb_trip.push((i, j, vi * vj));
                }
            }
        }
        let btb = CsrMatrix::from_triplets(n, n, &btb_trip);

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, sub) in model.substructures.iter().enumerate() {
            let p = sub.pattern();
            for i in 0..p.nrows() {
                rows[offsets[s] + i].extend(p.row(i).0.iter().map(|&j| offsets[s] + j));
            }
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.extend_from_slice(btb.row(i).0);
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(n, rows);
        let sub_slots = model
            .substructures
            .iter()
            .enumerate()
            .map(|(s, sub)| {
                let p = sub.pattern();
                let mut slots = Vec::with_capacity(p.nnz());
                for i in 0..p.nrows() {
                    for &j in p.row(i).0 {
                        slots.push(pattern.slot(offsets[s] + i, offsets[s] + j).expect("pattern"));
                    }
                }
                slots
            })
            .collect();
        let mut btb_slots = Vec::with_capacity(btb.nnz());
        for i in 0..n {
            for &j in btb.row(i).0 {
                btb_slots.push(pattern.slot(i, j).expect("pattern"));
            }
        }
        let mut prescribed = Vec::new();
        for (s, dir) in model.dirichlet.iter().enumerate() {
            prescribed.extend(dir.iter().map(|(&d, &v)| (offsets[s] + d, v)));
        }
        Ok(Self { model, epsilon, b, btb, pattern, sub_slots, btb_slots, prescribed })
    }

    /// Splits a stacked vector into substructure vectors.
    pub fn split(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.model.layout.substructures.iter().map(|s| u[s.offset..s.offset + s.n_dofs].to_vec()).collect()
    }

    /// Mortar-weighted gap `B U`.
    pub fn gap(&self, u: &[f64]) -> Vec<f64> {
        self.b.mul_vec(u)
    }

    /// Stacked unknowns with prescribed values on the given edge and component.
    pub fn constrained_edge_unknowns(
        &self,
        substructure: usize,
        edge_set: &str,
        component: usize,
    ) -> Result<Vec<usize>> {
        let offset = self.model.layout.substructures[substructure].offset;
        let dir = &self.model.dirichlet[substructure];
        Ok(self
            .model
            .edge_dofs(substructure, edge_set, component)?
            .into_iter()
            .filter(|d| dir.contains_key(d))
            .map(|d| offset + d)
            .collect())
    }
}

impl Discretization for PenaltySystem<'_> {
    fn n_unknowns(&self) -> usize {
        self.pattern.nrows()
    }

    fn prescribed(&self) -> &[(usize, f64)] {
        &self.prescribed
    }

    fn evaluate(&self, u: &[f64], load_factor: f64) -> Result<Evaluation> {
        let states = self.split(u);
        let systems = self.model.assemble_substructures(&states, load_factor)?;
        let mut residual = self.btb.mul_vec(u);
        for r in &mut residual {
            *r *= self.epsilon;
        }
        let mut tangent = self.pattern.clone();
        let vals = tangent.values_mut();
        for (s, (g, k)) in systems.iter().enumerate() {
            let o = self.model.layout.substructures[s].offset;
            for (i, gi) in g.iter().enumerate() {
                residual[o + i] += gi;
            }
            for (&slot, &v) in self.sub_slots[s].iter().zip(k.values()) {
                vals[slot] += v;
            }
        }
        for (&slot, &v) in self.btb_slots.iter().zip(self.btb.values()) {
            vals[slot] += self.epsilon * v;
        }
        Ok(Evaluation { residual, tangent })
    }
}
