use std::collections::BTreeMap;

use nalgebra::Matrix2;

use super::element::{
    edge_traction_forces, element_cauchy_stresses, element_residual_tangent, ElementMatrix, ElementVector,
};
use super::material::NeoHooke;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Mesh;
use crate::sparse::CsrMatrix;

/// Prescribed displacements at `t = 1`, keyed by local DOF index. Values are ramped
/// linearly with the load factor.
pub type Dirichlet = BTreeMap<usize, f64>;

/// Dead loads at `t = 1`: a uniform body force and constant tractions on named edge sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Loads {
    pub body_force: [f64; 2],
    pub tractions: Vec<(String, [f64; 2])>,
}

/// Nodal displacements of one substructure together with the load factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementState {
    pub u: Vec<f64>,
    pub load_factor: f64,
}

impl DisplacementState {
    pub fn zero(n_dofs: usize) -> Self {
        Self { u: vec![0.0; n_dofs], load_factor: 0.0 }
    }
}

/// Result of one assembly: `G = R(U) - t F_ext` and `K = dG/dU`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub tangent: CsrMatrix,
    pub external: Vec<f64>,
    pub dirichlet: Dirichlet,
}

impl AssembledSystem {
    /// Row/column elimination of the Dirichlet DOFs for a Newton correction that moves
    /// every constrained DOF from `u` to its ramped target `t * value`.
    ///
    /// Returns the modified tangent (unit diagonal on constrained rows) and right-hand side.
    pub fn eliminated(&self, u: &[f64], t: f64) -> (CsrMatrix, Vec<f64>) {
        let n = self.residual.len();
        let mut delta = vec![0.0; n];
        for (&d, &v) in &self.dirichlet {
            delta[d] = t * v - u[d];
        }
        let kd = self.tangent.mul_vec(&delta);
        let mut rhs: Vec<f64> = (0..n).map(|i| -self.residual[i] - kd[i]).collect();
        let mut k = self.tangent.clone();
        let (ptr, cols) = (k.row_ptr().to_vec(), k.col_idx().to_vec());
        let vals = k.values_mut();
        for i in 0..n {
            let row_fixed = self.dirichlet.contains_key(&i);
            for s in ptr[i]..ptr[i + 1] {
                let j = cols[s];
                if row_fixed || self.dirichlet.contains_key(&j) {
                    vals[s] = if i == j { 1.0 } else { 0.0 };
                }
            }
            if row_fixed {
                rhs[i] = delta[i];
            }
        }
        (k, rhs)
    }
}

/// A meshed substructure with its material and loads, plus a precomputed sparsity
/// pattern and per-element scatter slots.
#[derive(Debug, Clone)]
pub struct Substructure {
    pub mesh: Mesh,
    pub material: NeoHooke,
    pub loads: Loads,
    pattern: CsrMatrix,
    slots: Vec<[usize; 64]>,
    external: Vec<f64>,
}

fn element_dofs(conn: &[usize; 4]) -> [usize; 8] {
    let mut d = [0; 8];
    for a in 0..4 {
        d[2 * a] = 2 * conn[a];
        d[2 * a + 1] = 2 * conn[a] + 1;
    }
    d
}

impl Substructure {
    pub fn new(mesh: Mesh, material: NeoHooke, loads: Loads) -> Result<Self> {
        mesh.validate()?;
        let n = mesh.n_dofs();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for conn in &mesh.elements {
            let dofs = element_dofs(conn);
            for &i in &dofs {
                rows[i].extend_from_slice(&dofs);
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(n, rows);
        let slots = mesh
            .elements
            .iter()
            .map(|conn| {
                let dofs = element_dofs(conn);
                let mut s = [0; 64];
                for a in 0..8 {
                    for b in 0..8 {
                        s[8 * a + b] = pattern.slot(dofs[a], dofs[b]).expect("pattern covers element");
                    }
                }
                s
            })
            .collect();
        let mut external = vec![0.0; n];
        for (name, traction) in &loads.tractions {
            for &[a, b] in mesh.edge_set(name)? {
                let f = edge_traction_forces(mesh.nodes[a], mesh.nodes[b], *traction);
                external[2 * a] += f[0];
                external[2 * a + 1] += f[1];
                external[2 * b] += f[2];
                external[2 * b + 1] += f[3];
            }
        }
        let mut sub = Self { mesh, material, loads, pattern, slots, external };
        if sub.loads.body_force != [0.0; 2] {
            let zero = vec![0.0; n];
            let body = sub.element_contributions(&zero, sub.loads.body_force, Execution::Sequential)?;
            for (conn, (re, _)) in sub.mesh.elements.iter().zip(&body) {
                let dofs = element_dofs(conn);
                for a in 0..8 {
                    sub.external[dofs[a]] -= re[a];
                }
            }
        }
        Ok(sub)
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// Nodal external forces (tractions and body force) at `t = 1`.
    pub fn external_forces(&self) -> &[f64] {
        &self.external
    }

    /// Sparsity pattern of the tangent (all values zero).
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    fn element_contributions(
        &self,
        u: &[f64],
        body: [f64; 2],
        exec: Execution,
    ) -> Result<Vec<(ElementVector, ElementMatrix)>> {
        if u.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, substructure has {} DOFs",
                u.len(),
                self.n_dofs()
            )));
        }
        exec.map(&self.mesh.elements, |e, conn| {
            let dofs = element_dofs(conn);
            let ue: [f64; 8] = std::array::from_fn(|k| u[dofs[k]]);
            element_residual_tangent(&self.mesh.element_coords(e), &ue, &self.material, body).map_err(|err| match err {
                Error::ElementInversion { det, .. } => Error::ElementInversion { element: e, det },
                other => other,
            })
        })
        .into_iter()
        .collect()
    }

    /// Residual `G = R(u) - t F_ext` and tangent. Element contributions may be computed in
    /// parallel; they are always scattered in ascending element order.
    pub fn residual_tangent(&self, u: &[f64], t: f64, exec: Execution) -> Result<(Vec<f64>, CsrMatrix)> {
        let contributions = self.element_contributions(u, [0.0; 2], exec)?;
        let mut k = self.pattern.clone();
        let mut g: Vec<f64> = self.external.iter().map(|f| -t * f).collect();
        let vals = k.values_mut();
        for ((conn, slots), (re, ke)) in self.mesh.elements.iter().zip(&self.slots).zip(&contributions) {
            let dofs = element_dofs(conn);
            for a in 0..8 {
                g[dofs[a]] += re[a];
            }
            for a in 0..8 {
                for b in 0..8 {
                    vals[slots[8 * a + b]] += ke[(a, b)];
                }
            }
        }
        Ok((g, k))
    }

    /// Internal force vector `R(u)`.
    pub fn internal_force(&self, u: &[f64], exec: Execution) -> Result<Vec<f64>> {
        let contributions = self.element_contributions(u, [0.0; 2], exec)?;
        let mut r = vec![0.0; self.n_dofs()];
        for (conn, (re, _)) in self.mesh.elements.iter().zip(&contributions) {
            let dofs = element_dofs(conn);
            for a in 0..8 {
                r[dofs[a]] += re[a];
            }
        }
        Ok(r)
    }

    /// Sum of internal nodal forces over the nodes of an edge set (the reaction on a
    /// supported edge), as `[F_x, F_y]`.
    pub fn edge_reaction(&self, u: &[f64], edge_set: &str, exec: Execution) -> Result<[f64; 2]> {
        let nodes = self.mesh.edge_set_nodes(edge_set)?;
        let r = self.internal_force(u, exec)?;
        let mut f = [0.0; 2];
        for n in nodes {
            f[0] += r[2 * n];
            f[1] += r[2 * n + 1];
        }
        Ok(f)
    }

    /// Cauchy stress at every Gauss point, element by element.
    pub fn cauchy_stresses(&self, u: &[f64]) -> Result<Vec<[Matrix2<f64>; 4]>> {
        self.mesh
            .elements
            .iter()
            .enumerate()
            .map(|(e, conn)| {
                let dofs = element_dofs(conn);
                let ue: [f64; 8] = std::array::from_fn(|k| u[dofs[k]]);
                element_cauchy_stresses(&self.mesh.element_coords(e), &ue, &self.material)
            })
            .collect()
    }
}

/// Assemble a substructure at `state`, attaching the Dirichlet map.
pub fn assemble(
    substructure: &Substructure,
    state: &DisplacementState,
    dirichlet: &Dirichlet,
    exec: Execution,
) -> Result<AssembledSystem> {
    if let Some((&d, _)) = dirichlet.range(substructure.n_dofs()..).next() {
        return Err(Error::InvalidArgument(format!("Dirichlet DOF {d} out of range")));
    }
    let (residual, tangent) = substructure.residual_tangent(&state.u, state.load_factor, exec)?;
    let external = substructure.external_forces().iter().map(|f| state.load_factor * f).collect();
    Ok(AssembledSystem { residual, tangent, external, dirichlet: dirichlet.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(nx: usize, ny: usize) -> Substructure {
        let mesh = Mesh::structured(nx, ny, 10.0, 10.0, [0.0, 0.0]).unwrap();
        Substructure::new(mesh, NeoHooke::from_young_poisson(80_000.0, 0.15).unwrap(), Loads::default()).unwrap()
    }

    #[test]
    fn zero_state_zero_residual() {
        let s = block(3, 2);
        let (g, k) = s.residual_tangent(&vec![0.0; s.n_dofs()], 1.0, Execution::Sequential).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
        assert!(k.symmetry_error() <= 1e-12);
    }

    #[test]
    fn parallel_and_sequential_bitwise_equal() {
        let s = block(6, 5);
        let u: Vec<f64> = (0..s.n_dofs()).map(|i| 0.01 * ((i * 37 % 11) as f64 - 5.0)).collect();
        let (g1, k1) = s.residual_tangent(&u, 0.5, Execution::Sequential).unwrap();
        let (g2, k2) = s.residual_tangent(&u, 0.5, Execution::Parallel).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(k1.values(), k2.values());
    }

    #[test]
    fn rigid_modes_span_tangent_kernel() {
        let s = block(3, 3);
        let (_, k) = s.residual_tangent(&vec![0.0; s.n_dofs()], 0.0, Execution::Sequential).unwrap();
        let eig = nalgebra::SymmetricEigen::new(k.to_dense());
        let scale = eig.eigenvalues.amax();
        let zero = eig.eigenvalues.iter().filter(|l| l.abs() < 1e-8 * scale).count();
        assert_eq!(zero, 3);
    }

    #[test]
    fn inversion_error_names_element() {
        let s = block(2, 2);
        let mut u = vec![0.0; s.n_dofs()];
        // pull the centre node far past the left edge so element 0 folds
        u[2 * 4] = -12.0;
        match s.residual_tangent(&u, 1.0, Execution::Parallel) {
            Err(Error::ElementInversion { element, .. }) => assert_eq!(element, 0),
            other => panic!("expected inversion, got {other:?}"),
        }
    }

    #[test]
    fn tractions_ramp_with_load_factor() {
        let mesh = Mesh::structured(2, 2, 10.0, 10.0, [0.0, 0.0]).unwrap();
        let loads = Loads { body_force: [0.0; 2], tractions: vec![("right".into(), [3.0, 0.0])] };
        let s = Substructure::new(mesh, NeoHooke::new(1000.0, 1000.0).unwrap(), loads).unwrap();
        let total: f64 = s.external_forces().iter().step_by(2).sum();
        assert!((total - 30.0).abs() < 1e-12);
        let (g, _) = s.residual_tangent(&vec![0.0; s.n_dofs()], 0.5, Execution::Sequential).unwrap();
        let gsum: f64 = g.iter().step_by(2).sum();
        assert!((gsum + 15.0).abs() < 1e-12);
    }

    #[test]
    fn body_force_ramps_with_load_factor() {
        let mesh = Mesh::structured(2, 2, 10.0, 10.0, [0.0, 0.0]).unwrap();
        let loads = Loads { body_force: [0.0, -2.0], tractions: vec![] };
        let s = Substructure::new(mesh, NeoHooke::new(1000.0, 1000.0).unwrap(), loads).unwrap();
        let zero = vec![0.0; s.n_dofs()];
        for t in [0.0, 0.25, 1.0] {
            let (g, _) = s.residual_tangent(&zero, t, Execution::Sequential).unwrap();
            let gy: f64 = g.iter().skip(1).step_by(2).sum();
            assert!((gy - 200.0 * t).abs() < 1e-10, "t = {t}: {gy}");
        }
        let r = s.internal_force(&zero, Execution::Sequential).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12));
        let a =
            assemble(&s, &DisplacementState { u: zero, load_factor: 0.5 }, &Dirichlet::new(), Execution::Sequential)
                .unwrap();
        let ey: f64 = a.external.iter().skip(1).step_by(2).sum();
        assert!((ey + 100.0).abs() < 1e-10);
    }

    #[test]
    fn elimination_sets_unit_rows() {
        let s = block(1, 1);
        let mut dir = Dirichlet::new();
        dir.insert(0, 0.5);
        let state = DisplacementState::zero(s.n_dofs());
        let a = assemble(&s, &state, &dir, Execution::Sequential).unwrap();
        let (k, rhs) = a.eliminated(&state.u, 1.0);
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(0, 2), 0.0);
        assert_eq!(k.get(2, 0), 0.0);
        assert_eq!(rhs[0], 0.5);
        assert!((rhs[2] + a.tangent.get(2, 0) * 0.5).abs() < 1e-12);
        assert!(k.symmetry_error() < 1e-14);
    }
}
