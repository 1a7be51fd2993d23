//! Dual-basis mortar operators for straight tied interfaces.
//!
//! Mortar integrals are computed once in the reference configuration on segments obtained
//! by intersecting slave and master edges along the interface line. The dual Lagrange
//! multiplier basis makes `D` diagonal, so the coupling operator `P = D^-1 M` is explicit.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::geometry::{InterfaceLayout, Mesh, Point};
use crate::quadrature::{line2_shape, GAUSS_3};

/// Coefficients `A` of the dual shape functions `Nhat_j = sum_k A_jk N_k` on one slave edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualShapeCoefficients {
    pub a: Matrix2<f64>,
}

impl DualShapeCoefficients {
    /// Dual shape function values at local coordinate `s` in `[0, 1]`.
    pub fn eval(&self, s: f64) -> [f64; 2] {
        let n = line2_shape(s);
        [self.a[(0, 0)] * n[0] + self.a[(0, 1)] * n[1], self.a[(1, 0)] * n[0] + self.a[(1, 1)] * n[1]]
    }
}

/// `A = B C^-1` with `B = diag(int N_k)` and `C_jk = int N_j N_k` on the edge `[p0, p1]`.
pub fn dual_coefficients(p0: Point, p1: Point) -> Result<DualShapeCoefficients> {
    let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::DegenerateEdge(len));
    }
    let mut b = Matrix2::<f64>::zeros();
    let mut c = Matrix2::<f64>::zeros();
    for (x, w) in GAUSS_3 {
        let n = line2_shape(0.5 * (x + 1.0));
        let wl = 0.5 * w * len;
        for j in 0..2 {
            b[(j, j)] += wl * n[j];
            for k in 0..2 {
                c[(j, k)] += wl * n[j] * n[k];
            }
        }
    }
    let ci = c.try_inverse().ok_or(Error::DegenerateEdge(len))?;
    Ok(DualShapeCoefficients { a: b * ci })
}

/// Overlap of one slave and one master edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub slave_edge: usize,
    pub master_edge: usize,
    /// Local coordinates in `[0, 1]` of the segment ends on the slave edge.
    pub slave_range: [f64; 2],
    pub master_range: [f64; 2],
    /// Interface coordinates of the segment ends, ascending.
    pub bounds: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.bounds[1] - self.bounds[0]
    }
}

/// Intersects slave and master edges, given as interface coordinates of their first and
/// second node. Segments are ordered by slave edge, then by position.
///
/// Overlaps shorter than `tolerance` are dropped. A slave edge with no overlap is an error.
pub fn build_segments(slave: &[[f64; 2]], master: &[[f64; 2]], tolerance: f64) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for (si, s) in slave.iter().enumerate() {
        let (s_lo, s_hi) = (s[0].min(s[1]), s[0].max(s[1]));
        if !(s_hi - s_lo > tolerance) {
            return Err(Error::DegenerateEdge(s_hi - s_lo));
        }
        let mut here = Vec::new();
        for (mi, m) in master.iter().enumerate() {
            let lo = s_lo.max(m[0].min(m[1]));
            let hi = s_hi.min(m[0].max(m[1]));
            if hi - lo > tolerance {
                let local = |e: &[f64; 2], c: f64| (c - e[0]) / (e[1] - e[0]);
                here.push(Segment {
                    slave_edge: si,
                    master_edge: mi,
                    slave_range: [local(s, lo), local(s, hi)],
                    master_range: [local(m, lo), local(m, hi)],
                    bounds: [lo, hi],
                });
            }
        }
        if here.is_empty() {
            return Err(Error::InterfaceCoverage { edge: si });
        }
        here.sort_by(|a, b| a.bounds[0].total_cmp(&b.bounds[0]));
        out.extend(here);
    }
    Ok(out)
}

/// Mortar matrices of one interface in scalar (per node) form.
///
/// Rows are the slave contact nodes of the interface, columns all master edge nodes. The
/// DOF-level operators act identically on the x and y components.
#[derive(Debug, Clone, PartialEq)]
pub struct MortarOperators {
    pub slave_nodes: Vec<usize>,
    pub master_nodes: Vec<usize>,
    /// Slave-slave mortar matrix as integrated; diagonal up to rounding.
    pub d: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// `P = diag(D)^-1 M`.
    pub p: DMatrix<f64>,
    pub segments: Vec<Segment>,
    pub coefficients: Vec<DualShapeCoefficients>,
}

fn expand(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(2 * a.nrows(), 2 * a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(2 * i, 2 * j)] = a[(i, j)];
            out[(2 * i + 1, 2 * j + 1)] = a[(i, j)];
        }
    }
    out
}

impl MortarOperators {
    pub fn d_diagonal(&self) -> Vec<f64> {
        (0..self.d.nrows()).map(|i| self.d[(i, i)]).collect()
    }

    /// Largest off-diagonal magnitude of `D` relative to its largest diagonal entry.
    pub fn d_offdiagonal_ratio(&self) -> f64 {
        let n = self.d.nrows();
        let diag = (0..n).map(|i| self.d[(i, i)].abs()).fold(0.0, f64::max);
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(self.d[(i, j)].abs());
                }
            }
        }
        off / diag
    }

    /// `D` on slave contact DOFs (x, y interleaved per node).
    pub fn d_dofs(&self) -> DMatrix<f64> {
        expand(&self.d)
    }

    pub fn m_dofs(&self) -> DMatrix<f64> {
        expand(&self.m)
    }

    pub fn p_dofs(&self) -> DMatrix<f64> {
        expand(&self.p)
    }

    /// Mortar-weighted gap `D u_s - M u_m` for full substructure displacement vectors.
    pub fn gap(&self, u_slave: &[f64], u_master: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; 2 * self.slave_nodes.len()];
        for (r, &sn) in self.slave_nodes.iter().enumerate() {
            for c in 0..2 {
                let mut v = self.d[(r, r)] * u_slave[2 * sn + c];
                for (k, &mn) in self.master_nodes.iter().enumerate() {
                    v -= self.m[(r, k)] * u_master[2 * mn + c];
                }
                g[2 * r + c] = v;
            }
        }
        g
    }
}

/// Builds `D`, `M` and `P` for one interface of a [`crate::geometry::SystemLayout`].
pub fn assemble_mortar(interface: &InterfaceLayout, slave_mesh: &Mesh, master_mesh: &Mesh) -> Result<MortarOperators> {
    let coord_s = |n: usize| interface.coordinate(slave_mesh.nodes[n]);
    let coord_m = |n: usize| interface.coordinate(master_mesh.nodes[n]);
    let s_edges: Vec<[f64; 2]> = interface.slave_edges.iter().map(|e| [coord_s(e[0]), coord_s(e[1])]).collect();
    let m_edges: Vec<[f64; 2]> = interface.master_edges.iter().map(|e| [coord_m(e[0]), coord_m(e[1])]).collect();
    let segments = build_segments(&s_edges, &m_edges, interface.tolerance)?;
    let coefficients = interface
        .slave_edges
        .iter()
        .map(|e| dual_coefficients(slave_mesh.nodes[e[0]], slave_mesh.nodes[e[1]]))
        .collect::<Result<Vec<_>>>()?;

    // rows over every slave edge node first, restricted to contact nodes at the end
    let mut all_slave: Vec<usize> = interface.slave_edges.iter().flatten().copied().collect();
    all_slave.sort_by(|&a, &b| coord_s(a).total_cmp(&coord_s(b)).then(a.cmp(&b)));
    all_slave.dedup();
    let row_of = |n: usize| all_slave.iter().position(|&x| x == n).expect("slave edge node");
    let col_of = |n: usize| interface.master_edge_nodes.iter().position(|&x| x == n).expect("master edge node");
    let (ns, nm) = (all_slave.len(), interface.master_edge_nodes.len());
    let mut d = DMatrix::zeros(ns, ns);
    let mut m = DMatrix::zeros(ns, nm);
    for seg in &segments {
        let se = interface.slave_edges[seg.slave_edge];
        let me = interface.master_edges[seg.master_edge];
        let rows = [row_of(se[0]), row_of(se[1])];
        let cols = [col_of(me[0]), col_of(me[1])];
        let a = &coefficients[seg.slave_edge];
        for (x, w) in GAUSS_3 {
            let q = 0.5 * (x + 1.0);
            let ss = seg.slave_range[0] + q * (seg.slave_range[1] - seg.slave_range[0]);
            let sm = seg.master_range[0] + q * (seg.master_range[1] - seg.master_range[0]);
            let wl = 0.5 * w * seg.length();
            let dual = a.eval(ss);
            let ns_ = line2_shape(ss);
            let nm_ = line2_shape(sm);
            for j in 0..2 {
                for k in 0..2 {
                    d[(rows[j], rows[k])] += wl * dual[j] * ns_[k];
                    m[(rows[j], cols[k])] += wl * dual[j] * nm_[k];
                }
            }
        }
    }
    let keep: Vec<usize> = interface.slave_nodes.iter().map(|&n| row_of(n)).collect();
    let d = DMatrix::from_fn(keep.len(), keep.len(), |i, j| d[(keep[i], keep[j])]);
    let m = DMatrix::from_fn(keep.len(), nm, |i, j| m[(keep[i], j)]);
    let mut p = m.clone();
    for (i, &node) in interface.slave_nodes.iter().enumerate() {
        let dii = d[(i, i)];
        if !(dii > 0.0) {
            return Err(Error::NonPositiveMortarDiagonal { node, value: dii });
        }
        for j in 0..nm {
            p[(i, j)] /= dii;
        }
    }
    Ok(MortarOperators {
        slave_nodes: interface.slave_nodes.clone(),
        master_nodes: interface.master_edge_nodes.clone(),
        d,
        m,
        p,
        segments,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, InterfacePairing};

    #[test]
    fn dual_coefficients_closed_form() {
        for len in [1.0, 10.0, 0.37] {
            let a = dual_coefficients([0.0, 0.0], [0.0, len]).unwrap().a;
            let expect = Matrix2::new(2.0, -1.0, -1.0, 2.0);
            assert!((a - expect).abs().max() < 1e-13, "{a}");
        }
        assert!(matches!(dual_coefficients([1.0, 1.0], [1.0, 1.0]), Err(Error::DegenerateEdge(_))));
    }

    #[test]
    fn biorthogonality() {
        let len = 2.5;
        let a = dual_coefficients([0.0, 0.0], [len, 0.0]).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let mut integral = 0.0;
                for (x, w) in GAUSS_3 {
                    let s = 0.5 * (x + 1.0);
                    integral += 0.5 * w * len * a.eval(s)[j] * line2_shape(s)[k];
                }
                let expect = if j == k { len / 2.0 } else { 0.0 };
                assert!((integral - expect).abs() < 1e-12 * len);
            }
        }
    }

    #[test]
    fn segments_of_conforming_edges() {
        let e = [[0.0, 0.5], [0.5, 1.0]];
        let s = build_segments(&e, &e, 1e-12).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].slave_range, [0.0, 1.0]);
        assert_eq!(s[1].master_edge, 1);
    }

    #[test]
    fn segments_three_against_two() {
        let slave = [[0.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0]];
        let master = [[1.0, 0.5], [0.5, 0.0]];
        let s = build_segments(&slave, &master, 1e-12).unwrap();
        assert_eq!(s.len(), 4);
        let breaks: Vec<f64> = s.iter().skip(1).map(|g| g.bounds[0]).collect();
        for (b, e) in breaks.iter().zip([1.0 / 3.0, 0.5, 2.0 / 3.0]) {
            assert!((b - e).abs() < 1e-15);
        }
        let total: f64 = s.iter().map(Segment::length).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((s[1].master_range[0] - 1.0 / 3.0).abs() < 1e-15 && s[1].master_range[1].abs() < 1e-15);
    }

    #[test]
    fn uncovered_slave_edge_is_an_error() {
        let slave = [[0.0, 1.0], [5.0, 6.0]];
        let master = [[0.0, 1.0]];
        assert!(matches!(build_segments(&slave, &master, 1e-12), Err(Error::InterfaceCoverage { edge: 1 })));
    }

    fn pair(ny_left: usize, ny_right: usize, h: f64) -> (Vec<Mesh>, MortarOperators) {
        let left = Mesh::structured(2, ny_left, 1.0, h, [0.0, 0.0]).unwrap();
        let right = Mesh::structured(2, ny_right, 1.0, h, [1.0, 0.0]).unwrap();
        let meshes = vec![left, right];
        let layout = build_layout(&meshes, &[InterfacePairing::new(0, "right", 1, "left")]).unwrap();
        let itf = &layout.interfaces[0];
        let ops = assemble_mortar(itf, &meshes[itf.slave], &meshes[itf.master]).unwrap();
        (meshes, ops)
    }

    #[test]
    fn conforming_interface_gives_identity_coupling() {
        let (meshes, ops) = pair(4, 4, 2.0);
        let n = ops.slave_nodes.len();
        assert_eq!(n, 5);
        for i in 0..n {
            for j in 0..ops.master_nodes.len() {
                let ys = meshes[0].nodes[ops.slave_nodes[i]][1];
                let ym = meshes[1].nodes[ops.master_nodes[j]][1];
                let expect = if (ys - ym).abs() < 1e-12 { 1.0 } else { 0.0 };
                assert!((ops.p[(i, j)] - expect).abs() < 1e-12);
                assert!((ops.m[(i, j)] - expect * ops.d[(i, i)]).abs() < 1e-12);
            }
        }
        // interior diagonal entries equal the edge length
        for i in 1..n - 1 {
            assert!((ops.d[(i, i)] - 0.5).abs() < 1e-14);
        }
        assert!((ops.d[(0, 0)] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn non_matching_interface_is_diagonal_and_transfers_linear_fields() {
        let (meshes, ops) = pair(3, 2, 1.0);
        assert!(ops.d_offdiagonal_ratio() <= 1e-14);
        for i in 0..ops.p.nrows() {
            let sum: f64 = ops.p.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
        let field = |y: f64| 0.3 - 1.7 * y;
        let um: Vec<f64> = ops.master_nodes.iter().map(|&n| field(meshes[1].nodes[n][1])).collect();
        for (i, &n) in ops.slave_nodes.iter().enumerate() {
            let v: f64 = (0..um.len()).map(|j| ops.p[(i, j)] * um[j]).sum();
            assert!((v - field(meshes[0].nodes[n][1])).abs() < 1e-10);
        }
        assert_eq!(ops.p_dofs().shape(), (8, 6));
    }
}
