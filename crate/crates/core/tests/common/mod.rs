#![allow(dead_code)]

use cbmor_core::coupled::CoupledModel;
use cbmor_core::geometry::{InterfacePairing, Mesh};
use cbmor_core::mechanics::{Dirichlet, Loads, NeoHooke, Substructure};
use cbmor_core::Execution;

pub fn steel() -> NeoHooke {
    NeoHooke::from_young_poisson(80_000.0, 0.15).unwrap()
}

pub fn block(n: usize, m: usize, lx: f64, ly: f64, x0: f64) -> Substructure {
    let mesh = Mesh::structured(n, m, lx, ly, [x0, 0.0]).unwrap();
    Substructure::new(mesh, steel(), Loads::default()).unwrap()
}

/// Prescribes component `comp` of every node on `edge`.
pub fn fix_edge(dir: &mut Dirichlet, mesh: &Mesh, edge: &str, comp: usize, value: f64) {
    for n in mesh.edge_set_nodes(edge).unwrap() {
        dir.insert(2 * n + comp, value);
    }
}

/// Node of `mesh` closest to `p`.
pub fn node_at(mesh: &Mesh, p: [f64; 2]) -> usize {
    (0..mesh.n_nodes())
        .min_by(|&a, &b| {
            let da = (mesh.nodes[a][0] - p[0]).hypot(mesh.nodes[a][1] - p[1]);
            let db = (mesh.nodes[b][0] - p[0]).hypot(mesh.nodes[b][1] - p[1]);
            da.total_cmp(&db)
        })
        .unwrap()
}

/// Uniaxial stretch of two blocks side by side: the left edge of block 0 is held in x and
/// its bottom-left corner in y, the right edge of block 1 moves by `stretch` in x.
pub fn two_block_stretch(
    left: (usize, usize),
    right: (usize, usize),
    length: f64,
    stretch: f64,
    exec: Execution,
) -> CoupledModel {
    let a = block(left.0, left.1, length, length, 0.0);
    let b = block(right.0, right.1, length, length, length);
    let mut da = Dirichlet::new();
    fix_edge(&mut da, &a.mesh, "left", 0, 0.0);
    da.insert(2 * node_at(&a.mesh, [0.0, 0.0]) + 1, 0.0);
    let mut db = Dirichlet::new();
    fix_edge(&mut db, &b.mesh, "right", 0, stretch);
    CoupledModel::new(vec![a, b], &[InterfacePairing::new(0, "right", 1, "left")], vec![da, db], exec).unwrap()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
