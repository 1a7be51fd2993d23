use std::collections::{BTreeMap, BTreeSet};

use super::mesh::{Mesh, Point};
use crate::error::{Error, Result};

/// Two edge sets, on two substructures, that are tied together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfacePairing {
    pub a: usize,
    pub edge_a: String,
    pub b: usize,
    pub edge_b: String,
}

impl InterfacePairing {
    pub fn new(a: usize, edge_a: &str, b: usize, edge_b: &str) -> Self {
        Self { a, edge_a: edge_a.to_string(), b, edge_b: edge_b.to_string() }
    }
}

/// One tied interface after master/slave assignment.
///
/// Node lists are ordered by the coordinate along the (straight) interface line.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceLayout {
    pub slave: usize,
    pub master: usize,
    pub slave_edge_set: String,
    pub master_edge_set: String,
    pub slave_edges: Vec<[usize; 2]>,
    pub master_edges: Vec<[usize; 2]>,
    /// Slave nodes that carry a Lagrange multiplier on this interface.
    pub slave_nodes: Vec<usize>,
    /// Master nodes whose DOFs are this interface's master contact unknowns.
    pub master_nodes: Vec<usize>,
    /// All nodes of the master edge set; columns of `M` and `P`.
    pub master_edge_nodes: Vec<usize>,
    pub origin: Point,
    pub tangent: [f64; 2],
    pub tolerance: f64,
}

impl InterfaceLayout {
    /// Coordinate of a point along the interface line.
    pub fn coordinate(&self, p: Point) -> f64 {
        (p[0] - self.origin[0]) * self.tangent[0] + (p[1] - self.origin[1]) * self.tangent[1]
    }

    /// Local DOF indices (x then y per node) of the slave contact nodes.
    pub fn slave_dofs(&self) -> Vec<usize> {
        node_dofs(&self.slave_nodes)
    }

    pub fn master_dofs(&self) -> Vec<usize> {
        node_dofs(&self.master_nodes)
    }
}

pub(crate) fn node_dofs(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstructureLayout {
    /// First DOF of this substructure in the stacked global numbering.
    pub offset: usize,
    pub n_dofs: usize,
    /// Local DOFs not on any interface, ascending.
    pub internal: Vec<usize>,
    /// Local DOFs on an interface (slave or master side), ascending.
    pub contact: Vec<usize>,
    /// Contact node -> index of the interface that owns it.
    pub contact_owner: BTreeMap<usize, usize>,
}

impl SubstructureLayout {
    pub fn n_internal(&self) -> usize {
        self.internal.len()
    }

    pub fn n_contact(&self) -> usize {
        self.contact.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemLayout {
    pub substructures: Vec<SubstructureLayout>,
    pub interfaces: Vec<InterfaceLayout>,
}

impl SystemLayout {
    pub fn n_substructures(&self) -> usize {
        self.substructures.len()
    }

    pub fn n_interfaces(&self) -> usize {
        self.interfaces.len()
    }

    pub fn total_dofs(&self) -> usize {
        self.substructures.iter().map(|s| s.n_dofs).sum()
    }
}

fn sorted_key(e: [usize; 2]) -> [usize; 2] {
    if e[0] <= e[1] {
        e
    } else {
        [e[1], e[0]]
    }
}

/// Assigns master/slave sides, claims contact nodes and partitions each substructure's
/// DOFs into internal and contact sets.
///
/// The side with more interface nodes becomes the slave; on a tie the lower substructure
/// index is the slave. A node touched by several interfaces is a contact node of the
/// lowest-indexed one only.
pub fn build_layout(meshes: &[Mesh], pairs: &[InterfacePairing]) -> Result<SystemLayout> {
    let mut interfaces = Vec::with_capacity(pairs.len());
    let mut used_edges: Vec<BTreeMap<[usize; 2], usize>> = vec![BTreeMap::new(); meshes.len()];

    for (index, pair) in pairs.iter().enumerate() {
        if pair.a >= meshes.len() || pair.b >= meshes.len() {
            return Err(Error::InvalidArgument(format!("interface {index}: substructure index out of range")));
        }
        if pair.a == pair.b {
            return Err(Error::InvalidArgument(format!("interface {index}: both sides on substructure {}", pair.a)));
        }
        let nodes_a = meshes[pair.a].edge_set_nodes(&pair.edge_a)?;
        let nodes_b = meshes[pair.b].edge_set_nodes(&pair.edge_b)?;
        let a_is_slave = match nodes_a.len().cmp(&nodes_b.len()) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => pair.a < pair.b,
        };
        let (slave, slave_set, master, master_set) = if a_is_slave {
            (pair.a, &pair.edge_a, pair.b, &pair.edge_b)
        } else {
            (pair.b, &pair.edge_b, pair.a, &pair.edge_a)
        };
        let (sm, mm) = (&meshes[slave], &meshes[master]);
        let slave_edges = sm.edge_set(slave_set)?.to_vec();
        let master_edges = mm.edge_set(master_set)?.to_vec();

        for (sub, edges) in [(slave, &slave_edges), (master, &master_edges)] {
            for &e in edges.iter() {
                if let Some(&other) = used_edges[sub].get(&sorted_key(e)) {
                    return Err(Error::SlaveCollision { index, other });
                }
            }
            for &e in edges.iter() {
                used_edges[sub].insert(sorted_key(e), index);
            }
        }

        let (lo_s, hi_s) = sm.bounding_box();
        let (lo_m, hi_m) = mm.bounding_box();
        let diag = (0..2).map(|k| (hi_s[k].max(hi_m[k]) - lo_s[k].min(lo_m[k])).powi(2)).sum::<f64>().sqrt();
        let tolerance = 1e-8 * diag;

        // interface line from the extreme slave nodes
        let slave_nodes_all = sm.edge_set_nodes(slave_set)?;
        let (p0, p1) = farthest_pair(&slave_nodes_all.iter().map(|&n| sm.nodes[n]).collect::<Vec<_>>());
        let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
        if !(len > tolerance) {
            return Err(Error::DegenerateEdge(len));
        }
        let mut tangent = [(p1[0] - p0[0]) / len, (p1[1] - p0[1]) / len];
        if tangent[0] < -1e-12 || (tangent[0].abs() <= 1e-12 && tangent[1] < 0.0) {
            tangent = [-tangent[0], -tangent[1]];
        }
        let normal = [-tangent[1], tangent[0]];
        let origin = p0;
        let dist = |p: Point| ((p[0] - origin[0]) * normal[0] + (p[1] - origin[1]) * normal[1]).abs();
        let coord = |p: Point| (p[0] - origin[0]) * tangent[0] + (p[1] - origin[1]) * tangent[1];
        let master_nodes_all = mm.edge_set_nodes(master_set)?;
        let off_line = slave_nodes_all
            .iter()
            .map(|&n| dist(sm.nodes[n]))
            .chain(master_nodes_all.iter().map(|&n| dist(mm.nodes[n])));
        if off_line.fold(0.0f64, f64::max) > tolerance {
            return Err(Error::NonOverlappingInterface { index, tolerance });
        }
        let range = |nodes: &[usize], mesh: &Mesh| {
            nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &n| {
                let s = coord(mesh.nodes[n]);
                (lo.min(s), hi.max(s))
            })
        };
        let (s_lo, s_hi) = range(&slave_nodes_all, sm);
        let (m_lo, m_hi) = range(&master_nodes_all, mm);
        if s_hi.min(m_hi) - s_lo.max(m_lo) <= tolerance {
            return Err(Error::NonOverlappingInterface { index, tolerance });
        }

        let sort_by_coord = |nodes: &mut Vec<usize>, mesh: &Mesh| {
            nodes.sort_by(|&a, &b| coord(mesh.nodes[a]).total_cmp(&coord(mesh.nodes[b])));
        };
        let mut master_edge_nodes = master_nodes_all;
        sort_by_coord(&mut master_edge_nodes, mm);
        let mut slave_sorted = slave_nodes_all;
        sort_by_coord(&mut slave_sorted, sm);

        interfaces.push(InterfaceLayout {
            slave,
            master,
            slave_edge_set: slave_set.clone(),
            master_edge_set: master_set.clone(),
            slave_edges,
            master_edges,
            slave_nodes: slave_sorted,
            master_nodes: master_edge_nodes.clone(),
            master_edge_nodes,
            origin,
            tangent,
            tolerance,
        });
    }

    // claim contact nodes, lowest interface first
    let mut owner: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); meshes.len()];
    for (j, itf) in interfaces.iter_mut().enumerate() {
        for (sub, nodes) in [(itf.slave, &mut itf.slave_nodes), (itf.master, &mut itf.master_nodes)] {
            nodes.retain(|&n| match owner[sub].get(&n) {
                Some(_) => false,
                None => {
                    owner[sub].insert(n, j);
                    true
                }
            });
        }
        if itf.slave_nodes.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "interface {j}: every slave node is already owned by another interface"
            )));
        }
    }

    let mut offset = 0;
    let substructures = meshes
        .iter()
        .zip(owner)
        .map(|(mesh, contact_owner)| {
            let contact_nodes: BTreeSet<usize> = contact_owner.keys().copied().collect();
            let mut internal = Vec::new();
            let mut contact = Vec::new();
            for n in 0..mesh.n_nodes() {
                let target = if contact_nodes.contains(&n) { &mut contact } else { &mut internal };
                target.extend([2 * n, 2 * n + 1]);
            }
            let s = SubstructureLayout { offset, n_dofs: mesh.n_dofs(), internal, contact, contact_owner };
            offset += mesh.n_dofs();
            s
        })
        .collect();

    Ok(SystemLayout { substructures, interfaces })
}

fn farthest_pair(points: &[Point]) -> (Point, Point) {
    let mut best = (points[0], points[0], -1.0);
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d > best.2 {
                best = (*p, *q, d);
            }
        }
    }
    (best.0, best.1)
}

/// Meshes and interface pairings for a `rows x cols` grid of rectangular blocks.
///
/// `mesh_for(r, c)` builds the block at row `r` (from the bottom) and column `c`; blocks
/// must share their edges geometrically. Substructures are numbered row-major; interfaces
/// between horizontal neighbours come first, then those between vertical neighbours.
pub fn block_grid<F>(rows: usize, cols: usize, mut mesh_for: F) -> Result<(Vec<Mesh>, Vec<InterfacePairing>)>
where
    F: FnMut(usize, usize) -> Result<Mesh>,
{
    let mut meshes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            meshes.push(mesh_for(r, c)?);
        }
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            pairs.push(InterfacePairing::new(id(r, c), "right", id(r, c + 1), "left"));
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            pairs.push(InterfacePairing::new(id(r, c), "top", id(r + 1, c), "bottom"));
        }
    }
    Ok((meshes, pairs))
}
