use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quadrature::{q4_shape_derivatives, quad_rule_2x2};

pub type Point = [f64; 2];

/// A 2D mesh of 4-node quadrilaterals with named boundary edge sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise connectivity.
    pub elements: Vec<[usize; 4]>,
    pub edge_sets: BTreeMap<String, Vec<[usize; 2]>>,
}

impl Mesh {
    /// Uniform `nx x ny` grid on the rectangle `[origin, origin + (lx, ly)]` with edge
    /// sets `left`, `right`, `bottom` and `top`.
    pub fn structured(nx: usize, ny: usize, lx: f64, ly: f64, origin: Point) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!("element counts must be >= 1, got {nx} x {ny}")));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidMesh(format!("lengths must be positive, got {lx} x {ly}")));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([origin[0] + lx * (i as f64) / (nx as f64), origin[1] + ly * (j as f64) / (ny as f64)]);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut edge_sets = BTreeMap::new();
        edge_sets.insert("bottom".to_string(), (0..nx).map(|i| [id(i, 0), id(i + 1, 0)]).collect());
        edge_sets.insert("top".to_string(), (0..nx).map(|i| [id(i, ny), id(i + 1, ny)]).collect());
        edge_sets.insert("left".to_string(), (0..ny).map(|j| [id(0, j), id(0, j + 1)]).collect());
        edge_sets.insert("right".to_string(), (0..ny).map(|j| [id(nx, j), id(nx, j + 1)]).collect());
        Ok(Self { nodes, elements, edge_sets })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> [Point; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn edge_set(&self, name: &str) -> Result<&[[usize; 2]]> {
        self.edge_sets.get(name).map(Vec::as_slice).ok_or_else(|| Error::UnknownEdgeSet(name.to_string()))
    }

    /// Sorted, deduplicated nodes of an edge set.
    pub fn edge_set_nodes(&self, name: &str) -> Result<Vec<usize>> {
        let mut nodes: Vec<usize> = self.edge_set(name)?.iter().flatten().copied().collect();
        nodes.sort_unstable();
        nodes.dedup();
        Ok(nodes)
    }

    /// Jacobian determinants of the reference map at the 2x2 Gauss points.
    pub fn jacobian_dets(&self, e: usize) -> [f64; 4] {
        let x = self.element_coords(e);
        quad_rule_2x2().map(|(xi, eta, _)| {
            let d = q4_shape_derivatives(xi, eta);
            let mut j = [[0.0; 2]; 2];
            for a in 0..4 {
                for r in 0..2 {
                    for c in 0..2 {
                        j[r][c] += x[a][r] * d[a][c];
                    }
                }
            }
            j[0][0] * j[1][1] - j[0][1] * j[1][0]
        })
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Mean length of all element edges.
    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        for e in 0..self.elements.len() {
            let x = self.element_coords(e);
            for a in 0..4 {
                let b = (a + 1) % 4;
                sum += ((x[b][0] - x[a][0]).powi(2) + (x[b][1] - x[a][1]).powi(2)).sqrt();
            }
        }
        sum / (4 * self.elements.len()).max(1) as f64
    }

    /// Checks connectivity bounds, element orientation and that every edge-set pair is a
    /// boundary edge of exactly one element.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, conn) in self.elements.iter().enumerate() {
            if conn.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("element {e} references a node >= {n}")));
            }
            if let Some(d) = self.jacobian_dets(e).iter().find(|&&d| !(d > 0.0)) {
                return Err(Error::InvalidMesh(format!("element {e} has Jacobian determinant {d:e}")));
            }
        }
        let mut edge_count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for conn in &self.elements {
            for a in 0..4 {
                let mut k = [conn[a], conn[(a + 1) % 4]];
                k.sort_unstable();
                *edge_count.entry(k).or_default() += 1;
            }
        }
        for (name, edges) in &self.edge_sets {
            for edge in edges {
                let mut k = *edge;
                k.sort_unstable();
                if edge_count.get(&k).copied() != Some(1) {
                    return Err(Error::InvalidMesh(format!(
                        "edge set `{name}`: ({}, {}) is not a boundary edge of exactly one element",
                        edge[0], edge[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text serialization; coordinates use 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {} elements {}", self.nodes.len(), self.elements.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
        }
        for e in &self.elements {
            let _ = writeln!(s, "{} {} {} {}", e[0], e[1], e[2], e[3]);
        }
        for (name, edges) in &self.edge_sets {
            let _ = writeln!(s, "set {} {}", name, edges.len());
            for e in edges {
                let _ = writeln!(s, "{} {}", e[0], e[1]);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let err = |line: usize, message: &str| Error::Parse { line, message: message.to_string() };

        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty mesh file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "nodes" || h[2] != "elements" {
            return Err(err(ln, "expected `nodes <n> elements <m>`"));
        }
        let n: usize = h[1].parse().map_err(|_| err(ln, "bad node count"))?;
        let m: usize = h[3].parse().map_err(|_| err(ln, "bad element count"))?;

        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing node line"))?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(ln, "bad coordinate"))?;
            if v.len() != 2 {
                return Err(err(ln, "expected `x y`"));
            }
            nodes.push([v[0], v[1]]);
        }
        let mut elements = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing element line"))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(ln, "bad node index"))?;
            if v.len() != 4 {
                return Err(err(ln, "expected 4 node indices"));
            }
            elements.push([v[0], v[1], v[2], v[3]]);
        }
        let mut edge_sets = BTreeMap::new();
        while let Some((ln, l)) = lines.next() {
            let h: Vec<&str> = l.split_whitespace().collect();
            if h.len() != 3 || h[0] != "set" {
                return Err(err(ln, "expected `set <name> <k>`"));
            }
            let k: usize = h[2].parse().map_err(|_| err(ln, "bad edge count"))?;
            let mut edges = Vec::with_capacity(k);
            for _ in 0..k {
                let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing edge line"))?;
                let v: Vec<usize> = l
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(ln, "bad edge node"))?;
                if v.len() != 2 {
                    return Err(err(ln, "expected `a b`"));
                }
                edges.push([v[0], v[1]]);
            }
            edge_sets.insert(h[1].to_string(), edges);
        }
        let mesh = Self { nodes, elements, edge_sets };
        mesh.validate()?;
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_square() {
        let m = Mesh::structured(1, 1, 1.0, 1.0, [0.0, 0.0]).unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.elements.len(), 1);
        for name in ["left", "right", "top", "bottom"] {
            assert_eq!(m.edge_set(name).unwrap().len(), 1);
        }
        m.validate().unwrap();
    }

    #[test]
    fn counts() {
        let m = Mesh::structured(2, 3, 2.0, 3.0, [0.0, 0.0]).unwrap();
        assert_eq!(m.n_nodes(), 12);
        assert_eq!(m.elements.len(), 6);
    }

    #[test]
    fn uniform_grid_has_constant_jacobian() {
        // element 10 x 10 mm, reference square area 4
        let m = Mesh::structured(10, 10, 100.0, 100.0, [0.0, 0.0]).unwrap();
        for e in 0..m.elements.len() {
            for d in m.jacobian_dets(e) {
                assert!((d - 25.0).abs() < 1e-12, "{d}");
            }
        }
    }

    #[test]
    fn bad_dimensions_rejected() {
        assert!(Mesh::structured(0, 1, 1.0, 1.0, [0.0; 2]).is_err());
        assert!(Mesh::structured(1, 1, 0.0, 1.0, [0.0; 2]).is_err());
        assert!(Mesh::structured(1, 1, 1.0, -2.0, [0.0; 2]).is_err());
    }

    #[test]
    fn validation_catches_clockwise_and_interior_edges() {
        let mut m = Mesh::structured(2, 1, 2.0, 1.0, [0.0; 2]).unwrap();
        m.edge_sets.insert("bad".into(), vec![[1, 4]]);
        assert!(m.validate().is_err());
        let mut m = Mesh::structured(1, 1, 1.0, 1.0, [0.0; 2]).unwrap();
        m.elements[0].reverse();
        assert!(m.validate().is_err());
    }

    #[test]
    fn unknown_edge_set() {
        let m = Mesh::structured(1, 1, 1.0, 1.0, [0.0; 2]).unwrap();
        assert_eq!(m.edge_set("nope").unwrap_err(), Error::UnknownEdgeSet("nope".into()));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Mesh::from_text("nodes 1 elements 0\n0.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            nx in 1usize..6, ny in 1usize..6,
            lx in 1e-3f64..1e3, ly in 1e-3f64..1e3,
            ox in -1e3f64..1e3, oy in -1e3f64..1e3,
        ) {
            let m = Mesh::structured(nx, ny, lx, ly, [ox, oy]).unwrap();
            let back = Mesh::from_text(&m.to_text()).unwrap();
            prop_assert_eq!(&back, &m);
            // generation is deterministic
            prop_assert_eq!(Mesh::structured(nx, ny, lx, ly, [ox, oy]).unwrap(), m);
        }
    }
}
