//! Mesh representation, validation, generators and JSON I/O.

mod element;
pub mod generate;
mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use element::{element_quadrature, shape_functions, ElementKind, QuadratureOrder, ShapeEval};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub dim: usize,
    /// Coordinates in mm; unused trailing components are zero.
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<Element>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// (element, local face) pairs.
    pub side_sets: BTreeMap<String, Vec<(usize, usize)>>,
    /// Out-of-plane thickness for 2D meshes (mm).
    pub thickness: f64,
    /// Named scalar geometry attributes (ligament length, span, ...).
    pub attributes: BTreeMap<String, f64>,
}

/// Geometry of one quadrature point in physical space.
#[derive(Debug, Clone, Copy)]
pub struct QpGeometry {
    /// |J| · w (· thickness in 2D).
    pub weight: f64,
    pub n: [f64; 4],
    /// Physical gradients dN_a/dx_k.
    pub grad: [[f64; 3]; 4],
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Mesh(format!("node set `{name}` does not exist")))
    }

    pub fn side_set(&self, name: &str) -> Result<&[(usize, usize)]> {
        self.side_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Mesh(format!("side set `{name}` does not exist")))
    }

    pub fn attribute(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).copied()
    }

    /// Jacobian determinant and physical shape-function gradients at a local point.
    pub fn jacobian(&self, e: usize, xi: &[f64]) -> (f64, ShapeEval, [[f64; 3]; 4]) {
        let el = &self.elements[e];
        let s = shape_functions(el.kind, xi);
        let d = el.kind.dim();
        let mut j = [[0.0; 3]; 3];
        for (a, &node) in el.nodes.iter().enumerate() {
            let x = self.nodes[node];
            for r in 0..d {
                for c in 0..d {
                    j[r][c] += x[r] * s.dn[a][c];
                }
            }
        }
        let mut grad = [[0.0; 3]; 4];
        let det;
        if d == 2 {
            det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
            for a in 0..s.count {
                // dN/dx_r = Σ_c dN/dξ_c (J⁻¹)_{c r}
                for r in 0..2 {
                    grad[a][r] = s.dn[a][0] * inv[0][r] + s.dn[a][1] * inv[1][r];
                }
            }
        } else {
            let m = nalgebra::Matrix3::from_fn(|r, c| j[r][c]);
            det = m.determinant();
            let inv = m.try_inverse().unwrap_or_else(nalgebra::Matrix3::zeros);
            for a in 0..s.count {
                for r in 0..3 {
                    grad[a][r] = (0..3).map(|c| s.dn[a][c] * inv[(c, r)]).sum();
                }
            }
        }
        (det, s, grad)
    }

    /// Quadrature-point geometry for every element.
    pub fn qp_geometry(&self, order: QuadratureOrder) -> Vec<Vec<QpGeometry>> {
        (0..self.elements.len())
            .map(|e| {
                let kind = self.elements[e].kind;
                element_quadrature(kind, order)
                    .into_iter()
                    .map(|(xi, w)| {
                        let (det, s, grad) = self.jacobian(e, &xi);
                        let t = if self.dim == 2 { self.thickness } else { 1.0 };
                        QpGeometry {
                            weight: det * w * t,
                            n: s.n,
                            grad,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks index ranges, element dimensions, Jacobian signs and set integrity.
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Mesh(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        if self.dim == 2 && !(self.thickness > 0.0) {
            return Err(Error::Mesh(format!("thickness must be > 0, got {}", self.thickness)));
        }
        let n = self.nodes.len();
        for (e, el) in self.elements.iter().enumerate() {
            if el.kind.dim() != self.dim {
                return Err(Error::Mesh(format!(
                    "element {e}: {} element in a {}D mesh",
                    el.kind.name(),
                    self.dim
                )));
            }
            if el.nodes.len() != el.kind.num_nodes() {
                return Err(Error::Mesh(format!(
                    "element {e}: {} needs {} nodes, got {}",
                    el.kind.name(),
                    el.kind.num_nodes(),
                    el.nodes.len()
                )));
            }
            if let Some(&bad) = el.nodes.iter().find(|&&i| i >= n) {
                return Err(Error::Mesh(format!(
                    "element {e}: node index {bad} out of range (mesh has {n} nodes)"
                )));
            }
            for (xi, _) in element_quadrature(el.kind, QuadratureOrder::Full) {
                let (det, _, _) = self.jacobian(e, &xi);
                if !(det > 0.0) {
                    return Err(Error::Mesh(format!(
                        "element {e}: non-positive Jacobian determinant {det:e}"
                    )));
                }
            }
        }
        for (name, set) in &self.node_sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::Mesh(format!(
                    "node set `{name}`: node index {bad} out of range"
                )));
            }
        }
        for (name, set) in &self.side_sets {
            for &(e, f) in set {
                if e >= self.elements.len() || f >= self.elements[e].kind.faces().len() {
                    return Err(Error::Mesh(format!(
                        "side set `{name}`: invalid face ({e}, {f})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = write_mesh_string(self);
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Smallest element edge length.
    pub fn min_edge_length(&self) -> f64 {
        let mut h = f64::INFINITY;
        for el in &self.elements {
            for (i, &a) in el.nodes.iter().enumerate() {
                for &b in &el.nodes[i + 1..] {
                    h = h.min(dist(&self.nodes[a], &self.nodes[b]));
                }
            }
        }
        h
    }

    /// Largest edge length among elements whose centroid satisfies `inside`.
    pub fn max_edge_length_where(&self, inside: impl Fn(&[f64; 3]) -> bool) -> f64 {
        let mut h: f64 = 0.0;
        for el in &self.elements {
            let c = self.centroid(el);
            if !inside(&c) {
                continue;
            }
            for (i, &a) in el.nodes.iter().enumerate() {
                for &b in &el.nodes[i + 1..] {
                    h = h.max(dist(&self.nodes[a], &self.nodes[b]));
                }
            }
        }
        h
    }

    pub fn centroid(&self, el: &Element) -> [f64; 3] {
        let mut c = [0.0; 3];
        for &a in &el.nodes {
            for k in 0..3 {
                c[k] += self.nodes[a][k];
            }
        }
        let m = el.nodes.len() as f64;
        c.map(|v| v / m)
    }

    /// Node-to-node adjacency (sorted, includes self) from element connectivity.
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.nodes.len()).map(|i| vec![i]).collect();
        for el in &self.elements {
            for &a in &el.nodes {
                adj[a].extend(el.nodes.iter().copied());
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }

    /// Nodes on the faces listed in a side set, with lumped face measures.
    pub fn face_weights(&self, side_set: &str) -> Result<Vec<(usize, f64)>> {
        let mut w: BTreeMap<usize, f64> = BTreeMap::new();
        for &(e, f) in self.side_set(side_set)? {
            let el = &self.elements[e];
            let face: Vec<usize> = el.kind.faces()[f].iter().map(|&k| el.nodes[k]).collect();
            let measure = match face.len() {
                2 => dist(&self.nodes[face[0]], &self.nodes[face[1]]) * self.thickness,
                3 => {
                    let (a, b, c) = (self.nodes[face[0]], self.nodes[face[1]], self.nodes[face[2]]);
                    let u = sub(&b, &a);
                    let v = sub(&c, &a);
                    let cr = [
                        u[1] * v[2] - u[2] * v[1],
                        u[2] * v[0] - u[0] * v[2],
                        u[0] * v[1] - u[1] * v[0],
                    ];
                    0.5 * (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt()
                }
                _ => unreachable!(),
            };
            let share = measure / face.len() as f64;
            for n in face {
                *w.entry(n).or_insert(0.0) += share;
            }
        }
        Ok(w.into_iter().collect())
    }
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_triangle() -> Mesh {
        Mesh {
            dim: 2,
            nodes: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            elements: vec![Element {
                kind: ElementKind::Tri3,
                nodes: vec![0, 1, 2],
            }],
            thickness: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn validates_simple_triangle() {
        let m = unit_triangle();
        m.validate().unwrap();
        let g = m.qp_geometry(QuadratureOrder::Full);
        let area: f64 = g[0].iter().map(|q| q.weight).sum();
        assert!((area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_inverted_and_out_of_range() {
        let mut m = unit_triangle();
        m.elements[0].nodes = vec![0, 2, 1];
        assert!(m.validate().unwrap_err().to_string().contains("element 0"));
        let mut m = unit_triangle();
        m.elements[0].nodes = vec![0, 1, 7];
        let msg = m.validate().unwrap_err().to_string();
        assert!(msg.contains("element 0") && msg.contains("7"), "{msg}");
    }

    #[test]
    fn gradients_of_linear_field_are_exact() {
        let mut m = unit_triangle();
        m.nodes = vec![[1.0, 1.0, 0.0], [4.0, 2.0, 0.0], [2.0, 5.0, 0.0]];
        let f = |x: &[f64; 3]| 2.0 * x[0] - 3.0 * x[1];
        let (_, _, grad) = m.jacobian(0, &[0.2, 0.2]);
        let mut g = [0.0; 2];
        for a in 0..3 {
            for k in 0..2 {
                g[k] += grad[a][k] * f(&m.nodes[m.elements[0].nodes[a]]);
            }
        }
        assert!((g[0] - 2.0).abs() < 1e-13 && (g[1] + 3.0).abs() < 1e-13);
    }

    #[test]
    fn tet_volume() {
        let m = Mesh {
            dim: 3,
            nodes: vec![[0.0; 3], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]],
            elements: vec![Element {
                kind: ElementKind::Tet4,
                nodes: vec![0, 1, 2, 3],
            }],
            thickness: 1.0,
            ..Default::default()
        };
        m.validate().unwrap();
        let v: f64 = m.qp_geometry(QuadratureOrder::Full)[0].iter().map(|q| q.weight).sum();
        assert!((v - 8.0 / 6.0).abs() < 1e-14);
    }
}
