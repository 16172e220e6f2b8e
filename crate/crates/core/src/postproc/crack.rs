//! Crack length from the nodal φ field.
//!
//! The crack is the connected set of nodes with φ ≥ threshold reachable from
//! the seed nodes (the notch tip). Nodes within `seed_radius` of the seeds
//! may be crossed regardless of φ, since the damage ridge often starts a
//! little off the notch corner. Its length is the largest graph-geodesic
//! distance from the seeds within that set, extended along each boundary edge
//! to the linearly interpolated threshold crossing. In 3D the seeds are binned along
//! the crack front and the length is the mean over bins of the per-bin
//! maximum advance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::mesh::{dist, Mesh};

#[derive(Debug, Clone)]
pub struct CrackTracer {
    adjacency: Vec<Vec<(usize, f64)>>,
    seeds: Vec<usize>,
    seed_radius: f64,
    /// front bin of every seed (all zero in 2D)
    seed_bin: Vec<usize>,
    bins: usize,
}

#[derive(PartialEq)]
struct Item(f64, usize, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by node index
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl CrackTracer {
    /// `front_axis`: coordinate along which 3D seeds are binned (bin width
    /// `bin_width`); `None` treats the front as a single point.
    pub fn new(
        mesh: &Mesh,
        seeds: &[usize],
        seed_radius: f64,
        front_axis: Option<usize>,
        bin_width: f64,
    ) -> Self {
        let adj = mesh.node_adjacency();
        let adjacency = adj
            .iter()
            .enumerate()
            .map(|(a, row)| {
                row.iter()
                    .filter(|&&b| b != a)
                    .map(|&b| (b, dist(&mesh.nodes[a], &mesh.nodes[b])))
                    .collect()
            })
            .collect();
        let (seed_bin, bins) = match front_axis {
            Some(k) if !seeds.is_empty() => {
                let lo = seeds.iter().map(|&s| mesh.nodes[s][k]).fold(f64::INFINITY, f64::min);
                let hi = seeds.iter().map(|&s| mesh.nodes[s][k]).fold(f64::NEG_INFINITY, f64::max);
                let bins = (((hi - lo) / bin_width).floor() as usize + 1).max(1);
                let b = seeds
                    .iter()
                    .map(|&s| (((mesh.nodes[s][k] - lo) / bin_width).floor() as usize).min(bins - 1))
                    .collect();
                (b, bins)
            }
            _ => (vec![0; seeds.len()], 1),
        };
        CrackTracer {
            adjacency,
            seeds: seeds.to_vec(),
            seed_radius,
            seed_bin,
            bins,
        }
    }

    /// Multi-source geodesic distances through the crack and the seed zone.
    /// Returns per-node (distance, bin); unreached nodes have infinite distance.
    fn traverse(&self, phi: &[f64], threshold: f64) -> (Vec<f64>, Vec<usize>) {
        let n = self.adjacency.len();
        let mut best = vec![f64::INFINITY; n];
        let mut bin = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        for (s, &node) in self.seeds.iter().enumerate() {
            if best[node] > 0.0 {
                best[node] = 0.0;
                bin[node] = self.seed_bin[s];
                heap.push(Item(0.0, node, self.seed_bin[s]));
            }
        }
        while let Some(Item(d, v, b)) = heap.pop() {
            if d > best[v] || (d == best[v] && b != bin[v]) {
                continue;
            }
            for &(w, len) in &self.adjacency[v] {
                let nd = d + len;
                if phi[w] < threshold && nd > self.seed_radius {
                    continue;
                }
                if nd < best[w] {
                    best[w] = nd;
                    bin[w] = b;
                    heap.push(Item(nd, w, b));
                }
            }
        }
        (best, bin)
    }

    /// Crack length for the given field and threshold; zero if no cracked
    /// node is connected to the seeds.
    pub fn length(&self, phi: &[f64], threshold: f64) -> f64 {
        let (best, bin) = self.traverse(phi, threshold);
        let mut reach = vec![0.0f64; self.bins];
        let mut any = false;
        for v in 0..best.len() {
            if !best[v].is_finite() || phi[v] < threshold {
                continue;
            }
            any = true;
            let b = bin[v];
            reach[b] = reach[b].max(best[v]);
            for &(w, len) in &self.adjacency[v] {
                if phi[w] < threshold {
                    // tip lies where φ crosses the threshold along this edge
                    let frac = (phi[v] - threshold) / (phi[v] - phi[w]);
                    reach[b] = reach[b].max(best[v] + len * frac);
                }
            }
        }
        if !any {
            return 0.0;
        }
        if self.bins == 1 {
            reach[0]
        } else {
            reach.iter().sum::<f64>() / self.bins as f64
        }
    }

    /// Cracked node farthest (geodesically) from the seeds, i.e. the tip node.
    pub fn tip_node(&self, phi: &[f64], threshold: f64) -> Option<usize> {
        let (best, _) = self.traverse(phi, threshold);
        (0..best.len())
            .filter(|&v| best[v].is_finite() && phi[v] >= threshold)
            .max_by(|&a, &b| best[a].total_cmp(&best[b]).then(b.cmp(&a)))
    }

    /// Unit normal of the least-squares plane through the traced crack nodes
    /// whose coordinate `axis` lies within `half_width` of `level`. `None`
    /// when fewer than three nodes qualify or they do not span a plane.
    pub fn plane_normal(
        &self,
        mesh: &Mesh,
        phi: &[f64],
        threshold: f64,
        axis: usize,
        level: f64,
        half_width: f64,
    ) -> Option<[f64; 3]> {
        let pts: Vec<[f64; 3]> = self
            .cracked_nodes(phi, threshold)
            .into_iter()
            .map(|v| mesh.nodes[v])
            .filter(|p| (p[axis] - level).abs() <= half_width)
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mut c = Vector3::zeros();
        for p in &pts {
            c += Vector3::from(*p) / n;
        }
        let mut cov = Matrix3::zeros();
        for p in &pts {
            let d = Vector3::from(*p) - c;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        // the two in-plane directions must both carry spread
        if eig.eigenvalues[order[1]] <= 1e-12 * eig.eigenvalues[order[2]].max(1e-300) {
            return None;
        }
        let v = eig.eigenvectors.column(order[0]);
        Some([v[0], v[1], v[2]])
    }

    /// Nodes of the traced crack (φ ≥ threshold, connected to the seeds).
    pub fn cracked_nodes(&self, phi: &[f64], threshold: f64) -> Vec<usize> {
        let (best, _) = self.traverse(phi, threshold);
        (0..best.len())
            .filter(|&v| best[v].is_finite() && phi[v] >= threshold)
            .collect()
    }
}

/// Angle in degrees between two planes given by their normals.
pub fn plane_angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (a, b) = (Vector3::from(a).normalize(), Vector3::from(b).normalize());
    a.dot(&b).abs().min(1.0).acos().to_degrees()
}

/// Thresholds reported alongside the default crack definition.
pub const SENSITIVITY_THRESHOLDS: [f64; 3] = [0.9, 0.95, 0.99];

/// Crack length for each of [`SENSITIVITY_THRESHOLDS`].
pub fn threshold_sensitivity(tracer: &CrackTracer, phi: &[f64]) -> Vec<(f64, f64)> {
    SENSITIVITY_THRESHOLDS
        .iter()
        .map(|&t| (t, tracer.length(phi, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{generate_bar, BarParams};
    use crate::mesh::ElementKind;

    fn plate() -> Mesh {
        // 40 × 40 plate, 1 mm triangles; the "notch tip" is the bottom-middle node
        generate_bar(&BarParams {
            length: 40.0,
            height: 40.0,
            thickness: 1.0,
            size: 1.0,
            kind: ElementKind::Tri3,
        })
        .unwrap()
    }

    fn node_at(m: &Mesh, x: f64, y: f64) -> usize {
        m.nodes
            .iter()
            .position(|p| (p[0] - x).abs() < 1e-9 && (p[1] - y).abs() < 1e-9)
            .unwrap()
    }

    #[test]
    fn intact_field_has_no_crack() {
        let m = plate();
        let t = CrackTracer::new(&m, &[node_at(&m, 20.0, 0.0)], 0.0, None, 1.0);
        assert_eq!(t.length(&vec![0.0; m.num_nodes()], 0.95), 0.0);
    }

    #[test]
    fn painted_straight_band() {
        let m = plate();
        let seed = node_at(&m, 20.0, 0.0);
        let t = CrackTracer::new(&m, &[seed], 0.0, None, 1.0);
        let phi: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| if (p[0] - 20.0).abs() <= 1.0 && p[1] <= 10.0 + 1e-9 { 1.0 } else { 0.1 })
            .collect();
        let a = t.length(&phi, 0.95);
        assert!((a - 10.0).abs() <= 1.0 + 1e-9, "a = {a}");
        // a detached damaged patch does not count
        let mut phi2 = phi.clone();
        phi2[node_at(&m, 5.0, 30.0)] = 1.0;
        assert_eq!(t.length(&phi2, 0.95), a);
    }

    #[test]
    fn inclined_band_follows_geodesic() {
        let m = plate();
        let seed = node_at(&m, 20.0, 0.0);
        let t = CrackTracer::new(&m, &[seed], 0.0, None, 1.0);
        // band along the 45° diagonal from the seed
        let phi: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| {
                let along = ((p[0] - 20.0) + p[1]) / 2f64.sqrt();
                let across = ((p[0] - 20.0) - p[1]).abs() / 2f64.sqrt();
                if across <= 1.5 && along <= 14.2 && p[1] <= 10.0 { 1.0 } else { 0.0 }
            })
            .collect();
        let a = t.length(&phi, 0.95);
        let expected = 10.0 * 2f64.sqrt();
        assert!((a - expected).abs() <= 1.5, "a = {a}, expected {expected}");
    }

    #[test]
    fn ridge_starting_off_the_seed() {
        let m = plate();
        let seed = node_at(&m, 20.0, 0.0);
        // band from y = 2 to 12; the seed itself stays below the threshold
        let phi: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| {
                if (p[0] - 20.0).abs() <= 1e-9 && p[1] >= 2.0 - 1e-9 && p[1] <= 12.0 + 1e-9 {
                    1.0
                } else {
                    0.5
                }
            })
            .collect();
        let far = CrackTracer::new(&m, &[seed], 0.0, None, 1.0);
        assert_eq!(far.length(&phi, 0.95), 0.0);
        let t = CrackTracer::new(&m, &[seed], 2.5, None, 1.0);
        let a = t.length(&phi, 0.95);
        assert!((a - 12.0).abs() < 0.2, "a = {a}");
        let tip = t.tip_node(&phi, 0.95).unwrap();
        assert_eq!(m.nodes[tip][1], 12.0);
    }

    #[test]
    fn lower_threshold_never_shortens_the_crack() {
        let m = plate();
        let seed = node_at(&m, 20.0, 0.0);
        let t = CrackTracer::new(&m, &[seed], 0.0, None, 1.0);
        // φ decays linearly with height above the seed
        let phi: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| if (p[0] - 20.0).abs() <= 1e-9 { (1.0 - p[1] / 100.0).max(0.0) } else { 0.0 })
            .collect();
        let r = threshold_sensitivity(&t, &phi);
        assert_eq!(r.len(), 3);
        // crossing of 1 − y/100 = thr sits at y = 100 (1 − thr)
        for (thr, a) in &r {
            assert!((a - 100.0 * (1.0 - thr)).abs() < 1e-9, "{thr}: {a}");
        }
    }

    #[test]
    fn plane_fit_recovers_a_painted_plane() {
        use crate::mesh::generate::{generate_slant_beam, SlantBeamParams};
        let p = SlantBeamParams {
            cut_notch: true,
            notch_gap: 1.5,
            ..SlantBeamParams::desk_scale()
        };
        let m = generate_slant_beam(&p).unwrap();
        let (mid, zc) = (0.5 * p.length, 0.5 * p.width);
        // plane through the beam axis, normal rotated 30° from x about y
        let normal = [30f64.to_radians().cos(), 0.0, 30f64.to_radians().sin()];
        let phi: Vec<f64> = m
            .nodes
            .iter()
            .map(|q| {
                let d = (q[0] - mid) * normal[0] + (q[2] - zc) * normal[2];
                if d.abs() <= 0.8 && q[1] < 9.0 { 1.0 } else { 0.0 }
            })
            .collect();
        let all: Vec<usize> = (0..m.num_nodes()).collect();
        let t = CrackTracer::new(&m, &all, 0.0, None, 1.0);
        let n = t.plane_normal(&m, &phi, 0.95, 1, 6.0, 1.0).unwrap();
        assert!(plane_angle_deg(n, normal) < 3.0, "{n:?}");
        assert!((plane_angle_deg(normal, [1.0, 0.0, 1.0]) - 15.0).abs() < 1e-9);
        // a single layer of nodes spans no plane across it
        assert!(t.plane_normal(&m, &vec![0.0; m.num_nodes()], 0.95, 1, 6.0, 1.0).is_none());
    }
}
