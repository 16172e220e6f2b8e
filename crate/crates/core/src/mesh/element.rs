//! Reference-element shape functions and quadrature rules.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Tri3,
    Quad4,
    Tet4,
}

impl ElementKind {
    pub fn num_nodes(self) -> usize {
        match self {
            ElementKind::Tri3 => 3,
            ElementKind::Quad4 => 4,
            ElementKind::Tet4 => 4,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ElementKind::Tri3 | ElementKind::Quad4 => 2,
            ElementKind::Tet4 => 3,
        }
    }

    /// Local node lists of the element faces (edges in 2D).
    pub fn faces(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Tri3 => &[&[0, 1], &[1, 2], &[2, 0]],
            ElementKind::Quad4 => &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]],
            ElementKind::Tet4 => &[&[0, 2, 1], &[0, 1, 3], &[1, 2, 3], &[0, 3, 2]],
        }
    }

    /// Measure of the reference element.
    pub fn reference_measure(self) -> f64 {
        match self {
            ElementKind::Tri3 => 0.5,
            ElementKind::Quad4 => 4.0,
            ElementKind::Tet4 => 1.0 / 6.0,
        }
    }

    pub fn vtk_cell_type(self) -> u8 {
        match self {
            ElementKind::Tri3 => 5,
            ElementKind::Quad4 => 9,
            ElementKind::Tet4 => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Tri3 => "tri3",
            ElementKind::Quad4 => "quad4",
            ElementKind::Tet4 => "tet4",
        }
    }
}

/// Quadrature richness. Quad4 always uses 2×2 Gauss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureOrder {
    /// 1-point rules for tri3 and tet4.
    Reduced,
    /// 3-point tri3 and 4-point tet4 rules.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct ShapeEval {
    pub n: [f64; 4],
    /// Local gradients dN_a/dξ_k.
    pub dn: [[f64; 3]; 4],
    pub count: usize,
}

pub fn shape_functions(kind: ElementKind, xi: &[f64]) -> ShapeEval {
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 3]; 4];
    match kind {
        ElementKind::Tri3 => {
            let (r, s) = (xi[0], xi[1]);
            n[0] = 1.0 - r - s;
            n[1] = r;
            n[2] = s;
            dn[0] = [-1.0, -1.0, 0.0];
            dn[1] = [1.0, 0.0, 0.0];
            dn[2] = [0.0, 1.0, 0.0];
        }
        ElementKind::Quad4 => {
            let (r, s) = (xi[0], xi[1]);
            const SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            for (a, (sr, ss)) in SIGNS.iter().enumerate() {
                n[a] = 0.25 * (1.0 + sr * r) * (1.0 + ss * s);
                dn[a] = [0.25 * sr * (1.0 + ss * s), 0.25 * ss * (1.0 + sr * r), 0.0];
            }
        }
        ElementKind::Tet4 => {
            let (r, s, t) = (xi[0], xi[1], xi[2]);
            n[0] = 1.0 - r - s - t;
            n[1] = r;
            n[2] = s;
            n[3] = t;
            dn[0] = [-1.0, -1.0, -1.0];
            dn[1] = [1.0, 0.0, 0.0];
            dn[2] = [0.0, 1.0, 0.0];
            dn[3] = [0.0, 0.0, 1.0];
        }
    }
    ShapeEval {
        n,
        dn,
        count: kind.num_nodes(),
    }
}

/// Quadrature points (reference coordinates, padded to 3) and weights.
pub fn element_quadrature(kind: ElementKind, order: QuadratureOrder) -> Vec<([f64; 3], f64)> {
    match (kind, order) {
        (ElementKind::Tri3, QuadratureOrder::Reduced) => vec![([1.0 / 3.0, 1.0 / 3.0, 0.0], 0.5)],
        (ElementKind::Tri3, QuadratureOrder::Full) => vec![
            ([1.0 / 6.0, 1.0 / 6.0, 0.0], 1.0 / 6.0),
            ([2.0 / 3.0, 1.0 / 6.0, 0.0], 1.0 / 6.0),
            ([1.0 / 6.0, 2.0 / 3.0, 0.0], 1.0 / 6.0),
        ],
        (ElementKind::Quad4, _) => {
            let g = 1.0 / 3f64.sqrt();
            vec![
                ([-g, -g, 0.0], 1.0),
                ([g, -g, 0.0], 1.0),
                ([g, g, 0.0], 1.0),
                ([-g, g, 0.0], 1.0),
            ]
        }
        (ElementKind::Tet4, QuadratureOrder::Reduced) => vec![([0.25, 0.25, 0.25], 1.0 / 6.0)],
        (ElementKind::Tet4, QuadratureOrder::Full) => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            let w = 1.0 / 24.0;
            vec![
                ([b, b, b], w),
                ([a, b, b], w),
                ([b, a, b], w),
                ([b, b, a], w),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tri_centroid() {
        let s = shape_functions(ElementKind::Tri3, &[1.0 / 3.0, 1.0 / 3.0]);
        for a in 0..3 {
            assert!((s.n[a] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quad_corner() {
        let s = shape_functions(ElementKind::Quad4, &[-1.0, -1.0]);
        assert_eq!(&s.n, &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn tet_vertices() {
        let verts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for (k, v) in verts.iter().enumerate() {
            let s = shape_functions(ElementKind::Tet4, v);
            for a in 0..4 {
                assert_eq!(s.n[a], if a == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let pts: [(ElementKind, [f64; 3]); 3] = [
            (ElementKind::Tri3, [0.2, 0.3, 0.0]),
            (ElementKind::Quad4, [0.4, -0.7, 0.0]),
            (ElementKind::Tet4, [0.1, 0.2, 0.3]),
        ];
        for (kind, xi) in pts {
            let s = shape_functions(kind, &xi);
            let sum: f64 = s.n[..s.count].iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
            for k in 0..3 {
                let d: f64 = s.dn[..s.count].iter().map(|g| g[k]).sum();
                assert!(d.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for kind in [ElementKind::Tri3, ElementKind::Quad4, ElementKind::Tet4] {
            for order in [QuadratureOrder::Reduced, QuadratureOrder::Full] {
                let w: f64 = element_quadrature(kind, order).iter().map(|q| q.1).sum();
                assert!((w - kind.reference_measure()).abs() < 1e-15);
            }
        }
        let tet1 = element_quadrature(ElementKind::Tet4, QuadratureOrder::Reduced);
        assert_eq!(tet1.len(), 1);
        assert!((tet1[0].1 - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn quad_gauss_integrates_x2y2() {
        // ∫∫ x² y² over [-1,1]² = (2/3)(2/3) = 4/9
        let v: f64 = element_quadrature(ElementKind::Quad4, QuadratureOrder::Full)
            .iter()
            .map(|(p, w)| w * p[0] * p[0] * p[1] * p[1])
            .sum();
        assert!((v - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn affine_functions_exact() {
        // ∫ (1 + 2r + 3s [+ 4t]) over reference simplices
        let tri_exact = 0.5 + 2.0 / 6.0 + 3.0 / 6.0;
        let tet_exact = 1.0 / 6.0 + (2.0 + 3.0 + 4.0) / 24.0;
        for order in [QuadratureOrder::Reduced, QuadratureOrder::Full] {
            let v: f64 = element_quadrature(ElementKind::Tri3, order)
                .iter()
                .map(|(p, w)| w * (1.0 + 2.0 * p[0] + 3.0 * p[1]))
                .sum();
            assert!((v - tri_exact).abs() < 1e-14);
            let v: f64 = element_quadrature(ElementKind::Tet4, order)
                .iter()
                .map(|(p, w)| w * (1.0 + 2.0 * p[0] + 3.0 * p[1] + 4.0 * p[2]))
                .sum();
            assert!((v - tet_exact).abs() < 1e-14);
        }
    }
}
