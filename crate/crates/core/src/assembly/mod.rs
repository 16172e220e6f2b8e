//! Global assembly of the degraded-elasticity system in u and the
//! reaction–diffusion system in φ.
//!
//! The φ system is written in heat-conduction form with unit conductivity:
//!
//! ```text
//! R_a = ∫ ∇N_a·∇φ + N_a r(φ),   r = c₀ g′(φ) H / (2ℓ f G_f) + α̂′(φ) / (2ℓ²)
//! ```
//!
//! which is the gradient of the convex-in-∇φ functional
//! `Π = ∫ ½|∇φ|² + c₀ g(φ) H / (2ℓ f G_f) + α̂(φ) / (2ℓ²)`.

pub mod sparse;

use crate::constitutive::{
    degradation, elastic_response_with, geometric_function, geometric_function_second,
    DerivedCoefficients, ElasticResponse, MaterialParams,
};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, QpGeometry, QuadratureOrder};
pub use sparse::{apply_dirichlet, pcg, CsrMatrix, EnvelopeCholesky};

/// Mesh plus everything precomputed for repeated assembly.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub order: QuadratureOrder,
    pub qp: Vec<Vec<QpGeometry>>,
    /// Flat index of each element's first quadrature point.
    pub qp_offset: Vec<usize>,
    pub num_qp: usize,
    /// Displacement components per node.
    pub ndof: usize,
    u_pattern: CsrMatrix,
    u_scatter: Vec<Vec<usize>>,
    phi_pattern: CsrMatrix,
    phi_scatter: Vec<Vec<usize>>,
}

fn scatter_map(pattern: &CsrMatrix, dofs: &[usize]) -> Vec<usize> {
    let m = dofs.len();
    let mut map = Vec::with_capacity(m * m);
    for &r in dofs {
        for &c in dofs {
            map.push(pattern.position(r, c).expect("element dofs are in the pattern"));
        }
    }
    map
}

impl Discretization {
    pub fn new(mesh: Mesh, order: QuadratureOrder) -> Result<Self> {
        mesh.validate()?;
        let qp = mesh.qp_geometry(order);
        let mut qp_offset = Vec::with_capacity(qp.len());
        let mut num_qp = 0;
        for e in &qp {
            qp_offset.push(num_qp);
            num_qp += e.len();
        }
        let ndof = mesh.dim;
        let adj = mesh.node_adjacency();
        let u_pattern = CsrMatrix::from_adjacency(&adj, ndof);
        let phi_pattern = CsrMatrix::from_adjacency(&adj, 1);
        let mut u_scatter = Vec::with_capacity(mesh.elements.len());
        let mut phi_scatter = Vec::with_capacity(mesh.elements.len());
        for el in &mesh.elements {
            let udofs: Vec<usize> = el
                .nodes
                .iter()
                .flat_map(|&a| (0..ndof).map(move |i| a * ndof + i))
                .collect();
            u_scatter.push(scatter_map(&u_pattern, &udofs));
            phi_scatter.push(scatter_map(&phi_pattern, &el.nodes));
        }
        Ok(Discretization {
            mesh,
            order,
            qp,
            qp_offset,
            num_qp,
            ndof,
            u_pattern,
            u_scatter,
            phi_pattern,
            phi_scatter,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.nodes.len()
    }

    pub fn num_udofs(&self) -> usize {
        self.num_nodes() * self.ndof
    }

    /// φ interpolated at every quadrature point.
    pub fn phi_at_qp(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_qp);
        for (el, qps) in self.mesh.elements.iter().zip(&self.qp) {
            for q in qps {
                out.push(el.nodes.iter().enumerate().map(|(a, &n)| q.n[a] * phi[n]).sum());
            }
        }
        out
    }

    /// Voigt strain (engineering shear) at every quadrature point.
    pub fn strains(&self, u: &[f64]) -> Vec<[f64; 6]> {
        let d = self.ndof;
        let mut out = Vec::with_capacity(self.num_qp);
        for (el, qps) in self.mesh.elements.iter().zip(&self.qp) {
            for q in qps {
                let mut grad = [[0.0; 3]; 3]; // du_i/dx_j
                for (a, &n) in el.nodes.iter().enumerate() {
                    for i in 0..d {
                        for j in 0..d {
                            grad[i][j] += u[n * d + i] * q.grad[a][j];
                        }
                    }
                }
                out.push(voigt_strain(&grad, d));
            }
        }
        out
    }

    /// Undamaged elastic response at every quadrature point.
    pub fn responses(&self, u: &[f64], params: &MaterialParams) -> Vec<ElasticResponse> {
        let dmat = params.elasticity_matrix();
        let n = params.plane.voigt_len();
        self.strains(u)
            .iter()
            .map(|s| elastic_response_with(&s[..n], &dmat, params.plane))
            .collect()
    }

    /// Lumped nodal loads for a total force `total` along `component`,
    /// spread over the faces of a side set in proportion to their measure.
    pub fn face_load(&self, side_set: &str, component: usize, total: f64) -> Result<Vec<f64>> {
        let weights = self.mesh.face_weights(side_set)?;
        let sum: f64 = weights.iter().map(|w| w.1).sum();
        if !(sum > 0.0) {
            return Err(Error::Mesh(format!("side set `{side_set}` has zero measure")));
        }
        let mut f = vec![0.0; self.num_udofs()];
        for (node, w) in weights {
            f[node * self.ndof + component] += total * w / sum;
        }
        Ok(f)
    }
}

fn voigt_strain(g: &[[f64; 3]; 3], dim: usize) -> [f64; 6] {
    if dim == 2 {
        [g[0][0], g[1][1], g[0][1] + g[1][0], 0.0, 0.0, 0.0]
    } else {
        [
            g[0][0],
            g[1][1],
            g[2][2],
            g[1][2] + g[2][1],
            g[0][2] + g[2][0],
            g[0][1] + g[1][0],
        ]
    }
}

/// Strain-displacement matrix row block for node gradient `dn`:
/// column `i` of the returned rows is ∂ε/∂u_i.
fn b_columns(dn: &[f64; 3], dim: usize) -> [[f64; 3]; 6] {
    let mut b = [[0.0; 3]; 6];
    if dim == 2 {
        b[0][0] = dn[0];
        b[1][1] = dn[1];
        b[2][0] = dn[1];
        b[2][1] = dn[0];
    } else {
        b[0][0] = dn[0];
        b[1][1] = dn[1];
        b[2][2] = dn[2];
        b[3][1] = dn[2];
        b[3][2] = dn[1];
        b[4][0] = dn[2];
        b[4][2] = dn[0];
        b[5][0] = dn[1];
        b[5][1] = dn[0];
    }
    b
}

/// Stiffness with integrand g_eff(φ)·BᵀDB, g_eff = (1 − k)g + k with
/// `residual` = k keeping fully broken regions from becoming singular.
pub fn assemble_displacement(
    disc: &Discretization,
    phi: &[f64],
    params: &MaterialParams,
    coeffs: &DerivedCoefficients,
    residual: f64,
) -> CsrMatrix {
    let dmat = params.elasticity_matrix();
    let nv = params.plane.voigt_len();
    let d = disc.ndof;
    let mut k = disc.u_pattern.clone();
    let mut ke = Vec::new();
    for (e, el) in disc.mesh.elements.iter().enumerate() {
        let nn = el.nodes.len();
        let m = nn * d;
        ke.clear();
        ke.resize(m * m, 0.0);
        for q in &disc.qp[e] {
            let phi_q: f64 = el.nodes.iter().enumerate().map(|(a, &n)| q.n[a] * phi[n]).sum();
            let g = degradation(phi_q.clamp(0.0, 1.0), coeffs).0;
            let scale = ((1.0 - residual) * g + residual) * q.weight;
            let bs: Vec<[[f64; 3]; 6]> = (0..nn).map(|a| b_columns(&q.grad[a], d)).collect();
            // DB for each column
            let mut db = vec![[0.0; 6]; m];
            for a in 0..nn {
                for i in 0..d {
                    let col = &mut db[a * d + i];
                    for r in 0..nv {
                        let mut s = 0.0;
                        for c in 0..nv {
                            s += dmat[r][c] * bs[a][c][i];
                        }
                        col[r] = s;
                    }
                }
            }
            for a in 0..nn {
                for i in 0..d {
                    let row = a * d + i;
                    for col in 0..m {
                        let mut s = 0.0;
                        for r in 0..nv {
                            s += bs[a][r][i] * db[col][r];
                        }
                        ke[row * m + col] += scale * s;
                    }
                }
            }
        }
        for (v, &pos) in ke.iter().zip(&disc.u_scatter[e]) {
            k.values[pos] += v;
        }
    }
    k
}

/// Residual, tangent and energy of the φ system.
#[derive(Debug, Clone)]
pub struct PhaseSystem {
    pub residual: Vec<f64>,
    pub tangent: CsrMatrix,
    pub energy: f64,
}

/// Reaction term r(φ), its derivative, and the local energy density, for one
/// quadrature point with history `h` and fatigue factor `f`.
#[inline]
pub fn reaction(phi: f64, h: f64, f: f64, coeffs: &DerivedCoefficients) -> (f64, f64, f64) {
    let (g, g1, g2) = degradation(phi, coeffs);
    let (ah, ah1) = geometric_function(phi, coeffs.xi);
    let ah2 = geometric_function_second(coeffs.xi);
    let k = coeffs.c0 * h / (2.0 * coeffs.ell * f * coeffs.gf);
    let l2 = 2.0 * coeffs.ell * coeffs.ell;
    (k * g1 + ah1 / l2, k * g2 + ah2 / l2, k * g + ah / l2)
}

/// `h` and `f` are per quadrature point (flat). With `with_tangent = false`
/// only the residual and energy are formed.
pub fn assemble_phasefield(
    disc: &Discretization,
    phi: &[f64],
    h: &[f64],
    f: &[f64],
    coeffs: &DerivedCoefficients,
    with_tangent: bool,
) -> Result<PhaseSystem> {
    if let Some(i) = f.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::param(
            "fatigue factor",
            format!("must be > 0 at every quadrature point (point {i} has {})", f[i]),
        ));
    }
    let mut residual = vec![0.0; disc.num_nodes()];
    let mut tangent = disc.phi_pattern.clone();
    let mut energy = 0.0;
    let mut ke = [0.0; 16];
    for (e, el) in disc.mesh.elements.iter().enumerate() {
        let nn = el.nodes.len();
        ke[..nn * nn].iter_mut().for_each(|v| *v = 0.0);
        let mut re = [0.0; 4];
        for (iq, q) in disc.qp[e].iter().enumerate() {
            let flat = disc.qp_offset[e] + iq;
            let mut phi_q = 0.0;
            let mut grad = [0.0; 3];
            for (a, &n) in el.nodes.iter().enumerate() {
                phi_q += q.n[a] * phi[n];
                for k in 0..3 {
                    grad[k] += q.grad[a][k] * phi[n];
                }
            }
            let (r, dr, w) = reaction(phi_q.clamp(0.0, 1.0), h[flat], f[flat], coeffs);
            let gg = grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2];
            energy += q.weight * (0.5 * gg + w);
            for a in 0..nn {
                let ga = q.grad[a];
                re[a] += q.weight * (ga[0] * grad[0] + ga[1] * grad[1] + ga[2] * grad[2] + q.n[a] * r);
                if with_tangent {
                    for b in 0..nn {
                        let gb = q.grad[b];
                        ke[a * nn + b] += q.weight
                            * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2] + q.n[a] * q.n[b] * dr);
                    }
                }
            }
        }
        for (a, &n) in el.nodes.iter().enumerate() {
            residual[n] += re[a];
        }
        if with_tangent {
            for (v, &pos) in ke[..nn * nn].iter().zip(&disc.phi_scatter[e]) {
                tangent.values[pos] += v;
            }
        }
    }
    Ok(PhaseSystem {
        residual,
        tangent,
        energy,
    })
}
