//! Bound-constrained Newton iteration for the phase-field subsystem.
//!
//! Nodal values are kept in [φ_prev, 1]. Each iteration fixes the nodes that
//! sit on a bound with the residual pushing outwards, solves the reduced
//! Newton system, and backtracks along the projected path until the
//! phase-field energy decreases. An indefinite reduced tangent is shifted by
//! a multiple of the lumped nodal measure until it factors.

use crate::assembly::sparse::{apply_dirichlet, norm};
use crate::assembly::{assemble_phasefield, Discretization, EnvelopeCholesky};
use crate::constitutive::DerivedCoefficients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Per-mesh data reused by every phase-field solve.
#[derive(Debug, Clone)]
pub struct PhaseSolver {
    perm: Vec<usize>,
    lumped: Vec<f64>,
    scale: f64,
}

impl PhaseSolver {
    pub fn new(disc: &Discretization, ell: f64) -> Self {
        let mut lumped = vec![0.0; disc.num_nodes()];
        for (el, qps) in disc.mesh.elements.iter().zip(&disc.qp) {
            for q in qps {
                for (a, &n) in el.nodes.iter().enumerate() {
                    lumped[n] += q.weight * q.n[a];
                }
            }
        }
        let scale = norm(&lumped) / (ell * ell);
        let pattern = crate::assembly::CsrMatrix::from_adjacency(&disc.mesh.node_adjacency(), 1);
        PhaseSolver {
            perm: pattern.rcm(),
            lumped,
            scale,
        }
    }

    /// Natural residual magnitude ‖∫N_a‖/ℓ².
    pub fn residual_scale(&self) -> f64 {
        self.scale
    }

    /// Solves R(φ) = 0 on [lower, 1] with frozen history `h` and fatigue
    /// factor `f` (both per quadrature point). `phi` holds the start value
    /// and receives the solution.
    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &self,
        disc: &Discretization,
        phi: &mut [f64],
        lower: &[f64],
        h: &[f64],
        f: &[f64],
        coeffs: &DerivedCoefficients,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonReport> {
        let n = phi.len();
        for i in 0..n {
            phi[i] = phi[i].clamp(lower[i], 1.0);
        }
        let target = tol * self.scale;
        let mut last = f64::INFINITY;
        for it in 0..max_iter {
            let sys = assemble_phasefield(disc, phi, h, f, coeffs, true)?;
            let r = &sys.residual;
            let active: Vec<bool> = (0..n)
                .map(|i| (phi[i] <= lower[i] && r[i] >= 0.0) || (phi[i] >= 1.0 && r[i] <= 0.0))
                .collect();
            let rfree = (0..n)
                .filter(|&i| !active[i])
                .map(|i| r[i] * r[i])
                .sum::<f64>()
                .sqrt();
            last = rfree;
            if rfree <= target {
                return Ok(NewtonReport {
                    iterations: it,
                    residual: rfree,
                });
            }
            let fixed: Vec<(usize, f64)> = (0..n).filter(|&i| active[i]).map(|i| (i, 0.0)).collect();
            let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let mut k = sys.tangent;
            apply_dirichlet(&mut k, &mut rhs, &fixed)?;
            let factor = self.factor_shifted(&k, &active)?;
            let delta = factor.solve(&rhs);

            // projected backtracking on the energy
            let mut step = 1.0;
            let mut accepted = false;
            let mut trial = vec![0.0; n];
            for _ in 0..40 {
                for i in 0..n {
                    trial[i] = (phi[i] + step * delta[i]).clamp(lower[i], 1.0);
                }
                let e = assemble_phasefield(disc, &trial, h, f, coeffs, false)?.energy;
                let slope: f64 = (0..n).map(|i| r[i] * (trial[i] - phi[i])).sum();
                if e <= sys.energy + 1e-4 * slope.min(0.0) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // energy is flat to round-off; accept the shortest step if it
                // still reduces the residual
                let r_trial = assemble_phasefield(disc, &trial, h, f, coeffs, false)?.residual;
                let rt = (0..n)
                    .filter(|&i| !(trial[i] <= lower[i] && r_trial[i] >= 0.0) && !(trial[i] >= 1.0 && r_trial[i] <= 0.0))
                    .map(|i| r_trial[i] * r_trial[i])
                    .sum::<f64>()
                    .sqrt();
                if rt >= rfree {
                    return Err(Error::NewtonDiverged {
                        iterations: it + 1,
                        residual: rfree,
                    });
                }
            }
            phi.copy_from_slice(&trial);
        }
        Err(Error::NewtonDiverged {
            iterations: max_iter,
            residual: last,
        })
    }

    fn factor_shifted(
        &self,
        k: &crate::assembly::CsrMatrix,
        active: &[bool],
    ) -> Result<EnvelopeCholesky> {
        if let Ok(f) = EnvelopeCholesky::factor(k, &self.perm, 1) {
            return Ok(f);
        }
        let diag: Vec<usize> = (0..k.n).map(|i| k.position(i, i).unwrap()).collect();
        // start at 1/ℓ², the curvature of the crack-density term
        let mut mu = self.scale / norm(&self.lumped).max(1e-300);
        let mut shifted = k.clone();
        for _ in 0..30 {
            for i in 0..k.n {
                if !active[i] {
                    shifted.values[diag[i]] = k.values[diag[i]] + mu * self.lumped[i];
                }
            }
            match EnvelopeCholesky::factor(&shifted, &self.perm, 1) {
                Ok(f) => return Ok(f),
                Err(_) => mu *= 4.0,
            }
        }
        Err(Error::NewtonDiverged {
            iterations: 0,
            residual: f64::NAN,
        })
    }
}
