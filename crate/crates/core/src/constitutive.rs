//! Integration-point mathematics of the phase-field cohesive zone model:
//! geometric crack function, rational degradation function, tension-driven
//! crack driving force, history field and fatigue accumulation.
//!
//! Units are N, mm, MPa throughout, so fracture energy is in N/mm and every
//! energy density is in MPa.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlaneAssumption {
    #[default]
    PlaneStress,
    #[serde(rename = "3d")]
    ThreeD,
}

impl PlaneAssumption {
    pub fn dim(self) -> usize {
        match self {
            PlaneAssumption::PlaneStress => 2,
            PlaneAssumption::ThreeD => 3,
        }
    }

    /// Number of Voigt strain components (engineering shear).
    pub fn voigt_len(self) -> usize {
        match self {
            PlaneAssumption::PlaneStress => 3,
            PlaneAssumption::ThreeD => 6,
        }
    }
}

/// Material constants. Defaults are the mode-I concrete calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// Young's modulus (MPa).
    pub e0: f64,
    pub nu: f64,
    /// Tensile strength (MPa).
    pub ft: f64,
    /// Fracture energy (N/mm).
    pub gf: f64,
    /// Phase-field length scale (mm).
    pub ell: f64,
    pub xi: f64,
    pub p: f64,
    /// Fatigue accumulation parameter; 0 switches fatigue off.
    pub kf: f64,
    pub plane: PlaneAssumption,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            e0: 30000.0,
            nu: 0.2,
            ft: 4.8,
            gf: 0.03,
            ell: 2.5,
            xi: 2.0,
            p: 2.5,
            kf: 0.01,
            plane: PlaneAssumption::PlaneStress,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("material.e0", self.e0),
            ("material.ft", self.ft),
            ("material.gf", self.gf),
            ("material.ell", self.ell),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.nu >= 0.0 && self.nu < 0.5) {
            return Err(Error::param(
                "material.nu",
                format!("must lie in [0, 0.5), got {}", self.nu),
            ));
        }
        if !(self.kf.is_finite() && self.kf >= 0.0) {
            return Err(Error::param(
                "material.kf",
                format!("must be >= 0, got {}", self.kf),
            ));
        }
        if !(self.p > 2.0) {
            return Err(Error::param(
                "material.p",
                format!(
                    "must be > 2 (the p = 2 branch needs an ultimate opening that is not modelled), got {}",
                    self.p
                ),
            ));
        }
        if !(self.xi > 0.0 && self.xi <= 2.0) {
            return Err(Error::param(
                "material.xi",
                format!("must lie in (0, 2], got {}", self.xi),
            ));
        }
        Ok(())
    }

    pub fn lame(&self) -> (f64, f64) {
        let mu = self.e0 / (2.0 * (1.0 + self.nu));
        let lambda = self.e0 * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu));
        (lambda, mu)
    }

    /// Elasticity matrix in Voigt notation with engineering shear strains.
    /// Plane stress: (xx, yy, xy). 3D: (xx, yy, zz, yz, xz, xy).
    pub fn elasticity_matrix(&self) -> [[f64; 6]; 6] {
        let mut d = [[0.0; 6]; 6];
        match self.plane {
            PlaneAssumption::PlaneStress => {
                let c = self.e0 / (1.0 - self.nu * self.nu);
                d[0][0] = c;
                d[0][1] = c * self.nu;
                d[1][0] = c * self.nu;
                d[1][1] = c;
                d[2][2] = c * (1.0 - self.nu) / 2.0;
            }
            PlaneAssumption::ThreeD => {
                let (lambda, mu) = self.lame();
                for i in 0..3 {
                    for j in 0..3 {
                        d[i][j] = lambda;
                    }
                    d[i][i] = lambda + 2.0 * mu;
                    d[i + 3][i + 3] = mu;
                }
            }
        }
        d
    }
}

/// Closed-form coefficients derived from [`MaterialParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    pub c0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Initial softening slope of the exponential cohesive law.
    pub k0: f64,
    /// Fatigue threshold; `f64::INFINITY` when fatigue is off (kf = 0).
    pub alpha_t: f64,
    pub h_min: f64,
    pub p: f64,
    pub xi: f64,
    pub ell: f64,
    pub gf: f64,
}

pub fn derive_coefficients(params: &MaterialParams) -> Result<DerivedCoefficients> {
    params.validate()?;
    let xi = params.xi;
    let c0 = scaling_constant(|phi| geometric_function(phi, xi).0);
    let k0 = -params.ft * params.ft / params.gf;
    let a1 = 2.0 * params.e0 * params.gf / (params.ft * params.ft) * xi / (c0 * params.ell);
    let inner = -4.0 * std::f64::consts::PI * xi * xi / c0 * params.gf / (params.ft * params.ft) * k0;
    let a2 = (inner.powf(2.0 / 3.0) + 1.0) / xi - (params.p + 1.0);
    let alpha_t = if params.kf > 0.0 {
        params.gf / (params.kf * params.ell)
    } else {
        f64::INFINITY
    };
    Ok(DerivedCoefficients {
        c0,
        a1,
        a2,
        a3: 0.0,
        k0,
        alpha_t,
        h_min: params.ft * params.ft / (2.0 * params.e0),
        p: params.p,
        xi,
        ell: params.ell,
        gf: params.gf,
    })
}

/// `4 ∫₀¹ sqrt(α̂(β)) dβ` for any geometric function with α̂(0) = 0.
///
/// Integrated after the substitution β = t², which removes the square-root
/// singularity of the integrand's derivative at the origin.
pub fn scaling_constant(alpha_hat: impl Fn(f64) -> f64) -> f64 {
    let f = |t: f64| 2.0 * t * alpha_hat(t * t).max(0.0).sqrt();
    4.0 * adaptive_simpson(&f, 0.0, 1.0, 1e-15)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// α̂(φ) = ξφ + (1 − ξ)φ² and its derivative.
pub fn geometric_function(phi: f64, xi: f64) -> (f64, f64) {
    (
        xi * phi + (1.0 - xi) * phi * phi,
        xi + 2.0 * (1.0 - xi) * phi,
    )
}

/// Second derivative of α̂ (constant).
pub fn geometric_function_second(xi: f64) -> f64 {
    2.0 * (1.0 - xi)
}

/// Rational degradation function g(φ) with analytic g′ and g″.
pub fn degradation(phi: f64, coeffs: &DerivedCoefficients) -> (f64, f64, f64) {
    let p = coeffs.p;
    let s = 1.0 - phi;
    let a = s.powf(p);
    let da = -p * s.powf(p - 1.0);
    let dda = p * (p - 1.0) * s.powf(p - 2.0);

    let (a1, a2, a3) = (coeffs.a1, coeffs.a2, coeffs.a3);
    let q = a1 * phi * (1.0 + a2 * phi + a2 * a3 * phi * phi);
    let dq = a1 * (1.0 + 2.0 * a2 * phi + 3.0 * a2 * a3 * phi * phi);
    let ddq = a1 * (2.0 * a2 + 6.0 * a2 * a3 * phi);

    let den = a + q;
    let dden = da + dq;
    let num = da * q - a * dq;
    let dnum = dda * q - a * ddq;

    let g = a / den;
    let dg = num / (den * den);
    let ddg = dnum / (den * den) - 2.0 * num * dden / (den * den * den);
    (g, dg, ddg)
}

/// Exponential traction-separation envelope used as a verification reference.
pub fn reference_cohesive_stress(w: f64, params: &MaterialParams) -> f64 {
    params.ft * (-params.ft / params.gf * w).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticResponse {
    /// Effective stress in the same Voigt layout as the strain.
    pub stress: [f64; 6],
    pub psi0: f64,
    /// Largest principal value of the effective stress.
    pub sigma1: f64,
}

/// Undamaged linear-elastic response for a Voigt strain (3 components in
/// plane stress, 6 in 3D, engineering shear).
pub fn elastic_response(strain: &[f64], params: &MaterialParams) -> ElasticResponse {
    let d = params.elasticity_matrix();
    elastic_response_with(strain, &d, params.plane)
}

pub(crate) fn elastic_response_with(
    strain: &[f64],
    d: &[[f64; 6]; 6],
    plane: PlaneAssumption,
) -> ElasticResponse {
    let n = plane.voigt_len();
    debug_assert_eq!(strain.len(), n);
    let mut stress = [0.0; 6];
    let mut psi0 = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += d[i][j] * strain[j];
        }
        stress[i] = s;
        psi0 += 0.5 * s * strain[i];
    }
    let sigma1 = match plane {
        PlaneAssumption::PlaneStress => {
            let c = 0.5 * (stress[0] + stress[1]);
            let r = (0.25 * (stress[0] - stress[1]).powi(2) + stress[2] * stress[2]).sqrt();
            c + r
        }
        PlaneAssumption::ThreeD => {
            let m = Matrix3::new(
                stress[0], stress[5], stress[4], stress[5], stress[1], stress[3], stress[4],
                stress[3], stress[2],
            );
            m.symmetric_eigenvalues().max()
        }
    };
    ElasticResponse {
        stress,
        psi0: psi0.max(0.0),
        sigma1,
    }
}

/// Tension-only driving force ⟨σ̃₁⟩² / (2E₀).
pub fn driving_force(sigma1: f64, params: &MaterialParams) -> f64 {
    let t = sigma1.max(0.0);
    t * t / (2.0 * params.e0)
}

/// Fatigue degradation of the fracture energy.
pub fn fatigue_degradation(alpha_bar: f64, alpha_t: f64) -> f64 {
    if alpha_bar <= alpha_t {
        1.0
    } else {
        let r = 2.0 * alpha_t / (alpha_bar + alpha_t);
        r * r
    }
}

/// History and fatigue state carried by one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadPointState {
    pub h: f64,
    pub alpha_bar: f64,
    pub alpha_prev: f64,
    pub f_fat: f64,
}

impl QuadPointState {
    pub fn new(coeffs: &DerivedCoefficients) -> Self {
        QuadPointState {
            h: coeffs.h_min,
            alpha_bar: 0.0,
            alpha_prev: 0.0,
            f_fat: 1.0,
        }
    }

    /// Kuhn–Tucker update: H ← max(H, 𝒴, H_min).
    pub fn update_history(&mut self, y: f64, coeffs: &DerivedCoefficients) -> f64 {
        self.h = self.h.max(y).max(coeffs.h_min);
        self.h
    }

    /// Accumulates α = (1 − φ)² ψ₀ over loading stages only and refreshes the
    /// fatigue degradation factor. Called once per converged increment.
    pub fn update_fatigue(
        &mut self,
        phi: f64,
        psi0: f64,
        coeffs: &DerivedCoefficients,
    ) -> (f64, f64) {
        let s = 1.0 - phi;
        let alpha = s * s * psi0;
        if alpha >= self.alpha_prev {
            self.alpha_bar += alpha - self.alpha_prev;
        }
        self.alpha_prev = alpha;
        // f never recovers: alpha_bar is non-decreasing and f is monotone in it.
        self.f_fat = fatigue_degradation(self.alpha_bar, coeffs.alpha_t);
        (self.alpha_bar, self.f_fat)
    }
}
