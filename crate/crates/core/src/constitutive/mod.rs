//! Hyperelastic strain energy and Cauchy stress of the aortic-wall model:
//! decoupled volumetric/isochoric split, neo-Hookean ground substance, and
//! discrete fiber dispersion (DFD) sums for collagen and elastic fibers,
//! with angle-based exclusion of degraded elastic fibers.

pub mod hemisphere;

use nalgebra::{Matrix3, SMatrix};
use thiserror::Error;

pub use hemisphere::{
    compute_densities, direction_from_angles, discretize_hemisphere, pi_periodic_von_mises,
    HemisphereMesh, SphericalTriangle,
};

#[derive(Debug, Error)]
pub enum ConstitutiveError {
    #[error("hemisphere resolution {0} is not 10 * 4^k")]
    UnreachableResolution(usize),
    #[error("dispersion density is negative")]
    NegativeDensity,
    #[error("invalid deformation: det F = {0} <= 0")]
    InvalidDeformation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Material parameters (stresses in kPa). Stiffness values are placeholders
/// overridable through the run configuration; structural checks never depend
/// on their magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaterialParams {
    /// Bulk modulus of the volumetric penalty.
    pub bulk: f64,
    /// Shear modulus of the neo-Hookean ground substance.
    pub mu_ground: f64,
    /// Collagen stiffness (kPa) and dimensionless exponential coefficient.
    pub k1: f64,
    pub k2: f64,
    /// In-plane angle of the two collagen families, measured from E2 toward
    /// E3 (radians).
    pub collagen_angle: f64,
    /// von Mises concentration of each collagen family.
    pub collagen_b: f64,
    /// Elastic fiber stiffness (kPa) and power-law exponent.
    pub mu_elastic: f64,
    pub gamma_elastic: f64,
    /// von Mises concentration of the elastic fiber family about E3.
    pub elastic_b: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            bulk: 30.0e3,
            mu_ground: 10.0,
            k1: 20.0,
            k2: 5.0,
            collagen_angle: 40.0 * std::f64::consts::PI / 180.0,
            collagen_b: 10.0,
            mu_elastic: 30.0,
            gamma_elastic: 2.5,
            elastic_b: 2.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let pos = [
            self.bulk,
            self.mu_ground,
            self.k1,
            self.k2,
            self.mu_elastic,
            self.gamma_elastic,
        ];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(ConstitutiveError::InvalidParameter(
                "stiffness parameters must be positive",
            ));
        }
        if self.bulk < 10.0 * self.mu_ground {
            return Err(ConstitutiveError::InvalidParameter(
                "bulk modulus must dominate the ground shear modulus",
            ));
        }
        Ok(())
    }
}

/// Kinematics derived from a deformation gradient.
#[derive(Debug, Clone)]
pub struct DeformationState {
    pub f: Matrix3<f64>,
    pub j: f64,
    pub c: Matrix3<f64>,
}

impl DeformationState {
    pub fn new(f: Matrix3<f64>) -> Result<Self, ConstitutiveError> {
        let j = f.determinant();
        if !(j > 0.0) || !j.is_finite() {
            return Err(ConstitutiveError::InvalidDeformation(j));
        }
        let c = f.transpose() * f;
        Ok(Self { f, j, c })
    }

    pub fn i1(&self) -> f64 {
        self.c.trace()
    }
}

/// Symmetric 3x3 in Voigt order [11, 22, 33, 23, 13, 12].
type Voigt = [f64; 6];

fn voigt_from_outer(n: [f64; 3]) -> Voigt {
    [
        n[0] * n[0],
        n[1] * n[1],
        n[2] * n[2],
        n[1] * n[2],
        n[0] * n[2],
        n[0] * n[1],
    ]
}

fn voigt_contract(a: &Voigt, c: &Matrix3<f64>) -> f64 {
    a[0] * c[(0, 0)]
        + a[1] * c[(1, 1)]
        + a[2] * c[(2, 2)]
        + 2.0 * (a[3] * c[(1, 2)] + a[4] * c[(0, 2)] + a[5] * c[(0, 1)])
}

fn matrix_from_voigt(v: &Voigt) -> Matrix3<f64> {
    Matrix3::new(v[0], v[5], v[4], v[5], v[1], v[3], v[4], v[3], v[2])
}

/// Collagen single-fiber energy derivative `k1 (x-1) exp(k2 (x-1)^2)`.
fn collagen_dpsi(k1: f64, k2: f64, x: f64) -> f64 {
    let e = x - 1.0;
    k1 * e * (k2 * e * e).exp()
}

fn collagen_psi(k1: f64, k2: f64, x: f64) -> f64 {
    let e = x - 1.0;
    k1 / (2.0 * k2) * ((k2 * e * e).exp() - 1.0)
}

/// Elastic single-fiber energy `mu/g (x^(g/2) - 1) - mu/2 ln x`
/// and its derivative `mu/2 (x^(g/2-1) - 1/x)`; both vanish at x = 1.
fn elastic_psi(mu: f64, gamma: f64, x: f64) -> f64 {
    mu / gamma * (x.powf(0.5 * gamma) - 1.0) - 0.5 * mu * x.ln()
}

fn elastic_dpsi(mu: f64, gamma: f64, x: f64) -> f64 {
    let p = if gamma == 2.5 {
        // x^0.25 without powf on the default exponent
        x.sqrt().sqrt()
    } else {
        x.powf(0.5 * gamma - 1.0)
    };
    0.5 * mu * (p - 1.0 / x)
}

/// Immutable evaluation context: parameters plus the fiber tiling with
/// per-triangle structure tensors, densities and exclusion angles.
/// Shareable across threads.
#[derive(Debug, Clone)]
pub struct TissueModel {
    pub params: MaterialParams,
    pub mesh: HemisphereMesh,
    nn: Vec<Voigt>,
    rho_collagen: Vec<f64>,
    rho_elastic: Vec<f64>,
    /// Angle of each direction from the radial axis, `acos |N . E3|`.
    alpha: Vec<f64>,
}

impl TissueModel {
    pub fn new(params: MaterialParams, m_triangles: usize) -> Result<Self, ConstitutiveError> {
        params.validate()?;
        let mesh = discretize_hemisphere(m_triangles)?;
        let phi = params.collagen_angle;
        let mean_plus = [0.0, phi.cos(), phi.sin()];
        let mean_minus = [0.0, phi.cos(), -phi.sin()];
        let vm_plus = pi_periodic_von_mises(mean_plus, params.collagen_b);
        let vm_minus = pi_periodic_von_mises(mean_minus, params.collagen_b);
        let rho_collagen =
            compute_densities(&mesh, |t, p| 0.5 * (vm_plus(t, p) + vm_minus(t, p)))?;
        let rho_elastic =
            compute_densities(&mesh, pi_periodic_von_mises([0.0, 0.0, 1.0], params.elastic_b))?;
        let nn = mesh
            .triangles
            .iter()
            .map(|t| voigt_from_outer(t.direction))
            .collect();
        let alpha = mesh
            .triangles
            .iter()
            .map(|t| t.direction[2].abs().clamp(0.0, 1.0).acos())
            .collect();
        Ok(Self {
            params,
            mesh,
            nn,
            rho_collagen,
            rho_elastic,
            alpha,
        })
    }

    pub fn collagen_densities(&self) -> &[f64] {
        &self.rho_collagen
    }

    pub fn elastic_densities(&self) -> &[f64] {
        &self.rho_elastic
    }

    /// Critical exclusion angle for a degradation value.
    pub fn critical_angle(xi: f64) -> f64 {
        0.5 * std::f64::consts::PI * xi
    }

    /// Number of elastic-fiber triangles passing the angle gate at `xi`.
    pub fn active_elastic_triangles(&self, xi: f64) -> usize {
        let theta_xi = Self::critical_angle(xi);
        self.alpha.iter().filter(|&&a| a >= theta_xi).count()
    }

    /// Strain energy density (kPa).
    pub fn strain_energy(&self, state: &DeformationState, xi: f64) -> Result<f64, ConstitutiveError> {
        let p = &self.params;
        let j = state.j;
        let jm23 = ((j * j).cbrt()).recip();
        let vol = 0.25 * p.bulk * (j * j - 1.0 - 2.0 * j.ln());
        let ground = 0.5 * p.mu_ground * (jm23 * state.i1() - 3.0);
        let theta_xi = Self::critical_angle(xi);
        let mut fibers = 0.0;
        for n in 0..self.nn.len() {
            let i4 = voigt_contract(&self.nn[n], &state.c);
            if i4 >= 1.0 {
                let i4_bar = jm23 * i4;
                fibers += self.rho_collagen[n] * collagen_psi(p.k1, p.k2, i4_bar);
                if self.alpha[n] >= theta_xi {
                    fibers += self.rho_elastic[n] * elastic_psi(p.mu_elastic, p.gamma_elastic, i4_bar);
                }
            }
        }
        Ok(vol + ground + fibers)
    }

    /// Second Piola-Kirchhoff stress as a function of C alone.
    pub fn second_pk_from_c(&self, c: &Matrix3<f64>, xi: f64) -> Result<Matrix3<f64>, ConstitutiveError> {
        let p = &self.params;
        let det_c = c.determinant();
        if !(det_c > 0.0) || !det_c.is_finite() {
            return Err(ConstitutiveError::InvalidDeformation(det_c));
        }
        let j = det_c.sqrt();
        let jm23 = ((j * j).cbrt()).recip();
        let c_inv = c
            .try_inverse()
            .ok_or(ConstitutiveError::InvalidDeformation(j))?;

        // volumetric: S = (K/2)(J^2 - 1) C^{-1}
        let mut s = c_inv * (0.5 * p.bulk * (j * j - 1.0));

        // ground substance: S = mu J^{-2/3} (I - (I1/3) C^{-1})
        let i1 = c.trace();
        s += (Matrix3::identity() - c_inv * (i1 / 3.0)) * (p.mu_ground * jm23);

        // fibers: S = 2 J^{-2/3} sum_n w_n (N (x) N - (I4_n / 3) C^{-1})
        let theta_xi = Self::critical_angle(xi);
        let mut acc: Voigt = [0.0; 6];
        let mut acc_tr = 0.0;
        for n in 0..self.nn.len() {
            let i4 = voigt_contract(&self.nn[n], c);
            if i4 < 1.0 {
                continue;
            }
            let i4_bar = jm23 * i4;
            let mut w = self.rho_collagen[n] * collagen_dpsi(p.k1, p.k2, i4_bar);
            if self.alpha[n] >= theta_xi {
                w += self.rho_elastic[n] * elastic_dpsi(p.mu_elastic, p.gamma_elastic, i4_bar);
            }
            if w != 0.0 {
                let nn = &self.nn[n];
                for k in 0..6 {
                    acc[k] += w * nn[k];
                }
                acc_tr += w * i4;
            }
        }
        s += (matrix_from_voigt(&acc) - c_inv * (acc_tr / 3.0)) * (2.0 * jm23);
        Ok(s)
    }

    /// Cauchy stress `(1/J) F S F^T` (kPa).
    pub fn cauchy_stress(&self, state: &DeformationState, xi: f64) -> Result<Matrix3<f64>, ConstitutiveError> {
        let s = self.second_pk_from_c(&state.c, xi)?;
        let sigma = state.f * s * state.f.transpose() / state.j;
        // enforce exact symmetry against rounding
        Ok((sigma + sigma.transpose()) * 0.5)
    }

    /// Material tangent `dS/dE` in Voigt form with engineering shear columns
    /// ([11, 22, 33, 23, 13, 12]), by central differences of the second
    /// Piola-Kirchhoff stress under symmetric perturbations of C.
    pub fn material_tangent(
        &self,
        state: &DeformationState,
        xi: f64,
        step: f64,
    ) -> Result<SMatrix<f64, 6, 6>, ConstitutiveError> {
        let pairs = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
        let mut d = SMatrix::<f64, 6, 6>::zeros();
        for (col, &(k, l)) in pairs.iter().enumerate() {
            let h = step * state.c[(k, l)].abs().max(1.0);
            let mut cp = state.c;
            let mut cm = state.c;
            cp[(k, l)] += h;
            cm[(k, l)] -= h;
            if k != l {
                cp[(l, k)] += h;
                cm[(l, k)] -= h;
            }
            let sp = self.second_pk_from_c(&cp, xi)?;
            let sm = self.second_pk_from_c(&cm, xi)?;
            // dC_kk = h  => dE_kk = h/2      (divide by h)
            // dC_kl = dC_lk = h (k != l) => d(gamma_kl) = 2 dE_kl = h
            //                                 (divide by 2h)
            let denom = if k == l { h } else { 2.0 * h };
            for (row, &(i, jj)) in pairs.iter().enumerate() {
                d[(row, col)] = (sp[(i, jj)] - sm[(i, jj)]) / denom;
            }
        }
        Ok(d)
    }
}
