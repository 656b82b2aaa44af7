//! Dimer model parameters.

use crate::error::{Error, Result};
use crate::math;
use crate::vec3::{self, Vec3};

/// Parameters of the vibronic dimer. Energies in cm⁻¹, dipoles in arbitrary
/// dipole units (only relative orientation and `|μ|·η` products matter).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DimerParams {
    pub eps_a: f64,
    pub eps_b: f64,
    #[cfg_attr(feature = "serde", serde(rename = "J"))]
    pub j: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub g_a: f64,
    pub g_b: f64,
    #[cfg_attr(feature = "serde", serde(default, rename = "delta_E"))]
    pub delta_e: f64,
    pub mu_a: Vec3,
    pub mu_b: Vec3,
}

/// Angle between the two site dipoles of the APC preset, in degrees.
pub const APC_DIPOLE_ANGLE_DEG: f64 = 40.0;

/// Allophycocyanin (phycocyanobilin dimer) parameters.
pub fn apc_preset() -> DimerParams {
    let theta = APC_DIPOLE_ANGLE_DEG.to_radians();
    let (s, c) = math::sin_cos(theta);
    DimerParams {
        eps_a: 15_300.0,
        eps_b: 16_200.0,
        j: -162.0,
        omega_a: 800.0,
        omega_b: 1_500.0,
        g_a: 0.1,
        g_b: 0.15,
        delta_e: 0.0,
        mu_a: [1.0, 0.0, 0.0],
        mu_b: [c, s, 0.0],
    }
}

/// Huang-Rhys factor `S = g²/2`.
#[inline]
pub fn huang_rhys(g: f64) -> f64 {
    0.5 * g * g
}

impl DimerParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.eps_a,
            self.eps_b,
            self.j,
            self.omega_a,
            self.omega_b,
            self.g_a,
            self.g_b,
            self.delta_e,
        ]
        .iter()
        .chain(self.mu_a.iter())
        .chain(self.mu_b.iter())
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("params", "all fields must be finite"));
        }
        if self.omega_a <= 0.0 {
            return Err(Error::invalid("omega_a", "must be > 0"));
        }
        if self.omega_b <= 0.0 {
            return Err(Error::invalid("omega_b", "must be > 0"));
        }
        if vec3::norm(&self.mu_a) == 0.0 {
            return Err(Error::invalid("mu_a", "must be nonzero"));
        }
        if vec3::norm(&self.mu_b) == 0.0 {
            return Err(Error::invalid("mu_b", "must be nonzero"));
        }
        Ok(())
    }

    pub fn huang_rhys_a(&self) -> f64 {
        huang_rhys(self.g_a)
    }

    pub fn huang_rhys_b(&self) -> f64 {
        huang_rhys(self.g_b)
    }

    /// Same parameters with the site dipoles rotated rigidly.
    pub fn rotated(&self, r: &vec3::Mat3) -> DimerParams {
        DimerParams {
            mu_a: vec3::rotate(r, &self.mu_a),
            mu_b: vec3::rotate(r, &self.mu_b),
            ..self.clone()
        }
    }

    /// Same parameters without exciton-phonon coupling.
    pub fn electronic(&self) -> DimerParams {
        DimerParams {
            g_a: 0.0,
            g_b: 0.0,
            ..self.clone()
        }
    }
}

/// Electronic-to-vibrational spacing ratio `r = 2|J| / (ω_a + ω_b)`.
pub fn coupling_ratio(params: &DimerParams) -> Result<f64> {
    let sum = params.omega_a + params.omega_b;
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::invalid("omega_a + omega_b", "must be finite and nonzero"));
    }
    Ok(2.0 * params.j.abs() / sum)
}
