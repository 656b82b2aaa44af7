use alloc::format;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, solve4};
use crate::model::ExcitonStructure;
use crate::optics::{pi_factors, reduced_coefficients, PairLabel, PiModel, Pulse, PulsePair};
use crate::process::ReducedChi;
use crate::vec3::{self, Mat3};

/// Largest condition number accepted by [`recover_chi`].
pub const DEFAULT_KAPPA_THRESHOLD: f64 = 1e6;

/// `S = M χ − G` for the four pulse pairs, rows in [`PairLabel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionSystem {
    pub m: Matrix4<f64>,
    pub g: Vector4<f64>,
    pub kappa: f64,
    pub det: f64,
}

impl InversionSystem {
    pub fn from_parts(m: Matrix4<f64>, g: Vector4<f64>) -> InversionSystem {
        InversionSystem {
            m,
            g,
            kappa: condition_number(&m),
            det: m.determinant(),
        }
    }

    /// Predicted signals for a given χ.
    pub fn forward(&self, chi: &ReducedChi) -> Vector4<f64> {
        self.m * Vector4::from(chi.as_array()) - self.g
    }
}

fn body_frame(p: &Pulse, r: &Mat3) -> Pulse {
    // (Rμ)·e = μ·(Rᵀe)
    let rt = [
        [r[0][0], r[1][0], r[2][0]],
        [r[0][1], r[1][1], r[2][1]],
        [r[0][2], r[1][2], r[2][2]],
    ];
    Pulse {
        polarization: vec3::rotate(&rt, &p.polarization),
        ..*p
    }
}

/// Orientation-averaged `M` and `G` for the four pairs. An empty rotation
/// list means the lab orientation only.
pub fn build_inversion(
    pairs: &[PulsePair; 4],
    structure: &ExcitonStructure,
    rotations: &[Mat3],
    model: PiModel,
) -> Result<InversionSystem> {
    let tau = pairs[0].delay();
    for (pair, label) in pairs.iter().zip(PairLabel::ALL) {
        if pair.label != label {
            return Err(Error::Precondition(format!(
                "pair {} found where {} was expected",
                pair.label, label
            )));
        }
        if (pair.delay() - tau).abs() > 1e-9 {
            return Err(Error::Precondition("pairs have different delays".into()));
        }
    }
    let identity = [vec3::IDENTITY];
    let rotations = if rotations.is_empty() { &identity[..] } else { rotations };
    let mut m = Matrix4::<f64>::zeros();
    let mut g = Vector4::<f64>::zeros();
    let w = 1.0 / rotations.len() as f64;
    for r in rotations {
        for (row, pair) in pairs.iter().enumerate() {
            let pump = pi_factors(&body_frame(&pair.pump, r), structure, model);
            let probe = pi_factors(&body_frame(&pair.probe, r), structure, model);
            let (mr, gr) = reduced_coefficients(&pump, &probe);
            for (col, v) in mr.iter().enumerate() {
                m[(row, col)] += w * v;
            }
            g[row] += w * gr;
        }
    }
    Ok(InversionSystem::from_parts(m, g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub chi: ReducedChi,
    /// `‖M χ − G − S‖₂`.
    pub residual: f64,
    pub kappa: f64,
}

/// Solve `M χ = S + G`.
pub fn recover_chi(s: &[f64; 4], system: &InversionSystem, threshold: f64, tau: f64) -> Result<Recovery> {
    if !(system.kappa <= threshold) {
        return Err(Error::IllConditioned {
            kappa: system.kappa,
            threshold,
        });
    }
    let sv = Vector4::from(*s);
    let x = solve4(&system.m, &(sv + system.g)).ok_or(Error::IllConditioned {
        kappa: f64::INFINITY,
        threshold,
    })?;
    let chi = ReducedChi::from_array(tau, [x[0], x[1], x[2], x[3]]);
    let residual = (system.forward(&chi) - sv).norm();
    Ok(Recovery {
        chi,
        residual,
        kappa: system.kappa,
    })
}
