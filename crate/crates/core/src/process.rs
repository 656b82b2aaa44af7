//! Process-tensor elements, the theoretical χ oracle, the NSIT witness `W^b`,
//! the coherence measure `R` and its Born-corrected lower bound.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::SpectralPropagator;
use crate::error::{Error, Result};
use crate::model::{Branch, DimerModel, ExcitonStructure};

/// Population-to-population elements `χ_qqpp(τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReducedChi {
    pub tau: f64,
    pub aaaa: f64,
    pub aabb: f64,
    pub bbaa: f64,
    pub bbbb: f64,
}

impl ReducedChi {
    /// `(q, p)` of each vector slot: αααα, ααββ, ββαα, ββββ.
    pub const ORDER: [(Branch, Branch); 4] = [
        (Branch::Alpha, Branch::Alpha),
        (Branch::Alpha, Branch::Beta),
        (Branch::Beta, Branch::Alpha),
        (Branch::Beta, Branch::Beta),
    ];

    pub const LABELS: [&'static str; 4] = ["aaaa", "aabb", "bbaa", "bbbb"];

    pub fn identity(tau: f64) -> ReducedChi {
        ReducedChi::from_array(tau, [1.0, 0.0, 0.0, 1.0])
    }

    pub fn from_array(tau: f64, x: [f64; 4]) -> ReducedChi {
        ReducedChi {
            tau,
            aaaa: x[0],
            aabb: x[1],
            bbaa: x[2],
            bbbb: x[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.aaaa, self.aabb, self.bbaa, self.bbbb]
    }

    /// `χ_qqpp`.
    pub fn get(&self, q: Branch, p: Branch) -> f64 {
        match (q, p) {
            (Branch::Alpha, Branch::Alpha) => self.aaaa,
            (Branch::Alpha, Branch::Beta) => self.aabb,
            (Branch::Beta, Branch::Alpha) => self.bbaa,
            (Branch::Beta, Branch::Beta) => self.bbbb,
        }
    }

    /// Total population after starting in α, and after starting in β.
    pub fn column_sums(&self) -> [f64; 2] {
        [self.aaaa + self.bbaa, self.aabb + self.bbbb]
    }
}

/// Oracle χ: prepare `|p_el⟩ ⊗ |0,0⟩`, evolve exactly, measure the
/// electronic branch populations summed over phonons.
pub fn theoretical_chi(model: &DimerModel, times: &[f64]) -> Result<Vec<ReducedChi>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid("times", alloc::format!("{t} is not a finite time >= 0")));
    }
    let s = &model.structure;
    let prop = SpectralPropagator::from_spectrum(s.spectrum.clone());
    let start = [
        s.electronic_exciton_state(Branch::Alpha),
        s.electronic_exciton_state(Branch::Beta),
    ];
    Ok(times
        .iter()
        .map(|&t| {
            let a = prop.apply(&start[0], t);
            let b = prop.apply(&start[1], t);
            ReducedChi {
                tau: t,
                aaaa: s.branch_population(&a, Branch::Alpha),
                aabb: s.branch_population(&b, Branch::Alpha),
                bbaa: s.branch_population(&a, Branch::Beta),
                bbbb: s.branch_population(&b, Branch::Beta),
            }
        })
        .collect())
}

/// Single-point oracle, convenient for the witness.
pub fn theoretical_chi_at(model: &DimerModel, t: f64) -> Result<ReducedChi> {
    Ok(theoretical_chi(model, &[t])?[0])
}

/// One evaluation of `W^b`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WitnessPoint {
    pub t1: f64,
    pub t2: f64,
    pub tau: f64,
    /// `|signed|`.
    pub value: f64,
    /// Value before the absolute value.
    pub signed: f64,
}

/// `W^b = |χ_αααα(τ) + χ_αααα(T1)(1−χ_αααα(T2)) + (1−χ_αααα(T1))χ_ββββ(T2) − 1|`.
pub fn witness_wb(chi_t1: &ReducedChi, chi_t2: &ReducedChi, chi_tau: &ReducedChi) -> Result<WitnessPoint> {
    if (chi_t1.tau + chi_t2.tau - chi_tau.tau).abs() > 1e-9 {
        return Err(Error::Precondition(alloc::format!(
            "tau = {} differs from T1 + T2 = {}",
            chi_tau.tau,
            chi_t1.tau + chi_t2.tau
        )));
    }
    let a1 = chi_t1.aaaa;
    let signed = chi_tau.aaaa + a1 * (1.0 - chi_t2.aaaa) + (1.0 - a1) * chi_t2.bbbb - 1.0;
    Ok(WitnessPoint {
        t1: chi_t1.tau,
        t2: chi_t2.tau,
        tau: chi_tau.tau,
        value: signed.abs(),
        signed,
    })
}

/// Full one-exciton process tensor `χ_ijqp`, acting on `vec(ρ)` with
/// row index `2i + j` and column index `2q + p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullChi {
    pub tau: f64,
    pub m: [[Complex64; 4]; 4],
}

impl FullChi {
    pub fn identity(tau: f64) -> FullChi {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        FullChi { tau, m }
    }

    #[inline]
    fn slot(a: Branch, b: Branch) -> usize {
        2 * a.index() + b.index()
    }

    pub fn get(&self, i: Branch, j: Branch, q: Branch, p: Branch) -> Complex64 {
        self.m[Self::slot(i, j)][Self::slot(q, p)]
    }

    pub fn set(&mut self, i: Branch, j: Branch, q: Branch, p: Branch, v: Complex64) {
        self.m[Self::slot(i, j)][Self::slot(q, p)] = v;
    }

    /// Population-only tensor from reduced elements (coherence elements zero).
    pub fn from_reduced(chi: &ReducedChi) -> FullChi {
        let mut out = FullChi {
            tau: chi.tau,
            m: [[Complex64::new(0.0, 0.0); 4]; 4],
        };
        for (q, p) in ReducedChi::ORDER {
            out.set(q, q, p, p, Complex64::new(chi.get(q, p), 0.0));
        }
        out
    }

    pub fn reduced(&self) -> ReducedChi {
        let mut x = [0.0; 4];
        for (k, (q, p)) in ReducedChi::ORDER.iter().enumerate() {
            x[k] = self.get(*q, *q, *p, *p).re;
        }
        ReducedChi::from_array(self.tau, x)
    }

    /// `χ_a ∘ χ_b` (apply `b` first).
    pub fn compose(a: &FullChi, b: &FullChi) -> FullChi {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                for k in 0..4 {
                    *x += a.m[i][k] * b.m[k][j];
                }
            }
        }
        FullChi {
            tau: a.tau + b.tau,
            m,
        }
    }
}

/// 2×2 density matrix on the one-exciton basis (α, β).
pub type Density2 = [[Complex64; 2]; 2];

/// Projector `|q⟩⟨q|`.
pub fn pure_branch(q: Branch) -> Density2 {
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    r[q.index()][q.index()] = Complex64::new(1.0, 0.0);
    r
}

fn check_density(rho: &Density2) -> Result<()> {
    let tr = rho[0][0] + rho[1][1];
    if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::invalid("rho_P", "trace must be 1"));
    }
    if (rho[0][1] - rho[1][0].conj()).norm() > 1e-9
        || rho[0][0].im.abs() > 1e-9
        || rho[1][1].im.abs() > 1e-9
    {
        return Err(Error::invalid("rho_P", "must be Hermitian"));
    }
    let det = rho[0][0].re * rho[1][1].re - rho[0][1].norm_sqr();
    if rho[0][0].re < -1e-9 || rho[1][1].re < -1e-9 || det < -1e-9 {
        return Err(Error::invalid("rho_P", "must be positive semidefinite"));
    }
    Ok(())
}

/// General two-time witness
/// `|Σ_rs [χ_iirs(τ) − Σ_p χ_iipp(T2) χ_pprs(T1)] ρ_rs|`.
pub fn witness_general(
    chi_tau: &FullChi,
    chi_t1: &FullChi,
    chi_t2: &FullChi,
    rho_p: &Density2,
    measured: Branch,
) -> Result<f64> {
    check_density(rho_p)?;
    let i = measured;
    let mut acc = Complex64::new(0.0, 0.0);
    for r in Branch::ALL {
        for s in Branch::ALL {
            let rho = rho_p[r.index()][s.index()];
            let mut term = chi_tau.get(i, i, r, s);
            for p in Branch::ALL {
                term -= chi_t2.get(i, i, p, p) * chi_t1.get(p, p, r, s);
            }
            acc += term * rho;
        }
    }
    Ok(acc.norm())
}

fn check_hermitian(rho: &DMatrix<Complex64>) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::invalid("rho", "must be square"));
    }
    let dev = (rho - rho.adjoint()).camax();
    if dev > 1e-10 {
        return Err(Error::invalid("rho", alloc::format!("not Hermitian (deviation {dev:e})")));
    }
    Ok(())
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
pub fn hermitian_trace_norm(m: &DMatrix<Complex64>) -> Result<f64> {
    check_hermitian(m)?;
    let eig = SymmetricEigen::new(m.clone());
    Ok(eig.eigenvalues.iter().map(|x| x.abs()).sum())
}

/// `R(ρ) = ½ ‖ρ − diag(ρ)‖₁`.
pub fn coherence_measure(rho: &DMatrix<Complex64>) -> Result<f64> {
    check_hermitian(rho)?;
    let mut off = rho.clone();
    for i in 0..off.nrows() {
        off[(i, i)] = Complex64::new(0.0, 0.0);
    }
    Ok(0.5 * hermitian_trace_norm(&off)?)
}

/// `2·(W^b − ‖γ‖₁ − ‖drift‖₁)`, clamped below at zero.
pub fn coherence_lower_bound(wb: f64, gamma_trace_norm: f64, bath_drift_trace_norm: f64) -> Result<f64> {
    for (name, x) in [
        ("wb", wb),
        ("gamma_trace_norm", gamma_trace_norm),
        ("bath_drift_trace_norm", bath_drift_trace_norm),
    ] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::invalid(name, "must be finite and >= 0"));
        }
    }
    Ok(unclamped_lower_bound(wb, gamma_trace_norm, bath_drift_trace_norm).max(0.0))
}

pub fn unclamped_lower_bound(wb: f64, gamma: f64, drift: f64) -> f64 {
    2.0 * (wb - gamma - drift)
}

/// One-exciton sector of a joint state as a bipartite amplitude matrix
/// `A[s, ph]` in the exciton basis (α, β) ⊗ phonon configurations, together
/// with its population.
fn one_exciton_amplitudes(psi: &[Complex64], s: &ExcitonStructure) -> (DMatrix<Complex64>, f64) {
    let space = s.space();
    let nb = space.block();
    let mut a = DMatrix::zeros(2, nb);
    for q in Branch::ALL {
        let [xa, xb] = s.electronic.amplitudes(q);
        for p in 0..nb {
            a[(q.index(), p)] = psi[nb + p] * xa + psi[2 * nb + p] * xb;
        }
    }
    let pop = a.iter().map(|x| x.norm_sqr()).sum();
    (a, pop)
}

/// Reduced electronic density of the one-exciton sector (exciton basis),
/// normalized to unit trace.
pub fn reduced_system_density(psi: &[Complex64], s: &ExcitonStructure) -> Result<DMatrix<Complex64>> {
    let (a, pop) = one_exciton_amplitudes(psi, s);
    if pop == 0.0 {
        return Err(Error::Precondition("state has no one-exciton population".into()));
    }
    Ok((&a * a.adjoint()) / Complex64::new(pop, 0.0))
}

/// Reduced phonon density of the one-exciton sector, normalized to unit trace.
pub fn reduced_bath_density(psi: &[Complex64], s: &ExcitonStructure) -> Result<DMatrix<Complex64>> {
    let (a, pop) = one_exciton_amplitudes(psi, s);
    if pop == 0.0 {
        return Err(Error::Precondition("state has no one-exciton population".into()));
    }
    Ok((a.transpose() * a.map(|x| x.conj())) / Complex64::new(pop, 0.0))
}

/// `‖ρ_SB − ρ_S ⊗ ρ_B‖₁` of the normalized one-exciton sector.
pub fn correlation_trace_norm(psi: &[Complex64], s: &ExcitonStructure) -> Result<f64> {
    let (a, pop) = one_exciton_amplitudes(psi, s);
    if pop == 0.0 {
        return Err(Error::Precondition("state has no one-exciton population".into()));
    }
    let nb = a.ncols();
    let n = 2 * nb;
    let scale = 1.0 / pop;
    let rho_s = reduced_system_density(psi, s)?;
    let rho_b = reduced_bath_density(psi, s)?;
    let gamma = DMatrix::from_fn(n, n, |r, c| {
        let (i, p) = (r / nb, r % nb);
        let (j, q) = (c / nb, c % nb);
        a[(i, p)] * a[(j, q)].conj() * scale - rho_s[(i, j)] * rho_b[(p, q)]
    });
    hermitian_trace_norm(&gamma)
}

/// `‖ρ_B(t) − ρ_B(0)‖₁` between two joint states.
pub fn bath_drift_trace_norm(
    psi_now: &[Complex64],
    psi_ref: &[Complex64],
    s: &ExcitonStructure,
) -> Result<f64> {
    let d = reduced_bath_density(psi_now, s)? - reduced_bath_density(psi_ref, s)?;
    hermitian_trace_norm(&d)
}
