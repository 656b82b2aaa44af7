//! Exact spectral propagation and the fixed-step pulsed integrator.
//!
//! The pulsed step is `e^{−iH₀dt/2} · e^{−iV(t+dt/2)dt} · e^{−iH₀dt/2}`: H₀ is
//! propagated exactly from its eigen-decomposition and the field term, which
//! only acts on the electronic index, is a 4×4 exponential. The step is second
//! order and unitary to round-off.

use core::f64::consts::PI;

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, C4};
use crate::math;
use crate::model::{Electronic, Manifold, Spectrum, VibronicHamiltonian, RAISE_A, RAISE_B};
use crate::optics::{field_at, Pulse};
use crate::params::DimerParams;
use crate::units::to_angular;
use crate::vec3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Normalization error beyond which a propagation is rejected.
pub const NORM_FAILURE_THRESHOLD: f64 = 1e-6;

pub type StateVector = Vec<Complex64>;

pub fn norm(psi: &[Complex64]) -> f64 {
    math::sqrt(psi.iter().map(|x| x.norm_sqr()).sum())
}

/// Population of a manifold.
pub fn manifold_population(psi: &[Complex64], m: Manifold, block: usize) -> f64 {
    let r = match m {
        Manifold::Ground => 0..block,
        Manifold::One => block..3 * block,
        Manifold::Two => 3 * block..4 * block,
    };
    psi[r].iter().map(|x| x.norm_sqr()).sum()
}

/// `exp(−iHt)` through the eigen-decomposition of `H`.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    spectrum: Spectrum,
}

impl SpectralPropagator {
    pub fn new(h: &VibronicHamiltonian) -> Result<SpectralPropagator> {
        Ok(SpectralPropagator {
            spectrum: Spectrum::new(h)?,
        })
    }

    pub fn from_spectrum(spectrum: Spectrum) -> SpectralPropagator {
        SpectralPropagator { spectrum }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Dense `U(t)`.
    pub fn matrix(&self, t: f64) -> DMatrix<Complex64> {
        let v = &self.spectrum.vectors;
        let d = v.nrows();
        let phases: Vec<Complex64> = self
            .spectrum
            .energies
            .iter()
            .map(|&e| phase(-e * t))
            .collect();
        DMatrix::from_fn(d, d, |i, j| {
            let mut acc = ZERO;
            for (k, ph) in phases.iter().enumerate() {
                acc += ph * (v[(i, k)] * v[(j, k)]);
            }
            acc
        })
    }

    /// `U(t)ψ` without forming `U`.
    pub fn apply(&self, psi: &[Complex64], t: f64) -> StateVector {
        let v = &self.spectrum.vectors;
        let d = v.nrows();
        let mut coeff = alloc::vec![ZERO; d];
        for (k, c) in coeff.iter_mut().enumerate() {
            let mut acc = ZERO;
            for i in 0..d {
                acc += psi[i] * v[(i, k)];
            }
            *c = acc * phase(-self.spectrum.energies[k] * t);
        }
        let mut out = alloc::vec![ZERO; d];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (k, c) in coeff.iter().enumerate() {
                acc += c * v[(i, k)];
            }
            *o = acc;
        }
        out
    }
}

/// `exp(−iHt)` for an assembled Hamiltonian; rejects non-symmetric input.
pub fn exact_propagator(h: &VibronicHamiltonian, t: f64) -> Result<DMatrix<Complex64>> {
    Ok(SpectralPropagator::new(h)?.matrix(t))
}

#[inline]
fn phase(x: f64) -> Complex64 {
    let (s, c) = math::sin_cos(x);
    Complex64::new(c, s)
}

/// Reference frame of the integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Frame {
    Lab,
    /// Rotating at `omega_ref_cm` per excitation quantum.
    Rotating { omega_ref_cm: f64 },
}

impl Frame {
    pub fn omega_ref_cm(&self) -> f64 {
        match self {
            Frame::Lab => 0.0,
            Frame::Rotating { omega_ref_cm } => *omega_ref_cm,
        }
    }
}

/// Time grid and frame of one propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPlan {
    pub dt_fs: f64,
    pub t_start_fs: f64,
    pub t_end_fs: f64,
    pub frame: Frame,
    pub rwa: bool,
}

/// Fraction of the fastest retained period allowed per step.
pub const STEPS_PER_PERIOD: f64 = 20.0;

impl PropagationPlan {
    pub fn lab(t_start_fs: f64, t_end_fs: f64) -> PropagationPlan {
        PropagationPlan {
            dt_fs: 0.1,
            t_start_fs,
            t_end_fs,
            frame: Frame::Lab,
            rwa: true,
        }
    }

    pub fn rotating(t_start_fs: f64, t_end_fs: f64, omega_ref_cm: f64) -> PropagationPlan {
        PropagationPlan {
            dt_fs: 1.0,
            t_start_fs,
            t_end_fs,
            frame: Frame::Rotating { omega_ref_cm },
            rwa: true,
        }
    }

    pub fn n_steps(&self) -> usize {
        let n = (self.t_end_fs - self.t_start_fs) / self.dt_fs;
        // Tolerate representation error in t_end.
        let r = libm::round(n);
        if (n - r).abs() < 1e-9 {
            r as usize
        } else {
            libm::ceil(n) as usize
        }
    }

    /// Fastest explicit time dependence left after H₀ is treated exactly
    /// (rad/fs): the carrier offsets from the frame, plus the counter-rotating
    /// sums when the RWA is off.
    pub fn max_retained_frequency(&self, pulses: &[Pulse]) -> f64 {
        let wr = self.frame.omega_ref_cm();
        pulses
            .iter()
            .map(|p| {
                let co = (p.omega_cm - wr).abs();
                if self.rwa {
                    co
                } else {
                    co.max((p.omega_cm + wr).abs())
                }
            })
            .fold(0.0, f64::max)
            .max(0.0)
            * crate::units::RAD_PER_FS_PER_WAVENUMBER
    }

    /// Largest step satisfying `dt ≤ (1/20)·2π/ω_max`.
    pub fn max_dt(&self, pulses: &[Pulse]) -> f64 {
        let w = self.max_retained_frequency(pulses);
        if w == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI / (STEPS_PER_PERIOD * w)
        }
    }

    pub fn validate(&self, pulses: &[Pulse]) -> Result<()> {
        if !(self.dt_fs > 0.0 && self.dt_fs.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if !(self.t_end_fs > self.t_start_fs) {
            return Err(Error::invalid("t_end", "must exceed t_start"));
        }
        let limit = self.max_dt(pulses);
        if self.dt_fs > limit * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                alloc::format!(
                    "{} fs does not resolve the fastest retained frequency (max {:.4} fs)",
                    self.dt_fs,
                    limit
                ),
            ));
        }
        for p in pulses {
            p.validate()?;
        }
        Ok(())
    }
}

/// Field coupling of one pulse to a (possibly rotated) dimer.
#[derive(Debug, Clone, Copy)]
struct Coupling {
    pulse: Pulse,
    // η μ_i·e in rad/fs
    amp_a: f64,
    amp_b: f64,
}

/// Fixed-step propagator for `H₀ + V(t)`; reusable across pulses and windows
/// with the same `dt` and frame.
#[derive(Debug, Clone)]
pub struct Propagator {
    block: usize,
    dt: f64,
    frame: Frame,
    omega_ref: f64,
    // Row-major block unitaries for ground (nb), one-exciton (2nb), two-exciton (nb).
    full: [Vec<Complex64>; 3],
    half: [Vec<Complex64>; 3],
}

impl Propagator {
    pub fn new(spectrum: &Spectrum, dt_fs: f64, frame: Frame) -> Result<Propagator> {
        if !(dt_fs > 0.0 && dt_fs.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        let space = spectrum.space;
        let nb = space.block();
        let omega_ref = to_angular(frame.omega_ref_cm());
        let build = |m: Manifold, t: f64| -> Vec<Complex64> {
            let r = space.manifold_range(m);
            let n = r.len();
            let cols: Vec<usize> = (0..spectrum.energies.len())
                .filter(|&k| spectrum.manifold[k] == m)
                .collect();
            let shift = omega_ref * m.excitation() as f64;
            let ph: Vec<Complex64> = cols
                .iter()
                .map(|&k| phase(-(spectrum.energies[k] - shift) * t))
                .collect();
            let v = &spectrum.vectors;
            let mut u = alloc::vec![ZERO; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = ZERO;
                    for (c, &k) in cols.iter().enumerate() {
                        acc += ph[c] * (v[(r.start + i, k)] * v[(r.start + j, k)]);
                    }
                    u[i * n + j] = acc;
                }
            }
            u
        };
        let full = [
            build(Manifold::Ground, dt_fs),
            build(Manifold::One, dt_fs),
            build(Manifold::Two, dt_fs),
        ];
        let half = [
            build(Manifold::Ground, 0.5 * dt_fs),
            build(Manifold::One, 0.5 * dt_fs),
            build(Manifold::Two, 0.5 * dt_fs),
        ];
        Ok(Propagator {
            block: nb,
            dt: dt_fs,
            frame,
            omega_ref,
            full,
            half,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn dim(&self) -> usize {
        4 * self.block
    }

    fn apply_h0(&self, psi: &mut [Complex64], scratch: &mut [Complex64], half: bool) {
        let nb = self.block;
        let u = if half { &self.half } else { &self.full };
        let ranges = [(0, nb), (nb, 2 * nb), (3 * nb, nb)];
        for (b, &(start, n)) in ranges.iter().enumerate() {
            let src = &psi[start..start + n];
            linalg::matvec_into(&u[b], n, src, &mut scratch[..n]);
            psi[start..start + n].copy_from_slice(&scratch[..n]);
        }
    }

    /// Raising amplitudes `(R_a, R_b)` of `V = R_a X_a⁺ + R_b X_b⁺ + h.c.` at `t`.
    fn raising(&self, couplings: &[Coupling], t: f64, rwa: bool) -> (Complex64, Complex64) {
        let mut ra = ZERO;
        let mut rb = ZERO;
        for c in couplings {
            let f = field_at(&c.pulse, t, rwa);
            ra -= f * c.amp_a;
            rb -= f * c.amp_b;
        }
        if self.omega_ref != 0.0 {
            let rot = phase(self.omega_ref * t);
            ra *= rot;
            rb *= rot;
        }
        (ra, rb)
    }

    fn kick_matrix(&self, ra: Complex64, rb: Complex64) -> C4 {
        let mut v = [[ZERO; 4]; 4];
        for (amp, op) in [(ra, &RAISE_A), (rb, &RAISE_B)] {
            for &(to, from, sign) in op.iter() {
                v[to.index()][from.index()] += amp * sign;
                v[from.index()][to.index()] += amp.conj() * sign;
            }
        }
        // exp(−i v dt)
        let mi = Complex64::new(0.0, -self.dt);
        for row in v.iter_mut() {
            for x in row.iter_mut() {
                *x *= mi;
            }
        }
        linalg::c4_expm(&v)
    }

    fn apply_kick(&self, k: &C4, psi: &mut [Complex64]) {
        let nb = self.block;
        for p in 0..nb {
            let x = [psi[p], psi[nb + p], psi[2 * nb + p], psi[3 * nb + p]];
            for (e, row) in k.iter().enumerate() {
                psi[e * nb + p] = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3];
            }
        }
    }

    /// Propagate `psi` over `n_steps` steps from `t_start`.
    ///
    /// `observe(k, t_k, ψ)` is called for `k = 0..=n_steps`. With
    /// `exact_states == false` the state handed to the observer is offset by
    /// half an H₀ step (cheaper); manifold populations are unaffected by that
    /// offset, everything else is not. The returned state is always exact.
    #[allow(clippy::too_many_arguments)]
    pub fn run<F>(
        &self,
        psi0: &[Complex64],
        params: &DimerParams,
        pulses: &[Pulse],
        t_start: f64,
        n_steps: usize,
        rwa: bool,
        exact_states: bool,
        mut observe: F,
    ) -> Result<StateVector>
    where
        F: FnMut(usize, f64, &[Complex64]),
    {
        let d = self.dim();
        if psi0.len() != d {
            return Err(Error::Precondition(alloc::format!(
                "state has length {}, space has {}",
                psi0.len(),
                d
            )));
        }
        let couplings: Vec<Coupling> = pulses
            .iter()
            .filter(|p| p.eta != 0.0)
            .map(|p| {
                let eta = p.eta_internal();
                Coupling {
                    pulse: *p,
                    amp_a: eta * vec3::dot(&params.mu_a, &p.polarization),
                    amp_b: eta * vec3::dot(&params.mu_b, &p.polarization),
                }
            })
            .collect();
        let norm0 = norm(psi0);
        let mut psi = psi0.to_vec();
        let mut scratch = alloc::vec![ZERO; 2 * self.block];
        observe(0, t_start, &psi);
        if n_steps == 0 {
            return Ok(psi);
        }
        self.apply_h0(&mut psi, &mut scratch, true);
        for k in 0..n_steps {
            let tm = t_start + (k as f64 + 0.5) * self.dt;
            if !couplings.is_empty() {
                let (ra, rb) = self.raising(&couplings, tm, rwa);
                if ra != ZERO || rb != ZERO {
                    let kick = self.kick_matrix(ra, rb);
                    self.apply_kick(&kick, &mut psi);
                }
            }
            let t_next = t_start + (k + 1) as f64 * self.dt;
            if k + 1 == n_steps {
                self.apply_h0(&mut psi, &mut scratch, true);
                observe(k + 1, t_next, &psi);
            } else if exact_states {
                self.apply_h0(&mut psi, &mut scratch, true);
                observe(k + 1, t_next, &psi);
                self.apply_h0(&mut psi, &mut scratch, true);
            } else {
                observe(k + 1, t_next, &psi);
                self.apply_h0(&mut psi, &mut scratch, false);
            }
        }
        let drift = (norm(&psi) - norm0).abs();
        if drift > NORM_FAILURE_THRESHOLD {
            return Err(Error::IntegratorFailure {
                drift,
                time_fs: t_start + n_steps as f64 * self.dt,
            });
        }
        Ok(psi)
    }
}

/// Sampled trajectory of a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Largest `| ‖ψ(t)‖ − ‖ψ(0)‖ |` along the trajectory.
    pub fn norm_drift(&self) -> f64 {
        let n0 = norm(&self.states[0]);
        self.states
            .iter()
            .map(|s| (norm(s) - n0).abs())
            .fold(0.0, f64::max)
    }
}

/// Propagate `psi` under `H_total` and `pulses`, returning the state at every step.
pub fn propagate(
    psi: &[Complex64],
    h: &VibronicHamiltonian,
    params: &DimerParams,
    pulses: &[Pulse],
    plan: &PropagationPlan,
) -> Result<Trajectory> {
    plan.validate(pulses)?;
    let spectrum = Spectrum::new(h)?;
    let prop = Propagator::new(&spectrum, plan.dt_fs, plan.frame)?;
    let n = plan.n_steps();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let wr = to_angular(plan.frame.omega_ref_cm());
    let block = h.space.block();
    let psi_frame = to_lab_frame(psi, -wr, plan.t_start_fs, block);
    prop.run(&psi_frame, params, pulses, plan.t_start_fs, n, plan.rwa, true, |_, t, s| {
        times.push(t);
        states.push(to_lab_frame(s, wr, t, block));
    })?;
    Ok(Trajectory { times, states })
}

/// Undo the rotating frame: multiply the `n`-excitation sector by `e^{−i n ω_R t}`.
pub fn to_lab_frame(psi: &[Complex64], omega_ref: f64, t: f64, block: usize) -> StateVector {
    if omega_ref == 0.0 {
        return psi.to_vec();
    }
    let mut out = psi.to_vec();
    for e in Electronic::ALL {
        let n = e.excitation();
        if n == 0 {
            continue;
        }
        let ph = phase(-(n as f64) * omega_ref * t);
        for x in &mut out[e.index() * block..(e.index() + 1) * block] {
            *x *= ph;
        }
    }
    out
}
