//! Truncated vibronic Hilbert space, Frenkel-Holstein Hamiltonian and
//! exciton structure of the dimer.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::params::DimerParams;
use crate::units::{to_angular, to_wavenumber};
use crate::vec3::{self, Vec3};

/// Electronic basis state of the dimer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Electronic {
    G,
    A,
    B,
    F,
}

impl Electronic {
    pub const ALL: [Electronic; 4] = [Electronic::G, Electronic::A, Electronic::B, Electronic::F];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Electronic::G => 0,
            Electronic::A => 1,
            Electronic::B => 2,
            Electronic::F => 3,
        }
    }

    pub fn excitation(self) -> usize {
        match self {
            Electronic::G => 0,
            Electronic::A | Electronic::B => 1,
            Electronic::F => 2,
        }
    }
}

/// Excitation-number manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manifold {
    Ground,
    One,
    Two,
}

impl Manifold {
    pub const ALL: [Manifold; 3] = [Manifold::Ground, Manifold::One, Manifold::Two];

    pub fn excitation(self) -> usize {
        match self {
            Manifold::Ground => 0,
            Manifold::One => 1,
            Manifold::Two => 2,
        }
    }
}

/// One-exciton branch; α is the lower one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Alpha,
    Beta,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Alpha, Branch::Beta];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Branch::Alpha => 0,
            Branch::Beta => 1,
        }
    }
}

/// Default cap on the bytes of one dense complex d×d matrix.
pub const DEFAULT_MEMORY_CAP_BYTES: u128 = 1 << 31;

/// `d = n_sites² · (n_phon + 1)^n_sites`.
pub fn dimension(n_sites: u32, n_phon: u32) -> u128 {
    let levels = n_phon as u128 + 1;
    let sites = n_sites as u128;
    sites * sites * levels.pow(n_sites)
}

/// Index map over `{g, a, b, f} ⊗ |n₁⟩ ⊗ |n₂⟩`.
///
/// Flat index = `electronic · (n+1)² + n₁ · (n+1) + n₂`, so each electronic
/// state owns one contiguous phonon block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_phon: usize,
}

impl HilbertSpace {
    pub const N_SITES: usize = 2;

    pub fn n_phon(&self) -> usize {
        self.n_phon
    }

    /// Phonon levels per site.
    pub fn levels(&self) -> usize {
        self.n_phon + 1
    }

    /// Phonon configurations per electronic state.
    pub fn block(&self) -> usize {
        self.levels() * self.levels()
    }

    pub fn dim(&self) -> usize {
        4 * self.block()
    }

    #[inline]
    pub fn index(&self, e: Electronic, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 <= self.n_phon && n2 <= self.n_phon);
        e.index() * self.block() + n1 * self.levels() + n2
    }

    pub fn label(&self, idx: usize) -> (Electronic, usize, usize) {
        let e = Electronic::ALL[idx / self.block()];
        let rest = idx % self.block();
        (e, rest / self.levels(), rest % self.levels())
    }

    /// Flat index range of a manifold.
    pub fn manifold_range(&self, m: Manifold) -> core::ops::Range<usize> {
        let nb = self.block();
        match m {
            Manifold::Ground => 0..nb,
            Manifold::One => nb..3 * nb,
            Manifold::Two => 3 * nb..4 * nb,
        }
    }
}

pub fn build_space(n_phon: usize) -> Result<HilbertSpace> {
    build_space_with_cap(n_phon, DEFAULT_MEMORY_CAP_BYTES)
}

pub fn build_space_with_cap(n_phon: usize, cap_bytes: u128) -> Result<HilbertSpace> {
    let n = u32::try_from(n_phon).map_err(|_| Error::invalid("n_phon", "too large"))?;
    let dim = dimension(2, n);
    let required_bytes = dim
        .checked_mul(dim)
        .and_then(|x| x.checked_mul(core::mem::size_of::<Complex64>() as u128))
        .unwrap_or(u128::MAX);
    if required_bytes > cap_bytes {
        return Err(Error::Resource {
            dim,
            required_bytes,
            cap_bytes,
        });
    }
    Ok(HilbertSpace { n_phon })
}

/// Frenkel-Holstein Hamiltonian in rad/fs (real symmetric).
#[derive(Debug, Clone)]
pub struct VibronicHamiltonian {
    pub space: HilbertSpace,
    pub h_s: DMatrix<f64>,
    pub h_b: DMatrix<f64>,
    pub h_sb: DMatrix<f64>,
}

impl VibronicHamiltonian {
    pub fn total(&self) -> DMatrix<f64> {
        &self.h_s + &self.h_b + &self.h_sb
    }

    /// Block of `H_total` restricted to one manifold.
    pub fn manifold_block(&self, m: Manifold) -> DMatrix<f64> {
        let r = self.space.manifold_range(m);
        let n = r.len();
        let total = self.total();
        DMatrix::from_fn(n, n, |i, j| total[(r.start + i, r.start + j)])
    }

    /// Largest `|H - H^T|` over the three components.
    pub fn asymmetry(&self) -> f64 {
        linalg::asymmetry(&self.h_s)
            .max(linalg::asymmetry(&self.h_b))
            .max(linalg::asymmetry(&self.h_sb))
    }
}

pub fn assemble(params: &DimerParams, space: HilbertSpace) -> Result<VibronicHamiltonian> {
    params.validate()?;
    let d = space.dim();
    let levels = space.levels();
    let mut h_s = DMatrix::zeros(d, d);
    let mut h_b = DMatrix::zeros(d, d);
    let mut h_sb = DMatrix::zeros(d, d);

    let eps_a = to_angular(params.eps_a);
    let eps_b = to_angular(params.eps_b);
    let j = to_angular(params.j);
    let e_f = to_angular(params.eps_a + params.eps_b + params.delta_e);
    let w_a = to_angular(params.omega_a);
    let w_b = to_angular(params.omega_b);
    let ka = -w_a * params.g_a;
    let kb = -w_b * params.g_b;

    for n1 in 0..levels {
        for n2 in 0..levels {
            let ia = space.index(Electronic::A, n1, n2);
            let ib = space.index(Electronic::B, n1, n2);
            let iff = space.index(Electronic::F, n1, n2);
            h_s[(ia, ia)] = eps_a;
            h_s[(ib, ib)] = eps_b;
            h_s[(iff, iff)] = e_f;
            h_s[(ia, ib)] = j;
            h_s[(ib, ia)] = j;

            let vib = w_a * (n1 as f64 + 0.5) + w_b * (n2 as f64 + 0.5);
            for e in Electronic::ALL {
                let i = space.index(e, n1, n2);
                h_b[(i, i)] = vib;
            }

            // -ω g n_site (b + b†), truncated ladder: √(n+1) between n and n+1.
            if n1 + 1 < levels {
                let amp = ka * math::sqrt((n1 + 1) as f64);
                for e in [Electronic::A, Electronic::F] {
                    let lo = space.index(e, n1, n2);
                    let hi = space.index(e, n1 + 1, n2);
                    h_sb[(lo, hi)] = amp;
                    h_sb[(hi, lo)] = amp;
                }
            }
            if n2 + 1 < levels {
                let amp = kb * math::sqrt((n2 + 1) as f64);
                for e in [Electronic::B, Electronic::F] {
                    let lo = space.index(e, n1, n2);
                    let hi = space.index(e, n1, n2 + 1);
                    h_sb[(lo, hi)] = amp;
                    h_sb[(hi, lo)] = amp;
                }
            }
        }
    }
    Ok(VibronicHamiltonian {
        space,
        h_s,
        h_b,
        h_sb,
    })
}

/// Eigen-decomposition of `H_total` done manifold by manifold.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub space: HilbertSpace,
    /// Ascending eigenvalues (rad/fs).
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, matching `energies`.
    pub vectors: DMatrix<f64>,
    pub manifold: Vec<Manifold>,
}

impl Spectrum {
    pub fn new(h: &VibronicHamiltonian) -> Result<Spectrum> {
        let dev = h.asymmetry();
        if dev > 1e-12 {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        let space = h.space;
        let d = space.dim();
        let mut parts: Vec<(f64, Manifold, usize, Vec<f64>)> = Vec::with_capacity(d);
        for m in Manifold::ALL {
            let range = space.manifold_range(m);
            let (w, v) = linalg::symmetric_eigen(h.manifold_block(m));
            for (k, &e) in w.iter().enumerate() {
                let col: Vec<f64> = v.column(k).iter().copied().collect();
                parts.push((e, m, range.start, col));
            }
        }
        // Stable sort keeps the within-manifold order for exact ties.
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut energies = Vec::with_capacity(d);
        let mut manifold = Vec::with_capacity(d);
        let mut vectors = DMatrix::zeros(d, d);
        for (k, (e, m, start, col)) in parts.into_iter().enumerate() {
            energies.push(e);
            manifold.push(m);
            for (i, x) in col.into_iter().enumerate() {
                vectors[(start + i, k)] = x;
            }
        }
        Ok(Spectrum {
            space,
            energies,
            vectors,
            manifold,
        })
    }
}

/// Electronic (phonon-free) exciton eigenvectors of `[[ε_a, J], [J, ε_b]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronicExcitons {
    /// Site amplitudes `(α_a, α_b)` of the lower exciton.
    pub alpha: [f64; 2],
    /// Site amplitudes `(β_a, β_b)` of the upper exciton.
    pub beta: [f64; 2],
    /// Eigenvalues in cm⁻¹, ascending.
    pub energies_cm: [f64; 2],
}

impl ElectronicExcitons {
    pub fn new(params: &DimerParams) -> ElectronicExcitons {
        let m = DMatrix::from_row_slice(2, 2, &[params.eps_a, params.j, params.j, params.eps_b]);
        let (w, v) = linalg::symmetric_eigen(m);
        ElectronicExcitons {
            alpha: [v[(0, 0)], v[(1, 0)]],
            beta: [v[(0, 1)], v[(1, 1)]],
            energies_cm: [w[0], w[1]],
        }
    }

    pub fn amplitudes(&self, b: Branch) -> [f64; 2] {
        match b {
            Branch::Alpha => self.alpha,
            Branch::Beta => self.beta,
        }
    }

    /// Exciton transition dipole `Σ_i x_i μ_i`.
    pub fn dipole(&self, b: Branch, params: &DimerParams) -> Vec3 {
        let [xa, xb] = self.amplitudes(b);
        vec3::add(&vec3::scale(&params.mu_a, xa), &vec3::scale(&params.mu_b, xb))
    }
}

/// Transition dipoles between the vibrationless states, `μ_ij = ⟨i|D⁺|j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitonDipoles {
    pub alpha_g: Vec3,
    pub beta_g: Vec3,
    pub f_alpha: Vec3,
    pub f_beta: Vec3,
}

/// Eigenstates of `H_total` sorted into manifolds and branches, with the
/// vibrationless states and their transition dipoles.
#[derive(Debug, Clone)]
pub struct ExcitonStructure {
    pub spectrum: Spectrum,
    pub electronic: ElectronicExcitons,
    /// Branch of each eigenstate (only for the one-exciton manifold).
    pub branch: Vec<Option<Branch>>,
    /// Weight of each eigenstate on the electronic α exciton.
    pub alpha_weight: Vec<f64>,
    pub g0: usize,
    pub alpha0: usize,
    pub beta0: usize,
    pub f0: usize,
    pub dipoles: ExcitonDipoles,
}

/// Excitonic raising operators in the electronic basis, Jordan-Wigner ordered:
/// `X_a⁺ = |a⟩⟨g| + |f⟩⟨b|`, `X_b⁺ = |b⟩⟨g| − |f⟩⟨a|`.
pub const RAISE_A: [(Electronic, Electronic, f64); 2] = [
    (Electronic::A, Electronic::G, 1.0),
    (Electronic::F, Electronic::B, 1.0),
];
pub const RAISE_B: [(Electronic, Electronic, f64); 2] = [
    (Electronic::B, Electronic::G, 1.0),
    (Electronic::F, Electronic::A, -1.0),
];

impl ExcitonStructure {
    pub fn new(h: &VibronicHamiltonian, params: &DimerParams) -> Result<ExcitonStructure> {
        let spectrum = Spectrum::new(h)?;
        let space = spectrum.space;
        let electronic = ElectronicExcitons::new(params);
        let d = space.dim();
        let nb = space.block();

        let mut branch = alloc::vec![None; d];
        let mut alpha_weight = alloc::vec![0.0; d];
        for k in 0..d {
            if spectrum.manifold[k] != Manifold::One {
                continue;
            }
            let w = electronic_weight(&spectrum.vectors.column(k), space, electronic.alpha);
            alpha_weight[k] = w;
            branch[k] = Some(if w > 0.5 { Branch::Alpha } else { Branch::Beta });
        }
        let first = |pred: &dyn Fn(usize) -> bool| (0..d).find(|&k| pred(k));
        let missing = || Error::Precondition("manifold without eigenstates".into());
        let g0 = first(&|k| spectrum.manifold[k] == Manifold::Ground).ok_or_else(missing)?;
        let f0 = first(&|k| spectrum.manifold[k] == Manifold::Two).ok_or_else(missing)?;
        let alpha0 = first(&|k| branch[k] == Some(Branch::Alpha)).ok_or_else(missing)?;
        let beta0 = first(&|k| branch[k] == Some(Branch::Beta)).ok_or_else(missing)?;
        let gap_cm = to_wavenumber((spectrum.energies[beta0] - spectrum.energies[alpha0]).abs());
        if gap_cm < 1e-9 {
            return Err(Error::AmbiguousBranches { gap_cm });
        }

        let v = &spectrum.vectors;
        let dip = |upper: usize, lower: usize| -> Vec3 {
            let ca = raise_element(v, nb, upper, lower, &RAISE_A);
            let cb = raise_element(v, nb, upper, lower, &RAISE_B);
            vec3::add(&vec3::scale(&params.mu_a, ca), &vec3::scale(&params.mu_b, cb))
        };
        let dipoles = ExcitonDipoles {
            alpha_g: dip(alpha0, g0),
            beta_g: dip(beta0, g0),
            f_alpha: dip(f0, alpha0),
            f_beta: dip(f0, beta0),
        };
        Ok(ExcitonStructure {
            spectrum,
            electronic,
            branch,
            alpha_weight,
            g0,
            alpha0,
            beta0,
            f0,
            dipoles,
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.spectrum.space
    }

    pub fn vibrationless(&self, b: Branch) -> usize {
        match b {
            Branch::Alpha => self.alpha0,
            Branch::Beta => self.beta0,
        }
    }

    /// Eigenvalue in cm⁻¹.
    pub fn energy_cm(&self, k: usize) -> f64 {
        to_wavenumber(self.spectrum.energies[k])
    }

    /// Vibrationless energies `[g0, α0, β0, f0]` in cm⁻¹.
    pub fn vibrationless_energies_cm(&self) -> [f64; 4] {
        [self.g0, self.alpha0, self.beta0, self.f0].map(|k| self.energy_cm(k))
    }

    /// Transition frequency `g0 → q0` in cm⁻¹.
    pub fn ground_transition_cm(&self, q: Branch) -> f64 {
        self.energy_cm(self.vibrationless(q)) - self.energy_cm(self.g0)
    }

    /// Transition frequency `q0 → f0` in cm⁻¹.
    pub fn excited_transition_cm(&self, q: Branch) -> f64 {
        self.energy_cm(self.f0) - self.energy_cm(self.vibrationless(q))
    }

    pub fn ground_dipole(&self, q: Branch) -> Vec3 {
        match q {
            Branch::Alpha => self.dipoles.alpha_g,
            Branch::Beta => self.dipoles.beta_g,
        }
    }

    pub fn excited_dipole(&self, q: Branch) -> Vec3 {
        match q {
            Branch::Alpha => self.dipoles.f_alpha,
            Branch::Beta => self.dipoles.f_beta,
        }
    }

    /// Electronic exciton `|q_el⟩` tensor both phonon vacua.
    pub fn electronic_exciton_state(&self, q: Branch) -> Vec<Complex64> {
        let space = self.space();
        let [xa, xb] = self.electronic.amplitudes(q);
        let mut psi = alloc::vec![Complex64::new(0.0, 0.0); space.dim()];
        psi[space.index(Electronic::A, 0, 0)] = Complex64::new(xa, 0.0);
        psi[space.index(Electronic::B, 0, 0)] = Complex64::new(xb, 0.0);
        psi
    }

    /// Population of electronic branch `q`, summed over all phonon states:
    /// `⟨ψ| (|q_el⟩⟨q_el| ⊗ 1) |ψ⟩`.
    pub fn branch_population(&self, psi: &[Complex64], q: Branch) -> f64 {
        let space = self.space();
        let nb = space.block();
        let [xa, xb] = self.electronic.amplitudes(q);
        let a = &psi[nb..2 * nb];
        let b = &psi[2 * nb..3 * nb];
        a.iter()
            .zip(b)
            .map(|(pa, pb)| (*pa * xa + *pb * xb).norm_sqr())
            .sum()
    }
}

fn electronic_weight(
    col: &nalgebra::DVectorView<'_, f64>,
    space: HilbertSpace,
    amps: [f64; 2],
) -> f64 {
    let nb = space.block();
    (0..nb)
        .map(|p| {
            let x = amps[0] * col[nb + p] + amps[1] * col[2 * nb + p];
            x * x
        })
        .sum()
}

fn raise_element(
    v: &DMatrix<f64>,
    nb: usize,
    upper: usize,
    lower: usize,
    op: &[(Electronic, Electronic, f64); 2],
) -> f64 {
    let mut acc = 0.0;
    for &(to, from, sign) in op {
        for p in 0..nb {
            acc += sign * v[(to.index() * nb + p, upper)] * v[(from.index() * nb + p, lower)];
        }
    }
    acc
}

/// Everything needed to simulate one dimer: parameters, space, Hamiltonian
/// and its exciton structure.
#[derive(Debug, Clone)]
pub struct DimerModel {
    pub params: DimerParams,
    pub hamiltonian: VibronicHamiltonian,
    pub structure: ExcitonStructure,
}

impl DimerModel {
    pub fn new(params: DimerParams, n_phon: usize) -> Result<DimerModel> {
        let space = build_space(n_phon)?;
        let hamiltonian = assemble(&params, space)?;
        let structure = ExcitonStructure::new(&hamiltonian, &params)?;
        Ok(DimerModel {
            params,
            hamiltonian,
            structure,
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.hamiltonian.space
    }

    /// Normalized vibronic ground state `|g0⟩`.
    pub fn ground_state(&self) -> Vec<Complex64> {
        let k = self.structure.g0;
        self.structure
            .spectrum
            .vectors
            .column(k)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::apc_preset;

    #[test]
    fn dimension_examples() {
        assert_eq!(dimension(2, 4), 100);
        assert_eq!(dimension(7, 9), 490_000_000);
        assert_eq!(dimension(2, 0), 4);
        assert_eq!(build_space(4).unwrap().dim(), 100);
    }

    #[test]
    fn memory_cap_is_enforced() {
        assert!(matches!(
            build_space_with_cap(4, 1000),
            Err(Error::Resource { .. })
        ));
        assert!(build_space(100_000).is_err());
    }

    #[test]
    fn index_map_is_bijective() {
        let s = build_space(3).unwrap();
        for i in 0..s.dim() {
            let (e, n1, n2) = s.label(i);
            assert_eq!(s.index(e, n1, n2), i);
        }
    }

    #[test]
    fn uncoupled_limit_is_diagonal() {
        let p = DimerParams {
            j: 0.0,
            ..apc_preset().electronic()
        };
        let h = assemble(&p, build_space(2).unwrap()).unwrap();
        let t = h.total();
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                if i != j {
                    assert_eq!(t[(i, j)], 0.0);
                }
            }
        }
        assert!(h.h_sb.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn apc_electronic_excitons() {
        let p = apc_preset();
        let ex = ElectronicExcitons::new(&p);
        let mean = 0.5 * (p.eps_a + p.eps_b);
        let half = libm::sqrt(450.0f64 * 450.0 + 162.0 * 162.0);
        assert!((ex.energies_cm[0] - (mean - half)).abs() < 1e-9);
        assert!((ex.energies_cm[1] - (mean + half)).abs() < 1e-9);
        assert!((ex.energies_cm[0] - 15_271.7).abs() < 0.05);
        assert!((ex.energies_cm[1] - 16_228.3).abs() < 0.05);
    }

    #[test]
    fn vibrationless_energies_apc() {
        let m = DimerModel::new(apc_preset(), 3).unwrap();
        let e = m.structure.vibrationless_energies_cm();
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(m.structure.branch[m.structure.alpha0], Some(Branch::Alpha));
        assert_eq!(m.structure.branch[m.structure.beta0], Some(Branch::Beta));
    }
}
