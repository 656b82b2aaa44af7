use excitonwit_core::model::{
    assemble, build_space, build_space_with_cap, dimension, Branch, DimerModel, Electronic,
    ExcitonStructure, Manifold,
};
use excitonwit_core::params::{apc_preset, DimerParams};
use excitonwit_core::units::to_wavenumber;
use excitonwit_core::vec3::{self, Vec3};
use excitonwit_core::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn unit(theta: f64, phi: f64) -> Vec3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

prop_compose! {
    fn dimer()(
        eps_a in 14_000.0..17_000.0f64,
        eps_b in 14_000.0..17_000.0f64,
        j_abs in 20.0..400.0f64,
        j_neg in any::<bool>(),
        omega_a in 200.0..1600.0f64,
        omega_b in 200.0..1600.0f64,
        g_a in 0.0..0.6f64,
        g_b in 0.0..0.6f64,
        delta_e in -200.0..200.0f64,
        ta in 0.0..3.14f64, pa in 0.0..6.28f64,
        tb in 0.0..3.14f64, pb in 0.0..6.28f64,
        ma in 0.5..2.0f64, mb in 0.5..2.0f64,
    ) -> DimerParams {
        DimerParams {
            eps_a, eps_b, j: if j_neg { -j_abs } else { j_abs }, omega_a, omega_b, g_a, g_b, delta_e,
            mu_a: vec3::scale(&unit(ta, pa), ma),
            mu_b: vec3::scale(&unit(tb, pb), mb),
        }
    }
}

fn n_exc(model: &DimerModel) -> DMatrix<f64> {
    let s = model.space();
    DMatrix::from_fn(s.dim(), s.dim(), |i, j| {
        if i == j {
            s.label(i).0.excitation() as f64
        } else {
            0.0
        }
    })
}

#[test]
fn dimension_formula() {
    assert_eq!(dimension(2, 4), 100);
    assert_eq!(dimension(2, 0), 4);
    let d = dimension(7, 9) as f64;
    assert!((d / 4.9e8 - 1.0).abs() < 0.01, "{d}");
    assert_eq!(build_space(4).unwrap().dim(), 100);
}

#[test]
fn oversized_space_is_a_resource_error() {
    match build_space_with_cap(40, 1 << 20) {
        Err(Error::Resource { dim, .. }) => assert_eq!(dim, 4 * 41 * 41),
        other => panic!("{other:?}"),
    }
}

#[test]
fn electronic_one_exciton_energies_of_apc() {
    let m = DimerModel::new(apc_preset().electronic(), 2).unwrap();
    let [g, a, b, _] = m.structure.vibrationless_energies_cm();
    let (a, b) = (a - g, b - g);
    let mean = 0.5 * (15_300.0 + 16_200.0);
    let half = (450.0f64 * 450.0 + 162.0 * 162.0).sqrt();
    assert!((a - (mean - half)).abs() < 1e-8, "{a}");
    assert!((b - (mean + half)).abs() < 1e-8, "{b}");
    assert!((a - 15_271.7).abs() < 0.05 && (b - 16_228.3).abs() < 0.05);
}

#[test]
fn uncoupled_hamiltonian_is_diagonal() {
    let p = DimerParams {
        j: 0.0,
        g_a: 0.0,
        g_b: 0.0,
        ..apc_preset()
    };
    let h = assemble(&p, build_space(2).unwrap()).unwrap();
    assert!(h.h_sb.iter().all(|&x| x == 0.0));
    let t = h.total();
    for i in 0..t.nrows() {
        for j in 0..t.ncols() {
            if i != j {
                assert_eq!(t[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn homodimer_and_orthogonal_dipoles_decouple_excitons() {
    let homo = DimerParams {
        eps_b: 15_300.0,
        ..apc_preset()
    };
    let m = DimerModel::new(homo.electronic(), 0).unwrap();
    let d = &m.structure.dipoles;
    assert!(vec3::dot(&d.alpha_g, &d.beta_g).abs() < 1e-12);

    let perp = DimerParams {
        mu_b: [0.0, 1.0, 0.0],
        ..apc_preset()
    };
    let m = DimerModel::new(perp.electronic(), 0).unwrap();
    let d = &m.structure.dipoles;
    assert!(vec3::dot(&d.alpha_g, &d.beta_g).abs() < 1e-12);
}

#[test]
fn degenerate_branches_are_reported() {
    // ε_a = ε_b and J = 0 make α0 and β0 degenerate.
    let p = DimerParams {
        eps_b: 15_300.0,
        j: 0.0,
        g_a: 0.0,
        g_b: 0.0,
        ..apc_preset()
    };
    let h = assemble(&p, build_space(1).unwrap()).unwrap();
    assert!(matches!(
        ExcitonStructure::new(&h, &p),
        Err(Error::AmbiguousBranches { .. })
    ));
}

#[test]
fn vibronic_branches_cover_the_one_exciton_manifold() {
    let m = DimerModel::new(apc_preset(), 3).unwrap();
    let s = &m.structure;
    for (k, man) in s.spectrum.manifold.iter().enumerate() {
        assert_eq!(s.branch[k].is_some(), *man == Manifold::One);
    }
    assert_eq!(s.branch[s.alpha0], Some(Branch::Alpha));
    assert_eq!(s.branch[s.beta0], Some(Branch::Beta));
    assert!(s.energy_cm(s.alpha0) < s.energy_cm(s.beta0));
    let n_alpha = s.branch.iter().filter(|b| **b == Some(Branch::Alpha)).count();
    let n_beta = s.branch.iter().filter(|b| **b == Some(Branch::Beta)).count();
    assert_eq!(n_alpha + n_beta, 2 * m.space().block());
}

#[test]
fn index_map_round_trips_for_every_label() {
    let s = build_space(3).unwrap();
    for e in Electronic::ALL {
        for n1 in 0..=3 {
            for n2 in 0..=3 {
                assert_eq!(s.label(s.index(e, n1, n2)), (e, n1, n2));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_commutes_with_excitation_number(p in dimer(), n in 0usize..3) {
        let m = DimerModel::new(p, n).unwrap();
        let h = m.hamiltonian.total();
        let nx = n_exc(&m);
        let c = &h * &nx - &nx * &h;
        prop_assert!(c.amax() < 1e-10);
        prop_assert!(m.hamiltonian.asymmetry() < 1e-12);
    }

    #[test]
    fn eigenpairs_have_small_residuals(p in dimer(), n in 0usize..3) {
        let m = DimerModel::new(p, n).unwrap();
        let h = m.hamiltonian.total();
        let scale = h.norm();
        let sp = &m.structure.spectrum;
        for k in 0..sp.energies.len() {
            let v = sp.vectors.column(k);
            let r = &h * v - v * sp.energies[k];
            prop_assert!(r.norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn dipole_sum_rule_without_phonon_coupling(p in dimer()) {
        let m = DimerModel::new(p.electronic(), 0).unwrap();
        let d = &m.structure.dipoles;
        let lhs = vec3::dot(&d.alpha_g, &d.alpha_g) + vec3::dot(&d.beta_g, &d.beta_g);
        let rhs = vec3::dot(&p.mu_a, &p.mu_a) + vec3::dot(&p.mu_b, &p.mu_b);
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }

    #[test]
    fn exciton_dipole_overlap_formula(p in dimer()) {
        // Holds for equal dipole magnitudes.
        let p = DimerParams { mu_a: vec3::normalized(&p.mu_a), mu_b: vec3::normalized(&p.mu_b), ..p };
        let m = DimerModel::new(p.electronic(), 0).unwrap();
        let s = &m.structure;
        let [xa, xb] = s.electronic.amplitudes(Branch::Alpha);
        let lhs = vec3::dot(&s.dipoles.alpha_g, &s.dipoles.beta_g);
        let rhs = (xa * xa - xb * xb) * vec3::dot(&p.mu_a, &p.mu_b);
        prop_assert!((lhs.abs() - rhs.abs()).abs() < 1e-10);
    }

    #[test]
    fn excited_dipoles_mirror_ground_dipoles(p in dimer()) {
        // With the raising operators used here, ⟨f|μ|α⟩ = −μ_gβ and ⟨f|μ|β⟩ = μ_gα
        // up to the overall exciton phase.
        let m = DimerModel::new(p.electronic(), 0).unwrap();
        let d = &m.structure.dipoles;
        for (x, y) in [(d.f_alpha, d.beta_g), (d.f_beta, d.alpha_g)] {
            prop_assert!((vec3::norm(&x) - vec3::norm(&y)).abs() < 1e-10);
            prop_assert!((vec3::dot(&x, &y).abs() - vec3::dot(&y, &y)).abs() < 1e-10);
        }
    }

    #[test]
    fn uncoupled_vibrationless_energies_match_two_level_oracle(p in dimer()) {
        let e = p.electronic();
        let m = DimerModel::new(e.clone(), 1).unwrap();
        let [g, a, b, f] = m.structure.vibrationless_energies_cm();
        let mean = 0.5 * (e.eps_a + e.eps_b);
        let half = (0.25 * (e.eps_b - e.eps_a).powi(2) + e.j * e.j).sqrt();
        // The ground state carries the zero-point energy of both modes.
        prop_assert!((g - 0.5 * (e.omega_a + e.omega_b)).abs() < 1e-7);
        prop_assert!((a - g - (mean - half)).abs() < 1e-7);
        prop_assert!((b - g - (mean + half)).abs() < 1e-7);
        prop_assert!((f - g - (e.eps_a + e.eps_b + e.delta_e)).abs() < 1e-7);
        prop_assert!((m.structure.ground_transition_cm(Branch::Beta) - (b - g)).abs() < 1e-9);
        prop_assert!((to_wavenumber(m.structure.spectrum.energies[m.structure.beta0]) - b).abs() < 1e-9);
    }
}
