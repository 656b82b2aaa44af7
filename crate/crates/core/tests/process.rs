use excitonwit_core::model::{Branch, DimerModel};
use excitonwit_core::params::apc_preset;
use excitonwit_core::process::{
    coherence_lower_bound, coherence_measure, theoretical_chi, theoretical_chi_at, unclamped_lower_bound,
    witness_general, witness_wb, Density2, FullChi, ReducedChi,
};
use excitonwit_core::{Complex64, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn stochastic(rng: &mut ChaCha8Rng, tau: f64) -> ReducedChi {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    ReducedChi::from_array(tau, [a, 1.0 - b, 1.0 - a, b])
}

/// Product of column-stochastic matrices, `second · first`.
fn chain(first: &ReducedChi, second: &ReducedChi) -> ReducedChi {
    let m = |x: &ReducedChi| [[x.aaaa, x.aabb], [x.bbaa, x.bbbb]];
    let (a, b) = (m(first), m(second));
    let mut p = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = b[i][0] * a[0][j] + b[i][1] * a[1][j];
        }
    }
    ReducedChi::from_array(first.tau + second.tau, [p[0][0], p[0][1], p[1][0], p[1][1]])
}

fn random_density(rng: &mut ChaCha8Rng) -> Density2 {
    let p: f64 = rng.random();
    let r = (p * (1.0 - p)).sqrt() * rng.random::<f64>();
    let ph: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let off = Complex64::from_polar(r, ph);
    [[c(p, 0.0), off], [off.conj(), c(1.0 - p, 0.0)]]
}

#[test]
fn oracle_contracts_on_apc() {
    let times: Vec<f64> = (0..=50).map(|k| 20.0 * k as f64).collect();
    for n in 1..=4 {
        let m = DimerModel::new(apc_preset(), n).unwrap();
        let chi = theoretical_chi(&m, &times).unwrap();
        let first = chi[0].as_array();
        for (x, want) in first.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((x - want).abs() < 1e-9);
        }
        for x in &chi {
            for s in x.column_sums() {
                assert!((s - 1.0).abs() < 1e-6);
            }
            for v in x.as_array() {
                assert!((-1e-6..=1.0 + 1e-6).contains(&v));
            }
        }
    }
}

#[test]
fn oracle_rejects_negative_times() {
    let m = DimerModel::new(apc_preset(), 1).unwrap();
    assert!(matches!(theoretical_chi(&m, &[1.0, -1.0]), Err(Error::InvalidParameter { .. })));
}

#[test]
fn oracle_witness_vanishes_at_zero_intervals() {
    let m = DimerModel::new(apc_preset(), 2).unwrap();
    let id = theoretical_chi_at(&m, 0.0).unwrap();
    for t in [10.0, 75.0, 250.0, 600.0] {
        let x = theoretical_chi_at(&m, t).unwrap();
        assert!(witness_wb(&id, &x, &x).unwrap().value < 1e-12);
        assert!(witness_wb(&x, &id, &x).unwrap().value < 1e-12);
    }
}

#[test]
fn oracle_witness_is_smooth_in_t1() {
    let m = DimerModel::new(apc_preset(), 2).unwrap();
    let t2 = 100.0;
    let h = 0.5;
    let w: Vec<f64> = (0..40)
        .map(|k| {
            let t1 = 50.0 + k as f64 * h;
            let a = theoretical_chi_at(&m, t1).unwrap();
            let b = theoretical_chi_at(&m, t2).unwrap();
            let ab = theoretical_chi_at(&m, t1 + t2).unwrap();
            witness_wb(&a, &b, &ab).unwrap().value
        })
        .collect();
    assert!(w.iter().all(|x| *x >= 0.0));
    let max_jump = w.windows(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max);
    assert!(max_jump < 0.01, "{max_jump}");
}

#[test]
fn witness_requires_matching_delays() {
    let a = ReducedChi::identity(10.0);
    let b = ReducedChi::identity(20.0);
    assert!(matches!(witness_wb(&a, &b, &ReducedChi::identity(31.0)), Err(Error::Precondition(_))));
}

#[test]
fn symmetric_hopping_has_zero_witness() {
    let k = 0.004;
    let chi = |t: f64| {
        let d = 0.5 * (1.0 + (-2.0 * k * t).exp());
        ReducedChi::from_array(t, [d, 1.0 - d, 1.0 - d, d])
    };
    for t1 in [0.0, 13.0, 100.0, 450.0] {
        for t2 in [0.0, 7.0, 220.0] {
            let w = witness_wb(&chi(t1), &chi(t2), &chi(t1 + t2)).unwrap();
            assert!(w.value < 1e-12);
        }
    }
}

#[test]
fn semigroup_inputs_give_zero_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let a = stochastic(&mut rng, 3.0);
        let b = stochastic(&mut rng, 5.0);
        let ab = chain(&a, &b);
        assert!(witness_wb(&a, &b, &ab).unwrap().value < 1e-12);

        let (fa, fb) = (FullChi::from_reduced(&a), FullChi::from_reduced(&b));
        let fab = FullChi::compose(&fb, &fa);
        let rho = random_density(&mut rng);
        for i in Branch::ALL {
            assert!(witness_general(&fab, &fa, &fb, &rho, i).unwrap() < 1e-12);
        }
    }
}

#[test]
fn general_witness_reduces_to_wb() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let rho = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
    for _ in 0..1_000 {
        let mut chis = [FullChi::identity(2.0), FullChi::identity(3.0), FullChi::identity(5.0)];
        for x in chis.iter_mut() {
            for row in x.m.iter_mut() {
                for v in row.iter_mut() {
                    *v = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                }
            }
            // Trace preservation: Σ_i χ_iiqp = δ_qp.
            for q in Branch::ALL {
                for p in Branch::ALL {
                    let delta = if q == p { c(1.0, 0.0) } else { c(0.0, 0.0) };
                    let a = x.get(Branch::Alpha, Branch::Alpha, q, p);
                    x.set(Branch::Beta, Branch::Beta, q, p, delta - a);
                }
            }
        }
        let [t1, t2, tau] = chis;
        // Only the population elements enter the reduced form, so keep them real.
        let realify = |x: &FullChi| {
            let mut y = *x;
            for q in Branch::ALL {
                for p in Branch::ALL {
                    let v = y.get(q, q, p, p);
                    y.set(q, q, p, p, c(v.re, 0.0));
                }
            }
            y
        };
        let (t1, t2, tau) = (realify(&t1), realify(&t2), realify(&tau));
        let g = witness_general(&tau, &t1, &t2, &rho, Branch::Alpha).unwrap();
        let wb = witness_wb(&t1.reduced(), &t2.reduced(), &tau.reduced()).unwrap();
        assert!((g - wb.value).abs() < 1e-12, "{g} {}", wb.value);
    }
}

#[test]
fn identity_processes_give_zero_general_witness() {
    let id = FullChi::identity(1.0);
    let tau = FullChi::identity(2.0);
    let rho = [[c(0.5, 0.0), c(0.3, 0.2)], [c(0.3, -0.2), c(0.5, 0.0)]];
    for i in Branch::ALL {
        assert!(witness_general(&tau, &id, &id, &rho, i).unwrap() < 1e-15);
    }
}

#[test]
fn unphysical_density_is_rejected() {
    let id = FullChi::identity(1.0);
    let bad = [[c(0.5, 0.0), c(0.9, 0.0)], [c(0.9, 0.0), c(0.5, 0.0)]];
    assert!(witness_general(&id, &id, &id, &bad, Branch::Alpha).is_err());
}

#[test]
fn coherence_measure_examples() {
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3, 0.0), c(0.7, 0.0)]));
    assert!(coherence_measure(&diag).unwrap().abs() < 1e-15);
    let plus = DMatrix::from_element(2, 2, c(0.5, 0.0));
    assert!((coherence_measure(&plus).unwrap() - 0.5).abs() < 1e-12);
    let skew = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.3, 0.0), c(0.5, 0.0)]);
    assert!(coherence_measure(&skew).is_err());
}

#[test]
fn lower_bound_examples() {
    assert!((coherence_lower_bound(0.1, 0.0, 0.0).unwrap() - 0.2).abs() < 1e-15);
    assert_eq!(coherence_lower_bound(0.1, 0.2, 0.0).unwrap(), 0.0);
    assert!(coherence_lower_bound(-0.1, 0.0, 0.0).is_err());
}

fn random_hermitian(seed: u64, n: usize) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherence_is_invariant_under_diagonal_unitaries(
        seed in any::<u64>(),
        n in 2usize..6,
        phases in proptest::collection::vec(0.0..6.3f64, 6),
    ) {
        let rho = random_hermitian(seed, n);
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| Complex64::from_polar(1.0, phases[i])));
        let conj = &u * &rho * u.adjoint();
        let conj = (&conj + conj.adjoint()) * c(0.5, 0.0);
        let r0 = coherence_measure(&rho).unwrap();
        let r1 = coherence_measure(&conj).unwrap();
        prop_assert!((r0 - r1).abs() < 1e-10);
    }

    #[test]
    fn lower_bound_decreases_with_corrections(
        w in 0.0..1.0f64, g in 0.0..1.0f64, b in 0.0..1.0f64, dg in 0.0..0.5f64, db in 0.0..0.5f64,
    ) {
        let base = unclamped_lower_bound(w, g, b);
        prop_assert!(unclamped_lower_bound(w, g + dg, b) <= base);
        prop_assert!(unclamped_lower_bound(w, g, b + db) <= base);
        prop_assert!(coherence_lower_bound(w, g, b).unwrap() >= 0.0);
    }
}
