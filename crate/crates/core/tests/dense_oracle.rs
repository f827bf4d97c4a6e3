use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcorr::selftest::{
    embed, hadamard_matrix, qft_matrix, random_layout, random_unit_vector, run_selftest, DenseMatrix,
};
use qcorr::statevec::StateVector;

fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernels_match_dense_unitaries(seed in any::<u64>()) {
        for c in run_selftest(seed, 4).unwrap() {
            prop_assert!(c.passed, "{} deviates by {:e}", c.name, c.max_deviation);
        }
    }

    #[test]
    fn qft_roundtrip_and_norm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 6);
        let v = random_unit_vector(layout.dim(), &mut rng);
        let name = layout.registers()[0].name().to_string();
        let mut s = StateVector::from_amplitudes(layout.clone(), v.clone()).unwrap();
        s.apply_qft(&name, false).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        s.apply_qft(&name, true).unwrap();
        prop_assert!(max_dev(s.amplitudes(), &v) < 1e-12);
    }

    #[test]
    fn hadamard_is_involution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 6);
        let v = random_unit_vector(layout.dim(), &mut rng);
        let name = layout.registers().last().unwrap().name().to_string();
        let mut s = StateVector::from_amplitudes(layout, v.clone()).unwrap();
        s.apply_hadamard_all(&name).unwrap();
        s.apply_hadamard_all(&name).unwrap();
        prop_assert!(max_dev(s.amplitudes(), &v) < 1e-12);
    }
}

#[test]
fn hadamard_on_two_qubits_is_normalized_sign_table() {
    let h = hadamard_matrix(2);
    for i in 0..4usize {
        for j in 0..4usize {
            let sign = if (i & j).count_ones() % 2 == 1 { -0.5 } else { 0.5 };
            assert!((h.get(i, j) - sign).norm() < 1e-15);
        }
    }
}

#[test]
fn qft_of_basis_state_is_phase_ramp() {
    let layout = qcorr::statevec::RegisterLayout::new([("a", 1), ("b", 2)]).unwrap();
    let f = embed(&layout, &["b"], &qft_matrix(4, false));
    let mut e3 = vec![Complex64::new(0.0, 0.0); 8];
    e3[3] = 1.0.into();
    let mut s = StateVector::from_amplitudes(layout, e3.clone()).unwrap();
    s.apply_qft("b", false).unwrap();
    let want = f.apply(&e3);
    for k in 0..4 {
        let ramp = Complex64::from_polar(0.5, 2.0 * std::f64::consts::PI * 3.0 * k as f64 / 4.0);
        assert!((want[k] - ramp).norm() < 1e-15);
    }
    assert!(max_dev(s.amplitudes(), &want) < 1e-12);
    assert!(DenseMatrix::identity(4).unitarity_defect() == 0.0);
}
