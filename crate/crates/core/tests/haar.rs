use polctl_core::polarization::{haar_random, rotation_about_axis, JonesMatrix, JonesVector, StokesVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_output(fixed: &JonesMatrix<f64>, samples: usize, seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = [0.0; 3];
    for _ in 0..samples {
        let u: JonesMatrix<f64> = haar_random(&mut rng);
        let s = (*fixed * u).apply(&JonesVector::horizontal()).to_stokes().unwrap().to_array();
        for i in 0..3 {
            acc[i] += s[i];
        }
    }
    acc.map(|x| x / samples as f64)
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn samples_are_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let u: JonesMatrix<f64> = haar_random(&mut rng);
        assert!(u.unitarity_defect() < 1e-10);
    }
}

#[test]
fn same_seed_same_matrix() {
    let a: JonesMatrix<f64> = haar_random(&mut ChaCha8Rng::seed_from_u64(9));
    let b: JonesMatrix<f64> = haar_random(&mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a, b);
}

#[test]
fn output_states_are_isotropic() {
    let m = mean_output(&JonesMatrix::identity(), 100_000, 11);
    assert!(norm(m) < 0.02, "{m:?}");
}

#[test]
fn left_multiplication_keeps_isotropy() {
    let fixed = rotation_about_axis(&StokesVector::from_array([0.6, 0.0, 0.8]), 1.1).unwrap();
    let m = mean_output(&fixed, 100_000, 12);
    assert!(norm(m) < 0.02, "{m:?}");

    // Second moment of s1 for a uniform sphere point is 1/3.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 100_000;
    let mut s1sq = 0.0;
    for _ in 0..n {
        let u: JonesMatrix<f64> = haar_random(&mut rng);
        let s = (fixed * u).apply(&JonesVector::diagonal()).to_stokes().unwrap();
        s1sq += s.s1 * s.s1;
    }
    assert!((s1sq / n as f64 - 1.0 / 3.0).abs() < 0.01);
}
