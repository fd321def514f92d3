use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::JonesMatrix;
use crate::scalar::Real;

/// Haar-distributed SU(2) element: a uniformly random point on the unit
/// 3-sphere (normalized 4-vector of standard normals) read as a quaternion.
pub fn haar_random<F: Real, R: Rng + ?Sized>(rng: &mut R) -> JonesMatrix<F> {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            let q = q.map(|x| F::lit(x / n));
            return JonesMatrix::from_su2(q[0], [q[1], q[2], q[3]]);
        }
    }
}
