//! Inverse kinematics for the four-plate R₁ stack.

use super::{realize_r1, wrap_angle};
use crate::error::{Error, Result};
use crate::polarization::JonesMatrix;
use crate::scalar::Real;

const MAX_ITERATIONS: usize = 200;

const STARTS: [[f64; 4]; 8] = [
    [0.3, 0.7, -0.4, 0.2],
    [1.0, -0.5, 0.8, -1.2],
    [2.0, 1.0, -2.0, 0.5],
    [-1.5, 2.5, 1.0, -0.7],
    [0.1, -2.0, 2.5, 1.5],
    [3.0, 0.5, 0.5, 3.0],
    [-2.5, -1.0, -2.8, 0.9],
    [1.3, 2.9, -1.1, -2.2],
];

/// Quaternion vector part of `target†·R₁(x)`; zero exactly when the stack
/// realizes `target` up to phase.
fn residual<F: Real>(target_adj: &JonesMatrix<F>, x: &[F; 4]) -> [F; 3] {
    (*target_adj * realize_r1(x)).su2_parameters().1
}

fn norm3<F: Real>(r: &[F; 3]) -> F {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn det3<F: Real>(m: &[[F; 3]; 3]) -> F {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule; `None` when the system is numerically singular.
fn solve3<F: Real>(a: &[[F; 3]; 3], b: &[F; 3]) -> Option<[F; 3]> {
    let d = det3(a);
    if !(d.abs() > F::min_positive_value()) {
        return None;
    }
    let mut out = [F::zero(); 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut m = *a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *slot = det3(&m) / d;
    }
    Some(out)
}

/// Damped Gauss–Newton from one start. Returns the final point and its
/// phase-quotient distance to the target.
fn descend<F: Real>(target: &JonesMatrix<F>, start: [F; 4], tol: F) -> ([F; 4], F) {
    let target_adj = target.adjoint();
    let h = F::epsilon().cbrt();
    let mut x = start;
    let mut r = residual(&target_adj, &x);
    let mut cost = norm3(&r);
    let mut mu = F::lit(1e-3);
    for _ in 0..MAX_ITERATIONS {
        if realize_r1(&x).phase_distance(target) < tol {
            break;
        }
        // central-difference Jacobian, 3 residuals × 4 retardances
        let mut jac = [[F::zero(); 4]; 3];
        for k in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[k] = xp[k] + h;
            xm[k] = xm[k] - h;
            let (rp, rm) = (residual(&target_adj, &xp), residual(&target_adj, &xm));
            for i in 0..3 {
                jac[i][k] = (rp[i] - rm[i]) / (h + h);
            }
        }
        let mut accepted = false;
        for _ in 0..12 {
            // minimum-norm damped step δ = −Jᵀ(JJᵀ + μI)⁻¹ r
            let mut jjt = [[F::zero(); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    jjt[i][j] = (0..4).fold(F::zero(), |acc, k| acc + jac[i][k] * jac[j][k]);
                }
                jjt[i][i] = jjt[i][i] + mu;
            }
            let Some(y) = solve3(&jjt, &r) else {
                mu = mu * F::lit(10.0);
                continue;
            };
            let mut trial = x;
            for (k, t) in trial.iter_mut().enumerate() {
                *t = *t - (0..3).fold(F::zero(), |acc, i| acc + jac[i][k] * y[i]);
            }
            let r_trial = residual(&target_adj, &trial);
            let c_trial = norm3(&r_trial);
            if c_trial < cost {
                x = trial;
                r = r_trial;
                cost = c_trial;
                mu = (mu * F::lit(0.3)).max(F::lit(1e-12));
                accepted = true;
                break;
            }
            mu = mu * F::lit(10.0);
        }
        if !accepted {
            break;
        }
    }
    let d = realize_r1(&x).phase_distance(target);
    (x, d)
}

/// Finds plate retardances whose stack realizes `target` up to global phase.
///
/// Any solution is acceptable (four plates over-parameterize SU(2)). The search
/// runs damped Gauss–Newton from a fixed set of starts and returns the first
/// point within tolerance.
pub fn retardances_for<F: Real>(target: &JonesMatrix<F>) -> Result<[F; 4]> {
    target.ensure_unitary("target R1")?;
    let tol = F::identity_tol();
    let zero = [F::zero(); 4];
    if realize_r1(&zero).phase_distance(target) < tol {
        return Ok(zero);
    }
    let mut best = F::infinity();
    for start in STARTS {
        let (x, d) = descend(target, start.map(F::lit), tol);
        if d < tol {
            return Ok(x.map(wrap_angle));
        }
        best = best.min(d);
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS * STARTS.len(), residual: best.to_f64_lossy() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::{haar_random, rotation_about_axis, StokesVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_target_gives_zero() {
        assert_eq!(retardances_for(&JonesMatrix::<f64>::identity()).unwrap(), [0.0; 4]);
    }

    #[test]
    fn single_h_plate() {
        let alpha = 0.9;
        let target = rotation_about_axis(&StokesVector::horizontal(), alpha).unwrap();
        // (α, 0, 0, 0) is one valid solution; the solver may return another
        assert!(realize_r1(&[alpha, 0.0, 0.0, 0.0]).phase_distance(&target) < 1e-15);
        let x = retardances_for(&target).unwrap();
        assert!(realize_r1(&x).phase_distance(&target) < 1e-8);
    }

    #[test]
    fn random_targets_are_realized() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let target: JonesMatrix<f64> = haar_random(&mut rng);
            let x = retardances_for(&target).unwrap();
            assert!(realize_r1(&x).phase_distance(&target) < 1e-8);
        }
    }

    #[test]
    fn non_unitary_target_rejected() {
        assert!(retardances_for(&JonesMatrix::<f64>::zero()).is_err());
    }

    #[test]
    fn cramer_solver() {
        let a: [[f64; 3]; 3] = [[2.0, 0.0, 1.0], [0.0, 3.0, 0.0], [1.0, 0.0, 2.0]];
        let x = solve3(&a, &[3.0, 6.0, 3.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(solve3(&[[0.0; 3]; 3], &[1.0, 0.0, 0.0]).is_none());
    }
}
