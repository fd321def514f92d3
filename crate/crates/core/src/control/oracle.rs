use super::ReferenceBasis;
use crate::error::Result;
use crate::polarization::{rotation_unchecked, JonesMatrix};
use crate::scalar::Real;

/// Analytic controller setting for a known channel matrix: `R₁ = T⁻¹`
/// (normalized to unit determinant) and `R₃ = I`.
pub fn oracle_solve<F: Real>(t: &JonesMatrix<F>) -> Result<(JonesMatrix<F>, JonesMatrix<F>)> {
    t.ensure_unitary("channel matrix")?;
    let inv = t.inverse()?;
    let q = inv.det().sqrt();
    Ok((inv.scale(q.inv()), JonesMatrix::identity()))
}

/// Member `φ` of the one-parameter solution family: `R₁ = D(φ)·T⁻¹` and
/// `R₃ = D(−φ)`, where `D` rotates about the S₁ axis. Any `φ` works as long
/// as the R₃ angle cancels it.
pub fn oracle_solve_with_phase<F: Real>(
    t: &JonesMatrix<F>,
    basis: &ReferenceBasis<F>,
    phi: F,
) -> Result<(JonesMatrix<F>, JonesMatrix<F>)> {
    let (r1, _) = oracle_solve(t)?;
    let axis = basis.s1_axis();
    Ok((rotation_unchecked(&axis, phi) * r1, rotation_unchecked(&axis, -phi)))
}
