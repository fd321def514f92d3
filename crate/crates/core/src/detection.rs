//! Gated single-photon detection and QBER accounting.
//!
//! The source is a weak coherent pulse with mean photon number `µ` per gate.
//! A gate clicks on a signal photon, a dark count or a crosstalk event, each
//! treated as independent.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarization::{added_loss, StokesVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Mean photon number per gate (µ).
    pub mean_photons: f64,
    /// Gate width in seconds.
    pub gate_width: f64,
    /// Gate repetition rate in Hz.
    pub gate_rate: f64,
    /// Dark-count probability per nanosecond of open gate.
    pub dark_rate: f64,
    /// Detection efficiency η in `[0, 1]`.
    pub efficiency: f64,
    /// Probability per gate of a click caused by reference-channel crosstalk.
    pub crosstalk_prob: f64,
}

impl Default for DetectorParams {
    /// 0.2 photons per 2.5 ns gate at 100 kHz, dark counts 4e-5 per ns,
    /// unit efficiency and no crosstalk.
    fn default() -> Self {
        Self {
            mean_photons: 0.2,
            gate_width: 2.5e-9,
            gate_rate: 100e3,
            dark_rate: 4e-5,
            efficiency: 1.0,
            crosstalk_prob: 0.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mean_photons", self.mean_photons),
            ("gate_width", self.gate_width),
            ("gate_rate", self.gate_rate),
            ("dark_rate", self.dark_rate),
            ("efficiency", self.efficiency),
            ("crosstalk_prob", self.crosstalk_prob),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.efficiency > 1.0 || self.crosstalk_prob > 1.0 {
            return Err(Error::invalid("efficiency and crosstalk_prob must not exceed 1"));
        }
        Ok(())
    }

    /// Probability of a dark click within one gate.
    pub fn dark_probability(&self) -> f64 {
        -(-self.dark_rate * self.gate_width * 1e9).exp_m1()
    }
}

/// Probability that a gate clicks when the received state has fidelity
/// `fidelity_to_analyzer` with the analyzer axis.
pub fn click_probability(params: &DetectorParams, fidelity_to_analyzer: f64) -> f64 {
    let f = fidelity_to_analyzer.clamp(0.0, 1.0);
    let p_sig = -(-params.mean_photons * params.efficiency * f).exp_m1();
    let p_dark = params.dark_probability();
    let p_none = (1.0 - p_sig) * (1.0 - p_dark) * (1.0 - params.crosstalk_prob);
    (1.0 - p_none).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub analyzer_stokes: StokesVector<f64>,
    pub gates: u64,
    pub clicks: u64,
}

impl CountRecord {
    pub fn click_rate(&self) -> f64 {
        self.clicks as f64 / self.gates as f64
    }
}

/// Draws the click count over `gates` gates for a state `received` behind an
/// analyzer along `analyzer` (both unit Stokes vectors).
pub fn simulate_counts<R: Rng + ?Sized>(
    params: &DetectorParams,
    analyzer: &StokesVector<f64>,
    received: &StokesVector<f64>,
    gates: u64,
    rng: &mut R,
) -> Result<CountRecord> {
    params.validate()?;
    if gates == 0 {
        return Err(Error::invalid("gates must be positive"));
    }
    let analyzer = analyzer.validated_unit()?;
    let received = received.validated_unit()?;
    let fidelity = (1.0 + analyzer.dot(&received)) / 2.0;
    let p = click_probability(params, fidelity);
    let clicks =
        Binomial::new(gates, p).map_err(|e| Error::invalid(format!("binomial({gates}, {p}): {e}")))?.sample(rng);
    Ok(CountRecord { analyzer_stokes: analyzer, gates, clicks })
}

/// Mean of `sin²(Θ/2)` over the deviation angles (radians): the optical QBER
/// added by residual misalignment.
pub fn qber_added(deviation_angles: &[f64]) -> Result<f64> {
    if deviation_angles.is_empty() {
        return Err(Error::invalid("qber_added needs at least one deviation angle"));
    }
    let sum: f64 = deviation_angles.iter().map(|&a| added_loss(a)).sum();
    Ok((sum / deviation_angles.len() as f64).clamp(0.0, 1.0))
}

/// Error fraction from clicks behind the correct and the orthogonal analyzer.
pub fn qber_measured(correct: &CountRecord, orthogonal: &CountRecord) -> Result<f64> {
    let total = correct.clicks + orthogonal.clicks;
    if total == 0 {
        return Err(Error::UndefinedQber);
    }
    Ok(orthogonal.clicks as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(clicks: u64) -> CountRecord {
        CountRecord { analyzer_stokes: StokesVector::horizontal(), gates: 1000, clicks }
    }

    #[test]
    fn dark_only_probability() {
        let p = DetectorParams { mean_photons: 0.0, ..Default::default() };
        let expected = 1.0 - (-4e-5f64 * 2.5).exp();
        assert_abs_diff_eq!(click_probability(&p, 1.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 1.0e-4, epsilon = 1e-8);
        // orthogonal analyzer at full µ also sees only dark counts
        assert_abs_diff_eq!(click_probability(&DetectorParams::default(), 0.0), expected, epsilon = 1e-15);
    }

    #[test]
    fn signal_only_probability() {
        let p = DetectorParams { dark_rate: 0.0, ..Default::default() };
        assert_abs_diff_eq!(click_probability(&p, 1.0), 1.0 - (-0.2f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(click_probability(&p, 1.0), 0.1813, epsilon = 1e-4);
    }

    #[test]
    fn monotone_in_every_parameter() {
        let base = DetectorParams { crosstalk_prob: 1e-5, efficiency: 0.5, ..Default::default() };
        let grid = [0.0, 0.1, 0.3, 0.6, 1.0];
        for w in grid.windows(2) {
            assert!(click_probability(&base, w[0]) <= click_probability(&base, w[1]));
            let bump = |f: &dyn Fn(f64) -> DetectorParams| {
                click_probability(&f(w[0]), 0.7) <= click_probability(&f(w[1]), 0.7)
            };
            assert!(bump(&|x| DetectorParams { mean_photons: x, ..base }));
            assert!(bump(&|x| DetectorParams { efficiency: x, ..base }));
            assert!(bump(&|x| DetectorParams { dark_rate: x * 1e-3, ..base }));
            assert!(bump(&|x| DetectorParams { crosstalk_prob: x * 1e-2, ..base }));
        }
    }

    #[test]
    fn zero_probability_gives_zero_clicks() {
        let p = DetectorParams { mean_photons: 0.0, dark_rate: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = StokesVector::horizontal();
        let r = simulate_counts(&p, &h, &h, 1_000_000, &mut rng).unwrap();
        assert_eq!(r.clicks, 0);
    }

    #[test]
    fn binomial_counts_within_three_sigma() {
        // p = 1e-4 over 1e6 gates: mean 100, σ ≈ 10
        let p = DetectorParams { mean_photons: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = StokesVector::horizontal();
        let r = simulate_counts(&p, &h, &h, 1_000_000, &mut rng).unwrap();
        let mean = 1e6 * p.dark_probability();
        assert!((r.clicks as f64 - mean).abs() < 3.0 * mean.sqrt(), "{} clicks", r.clicks);
    }

    #[test]
    fn counts_are_seeded() {
        let p = DetectorParams::default();
        let h = StokesVector::horizontal();
        let d = StokesVector::diagonal();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            simulate_counts(&p, &h, &d, 10_000, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn simulate_counts_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = StokesVector::horizontal();
        let p = DetectorParams::default();
        assert!(simulate_counts(&p, &h, &h, 0, &mut rng).is_err());
        assert!(simulate_counts(&p, &StokesVector::new(2.0, 0.0, 0.0), &h, 10, &mut rng).is_err());
        let bad = DetectorParams { efficiency: 1.5, ..p };
        assert!(simulate_counts(&bad, &h, &h, 10, &mut rng).is_err());
    }

    #[test]
    fn qber_added_values() {
        assert_eq!(qber_added(&[0.0, 0.0]).unwrap(), 0.0);
        let two = qber_added(&[2f64.to_radians(); 5]).unwrap();
        assert_abs_diff_eq!(two, 1f64.to_radians().sin().powi(2), epsilon = 1e-16);
        assert_abs_diff_eq!(two, 3.046e-4, epsilon = 1e-7);
        let ten = qber_added(&[10f64.to_radians()]).unwrap();
        assert_abs_diff_eq!(ten, 0.0076, epsilon = 1e-4);
        assert!(qber_added(&[]).is_err());
    }

    #[test]
    fn qber_measured_values() {
        assert_eq!(qber_measured(&record(50), &record(0)).unwrap(), 0.0);
        assert_eq!(qber_measured(&record(40), &record(40)).unwrap(), 0.5);
        assert!(matches!(qber_measured(&record(0), &record(0)), Err(Error::UndefinedQber)));
        // detector-floor QBER at the default operating point
        let p = DetectorParams::default();
        let pd = p.dark_probability();
        let ps = click_probability(&p, 1.0);
        let floor = pd / (pd + ps);
        assert_abs_diff_eq!(floor, 1e-4 / (1e-4 + 0.1813), epsilon = 1e-6);
        assert_abs_diff_eq!(floor, 5.5e-4, epsilon = 0.1e-4);
    }
}
