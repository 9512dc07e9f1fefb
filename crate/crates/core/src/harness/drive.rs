//! Mapping from an average optical power target to modulator drive settings.
//!
//! Average power is the mean of the drive signal before the LED limiter.
//! HCM uses `P = 2·target` and DCR-HCM `P = 2η·target`. ACO-OFDM scales a
//! calibration set of unit-amplitude blocks; DCO-OFDM keeps its amplitude at
//! the analytical optimum for a `P_max/2` bias and solves for the bias.

use crate::analysis::dco_optimal_sigma;
use crate::error::{Error, Result};

use super::config::SchemeKind;

/// Drive settings of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    /// Unclipped HCM peak `P` (0 for OFDM).
    pub p: f64,
    /// OFDM amplitude `α`; time samples are `α · IFFT(X)` (0 for HCM).
    pub amplitude: f64,
    /// DCO bias (0 otherwise).
    pub dc_bias: f64,
    /// Pre-clip sample deviation of OFDM signals (0 for HCM).
    pub sigma_t: f64,
}

/// Common random numbers for drive calibration.
#[derive(Debug, Clone, Default)]
pub struct Calibration {
    /// DC-reduction energy efficiency (1 for other schemes).
    pub eta: f64,
    /// Unit-amplitude, unclipped OFDM samples.
    pub samples: Vec<f64>,
    /// Pre-bias sample deviation of DCO-OFDM.
    pub dco_sigma: f64,
}

fn check_target(target: f64, p_max: f64) -> Result<()> {
    if !(target > 0.0 && target <= p_max) {
        return Err(Error::Range {
            target,
            bound: p_max,
        });
    }
    Ok(())
}

/// Ratio `amplitude/sigma_t` of an OFDM variant at FFT size `n`.
fn deviation_ratio(kind: SchemeKind, n: usize) -> f64 {
    match kind {
        SchemeKind::AcoOfdm => std::f64::consts::FRAC_1_SQRT_2,
        _ => ((n - 2) as f64 / n as f64).sqrt(),
    }
}

pub fn average_power_to_drive(
    kind: SchemeKind,
    n: usize,
    target: f64,
    p_max: f64,
    cal: &Calibration,
) -> Result<Drive> {
    check_target(target, p_max)?;
    let empty = Drive {
        p: 0.0,
        amplitude: 0.0,
        dc_bias: 0.0,
        sigma_t: 0.0,
    };
    match kind {
        SchemeKind::Hcm => Ok(Drive {
            p: 2.0 * target,
            ..empty
        }),
        SchemeKind::DcrHcm => Ok(Drive {
            p: 2.0 * cal.eta * target,
            ..empty
        }),
        SchemeKind::AcoOfdm => {
            let amplitude = target / positive_mean(&cal.samples, 1.0, 0.0)?;
            Ok(Drive {
                amplitude,
                sigma_t: amplitude * deviation_ratio(kind, n),
                ..empty
            })
        }
        SchemeKind::DcoOfdm => {
            let ratio = deviation_ratio(kind, n);
            let amplitude = cal.dco_sigma / ratio;
            let at_zero = positive_mean(&cal.samples, amplitude, 0.0)?;
            if target <= at_zero {
                // Too little power for the nominal amplitude: drop the bias and shrink the swing.
                let amplitude = amplitude * target / at_zero;
                return Ok(Drive {
                    amplitude,
                    sigma_t: amplitude * ratio,
                    ..empty
                });
            }
            let dc_bias = solve_bias(&cal.samples, amplitude, target)?;
            Ok(Drive {
                amplitude,
                dc_bias,
                sigma_t: cal.dco_sigma,
                ..empty
            })
        }
    }
}

/// `mean(max(amplitude · s + bias, 0))` over the calibration samples.
pub fn positive_mean(samples: &[f64], amplitude: f64, bias: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::State("OFDM drive calibration has no samples".into()));
    }
    Ok(samples
        .iter()
        .map(|&s| (amplitude * s + bias).max(0.0))
        .sum::<f64>()
        / samples.len() as f64)
}

/// Bias whose empirical positive mean equals `target`, by secant steps
/// safeguarded with bisection.
fn solve_bias(samples: &[f64], amplitude: f64, target: f64) -> Result<f64> {
    let f = |b: f64| positive_mean(samples, amplitude, b).map(|m| m - target);
    let spread = samples.iter().fold(0.0f64, |a, s| a.max(s.abs())) * amplitude;
    let (mut lo, mut hi) = (0.0, target + spread);
    let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::State("DCO bias is not bracketed".into()));
    }
    for _ in 0..200 {
        let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let mid = 0.5 * (lo + hi);
        let b = if secant > lo && secant < hi {
            secant
        } else {
            mid
        };
        let fb = f(b)?;
        if fb == 0.0 || (hi - lo) <= 1e-15 * hi.abs() {
            return Ok(b);
        }
        if fb < 0.0 {
            lo = b;
            f_lo = fb;
        } else {
            hi = b;
            f_hi = fb;
        }
        // Bisect as well so stalled secant steps still shrink the bracket.
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm < 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// DCO deviation used by [`average_power_to_drive`].
pub fn dco_sigma(m_qam: usize, n: usize, p_max: f64, noise_var_total: f64) -> f64 {
    dco_optimal_sigma(m_qam, n, p_max, noise_var_total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(count: usize, std: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        (0..count)
            .map(|_| std * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    #[test]
    fn hcm_drives() {
        let cal = Calibration {
            eta: 4.0,
            ..Default::default()
        };
        assert_eq!(
            average_power_to_drive(SchemeKind::Hcm, 128, 0.05e-3, 1e-4, &cal)
                .unwrap()
                .p,
            0.1e-3
        );
        assert_eq!(
            average_power_to_drive(SchemeKind::DcrHcm, 128, 0.05e-3, 1e-4, &cal)
                .unwrap()
                .p,
            0.4e-3
        );
        assert!(matches!(
            average_power_to_drive(SchemeKind::Hcm, 128, 2e-4, 1e-4, &cal),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            average_power_to_drive(SchemeKind::Hcm, 128, 0.0, 1e-4, &cal),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn dco_bias_hits_target() {
        let cal = Calibration {
            eta: 1.0,
            samples: gaussian(50_000, 1.0),
            dco_sigma: 0.2,
        };
        for target in [0.3, 0.5, 0.9] {
            let d = average_power_to_drive(SchemeKind::DcoOfdm, 128, target, 1.0, &cal).unwrap();
            assert!(
                (positive_mean(&cal.samples, d.amplitude, d.dc_bias).unwrap() / target - 1.0).abs()
                    < 1e-9
            );
            assert!(d.dc_bias > 0.0);
        }
        let low = average_power_to_drive(SchemeKind::DcoOfdm, 128, 0.02, 1.0, &cal).unwrap();
        assert_eq!(low.dc_bias, 0.0);
        assert!(
            (positive_mean(&cal.samples, low.amplitude, 0.0).unwrap() / 0.02 - 1.0).abs() < 1e-12
        );
    }
}
