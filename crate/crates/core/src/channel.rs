//! Optical front end: LED peak clipping, dispersive propagation, receiver
//! noise and the illuminance-to-power conversion.
//!
//! The quoted noise figure `sigma2_n` is used directly as the per-sample noise
//! standard deviation in watts. The pulse-shaping penalty `gamma` scales the
//! variance, so the noise added to each sample has variance `sigma2_n² · gamma`.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default pulse-shaping SNR penalty (0.83 dB).
pub const DEFAULT_GAMMA: f64 = 1.21;

const TAP_SUM_TOLERANCE: f64 = 1e-9;
const TAP_NORMALISE_WARN: f64 = 1e-6;

/// Normalised, non-negative discrete impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: Vec<f64>,
}

impl ChannelTaps {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Config("impulse response has no taps".into()));
        }
        if taps.iter().any(|&h| !(h >= 0.0) || !h.is_finite()) {
            return Err(Error::Config(format!(
                "impulse response taps must be finite and non-negative: {taps:?}"
            )));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > TAP_SUM_TOLERANCE {
            return Err(Error::Config(format!(
                "impulse response taps sum to {sum}, expected 1"
            )));
        }
        Ok(Self { taps })
    }

    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    /// Whitespace-separated taps, rescaled to unit sum.
    pub fn parse(text: &str) -> Result<Self> {
        let taps = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad tap {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::normalised(taps)
    }

    /// Rescales to unit sum, warning when the input was off by more than 1e-6.
    pub fn normalised(taps: Vec<f64>) -> Result<Self> {
        let sum: f64 = taps.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Config(format!("impulse response taps sum to {sum}")));
        }
        if (sum - 1.0).abs() > TAP_NORMALISE_WARN {
            log::warn!("impulse response taps sum to {sum}; normalising");
        }
        Self::new(taps.into_iter().map(|h| h / sum).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Delay spread in samples, `len - 1`.
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }
}

/// Parameters of one optical link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Unclipped peak transmit power P.
    pub p: f64,
    /// LED peak power.
    pub p_max: f64,
    pub sigma2_n: f64,
    pub gamma: f64,
    pub taps: ChannelTaps,
    pub cp_len: usize,
}

impl LinkConfig {
    pub fn awgn(p: f64, p_max: f64, sigma2_n: f64) -> Self {
        Self {
            p,
            p_max,
            sigma2_n,
            gamma: DEFAULT_GAMMA,
            taps: ChannelTaps::identity(),
            cp_len: 0,
        }
    }

    /// Standard deviation of the noise added per sample.
    pub fn noise_std(&self) -> f64 {
        self.sigma2_n * self.gamma.sqrt()
    }

    /// Variance of the noise added per sample.
    pub fn noise_variance(&self) -> f64 {
        self.sigma2_n * self.sigma2_n * self.gamma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0) {
            return Err(Error::Config(format!(
                "p_max must be positive, got {}",
                self.p_max
            )));
        }
        if !(self.sigma2_n >= 0.0) {
            return Err(Error::Config(format!(
                "noise level must be non-negative, got {}",
                self.sigma2_n
            )));
        }
        if !(self.gamma >= 1.0) {
            return Err(Error::Config(format!(
                "gamma must be >= 1, got {}",
                self.gamma
            )));
        }
        if self.cp_len < self.taps.memory() {
            return Err(Error::Config(format!(
                "cyclic prefix {} is shorter than the channel memory {}",
                self.cp_len,
                self.taps.memory()
            )));
        }
        Ok(())
    }
}

/// Ideal peak-limited LED: `min(max(s, 0), p_max)`.
pub fn clip(samples: &[f64], p_max: f64) -> Vec<f64> {
    samples.iter().map(|&s| s.clamp(0.0, p_max)).collect()
}

/// Linear convolution with `taps`, truncated to the input length.
pub fn fir(samples: &[f64], taps: &[f64]) -> Vec<f64> {
    (0..samples.len())
        .map(|k| {
            taps.iter()
                .take(k + 1)
                .enumerate()
                .map(|(l, h)| h * samples[k - l])
                .sum()
        })
        .collect()
}

/// Circular convolution `Σ h_l x[(k - l) mod N]`.
pub fn cyclic_convolve(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(l, h)| h * x[(k + n * (l / n + 1) - l) % n])
                .sum()
        })
        .collect()
}

/// LED clipping, channel, then receiver noise.
pub fn propagate<R: Rng + ?Sized>(
    samples: &[f64],
    config: &LinkConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    config.validate()?;
    let mut y = fir(&clip(samples, config.p_max), config.taps.as_slice());
    let std = config.noise_std();
    if std > 0.0 {
        for s in &mut y {
            let z: f64 = rng.sample(StandardNormal);
            *s += std * z;
        }
    }
    Ok(y)
}

/// Received optical power for an illuminance target: `lux / ler · area`.
pub fn illuminance_to_power(lux: f64, ler: f64, area_m2: f64) -> Result<f64> {
    for (name, v) in [
        ("illuminance", lux),
        ("luminous efficacy", ler),
        ("detector area", area_m2),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(lux / ler * area_m2)
}
