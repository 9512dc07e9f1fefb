//! ACO-OFDM and DCO-OFDM baseline modems.
//!
//! Transforms are unitary (`1/√N` each way). A time-domain symbol is
//! `amplitude · IFFT(X)`, so subcarrier `k` of the received block equals
//! `amplitude · H[k] · X[k]` for a cyclic channel with frequency response `H`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::pam::{Bit, GrayPam};

/// Square QAM with Gray labels on each axis and unit average energy.
///
/// The first half of each bit group selects the in-phase level, the second
/// half the quadrature level. Level index `i` sits at `(L - 1 - 2i) · scale`,
/// so QPSK maps `00` to `(1 + j)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayQam {
    m: usize,
    axis: GrayPam,
    scale: f64,
}

impl GrayQam {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() || m.trailing_zeros() % 2 != 0 {
            return Err(Error::Config(format!("QAM order {m} must be a power of 4")));
        }
        let side = 1usize << (m.trailing_zeros() / 2);
        Ok(Self {
            m,
            axis: GrayPam::new(side)?,
            scale: (3.0 / (2.0 * (m - 1) as f64)).sqrt(),
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.axis.bits_per_level()
    }

    fn level(&self, index: usize) -> f64 {
        (self.axis.order() as f64 - 1.0 - 2.0 * index as f64) * self.scale
    }

    fn index(&self, a: f64) -> usize {
        self.axis
            .nearest_index((self.axis.order() as f64 - 1.0 - a / self.scale) / 2.0)
    }

    /// One constellation point for `bits_per_symbol` bits.
    pub fn point(&self, bits: &[Bit]) -> Complex64 {
        let half = self.axis.bits_per_level();
        Complex64::new(
            self.level(self.axis.index_of(&bits[..half])),
            self.level(self.axis.index_of(&bits[half..])),
        )
    }

    /// Appends the bits of the nearest constellation point.
    pub fn push_bits(&self, s: Complex64, out: &mut Vec<Bit>) {
        self.axis.push_bits(self.index(s.re), out);
        self.axis.push_bits(self.index(s.im), out);
    }

    /// All `M` points in label order.
    pub fn constellation(&self) -> Vec<Complex64> {
        let k = self.bits_per_symbol();
        (0..self.m)
            .map(|w| {
                let bits: Vec<Bit> = (0..k).rev().map(|s| ((w >> s) & 1) as Bit).collect();
                self.point(&bits)
            })
            .collect()
    }
}

/// Data symbols of one OFDM block.
#[derive(Debug, Clone, PartialEq)]
pub struct QamFrame {
    m_qam: usize,
    symbols: Vec<Complex64>,
}

impl QamFrame {
    pub fn new(m_qam: usize, symbols: Vec<Complex64>) -> Result<Self> {
        GrayQam::new(m_qam)?;
        Ok(Self { m_qam, symbols })
    }

    pub fn order(&self) -> usize {
        self.m_qam
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

pub fn qam_map(bits: &[Bit], m_qam: usize) -> Result<QamFrame> {
    let qam = GrayQam::new(m_qam)?;
    let k = qam.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(Error::Framing {
            expected: bits.len().div_ceil(k) * k,
            got: bits.len(),
        });
    }
    Ok(QamFrame {
        m_qam,
        symbols: bits.chunks_exact(k).map(|g| qam.point(g)).collect(),
    })
}

/// Hard decision per axis.
pub fn qam_slice(symbols: &[Complex64], m_qam: usize) -> Result<Vec<Bit>> {
    let qam = GrayQam::new(m_qam)?;
    let mut bits = Vec::with_capacity(symbols.len() * qam.bits_per_symbol());
    for &s in symbols {
        qam.push_bits(s, &mut bits);
    }
    Ok(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OfdmVariant {
    Aco,
    Dco,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    pub n_fft: usize,
    pub time_samples: Vec<f64>,
    pub variant: OfdmVariant,
    pub dc_bias: f64,
}

/// Data subcarriers per block.
pub fn data_subcarriers(variant: OfdmVariant, n_fft: usize) -> usize {
    match variant {
        OfdmVariant::Aco => n_fft / 4,
        OfdmVariant::Dco => n_fft / 2 - 1,
    }
}

/// Subcarrier index that carries data symbol `i`.
fn carrier(variant: OfdmVariant, i: usize) -> usize {
    match variant {
        OfdmVariant::Aco => 2 * i + 1,
        OfdmVariant::Dco => i + 1,
    }
}

/// Unnormalised DFT of the taps: the per-subcarrier gain of a cyclic channel.
pub fn frequency_response(taps: &[f64], n_fft: usize) -> Vec<Complex64> {
    (0..n_fft)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(l, &h)| {
                    Complex64::from_polar(
                        h,
                        -2.0 * std::f64::consts::PI * (k * l % n_fft) as f64 / n_fft as f64,
                    )
                })
                .sum()
        })
        .collect()
}

/// FFT plans for one block size.
#[derive(Clone)]
pub struct OfdmModem {
    n_fft: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem")
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl OfdmModem {
    pub fn new(n_fft: usize) -> Result<Self> {
        if n_fft < 8 || !n_fft.is_power_of_two() {
            return Err(Error::Config(format!(
                "FFT size {n_fft} must be a power of two >= 8"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_fft,
            forward: planner.plan_fft_forward(n_fft),
            inverse: planner.plan_fft_inverse(n_fft),
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    fn check_frame(&self, frame: &QamFrame, variant: OfdmVariant) -> Result<()> {
        let want = data_subcarriers(variant, self.n_fft);
        if frame.len() != want {
            return Err(Error::Config(format!(
                "{variant:?}-OFDM with {} subcarriers carries {want} data symbols, got {}",
                self.n_fft,
                frame.len()
            )));
        }
        Ok(())
    }

    fn check_samples(&self, samples: &[f64], gains: Option<&[Complex64]>) -> Result<()> {
        if samples.len() != self.n_fft {
            return Err(Error::Config(format!(
                "expected {} samples, got {}",
                self.n_fft,
                samples.len()
            )));
        }
        if let Some(g) = gains {
            if g.len() != self.n_fft {
                return Err(Error::Config(format!(
                    "expected {} channel gains, got {}",
                    self.n_fft,
                    g.len()
                )));
            }
        }
        Ok(())
    }

    /// Real time-domain block before any clipping or bias.
    pub fn unclipped(
        &self,
        frame: &QamFrame,
        variant: OfdmVariant,
        amplitude: f64,
    ) -> Result<Vec<f64>> {
        self.check_frame(frame, variant)?;
        let n = self.n_fft;
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (i, &s) in frame.symbols.iter().enumerate() {
            let k = carrier(variant, i);
            spec[k] = s;
            spec[n - k] = s.conj();
        }
        self.inverse.process(&mut spec);
        let scale = amplitude / (n as f64).sqrt();
        Ok(spec.into_iter().map(|c| c.re * scale).collect())
    }

    /// Odd-subcarrier ACO block, negative half clipped. Samples have variance `amplitude²/2`
    /// before clipping.
    pub fn aco_modulate(&self, frame: &QamFrame, amplitude: f64) -> Result<OfdmSymbol> {
        let time = self.unclipped(frame, OfdmVariant::Aco, amplitude)?;
        Ok(OfdmSymbol {
            n_fft: self.n_fft,
            time_samples: time.into_iter().map(|s| s.max(0.0)).collect(),
            variant: OfdmVariant::Aco,
            dc_bias: 0.0,
        })
    }

    /// Biased DCO block, clipped at zero. Samples have variance `amplitude² (N-2)/N` before bias.
    pub fn dco_modulate(
        &self,
        frame: &QamFrame,
        amplitude: f64,
        dc_bias: f64,
    ) -> Result<OfdmSymbol> {
        let time = self.unclipped(frame, OfdmVariant::Dco, amplitude)?;
        Ok(OfdmSymbol {
            n_fft: self.n_fft,
            time_samples: time.into_iter().map(|s| (s + dc_bias).max(0.0)).collect(),
            variant: OfdmVariant::Dco,
            dc_bias,
        })
    }

    fn spectrum(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut spec: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        self.forward.process(&mut spec);
        let scale = 1.0 / (self.n_fft as f64).sqrt();
        spec.iter_mut().for_each(|c| *c *= scale);
        spec
    }

    /// Equalised data symbols. Odd subcarriers are scaled by `2/amplitude` to undo
    /// the clipping attenuation; `gains` is an optional one-tap zero-forcing equaliser.
    pub fn aco_demodulate(
        &self,
        samples: &[f64],
        m_qam: usize,
        amplitude: f64,
        gains: Option<&[Complex64]>,
    ) -> Result<QamFrame> {
        self.demodulate(samples, m_qam, OfdmVariant::Aco, 2.0 / amplitude, gains)
    }

    /// Equalised data symbols of a DCO block; the bias lands on the unused subcarrier 0.
    pub fn dco_demodulate(
        &self,
        samples: &[f64],
        m_qam: usize,
        amplitude: f64,
        gains: Option<&[Complex64]>,
    ) -> Result<QamFrame> {
        self.demodulate(samples, m_qam, OfdmVariant::Dco, 1.0 / amplitude, gains)
    }

    fn demodulate(
        &self,
        samples: &[f64],
        m_qam: usize,
        variant: OfdmVariant,
        scale: f64,
        gains: Option<&[Complex64]>,
    ) -> Result<QamFrame> {
        GrayQam::new(m_qam)?;
        self.check_samples(samples, gains)?;
        let spec = self.spectrum(samples);
        let symbols = (0..data_subcarriers(variant, self.n_fft))
            .map(|i| {
                let k = carrier(variant, i);
                let z = spec[k] * scale;
                match gains {
                    Some(g) => z / g[k],
                    None => z,
                }
            })
            .collect();
        Ok(QamFrame { m_qam, symbols })
    }
}

/// ACO block with unit amplitude.
pub fn aco_modulate(frame: &QamFrame, n_fft: usize) -> Result<OfdmSymbol> {
    OfdmModem::new(n_fft)?.aco_modulate(frame, 1.0)
}

pub fn aco_demodulate(
    samples: &[f64],
    m_qam: usize,
    gains: Option<&[Complex64]>,
) -> Result<QamFrame> {
    OfdmModem::new(samples.len())?.aco_demodulate(samples, m_qam, 1.0, gains)
}

/// DCO block with unit amplitude.
pub fn dco_modulate(frame: &QamFrame, n_fft: usize, dc_bias: f64) -> Result<OfdmSymbol> {
    OfdmModem::new(n_fft)?.dco_modulate(frame, 1.0, dc_bias)
}

pub fn dco_demodulate(
    samples: &[f64],
    m_qam: usize,
    gains: Option<&[Complex64]>,
) -> Result<QamFrame> {
    OfdmModem::new(samples.len())?.dco_demodulate(samples, m_qam, 1.0, gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(
        rng: &mut impl Rng,
        m: usize,
        variant: OfdmVariant,
        n: usize,
    ) -> (Vec<Bit>, QamFrame) {
        let k = GrayQam::new(m).unwrap().bits_per_symbol() * data_subcarriers(variant, n);
        let bits: Vec<Bit> = (0..k).map(|_| rng.random_range(0..2)).collect();
        let f = qam_map(&bits, m).unwrap();
        (bits, f)
    }

    #[test]
    fn qpsk_convention() {
        let f = qam_map(&[0, 0], 4).unwrap();
        let s = f.symbols()[0];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.re - r).abs() < 1e-15 && (s.im - r).abs() < 1e-15);
        assert!(GrayQam::new(8).is_err());
        assert!(GrayQam::new(2).is_err());
        assert!(matches!(qam_map(&[0, 1, 1], 4), Err(Error::Framing { .. })));
    }

    #[test]
    fn sixteen_qam_energy_and_levels() {
        let c = GrayQam::new(16).unwrap().constellation();
        let energy: f64 = c.iter().map(|s| s.norm_sqr()).sum::<f64>() / 16.0;
        assert!((energy - 1.0).abs() < 1e-12);
        let mut levels: Vec<f64> = c.iter().map(|s| s.re).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let r10 = 10f64.sqrt();
        for (a, b) in levels
            .iter()
            .zip([-3.0 / r10, -1.0 / r10, 1.0 / r10, 3.0 / r10])
        {
            assert!((a - b).abs() < 1e-12);
        }
        // neighbours differ in one bit
        let qam = GrayQam::new(16).unwrap();
        for i in 0..3 {
            let mut a = Vec::new();
            let mut b = Vec::new();
            qam.push_bits(Complex64::new(qam.level(i), 0.0), &mut a);
            qam.push_bits(Complex64::new(qam.level(i + 1), 0.0), &mut b);
            assert_eq!(a.iter().zip(&b).filter(|(x, y)| x != y).count(), 1);
        }
    }

    #[test]
    fn qam_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [4, 16, 64] {
            for _ in 0..10_000 {
                let k = GrayQam::new(m).unwrap().bits_per_symbol() * 3;
                let bits: Vec<Bit> = (0..k).map(|_| rng.random_range(0..2)).collect();
                assert_eq!(
                    qam_slice(qam_map(&bits, m).unwrap().symbols(), m).unwrap(),
                    bits
                );
            }
        }
    }

    #[test]
    fn aco_zero_and_antisymmetry() {
        let modem = OfdmModem::new(16).unwrap();
        let zero = QamFrame::new(16, vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(modem
            .aco_modulate(&zero, 1.0)
            .unwrap()
            .time_samples
            .iter()
            .all(|&s| s == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, f) = random_frame(&mut rng, 16, OfdmVariant::Aco, 16);
        let t = modem.unclipped(&f, OfdmVariant::Aco, 1.0).unwrap();
        for k in 0..8 {
            assert!((t[k] + t[k + 8]).abs() < 1e-12);
        }
        assert!(modem
            .aco_modulate(&QamFrame::new(16, vec![]).unwrap(), 1.0)
            .is_err());
    }

    #[test]
    fn aco_roundtrip_through_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [16, 64, 128] {
            let modem = OfdmModem::new(n).unwrap();
            let (bits, f) = random_frame(&mut rng, 16, OfdmVariant::Aco, n);
            let sym = modem.aco_modulate(&f, 0.7).unwrap();
            assert!(sym.time_samples.iter().all(|&s| s >= 0.0));
            let back = modem
                .aco_demodulate(&sym.time_samples, 16, 0.7, None)
                .unwrap();
            for (a, b) in back.symbols().iter().zip(f.symbols()) {
                assert!((a - b).norm() < 1e-10);
            }
            assert_eq!(qam_slice(back.symbols(), 16).unwrap(), bits);
        }
    }

    #[test]
    fn dco_zero_roundtrip_and_parseval() {
        let modem = OfdmModem::new(32).unwrap();
        let zero = QamFrame::new(4, vec![Complex64::new(0.0, 0.0); 15]).unwrap();
        assert!(modem
            .dco_modulate(&zero, 1.0, 0.25)
            .unwrap()
            .time_samples
            .iter()
            .all(|&s| (s - 0.25).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (bits, f) = random_frame(&mut rng, 4, OfdmVariant::Dco, 32);
        let t = modem.unclipped(&f, OfdmVariant::Dco, 1.0).unwrap();
        let time_power: f64 = t.iter().map(|s| s * s).sum();
        let freq_power: f64 = 2.0 * f.symbols().iter().map(|s| s.norm_sqr()).sum::<f64>();
        assert!((time_power - freq_power).abs() < 1e-9);
        let sym = modem.dco_modulate(&f, 1.0, 10.0).unwrap();
        let back = modem
            .dco_demodulate(&sym.time_samples, 4, 1.0, None)
            .unwrap();
        for (a, b) in back.symbols().iter().zip(f.symbols()) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_eq!(qam_slice(back.symbols(), 4).unwrap(), bits);
    }

    #[test]
    fn one_tap_equaliser_inverts_cyclic_channel() {
        let n = 64;
        let taps = [0.5, 0.3, 0.2];
        let gains = frequency_response(&taps, n);
        let modem = OfdmModem::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (bits, f) = random_frame(&mut rng, 16, OfdmVariant::Aco, n);
        let x = modem.aco_modulate(&f, 1.0).unwrap().time_samples;
        let y: Vec<f64> = (0..n)
            .map(|i| {
                taps.iter()
                    .enumerate()
                    .map(|(l, h)| h * x[(i + n - l) % n])
                    .sum()
            })
            .collect();
        let back = modem.aco_demodulate(&y, 16, 1.0, Some(&gains)).unwrap();
        assert_eq!(qam_slice(back.symbols(), 16).unwrap(), bits);
    }

    #[test]
    fn aco_samples_are_gaussian_like() {
        let n = 1024;
        let modem = OfdmModem::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut m2, mut m4, mut count) = (0.0, 0.0, 0.0);
        for _ in 0..10_000 {
            let (_, f) = random_frame(&mut rng, 16, OfdmVariant::Aco, n);
            for s in modem.unclipped(&f, OfdmVariant::Aco, 1.0).unwrap() {
                m2 += s * s;
                m4 += s.powi(4);
                count += 1.0;
            }
        }
        let var = m2 / count;
        let kurtosis = m4 / count / (var * var);
        assert!((var - 0.5).abs() < 0.01);
        assert!((2.5..=3.5).contains(&kurtosis), "kurtosis {kurtosis}");
    }
}
