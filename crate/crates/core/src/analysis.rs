//! Closed-form link results: chip amplitude distributions, clipping noise,
//! analytical error rates, DC-reduction energy efficiency and achievable SNR.
//!
//! Noise variances passed to this module are variances. Under the link's
//! convention that the quoted noise figure is a standard deviation, callers
//! pass its square.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hadamard::BinaryHadamard;
use crate::hcm::{dcr_reduce, hcm_encode, PamFrame};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Points in the average-power scan of [`SnrModel::scan`].
pub const SNR_GRID_POINTS: usize = 200;

/// Lowest scanned power as a fraction of the peak.
pub const SNR_GRID_FLOOR: f64 = 1e-3;

/// Largest `M^(N-1)` enumerated by [`dcr_energy_efficiency_exhaustive`].
pub const MAX_EXHAUSTIVE_FRAMES: u64 = 1 << 24;

fn check_order(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Config(format!(
            "alphabet size {m} must be at least 2"
        )));
    }
    Ok(())
}

/// Coefficients of `(1 + x + … + x^(m-1))^n`, exact.
pub fn extended_binomial(m: usize, n: usize) -> Result<Vec<BigUint>> {
    check_order(m)?;
    let mut row = vec![BigUint::from(1u32)];
    for _ in 0..n {
        let mut next = vec![BigUint::ZERO; row.len() + m - 1];
        let mut window = BigUint::ZERO;
        for (k, slot) in next.iter_mut().enumerate() {
            if k < row.len() {
                window += &row[k];
            }
            if k >= m && k - m < row.len() {
                window -= &row[k - m];
            }
            *slot = window.clone();
        }
        row = next;
    }
    Ok(row)
}

/// Fixed-width variant of [`extended_binomial`].
pub fn extended_binomial_u128(m: usize, n: usize) -> Result<Vec<u128>> {
    check_order(m)?;
    let overflow = || Error::Overflow(format!("extended binomial row ({m}, {n}) exceeds 128 bits"));
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![0u128; row.len() + m - 1];
        let mut window = 0u128;
        for (k, slot) in next.iter_mut().enumerate() {
            if k < row.len() {
                window = window.checked_add(row[k]).ok_or_else(overflow)?;
            }
            if k >= m && k - m < row.len() {
                window -= row[k - m];
            }
            *slot = window;
        }
        row = next;
    }
    Ok(row)
}

/// Distribution of a chip amplitude on the grid `k/(m-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudePmf {
    m: usize,
    probs: Vec<f64>,
}

impl AmplitudePmf {
    /// Sum of `codes` independent uniform `{0, 1/(m-1), …, 1}` variables:
    /// `Pr(k/(m-1)) = C(m, codes, k) / m^codes`.
    pub fn extended_binomial(m: usize, codes: usize) -> Result<Self> {
        check_order(m)?;
        let w = 1.0 / m as f64;
        let mut probs = vec![1.0];
        for _ in 0..codes {
            let mut next = vec![0.0; probs.len() + m - 1];
            for (k, &p) in probs.iter().enumerate() {
                for slot in &mut next[k..k + m] {
                    *slot += p * w;
                }
            }
            probs = next;
        }
        Ok(Self { m, probs })
    }

    /// Normalised histogram counts; `counts[k]` belongs to amplitude `k/(m-1)`.
    pub fn from_counts(m: usize, counts: &[u64]) -> Result<Self> {
        check_order(m)?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Config("histogram is empty".into()));
        }
        let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        Ok(Self { m, probs })
    }

    /// Histogram of grid-valued amplitudes.
    pub fn from_samples(m: usize, samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        check_order(m)?;
        let mut counts: Vec<u64> = Vec::new();
        for s in samples {
            let k = (s * (m - 1) as f64).round();
            if !(k >= 0.0) {
                return Err(Error::Domain(format!("amplitude {s} is negative")));
            }
            let k = k as usize;
            if k >= counts.len() {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        Self::from_counts(m, &counts)
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> Vec<f64> {
        (0..self.probs.len()).map(|k| self.amplitude(k)).collect()
    }

    pub fn amplitude(&self, k: usize) -> f64 {
        k as f64 / (self.m - 1) as f64
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitude(self.probs.len() - 1)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| self.amplitude(k) * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| (self.amplitude(k) - mu).powi(2) * p)
            .sum()
    }

    /// Total-variation distance; both pmfs must share the grid.
    pub fn total_variation(&self, other: &AmplitudePmf) -> Result<f64> {
        if self.m != other.m {
            return Err(Error::Config(format!(
                "grids differ: m = {} vs {}",
                self.m, other.m
            )));
        }
        let len = self.probs.len().max(other.probs.len());
        let at = |p: &[f64], k: usize| p.get(k).copied().unwrap_or(0.0);
        Ok(0.5
            * (0..len)
                .map(|k| (at(&self.probs, k) - at(&other.probs, k)).abs())
                .sum::<f64>())
    }
}

/// Chip distribution of the HCM encoder. Chip `x_n` counts agreements between
/// row `n` and the `N - 1` data codes, so it follows the extended binomial law
/// over `N - 1` codes.
pub fn hcm_amplitude_pmf(n: usize, m: usize) -> Result<AmplitudePmf> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Size(format!(
            "symbol length {n} must be a power of two >= 2"
        )));
    }
    AmplitudePmf::extended_binomial(m, n - 1)
}

/// Mean squared distortion of the peak limiter on chips scaled by `P/N`.
pub fn clipping_variance_discrete(pmf: &AmplitudePmf, p: f64, n: usize, p_max: f64) -> f64 {
    let scale = p / n as f64;
    pmf.probs
        .iter()
        .enumerate()
        .map(|(k, &prob)| {
            let excess = pmf.amplitude(k) * scale - p_max;
            if excess > 0.0 {
                excess * excess * prob
            } else {
                0.0
            }
        })
        .sum()
}

/// Gaussian tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `E[(Z - t)²; Z > t]` for standard normal `Z`.
fn tail_second_moment(t: f64) -> f64 {
    if t == f64::INFINITY {
        return 0.0;
    }
    (1.0 + t * t) * q_function(t) - t * phi(t)
}

/// `∫_{-∞}^0 x² f(x) dx` for `X ~ N(mean, variance)`.
pub fn gaussian_clip_lower(mean: f64, variance: f64) -> f64 {
    let sigma = variance.sqrt();
    variance * tail_second_moment(mean / sigma)
}

/// `∫_{p_max}^∞ (x - p_max)² f(x) dx` for `X ~ N(mean, variance)`.
pub fn gaussian_clip_upper(mean: f64, variance: f64, p_max: f64) -> f64 {
    let sigma = variance.sqrt();
    variance * tail_second_moment((p_max - mean) / sigma)
}

/// Clipping distortion of a Gaussian signal limited to `[0, p_max]`.
/// `p_max` may be infinite.
pub fn clipping_variance_gaussian(mean: f64, variance: f64, p_max: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::Domain(format!(
            "variance must be positive, got {variance}"
        )));
    }
    Ok(gaussian_clip_lower(mean, variance) + gaussian_clip_upper(mean, variance, p_max))
}

/// `E[max(X, 0)]` for `X ~ N(mean, sigma²)`.
pub fn gaussian_positive_mean(mean: f64, sigma: f64) -> f64 {
    let t = mean / sigma;
    mean * (1.0 - q_function(t)) + sigma * phi(t)
}

/// Squared Q-argument of the HCM error-rate approximation,
/// `3/(γ(M²-1)) · (P²/N) / (σ² + σ²_clip)`.
pub fn hcm_snr(m: usize, n: usize, p: f64, noise_var: f64, clip_var: f64, gamma: f64) -> f64 {
    let mm = m as f64;
    3.0 / (gamma * (mm * mm - 1.0)) * (p * p / n as f64) / (noise_var + clip_var)
}

/// HCM bit error rate approximation
/// `(M-1)/(M log2 M) · Q(√(3/(γ(M²-1)) · (P²/N)/(σ² + σ²_clip)))`.
pub fn hcm_analytical_ber(
    m: usize,
    n: usize,
    p: f64,
    noise_var: f64,
    clip_var: f64,
    gamma: f64,
) -> f64 {
    pam_prefactor(m) * q_function(hcm_snr(m, n, p, noise_var, clip_var, gamma).sqrt())
}

fn pam_prefactor(m: usize) -> f64 {
    (m - 1) as f64 / (m as f64 * (m as f64).log2())
}

/// Nearest-neighbour Gray bit error rate of the HCM receiver itself.
///
/// The decoded data entries see noise of variance `noise_var_total / N` and
/// adjacent levels sit `P/(N(M-1))` apart, which gives
/// `2(M-1)/(M log2 M) · Q(P / (2(M-1)√(N · noise_var_total)))`.
pub fn hcm_receiver_ber(m: usize, n: usize, p: f64, noise_var_total: f64) -> f64 {
    let arg = p / (2.0 * (m - 1) as f64 * (n as f64 * noise_var_total).sqrt());
    2.0 * pam_prefactor(m) * q_function(arg)
}

/// Gray square-QAM bit error rate for a squared Q-argument `3 Es/((M-1) N0)`.
pub fn qam_ber_from_q_arg2(m_qam: usize, q_arg2: f64) -> f64 {
    let mm = m_qam as f64;
    4.0 / mm.log2() * (1.0 - 1.0 / mm.sqrt()) * q_function(q_arg2.sqrt())
}

/// Squared Q-argument of ACO-OFDM with pre-clip sample deviation `sigma_t`.
/// Only the peak limiter distorts the odd subcarriers.
pub fn aco_q_arg2(m_qam: usize, sigma_t: f64, p_max: f64, noise_var_total: f64) -> f64 {
    let clip = gaussian_clip_upper(0.0, sigma_t * sigma_t, p_max);
    3.0 / (m_qam - 1) as f64 * (sigma_t * sigma_t / 2.0) / (noise_var_total + clip)
}

/// Squared Q-argument of DCO-OFDM with pre-bias deviation `sigma_t` and bias `bias`.
pub fn dco_q_arg2(
    m_qam: usize,
    n_fft: usize,
    sigma_t: f64,
    bias: f64,
    p_max: f64,
    noise_var_total: f64,
) -> f64 {
    let var = sigma_t * sigma_t;
    let clip = gaussian_clip_lower(bias, var) + gaussian_clip_upper(bias, var, p_max);
    let alpha2 = var * n_fft as f64 / (n_fft - 2) as f64;
    3.0 / (m_qam - 1) as f64 * alpha2 / (noise_var_total + clip)
}

/// DCO deviation that maximises the subcarrier SNR at bias `p_max/2`.
pub fn dco_optimal_sigma(m_qam: usize, n_fft: usize, p_max: f64, noise_var_total: f64) -> f64 {
    let f = |ls: f64| -dco_q_arg2(m_qam, n_fft, ls.exp(), p_max / 2.0, p_max, noise_var_total);
    golden_section(f, (p_max * 1e-4).ln(), p_max.ln(), 1e-10).exp()
}

/// Minimum of a unimodal function on `[a, b]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Monte-Carlo statistics of DC-reduced HCM symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DcrStatistics {
    /// Mean chip amplitude before reduction.
    pub mean_chip: f64,
    /// Mean of the per-symbol minimum.
    pub mean_min: f64,
    /// `mean_chip / (mean_chip - mean_min)`.
    pub eta: f64,
    /// Chip distribution after reduction.
    pub pmf: AmplitudePmf,
}

fn random_frame<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> PamFrame {
    let idx: Vec<usize> = (0..n)
        .map(|i| if i == 0 { 0 } else { rng.random_range(0..m) })
        .collect();
    PamFrame::from_indices(m, &idx).expect("indices are in range")
}

pub fn dcr_statistics<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    trials: usize,
    rng: &mut R,
) -> Result<DcrStatistics> {
    let h = BinaryHadamard::with_order(n)?;
    if trials == 0 {
        return Err(Error::Config("at least one trial is needed".into()));
    }
    let (mut sum_chip, mut sum_min) = (0.0, 0.0);
    let mut counts = vec![0u64; n * (m - 1) + 1];
    for _ in 0..trials {
        let x = hcm_encode(&random_frame(rng, m, n), &h)?;
        sum_chip += x.mean();
        let r = dcr_reduce(&x)?;
        sum_min += r.removed_dc();
        for &c in r.chips() {
            counts[(c * (m - 1) as f64).round() as usize] += 1;
        }
    }
    let mean_chip = sum_chip / trials as f64;
    let mean_min = sum_min / trials as f64;
    Ok(DcrStatistics {
        mean_chip,
        mean_min,
        eta: mean_chip / (mean_chip - mean_min),
        pmf: AmplitudePmf::from_counts(m, &counts)?,
    })
}

/// Monte-Carlo estimate of `η = E{x_n} / (E{x_n} - E{min x})`.
pub fn dcr_energy_efficiency<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if trials < 10_000 {
        return Err(Error::Config(format!(
            "energy efficiency needs at least 10000 trials, got {trials}"
        )));
    }
    Ok(dcr_statistics(n, m, trials, rng)?.eta)
}

/// Exact `η` by enumerating every frame.
pub fn dcr_energy_efficiency_exhaustive(n: usize, m: usize) -> Result<f64> {
    let h = BinaryHadamard::with_order(n)?;
    check_order(m)?;
    let frames = (m as u64)
        .checked_pow((n - 1) as u32)
        .filter(|&f| f <= MAX_EXHAUSTIVE_FRAMES);
    let Some(frames) = frames else {
        return Err(Error::Config(format!(
            "{m}^{} frames is too many to enumerate",
            n - 1
        )));
    };
    let (mut sum_chip, mut sum_min) = (0.0, 0.0);
    let mut idx = vec![0usize; n];
    for mut word in 0..frames {
        for slot in idx.iter_mut().skip(1) {
            *slot = (word % m as u64) as usize;
            word /= m as u64;
        }
        let x = hcm_encode(&PamFrame::from_indices(m, &idx)?, &h)?;
        sum_chip += x.mean();
        sum_min += x.min();
    }
    Ok(sum_chip / (sum_chip - sum_min))
}

/// Modulation families compared on the achievable-SNR axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Hcm { m: usize },
    DcrHcm { m: usize },
    Aco { m_qam: usize },
    Dco { m_qam: usize },
}

impl Modulation {
    /// Bits per sample at block size `n`.
    pub fn spectral_efficiency(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Modulation::Hcm { m } | Modulation::DcrHcm { m } => (nf - 1.0) * (m as f64).log2() / nf,
            Modulation::Aco { m_qam } => (m_qam as f64).log2() / 4.0,
            Modulation::Dco { m_qam } => (nf / 2.0 - 1.0) * (m_qam as f64).log2() / nf,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Modulation::Hcm { m } => format!("hcm-{m}pam"),
            Modulation::DcrHcm { m } => format!("dcr-hcm-{m}pam"),
            Modulation::Aco { m_qam } => format!("aco-ofdm-{m_qam}qam"),
            Modulation::Dco { m_qam } => format!("dco-ofdm-{m_qam}qam"),
        }
    }
}

/// Link parameters for the achievable-SNR analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSetup {
    pub n: usize,
    pub p_max: f64,
    /// Quoted noise figure, used as a per-sample standard deviation.
    pub sigma2_n: f64,
    pub gamma: f64,
    /// Symbols used to estimate the DC-reduced chip distribution.
    pub dcr_trials: usize,
    pub seed: u64,
}

/// Best operating point of one modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrPoint {
    pub modulation: Modulation,
    pub spectral_efficiency: f64,
    /// Linear squared Q-argument at the optimum.
    pub max_snr: f64,
    /// Average optical power at the optimum.
    pub optimum_power: f64,
}

impl SnrPoint {
    pub fn max_snr_db(&self) -> f64 {
        10.0 * self.max_snr.log10()
    }
}

/// Analytical SNR and BER of one modulation as a function of its operating
/// point. HCM, DCR-HCM and ACO are parameterised by average optical power;
/// DCO by the pre-bias sample deviation at bias `p_max/2`.
#[derive(Debug, Clone)]
pub struct SnrModel {
    modulation: Modulation,
    n: usize,
    p_max: f64,
    noise_var: f64,
    gamma: f64,
    pmf: AmplitudePmf,
    eta: f64,
}

impl SnrModel {
    pub fn new(modulation: Modulation, setup: &SnrSetup) -> Result<Self> {
        if !(setup.p_max > 0.0) || !(setup.sigma2_n > 0.0) || !(setup.gamma >= 1.0) {
            return Err(Error::Config(
                "p_max and the noise level must be positive and gamma >= 1".into(),
            ));
        }
        let (pmf, eta) = match modulation {
            Modulation::Hcm { m } => (hcm_amplitude_pmf(setup.n, m)?, 1.0),
            Modulation::DcrHcm { m } => {
                let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
                let stats = dcr_statistics(setup.n, m, setup.dcr_trials, &mut rng)?;
                (stats.pmf, stats.eta)
            }
            Modulation::Aco { m_qam } | Modulation::Dco { m_qam } => {
                crate::ofdm::GrayQam::new(m_qam)?;
                (
                    AmplitudePmf {
                        m: 2,
                        probs: vec![1.0],
                    },
                    1.0,
                )
            }
        };
        Ok(Self {
            modulation,
            n: setup.n,
            p_max: setup.p_max,
            noise_var: setup.sigma2_n * setup.sigma2_n,
            gamma: setup.gamma,
            pmf,
            eta,
        })
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// DC-reduction energy efficiency used for the DCR drive (1 otherwise).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Peak drive `P` for an average power (HCM `2·avg`, DCR-HCM `2η·avg`).
    pub fn hcm_drive(&self, avg_power: f64) -> f64 {
        2.0 * self.eta * avg_power
    }

    /// Average optical power at an operating point.
    pub fn average_power(&self, x: f64) -> f64 {
        match self.modulation {
            Modulation::Dco { .. } => self.p_max / 2.0,
            _ => x,
        }
    }

    /// Squared Q-argument at an operating point.
    pub fn snr(&self, x: f64) -> f64 {
        let total = self.noise_var * self.gamma;
        match self.modulation {
            Modulation::Hcm { m } | Modulation::DcrHcm { m } => {
                let p = self.hcm_drive(x);
                let clip = clipping_variance_discrete(&self.pmf, p, self.n, self.p_max);
                hcm_snr(m, self.n, p, self.noise_var, clip, self.gamma)
            }
            Modulation::Aco { m_qam } => aco_q_arg2(
                m_qam,
                x * (2.0 * std::f64::consts::PI).sqrt(),
                self.p_max,
                total,
            ),
            Modulation::Dco { m_qam } => {
                dco_q_arg2(m_qam, self.n, x, self.p_max / 2.0, self.p_max, total)
            }
        }
    }

    pub fn ber(&self, x: f64) -> f64 {
        let s = self.snr(x);
        match self.modulation {
            Modulation::Hcm { m } | Modulation::DcrHcm { m } => {
                pam_prefactor(m) * q_function(s.sqrt())
            }
            Modulation::Aco { m_qam } | Modulation::Dco { m_qam } => qam_ber_from_q_arg2(m_qam, s),
        }
    }

    /// Log-spaced operating points on `[1e-3 p_max, p_max]`.
    pub fn grid(&self) -> Vec<f64> {
        let lo = (SNR_GRID_FLOOR * self.p_max).ln();
        let hi = self.p_max.ln();
        (0..SNR_GRID_POINTS)
            .map(|i| (lo + (hi - lo) * i as f64 / (SNR_GRID_POINTS - 1) as f64).exp())
            .collect()
    }

    /// Grid maximum of [`snr`](Self::snr).
    pub fn scan(&self) -> SnrPoint {
        let (x, s) = self.grid().into_iter().map(|x| (x, self.snr(x))).fold(
            (f64::NAN, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );
        SnrPoint {
            modulation: self.modulation,
            spectral_efficiency: self.modulation.spectral_efficiency(self.n),
            max_snr: s,
            optimum_power: self.average_power(x),
        }
    }
}

/// Maximum achievable SNR of one modulation.
pub fn achievable_snr(modulation: Modulation, setup: &SnrSetup) -> Result<SnrPoint> {
    Ok(SnrModel::new(modulation, setup)?.scan())
}
