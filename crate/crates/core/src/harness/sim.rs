//! Monte-Carlo BER engine.
//!
//! Symbols run in fixed-size batches; within a batch they are processed in
//! parallel, each with its own RNG stream, and error counts are summed as
//! integers. The stopping rule is checked only between batches, so the
//! number of symbols and errors is identical for any thread count.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{
    aco_q_arg2, clipping_variance_discrete, dco_q_arg2, dcr_statistics, hcm_amplitude_pmf,
    hcm_analytical_ber, qam_ber_from_q_arg2, AmplitudePmf, Modulation, SnrModel, SnrSetup,
};
use crate::channel::{propagate, ChannelTaps, LinkConfig};
use crate::equalization::{
    channel_matrix, interleaver_search, mmse_estimate, mmse_weights, ChannelMatrix, MmseWeights,
};
use crate::error::{Error, Result};
use crate::hadamard::BinaryHadamard;
use crate::hcm::{
    add_cyclic_prefix, bits_per_symbol, dcr_reduce, deframe, deinterleave, frame, hcm_decode,
    hcm_encode, interleave, pam_map, pam_slice,
};
use crate::ofdm::{
    data_subcarriers, frequency_response, qam_map, qam_slice, GrayQam, OfdmModem, OfdmVariant,
};
use crate::pam::Bit;
use crate::permutation::Permutation;

use super::config::{Equalizer, ExperimentConfig, InterleaverChoice, SchemeConfig, SchemeKind};
use super::drive::{average_power_to_drive, dco_sigma, Calibration, Drive};
use super::rng::{stream, CALIBRATION_POINT, SETUP_POINT};

/// Symbols per batch between stopping-rule checks.
pub const BATCH_SYMBOLS: u64 = 512;
/// OFDM blocks drawn for drive calibration.
pub const CALIBRATION_BLOCKS: u64 = 4096;

pub const BER_HEADER: [&str; 10] = [
    "scheme",
    "avg_power_w",
    "drive_w",
    "dc_bias_w",
    "symbols_run",
    "bits_per_symbol",
    "bit_errors",
    "ber",
    "ci_95",
    "analytical_ber",
];

/// One point of a BER curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: String,
    pub avg_power_w: f64,
    /// HCM peak `P`, or the pre-clip sample deviation of OFDM.
    pub drive_w: f64,
    pub dc_bias_w: f64,
    pub symbols_run: u64,
    pub bits_per_symbol: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci_95: f64,
    /// Absent on dispersive channels.
    pub analytical_ber: Option<f64>,
}

impl BerRecord {
    pub fn bits(&self) -> u64 {
        self.symbols_run * self.bits_per_symbol
    }
}

/// Half-width of the normal-approximation 95% interval; `3/bits` when no
/// error was seen.
pub fn binomial_ci95(errors: u64, bits: u64) -> f64 {
    if bits == 0 {
        return f64::NAN;
    }
    let n = bits as f64;
    if errors == 0 {
        return 3.0 / n;
    }
    let p = errors as f64 / n;
    1.96 * (p * (1.0 - p) / n).sqrt()
}

pub const ANALYTIC_HEADER: [&str; 6] = [
    "scheme",
    "avg_power_w",
    "drive_w",
    "dc_bias_w",
    "snr_db",
    "analytical_ber",
];

/// Analytical point without simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticRecord {
    pub scheme: String,
    pub avg_power_w: f64,
    pub drive_w: f64,
    pub dc_bias_w: f64,
    pub snr_db: Option<f64>,
    pub analytical_ber: Option<f64>,
}

pub const SNR_HEADER: [&str; 4] = [
    "scheme",
    "spectral_efficiency",
    "max_snr_db",
    "optimum_avg_power_w",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrRecord {
    pub scheme: String,
    pub spectral_efficiency: f64,
    pub max_snr_db: f64,
    pub optimum_avg_power_w: f64,
}

/// Writes a header and rows; an empty row set gives a header-only file.
pub fn write_csv<T: Serialize, W: Write>(header: &[&str], rows: &[T], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: "<csv output>".into(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })
}

struct Prepared {
    cfg: SchemeConfig,
    label: String,
    hadamard: Option<BinaryHadamard>,
    modem: Option<OfdmModem>,
    pi: Permutation,
    g: ChannelMatrix,
    gains: Option<Vec<Complex64>>,
    cal: Calibration,
    pmf: Option<AmplitudePmf>,
}

impl Prepared {
    fn bits_per_symbol(&self, n: usize) -> usize {
        match self.cfg.kind {
            SchemeKind::Hcm | SchemeKind::DcrHcm => bits_per_symbol(n, self.cfg.m),
            SchemeKind::AcoOfdm => {
                data_subcarriers(OfdmVariant::Aco, n)
                    * GrayQam::new(self.cfg.m)
                        .expect("validated")
                        .bits_per_symbol()
            }
            SchemeKind::DcoOfdm => {
                data_subcarriers(OfdmVariant::Dco, n)
                    * GrayQam::new(self.cfg.m)
                        .expect("validated")
                        .bits_per_symbol()
            }
        }
    }
}

/// Lane of streams shared by all schemes of the same kind and order.
fn setup_lane(kind: SchemeKind, m: usize) -> u64 {
    ((kind as u64) << 32) | m as u64
}

/// A validated experiment with interleavers, DC-reduction statistics and
/// drive calibration prepared.
pub struct Simulation {
    cfg: ExperimentConfig,
    taps: ChannelTaps,
    schemes: Vec<Prepared>,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("config", &self.cfg)
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let taps = cfg.channel_taps()?;
        let n = cfg.n;
        let g = channel_matrix(taps.as_slice(), n)?;
        let dispersive = taps.len() > 1;
        let noise_total = cfg.sigma2_n * cfg.sigma2_n * cfg.gamma;
        let mut schemes = Vec::with_capacity(cfg.schemes.len());
        for (lane, sc) in cfg.schemes.iter().enumerate() {
            let lane = lane as u64;
            let shared = setup_lane(sc.kind, sc.m);
            let mut cal = Calibration {
                eta: 1.0,
                ..Default::default()
            };
            let (mut hadamard, mut modem, mut pmf, mut gains) = (None, None, None, None);
            let mut pi = Permutation::identity(n);
            if sc.kind.is_hcm() {
                let h = BinaryHadamard::with_order(n)?;
                pi = match &sc.interleaver {
                    InterleaverChoice::Identity => Permutation::identity(n),
                    InterleaverChoice::Search => {
                        let pi = interleaver_search(
                            &g,
                            &h,
                            sc.interleaver_budget,
                            &mut stream(cfg.master_seed, lane, SETUP_POINT, 0),
                        )?;
                        log::info!("{}: interleaver search finished", sc.label());
                        pi
                    }
                    InterleaverChoice::File(path) => {
                        let pi = Permutation::load(path)?;
                        if pi.len() != n {
                            return Err(Error::Config(format!(
                                "{}: interleaver has length {}, expected {n}",
                                path.display(),
                                pi.len()
                            )));
                        }
                        pi
                    }
                };
                if sc.kind == SchemeKind::DcrHcm {
                    let stats = dcr_statistics(
                        n,
                        sc.m,
                        cfg.dcr_trials,
                        &mut stream(cfg.master_seed, shared, SETUP_POINT, 1),
                    )?;
                    log::info!("{}: eta = {:.4}", sc.label(), stats.eta);
                    cal.eta = stats.eta;
                    pmf = Some(stats.pmf);
                } else {
                    pmf = Some(hcm_amplitude_pmf(n, sc.m)?);
                }
                hadamard = Some(h);
            } else {
                let md = OfdmModem::new(n)?;
                let variant = if sc.kind == SchemeKind::AcoOfdm {
                    OfdmVariant::Aco
                } else {
                    OfdmVariant::Dco
                };
                let qam = GrayQam::new(sc.m)?;
                let k = data_subcarriers(variant, n) * qam.bits_per_symbol();
                let mut samples = Vec::with_capacity(CALIBRATION_BLOCKS as usize * n);
                for j in 0..CALIBRATION_BLOCKS {
                    let mut rng = stream(cfg.master_seed, shared, CALIBRATION_POINT, j);
                    let f = qam_map(&random_bits(&mut rng, k), sc.m)?;
                    samples.extend(md.unclipped(&f, variant, 1.0)?);
                }
                cal.samples = samples;
                if sc.kind == SchemeKind::DcoOfdm {
                    cal.dco_sigma = dco_sigma(sc.m, n, cfg.p_max, noise_total);
                }
                if sc.equalizer == Equalizer::OneTap {
                    gains = Some(frequency_response(taps.as_slice(), n));
                } else if dispersive {
                    log::warn!("{}: dispersive channel without equalisation", sc.label());
                }
                modem = Some(md);
            }
            schemes.push(Prepared {
                label: sc.label(),
                cfg: sc.clone(),
                hadamard,
                modem,
                pi,
                g: g.clone(),
                gains,
                cal,
                pmf,
            });
        }
        Ok(Self { cfg, taps, schemes })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn scheme_labels(&self) -> Vec<String> {
        self.schemes.iter().map(|s| s.label.clone()).collect()
    }

    /// Interleaver in use by scheme `index`.
    pub fn interleaver(&self, index: usize) -> &Permutation {
        &self.schemes[index].pi
    }

    /// DC-reduction energy efficiency used for the drive of scheme `index`.
    pub fn eta(&self, index: usize) -> f64 {
        self.schemes[index].cal.eta
    }

    fn scheme(&self, index: usize) -> Result<&Prepared> {
        self.schemes
            .get(index)
            .ok_or_else(|| Error::Config(format!("no scheme with index {index}")))
    }

    pub fn drive(&self, index: usize, avg_power: f64) -> Result<Drive> {
        let s = self.scheme(index)?;
        average_power_to_drive(s.cfg.kind, self.cfg.n, avg_power, self.cfg.p_max, &s.cal)
    }

    fn link(&self, p: f64) -> LinkConfig {
        LinkConfig {
            p,
            p_max: self.cfg.p_max,
            sigma2_n: self.cfg.sigma2_n,
            gamma: self.cfg.gamma,
            taps: self.taps.clone(),
            cp_len: self.cfg.cp_len,
        }
    }

    fn weights(
        &self,
        s: &Prepared,
        drive: &Drive,
        link: &LinkConfig,
    ) -> Result<Option<MmseWeights>> {
        if s.cfg.equalizer != Equalizer::Mmse {
            return Ok(None);
        }
        let h = s.hadamard.as_ref().expect("HCM scheme");
        Ok(Some(mmse_weights(
            h,
            &s.pi,
            &s.g,
            drive.p,
            link.noise_variance(),
            s.cfg.m,
        )?))
    }

    /// Analytical BER on a non-dispersive channel.
    pub fn analytical_ber(&self, index: usize, drive: &Drive) -> Result<Option<f64>> {
        let s = self.scheme(index)?;
        Ok(self.analytical_snr_ber(s, drive).map(|(_, b)| b))
    }

    fn analytical_snr_ber(&self, s: &Prepared, d: &Drive) -> Option<(f64, f64)> {
        if self.taps.len() > 1 {
            return None;
        }
        let c = &self.cfg;
        let var = c.sigma2_n * c.sigma2_n;
        let m = s.cfg.m;
        let (q2, ber) = match s.cfg.kind {
            SchemeKind::Hcm | SchemeKind::DcrHcm => {
                let clip = clipping_variance_discrete(s.pmf.as_ref()?, d.p, c.n, c.p_max);
                if var + clip == 0.0 {
                    return Some((f64::INFINITY, 0.0));
                }
                let ber = hcm_analytical_ber(m, c.n, d.p, var, clip, c.gamma);
                (
                    crate::analysis::hcm_snr(m, c.n, d.p, var, clip, c.gamma),
                    ber,
                )
            }
            SchemeKind::AcoOfdm => {
                let q2 = aco_q_arg2(m, d.sigma_t, c.p_max, var * c.gamma);
                (q2, qam_ber_from_q_arg2(m, q2))
            }
            SchemeKind::DcoOfdm => {
                let q2 = dco_q_arg2(m, c.n, d.sigma_t, d.dc_bias, c.p_max, var * c.gamma);
                (q2, qam_ber_from_q_arg2(m, q2))
            }
        };
        Some((q2, ber))
    }

    /// Bit errors of one symbol.
    fn run_symbol<R: Rng>(
        &self,
        s: &Prepared,
        d: &Drive,
        w: Option<&MmseWeights>,
        link: &LinkConfig,
        bits_len: usize,
        rng: &mut R,
    ) -> Result<u64> {
        let n = self.cfg.n;
        let cp = self.cfg.cp_len;
        let bits = random_bits(rng, bits_len);
        let out: Vec<Bit> = match s.cfg.kind {
            SchemeKind::Hcm | SchemeKind::DcrHcm => {
                let h = s.hadamard.as_ref().expect("HCM scheme");
                let mut x = hcm_encode(&pam_map(&bits, s.cfg.m, n)?, h)?;
                if s.cfg.kind == SchemeKind::DcrHcm {
                    x = dcr_reduce(&x)?;
                }
                let interleaved = !s.pi.is_identity();
                if interleaved {
                    x = interleave(&x, &s.pi)?;
                }
                let y = propagate(frame(&x, d.p, cp)?.samples(), link, rng)?;
                let mut r = deframe(&y, cp)?;
                if interleaved {
                    r = deinterleave(&r, &s.pi)?;
                }
                let v = hcm_decode(&r, d.p, h)?;
                match w {
                    Some(w) => mmse_estimate(w, &v)?.1,
                    None => pam_slice(&v, s.cfg.m, d.p)?.1,
                }
            }
            SchemeKind::AcoOfdm | SchemeKind::DcoOfdm => {
                let md = s.modem.as_ref().expect("OFDM scheme");
                let f = qam_map(&bits, s.cfg.m)?;
                let sym = if s.cfg.kind == SchemeKind::AcoOfdm {
                    md.aco_modulate(&f, d.amplitude)?
                } else {
                    md.dco_modulate(&f, d.amplitude, d.dc_bias)?
                };
                let y = propagate(&add_cyclic_prefix(&sym.time_samples, cp)?, link, rng)?;
                let r = deframe(&y, cp)?;
                let gains = s.gains.as_deref();
                let est = if s.cfg.kind == SchemeKind::AcoOfdm {
                    md.aco_demodulate(&r, s.cfg.m, d.amplitude, gains)?
                } else {
                    md.dco_demodulate(&r, s.cfg.m, d.amplitude, gains)?
                };
                qam_slice(est.symbols(), s.cfg.m)?
            }
        };
        Ok(bits.iter().zip(&out).filter(|(a, b)| a != b).count() as u64)
    }

    /// Simulates scheme `index` at grid point `point` (which selects the RNG streams).
    pub fn run_point(&self, index: usize, point: u64, avg_power: f64) -> Result<BerRecord> {
        self.run_point_with(
            index,
            point,
            avg_power,
            self.cfg.target_errors,
            self.cfg.max_symbols,
        )
    }

    /// As [`run_point`](Self::run_point) with an explicit stopping rule.
    pub fn run_point_with(
        &self,
        index: usize,
        point: u64,
        avg_power: f64,
        target_errors: u64,
        max_symbols: u64,
    ) -> Result<BerRecord> {
        let s = self.scheme(index)?;
        let d = self.drive(index, avg_power)?;
        let link = self.link(d.p);
        let w = self.weights(s, &d, &link)?;
        let bits_len = s.bits_per_symbol(self.cfg.n);
        let seed = self.cfg.master_seed;
        let (mut symbols, mut errors) = (0u64, 0u64);
        while symbols < max_symbols && errors < target_errors {
            let end = (symbols + BATCH_SYMBOLS).min(max_symbols);
            errors += (symbols..end)
                .into_par_iter()
                // Streams are shared by all schemes, so they see the same bits and noise.
                .map(|i| {
                    self.run_symbol(
                        s,
                        &d,
                        w.as_ref(),
                        &link,
                        bits_len,
                        &mut stream(seed, 0, point, i),
                    )
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            symbols = end;
        }
        let bits = symbols * bits_len as u64;
        log::debug!(
            "{} @ {:e} W: {errors} errors in {bits} bits",
            s.label,
            avg_power
        );
        Ok(BerRecord {
            scheme: s.label.clone(),
            avg_power_w: avg_power,
            drive_w: if s.cfg.kind.is_hcm() { d.p } else { d.sigma_t },
            dc_bias_w: d.dc_bias,
            symbols_run: symbols,
            bits_per_symbol: bits_len as u64,
            bit_errors: errors,
            ber: errors as f64 / bits as f64,
            ci_95: binomial_ci95(errors, bits),
            analytical_ber: self.analytical_snr_ber(s, &d).map(|(_, b)| b),
        })
    }

    /// Every scheme over the whole power grid, scheme by scheme.
    pub fn sweep(&self) -> Result<Vec<BerRecord>> {
        let mut out = Vec::with_capacity(self.schemes.len() * self.cfg.power_grid.len());
        for index in 0..self.schemes.len() {
            for (point, &p) in self.cfg.power_grid.iter().enumerate() {
                let r = self.run_point(index, point as u64, p)?;
                log::info!(
                    "{} {:e} W: ber {:e} ({} errors)",
                    r.scheme,
                    p,
                    r.ber,
                    r.bit_errors
                );
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Analytical curves over the power grid.
    pub fn analyze(&self) -> Result<Vec<AnalyticRecord>> {
        let mut out = Vec::new();
        for (index, s) in self.schemes.iter().enumerate() {
            for &p in &self.cfg.power_grid {
                let d = self.drive(index, p)?;
                let sb = self.analytical_snr_ber(s, &d);
                out.push(AnalyticRecord {
                    scheme: s.label.clone(),
                    avg_power_w: p,
                    drive_w: if s.cfg.kind.is_hcm() { d.p } else { d.sigma_t },
                    dc_bias_w: d.dc_bias,
                    snr_db: sb.map(|(q2, _)| 10.0 * q2.log10()),
                    analytical_ber: sb.map(|(_, b)| b),
                });
            }
        }
        Ok(out)
    }

    /// Maximum achievable SNR of every scheme.
    pub fn achievable_snr(&self) -> Result<Vec<SnrRecord>> {
        let setup = SnrSetup {
            n: self.cfg.n,
            p_max: self.cfg.p_max,
            sigma2_n: self.cfg.sigma2_n,
            gamma: self.cfg.gamma,
            dcr_trials: self.cfg.dcr_trials,
            seed: self.cfg.master_seed,
        };
        self.schemes
            .iter()
            .map(|s| {
                let modulation = match s.cfg.kind {
                    SchemeKind::Hcm => Modulation::Hcm { m: s.cfg.m },
                    SchemeKind::DcrHcm => Modulation::DcrHcm { m: s.cfg.m },
                    SchemeKind::AcoOfdm => Modulation::Aco { m_qam: s.cfg.m },
                    SchemeKind::DcoOfdm => Modulation::Dco { m_qam: s.cfg.m },
                };
                let best = SnrModel::new(modulation, &setup)?.scan();
                Ok(SnrRecord {
                    scheme: s.label.clone(),
                    spectral_efficiency: best.spectral_efficiency,
                    max_snr_db: best.max_snr_db(),
                    optimum_avg_power_w: best.optimum_power,
                })
            })
            .collect()
    }
}

pub(crate) fn random_bits<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Bit> {
    let mut bits = Vec::with_capacity(len);
    while bits.len() < len {
        let word: u64 = rng.random();
        let take = (len - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as Bit));
    }
    bits
}

/// Runs one scheme of a config at one average power.
pub fn run_point(config: &ExperimentConfig, scheme: usize, avg_power: f64) -> Result<BerRecord> {
    let point = config
        .power_grid
        .iter()
        .position(|&p| p == avg_power)
        .map_or(avg_power.to_bits(), |i| i as u64);
    Simulation::new(config.clone())?.run_point(scheme, point, avg_power)
}

/// Full sweep written as CSV.
pub fn sweep<W: Write>(config: &ExperimentConfig, out: W) -> Result<Vec<BerRecord>> {
    let records = Simulation::new(config.clone())?.sweep()?;
    write_csv(&BER_HEADER, &records, out)?;
    Ok(records)
}
