use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hcm_core::analysis::{dcr_energy_efficiency, dcr_statistics, hcm_amplitude_pmf};
use hcm_core::channel::ChannelTaps;
use hcm_core::equalization::{channel_matrix, interleaver_objective, interleaver_search};
use hcm_core::harness::rng::{stream, SETUP_POINT};
use hcm_core::harness::sim::{write_csv, ANALYTIC_HEADER, SNR_HEADER};
use hcm_core::harness::{ExperimentConfig, Simulation, BER_HEADER};
use hcm_core::{BinaryHadamard, Error, Result};

/// Hadamard coded modulation and optical OFDM link simulator.
#[derive(Parser)]
#[command(name = "hcm", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER over the power grid of a config.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        over: Overrides,
    },
    /// Analytical curves for a config, no simulation.
    Analyze {
        config: PathBuf,
        /// Report the maximum achievable SNR per scheme instead.
        #[arg(long)]
        achievable_snr: bool,
        #[command(flatten)]
        over: Overrides,
    },
    /// Chip amplitude distribution.
    Pmf {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Empirical distribution after DC reduction.
        #[arg(long)]
        dcr: bool,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Searches an interleaver for a dispersive channel; prints one target index per line.
    InterleaverSearch {
        /// Comma-separated impulse response.
        #[arg(long, value_delimiter = ',')]
        taps: Vec<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// DC-reduction energy efficiency over a range of orders.
    Eta {
        /// `lo:hi` (powers of two in between) or a comma-separated list.
        #[arg(long)]
        n_range: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Values that replace the ones in the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma2_n: Option<f64>,
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long)]
    max_symbols: Option<u64>,
}

impl Overrides {
    fn load(&self, path: &Path) -> Result<ExperimentConfig> {
        // An unreadable config is the caller's mistake, not a run-time failure.
        let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            e => e,
        })?;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(s) = self.sigma2_n {
            cfg.sigma2_n = s;
        }
        if let Some(t) = self.target_errors {
            cfg.target_errors = t;
        }
        if let Some(m) = self.max_symbols {
            cfg.max_symbols = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct PmfRow {
    k: usize,
    amplitude: f64,
    probability: f64,
}

#[derive(Serialize)]
struct EtaRow {
    n: usize,
    m: usize,
    eta: f64,
}

fn parse_n_range(text: &str) -> Result<Vec<usize>> {
    let bad = || {
        Error::Config(format!(
            "bad --n-range {text:?}; use lo:hi or a comma-separated list"
        ))
    };
    if let Some((lo, hi)) = text.split_once(':') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if !lo.is_power_of_two() || lo < 2 || hi < lo {
            return Err(bad());
        }
        Ok(std::iter::successors(Some(lo), |&n| n.checked_mul(2))
            .take_while(|&n| n <= hi)
            .collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let io = |source| Error::Io {
                path: path.to_owned(),
                source,
            };
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            write(&mut w)?;
            w.flush().map_err(io)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {t} threads: {e}")))?;
    }
    let out = cli.out.as_deref();
    match cli.cmd {
        Command::Simulate { config, over } => {
            let sim = Simulation::new(over.load(&config)?)?;
            let records = sim.sweep()?;
            emit(out, |w| write_csv(&BER_HEADER, &records, w))
        }
        Command::Analyze {
            config,
            achievable_snr,
            over,
        } => {
            let sim = Simulation::new(over.load(&config)?)?;
            if achievable_snr {
                let rows = sim.achievable_snr()?;
                emit(out, |w| write_csv(&SNR_HEADER, &rows, w))
            } else {
                let rows = sim.analyze()?;
                emit(out, |w| write_csv(&ANALYTIC_HEADER, &rows, w))
            }
        }
        Command::Pmf {
            n,
            m,
            dcr,
            trials,
            seed,
        } => {
            let pmf = if dcr {
                dcr_statistics(n, m, trials, &mut stream(seed, 0, SETUP_POINT, 1))?.pmf
            } else {
                hcm_amplitude_pmf(n, m)?
            };
            let rows: Vec<PmfRow> = pmf
                .probs()
                .iter()
                .enumerate()
                .map(|(k, &probability)| PmfRow {
                    k,
                    amplitude: pmf.amplitude(k),
                    probability,
                })
                .collect();
            emit(out, |w| {
                write_csv(&["k", "amplitude", "probability"], &rows, w)
            })
        }
        Command::InterleaverSearch {
            taps,
            n,
            budget,
            seed,
        } => {
            let taps = ChannelTaps::new(taps)?;
            let h = BinaryHadamard::with_order(n)?;
            let g = channel_matrix(taps.as_slice(), n)?;
            let pi = interleaver_search(&g, &h, budget, &mut stream(seed, 0, SETUP_POINT, 0))?;
            log::info!(
                "objective {:e} (identity {:e})",
                interleaver_objective(&g, &h, &pi)?,
                interleaver_objective(&g, &h, &hcm_core::Permutation::identity(n))?
            );
            let text = pi.to_text();
            emit(out, |w| {
                w.write_all(text.as_bytes()).map_err(|source| Error::Io {
                    path: "<output>".into(),
                    source,
                })
            })
        }
        Command::Eta {
            n_range,
            m,
            trials,
            seed,
        } => {
            let rows = parse_n_range(&n_range)?
                .into_iter()
                .map(|n| {
                    Ok(EtaRow {
                        n,
                        m,
                        eta: dcr_energy_efficiency(
                            n,
                            m,
                            trials,
                            &mut stream(seed, n as u64, SETUP_POINT, 1),
                        )?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit(out, |w| write_csv(&["n", "m", "eta"], &rows, w))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hcm: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
