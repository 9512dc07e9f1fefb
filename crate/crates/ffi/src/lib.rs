//! C interface to `hcm-core`.
//!
//! Every function returns an [`HcmStatus`]; on failure a message is kept
//! per thread and can be read with [`hcm_last_error`]. Objects are opaque
//! handles created by `*_new` functions and released by the matching
//! `*_free`. Strings returned by the library are freed with
//! [`hcm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hcm_core::analysis::{self, clipping_variance_gaussian};
use hcm_core::channel::illuminance_to_power;
use hcm_core::harness::{write_csv, ExperimentConfig, Simulation, BER_HEADER};
use hcm_core::hcm::{
    bits_per_symbol, dcr_reduce, deframe, frame, hcm_decode, hcm_encode, pam_map, pam_slice,
};
use hcm_core::pam::GrayPam;
use hcm_core::{fwht, BinaryHadamard, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcmStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Bad sizes, orders, or configuration values.
    InvalidArgument = 2,
    /// Requested average power outside the reachable range.
    OutOfRange = 3,
    Io = 4,
    /// Numerical failure during a run.
    Runtime = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HcmStatus {
    match e {
        Error::Range { .. } => HcmStatus::OutOfRange,
        Error::Io { .. } => HcmStatus::Io,
        e if e.is_config() => HcmStatus::InvalidArgument,
        Error::State(_) => HcmStatus::InvalidArgument,
        _ => HcmStatus::Runtime,
    }
}

struct Fail(HcmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HcmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HcmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HcmStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hcm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hcm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// In-place unnormalised Walsh-Hadamard transform of `len` (a power of two) values.
///
/// # Safety
/// `data` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hcm_fwht(data: *mut f64, len: usize) -> HcmStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let v = std::slice::from_raw_parts_mut(data, len);
        let t = fwht(v)?;
        v.copy_from_slice(&t);
        Ok(())
    })
}

/// Closed-form HCM bit error rate over AWGN with clipping noise.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hcm_analytical_ber(
    m: usize,
    n: usize,
    p: f64,
    noise_var: f64,
    clip_var: f64,
    gamma: f64,
    out: *mut f64,
) -> HcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let valid = m >= 2
            && m.is_power_of_two()
            && n > 0
            && p > 0.0
            && noise_var >= 0.0
            && clip_var >= 0.0
            && gamma > 0.0;
        if !valid {
            return Err(Fail(
                HcmStatus::InvalidArgument,
                "invalid BER parameters".into(),
            ));
        }
        *out = analysis::hcm_analytical_ber(m, n, p, noise_var, clip_var, gamma);
        Ok(())
    })
}

/// Clipping-noise variance of a Gaussian signal limited to `[0, p_max]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hcm_gaussian_clipping_variance(
    mean: f64,
    variance: f64,
    p_max: f64,
    out: *mut f64,
) -> HcmStatus {
    guard(|| {
        *out_ref(out, "out")? = clipping_variance_gaussian(mean, variance, p_max)?;
        Ok(())
    })
}

/// Optical power in watts on a detector of `area_m2` under `lux` of light
/// with luminous efficacy `lm_per_w`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hcm_illuminance_to_power(
    lux: f64,
    lm_per_w: f64,
    area_m2: f64,
    out: *mut f64,
) -> HcmStatus {
    guard(|| {
        *out_ref(out, "out")? = illuminance_to_power(lux, lm_per_w, area_m2)?;
        Ok(())
    })
}

/// HCM transmitter and receiver for one symbol length.
pub struct HcmModem {
    hadamard: BinaryHadamard,
    m: usize,
    dcr: bool,
    cp_len: usize,
}

/// Creates a modem for `n` chips (power of two), `m`-PAM, optional DC
/// reduction and a cyclic prefix of `cp_len` samples.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`hcm_modem_free`].
#[no_mangle]
pub unsafe extern "C" fn hcm_modem_new(
    n: usize,
    m: usize,
    dcr: bool,
    cp_len: usize,
    out: *mut *mut HcmModem,
) -> HcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let hadamard = BinaryHadamard::with_order(n)?;
        GrayPam::new(m)?;
        if cp_len >= n {
            return Err(Fail(
                HcmStatus::InvalidArgument,
                format!("cyclic prefix {cp_len} must be shorter than {n}"),
            ));
        }
        *out = Box::into_raw(Box::new(HcmModem {
            hadamard,
            m,
            dcr,
            cp_len,
        }));
        Ok(())
    })
}

/// # Safety
/// `modem` must come from [`hcm_modem_new`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hcm_modem_free(modem: *mut HcmModem) {
    if !modem.is_null() {
        drop(Box::from_raw(modem));
    }
}

/// Data bits carried by one symbol.
///
/// # Safety
/// `modem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hcm_modem_bits_per_symbol(modem: *const HcmModem) -> usize {
    modem
        .as_ref()
        .map_or(0, |md| bits_per_symbol(md.hadamard.n(), md.m))
}

/// Samples per framed symbol, cyclic prefix included.
///
/// # Safety
/// `modem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hcm_modem_frame_len(modem: *const HcmModem) -> usize {
    modem.as_ref().map_or(0, |md| md.hadamard.n() + md.cp_len)
}

/// Encodes `n_bits` bits (one per byte, 0 or 1) into a framed symbol of
/// peak `p`, written to `samples` (`n_samples` = frame length).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn hcm_modem_encode(
    modem: *const HcmModem,
    bits: *const u8,
    n_bits: usize,
    p: f64,
    samples: *mut f64,
    n_samples: usize,
) -> HcmStatus {
    guard(|| {
        let md = modem.as_ref().ok_or_else(|| null("modem"))?;
        if bits.is_null() {
            return Err(null("bits"));
        }
        if samples.is_null() {
            return Err(null("samples"));
        }
        let n = md.hadamard.n();
        if n_samples != n + md.cp_len {
            return Err(Fail(
                HcmStatus::InvalidArgument,
                format!("need {} samples, got {n_samples}", n + md.cp_len),
            ));
        }
        let bits = std::slice::from_raw_parts(bits, n_bits);
        let mut x = hcm_encode(&pam_map(bits, md.m, n)?, &md.hadamard)?;
        if md.dcr {
            x = dcr_reduce(&x)?;
        }
        let f = frame(&x, p, md.cp_len)?;
        std::slice::from_raw_parts_mut(samples, n_samples).copy_from_slice(f.samples());
        Ok(())
    })
}

/// Decodes a received frame transmitted with peak `p` into `n_bits` bits.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn hcm_modem_decode(
    modem: *const HcmModem,
    samples: *const f64,
    n_samples: usize,
    p: f64,
    bits: *mut u8,
    n_bits: usize,
) -> HcmStatus {
    guard(|| {
        let md = modem.as_ref().ok_or_else(|| null("modem"))?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        if bits.is_null() {
            return Err(null("bits"));
        }
        let expected = bits_per_symbol(md.hadamard.n(), md.m);
        if n_bits != expected {
            return Err(Error::Framing {
                expected,
                got: n_bits,
            }
            .into());
        }
        let r = deframe(std::slice::from_raw_parts(samples, n_samples), md.cp_len)?;
        let v = hcm_decode(&r, p, &md.hadamard)?;
        let (_, out) = pam_slice(&v, md.m, p)?;
        std::slice::from_raw_parts_mut(bits, n_bits).copy_from_slice(&out);
        Ok(())
    })
}

/// A prepared Monte-Carlo experiment.
pub struct HcmSimulation {
    sim: Simulation,
}

/// Builds a simulation from TOML text in the `hcm simulate` config format.
/// Relative file paths inside the text resolve against the working directory.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` a valid pointer; the
/// handle is released with [`hcm_simulation_free`].
#[no_mangle]
pub unsafe extern "C" fn hcm_simulation_new(
    toml: *const c_char,
    out: *mut *mut HcmSimulation,
) -> HcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml).to_str().map_err(|e| {
            Fail(
                HcmStatus::InvalidArgument,
                format!("config is not UTF-8: {e}"),
            )
        })?;
        let sim = Simulation::new(ExperimentConfig::from_toml_str(text)?)?;
        *out = Box::into_raw(Box::new(HcmSimulation { sim }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`hcm_simulation_new`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hcm_simulation_free(sim: *mut HcmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs the whole power grid and returns the BER table as CSV in `*csv`,
/// to be released with [`hcm_string_free`].
///
/// # Safety
/// `sim` must be a live handle and `csv` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hcm_simulation_run(
    sim: *const HcmSimulation,
    csv: *mut *mut c_char,
) -> HcmStatus {
    guard(|| {
        let csv = out_ref(csv, "csv")?;
        *csv = ptr::null_mut();
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let records = s.sim.sweep()?;
        let mut buf = Vec::new();
        write_csv(&BER_HEADER, &records, &mut buf)?;
        *csv = CString::new(buf).expect("CSV has no nul").into_raw();
        Ok(())
    })
}
