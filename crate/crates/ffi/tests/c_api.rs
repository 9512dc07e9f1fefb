use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use hcm_ffi::*;

fn last_error() -> String {
    let p = hcm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn fwht_matches_hand_values() {
    let mut v = [1.0, 0.0, 1.0, 0.0];
    assert_eq!(unsafe { hcm_fwht(v.as_mut_ptr(), 4) }, HcmStatus::Ok);
    assert_eq!(v, [2.0, 2.0, 0.0, 0.0]);

    let mut odd = [1.0; 3];
    assert_eq!(
        unsafe { hcm_fwht(odd.as_mut_ptr(), 3) },
        HcmStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { hcm_fwht(ptr::null_mut(), 4) },
        HcmStatus::NullPointer
    );
}

#[test]
fn scalar_functions() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { hcm_illuminance_to_power(500.0, 148.0, 1e-5, &mut out) },
        HcmStatus::Ok
    );
    assert!((out - 33.78e-6).abs() < 0.01e-6);

    assert_eq!(
        unsafe { hcm_gaussian_clipping_variance(0.0, 1.0, f64::INFINITY, &mut out) },
        HcmStatus::Ok
    );
    assert!((out - 0.5).abs() < 1e-12);
    assert_eq!(
        unsafe { hcm_gaussian_clipping_variance(0.0, -1.0, 1.0, &mut out) },
        HcmStatus::InvalidArgument
    );

    assert_eq!(
        unsafe { hcm_analytical_ber(2, 128, 1e-4, 4e-12, 0.0, 1.21, &mut out) },
        HcmStatus::Ok
    );
    assert!(out > 0.0 && out < 0.5);
    assert_eq!(
        unsafe { hcm_analytical_ber(3, 128, 1e-4, 4e-12, 0.0, 1.21, &mut out) },
        HcmStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { hcm_illuminance_to_power(1.0, 1.0, 1.0, ptr::null_mut()) },
        HcmStatus::NullPointer
    );
}

#[test]
fn modem_roundtrip() {
    for dcr in [false, true] {
        let mut md = ptr::null_mut();
        assert_eq!(
            unsafe { hcm_modem_new(16, 4, dcr, 2, &mut md) },
            HcmStatus::Ok
        );
        let nb = unsafe { hcm_modem_bits_per_symbol(md) };
        let ns = unsafe { hcm_modem_frame_len(md) };
        assert_eq!((nb, ns), (30, 18));
        let bits: Vec<u8> = (0..nb).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let mut samples = vec![0.0; ns];
        assert_eq!(
            unsafe { hcm_modem_encode(md, bits.as_ptr(), nb, 1e-3, samples.as_mut_ptr(), ns) },
            HcmStatus::Ok
        );
        assert!(samples.iter().all(|&s| (0.0..=1e-3 + 1e-15).contains(&s)));
        let mut back = vec![9u8; nb];
        assert_eq!(
            unsafe { hcm_modem_decode(md, samples.as_ptr(), ns, 1e-3, back.as_mut_ptr(), nb) },
            HcmStatus::Ok
        );
        assert_eq!(back, bits);
        assert_eq!(
            unsafe { hcm_modem_decode(md, samples.as_ptr(), ns, 1e-3, back.as_mut_ptr(), nb - 1) },
            HcmStatus::InvalidArgument
        );
        unsafe { hcm_modem_free(md) };
    }
    let mut md = ptr::null_mut();
    assert_eq!(
        unsafe { hcm_modem_new(12, 2, false, 0, &mut md) },
        HcmStatus::InvalidArgument
    );
    assert!(md.is_null());
    unsafe { hcm_modem_free(ptr::null_mut()) };
}

#[test]
fn simulation_to_csv() {
    let cfg = CString::new(
        "n = 16\np_max = 1e-4\nsigma2_n = 0.0\npower_grid = [2e-5]\nmax_symbols = 600\n\n[[scheme]]\nkind = \"hcm\"\nm = 2\n",
    )
    .unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { hcm_simulation_new(cfg.as_ptr(), &mut sim) },
        HcmStatus::Ok
    );
    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { hcm_simulation_run(sim, &mut csv) }, HcmStatus::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
    unsafe {
        hcm_string_free(csv);
        hcm_simulation_free(sim);
    }
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("scheme,avg_power_w"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "hcm-2");
    assert_eq!(row[4], "600");
    assert_eq!(row[6], "0");

    let over = CString::new("n = 16\np_max = 1e-4\nsigma2_n = 0.0\npower_grid = [2e-4]\n").unwrap();
    assert_eq!(
        unsafe { hcm_simulation_new(over.as_ptr(), &mut sim) },
        HcmStatus::OutOfRange
    );
    assert!(last_error().contains("not reachable"));
    let junk = CString::new("n = ").unwrap();
    assert_eq!(
        unsafe { hcm_simulation_new(junk.as_ptr(), &mut sim) },
        HcmStatus::InvalidArgument
    );
    assert!(sim.is_null());
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = format!("{dir}/tests/smoke.c");
    for (cc, extra) in [("cc", vec!["-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let Ok(out) = Command::new(cc)
            .args(&extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(format!("{dir}/include"))
            .arg(&src)
            .output()
        else {
            eprintln!("{cc} not available, skipping");
            continue;
        };
        assert!(
            out.status.success(),
            "{cc}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
