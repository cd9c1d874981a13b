//! Exercises the C ABI end to end from Rust: synth -> train -> open store
//! -> advise, plus error paths and the generated header.

use std::ffi::{CStr, CString};
use std::path::Path;

use jobcast_ffi::{
    jc_evaluate, jc_last_error, jc_store_advise, jc_store_free, jc_store_open, jc_synth, jc_train,
    JcAdvisory, JcStatus,
};

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn path_c(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

#[test]
fn full_flow_through_the_c_abi() {
    let tmp = tempfile::tempdir().unwrap();
    let wl = tmp.path().join("wl");
    let store_dir = tmp.path().join("store");

    unsafe {
        assert_eq!(jc_synth(5, 10, 220, path_c(&wl).as_ptr()), JcStatus::JcOk);
        assert!(wl.join("accounting.log").exists());

        assert_eq!(
            jc_train(
                path_c(&wl.join("accounting.log")).as_ptr(),
                path_c(&wl.join("roles.csv")).as_ptr(),
                path_c(&store_dir).as_ptr(),
                5,
            ),
            JcStatus::JcOk
        );

        let store = jc_store_open(path_c(&store_dir).as_ptr());
        assert!(!store.is_null());

        let mut advisory = JcAdvisory {
            estimated_cpu_s: -1.0,
            estimated_mem_bytes: -1.0,
            failure_probability: -1.0,
            under_provisioned: false,
            cold_start: true,
        };
        let status = jc_store_advise(
            store,
            c("user_000").as_ptr(),
            3600,
            1 << 30,
            c("proj_00").as_ptr(),
            &mut advisory,
        );
        assert_eq!(status, JcStatus::JcOk);
        assert!(advisory.estimated_cpu_s >= 0.0);
        assert!(advisory.estimated_mem_bytes >= 0.0);
        assert!((0.0..=1.0).contains(&advisory.failure_probability));
        assert!(!advisory.cold_start);

        // Unknown users fall back and are flagged cold-start.
        let status = jc_store_advise(
            store,
            c("stranger").as_ptr(),
            60,
            1024,
            c("proj_00").as_ptr(),
            &mut advisory,
        );
        assert_eq!(status, JcStatus::JcOk);
        assert!(advisory.cold_start);

        jc_store_free(store);
        jc_store_free(std::ptr::null_mut());
    }
}

#[test]
fn evaluate_writes_a_report_file() {
    let tmp = tempfile::tempdir().unwrap();
    let wl = tmp.path().join("wl");
    let report = tmp.path().join("report.csv");
    unsafe {
        assert_eq!(jc_synth(9, 8, 210, path_c(&wl).as_ptr()), JcStatus::JcOk);
        assert_eq!(
            jc_evaluate(
                path_c(&wl.join("accounting.log")).as_ptr(),
                path_c(&wl.join("roles.csv")).as_ptr(),
                path_c(&report).as_ptr(),
                c("csv").as_ptr(),
                9,
                true,
            ),
            JcStatus::JcOk
        );
    }
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count() - 1, 28);
}

#[test]
fn error_paths_set_last_error() {
    unsafe {
        // Null argument -> usage error with a message.
        assert_eq!(
            jc_synth(1, 5, 210, std::ptr::null()),
            JcStatus::JcUsageError
        );
        let msg = CStr::from_ptr(jc_last_error()).to_str().unwrap();
        assert!(msg.contains("out_dir"), "unexpected message {msg:?}");

        // Unknown store directory -> null handle and a message.
        let store = jc_store_open(c("/definitely/not/a/store").as_ptr());
        assert!(store.is_null());
        let msg = CStr::from_ptr(jc_last_error()).to_str().unwrap();
        assert!(!msg.is_empty());

        // Bad format string -> usage error.
        let tmp = tempfile::tempdir().unwrap();
        let status = jc_evaluate(
            c("x").as_ptr(),
            c("y").as_ptr(),
            path_c(&tmp.path().join("r")).as_ptr(),
            c("yaml").as_ptr(),
            1,
            false,
        );
        assert_eq!(status, JcStatus::JcUsageError);
    }
}

#[test]
fn generated_header_exports_the_surface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/jobcast.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header present after build");
    for symbol in [
        "typedef struct JcStore JcStore;",
        "jc_synth",
        "jc_train",
        "jc_evaluate",
        "jc_store_open",
        "jc_store_advise",
        "jc_store_free",
        "jc_last_error",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
