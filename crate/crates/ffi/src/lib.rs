//! C ABI over the jobcast pipeline.
//!
//! Strings cross the boundary as NUL-terminated UTF-8. Fallible calls
//! return [`JcStatus`]; the text of the most recent failure on the calling
//! thread is available through [`jc_last_error`]. The model store is an
//! opaque handle created by [`jc_store_open`] and released by
//! [`jc_store_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use jobcast::cli::{Advisor, SubmissionAttributes};
use jobcast::evaluate::{render_report, run_experiment, ExperimentConfig, ReportFormat};
use jobcast::ingest::{clean_filter_sample, parse_accounting_text, parse_roles_text, IngestConfig};
use jobcast::persist::ModelStore;
use jobcast::synth::{generate_workload, SynthConfig};

/// Result of a fallible call. Mirrors the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JcStatus {
    JcOk = 0,
    JcUsageError = 1,
    JcDataError = 2,
}

/// Advisory for one submission.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct JcAdvisory {
    pub estimated_cpu_s: f64,
    pub estimated_mem_bytes: f64,
    pub failure_probability: f64,
    /// Requested resources fall below the estimated need.
    pub under_provisioned: bool,
    /// No history for this user; role-level fallback aggregates were used.
    pub cold_start: bool,
}

/// Opaque trained-model handle.
pub struct JcStore {
    advisor: Advisor,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(msg: &str, status: JcStatus) -> JcStatus {
    set_error(msg);
    status
}

/// Message of the most recent error on this thread.
///
/// The pointer stays valid until the next failing jobcast call on the same
/// thread. Never null; the buffer is empty when no error has occurred.
#[no_mangle]
pub extern "C" fn jc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn arg_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, String> {
    if ptr.is_null() {
        return Err(format!("{name} is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| format!("{name} is not valid UTF-8"))
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Generate a synthetic workload into `out_dir` (accounting.log, roles.csv).
///
/// # Safety
/// `out_dir` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn jc_synth(
    seed: u64,
    n_users: usize,
    jobs_per_user: usize,
    out_dir: *const c_char,
) -> JcStatus {
    let dir = match arg_str(out_dir, "out_dir") {
        Ok(s) => Path::new(s).to_path_buf(),
        Err(e) => return fail(&e, JcStatus::JcUsageError),
    };
    let cfg = SynthConfig {
        n_users,
        jobs_per_user: (jobs_per_user, jobs_per_user),
        rng_seed: seed,
        ..SynthConfig::default()
    };
    if let Err(e) = cfg.validate() {
        return fail(&e, JcStatus::JcUsageError);
    }
    let w = generate_workload(&cfg);
    if let Err(e) = write_text(&dir.join("accounting.log"), &w.accounting)
        .and_then(|()| write_text(&dir.join("roles.csv"), &w.roles))
    {
        return fail(&e, JcStatus::JcDataError);
    }
    JcStatus::JcOk
}

fn ingest(log: &Path, roles: &Path, seed: u64) -> Result<jobcast::ingest::CleanedJobs, String> {
    let (records, _) = parse_accounting_text(&read_text(log)?);
    let roles = parse_roles_text(&read_text(roles)?);
    let cfg = IngestConfig {
        rng_seed: seed,
        ..IngestConfig::default()
    };
    clean_filter_sample(&records, &roles, &cfg).map_err(|e| e.to_string())
}

/// Run the full ablation experiment and write the report.
///
/// `format` is `"text"` or `"csv"`. When `fixed_timing` is true, fit times
/// are recorded as 0.0 so the report bytes are reproducible.
///
/// # Safety
/// All pointer arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn jc_evaluate(
    accounting_path: *const c_char,
    roles_path: *const c_char,
    report_path: *const c_char,
    format: *const c_char,
    seed: u64,
    fixed_timing: bool,
) -> JcStatus {
    let (log, roles, report, format) = match (|| {
        Ok::<_, String>((
            arg_str(accounting_path, "accounting_path")?,
            arg_str(roles_path, "roles_path")?,
            arg_str(report_path, "report_path")?,
            arg_str(format, "format")?,
        ))
    })() {
        Ok(v) => v,
        Err(e) => return fail(&e, JcStatus::JcUsageError),
    };
    let format = match format {
        "text" => ReportFormat::Text,
        "csv" => ReportFormat::Csv,
        other => return fail(&format!("unknown format {other:?}"), JcStatus::JcUsageError),
    };
    let cleaned = match ingest(Path::new(log), Path::new(roles), seed) {
        Ok(c) => c,
        Err(e) => return fail(&e, JcStatus::JcDataError),
    };
    let cfg = ExperimentConfig {
        rng_seed: seed,
        measure_time: !fixed_timing,
        ..ExperimentConfig::default()
    };
    let rendered = match run_experiment(&cleaned.jobs, &cfg) {
        Ok(r) => render_report(&r, format),
        Err(e) => return fail(&e.to_string(), JcStatus::JcDataError),
    };
    match write_text(Path::new(report), &rendered) {
        Ok(()) => JcStatus::JcOk,
        Err(e) => fail(&e, JcStatus::JcDataError),
    }
}

/// Train the advisory model store from an accounting log and roles file.
///
/// # Safety
/// All pointer arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn jc_train(
    accounting_path: *const c_char,
    roles_path: *const c_char,
    store_dir: *const c_char,
    seed: u64,
) -> JcStatus {
    let (log, roles, dir) = match (|| {
        Ok::<_, String>((
            arg_str(accounting_path, "accounting_path")?,
            arg_str(roles_path, "roles_path")?,
            arg_str(store_dir, "store_dir")?,
        ))
    })() {
        Ok(v) => v,
        Err(e) => return fail(&e, JcStatus::JcUsageError),
    };
    let cleaned = match ingest(Path::new(log), Path::new(roles), seed) {
        Ok(c) => c,
        Err(e) => return fail(&e, JcStatus::JcDataError),
    };
    let store = match jobcast::cli::train_store(
        &cleaned.jobs,
        cleaned.project_codes,
        jobcast::evaluate::RegressorKind::Ridge,
        jobcast::evaluate::ClassifierKind::Gnb,
        seed,
    ) {
        Ok(s) => s,
        Err(e) => return fail(&e.to_string(), JcStatus::JcDataError),
    };
    match store.save(Path::new(dir)) {
        Ok(()) => JcStatus::JcOk,
        Err(e) => fail(&e.to_string(), JcStatus::JcDataError),
    }
}

/// Load a model store. Returns null on failure (see [`jc_last_error`]).
///
/// # Safety
/// `store_dir` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn jc_store_open(store_dir: *const c_char) -> *mut JcStore {
    let dir = match arg_str(store_dir, "store_dir") {
        Ok(s) => s,
        Err(e) => {
            set_error(&e);
            return std::ptr::null_mut();
        }
    };
    match ModelStore::load(Path::new(dir)) {
        Ok(store) => Box::into_raw(Box::new(JcStore {
            advisor: Advisor::new(store),
        })),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Release a store handle. Null is a no-op.
///
/// # Safety
/// `store` must be a pointer returned by [`jc_store_open`] that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn jc_store_free(store: *mut JcStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Score one submission; writes the advisory into `out`.
///
/// # Safety
/// `store` must be a live handle from [`jc_store_open`]; `user` and
/// `project` must be valid NUL-terminated strings; `out` must point to a
/// writable [`JcAdvisory`].
#[no_mangle]
pub unsafe extern "C" fn jc_store_advise(
    store: *const JcStore,
    user: *const c_char,
    req_time_s: u64,
    req_mem_bytes: u64,
    project: *const c_char,
    out: *mut JcAdvisory,
) -> JcStatus {
    if store.is_null() || out.is_null() {
        return fail("store and out must be non-null", JcStatus::JcUsageError);
    }
    let (user, project) = match (|| {
        Ok::<_, String>((arg_str(user, "user")?, arg_str(project, "project")?))
    })() {
        Ok(v) => v,
        Err(e) => return fail(&e, JcStatus::JcUsageError),
    };
    let attrs = SubmissionAttributes {
        owner: user.to_string(),
        req_time_s,
        req_mem_bytes,
        project: project.to_string(),
    };
    match (*store).advisor.advise(&attrs) {
        Ok(a) => {
            *out = JcAdvisory {
                estimated_cpu_s: a.estimated_cpu_s,
                estimated_mem_bytes: a.estimated_mem_bytes,
                failure_probability: a.failure_probability,
                under_provisioned: a.under_provisioned,
                cold_start: a.cold_start,
            };
            JcStatus::JcOk
        }
        Err(e) => fail(&e.to_string(), JcStatus::JcDataError),
    }
}
