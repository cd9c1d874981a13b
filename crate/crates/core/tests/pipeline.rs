//! End-to-end pipeline tests driven through the CLI entry point and the
//! advisory API.

use std::fs;
use std::path::Path;

use jobcast::cli::{predict_for_submission, run_cli, train_store, SubmissionAttributes};
use jobcast::evaluate::{parse_report, ClassifierKind, RegressorKind};
use jobcast::ingest::{clean_filter_sample, parse_accounting_text, parse_roles_text, IngestConfig};
use jobcast::synth::{generate_workload, SynthConfig};

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["jobcast"];
    argv.extend_from_slice(args);
    run_cli(argv)
}

fn small_workload(dir: &Path, seed: &str) {
    assert_eq!(
        cli(&[
            "synth",
            "--seed",
            seed,
            "--out",
            dir.to_str().unwrap(),
            "--users",
            "12",
            "--jobs-per-user",
            "250",
            "--ground-truth",
        ]),
        0
    );
}

#[test]
fn synth_evaluate_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("wl");
    small_workload(&dir, "42");
    assert!(dir.join("accounting.log").exists());
    assert!(dir.join("roles.csv").exists());
    assert!(dir.join("ground_truth.json").exists());

    let report_csv = tmp.path().join("report.csv");
    assert_eq!(
        cli(&[
            "evaluate",
            "--in",
            dir.to_str().unwrap(),
            "--report",
            report_csv.to_str().unwrap(),
            "--format",
            "csv",
            "--no-timing",
        ]),
        0
    );
    let report = parse_report(&fs::read_to_string(&report_csv).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 28);
    assert!(report.leakage_replicated_aggregates);

    // Re-render the saved report as a table.
    let table = tmp.path().join("report.txt");
    assert_eq!(
        cli(&[
            "report",
            "--in",
            report_csv.to_str().unwrap(),
            "--format",
            "text",
            "--out",
            table.to_str().unwrap(),
        ]),
        0
    );
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.contains("LinearRegression"));
    assert!(text.contains("Per-User Features"));
}

#[test]
fn evaluate_is_byte_identical_without_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("wl");
    small_workload(&dir, "11");
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    for out in [&a, &b] {
        assert_eq!(
            cli(&[
                "evaluate",
                "--in",
                dir.to_str().unwrap(),
                "--report",
                out.to_str().unwrap(),
                "--format",
                "csv",
                "--no-timing",
            ]),
            0
        );
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn synth_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let d1 = tmp.path().join("one");
    let d2 = tmp.path().join("two");
    small_workload(&d1, "33");
    small_workload(&d2, "33");
    assert_eq!(
        fs::read(d1.join("accounting.log")).unwrap(),
        fs::read(d2.join("accounting.log")).unwrap()
    );
    assert_eq!(
        fs::read(d1.join("roles.csv")).unwrap(),
        fs::read(d2.join("roles.csv")).unwrap()
    );
}

#[test]
fn ingest_featurize_write_expected_shapes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("wl");
    small_workload(&dir, "5");
    let jobs_csv = tmp.path().join("jobs.csv");
    assert_eq!(
        cli(&[
            "ingest",
            "--log",
            dir.join("accounting.log").to_str().unwrap(),
            "--roles",
            dir.join("roles.csv").to_str().unwrap(),
            "--out",
            jobs_csv.to_str().unwrap(),
        ]),
        0
    );
    let jobs = fs::read_to_string(&jobs_csv).unwrap();
    assert_eq!(jobs.lines().count(), 12 * 250 + 1);

    let ds = tmp.path().join("cpu.csv");
    assert_eq!(
        cli(&[
            "featurize",
            "--jobs",
            jobs_csv.to_str().unwrap(),
            "--task",
            "cpu",
            "--out",
            ds.to_str().unwrap(),
            "--standardize",
        ]),
        0
    );
    let ds_text = fs::read_to_string(&ds).unwrap();
    let header = ds_text.lines().next().unwrap();
    assert_eq!(
        header,
        "id,reqMem,reqTime,project,aCPU,aReqtime,p_Faculty,p_Graduate,p_PostDoc,p_ResearchAss,p_Staff,p_UnderGra,p_Unknowing,cpu"
    );
    assert_eq!(ds_text.lines().count(), 12 * 250 + 1);

    let ds_nouser = tmp.path().join("cpu_nouser.csv");
    assert_eq!(
        cli(&[
            "featurize",
            "--jobs",
            jobs_csv.to_str().unwrap(),
            "--task",
            "cpu",
            "--out",
            ds_nouser.to_str().unwrap(),
            "--no-user-features",
        ]),
        0
    );
    let header = fs::read_to_string(&ds_nouser).unwrap();
    assert!(!header.lines().next().unwrap().contains("aCPU"));
}

#[test]
fn train_then_predict_emits_one_line_per_record() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("wl");
    small_workload(&dir, "8");
    let store = tmp.path().join("store");
    assert_eq!(
        cli(&[
            "train",
            "--in",
            dir.to_str().unwrap(),
            "--out",
            store.to_str().unwrap(),
        ]),
        0
    );
    for file in [
        "context.json",
        "cpu_model.json",
        "mem_model.json",
        "failure_model.json",
    ] {
        assert!(store.join(file).exists(), "missing {file}");
    }

    // Score a fresh log that includes an unknown (cold-start) user.
    let (records, _) = parse_accounting_text(&fs::read_to_string(dir.join("accounting.log")).unwrap());
    let mut lines = String::new();
    for rec in records.iter().take(20) {
        lines.push_str(&rec.to_line());
        lines.push('\n');
    }
    let mut ghost = records[0].clone();
    ghost.owner = "ghost_user".into();
    lines.push_str(&ghost.to_line());
    lines.push('\n');
    let new_log = tmp.path().join("new.log");
    fs::write(&new_log, &lines).unwrap();

    let out = tmp.path().join("advisories.csv");
    assert_eq!(
        cli(&[
            "predict",
            "--store",
            store.to_str().unwrap(),
            "--jobs",
            new_log.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]),
        0
    );
    let advisories = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = advisories.lines().skip(1).collect();
    assert_eq!(rows.len(), 21, "one prediction line per job record");
    let ghost_row = rows.iter().find(|r| r.starts_with("ghost_user,")).unwrap();
    assert!(ghost_row.contains(",true,ok") || ghost_row.ends_with(",true,ok"));
}

#[test]
fn advisory_probability_tracks_ground_truth_risk() {
    let cfg = SynthConfig {
        n_users: 20,
        jobs_per_user: (300, 300),
        rng_seed: 4,
        ..SynthConfig::default()
    };
    let w = generate_workload(&cfg);
    let (records, _) = parse_accounting_text(&w.accounting);
    let roles = parse_roles_text(&w.roles);
    let cleaned = clean_filter_sample(&records, &roles, &IngestConfig::default()).unwrap();
    let store = train_store(
        &cleaned.jobs,
        cleaned.project_codes,
        RegressorKind::Ridge,
        ClassifierKind::Lr,
        4,
    )
    .unwrap();
    let base_rate = store.context.base_failure_rate;

    // The user with the most ground-truth failures, scored on one of their
    // jobs whose true demand exceeded the request.
    let mut fail_counts = std::collections::HashMap::<&str, usize>::new();
    for j in &w.jobs {
        if j.failed {
            *fail_counts.entry(j.owner.as_str()).or_default() += 1;
        }
    }
    let (risky_user, _) = fail_counts.iter().max_by_key(|(_, c)| **c).unwrap();
    let job = w
        .jobs
        .iter()
        .find(|j| j.owner == *risky_user && j.failed)
        .unwrap();
    let project = &w
        .users
        .iter()
        .find(|u| u.name == *risky_user)
        .unwrap()
        .project;

    let advisory = predict_for_submission(
        &store,
        &SubmissionAttributes {
            owner: job.owner.clone(),
            req_time_s: job.req_time_s,
            req_mem_bytes: job.req_mem_bytes,
            project: project.clone(),
        },
    )
    .unwrap();
    assert!(!advisory.cold_start);
    assert!(
        advisory.failure_probability > base_rate,
        "risky user scored {:.3} vs base rate {:.3}",
        advisory.failure_probability,
        base_rate
    );

    // Requesting almost nothing must raise the under-provisioned flag.
    let starved = predict_for_submission(
        &store,
        &SubmissionAttributes {
            owner: job.owner.clone(),
            req_time_s: 1,
            req_mem_bytes: 1,
            project: project.clone(),
        },
    )
    .unwrap();
    assert!(starved.under_provisioned);

    // An unknown user takes the cold-start fallback.
    let cold = predict_for_submission(
        &store,
        &SubmissionAttributes {
            owner: "nobody_we_know".into(),
            req_time_s: 3600,
            req_mem_bytes: 1 << 30,
            project: "proj_00".into(),
        },
    )
    .unwrap();
    assert!(cold.cold_start);
}

#[test]
fn usage_errors_exit_one_and_data_errors_exit_two() {
    assert_eq!(cli(&["--definitely-not-a-flag"]), 1);
    assert_eq!(cli(&["evaluate"]), 1); // neither --in nor --log/--roles
    assert_eq!(cli(&["frobnicate"]), 1);
    assert_eq!(cli(&["--help"]), 0);

    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        cli(&[
            "evaluate",
            "--in",
            tmp.path().join("missing").to_str().unwrap(),
            "--report",
            tmp.path().join("r.txt").to_str().unwrap(),
        ]),
        2
    );
    assert_eq!(
        cli(&[
            "report",
            "--in",
            tmp.path().join("nope.csv").to_str().unwrap(),
        ]),
        2
    );
}
