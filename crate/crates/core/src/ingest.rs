//! Accounting-log ingestion: line parsing, request extraction, and the
//! clean/filter/sample protocol that turns raw records into [`JobRecord`]s.
//!
//! The accounting file is the classic grid-engine layout: one record per
//! line, 45 colon-delimited fields, `#` comment lines skipped. Only the
//! positions used downstream are pinned; everything else is carried opaquely
//! in `extra` so a parsed record can be re-serialized without loss.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream;

/// Total field count of a well-formed accounting line.
pub const FIELD_COUNT: usize = 45;

// Pinned 1-based field positions.
const POS_QNAME: usize = 1;
const POS_OWNER: usize = 4;
const POS_JOB_NUMBER: usize = 6;
const POS_SUBMISSION_TIME: usize = 9;
const POS_START_TIME: usize = 10;
const POS_END_TIME: usize = 11;
const POS_FAILED: usize = 12;
const POS_EXIT_STATUS: usize = 13;
const POS_WALLCLOCK: usize = 14;
const POS_PROJECT: usize = 32;
const POS_CPU: usize = 37;
const POS_CATEGORY: usize = 40;
const POS_MAXVMEM: usize = 43;

const PINNED: [usize; 13] = [
    POS_QNAME,
    POS_OWNER,
    POS_JOB_NUMBER,
    POS_SUBMISSION_TIME,
    POS_START_TIME,
    POS_END_TIME,
    POS_FAILED,
    POS_EXIT_STATUS,
    POS_WALLCLOCK,
    POS_PROJECT,
    POS_CPU,
    POS_CATEGORY,
    POS_MAXVMEM,
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: expected {FIELD_COUNT} fields, found {fields}")]
    MalformedLine { line: usize, fields: usize },
    #[error("line {line}, field {field}: cannot parse {value:?} as a number")]
    NumericParse {
        line: usize,
        field: usize,
        value: String,
    },
    #[error("missing or unusable resource request token {token}")]
    MissingRequest { token: &'static str },
    #[error("no records survive cleaning and filtering")]
    EmptyResult,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// User role drawn from the closed set used by the feature schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Faculty,
    Graduate,
    PostDoc,
    ResearchAss,
    Staff,
    UnderGra,
    Unknowing,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Faculty,
        Role::Graduate,
        Role::PostDoc,
        Role::ResearchAss,
        Role::Staff,
        Role::UnderGra,
        Role::Unknowing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Faculty => "Faculty",
            Role::Graduate => "Graduate",
            Role::PostDoc => "PostDoc",
            Role::ResearchAss => "ResearchAss",
            Role::Staff => "Staff",
            Role::UnderGra => "UnderGra",
            Role::Unknowing => "Unknowing",
        }
    }

    /// Lenient lookup: anything outside the closed set maps to `Unknowing`.
    pub fn from_name(name: &str) -> Role {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == name)
            .unwrap_or(Role::Unknowing)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One raw accounting record with the pinned fields typed and the remaining
/// 32 fields kept verbatim in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAccountingRecord {
    pub qname: String,
    pub owner: String,
    pub job_number: u64,
    pub submission_time: i64,
    pub start_time: i64,
    pub end_time: i64,
    pub failed_code: u64,
    pub exit_status: i64,
    pub wallclock_s: f64,
    pub cpu_s: f64,
    pub maxvmem_bytes: f64,
    pub project: String,
    pub category: String,
    pub extra: Vec<String>,
}

impl RawAccountingRecord {
    /// Serialize back to a 45-field accounting line, escaping `\` and `:`
    /// inside field values.
    pub fn to_line(&self) -> String {
        let mut fields: Vec<String> = Vec::with_capacity(FIELD_COUNT);
        let mut extra = self.extra.iter();
        for pos in 1..=FIELD_COUNT {
            let value = match pos {
                POS_QNAME => self.qname.clone(),
                POS_OWNER => self.owner.clone(),
                POS_JOB_NUMBER => self.job_number.to_string(),
                POS_SUBMISSION_TIME => self.submission_time.to_string(),
                POS_START_TIME => self.start_time.to_string(),
                POS_END_TIME => self.end_time.to_string(),
                POS_FAILED => self.failed_code.to_string(),
                POS_EXIT_STATUS => self.exit_status.to_string(),
                POS_WALLCLOCK => self.wallclock_s.to_string(),
                POS_PROJECT => self.project.clone(),
                POS_CPU => self.cpu_s.to_string(),
                POS_CATEGORY => self.category.clone(),
                POS_MAXVMEM => self.maxvmem_bytes.to_string(),
                _ => extra.next().cloned().unwrap_or_default(),
            };
            fields.push(escape_field(&value));
        }
        fields.join(":")
    }
}

fn escape_field(s: &str) -> String {
    if !s.contains([':', '\\']) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            ':' => out.push_str("\\:"),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out
}

/// Split a record line on unescaped colons, resolving `\:` and `\\`.
fn split_fields(line: &str) -> Vec<String> {
    let mut fields = Vec::with_capacity(FIELD_COUNT);
    let mut cur = String::new();
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                // Unknown escapes keep the backslash so nothing is lost.
                match chars.next() {
                    Some(':') => cur.push(':'),
                    Some('\\') => cur.push('\\'),
                    Some(other) => {
                        cur.push('\\');
                        cur.push(other);
                    }
                    None => cur.push('\\'),
                }
            }
            ':' => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Parse one accounting line.
///
/// Comment lines (leading `#`) and blank lines yield `Ok(None)`. `line_no`
/// is only used to label errors so callers can skip-and-count.
pub fn parse_accounting_line(
    line: &str,
    line_no: usize,
) -> Result<Option<RawAccountingRecord>, IngestError> {
    let trimmed = line.trim_end_matches(['\n', '\r']);
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let fields = split_fields(trimmed);
    if fields.len() != FIELD_COUNT {
        return Err(IngestError::MalformedLine {
            line: line_no,
            fields: fields.len(),
        });
    }

    fn num<T: FromStr>(fields: &[String], pos: usize, line: usize) -> Result<T, IngestError> {
        fields[pos - 1].parse().map_err(|_| IngestError::NumericParse {
            line,
            field: pos,
            value: fields[pos - 1].clone(),
        })
    }

    let mut extra = Vec::with_capacity(FIELD_COUNT - PINNED.len());
    for (i, f) in fields.iter().enumerate() {
        if !PINNED.contains(&(i + 1)) {
            extra.push(f.clone());
        }
    }

    Ok(Some(RawAccountingRecord {
        qname: fields[POS_QNAME - 1].clone(),
        owner: fields[POS_OWNER - 1].clone(),
        job_number: num(&fields, POS_JOB_NUMBER, line_no)?,
        submission_time: num(&fields, POS_SUBMISSION_TIME, line_no)?,
        start_time: num(&fields, POS_START_TIME, line_no)?,
        end_time: num(&fields, POS_END_TIME, line_no)?,
        failed_code: num(&fields, POS_FAILED, line_no)?,
        exit_status: num(&fields, POS_EXIT_STATUS, line_no)?,
        wallclock_s: num(&fields, POS_WALLCLOCK, line_no)?,
        project: fields[POS_PROJECT - 1].clone(),
        cpu_s: num(&fields, POS_CPU, line_no)?,
        category: fields[POS_CATEGORY - 1].clone(),
        maxvmem_bytes: num(&fields, POS_MAXVMEM, line_no)?,
        extra,
    }))
}

/// Running tally of a whole-file parse; malformed lines are counted, not fatal.
#[derive(Debug, Default)]
pub struct ParseStats {
    pub lines: usize,
    pub comments: usize,
    pub errors: usize,
    /// First few errors kept for diagnostics.
    pub samples: Vec<IngestError>,
}

/// Parse a full accounting file, skipping comments and counting bad lines.
pub fn parse_accounting_text(text: &str) -> (Vec<RawAccountingRecord>, ParseStats) {
    let mut records = Vec::new();
    let mut stats = ParseStats::default();
    for (i, line) in text.lines().enumerate() {
        stats.lines += 1;
        match parse_accounting_line(line, i + 1) {
            Ok(Some(rec)) => records.push(rec),
            Ok(None) => stats.comments += 1,
            Err(e) => {
                stats.errors += 1;
                if stats.samples.len() < 5 {
                    stats.samples.push(e);
                }
            }
        }
    }
    (records, stats)
}

/// Extract `(h_rt seconds, h_vmem bytes)` from a raw request category string.
///
/// Size suffixes K/M/G/T are binary (1024-based) and case-insensitive; bare
/// numbers are bytes. A token that is absent, non-numeric, or zero carries no
/// usable request, so the record must be dropped during cleaning.
pub fn parse_resource_request(category: &str) -> Result<(u64, u64), IngestError> {
    let mut req_time = None;
    let mut req_mem = None;
    for token in category.split([',', ' ', '\t']) {
        if let Some(v) = token.strip_prefix("h_rt=") {
            req_time = v.parse::<u64>().ok().filter(|&t| t > 0);
        } else if let Some(v) = token.strip_prefix("h_vmem=") {
            req_mem = parse_size_bytes(v).filter(|&m| m > 0);
        }
    }
    match (req_time, req_mem) {
        (Some(t), Some(m)) => Ok((t, m)),
        (None, _) => Err(IngestError::MissingRequest { token: "h_rt" }),
        (_, None) => Err(IngestError::MissingRequest { token: "h_vmem" }),
    }
}

fn parse_size_bytes(s: &str) -> Option<u64> {
    if s.is_empty() {
        return None;
    }
    let (mantissa, mult) = match s.as_bytes()[s.len() - 1].to_ascii_lowercase() {
        b'k' => (&s[..s.len() - 1], 1u64 << 10),
        b'm' => (&s[..s.len() - 1], 1u64 << 20),
        b'g' => (&s[..s.len() - 1], 1u64 << 30),
        b't' => (&s[..s.len() - 1], 1u64 << 40),
        _ => (s, 1u64),
    };
    let v: f64 = mantissa.parse().ok()?;
    if !(v.is_finite() && v >= 0.0) {
        return None;
    }
    Some((v * mult as f64).round() as u64)
}

/// One cleaned job row: everything the feature builder consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub owner: String,
    pub role: Role,
    pub failed: u8,
    pub cpu_s: f64,
    pub maxvmem_bytes: f64,
    pub req_time_s: u64,
    pub req_mem_bytes: u64,
    pub project_id: u32,
    pub submission_time: i64,
}

/// How the binary `failed` label is derived from the raw outcome fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelRule {
    /// failed := failed_code != 0 or exit_status != 0 (default).
    AnyNonzero,
    /// Only count resource-limit kills: grid-engine failed code 100 or an
    /// exit status from SIGKILL/SIGXCPU (137/152).
    ResourceKillOnly,
}

impl LabelRule {
    fn label(self, failed_code: u64, exit_status: i64) -> u8 {
        let hit = match self {
            LabelRule::AnyNonzero => failed_code != 0 || exit_status != 0,
            LabelRule::ResourceKillOnly => {
                failed_code == 100 || exit_status == 137 || exit_status == 152
            }
        };
        u8::from(hit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSize {
    All,
    Count(usize),
}

impl FromStr for SampleSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(SampleSize::All)
        } else {
            s.parse::<usize>()
                .map_err(|_| format!("expected a positive integer or \"all\", got {s:?}"))
                .and_then(|n| {
                    if n == 0 {
                        Err("sample size must be positive".into())
                    } else {
                        Ok(SampleSize::Count(n))
                    }
                })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestConfig {
    pub window_start: i64,
    pub window_end: i64,
    pub min_jobs_per_user: usize,
    pub sample_size: SampleSize,
    pub rng_seed: u64,
    pub label_rule: LabelRule,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            window_start: 0,
            window_end: i64::MAX,
            min_jobs_per_user: 200,
            sample_size: SampleSize::All,
            rng_seed: 42,
            label_rule: LabelRule::AnyNonzero,
        }
    }
}

/// Per-reason counts of records removed by [`clean_filter_sample`].
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct DropStats {
    pub input: usize,
    pub out_of_window: usize,
    pub never_started: usize,
    pub bad_interval: usize,
    pub missing_request: usize,
    pub negative_usage: usize,
    pub below_min_jobs: usize,
    pub surviving: usize,
    pub sampled: usize,
}

/// Output of the cleaning protocol, with the project dictionary that was
/// built while encoding and the per-reason drop accounting.
#[derive(Debug, Clone)]
pub struct CleanedJobs {
    pub jobs: Vec<JobRecord>,
    /// Project token for each dense code, in first-appearance order.
    pub project_codes: Vec<String>,
    pub stats: DropStats,
}

/// Apply the cleaning/filtering/sampling protocol.
///
/// Steps, in order: keep records with `submission_time` in
/// `[window_start, window_end)`; drop never-started records and records with
/// `end_time < start_time`; drop records without a usable h_rt/h_vmem
/// request or with negative usage; drop all records of users with fewer than
/// `min_jobs_per_user` surviving records; finally sample uniformly without
/// replacement (seeded), keeping the survivors' original order.
pub fn clean_filter_sample(
    records: &[RawAccountingRecord],
    roles: &HashMap<String, Role>,
    cfg: &IngestConfig,
) -> Result<CleanedJobs, IngestError> {
    let mut stats = DropStats {
        input: records.len(),
        ..DropStats::default()
    };

    struct Survivor<'a> {
        rec: &'a RawAccountingRecord,
        req_time_s: u64,
        req_mem_bytes: u64,
    }

    let mut survivors: Vec<Survivor> = Vec::new();
    for rec in records {
        if rec.submission_time < cfg.window_start || rec.submission_time >= cfg.window_end {
            stats.out_of_window += 1;
            continue;
        }
        if rec.start_time == 0 {
            stats.never_started += 1;
            continue;
        }
        if rec.end_time < rec.start_time {
            stats.bad_interval += 1;
            continue;
        }
        let (req_time_s, req_mem_bytes) = match parse_resource_request(&rec.category) {
            Ok(v) => v,
            Err(_) => {
                stats.missing_request += 1;
                continue;
            }
        };
        if rec.cpu_s < 0.0 || rec.maxvmem_bytes < 0.0 || rec.wallclock_s < 0.0 {
            stats.negative_usage += 1;
            continue;
        }
        survivors.push(Survivor {
            rec,
            req_time_s,
            req_mem_bytes,
        });
    }

    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for s in &survivors {
        *per_user.entry(s.rec.owner.as_str()).or_default() += 1;
    }
    let before = survivors.len();
    survivors.retain(|s| per_user[s.rec.owner.as_str()] >= cfg.min_jobs_per_user);
    stats.below_min_jobs = before - survivors.len();
    stats.surviving = survivors.len();

    if survivors.is_empty() {
        return Err(IngestError::EmptyResult);
    }

    const SAMPLE_SALT: u64 = 0x5a4d_504c;

    let chosen: Vec<usize> = match cfg.sample_size {
        SampleSize::Count(k) if k < survivors.len() => {
            let mut rng = stream(cfg.rng_seed, SAMPLE_SALT);
            let mut idx: Vec<usize> = (0..survivors.len()).collect();
            for i in 0..k {
                let j = rng.random_range(i..idx.len());
                idx.swap(i, j);
            }
            let mut picked = idx[..k].to_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..survivors.len()).collect(),
    };
    stats.sampled = chosen.len();

    let mut project_codes: Vec<String> = Vec::new();
    let mut project_map: HashMap<String, u32> = HashMap::new();
    let jobs = chosen
        .iter()
        .map(|&i| {
            let s = &survivors[i];
            let rec = s.rec;
            let project_id = *project_map.entry(rec.project.clone()).or_insert_with(|| {
                project_codes.push(rec.project.clone());
                (project_codes.len() - 1) as u32
            });
            JobRecord {
                owner: rec.owner.clone(),
                role: roles.get(&rec.owner).copied().unwrap_or(Role::Unknowing),
                failed: cfg.label_rule.label(rec.failed_code, rec.exit_status),
                cpu_s: rec.cpu_s,
                maxvmem_bytes: rec.maxvmem_bytes,
                req_time_s: s.req_time_s,
                req_mem_bytes: s.req_mem_bytes,
                project_id,
                submission_time: rec.submission_time,
            }
        })
        .collect();

    Ok(CleanedJobs {
        jobs,
        project_codes,
        stats,
    })
}

/// Parse a roles file: one `user,role` pair per line, `#` comments skipped,
/// unknown role names mapped to `Unknowing`.
pub fn parse_roles_text(text: &str) -> HashMap<String, Role> {
    let mut roles = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((user, role)) = line.split_once(',') {
            roles.insert(user.trim().to_string(), Role::from_name(role.trim()));
        }
    }
    roles
}

/// Render a roles map in the file format accepted by [`parse_roles_text`].
pub fn roles_to_text(roles: &BTreeMap<String, Role>) -> String {
    let mut out = String::new();
    for (user, role) in roles {
        out.push_str(user);
        out.push(',');
        out.push_str(role.as_str());
        out.push('\n');
    }
    out
}

/// Write cleaned jobs as a headered CSV (the pipeline's intermediate format).
pub fn jobs_to_csv(jobs: &[JobRecord]) -> String {
    let mut out = String::from(
        "owner,role,failed,cpu_s,maxvmem_bytes,req_time_s,req_mem_bytes,project_id,submission_time\n",
    );
    for j in jobs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            j.owner,
            j.role,
            j.failed,
            j.cpu_s,
            j.maxvmem_bytes,
            j.req_time_s,
            j.req_mem_bytes,
            j.project_id,
            j.submission_time
        ));
    }
    out
}

/// Parse the CSV written by [`jobs_to_csv`].
pub fn jobs_from_csv(text: &str) -> Result<Vec<JobRecord>, IngestError> {
    let mut jobs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(IngestError::MalformedLine {
                line: i + 1,
                fields: f.len(),
            });
        }
        let parse_err = |field: usize, value: &str| IngestError::NumericParse {
            line: i + 1,
            field,
            value: value.to_string(),
        };
        jobs.push(JobRecord {
            owner: f[0].to_string(),
            role: Role::from_name(f[1]),
            failed: f[2].parse().map_err(|_| parse_err(3, f[2]))?,
            cpu_s: f[3].parse().map_err(|_| parse_err(4, f[3]))?,
            maxvmem_bytes: f[4].parse().map_err(|_| parse_err(5, f[4]))?,
            req_time_s: f[5].parse().map_err(|_| parse_err(6, f[5]))?,
            req_mem_bytes: f[6].parse().map_err(|_| parse_err(7, f[6]))?,
            project_id: f[7].parse().map_err(|_| parse_err(8, f[7]))?,
            submission_time: f[8].parse().map_err(|_| parse_err(9, f[8]))?,
        });
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> RawAccountingRecord {
        RawAccountingRecord {
            qname: "batch.q".into(),
            owner: "alice".into(),
            job_number: 17,
            submission_time: 1_600_000_000,
            start_time: 1_600_000_100,
            end_time: 1_600_003_700,
            failed_code: 0,
            exit_status: 0,
            wallclock_s: 3600.0,
            cpu_s: 3490.25,
            maxvmem_bytes: 2147483648.0,
            project: "proj_a".into(),
            category: "-l h_rt=3600,h_vmem=4G".into(),
            extra: (0..32).map(|i| format!("x{i}")).collect(),
        }
    }

    #[test]
    fn line_round_trips_through_parser() {
        let rec = sample_record();
        let parsed = parse_accounting_line(&rec.to_line(), 1).unwrap().unwrap();
        assert_eq!(parsed, rec);
    }

    #[test]
    fn escaped_colons_in_category_round_trip() {
        let mut rec = sample_record();
        rec.category = "-l h_rt=60,h_vmem=512M -ac ctx:3".into();
        let line = rec.to_line();
        assert!(line.contains("\\:"));
        let parsed = parse_accounting_line(&line, 1).unwrap().unwrap();
        assert_eq!(parsed, rec);
    }

    #[test]
    fn wrong_field_count_is_malformed() {
        let line = sample_record().to_line();
        let truncated = line.rsplit_once(':').unwrap().0;
        match parse_accounting_line(truncated, 7) {
            Err(IngestError::MalformedLine { line: 7, fields: 44 }) => {}
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn comment_and_blank_lines_are_skipped() {
        assert!(parse_accounting_line("# accounting dump", 1).unwrap().is_none());
        assert!(parse_accounting_line("", 2).unwrap().is_none());
    }

    #[test]
    fn numeric_parse_error_carries_position() {
        let line = sample_record().to_line();
        let mut broken: Vec<String> = line.split(':').map(str::to_string).collect();
        broken[POS_CPU - 1] = "not_a_number".into();
        match parse_accounting_line(&broken.join(":"), 3) {
            Err(IngestError::NumericParse { line: 3, field, .. }) => assert_eq!(field, POS_CPU),
            other => panic!("expected NumericParse, got {other:?}"),
        }
    }

    #[test]
    fn resource_request_units_and_order() {
        assert_eq!(
            parse_resource_request("-l h_rt=3600,h_vmem=4G").unwrap(),
            (3600, 4294967296)
        );
        assert_eq!(
            parse_resource_request("-l h_vmem=512M -l h_rt=60").unwrap(),
            (60, 536870912)
        );
        assert_eq!(
            parse_resource_request("h_rt=10,h_vmem=1024").unwrap(),
            (10, 1024)
        );
        assert_eq!(
            parse_resource_request("h_rt=10,h_vmem=2k").unwrap(),
            (10, 2048)
        );
        assert!(matches!(
            parse_resource_request("-l h_rt=3600"),
            Err(IngestError::MissingRequest { token: "h_vmem" })
        ));
        assert!(matches!(
            parse_resource_request("-l h_vmem=4G"),
            Err(IngestError::MissingRequest { token: "h_rt" })
        ));
    }

    fn record_for(owner: &str, submission: i64, n: u64) -> RawAccountingRecord {
        let mut rec = sample_record();
        rec.owner = owner.into();
        rec.submission_time = submission;
        rec.job_number = n;
        rec
    }

    #[test]
    fn min_jobs_filter_keeps_only_heavy_users() {
        let mut records = Vec::new();
        for (user, count) in [("u250", 250usize), ("u199", 199), ("u300", 300)] {
            for i in 0..count {
                records.push(record_for(user, 1_600_000_000 + i as i64, i as u64));
            }
        }
        let cfg = IngestConfig {
            min_jobs_per_user: 200,
            ..IngestConfig::default()
        };
        let out = clean_filter_sample(&records, &HashMap::new(), &cfg).unwrap();
        assert_eq!(out.jobs.len(), 550);
        assert!(out.jobs.iter().all(|j| j.owner != "u199"));
        assert_eq!(out.stats.below_min_jobs, 199);
    }

    #[test]
    fn sample_all_is_identity_and_seeded_sampling_is_deterministic() {
        let records: Vec<_> = (0..400)
            .map(|i| record_for("solo", 1_600_000_000 + i, i as u64))
            .collect();
        let cfg = IngestConfig::default();
        let all = clean_filter_sample(&records, &HashMap::new(), &cfg).unwrap();
        assert_eq!(all.jobs.len(), 400);

        let cfg_k = IngestConfig {
            sample_size: SampleSize::Count(50),
            ..IngestConfig::default()
        };
        let a = clean_filter_sample(&records, &HashMap::new(), &cfg_k).unwrap();
        let b = clean_filter_sample(&records, &HashMap::new(), &cfg_k).unwrap();
        assert_eq!(a.jobs, b.jobs);
        assert_eq!(a.jobs.len(), 50);
        // Sampled output preserves input order, hence strictly increasing times.
        assert!(a.jobs.windows(2).all(|w| w[0].submission_time < w[1].submission_time));
    }

    #[test]
    fn failed_label_rules() {
        assert_eq!(LabelRule::AnyNonzero.label(0, 0), 0);
        assert_eq!(LabelRule::AnyNonzero.label(100, 0), 1);
        assert_eq!(LabelRule::AnyNonzero.label(0, 1), 1);
        assert_eq!(LabelRule::ResourceKillOnly.label(0, 1), 0);
        assert_eq!(LabelRule::ResourceKillOnly.label(0, 137), 1);
        assert_eq!(LabelRule::ResourceKillOnly.label(100, 0), 1);
    }

    #[test]
    fn unknown_users_get_unknowing_role() {
        let records: Vec<_> = (0..300)
            .map(|i| record_for("ghost", 1_600_000_000 + i, i as u64))
            .collect();
        let out = clean_filter_sample(&records, &HashMap::new(), &IngestConfig::default()).unwrap();
        assert!(out.jobs.iter().all(|j| j.role == Role::Unknowing));
    }

    #[test]
    fn roles_file_parses_and_defaults() {
        let text = "# directory dump\nalice,Faculty\nbob,Wizard\n\ncarol, Staff\n";
        let roles = parse_roles_text(text);
        assert_eq!(roles["alice"], Role::Faculty);
        assert_eq!(roles["bob"], Role::Unknowing);
        assert_eq!(roles["carol"], Role::Staff);
    }

    #[test]
    fn jobs_csv_round_trips() {
        let records: Vec<_> = (0..250)
            .map(|i| record_for("u", 1_600_000_000 + i, i as u64))
            .collect();
        let out = clean_filter_sample(&records, &HashMap::new(), &IngestConfig::default()).unwrap();
        let csv = jobs_to_csv(&out.jobs);
        assert_eq!(jobs_from_csv(&csv).unwrap(), out.jobs);
    }
}
