//! Defect and time records, their file formats, and arrival series.
//!
//! One review issue is recorded as one defect. Records are immutable once
//! ingested; a correction is a new file, never an in-place edit.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowDiagnostic};

/// Column order of the defects CSV.
pub const DEFECT_COLUMNS: [&str; 9] = [
    "id",
    "product_id",
    "phase_injected",
    "phase_found",
    "found_at",
    "fixed_at",
    "severity",
    "status",
    "fix_changes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Requirements,
    Design,
    Build,
    Review,
    Test,
    Use,
    Unknown,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Requirements,
        Phase::Design,
        Phase::Build,
        Phase::Review,
        Phase::Test,
        Phase::Use,
        Phase::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Requirements => "requirements",
            Phase::Design => "design",
            Phase::Build => "build",
            Phase::Review => "review",
            Phase::Test => "test",
            Phase::Use => "use",
            Phase::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Fixed,
    Deferred,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Open => "open",
            Status::Fixed => "fixed",
            Status::Deferred => "deferred",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(Status::Open),
            "fixed" => Ok(Status::Fixed),
            "deferred" => Ok(Status::Deferred),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

/// Triage severity: 1 is critical, 4 is cosmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Severity(u8);

impl Severity {
    pub fn new(level: u8) -> Result<Self, String> {
        if (1..=4).contains(&level) {
            Ok(Severity(level))
        } else {
            Err(format!("severity {level} outside 1..4"))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Severity {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Severity::new(v)
    }
}

impl From<Severity> for u8 {
    fn from(s: Severity) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectRecord {
    pub id: String,
    pub product_id: String,
    pub phase_injected: Phase,
    pub phase_found: Phase,
    pub found_at: DateTime<Utc>,
    pub fixed_at: Option<DateTime<Utc>>,
    pub severity: Severity,
    pub status: Status,
    pub fix_changes: Option<u64>,
}

impl DefectRecord {
    /// Checks the cross-field invariants that the type system does not.
    pub fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.product_id.is_empty() {
            return Err("empty product_id".into());
        }
        if self.phase_found == Phase::Unknown {
            return Err("phase_found may not be unknown".into());
        }
        if let Some(fixed) = self.fixed_at {
            if fixed < self.found_at {
                return Err(format!(
                    "fixed_at {} is before found_at {}",
                    format_timestamp(&fixed),
                    format_timestamp(&self.found_at)
                ));
            }
        }
        match (self.status, self.fixed_at.is_some()) {
            (Status::Fixed, false) => Err("status fixed requires fixed_at".into()),
            (Status::Open | Status::Deferred, true) => {
                Err(format!("fixed_at present but status is {}", self.status))
            }
            _ => Ok(()),
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.fixed_at.is_some()
    }
}

/// Size metadata for one work product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductProfile {
    pub product_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unique_formulas: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kloc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function_points: Option<u64>,
    pub description: String,
}

// Wide numeric types so that zero and negative sizes reach validation
// instead of failing inside serde with a less useful message.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    product_id: String,
    #[serde(default)]
    unique_formulas: Option<f64>,
    #[serde(default)]
    kloc: Option<f64>,
    #[serde(default)]
    function_points: Option<f64>,
    #[serde(default)]
    description: String,
}

fn positive_count(name: &str, v: Option<f64>) -> Result<Option<u64>, String> {
    match v {
        None => Ok(None),
        Some(x) if !(x > 0.0) => Err(format!("{name}: size must be positive, got {x}")),
        Some(x) if x.fract() != 0.0 || x > u64::MAX as f64 => {
            Err(format!("{name}: expected a whole number, got {x}"))
        }
        Some(x) => Ok(Some(x as u64)),
    }
}

impl ProductProfile {
    pub fn check(&self) -> Result<(), String> {
        if self.product_id.is_empty() {
            return Err("empty product_id".into());
        }
        if self.unique_formulas.is_none() && self.kloc.is_none() && self.function_points.is_none() {
            return Err(format!(
                "product {}: at least one of unique_formulas, kloc, function_points is required",
                self.product_id
            ));
        }
        if self.unique_formulas == Some(0) || self.function_points == Some(0) {
            return Err(format!(
                "product {}: size must be positive",
                self.product_id
            ));
        }
        if let Some(k) = self.kloc {
            if !(k > 0.0) || !k.is_finite() {
                return Err(format!(
                    "product {}: size must be positive, got kloc {k}",
                    self.product_id
                ));
            }
        }
        Ok(())
    }

    fn from_raw(raw: RawProfile) -> Result<Self, String> {
        let profile = ProductProfile {
            unique_formulas: positive_count("unique_formulas", raw.unique_formulas)?,
            function_points: positive_count("function_points", raw.function_points)?,
            kloc: raw.kloc,
            product_id: raw.product_id,
            description: raw.description,
        };
        profile.check()?;
        Ok(profile)
    }
}

impl<'de> Deserialize<'de> for ProductProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawProfile::deserialize(d)?;
        ProductProfile::from_raw(raw).map_err(serde::de::Error::custom)
    }
}

/// Defect counts per consecutive bucket, starting at `origin`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSeries {
    pub origin: DateTime<Utc>,
    pub bucket_width: TimeDelta,
    pub counts: Vec<u64>,
}

impl ArrivalSeries {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bucket_days(&self) -> f64 {
        nanos(self.bucket_width) as f64 / NANOS_PER_DAY as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub product_id: String,
    pub phase: Phase,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

impl TimeRecord {
    pub fn new(
        product_id: impl Into<String>,
        phase: Phase,
        started_at: DateTime<Utc>,
        ended_at: DateTime<Utc>,
    ) -> Result<Self> {
        if ended_at <= started_at {
            return Err(Error::invalid(format!(
                "time record ends at {} which is not after its start {}",
                format_timestamp(&ended_at),
                format_timestamp(&started_at)
            )));
        }
        Ok(TimeRecord {
            product_id: product_id.into(),
            phase,
            started_at,
            ended_at,
        })
    }

    pub fn duration(&self) -> TimeDelta {
        self.ended_at - self.started_at
    }
}

/// A validated set of products and the defects recorded against them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub products: Vec<ProductProfile>,
    pub defects: Vec<DefectRecord>,
}

impl Ledger {
    pub fn new(products: Vec<ProductProfile>, defects: Vec<DefectRecord>) -> Result<Self> {
        let ledger = Ledger { products, defects };
        ledger.validate()?;
        Ok(ledger)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ledger: Ledger = serde_json::from_str(text)?;
        ledger.validate()?;
        Ok(ledger)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ledger serializes");
        s.push('\n');
        s
    }

    pub fn product(&self, id: &str) -> Option<&ProductProfile> {
        self.products.iter().find(|p| p.product_id == id)
    }

    pub fn defects_for<'a>(
        &'a self,
        product_id: &'a str,
    ) -> impl Iterator<Item = &'a DefectRecord> {
        self.defects
            .iter()
            .filter(move |d| d.product_id == product_id)
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for p in &self.products {
            if let Err(e) = p.check() {
                problems.push(e);
            }
            if !seen.insert(p.product_id.as_str()) {
                problems.push(format!("duplicate product_id {:?}", p.product_id));
            }
        }
        let mut ids = BTreeSet::new();
        for d in &self.defects {
            if let Err(e) = d.check() {
                problems.push(format!("defect {}: {e}", d.id));
            }
            if !ids.insert(d.id.as_str()) {
                problems.push(format!("duplicate defect id {:?}", d.id));
            }
            if !seen.contains(d.product_id.as_str()) {
                problems.push(format!(
                    "defect {} refers to unknown product {:?}",
                    d.id, d.product_id
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses an RFC 3339 timestamp, which must carry a UTC offset.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    let t = DateTime::parse_from_rfc3339(s).map_err(|e| format!("bad timestamp {s:?}: {e}"))?;
    if t.offset().local_minus_utc() != 0 {
        return Err(format!("timestamp {s:?} is not UTC"));
    }
    Ok(t.with_timezone(&Utc))
}

fn optional(s: &str) -> Option<&str> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

fn parse_row(fields: &csv::StringRecord) -> Result<DefectRecord, String> {
    let f = |i: usize| fields.get(i).unwrap_or("");

    let severity_raw = f(6);
    let severity = severity_raw
        .parse::<u8>()
        .map_err(|_| format!("bad severity {severity_raw:?}"))
        .and_then(Severity::new)?;
    let fix_changes = optional(f(8))
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| format!("bad fix_changes {s:?}"))
        })
        .transpose()?;

    let record = DefectRecord {
        id: f(0).to_string(),
        product_id: f(1).to_string(),
        phase_injected: f(2).parse()?,
        phase_found: f(3).parse()?,
        found_at: parse_timestamp(f(4))?,
        fixed_at: optional(f(5)).map(parse_timestamp).transpose()?,
        severity,
        status: f(7).parse()?,
        fix_changes,
    };
    record.check()?;
    Ok(record)
}

/// Parses a defects CSV. Either every row becomes a record or the parse fails
/// with one diagnostic per offending row.
pub fn parse_defect_log(text: &str) -> Result<Vec<DefectRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().ne(DEFECT_COLUMNS.iter().copied()) {
        return Err(Error::Csv(format!(
            "header must be `{}`, got `{}`",
            DEFECT_COLUMNS.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut records = Vec::new();
    let mut problems = Vec::new();
    let mut first_row: HashMap<String, usize> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let fields = match row {
            Ok(fields) => fields,
            Err(e) => return Err(Error::Csv(format!("row {row_no}: {e}"))),
        };
        match parse_row(&fields) {
            Ok(rec) => {
                if let Some(prev) = first_row.get(&rec.id) {
                    problems.push(RowDiagnostic::new(
                        row_no,
                        format!("duplicate id {:?} (first seen on row {prev})", rec.id),
                    ));
                } else {
                    first_row.insert(rec.id.clone(), row_no);
                    records.push(rec);
                }
            }
            Err(msg) => problems.push(RowDiagnostic::new(row_no, msg)),
        }
    }
    if problems.is_empty() {
        Ok(records)
    } else {
        Err(Error::Rows(problems))
    }
}

pub fn serialize_defect_log(records: &[DefectRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DEFECT_COLUMNS).expect("in-memory write");
    for r in records {
        let found = format_timestamp(&r.found_at);
        let fixed = r
            .fixed_at
            .as_ref()
            .map(format_timestamp)
            .unwrap_or_default();
        let severity = r.severity.level().to_string();
        let changes = r.fix_changes.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([
            r.id.as_str(),
            r.product_id.as_str(),
            r.phase_injected.as_str(),
            r.phase_found.as_str(),
            found.as_str(),
            fixed.as_str(),
            severity.as_str(),
            r.status.as_str(),
            changes.as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn parse_product_registry(text: &str) -> Result<Vec<ProductProfile>> {
    let profiles: Vec<ProductProfile> = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    for p in &profiles {
        if !seen.insert(p.product_id.as_str()) {
            return Err(Error::invalid(format!(
                "duplicate product_id {:?}",
                p.product_id
            )));
        }
    }
    Ok(profiles)
}

const NANOS_PER_DAY: i128 = 86_400 * 1_000_000_000;

fn nanos(d: TimeDelta) -> i128 {
    d.num_seconds() as i128 * 1_000_000_000 + d.subsec_nanos() as i128
}

pub fn days(d: f64) -> Result<TimeDelta> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!(
            "bucket width must be positive, got {d} days"
        )));
    }
    let ns = (d * NANOS_PER_DAY as f64).round();
    if ns < 1.0 || ns > i64::MAX as f64 {
        return Err(Error::invalid(format!(
            "bucket width {d} days is out of range"
        )));
    }
    Ok(TimeDelta::nanoseconds(ns as i64))
}

/// Buckets records by `found_at`. Buckets are half-open `[origin + k·w,
/// origin + (k+1)·w)` and run through the bucket holding the latest record.
pub fn arrival_series(
    records: &[DefectRecord],
    bucket_width: TimeDelta,
    origin: DateTime<Utc>,
) -> Result<ArrivalSeries> {
    let width = nanos(bucket_width);
    if width <= 0 {
        return Err(Error::invalid("bucket width must be positive"));
    }
    let mut counts: Vec<u64> = Vec::new();
    for r in records {
        let offset = nanos(r.found_at - origin);
        if offset < 0 {
            return Err(Error::invalid(format!(
                "defect {} found at {} precedes the series origin {}",
                r.id,
                format_timestamp(&r.found_at),
                format_timestamp(&origin)
            )));
        }
        let k = usize::try_from(offset / width).map_err(|_| Error::invalid("too many buckets"))?;
        if k >= counts.len() {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }
    Ok(ArrivalSeries {
        origin,
        bucket_width,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "id,product_id,phase_injected,phase_found,found_at,fixed_at,severity,status,fix_changes\n";

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_defect_log(HEADER).unwrap().is_empty());
    }

    #[test]
    fn maps_fields_directly() {
        let text = format!(
            "{HEADER}d1,m1,build,review,2004-03-01T10:00:00Z,2004-03-02T09:00:00Z,2,fixed,3\n"
        );
        let recs = parse_defect_log(&text).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.id, "d1");
        assert_eq!(r.product_id, "m1");
        assert_eq!(r.phase_injected, Phase::Build);
        assert_eq!(r.phase_found, Phase::Review);
        assert_eq!(r.found_at, ts("2004-03-01T10:00:00Z"));
        assert_eq!(r.fixed_at, Some(ts("2004-03-02T09:00:00Z")));
        assert_eq!(r.severity.level(), 2);
        assert_eq!(r.status, Status::Fixed);
        assert_eq!(r.fix_changes, Some(3));
    }

    #[test]
    fn fixed_before_found_names_row_and_timestamps() {
        let text = format!(
            "{HEADER}d1,m1,build,review,2004-03-02T10:00:00Z,2004-03-01T09:00:00Z,2,fixed,3\n"
        );
        let err = parse_defect_log(&text).unwrap_err();
        let Error::Rows(rows) = &err else {
            panic!("expected row diagnostics, got {err:?}")
        };
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].row, 2);
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("2004-03-01T09:00:00Z"), "{msg}");
        assert!(msg.contains("2004-03-02T10:00:00Z"), "{msg}");
    }

    #[test]
    fn reports_every_bad_row() {
        let text = format!(
            "{HEADER}\
             d1,m1,build,review,2004-03-01T10:00:00Z,,2,open,\n\
             d2,m1,oops,review,2004-03-01T10:00:00Z,,2,open,\n\
             d1,m1,build,review,2004-03-01T10:00:00Z,,2,open,\n\
             d4,m1,build,unknown,2004-03-01T10:00:00Z,,5,open,\n"
        );
        let Error::Rows(rows) = parse_defect_log(&text).unwrap_err() else {
            panic!()
        };
        let numbers: Vec<_> = rows.iter().map(|d| d.row).collect();
        assert_eq!(numbers, vec![3, 4, 5]);
        assert!(rows[1].message.contains("duplicate id"));
    }

    #[test]
    fn status_and_fixed_at_must_agree() {
        let open_with_fix = format!(
            "{HEADER}d1,m1,build,review,2004-03-01T10:00:00Z,2004-03-02T10:00:00Z,1,open,\n"
        );
        assert!(parse_defect_log(&open_with_fix).is_err());
        let fixed_without = format!("{HEADER}d1,m1,build,review,2004-03-01T10:00:00Z,,1,fixed,\n");
        assert!(parse_defect_log(&fixed_without).is_err());
    }

    #[test]
    fn rejects_wrong_header_and_ragged_rows() {
        assert!(matches!(
            parse_defect_log("id,product_id\n"),
            Err(Error::Csv(_))
        ));
        let ragged = format!("{HEADER}d1,m1,build\n");
        assert!(matches!(parse_defect_log(&ragged), Err(Error::Csv(_))));
    }

    #[test]
    fn rejects_non_utc_timestamps() {
        let text = format!("{HEADER}d1,m1,build,review,2004-03-01T10:00:00+01:00,,2,open,\n");
        assert!(parse_defect_log(&text).is_err());
    }

    #[test]
    fn registry_examples() {
        let one = parse_product_registry(
            r#"[{"product_id":"m1","unique_formulas":2182,"description":"avg Mercer model"}]"#,
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].unique_formulas, Some(2182));
        assert!(parse_product_registry("[]").unwrap().is_empty());

        let zero =
            parse_product_registry(r#"[{"product_id":"m1","unique_formulas":0,"description":""}]"#)
                .unwrap_err();
        assert!(zero.to_string().contains("size must be positive"), "{zero}");
    }

    #[test]
    fn registry_rejects_missing_sizes_negatives_and_duplicates() {
        assert!(parse_product_registry(r#"[{"product_id":"m1","description":"x"}]"#).is_err());
        assert!(parse_product_registry(r#"[{"product_id":"m1","kloc":-2.0}]"#).is_err());
        let dup = parse_product_registry(
            r#"[{"product_id":"m1","kloc":2.0},{"product_id":"m1","function_points":10}]"#,
        )
        .unwrap_err();
        assert!(dup.to_string().contains("duplicate"));
    }

    fn found(id: &str, at: &str) -> DefectRecord {
        DefectRecord {
            id: id.into(),
            product_id: "m1".into(),
            phase_injected: Phase::Build,
            phase_found: Phase::Review,
            found_at: ts(at),
            fixed_at: None,
            severity: Severity::new(3).unwrap(),
            status: Status::Open,
            fix_changes: None,
        }
    }

    #[test]
    fn arrival_counts_weekly_buckets() {
        let origin = ts("2004-03-01T00:00:00Z");
        let recs = vec![
            found("a", "2004-03-01T00:00:00Z"),
            found("b", "2004-03-01T12:00:00Z"),
            found("c", "2004-03-09T00:00:00Z"),
        ];
        let s = arrival_series(&recs, TimeDelta::days(7), origin).unwrap();
        assert_eq!(s.counts, vec![2, 1]);
        assert_eq!(s.bucket_days(), 7.0);
    }

    #[test]
    fn arrival_empty_and_errors() {
        let origin = ts("2004-03-01T00:00:00Z");
        assert!(arrival_series(&[], TimeDelta::days(7), origin)
            .unwrap()
            .counts
            .is_empty());
        let early = vec![found("a", "2004-02-01T00:00:00Z")];
        assert!(arrival_series(&early, TimeDelta::days(7), origin).is_err());
        assert!(arrival_series(&[], TimeDelta::zero(), origin).is_err());
    }

    #[test]
    fn time_record_must_move_forward() {
        let a = ts("2004-03-01T09:00:00Z");
        let b = ts("2004-03-01T10:30:00Z");
        let rec = TimeRecord::new("m1", Phase::Build, a, b).unwrap();
        assert_eq!(rec.duration(), TimeDelta::minutes(90));
        assert!(TimeRecord::new("m1", Phase::Build, b, a).is_err());
        assert!(TimeRecord::new("m1", Phase::Build, a, a).is_err());
    }

    #[test]
    fn ledger_checks_cross_references() {
        let products =
            parse_product_registry(r#"[{"product_id":"m1","unique_formulas":10}]"#).unwrap();
        let mut orphan = found("a", "2004-03-01T00:00:00Z");
        orphan.product_id = "m2".into();
        assert!(Ledger::new(products.clone(), vec![orphan]).is_err());
        let ok = Ledger::new(products, vec![found("a", "2004-03-01T00:00:00Z")]).unwrap();
        let back = Ledger::from_json(&ok.to_json()).unwrap();
        assert_eq!(back, ok);
    }
}
