//! Defect density, injection rate, removal efficiency and removal rate.
//!
//! Missing inputs give missing outputs: a metric that cannot be computed is
//! `None`, never zero.

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{DefectRecord, Phase, ProductProfile};

/// Trailing window used by [`summarize`] for the removal rate.
pub const DEFAULT_RATE_WINDOW_DAYS: i64 = 7;

/// Label for the injection-rate estimator used by [`summarize`]: every
/// recorded defect counts as injected, no residual is added.
pub const INJECTION_ESTIMATOR: &str = "recorded-defects/units";
/// Label for the removal-efficiency estimator used by [`summarize`]: defects
/// found before the `use` phase over all recorded defects.
pub const REMOVAL_ESTIMATOR: &str = "found-before-use/recorded";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityUnit {
    PerUf,
    PerKloc,
    PerFp,
}

pub fn defect_density(defects: u64, size: f64, unit: DensityUnit) -> Result<f64> {
    if !(size > 0.0) || !size.is_finite() {
        return Err(Error::invalid(format!(
            "size must be positive for {unit:?} density, got {size}"
        )));
    }
    // `size` is already expressed in the unit's denominator (UF, KLOC or FP).
    Ok(defects as f64 / size)
}

/// Fraction of units of work that are defective. More defects than units is
/// rejected rather than clamped.
pub fn injection_rate(defects_injected: u64, units_of_work: u64) -> Result<f64> {
    if units_of_work == 0 {
        return Err(Error::invalid("units of work must be positive"));
    }
    if defects_injected > units_of_work {
        return Err(Error::invalid(format!(
            "{defects_injected} defects in {units_of_work} units gives an injection rate above 1"
        )));
    }
    Ok(defects_injected as f64 / units_of_work as f64)
}

/// Fraction of the defects present that a find-and-fix process removed. The
/// caller chooses the denominator (phase entry count or lifetime total).
pub fn removal_efficiency(removed_by_process: u64, total_present: u64) -> Result<f64> {
    if total_present == 0 {
        return Err(Error::invalid("total defects present must be positive"));
    }
    if removed_by_process > total_present {
        return Err(Error::invalid(format!(
            "removed {removed_by_process} exceeds the {total_present} defects present"
        )));
    }
    Ok(removed_by_process as f64 / total_present as f64)
}

/// Latest timestamp mentioned by any record.
pub fn latest_event(records: &[DefectRecord]) -> Option<DateTime<Utc>> {
    records
        .iter()
        .flat_map(|r| std::iter::once(r.found_at).chain(r.fixed_at))
        .max()
}

/// Fixes per day in the window `(end - window, end]`. `None` when the window
/// holds no fixes.
pub fn removal_rate_at(
    records: &[DefectRecord],
    window: TimeDelta,
    end: DateTime<Utc>,
) -> Result<Option<f64>> {
    if window <= TimeDelta::zero() {
        return Err(Error::invalid("removal-rate window must be positive"));
    }
    let start = end - window;
    let fixes = records
        .iter()
        .filter_map(|r| r.fixed_at)
        .filter(|&t| t > start && t <= end)
        .count();
    if fixes == 0 {
        return Ok(None);
    }
    let window_days = window.num_milliseconds() as f64 / 86_400_000.0;
    Ok(Some(fixes as f64 / window_days))
}

/// Removal rate over the trailing window ending at the ledger's latest event.
pub fn removal_rate(records: &[DefectRecord], window: TimeDelta) -> Result<Option<f64>> {
    if window <= TimeDelta::zero() {
        return Err(Error::invalid("removal-rate window must be positive"));
    }
    match latest_event(records) {
        Some(end) => removal_rate_at(records, window, end),
        None => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub product_id: String,
    pub defect_count: u64,
    pub density_per_uf: Option<f64>,
    pub density_per_kloc: Option<f64>,
    pub injection_rate: Option<f64>,
    pub removal_efficiency: Option<f64>,
    pub removal_rate: Option<f64>,
    pub injection_estimator: Option<String>,
    pub removal_estimator: Option<String>,
}

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "product_id",
    "defect_count",
    "density_per_uf",
    "density_per_kloc",
    "injection_rate",
    "removal_efficiency",
    "removal_rate",
    "injection_estimator",
    "removal_estimator",
];

pub fn summarize(records: &[DefectRecord], profile: &ProductProfile) -> Result<MetricsSummary> {
    summarize_with_window(records, profile, TimeDelta::days(DEFAULT_RATE_WINDOW_DAYS))
}

pub fn summarize_with_window(
    records: &[DefectRecord],
    profile: &ProductProfile,
    window: TimeDelta,
) -> Result<MetricsSummary> {
    if let Some(r) = records.iter().find(|r| r.product_id != profile.product_id) {
        return Err(Error::invalid(format!(
            "defect {} belongs to product {:?}, not {:?}",
            r.id, r.product_id, profile.product_id
        )));
    }
    let count = records.len() as u64;
    let mut summary = MetricsSummary {
        product_id: profile.product_id.clone(),
        defect_count: count,
        density_per_uf: None,
        density_per_kloc: None,
        injection_rate: None,
        removal_efficiency: None,
        removal_rate: None,
        injection_estimator: None,
        removal_estimator: None,
    };
    if records.is_empty() {
        return Ok(summary);
    }

    if let Some(uf) = profile.unique_formulas {
        summary.density_per_uf = Some(defect_density(count, uf as f64, DensityUnit::PerUf)?);
    }
    if let Some(kloc) = profile.kloc {
        summary.density_per_kloc = Some(defect_density(count, kloc, DensityUnit::PerKloc)?);
    }
    if let Some(units) = profile.unique_formulas.or(profile.function_points) {
        summary.injection_rate = Some(injection_rate(count, units)?);
        summary.injection_estimator = Some(INJECTION_ESTIMATOR.to_string());
    }
    let before_use = records
        .iter()
        .filter(|r| r.phase_found != Phase::Use)
        .count() as u64;
    summary.removal_efficiency = Some(removal_efficiency(before_use, count)?);
    summary.removal_estimator = Some(REMOVAL_ESTIMATOR.to_string());
    summary.removal_rate = removal_rate(records, window)?;
    Ok(summary)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summaries_to_csv(summaries: &[MetricsSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).expect("in-memory write");
    for s in summaries {
        w.write_record([
            s.product_id.clone(),
            s.defect_count.to_string(),
            cell(s.density_per_uf),
            cell(s.density_per_kloc),
            cell(s.injection_rate),
            cell(s.removal_efficiency),
            cell(s.removal_rate),
            s.injection_estimator.clone().unwrap_or_default(),
            s.removal_estimator.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
