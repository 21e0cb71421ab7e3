//! Rayleigh defect-arrival model.
//!
//! Cumulative discoveries follow `K·(1 − exp(−t²/2σ²))`. The discovery rate
//! peaks at `t = σ`, which is also where the cumulative curve inflects, and
//! by then `1 − e^(−1/2)` ≈ 39.35% of the `K` lifetime defects have appeared.
//!
//! Fitting works on cumulative counts evaluated at bucket right edges, with
//! time measured in buckets. For a fixed σ the least-squares `K` has a closed
//! form, so only σ is searched (golden section).

use chrono::DateTime;
use serde::Serialize;

use crate::error::{Error, Result, RowDiagnostic};
use crate::ledger::ArrivalSeries;

/// Fraction of lifetime defects discovered by the peak time, `1 − e^(−1/2)`.
pub fn fraction_by_peak() -> f64 {
    -(-0.5f64).exp_m1()
}

pub const SIGMA_LOWER: f64 = 0.1;
/// Upper search bound as a multiple of the last bucket edge.
pub const SIGMA_UPPER_FACTOR: f64 = 3.0;
pub const SIGMA_REL_TOLERANCE: f64 = 1e-6;
pub const MIN_BUCKETS: usize = 3;

const SCAN_POINTS: usize = 64;

pub fn rayleigh_cdf(t: f64, k_total: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    if t <= 0.0 {
        return 0.0;
    }
    k_total * -(-(t * t) / (2.0 * sigma * sigma)).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayleighFit {
    pub k_total: f64,
    /// Peak discovery time, in buckets.
    pub sigma: f64,
    /// Squared error against the observed cumulative counts.
    pub sse: f64,
    pub buckets_used: usize,
}

impl RayleighFit {
    pub fn cdf(&self, t: f64) -> f64 {
        rayleigh_cdf(t, self.k_total, self.sigma)
    }

    /// Expected cumulative count at the peak, about 40% of `k_total`.
    pub fn cumulative_at_peak(&self) -> f64 {
        self.k_total * fraction_by_peak()
    }
}

fn profile(cumulative: &[f64], sigma: f64) -> (f64, f64) {
    let (mut cg, mut gg) = (0.0, 0.0);
    for (i, &c) in cumulative.iter().enumerate() {
        let g = rayleigh_cdf((i + 1) as f64, 1.0, sigma);
        cg += c * g;
        gg += g * g;
    }
    let k = if gg > 0.0 { cg / gg } else { 0.0 };
    let sse = cumulative
        .iter()
        .enumerate()
        .map(|(i, &c)| (c - k * rayleigh_cdf((i + 1) as f64, 1.0, sigma)).powi(2))
        .sum();
    (k, sse)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > rel_tol * 0.5 * (a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fits per-bucket counts (bucket `i` ends at `t = i + 1`).
pub fn fit_counts(counts: &[f64]) -> Result<RayleighFit> {
    if counts.len() < MIN_BUCKETS {
        return Err(Error::invalid(format!(
            "arrival fit needs at least {MIN_BUCKETS} buckets, got {}",
            counts.len()
        )));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid("arrival counts must be non-negative"));
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Err(Error::invalid("arrival series has no defects"));
    }
    let cumulative: Vec<f64> = counts
        .iter()
        .scan(0.0, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();

    let lower = SIGMA_LOWER;
    let upper = SIGMA_UPPER_FACTOR * counts.len() as f64;
    let sse = |s: f64| profile(&cumulative, s).1;

    // Coarse geometric scan to bracket the global minimum before refining.
    let ratio = (upper / lower).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i == SCAN_POINTS - 1 {
                upper
            } else {
                lower * ratio.powi(i as i32)
            }
        })
        .collect();
    let scanned: Vec<f64> = grid.iter().map(|&s| sse(s)).collect();
    let best = (0..SCAN_POINTS)
        .min_by(|&i, &j| scanned[i].total_cmp(&scanned[j]))
        .expect("non-empty grid");
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(SCAN_POINTS - 1)];
    let sigma = golden_section(sse, a, b, SIGMA_REL_TOLERANCE);

    let edge = 4.0 * SIGMA_REL_TOLERANCE;
    if sigma <= lower * (1.0 + edge) {
        return Err(Error::NonConvergence(format!(
            "sigma ran into the lower search bound {lower}"
        )));
    }
    if sigma >= upper * (1.0 - edge) {
        return Err(Error::NonConvergence(format!(
            "sigma ran into the upper search bound {upper} (3 × the last bucket edge); the peak is not yet visible"
        )));
    }
    let (k_total, sse) = profile(&cumulative, sigma);
    if !(k_total > 0.0) {
        return Err(Error::NonConvergence("fitted total is not positive".into()));
    }
    Ok(RayleighFit {
        k_total,
        sigma,
        sse,
        buckets_used: counts.len(),
    })
}

pub fn fit(series: &ArrivalSeries) -> Result<RayleighFit> {
    let counts: Vec<f64> = series.counts.iter().map(|&c| c as f64).collect();
    fit_counts(&counts)
}

/// Lifetime total implied by the count seen at the peak.
pub fn projected_total_from_peak(cumulative_at_peak: f64) -> Result<f64> {
    if !(cumulative_at_peak > 0.0) || !cumulative_at_peak.is_finite() {
        return Err(Error::invalid("cumulative count at peak must be positive"));
    }
    Ok(cumulative_at_peak / fraction_by_peak())
}

pub fn remaining_defects(fit: &RayleighFit, t: f64) -> f64 {
    if t <= 0.0 {
        return fit.k_total;
    }
    fit.k_total * (-(t * t) / (2.0 * fit.sigma * fit.sigma)).exp()
}

/// Time (in buckets) at which the expected remaining defects fall to
/// `residual_threshold`.
pub fn time_to_threshold(fit: &RayleighFit, residual_threshold: f64) -> Result<f64> {
    if !(residual_threshold > 0.0) {
        return Err(Error::invalid("residual threshold must be positive"));
    }
    if residual_threshold >= fit.k_total {
        return Err(Error::invalid(format!(
            "residual threshold {residual_threshold} is not below the projected total {}",
            fit.k_total
        )));
    }
    Ok(fit.sigma * (2.0 * (fit.k_total / residual_threshold).ln()).sqrt())
}

/// Arrival counts read from a `bucket_start,count` CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTable {
    pub bucket_days: f64,
    pub counts: Vec<u64>,
}

fn bucket_start_days(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    let secs = if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        t.timestamp() as f64 + t.timestamp_subsec_nanos() as f64 * 1e-9
    } else if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        d.and_hms_opt(0, 0, 0)
            .expect("midnight")
            .and_utc()
            .timestamp() as f64
    } else {
        return Err(format!(
            "bucket_start {s:?} is neither a number of days, a date, nor an RFC 3339 timestamp"
        ));
    };
    Ok(secs / 86_400.0)
}

/// Parses an arrival CSV. Starts may be day numbers, dates or timestamps and
/// must be evenly spaced; `bucket_days`, when given, must match the spacing.
pub fn parse_arrival_csv(text: &str, bucket_days: Option<f64>) -> Result<ArrivalTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().ne(["bucket_start", "count"]) {
        return Err(Error::Csv(format!(
            "header must be `bucket_start,count`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut starts = Vec::new();
    let mut counts = Vec::new();
    let mut problems = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Csv(format!("row {row_no}: {e}")))?;
        match bucket_start_days(&row[0]) {
            Ok(s) => starts.push((row_no, s)),
            Err(m) => problems.push(RowDiagnostic::new(row_no, m)),
        }
        match row[1].trim().parse::<u64>() {
            Ok(c) => counts.push(c),
            Err(_) => problems.push(RowDiagnostic::new(
                row_no,
                format!("bad count {:?}", &row[1]),
            )),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Rows(problems));
    }
    if counts.is_empty() {
        return Err(Error::invalid("arrival CSV has no rows"));
    }
    if let Some(w) = bucket_days {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::invalid(format!(
                "bucket width must be positive, got {w}"
            )));
        }
    }
    let spacing = if starts.len() >= 2 {
        starts[1].1 - starts[0].1
    } else {
        bucket_days
            .ok_or_else(|| Error::invalid("a single-row series needs an explicit bucket width"))?
    };
    if !(spacing > 0.0) {
        return Err(Error::invalid("bucket starts must increase"));
    }
    let tol = 1e-9 * spacing.max(1.0);
    for pair in starts.windows(2) {
        let (row, gap) = (pair[1].0, pair[1].1 - pair[0].1);
        if (gap - spacing).abs() > tol {
            return Err(Error::Rows(vec![RowDiagnostic::new(
                row,
                format!("bucket spacing {gap} days differs from {spacing} days"),
            )]));
        }
    }
    if let Some(w) = bucket_days {
        if (w - spacing).abs() > tol {
            return Err(Error::invalid(format!(
                "bucket width {w} days does not match the series spacing of {spacing} days"
            )));
        }
    }
    Ok(ArrivalTable {
        bucket_days: spacing,
        counts,
    })
}
