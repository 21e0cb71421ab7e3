//! Expected review issues from model size in unique formulas (UF).
//!
//! Two forms: a straight line `intercept + slope·UF` and an origin-constrained
//! square-root law `coefficient·√UF`.

use serde::Serialize;

use crate::error::{Error, Result, RowDiagnostic};

/// Intercept of the published size regression, in issues.
pub const PUBLISHED_INTERCEPT: f64 = 62.0;
/// Slope as printed alongside the published regression. At the published
/// averages (2182 UF, 151 issues) it predicts about 957 issues, so it is kept
/// for reference only.
pub const PRINTED_SLOPE: f64 = 0.41;
/// Slope that puts the line through the published averages:
/// (151 − 62) / 2182 ≈ 0.0408.
pub const DEFAULT_SLOPE: f64 = 0.0408;
pub const DEFAULT_SQRT_COEFFICIENT: f64 = 2.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearSizeModel {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearSizeModel {
    pub fn new(intercept: f64, slope: f64) -> Result<Self> {
        if !intercept.is_finite() || !slope.is_finite() {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if slope < 0.0 {
            return Err(Error::invalid(format!(
                "slope must be non-negative, got {slope}"
            )));
        }
        Ok(LinearSizeModel { intercept, slope })
    }
}

impl Default for LinearSizeModel {
    fn default() -> Self {
        LinearSizeModel {
            intercept: PUBLISHED_INTERCEPT,
            slope: DEFAULT_SLOPE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqrtSizeModel {
    pub coefficient: f64,
}

impl SqrtSizeModel {
    pub fn new(coefficient: f64) -> Result<Self> {
        if !(coefficient >= 0.0) || !coefficient.is_finite() {
            return Err(Error::invalid(format!(
                "coefficient must be non-negative, got {coefficient}"
            )));
        }
        Ok(SqrtSizeModel { coefficient })
    }
}

impl Default for SqrtSizeModel {
    fn default() -> Self {
        SqrtSizeModel {
            coefficient: DEFAULT_SQRT_COEFFICIENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SizePoint {
    pub uf: u64,
    pub issues: u64,
}

impl SizePoint {
    pub fn new(uf: u64, issues: u64) -> Result<Self> {
        if uf == 0 {
            return Err(Error::invalid("uf must be positive"));
        }
        Ok(SizePoint { uf, issues })
    }
}

pub fn linear_estimate(uf: u64, model: &LinearSizeModel) -> f64 {
    model.intercept + model.slope * uf as f64
}

pub fn sqrt_estimate(uf: u64, model: &SqrtSizeModel) -> f64 {
    model.coefficient * (uf as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub form: &'static str,
    pub intercept: f64,
    pub slope: f64,
    pub rss: f64,
    pub points: usize,
    pub warnings: Vec<String>,
}

impl LinearFit {
    pub fn model(&self) -> LinearSizeModel {
        LinearSizeModel {
            intercept: self.intercept,
            slope: self.slope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqrtFit {
    pub form: &'static str,
    pub coefficient: f64,
    pub rss: f64,
    pub points: usize,
}

impl SqrtFit {
    pub fn model(&self) -> SqrtSizeModel {
        SqrtSizeModel {
            coefficient: self.coefficient,
        }
    }
}

/// Ordinary least squares. The fitted line passes through the sample means.
pub fn fit_linear(points: &[SizePoint]) -> Result<LinearFit> {
    let n = points.len() as f64;
    let distinct = points
        .iter()
        .map(|p| p.uf)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(Error::invalid(format!(
            "linear fit needs at least two distinct uf values, got {distinct}"
        )));
    }
    let mean_x = points.iter().map(|p| p.uf as f64).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.issues as f64).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        let dx = p.uf as f64 - mean_x;
        sxy += dx * (p.issues as f64 - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    if slope < 0.0 {
        return Err(Error::invalid(format!(
            "fitted slope {slope} is negative; issues fall with size in this sample"
        )));
    }
    let model = LinearSizeModel { intercept, slope };
    let rss = points
        .iter()
        .map(|p| (p.issues as f64 - linear_estimate(p.uf, &model)).powi(2))
        .sum();
    let mut warnings = Vec::new();
    if intercept < 0.0 {
        warnings.push(format!(
            "negative intercept {intercept}: the line predicts negative issue counts for small models"
        ));
    }
    Ok(LinearFit {
        form: "linear",
        intercept,
        slope,
        rss,
        points: points.len(),
        warnings,
    })
}

/// Least squares through the origin in √UF: `Σ issues·√uf / Σ uf`.
pub fn fit_sqrt(points: &[SizePoint]) -> Result<SqrtFit> {
    if points.is_empty() {
        return Err(Error::invalid("square-root fit needs at least one point"));
    }
    let num: f64 = points
        .iter()
        .map(|p| p.issues as f64 * (p.uf as f64).sqrt())
        .sum();
    let den: f64 = points.iter().map(|p| p.uf as f64).sum();
    let model = SqrtSizeModel {
        coefficient: num / den,
    };
    let rss = points
        .iter()
        .map(|p| (p.issues as f64 - sqrt_estimate(p.uf, &model)).powi(2))
        .sum();
    Ok(SqrtFit {
        form: "sqrt-through-origin",
        coefficient: model.coefficient,
        rss,
        points: points.len(),
    })
}

/// Parses a scatter CSV with header `uf,issues`.
pub fn parse_scatter(text: &str) -> Result<Vec<SizePoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().ne(["uf", "issues"]) {
        return Err(Error::Csv(format!(
            "header must be `uf,issues`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    let mut problems = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Csv(format!("row {row_no}: {e}")))?;
        let parsed = (|| -> std::result::Result<SizePoint, String> {
            let uf: u64 = row[0]
                .trim()
                .parse()
                .map_err(|_| format!("bad uf {:?}", &row[0]))?;
            let issues: u64 = row[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad issues {:?}", &row[1]))?;
            SizePoint::new(uf, issues).map_err(|e| e.to_string())
        })();
        match parsed {
            Ok(p) => points.push(p),
            Err(m) => problems.push(RowDiagnostic::new(row_no, m)),
        }
    }
    if problems.is_empty() {
        Ok(points)
    } else {
        Err(Error::Rows(problems))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: &[(u64, u64)]) -> Vec<SizePoint> {
        raw.iter()
            .map(|&(u, i)| SizePoint::new(u, i).unwrap())
            .collect()
    }

    #[test]
    fn linear_default_hits_the_published_average() {
        let est = linear_estimate(2182, &LinearSizeModel::default());
        assert!((est - 151.0).abs() < 1.0, "{est}");
        // The printed slope overshoots by a factor of six.
        let printed = LinearSizeModel::new(PUBLISHED_INTERCEPT, PRINTED_SLOPE).unwrap();
        assert!(linear_estimate(2182, &printed) > 900.0);
    }

    #[test]
    fn linear_intercept_and_flat_model() {
        assert!((linear_estimate(1, &LinearSizeModel::default()) - 62.0).abs() < 0.05);
        let flat = LinearSizeModel::new(62.0, 0.0).unwrap();
        assert_eq!(linear_estimate(1, &flat), 62.0);
        assert_eq!(linear_estimate(100_000, &flat), 62.0);
        assert!(LinearSizeModel::new(1.0, -0.1).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let m = SqrtSizeModel::default();
        assert!((sqrt_estimate(2182, &m) - 121.45).abs() < 0.01);
        assert!((sqrt_estimate(100, &m) - 26.0).abs() < 1e-12);
        assert_eq!(sqrt_estimate(2182, &SqrtSizeModel::new(0.0).unwrap()), 0.0);
        assert!(SqrtSizeModel::new(-1.0).is_err());
    }

    #[test]
    fn two_point_line_keeps_negative_intercept_with_warning() {
        let fit = fit_linear(&pts(&[(100, 10), (200, 30)])).unwrap();
        assert!((fit.slope - 0.2).abs() < 1e-12);
        assert!((fit.intercept + 10.0).abs() < 1e-9);
        assert_eq!(fit.warnings.len(), 1);
        assert!(fit.warnings[0].contains("negative intercept"));
    }

    #[test]
    fn exact_fits_recover_their_parameters() {
        // 0.0408 × 2500 = 102, so these issue counts sit exactly on the line.
        let lin = fit_linear(&pts(&[(2500, 164), (5000, 266), (7500, 368), (10000, 470)])).unwrap();
        assert!((lin.intercept - 62.0).abs() < 1e-9 * 62.0);
        assert!((lin.slope - 0.0408).abs() < 1e-9 * 0.0408);
        assert!(lin.warnings.is_empty());
        assert!(lin.rss < 1e-12);

        let sq = fit_sqrt(&pts(&[(100, 26), (400, 52), (2500, 130)])).unwrap();
        assert!((sq.coefficient - 2.6).abs() < 1e-9 * 2.6);
    }

    #[test]
    fn linear_fit_errors() {
        assert!(fit_linear(&[]).is_err());
        assert!(fit_linear(&pts(&[(100, 1), (100, 5)])).is_err());
        assert!(fit_linear(&pts(&[(100, 50), (200, 10)])).is_err());
    }

    #[test]
    fn sqrt_fit_examples() {
        let one = fit_sqrt(&pts(&[(2182, 151)])).unwrap();
        assert!((one.coefficient - 151.0 / 2182f64.sqrt()).abs() < 1e-12);
        assert!((one.coefficient - 3.23).abs() < 0.005);
        let zeros = fit_sqrt(&pts(&[(10, 0), (90, 0)])).unwrap();
        assert_eq!(zeros.coefficient, 0.0);
        assert!(fit_sqrt(&[]).is_err());
    }

    #[test]
    fn scatter_csv() {
        let p = parse_scatter("uf,issues\n100,10\n200,30\n").unwrap();
        assert_eq!(p, pts(&[(100, 10), (200, 30)]));
        assert!(parse_scatter("x,y\n1,2\n").is_err());
        let Err(Error::Rows(rows)) = parse_scatter("uf,issues\n0,3\n5,-1\n") else {
            panic!()
        };
        assert_eq!(rows.iter().map(|r| r.row).collect::<Vec<_>>(), vec![2, 3]);
    }
}
