//! Revisions-to-sign-off forecasting.
//!
//! A build of `units` units of work injects `units × dir` defects. Each
//! review-and-fix cycle finds `dre` of the defects present; every fix is a
//! change that re-injects at `dir`. Expected defects therefore decay by the
//! factor `1 − dre·(1 − dir)` per cycle, and the model signs off once the
//! expected residual drops below `threshold`. The revision count includes
//! the initial build.
//!
//! Arithmetic stays continuous throughout; rounding to whole defects would
//! create absorbing states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Upper bound on revisions before a forecast is declared divergent.
pub const MAX_REVISIONS: usize = 100_000;

pub const DEFAULT_DIRS: [f64; 8] = [0.03, 0.04, 0.05, 0.07, 0.10, 0.15, 0.20, 0.30];
pub const DEFAULT_DRES: [f64; 9] = [0.20, 0.25, 0.30, 0.35, 0.40, 0.50, 0.60, 0.80, 1.00];
pub const DEFAULT_TABLE_UNITS: u64 = 2000;

/// Published revision counts for 2000 units, rows in [`DEFAULT_DRES`] order,
/// columns in [`DEFAULT_DIRS`] order.
pub const PUBLISHED_TABLE: [[u32; 8]; 9] = [
    [15, 17, 18, 20, 22, 25, 29, 37],
    [12, 13, 14, 16, 18, 20, 23, 30],
    [12, 12, 13, 15, 16, 18, 20, 26],
    [10, 11, 11, 12, 14, 16, 18, 23],
    [9, 9, 10, 11, 12, 14, 15, 20],
    [6, 7, 7, 8, 9, 10, 12, 16],
    [7, 7, 7, 8, 9, 10, 11, 14],
    [5, 5, 5, 5, 6, 7, 7, 10],
    [3, 3, 3, 4, 4, 5, 6, 8],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessParams {
    pub units: u64,
    pub dir: f64,
    pub dre: f64,
    pub threshold: f64,
}

impl ProcessParams {
    /// Validates ranges only. Whether the process converges is decided by
    /// [`revisions_to_signoff`], which reports divergence as its own error.
    pub fn new(units: u64, dir: f64, dre: f64, threshold: f64) -> Result<Self> {
        if units == 0 {
            return Err(Error::invalid("units must be positive"));
        }
        check_fraction("dir", dir)?;
        check_fraction("dre", dre)?;
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::invalid(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        Ok(ProcessParams {
            units,
            dir,
            dre,
            threshold,
        })
    }

    pub fn with_defaults(units: u64, dir: f64, dre: f64) -> Result<Self> {
        Self::new(units, dir, dre, DEFAULT_THRESHOLD)
    }

    pub fn decay_factor(&self) -> f64 {
        decay_factor(self.dir, self.dre)
    }
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must be a fraction in [0, 1], got {v}"
        )))
    }
}

/// Named parameter presets. `None` fields leave the caller's value alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub dir: Option<f64>,
    pub dre: Option<f64>,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "end-user",
        dir: Some(0.20),
        dre: None,
    },
    Preset {
        name: "audited",
        dir: Some(0.07),
        dre: Some(0.75),
    },
    Preset {
        name: "informal-review",
        dir: None,
        dre: Some(0.50),
    },
    Preset {
        name: "formal-inspection",
        dir: None,
        dre: Some(0.75),
    },
];

impl Preset {
    pub fn lookup(name: &str) -> Option<Preset> {
        PRESETS.iter().copied().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionTrajectory {
    pub revisions: usize,
    pub expected_defects: Vec<f64>,
}

pub fn initial_defects(units: u64, dir: f64) -> f64 {
    units as f64 * dir
}

fn decay_factor(dir: f64, dre: f64) -> f64 {
    1.0 - dre * (1.0 - dir)
}

/// One review-and-fix cycle: `dre·D` defects are found and fixed, and the
/// fixes inject `dir` of that many again.
pub fn revision_step(defects: f64, dir: f64, dre: f64) -> f64 {
    defects * decay_factor(dir, dre)
}

/// Trajectory starting from an expected defect count rather than a unit count.
pub fn trajectory_from(d0: f64, dir: f64, dre: f64, threshold: f64) -> Result<RevisionTrajectory> {
    let mut expected = vec![d0];
    let mut d = d0;
    if d0 >= threshold {
        if !(dre * (1.0 - dir) > 0.0) {
            return Err(Error::Divergence(format!(
                "{d0} initial defects never fall below {threshold} with dir {dir} and dre {dre}"
            )));
        }
        let factor = decay_factor(dir, dre);
        while d >= threshold {
            if expected.len() >= MAX_REVISIONS {
                return Err(Error::Divergence(format!(
                    "no sign-off within {MAX_REVISIONS} revisions (dir {dir}, dre {dre})"
                )));
            }
            d *= factor;
            expected.push(d);
        }
    }
    Ok(RevisionTrajectory {
        revisions: expected.len(),
        expected_defects: expected,
    })
}

pub fn revisions_to_signoff(params: &ProcessParams) -> Result<RevisionTrajectory> {
    trajectory_from(
        initial_defects(params.units, params.dir),
        params.dir,
        params.dre,
        params.threshold,
    )
}

/// Smallest removal efficiency that signs off within `revisions` (build
/// included), by bisection to an absolute tolerance of 1e-6.
pub fn infer_efficiency(
    initial_defects: f64,
    revisions: usize,
    dir: f64,
    threshold: f64,
) -> Result<f64> {
    const TOLERANCE: f64 = 1e-6;
    if !(initial_defects > 0.0) || !initial_defects.is_finite() {
        return Err(Error::invalid("initial defects must be positive"));
    }
    if revisions < 2 {
        return Err(Error::invalid("revision count must be at least 2"));
    }
    if !(0.0..1.0).contains(&dir) {
        return Err(Error::invalid(format!("dir must lie in [0, 1), got {dir}")));
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold must be positive"));
    }
    let reaches = |dre: f64| {
        trajectory_from(initial_defects, dir, dre, threshold)
            .map(|t| t.revisions <= revisions)
            .unwrap_or(false)
    };
    if !reaches(1.0) {
        return Err(Error::Divergence(format!(
            "{initial_defects} defects cannot sign off within {revisions} revisions at dir {dir} even with dre = 1"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridCell {
    Converged(RevisionTrajectory),
    Divergent { reason: String },
}

impl GridCell {
    pub fn revisions(&self) -> Option<usize> {
        match self {
            GridCell::Converged(t) => Some(t.revisions),
            GridCell::Divergent { .. } => None,
        }
    }
}

/// Revision counts over a DRE × DIR grid. `cells[i][j]` is for
/// `(dres[i], dirs[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevisionGrid {
    pub units: u64,
    pub threshold: f64,
    pub dirs: Vec<f64>,
    pub dres: Vec<f64>,
    pub cells: Vec<Vec<GridCell>>,
}

pub fn revision_table(
    units: u64,
    dirs: &[f64],
    dres: &[f64],
    threshold: f64,
) -> Result<RevisionGrid> {
    revision_table_with(units, dirs, dres, threshold, Execution::default())
}

pub fn revision_table_with(
    units: u64,
    dirs: &[f64],
    dres: &[f64],
    threshold: f64,
    exec: Execution,
) -> Result<RevisionGrid> {
    if dirs.is_empty() || dres.is_empty() {
        return Err(Error::invalid("grid axes must be non-empty"));
    }
    let width = dirs.len();
    let flat = map_indexed(exec, dres.len() * width, |idx| {
        let (dre, dir) = (dres[idx / width], dirs[idx % width]);
        match ProcessParams::new(units, dir, dre, threshold).and_then(|p| revisions_to_signoff(&p))
        {
            Ok(t) => GridCell::Converged(t),
            Err(e) => GridCell::Divergent {
                reason: e.to_string(),
            },
        }
    });
    let mut cells = Vec::with_capacity(dres.len());
    let mut it = flat.into_iter();
    for _ in dres {
        cells.push(it.by_ref().take(width).collect());
    }
    Ok(RevisionGrid {
        units,
        threshold,
        dirs: dirs.to_vec(),
        dres: dres.to_vec(),
        cells,
    })
}

pub fn default_table(threshold: f64) -> Result<RevisionGrid> {
    revision_table(DEFAULT_TABLE_UNITS, &DEFAULT_DIRS, &DEFAULT_DRES, threshold)
}

pub fn format_percent(f: f64) -> String {
    // Round away binary noise such as 0.025 × 100 = 2.5000000000000004.
    let p = (f * 100.0 * 1e6).round() / 1e6;
    format!("{p}%")
}

impl RevisionGrid {
    /// CSV in the published layout: one row per DRE, one column per DIR.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("DRE\\DIR");
        for d in &self.dirs {
            out.push(',');
            out.push_str(&format_percent(*d));
        }
        out.push('\n');
        for (dre, row) in self.dres.iter().zip(&self.cells) {
            out.push_str(&format_percent(*dre));
            for cell in row {
                out.push(',');
                match cell.revisions() {
                    Some(n) => out.push_str(&n.to_string()),
                    None => out.push_str("divergent"),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn axis_index(axis: &[f64], v: f64) -> Option<usize> {
    axis.iter().position(|a| (a - v).abs() < 1e-12)
}

/// The published count for a cell on the default axes, if there is one.
pub fn published_revisions(dre: f64, dir: f64) -> Option<u32> {
    Some(PUBLISHED_TABLE[axis_index(&DEFAULT_DRES, dre)?][axis_index(&DEFAULT_DIRS, dir)?])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub dre: f64,
    pub dir: f64,
    pub model: Option<usize>,
    pub published: u32,
    pub delta: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub units: u64,
    pub threshold: f64,
    pub cells: Vec<CellComparison>,
    pub compared: usize,
    pub exact: usize,
    pub within_one: usize,
    pub max_abs_delta: Option<i64>,
}

impl DivergenceReport {
    /// Comparisons for the cells whose DRE is `dre`.
    pub fn row(&self, dre: f64) -> impl Iterator<Item = &CellComparison> {
        self.cells
            .iter()
            .filter(move |c| (c.dre - dre).abs() < 1e-12)
    }
}

/// Compares every grid cell that has a published counterpart.
pub fn divergence_report(grid: &RevisionGrid) -> DivergenceReport {
    let mut cells = Vec::new();
    for (dre, row) in grid.dres.iter().zip(&grid.cells) {
        for (dir, cell) in grid.dirs.iter().zip(row) {
            let Some(published) = published_revisions(*dre, *dir) else {
                continue;
            };
            let model = cell.revisions();
            cells.push(CellComparison {
                dre: *dre,
                dir: *dir,
                model,
                published,
                delta: model.map(|m| m as i64 - published as i64),
            });
        }
    }
    let exact = cells.iter().filter(|c| c.delta == Some(0)).count();
    let within_one = cells
        .iter()
        .filter(|c| c.delta.is_some_and(|d| d.abs() <= 1))
        .count();
    let max_abs_delta = cells.iter().filter_map(|c| c.delta.map(i64::abs)).max();
    DivergenceReport {
        units: grid.units,
        threshold: grid.threshold,
        compared: cells.len(),
        cells,
        exact,
        within_one,
        max_abs_delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forecast(units: u64, dir: f64, dre: f64) -> Result<RevisionTrajectory> {
        revisions_to_signoff(&ProcessParams::with_defaults(units, dir, dre)?)
    }

    #[test]
    fn initial_defect_examples() {
        assert!((initial_defects(2182, 0.07) - 152.74).abs() < 1e-9);
        assert!((initial_defects(2182, 0.07) - 151.0).abs() / 151.0 < 0.02);
        assert_eq!(initial_defects(12345, 0.0), 0.0);
        assert!((initial_defects(2000, 0.03) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn step_examples() {
        assert!((revision_step(30.0, 0.03, 1.0) - 0.9).abs() < 1e-12);
        assert_eq!(revision_step(17.0, 0.4, 0.0), 17.0);
        assert!((revision_step(100.0, 0.2, 0.5) - 60.0).abs() < 1e-12);
    }

    #[test]
    fn signoff_examples() {
        assert_eq!(forecast(2000, 0.03, 1.0).unwrap().revisions, 3);
        assert_eq!(forecast(1000, 0.03, 1.0).unwrap().revisions, 3);
        assert_eq!(forecast(2182, 0.07, 0.75).unwrap().revisions, 6);
        let t = forecast(2000, 0.20, 1.0).unwrap();
        assert_eq!(t.revisions, 6);
        let want = [400.0, 80.0, 16.0, 3.2, 0.64, 0.128];
        assert_eq!(t.expected_defects.len(), want.len());
        for (got, want) in t.expected_defects.iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn below_threshold_signs_off_at_build() {
        let t = forecast(100, 0.0, 1.0).unwrap();
        assert_eq!(t.revisions, 1);
        assert_eq!(t.expected_defects, vec![0.0]);
        // Even with no detection at all, nothing to remove means no divergence.
        assert_eq!(forecast(4, 0.1, 0.0).unwrap().revisions, 1);
    }

    #[test]
    fn divergence_is_reported() {
        assert!(matches!(
            forecast(2000, 0.03, 0.0),
            Err(Error::Divergence(_))
        ));
        assert!(matches!(
            forecast(2000, 1.0, 0.9),
            Err(Error::Divergence(_))
        ));
        assert!(matches!(
            forecast(2000, 0.03, 1e-9),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn params_validate_ranges() {
        assert!(ProcessParams::new(0, 0.1, 0.5, 0.5).is_err());
        assert!(ProcessParams::new(10, 1.1, 0.5, 0.5).is_err());
        assert!(ProcessParams::new(10, 0.1, -0.1, 0.5).is_err());
        assert!(ProcessParams::new(10, 0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn bottom_row_and_thirty_percent_cell() {
        let grid = default_table(DEFAULT_THRESHOLD).unwrap();
        let bottom: Vec<_> = grid.cells[8]
            .iter()
            .map(|c| c.revisions().unwrap())
            .collect();
        assert_eq!(&bottom[..7], &[3, 3, 3, 4, 4, 5, 6]);
        // D0 = 600, factor 0.3: 600·0.3^6 ≈ 0.437 is the first value below 0.5.
        assert_eq!(bottom[7], 7);
    }

    #[test]
    fn zero_dre_cells_are_divergent() {
        let grid = revision_table(2000, &[0.03, 0.1], &[0.0, 0.5], 0.5).unwrap();
        assert!(grid.cells[0].iter().all(|c| c.revisions().is_none()));
        assert!(grid.cells[1].iter().all(|c| c.revisions().is_some()));
        assert!(grid
            .to_csv()
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("0%,divergent,divergent"));
    }

    #[test]
    fn csv_layout() {
        let csv = default_table(DEFAULT_THRESHOLD).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[0], "DRE\\DIR,3%,4%,5%,7%,10%,15%,20%,30%");
        assert_eq!(lines[9], "100%,3,3,3,4,4,5,6,7");
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 9));
    }

    #[test]
    fn divergence_report_covers_every_published_cell() {
        let report = divergence_report(&default_table(DEFAULT_THRESHOLD).unwrap());
        assert_eq!(report.compared, 72);
        assert!(report.exact >= 12);
        let high: Vec<_> = report.row(0.8).chain(report.row(1.0)).collect();
        assert_eq!(high.len(), 16);
        assert!(high.iter().all(|c| c.delta.unwrap().abs() <= 1));
    }

    #[test]
    fn parallel_and_sequential_grids_agree() {
        let a = revision_table_with(
            2000,
            &DEFAULT_DIRS,
            &DEFAULT_DRES,
            0.5,
            Execution::Sequential,
        )
        .unwrap();
        let b = revision_table_with(2000, &DEFAULT_DIRS, &DEFAULT_DRES, 0.5, Execution::Parallel)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_examples() {
        let dre = infer_efficiency(239.0, 17, 0.07, 0.5).unwrap();
        assert!((dre - 0.344).abs() < 0.01, "{dre}");
        let t = trajectory_from(239.0, 0.07, dre, 0.5).unwrap();
        assert!(t.revisions <= 17);

        let tiny = infer_efficiency(0.3, 2, 0.1, 0.5).unwrap();
        assert!(tiny > 0.0 && tiny <= 1e-6);

        let back = infer_efficiency(60.0, 3, 0.03, 0.5).unwrap();
        assert!(back <= 1.0);
        assert_eq!(forecast(2000, 0.03, back).unwrap().revisions, 3);
    }

    #[test]
    fn inverse_rejects_unreachable_and_bad_input() {
        // 1e6 defects at dir 0.5 cannot reach 0.5 in one review: 1e6·0.5 ≥ 0.5.
        assert!(matches!(
            infer_efficiency(1e6, 2, 0.5, 0.5),
            Err(Error::Divergence(_))
        ));
        assert!(infer_efficiency(10.0, 1, 0.1, 0.5).is_err());
        assert!(infer_efficiency(10.0, 5, 1.0, 0.5).is_err());
        assert!(infer_efficiency(0.0, 5, 0.1, 0.5).is_err());
    }

    #[test]
    fn presets() {
        let audited = Preset::lookup("audited").unwrap();
        assert_eq!((audited.dir, audited.dre), (Some(0.07), Some(0.75)));
        assert_eq!(Preset::lookup("end-user").unwrap().dir, Some(0.20));
        assert_eq!(Preset::lookup("informal-review").unwrap().dre, Some(0.50));
        assert_eq!(Preset::lookup("formal-inspection").unwrap().dre, Some(0.75));
        assert!(Preset::lookup("nope").is_none());
    }

    #[test]
    fn percent_labels() {
        assert_eq!(format_percent(0.07), "7%");
        assert_eq!(format_percent(1.0), "100%");
        assert_eq!(format_percent(0.025), "2.5%");
    }
}
