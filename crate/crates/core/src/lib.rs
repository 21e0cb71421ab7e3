//! Defect-dynamics toolkit: defect and time records, quality metrics,
//! revisions-to-sign-off forecasting, size-based issue estimates and
//! Rayleigh arrival fitting.
//!
//! The Monte Carlo trials and grid sweeps run on rayon when the default
//! `parallel` feature is on; see [`Execution`].

pub mod chart;
pub mod error;
mod exec;
pub mod ledger;
pub mod metrics;
pub mod monte_carlo;
pub mod rayleigh;
pub mod revision;
pub mod size;

pub use error::{Error, ErrorKind, Result, RowDiagnostic};
pub use exec::Execution;
pub use ledger::{
    arrival_series, parse_defect_log, parse_product_registry, serialize_defect_log, ArrivalSeries,
    DefectRecord, Ledger, Phase, ProductProfile, Severity, Status, TimeRecord,
};
pub use metrics::{
    defect_density, injection_rate, removal_efficiency, removal_rate, summarize, DensityUnit,
    MetricsSummary,
};
pub use monte_carlo::{simulate_monte_carlo, simulate_monte_carlo_with, McOutcome};
pub use rayleigh::{
    projected_total_from_peak, rayleigh_cdf, remaining_defects, time_to_threshold, RayleighFit,
};
pub use revision::{
    infer_efficiency, initial_defects, revision_step, revision_table, revisions_to_signoff,
    trajectory_from, ProcessParams, RevisionGrid, RevisionTrajectory,
};
pub use size::{
    fit_linear, fit_sqrt, linear_estimate, sqrt_estimate, LinearSizeModel, SizePoint, SqrtSizeModel,
};
