use std::io::Write;

use chrono::TimeDelta;
use serde::Serialize;

use defect_dynamics::chart::{arrival_chart, scatter_chart, trajectory_chart};
use defect_dynamics::ledger::{days, format_timestamp};
use defect_dynamics::metrics::{summaries_to_csv, summarize_with_window};
use defect_dynamics::rayleigh::{self, parse_arrival_csv, RayleighFit};
use defect_dynamics::revision::{
    default_table, divergence_report, format_percent, revision_table, Preset, DEFAULT_DIRS,
    DEFAULT_DRES, DEFAULT_TABLE_UNITS, PRESETS,
};
use defect_dynamics::size::{parse_scatter, DEFAULT_SQRT_COEFFICIENT, PUBLISHED_INTERCEPT};
use defect_dynamics::{
    arrival_series, fit_linear, fit_sqrt, linear_estimate, parse_defect_log,
    parse_product_registry, revisions_to_signoff, simulate_monte_carlo, sqrt_estimate, Ledger,
    LinearSizeModel, McOutcome, MetricsSummary, ProcessParams, SqrtSizeModel,
};

use crate::output::{json, read, Outputs};
use crate::{
    CliError, Command, EstimateArgs, FitArrivalArgs, ForecastArgs, Format, IngestArgs, MetricsArgs,
    ModelChoice, ReportArgs,
};

type CmdResult = Result<(), CliError>;

pub fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Ingest(a) => ingest(a, stderr),
        Command::Metrics(a) => metrics(a, stdout),
        Command::Forecast(a) => forecast(a, stdout),
        Command::Estimate(a) => estimate(a, stdout),
        Command::FitArrival(a) => fit_arrival(a, stdout),
        Command::Report(a) => report(a, stdout),
    }
}

fn emit(stdout: &mut dyn Write, doc: &str) -> CmdResult {
    stdout
        .write_all(doc.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn ingest(a: IngestArgs, stderr: &mut dyn Write) -> CmdResult {
    let defects_text = read(&a.defects)?;
    let products_text = read(&a.products)?;
    let defects = parse_defect_log(&defects_text)
        .map_err(|e| invalid(format!("{}: {e}", a.defects.display())))?;
    let products = parse_product_registry(&products_text)
        .map_err(|e| invalid(format!("{}: {e}", a.products.display())))?;
    let ledger = Ledger::new(products, defects)?;

    let mut out = Outputs::default();
    out.file(&a.out, ledger.to_json());
    out.commit()?;
    let _ = writeln!(
        stderr,
        "ingested {} defects across {} products",
        ledger.defects.len(),
        ledger.products.len()
    );
    Ok(())
}

fn load_ledger(path: &std::path::Path) -> Result<Ledger, CliError> {
    let text = read(path)?;
    Ledger::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn summaries(
    ledger: &Ledger,
    product: Option<&str>,
    window: TimeDelta,
) -> Result<Vec<MetricsSummary>, CliError> {
    let selected: Vec<_> = match product {
        Some(id) => vec![ledger
            .product(id)
            .ok_or_else(|| invalid(format!("no product {id:?} in the ledger")))?],
        None => ledger.products.iter().collect(),
    };
    selected
        .into_iter()
        .map(|p| {
            let records: Vec<_> = ledger.defects_for(&p.product_id).cloned().collect();
            summarize_with_window(&records, p, window).map_err(CliError::from)
        })
        .collect()
}

fn metrics(a: MetricsArgs, stdout: &mut dyn Write) -> CmdResult {
    if a.window_days == 0 {
        return Err(invalid("--window-days must be positive"));
    }
    let ledger = load_ledger(&a.ledger)?;
    let rows = summaries(
        &ledger,
        a.product.as_deref(),
        TimeDelta::days(a.window_days.into()),
    )?;
    let doc = match a.format {
        Format::Json => json(&rows),
        Format::Csv => summaries_to_csv(&rows),
    };
    emit(stdout, &doc)
}

#[derive(Serialize)]
struct ForecastDoc {
    revisions: usize,
    units: u64,
    dir: f64,
    dir_percent: String,
    dre: f64,
    dre_percent: String,
    threshold: f64,
    initial_defects: f64,
    expected_defects: Vec<f64>,
    expected_defects_rounded: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<McOutcome>,
}

#[derive(Serialize)]
struct TableDoc {
    units: u64,
    threshold: f64,
    grid: defect_dynamics::RevisionGrid,
    divergence: defect_dynamics::revision::DivergenceReport,
}

fn resolve_rates(a: &ForecastArgs) -> Result<(f64, f64, Option<&'static str>), CliError> {
    let preset = match &a.preset {
        Some(name) => Some(Preset::lookup(name).ok_or_else(|| {
            let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
            invalid(format!(
                "unknown preset {name:?}; expected one of {}",
                known.join(", ")
            ))
        })?),
        None => None,
    };
    let dir = a
        .dir
        .or(preset.and_then(|p| p.dir))
        .ok_or_else(|| invalid("--dir is required (or a preset that sets it)"))?;
    let dre = a
        .dre
        .or(preset.and_then(|p| p.dre))
        .ok_or_else(|| invalid("--dre is required (or a preset that sets it)"))?;
    Ok((dir, dre, preset.map(|p| p.name)))
}

fn forecast(a: ForecastArgs, stdout: &mut dyn Write) -> CmdResult {
    if a.table {
        let units = a.units.unwrap_or(DEFAULT_TABLE_UNITS);
        let grid = if units == DEFAULT_TABLE_UNITS {
            default_table(a.threshold)?
        } else {
            revision_table(units, &DEFAULT_DIRS, &DEFAULT_DRES, a.threshold)?
        };
        let doc = match a.format {
            Format::Csv => grid.to_csv(),
            Format::Json => {
                let divergence = divergence_report(&grid);
                json(&TableDoc {
                    units,
                    threshold: a.threshold,
                    grid,
                    divergence,
                })
            }
        };
        return emit(stdout, &doc);
    }
    if a.format == Format::Csv {
        return Err(invalid("--format csv applies to --table only"));
    }

    let units = a.units.ok_or_else(|| invalid("--units is required"))?;
    let (dir, dre, preset) = resolve_rates(&a)?;
    let params = ProcessParams::new(units, dir, dre, a.threshold)?;
    let trajectory = revisions_to_signoff(&params)?;
    let monte_carlo = if a.monte_carlo {
        let seed = a
            .seed
            .ok_or_else(|| invalid("--monte-carlo needs --seed"))?;
        Some(simulate_monte_carlo(&params, a.trials, seed)?)
    } else {
        None
    };

    let mut out = Outputs::default();
    if let Some(path) = &a.svg {
        out.file(path, trajectory_chart(&trajectory)?);
    }
    let doc = ForecastDoc {
        revisions: trajectory.revisions,
        units,
        dir,
        dir_percent: format_percent(dir),
        dre,
        dre_percent: format_percent(dre),
        threshold: a.threshold,
        initial_defects: trajectory.expected_defects[0],
        expected_defects_rounded: trajectory
            .expected_defects
            .iter()
            .map(|d| d.round() as u64)
            .collect(),
        expected_defects: trajectory.expected_defects,
        preset,
        monte_carlo,
    };
    out.commit()?;
    emit(stdout, &json(&doc))
}

#[derive(Serialize)]
struct LinearEstimate {
    intercept: f64,
    slope: f64,
    estimate: f64,
}

#[derive(Serialize)]
struct SqrtEstimate {
    coefficient: f64,
    estimate: f64,
}

#[derive(Serialize)]
struct EstimateDoc {
    uf: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear: Option<LinearEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sqrt: Option<SqrtEstimate>,
}

#[derive(Serialize)]
struct FitDoc {
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear: Option<defect_dynamics::size::LinearFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sqrt: Option<defect_dynamics::size::SqrtFit>,
}

fn estimate(a: EstimateArgs, stdout: &mut dyn Write) -> CmdResult {
    let want_linear = matches!(a.model, ModelChoice::Linear | ModelChoice::Both);
    let want_sqrt = matches!(a.model, ModelChoice::Sqrt | ModelChoice::Both);

    if let Some(uf) = a.uf {
        if uf == 0 {
            return Err(invalid("--uf must be positive"));
        }
        let lin = LinearSizeModel::default();
        let sq = SqrtSizeModel::default();
        let doc = EstimateDoc {
            uf,
            linear: want_linear.then(|| LinearEstimate {
                intercept: PUBLISHED_INTERCEPT,
                slope: lin.slope,
                estimate: linear_estimate(uf, &lin),
            }),
            sqrt: want_sqrt.then(|| SqrtEstimate {
                coefficient: DEFAULT_SQRT_COEFFICIENT,
                estimate: sqrt_estimate(uf, &sq),
            }),
        };
        return emit(stdout, &json(&doc));
    }

    let path = a.fit.as_ref().expect("clap enforces --uf or --fit");
    let points =
        parse_scatter(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if points.is_empty() {
        return Err(invalid(format!("{}: no data rows", path.display())));
    }
    let linear = want_linear.then(|| fit_linear(&points)).transpose()?;
    let sqrt = want_sqrt.then(|| fit_sqrt(&points)).transpose()?;
    let mut out = Outputs::default();
    if let Some(svg) = &a.svg {
        let lm = linear.as_ref().map(|f| f.model());
        let sm = sqrt.as_ref().map(|f| f.model());
        out.file(svg, scatter_chart(&points, lm.as_ref(), sm.as_ref())?);
    }
    out.commit()?;
    emit(
        stdout,
        &json(&FitDoc {
            points: points.len(),
            linear,
            sqrt,
        }),
    )
}

#[derive(Serialize)]
struct PeakPoint {
    time_buckets: f64,
    time_days: f64,
    cumulative: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct ReleasePoint {
    residual_threshold: f64,
    time_buckets: f64,
    time_days: f64,
}

#[derive(Serialize)]
struct FitArrivalDoc {
    k_total: f64,
    sigma: f64,
    sigma_days: f64,
    sse: f64,
    buckets_used: usize,
    bucket_days: f64,
    observed_total: u64,
    remaining_after_last_bucket: f64,
    forty_percent_point: PeakPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    release: Option<ReleasePoint>,
}

fn fit_doc(
    fit: &RayleighFit,
    bucket_days: f64,
    counts: &[u64],
    residual: Option<f64>,
) -> Result<FitArrivalDoc, CliError> {
    let release = match residual {
        Some(r) => {
            let t = rayleigh::time_to_threshold(fit, r)?;
            Some(ReleasePoint {
                residual_threshold: r,
                time_buckets: t,
                time_days: t * bucket_days,
            })
        }
        None => None,
    };
    Ok(FitArrivalDoc {
        k_total: fit.k_total,
        sigma: fit.sigma,
        sigma_days: fit.sigma * bucket_days,
        sse: fit.sse,
        buckets_used: fit.buckets_used,
        bucket_days,
        observed_total: counts.iter().sum(),
        remaining_after_last_bucket: rayleigh::remaining_defects(fit, counts.len() as f64),
        forty_percent_point: PeakPoint {
            time_buckets: fit.sigma,
            time_days: fit.sigma * bucket_days,
            cumulative: fit.cumulative_at_peak(),
            fraction: rayleigh::fraction_by_peak(),
        },
        release,
    })
}

fn fit_arrival(a: FitArrivalArgs, stdout: &mut dyn Write) -> CmdResult {
    let text = read(&a.series)?;
    let table = parse_arrival_csv(&text, a.bucket_days).map_err(|e| match e.kind() {
        defect_dynamics::ErrorKind::Validation => invalid(format!("{}: {e}", a.series.display())),
        _ => e.into(),
    })?;
    let counts: Vec<f64> = table.counts.iter().map(|&c| c as f64).collect();
    let fit = rayleigh::fit_counts(&counts)?;
    let doc = json(&fit_doc(
        &fit,
        table.bucket_days,
        &table.counts,
        a.residual,
    )?);

    let mut out = Outputs::default();
    if let Some(svg) = &a.svg {
        out.file(
            svg,
            arrival_chart(&table.counts, table.bucket_days, Some(&fit))?,
        );
    }
    match &a.out {
        Some(path) => {
            out.file(path, doc);
            out.commit()
        }
        None => {
            out.commit()?;
            emit(stdout, &doc)
        }
    }
}

#[derive(Serialize)]
struct ArrivalDoc {
    origin: String,
    bucket_days: f64,
    counts: Vec<u64>,
}

#[derive(Serialize)]
struct ReportDoc {
    product: Option<String>,
    summaries: Vec<MetricsSummary>,
    arrival: Option<ArrivalDoc>,
    fit: Option<FitArrivalDoc>,
    fit_error: Option<String>,
}

fn report(a: ReportArgs, stdout: &mut dyn Write) -> CmdResult {
    let ledger = load_ledger(&a.ledger)?;
    let width = days(a.bucket_days)?;
    let rows = summaries(&ledger, a.product.as_deref(), TimeDelta::days(7))?;
    let records: Vec<_> = match &a.product {
        Some(id) => ledger.defects_for(id).cloned().collect(),
        None => ledger.defects.clone(),
    };
    let Some(origin) = records.iter().map(|r| r.found_at).min() else {
        return Err(invalid("the ledger has no defects to chart"));
    };
    let series = arrival_series(&records, width, origin)?;
    let (fit, fit_error) = match rayleigh::fit(&series) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let svg = arrival_chart(&series.counts, a.bucket_days, fit.as_ref())?;
    let doc = ReportDoc {
        product: a.product.clone(),
        summaries: rows,
        arrival: Some(ArrivalDoc {
            origin: format_timestamp(&series.origin),
            bucket_days: a.bucket_days,
            counts: series.counts.clone(),
        }),
        fit: fit
            .as_ref()
            .map(|f| fit_doc(f, a.bucket_days, &series.counts, None))
            .transpose()?,
        fit_error,
    };
    let mut out = Outputs::default();
    out.file(&a.svg, svg);
    out.commit()?;
    emit(stdout, &json(&doc))
}
