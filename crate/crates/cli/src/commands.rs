use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mod1_core::angular::{embed, Mod1Series};
use mod1_core::denoise::correlation;
use mod1_core::eval::{run_bound_checks, wrap_rmse, CheckStatus, MetricsReport};
use mod1_core::experiment::{aggregate, run_bound_battery, run_sweep, ExperimentConfig, Method, Pipeline};
use mod1_core::grid::{NeighborGraph, UniformGrid};
use mod1_core::plot::sweep_plots;
use mod1_core::signals::{add_noise, measure_delta, sample_clean, NoiseModel, NoiseSpec, SignalKind, SignalSpec};
use mod1_core::unwrap::{quotient_tracker, OlsSolver};

use crate::{ConfigArgs, DenoiseArgs, MethodArg, UnwrapArg, UnwrapArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    BoundViolation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Runtime(_) => 1,
            Self::Usage(_) => 2,
            Self::BoundViolation(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Caps the global worker pool at `MOD1_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MOD1_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| usage(format!("MOD1_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct SampleRow {
    i: usize,
    x: f64,
    f: f64,
    clean_mod1: f64,
    y: f64,
    estimate_mod1: f64,
    unwrapped: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DenoiseSummary {
    function: String,
    n: usize,
    k: usize,
    lambda: f64,
    noise: NoiseModel,
    seed: u64,
    method: String,
    zeta: f64,
    noisy_wrap_rmse: f64,
    #[serde(flatten)]
    metrics: MetricsReport,
}

pub fn denoise(a: &DenoiseArgs) -> CliResult<()> {
    let kind: SignalKind = a.function.parse().map_err(usage)?;
    let model = NoiseModel::from_name(&a.noise, a.param).map_err(usage)?;
    let grid = UniformGrid::new(a.n).map_err(usage)?;
    NeighborGraph::new(a.n, a.k).map_err(usage)?;
    if !(a.lambda >= 0.0 && a.lambda.is_finite()) {
        return Err(usage(format!("lambda must be finite and >= 0, got {}", a.lambda)));
    }
    if !(a.zeta > 0.0 && a.zeta < 1.0) {
        return Err(usage(format!("zeta must lie in (0, 1), got {}", a.zeta)));
    }
    if a.iterations < 1 {
        return Err(usage("iterations must be >= 1"));
    }
    let method = match a.method {
        MethodArg::Ols => Method::Ols,
        MethodArg::Qcqp => Method::Qcqp,
        MethodArg::Iqcqp => Method::Iqcqp(a.iterations),
    };

    let signal = SignalSpec::new(kind);
    let inst = add_noise(&sample_clean(&signal, &grid), NoiseSpec { model, seed: a.seed }).map_err(usage)?;
    let pipeline = Pipeline::new(a.n, a.k, a.lambda, a.zeta).map_err(|e| CliError::Runtime(format!("operator setup failed: {e}")))?;
    let y = &inst.noisy_mod1;

    let (estimate, metrics) = match method {
        Method::Ols => {
            let out = pipeline.run(y, method, None).map_err(|e| CliError::Runtime(format!("unwrap stage failed: {e}")))?;
            let m = MetricsReport {
                wrap_rmse_mod1: wrap_rmse(&out.mod1, &inst.clean_mod1).map_err(|e| CliError::Runtime(e.to_string()))?,
                shifted_rmse_f: None,
                optimal_shift: None,
                correlation: correlation(&embed(&out.mod1), &embed(&inst.clean_mod1)).map_err(|e| CliError::Runtime(e.to_string()))?,
                delta: measure_delta(y, &inst.clean_mod1).map_err(|e| CliError::Runtime(e.to_string()))?,
                lambda_below_threshold: a.lambda < 1.0 / (4.0 * a.k as f64),
                orthogonal_to_nullspace: false,
                bound_checks: Vec::new(),
            };
            (out, m)
        }
        _ => {
            let d = pipeline
                .denoiser()
                .iterate(y, method.iterations(), Some(&inst.clean_mod1))
                .map_err(|e| CliError::Runtime(format!("denoise stage failed: {e}")))?;
            let samples =
                pipeline.ols().unwrap(&d.denoised, a.zeta).map_err(|e| CliError::Runtime(format!("unwrap stage failed: {e}")))?.samples;
            let m = run_bound_checks(&inst, &d, pipeline.denoiser().operator(), a.k, &signal)
                .map_err(|e| CliError::Runtime(format!("evaluation failed: {e}")))?;
            let out = mod1_core::experiment::MethodOutput { method, mod1: d.denoised.clone(), samples, denoise: Some(d) };
            (out, m)
        }
    };
    let metrics = metrics.with_unwrapped(&estimate.samples, &inst.clean_f).map_err(|e| CliError::Runtime(e.to_string()))?;

    create_dir(&a.out)?;
    let rows: Vec<SampleRow> = (0..a.n)
        .map(|i| SampleRow {
            i,
            x: grid.points()[i],
            f: inst.clean_f[i],
            clean_mod1: inst.clean_mod1.values()[i],
            y: y.values()[i],
            estimate_mod1: estimate.mod1.values()[i],
            unwrapped: estimate.samples[i],
        })
        .collect();
    write_csv(&a.out.join("samples.csv"), &rows)?;
    let summary = DenoiseSummary {
        function: kind.to_string(),
        n: a.n,
        k: a.k,
        lambda: a.lambda,
        noise: model,
        seed: a.seed,
        method: method.label(),
        zeta: a.zeta,
        noisy_wrap_rmse: wrap_rmse(y, &inst.clean_mod1).map_err(|e| CliError::Runtime(e.to_string()))?,
        metrics,
    };
    write_json(&a.out.join("metrics.json"), &summary)?;
    println!(
        "{}: wrap RMSE {:.6} (noisy {:.6}), shifted RMSE {:.6}, correlation {:.6}",
        summary.method,
        summary.metrics.wrap_rmse_mod1,
        summary.noisy_wrap_rmse,
        summary.metrics.shifted_rmse_f.unwrap_or(f64::NAN),
        summary.metrics.correlation
    );
    for c in summary.metrics.failures() {
        eprintln!("warning: {} violated (lhs {:.6e}, rhs {:.6e})", c.name, c.lhs, c.rhs);
    }
    Ok(())
}

fn read_residues(path: &Path, column: &str) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let Some(first) = records.first() else {
        return Err(usage(format!("{}: no data", path.display())));
    };
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let (idx, body) = if has_header {
        let idx = first.iter().position(|f| f == column).ok_or_else(|| usage(format!("{}: no column named '{column}'", path.display())))?;
        (idx, &records[1..])
    } else if first.len() == 1 {
        (0, &records[..])
    } else {
        return Err(usage(format!("{}: headerless input must have exactly one column", path.display())));
    };
    body.iter()
        .enumerate()
        .map(|(line, r)| {
            r.get(idx)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| usage(format!("{}: bad value on data row {}", path.display(), line + 1)))
        })
        .collect()
}

#[derive(Serialize)]
struct UnwrapRow {
    i: usize,
    y: f64,
    unwrapped: f64,
    quotient: Option<i64>,
}

pub fn unwrap(a: &UnwrapArgs) -> CliResult<()> {
    let values = read_residues(&a.input, &a.column)?;
    let y = Mod1Series::new(values).map_err(usage)?;
    let result = match a.method {
        UnwrapArg::Qt => quotient_tracker(&y, a.zeta).map_err(usage)?,
        UnwrapArg::Ols => {
            let g = NeighborGraph::new(y.len(), a.k).map_err(usage)?;
            if !(a.zeta > 0.0 && a.zeta < 1.0) {
                return Err(usage(format!("zeta must lie in (0, 1), got {}", a.zeta)));
            }
            OlsSolver::new(&g).and_then(|s| s.unwrap(&y, a.zeta)).map_err(|e| CliError::Runtime(format!("unwrap stage failed: {e}")))?
        }
    };
    let rows: Vec<UnwrapRow> = (0..y.len())
        .map(|i| UnwrapRow { i, y: y.values()[i], unwrapped: result.samples[i], quotient: result.quotients.as_ref().map(|q| q[i]) })
        .collect();
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_csv(&a.out, &rows)?;
    if let Some(r) = result.residual {
        println!("unwrapped {} samples, residual {r:.6e}", y.len());
    } else {
        println!("unwrapped {} samples", y.len());
    }
    Ok(())
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn output_dir(a: &ConfigArgs, cfg: &ExperimentConfig) -> PathBuf {
    a.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Serialize)]
struct TimingRow<'a> {
    cell: usize,
    method: &'a str,
    trial: usize,
    wall_time_ms: f64,
}

pub fn sweep(a: &ConfigArgs) -> CliResult<()> {
    let cfg = load_config(&a.config)?;
    let dir = output_dir(a, &cfg);
    let rows = run_sweep(&cfg).map_err(|e| CliError::Runtime(format!("sweep failed: {e}")))?;
    let agg = aggregate(&rows);
    create_dir(&dir)?;
    write_csv(&dir.join("results.csv"), &rows)?;
    write_csv(&dir.join("aggregate.csv"), &agg)?;
    let timings: Vec<TimingRow> =
        rows.iter().map(|r| TimingRow { cell: r.cell, method: &r.method, trial: r.trial, wall_time_ms: r.wall_time_ms }).collect();
    write_csv(&dir.join("timings.csv"), &timings)?;
    for wrap in [true, false] {
        for (name, plot) in sweep_plots(&agg, wrap) {
            let path = dir.join(name);
            fs::write(&path, plot.to_svg()).map_err(|e| io_err(&path, e))?;
        }
    }
    println!("{:>5} {:>6} {:>3} {:>8} {:>8} {:>10} {:>10} {:>10}", "cell", "n", "k", "lambda", "level", "method", "wrap", "shifted");
    for r in &agg {
        println!(
            "{:>5} {:>6} {:>3} {:>8} {:>8} {:>10} {:>10.5} {:>10.5}",
            r.cell, r.n, r.k, r.lambda, r.noise_level, r.method, r.mean_wrap_rmse_mod1, r.mean_shifted_rmse_f
        );
    }
    println!("wrote {} rows to {}", rows.len(), dir.join("results.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct BoundCsvRow<'a> {
    cell: usize,
    n: usize,
    k: usize,
    lambda: f64,
    noise_level: f64,
    trial: usize,
    seed: u64,
    delta: f64,
    check: &'a str,
    lhs: f64,
    rhs: f64,
    margin: f64,
    status: &'a str,
}

fn status_name(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Passed => "passed",
        CheckStatus::Failed => "failed",
        CheckStatus::HypothesesNotMet => "hypotheses_not_met",
    }
}

pub fn check_bounds(a: &ConfigArgs) -> CliResult<()> {
    let cfg = load_config(&a.config)?;
    let dir = output_dir(a, &cfg);
    let rows = run_bound_battery(&cfg).map_err(|e| CliError::Runtime(format!("bound battery failed: {e}")))?;
    let mut csv_rows = Vec::new();
    for r in &rows {
        for c in &r.report.bound_checks {
            csv_rows.push(BoundCsvRow {
                cell: r.cell,
                n: r.n,
                k: r.k,
                lambda: r.lambda,
                noise_level: r.noise_level,
                trial: r.trial,
                seed: r.seed,
                delta: r.report.delta,
                check: c.name,
                lhs: c.lhs,
                rhs: c.rhs,
                margin: c.margin,
                status: status_name(c.status),
            });
        }
    }
    create_dir(&dir)?;
    write_csv(&dir.join("bounds.csv"), &csv_rows)?;

    let names: Vec<&str> = rows.first().map(|r| r.report.bound_checks.iter().map(|c| c.name).collect()).unwrap_or_default();
    print!("{:>5} {:>6} {:>8}", "cell", "trial", "delta");
    for n in &names {
        print!(" {n:>12}");
    }
    println!();
    for r in &rows {
        print!("{:>5} {:>6} {:>8.4}", r.cell, r.trial, r.report.delta);
        for c in &r.report.bound_checks {
            match c.status {
                CheckStatus::HypothesesNotMet => print!(" {:>12}", "n/a"),
                CheckStatus::Failed => print!(" {:>11.3e}!", c.margin),
                CheckStatus::Passed => print!(" {:>12.3e}", c.margin),
            }
        }
        println!();
    }
    let failed: Vec<String> =
        rows.iter().flat_map(|r| r.report.failures().map(move |c| format!("cell {} trial {}: {}", r.cell, r.trial, c.name))).collect();
    let gated = rows.iter().filter(|r| !r.hypotheses_met()).count();
    println!("{} trials, {} with gated checks, {} violations", rows.len(), gated, failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::BoundViolation(format!("{} bound violations; first: {}", failed.len(), failed[0])))
    }
}
