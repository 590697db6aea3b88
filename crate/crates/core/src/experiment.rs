//! Seeded experiment runner: the three recovery methods, parameter sweeps
//! and batches of bound checks.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::angular::{embed, reduce_mod1, Mod1Series, RealEmbedding};
use crate::denoise::{correlation, DenoiseResult, Denoiser};
use crate::error::{Error, Result};
use crate::eval::{run_bound_checks, shifted_rmse, wrap_rmse, CheckStatus, MetricsReport};
use crate::grid::{LaplacianMatrix, NeighborGraph, Spectrum, UniformGrid};
use crate::signals::{add_noise, sample_clean, trial_seed, NoiseModel, NoiseSpec, SampledInstance, SignalKind, SignalSpec};
use crate::trs::SmoothnessOperator;
use crate::unwrap::{OlsSolver, DEFAULT_ZETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Least-squares unwrapping of the raw noisy residues.
    Ols,
    /// One denoising pass followed by least-squares unwrapping.
    Qcqp,
    /// `iterations` denoising passes followed by least-squares unwrapping.
    Iqcqp(usize),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Self::Ols => "ols".into(),
            Self::Qcqp => "qcqp".into(),
            Self::Iqcqp(it) => format!("iqcqp{it}"),
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            Self::Ols => 0,
            Self::Qcqp => 1,
            Self::Iqcqp(it) => *it,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: Method,
    /// Residue estimate.
    pub mod1: Mod1Series,
    /// Unwrapped samples in the mean-zero gauge.
    pub samples: Vec<f64>,
    /// Last denoising pass (absent for OLS).
    pub denoise: Option<DenoiseResult>,
}

/// Circular mean of `y_i - fhat_i`, used to place an unwrapped estimate
/// back on the residues it was computed from.
pub fn residue_anchor(y: &Mod1Series, fhat: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (&v, &f) in y.values().iter().zip(fhat) {
        let (a, b) = (TAU * (v - f)).sin_cos();
        s += a;
        c += b;
    }
    if s == 0.0 && c == 0.0 {
        0.0
    } else {
        s.atan2(c) / TAU
    }
}

/// Denoiser and least-squares unwrapper for one `(n, k, lambda)`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    denoiser: Denoiser,
    ols: Arc<OlsSolver>,
    zeta: f64,
}

impl Pipeline {
    pub fn new(n: usize, k: usize, lambda: f64, zeta: f64) -> Result<Self> {
        let denoiser = Denoiser::new(n, k, lambda)?;
        let ols = Arc::new(OlsSolver::new(&NeighborGraph::new(n, k)?)?);
        Self::from_parts(denoiser, ols, zeta)
    }

    pub fn from_parts(denoiser: Denoiser, ols: Arc<OlsSolver>, zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(Error::InvalidParameter(format!("zeta must lie in (0, 1), got {zeta}")));
        }
        Ok(Self { denoiser, ols, zeta })
    }

    pub fn denoiser(&self) -> &Denoiser {
        &self.denoiser
    }

    pub fn ols(&self) -> &OlsSolver {
        &self.ols
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn run(&self, y: &Mod1Series, method: Method, clean: Option<&Mod1Series>) -> Result<MethodOutput> {
        match method {
            Method::Ols => {
                let samples = self.ols.unwrap(y, self.zeta)?.samples;
                let c = residue_anchor(y, &samples);
                let mod1 = Mod1Series::from_reals(&samples.iter().map(|f| f + c).collect::<Vec<_>>());
                Ok(MethodOutput { method, mod1, samples, denoise: None })
            }
            Method::Qcqp | Method::Iqcqp(_) => {
                let d = self.denoiser.iterate(y, method.iterations().max(1), clean)?;
                let samples = self.ols.unwrap(&d.denoised, self.zeta)?.samples;
                Ok(MethodOutput { method, mod1: d.denoised.clone(), samples, denoise: Some(d) })
            }
        }
    }
}

fn default_zeta() -> f64 {
    DEFAULT_ZETA
}

fn default_trials() -> usize {
    20
}

fn default_iterations() -> Vec<usize> {
    vec![10]
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::Ols, MethodName::Qcqp, MethodName::Iqcqp]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Ols,
    Qcqp,
    Iqcqp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Uniform,
    Gaussian,
    BernoulliUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseGrid {
    pub model: NoiseKind,
    /// `gamma`, `sigma` or `p` values.
    pub levels: Vec<f64>,
}

impl NoiseGrid {
    pub fn model_at(&self, level: f64) -> Result<NoiseModel> {
        let m = match self.model {
            NoiseKind::Uniform => NoiseModel::Uniform { gamma: level },
            NoiseKind::Gaussian => NoiseModel::Gaussian { sigma: level },
            NoiseKind::BernoulliUniform => NoiseModel::BernoulliUniform { p: level },
        };
        m.validate()?;
        Ok(m)
    }
}

/// Sweep description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: SignalKind,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub lambda: Vec<f64>,
    pub noise: NoiseGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "default_iterations")]
    pub iqcqp_iterations: Vec<usize>,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    /// Output directory; the CLI may override it.
    #[serde(default)]
    pub output: Option<String>,
    /// Negative-control fixture for `check-bounds`: added to every entry of
    /// the solver output before the checks run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tamper_offset: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n.is_empty() || self.k.is_empty() || self.lambda.is_empty() || self.noise.levels.is_empty() {
            return bad("config grids must be non-empty");
        }
        if self.trials < 1 {
            return bad("trials must be >= 1");
        }
        if self.methods.is_empty() {
            return bad("methods must be non-empty");
        }
        if self.methods.contains(&MethodName::Iqcqp) && (self.iqcqp_iterations.is_empty() || self.iqcqp_iterations.contains(&0)) {
            return bad("iqcqp_iterations must be non-empty and positive");
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta must lie in (0, 1)");
        }
        for &n in &self.n {
            for &k in &self.k {
                NeighborGraph::new(n, k)?;
            }
        }
        for &l in &self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("lambda values must be finite and >= 0");
            }
        }
        for &level in &self.noise.levels {
            self.noise.model_at(level)?;
        }
        Ok(())
    }

    /// Methods in output order.
    pub fn expanded_methods(&self) -> Vec<Method> {
        let mut out = Vec::new();
        for m in &self.methods {
            match m {
                MethodName::Ols => out.push(Method::Ols),
                MethodName::Qcqp => out.push(Method::Qcqp),
                MethodName::Iqcqp => out.extend(self.iqcqp_iterations.iter().map(|&it| Method::Iqcqp(it))),
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Grid cells in `(n, k, lambda, level)` lexicographic order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &k in &self.k {
                for &lambda in &self.lambda {
                    for &level in &self.noise.levels {
                        cells.push(Cell { index: cells.len(), n, k, lambda, level });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub level: f64,
}

/// One `(cell, method, trial)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub cell: usize,
    pub function: String,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub noise_model: String,
    pub noise_level: f64,
    pub method: String,
    pub iterations: usize,
    pub trial: usize,
    pub seed: u64,
    pub noisy_wrap_rmse: f64,
    pub wrap_rmse_mod1: f64,
    pub shifted_rmse_f: f64,
    pub correlation: f64,
    #[serde(skip)]
    pub wall_time_ms: f64,
    #[serde(skip)]
    pub method_rank: Method,
}

/// Per-`(cell, method)` means over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub cell: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub noise_model: String,
    pub noise_level: f64,
    pub method: String,
    pub trials: usize,
    pub mean_noisy_wrap_rmse: f64,
    pub mean_wrap_rmse_mod1: f64,
    pub mean_shifted_rmse_f: f64,
    pub median_shifted_rmse_f: f64,
    pub mean_correlation: f64,
}

/// Seed of trial `t` in cell `c`.
pub fn cell_trial_seed(base: u64, cell: usize, trial: usize) -> u64 {
    trial_seed(trial_seed(base, cell as u64), trial as u64)
}

type CachedOperator = (Arc<LaplacianMatrix>, Arc<Spectrum>, Arc<OlsSolver>);

/// Shared Laplacian spectra and unwrappers keyed by `(n, k)`.
#[derive(Debug, Default)]
pub struct OperatorCache {
    entries: BTreeMap<(usize, usize), CachedOperator>,
}

impl OperatorCache {
    pub fn prepare(&mut self, n: usize, k: usize) -> Result<()> {
        if let Entry::Vacant(slot) = self.entries.entry((n, k)) {
            let g = NeighborGraph::new(n, k)?;
            let lap = Arc::new(g.laplacian());
            let spec = Arc::new(lap.spectrum()?);
            let ols = Arc::new(OlsSolver::new(&g)?);
            slot.insert((lap, spec, ols));
        }
        Ok(())
    }

    pub fn pipeline(&self, n: usize, k: usize, lambda: f64, zeta: f64) -> Result<Pipeline> {
        let (lap, spec, ols) =
            self.entries.get(&(n, k)).ok_or_else(|| Error::InvalidParameter(format!("operator ({n}, {k}) not prepared")))?;
        let block = crate::grid::BlockLaplacian::new(lambda, Arc::clone(lap))?;
        let op = SmoothnessOperator::new(block, Arc::clone(spec))?;
        Pipeline::from_parts(Denoiser::from_operator(op), Arc::clone(ols), zeta)
    }
}

fn noisy_instance(cfg: &ExperimentConfig, signal: &SignalSpec, cell: &Cell, trial: usize) -> Result<(SampledInstance, u64)> {
    let seed = cell_trial_seed(cfg.seed, cell.index, trial);
    let grid = UniformGrid::new(cell.n)?;
    let clean = sample_clean(signal, &grid);
    let model = cfg.noise.model_at(cell.level)?;
    Ok((add_noise(&clean, NoiseSpec { model, seed })?, seed))
}

fn run_trial(
    cfg: &ExperimentConfig,
    signal: &SignalSpec,
    cache: &OperatorCache,
    cell: &Cell,
    trial: usize,
    methods: &[Method],
) -> Result<Vec<ResultRow>> {
    let (inst, seed) = noisy_instance(cfg, signal, cell, trial)?;
    let pipeline = cache.pipeline(cell.n, cell.k, cell.lambda, cfg.zeta)?;
    let noisy_wrap_rmse = wrap_rmse(&inst.noisy_mod1, &inst.clean_mod1)?;
    let h = embed(&inst.clean_mod1);
    let model = cfg.noise.model_at(cell.level)?;
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let out = pipeline.run(&inst.noisy_mod1, method, None)?;
        let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        let corr = match &out.denoise {
            Some(d) => correlation(&d.trs.g, &h)?,
            None => correlation(&embed(&out.mod1), &h)?,
        };
        rows.push(ResultRow {
            cell: cell.index,
            function: cfg.function.to_string(),
            n: cell.n,
            k: cell.k,
            lambda: cell.lambda,
            noise_model: model.name().to_string(),
            noise_level: cell.level,
            method: method.label(),
            iterations: method.iterations(),
            trial,
            seed,
            noisy_wrap_rmse,
            wrap_rmse_mod1: wrap_rmse(&out.mod1, &inst.clean_mod1)?,
            shifted_rmse_f: shifted_rmse(&out.samples, &inst.clean_f)?.rmse,
            correlation: corr,
            wall_time_ms,
            method_rank: method,
        });
    }
    Ok(rows)
}

fn prepared_cache(cfg: &ExperimentConfig) -> Result<OperatorCache> {
    let mut cache = OperatorCache::default();
    for &n in &cfg.n {
        for &k in &cfg.k {
            cache.prepare(n, k)?;
        }
    }
    Ok(cache)
}

#[cfg(feature = "parallel")]
fn map_tasks<T: Send>(tasks: &[(Cell, usize)], f: impl Fn(&Cell, usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    tasks.par_iter().map(|(c, t)| f(c, *t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_tasks<T: Send>(tasks: &[(Cell, usize)], f: impl Fn(&Cell, usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    tasks.iter().map(|(c, t)| f(c, *t)).collect()
}

/// Runs every `(cell, trial)` and returns rows sorted by `(cell, method, trial)`.
///
/// With the `parallel` feature, trials run on the current rayon pool; the
/// output does not depend on scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let cache = prepared_cache(cfg)?;
    let methods = cfg.expanded_methods();
    let signal = SignalSpec::new(cfg.function);
    let tasks: Vec<(Cell, usize)> = cfg.cells().into_iter().flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let chunks = map_tasks(&tasks, |cell, trial| run_trial(cfg, &signal, &cache, cell, trial, &methods))?;
    let mut rows: Vec<ResultRow> = chunks.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.cell, r.method_rank, r.trial));
    Ok(rows)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Collapses trials; input must be sorted as returned by [`run_sweep`].
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for group in rows.chunk_by(|a, b| a.cell == b.cell && a.method == b.method) {
        let t = group.len() as f64;
        let mean = |f: fn(&ResultRow) -> f64| group.iter().map(f).sum::<f64>() / t;
        let mut shifted: Vec<f64> = group.iter().map(|r| r.shifted_rmse_f).collect();
        let r0 = &group[0];
        out.push(AggregateRow {
            cell: r0.cell,
            n: r0.n,
            k: r0.k,
            lambda: r0.lambda,
            noise_model: r0.noise_model.clone(),
            noise_level: r0.noise_level,
            method: r0.method.clone(),
            trials: group.len(),
            mean_noisy_wrap_rmse: mean(|r| r.noisy_wrap_rmse),
            mean_wrap_rmse_mod1: mean(|r| r.wrap_rmse_mod1),
            mean_shifted_rmse_f: mean(|r| r.shifted_rmse_f),
            median_shifted_rmse_f: median(&mut shifted),
            mean_correlation: mean(|r| r.correlation),
        });
    }
    out
}

/// One `(cell, trial)` row of the bound-check battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub cell: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub noise_level: f64,
    pub trial: usize,
    pub seed: u64,
    pub report: MetricsReport,
}

impl BoundRow {
    pub fn failed(&self) -> bool {
        !self.report.all_satisfied()
    }

    pub fn hypotheses_met(&self) -> bool {
        self.report.bound_checks.iter().all(|c| c.status != CheckStatus::HypothesesNotMet)
    }
}

/// Single-pass denoising on every `(cell, trial)` followed by
/// [`run_bound_checks`].
pub fn run_bound_battery(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    cfg.validate()?;
    let cache = prepared_cache(cfg)?;
    let signal = SignalSpec::new(cfg.function);
    let tasks: Vec<(Cell, usize)> = cfg.cells().into_iter().flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    map_tasks(&tasks, |cell, trial| {
        let (inst, seed) = noisy_instance(cfg, &signal, cell, trial)?;
        let pipeline = cache.pipeline(cell.n, cell.k, cell.lambda, cfg.zeta)?;
        let mut result = pipeline.denoiser().denoise(&inst.noisy_mod1, Some(&inst.clean_mod1))?;
        if let Some(offset) = cfg.tamper_offset {
            let tampered: Vec<f64> = result.trs.g.as_slice().iter().map(|x| x + offset).collect();
            result.trs.g = RealEmbedding::from_vec(tampered)?;
        }
        let report = run_bound_checks(&inst, &result, pipeline.denoiser().operator(), cell.k, &signal)?;
        Ok(BoundRow { cell: cell.index, n: cell.n, k: cell.k, lambda: cell.lambda, noise_level: cell.level, trial, seed, report })
    })
}

/// Reduces arbitrary samples to residues; convenience for the front ends.
pub fn residues_of(values: &[f64]) -> Mod1Series {
    Mod1Series::from_reals(&values.iter().map(|&v| reduce_mod1(v)).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"function":"f1","n":[60],"k":[2],"lambda":[0.1],
                "noise":{"model":"uniform","levels":[0.1]},"trials":2,"seed":5}"#,
        )
        .unwrap()
    }

    #[test]
    fn config_defaults_and_expansion() {
        let cfg = small_config();
        assert_eq!(cfg.zeta, 0.5);
        assert_eq!(cfg.expanded_methods(), vec![Method::Ols, Method::Qcqp, Method::Iqcqp(10)]);
        assert_eq!(cfg.cells().len(), 1);
    }

    #[test]
    fn config_rejects_bad_grids() {
        let bad = [
            r#"{"function":"f1","n":[],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]}}"#,
            r#"{"function":"f1","n":[10],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.6]}}"#,
            r#"{"function":"f1","n":[10],"k":[20],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]}}"#,
            r#"{"function":"nope","n":[10],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]}}"#,
            r#"{"function":"f1","n":[10],"k":[2],"lambda":[0.1],"noise":{"model":"uniform","levels":[0.1]},"bogus":1}"#,
        ];
        for s in bad {
            assert!(ExperimentConfig::from_json(s).is_err(), "{s}");
        }
    }

    #[test]
    fn sweep_is_sorted_and_deterministic() {
        let cfg = small_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.cell, &x.method, x.trial, x.shifted_rmse_f), (y.cell, &y.method, y.trial, y.shifted_rmse_f));
        }
        let order: Vec<_> = a.iter().map(|r| (r.method.as_str(), r.trial)).collect();
        assert_eq!(order, vec![("ols", 0), ("ols", 1), ("qcqp", 0), ("qcqp", 1), ("iqcqp10", 0), ("iqcqp10", 1)]);
        let agg = aggregate(&a);
        assert_eq!(agg.len(), 3);
        assert_eq!(agg[0].trials, 2);
    }

    #[test]
    fn residue_anchor_recovers_offset() {
        let f: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let y = residues_of(&f.iter().map(|x| x + 0.37).collect::<Vec<_>>());
        let c = residue_anchor(&y, &f);
        assert!((reduce_mod1(c) - 0.37).abs() < 1e-12);
    }
}
