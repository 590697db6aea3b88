//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported call has a plain Rust twin (`run_*`) so the logic can be
//! exercised natively.

use wasm_bindgen::prelude::*;

use mod1_core::angular::embed;
use mod1_core::eval::{shifted_rmse, wrap_rmse};
use mod1_core::experiment::{Method, Pipeline};
use mod1_core::grid::{build_graph, spectral_bounds_check, UniformGrid};
use mod1_core::signals::{add_noise, sample_clean, NoiseModel, NoiseSpec, SignalKind, SignalSpec};
use mod1_core::trs::{project_onto_spectrum, solve_trs_equality, CaseTag, SmoothnessOperator, TrsProblem};

const MAX_N: usize = 2000;

fn check_size(n: usize) -> Result<(), String> {
    if n > MAX_N {
        Err(format!("n must be at most {MAX_N} in the browser"))
    } else {
        Ok(())
    }
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DenoiseView {
    x: Vec<f64>,
    f: Vec<f64>,
    clean: Vec<f64>,
    noisy: Vec<f64>,
    qcqp: Vec<f64>,
    iqcqp: Vec<f64>,
    ols_f: Vec<f64>,
    qcqp_f: Vec<f64>,
    iqcqp_f: Vec<f64>,
    /// Wrap RMSE of noisy, QCQP, iQCQP; then shifted RMSE of OLS, QCQP, iQCQP.
    stats: Vec<f64>,
}

#[wasm_bindgen]
impl DenoiseView {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn f(&self) -> Vec<f64> {
        self.f.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn clean(&self) -> Vec<f64> {
        self.clean.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn noisy(&self) -> Vec<f64> {
        self.noisy.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn qcqp(&self) -> Vec<f64> {
        self.qcqp.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn iqcqp(&self) -> Vec<f64> {
        self.iqcqp.clone()
    }

    #[wasm_bindgen(getter, js_name = olsF)]
    pub fn ols_f(&self) -> Vec<f64> {
        self.ols_f.clone()
    }

    #[wasm_bindgen(getter, js_name = qcqpF)]
    pub fn qcqp_f(&self) -> Vec<f64> {
        self.qcqp_f.clone()
    }

    #[wasm_bindgen(getter, js_name = iqcqpF)]
    pub fn iqcqp_f(&self) -> Vec<f64> {
        self.iqcqp_f.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn stats(&self) -> Vec<f64> {
        self.stats.clone()
    }
}

fn shift_to(fhat: &[f64], f: &[f64]) -> Result<(Vec<f64>, f64), String> {
    let s = shifted_rmse(fhat, f).map_err(|e| e.to_string())?;
    Ok((fhat.iter().map(|v| v + s.shift).collect(), s.rmse))
}

pub fn run_denoise(n: usize, k: usize, lambda: f64, gamma: f64, seed: u64, iterations: usize) -> Result<DenoiseView, String> {
    check_size(n)?;
    let grid = UniformGrid::new(n).map_err(|e| e.to_string())?;
    let inst = add_noise(&sample_clean(&SignalSpec::new(SignalKind::F1), &grid), NoiseSpec { model: NoiseModel::Uniform { gamma }, seed })
        .map_err(|e| e.to_string())?;
    let pipeline = Pipeline::new(n, k, lambda, 0.5).map_err(|e| e.to_string())?;
    let y = &inst.noisy_mod1;
    let run = |m| pipeline.run(y, m, None).map_err(|e| e.to_string());
    let ols = run(Method::Ols)?;
    let q = run(Method::Qcqp)?;
    let iq = run(Method::Iqcqp(iterations.max(1)))?;
    let (ols_f, ols_rmse) = shift_to(&ols.samples, &inst.clean_f)?;
    let (qcqp_f, q_rmse) = shift_to(&q.samples, &inst.clean_f)?;
    let (iqcqp_f, iq_rmse) = shift_to(&iq.samples, &inst.clean_f)?;
    let wrap = |s| wrap_rmse(s, &inst.clean_mod1).map_err(|e| e.to_string());
    let stats = vec![wrap(y)?, wrap(&q.mod1)?, wrap(&iq.mod1)?, ols_rmse, q_rmse, iq_rmse];
    Ok(DenoiseView {
        x: grid.points().to_vec(),
        f: inst.clean_f.clone(),
        clean: inst.clean_mod1.values().to_vec(),
        noisy: y.values().to_vec(),
        qcqp: q.mod1.values().to_vec(),
        iqcqp: iq.mod1.values().to_vec(),
        ols_f,
        qcqp_f,
        iqcqp_f,
        stats,
    })
}

/// Noisy `f1` samples, denoised by one pass and by `iterations` passes, and
/// the three unwrapped estimates aligned to the ground truth.
#[wasm_bindgen]
pub fn denoise_demo(n: usize, k: usize, lambda: f64, gamma: f64, seed: u32, iterations: usize) -> Result<DenoiseView, JsError> {
    run_denoise(n, k, lambda, gamma, seed as u64, iterations).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SecularView {
    mu: Vec<f64>,
    phi: Vec<f64>,
    radius_sq: f64,
    mu_star: f64,
    min_pole: f64,
    case: String,
}

#[wasm_bindgen]
impl SecularView {
    #[wasm_bindgen(getter)]
    pub fn mu(&self) -> Vec<f64> {
        self.mu.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn phi(&self) -> Vec<f64> {
        self.phi.clone()
    }

    #[wasm_bindgen(getter, js_name = radiusSq)]
    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    #[wasm_bindgen(getter, js_name = muStar)]
    pub fn mu_star(&self) -> f64 {
        self.mu_star
    }

    #[wasm_bindgen(getter, js_name = minPole)]
    pub fn min_pole(&self) -> f64 {
        self.min_pole
    }

    #[wasm_bindgen(getter)]
    pub fn case(&self) -> String {
        self.case.clone()
    }
}

fn case_name(c: CaseTag) -> &'static str {
    match c {
        CaseTag::Easy => "easy",
        CaseTag::HardBoundary => "hard-boundary",
        CaseTag::HardNullspace => "hard-nullspace",
        CaseTag::Interior => "interior",
    }
}

pub fn run_secular(n: usize, k: usize, lambda: f64, gamma: f64, seed: u64, points: usize) -> Result<SecularView, String> {
    check_size(n)?;
    let grid = UniformGrid::new(n).map_err(|e| e.to_string())?;
    let inst = add_noise(&sample_clean(&SignalSpec::new(SignalKind::F1), &grid), NoiseSpec { model: NoiseModel::Uniform { gamma }, seed })
        .map_err(|e| e.to_string())?;
    let op = SmoothnessOperator::for_grid(n, k, lambda).map_err(|e| e.to_string())?;
    let z = embed(&inst.noisy_mod1);
    let sf = project_onto_spectrum(&z, &op).map_err(|e| e.to_string())?;
    let sol = solve_trs_equality(&TrsProblem::new(&op, z).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let lo = -sf.min_pole();
    let hi = (2.0 * sol.mu.max(0.0)).max(lo + 1.0);
    let points = points.clamp(2, 4000);
    let mu: Vec<f64> = (1..=points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect();
    let phi = mu.iter().map(|&m| sf.value(m)).collect();
    Ok(SecularView { mu, phi, radius_sq: n as f64, mu_star: sol.mu, min_pole: sf.min_pole(), case: case_name(sol.case).to_string() })
}

/// Secular function `phi(mu)` of one noisy instance, with its root.
#[wasm_bindgen]
pub fn secular_curve(n: usize, k: usize, lambda: f64, gamma: f64, seed: u32, points: usize) -> Result<SecularView, JsError> {
    run_secular(n, k, lambda, gamma, seed as u64, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SpectrumView {
    eigenvalues: Vec<f64>,
    largest_bound: f64,
    fiedler_bound: f64,
    ok: bool,
}

#[wasm_bindgen]
impl SpectrumView {
    #[wasm_bindgen(getter)]
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.clone()
    }

    #[wasm_bindgen(getter, js_name = largestBound)]
    pub fn largest_bound(&self) -> f64 {
        self.largest_bound
    }

    #[wasm_bindgen(getter, js_name = fiedlerBound)]
    pub fn fiedler_bound(&self) -> f64 {
        self.fiedler_bound
    }

    #[wasm_bindgen(getter)]
    pub fn ok(&self) -> bool {
        self.ok
    }
}

pub fn run_spectrum(n: usize, k: usize) -> Result<SpectrumView, String> {
    if n > 600 {
        return Err("n must be at most 600 for the spectrum view".into());
    }
    let spec = build_graph(n, k).and_then(|g| g.laplacian().spectrum()).map_err(|e| e.to_string())?;
    let report = spectral_bounds_check(&spec, k, n);
    Ok(SpectrumView {
        eigenvalues: spec.eigenvalues.clone(),
        largest_bound: report.largest_bound,
        fiedler_bound: report.fiedler_bound,
        ok: report.passed(),
    })
}

/// Laplacian eigenvalues of the `k`-neighbourhood path graph with the
/// Gershgorin and Fiedler bounds.
#[wasm_bindgen]
pub fn laplacian_spectrum(n: usize, k: usize) -> Result<SpectrumView, JsError> {
    run_spectrum(n, k).map_err(|e| JsError::new(&e))
}
