//! Stage one of the pipeline: smooth noisy residues on the circle by solving
//! the sphere-constrained trust-region problem, then project back.

use serde::{Deserialize, Serialize};

use crate::angular::{embed, project_to_mod1, Mod1Series, RealEmbedding};
use crate::error::{check_len, Error, Result};
use crate::eval::wrap_rmse;
use crate::trs::{solve_trs_equality, SmoothnessOperator, TrsProblem, TrsSolution};

pub const DEFAULT_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseParams {
    pub k: usize,
    pub lambda: f64,
    /// `1` for a single pass; more feeds each output back in.
    pub iterations: usize,
}

impl DenoiseParams {
    pub fn new(k: usize, lambda: f64, iterations: usize) -> Result<Self> {
        let p = Self { k, lambda, iterations };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseResult {
    pub denoised: Mod1Series,
    /// Solution of the last pass.
    pub trs: TrsSolution,
    /// Embedding fed to the last pass.
    pub input: RealEmbedding,
    /// `(1/n) <h, g>` against the clean embedding, when supplied.
    pub correlation: Option<f64>,
    pub degenerate_indices: Vec<usize>,
    /// Wrap RMSE against the clean residues after each pass, when supplied.
    pub trace: Vec<f64>,
}

/// `(1/n) <g, h>` for `2n`-vectors.
pub fn correlation(gbar: &RealEmbedding, hbar: &RealEmbedding) -> Result<f64> {
    check_len(hbar.as_slice().len(), gbar.as_slice().len())?;
    Ok(gbar.dot(hbar)? / hbar.n() as f64)
}

/// Precomputed operator for a fixed `(n, k, lambda)`.
#[derive(Debug, Clone)]
pub struct Denoiser {
    operator: SmoothnessOperator,
}

impl Denoiser {
    pub fn new(n: usize, k: usize, lambda: f64) -> Result<Self> {
        Ok(Self { operator: SmoothnessOperator::for_grid(n, k, lambda)? })
    }

    pub fn from_operator(operator: SmoothnessOperator) -> Self {
        Self { operator }
    }

    pub fn operator(&self) -> &SmoothnessOperator {
        &self.operator
    }

    fn single(&self, y: &Mod1Series) -> Result<(Mod1Series, TrsSolution, RealEmbedding, Vec<usize>)> {
        let z = embed(y);
        let problem = TrsProblem::new(&self.operator, z.clone())?;
        let trs = solve_trs_equality(&problem)?;
        let proj = project_to_mod1(&trs.g);
        Ok((proj.series, trs, z, proj.degenerate))
    }

    pub fn denoise(&self, y: &Mod1Series, clean: Option<&Mod1Series>) -> Result<DenoiseResult> {
        self.iterate(y, 1, clean)
    }

    /// Runs `iterations` passes, re-embedding the projected residues each time.
    pub fn iterate(&self, y: &Mod1Series, iterations: usize, clean: Option<&Mod1Series>) -> Result<DenoiseResult> {
        if iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        check_len(self.operator.n(), y.len())?;
        if let Some(c) = clean {
            check_len(y.len(), c.len())?;
        }
        let mut current = y.clone();
        let mut trace = Vec::with_capacity(iterations);
        let mut last = None;
        for _ in 0..iterations {
            let (out, trs, input, degenerate) = self.single(&current)?;
            if let Some(c) = clean {
                trace.push(wrap_rmse(&out, c)?);
            }
            current = out;
            last = Some((trs, input, degenerate));
        }
        let (trs, input, degenerate_indices) = last.expect("at least one pass");
        let correlation = clean.map(|c| correlation(&trs.g, &embed(c))).transpose()?;
        Ok(DenoiseResult { denoised: current, trs, input, correlation, degenerate_indices, trace })
    }
}

pub fn denoise(y: &Mod1Series, p: &DenoiseParams) -> Result<DenoiseResult> {
    p.validate()?;
    Denoiser::new(y.len(), p.k, p.lambda)?.denoise(y, None)
}

pub fn iterated_denoise(y: &Mod1Series, p: &DenoiseParams) -> Result<DenoiseResult> {
    p.validate()?;
    Denoiser::new(y.len(), p.k, p.lambda)?.iterate(y, p.iterations, None)
}
