//! Error metrics and the battery of correlation bounds checked against the
//! solver output.

use std::f64::consts::PI;

use serde::Serialize;

use crate::angular::{embed, wrap_distance_unchecked, Mod1Series};
use crate::denoise::{correlation, DenoiseResult};
use crate::error::{check_len, Error, Result};
use crate::signals::{measure_delta, SampledInstance, SignalSpec};
use crate::trs::SmoothnessOperator;

/// `sqrt(mean d_w(a_i, b_i)^2)`.
pub fn wrap_rmse(a: &Mod1Series, b: &Mod1Series) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::InvalidDimension("empty series".into()));
    }
    let s: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let d = wrap_distance_unchecked(x, y);
            d * d
        })
        .sum();
    Ok((s / a.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedRmse {
    pub rmse: f64,
    /// `c* = mean(f - fhat)`.
    pub shift: f64,
    /// Best integer shift and the RMSE it achieves.
    pub integer_shift: f64,
    pub integer_rmse: f64,
}

fn rmse_with_shift(fhat: &[f64], f: &[f64], c: f64) -> f64 {
    let s: f64 = fhat.iter().zip(f).map(|(a, b)| (a + c - b) * (a + c - b)).sum();
    (s / f.len() as f64).sqrt()
}

/// RMSE after removing the L2-optimal global shift.
pub fn shifted_rmse(fhat: &[f64], f: &[f64]) -> Result<ShiftedRmse> {
    check_len(f.len(), fhat.len())?;
    if f.is_empty() {
        return Err(Error::InvalidDimension("empty series".into()));
    }
    let shift = f.iter().zip(fhat).map(|(a, b)| a - b).sum::<f64>() / f.len() as f64;
    // the RMSE is quadratic in c, so the best integer is the nearer of floor/ceil
    let (lo, hi) = (shift.floor(), shift.ceil());
    let (rl, rh) = (rmse_with_shift(fhat, f, lo), rmse_with_shift(fhat, f, hi));
    let (integer_shift, integer_rmse) = if rl <= rh { (lo, rl) } else { (hi, rh) };
    Ok(ShiftedRmse { rmse: rmse_with_shift(fhat, f, shift), shift, integer_shift, integer_rmse })
}

/// Plain RMSE without any shift.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(rmse_with_shift(a, b, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Preconditions of the inequality do not hold; nothing asserted.
    HypothesesNotMet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs` for lower bounds, `rhs - lhs` for upper bounds.
    pub margin: f64,
    pub status: CheckStatus,
}

impl BoundCheck {
    const SLACK: f64 = 1e-9;

    fn at_least(name: &'static str, lhs: f64, rhs: f64, applicable: bool) -> Self {
        Self::new(name, lhs, rhs, lhs - rhs, applicable)
    }

    fn at_most(name: &'static str, lhs: f64, rhs: f64, applicable: bool) -> Self {
        Self::new(name, lhs, rhs, rhs - lhs, applicable)
    }

    fn new(name: &'static str, lhs: f64, rhs: f64, margin: f64, applicable: bool) -> Self {
        let status = if !applicable {
            CheckStatus::HypothesesNotMet
        } else if margin >= -Self::SLACK * (1.0 + rhs.abs().max(lhs.abs())) {
            CheckStatus::Passed
        } else {
            CheckStatus::Failed
        };
        Self { name, lhs, rhs, margin, status }
    }

    pub fn satisfied(&self) -> bool {
        self.status != CheckStatus::Failed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub wrap_rmse_mod1: f64,
    pub shifted_rmse_f: Option<f64>,
    pub optimal_shift: Option<f64>,
    pub correlation: f64,
    /// `||z - h|| / sqrt(n)` for the embedding fed to the solver.
    pub delta: f64,
    pub lambda_below_threshold: bool,
    pub orthogonal_to_nullspace: bool,
    pub bound_checks: Vec<BoundCheck>,
}

impl MetricsReport {
    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.bound_checks.iter().filter(|c| c.status == CheckStatus::Failed)
    }

    pub fn all_satisfied(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.bound_checks.iter().find(|c| c.name == name)
    }

    pub fn with_unwrapped(mut self, fhat: &[f64], f: &[f64]) -> Result<Self> {
        let s = shifted_rmse(fhat, f)?;
        self.shifted_rmse_f = Some(s.rmse);
        self.optimal_shift = Some(s.shift);
        Ok(self)
    }
}

/// `lambda pi^2 M^2 (2k)^{2 alpha + 1} / n^{2 alpha}`.
pub fn smoothness_penalty_bound(lambda: f64, m: f64, alpha: f64, k: usize, n: usize) -> f64 {
    lambda * PI * PI * m * m * (2.0 * k as f64).powf(2.0 * alpha + 1.0) / (n as f64).powf(2.0 * alpha)
}

/// Prefactor on `(1/2n) z^T H z` in the solution-smoothness lower bound.
pub fn solution_smoothness_prefactor(lambda: f64, k: usize, n: usize, orthogonal: bool) -> f64 {
    let lk = 4.0 * lambda * k as f64;
    if orthogonal {
        let s = (PI / (2.0 * n as f64)).sin();
        1.0 / (1.0 + lk - lk * s * s).powi(2)
    } else {
        1.0 / (lk + 1.0).powi(2)
    }
}

/// Evaluates every correlation inequality on one solved instance.
///
/// `delta` is measured from the ground truth. Checks whose preconditions
/// fail (`delta > 1`, or `lambda >= 1/(4k)` where required) are reported as
/// [`CheckStatus::HypothesesNotMet`].
pub fn run_bound_checks(
    inst: &SampledInstance,
    result: &DenoiseResult,
    op: &SmoothnessOperator,
    k: usize,
    signal: &SignalSpec,
) -> Result<MetricsReport> {
    let n = inst.n();
    check_len(n, op.n())?;
    let nf = n as f64;
    let lambda = op.lambda();
    let h = embed(&inst.clean_mod1);
    let z = &result.input;
    let g = &result.trs.g;
    let block = op.block();

    let delta = (z.as_slice().iter().zip(h.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / nf).sqrt();
    let corr = correlation(g, &h)?;
    let h_smooth = block.quad_form(h.as_slice())? / (2.0 * nf);
    let g_smooth = block.quad_form(g.as_slice())? / (2.0 * nf);
    let z_smooth = block.quad_form(z.as_slice())? / (2.0 * nf);
    let penalty = smoothness_penalty_bound(lambda, signal.holder_m, signal.holder_alpha, k, n);

    let small_lambda = lambda < 1.0 / (4.0 * k as f64);
    let bounded = delta <= 1.0;
    let orthogonal = result.trs.orthogonal_to_nullspace;
    let prefactor = solution_smoothness_prefactor(lambda, k, n, orthogonal);
    let case_ok = !orthogonal || small_lambda;

    let kkt_tol = 1e-8 * (1.0 + z.norm_sq().sqrt());
    let kkt = {
        let p = crate::trs::TrsProblem::new(op, z.clone())?;
        p.kkt_residual(g.as_slice(), result.trs.mu)?
    };
    let base = 1.0 - 1.5 * delta;

    let checks = vec![
        BoundCheck::at_most("trs_kkt", kkt, kkt_tol, true),
        BoundCheck::at_most("trs_norm", (g.norm_sq() - nf).abs(), 1e-8 * nf, true),
        BoundCheck::at_least("lemma3", corr, base - h_smooth + g_smooth, bounded),
        BoundCheck::at_most("lemma4", h_smooth, penalty, true),
        BoundCheck::at_least("lemma5", g_smooth, prefactor * z_smooth, case_ok),
        BoundCheck::at_least("theorem1", corr, base - penalty + prefactor * z_smooth, bounded && case_ok),
        BoundCheck::at_least("corollary1", corr, base - penalty, bounded && small_lambda),
    ];

    Ok(MetricsReport {
        wrap_rmse_mod1: wrap_rmse(&result.denoised, &inst.clean_mod1)?,
        shifted_rmse_f: None,
        optimal_shift: None,
        correlation: corr,
        delta,
        lambda_below_threshold: small_lambda,
        orthogonal_to_nullspace: orthogonal,
        bound_checks: checks,
    })
}

/// `delta` between the noisy and clean residues of an instance.
pub fn instance_delta(inst: &SampledInstance) -> Result<f64> {
    measure_delta(&inst.noisy_mod1, &inst.clean_mod1)
}
