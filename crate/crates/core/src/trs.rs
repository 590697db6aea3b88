//! Trust-region subproblems over a sphere or a ball, solved in the
//! eigenbasis of the quadratic term.
//!
//! The generic layer works on a [`SecularFunction`]: poles `d_j` (the
//! eigenvalues of `P` in `min 1/2 x^T P x - 2 z^T x`) and coefficients
//! `c_j = <z, q_j>`. For a multiplier `mu` the stationary point has
//! coordinates `x_j = 2 c_j / (d_j + mu)`, and its squared norm is the
//! secular function `phi(mu) = 4 sum c_j^2 / (d_j + mu)^2`.
//!
//! The denoiser instantiates this with `P = 2H`, `H = lambda diag(L, L)`.
//! Because `H` is block diagonal, its eigenpairs are the Laplacian eigenpairs
//! placed in the real half and in the imaginary half; only the `n x n`
//! Laplacian is ever factored.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::angular::RealEmbedding;
use crate::error::{check_len, Error, Result};
use crate::grid::{BlockLaplacian, LaplacianMatrix, NeighborGraph, Spectrum};

/// Null-space coefficients below this fraction of `||z||` count as zero.
pub const NULLSPACE_ORTHOGONALITY_TOL: f64 = 1e-9;
/// Poles within this fraction of the spectral radius of the bottom pole
/// belong to the bottom eigenspace.
pub const POLE_GROUPING_TOL: f64 = 1e-12;

const SECULAR_REL_TOL: f64 = 1e-10;
const BRACKET_REL_TOL: f64 = 1e-14;
const MAX_ROOT_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    /// `mu*` strictly above the bottom pole, found by root finding.
    Easy,
    /// Hard case with `phi(-d_min) = r^2`: `mu* = -d_min`, no null-space
    /// completion needed.
    HardBoundary,
    /// Hard case with `phi(-d_min) < r^2`: pseudo-inverse solution plus a
    /// null-space component of length `theta`.
    HardNullspace,
    /// Ball constraint inactive (inequality form only).
    Interior,
}

/// `phi(mu) = 4 sum_j c_j^2 / (d_j + mu)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularFunction {
    poles: Vec<f64>,
    coefs: Vec<f64>,
}

impl SecularFunction {
    pub fn new(poles: Vec<f64>, coefs: Vec<f64>) -> Result<Self> {
        check_len(poles.len(), coefs.len())?;
        if poles.is_empty() {
            return Err(Error::InvalidDimension("empty secular function".into()));
        }
        Ok(Self { poles, coefs })
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn coef_norm_sq(&self) -> f64 {
        self.coefs.iter().map(|c| c * c).sum()
    }

    pub fn min_pole(&self) -> f64 {
        self.poles.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn value(&self, mu: f64) -> f64 {
        4.0 * self
            .poles
            .iter()
            .zip(&self.coefs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(d, c)| {
                let s = d + mu;
                c * c / (s * s)
            })
            .sum::<f64>()
    }

    /// `phi'(mu) = -8 sum c_j^2 / (d_j + mu)^3`.
    pub fn derivative(&self, mu: f64) -> f64 {
        -8.0 * self
            .poles
            .iter()
            .zip(&self.coefs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(d, c)| {
                let s = d + mu;
                c * c / (s * s * s)
            })
            .sum::<f64>()
    }

    /// Indices of the bottom eigenspace.
    pub fn bottom_indices(&self) -> Vec<usize> {
        let d_min = self.min_pole();
        let scale = self.poles.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let tol = POLE_GROUPING_TOL * scale;
        (0..self.len()).filter(|&j| self.poles[j] - d_min <= tol).collect()
    }

    /// True when every bottom-eigenspace coefficient is negligible.
    pub fn orthogonal_to_bottom(&self) -> bool {
        let tol = NULLSPACE_ORTHOGONALITY_TOL * self.coef_norm_sq().sqrt();
        self.bottom_indices().iter().all(|&j| self.coefs[j].abs() <= tol)
    }

    fn coords_at(&self, mu: f64) -> Vec<f64> {
        self.poles.iter().zip(&self.coefs).map(|(d, c)| if *c == 0.0 { 0.0 } else { 2.0 * c / (d + mu) }).collect()
    }

    /// Copy with the bottom-eigenspace coefficients zeroed.
    fn deflated(&self) -> Self {
        let mut coefs = self.coefs.clone();
        for j in self.bottom_indices() {
            coefs[j] = 0.0;
        }
        Self { poles: self.poles.clone(), coefs }
    }
}

/// Solution expressed in eigen-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub coords: Vec<f64>,
    pub mu: f64,
    pub case: CaseTag,
    pub unique: bool,
    /// Linear term orthogonal to the bottom eigenspace (hard-case candidate).
    pub orthogonal: bool,
    /// `phi(-d_min)` evaluated on the deflated function when `orthogonal`.
    pub phi_at_bottom: Option<f64>,
    pub iterations: usize,
}

/// Finds `mu` in `(lo, hi)` with `phi(mu) = r^2`, given `phi(lo) > r^2` (or
/// `lo` a pole) and `phi(hi) <= r^2`.
///
/// Safeguarded Newton on `psi(mu) = 1/sqrt(phi(mu)) - 1/r`, which is nearly
/// linear in `mu`; steps leaving the bracket fall back to bisection.
fn secular_root(sf: &SecularFunction, radius_sq: f64, mut lo: f64, mut hi: f64) -> Result<(f64, usize)> {
    if !(hi > lo) {
        return Err(Error::RootNotBracketed(format!("empty bracket [{lo}, {hi}]")));
    }
    if sf.value(hi) > radius_sq * (1.0 + SECULAR_REL_TOL) {
        return Err(Error::RootNotBracketed(format!("phi({hi}) = {} > {radius_sq}", sf.value(hi))));
    }
    let inv_r = 1.0 / radius_sq.sqrt();
    let mut mu = hi;
    for it in 1..=MAX_ROOT_ITERS {
        if !(mu > lo && mu <= hi) {
            mu = 0.5 * (lo + hi);
        }
        let phi = sf.value(mu);
        if (phi - radius_sq).abs() <= SECULAR_REL_TOL * radius_sq {
            return Ok((mu, it));
        }
        if phi > radius_sq {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= BRACKET_REL_TOL * (1.0 + mu.abs()) {
            return Ok((0.5 * (lo + hi), it));
        }
        let psi = 1.0 / phi.sqrt() - inv_r;
        let dpsi = -0.5 * phi.powf(-1.5) * sf.derivative(mu);
        let next = mu - psi / dpsi;
        mu = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Err(Error::RootNotBracketed(format!("no convergence in {MAX_ROOT_ITERS} iterations")))
}

/// Upper end of the root bracket: `phi(mu) <= 4 ||c||^2 / (d_min + mu)^2`.
fn upper_bracket(sf: &SecularFunction, radius_sq: f64) -> f64 {
    2.0 * sf.coef_norm_sq().sqrt() / radius_sq.sqrt() - sf.min_pole()
}

/// Global minimiser of `1/2 x^T P x - 2 z^T x` subject to `||x||^2 = r^2`.
pub fn solve_sphere(sf: &SecularFunction, radius_sq: f64) -> Result<SpectralSolution> {
    if !(radius_sq > 0.0) {
        return Err(Error::InvalidParameter(format!("radius^2 must be positive, got {radius_sq}")));
    }
    let d_min = sf.min_pole();
    let bottom = sf.bottom_indices();

    if !sf.orthogonal_to_bottom() {
        let (mu, iterations) = secular_root(sf, radius_sq, -d_min, upper_bracket(sf, radius_sq))?;
        return Ok(SpectralSolution {
            coords: sf.coords_at(mu),
            mu,
            case: CaseTag::Easy,
            unique: true,
            orthogonal: false,
            phi_at_bottom: None,
            iterations,
        });
    }

    let reduced = sf.deflated();
    let phi_bottom = reduced.value(-d_min);
    let mut coords = reduced.coords_at(-d_min);
    for &j in &bottom {
        coords[j] = 0.0;
    }

    if phi_bottom > radius_sq * (1.0 + SECULAR_REL_TOL) {
        let (mu, iterations) = secular_root(&reduced, radius_sq, -d_min, upper_bracket(&reduced, radius_sq))?;
        return Ok(SpectralSolution {
            coords: reduced.coords_at(mu),
            mu,
            case: CaseTag::Easy,
            unique: true,
            orthogonal: true,
            phi_at_bottom: Some(phi_bottom),
            iterations,
        });
    }

    if phi_bottom >= radius_sq * (1.0 - SECULAR_REL_TOL) {
        return Ok(SpectralSolution {
            coords,
            mu: -d_min,
            case: CaseTag::HardBoundary,
            unique: true,
            orthogonal: true,
            phi_at_bottom: Some(phi_bottom),
            iterations: 0,
        });
    }

    let theta = (radius_sq - phi_bottom).sqrt();
    coords[bottom[0]] = theta;
    Ok(SpectralSolution {
        coords,
        mu: -d_min,
        case: CaseTag::HardNullspace,
        unique: false,
        orthogonal: true,
        phi_at_bottom: Some(phi_bottom),
        iterations: 0,
    })
}

/// Global minimiser of `1/2 x^T P x - 2 z^T x` subject to `||x||^2 <= r^2`.
pub fn solve_ball(sf: &SecularFunction, radius_sq: f64) -> Result<SpectralSolution> {
    if !(radius_sq > 0.0) {
        return Err(Error::InvalidParameter(format!("radius^2 must be positive, got {radius_sq}")));
    }
    let d_min = sf.min_pole();
    let scale = sf.poles().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let singular_tol = POLE_GROUPING_TOL * scale;

    if d_min > singular_tol {
        let phi0 = sf.value(0.0);
        if phi0 <= radius_sq {
            return Ok(SpectralSolution {
                coords: sf.coords_at(0.0),
                mu: 0.0,
                case: CaseTag::Interior,
                unique: true,
                orthogonal: false,
                phi_at_bottom: None,
                iterations: 0,
            });
        }
    } else if d_min.abs() <= singular_tol && sf.orthogonal_to_bottom() {
        let reduced = sf.deflated();
        let phi0 = reduced.value(-d_min);
        if phi0 <= radius_sq {
            // P is PSD and singular: every x(0) + t v inside the ball is optimal.
            let mut coords = reduced.coords_at(-d_min);
            for j in sf.bottom_indices() {
                coords[j] = 0.0;
            }
            return Ok(SpectralSolution {
                coords,
                mu: 0.0,
                case: CaseTag::Interior,
                unique: false,
                orthogonal: true,
                phi_at_bottom: Some(phi0),
                iterations: 0,
            });
        }
    }
    solve_sphere(sf, radius_sq)
}

/// `H = lambda diag(L, L)` together with the Laplacian spectrum.
#[derive(Debug, Clone)]
pub struct SmoothnessOperator {
    block: BlockLaplacian,
    spectrum: Arc<Spectrum>,
}

impl SmoothnessOperator {
    pub fn new(block: BlockLaplacian, spectrum: Arc<Spectrum>) -> Result<Self> {
        check_len(block.n(), spectrum.len())?;
        Ok(Self { block, spectrum })
    }

    /// Builds graph, Laplacian and spectrum for `(n, k)`.
    pub fn for_grid(n: usize, k: usize, lambda: f64) -> Result<Self> {
        let lap = LaplacianMatrix::from_graph(&NeighborGraph::new(n, k)?);
        let spectrum = Arc::new(lap.spectrum()?);
        Self::new(BlockLaplacian::new(lambda, lap)?, spectrum)
    }

    /// Same graph and spectrum, different regularisation weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Ok(Self { block: BlockLaplacian::new(lambda, self.block.shared_laplacian())?, spectrum: Arc::clone(&self.spectrum) })
    }

    pub fn block(&self) -> &BlockLaplacian {
        &self.block
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn lambda(&self) -> f64 {
        self.block.lambda()
    }

    pub fn n(&self) -> usize {
        self.block.n()
    }

    /// `lambda_j(H)` for `j = 1, 2, 3` (one-based), i.e. `0, 0, lambda beta_2`.
    pub fn h_eigenvalue(&self, j: usize) -> f64 {
        self.block.lambda() * self.spectrum.eigenvalues[(j - 1) / 2]
    }

    /// `Q^T z` for each half: entries `0..n` pair the real half with `q_j`,
    /// entries `n..2n` pair the imaginary half with `q_j`.
    pub fn coordinates(&self, v: &RealEmbedding) -> Result<Vec<f64>> {
        check_len(self.n(), v.n())?;
        let mut c = self.spectrum.project(v.re());
        c.extend(self.spectrum.project(v.im()));
        Ok(c)
    }

    pub fn from_coordinates(&self, coords: &[f64]) -> Result<RealEmbedding> {
        let n = self.n();
        check_len(2 * n, coords.len())?;
        RealEmbedding::from_parts(&self.spectrum.synthesize(&coords[..n]), &self.spectrum.synthesize(&coords[n..]))
    }

    /// Poles `2 lambda_j(H)` in the coordinate layout of [`Self::coordinates`].
    pub fn poles(&self) -> Vec<f64> {
        let lambda = self.block.lambda();
        let half: Vec<f64> = self.spectrum.eigenvalues.iter().map(|b| 2.0 * lambda * b).collect();
        half.iter().chain(&half).copied().collect()
    }
}

/// Secular function of `z` against the eigenbasis of `H`.
pub fn project_onto_spectrum(z: &RealEmbedding, op: &SmoothnessOperator) -> Result<SecularFunction> {
    SecularFunction::new(op.poles(), op.coordinates(z)?)
}

/// `min g^T H g - 2 g^T z` subject to `||g||^2 = radius_sq` (or `<=`).
#[derive(Debug, Clone)]
pub struct TrsProblem<'a> {
    pub operator: &'a SmoothnessOperator,
    pub linear: RealEmbedding,
    pub radius_sq: f64,
}

impl<'a> TrsProblem<'a> {
    /// Sphere of squared radius `n`.
    pub fn new(operator: &'a SmoothnessOperator, linear: RealEmbedding) -> Result<Self> {
        check_len(operator.n(), linear.n())?;
        let radius_sq = operator.n() as f64;
        Ok(Self { operator, linear, radius_sq })
    }

    pub fn with_radius_sq(mut self, radius_sq: f64) -> Result<Self> {
        if !(radius_sq > 0.0) {
            return Err(Error::InvalidParameter(format!("radius^2 must be positive, got {radius_sq}")));
        }
        self.radius_sq = radius_sq;
        Ok(self)
    }

    pub fn objective(&self, g: &[f64]) -> Result<f64> {
        let quad = self.operator.block().quad_form(g)?;
        let lin: f64 = g.iter().zip(self.linear.as_slice()).map(|(a, b)| a * b).sum();
        Ok(quad - 2.0 * lin)
    }

    /// `||(2H + mu I) g - 2 z||`.
    pub fn kkt_residual(&self, g: &[f64], mu: f64) -> Result<f64> {
        let hg = self.operator.block().apply(g)?;
        Ok(hg
            .iter()
            .zip(g)
            .zip(self.linear.as_slice())
            .map(|((h, x), z)| {
                let r = 2.0 * h + mu * x - 2.0 * z;
                r * r
            })
            .sum::<f64>()
            .sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrsSolution {
    pub g: RealEmbedding,
    pub mu: f64,
    pub case: CaseTag,
    pub unique: bool,
    pub kkt_residual: f64,
    /// `z` counted as orthogonal to `N(H)`.
    pub orthogonal_to_nullspace: bool,
    /// `phi(0)` when `orthogonal_to_nullspace`.
    pub phi_at_zero: Option<f64>,
}

fn lift(p: &TrsProblem<'_>, sol: SpectralSolution) -> Result<TrsSolution> {
    let g = p.operator.from_coordinates(&sol.coords)?;
    let kkt_residual = p.kkt_residual(g.as_slice(), sol.mu)?;
    Ok(TrsSolution {
        g,
        mu: sol.mu,
        case: sol.case,
        unique: sol.unique,
        kkt_residual,
        orthogonal_to_nullspace: sol.orthogonal,
        phi_at_zero: sol.phi_at_bottom,
    })
}

pub fn solve_trs_equality(p: &TrsProblem<'_>) -> Result<TrsSolution> {
    let sf = project_onto_spectrum(&p.linear, p.operator)?;
    lift(p, solve_sphere(&sf, p.radius_sq)?)
}

pub fn solve_trs_inequality(p: &TrsProblem<'_>) -> Result<TrsSolution> {
    let sf = project_onto_spectrum(&p.linear, p.operator)?;
    lift(p, solve_ball(&sf, p.radius_sq)?)
}

/// Optimality certificate for a sphere-constrained solution.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub kkt_residual: f64,
    pub kkt_tolerance: f64,
    pub constraint_residual: f64,
    pub constraint_tolerance: f64,
    /// `mu + 2 lambda_1(H)`
    pub psd_margin: f64,
    pub objective: f64,
    /// Smallest objective over the random feasible probes.
    pub best_random_objective: f64,
    pub kkt_ok: bool,
    pub constraint_ok: bool,
    pub psd_ok: bool,
    pub beats_random: bool,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.kkt_ok && self.constraint_ok && self.psd_ok && self.beats_random
    }
}

pub const CERTIFICATE_PROBES: usize = 1000;

/// Checks Lagrange conditions and compares against random feasible points.
pub fn certify(sol: &TrsSolution, p: &TrsProblem<'_>) -> Result<CertificateReport> {
    certify_with_probes(sol, p, CERTIFICATE_PROBES, 0x5EED_CE27)
}

pub fn certify_with_probes(sol: &TrsSolution, p: &TrsProblem<'_>, probes: usize, seed: u64) -> Result<CertificateReport> {
    let g = sol.g.as_slice();
    let z_norm = p.linear.norm_sq().sqrt();
    let kkt_residual = p.kkt_residual(g, sol.mu)?;
    let kkt_tolerance = 1e-8 * (1.0 + z_norm);
    let constraint_residual = (sol.g.norm_sq() - p.radius_sq).abs();
    let constraint_tolerance = 1e-8 * p.radius_sq;
    let psd_margin = sol.mu + 2.0 * p.operator.h_eigenvalue(1);
    let objective = p.objective(g)?;

    let dim = g.len();
    let radius = p.radius_sq.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_random_objective = f64::INFINITY;
    let mut v = vec![0.0; dim];
    for _ in 0..probes {
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x *= radius / norm);
        best_random_objective = best_random_objective.min(p.objective(&v)?);
    }
    let slack = 1e-10 * (1.0 + objective.abs());

    Ok(CertificateReport {
        kkt_residual,
        kkt_tolerance,
        constraint_residual,
        constraint_tolerance,
        psd_margin,
        objective,
        best_random_objective,
        kkt_ok: kkt_residual <= kkt_tolerance,
        constraint_ok: constraint_residual <= constraint_tolerance,
        psd_ok: psd_margin >= -1e-10,
        beats_random: objective <= best_random_objective + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::embed_values;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        // f decreasing, f(lo) > 0 > f(hi)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn coefficients_of_two_point_antipodal() {
        let op = SmoothnessOperator::for_grid(2, 1, 1.0).unwrap();
        let z = embed_values(&[0.0, 0.5]).unwrap();
        let sf = project_onto_spectrum(&z, &op).unwrap();
        // layout: [Re q1, Re q2, Im q1, Im q2]
        assert!(sf.coefs()[0].abs() < 1e-15);
        assert!((sf.coefs()[1] - 2f64.sqrt()).abs() < 1e-15);
        assert!(sf.coefs()[2].abs() < 1e-15 && sf.coefs()[3].abs() < 1e-15);
        assert!((sf.coef_norm_sq() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_direction_hits_single_coefficient() {
        let n = 7;
        let op = SmoothnessOperator::for_grid(n, 2, 0.3).unwrap();
        let c = 1.0 / (n as f64).sqrt();
        let z = RealEmbedding::from_parts(&vec![c; n], &vec![0.0; n]).unwrap();
        let sf = project_onto_spectrum(&z, &op).unwrap();
        assert!((sf.coefs()[0] - 1.0).abs() < 1e-14);
        assert!(sf.coefs()[1..].iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn synthetic_two_pole_root() {
        let sf = SecularFunction::new(vec![0.0, 2.0], vec![1.0, 1.0]).unwrap();
        let sol = solve_sphere(&sf, 2.0).unwrap();
        let oracle = bisect(|m| 4.0 * (1.0 / (m * m) + 1.0 / ((2.0 + m) * (2.0 + m))) - 2.0, 1e-9, 10.0);
        assert!((sol.mu - oracle).abs() < 1e-12, "{} vs {oracle}", sol.mu);
        assert_eq!(sol.case, CaseTag::Easy);
        let norm: f64 = sol.coords.iter().map(|x| x * x).sum();
        assert!((norm - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_lambda_returns_linear_term() {
        let op = SmoothnessOperator::for_grid(5, 2, 0.0).unwrap();
        let z = embed_values(&[0.1, 0.3, 0.35, 0.9, 0.6]).unwrap();
        let p = TrsProblem::new(&op, z.clone()).unwrap();
        let sol = solve_trs_equality(&p).unwrap();
        assert!((sol.mu - 2.0).abs() < 1e-9);
        for (a, b) in sol.g.as_slice().iter().zip(z.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
        let ball = solve_trs_inequality(&p).unwrap();
        for (a, b) in ball.g.as_slice().iter().zip(z.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn hard_case_branch_on_roots_of_unity() {
        // sum cos = sum sin = 0, and a large lambda pushes phi(0) below n
        let op = SmoothnessOperator::for_grid(4, 1, 10.0).unwrap();
        let z = embed_values(&[0.0, 0.25, 0.5, 0.75]).unwrap();
        let p = TrsProblem::new(&op, z).unwrap();
        let sol = solve_trs_equality(&p).unwrap();
        assert!(sol.orthogonal_to_nullspace);
        assert_eq!(sol.case, CaseTag::HardNullspace);
        assert_eq!(sol.mu, 0.0);
        assert!(!sol.unique);
        assert!((sol.g.norm_sq() - 4.0).abs() < 1e-10);
        let cert = certify(&sol, &p).unwrap();
        assert!(cert.passed(), "{cert:?}");
    }

    #[test]
    fn hard_case_completions_tie() {
        let op = SmoothnessOperator::for_grid(4, 1, 10.0).unwrap();
        let z = embed_values(&[0.0, 0.25, 0.5, 0.75]).unwrap();
        let p = TrsProblem::new(&op, z).unwrap();
        let sol = solve_trs_equality(&p).unwrap();
        let mut coords = op.coordinates(&sol.g).unwrap();
        coords[0] = -coords[0];
        let flipped = op.from_coordinates(&coords).unwrap();
        let a = p.objective(sol.g.as_slice()).unwrap();
        let b = p.objective(flipped.as_slice()).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn small_lambda_orthogonal_takes_easy_branch() {
        let op = SmoothnessOperator::for_grid(4, 1, 0.1).unwrap();
        let z = embed_values(&[0.0, 0.25, 0.5, 0.75]).unwrap();
        let p = TrsProblem::new(&op, z).unwrap();
        let sol = solve_trs_equality(&p).unwrap();
        assert!(sol.orthogonal_to_nullspace);
        assert_eq!(sol.case, CaseTag::Easy);
        assert!(sol.mu > 0.0);
        assert!(sol.mu <= 2.0 - 2.0 * op.h_eigenvalue(3) + 1e-12);
    }

    #[test]
    fn boundary_hard_case_is_detected() {
        // deflated phi(0) = 4 * 1 / 2^2 = 1 = r^2
        let sf = SecularFunction::new(vec![0.0, 2.0], vec![0.0, 1.0]).unwrap();
        let sol = solve_sphere(&sf, 1.0).unwrap();
        assert_eq!(sol.case, CaseTag::HardBoundary);
        assert!(sol.unique);
        assert_eq!(sol.mu, 0.0);
    }

    #[test]
    fn positive_definite_interior() {
        let sf = SecularFunction::new(vec![1.0, 3.0, 5.0], vec![0.1, 0.2, -0.1]).unwrap();
        let sol = solve_ball(&sf, 4.0).unwrap();
        assert_eq!(sol.case, CaseTag::Interior);
        assert_eq!(sol.mu, 0.0);
        assert!((sol.coords[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn indefinite_sphere() {
        let sf = SecularFunction::new(vec![-1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let sol = solve_sphere(&sf, 1.0).unwrap();
        assert!(sol.mu > 1.0);
        let norm: f64 = sol.coords.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-9);
        assert_eq!(solve_ball(&sf, 1.0).unwrap(), sol);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SecularFunction::new(vec![0.0], vec![]).is_err());
        let sf = SecularFunction::new(vec![0.0], vec![1.0]).unwrap();
        assert!(solve_sphere(&sf, 0.0).is_err());
        let op = SmoothnessOperator::for_grid(4, 1, 1.0).unwrap();
        let z = embed_values(&[0.0, 0.1, 0.2]).unwrap();
        assert!(TrsProblem::new(&op, z).is_err());
    }
}
