//! Recovery of real-valued samples from residues, up to a global shift.

use serde::{Deserialize, Serialize};

use crate::angular::Mod1Series;
use crate::error::{Error, Result};
use crate::grid::NeighborGraph;

pub const DEFAULT_ZETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnwrapMethod {
    /// Sequential quotient tracking along the path.
    Qt,
    /// Minimum-norm least squares over all graph edges.
    Ols,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnwrapResult {
    pub samples: Vec<f64>,
    /// Estimated integer quotients (QT only).
    pub quotients: Option<Vec<i64>>,
    pub method: UnwrapMethod,
    /// `||T f - b||_2` (OLS only).
    pub residual: Option<f64>,
}

/// `-1` if `t >= zeta`, `+1` if `t <= -zeta`, `0` otherwise.
pub fn sign_threshold(t: f64, zeta: f64) -> i64 {
    if t >= zeta {
        -1
    } else if t <= -zeta {
        1
    } else {
        0
    }
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("zeta must lie in (0, 1), got {zeta}")))
    }
}

pub fn quotient_tracker(r: &Mod1Series, zeta: f64) -> Result<UnwrapResult> {
    check_zeta(zeta)?;
    let v = r.values();
    if v.len() < 2 {
        return Err(Error::InvalidDimension(format!("need at least 2 samples, got {}", v.len())));
    }
    let mut quotients = Vec::with_capacity(v.len());
    let mut q = 0i64;
    quotients.push(q);
    for w in v.windows(2) {
        q += sign_threshold(w[1] - w[0], zeta);
        quotients.push(q);
    }
    let samples = quotients.iter().zip(v).map(|(&q, &r)| q as f64 + r).collect();
    Ok(UnwrapResult { samples, quotients: Some(quotients), method: UnwrapMethod::Qt, residual: None })
}

/// Rows `f_i - f_j = b_ij` for every edge `i < j`, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSystem {
    n: usize,
    pub edges: Vec<(usize, usize)>,
    pub rhs: Vec<f64>,
    pub zeta: f64,
}

impl DifferenceSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `T f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|&(i, j)| f[i] - f[j]).collect()
    }

    /// `T^T b`.
    pub fn apply_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&(i, j), &v) in self.edges.iter().zip(b) {
            out[i] += v;
            out[j] -= v;
        }
        out
    }

    pub fn residual(&self, f: &[f64]) -> f64 {
        self.apply(f).iter().zip(&self.rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

pub fn build_difference_system(y: &Mod1Series, g: &NeighborGraph, zeta: f64) -> Result<DifferenceSystem> {
    check_zeta(zeta)?;
    crate::error::check_len(g.n(), y.len())?;
    let v = y.values();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let rhs = edges
        .iter()
        .map(|&(i, j)| {
            let d = v[i] - v[j];
            sign_threshold(d, zeta) as f64 + d
        })
        .collect();
    Ok(DifferenceSystem { n: g.n(), edges, rhs, zeta })
}

/// Cholesky factor of the grounded Laplacian (row and column 0 removed),
/// stored as a lower band of width `k`.
#[derive(Debug, Clone)]
pub struct OlsSolver {
    graph: NeighborGraph,
    /// `band[i][d]` holds `L'_{i, i - k + d}` after factorisation.
    band: Vec<Vec<f64>>,
}

impl OlsSolver {
    pub fn new(graph: &NeighborGraph) -> Result<Self> {
        let n = graph.n();
        let k = graph.k();
        let m = n - 1;
        // grounded Laplacian entries: vertex i of the reduced system is vertex i + 1
        let entry = |i: usize, j: usize| -> f64 {
            if i == j {
                graph.degree(i + 1) as f64
            } else if i.abs_diff(j) <= k {
                -1.0
            } else {
                0.0
            }
        };
        let mut band = vec![vec![0.0; k + 1]; m];
        for i in 0..m {
            let lo = i.saturating_sub(k);
            for j in lo..=i {
                let mut s = entry(i, j);
                for p in i.saturating_sub(k).max(j.saturating_sub(k))..j {
                    s -= band[i][p + k - i] * band[j][p + k - j];
                }
                if j == i {
                    if !(s > 1e-12) {
                        return Err(Error::SolverFailure(format!("grounded Laplacian not positive definite at row {i}")));
                    }
                    band[i][k] = s.sqrt();
                } else {
                    band[i][j + k - i] = s / band[j][k];
                }
            }
        }
        Ok(Self { graph: graph.clone(), band })
    }

    pub fn graph(&self) -> &NeighborGraph {
        &self.graph
    }

    /// Mean-zero solution of `L f = rhs` for `rhs` orthogonal to the ones vector.
    pub fn solve_normal(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.graph.k();
        let m = self.band.len();
        let mut y = rhs[1..].to_vec();
        for i in 0..m {
            let mut s = y[i];
            for p in i.saturating_sub(k)..i {
                s -= self.band[i][p + k - i] * y[p];
            }
            y[i] = s / self.band[i][k];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for p in (i + 1)..(i + k + 1).min(m) {
                s -= self.band[p][i + k - p] * y[p];
            }
            y[i] = s / self.band[i][k];
        }
        let mut f = Vec::with_capacity(m + 1);
        f.push(0.0);
        f.extend(y);
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        f.iter_mut().for_each(|x| *x -= mean);
        f
    }

    pub fn unwrap(&self, y: &Mod1Series, zeta: f64) -> Result<UnwrapResult> {
        let sys = build_difference_system(y, &self.graph, zeta)?;
        let f = self.solve_normal(&sys.apply_transpose(&sys.rhs));
        let residual = sys.residual(&f);
        Ok(UnwrapResult { samples: f, quotients: None, method: UnwrapMethod::Ols, residual: Some(residual) })
    }
}

/// Minimum-norm least-squares solution of the difference system.
pub fn ols_unwrap(y: &Mod1Series, g: &NeighborGraph, zeta: f64) -> Result<UnwrapResult> {
    OlsSolver::new(g)?.unwrap(y, zeta)
}
