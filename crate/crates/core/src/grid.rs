//! Uniform sampling grid, the `|i - j| <= k` neighbourhood graph, its
//! Laplacian and the spectral data the trust-region solver runs on.
//!
//! The block matrix `H = lambda * diag(L, L)` is never materialised. Every
//! operation on a `2n` embedding applies `lambda * L` to the real half and to
//! the imaginary half separately.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{check_len, Error, Result};

/// Equispaced points `x_i = (i - 1) / (n - 1)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    points: Vec<f64>,
}

impl UniformGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!("grid needs n >= 2, got {n}")));
        }
        let step = 1.0 / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        points[n - 1] = 1.0;
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Path-neighbourhood graph on `n` vertices: `{i, j}` is an edge iff
/// `0 < |i - j| <= k`. Vertices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    k: usize,
}

impl NeighborGraph {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!("graph needs n >= 2, got {n}")));
        }
        if k < 1 || k > n - 1 {
            return Err(Error::InvalidDimension(format!("neighbourhood radius must satisfy 1 <= k <= n - 1 = {}, got {k}", n - 1)));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self, i: usize) -> usize {
        let lo = i.saturating_sub(self.k);
        let hi = (i + self.k).min(self.n - 1);
        hi - lo
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..=(i + self.k).min(self.n - 1)).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        // sum over offsets d = 1..=k of (n - d)
        (1..=self.k).map(|d| self.n - d).sum()
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        LaplacianMatrix::from_graph(self)
    }
}

pub fn build_graph(n: usize, k: usize) -> Result<NeighborGraph> {
    NeighborGraph::new(n, k)
}

/// Dense Laplacian `D - A` of a [`NeighborGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
    bandwidth: usize,
}

impl LaplacianMatrix {
    pub fn from_graph(g: &NeighborGraph) -> Self {
        let n = g.n();
        let mut matrix = DMatrix::zeros(n, n);
        for (i, j) in g.edges() {
            matrix[(i, j)] = -1.0;
            matrix[(j, i)] = -1.0;
        }
        for i in 0..n {
            matrix[(i, i)] = g.degree(i) as f64;
        }
        Self { matrix, bandwidth: g.k() }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// `L v`, exploiting the band structure.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        let k = self.bandwidth;
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(k);
                let hi = (i + k).min(n - 1);
                (lo..=hi).map(|j| self.matrix[(i, j)] * v[j]).sum()
            })
            .collect()
    }

    /// `v^T L v` computed as the edge sum `sum (v_i - v_j)^2`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let n = self.n();
        let k = self.bandwidth;
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..=(i + k).min(n - 1) {
                let d = v[i] - v[j];
                acc += d * d;
            }
        }
        acc
    }

    /// Eigendecomposition with the null pair pinned to `(0, 1/sqrt(n))`.
    ///
    /// The graph is connected, so the bottom eigenpair is known exactly; the
    /// remaining pairs come from the dense symmetric solver.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let mut spec = Spectrum::of_symmetric(&self.matrix)?;
        let n = self.n();
        spec.eigenvalues[0] = 0.0;
        let c = 1.0 / (n as f64).sqrt();
        for i in 0..n {
            spec.eigenvectors[(i, 0)] = c;
        }
        Ok(spec)
    }
}

pub fn laplacian(g: &NeighborGraph) -> LaplacianMatrix {
    g.laplacian()
}

/// `H = lambda * diag(L, L)`, stored as the pair `(lambda, L)`.
#[derive(Debug, Clone)]
pub struct BlockLaplacian {
    lambda: f64,
    laplacian: Arc<LaplacianMatrix>,
}

impl BlockLaplacian {
    pub fn new(lambda: f64, laplacian: impl Into<Arc<LaplacianMatrix>>) -> Result<Self> {
        let laplacian = laplacian.into();
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { lambda, laplacian })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn shared_laplacian(&self) -> Arc<LaplacianMatrix> {
        Arc::clone(&self.laplacian)
    }

    /// Half-dimension `n`; `H` acts on `R^{2n}`.
    pub fn n(&self) -> usize {
        self.laplacian.n()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        check_len(2 * n, v.len())?;
        let mut out = self.laplacian.apply(&v[..n]);
        out.extend(self.laplacian.apply(&v[n..]));
        out.iter_mut().for_each(|x| *x *= self.lambda);
        Ok(out)
    }

    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        let n = self.n();
        check_len(2 * n, v.len())?;
        Ok(self.lambda * (self.laplacian.quad_form(&v[..n]) + self.laplacian.quad_form(&v[n..])))
    }

    /// Eigenvalues of `H` in ascending order (each `lambda * beta_j` twice).
    pub fn eigenvalues(&self, spec: &Spectrum) -> Vec<f64> {
        spec.eigenvalues.iter().flat_map(|&b| [self.lambda * b, self.lambda * b]).collect()
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// Dense symmetric eigendecomposition, sorted ascending, each eigenvector
    /// signed so that its first entry above `1e-10` in magnitude is positive.
    pub fn of_symmetric(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::InvalidDimension(format!("expected a square matrix, got {}x{}", n, m.ncols())));
        }
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::ConvergenceFailure("symmetric QR iteration did not converge".into()))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            eigenvalues.push(eig.eigenvalues[src]);
            let v = eig.eigenvectors.column(src);
            let sign = v.iter().find(|x| x.abs() > 1e-10).map_or(1.0, |x| x.signum());
            for i in 0..n {
                eigenvectors[(i, col)] = sign * v[i];
            }
        }

        let spec = Self { eigenvalues, eigenvectors };
        let scale = m.norm().max(1.0);
        let worst = spec.max_residual(m);
        if worst > 1e-10 * scale {
            return Err(Error::ConvergenceFailure(format!("eigen residual {worst:e} exceeds {:e}", 1e-10 * scale)));
        }
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `max_j ||M q_j - beta_j q_j||_2`.
    pub fn max_residual(&self, m: &DMatrix<f64>) -> f64 {
        let mq = m * &self.eigenvectors;
        (0..self.len()).map(|j| (mq.column(j) - self.eigenvectors.column(j) * self.eigenvalues[j]).norm()).fold(0.0, f64::max)
    }

    /// `Q^T v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|j| self.eigenvectors.column(j).iter().zip(v).map(|(q, x)| q * x).sum()).collect()
    }

    /// `Q c`.
    pub fn synthesize(&self, coords: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (j, &c) in coords.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, q) in out.iter_mut().zip(self.eigenvectors.column(j).iter()) {
                *o += c * q;
            }
        }
        out
    }
}

pub fn spectrum(l: &LaplacianMatrix) -> Result<Spectrum> {
    l.spectrum()
}

/// Gershgorin and Fiedler-type checks on a Laplacian spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub smallest: f64,
    pub fiedler: f64,
    pub largest: f64,
    /// `4k`
    pub largest_bound: f64,
    /// `4k sin^2(pi / 2n)`
    pub fiedler_bound: f64,
    pub largest_margin: f64,
    pub fiedler_margin: f64,
    pub largest_ok: bool,
    pub fiedler_ok: bool,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.largest_ok && self.fiedler_ok
    }
}

pub fn fiedler_lower_bound(n: usize, k: usize) -> f64 {
    let s = (PI / (2.0 * n as f64)).sin();
    4.0 * k as f64 * s * s
}

pub fn spectral_bounds_check(spec: &Spectrum, k: usize, n: usize) -> BoundReport {
    const TOL: f64 = 1e-10;
    let smallest = spec.eigenvalues[0];
    let fiedler = spec.eigenvalues.get(1).copied().unwrap_or(0.0);
    let largest = *spec.eigenvalues.last().unwrap_or(&0.0);
    let largest_bound = 4.0 * k as f64;
    let fiedler_bound = fiedler_lower_bound(n, k);
    BoundReport {
        n,
        k,
        smallest,
        fiedler,
        largest,
        largest_bound,
        fiedler_bound,
        largest_margin: largest_bound - largest,
        fiedler_margin: fiedler - fiedler_bound,
        largest_ok: largest <= largest_bound + TOL,
        fiedler_ok: fiedler >= fiedler_bound - TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = UniformGrid::new(5).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(UniformGrid::new(1).is_err());
    }

    #[test]
    fn path_graph() {
        let g = build_graph(4, 1).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(g.degrees(), vec![1, 2, 2, 1]);
    }

    #[test]
    fn radius_two_graph() {
        let g = build_graph(5, 2).unwrap();
        let brute: Vec<_> = (0..5usize).flat_map(|i| (0..5usize).map(move |j| (i, j))).filter(|&(i, j)| i < j && j - i <= 2).collect();
        assert_eq!(g.edges().collect::<Vec<_>>(), brute);
        assert_eq!(brute.len(), 7);
        assert_eq!(g.edge_count(), 7);
        assert_eq!(g.degrees(), vec![2, 3, 4, 3, 2]);
    }

    #[test]
    fn complete_triangle() {
        let g = build_graph(3, 2).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        let l = g.laplacian();
        let want = [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(i, j), want[i][j]);
            }
        }
    }

    #[test]
    fn invalid_dimensions() {
        assert!(matches!(build_graph(1, 1), Err(Error::InvalidDimension(_))));
        assert!(matches!(build_graph(4, 0), Err(Error::InvalidDimension(_))));
        assert!(matches!(build_graph(4, 4), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn path_laplacian() {
        let l = build_graph(4, 1).unwrap().laplacian();
        let want = [[1.0, -1.0, 0.0, 0.0], [-1.0, 2.0, -1.0, 0.0], [0.0, -1.0, 2.0, -1.0], [0.0, 0.0, -1.0, 1.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(l.get(i, j), want[i][j]);
            }
        }
        assert!(l.apply(&[1.0; 4]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn triangle_spectrum() {
        let s = build_graph(3, 2).unwrap().laplacian().spectrum().unwrap();
        assert!(approx(s.eigenvalues[0], 0.0, 1e-12));
        assert!(approx(s.eigenvalues[1], 3.0, 1e-12));
        assert!(approx(s.eigenvalues[2], 3.0, 1e-12));
    }

    #[test]
    fn two_vertex_spectrum() {
        let s = build_graph(2, 1).unwrap().laplacian().spectrum().unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(approx(s.eigenvalues[0], 0.0, 1e-14));
        assert!(approx(s.eigenvalues[1], 2.0, 1e-14));
        assert!(approx(s.eigenvectors[(0, 0)], r, 1e-14));
        assert!(approx(s.eigenvectors[(1, 0)], r, 1e-14));
        assert!(approx(s.eigenvectors[(0, 1)], r, 1e-14));
        assert!(approx(s.eigenvectors[(1, 1)], -r, 1e-14));
    }

    #[test]
    fn path_spectrum_closed_form() {
        let n = 4;
        let s = build_graph(n, 1).unwrap().laplacian().spectrum().unwrap();
        for (m, &b) in s.eigenvalues.iter().enumerate() {
            let want = 2.0 - 2.0 * (PI * m as f64 / n as f64).cos();
            assert!(approx(b, want, 1e-12), "{m}: {b} vs {want}");
        }
        let want = [0.0, 2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (b, w) in s.eigenvalues.iter().zip(want) {
            assert!(approx(*b, w, 1e-12));
        }
    }

    #[test]
    fn bounds_on_small_graphs() {
        let s = build_graph(3, 2).unwrap().laplacian().spectrum().unwrap();
        let r = spectral_bounds_check(&s, 2, 3);
        assert!(approx(r.fiedler_bound, 2.0, 1e-12));
        assert!(r.passed());

        let s = build_graph(4, 1).unwrap().laplacian().spectrum().unwrap();
        let r = spectral_bounds_check(&s, 1, 4);
        assert!(approx(r.largest, 2.0 + 2f64.sqrt(), 1e-12));
        assert!(r.largest_ok);
        assert_eq!(r.smallest, 0.0);
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let l = build_graph(30, 3).unwrap().laplacian();
        let a = Spectrum::of_symmetric(l.matrix()).unwrap();
        let b = Spectrum::of_symmetric(l.matrix()).unwrap();
        assert_eq!(a.eigenvectors, b.eigenvectors);
        for j in 0..a.len() {
            let first = a.eigenvectors.column(j).iter().copied().find(|x| x.abs() > 1e-10).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn block_apply_matches_halves() {
        let l = build_graph(6, 2).unwrap().laplacian();
        let h = BlockLaplacian::new(0.5, l.clone()).unwrap();
        let v: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let hv = h.apply(&v).unwrap();
        let re = l.apply(&v[..6]);
        let im = l.apply(&v[6..]);
        for i in 0..6 {
            assert!(approx(hv[i], 0.5 * re[i], 1e-15));
            assert!(approx(hv[6 + i], 0.5 * im[i], 1e-15));
        }
        let q: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        assert!(approx(q, h.quad_form(&v).unwrap(), 1e-12));
        assert!(h.apply(&v[..5]).is_err());
        assert!(BlockLaplacian::new(-1.0, l).is_err());
    }
}
