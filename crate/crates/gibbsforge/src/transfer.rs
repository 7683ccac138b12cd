//! Discretized Ruelle–Perron–Frobenius operator: collocation matrix on a
//! breakpoint-aligned grid, leading eigendata by power iteration, and the
//! conformality check ν(f(A)) = ∫_A λ e^{-φ} dν.

use std::sync::Arc;

use crate::dynamics::IntervalMap;
use crate::error::{Error, Result};
use crate::geometry::{overlap, Arc as CircleArc};
use crate::potentials::Potential;
use crate::rng::Rng;

/// Partition of [0, 1] into bins. Not necessarily uniform: `aligned` grids
/// close the breakpoint set under branch inverses so that branch images of
/// bins are unions of bins, which keeps the collocation matrix exact on the
/// piecewise-linear benchmarks.
#[derive(Debug, Clone)]
pub struct Grid {
    endpoints: Vec<f64>,
    midpoints: Vec<f64>,
    widths: Vec<f64>,
}

impl Grid {
    pub fn from_endpoints(mut endpoints: Vec<f64>) -> Result<Arc<Grid>> {
        endpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        endpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        if endpoints.len() < 2 {
            return Err(Error::InvalidParameter("grid needs at least one bin".into()));
        }
        if (endpoints[0]).abs() > 1e-12 || (endpoints[endpoints.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("grid must span [0, 1]".into()));
        }
        endpoints[0] = 0.0;
        *endpoints.last_mut().unwrap() = 1.0;
        let midpoints: Vec<f64> = endpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let widths: Vec<f64> = endpoints.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Arc::new(Grid { endpoints, midpoints, widths }))
    }

    pub fn uniform(n_bins: usize) -> Arc<Grid> {
        let endpoints: Vec<f64> = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
        Grid::from_endpoints(endpoints).expect("uniform grid is valid")
    }

    /// Breakpoint-aligned grid: start from the branch breakpoints and refine
    /// by branch preimages until at least `min_bins` bins exist. For a
    /// full-branch map with k branches this is the depth-d cylinder partition
    /// (k^d bins).
    pub fn aligned(map: &IntervalMap, min_bins: usize) -> Result<Arc<Grid>> {
        let mut pts = map.breakpoints();
        let mut depth = 0;
        while pts.len() - 1 < min_bins && depth < 60 {
            let mut next = pts.clone();
            for &p in &pts {
                if let Ok(pre) = map.preimages(p.min(1.0 - 1e-15)) {
                    for (x, _) in pre {
                        if (0.0..=1.0).contains(&x) {
                            next.push(x);
                        }
                    }
                }
            }
            next.sort_by(|a, b| a.partial_cmp(b).unwrap());
            next.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            if next.len() == pts.len() {
                break;
            }
            pts = next;
            depth += 1;
        }
        if !pts.iter().any(|p| (*p - 1.0).abs() < 1e-12) {
            pts.push(1.0);
        }
        Grid::from_endpoints(pts)
    }

    pub fn n_bins(&self) -> usize {
        self.midpoints.len()
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Index of the bin containing x (clamped into [0, 1)).
    pub fn bin_of(&self, x: f64) -> usize {
        let x = x.clamp(0.0, 1.0 - 1e-15);
        match self
            .endpoints
            .binary_search_by(|e| e.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.n_bins() - 1),
            Err(i) => i - 1,
        }
    }

    pub fn min_width(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Probability weights on the bins of a grid.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub grid: Arc<Grid>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(grid: Arc<Grid>, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.n_bins() {
            return Err(Error::InvalidParameter("weights/grid size mismatch".into()));
        }
        if weights.iter().any(|w| *w < -1e-14 || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("weights must have positive mass".into()));
        }
        for w in &mut weights {
            *w = (*w / total).max(0.0);
        }
        Ok(DiscreteMeasure { grid, weights })
    }

    pub fn lebesgue(grid: Arc<Grid>) -> Self {
        let weights = grid.widths().to_vec();
        DiscreteMeasure::new(grid, weights).expect("widths are a valid measure")
    }

    /// Mass of a plain subinterval of [0, 1], allocating proportionally
    /// inside bins (piecewise-constant density model).
    pub fn mass_of_segment(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        let mut mass = 0.0;
        let i0 = self.grid.bin_of(lo);
        let eps = self.grid.endpoints();
        for i in i0..self.grid.n_bins() {
            if eps[i] >= hi {
                break;
            }
            let cover = overlap((eps[i], eps[i + 1]), (lo, hi));
            if cover > 0.0 {
                mass += self.weights[i] * cover / self.grid.widths()[i];
            }
        }
        mass
    }

    /// Mass of a circle arc (wrapping allowed).
    pub fn mass_of_arc(&self, arc: &CircleArc) -> f64 {
        arc.pieces().iter().map(|&(lo, hi)| self.mass_of_segment(lo, hi)).sum()
    }

    /// Sum of |difference| of bin masses (L1 distance of densities in L1(dx)).
    pub fn l1_distance(&self, other: &DiscreteMeasure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// sup over bin endpoints of |CDF difference|.
    pub fn kolmogorov_distance(&self, other: &DiscreteMeasure) -> f64 {
        let mut acc_a = 0.0;
        let mut acc_b = 0.0;
        let mut sup: f64 = 0.0;
        for (a, b) in self.weights.iter().zip(&other.weights) {
            acc_a += a;
            acc_b += b;
            sup = sup.max((acc_a - acc_b).abs());
        }
        sup
    }

    /// Inverse-CDF sample with uniform placement inside the chosen bin.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let u = rng.next_f64();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                let eps = self.grid.endpoints();
                return rng.uniform(eps[i], eps[i + 1]);
            }
        }
        let eps = self.grid.endpoints();
        rng.uniform(eps[eps.len() - 2], eps[eps.len() - 1])
    }

    /// Push-forward through the map by mass transport: each bin piece inside
    /// a branch moves onto its image interval, distributed by overlap. Pieces
    /// are split four ways so curvature of nonlinear branches stays resolved;
    /// exact for piecewise-linear branches on aligned grids either way.
    pub fn pushforward(&self, map: &IntervalMap) -> DiscreteMeasure {
        let grid = &self.grid;
        let mut out = vec![0.0; grid.n_bins()];
        let eps = grid.endpoints();
        for i in 0..grid.n_bins() {
            if self.weights[i] == 0.0 {
                continue;
            }
            let (blo, bhi) = (eps[i], eps[i + 1]);
            for branch in map.branches() {
                let lo = blo.max(branch.domain.0);
                let hi = bhi.min(branch.domain.1);
                if hi - lo <= 1e-15 {
                    continue;
                }
                let splits = 4;
                let piece_mass =
                    self.weights[i] * (hi - lo) / grid.widths()[i] / splits as f64;
                for s in 0..splits {
                    let slo = lo + (hi - lo) * s as f64 / splits as f64;
                    let shi = lo + (hi - lo) * (s + 1) as f64 / splits as f64;
                    let (ylo, yhi) = {
                        let a = branch.forward_lift(slo);
                        let b = branch.forward_lift(shi);
                        if a <= b {
                            (a, b)
                        } else {
                            (b, a)
                        }
                    };
                    deposit(&mut out, grid, ylo, yhi, piece_mass, map.is_circle());
                }
            }
        }
        DiscreteMeasure::new(grid.clone(), out)
            .expect("pushforward preserves mass")
    }
}

/// Spread `mass` uniformly over the lift interval [ylo, yhi], reduced mod 1
/// for circle maps.
fn deposit(out: &mut [f64], grid: &Grid, ylo: f64, yhi: f64, mass: f64, circle: bool) {
    let len = yhi - ylo;
    if len <= 0.0 {
        return;
    }
    // reduce to [0,1) pieces
    let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(2);
    if circle {
        let base = ylo.floor();
        let (mut a, mut b) = (ylo - base, yhi - base);
        while b > 1.0 + 1e-15 {
            pieces.push((a.min(1.0), 1.0));
            b -= 1.0;
            a = 0.0;
        }
        if b > a {
            pieces.push((a, b));
        }
    } else {
        pieces.push((ylo.max(0.0), yhi.min(1.0)));
    }
    let eps = grid.endpoints();
    for (plo, phi) in pieces {
        if phi - plo <= 0.0 {
            continue;
        }
        let i0 = grid.bin_of(plo);
        for i in i0..grid.n_bins() {
            if eps[i] >= phi {
                break;
            }
            let cover = overlap((eps[i], eps[i + 1]), (plo, phi));
            if cover > 0.0 {
                out[i] += mass * cover / len;
            }
        }
    }
}

/// Sparse nonnegative collocation matrix: entry (i, j) sums e^{φ(y)} over
/// preimages y of midpoint x_i that land in bin j.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub grid: Arc<Grid>,
    rows: Vec<Vec<(u32, f64)>>,
    zero_rows: Vec<usize>,
}

impl TransferMatrix {
    /// Assemble from precomputed sparse rows (noise-smoothed operators).
    pub fn from_rows(grid: Arc<Grid>, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let zero_rows = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_empty())
            .map(|(i, _)| i)
            .collect();
        TransferMatrix { grid, rows, zero_rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    /// y = A g (right action on functions).
    pub fn apply_right(&self, g: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n(), 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in row {
                acc += v * g[j as usize];
            }
            out[i] = acc;
        }
    }

    /// y = νᵀ A (left action on measures).
    pub fn apply_left(&self, nu: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n(), 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let ni = nu[i];
            if ni == 0.0 {
                continue;
            }
            for &(j, v) in row {
                out[j as usize] += ni * v;
            }
        }
    }
}

/// Collocation at bin midpoints: exact for e^φ constant along each branch
/// inverse on each bin.
pub fn build_matrix(map: &IntervalMap, phi: &Potential, grid: &Arc<Grid>) -> Result<TransferMatrix> {
    let n = grid.n_bins();
    let mut rows = Vec::with_capacity(n);
    let mut zero_rows = Vec::new();
    for (i, &x) in grid.midpoints().iter().enumerate() {
        let mut row: Vec<(u32, f64)> = Vec::new();
        match map.preimages(x) {
            Ok(pre) => {
                for (y, _) in pre {
                    let j = grid.bin_of(y) as u32;
                    let v = phi.eval(y).exp();
                    match row.iter_mut().find(|(jj, _)| *jj == j) {
                        Some((_, acc)) => *acc += v,
                        None => row.push((j, v)),
                    }
                }
            }
            Err(_) => {
                zero_rows.push(i);
            }
        }
        if row.is_empty() && !zero_rows.contains(&i) {
            zero_rows.push(i);
        }
        rows.push(row);
    }
    Ok(TransferMatrix { grid: grid.clone(), rows, zero_rows })
}

/// Leading eigendata of the collocation matrix.
#[derive(Debug, Clone)]
pub struct EigenData {
    pub lambda: f64,
    /// Right eigenvector, normalized so that Σ h_j ν_j = 1.
    pub eigenfunction: Vec<f64>,
    /// Left eigenvector as a probability measure.
    pub eigenmeasure: DiscreteMeasure,
    pub residual_right: f64,
    pub residual_left: f64,
    pub iterations: usize,
}

/// Power iteration on A and Aᵀ from the all-ones start. λ is the L1 growth
/// ratio of the left iteration; both residuals must drop below `tol`.
pub fn power_eigendata(matrix: &TransferMatrix, tol: f64, max_iter: usize) -> Result<EigenData> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if !matrix.zero_rows().is_empty() {
        return Err(Error::InvalidParameter(format!(
            "matrix has {} all-zero rows (midpoints without preimages)",
            matrix.zero_rows().len()
        )));
    }
    let n = matrix.n();
    let mut h = vec![1.0; n];
    let mut nu = vec![1.0 / n as f64; n];
    let mut h_next = Vec::with_capacity(n);
    let mut nu_next = Vec::with_capacity(n);
    let mut res_r = f64::INFINITY;
    let mut res_l = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        matrix.apply_left(&nu, &mut nu_next);
        let growth: f64 = nu_next.iter().sum();
        let lambda = growth;

        matrix.apply_right(&h, &mut h_next);

        // residuals at the current λ estimate
        res_l = nu_next
            .iter()
            .zip(&nu)
            .map(|(a, b)| (a - lambda * b).abs())
            .sum::<f64>();
        let h_sup = h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        res_r = h_next
            .iter()
            .zip(&h)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0_f64, f64::max)
            / h_sup;

        // normalize for the next round
        for v in nu_next.iter_mut() {
            *v /= growth;
        }
        let h_scale = h_next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if h_scale <= 0.0 {
            return Err(Error::NoConvergence { iterations: it, residual: f64::INFINITY });
        }
        for v in h_next.iter_mut() {
            *v /= h_scale;
        }
        std::mem::swap(&mut nu, &mut nu_next);
        std::mem::swap(&mut h, &mut h_next);

        if res_l <= tol && res_r <= tol {
            let eigenmeasure = DiscreteMeasure::new(matrix.grid.clone(), nu)?;
            // normalize h so that Σ h ν = 1 (μ = h·ν is then a probability)
            let inner: f64 = h
                .iter()
                .zip(&eigenmeasure.weights)
                .map(|(hj, nj)| hj * nj)
                .sum();
            if inner <= 0.0 {
                return Err(Error::NoConvergence { iterations: it, residual: res_r });
            }
            for v in h.iter_mut() {
                *v /= inner;
            }
            return Ok(EigenData {
                lambda,
                eigenfunction: h,
                eigenmeasure,
                residual_right: res_r,
                residual_left: res_l,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence { iterations, residual: res_l.max(res_r) })
}

/// Topological pressure estimate log λ.
pub fn pressure(eigen: &EigenData) -> f64 {
    eigen.lambda.ln()
}

/// Jacobian of the eigenmeasure: J_ν f = λ e^{-φ}.
pub fn jacobian_at(eigen: &EigenData, phi: &Potential, x: f64) -> f64 {
    eigen.lambda * (-phi.eval(x)).exp()
}

/// max over test intervals A of |ν(f(A)) - ∫_A λ e^{-φ} dν|. Each interval
/// must sit inside one branch domain.
pub fn conformality_residual(
    map: &IntervalMap,
    eigen: &EigenData,
    phi: &Potential,
    test_intervals: &[(f64, f64)],
) -> Result<f64> {
    let nu = &eigen.eigenmeasure;
    let grid = &nu.grid;
    let mut worst: f64 = 0.0;
    for &(lo, hi) in test_intervals {
        if hi <= lo {
            return Err(Error::InvalidParameter("empty test interval".into()));
        }
        let b_lo = map.branch_index_of(lo).ok_or(Error::PointOutsideDomain { x: lo })?;
        let b_hi = map
            .branch_index_of((hi - 1e-12).max(lo))
            .ok_or(Error::PointOutsideDomain { x: hi })?;
        if b_lo != b_hi {
            return Err(Error::IntervalSpansBranches);
        }
        let branch = &map.branches()[b_lo];
        let (ylo, yhi) = {
            let a = branch.forward_lift(lo);
            let b = branch.forward_lift(hi);
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        // ν(f(A)) with the image reduced mod 1 if it crosses an integer
        let image_mass = if map.is_circle() {
            let base = ylo.floor();
            let arc = CircleArc::new(ylo - base, (yhi - ylo).min(1.0));
            nu.mass_of_arc(&arc)
        } else {
            nu.mass_of_segment(ylo, yhi)
        };
        // ∫_A λ e^{-φ} dν by per-bin quadrature of the piece of A in each bin
        let eps = grid.endpoints();
        let mut integral = 0.0;
        let i0 = grid.bin_of(lo);
        for i in i0..grid.n_bins() {
            if eps[i] >= hi {
                break;
            }
            let cover = overlap((eps[i], eps[i + 1]), (lo, hi));
            if cover > 0.0 {
                let xm = 0.5 * (eps[i].max(lo) + eps[i + 1].min(hi));
                integral +=
                    nu.weights[i] * cover / grid.widths()[i] * jacobian_at(eigen, phi, xm);
            }
        }
        worst = worst.max((image_mass - integral).abs());
    }
    Ok(worst)
}
