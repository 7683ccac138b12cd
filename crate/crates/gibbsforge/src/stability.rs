//! Statistical-stability sweeps over map/potential families and stochastic
//! stability under additive circle noise (annealed transition chain).

use std::sync::Arc;

use crate::dynamics::{check_hypotheses, IntervalMap};
use crate::equilibrium::equilibrium_from_eigendata;
use crate::error::{Error, Result};
use crate::geometry::{overlap, Arc as CircleArc};
use crate::potentials::Potential;
use crate::transfer::{build_matrix, power_eigendata, DiscreteMeasure, Grid};

pub type MapFamilyFn = Arc<dyn Fn(f64) -> Result<IntervalMap> + Send + Sync>;
pub type PotentialFamilyFn = Arc<dyn Fn(f64, &IntervalMap) -> Result<Potential> + Send + Sync>;

/// One-parameter family (f_t, φ_t) with a designated reference member.
pub struct PerturbationFamily {
    pub parameter_values: Vec<f64>,
    map_at: MapFamilyFn,
    potential_at: PotentialFamilyFn,
    pub base_parameter: f64,
}

impl PerturbationFamily {
    pub fn new(
        parameter_values: Vec<f64>,
        base_parameter: f64,
        map_at: MapFamilyFn,
        potential_at: PotentialFamilyFn,
    ) -> Self {
        PerturbationFamily { parameter_values, map_at, potential_at, base_parameter }
    }

    pub fn map_at(&self, t: f64) -> Result<IntervalMap> {
        (self.map_at)(t)
    }

    pub fn potential_at(&self, t: f64, map: &IntervalMap) -> Result<Potential> {
        (self.potential_at)(t, map)
    }

    pub fn base(&self) -> Result<(IntervalMap, Potential)> {
        let map = self.map_at(self.base_parameter)?;
        let phi = self.potential_at(self.base_parameter, &map)?;
        Ok((map, phi))
    }
}

/// Distances and spectral data along a sweep, aligned with `parameter`.
#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub parameter: Vec<f64>,
    pub distance_l1: Vec<f64>,
    pub distance_kolmogorov: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub pressures: Vec<f64>,
}

fn equilibrium_on_grid(
    map: &IntervalMap,
    phi: &Potential,
    grid: &Arc<Grid>,
) -> Result<(DiscreteMeasure, f64)> {
    let matrix = build_matrix(map, phi, grid)?;
    let eigen = power_eigendata(&matrix, 1e-10, 200_000)?;
    let eq = equilibrium_from_eigendata(&eigen)?;
    Ok((eq.measure, eigen.lambda))
}

/// Equilibrium states along the family on one fixed grid, with L1 and
/// Kolmogorov distances to the base member's equilibrium.
pub fn statistical_sweep(
    family: &PerturbationFamily,
    grid: &Arc<Grid>,
    sigma: f64,
    gamma: f64,
) -> Result<SweepResult> {
    let (base_map, base_phi) = family.base()?;
    let gate = check_hypotheses(&base_map, &base_phi, sigma, gamma)?;
    if !gate.all_pass() {
        return Err(Error::HypothesisViolated {
            parameter: family.base_parameter,
            condition: gate.failing().join(","),
        });
    }
    let (mu_base, _) = equilibrium_on_grid(&base_map, &base_phi, grid)?;

    let mut result = SweepResult::default();
    for &t in &family.parameter_values {
        let map = family.map_at(t)?;
        let phi = family.potential_at(t, &map)?;
        let gate = check_hypotheses(&map, &phi, sigma, gamma)?;
        if !gate.all_pass() {
            return Err(Error::HypothesisViolated {
                parameter: t,
                condition: gate.failing().join(","),
            });
        }
        let (mu_t, lambda_t) = equilibrium_on_grid(&map, &phi, grid)?;
        result.parameter.push(t);
        result.distance_l1.push(mu_t.l1_distance(&mu_base));
        result.distance_kolmogorov.push(mu_t.kolmogorov_distance(&mu_base));
        result.lambdas.push(lambda_t);
        result.pressures.push(lambda_t.ln());
    }
    Ok(result)
}

/// Row-stochastic circular scattering over [-ε, ε] arcs.
///
/// `new` is the uniform-density convolution (scatter by Lebesgue length).
/// `adapted` scatters with bounded density against a reference measure —
/// the non-degeneracy the theory asks of θ_ε — realized as a Metropolis
/// step for the reference with the bin-integrated uniform proposal. The
/// proposal's double-integral overlap G_{ij} is symmetric, so detailed
/// balance holds exactly and the reference is an exact fixed row vector.
/// With a Lebesgue reference every move is accepted and the two variants
/// agree.
#[derive(Debug, Clone)]
pub struct NoiseKernel {
    pub epsilon: f64,
    grid: Arc<Grid>,
    rows: Vec<Vec<(u32, f64)>>,
}

/// ∫_{y in [a,b]} |[y-ε, y+ε] ∩ [c,d]| dy: the integrand is piecewise linear
/// in y, so trapezoid sums over its breakpoints are exact.
fn band_overlap_integral(a: f64, b: f64, c: f64, d: f64, eps: f64) -> f64 {
    let ol = |y: f64| ((y + eps).min(d) - (y - eps).max(c)).max(0.0);
    let mut cuts = vec![a, b];
    for p in [c - eps, c + eps, d - eps, d + eps] {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += 0.5 * (ol(w[0]) + ol(w[1])) * (w[1] - w[0]);
    }
    total
}

impl NoiseKernel {
    pub fn new(grid: &Arc<Grid>, epsilon: f64) -> Result<Self> {
        let mean_width = 1.0 / grid.n_bins() as f64;
        if epsilon < mean_width {
            return Err(Error::GridTooCoarse { epsilon, bin_width: mean_width });
        }
        if epsilon > 0.5 {
            return Err(Error::InvalidParameter("epsilon must not exceed 0.5".into()));
        }
        let eps_pts = grid.endpoints();
        let mut rows = Vec::with_capacity(grid.n_bins());
        for &mid in grid.midpoints() {
            let arc = CircleArc::ball(mid, epsilon);
            let mut row: Vec<(u32, f64)> = Vec::new();
            for (plo, phi) in arc.pieces() {
                let start = grid.bin_of(plo);
                for j in start..grid.n_bins() {
                    if eps_pts[j] >= phi {
                        break;
                    }
                    let cover = overlap((eps_pts[j], eps_pts[j + 1]), (plo, phi));
                    if cover > 0.0 {
                        match row.iter_mut().find(|(jj, _)| *jj == j as u32) {
                            Some((_, v)) => *v += cover,
                            None => row.push((j as u32, cover)),
                        }
                    }
                }
            }
            let total: f64 = row.iter().map(|(_, v)| v).sum();
            for (_, v) in row.iter_mut() {
                *v /= total;
            }
            rows.push(row);
        }
        Ok(NoiseKernel { epsilon, grid: grid.clone(), rows })
    }

    pub fn adapted(reference: &DiscreteMeasure, epsilon: f64) -> Result<Self> {
        let grid = &reference.grid;
        let mean_width = 1.0 / grid.n_bins() as f64;
        if epsilon < mean_width {
            return Err(Error::GridTooCoarse { epsilon, bin_width: mean_width });
        }
        if epsilon > 0.5 {
            return Err(Error::InvalidParameter("epsilon must not exceed 0.5".into()));
        }
        let n = grid.n_bins();
        let eps_pts = grid.endpoints();
        let widths = grid.widths();
        let density: Vec<f64> = reference
            .weights
            .iter()
            .zip(widths)
            .map(|(w, width)| w / width)
            .collect();
        let mut rows = Vec::with_capacity(n);
        let mut proposal = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..n {
            let (a, b) = (eps_pts[i], eps_pts[i + 1]);
            touched.clear();
            // proposal G_{ij}/(2ε w_i); bins are scanned once per unwrapped
            // copy of the reachable band [a-ε, b+ε]
            for shift in [-1.0f64, 0.0, 1.0] {
                let lo = (a - epsilon - shift).max(0.0);
                let hi = (b + epsilon - shift).min(1.0);
                if hi <= lo {
                    continue;
                }
                let mut j = grid.bin_of(lo);
                while j < n && eps_pts[j] < hi {
                    let (c, d) = (eps_pts[j] + shift, eps_pts[j + 1] + shift);
                    let g = band_overlap_integral(a, b, c, d, epsilon);
                    if g > 0.0 {
                        if proposal[j] == 0.0 {
                            touched.push(j);
                        }
                        proposal[j] += g / (2.0 * epsilon * widths[i]);
                    }
                    j += 1;
                }
            }
            touched.sort_unstable();
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(touched.len() + 1);
            let mut stay = 1.0;
            for &j in &touched {
                let prop = proposal[j];
                proposal[j] = 0.0;
                if j == i {
                    continue;
                }
                let accept = if density[i] <= 0.0 {
                    1.0
                } else {
                    (density[j] / density[i]).min(1.0)
                };
                let p = prop * accept;
                if p > 0.0 {
                    row.push((j as u32, p));
                    stay -= p;
                }
            }
            row.push((i as u32, stay.max(0.0)));
            row.sort_unstable_by_key(|(j, _)| *j);
            rows.push(row);
        }
        Ok(NoiseKernel { epsilon, grid: grid.clone(), rows })
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
}

/// Row-stochastic annealed chain x -> f(x) + ω on the grid.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub grid: Arc<Grid>,
    rows: Vec<Vec<(u32, f64)>>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn apply_left(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n(), 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j as usize] += vi * p;
            }
        }
    }
}

/// Ulam mass-transport rows of the deterministic map.
fn pushforward_rows(map: &IntervalMap, grid: &Arc<Grid>) -> Result<Vec<Vec<(u32, f64)>>> {
    let eps = grid.endpoints();
    let mut rows = Vec::with_capacity(grid.n_bins());
    for i in 0..grid.n_bins() {
        let (blo, bhi) = (eps[i], eps[i + 1]);
        let width = grid.widths()[i];
        let mut row: Vec<(u32, f64)> = Vec::new();
        let mut covered = 0.0;
        for branch in map.branches() {
            let lo = blo.max(branch.domain.0);
            let hi = bhi.min(branch.domain.1);
            if hi - lo <= 1e-15 {
                continue;
            }
            covered += hi - lo;
            let fraction = (hi - lo) / width;
            let (ylo, yhi) = {
                let a = branch.forward_lift(lo);
                let b = branch.forward_lift(hi);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            };
            let len = yhi - ylo;
            // reduce the lift image mod 1 and deposit by overlap
            let base = ylo.floor();
            let (mut a, mut b) = (ylo - base, yhi - base);
            let mut pieces: Vec<(f64, f64)> = Vec::new();
            while b > 1.0 + 1e-15 {
                pieces.push((a.min(1.0), 1.0));
                b -= 1.0;
                a = 0.0;
            }
            if b > a {
                pieces.push((a, b));
            }
            for (plo, phi_hi) in pieces {
                let start = grid.bin_of(plo);
                for j in start..grid.n_bins() {
                    if eps[j] >= phi_hi {
                        break;
                    }
                    let cover = overlap((eps[j], eps[j + 1]), (plo, phi_hi));
                    if cover > 0.0 {
                        let p = fraction * cover / len;
                        match row.iter_mut().find(|(jj, _)| *jj == j as u32) {
                            Some((_, v)) => *v += p,
                            None => row.push((j as u32, p)),
                        }
                    }
                }
            }
        }
        if (covered - width).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "map domain must cover the circle for the noisy chain".into(),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Compose the map push-forward with the noise kernel: T = Pf · Nε.
pub fn noisy_transition(
    map: &IntervalMap,
    grid: &Arc<Grid>,
    kernel: &NoiseKernel,
) -> Result<TransitionMatrix> {
    if kernel.n() != grid.n_bins() || !Arc::ptr_eq(kernel.grid(), grid) {
        return Err(Error::InvalidParameter("kernel grid mismatch".into()));
    }
    let pf = pushforward_rows(map, grid)?;
    let n = grid.n_bins();
    let mut rows = Vec::with_capacity(n);
    let mut scratch = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    for row_pf in &pf {
        touched.clear();
        for &(k, p) in row_pf {
            for &(j, q) in kernel.row(k as usize) {
                if scratch[j as usize] == 0.0 {
                    touched.push(j);
                }
                scratch[j as usize] += p * q;
            }
        }
        touched.sort_unstable();
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(touched.len());
        for &j in &touched {
            row.push((j, scratch[j as usize]));
            scratch[j as usize] = 0.0;
        }
        rows.push(row);
    }
    Ok(TransitionMatrix { grid: grid.clone(), rows })
}

/// Collocation of the annealed transfer operator of the random system
/// x -> f(x) + ω: averaging L_φ g over the noise is the circular convolution
/// of L_φ g, so the matrix is Nε·A. Its leading eigendata give the random
/// conformal measure ν_ε and random equilibrium μ_ε = h_ε ν_ε.
pub fn noisy_weighted_operator(
    matrix: &crate::transfer::TransferMatrix,
    kernel: &NoiseKernel,
) -> Result<crate::transfer::TransferMatrix> {
    if kernel.n() != matrix.n() {
        return Err(Error::InvalidParameter("kernel/operator size mismatch".into()));
    }
    let n = matrix.n();
    let mut rows = Vec::with_capacity(n);
    let mut scratch = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    for i in 0..n {
        touched.clear();
        for &(k, q) in kernel.row(i) {
            for &(j, v) in matrix.row(k as usize) {
                if scratch[j as usize] == 0.0 {
                    touched.push(j);
                }
                scratch[j as usize] += q * v;
            }
        }
        touched.sort_unstable();
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(touched.len());
        for &j in &touched {
            row.push((j, scratch[j as usize]));
            scratch[j as usize] = 0.0;
        }
        rows.push(row);
    }
    Ok(crate::transfer::TransferMatrix::from_rows(kernel.grid().clone(), rows))
}

/// Random equilibrium state at one noise level: leading eigendata of Nε·A
/// with the scattering kernel adapted to the unperturbed eigenmeasure.
pub fn noisy_equilibrium(
    map: &IntervalMap,
    phi: &Potential,
    grid: &Arc<Grid>,
    epsilon: f64,
) -> Result<(DiscreteMeasure, f64)> {
    let matrix = build_matrix(map, phi, grid)?;
    let eigen = power_eigendata(&matrix, 1e-10, 200_000)?;
    let kernel = NoiseKernel::adapted(&eigen.eigenmeasure, epsilon)?;
    let smoothed = noisy_weighted_operator(&matrix, &kernel)?;
    let eigen_eps = power_eigendata(&smoothed, 1e-10, 200_000)?;
    let eq = equilibrium_from_eigendata(&eigen_eps)?;
    Ok((eq.measure, eigen_eps.lambda))
}

/// Leading left fixed vector of a row-stochastic matrix by power iteration.
pub fn stationary_measure(transition: &TransitionMatrix, tol: f64) -> Result<DiscreteMeasure> {
    let n = transition.n();
    let mut v = vec![1.0 / n as f64; n];
    let mut next = Vec::with_capacity(n);
    let max_iter = 200_000;
    for it in 1..=max_iter {
        transition.apply_left(&v, &mut next);
        let total: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= total;
        }
        let residual: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut v, &mut next);
        if residual <= tol {
            return DiscreteMeasure::new(transition.grid.clone(), v);
        }
        if it == max_iter {
            return Err(Error::NoConvergence { iterations: it, residual });
        }
    }
    unreachable!()
}

/// Random equilibrium states for each ε (descending), compared to the
/// unperturbed μ = h·ν through ν-densities in L1(ν).
///
/// The perturbation acts on the weighted transfer operator: additive noise
/// is non-degenerate with respect to the reference measure of L_φ exactly
/// when the chain is run through L_φ itself, so the ε-chain here is the
/// annealed operator Nε·A rather than the plain mass push-forward.
pub fn stochastic_sweep(
    map: &IntervalMap,
    phi: &Potential,
    grid: &Arc<Grid>,
    epsilons: &[f64],
    sigma: f64,
    gamma: f64,
) -> Result<SweepResult> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter("epsilon list is empty".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("epsilons must be strictly descending".into()));
    }
    let gate = check_hypotheses(map, phi, sigma, gamma)?;
    if !gate.all_pass() {
        return Err(Error::HypothesisViolated {
            parameter: 0.0,
            condition: gate.failing().join(","),
        });
    }
    let matrix = build_matrix(map, phi, grid)?;
    let eigen = power_eigendata(&matrix, 1e-10, 200_000)?;
    let eq = equilibrium_from_eigendata(&eigen)?;

    let mut result = SweepResult::default();
    for &eps in epsilons {
        let kernel = NoiseKernel::adapted(&eigen.eigenmeasure, eps)?;
        let smoothed = noisy_weighted_operator(&matrix, &kernel)?;
        let eigen_eps = power_eigendata(&smoothed, 1e-10, 200_000)?;
        let mu_eps = equilibrium_from_eigendata(&eigen_eps)?.measure;
        result.parameter.push(eps);
        result.distance_l1.push(mu_eps.l1_distance(&eq.measure));
        result.distance_kolmogorov.push(mu_eps.kolmogorov_distance(&eq.measure));
        result.lambdas.push(eigen_eps.lambda);
        result.pressures.push(eigen_eps.lambda.ln());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{auto_sigma, builtin_map, suggested_gamma};
    use crate::potentials::builtin_potential;

    fn assert_near(a: f64, b: f64, eps: f64) {
        assert!((a - b).abs() <= eps, "expected {a} ≈ {b} (diff {:.3e})", (a - b).abs());
    }

    #[test]
    fn family_reproduces_base_member() {
        let family = PerturbationFamily::new(
            vec![0.0, 0.1],
            0.0,
            Arc::new(|t| builtin_map("pitchfork_doubling", &[1.0 - t, 0.05])),
            Arc::new(|_, map| builtin_potential("zero", &[], map)),
        );
        let (base_map, _) = family.base().unwrap();
        let at_zero = family.map_at(0.0).unwrap();
        for i in 0..500 {
            let x = i as f64 / 500.0;
            let a = base_map.evaluate(x).unwrap();
            let b = at_zero.evaluate(x).unwrap();
            assert!((a - b).abs() <= 1e-12, "family base mismatch at x={x}");
        }
    }

    fn zero_family(values: Vec<f64>, base: f64) -> PerturbationFamily {
        PerturbationFamily::new(
            values,
            base,
            Arc::new(|_| builtin_map("doubling", &[])),
            Arc::new(|_, map| builtin_potential("zero", &[], map)),
        )
    }

    #[test]
    fn constant_family_all_distances_zero() {
        let family = zero_family(vec![0.0, 0.5, 1.0], 0.0);
        let grid = Grid::uniform(256);
        let sweep = statistical_sweep(&family, &grid, 2.0, 0.9).unwrap();
        for (d1, dk) in sweep.distance_l1.iter().zip(&sweep.distance_kolmogorov) {
            assert_eq!(*d1, 0.0);
            assert_eq!(*dk, 0.0);
        }
    }

    #[test]
    fn doubling_linear_pressure_family() {
        // phi_t = -t log 2: mu_t = Lebesgue for all t, pressure (1-t) log 2
        let family = PerturbationFamily::new(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            0.0,
            Arc::new(|_| builtin_map("doubling", &[])),
            Arc::new(|t, map| builtin_potential("minus_t_log_deriv", &[t], map)),
        );
        let grid = Grid::uniform(512);
        let sweep = statistical_sweep(&family, &grid, 2.0, 0.9).unwrap();
        for (i, &t) in sweep.parameter.iter().enumerate() {
            assert!(sweep.distance_l1[i] <= 1e-9, "t={t}: {}", sweep.distance_l1[i]);
            assert_near(sweep.pressures[i], (1.0 - t) * 2f64.ln(), 1e-9);
        }
    }

    #[test]
    fn hypothesis_gate_fires() {
        let family = PerturbationFamily::new(
            vec![0.1],
            0.1,
            Arc::new(|_| builtin_map("manneville_pomeau_circle", &[0.25])),
            Arc::new(|_, map| builtin_potential("minus_log_deriv_plus_beta", &[0.1], map)),
        );
        let grid = Grid::uniform(256);
        let err = statistical_sweep(&family, &grid, 1.05, 0.9);
        match err {
            Err(Error::HypothesisViolated { condition, .. }) => {
                assert!(condition.contains('P'), "condition: {condition}");
            }
            other => panic!("expected HypothesisViolated, got {other:?}"),
        }
    }

    #[test]
    fn noise_kernel_rows_stochastic() {
        let grid = Grid::uniform(128);
        let kernel = NoiseKernel::new(&grid, 0.03).unwrap();
        for i in 0..kernel.n() {
            let sum: f64 = kernel.row(i).iter().map(|(_, v)| v).sum();
            assert_near(sum, 1.0, 1e-12);
            for &(_, v) in kernel.row(i) {
                assert!(v >= 0.0);
            }
        }
        // bandwidth about 2 eps N bins
        let width = kernel.row(64).len() as f64;
        assert!((width - 2.0 * 0.03 * 128.0).abs() <= 2.0, "bandwidth {width}");
    }

    #[test]
    fn noise_kernel_rejects_subresolution_epsilon() {
        let grid = Grid::uniform(128);
        assert!(matches!(
            NoiseKernel::new(&grid, 0.5 / 128.0),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn wide_noise_is_nearly_uniform() {
        let grid = Grid::uniform(64);
        let kernel = NoiseKernel::new(&grid, 0.5).unwrap();
        for &(_, v) in kernel.row(10) {
            assert_near(v, 1.0 / 64.0, 1e-12);
        }
    }

    #[test]
    fn transition_approaches_pushforward_as_epsilon_shrinks() {
        let map = builtin_map("doubling", &[]).unwrap();
        let grid = Grid::uniform(64);
        let pf = pushforward_rows(&map, &grid).unwrap();
        let mut prev_gap = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let kernel = NoiseKernel::new(&grid, eps).unwrap();
            let t = noisy_transition(&map, &grid, &kernel).unwrap();
            let mut gap: f64 = 0.0;
            for (i, pf_row) in pf.iter().enumerate() {
                let mut dense_t = vec![0.0; 64];
                for &(j, v) in t.row(i) {
                    dense_t[j as usize] += v;
                }
                let mut dense_pf = vec![0.0; 64];
                for &(j, v) in pf_row {
                    dense_pf[j as usize] += v;
                }
                let row_gap: f64 =
                    dense_t.iter().zip(&dense_pf).map(|(a, b)| (a - b).abs()).sum();
                gap = gap.max(row_gap);
            }
            assert!(gap < prev_gap, "gap not shrinking: {gap} vs {prev_gap}");
            prev_gap = gap;
        }
    }

    #[test]
    fn doubling_stationary_is_lebesgue() {
        let map = builtin_map("doubling", &[]).unwrap();
        let grid = Grid::uniform(256);
        for eps in [0.05, 0.01] {
            let kernel = NoiseKernel::new(&grid, eps).unwrap();
            let t = noisy_transition(&map, &grid, &kernel).unwrap();
            let mu = stationary_measure(&t, 1e-12).unwrap();
            let leb = DiscreteMeasure::lebesgue(grid.clone());
            assert!(mu.l1_distance(&leb) <= 1e-10, "eps={eps}");
        }
    }

    #[test]
    fn stationarity_residual_small() {
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        let grid = Grid::uniform(512);
        let kernel = NoiseKernel::new(&grid, 0.01).unwrap();
        let t = noisy_transition(&map, &grid, &kernel).unwrap();
        let mu = stationary_measure(&t, 1e-10).unwrap();
        let mut out = Vec::new();
        t.apply_left(&mu.weights, &mut out);
        let residual: f64 = out.iter().zip(&mu.weights).map(|(a, b)| (a - b).abs()).sum();
        assert!(residual <= 1e-8, "residual {residual}");
    }

    #[test]
    fn stochastic_sweep_doubling_exact() {
        let map = builtin_map("doubling", &[]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let grid = Grid::uniform(512);
        let sweep =
            stochastic_sweep(&map, &phi, &grid, &[0.05, 0.02, 0.01, 0.005], 2.0, 0.9).unwrap();
        for (i, d) in sweep.distance_l1.iter().enumerate() {
            assert!(*d <= 1e-8, "eps={}: distance {d}", sweep.parameter[i]);
        }
    }

    #[test]
    fn stochastic_sweep_doubling_constant_potential() {
        // phi = -log 2: nu = mu = Lebesgue again, distances at the floor
        let map = builtin_map("doubling", &[]).unwrap();
        let phi = builtin_potential("minus_t_log_deriv", &[1.0], &map).unwrap();
        let grid = Grid::uniform(256);
        let sweep = stochastic_sweep(&map, &phi, &grid, &[0.05, 0.01], 2.0, 0.9).unwrap();
        for d in &sweep.distance_l1 {
            assert!(*d <= 1e-8, "distance {d}");
        }
        for l in &sweep.lambdas {
            assert!((l - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn noisy_equilibrium_density_bounded_wrt_nu() {
        // the random equilibrium keeps a finite positive density against
        // the unperturbed eigenmeasure
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let grid = Grid::aligned(&map, 1024).unwrap();
        let matrix = build_matrix(&map, &phi, &grid).unwrap();
        let eigen = power_eigendata(&matrix, 1e-10, 200_000).unwrap();
        let (mu_eps, _) = noisy_equilibrium(&map, &phi, &grid, 0.01).unwrap();
        let mut sup: f64 = 0.0;
        let mut inf = f64::INFINITY;
        for (m, n) in mu_eps.weights.iter().zip(&eigen.eigenmeasure.weights) {
            if *n > 1e-300 {
                sup = sup.max(m / n);
                inf = inf.min(m / n);
            }
        }
        assert!(sup.is_finite() && sup < 100.0, "density sup {sup}");
        assert!(inf > 0.0, "density inf {inf}");
    }

    #[test]
    fn stochastic_sweep_requires_descending_epsilons() {
        let map = builtin_map("doubling", &[]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let grid = Grid::uniform(128);
        assert!(stochastic_sweep(&map, &phi, &grid, &[0.01, 0.05], 2.0, 0.9).is_err());
    }

    #[test]
    fn stochastic_sweep_pitchfork_decreasing() {
        // nontrivial density h: -0.5 log|f'| still passes (P) on this map
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        let phi = builtin_potential("minus_t_log_deriv", &[0.5], &map).unwrap();
        let sigma = auto_sigma(&map);
        let gamma = suggested_gamma(&map, sigma);
        let grid = Grid::aligned(&map, 1024).unwrap();
        let sweep =
            stochastic_sweep(&map, &phi, &grid, &[0.05, 0.02, 0.01], sigma, gamma).unwrap();
        for w in sweep.distance_l1.windows(2) {
            assert!(w[1] <= w[0], "distances not decreasing: {:?}", sweep.distance_l1);
        }
        assert!(sweep.distance_l1[0] > 1e-6, "perturbation should be visible at eps = 0.05");
        assert!(*sweep.distance_l1.last().unwrap() <= 0.05);
    }

    #[test]
    fn adapted_kernel_detailed_balance() {
        // the reference measure is an exact fixed row vector of the kernel
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let grid = Grid::aligned(&map, 512).unwrap();
        let matrix = build_matrix(&map, &phi, &grid).unwrap();
        let eigen = power_eigendata(&matrix, 1e-10, 200_000).unwrap();
        let nu = &eigen.eigenmeasure;
        let kernel = NoiseKernel::adapted(nu, 0.02).unwrap();
        let n = kernel.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let sum: f64 = kernel.row(i).iter().map(|(_, v)| v).sum();
            assert_near(sum, 1.0, 1e-12);
            for &(j, v) in kernel.row(i) {
                assert!(v >= 0.0);
                out[j as usize] += nu.weights[i] * v;
            }
        }
        for (o, w) in out.iter().zip(&nu.weights) {
            assert!((o - w).abs() <= 1e-13, "kernel does not fix nu: {o} vs {w}");
        }
    }

    #[test]
    fn adapted_kernel_reduces_to_uniform_for_lebesgue() {
        let grid = Grid::uniform(64);
        let leb = DiscreteMeasure::lebesgue(grid.clone());
        let kernel = NoiseKernel::adapted(&leb, 0.05).unwrap();
        let mut out = vec![0.0; 64];
        for i in 0..64 {
            for &(j, v) in kernel.row(i) {
                out[j as usize] += leb.weights[i] * v;
            }
        }
        for (o, w) in out.iter().zip(&leb.weights) {
            assert!((o - w).abs() <= 1e-15);
        }
    }
}
