//! Equilibrium states μ = h·ν, Cesàro push-forward cross-checks, Rokhlin
//! entropy, the variational defect, and basin coverage.

use std::sync::Arc;

use crate::dynamics::IntervalMap;
use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::rng::Rng;
use crate::transfer::{DiscreteMeasure, EigenData, TransferMatrix};

pub type Observable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub measure: DiscreteMeasure,
    /// Density dμ/dν per bin (the normalized eigenfunction).
    pub density_vs_nu: Vec<f64>,
    pub density_sup: f64,
    pub density_inf: f64,
    pub entropy: f64,
    pub phi_integral: f64,
    pub variational_defect: f64,
    /// |direct Rokhlin integral - (log λ - ∫φ dμ)|.
    pub rokhlin_discrepancy: f64,
}

/// μ_j = h_j ν_j renormalized; entropy fields are NaN until filled.
pub fn equilibrium_from_eigendata(eigen: &EigenData) -> Result<EquilibriumState> {
    let nu = &eigen.eigenmeasure;
    let weights: Vec<f64> = eigen
        .eigenfunction
        .iter()
        .zip(&nu.weights)
        .map(|(h, w)| h * w)
        .collect();
    let measure = DiscreteMeasure::new(nu.grid.clone(), weights)?;
    let density_sup = eigen.eigenfunction.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let density_inf = eigen.eigenfunction.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EquilibriumState {
        measure,
        density_vs_nu: eigen.eigenfunction.clone(),
        density_sup,
        density_inf,
        entropy: f64::NAN,
        phi_integral: f64::NAN,
        variational_defect: f64::NAN,
        rokhlin_discrepancy: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RokhlinEntropy {
    /// ∫ log(λ e^{-φ} h∘f / h) dμ by grid quadrature.
    pub direct: f64,
    /// log λ - ∫φ dμ (telescoped form, exact for invariant μ).
    pub telescoped: f64,
}

impl RokhlinEntropy {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.telescoped).abs()
    }
}

/// Rokhlin's formula h_μ(f) = ∫ log J_μ f dμ with J_μ f = λ e^{-φ} (h∘f)/h.
pub fn entropy_rokhlin(
    map: &IntervalMap,
    phi: &Potential,
    eq: &EquilibriumState,
    eigen: &EigenData,
) -> Result<RokhlinEntropy> {
    if !eq.density_inf.is_finite() || eq.density_inf <= 0.0 {
        return Err(Error::DegenerateDensity);
    }
    let grid = &eq.measure.grid;
    let log_lambda = eigen.lambda.ln();
    let mut direct = 0.0;
    let mut phi_int = 0.0;
    for (j, &mu_j) in eq.measure.weights.iter().enumerate() {
        if mu_j <= 0.0 {
            continue;
        }
        let x = grid.midpoints()[j];
        let phi_x = phi.eval(x);
        phi_int += mu_j * phi_x;
        let fx = match map.evaluate(x) {
            Ok(v) => v,
            Err(_) if mu_j <= 1e-12 => continue,
            Err(_) => return Err(Error::OrbitEscaped { step: 0, x }),
        };
        let h_here = eq.density_vs_nu[j];
        let h_image = eq.density_vs_nu[grid.bin_of(fx)];
        if h_image <= 0.0 {
            return Err(Error::DegenerateDensity);
        }
        direct += mu_j * (log_lambda - phi_x + h_image.ln() - h_here.ln());
    }
    Ok(RokhlinEntropy { direct, telescoped: log_lambda - phi_int })
}

/// |h_μ + ∫φ dμ - log λ|.
pub fn variational_defect(eq: &EquilibriumState, eigen: &EigenData) -> f64 {
    (eq.entropy + eq.phi_integral - eigen.lambda.ln()).abs()
}

/// Convenience: build the state and fill entropy, ∫φ dμ, and the defect.
pub fn equilibrium_state(
    map: &IntervalMap,
    phi: &Potential,
    eigen: &EigenData,
) -> Result<EquilibriumState> {
    let mut eq = equilibrium_from_eigendata(eigen)?;
    let rokhlin = entropy_rokhlin(map, phi, &eq, eigen)?;
    let grid = &eq.measure.grid;
    eq.phi_integral = eq
        .measure
        .weights
        .iter()
        .enumerate()
        .map(|(j, &m)| m * phi.eval(grid.midpoints()[j]))
        .sum();
    eq.entropy = rokhlin.direct;
    eq.rokhlin_discrepancy = rokhlin.discrepancy();
    eq.variational_defect = variational_defect(&eq, eigen);
    Ok(eq)
}

/// ν_n = (1/n) Σ_{j<n} f_*^j ν for the eigenmeasure ν.
///
/// Push-forwards of a conformal measure are densities against ν itself:
/// L*_φ ν = λν gives f_*^j ν = λ^{-j} (L_φ^j 1)·ν, so the Cesàro average is
/// computed by iterating the collocation matrix on the ones vector. Grid
/// mass transport would silently replace ν by its Lebesgue-uniformized
/// version each step, which is wrong whenever ν is singular.
pub fn cesaro_pushforward(
    matrix: &TransferMatrix,
    eigen: &EigenData,
    n: usize,
) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("Cesàro average needs n >= 1".into()));
    }
    let nu = &eigen.eigenmeasure;
    let bins = nu.weights.len();
    let mut g = vec![1.0; bins];
    let mut acc = vec![1.0; bins];
    let mut scratch = Vec::with_capacity(bins);
    for _ in 1..n {
        matrix.apply_right(&g, &mut scratch);
        for (gi, si) in g.iter_mut().zip(&scratch) {
            *gi = si / eigen.lambda;
        }
        for (a, gi) in acc.iter_mut().zip(&g) {
            *a += gi;
        }
    }
    let weights: Vec<f64> = acc
        .iter()
        .zip(&nu.weights)
        .map(|(a, w)| a / n as f64 * w)
        .collect();
    DiscreteMeasure::new(nu.grid.clone(), weights)
}

/// f_*μ for μ = h·ν through the same operator identity:
/// f_*(hν) = λ^{-1} (L_φ h)·ν. The distance to μ is the invariance defect
/// of the computed eigendata.
pub fn pushforward_equilibrium(
    matrix: &TransferMatrix,
    eigen: &EigenData,
) -> Result<DiscreteMeasure> {
    let nu = &eigen.eigenmeasure;
    let mut image = Vec::new();
    matrix.apply_right(&eigen.eigenfunction, &mut image);
    let weights: Vec<f64> = image
        .iter()
        .zip(&nu.weights)
        .map(|(g, w)| g / eigen.lambda * w)
        .collect();
    DiscreteMeasure::new(nu.grid.clone(), weights)
}

/// Draws anchors from ν, runs Birkhoff averages of each test function along
/// measure-typical orbit segments, and returns the worst
/// |median average - ∫ψ dμ|. The median resists outlier orbits.
///
/// Orbit segments are realized by the μ-adapted backward chain: from y pick
/// a preimage z ∈ f^{-1}(y) with probability ∝ e^{φ(z)} h(z); the reversed
/// segment is an f-orbit and the sampled points are μ-stationary. Backward
/// steps contract, so no round-off amplification occurs — forward f64
/// iteration loses ν-typicality after ~50 steps whenever ν is singular.
#[allow(clippy::too_many_arguments)]
pub fn basin_check(
    map: &IntervalMap,
    phi: &Potential,
    eq: &EquilibriumState,
    nu: &DiscreteMeasure,
    test_functions: &[Observable],
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("n and samples must be positive".into()));
    }
    let grid = &eq.measure.grid;
    let h_at = |x: f64| eq.density_vs_nu[grid.bin_of(x)].max(1e-300);
    let mut worst: f64 = 0.0;
    for psi in test_functions {
        let target: f64 = eq
            .measure
            .weights
            .iter()
            .enumerate()
            .map(|(j, &m)| m * (psi)(grid.midpoints()[j]))
            .sum();
        let mut averages = Vec::with_capacity(samples);
        for k in 0..samples {
            let mut rng = Rng::derive(seed, k as u64);
            let mut y = nu.sample(&mut rng);
            let mut acc = (psi)(y);
            let mut escaped = false;
            for _ in 1..n {
                let Ok(pre) = map.preimages(y) else {
                    escaped = true;
                    break;
                };
                let weights: Vec<f64> =
                    pre.iter().map(|(z, _)| phi.eval(*z).exp() * h_at(*z)).collect();
                let total: f64 = weights.iter().sum();
                if !total.is_finite() || total <= 0.0 {
                    escaped = true;
                    break;
                }
                let mut u = rng.next_f64() * total;
                let mut pick = pre.len() - 1;
                for (idx, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = idx;
                        break;
                    }
                    u -= w;
                }
                y = pre[pick].0;
                acc += (psi)(y);
            }
            if !escaped {
                averages.push(acc / n as f64);
            }
        }
        if averages.is_empty() {
            return Err(Error::InvalidParameter("every sample escaped the domain".into()));
        }
        averages.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = averages[averages.len() / 2];
        worst = worst.max((median - target).abs());
    }
    Ok(worst)
}
