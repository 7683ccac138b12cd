//! Hölder potentials, Birkhoff sums, and oscillation estimates.

use std::sync::Arc;

use crate::dynamics::IntervalMap;
use crate::error::{Error, Result};
use crate::geometry::circle_dist;
use crate::rng::Rng;

pub type PotentialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Observable with declared Hölder data (C_H, alpha_H).
#[derive(Clone)]
pub struct Potential {
    pub name: String,
    evaluator: PotentialFn,
    pub hoelder_exponent: f64,
    pub hoelder_constant: f64,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("hoelder_exponent", &self.hoelder_exponent)
            .field("hoelder_constant", &self.hoelder_constant)
            .finish()
    }
}

impl Potential {
    pub fn new(
        name: impl Into<String>,
        evaluator: PotentialFn,
        hoelder_exponent: f64,
        hoelder_constant: f64,
    ) -> Self {
        Potential {
            name: name.into(),
            evaluator,
            hoelder_exponent,
            hoelder_constant,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }
}

/// S_n phi(x) = sum_{j<n} phi(f^j x); n = 0 gives 0.
pub fn birkhoff_sum(map: &IntervalMap, phi: &Potential, x: f64, n: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut p = x;
    for step in 0..n {
        sum += phi.eval(p);
        if step + 1 < n {
            p = map
                .evaluate(p)
                .map_err(|_| Error::OrbitEscaped { step, x: p })?;
        }
    }
    Ok(sum)
}

/// sup - inf of phi over a grid of `resolution` points per interval, with one
/// Richardson refinement (doubled resolution, larger estimate kept).
pub fn oscillation(phi: &Potential, domain: &[(f64, f64)], resolution: usize) -> f64 {
    let res = resolution.max(16);
    let coarse = oscillation_at(phi, domain, res);
    let fine = oscillation_at(phi, domain, 2 * res);
    coarse.max(fine)
}

fn oscillation_at(phi: &Potential, domain: &[(f64, f64)], resolution: usize) -> f64 {
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for &(lo, hi) in domain {
        if hi <= lo {
            continue;
        }
        for i in 0..=resolution {
            let x = lo + (hi - lo) * i as f64 / resolution as f64;
            let x = x.min(hi - 1e-13).max(lo);
            let v = phi.eval(x);
            sup = sup.max(v);
            inf = inf.min(v);
        }
    }
    if sup.is_finite() && inf.is_finite() {
        sup - inf
    } else {
        f64::INFINITY
    }
}

fn estimate_hoelder_constant(
    eval: &PotentialFn,
    domain: &[(f64, f64)],
    exponent: f64,
    circle: bool,
) -> f64 {
    let mut quot: f64 = 0.0;
    let mut rng = Rng::new(0x5eed);
    let pick = |rng: &mut Rng, domain: &[(f64, f64)]| {
        let &(lo, hi) = &domain[rng.next_usize(domain.len())];
        rng.uniform(lo, hi)
    };
    for _ in 0..4000 {
        let x = pick(&mut rng, domain);
        let y = pick(&mut rng, domain);
        let d = if circle { circle_dist(x, y) } else { (x - y).abs() };
        if d < 1e-12 {
            continue;
        }
        quot = quot.max(((eval)(x) - (eval)(y)).abs() / d.powf(exponent));
    }
    // adjacent fine-grid pairs probe the modulus near sharp features
    for &(lo, hi) in domain {
        let n = 2000;
        let h = (hi - lo) / n as f64;
        for i in 0..n {
            let x = lo + i as f64 * h;
            let y = (x + h).min(hi - 1e-13);
            let d = y - x;
            if d < 1e-12 {
                continue;
            }
            quot = quot.max(((eval)(x) - (eval)(y)).abs() / d.powf(exponent));
        }
    }
    quot * 1.02
}

/// Builtin potential families. `minus_t_log_deriv(t)` is -t log|f'|;
/// `minus_log_deriv_plus_beta(beta)` is -log(|f'| + beta).
pub fn builtin_potential(name: &str, params: &[f64], map: &IntervalMap) -> Result<Potential> {
    let domains: Vec<(f64, f64)> = map.branches().iter().map(|b| b.domain).collect();
    // Manneville-Pomeau's neutral point controls the modulus of continuity:
    // |f'| - 1 ~ x^alpha there, so the map's alpha is the Hölder exponent.
    let exponent = if map.name.starts_with("manneville_pomeau") {
        map.name
            .split("alpha=")
            .nth(1)
            .and_then(|s| s.trim_end_matches(')').parse::<f64>().ok())
            .unwrap_or(1.0)
    } else {
        1.0
    };
    match name {
        "zero" => Ok(Potential::new("zero", Arc::new(|_| 0.0), 1.0, 0.0)),
        "minus_t_log_deriv" => {
            let t = *params
                .first()
                .ok_or_else(|| Error::InvalidParameter("t required".into()))?;
            let m = map.clone();
            let eval: PotentialFn =
                Arc::new(move |x| -t * m.derivative_abs(x).map(|d| d.ln()).unwrap_or(f64::NAN));
            let c = estimate_hoelder_constant(&eval, &domains, exponent, map.is_circle());
            Ok(Potential::new(format!("minus_t_log_deriv(t={t})"), eval, exponent, c))
        }
        "minus_log_deriv_plus_beta" => {
            let beta = *params
                .first()
                .ok_or_else(|| Error::InvalidParameter("beta required".into()))?;
            if beta <= 0.0 {
                return Err(Error::InvalidParameter("beta must be positive".into()));
            }
            let m = map.clone();
            let eval: PotentialFn = Arc::new(move |x| {
                -(m.derivative_abs(x).map(|d| d + beta).unwrap_or(f64::NAN)).ln()
            });
            let c = estimate_hoelder_constant(&eval, &domains, exponent, map.is_circle());
            Ok(Potential::new(
                format!("minus_log_deriv_plus_beta(beta={beta})"),
                eval,
                exponent,
                c,
            ))
        }
        other => Err(Error::UnknownPotential(other.to_string())),
    }
}

pub const BUILTIN_POTENTIALS: &[&str] = &["zero", "minus_t_log_deriv", "minus_log_deriv_plus_beta"];
