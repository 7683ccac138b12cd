//! Dynamical balls, hyperbolic pre-ball geometry, bounded distortion, and
//! the Gibbs ratio ν(B(x,n,δ)) / e^{-Pn + S_nφ(x)}.

use crate::dynamics::IntervalMap;
use crate::error::{Error, Result};
use crate::geometry::{circle_dist, signed_offset, Arc as CircleArc};
use crate::hyptimes::{hyperbolic_times, OrbitRecord};
use crate::potentials::{birkhoff_sum, Potential};
use crate::transfer::{DiscreteMeasure, EigenData};

/// B(x, n, δ) = {y : d(f^j y, f^j x) <= δ for 0 <= j <= n}, computed as a
/// single interval around x.
#[derive(Debug, Clone)]
pub struct DynamicalBall {
    pub center: f64,
    pub length: usize,
    pub radius: f64,
    pub interval: CircleArc,
}

fn offset_from(x: f64, base: f64, circle: bool) -> f64 {
    if circle {
        signed_offset(x, base)
    } else {
        x - base
    }
}

/// Preimage of `y` adjacent to `near` (the local inverse germ). Errors if no
/// preimage sits within a quarter circle.
fn preimage_near(map: &IntervalMap, y: f64, near: f64) -> Result<f64> {
    let pre = map.preimages(y)?;
    let mut best: Option<(f64, f64)> = None;
    for (x, _) in pre {
        let d = if map.is_circle() { circle_dist(x, near) } else { (x - near).abs() };
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, x));
        }
    }
    match best {
        Some((d, x)) if d <= 0.3 => Ok(x),
        _ => Err(Error::DegenerateBall),
    }
}

/// Backward pullback of the δ-tube along the orbit branch chain.
pub fn dynamical_ball(map: &IntervalMap, x: f64, n: usize, delta: f64) -> Result<DynamicalBall> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must lie in (0, 0.25], got {delta}"
        )));
    }
    let orbit = map.orbit(x, n)?;
    // offsets (a, b): current interval is [p_j - a, p_j + b]
    let mut a = delta;
    let mut b = delta;
    for j in (0..n).rev() {
        let p = orbit[j];
        let p_next = orbit[j + 1];
        let branch = map.branch_of(p)?;
        let lift = branch.forward_lift(p);
        // endpoints of the target tube in lift coordinates
        let (mut ylo, mut yhi) = (lift - a, lift + b);
        if !map.is_circle() {
            ylo = ylo.max(0.0);
            yhi = yhi.min(1.0);
        }
        debug_assert!((offset_from(crate::geometry::wrap(lift), p_next, map.is_circle())).abs() < 1e-9 || !map.is_circle());
        let y_lo_circ = if map.is_circle() { crate::geometry::wrap(ylo) } else { ylo };
        let y_hi_circ = if map.is_circle() { crate::geometry::wrap(yhi) } else { yhi };
        let x_lo = preimage_near(map, y_lo_circ, p)?;
        let x_hi = preimage_near(map, y_hi_circ, p)?;
        let s1 = offset_from(x_lo, p, map.is_circle());
        let s2 = offset_from(x_hi, p, map.is_circle());
        a = (-s1.min(s2).min(0.0)).min(delta);
        b = s1.max(s2).max(0.0).min(delta);
        if a + b < 1e-14 {
            return Err(Error::DegenerateBall);
        }
    }
    let center = orbit[0];
    Ok(DynamicalBall {
        center,
        length: n,
        radius: delta,
        interval: CircleArc::new(center - a, a + b),
    })
}

/// max/min over sampled pairs in the ball of exp(S_nφ(z) - S_nφ(y)); equals
/// the Jacobian ratio J_ν f^n(y)/J_ν f^n(z) since J_ν f^n = λ^n e^{-S_nφ}.
pub fn distortion_ratio(
    map: &IntervalMap,
    phi: &Potential,
    ball: &DynamicalBall,
) -> Result<f64> {
    let n = ball.length;
    let mut smin = f64::INFINITY;
    let mut smax = f64::NEG_INFINITY;
    let samples = 50;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        let y = crate::geometry::wrap(ball.interval.lo + t * ball.interval.len);
        let y = if map.is_circle() { y } else { y.clamp(0.0, 1.0) };
        if let Ok(s) = birkhoff_sum(map, phi, y, n.max(1)) {
            smin = smin.min(s);
            smax = smax.max(s);
        }
    }
    if !smin.is_finite() || !smax.is_finite() {
        return Err(Error::DegenerateBall);
    }
    Ok((smax - smin).exp())
}

/// Analytic distortion bound from Hölder data: exp(C_H δ^α Σ e^{-cα j/2}).
pub fn distortion_bound(phi: &Potential, c: f64, delta: f64) -> f64 {
    let alpha = phi.hoelder_exponent;
    let series = 1.0 / (1.0 - (-c * alpha / 2.0).exp());
    (phi.hoelder_constant * (2.0 * delta).powf(alpha) * series).exp()
}

/// ν(B(x,n,δ)) / exp(-P n + S_nφ(x)) with P = log λ. `n` must be a
/// c-hyperbolic time for x.
#[allow(clippy::too_many_arguments)]
pub fn gibbs_ratio(
    map: &IntervalMap,
    phi: &Potential,
    eigen: &EigenData,
    nu: &DiscreteMeasure,
    x: f64,
    n: usize,
    delta: f64,
    c: f64,
) -> Result<f64> {
    let orbit = OrbitRecord::new(map, x, n)?;
    let record = hyperbolic_times(&orbit, c);
    if !record.times.contains(&n) {
        return Err(Error::NotHyperbolicTime { n });
    }
    let ball = dynamical_ball(map, x, n, delta)?;
    let mass = nu.mass_of_arc(&ball.interval);
    let s_n = birkhoff_sum(map, phi, x, n)?;
    let p = eigen.lambda.ln();
    Ok(mass / (-p * n as f64 + s_n).exp())
}

/// Default ball radius: half the minimum distance from 𝒜 to the boundary of
/// its covering elements, floored at 0.05.
pub fn default_delta(map: &IntervalMap) -> f64 {
    let mut half_min = f64::INFINITY;
    for &(alo, ahi) in map.contraction_region() {
        for &(plo, phi) in &map.covering()[..map.q().min(map.covering().len())] {
            if alo >= plo && ahi <= phi {
                half_min = half_min.min(0.5 * (alo - plo).max(0.0).min((phi - ahi).max(0.0)));
            }
        }
    }
    let d = if half_min.is_finite() { half_min.max(0.05) } else { 0.05 };
    d.min(0.25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin_map;
    use crate::potentials::builtin_potential;
    use crate::rng::Rng;
    use crate::transfer::{build_matrix, power_eigendata, Grid};
    use std::sync::Arc;

    fn assert_near(a: f64, b: f64, eps: f64) {
        assert!((a - b).abs() <= eps, "expected {a} ≈ {b} (diff {:.3e})", (a - b).abs());
    }

    #[test]
    fn doubling_ball_closed_form() {
        let map = builtin_map("doubling", &[]).unwrap();
        let delta = 0.25;
        for &x in &[0.1, 0.37, 0.61, 0.93] {
            for n in 0..=12 {
                let ball = dynamical_ball(&map, x, n, delta).unwrap();
                let expect = 2.0 * delta * 0.5f64.powi(n as i32);
                assert_near(ball.interval.len, expect, 1e-12);
                // centered at x
                assert!(ball.interval.contains(x));
            }
        }
    }

    #[test]
    fn ball_at_n_zero_is_plain_ball() {
        let map = builtin_map("manneville_pomeau_circle", &[0.5]).unwrap();
        let ball = dynamical_ball(&map, 0.3, 0, 0.1).unwrap();
        assert_near(ball.interval.len, 0.2, 1e-15);
    }

    #[test]
    fn ball_nesting() {
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        let mut rng = Rng::new(2);
        for _ in 0..30 {
            let x = rng.next_f64();
            let mut prev = f64::INFINITY;
            for n in 0..10 {
                let ball = dynamical_ball(&map, x, n, 0.05).unwrap();
                assert!(ball.interval.len <= prev + 1e-14, "not nested at n={n}");
                prev = ball.interval.len;
            }
        }
    }

    #[test]
    fn ball_membership_sampled() {
        // every point of the computed interval tracks the orbit within delta
        let map = builtin_map("manneville_pomeau_circle", &[0.5]).unwrap();
        let delta = 0.1;
        for &x in &[0.9, 0.7, 0.3] {
            let n = 3;
            let ball = dynamical_ball(&map, x, n, delta).unwrap();
            let ox = map.orbit(x, n).unwrap();
            for i in 0..=100 {
                let y = crate::geometry::wrap(ball.interval.lo + ball.interval.len * i as f64 / 100.0);
                let oy = map.orbit(y, n).unwrap();
                for j in 0..=n {
                    assert!(
                        circle_dist(ox[j], oy[j]) <= delta + 1e-9,
                        "x={x} escape at j={j}"
                    );
                }
            }
        }
    }

    #[test]
    fn hyperbolic_time_contraction_bound() {
        // |B(x,n,δ)| <= 2δ e^{-cn/2} when n is a c-hyperbolic time
        let map = builtin_map("manneville_pomeau_circle", &[0.5]).unwrap();
        let x = 0.9;
        let n = 3;
        let c = 0.1;
        let orbit = OrbitRecord::new(&map, x, n).unwrap();
        let rec = hyperbolic_times(&orbit, c);
        assert!(rec.times.contains(&n), "3 should be a hyperbolic time at x=0.9");
        let delta = 0.1;
        let ball = dynamical_ball(&map, x, n, delta).unwrap();
        assert!(ball.interval.len > 0.0);
        assert!(
            ball.interval.len <= 2.0 * delta * (-c * n as f64 / 2.0).exp() + 1e-12,
            "length {} vs bound",
            ball.interval.len
        );
    }

    #[test]
    fn distortion_constant_potential_is_one() {
        let map = builtin_map("doubling", &[]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let ball = dynamical_ball(&map, 0.3, 5, 0.2).unwrap();
        assert_eq!(distortion_ratio(&map, &phi, &ball).unwrap(), 1.0);
    }

    #[test]
    fn distortion_within_series_bound() {
        // circle-smooth test potential on the doubling map; Lipschitz
        // constant 2π with respect to the circle metric
        let map = builtin_map("doubling", &[]).unwrap();
        let phi = Potential::new(
            "sine",
            Arc::new(|x: f64| (2.0 * std::f64::consts::PI * x).sin()),
            1.0,
            2.0 * std::f64::consts::PI,
        );
        let c = 2f64.ln() * 0.9; // every n is a hyperbolic time at this c
        let delta = 0.1;
        let mut rng = Rng::new(8);
        for _ in 0..20 {
            let x = rng.next_f64();
            for n in 1..=10 {
                let ball = dynamical_ball(&map, x, n, delta).unwrap();
                let ratio = distortion_ratio(&map, &phi, &ball).unwrap();
                assert!(
                    ratio <= distortion_bound(&phi, c, delta) + 1e-9,
                    "ratio {ratio} exceeds K0 at n={n}"
                );
            }
        }
    }

    #[test]
    fn distortion_bounded_at_hyperbolic_times_mp() {
        let map = builtin_map("manneville_pomeau_circle", &[0.5]).unwrap();
        let phi = builtin_potential("minus_log_deriv_plus_beta", &[0.8], &map).unwrap();
        let c = 0.05;
        let delta = 0.08;
        let bound = distortion_bound(&phi, c, delta);
        let mut rng = Rng::new(14);
        let mut checked = 0;
        while checked < 40 {
            let x = rng.next_f64();
            let Ok(orbit) = OrbitRecord::new(&map, x, 16) else { continue };
            let times = hyperbolic_times(&orbit, c).times;
            for &n in times.iter().take(2) {
                let ball = dynamical_ball(&map, x, n, delta).unwrap();
                let ratio = distortion_ratio(&map, &phi, &ball).unwrap();
                assert!(ratio <= bound + 1e-9, "ratio {ratio} vs K0 {bound} at x={x}, n={n}");
                checked += 1;
            }
        }
    }

    #[test]
    fn gibbs_ratio_doubling_is_half() {
        let map = builtin_map("doubling", &[]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let grid = Grid::uniform(1024);
        let a = build_matrix(&map, &phi, &grid).unwrap();
        let eigen = power_eigendata(&a, 1e-10, 10_000).unwrap();
        let nu = eigen.eigenmeasure.clone();
        let mut rng = Rng::new(4);
        for _ in 0..25 {
            let x = rng.next_f64();
            for n in 1..=20 {
                let r = gibbs_ratio(&map, &phi, &eigen, &nu, x, n, 0.25, 0.05).unwrap();
                assert_near(r, 0.5, 1e-3);
            }
        }
    }

    #[test]
    fn gibbs_ratio_piecewise_linear_exact() {
        // slopes (3, 3/2), phi = -log|f'|: lambda = 1, nu = Lebesgue, so the
        // ratio reduces to |B| e^{S_n log|f'|(x)} = 2 delta when the pullback
        // chain stays inside single linearity pieces
        let map = builtin_map("linear_full_branch", &[3.0, 1.5]).unwrap();
        let phi = builtin_potential("minus_t_log_deriv", &[1.0], &map).unwrap();
        let grid = Grid::aligned(&map, 512).unwrap();
        let a = build_matrix(&map, &phi, &grid).unwrap();
        let eigen = power_eigendata(&a, 1e-10, 100_000).unwrap();
        let nu = eigen.eigenmeasure.clone();
        let delta = 0.02;
        let x = 0.1;
        let n = 4;
        let r = gibbs_ratio(&map, &phi, &eigen, &nu, x, n, delta, 0.05).unwrap();
        assert_near(r, 2.0 * delta, 1e-6);
    }

    #[test]
    fn gibbs_ratio_rejects_non_hyperbolic_time() {
        // channel starts of the pitchfork map are not immediately hyperbolic
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        let phi = builtin_potential("zero", &[], &map).unwrap();
        let grid = Grid::uniform(256);
        let a = build_matrix(&map, &phi, &grid).unwrap();
        let eigen = power_eigendata(&a, 1e-8, 100_000).unwrap();
        let nu = eigen.eigenmeasure.clone();
        let err = gibbs_ratio(&map, &phi, &eigen, &nu, 0.001, 1, 0.05, 0.0174);
        assert!(matches!(err, Err(Error::NotHyperbolicTime { n: 1 })));
    }

    #[test]
    fn default_delta_floor() {
        let map = builtin_map("pitchfork_doubling", &[0.8, 0.05]).unwrap();
        assert_eq!(default_delta(&map), 0.05);
        let map = builtin_map("doubling", &[]).unwrap();
        assert_eq!(default_delta(&map), 0.05);
    }
}
