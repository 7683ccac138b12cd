//! Hyperbolic-time detection and statistics: Pliss-style running-minimum
//! scan, first-time tails, visit frequencies, and the exact itinerary count
//! behind the combinatorial pressure bound.

use crate::dynamics::IntervalMap;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::transfer::DiscreteMeasure;

/// Orbit segment with the log inverse-Lipschitz data log L(f^j x) attached.
#[derive(Debug, Clone)]
pub struct OrbitRecord {
    pub x0: f64,
    pub points: Vec<f64>,
    pub log_l: Vec<f64>,
}

impl OrbitRecord {
    pub fn new(map: &IntervalMap, x0: f64, n: usize) -> Result<Self> {
        let points = map.orbit(x0, n)?;
        let log_l = points[..n]
            .iter()
            .map(|&x| map.lipschitz_inverse(x).map(|l| l.ln()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(OrbitRecord { x0, points, log_l })
    }

    /// Dithered variant for long-orbit statistics (see IntervalMap::orbit_dithered).
    pub fn sampled(map: &IntervalMap, x0: f64, n: usize, rng: &mut Rng) -> Result<Self> {
        let points = map.orbit_dithered(x0, n, rng)?;
        let log_l = points[..n]
            .iter()
            .map(|&x| map.lipschitz_inverse(x).map(|l| l.ln()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(OrbitRecord { x0, points, log_l })
    }

    /// Synthetic record from a bare log L sequence (oracle tests).
    pub fn from_log_l(log_l: Vec<f64>) -> Self {
        OrbitRecord { x0: 0.0, points: vec![0.0; log_l.len() + 1], log_l }
    }

    pub fn len(&self) -> usize {
        self.log_l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_l.is_empty()
    }
}

/// Detected c-hyperbolic times of one orbit.
#[derive(Debug, Clone)]
pub struct HyperbolicTimeRecord {
    pub c: f64,
    /// All n with prod_{j=n-k}^{n-1} L(f^j x) < e^{-ck} for every 1 <= k <= n.
    pub times: Vec<usize>,
    pub density: f64,
    /// max over the tail half of n_{k+1}/(n_k + 1); equals 1 exactly when
    /// every tail gap is 1, and tends to 1 along non-lacunary sequences.
    pub max_gap_ratio: f64,
    pub first_time: Option<usize>,
}

/// O(n) scan: n is a time iff the prefix sum of (log L + c) at n is strictly
/// below its running minimum.
pub fn hyperbolic_times(orbit: &OrbitRecord, c: f64) -> HyperbolicTimeRecord {
    let n = orbit.len();
    let mut times = Vec::new();
    let mut s = 0.0;
    let mut min_prefix = 0.0;
    for (j, &ll) in orbit.log_l.iter().enumerate() {
        s += ll + c;
        if s < min_prefix {
            times.push(j + 1);
        }
        min_prefix = min_prefix.min(s);
    }
    let density = if n == 0 { 0.0 } else { times.len() as f64 / n as f64 };
    let max_gap_ratio = gap_ratio_tail_half(&times);
    let first_time = times.first().copied();
    HyperbolicTimeRecord { c, times, density, max_gap_ratio, first_time }
}

fn gap_ratio_tail_half(times: &[usize]) -> f64 {
    if times.is_empty() {
        return f64::INFINITY;
    }
    if times.len() < 2 {
        return 1.0;
    }
    let start = times.len() / 2;
    let mut worst: f64 = 1.0;
    for k in start..times.len() - 1 {
        worst = worst.max(times[k + 1] as f64 / (times[k] + 1) as f64);
    }
    worst
}

/// Property harness for the Pliss lemma: returns whether
/// "(1/n) Σ log L <= -2c implies at least one hyperbolic time" held.
pub fn pliss_check(orbit: &OrbitRecord, c: f64) -> bool {
    if orbit.is_empty() {
        return true;
    }
    let avg = orbit.log_l.iter().sum::<f64>() / orbit.len() as f64;
    if avg > -2.0 * c {
        return true; // implication vacuous
    }
    !hyperbolic_times(orbit, c).times.is_empty()
}

/// Empirical tail of the first hyperbolic time over ν-distributed starts.
#[derive(Debug, Clone)]
pub struct TailReport {
    /// (n, P(n_1 > n)) for n = 0..=n_max.
    pub tail: Vec<(usize, f64)>,
    pub mean_first_time: f64,
    pub samples: usize,
    pub escaped: usize,
    /// Points with no hyperbolic time within the horizon; they enter the
    /// mean at horizon + 1.
    pub censored: usize,
    pub horizon: usize,
}

/// First hyperbolic time of one start, scanned incrementally up to `horizon`.
fn first_time_of(map: &IntervalMap, x0: f64, c: f64, horizon: usize, rng: &mut Rng) -> Result<Option<usize>> {
    const DITHER: f64 = 1.0 / (1u64 << 50) as f64;
    let mut x = x0;
    let mut s = 0.0;
    let mut min_prefix = 0.0;
    for j in 0..horizon {
        let ll = map
            .lipschitz_inverse(x)
            .map_err(|_| Error::OrbitEscaped { step: j, x })?
            .ln();
        s += ll + c;
        if s < min_prefix {
            return Ok(Some(j + 1));
        }
        min_prefix = min_prefix.min(s);
        x = map
            .evaluate(x)
            .map_err(|_| Error::OrbitEscaped { step: j, x })?;
        if map.is_circle() {
            x = crate::geometry::wrap(x + rng.next_f64() * DITHER);
        }
    }
    Ok(None)
}

pub fn first_time_tail(
    map: &IntervalMap,
    nu: &DiscreteMeasure,
    c: f64,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<TailReport> {
    if samples < 1000 {
        return Err(Error::InvalidParameter("need at least 10^3 samples".into()));
    }
    if c <= 0.0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    let horizon = (4 * n_max).max(256);
    let mut exceed = vec![0usize; n_max + 1];
    let mut escaped = 0usize;
    let mut censored = 0usize;
    let mut total_first = 0.0;
    let mut valid = 0usize;
    for k in 0..samples {
        let mut rng = Rng::derive(seed, k as u64);
        let x0 = nu.sample(&mut rng);
        match first_time_of(map, x0, c, horizon, &mut rng) {
            Err(_) => escaped += 1,
            Ok(opt) => {
                let n1 = match opt {
                    Some(n1) => n1,
                    None => {
                        censored += 1;
                        horizon + 1
                    }
                };
                valid += 1;
                total_first += n1 as f64;
                for (n, slot) in exceed.iter_mut().enumerate() {
                    if n1 > n {
                        *slot += 1;
                    }
                }
            }
        }
    }
    if valid == 0 {
        return Err(Error::InvalidParameter("every sample escaped the domain".into()));
    }
    let tail = exceed
        .iter()
        .enumerate()
        .map(|(n, &cnt)| (n, cnt as f64 / valid as f64))
        .collect();
    Ok(TailReport {
        tail,
        mean_first_time: total_first / valid as f64,
        samples: valid,
        escaped,
        censored,
        horizon,
    })
}

/// Monte Carlo estimate of ν(B(n)), the mass of points whose visit frequency
/// to 𝒜 up to time n is at least gamma.
pub fn visit_frequency_measure(
    map: &IntervalMap,
    nu: &DiscreteMeasure,
    gamma: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) && gamma != 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must lie in [0,1), got {gamma}")));
    }
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("n and samples must be positive".into()));
    }
    let region = map.contraction_region();
    let in_region =
        |x: f64| region.iter().any(|&(lo, hi)| x >= lo && x < hi);
    let mut hits = 0usize;
    let mut valid = 0usize;
    for k in 0..samples {
        let mut rng = Rng::derive(seed, k as u64);
        let x0 = nu.sample(&mut rng);
        match map.orbit_dithered(x0, n.saturating_sub(1), &mut rng) {
            Err(_) => continue,
            Ok(orbit) => {
                valid += 1;
                let visits = orbit[..n].iter().filter(|&&x| in_region(x)).count();
                if visits as f64 / n as f64 >= gamma {
                    hits += 1;
                }
            }
        }
    }
    if valid == 0 {
        return Err(Error::InvalidParameter("every sample escaped the domain".into()));
    }
    Ok(hits as f64 / valid as f64)
}

fn binomial_u128(n: usize, k: usize) -> Result<u128> {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for i in 0..k {
        c = c
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::InvalidParameter("binomial overflow".into()))?;
        c /= (i + 1) as u128;
    }
    Ok(c)
}

fn pow_u128(base: u128, exp: u32) -> Result<u128> {
    base.checked_pow(exp)
        .ok_or_else(|| Error::InvalidParameter("power overflow".into()))
}

/// Exact cardinality of I(gamma, n): itineraries over k0 symbols whose count
/// of symbols <= q strictly exceeds gamma·n. Exact integer arithmetic, n <= 64.
pub fn itinerary_count(n: usize, gamma: f64, q: usize, k0: usize) -> Result<u128> {
    if q > k0 || k0 == 0 {
        return Err(Error::InvalidParameter(format!("need 0 <= q <= k0, got q={q}, k0={k0}")));
    }
    if n == 0 || n > 64 {
        return Err(Error::InvalidParameter(format!("n must lie in 1..=64, got {n}")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma must lie in [0,1), got {gamma}")));
    }
    let threshold = gamma * n as f64;
    let mut total: u128 = 0;
    for m in 0..=n {
        if (m as f64) > threshold {
            let term = binomial_u128(n, m)?
                .checked_mul(pow_u128(q as u128, m as u32)?)
                .and_then(|t| t.checked_mul(pow_u128((k0 - q) as u128, (n - m) as u32).ok()?))
                .ok_or_else(|| Error::InvalidParameter("itinerary count overflow".into()))?;
            total = total
                .checked_add(term)
                .ok_or_else(|| Error::InvalidParameter("itinerary count overflow".into()))?;
        }
    }
    Ok(total)
}

/// Finite-n proxy for c_gamma: (1/n) log #I(gamma, n). Upper-biased.
pub fn c_gamma_estimate(gamma: f64, q: usize, k0: usize, n: usize) -> Result<f64> {
    let count = itinerary_count(n, gamma, q, k0)?;
    if count == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((count as f64).ln() / n as f64)
}

#[cfg(test)]
pub fn brute_force_times(log_l: &[f64], c: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for n in 1..=log_l.len() {
        let mut ok = true;
        for k in 1..=n {
            let sum: f64 = log_l[n - k..n].iter().sum();
            if sum >= -c * k as f64 {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(n);
        }
    }
    out
}
