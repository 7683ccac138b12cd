//! Piecewise-monotone circle/interval maps with branch inverses, derivative
//! data, a declared contraction region, and the (H1)/(H2)/(P) hypothesis
//! checker.
//!
//! Circle maps are handled through a monotone lift: each branch stores its
//! forward map in lift coordinates (values may exceed 1) so that preimage
//! lookup and interval pullback stay exact across the 0/1 seam.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::wrap;
use crate::potentials::{oscillation, Potential};
use crate::rng::Rng;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneDir {
    Increasing,
    Decreasing,
}

/// One monotone injective piece of the map.
///
/// `forward` is the lift restricted to `domain`; `range` is the lift image,
/// stored ascending. `inverse` maps lift values in `range` back to the domain.
#[derive(Clone)]
pub struct BranchSpec {
    pub domain: (f64, f64),
    pub monotone_dir: MonotoneDir,
    forward: RealFn,
    inverse: RealFn,
    derivative: RealFn,
    range: (f64, f64),
}

impl std::fmt::Debug for BranchSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BranchSpec")
            .field("domain", &self.domain)
            .field("range", &self.range)
            .field("monotone_dir", &self.monotone_dir)
            .finish()
    }
}

impl BranchSpec {
    pub fn new(
        domain: (f64, f64),
        monotone_dir: MonotoneDir,
        forward: RealFn,
        inverse: RealFn,
        derivative: RealFn,
    ) -> Self {
        let (a, b) = ((forward)(domain.0), (forward)(domain.1));
        let range = if a <= b { (a, b) } else { (b, a) };
        BranchSpec { domain, monotone_dir, forward, inverse, derivative, range }
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn forward_lift(&self, x: f64) -> f64 {
        (self.forward)(x)
    }

    pub fn inverse_lift(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn domain_len(&self) -> f64 {
        self.domain.1 - self.domain.0
    }
}

/// Where the point 𝒜 sits and how the injectivity covering is laid out is
/// part of the map data: hypotheses (H1)/(H2) are statements about these sets.
#[derive(Clone, Debug)]
pub struct IntervalMap {
    pub name: String,
    branches: Vec<BranchSpec>,
    /// Contraction region 𝒜 as disjoint non-wrapping intervals.
    contraction_region: Vec<(f64, f64)>,
    /// Injectivity covering 𝒫; the first `q` elements meet 𝒜.
    covering: Vec<(f64, f64)>,
    q: usize,
    circle: bool,
    degree: usize,
}

impl IntervalMap {
    pub fn new(
        name: impl Into<String>,
        branches: Vec<BranchSpec>,
        contraction_region: Vec<(f64, f64)>,
        covering: Vec<(f64, f64)>,
        q: usize,
        circle: bool,
        degree: usize,
    ) -> Self {
        IntervalMap {
            name: name.into(),
            branches,
            contraction_region,
            covering,
            q,
            circle,
            degree,
        }
    }

    pub fn branches(&self) -> &[BranchSpec] {
        &self.branches
    }

    pub fn contraction_region(&self) -> &[(f64, f64)] {
        &self.contraction_region
    }

    pub fn covering(&self) -> &[(f64, f64)] {
        &self.covering
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k0(&self) -> usize {
        self.covering.len()
    }

    pub fn is_circle(&self) -> bool {
        self.circle
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn contains_in_branch(&self, b: &BranchSpec, x: f64) -> bool {
        if self.circle {
            x >= b.domain.0 - 1e-14 && x < b.domain.1 - 1e-14
        } else {
            x >= b.domain.0 - 1e-12 && x <= b.domain.1 + 1e-12
        }
    }

    pub fn branch_index_of(&self, x: f64) -> Option<usize> {
        let x = if self.circle { wrap(x) } else { x };
        self.branches.iter().position(|b| self.contains_in_branch(b, x))
    }

    pub fn branch_of(&self, x: f64) -> Result<&BranchSpec> {
        self.branch_index_of(x)
            .map(|i| &self.branches[i])
            .ok_or(Error::PointOutsideDomain { x })
    }

    /// Forward step, reduced mod 1 on the circle.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let x = if self.circle { wrap(x) } else { x };
        let b = self.branch_of(x)?;
        let y = b.forward_lift(x);
        Ok(if self.circle { wrap(y) } else { y })
    }

    /// All preimages of `y`, one per branch whose range contains it.
    pub fn preimages(&self, y: f64) -> Result<Vec<(f64, usize)>> {
        let y = if self.circle { wrap(y) } else { y };
        let mut out = Vec::with_capacity(self.degree);
        for (i, b) in self.branches.iter().enumerate() {
            let (rlo, rhi) = b.range;
            let y_lift = if self.circle {
                // shift y by an integer into [rlo, rlo + 1)
                y + (rlo - y).ceil()
            } else {
                y
            };
            let inside = if self.circle {
                y_lift >= rlo - 1e-12 && y_lift < rhi - 1e-12
            } else {
                y_lift >= rlo - 1e-9 && y_lift <= rhi + 1e-9
            };
            if inside {
                let x = b.inverse_lift(y_lift.clamp(rlo, rhi));
                out.push((x, i));
            }
        }
        if out.is_empty() {
            return Err(Error::NoPreimage { y });
        }
        Ok(out)
    }

    /// Local inverse Lipschitz constant L(x) = 1/|f'(x)|.
    pub fn lipschitz_inverse(&self, x: f64) -> Result<f64> {
        let x = if self.circle { wrap(x) } else { x };
        let b = self.branch_of(x)?;
        Ok(1.0 / b.derivative_at(x).abs())
    }

    pub fn derivative_abs(&self, x: f64) -> Result<f64> {
        let x = if self.circle { wrap(x) } else { x };
        let b = self.branch_of(x)?;
        Ok(b.derivative_at(x).abs())
    }

    /// Sorted unique branch endpoints together with 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0, 1.0];
        for b in &self.branches {
            pts.push(b.domain.0);
            pts.push(b.domain.1);
        }
        for piece in self.branches.iter().flat_map(kink_points) {
            pts.push(piece);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        pts
    }

    pub fn min_branch_len(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.domain_len())
            .fold(f64::INFINITY, f64::min)
    }

    /// Orbit segment x, f(x), ..., f^n(x). Errors if an iterate escapes.
    pub fn orbit(&self, x0: f64, n: usize) -> Result<Vec<f64>> {
        let mut pts = Vec::with_capacity(n + 1);
        let mut x = if self.circle { wrap(x0) } else { x0 };
        pts.push(x);
        for step in 0..n {
            x = self
                .evaluate(x)
                .map_err(|_| Error::OrbitEscaped { step, x })?;
            pts.push(x);
        }
        Ok(pts)
    }

    /// Orbit with a 2^-50 uniform dither per step. Binary-exact maps (the
    /// doubling lift) shift the mantissa out after ~53 steps and collapse to
    /// 0; the dither keeps long orbits measure-typical while perturbing each
    /// iterate by less than 1e-15.
    pub fn orbit_dithered(&self, x0: f64, n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        const DITHER: f64 = 1.0 / (1u64 << 50) as f64;
        let mut pts = Vec::with_capacity(n + 1);
        let mut x = if self.circle { wrap(x0) } else { x0 };
        pts.push(x);
        for step in 0..n {
            x = self
                .evaluate(x)
                .map_err(|_| Error::OrbitEscaped { step, x })?;
            if self.circle {
                x = wrap(x + rng.next_f64() * DITHER);
            }
            pts.push(x);
        }
        Ok(pts)
    }
}

fn kink_points(b: &BranchSpec) -> Vec<f64> {
    // interior derivative discontinuities: bisect candidate cells and keep
    // only those where a jump survives at machine width (smooth variation
    // shrinks with the cell and drops out)
    let mut out = Vec::new();
    let n = 64;
    let (lo, hi) = b.domain;
    let h = (hi - lo) / n as f64;
    for i in 1..n {
        let mut a = lo + (i as f64 - 0.5) * h;
        let mut c = a + h;
        let mut da = b.derivative_at(a);
        let mut dc = b.derivative_at(c);
        if (dc - da).abs() <= 1e-9 * (1.0 + da.abs()) {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + c);
            let dm = b.derivative_at(m);
            if (dm - da).abs() >= (dc - dm).abs() {
                c = m;
                dc = dm;
            } else {
                a = m;
                da = dm;
            }
        }
        if (dc - da).abs() > 1e-6 * (1.0 + da.abs()) {
            out.push(0.5 * (a + c));
        }
    }
    out
}

/// Pass/fail record for (H1), (H2), (P) with the margins behind each verdict.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    /// log of the minimal preimage count (n = 1 lower bound for h(f)).
    pub h_f: f64,
    pub l_sup_inside: f64,
    pub l_sup_outside: f64,
    pub sigma: f64,
    pub q: usize,
    /// h(f) - log q - (sup phi - inf phi); +inf when q = 0.
    pub p_margin: f64,
    /// Same margin with sup phi restricted to covering elements meeting 𝒜.
    pub p_margin_weak: f64,
    pub eps0: f64,
    pub admissible_c: f64,
    pub gamma: f64,
    pub passes_h1: bool,
    pub passes_h2: bool,
    pub passes_p: bool,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.passes_h1 && self.passes_h2 && self.passes_p
    }

    pub fn failing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.passes_h1 {
            out.push("H1");
        }
        if !self.passes_h2 {
            out.push("H2");
        }
        if !self.passes_p {
            out.push("P");
        }
        out
    }
}

/// log(min_y #f^{-1}(y)) on a sample grid; exact log(#branches) for
/// full-branch maps. Only the n = 1 bound is reported.
pub fn degree_floor(map: &IntervalMap, grid_resolution: usize) -> f64 {
    let grid_resolution = grid_resolution.max(2);
    let mut min_count = usize::MAX;
    for i in 0..grid_resolution {
        let y = (i as f64 + 0.5) / grid_resolution as f64;
        let count = map.preimages(y).map(|p| p.len()).unwrap_or(0);
        min_count = min_count.min(count);
    }
    if min_count == 0 {
        f64::NEG_INFINITY
    } else {
        (min_count as f64).ln()
    }
}

fn sample_interval(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / n as f64;
    (0..=n).map(move |i| (lo + i as f64 * h).min(hi))
}

fn sup_l_on(map: &IntervalMap, pieces: &[(f64, f64)], per_piece: usize) -> f64 {
    let mut sup = f64::NEG_INFINITY;
    for &(lo, hi) in pieces {
        if hi <= lo {
            continue;
        }
        for x in sample_interval(lo, hi - 1e-12, per_piece) {
            if let Ok(l) = map.lipschitz_inverse(x) {
                sup = sup.max(l);
            }
        }
    }
    sup
}

fn complement_pieces(map: &IntervalMap) -> Vec<(f64, f64)> {
    // branch domains minus the contraction region
    let mut out = Vec::new();
    for b in map.branches() {
        let mut segs = vec![b.domain];
        for &(alo, ahi) in map.contraction_region() {
            let mut next = Vec::new();
            for (lo, hi) in segs {
                if ahi <= lo || alo >= hi {
                    next.push((lo, hi));
                } else {
                    if alo > lo {
                        next.push((lo, alo));
                    }
                    if ahi < hi {
                        next.push((ahi, hi));
                    }
                }
            }
            segs = next;
        }
        out.extend(segs);
    }
    out
}

/// Numerical default for sigma: inf of 1/L(x) = |f'(x)| over the complement
/// of 𝒜, sampled on a 10^4 grid.
pub fn auto_sigma(map: &IntervalMap) -> f64 {
    let pieces = complement_pieces(map);
    let total: f64 = pieces.iter().map(|(lo, hi)| hi - lo).sum();
    let mut inf = f64::INFINITY;
    for &(lo, hi) in &pieces {
        let n = ((hi - lo) / total * 10_000.0).ceil().max(8.0) as usize;
        for x in sample_interval(lo, hi - 1e-12, n) {
            if let Ok(d) = map.derivative_abs(x) {
                inf = inf.min(d);
            }
        }
    }
    inf
}

/// Largest workable gamma: gamma must satisfy sigma^{-(1-gamma)} L^gamma < 1
/// for the admissible c to be positive, so back off 5% from the critical
/// value and never exceed the 0.9 default.
pub fn suggested_gamma(map: &IntervalMap, sigma: f64) -> f64 {
    let l_inside = sup_l_on(map, map.contraction_region(), 2_000).max(1.0);
    if !l_inside.is_finite() || l_inside <= 1.0 {
        return 0.9;
    }
    let critical = sigma.ln() / (sigma.ln() + l_inside.ln());
    (0.95 * critical).clamp(0.05, 0.9)
}

/// Evaluates (H1), (H2), (P) and the admissibility margins for the pair
/// (map, potential) at the given sigma > 1 and gamma in (0,1).
pub fn check_hypotheses(
    map: &IntervalMap,
    potential: &Potential,
    sigma: f64,
    gamma: f64,
) -> Result<HypothesisReport> {
    if sigma <= 1.0 {
        return Err(Error::InvalidParameter(format!("sigma must exceed 1, got {sigma}")));
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0,1), got {gamma}")));
    }

    let h_f = degree_floor(map, 4096);
    let domains: Vec<(f64, f64)> = map.branches().iter().map(|b| b.domain).collect();
    let osc = oscillation(potential, &domains, 2048);

    let l_sup_inside = if map.contraction_region().is_empty() {
        1.0
    } else {
        sup_l_on(map, map.contraction_region(), 4_000)
    };
    let l_sup_outside = sup_l_on(map, &complement_pieces(map), 4_000);

    let q = map.q();
    let (p_margin, p_margin_weak, eps0) = if q == 0 {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        let log_q = (q as f64).ln();
        // weak margin: sup phi only over covering elements meeting 𝒜
        let meets: Vec<(f64, f64)> = map.covering()[..q].to_vec();
        let mut sup_meet = f64::NEG_INFINITY;
        for &(lo, hi) in &meets {
            for x in sample_interval(lo, (hi - 1e-12).max(lo), 2048) {
                sup_meet = sup_meet.max(potential.eval(x));
            }
        }
        let mut inf_all = f64::INFINITY;
        for &(lo, hi) in &domains {
            for x in sample_interval(lo, hi - 1e-12, 2048) {
                inf_all = inf_all.min(potential.eval(x));
            }
        }
        let margin = h_f - log_q - osc;
        let weak = h_f - log_q - (sup_meet - inf_all);
        let m = 1.0; // dimension
        let eps0 = ((h_f - log_q - osc - m * l_sup_inside.ln()).max(0.0)) / 2.0;
        (margin, weak, eps0)
    };

    let admissible_c =
        (-0.5 * (gamma * l_sup_inside.ln() - (1.0 - gamma) * sigma.ln())).max(0.0);

    let passes_h1 = l_sup_outside <= (1.0 / sigma) * (1.0 + 1e-9) && admissible_c > 0.0;
    let passes_h2 = q == 0 || (q as f64).ln() < h_f;
    let passes_p = p_margin > 0.0;

    Ok(HypothesisReport {
        h_f,
        l_sup_inside,
        l_sup_outside,
        sigma,
        q,
        p_margin,
        p_margin_weak,
        eps0,
        admissible_c,
        gamma,
        passes_h1,
        passes_h2,
        passes_p,
    })
}

fn bisect_increasing(f: impl Fn(f64) -> f64, lo: f64, hi: f64, y: f64) -> f64 {
    let mut a = lo;
    let mut b = hi;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(m) < y {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn linear_branch(dom: (f64, f64), range_lo: f64, slope: f64) -> BranchSpec {
    let (lo, _hi) = dom;
    let forward: RealFn = Arc::new(move |x| range_lo + slope * (x - lo));
    let inverse: RealFn = Arc::new(move |y| lo + (y - range_lo) / slope);
    let derivative: RealFn = Arc::new(move |_| slope);
    BranchSpec::new(dom, MonotoneDir::Increasing, forward, inverse, derivative)
}

/// Increasing piecewise-linear branch through the given knots (x_i, F(x_i)).
fn piecewise_linear_branch(knots: Vec<(f64, f64)>) -> BranchSpec {
    assert!(knots.len() >= 2);
    let dom = (knots[0].0, knots[knots.len() - 1].0);
    let k_fwd = knots.clone();
    let forward: RealFn = Arc::new(move |x| {
        let mut i = 0;
        while i + 2 < k_fwd.len() && x >= k_fwd[i + 1].0 {
            i += 1;
        }
        let (x0, y0) = k_fwd[i];
        let (x1, y1) = k_fwd[i + 1];
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    });
    let k_inv = knots.clone();
    let inverse: RealFn = Arc::new(move |y| {
        let mut i = 0;
        while i + 2 < k_inv.len() && y >= k_inv[i + 1].1 {
            i += 1;
        }
        let (x0, y0) = k_inv[i];
        let (x1, y1) = k_inv[i + 1];
        x0 + (x1 - x0) / (y1 - y0) * (y - y0)
    });
    let k_der = knots;
    let derivative: RealFn = Arc::new(move |x| {
        let mut i = 0;
        while i + 2 < k_der.len() && x >= k_der[i + 1].0 {
            i += 1;
        }
        let (x0, y0) = k_der[i];
        let (x1, y1) = k_der[i + 1];
        (y1 - y0) / (x1 - x0)
    });
    BranchSpec::new(dom, MonotoneDir::Increasing, forward, inverse, derivative)
}

fn doubling_map() -> IntervalMap {
    let b1 = linear_branch((0.0, 0.5), 0.0, 2.0);
    let b2 = linear_branch((0.5, 1.0), 1.0, 2.0);
    IntervalMap::new(
        "doubling",
        vec![b1, b2],
        vec![],
        vec![(0.0, 0.5), (0.5, 1.0)],
        0,
        true,
        2,
    )
}

fn linear_full_branch_map(slopes: &[f64]) -> Result<IntervalMap> {
    if slopes.len() < 2 {
        return Err(Error::InvalidParameter("need at least two slopes".into()));
    }
    if slopes.iter().any(|&s| s <= 1.0) {
        return Err(Error::InvalidParameter("slopes must exceed 1".into()));
    }
    let total: f64 = slopes.iter().map(|s| 1.0 / s).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "reciprocal slopes must sum to 1 (got {total})"
        )));
    }
    let mut branches = Vec::new();
    let mut covering = Vec::new();
    let mut lo = 0.0;
    for (i, &s) in slopes.iter().enumerate() {
        let hi = if i + 1 == slopes.len() { 1.0 } else { lo + 1.0 / s };
        branches.push(linear_branch((lo, hi), i as f64, s));
        covering.push((lo, hi));
        lo = hi;
    }
    let deg = slopes.len();
    Ok(IntervalMap::new(
        format!("linear_full_branch{slopes:?}"),
        branches,
        vec![],
        covering,
        0,
        true,
        deg,
    ))
}

fn manneville_pomeau_circle(alpha: f64, a_radius: f64) -> Result<IntervalMap> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(0.0 < a_radius && a_radius < 0.25) {
        return Err(Error::InvalidParameter("contraction radius must lie in (0, 0.25)".into()));
    }
    let two_alpha = 2f64.powf(alpha);

    let fwd1 = move |x: f64| x * (1.0 + two_alpha * x.powf(alpha));
    let forward1: RealFn = Arc::new(fwd1);
    let inverse1: RealFn = Arc::new(move |y: f64| bisect_increasing(fwd1, 0.0, 0.5, y));
    let derivative1: RealFn =
        Arc::new(move |x: f64| 1.0 + two_alpha * (1.0 + alpha) * x.powf(alpha));
    let b1 = BranchSpec::new((0.0, 0.5), MonotoneDir::Increasing, forward1, inverse1, derivative1);

    // lift: 1 + x - 2^alpha (1-x)^{1+alpha}, increasing from 1 to 2
    let fwd2 = move |x: f64| 1.0 + x - two_alpha * (1.0 - x).powf(1.0 + alpha);
    let forward2: RealFn = Arc::new(fwd2);
    let inverse2: RealFn = Arc::new(move |y: f64| bisect_increasing(fwd2, 0.5, 1.0, y));
    let derivative2: RealFn =
        Arc::new(move |x: f64| 1.0 + two_alpha * (1.0 + alpha) * (1.0 - x).powf(alpha));
    let b2 = BranchSpec::new((0.5, 1.0), MonotoneDir::Increasing, forward2, inverse2, derivative2);

    Ok(IntervalMap::new(
        format!("manneville_pomeau_circle(alpha={alpha})"),
        vec![b1, b2],
        vec![(0.0, a_radius)],
        vec![(0.0, a_radius), (a_radius, 0.5), (0.5, 1.0)],
        1,
        true,
        2,
    ))
}

/// Doubling map opened up into a slow channel near the fixed point 0.
///
/// The window has width w_eff = 5(1-s)w (so s = 1 is exactly the doubling
/// map and the canonical (0.8, w) instance deforms on a window of width w),
/// the entry slope is exactly `s`, and the lift is raised by
/// rho = 1.2(1-s)·w_eff/2 at 0 so no fixed point survives inside the
/// channel; orbits drain through it in finitely many steps. A steeper
/// compensating piece below 1 restores the degree-2 circle lift.
fn pitchfork_doubling(s: f64, w: f64) -> Result<IntervalMap> {
    if !(0.0 < s && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
    }
    if !(0.0 < w && w <= 0.08) {
        return Err(Error::InvalidParameter(format!("w must lie in (0, 0.08], got {w}")));
    }
    let w_eff = 5.0 * (1.0 - s) * w;
    if w_eff < 1e-9 {
        let mut m = doubling_map();
        m.name = format!("pitchfork_doubling(s={s},w={w})");
        return Ok(m);
    }
    let w1 = 0.5 * w_eff;
    let w2 = w_eff;
    let rho = 1.2 * (1.0 - s) * w1;
    // continuity: rejoin the 2x lift at w2, reach 2 + rho at 1
    let u = w1;
    let m3 = 2.0 + rho / u;
    let x2 = 1.0 - u + 2.0 * u / m3;

    let b1 = piecewise_linear_branch(vec![
        (0.0, rho),
        (w1, rho + s * w1),
        (w2, 2.0 * w2),
        (0.5, 1.0),
    ]);
    let b2 = piecewise_linear_branch(vec![(0.5, 1.0), (1.0 - u, 2.0 - 2.0 * u), (x2, 2.0)]);
    let b3 = piecewise_linear_branch(vec![(x2, 2.0), (1.0, 2.0 + rho)]);

    Ok(IntervalMap::new(
        format!("pitchfork_doubling(s={s},w={w})"),
        vec![b1, b2, b3],
        vec![(0.0, w1)],
        vec![(0.0, w1), (w1, 0.5), (0.5, x2), (x2, 1.0)],
        1,
        true,
        2,
    ))
}

fn cantor_unimodal(a_radius: f64) -> Result<IntervalMap> {
    if !(0.0 < a_radius && a_radius < 0.2) {
        return Err(Error::InvalidParameter("contraction radius must lie in (0, 0.2)".into()));
    }
    let cubic = |x: f64| -8.0 * x * (x - 1.0) * (x + 0.125);
    let cubic_d = |x: f64| -24.0 * x * x + 14.0 * x + 1.0;
    // critical point of the cubic; f exceeds 1 there, so f^{-1}([0,1]) has
    // two components
    let x_crit = (14.0 + 292f64.sqrt()) / 48.0;
    let u = bisect_increasing(cubic, 0.0, x_crit, 1.0);
    let v = bisect_increasing(move |x| -cubic(x), x_crit, 1.0, -1.0);

    let forward1: RealFn = Arc::new(cubic);
    let inverse1: RealFn = Arc::new(move |y: f64| bisect_increasing(cubic, 0.0, u, y));
    let derivative1: RealFn = Arc::new(cubic_d);
    let b1 = BranchSpec::new((0.0, u), MonotoneDir::Increasing, forward1, inverse1, derivative1);

    let forward2: RealFn = Arc::new(cubic);
    let inverse2: RealFn =
        Arc::new(move |y: f64| bisect_increasing(move |x| -cubic(x), v, 1.0, -y));
    let derivative2: RealFn = Arc::new(cubic_d);
    let b2 = BranchSpec::new((v, 1.0), MonotoneDir::Decreasing, forward2, inverse2, derivative2);

    Ok(IntervalMap::new(
        "cantor_unimodal",
        vec![b1, b2],
        vec![(0.0, a_radius)],
        vec![(0.0, a_radius), (a_radius, u), (v, 1.0)],
        1,
        false,
        2,
    ))
}

/// Builtin map constructor; 𝒜 and 𝒫 are preset per map.
pub fn builtin_map(name: &str, params: &[f64]) -> Result<IntervalMap> {
    match name {
        "doubling" => Ok(doubling_map()),
        "linear_full_branch" => linear_full_branch_map(params),
        "manneville_pomeau_circle" => {
            let alpha = *params
                .first()
                .ok_or_else(|| Error::InvalidParameter("alpha required".into()))?;
            let a = params.get(1).copied().unwrap_or(0.05);
            manneville_pomeau_circle(alpha, a)
        }
        "pitchfork_doubling" => {
            let s = *params
                .first()
                .ok_or_else(|| Error::InvalidParameter("s required".into()))?;
            let w = params.get(1).copied().unwrap_or(0.05);
            pitchfork_doubling(s, w)
        }
        "cantor_unimodal" => {
            let a = params.first().copied().unwrap_or(0.05);
            cantor_unimodal(a)
        }
        other => Err(Error::UnknownMap(other.to_string())),
    }
}

pub const BUILTIN_MAPS: &[&str] = &[
    "doubling",
    "linear_full_branch",
    "manneville_pomeau_circle",
    "pitchfork_doubling",
    "cantor_unimodal",
];
