//! Circle arithmetic on [0, 1): wrapped distances, signed offsets, and arcs.

/// Reduce to [0, 1).
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Circle distance min(|x-y|, 1-|x-y|).
pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Signed offset of `x` relative to `base`, wrapped into [-0.5, 0.5).
pub fn signed_offset(x: f64, base: f64) -> f64 {
    let d = (x - base).rem_euclid(1.0);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Closed arc on the circle, stored as a left endpoint in [0, 1) and a length.
/// Length 1 means the whole circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub lo: f64,
    pub len: f64,
}

impl Arc {
    pub fn new(lo: f64, len: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&len));
        Arc { lo: wrap(lo), len }
    }

    /// Arc centered at `c` with radius `r` (r <= 0.5).
    pub fn ball(c: f64, r: f64) -> Self {
        Arc::new(c - r, (2.0 * r).min(1.0))
    }

    pub fn hi(&self) -> f64 {
        wrap(self.lo + self.len)
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.len >= 1.0 {
            return true;
        }
        (x - self.lo).rem_euclid(1.0) <= self.len + 1e-15
    }

    /// Split into at most two non-wrapping intervals in [0, 1].
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        if self.len >= 1.0 {
            return vec![(0.0, 1.0)];
        }
        let hi = self.lo + self.len;
        if hi <= 1.0 + 1e-15 {
            vec![(self.lo, hi.min(1.0))]
        } else {
            vec![(self.lo, 1.0), (0.0, hi - 1.0)]
        }
    }
}

/// Overlap length of two plain intervals.
pub fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}
