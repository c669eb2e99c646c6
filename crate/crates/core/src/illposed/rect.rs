//! Axis-aligned closed rectangles in the frequency plane.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    /// `{a + b : a in self, b in other}`.
    pub fn sum(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    /// `{c - b : b in self}`.
    pub fn reflect_from(&self, c: f64) -> Interval {
        Interval {
            lo: c - self.hi,
            hi: c - self.lo,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xi: Interval,
    pub eta: Interval,
}

impl Rect {
    pub fn new(xi: (f64, f64), eta: (f64, f64)) -> Self {
        Self {
            xi: Interval::new(xi.0, xi.1),
            eta: Interval::new(eta.0, eta.1),
        }
    }

    pub fn area(&self) -> f64 {
        self.xi.len() * self.eta.len()
    }

    pub fn neg(&self) -> Rect {
        Rect {
            xi: self.xi.neg(),
            eta: self.eta.neg(),
        }
    }

    /// Closed intersection; degenerate (zero-area) overlaps are kept.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        Some(Rect {
            xi: self.xi.intersect(&other.xi)?,
            eta: self.eta.intersect(&other.eta)?,
        })
    }

    /// Minkowski sum.
    pub fn sum(&self, other: &Rect) -> Rect {
        Rect {
            xi: self.xi.sum(&other.xi),
            eta: self.eta.sum(&other.eta),
        }
    }

    /// `zeta - self`.
    pub fn reflect_from(&self, zeta: (f64, f64)) -> Rect {
        Rect {
            xi: self.xi.reflect_from(zeta.0),
            eta: self.eta.reflect_from(zeta.1),
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        self.xi.contains(p.0) && self.eta.contains(p.1)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.xi.lo + self.xi.hi), 0.5 * (self.eta.lo + self.eta.hi))
    }
}

/// `{z1 : z1 in a, zeta - z1 in b}`.
pub fn convolution_cell(zeta: (f64, f64), a: &Rect, b: &Rect) -> Option<Rect> {
    a.intersect(&b.reflect_from(zeta))
}
