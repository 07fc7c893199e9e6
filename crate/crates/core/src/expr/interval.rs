//! Closed real intervals with outward-widened arithmetic.
//!
//! Every operation widens its result by a relative `1e-12` on both ends
//! instead of switching rounding modes. The widening dominates the rounding
//! error of each primitive operation, so a point evaluation of the same
//! expression in `f64` always lands inside the interval result.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Relative outward widening applied to every interval endpoint.
pub const WIDEN_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics if `lo > hi` or either end is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn try_new(lo: f64, hi: f64) -> Option<Self> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        let m = 0.5 * (self.lo + self.hi);
        if m.is_finite() {
            m.clamp(self.lo, self.hi)
        } else {
            0.5 * self.lo + 0.5 * self.hi
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::try_new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Outward widening by [`WIDEN_REL`].
    pub fn widen(self) -> Interval {
        Interval {
            lo: self.lo - WIDEN_REL * self.lo.abs(),
            hi: self.hi + WIDEN_REL * self.hi.abs(),
        }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
        .widen()
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo - o.hi,
            hi: self.hi - o.lo,
        }
        .widen()
    }

    pub fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(self, o: Interval) -> Interval {
        let p = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }.widen()
    }

    pub fn scale(self, c: f64) -> Interval {
        Interval::point(c).mul(self)
    }

    pub fn powi(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        if k == 1 {
            return self;
        }
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        let raw = if k % 2 == 1 {
            Interval { lo: a, hi: b }
        } else if self.lo >= 0.0 {
            Interval { lo: a, hi: b }
        } else if self.hi <= 0.0 {
            Interval { lo: b, hi: a }
        } else {
            Interval {
                lo: 0.0,
                hi: a.max(b),
            }
        };
        // powi rounds once per squaring step; scale the widening accordingly
        let steps = 32 - k.leading_zeros();
        let w = WIDEN_REL * f64::from(steps.max(1));
        Interval {
            lo: raw.lo - w * raw.lo.abs(),
            hi: raw.hi + w * raw.hi.abs(),
        }
    }

    pub fn sin(self) -> Interval {
        periodic_range(self, f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(self) -> Interval {
        periodic_range(self, f64::cos, 0.0, PI)
    }

    pub fn max(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    pub fn min(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    /// Splits at `at`, which must lie inside the interval.
    pub fn split_at(&self, at: f64) -> (Interval, Interval) {
        (
            Interval {
                lo: self.lo,
                hi: at,
            },
            Interval {
                lo: at,
                hi: self.hi,
            },
        )
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Range of a 2π-periodic function over an interval, by locating its maxima
/// (at `peak + 2kπ`) and minima (at `trough + 2kπ`).
fn periodic_range(x: Interval, func: fn(f64) -> f64, peak: f64, trough: f64) -> Interval {
    if !x.is_finite() || x.width() >= TAU {
        return Interval { lo: -1.0, hi: 1.0 };
    }
    let fa = func(x.lo);
    let fb = func(x.hi);
    let mut lo = fa.min(fb);
    let mut hi = fa.max(fb);
    // slack absorbs the rounding of peak + 2kπ
    let slack = 1e-9 * (1.0 + x.lo.abs().max(x.hi.abs()));
    let hits = |target: f64| {
        let k = ((x.lo - target - slack) / TAU).ceil();
        target + k * TAU <= x.hi + slack
    };
    if hits(peak) {
        hi = 1.0;
    }
    if hits(trough) {
        lo = -1.0;
    }
    let w = Interval { lo, hi }.widen();
    // absolute slack: sin/cos are accurate to an ulp of 1, not of the result
    Interval {
        lo: (w.lo - 1e-15).max(-1.0),
        hi: (w.hi + 1e-15).min(1.0),
    }
}

/// An axis-aligned box: one interval per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox(pub Vec<Interval>);

impl IntervalBox {
    pub fn new(dims: Vec<Interval>) -> Self {
        IntervalBox(dims)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dims(&self) -> &[Interval] {
        &self.0
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.0.iter().map(Interval::mid).collect()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.len() == self.0.len() && self.0.iter().zip(p).all(|(iv, v)| iv.contains(*v))
    }

    pub fn contains_box(&self, other: &IntervalBox) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.contains_interval(b))
    }

    pub fn intersect(&self, other: &IntervalBox) -> Option<IntervalBox> {
        if self.0.len() != other.0.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()
            .map(IntervalBox)
    }

    pub fn max_width(&self) -> f64 {
        self.0.iter().map(Interval::width).fold(0.0, f64::max)
    }

    /// Index of the widest dimension, widths normalized by `scale`.
    pub fn widest_dim(&self, scale: Option<&[f64]>) -> usize {
        let mut best = 0;
        let mut best_w = f64::NEG_INFINITY;
        for (i, iv) in self.0.iter().enumerate() {
            let s = scale.map_or(1.0, |s| if s[i] > 0.0 { s[i] } else { 1.0 });
            let w = iv.width() / s;
            if w > best_w {
                best_w = w;
                best = i;
            }
        }
        best
    }

    pub fn bisect(&self, dim: usize) -> (IntervalBox, IntervalBox) {
        let at = self.0[dim].mid();
        self.split(dim, at)
    }

    pub fn split(&self, dim: usize, at: f64) -> (IntervalBox, IntervalBox) {
        let (l, r) = self.0[dim].split_at(at);
        let mut a = self.clone();
        let mut b = self.clone();
        a.0[dim] = l;
        b.0[dim] = r;
        (a, b)
    }

    pub fn concat(parts: &[&IntervalBox]) -> IntervalBox {
        IntervalBox(parts.iter().flat_map(|b| b.0.iter().copied()).collect())
    }

    pub fn volume(&self) -> f64 {
        self.0.iter().map(Interval::width).product()
    }
}
