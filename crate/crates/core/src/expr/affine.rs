//! First-order affine forms: `c + Σ a_i ε_i ± r` with `ε_i ∈ [-1, 1]`.
//!
//! One noise symbol per box dimension. Non-affine operations fold their
//! linearization error into `r`. Rounding is absorbed the same way the
//! interval type does it, by a relative slack on every result.

use super::interval::{Interval, WIDEN_REL};

#[derive(Debug, Clone)]
pub struct Affine {
    c: f64,
    a: Vec<f64>,
    r: f64,
}

impl Affine {
    pub fn constant(v: f64, n: usize) -> Self {
        Affine {
            c: v,
            a: vec![0.0; n],
            r: 0.0,
        }
    }

    pub fn variable(i: usize, iv: Interval, n: usize) -> Self {
        let mut a = vec![0.0; n];
        let c = iv.mid();
        let rad = (iv.hi - c).max(c - iv.lo);
        a[i] = rad;
        Affine {
            c,
            a,
            r: WIDEN_REL * (c.abs() + rad),
        }
    }

    pub fn from_interval(iv: Interval, n: usize) -> Self {
        let c = iv.mid();
        let rad = (iv.hi - c).max(c - iv.lo);
        Affine {
            c,
            a: vec![0.0; n],
            r: rad + WIDEN_REL * (c.abs() + rad),
        }
    }

    fn linear_radius(&self) -> f64 {
        self.a.iter().map(|v| v.abs()).sum()
    }

    pub fn radius(&self) -> f64 {
        self.linear_radius() + self.r
    }

    pub fn range(&self) -> Interval {
        let rad = self.radius();
        let slack = WIDEN_REL * (self.c.abs() + rad);
        Interval {
            lo: self.c - rad - slack,
            hi: self.c + rad + slack,
        }
    }

    fn rounding(&self) -> f64 {
        // each coefficient update rounds once; n terms, relative 1e-12 each
        WIDEN_REL * (self.c.abs() + self.linear_radius())
    }

    pub fn add(&self, o: &Affine) -> Affine {
        let mut out = Affine {
            c: self.c + o.c,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
            r: self.r + o.r,
        };
        out.r += out.rounding();
        out
    }

    pub fn sub(&self, o: &Affine) -> Affine {
        let mut out = Affine {
            c: self.c - o.c,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
            r: self.r + o.r,
        };
        out.r += out.rounding();
        out
    }

    pub fn mul(&self, o: &Affine) -> Affine {
        let mut out = Affine {
            c: self.c * o.c,
            a: self
                .a
                .iter()
                .zip(&o.a)
                .map(|(x, y)| self.c * y + o.c * x)
                .collect(),
            r: self.c.abs() * o.r + o.c.abs() * self.r + self.radius() * o.radius(),
        };
        let terms = self.c.abs() * o.linear_radius() + o.c.abs() * self.linear_radius();
        out.r += out.rounding() + WIDEN_REL * terms;
        out
    }

    /// Linearization of `sin` (or `cos` when `cosine`) around the center,
    /// with the Lagrange remainder `rad²/2`. Falls back to `iv` when the
    /// hull is narrower.
    pub fn sin_cos(&self, iv: Interval, cosine: bool) -> Affine {
        let n = self.a.len();
        let rad = self.radius();
        let (v, slope) = if cosine {
            (self.c.cos(), -self.c.sin())
        } else {
            (self.c.sin(), self.c.cos())
        };
        let remainder = 0.5 * rad * rad;
        let mut lin = Affine {
            c: v,
            a: self.a.iter().map(|x| slope * x).collect(),
            r: slope.abs() * self.r + remainder,
        };
        lin.r += lin.rounding() + 1e-15;
        let fallback = Affine::from_interval(iv, n);
        if fallback.radius() < lin.radius() {
            fallback
        } else {
            lin
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_symmetric_variable() {
        let x = Affine::variable(0, Interval::new(-1.0, 1.0), 1);
        let sq = x.mul(&x);
        let r = sq.range();
        // AF1 gives [-1, 1]; the interval intersection later tightens it
        assert!(r.lo <= 0.0 && r.hi >= 1.0);
    }

    #[test]
    fn cancellation() {
        let x = Affine::variable(0, Interval::new(2.0, 4.0), 1);
        let d = x.sub(&x);
        let r = d.range();
        assert!(r.lo > -1e-10 && r.hi < 1e-10);
    }

    #[test]
    fn sine_linearization_contains_samples() {
        let iv = Interval::new(0.3, 0.5);
        let x = Affine::variable(0, iv, 1);
        let s = x.sin_cos(iv.sin(), false).range();
        for k in 0..=20 {
            let p = 0.3 + 0.01 * k as f64;
            assert!(s.contains(p.sin()));
        }
    }
}
