use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]`. Arithmetic rounds outward by one ulp; libm
/// based elementals widen by a few ulps to absorb their own error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(v: f64) -> f64 {
    v.next_down()
}

fn up(v: f64) -> f64 {
    v.next_up()
}

fn widen_down(v: f64) -> f64 {
    v - 4.0 * f64::EPSILON * v.abs() - f64::MIN_POSITIVE
}

fn widen_up(v: f64) -> f64 {
    v + 4.0 * f64::EPSILON * v.abs() + f64::MIN_POSITIVE
}

/// Whether some `offset + k * period` lies in `[a, b]`, with a small
/// tolerance that only ever answers yes more often.
fn hits(a: f64, b: f64, offset: f64, period: f64) -> bool {
    let k = ((a - offset) / period).floor() - 1.0;
    (0..4).any(|i| {
        let p = offset + (k + i as f64) * period;
        let t = 8.0 * f64::EPSILON * (1.0 + p.abs());
        p >= a - t && p <= b + t
    })
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(down(self.lo + o.lo), up(self.hi + o.hi))
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(down(self.lo - o.hi), up(self.hi - o.lo))
    }

    pub fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }

    pub fn mul(self, o: Self) -> Self {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(down(lo), up(hi))
    }

    /// Reciprocal; `None` if the interval contains zero.
    pub fn recip(self) -> Option<Self> {
        if self.contains(0.0) {
            return None;
        }
        Some(Self::new(down(1.0 / self.hi), up(1.0 / self.lo)))
    }

    pub fn div(self, o: Self) -> Option<Self> {
        let p = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        if o.contains(0.0) {
            return None;
        }
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self::new(down(lo), up(hi)))
    }

    pub fn abs(self) -> Self {
        Self::new(self.mig(), self.mag())
    }

    pub fn min(self, o: Self) -> Self {
        Self::new(self.lo.min(o.lo), self.hi.min(o.hi))
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    pub fn square(self) -> Self {
        let (g, m) = (self.mig(), self.mag());
        Self::new(down(g * g).max(0.0), up(m * m))
    }

    pub fn powi(self, k: u32) -> Self {
        if k % 2 == 0 {
            let (g, m) = (self.mig(), self.mag());
            Self::new(widen_down(g.powi(k as i32)).max(0.0), widen_up(m.powi(k as i32)))
        } else {
            Self::new(
                widen_down(self.lo.powi(k as i32)),
                widen_up(self.hi.powi(k as i32)),
            )
        }
    }

    pub fn sin(self) -> Self {
        if self.width() >= 2.0 * PI {
            return Self::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let hi = if hits(self.lo, self.hi, FRAC_PI_2, 2.0 * PI) {
            1.0
        } else {
            widen_up(a.max(b)).min(1.0)
        };
        let lo = if hits(self.lo, self.hi, -FRAC_PI_2, 2.0 * PI) {
            -1.0
        } else {
            widen_down(a.min(b)).max(-1.0)
        };
        Self::new(lo, hi)
    }

    pub fn cos(self) -> Self {
        if self.width() >= 2.0 * PI {
            return Self::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.cos(), self.hi.cos());
        let hi = if hits(self.lo, self.hi, 0.0, 2.0 * PI) {
            1.0
        } else {
            widen_up(a.max(b)).min(1.0)
        };
        let lo = if hits(self.lo, self.hi, PI, 2.0 * PI) {
            -1.0
        } else {
            widen_down(a.min(b)).max(-1.0)
        };
        Self::new(lo, hi)
    }

    /// Largest `|sin|` over the interval.
    pub fn sup_abs_sin(self) -> f64 {
        if self.width() >= PI || hits(self.lo, self.hi, FRAC_PI_2, PI) {
            1.0
        } else {
            widen_up(self.lo.sin().abs().max(self.hi.sin().abs())).min(1.0)
        }
    }

    /// Largest `|cos|` over the interval.
    pub fn sup_abs_cos(self) -> f64 {
        if self.width() >= PI || hits(self.lo, self.hi, 0.0, PI) {
            1.0
        } else {
            widen_up(self.lo.cos().abs().max(self.hi.cos().abs())).min(1.0)
        }
    }

    pub fn exp(self) -> Self {
        Self::new(widen_down(self.lo.exp()).max(0.0), widen_up(self.hi.exp()))
    }

    /// `None` unless the interval is strictly positive.
    pub fn ln(self) -> Option<Self> {
        if self.lo <= 0.0 {
            return None;
        }
        Some(Self::new(widen_down(self.lo.ln()), widen_up(self.hi.ln())))
    }

    /// `None` if the interval reaches below zero.
    pub fn sqrt(self) -> Option<Self> {
        if self.lo < 0.0 {
            return None;
        }
        Some(Self::new(
            widen_down(self.lo.sqrt()).max(0.0),
            widen_up(self.hi.sqrt()),
        ))
    }

    /// Widens a bound obtained from a libm function.
    pub(crate) fn bound(v: f64) -> f64 {
        widen_up(v)
    }
}

/// `a + b` rounded up; exact sums are returned unchanged.
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// `a * b` rounded up; exact products are returned unchanged.
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}
