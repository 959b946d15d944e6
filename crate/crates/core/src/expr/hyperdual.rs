//! Hyper-dual numbers `a + b·ε₁ + c·ε₂ + d·ε₁ε₂` with `ε₁² = ε₂² = 0`.
//!
//! Seeding coordinate `k` along `ε₁` and coordinate `m` along `ε₂` yields
//! `∂ₖf` in the `ε₁` part and `∂ₖ∂ₘf` in the `ε₁ε₂` part, with no truncation
//! error.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

// 0·∞ must stay 0 for parts that were never seeded (constant subtrees).
#[inline]
fn scale(f: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        f * e
    }
}

impl HyperDual {
    pub const fn constant(re: f64) -> Self {
        Self {
            re,
            e1: 0.0,
            e2: 0.0,
            e12: 0.0,
        }
    }

    pub const fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        Self { re, e1, e2, e12 }
    }

    /// Applies a scalar function given its value and first two derivatives at `re`.
    #[inline]
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let cross = if self.e1 == 0.0 || self.e2 == 0.0 {
            0.0
        } else {
            f2 * self.e1 * self.e2
        };
        Self {
            re: f0,
            e1: scale(f1, self.e1),
            e2: scale(f1, self.e2),
            e12: scale(f1, self.e12) + cross,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.e1 == 0.0 && self.e2 == 0.0 && self.e12 == 0.0
    }

    pub fn recip(self) -> Self {
        let x = self.re;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            scale(self.re, o.e1) + scale(o.re, self.e1),
            scale(self.re, o.e2) + scale(o.re, self.e2),
            scale(self.re, o.e12)
                + scale(self.e1, o.e2)
                + scale(self.e2, o.e1)
                + scale(o.re, self.e12),
        )
    }
}

impl Div for HyperDual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if o.is_constant() {
            let r = 1.0 / o.re;
            return Self::new(self.re * r, scale(r, self.e1), scale(r, self.e2), scale(r, self.e12));
        }
        self * o.recip()
    }
}
