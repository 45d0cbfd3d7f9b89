//! Truncated Taylor jets of order ≤ 3 over `Complex64`.
//!
//! A jet stores normalized Taylor coefficients `f(x₀ + ε) = Σ c_k ε^k`, so
//! the k-th derivative is `k! · c_k`. Jets carry their own truncation
//! order; binary operations keep the smaller one and differentiation
//! lowers it by one.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const MAX_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [Complex64; MAX_ORDER + 1],
    order: usize,
}

impl Jet {
    pub fn constant(value: Complex64) -> Self {
        let mut c = [ZERO; MAX_ORDER + 1];
        c[0] = value;
        Self { c, order: MAX_ORDER }
    }

    pub fn real_constant(value: f64) -> Self {
        Self::constant(Complex64::new(value, 0.0))
    }

    /// The independent variable `x₀ + ε`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [ZERO; MAX_ORDER + 1];
        c[0] = Complex64::new(x0, 0.0);
        c[1] = ONE;
        Self { c, order: MAX_ORDER }
    }

    /// Builds a jet from derivative values `f, f', f'', f'''`.
    pub fn from_derivatives(d: [Complex64; MAX_ORDER + 1]) -> Self {
        Self {
            c: [d[0], d[1], d[2] / 2.0, d[3] / 6.0],
            order: MAX_ORDER,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> Complex64 {
        assert!(k <= self.order, "derivative order {k} exceeds jet order {}", self.order);
        let factorial = [1.0, 1.0, 2.0, 6.0][k];
        self.c[k] * factorial
    }

    /// Jet of the derivative function; truncation order drops by one.
    pub fn differentiate(&self) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let mut c = [ZERO; MAX_ORDER + 1];
        for k in 0..self.order {
            c[k] = self.c[k + 1] * (k as f64 + 1.0);
        }
        Self { c, order: self.order - 1 }
    }

    pub fn truncate(mut self, order: usize) -> Self {
        let order = order.min(self.order);
        for k in order + 1..=MAX_ORDER {
            self.c[k] = ZERO;
        }
        self.order = order;
        self
    }

    pub fn scale(mut self, factor: Complex64) -> Self {
        for k in 0..=self.order {
            self.c[k] *= factor;
        }
        self
    }

    pub fn recip(&self) -> Self {
        let mut h = [ZERO; MAX_ORDER + 1];
        h[0] = ONE / self.c[0];
        for k in 1..=self.order {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.c[j] * h[k - j];
            }
            h[k] = -acc * h[0];
        }
        Self { c: h, order: self.order }
    }

    pub fn exp(&self) -> Self {
        let mut h = [ZERO; MAX_ORDER + 1];
        h[0] = self.c[0].exp();
        for k in 1..=self.order {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.c[j] * h[k - j] * j as f64;
            }
            h[k] = acc / k as f64;
        }
        Self { c: h, order: self.order }
    }

    /// Principal-branch logarithm.
    pub fn ln(&self) -> Self {
        let mut h = [ZERO; MAX_ORDER + 1];
        h[0] = self.c[0].ln();
        for k in 1..=self.order {
            let mut acc = ZERO;
            for j in 1..k {
                acc += h[j] * self.c[k - j] * j as f64;
            }
            h[k] = (self.c[k] - acc / k as f64) / self.c[0];
        }
        Self { c: h, order: self.order }
    }

    /// Principal-branch real power `f^a`.
    pub fn powf(&self, a: f64) -> Self {
        let mut h = [ZERO; MAX_ORDER + 1];
        h[0] = (self.c[0].ln() * a).exp();
        for k in 1..=self.order {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.c[j] * h[k - j] * (a * j as f64 - (k - j) as f64);
            }
            h[k] = acc / (self.c[0] * k as f64);
        }
        Self { c: h, order: self.order }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Jet::real_constant(1.0).truncate(self.order);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    /// Composition `F ∘ self`, where `outer` holds `F, F', F'', F'''`
    /// evaluated at `self.value()`.
    pub fn compose(&self, outer: [Complex64; MAX_ORDER + 1]) -> Self {
        let mut delta = *self;
        delta.c[0] = ZERO;
        let mut out = Jet::constant(outer[0]).truncate(self.order);
        let mut power = Jet::real_constant(1.0).truncate(self.order);
        let factorial = [1.0, 1.0, 2.0, 6.0];
        for (k, fk) in outer.iter().enumerate().skip(1).take(self.order) {
            power = power * delta;
            out = out + power.scale(*fk / factorial[k]);
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [ZERO; MAX_ORDER + 1];
        for k in 0..=order {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, order }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for k in 0..=self.order {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [ZERO; MAX_ORDER + 1];
        for k in 0..=order {
            for j in 0..=k {
                c[k] += self.c[j] * rhs.c[k - j];
            }
        }
        Jet { c, order }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Complex64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(Complex64::new(rhs, 0.0))
    }
}
