//! Forward-mode dual numbers over the soft parameter vector.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of differentiable parameters in [`super::SoftParams`].
pub const N_PARAMS: usize = 13;

/// Scalar operations shared by plain values and dual numbers.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::constant(k)
    }

    /// Hard maximum; the derivative follows the selected argument.
    fn max(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Value with its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: [f64; N_PARAMS],
}

impl Dual {
    /// The `i`-th input variable.
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; N_PARAMS];
        g[i] = 1.0;
        Dual { v, g }
    }

    fn chain(self, v: f64, d: f64) -> Self {
        Dual { v, g: self.g.map(|x| x * d) }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, g: std::array::from_fn(|i| self.g[i] + o.g[i]) }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, g: std::array::from_fn(|i| self.g[i] - o.g[i]) }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, g: std::array::from_fn(|i| self.g[i] * o.v + o.g[i] * self.v) }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual { v: self.v * inv, g: std::array::from_fn(|i| (self.g[i] - self.v * inv * o.g[i]) * inv) }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, g: self.g.map(|x| -x) }
    }
}

impl Scalar for Dual {
    fn constant(v: f64) -> Self {
        Dual { v, g: [0.0; N_PARAMS] }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::var(2.0, 0);
        let y = Dual::var(3.0, 1);
        let f = x * y / (x + y);
        assert!((f.v - 1.2).abs() < 1e-15);
        assert!((f.g[0] - 9.0 / 25.0).abs() < 1e-15);
        assert!((f.g[1] - 4.0 / 25.0).abs() < 1e-15);
        let s = x.sin().exp().ln();
        assert!((s.g[0] - 2f64.cos()).abs() < 1e-15);
    }
}
