//! Third-order two-variable jets: a value together with every partial
//! derivative up to order three, propagated through arithmetic by the
//! product, quotient, and chain rules.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value and partial derivatives of a scalar function of (x, y) up to order 3.
///
/// An expression built from the seeded coordinate jets [`Jet3::x`] and
/// [`Jet3::y`] evaluates to the exact derivatives of that expression, up to
/// floating-point round-off. Field order is val, ∂x, ∂y, ∂xx, ∂xy, ∂yy,
/// ∂xxx, ∂xxy, ∂xyy, ∂yyy.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Jet3 {
    pub val: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
    pub dxxx: f64,
    pub dxxy: f64,
    pub dxyy: f64,
    pub dyyy: f64,
}

impl Jet3 {
    /// Jet of the constant function c.
    pub const fn constant(c: f64) -> Self {
        Self {
            val: c,
            dx: 0.0,
            dy: 0.0,
            dxx: 0.0,
            dxy: 0.0,
            dyy: 0.0,
            dxxx: 0.0,
            dxxy: 0.0,
            dxyy: 0.0,
            dyyy: 0.0,
        }
    }

    /// Jet of the coordinate function x at the point x = v.
    pub const fn x(v: f64) -> Self {
        let mut j = Self::constant(v);
        j.dx = 1.0;
        j
    }

    /// Jet of the coordinate function y at the point y = v.
    pub const fn y(v: f64) -> Self {
        let mut j = Self::constant(v);
        j.dy = 1.0;
        j
    }

    /// ∂xx + ∂yy.
    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }

    /// Squared gradient magnitude ∂x² + ∂y².
    pub fn grad_sq(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.val.is_finite()
            && self.dx.is_finite()
            && self.dy.is_finite()
            && self.dxx.is_finite()
            && self.dxy.is_finite()
            && self.dyy.is_finite()
            && self.dxxx.is_finite()
            && self.dxxy.is_finite()
            && self.dxyy.is_finite()
            && self.dyyy.is_finite()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.val
            .abs()
            .max(self.dx.abs())
            .max(self.dy.abs())
            .max(self.dxx.abs())
            .max(self.dxy.abs())
            .max(self.dyy.abs())
            .max(self.dxxx.abs())
            .max(self.dxxy.abs())
            .max(self.dxyy.abs())
            .max(self.dyyy.abs())
    }

    /// Chain rule for a scalar function applied to this jet, given the
    /// function's value and first three derivatives at `self.val`.
    fn compose1(self, c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        let g = self;
        Self {
            val: c0,
            dx: c1 * g.dx,
            dy: c1 * g.dy,
            dxx: c2 * g.dx * g.dx + c1 * g.dxx,
            dxy: c2 * g.dx * g.dy + c1 * g.dxy,
            dyy: c2 * g.dy * g.dy + c1 * g.dyy,
            dxxx: c3 * g.dx * g.dx * g.dx + 3.0 * c2 * g.dx * g.dxx + c1 * g.dxxx,
            dxxy: c3 * g.dx * g.dx * g.dy
                + c2 * (2.0 * g.dx * g.dxy + g.dxx * g.dy)
                + c1 * g.dxxy,
            dxyy: c3 * g.dx * g.dy * g.dy
                + c2 * (2.0 * g.dy * g.dxy + g.dyy * g.dx)
                + c1 * g.dxyy,
            dyyy: c3 * g.dy * g.dy * g.dy + 3.0 * c2 * g.dy * g.dyy + c1 * g.dyyy,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        self.compose1(e, e, e, e)
    }

    /// Natural logarithm of |value|; valid away from zero, where the
    /// derivative entries are those of ln composed with the absolute value.
    pub fn ln_abs(self) -> Self {
        let v = self.val;
        self.compose1(v.abs().ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        let v = self.val;
        self.compose1(r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v))
    }

    pub fn recip(self) -> Self {
        let v = self.val;
        self.compose1(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v), -6.0 / (v * v * v * v))
    }

    /// Real power with a real exponent; for negative bases prefer
    /// [`Jet3::powi`].
    pub fn powf(self, n: f64) -> Self {
        let v = self.val;
        self.compose1(
            v.powf(n),
            n * v.powf(n - 1.0),
            n * (n - 1.0) * v.powf(n - 2.0),
            n * (n - 1.0) * (n - 2.0) * v.powf(n - 3.0),
        )
    }

    /// Integer power by repeated multiplication, exact at zero bases.
    pub fn powi(self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut out = Self::constant(1.0);
        for _ in 0..n {
            out = out * self;
        }
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.compose1(s, c, -s, -c)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.compose1(c, -s, -c, s)
    }

    pub fn sinh(self) -> Self {
        let s = self.val.sinh();
        let c = self.val.cosh();
        self.compose1(s, c, s, c)
    }

    pub fn cosh(self) -> Self {
        let s = self.val.sinh();
        let c = self.val.cosh();
        self.compose1(c, s, c, s)
    }

    pub fn tanh(self) -> Self {
        let t = self.val.tanh();
        let sech2 = 1.0 - t * t;
        self.compose1(t, sech2, -2.0 * t * sech2, sech2 * (6.0 * t * t - 2.0))
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, b: Jet3) -> Jet3 {
        Jet3 {
            val: self.val + b.val,
            dx: self.dx + b.dx,
            dy: self.dy + b.dy,
            dxx: self.dxx + b.dxx,
            dxy: self.dxy + b.dxy,
            dyy: self.dyy + b.dyy,
            dxxx: self.dxxx + b.dxxx,
            dxxy: self.dxxy + b.dxxy,
            dxyy: self.dxyy + b.dxyy,
            dyyy: self.dyyy + b.dyyy,
        }
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, b: Jet3) -> Jet3 {
        self + (-b)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        Jet3 {
            val: -self.val,
            dx: -self.dx,
            dy: -self.dy,
            dxx: -self.dxx,
            dxy: -self.dxy,
            dyy: -self.dyy,
            dxxx: -self.dxxx,
            dxxy: -self.dxxy,
            dxyy: -self.dxyy,
            dyyy: -self.dyyy,
        }
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, b: Jet3) -> Jet3 {
        let a = self;
        Jet3 {
            val: a.val * b.val,
            dx: a.dx * b.val + a.val * b.dx,
            dy: a.dy * b.val + a.val * b.dy,
            dxx: a.dxx * b.val + 2.0 * a.dx * b.dx + a.val * b.dxx,
            dxy: a.dxy * b.val + a.dx * b.dy + a.dy * b.dx + a.val * b.dxy,
            dyy: a.dyy * b.val + 2.0 * a.dy * b.dy + a.val * b.dyy,
            dxxx: a.dxxx * b.val + 3.0 * a.dxx * b.dx + 3.0 * a.dx * b.dxx + a.val * b.dxxx,
            dxxy: a.dxxy * b.val
                + a.dxx * b.dy
                + 2.0 * a.dxy * b.dx
                + 2.0 * a.dx * b.dxy
                + a.dy * b.dxx
                + a.val * b.dxxy,
            dxyy: a.dxyy * b.val
                + a.dyy * b.dx
                + 2.0 * a.dxy * b.dy
                + 2.0 * a.dy * b.dxy
                + a.dx * b.dyy
                + a.val * b.dxyy,
            dyyy: a.dyyy * b.val + 3.0 * a.dyy * b.dy + 3.0 * a.dy * b.dyy + a.val * b.dyyy,
        }
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    fn div(self, b: Jet3) -> Jet3 {
        self * b.recip()
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(self, c: f64) -> Jet3 {
        let mut out = self;
        out.val += c;
        out
    }
}

impl Add<Jet3> for f64 {
    type Output = Jet3;
    fn add(self, j: Jet3) -> Jet3 {
        j + self
    }
}

impl Sub<f64> for Jet3 {
    type Output = Jet3;
    fn sub(self, c: f64) -> Jet3 {
        self + (-c)
    }
}

impl Sub<Jet3> for f64 {
    type Output = Jet3;
    fn sub(self, j: Jet3) -> Jet3 {
        -j + self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, c: f64) -> Jet3 {
        Jet3 {
            val: self.val * c,
            dx: self.dx * c,
            dy: self.dy * c,
            dxx: self.dxx * c,
            dxy: self.dxy * c,
            dyy: self.dyy * c,
            dxxx: self.dxxx * c,
            dxxy: self.dxxy * c,
            dxyy: self.dxyy * c,
            dyyy: self.dyyy * c,
        }
    }
}

impl Mul<Jet3> for f64 {
    type Output = Jet3;
    fn mul(self, j: Jet3) -> Jet3 {
        j * self
    }
}

impl Div<f64> for Jet3 {
    type Output = Jet3;
    fn div(self, c: f64) -> Jet3 {
        self * (1.0 / c)
    }
}

impl Div<Jet3> for f64 {
    type Output = Jet3;
    fn div(self, j: Jet3) -> Jet3 {
        j.recip() * self
    }
}
