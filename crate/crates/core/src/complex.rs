use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// Complex number over any [`Real`].
#[derive(Clone, Debug, PartialEq)]
pub struct PrecComplex<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> PrecComplex<T> {
    pub fn new(re: T, im: T) -> Self {
        Self { re, im }
    }

    pub fn from_real(re: T) -> Self {
        let im = T::zero(re.ctx());
        Self { re, im }
    }

    pub fn from_f64(re: f64, im: f64, ctx: T::Ctx) -> Self {
        Self::new(T::from_f64(re, ctx), T::from_f64(im, ctx))
    }

    pub fn zero(ctx: T::Ctx) -> Self {
        Self::new(T::zero(ctx), T::zero(ctx))
    }

    pub fn one(ctx: T::Ctx) -> Self {
        Self::new(T::one(ctx), T::zero(ctx))
    }

    pub fn i(ctx: T::Ctx) -> Self {
        Self::new(T::zero(ctx), T::one(ctx))
    }

    pub fn ctx(&self) -> T::Ctx {
        self.re.ctx()
    }

    /// `e^{i angle}`. Angles that are exactly `0`, `±pi/2` or `pi` at the
    /// working precision map to exact unit values so that real and
    /// imaginary axes stay exact.
    pub fn cis(angle: &T) -> Self {
        let ctx = angle.ctx();
        let zero = T::zero(ctx);
        let one = T::one(ctx);
        if angle.is_zero() {
            return Self::new(one, zero);
        }
        let pi = T::pi(ctx);
        let half_pi = pi.clone() / T::from_i64(2, ctx);
        if *angle == pi || *angle == -pi.clone() {
            return Self::new(-one, zero);
        }
        if *angle == half_pi {
            return Self::new(zero, one);
        }
        if *angle == -half_pi {
            return Self::new(zero, -one);
        }
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn from_polar(modulus: &T, angle: &T) -> Self {
        Self::cis(angle).scale(modulus)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> T {
        self.re.clone() * &self.re + self.im.clone() * &self.im
    }

    pub fn abs(&self) -> T {
        self.re.hypot(&self.im)
    }

    /// Principal argument in `(-pi, pi]`.
    pub fn arg(&self) -> T {
        self.im.atan2(&self.re)
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::new(self.re.clone() * k, self.im.clone() * k)
    }

    pub fn div_real(&self, k: &T) -> Self {
        Self::new(self.re.clone() / k, self.im.clone() / k)
    }

    pub fn inv(&self) -> Self {
        let d = self.norm_sqr();
        Self::new(self.re.clone() / &d, -(self.im.clone() / &d))
    }

    pub fn exp(&self) -> Self {
        Self::from_polar(&self.re.exp(), &self.im)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one(self.ctx());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_f64_pair(&self) -> [f64; 2] {
        [self.re.to_f64(), self.im.to_f64()]
    }
}

impl<T: Real> fmt::Display for PrecComplex<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.re, self.im)
    }
}

impl<'b, T: Real> Add<&'b PrecComplex<T>> for &PrecComplex<T> {
    type Output = PrecComplex<T>;
    fn add(self, rhs: &'b PrecComplex<T>) -> PrecComplex<T> {
        PrecComplex::new(self.re.clone() + &rhs.re, self.im.clone() + &rhs.im)
    }
}

impl<'b, T: Real> Sub<&'b PrecComplex<T>> for &PrecComplex<T> {
    type Output = PrecComplex<T>;
    fn sub(self, rhs: &'b PrecComplex<T>) -> PrecComplex<T> {
        PrecComplex::new(self.re.clone() - &rhs.re, self.im.clone() - &rhs.im)
    }
}

impl<'b, T: Real> Mul<&'b PrecComplex<T>> for &PrecComplex<T> {
    type Output = PrecComplex<T>;
    fn mul(self, rhs: &'b PrecComplex<T>) -> PrecComplex<T> {
        let re = self.re.clone() * &rhs.re - self.im.clone() * &rhs.im;
        let im = self.re.clone() * &rhs.im + self.im.clone() * &rhs.re;
        PrecComplex::new(re, im)
    }
}

impl<'b, T: Real> Div<&'b PrecComplex<T>> for &PrecComplex<T> {
    type Output = PrecComplex<T>;
    fn div(self, rhs: &'b PrecComplex<T>) -> PrecComplex<T> {
        if rhs.im.is_zero() {
            return self.div_real(&rhs.re);
        }
        let d = rhs.norm_sqr();
        let re = self.re.clone() * &rhs.re + self.im.clone() * &rhs.im;
        let im = self.im.clone() * &rhs.re - self.re.clone() * &rhs.im;
        PrecComplex::new(re / &d, im / &d)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $method:ident;)*) => {$(
        impl<T: Real> $tr for PrecComplex<T> {
            type Output = PrecComplex<T>;
            fn $method(self, rhs: PrecComplex<T>) -> PrecComplex<T> {
                $tr::$method(&self, &rhs)
            }
        }

        impl<'b, T: Real> $tr<&'b PrecComplex<T>> for PrecComplex<T> {
            type Output = PrecComplex<T>;
            fn $method(self, rhs: &'b PrecComplex<T>) -> PrecComplex<T> {
                $tr::$method(&self, rhs)
            }
        }
    )*};
}

forward_owned! {
    Add add;
    Sub sub;
    Mul mul;
    Div div;
}

impl<T: Real> Neg for PrecComplex<T> {
    type Output = PrecComplex<T>;
    fn neg(self) -> PrecComplex<T> {
        PrecComplex::new(-self.re, -self.im)
    }
}

impl<T: Real> Neg for &PrecComplex<T> {
    type Output = PrecComplex<T>;
    fn neg(self) -> PrecComplex<T> {
        PrecComplex::new(-self.re.clone(), -self.im.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Mp, Precision};

    #[test]
    fn exact_axes() {
        let ctx = Precision::from_digits(60);
        let pi = Mp::pi(ctx);
        let z = PrecComplex::<Mp>::cis(&pi);
        assert_eq!(z, PrecComplex::from_f64(-1.0, 0.0, ctx));
        let half = pi / Mp::from_i64(2, ctx);
        assert_eq!(PrecComplex::<Mp>::cis(&half), PrecComplex::i(ctx));
    }

    #[test]
    fn field_ops_f64() {
        let a = PrecComplex::<f64>::new(3.0, 4.0);
        let b = PrecComplex::<f64>::new(1.0, -2.0);
        let q = &(&a * &b) / &b;
        assert!((q.re - 3.0).abs() < 1e-14 && (q.im - 4.0).abs() < 1e-14);
        assert_eq!(a.abs(), 5.0);
        assert_eq!(a.powi(2), PrecComplex::new(-7.0, 24.0));
    }

    #[test]
    fn mp_division_round_trip() {
        let ctx = Precision::from_digits(100);
        let a = PrecComplex::<Mp>::from_f64(0.3, -1.7, ctx);
        let b = PrecComplex::<Mp>::from_f64(2.5, 0.125, ctx);
        let back = &(&a / &b) * &b;
        let err = (&back - &a).abs();
        assert!(err < Mp::ten_pow(-98, ctx));
    }
}
