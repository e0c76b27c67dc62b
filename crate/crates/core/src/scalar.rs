//! Scalar abstraction used by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which is implemented for the
//! hardware floats (through `num_traits::Float`) and for [`Mp`], an MPFR
//! float whose precision is carried by each value. Precision is threaded
//! explicitly through a [`Real::Ctx`] value rather than a global setting, so
//! evaluation is pure and can run on any thread.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float as MpFloat, Integer};

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Real scalar with the transcendental functions needed by the crate.
///
/// Values are immutable in practice: every method takes `&self` and returns
/// a fresh value. Constructors take a context (`()` for `f32`/`f64`, a
/// [`Precision`] for [`Mp`]).
pub trait Real:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    type Ctx: Copy + fmt::Debug + PartialEq + Send + Sync;

    /// Context able to hold `digits` significant decimal digits (hardware
    /// floats ignore the request).
    fn context(digits: u32) -> Self::Ctx;
    fn ctx(&self) -> Self::Ctx;
    /// Decimal digits carried in `ctx`.
    fn digits(ctx: Self::Ctx) -> u32;

    fn from_f64(x: f64, ctx: Self::Ctx) -> Self;
    fn from_i64(n: i64, ctx: Self::Ctx) -> Self;
    fn from_float(x: &MpFloat, ctx: Self::Ctx) -> Self;
    fn from_integer(n: &Integer, ctx: Self::Ctx) -> Self;
    fn parse(s: &str, ctx: Self::Ctx) -> Option<Self>;
    fn pi(ctx: Self::Ctx) -> Self;
    fn neg_infinity(ctx: Self::Ctx) -> Self;

    fn ln(&self) -> Self;
    fn ln_1p(&self) -> Self;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    /// `atan2(self, x)`, principal value in `(-pi, pi]`.
    fn atan2(&self, x: &Self) -> Self;
    fn hypot(&self, other: &Self) -> Self;
    fn abs(&self) -> Self;
    fn floor(&self) -> Self;
    fn round(&self) -> Self;

    fn to_f64(&self) -> f64;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;
    fn is_sign_negative(&self) -> bool;
    /// Scientific notation with `digits` digits after the point.
    fn to_sci(&self, digits: usize) -> String;

    fn zero(ctx: Self::Ctx) -> Self {
        Self::from_i64(0, ctx)
    }

    fn one(ctx: Self::Ctx) -> Self {
        Self::from_i64(1, ctx)
    }

    /// `10^(-digits)`, the relative resolution of `ctx`.
    fn epsilon(ctx: Self::Ctx) -> Self {
        Self::ten_pow(-(Self::digits(ctx) as i64), ctx)
    }

    fn ten_pow(e: i64, ctx: Self::Ctx) -> Self {
        (Self::from_i64(10, ctx).ln() * Self::from_i64(e, ctx)).exp()
    }

    fn is_neg_infinity(&self) -> bool {
        !self.is_finite() && self.is_sign_negative() && self.partial_cmp(self).is_some()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn log10(&self) -> Self {
        let ten = Self::from_i64(10, self.ctx());
        self.ln() / ten.ln()
    }
}

impl<F> Real for F
where
    F: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + std::str::FromStr
        + Send
        + Sync
        + 'static
        + for<'a> Add<&'a F, Output = F>
        + for<'a> Sub<&'a F, Output = F>
        + for<'a> Mul<&'a F, Output = F>
        + for<'a> Div<&'a F, Output = F>,
{
    type Ctx = ();

    fn context(_digits: u32) {}

    fn ctx(&self) {}

    fn digits(_ctx: ()) -> u32 {
        (-F::epsilon().log10()).floor().to_u32().unwrap_or(6)
    }

    fn from_f64(x: f64, _ctx: ()) -> Self {
        F::from_f64(x).unwrap_or_else(F::nan)
    }

    fn from_i64(n: i64, _ctx: ()) -> Self {
        F::from_i64(n).unwrap_or_else(F::nan)
    }

    fn from_float(x: &MpFloat, _ctx: ()) -> Self {
        F::from_f64(x.to_f64()).unwrap_or_else(F::nan)
    }

    fn from_integer(n: &Integer, _ctx: ()) -> Self {
        F::from_f64(n.to_f64()).unwrap_or_else(F::nan)
    }

    fn parse(s: &str, _ctx: ()) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn pi(_ctx: ()) -> Self {
        F::PI()
    }

    fn neg_infinity(_ctx: ()) -> Self {
        F::neg_infinity()
    }

    fn ln(&self) -> Self {
        Float::ln(*self)
    }

    fn ln_1p(&self) -> Self {
        Float::ln_1p(*self)
    }

    fn exp(&self) -> Self {
        Float::exp(*self)
    }

    fn sqrt(&self) -> Self {
        Float::sqrt(*self)
    }

    fn sin_cos(&self) -> (Self, Self) {
        Float::sin_cos(*self)
    }

    fn atan2(&self, x: &Self) -> Self {
        Float::atan2(*self, *x)
    }

    fn hypot(&self, other: &Self) -> Self {
        Float::hypot(*self, *other)
    }

    fn abs(&self) -> Self {
        Float::abs(*self)
    }

    fn floor(&self) -> Self {
        Float::floor(*self)
    }

    fn round(&self) -> Self {
        Float::round(*self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_finite(&self) -> bool {
        Float::is_finite(*self)
    }

    fn is_zero(&self) -> bool {
        *self == F::zero()
    }

    fn is_sign_negative(&self) -> bool {
        Float::is_sign_negative(*self)
    }

    fn to_sci(&self, digits: usize) -> String {
        format!("{:.*e}", digits, self)
    }
}

/// Working precision of an [`Mp`] value, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    bits: u32,
}

impl Precision {
    pub fn from_bits(bits: u32) -> Self {
        Self { bits: bits.max(16) }
    }

    pub fn from_digits(digits: u32) -> Self {
        Self::from_bits((digits as f64 * LOG2_10).ceil() as u32)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn digits(self) -> u32 {
        (self.bits as f64 / LOG2_10).floor() as u32
    }
}

/// Multiple-precision real backed by MPFR.
///
/// Binary operations round to the smaller precision of the two operands.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Mp(MpFloat);

impl Mp {
    pub fn new(x: f64, prec: Precision) -> Self {
        Mp(MpFloat::with_val(prec.bits, x))
    }

    pub fn from_inner(x: MpFloat) -> Self {
        Mp(x)
    }

    pub fn inner(&self) -> &MpFloat {
        &self.0
    }

    pub fn into_inner(self) -> MpFloat {
        self.0
    }

    pub fn precision(&self) -> Precision {
        Precision::from_bits(self.0.prec())
    }

    /// Re-round to `prec`.
    pub fn with_precision(&self, prec: Precision) -> Self {
        Mp(MpFloat::with_val(prec.bits, &self.0))
    }
}

impl fmt::Display for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! mp_ops {
    ($($tr:ident $method:ident $assign:ident $assign_fn:ident;)*) => {$(
        impl $tr for Mp {
            type Output = Mp;
            fn $method(self, rhs: Mp) -> Mp {
                $tr::$method(self, &rhs)
            }
        }

        impl<'a> $tr<&'a Mp> for Mp {
            type Output = Mp;
            fn $method(self, rhs: &'a Mp) -> Mp {
                let (pa, pb) = (self.0.prec(), rhs.0.prec());
                if pa <= pb {
                    let mut out = self.0;
                    std::ops::$assign::$assign_fn(&mut out, &rhs.0);
                    Mp(out)
                } else {
                    Mp(MpFloat::with_val(pb, $tr::$method(&self.0, &rhs.0)))
                }
            }
        }

        impl<'a, 'b> $tr<&'b Mp> for &'a Mp {
            type Output = Mp;
            fn $method(self, rhs: &'b Mp) -> Mp {
                let p = self.0.prec().min(rhs.0.prec());
                Mp(MpFloat::with_val(p, $tr::$method(&self.0, &rhs.0)))
            }
        }
    )*};
}

mp_ops! {
    Add add AddAssign add_assign;
    Sub sub SubAssign sub_assign;
    Mul mul MulAssign mul_assign;
    Div div DivAssign div_assign;
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0)
    }
}

impl Neg for &Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0.clone())
    }
}

impl Real for Mp {
    type Ctx = Precision;

    fn context(digits: u32) -> Precision {
        Precision::from_digits(digits)
    }

    fn ctx(&self) -> Precision {
        self.precision()
    }

    fn digits(ctx: Precision) -> u32 {
        ctx.digits()
    }

    fn from_f64(x: f64, ctx: Precision) -> Self {
        Mp(MpFloat::with_val(ctx.bits, x))
    }

    fn from_i64(n: i64, ctx: Precision) -> Self {
        Mp(MpFloat::with_val(ctx.bits, n))
    }

    fn from_float(x: &MpFloat, ctx: Precision) -> Self {
        Mp(MpFloat::with_val(ctx.bits, x))
    }

    fn from_integer(n: &Integer, ctx: Precision) -> Self {
        Mp(MpFloat::with_val(ctx.bits, n))
    }

    fn parse(s: &str, ctx: Precision) -> Option<Self> {
        let parsed = MpFloat::parse(s.trim()).ok()?;
        Some(Mp(MpFloat::with_val(ctx.bits, parsed)))
    }

    fn pi(ctx: Precision) -> Self {
        Mp(MpFloat::with_val(ctx.bits, Constant::Pi))
    }

    fn neg_infinity(ctx: Precision) -> Self {
        Mp(MpFloat::with_val(
            ctx.bits,
            rug::float::Special::NegInfinity,
        ))
    }

    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }

    fn ln_1p(&self) -> Self {
        Mp(self.0.clone().ln_1p())
    }

    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }

    fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sin_cos(MpFloat::new(self.0.prec()));
        (Mp(s), Mp(c))
    }

    fn atan2(&self, x: &Self) -> Self {
        let p = self.0.prec().min(x.0.prec());
        Mp(MpFloat::with_val(p, self.0.atan2_ref(&x.0)))
    }

    fn hypot(&self, other: &Self) -> Self {
        let p = self.0.prec().min(other.0.prec());
        Mp(MpFloat::with_val(p, self.0.hypot_ref(&other.0)))
    }

    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }

    fn floor(&self) -> Self {
        Mp(self.0.clone().floor())
    }

    fn round(&self) -> Self {
        Mp(self.0.clone().round())
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    fn to_sci(&self, digits: usize) -> String {
        if !self.0.is_finite() {
            return if self.0.is_nan() {
                "nan".into()
            } else if self.0.is_sign_negative() {
                "-inf".into()
            } else {
                "inf".into()
            };
        }
        self.0.to_string_radix(10, Some(digits + 1))
    }

    fn ten_pow(e: i64, ctx: Precision) -> Self {
        let ten = MpFloat::with_val(ctx.bits, 10);
        Mp(ten.pow(e as i32))
    }
}
