//! Complex values stored as `(ln|w|, arg w)`.
//!
//! Magnitudes such as `exp(10^6)` stay representable, products are exact
//! additions, and sums report how many digits cancelled.

use crate::complex::PrecComplex;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `w = exp(logmag + i arg)`; `logmag = -inf` encodes `w = 0` (with `arg = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct LogComplex<T> {
    pub logmag: T,
    pub arg: T,
}

/// Outcome of a log-domain sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddStatus {
    Normal,
    /// The smaller operand was below the working resolution.
    Absorbed,
    /// The operands cancelled exactly.
    TotalCancellation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogSum<T> {
    pub value: LogComplex<T>,
    pub status: AddStatus,
    /// Decimal digits lost to cancellation (0 when none).
    pub digits_lost: f64,
}

/// Reduce an angle into `(-pi, pi]`.
pub fn reduce_angle<T: Real>(a: &T) -> T {
    let ctx = a.ctx();
    let pi = T::pi(ctx);
    if *a <= pi && *a > -pi.clone() {
        return a.clone();
    }
    let two_pi = pi.clone() * T::from_i64(2, ctx);
    let k = (a.clone() / &two_pi).round();
    let mut r = a.clone() - k * &two_pi;
    if r <= -pi.clone() {
        r = r + &two_pi;
    } else if r > pi {
        r = r - &two_pi;
    }
    r
}

impl<T: Real> LogComplex<T> {
    pub fn new(logmag: T, arg: T) -> Self {
        let arg = reduce_angle(&arg);
        Self { logmag, arg }
    }

    pub fn zero(ctx: T::Ctx) -> Self {
        Self {
            logmag: T::neg_infinity(ctx),
            arg: T::zero(ctx),
        }
    }

    pub fn one(ctx: T::Ctx) -> Self {
        Self {
            logmag: T::zero(ctx),
            arg: T::zero(ctx),
        }
    }

    pub fn ctx(&self) -> T::Ctx {
        self.arg.ctx()
    }

    pub fn is_zero(&self) -> bool {
        self.logmag.is_neg_infinity()
    }

    pub fn from_value(w: &PrecComplex<T>) -> Self {
        if w.is_zero() {
            return Self::zero(w.ctx());
        }
        Self {
            logmag: w.abs().ln(),
            arg: w.arg(),
        }
    }

    pub fn from_real(x: &T) -> Self {
        let ctx = x.ctx();
        if x.is_zero() {
            Self::zero(ctx)
        } else if x.is_sign_negative() {
            Self {
                logmag: x.abs().ln(),
                arg: T::pi(ctx),
            }
        } else {
            Self {
                logmag: x.ln(),
                arg: T::zero(ctx),
            }
        }
    }

    /// Positive real `exp(logmag)`.
    pub fn from_log_abs(logmag: T) -> Self {
        let arg = T::zero(logmag.ctx());
        Self { logmag, arg }
    }

    /// Converts back to rectangular form; fails when the modulus overflows
    /// the scalar type.
    pub fn to_value(&self) -> Result<PrecComplex<T>> {
        if self.is_zero() {
            return Ok(PrecComplex::zero(self.ctx()));
        }
        let m = self.logmag.exp();
        if !m.is_finite() {
            return Err(Error::NonFinite("LogComplex::to_value"));
        }
        Ok(PrecComplex::from_polar(&m, &self.arg))
    }

    /// `w * exp(-shift)` in rectangular form.
    pub fn to_value_scaled(&self, shift: &T) -> PrecComplex<T> {
        if self.is_zero() {
            return PrecComplex::zero(self.ctx());
        }
        let m = (self.logmag.clone() - shift).exp();
        PrecComplex::from_polar(&m, &self.arg)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.ctx());
        }
        Self {
            logmag: self.logmag.clone() + &other.logmag,
            arg: reduce_angle(&(self.arg.clone() + &other.arg)),
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::NonFinite("LogComplex::div by zero"));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        Ok(Self {
            logmag: self.logmag.clone() - &other.logmag,
            arg: reduce_angle(&(self.arg.clone() - &other.arg)),
        })
    }

    pub fn inv(&self) -> Result<Self> {
        Self::one(self.ctx()).div(self)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let pi = T::pi(self.ctx());
        Self {
            logmag: self.logmag.clone(),
            arg: reduce_angle(&(self.arg.clone() + &pi)),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            logmag: self.logmag.clone(),
            arg: reduce_angle(&(-self.arg.clone())),
        }
    }

    /// Multiply by a positive real given through its logarithm.
    pub fn mul_log_abs(&self, log_factor: &T) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Self {
            logmag: self.logmag.clone() + log_factor,
            arg: self.arg.clone(),
        }
    }

    /// `w^n` for a positive real exponent `n`.
    ///
    /// The argument is multiplied by `n` before reduction, so its absolute
    /// error grows by `n`; the call fails when that error would exceed half
    /// the working digits while the power is still non-negligible.
    pub fn pow(&self, n: &T) -> Result<Self> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let ctx = self.ctx();
        let logmag = self.logmag.clone() * n;
        let turns = self.arg.clone() * n;
        if !turns.is_zero() {
            let digits = T::digits(ctx) as f64;
            let negligible = logmag.to_f64() < -(digits + 5.0) * std::f64::consts::LN_10;
            let size = turns.abs().to_f64();
            if !negligible && size > 10f64.powf(digits / 2.0) {
                return Err(Error::ArgumentPrecision(size));
            }
        }
        Ok(Self {
            logmag,
            arg: reduce_angle(&turns),
        })
    }

    pub fn add(&self, other: &Self) -> Result<LogSum<T>> {
        log_add(self, other)
    }
}

/// `ln w` as a log-domain value; zero maps to `(-inf, 0)`.
pub fn log_from_value<T: Real>(w: &PrecComplex<T>) -> LogComplex<T> {
    LogComplex::from_value(w)
}

pub fn log_mul<T: Real>(a: &LogComplex<T>, b: &LogComplex<T>) -> LogComplex<T> {
    a.mul(b)
}

/// `a + b` by factoring out the operand of larger modulus.
///
/// Fails with [`Error::Cancellation`] when more than `P - 5` digits cancel;
/// an exactly cancelling pair returns zero with
/// [`AddStatus::TotalCancellation`].
pub fn log_add<T: Real>(a: &LogComplex<T>, b: &LogComplex<T>) -> Result<LogSum<T>> {
    let normal = |value: LogComplex<T>| LogSum {
        value,
        status: AddStatus::Normal,
        digits_lost: 0.0,
    };
    if a.is_zero() {
        return Ok(normal(b.clone()));
    }
    if b.is_zero() {
        return Ok(normal(a.clone()));
    }
    let (big, small) = if a.logmag >= b.logmag { (a, b) } else { (b, a) };
    let ctx = big.ctx();
    let digits = T::digits(ctx);
    let ln10 = T::from_i64(10, ctx).ln();
    let gap = small.logmag.clone() - &big.logmag;
    if gap < -(T::from_i64(digits as i64, ctx) * &ln10) {
        return Ok(LogSum {
            value: big.clone(),
            status: AddStatus::Absorbed,
            digits_lost: 0.0,
        });
    }
    let ratio = gap.exp();
    let phi = reduce_angle(&(small.arg.clone() - &big.arg));
    let u = PrecComplex::from_polar(&ratio, &phi);
    let s = &PrecComplex::one(ctx) + &u;
    if s.is_zero() {
        return Ok(LogSum {
            value: LogComplex::zero(ctx),
            status: AddStatus::TotalCancellation,
            digits_lost: digits as f64,
        });
    }
    let log_abs_s = if ratio < T::from_f64(0.5, ctx) {
        // ln|1+u| = ln(1 + 2 Re u + |u|^2) / 2
        let two = T::from_i64(2, ctx);
        let t = u.re.clone() * &two + ratio.clone() * &ratio;
        t.ln_1p() / two
    } else {
        s.abs().ln()
    };
    let digits_lost = (-(log_abs_s.to_f64()) / std::f64::consts::LN_10).max(0.0);
    if digits_lost > digits as f64 - 5.0 {
        let log_bound = big.logmag.to_f64() - (digits as f64 - 5.0) * std::f64::consts::LN_10;
        return Err(Error::Cancellation {
            digits_lost,
            available: digits,
            log_bound,
        });
    }
    Ok(LogSum {
        value: LogComplex {
            logmag: big.logmag.clone() + &log_abs_s,
            arg: reduce_angle(&(big.arg.clone() + &s.arg())),
        },
        status: AddStatus::Normal,
        digits_lost,
    })
}

/// Sum of many log-domain terms, accumulated in rectangular form relative to
/// the largest modulus. Fails like [`log_add`] when more than `P - 5` digits
/// cancel; an exact cancellation yields zero.
pub fn log_sum<T: Real>(terms: &[LogComplex<T>], ctx: T::Ctx) -> Result<LogSum<T>> {
    let live: Vec<&LogComplex<T>> = terms.iter().filter(|t| !t.is_zero()).collect();
    let Some(first) = live.first() else {
        return Ok(LogSum {
            value: LogComplex::zero(ctx),
            status: AddStatus::Normal,
            digits_lost: 0.0,
        });
    };
    let mut top = first.logmag.clone();
    for t in &live[1..] {
        if t.logmag > top {
            top = t.logmag.clone();
        }
    }
    let digits = T::digits(ctx);
    let floor = top.clone() - T::from_i64(digits as i64 + 10, ctx) * T::from_i64(10, ctx).ln();
    let mut acc = PrecComplex::zero(ctx);
    for t in live {
        if t.logmag > floor {
            acc = acc + t.to_value_scaled(&top);
        }
    }
    if acc.is_zero() {
        return Ok(LogSum {
            value: LogComplex::zero(ctx),
            status: AddStatus::TotalCancellation,
            digits_lost: digits as f64,
        });
    }
    let rel = LogComplex::from_value(&acc);
    let digits_lost = (-(rel.logmag.to_f64()) / std::f64::consts::LN_10).max(0.0);
    if digits_lost > digits as f64 - 5.0 {
        return Err(Error::Cancellation {
            digits_lost,
            available: digits,
            log_bound: top.to_f64() - (digits as f64 - 5.0) * std::f64::consts::LN_10,
        });
    }
    Ok(LogSum {
        value: rel.mul_log_abs(&top),
        status: AddStatus::Normal,
        digits_lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Mp, Precision};
    use proptest::prelude::*;

    fn ctx() -> Precision {
        Precision::from_digits(100)
    }

    fn lc(logmag: f64, arg: f64) -> LogComplex<Mp> {
        LogComplex::new(Mp::from_f64(logmag, ctx()), Mp::from_f64(arg, ctx()))
    }

    fn close(a: &Mp, b: &Mp, tol: f64) -> bool {
        (a.clone() - b).abs().to_f64() <= tol
    }

    #[test]
    fn from_value_examples() {
        let c = ctx();
        let one = LogComplex::from_value(&PrecComplex::<Mp>::one(c));
        assert_eq!(one, LogComplex::one(c));

        let m4 = LogComplex::from_value(&PrecComplex::<Mp>::from_f64(-4.0, 0.0, c));
        assert!(close(&m4.logmag, &Mp::from_i64(4, c).ln(), 1e-99));
        assert_eq!(m4.arg, Mp::pi(c));

        let w = LogComplex::from_value(&PrecComplex::<Mp>::from_f64(3.0, 4.0, c));
        assert!(close(&w.logmag, &Mp::from_i64(5, c).ln(), 1e-99));
        let expect = Mp::from_i64(4, c).atan2(&Mp::from_i64(3, c));
        assert!(close(&w.arg, &expect, 1e-99));

        let z = LogComplex::from_value(&PrecComplex::<Mp>::zero(c));
        assert!(z.is_zero());
        assert!(z.arg.is_zero());
    }

    #[test]
    fn mul_examples() {
        let c = ctx();
        let ln2 = Mp::from_i64(2, c).ln();
        let ln3 = Mp::from_i64(3, c).ln();
        let two = LogComplex::from_log_abs(ln2.clone());
        assert_eq!(LogComplex::one(c).mul(&two), two);

        let half_pi = Mp::pi(c) / Mp::from_i64(2, c);
        let a = LogComplex::new(ln3.clone(), half_pi);
        let sq = a.mul(&a);
        assert_eq!(sq.logmag, ln3.clone() + &ln3);
        assert_eq!(sq.arg, Mp::pi(c));

        assert!(LogComplex::zero(c).mul(&a).is_zero());
    }

    #[test]
    fn add_examples() {
        let c = ctx();
        let one = LogComplex::<Mp>::one(c);
        let minus_one = LogComplex::new(Mp::zero(c), Mp::pi(c));
        let s = log_add(&one, &minus_one).unwrap();
        assert_eq!(s.status, AddStatus::TotalCancellation);
        assert!(s.value.is_zero());
        assert!(s.value.arg.is_zero());

        let two = LogComplex::from_log_abs(Mp::from_i64(2, c).ln());
        let three = log_add(&two, &one).unwrap();
        assert!(close(&three.value.logmag, &Mp::from_i64(3, c).ln(), 1e-99));
        assert!(three.value.arg.is_zero());

        let huge = LogComplex::from_log_abs(Mp::from_f64(1e6, c));
        let s = log_add(&huge, &one).unwrap();
        assert_eq!(s.status, AddStatus::Absorbed);
        assert_eq!(s.value, huge);
    }

    #[test]
    fn many_term_sum() {
        let c = ctx();
        let terms: Vec<_> = [1.0, -2.0, 4.5, 0.0]
            .iter()
            .map(|&x| LogComplex::from_real(&Mp::from_f64(x, c)))
            .collect();
        let s = log_sum(&terms, c).unwrap();
        assert!(close(&s.value.logmag, &Mp::from_f64(3.5, c).ln(), 1e-99));
        assert!(s.value.arg.is_zero());
        let cancel = [terms[0].clone(), terms[0].neg()];
        assert_eq!(
            log_sum(&cancel, c).unwrap().status,
            AddStatus::TotalCancellation
        );
        assert!(log_sum::<Mp>(&[], c).unwrap().value.is_zero());
    }

    #[test]
    fn partial_cancellation_is_reported() {
        let c = ctx();
        let one = LogComplex::<Mp>::one(c);
        // -(1 + 1e-97) loses ~97 digits against 1
        let eps = Mp::ten_pow(-97, c);
        let near = LogComplex::new(eps.ln_1p(), Mp::pi(c));
        match log_add(&one, &near) {
            Err(Error::Cancellation { digits_lost, .. }) => assert!(digits_lost > 95.0),
            other => panic!("expected cancellation, got {other:?}"),
        }
        // a milder cancellation is fine and reports its loss
        let near = LogComplex::new(Mp::ten_pow(-20, c).ln_1p(), Mp::pi(c));
        let s = log_add(&one, &near).unwrap();
        assert!((s.digits_lost - 20.0).abs() < 0.01);
        assert!(close(&s.value.logmag, &Mp::ten_pow(-20, c).ln(), 1e-70));
    }

    #[test]
    fn arg_reduction_lands_in_principal_range() {
        let c = ctx();
        let pi = Mp::pi(c);
        for k in -7..=7 {
            let a = Mp::from_f64(0.3 + k as f64 * 2.9, c);
            let r = reduce_angle(&a);
            assert!(r <= pi && r > -pi.clone());
        }
        assert_eq!(reduce_angle(&-pi.clone()), pi);
        assert!(reduce_angle(&(pi.clone() * Mp::from_i64(2, c))).is_zero());
    }

    #[test]
    fn pow_guards_argument_precision() {
        let c = ctx();
        let w = lc(0.0, 1.0);
        let n = Mp::ten_pow(80, c);
        assert!(matches!(w.pow(&n), Err(Error::ArgumentPrecision(_))));
        // negligible magnitude: the argument is irrelevant
        let small = lc(-1.0, 1.0);
        assert!(small.pow(&n).is_ok());
        // real axis stays exact for any exponent
        let pos = lc(0.5, 0.0);
        assert!(pos.pow(&Mp::ten_pow(300, c)).unwrap().arg.is_zero());
    }

    #[test]
    fn random_pairs_match_rectangular_arithmetic() {
        use rand::{Rng, SeedableRng};
        let c = ctx();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let tol = Mp::ten_pow(-97, c);
        for _ in 0..100_000 {
            let a = lc(rng.gen_range(-50.0..50.0), rng.gen_range(-3.1..3.1));
            let b = lc(rng.gen_range(-50.0..50.0), rng.gen_range(-3.1..3.1));
            let va = a.to_value().unwrap();
            let vb = b.to_value().unwrap();
            let scale = va.abs() + vb.abs();

            let sum = log_add(&a, &b).unwrap().value.to_value().unwrap();
            let direct = &va + &vb;
            assert!((&sum - &direct).abs() / &scale <= tol);

            let prod = a.mul(&b).to_value().unwrap();
            let direct = &va * &vb;
            assert!((&prod - &direct).abs() / direct.abs() <= tol);
        }
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(
            l1 in -50.0f64..50.0, a1 in -3.1f64..3.1,
            l2 in -50.0f64..50.0, a2 in -3.1f64..3.1,
            l3 in -50.0f64..50.0, a3 in -3.1f64..3.1,
        ) {
            let (x, y, z) = (lc(l1, a1), lc(l2, a2), lc(l3, a3));
            let xy = x.mul(&y);
            let yx = y.mul(&x);
            prop_assert!(close(&xy.logmag, &yx.logmag, 1e-97));
            prop_assert!(close(&xy.arg, &yx.arg, 1e-97));
            let left = xy.mul(&z);
            let right = x.mul(&y.mul(&z));
            prop_assert!(close(&left.logmag, &right.logmag, 1e-97));
            // the reduced args may sit on opposite sides of the branch cut
            let d = reduce_angle(&(left.arg.clone() - &right.arg));
            prop_assert!(d.abs().to_f64() <= 1e-97);
        }

        #[test]
        fn results_stay_in_principal_range(
            l1 in -50.0f64..50.0, a1 in -20.0f64..20.0,
            l2 in -50.0f64..50.0, a2 in -20.0f64..20.0,
            n in 1.0f64..5000.0,
        ) {
            let c = ctx();
            let pi = Mp::pi(c);
            let (x, y) = (lc(l1, a1), lc(l2, a2));
            let ops = [
                x.mul(&y),
                x.neg(),
                x.conj(),
                x.pow(&Mp::from_f64(n, c)).unwrap(),
                log_add(&x, &y).unwrap().value,
            ];
            for v in ops.iter() {
                prop_assert!(v.arg <= pi && v.arg > -pi.clone());
            }
        }
    }
}
