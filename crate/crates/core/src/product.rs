//! The lacunary product `f(z) = prod_k (1 - (z/r_k)^{n_k})`.
//!
//! Every power `(z/r_k)^{n_k}` is formed in log domain, so degrees far beyond
//! machine range are handled by a multiplication of the logarithm.

use crate::complex::PrecComplex;
use crate::config::{Block, LacunaryConfig};
use crate::error::{Error, Result};
use crate::evaluable::Evaluable;
use crate::logdomain::{log_add, log_sum, LogComplex};
use crate::scalar::Real;

/// Largest block whose zeros will be listed one by one.
pub const ZERO_ENUMERATION_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug)]
struct Term<T> {
    radius: T,
    log_radius: T,
    degree: T,
    log_degree: T,
    count: Option<u64>,
}

impl<T: Real> Term<T> {
    fn new(b: &Block, ctx: T::Ctx) -> Self {
        let degree: T = b.degree(ctx);
        Self {
            radius: b.radius(ctx),
            log_radius: b.log_radius(ctx),
            log_degree: degree.ln(),
            degree,
            count: b.count().filter(|&n| n < (1u64 << 62)),
        }
    }
}

/// A zero `xi = r_k exp(2 pi i m / n_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroPoint<T> {
    /// Block index, 1-based.
    pub block: usize,
    pub index: u64,
    pub point: PrecComplex<T>,
}

/// Nearest zero to a query point.
#[derive(Clone, Debug)]
pub struct ZeroDistance<T> {
    pub zero: ZeroPoint<T>,
    /// `|z - xi| / |xi|`
    pub rel_dist: T,
}

/// `f` evaluated inside the certified domain.
#[derive(Clone, Debug)]
pub struct FValue<T> {
    pub value: LogComplex<T>,
    /// Log of the bound on the relative truncation error, when a tail exists.
    pub log_tail: Option<T>,
}

/// `f`, `f'`, `f''` at one point, in log domain.
#[derive(Clone, Debug)]
pub struct Derivs<T> {
    pub f: LogComplex<T>,
    pub f1: LogComplex<T>,
    pub f2: LogComplex<T>,
}

/// Derivatives at a zero through `f = q P` with `q` the vanishing factor.
///
/// `d[i]` is `f^{(i+1)}(xi) / P(xi)`.
#[derive(Clone, Debug)]
pub struct ZeroDerivs<T> {
    pub cofactor: LogComplex<T>,
    pub d: [PrecComplex<T>; 3],
}

impl<T: Real> ZeroDerivs<T> {
    fn scaled(&self, i: usize) -> LogComplex<T> {
        self.cofactor.mul(&LogComplex::from_value(&self.d[i]))
    }

    pub fn f1(&self) -> LogComplex<T> {
        self.scaled(0)
    }

    pub fn f2(&self) -> LogComplex<T> {
        self.scaled(1)
    }

    pub fn f3(&self) -> LogComplex<T> {
        self.scaled(2)
    }

    /// `f''/f'^2` at the zero.
    pub fn ratio_log(&self) -> Result<LogComplex<T>> {
        let d1 = LogComplex::from_value(&self.d[0]);
        let d2 = LogComplex::from_value(&self.d[1]);
        d2.div(&d1.mul(&d1).mul(&self.cofactor))
    }

    pub fn ratio(&self) -> Result<PrecComplex<T>> {
        self.ratio_log()?.to_value()
    }

    /// `u = -f''/f'^2`.
    pub fn residue(&self) -> Result<PrecComplex<T>> {
        Ok(-self.ratio()?)
    }
}

#[derive(Clone, Debug)]
pub struct LacunaryProduct<T: Real> {
    ctx: T::Ctx,
    terms: Vec<Term<T>>,
    next: Option<Term<T>>,
    ln2: T,
}

impl<T: Real> LacunaryProduct<T> {
    pub fn new(cfg: &LacunaryConfig) -> Self {
        Self::with_ctx(cfg, T::context(cfg.precision_digits))
    }

    pub fn with_ctx(cfg: &LacunaryConfig, ctx: T::Ctx) -> Self {
        Self::from_blocks(cfg.blocks(), cfg.next_block(), ctx)
    }

    /// Product over `blocks`; `next` bounds the omitted tail (without it the
    /// domain is unrestricted).
    pub fn from_blocks(blocks: &[Block], next: Option<&Block>, ctx: T::Ctx) -> Self {
        Self {
            ctx,
            terms: blocks.iter().map(|b| Term::new(b, ctx)).collect(),
            next: next.map(|b| Term::new(b, ctx)),
            ln2: T::from_i64(2, ctx).ln(),
        }
    }

    pub fn ctx(&self) -> T::Ctx {
        self.ctx
    }

    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn radius(&self, block: usize) -> &T {
        &self.terms[block - 1].radius
    }

    pub fn log_radius(&self, block: usize) -> &T {
        &self.terms[block - 1].log_radius
    }

    pub fn degree(&self, block: usize) -> &T {
        &self.terms[block - 1].degree
    }

    pub fn count(&self, block: usize) -> Option<u64> {
        self.terms[block - 1].count
    }

    /// `ln r_{K+1} - ln 2`, the edge of the certified domain.
    pub fn log_domain_limit(&self) -> Option<T> {
        self.next.as_ref().map(|t| t.log_radius.clone() - &self.ln2)
    }

    /// Log of the relative tail bound `2 |z/r_{K+1}|^{n_{K+1}}` at `ln|z|`.
    pub fn log_tail_bound(&self, log_abs_z: &T) -> Result<Option<T>> {
        let Some(t) = &self.next else {
            return Ok(None);
        };
        let limit = t.log_radius.clone() - &self.ln2;
        if *log_abs_z >= limit {
            return Err(Error::Tail {
                log_abs_z: log_abs_z.to_f64(),
                log_limit: limit.to_f64(),
            });
        }
        if log_abs_z.is_neg_infinity() {
            return Ok(Some(T::neg_infinity(self.ctx)));
        }
        Ok(Some(
            self.ln2.clone() + t.degree.clone() * (log_abs_z.clone() - &t.log_radius),
        ))
    }

    /// `(z/r_j)^{n_j}` from `ln z`.
    fn power(&self, j: usize, lz: &LogComplex<T>) -> Result<LogComplex<T>> {
        let t = &self.terms[j];
        if lz.is_zero() {
            return Ok(LogComplex::zero(self.ctx));
        }
        let base = LogComplex {
            logmag: lz.logmag.clone() - &t.log_radius,
            arg: lz.arg.clone(),
        };
        base.pow(&t.degree)
    }

    fn one_minus(&self, w: &LogComplex<T>) -> Result<LogComplex<T>> {
        Ok(log_add(&LogComplex::one(self.ctx), &w.neg())?.value)
    }

    /// Factor `1 - (z/r_j)^{n_j}` for block `j` (0-based).
    fn factor(&self, j: usize, lz: &LogComplex<T>) -> Result<LogComplex<T>> {
        self.one_minus(&self.power(j, lz)?)
    }

    pub fn eval_f(&self, z: &PrecComplex<T>) -> Result<FValue<T>> {
        self.eval_f_log(&LogComplex::from_value(z))
    }

    /// `f` at the point whose logarithm is `lz`; lets callers reach radii
    /// whose rectangular form would overflow.
    pub fn eval_f_log(&self, lz: &LogComplex<T>) -> Result<FValue<T>> {
        let log_tail = self.log_tail_bound(&lz.logmag)?;
        let mut acc = LogComplex::one(self.ctx);
        let mut cancelled = None;
        for j in 0..self.terms.len() {
            match self.factor(j, lz) {
                Ok(v) => acc = acc.mul(&v),
                Err(Error::Cancellation {
                    digits_lost,
                    available,
                    log_bound,
                }) => cancelled = Some((digits_lost, available, log_bound)),
                Err(e) => return Err(e),
            }
        }
        if let Some((digits_lost, available, log_bound)) = cancelled {
            // |f| is below the cancelled factor's bound times the others.
            return Err(Error::Cancellation {
                digits_lost,
                available,
                log_bound: log_bound + acc.logmag.to_f64(),
            });
        }
        Ok(FValue {
            value: acc,
            log_tail,
        })
    }

    /// `s_j = w/(w-1)` and `t_j = 1/(w-1)` for `w = (z/r_j)^{n_j}`.
    fn s_t(&self, w: &LogComplex<T>) -> Result<(PrecComplex<T>, PrecComplex<T>)> {
        let ctx = self.ctx;
        let one = PrecComplex::one(ctx);
        if w.is_zero() {
            return Ok((PrecComplex::zero(ctx), -one));
        }
        if w.logmag > T::zero(ctx) {
            let v = w.inv()?.to_value()?;
            let s = (&one - &v).inv();
            let t = &v * &s;
            Ok((s, t))
        } else {
            let wv = w.to_value()?;
            let t = -(&one - &wv).inv();
            let s = &wv * &t;
            Ok((s, t))
        }
    }

    /// `(f'/f, (f'/f)')` summed over all blocks except `exclude` (0-based),
    /// without the near-zero guard.
    fn log_derivs_raw(
        &self,
        z: &PrecComplex<T>,
        exclude: Option<usize>,
    ) -> Result<(PrecComplex<T>, PrecComplex<T>)> {
        let ctx = self.ctx;
        if z.is_zero() {
            return Ok(self.log_derivs_at_origin(exclude));
        }
        let lz = LogComplex::from_value(z);
        let mut sum1 = PrecComplex::zero(ctx);
        let mut sum2 = PrecComplex::zero(ctx);
        for (j, t) in self.terms.iter().enumerate() {
            if Some(j) == exclude {
                continue;
            }
            let w = self.power(j, &lz)?;
            let (s, tt) = self.s_t(&w)?;
            sum1 = sum1 + s.scale(&t.degree);
            let inner = &s + &(&s * &tt).scale(&t.degree);
            sum2 = sum2 + inner.scale(&t.degree);
        }
        let zinv = z.inv();
        let l1 = &sum1 * &zinv;
        let l2 = -(&sum2 * &(&zinv * &zinv));
        Ok((l1, l2))
    }

    fn log_derivs_at_origin(&self, exclude: Option<usize>) -> (PrecComplex<T>, PrecComplex<T>) {
        let ctx = self.ctx;
        let mut l1 = T::zero(ctx);
        let mut l2 = T::zero(ctx);
        for (j, t) in self.terms.iter().enumerate() {
            if Some(j) == exclude {
                continue;
            }
            let r2 = t.radius.clone() * &t.radius;
            match t.count {
                Some(1) => {
                    l1 = l1 - T::one(ctx) / &t.radius;
                    l2 = l2 - T::one(ctx) / &r2;
                }
                Some(2) => l2 = l2 - T::from_i64(2, ctx) / &r2,
                _ => {}
            }
        }
        (PrecComplex::from_real(l1), PrecComplex::from_real(l2))
    }

    /// `f'/f` (order 1) or `(f'/f)'` (order 2).
    pub fn log_derivative(&self, z: &PrecComplex<T>, order: u8) -> Result<PrecComplex<T>> {
        let (l1, l2) = self.log_derivatives(z)?;
        match order {
            1 => Ok(l1),
            2 => Ok(l2),
            _ => Err(Error::Config(format!(
                "log_derivative order {order} is not 1 or 2"
            ))),
        }
    }

    /// Both log derivatives, guarded against points too close to a zero.
    pub fn log_derivatives(&self, z: &PrecComplex<T>) -> Result<(PrecComplex<T>, PrecComplex<T>)> {
        self.log_tail_bound(&LogComplex::from_value(z).logmag)?;
        if let Some(near) = self.nearest_zero(z) {
            if near.rel_dist < self.zero_guard() {
                return Err(Error::NearZero {
                    block: near.zero.block,
                    rel_dist: near.rel_dist.to_f64(),
                });
            }
        }
        self.log_derivs_raw(z, None)
    }

    /// Relative distance `10^{-P/2}` below which a point counts as a zero.
    pub fn zero_guard(&self) -> T {
        T::ten_pow(-((T::digits(self.ctx) / 2) as i64), self.ctx)
    }

    /// Zero `m` of block `k` (1-based).
    pub fn zero(&self, k: usize, m: u64) -> Result<ZeroPoint<T>> {
        let t = &self.terms[k - 1];
        let n = t
            .count
            .ok_or_else(|| Error::Config(format!("block {k} is too large to index its zeros")))?;
        if m >= n {
            return Err(Error::Config(format!(
                "zero index {m} out of range for block {k}"
            )));
        }
        let ctx = self.ctx;
        let signed = if 2 * m <= n {
            m as i64
        } else {
            m as i64 - n as i64
        };
        let angle = T::pi(ctx) * T::from_i64(2 * signed, ctx) / T::from_i64(n as i64, ctx);
        Ok(ZeroPoint {
            block: k,
            index: m,
            point: PrecComplex::from_polar(&t.radius, &angle),
        })
    }

    /// All `n_k` zeros of block `k`.
    pub fn zeros(&self, k: usize) -> Result<Vec<ZeroPoint<T>>> {
        let n = self.terms[k - 1].count.unwrap_or(u64::MAX);
        if n > ZERO_ENUMERATION_LIMIT {
            return Err(Error::Config(format!(
                "block {k} has more than {ZERO_ENUMERATION_LIMIT} zeros"
            )));
        }
        (0..n).map(|m| self.zero(k, m)).collect()
    }

    /// Every zero of the truncated product, block by block.
    pub fn all_zeros(&self) -> Result<Vec<ZeroPoint<T>>> {
        let mut out = Vec::new();
        for k in 1..=self.k() {
            out.extend(self.zeros(k)?);
        }
        Ok(out)
    }

    /// Closest zero among the blocks whose zeros can be indexed.
    pub fn nearest_zero(&self, z: &PrecComplex<T>) -> Option<ZeroDistance<T>> {
        let ctx = self.ctx;
        let arg = z.arg();
        let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
        let mut best: Option<ZeroDistance<T>> = None;
        for (j, t) in self.terms.iter().enumerate() {
            let Some(n) = t.count else { continue };
            let turns = (arg.clone() * T::from_i64(n as i64, ctx) / &two_pi).round();
            let m = turns.to_f64() as i64;
            let m = m.rem_euclid(n as i64) as u64;
            let zero = match self.zero(j + 1, m) {
                Ok(zp) => zp,
                Err(_) => continue,
            };
            let rel_dist = (z - &zero.point).abs() / &t.radius;
            if best.as_ref().is_none_or(|b| rel_dist < b.rel_dist) {
                best = Some(ZeroDistance { zero, rel_dist });
            }
        }
        best
    }

    /// `f'`, `f''`, `f'''` at a zero via factor extraction.
    pub fn derivs_at_zero(&self, zp: &ZeroPoint<T>) -> Result<ZeroDerivs<T>> {
        let ctx = self.ctx;
        let k = zp.block - 1;
        let xi = &zp.point;
        let lxi = LogComplex::from_value(xi);
        let n = self.terms[k].degree.clone();
        let one = T::one(ctx);
        let two = T::from_i64(2, ctx);
        let three = T::from_i64(3, ctx);
        let xinv = xi.inv();
        let xinv2 = &xinv * &xinv;
        let xinv3 = &xinv2 * &xinv;
        let n1 = n.clone() - &one;
        let n2 = n1.clone() - &one;
        let q1 = -xinv.scale(&n);
        let q2 = -xinv2.scale(&(n.clone() * &n1));
        let q3 = -xinv3.scale(&(n.clone() * &n1 * &n2));
        let mut cofactor = LogComplex::one(ctx);
        for j in 0..self.terms.len() {
            if j != k {
                cofactor = cofactor.mul(&self.factor(j, &lxi)?);
            }
        }
        let (l1, l2) = self.log_derivs_raw(xi, Some(k))?;
        let d1 = q1.clone();
        let d2 = &q2 + &(&q1 * &l1).scale(&two);
        let p2 = &(&l1 * &l1) + &l2;
        let d3 = &(&q3 + &(&q2 * &l1).scale(&three)) + &(&q1 * &p2).scale(&three);
        Ok(ZeroDerivs {
            cofactor,
            d: [d1, d2, d3],
        })
    }

    /// `f`, `f'`, `f''` by the product rule, each a log-domain sum of
    /// products of factors. Independent of the log-derivative route and
    /// valid at zeros as well as away from them.
    pub fn derivs(&self, z: &PrecComplex<T>) -> Result<Derivs<T>> {
        let ctx = self.ctx;
        if z.is_zero() {
            return Ok(self.derivs_at_origin());
        }
        let lz = LogComplex::from_value(z);
        self.log_tail_bound(&lz.logmag)?;
        let kk = self.terms.len();
        let mut q = Vec::with_capacity(kk);
        let mut a = Vec::with_capacity(kk);
        let mut b = Vec::with_capacity(kk);
        let minus_inv_z = LogComplex::from_value(&z.inv()).neg();
        let inv_z2 = LogComplex::from_value(&(z * z).inv());
        for (j, t) in self.terms.iter().enumerate() {
            let w = self.power(j, &lz)?;
            let qj = self.one_minus(&w)?;
            let aj = w.mul(&minus_inv_z).mul_log_abs(&t.log_degree);
            let n1 = t.degree.clone() - T::one(ctx);
            let bj = w
                .mul(&inv_z2)
                .mul(&LogComplex::from_real(&(t.degree.clone() * &n1)))
                .neg();
            q.push(qj);
            a.push(aj);
            b.push(bj);
        }
        let prod_except = |skip: &[usize]| {
            let mut acc = LogComplex::one(ctx);
            for (l, ql) in q.iter().enumerate() {
                if !skip.contains(&l) {
                    acc = acc.mul(ql);
                }
            }
            acc
        };
        let f = prod_except(&[]);
        let mut t1 = Vec::with_capacity(kk);
        let mut t2 = Vec::with_capacity(kk * kk);
        for j in 0..kk {
            let rest = prod_except(&[j]);
            t1.push(a[j].mul(&rest));
            t2.push(b[j].mul(&rest));
            for i in (j + 1)..kk {
                let pair = a[i].mul(&a[j]).mul(&prod_except(&[i, j]));
                t2.push(pair.mul_log_abs(&T::from_i64(2, ctx).ln()));
            }
        }
        let f1 = log_sum(&t1, ctx)?.value;
        let f2 = log_sum(&t2, ctx)?.value;
        Ok(Derivs { f, f1, f2 })
    }

    fn derivs_at_origin(&self) -> Derivs<T> {
        let ctx = self.ctx;
        let mut c1 = T::zero(ctx);
        let mut linear = Vec::new();
        let mut c2 = T::zero(ctx);
        for t in &self.terms {
            match t.count {
                Some(1) => {
                    let a = T::one(ctx) / &t.radius;
                    c1 = c1 - &a;
                    linear.push(a);
                }
                Some(2) => c2 = c2 - T::one(ctx) / (t.radius.clone() * &t.radius),
                _ => {}
            }
        }
        for i in 0..linear.len() {
            for j in (i + 1)..linear.len() {
                c2 = c2 + linear[i].clone() * &linear[j];
            }
        }
        let two = T::from_i64(2, ctx);
        Derivs {
            f: LogComplex::one(ctx),
            f1: LogComplex::from_real(&c1),
            f2: LogComplex::from_real(&(c2 * two)),
        }
    }
}

impl<T: Real> Evaluable<T> for LacunaryProduct<T> {
    fn eval_log(&self, z: &PrecComplex<T>) -> Result<LogComplex<T>> {
        Ok(self.eval_f(z)?.value)
    }
}
