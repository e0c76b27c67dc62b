//! Coefficients of `w'' + A w' + B w = 0` having the lacunary product as a
//! solution: `A0 = f g`, `B0 = -(f'' + A0 f')/f`, and the perturbed pair
//! `A = A0 + c H f`, `B = B0 - c H f'`.

use rayon::prelude::*;

use crate::complex::PrecComplex;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::evaluable::Evaluable;
use crate::interp::{RationalInterpolant, ZeroTag};
use crate::logdomain::{log_sum, reduce_angle, LogComplex};
use crate::product::{LacunaryProduct, ZeroDerivs, ZeroPoint};
use crate::scalar::Real;

/// Nodes of the circle rule used for `B0` close to a zero.
pub const B0_CIRCLE_NODES: usize = 64;
/// Cap on nodes used to resolve the argument of `f'` on a contour.
pub const WINDING_NODE_CAP: usize = 1 << 14;

/// `H(z) = prod_{m <= M} (1 + z / m^{1/rho})`.
#[derive(Clone, Debug)]
pub struct HProduct<T: Real> {
    ctx: T::Ctx,
    pub rho: f64,
    pub truncation: usize,
    zeros: Vec<T>,
    inv_rho: T,
}

/// `H` at a point with the bound on the omitted log-factors.
#[derive(Clone, Debug)]
pub struct HValue<T> {
    pub value: PrecComplex<T>,
    pub log_tail: T,
}

pub fn build_h<T: Real>(rho: f64, truncation: usize, ctx: T::Ctx) -> Result<HProduct<T>> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::Config(format!("rho_H = {rho} is outside (0, 1/2)")));
    }
    if truncation == 0 {
        return Err(Error::Config("H truncation must be positive".into()));
    }
    let inv_rho = T::one(ctx) / T::from_f64(rho, ctx);
    let zeros = (1..=truncation)
        .map(|m| (T::from_i64(m as i64, ctx).ln() * &inv_rho).exp())
        .collect();
    Ok(HProduct {
        ctx,
        rho,
        truncation,
        zeros,
        inv_rho,
    })
}

impl<T: Real> HProduct<T> {
    /// Moduli `m^{1/rho}` of the zeros `-m^{1/rho}`.
    pub fn zero_moduli(&self) -> &[T] {
        &self.zeros
    }

    /// Largest `|z|` with a certified tail, `M^{1/rho}/2`.
    pub fn domain_radius(&self) -> T {
        self.zeros[self.zeros.len() - 1].clone() / T::from_i64(2, self.ctx)
    }

    pub fn eval(&self, z: &PrecComplex<T>) -> Result<HValue<T>> {
        let ctx = self.ctx;
        let az = z.abs();
        let limit = self.domain_radius();
        if az > limit {
            return Err(Error::Tail {
                log_abs_z: az.ln().to_f64(),
                log_limit: limit.ln().to_f64(),
            });
        }
        let mut acc = PrecComplex::one(ctx);
        let one = PrecComplex::one(ctx);
        for a in &self.zeros {
            acc = &acc * &(&one + &z.div_real(a));
        }
        // |z| M^{1 - 1/rho} / (1/rho - 1)
        let one_r = T::one(ctx);
        let m = T::from_i64(self.truncation as i64, ctx);
        let tail =
            az * (m.ln() * (one_r.clone() - &self.inv_rho)).exp() / (self.inv_rho.clone() - one_r);
        let log_tail = if tail.is_zero() {
            T::neg_infinity(ctx)
        } else {
            tail.ln()
        };
        Ok(HValue {
            value: acc,
            log_tail,
        })
    }
}

impl<T: Real> Evaluable<T> for HProduct<T> {
    fn eval_log(&self, z: &PrecComplex<T>) -> Result<LogComplex<T>> {
        Ok(LogComplex::from_value(&self.eval(z)?.value))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Base,
    Perturbed,
}

/// Relative residual `|f'' + A f' + B f| / (|f''| + |A f'| + |B f|)`.
#[derive(Clone, Debug)]
pub struct Residual<T> {
    pub relative: T,
    /// Log of the relative truncation bound of `f` at the point.
    pub log_tail: Option<T>,
}

/// Quantities at a zero `xi` of `f`.
#[derive(Clone, Debug)]
pub struct AtZero<T> {
    pub zero: ZeroPoint<T>,
    pub derivs: ZeroDerivs<T>,
    pub u: PrecComplex<T>,
    /// `g` minus the pole at `xi`, evaluated at `xi`.
    pub g_rest: PrecComplex<T>,
}

impl<T: Real> AtZero<T> {
    fn values(&self) -> Result<[PrecComplex<T>; 3]> {
        Ok([
            self.derivs.f1().to_value()?,
            self.derivs.f2().to_value()?,
            self.derivs.f3().to_value()?,
        ])
    }

    /// `A0(xi) = u f'(xi)`.
    pub fn a0(&self) -> Result<PrecComplex<T>> {
        Ok(&self.u * &self.derivs.f1().to_value()?)
    }

    /// `A0'(xi) = u f''(xi)/2 + f'(xi) G(xi)`.
    pub fn a0_prime(&self) -> Result<PrecComplex<T>> {
        let [f1, f2, _] = self.values()?;
        let two = T::from_i64(2, f1.ctx());
        Ok(&(&self.u * &f2).div_real(&two) + &(&f1 * &self.g_rest))
    }

    /// Removable value `B0(xi) = -(f''' + A0 f'' + A0' f')/f'`.
    pub fn b0(&self) -> Result<PrecComplex<T>> {
        let [f1, f2, f3] = self.values()?;
        let a0 = &self.u * &f1;
        let a0p = self.a0_prime()?;
        let num = &(&f3 + &(&a0 * &f2)) + &(&a0p * &f1);
        Ok(-(&num / &f1))
    }

    /// `|A0(xi) f'(xi) + f''(xi)| / |f''(xi)|`, formed as
    /// `|u d1^2 P / d2 + 1|` so that no large value is materialised.
    pub fn identity_defect(&self) -> Result<T> {
        let ctx = self.u.ctx();
        let d1 = LogComplex::from_value(&self.derivs.d[0]);
        let d2 = LogComplex::from_value(&self.derivs.d[1]);
        let ua = LogComplex::from_value(&self.u)
            .mul(&d1)
            .mul(&d1)
            .mul(&self.derivs.cofactor);
        if d2.is_zero() {
            // f''(xi) = 0: the identity asks for u f'(xi)^2 = 0.
            return Ok(if ua.is_zero() {
                T::zero(ctx)
            } else {
                T::from_f64(f64::INFINITY, ctx)
            });
        }
        let w = ua.div(&d2)?.to_value()?;
        Ok((&w + &PrecComplex::one(ctx)).abs())
    }
}

/// The assembled system.
#[derive(Clone, Debug)]
pub struct CoefficientSystem<T: Real> {
    pub config: SystemConfig,
    pub product: LacunaryProduct<T>,
    pub rat: RationalInterpolant<T>,
    pub h: Option<HProduct<T>>,
    c_scale: T,
    delta: T,
    ctx: T::Ctx,
}

impl<T: Real> CoefficientSystem<T> {
    pub fn build(cfg: &SystemConfig) -> Result<Self> {
        Self::build_with_ctx(cfg, T::context(cfg.lacunary.precision_digits))
    }

    pub fn build_with_ctx(cfg: &SystemConfig, ctx: T::Ctx) -> Result<Self> {
        let product = LacunaryProduct::with_ctx(&cfg.lacunary, ctx);
        let rat = RationalInterpolant::residues_from_f(&product, &cfg.lacunary)?;
        Self::assemble(cfg, product, rat)
    }

    /// Use externally supplied residues in place of the computed ones.
    pub fn with_interpolant(cfg: &SystemConfig, rat: RationalInterpolant<T>) -> Result<Self> {
        let product = LacunaryProduct::with_ctx(&cfg.lacunary, rat.ctx());
        Self::assemble(cfg, product, rat)
    }

    fn assemble(
        cfg: &SystemConfig,
        product: LacunaryProduct<T>,
        rat: RationalInterpolant<T>,
    ) -> Result<Self> {
        let ctx = product.ctx();
        let h = match cfg.rho_h {
            Some(rho) => Some(build_h(rho, cfg.h_truncation, ctx)?),
            None => None,
        };
        Ok(Self {
            config: cfg.clone(),
            c_scale: T::from_f64(cfg.c_scale, ctx),
            delta: T::from_f64(cfg.near_zero_delta, ctx),
            product,
            rat,
            h,
            ctx,
        })
    }

    pub fn ctx(&self) -> T::Ctx {
        self.ctx
    }

    pub fn set_c_scale(&mut self, c: f64) {
        self.c_scale = T::from_f64(c, self.ctx);
        self.config.c_scale = c;
    }

    pub fn at_zero(&self, pole: usize) -> Result<AtZero<T>> {
        let p = &self.rat.poles()[pole];
        let tag = p
            .tag
            .ok_or_else(|| Error::Config(format!("pole {pole} is not attached to a zero of f")))?;
        let zero = self.product.zero(tag.block, tag.index)?;
        let derivs = self.product.derivs_at_zero(&zero)?;
        let g_rest = self.rat.eval_g_without(&zero.point, pole)?;
        Ok(AtZero {
            zero,
            derivs,
            u: p.u.clone(),
            g_rest,
        })
    }

    fn pole_of(&self, zp: &ZeroPoint<T>) -> Result<usize> {
        let tag = ZeroTag {
            block: zp.block,
            index: zp.index,
        };
        self.rat
            .position(tag)
            .ok_or_else(|| Error::Config(format!("no pole for zero {tag:?}")))
    }

    /// `A0 = f g`; at a pole the removable value plus a first-order step.
    pub fn eval_a0(&self, z: &PrecComplex<T>) -> Result<PrecComplex<T>> {
        match self.rat.eval_g(z) {
            Ok(g) => {
                if g.value.is_zero() {
                    self.product.eval_f(z)?;
                    return Ok(PrecComplex::zero(self.ctx));
                }
                let f = self.product.eval_f(z)?.value;
                f.mul(&LogComplex::from_value(&g.value)).to_value()
            }
            Err(Error::NearPole { index, .. }) => {
                let at = self.at_zero(index)?;
                let step = z - &at.zero.point;
                Ok(&at.a0()? + &(&at.a0_prime()? * &step))
            }
            Err(e) => Err(e),
        }
    }

    /// `B0 = -(f''/f + A0 f'/f)`, switching to the removable value at a zero
    /// and to a circle rule within `near_zero_delta` of one.
    pub fn eval_b0(&self, z: &PrecComplex<T>) -> Result<PrecComplex<T>> {
        if let Some(near) = self.product.nearest_zero(z) {
            if near.rel_dist < self.delta {
                if near.rel_dist < self.product.zero_guard() {
                    return self.at_zero(self.pole_of(&near.zero)?)?.b0();
                }
                return self.b0_circle(z, &near.zero);
            }
        }
        self.b0_direct(z)
    }

    /// Direct evaluation; fails when more than `P/2` digits cancel.
    pub fn b0_direct(&self, z: &PrecComplex<T>) -> Result<PrecComplex<T>> {
        let (l1, l2) = self.product.log_derivatives(z)?;
        let a0 = self.eval_a0(z)?;
        let s1 = &(&l1 * &l1) + &l2;
        let s2 = &a0 * &l1;
        let sum = &s1 + &s2;
        let big = s1.abs().max_of(s2.abs());
        if !big.is_zero() {
            let digits = T::digits(self.ctx);
            let lost = if sum.is_zero() {
                f64::INFINITY
            } else {
                (big / sum.abs()).log10().to_f64()
            };
            if lost > digits as f64 / 2.0 {
                return Err(Error::Cancellation {
                    digits_lost: lost,
                    available: digits,
                    log_bound: (sum.abs()).ln().to_f64(),
                });
            }
        }
        Ok(-sum)
    }

    /// `B0(z) = (1/N) sum B0(w_j) (w_j - xi)/(w_j - z)` on the circle
    /// `|w - xi| = r_k/(4 n_k)`, where `B0` is evaluated directly. Exact for
    /// entire `B0` up to the geometric trapezoid error, which is estimated
    /// from the half-node rule.
    pub fn b0_circle(&self, z: &PrecComplex<T>, zero: &ZeroPoint<T>) -> Result<PrecComplex<T>> {
        let ctx = self.ctx;
        let n = B0_CIRCLE_NODES;
        let radius = self.product.radius(zero.block).clone()
            / (self.product.degree(zero.block).clone() * T::from_i64(4, ctx));
        let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
        let terms = (0..n)
            .into_par_iter()
            .map(|j| {
                let phi = two_pi.clone() * T::from_i64(j as i64, ctx) / T::from_i64(n as i64, ctx);
                let off = PrecComplex::from_polar(&radius, &phi);
                let w = &zero.point + &off;
                let b = self.b0_direct(&w)?;
                Ok(&(&b * &off) / &(&w - z))
            })
            .collect::<Result<Vec<_>>>()?;
        let full = sum_div(&terms, 1, n, ctx);
        let half = sum_div(&terms, 2, n / 2, ctx);
        let scale = full.abs().max_of(T::one(ctx));
        let tol = T::ten_pow(-(T::digits(ctx) as i64 - 10), ctx) * &scale;
        let diff = (&full - &half).abs();
        if diff > tol {
            return Err(Error::Quadrature {
                nodes: n,
                last: full.abs().to_f64(),
                previous: half.abs().to_f64(),
            });
        }
        Ok(full)
    }

    fn h_value(&self, z: &PrecComplex<T>) -> Result<PrecComplex<T>> {
        let h = self
            .h
            .as_ref()
            .ok_or_else(|| Error::Config("no H perturbation configured (rho_H missing)".into()))?;
        Ok(h.eval(z)?.value)
    }

    /// `(A, B) = (A0 + c H f, B0 - c H f')`.
    pub fn eval_ab(&self, z: &PrecComplex<T>) -> Result<(PrecComplex<T>, PrecComplex<T>)> {
        let hv = self.h_value(z)?.scale(&self.c_scale);
        let d = self.product.derivs(z)?;
        let a0 = self.eval_a0(z)?;
        let b0 = self.eval_b0(z)?;
        let hf = LogComplex::from_value(&hv).mul(&d.f).to_value()?;
        let hf1 = LogComplex::from_value(&hv).mul(&d.f1).to_value()?;
        Ok((&a0 + &hf, &b0 - &hf1))
    }

    pub fn residual(&self, z: &PrecComplex<T>, which: Which) -> Result<Residual<T>> {
        let ctx = self.ctx;
        let d = self.product.derivs(z)?;
        let (a, b) = match which {
            Which::Base => (self.eval_a0(z)?, self.eval_b0(z)?),
            Which::Perturbed => self.eval_ab(z)?,
        };
        let terms = [
            d.f2.clone(),
            LogComplex::from_value(&a).mul(&d.f1),
            LogComplex::from_value(&b).mul(&d.f),
        ];
        let live: Vec<_> = terms.iter().filter(|t| !t.is_zero()).collect();
        let log_tail = self.product.eval_f(z).ok().and_then(|v| v.log_tail);
        let Some(first) = live.first() else {
            return Ok(Residual {
                relative: T::zero(ctx),
                log_tail,
            });
        };
        let top = live
            .iter()
            .map(|t| t.logmag.clone())
            .fold(first.logmag.clone(), |a, b| a.max_of(b));
        let mut sum = PrecComplex::zero(ctx);
        let mut norm = T::zero(ctx);
        for t in live {
            let v = t.to_value_scaled(&top);
            norm = norm + v.abs();
            sum = sum + v;
        }
        Ok(Residual {
            relative: sum.abs() / norm,
            log_tail,
        })
    }

    /// Residual contract `10^{-P+40} + 10 * tail`.
    pub fn residual_tolerance(&self, r: &Residual<T>) -> f64 {
        let p = T::digits(self.ctx) as f64;
        let tail = r.log_tail.as_ref().map_or(0.0, |l| l.to_f64().exp());
        10f64.powf(-p + 40.0) + 10.0 * tail
    }
}

fn sum_div<T: Real>(
    terms: &[PrecComplex<T>],
    step: usize,
    count: usize,
    ctx: T::Ctx,
) -> PrecComplex<T> {
    let mut acc = PrecComplex::zero(ctx);
    for t in terms.iter().step_by(step) {
        acc = acc + t;
    }
    acc.div_real(&T::from_i64(count as i64, ctx))
}

/// `f''/f'^2` at a zero, directly and as the contour integral of
/// `1/(f'(z)(z - xi)^2)` over the disk boundary `z = xi (1 + zeta/n_k)`.
#[derive(Clone, Debug)]
pub struct CauchyRatio<T> {
    pub direct: PrecComplex<T>,
    pub contour: PrecComplex<T>,
    /// Same rule on every second node, as a convergence indicator.
    pub contour_half: PrecComplex<T>,
    pub nodes: usize,
    /// Zeros of `f'` enclosed by the contour (argument principle).
    pub fprime_zeros_inside: i64,
    pub min_log_abs_fprime: T,
    /// `ln((n_k/r_k) max 1/|f'|)`, the Cauchy estimate for `|direct|`.
    pub log_contour_bound: T,
}

impl<T: Real> CauchyRatio<T> {
    pub fn relative_gap(&self) -> T {
        (&self.direct - &self.contour).abs() / self.direct.abs()
    }
}

pub fn cauchy_ratio<T: Real>(
    product: &LacunaryProduct<T>,
    zero: &ZeroPoint<T>,
    nodes: usize,
) -> Result<CauchyRatio<T>> {
    let ctx = product.ctx();
    let nodes = nodes.max(8);
    let direct = product.derivs_at_zero(zero)?.ratio()?;
    let n = product.degree(zero.block).clone();
    let xi = &zero.point;
    let fprime = |count: usize, j: usize| -> Result<(LogComplex<T>, LogComplex<T>)> {
        let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
        let phi = two_pi * T::from_i64(j as i64, ctx) / T::from_i64(count as i64, ctx);
        let zeta = PrecComplex::cis(&phi);
        let z = xi * &(&PrecComplex::one(ctx) + &zeta.div_real(&n));
        let f1 = match product.derivs(&z) {
            Ok(d) => d.f1,
            Err(Error::Cancellation { .. }) => {
                return Err(Error::ZeroOnContour(format!("{xi}")));
            }
            Err(e) => return Err(e),
        };
        if f1.is_zero() {
            return Err(Error::ZeroOnContour(format!("{xi}")));
        }
        Ok((f1, LogComplex::from_value(&zeta)))
    };
    let samples = (0..nodes)
        .into_par_iter()
        .map(|j| fprime(nodes, j))
        .collect::<Result<Vec<_>>>()?;
    let lnn = n.ln();
    let lxi = LogComplex::from_value(xi);
    let terms: Vec<LogComplex<T>> = samples
        .iter()
        .map(|(f1, zeta)| {
            LogComplex::from_log_abs(lnn.clone())
                .div(&lxi.mul(zeta).mul(f1))
                .expect("nonzero denominator")
        })
        .collect();
    let mean = |step: usize| -> Result<PrecComplex<T>> {
        let picked: Vec<_> = terms.iter().step_by(step).cloned().collect();
        let s = log_sum(&picked, ctx)?.value.to_value()?;
        Ok(-s.div_real(&T::from_i64(picked.len() as i64, ctx)))
    };
    let contour = mean(1)?;
    let contour_half = mean(2)?;
    let min_log_abs_fprime = samples
        .iter()
        .map(|(f1, _)| f1.logmag.clone())
        .fold(samples[0].0.logmag.clone(), |a, b| a.min_of(b));
    let log_contour_bound = lnn - product.log_radius(zero.block) - &min_log_abs_fprime;
    let args: Vec<T> = samples.iter().map(|(f1, _)| f1.arg.clone()).collect();
    let fprime_zeros_inside = winding(&args, nodes, &|count, j| Ok(fprime(count, j)?.0.arg))?;
    Ok(CauchyRatio {
        direct,
        contour,
        contour_half,
        nodes,
        fprime_zeros_inside,
        min_log_abs_fprime,
        log_contour_bound,
    })
}

/// Winding number of sampled arguments, refining the grid until every step
/// is below `pi/4`.
fn winding<T: Real>(
    args: &[T],
    nodes: usize,
    sample: &(dyn Fn(usize, usize) -> Result<T> + Sync),
) -> Result<i64> {
    let ctx = args[0].ctx();
    let pi = T::pi(ctx);
    let quarter = pi.clone() / T::from_i64(4, ctx);
    let mut args = args.to_vec();
    let mut count = nodes;
    loop {
        let mut total = T::zero(ctx);
        let mut coarse = false;
        for j in 0..count {
            let step = reduce_angle(&(args[(j + 1) % count].clone() - &args[j]));
            if step.abs() > quarter {
                coarse = true;
            }
            total = total + step;
        }
        if !coarse {
            let turns = total / (pi.clone() * T::from_i64(2, ctx));
            return Ok(turns.round().to_f64() as i64);
        }
        if count * 2 > WINDING_NODE_CAP {
            return Err(Error::Quadrature {
                nodes: count,
                last: total.to_f64(),
                previous: f64::NAN,
            });
        }
        let mids = (0..count)
            .into_par_iter()
            .map(|j| sample(2 * count, 2 * j + 1))
            .collect::<Result<Vec<T>>>()?;
        let mut refined = Vec::with_capacity(2 * count);
        for (a, m) in args.into_iter().zip(mids) {
            refined.push(a);
            refined.push(m);
        }
        args = refined;
        count *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{LacunaryConfig, ScheduleRule};
    use crate::scalar::{Mp, Precision};

    const P: u32 = 100;

    fn ctx() -> Precision {
        Precision::from_digits(P)
    }

    fn c(re: f64, im: f64) -> PrecComplex<Mp> {
        PrecComplex::from_f64(re, im, ctx())
    }

    fn near(a: &PrecComplex<Mp>, b: &PrecComplex<Mp>, tol: f64) -> bool {
        let scale = b.abs().to_f64().max(1e-300);
        (a - b).abs().to_f64() <= tol * scale
    }

    fn anchor() -> CoefficientSystem<Mp> {
        let lac = LacunaryConfig::from_blocks(0.5, &[(1.0, 2)], P, true).unwrap();
        let cfg = SystemConfig::new(lac, Some(0.4), 1000, 1.0, 1e-8).unwrap();
        CoefficientSystem::build(&cfg).unwrap()
    }

    #[test]
    fn symbolic_anchor() {
        let s = anchor();
        assert!(near(
            &s.eval_a0(&c(2.0, 0.0)).unwrap(),
            &c(-2.0, 0.0),
            1e-98
        ));
        assert!(near(
            &s.eval_a0(&c(1.0, 0.0)).unwrap(),
            &c(-1.0, 0.0),
            1e-98
        ));
        assert!(s.eval_a0(&c(0.0, 0.0)).unwrap().abs().to_f64() < 1e-99);
        assert!(near(&s.eval_b0(&c(0.0, 0.0)).unwrap(), &c(2.0, 0.0), 1e-98));
        assert!(near(&s.eval_b0(&c(1.0, 0.0)).unwrap(), &c(2.0, 0.0), 1e-98));
        let r = s.residual(&c(3.0, 0.0), Which::Base).unwrap();
        assert!(r.relative.to_f64() < 1e-95);
    }

    #[test]
    fn b0_branches_agree() {
        let s = anchor();
        let delta = Mp::from_f64(2e-8, ctx());
        let z = &c(1.0, 0.0) + &PrecComplex::from_real(delta);
        let direct = s.b0_direct(&z).unwrap();
        let circle = s.b0_circle(&z, &s.product.zero(1, 0).unwrap()).unwrap();
        assert!((&direct - &circle).abs().to_f64() < 1e-33);
        let inside = &c(1.0, 0.0) + &c(3e-9, 2e-9);
        assert!(near(&s.eval_b0(&inside).unwrap(), &c(2.0, 0.0), 1e-85));
    }

    #[test]
    fn b0_direct_close_to_zero() {
        // Accuracy degrades like 10^-P / d^2 at distance d.
        let s = anchor();
        let z = &c(1.0, 0.0) + &PrecComplex::from_real(Mp::ten_pow(-20, ctx()));
        assert!(near(&s.b0_direct(&z).unwrap(), &c(2.0, 0.0), 1e-55));
        let z = &c(1.0, 0.0) + &PrecComplex::from_real(Mp::ten_pow(-60, ctx()));
        assert!(matches!(s.b0_direct(&z), Err(Error::NearZero { .. })));
    }

    #[test]
    fn h_examples() {
        let h = build_h::<Mp>(0.25, 1000, ctx()).unwrap();
        assert_eq!(h.eval(&c(0.0, 0.0)).unwrap().value, PrecComplex::one(ctx()));
        for x in [0.5, 3.0, 1e4] {
            let v = h.eval(&c(x, 0.0)).unwrap().value;
            assert!(v.im.is_zero() && v.re.to_f64() > 1.0);
        }
        let v = h.eval(&c(1.0, 0.0)).unwrap();
        assert!((v.value.re.to_f64() - 2.1668).abs() < 1e-3);
        assert!(v.log_tail.to_f64() < (1e-9f64).ln());
        assert!(build_h::<Mp>(0.5, 10, ctx()).is_err());
        assert!(matches!(h.eval(&c(1e12, 0.0)), Err(Error::Tail { .. })));
    }

    #[test]
    fn perturbation_at_zeros() {
        let s = anchor();
        let z = c(1.0, 0.0);
        let (a, b) = s.eval_ab(&z).unwrap();
        assert!(near(&a, &s.eval_a0(&z).unwrap(), 1e-95));
        let b0 = s.eval_b0(&z).unwrap();
        assert!((&b - &b0).abs().to_f64() > 0.1);
        let mut s0 = anchor();
        s0.set_c_scale(0.0);
        let w = c(0.3, 2.0);
        let (a, b) = s0.eval_ab(&w).unwrap();
        assert!(near(&a, &s0.eval_a0(&w).unwrap(), 1e-98));
        assert!(near(&b, &s0.eval_b0(&w).unwrap(), 1e-98));
    }

    #[test]
    fn perturbed_residual_small() {
        let mut s = anchor();
        for cs in [1.0, 2.0, 10.0] {
            s.set_c_scale(cs);
            for (x, y) in [(3.0, 0.5), (-0.4, 7.0), (0.2, -0.1)] {
                let r = s.residual(&c(x, y), Which::Perturbed).unwrap();
                assert!(r.relative.to_f64() < 1e-90, "c={cs} z=({x},{y})");
            }
        }
    }

    #[test]
    fn identity_and_ratio() {
        let s = anchor();
        for i in 0..2 {
            assert!(s.at_zero(i).unwrap().identity_defect().unwrap().to_f64() < 1e-95);
        }
        let cr = cauchy_ratio(&s.product, &s.product.zero(1, 0).unwrap(), 256).unwrap();
        assert!(near(&cr.direct, &c(-0.5, 0.0), 1e-98));
        assert_eq!(cr.fprime_zeros_inside, 0);
        assert!(cr.relative_gap().to_f64() < 1e-30);
    }

    #[test]
    fn contour_detects_interior_fprime_zero() {
        let lac = LacunaryConfig::from_blocks(0.5, &[(4.0, 2), (16.0, 4)], P, true).unwrap();
        let f = LacunaryProduct::<Mp>::new(&lac);
        let cr = cauchy_ratio(&f, &f.zero(2, 0).unwrap(), 256).unwrap();
        assert!(near(
            &cr.direct,
            &PrecComplex::from_real(Mp::from_i64(109, ctx()) / Mp::from_i64(900, ctx())),
            1e-97
        ));
        assert_eq!(cr.fprime_zeros_inside, 1);
        assert!(cr.relative_gap().to_f64() > 0.1);
    }

    #[test]
    fn factorial_block_four_contour() {
        let lac = LacunaryConfig::make_schedule(0.5, 4, ScheduleRule::Factorial).unwrap();
        let f = LacunaryProduct::<Mp>::new(&lac);
        let cr = cauchy_ratio(&f, &f.zero(4, 0).unwrap(), 256).unwrap();
        assert_eq!(cr.fprime_zeros_inside, 0);
        assert!(cr.relative_gap().to_f64() < 1e-20);
        assert!(cr.direct.abs().ln() <= cr.log_contour_bound);
    }
}
