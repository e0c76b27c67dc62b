//! The rational series `g(z) = sum_k u_k/(z - z_k)` with residues
//! `u_k = -f''(z_k)/f'(z_k)^2`, and the proximity function `m(r, .)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::PrecComplex;
use crate::config::LacunaryConfig;
use crate::error::{Error, Result};
use crate::evaluable::Evaluable;
use crate::logdomain::LogComplex;
use crate::product::{LacunaryProduct, ZeroPoint};
use crate::scalar::Real;

/// Upper bound on trapezoid nodes before [`Error::Quadrature`] is raised.
pub const QUADRATURE_NODE_CAP: usize = 1 << 16;
/// Convergence threshold between successive trapezoid estimates.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Identifies the zero of `f` a pole came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZeroTag {
    pub block: usize,
    pub index: u64,
}

#[derive(Clone, Debug)]
pub struct Pole<T> {
    pub z: PrecComplex<T>,
    pub u: PrecComplex<T>,
    pub tag: Option<ZeroTag>,
    modulus: T,
}

impl<T: Real> Pole<T> {
    pub fn new(z: PrecComplex<T>, u: PrecComplex<T>, tag: Option<ZeroTag>) -> Self {
        let modulus = z.abs();
        Self { z, u, tag, modulus }
    }

    pub fn modulus(&self) -> &T {
        &self.modulus
    }
}

/// Omitted poles, described by the first omitted block.
#[derive(Clone, Debug)]
struct PoleTail<T> {
    log_radius: T,
    log_count: T,
}

/// `g` evaluated at a point.
#[derive(Clone, Debug)]
pub struct GValue<T> {
    pub value: PrecComplex<T>,
    /// Absolute bound on the omitted poles' contribution.
    pub tail: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockSum {
    pub block: Option<usize>,
    pub poles: usize,
    pub sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub blocks: Vec<BlockSum>,
    pub partial: f64,
    pub tail_bound: f64,
    pub total_bound: f64,
    pub c_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct RationalInterpolant<T: Real> {
    ctx: T::Ctx,
    poles: Vec<Pole<T>>,
    c_bound: T,
    tail: Option<PoleTail<T>>,
    /// Convergence-exponent certificate of the schedule the poles came from.
    sigma_certificate: Option<f64>,
}

impl<T: Real> RationalInterpolant<T> {
    /// Poles at the zeros of `f` with `u = -f''/f'^2`.
    pub fn residues_from_f(product: &LacunaryProduct<T>, cfg: &LacunaryConfig) -> Result<Self> {
        let zeros = product.all_zeros()?;
        let poles = zeros
            .par_iter()
            .map(|zp| {
                let u = product.derivs_at_zero(zp)?.residue()?;
                Ok(Pole::new(zp.point.clone(), u, Some(tag_of(zp))))
            })
            .collect::<Result<Vec<_>>>()?;
        let ctx = product.ctx();
        let tail = cfg.next_block().map(|b| PoleTail {
            log_radius: b.log_radius(ctx),
            log_count: b.degree::<T>(ctx).ln(),
        });
        let mut out = Self::assemble(ctx, poles, tail)?;
        out.sigma_certificate = Some(cfg.sigma_certificate);
        Ok(out)
    }

    /// A finite pole list given explicitly as `(z_k, u_k)`.
    pub fn from_poles(pairs: Vec<(PrecComplex<T>, PrecComplex<T>)>, ctx: T::Ctx) -> Result<Self> {
        let poles = pairs
            .into_iter()
            .map(|(z, u)| Pole::new(z, u, None))
            .collect();
        Self::assemble(ctx, poles, None)
    }

    fn assemble(ctx: T::Ctx, poles: Vec<Pole<T>>, tail: Option<PoleTail<T>>) -> Result<Self> {
        check_distinct(&poles)?;
        let mut c_bound = T::zero(ctx);
        for p in &poles {
            let a = p.u.abs();
            if !a.is_finite() {
                return Err(Error::NonFinite("residue"));
            }
            if a > c_bound {
                c_bound = a;
            }
        }
        Ok(Self {
            ctx,
            poles,
            c_bound,
            tail,
            sigma_certificate: None,
        })
    }

    pub fn ctx(&self) -> T::Ctx {
        self.ctx
    }

    pub fn poles(&self) -> &[Pole<T>] {
        &self.poles
    }

    /// `C = max |u_k|`.
    pub fn c_bound(&self) -> &T {
        &self.c_bound
    }

    pub fn position(&self, tag: ZeroTag) -> Option<usize> {
        self.poles.iter().position(|p| p.tag == Some(tag))
    }

    /// Replace one residue, keeping `C` current.
    pub fn set_residue(&mut self, index: usize, u: PrecComplex<T>) {
        self.poles[index].u = u;
        self.c_bound = T::zero(self.ctx);
        for p in &self.poles {
            let a = p.u.abs();
            if a > self.c_bound {
                self.c_bound = a;
            }
        }
    }

    /// `ln` of the bound `2 C n_{K+1}/r_{K+1}`, doubled for the blocks beyond.
    fn log_tail_bound(&self) -> Option<T> {
        let t = self.tail.as_ref()?;
        if self.c_bound.is_zero() {
            return Some(T::neg_infinity(self.ctx));
        }
        let ln4 = T::from_i64(4, self.ctx).ln();
        Some(self.c_bound.ln() + ln4 + &t.log_count - &t.log_radius)
    }

    fn check_domain(&self, z: &PrecComplex<T>) -> Result<()> {
        if let Some(t) = &self.tail {
            let lz = z.abs().ln();
            let limit = t.log_radius.clone() - T::from_i64(2, self.ctx).ln();
            if lz >= limit {
                return Err(Error::Tail {
                    log_abs_z: lz.to_f64(),
                    log_limit: limit.to_f64(),
                });
            }
        }
        Ok(())
    }

    /// Pole index within relative distance `10^{-P/2}` of `z`, if any.
    pub fn pole_at(&self, z: &PrecComplex<T>) -> Option<(usize, T)> {
        let guard = T::ten_pow(-((T::digits(self.ctx) / 2) as i64), self.ctx);
        let guard2 = guard.clone() * &guard;
        self.poles.iter().enumerate().find_map(|(i, p)| {
            let d2 = (z - &p.z).norm_sqr();
            let m2 = p.modulus.clone() * &p.modulus;
            (d2 < guard2.clone() * &m2).then(|| (i, (d2 / m2).sqrt()))
        })
    }

    fn sum_terms(
        &self,
        z: &PrecComplex<T>,
        skip: Option<usize>,
        power: u32,
    ) -> Result<PrecComplex<T>> {
        let mut acc = PrecComplex::zero(self.ctx);
        for (i, p) in self.poles.iter().enumerate() {
            if Some(i) == skip || p.u.is_zero() {
                continue;
            }
            let d = z - &p.z;
            let mut inv = d.inv();
            if power == 2 {
                inv = &inv * &inv;
            }
            acc = acc + &p.u * &inv;
        }
        if !acc.is_finite() {
            return Err(Error::NonFinite("rational series"));
        }
        Ok(acc)
    }

    pub fn eval_g(&self, z: &PrecComplex<T>) -> Result<GValue<T>> {
        self.check_domain(z)?;
        if let Some((index, rel)) = self.pole_at(z) {
            return Err(Error::NearPole {
                index,
                rel_dist: rel.to_f64(),
            });
        }
        let value = self.sum_terms(z, None, 1)?;
        Ok(GValue {
            value,
            tail: self.log_tail_bound().map(|l| l.exp()),
        })
    }

    /// `g'(z) = -sum u_k/(z - z_k)^2`.
    pub fn eval_g_prime(&self, z: &PrecComplex<T>) -> Result<PrecComplex<T>> {
        self.check_domain(z)?;
        if let Some((index, rel)) = self.pole_at(z) {
            return Err(Error::NearPole {
                index,
                rel_dist: rel.to_f64(),
            });
        }
        Ok(-self.sum_terms(z, None, 2)?)
    }

    /// `g` with pole `skip` removed; regular at that pole.
    pub fn eval_g_without(&self, z: &PrecComplex<T>, skip: usize) -> Result<PrecComplex<T>> {
        self.check_domain(z)?;
        self.sum_terms(z, Some(skip), 1)
    }

    /// Partial sums of `sum |u_k/z_k|` per block and the analytic tail.
    pub fn check_summability(&self) -> Result<SummabilityReport> {
        if self.sigma_certificate.is_none() {
            if let Some(sigma) = self.exponent_estimate() {
                if sigma >= 0.95 {
                    return Err(Error::Divergence(sigma));
                }
            }
        }
        let mut blocks: Vec<BlockSum> = Vec::new();
        for p in &self.poles {
            let term = if p.modulus.is_zero() {
                f64::INFINITY
            } else {
                (p.u.abs() / &p.modulus).to_f64()
            };
            let key = p.tag.map(|t| t.block);
            match blocks.iter_mut().find(|b| b.block == key) {
                Some(b) => {
                    b.poles += 1;
                    b.sum += term;
                }
                None => blocks.push(BlockSum {
                    block: key,
                    poles: 1,
                    sum: term,
                }),
            }
        }
        let partial: f64 = blocks.iter().map(|b| b.sum).sum();
        let tail_bound = self.log_tail_bound().map_or(0.0, |l| l.exp().to_f64());
        let total_bound = partial + tail_bound;
        Ok(SummabilityReport {
            blocks,
            partial,
            tail_bound,
            total_bound,
            c_bound: self.c_bound.to_f64(),
            pass: total_bound.is_finite(),
        })
    }

    /// `ln N / ln(R_max/R_min)` for lists long and wide enough to say
    /// something about the exponent of convergence.
    fn exponent_estimate(&self) -> Option<f64> {
        let n = self.poles.len();
        if n < 8 {
            return None;
        }
        let mods: Vec<f64> = self.poles.iter().map(|p| p.modulus.to_f64()).collect();
        let lo = mods.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mods.iter().cloned().fold(0.0, f64::max);
        if lo.is_nan() || lo <= 0.0 || hi < lo * std::f64::consts::E.powi(2) {
            return None;
        }
        Some((n as f64).ln() / (hi / lo).ln())
    }
}

impl<T: Real> Evaluable<T> for RationalInterpolant<T> {
    fn eval_log(&self, z: &PrecComplex<T>) -> Result<LogComplex<T>> {
        Ok(LogComplex::from_value(&self.eval_g(z)?.value))
    }
}

pub fn tag_of<T>(zp: &ZeroPoint<T>) -> ZeroTag {
    ZeroTag {
        block: zp.block,
        index: zp.index,
    }
}

fn check_distinct<T: Real>(poles: &[Pole<T>]) -> Result<()> {
    let mut keyed: Vec<([f64; 2], usize)> = poles
        .iter()
        .enumerate()
        .map(|(i, p)| (p.z.to_f64_pair(), i))
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    for w in keyed.windows(2) {
        if w[0].0 == w[1].0 && poles[w[0].1].z == poles[w[1].1].z {
            return Err(Error::Config(format!(
                "poles {} and {} coincide",
                w[0].1, w[1].1
            )));
        }
    }
    Ok(())
}

/// Outcome of [`proximity_m`].
#[derive(Clone, Debug)]
pub struct Proximity<T> {
    pub value: T,
    pub nodes: usize,
}

/// `m(r, fn) = (1/2 pi) int log+ |fn(r e^{i theta})| d theta` by the
/// trapezoid rule, doubling the node count until successive estimates agree
/// to [`QUADRATURE_TOL`].
pub fn proximity_m<T: Real, F: Evaluable<T> + ?Sized>(
    func: &F,
    r: &T,
    nodes: usize,
) -> Result<Proximity<T>> {
    let ctx = r.ctx();
    let mut n = nodes.max(8);
    let mut sum = log_plus_sum(func, r, n, 0, 1)?;
    let mut prev = sum.clone() / T::from_i64(n as i64, ctx);
    let mut older = prev.clone();
    while n < QUADRATURE_NODE_CAP {
        // The refined grid adds the midpoints of the current one.
        sum = sum + log_plus_sum(func, r, 2 * n, 1, 2)?;
        n *= 2;
        let cur = sum.clone() / T::from_i64(n as i64, ctx);
        if (cur.clone() - &prev).abs().to_f64() < QUADRATURE_TOL {
            return Ok(Proximity {
                value: cur,
                nodes: n,
            });
        }
        older = std::mem::replace(&mut prev, cur);
    }
    Err(Error::Quadrature {
        nodes: n,
        last: prev.to_f64(),
        previous: older.to_f64(),
    })
}

/// `sum log+|fn|` over nodes `j = start, start+step, ...` of an `n`-point grid.
fn log_plus_sum<T: Real, F: Evaluable<T> + ?Sized>(
    func: &F,
    r: &T,
    n: usize,
    start: usize,
    step: usize,
) -> Result<T> {
    let ctx = r.ctx();
    let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
    let idx: Vec<usize> = (start..n).step_by(step).collect();
    let vals = idx
        .par_iter()
        .map(|&j| {
            let theta = two_pi.clone() * T::from_i64(j as i64, ctx) / T::from_i64(n as i64, ctx);
            let z = PrecComplex::from_polar(r, &theta);
            let l = func.eval_log(&z)?;
            Ok(if l.logmag > T::zero(ctx) {
                l.logmag
            } else {
                T::zero(ctx)
            })
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(vals.into_iter().fold(T::zero(ctx), |a, b| a + b))
}
