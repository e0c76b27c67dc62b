//! Growth of the lacunary product: maximum modulus, Nevanlinna
//! characteristics, order and lower-order scans, the indicator along rays
//! with exceptional disks removed, and the block-asymptotic checks.

use std::f64::consts::{E, LN_10};

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::PrecComplex;
use crate::config::{Block, LacunaryConfig};
use crate::error::{Error, Result};
use crate::evaluable::Evaluable;
use crate::interp::proximity_m;
use crate::logdomain::LogComplex;
use crate::ode::{cauchy_ratio, HProduct};
use crate::product::LacunaryProduct;
use crate::scalar::Real;

/// Witness threshold between the dip ceiling and the peak floor.
pub const WITNESS_FACTOR: f64 = 1.0 / 3.0;
/// Sample count for the block-asymptotic checks.
pub const THM2_SAMPLES: usize = 32;
/// Contour nodes for the disk-boundary checks.
pub const THM2_CONTOUR_NODES: usize = 64;

#[derive(Clone, Debug)]
pub struct MaxModulus<T> {
    pub log_m: T,
    pub theta: T,
}

/// `max_theta ln|fn(r e^{i theta})|` over a uniform grid, refined by
/// golden-section search around the best node.
pub fn log_max_modulus<T: Real, F: Evaluable<T> + ?Sized>(
    func: &F,
    r: &T,
    n_theta: usize,
) -> Result<MaxModulus<T>> {
    let ctx = r.ctx();
    let n = n_theta.max(4);
    let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
    let at =
        |theta: &T| -> Result<T> { Ok(func.eval_log(&PrecComplex::from_polar(r, theta))?.logmag) };
    let grid = (0..n)
        .into_par_iter()
        .map(|j| {
            let theta = two_pi.clone() * T::from_i64(j as i64, ctx) / T::from_i64(n as i64, ctx);
            let v = at(&theta)?;
            Ok((theta, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut best_theta, mut best) = grid[0].clone();
    for (t, v) in &grid[1..] {
        if *v > best {
            best = v.clone();
            best_theta = t.clone();
        }
    }
    let h = two_pi.clone() / T::from_i64(n as i64, ctx);
    let mut a = best_theta.clone() - &h;
    let mut b = best_theta.clone() + &h;
    let invphi = T::from_f64((5f64.sqrt() - 1.0) / 2.0, ctx);
    let resolution = T::from_f64(1e-6, ctx) * &two_pi;
    let mut c = b.clone() - (b.clone() - &a) * &invphi;
    let mut d = a.clone() + (b.clone() - &a) * &invphi;
    let mut fc = at(&c)?;
    let mut fd = at(&d)?;
    while (b.clone() - &a) > resolution {
        if fc > fd {
            b = d;
            d = c.clone();
            fd = fc;
            c = b.clone() - (b.clone() - &a) * &invphi;
            fc = at(&c)?;
        } else {
            a = c;
            c = d.clone();
            fc = fd;
            d = a.clone() + (b.clone() - &a) * &invphi;
            fd = at(&d)?;
        }
    }
    for (t, v) in [(c, fc), (d, fd)] {
        if v > best {
            best = v;
            best_theta = t;
        }
    }
    Ok(MaxModulus {
        log_m: best,
        theta: best_theta,
    })
}

/// Two-sided bounds on `ln M(r)` for the untruncated lacunary product.
#[derive(Clone, Debug)]
pub struct LogMaxBounds<T> {
    /// `sum_j ln(1 + (r/r_j)^{n_j})`.
    pub upper: T,
    /// `ln|f|` at the point `r e^{i pi/n_d}`, `d` the last non-negligible block.
    pub lower: T,
    /// Blocks that contributed.
    pub blocks: usize,
}

fn softplus<T: Real>(x: &T) -> T {
    let ctx = x.ctx();
    if *x > T::zero(ctx) {
        x.clone() + (-x.clone()).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Rigorous bracket of `ln M(r)` from term sums at `ln r = log_r`, generating
/// blocks from the schedule until the remaining ones are negligible.
pub fn lacunary_log_max<T: Real>(
    cfg: &LacunaryConfig,
    log_r: &T,
    ctx: T::Ctx,
) -> Result<LogMaxBounds<T>> {
    let cutoff = T::from_f64((T::digits(ctx) as f64 + 10.0) * LN_10, ctx);
    let mut used: Vec<Block> = Vec::new();
    let mut upper = T::zero(ctx);
    let mut j = 1;
    loop {
        let Some(b) = cfg.block(j) else {
            if cfg.rule == crate::config::ScheduleRule::Explicit {
                break;
            }
            return Err(Error::Config(format!(
                "radius e^{:.1} needs block {j}, beyond what the schedule can generate",
                log_r.to_f64()
            )));
        };
        let x = b.degree::<T>(ctx) * (log_r.clone() - b.log_radius::<T>(ctx));
        if x < -cutoff.clone() {
            break;
        }
        upper = upper + softplus(&x);
        used.push(b);
        j += 1;
    }
    if used.is_empty() {
        return Ok(LogMaxBounds {
            upper: upper.clone(),
            lower: upper,
            blocks: 0,
        });
    }
    let last = &used[used.len() - 1];
    let theta = T::pi(ctx) / last.degree::<T>(ctx);
    let product = LacunaryProduct::<T>::from_blocks(&used, None, ctx);
    let lz = LogComplex {
        logmag: log_r.clone(),
        arg: theta,
    };
    let lower = product.eval_f_log(&lz)?.value.logmag;
    Ok(LogMaxBounds {
        upper,
        lower,
        blocks: used.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusKind {
    /// `r = r_k`
    Dip,
    /// `r = e r_k`
    Peak,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    pub k: usize,
    pub kind: RadiusKind,
    pub log_r: f64,
    /// `ln M(r)` bracket as decimal strings; these overflow `f64` from the
    /// seventh factorial block on.
    pub log_m_upper: String,
    pub log_m_lower: String,
    /// `ln ln M(r) / ln r`
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderScan {
    pub rows: Vec<OrderRow>,
    pub max_peak: f64,
    pub min_dip: f64,
    pub dips_strictly_decreasing: bool,
    /// `|peak - rho|` nonincreasing along the scan.
    pub peaks_approach_rho: bool,
}

pub fn order_scan<T: Real>(
    cfg: &LacunaryConfig,
    ks: std::ops::RangeInclusive<usize>,
    ctx: T::Ctx,
) -> Result<OrderScan> {
    let mut rows = Vec::new();
    for k in ks {
        let b = cfg
            .block(k)
            .ok_or_else(|| Error::Config(format!("block {k} is not available")))?;
        let lr: T = b.log_radius(ctx);
        for (kind, shift) in [(RadiusKind::Dip, 0.0), (RadiusKind::Peak, 1.0)] {
            let log_r = lr.clone() + T::from_f64(shift, ctx);
            let m = lacunary_log_max(cfg, &log_r, ctx)?;
            let ratio = (m.upper.ln() / &log_r).to_f64();
            rows.push(OrderRow {
                k,
                kind,
                log_r: log_r.to_f64(),
                log_m_upper: m.upper.to_sci(17),
                log_m_lower: m.lower.to_sci(17),
                ratio,
            });
        }
    }
    let peaks: Vec<f64> = rows
        .iter()
        .filter(|r| r.kind == RadiusKind::Peak)
        .map(|r| r.ratio)
        .collect();
    let dips: Vec<f64> = rows
        .iter()
        .filter(|r| r.kind == RadiusKind::Dip)
        .map(|r| r.ratio)
        .collect();
    let rho = cfg.rho_f;
    Ok(OrderScan {
        max_peak: peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min_dip: dips.iter().cloned().fold(f64::INFINITY, f64::min),
        dips_strictly_decreasing: dips.windows(2).all(|w| w[1] < w[0]),
        peaks_approach_rho: peaks
            .windows(2)
            .all(|w| (w[1] - rho).abs() <= (w[0] - rho).abs()),
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub ks: Vec<usize>,
    /// `ln M(r_k) / r_k^rho` (upper bracket).
    pub a: Vec<f64>,
    /// `ln M(e r_k) / (e r_k)^rho` (lower bracket).
    pub b: Vec<f64>,
    /// `ln a_k`, `ln b_k`; `a_k` underflows `f64` for large `k`.
    pub log_a: Vec<f64>,
    pub log_b: Vec<f64>,
    pub violation: bool,
}

/// Compares `ln M / r^rho` at the dips and peaks. A violation means the
/// indicator along the positive axis cannot converge.
pub fn crg_witness<T: Real>(
    cfg: &LacunaryConfig,
    rho: f64,
    ks: std::ops::RangeInclusive<usize>,
    ctx: T::Ctx,
) -> Result<Witness> {
    let rho_t = T::from_f64(rho, ctx);
    let mut out = Witness {
        ks: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
        log_a: Vec::new(),
        log_b: Vec::new(),
        violation: false,
    };
    for k in ks {
        let blk = cfg
            .block(k)
            .ok_or_else(|| Error::Config(format!("block {k} is not available")))?;
        let lr: T = blk.log_radius(ctx);
        let dip = lacunary_log_max(cfg, &lr, ctx)?;
        let log_a = dip.upper.ln() - lr.clone() * &rho_t;
        let lp = lr + T::one(ctx);
        let peak = lacunary_log_max(cfg, &lp, ctx)?;
        let log_b = peak.lower.ln() - lp * &rho_t;
        out.ks.push(k);
        out.a.push(log_a.exp().to_f64());
        out.b.push(log_b.exp().to_f64());
        out.log_a.push(log_a.to_f64());
        out.log_b.push(log_b.to_f64());
    }
    let max_a = out.log_a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_b = out.log_b.iter().cloned().fold(f64::INFINITY, f64::min);
    out.violation = !out.ks.is_empty() && max_a < WITNESS_FACTOR.ln() + min_b;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Nevanlinna<T> {
    pub m: T,
    pub n: T,
    pub t: T,
    pub nodes: usize,
}

/// `m(r)` by quadrature, `N(r) = sum_{|z_k| <= r} ln(r/|z_k|)` in closed form.
pub fn nevanlinna<T: Real, F: Evaluable<T> + ?Sized>(
    func: &F,
    divisor: &[T],
    r: &T,
    nodes: usize,
) -> Result<Nevanlinna<T>> {
    let ctx = r.ctx();
    let guard = T::from_f64(1e-3, ctx);
    let mut n = T::zero(ctx);
    for d in divisor {
        if ((r.clone() - d).abs() / d) < guard {
            return Err(Error::Config(format!(
                "radius {} is within relative 1e-3 of a divisor modulus",
                r.to_sci(6)
            )));
        }
        if *d <= *r {
            n = n + (r.clone() / d).ln();
        }
    }
    let prox = proximity_m(func, r, nodes)?;
    let t = prox.value.clone() + &n;
    Ok(Nevanlinna {
        m: prox.value,
        n,
        t,
        nodes: prox.nodes,
    })
}

/// A disk `|z - center| <= radius` removed from indicator sampling.
#[derive(Clone, Debug)]
pub struct ExceptionalDisk<T> {
    /// Owning block, 0 for the zeros of `H`.
    pub block: usize,
    /// Index of the zero within its block, as a signed turn count.
    pub turns: T,
    pub center: PrecComplex<T>,
    pub radius: T,
}

impl<T: Real> ExceptionalDisk<T> {
    pub fn same(&self, other: &Self) -> bool {
        self.block == other.block && self.turns == other.turns
    }
}

pub trait ExclusionRule<T: Real>: Sync {
    fn disk_containing(&self, z: &PrecComplex<T>) -> Option<ExceptionalDisk<T>>;
}

/// Nothing is excluded.
pub struct NoExclusion;

impl<T: Real> ExclusionRule<T> for NoExclusion {
    fn disk_containing(&self, _z: &PrecComplex<T>) -> Option<ExceptionalDisk<T>> {
        None
    }
}

/// Disks `|z - xi| <= r_k/n_k` around the zeros, including blocks too large
/// to index.
impl<T: Real> ExclusionRule<T> for LacunaryProduct<T> {
    fn disk_containing(&self, z: &PrecComplex<T>) -> Option<ExceptionalDisk<T>> {
        let ctx = self.ctx();
        let arg = z.arg();
        let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
        for k in 1..=self.k() {
            let n = self.degree(k);
            let turns = (arg.clone() * n / &two_pi).round();
            let angle = turns.clone() * &two_pi / n;
            let center = PrecComplex::from_polar(self.radius(k), &angle);
            let radius = self.radius(k).clone() / n;
            if (z - &center).abs() <= radius {
                return Some(ExceptionalDisk {
                    block: k,
                    turns,
                    center,
                    radius,
                });
            }
        }
        None
    }
}

/// Disks around `-m^{1/rho}` of radius (local spacing)/(2 pi), the same
/// scale as `r_k/n_k` for equally spaced zeros.
impl<T: Real> ExclusionRule<T> for HProduct<T> {
    fn disk_containing(&self, z: &PrecComplex<T>) -> Option<ExceptionalDisk<T>> {
        let a = self.zero_moduli();
        let ctx = z.ctx();
        let x = z.abs();
        let idx = a.partition_point(|v| *v < x);
        let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
        for m in [idx.saturating_sub(1), idx.min(a.len() - 1)] {
            let spacing = if m + 1 < a.len() {
                a[m + 1].clone() - &a[m]
            } else if m > 0 {
                a[m].clone() - &a[m - 1]
            } else {
                a[m].clone()
            };
            let radius = spacing / &two_pi;
            let center = PrecComplex::from_real(-a[m].clone());
            if (z - &center).abs() <= radius {
                return Some(ExceptionalDisk {
                    block: 0,
                    turns: T::from_i64(m as i64 + 1, ctx),
                    center,
                    radius,
                });
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct IndicatorSample<T> {
    pub r: T,
    pub theta: T,
    pub log_abs: Option<T>,
    /// `ln|fn| / r^rho`
    pub ratio: Option<f64>,
    pub excluded: bool,
}

#[derive(Clone, Debug)]
pub struct IndicatorScan<T> {
    pub samples: Vec<IndicatorSample<T>>,
    pub disks: Vec<ExceptionalDisk<T>>,
    /// `(r, sum of radii of disks that excluded a sample on |z| = r)`.
    pub budgets: Vec<(f64, f64)>,
    pub budget_ok: bool,
}

impl<T: Real> IndicatorScan<T> {
    /// Smallest ratio among non-excluded samples.
    pub fn min_included_ratio(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter(|s| !s.excluded)
            .filter_map(|s| s.ratio)
            .reduce(f64::min)
    }
}

/// `ln|fn(r e^{i theta})| / r^rho` on a grid, skipping samples inside the
/// exceptional disks. The radii of the disks used at each `r` must sum to
/// less than `r/10`.
pub fn indicator_scan<T: Real, F: Evaluable<T> + ?Sized, X: ExclusionRule<T> + ?Sized>(
    func: &F,
    rho: f64,
    thetas: &[T],
    radii: &[T],
    exclusion: &X,
) -> Result<IndicatorScan<T>> {
    let mut samples = Vec::with_capacity(thetas.len() * radii.len());
    let mut disks: Vec<ExceptionalDisk<T>> = Vec::new();
    let mut budgets = Vec::new();
    let mut budget_ok = true;
    for r in radii {
        let ctx = r.ctx();
        let scale = (r.ln() * T::from_f64(rho, ctx)).exp();
        let row = thetas
            .par_iter()
            .map(|theta| {
                let z = PrecComplex::from_polar(r, theta);
                let disk = exclusion.disk_containing(&z);
                let value = match func.eval_log(&z) {
                    Ok(v) => Some(v.logmag),
                    Err(_) if disk.is_some() => None,
                    Err(e) => return Err(e),
                };
                let ratio = value
                    .as_ref()
                    .filter(|v| v.is_finite())
                    .map(|v| (v.clone() / &scale).to_f64());
                Ok((
                    IndicatorSample {
                        r: r.clone(),
                        theta: theta.clone(),
                        log_abs: value,
                        ratio,
                        excluded: disk.is_some(),
                    },
                    disk,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut used: Vec<ExceptionalDisk<T>> = Vec::new();
        for (s, d) in row {
            samples.push(s);
            if let Some(d) = d {
                if !used.iter().any(|u| u.same(&d)) {
                    used.push(d);
                }
            }
        }
        let total: f64 = used.iter().map(|d| d.radius.to_f64()).sum();
        let rf = r.to_f64();
        if total >= rf / 10.0 {
            budget_ok = false;
        }
        budgets.push((rf, total));
        for d in used {
            if !disks.iter().any(|u| u.same(&d)) {
                disks.push(d);
            }
        }
    }
    Ok(IndicatorScan {
        samples,
        disks,
        budgets,
        budget_ok,
    })
}

/// One of the block-asymptotic checks.
#[derive(Clone, Debug, Serialize)]
pub struct SubCheck {
    pub name: &'static str,
    pub eq: &'static str,
    pub deviation: f64,
    /// Error scale the deviation is compared against.
    pub scale: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm2Report {
    pub k: usize,
    pub checks: Vec<SubCheck>,
    /// `(block, zeros of f' inside D_xi for the zero xi = r_block)`.
    pub fprime_zeros_by_block: Vec<(usize, i64)>,
    /// `(block, deviation, scale)` of `|f'|` on the disk boundary.
    pub boundary_by_block: Vec<(usize, f64, f64)>,
    pub pass: bool,
}

/// Sample points with `|z|` in `[0.9 r_k, 1.1 r_k]` outside every `D_xi`.
fn thm2_points<T: Real>(f: &LacunaryProduct<T>, k: usize) -> Vec<PrecComplex<T>> {
    let ctx = f.ctx();
    let r = f.radius(k).clone();
    let n = f.degree(k).clone();
    let pi = T::pi(ctx);
    let golden = T::from_f64(2.0 * std::f64::consts::PI * 0.381_966_011_250_105_1, ctx);
    (0..THM2_SAMPLES)
        .map(|i| {
            let t = T::from_f64(0.9 + 0.2 * (i as f64 + 0.5) / THM2_SAMPLES as f64, ctx);
            let mut theta = golden.clone() * T::from_i64(i as i64 + 1, ctx);
            let rad = r.clone() * &t;
            let mut z = PrecComplex::from_polar(&rad, &theta);
            if f.disk_containing(&z).is_some() {
                theta = theta + pi.clone() / &n;
                z = PrecComplex::from_polar(&rad, &theta);
            }
            z
        })
        .collect()
}

/// Checks the block asymptotics of `f` near `|z| = r_k`: the leading-product
/// form, the logarithmic derivative, `|f'|` on the disk boundary, and that
/// `f'` has no zero in the disk.
pub fn verify_thm2_asymptotics<T: Real>(
    cfg: &LacunaryConfig,
    k: usize,
    ctx: T::Ctx,
) -> Result<Thm2Report> {
    if k < 2 || k > cfg.k() {
        return Err(Error::Config(format!("k = {k} outside 2..={}", cfg.k())));
    }
    let f = LacunaryProduct::<T>::with_ctx(cfg, ctx);
    let head = LacunaryProduct::<T>::from_blocks(&cfg.blocks()[..k], None, ctx);
    let points = thm2_points(&f, k);
    let one = T::one(ctx);
    let p = T::digits(ctx) as f64;
    let floor_full = 10f64.powf(-p + 10.0);
    let floor_half = 10f64.powf(-p / 2.0);

    // |w_j| at a point, j 1-based.
    let wmag = |z: &PrecComplex<T>, j: usize| -> T {
        let lr = f.log_radius(j).clone();
        (f.degree(j).clone() * (z.abs().ln() - lr)).exp()
    };

    let rows = points
        .par_iter()
        .map(|z| -> Result<[f64; 6]> {
            let full = f.eval_f(z)?;
            let part = head.eval_f(z)?.value;
            let ratio = full.value.div(&part)?.to_value()?;
            let dev_i = (&ratio - &PrecComplex::one(ctx)).abs().to_f64();
            let mut bound_i = T::zero(ctx);
            for j in (k + 1)..=f.k() {
                bound_i = bound_i + wmag(z, j).ln_1p();
            }
            let tail = full.log_tail.map_or(0.0, |l| l.to_f64().exp());
            let scale_i = (bound_i.exp() - &one).to_f64() + tail;

            // (2a) leading form: (1 - w_k) (-1)^{k-1} prod_{j<k} w_j
            let lz = LogComplex::from_value(z);
            let mut lead = LogComplex::one(ctx);
            let mut bound_a = T::zero(ctx);
            for j in 1..k {
                let wl = LogComplex {
                    logmag: lz.logmag.clone() - f.log_radius(j),
                    arg: lz.arg.clone(),
                }
                .pow(f.degree(j))?;
                lead = lead.mul(&wl.neg());
                bound_a = bound_a + (one.clone() / wmag(z, j)).ln_1p();
            }
            let wk = LogComplex {
                logmag: lz.logmag.clone() - f.log_radius(k),
                arg: lz.arg.clone(),
            }
            .pow(f.degree(k))?;
            let qk = crate::logdomain::log_add(&LogComplex::one(ctx), &wk.neg())?.value;
            lead = lead.mul(&qk);
            let dev_a = (&part.div(&lead)?.to_value()? - &PrecComplex::one(ctx))
                .abs()
                .to_f64();
            let scale_a = (bound_a.exp() - &one).to_f64();

            // (2c): z f'/f against sum_{j<k} n_j + n_k w/(w - 1)
            let d = f.derivs(z)?;
            let zl = d.f1.div(&d.f)?.to_value()?;
            let zl = z * &zl;
            let wv = wk.to_value()?;
            let sk = &wv / &(&wv - &PrecComplex::one(ctx));
            let mut lower_sum = T::zero(ctx);
            let mut bound_ii = T::zero(ctx);
            for j in 1..k {
                lower_sum = lower_sum + f.degree(j);
                bound_ii = bound_ii + f.degree(j).clone() / (wmag(z, j) - &one);
            }
            for j in (k + 1)..=f.k() {
                let w = wmag(z, j);
                bound_ii = bound_ii + f.degree(j).clone() * &w / (one.clone() - &w);
            }
            let model = &PrecComplex::from_real(lower_sum) + &sk.scale(f.degree(k));
            let dev_ii = ((&zl - &model).abs() / f.degree(k)).to_f64();
            let scale_ii = (bound_ii / f.degree(k)).to_f64();
            Ok([dev_i, scale_i, dev_a, scale_a, dev_ii, scale_ii])
        })
        .collect::<Result<Vec<_>>>()?;
    let max_col = |c: usize| rows.iter().map(|r| r[c]).fold(0.0, f64::max);
    let mut checks = Vec::new();
    let pass_i = rows
        .iter()
        .all(|r| r[0] <= r[1] * (1.0 + 1e-6) + floor_full);
    checks.push(SubCheck {
        name: "partial_product",
        eq: "2a",
        deviation: max_col(0),
        scale: max_col(1),
        pass: pass_i,
    });
    let pass_a = rows
        .iter()
        .all(|r| r[2] <= r[3] * (1.0 + 1e-6) + floor_full);
    checks.push(SubCheck {
        name: "leading_form",
        eq: "2a",
        deviation: max_col(2),
        scale: max_col(3),
        pass: pass_a,
    });
    let pass_ii = rows
        .iter()
        .all(|r| r[4] <= r[5] * (1.0 + 1e-6) + floor_half);
    checks.push(SubCheck {
        name: "log_derivative",
        eq: "2c",
        deviation: max_col(4),
        scale: max_col(5),
        pass: pass_ii,
    });

    let mut boundary = Vec::new();
    for j in 2..=f.k() {
        if *f.degree(j) > one {
            let (dev, scale) = fprime_on_disk_boundary(&f, j)?;
            boundary.push((j, dev, scale));
        }
    }
    let worst = boundary
        .iter()
        .cloned()
        .max_by(|a, b| (a.1 / a.2).total_cmp(&(b.1 / b.2)))
        .unwrap_or((k, 0.0, 0.0));
    checks.push(SubCheck {
        name: "fprime_on_boundary",
        eq: "2e",
        deviation: worst.1,
        scale: worst.2,
        pass: boundary.iter().all(|b| b.1 <= b.2),
    });

    let zero = f.zero(k, 0)?;
    let cr = cauchy_ratio(&f, &zero, THM2_CONTOUR_NODES)?;
    let min_abs = cr.min_log_abs_fprime.to_f64();
    checks.push(SubCheck {
        name: "fprime_zero_free",
        eq: "2f",
        deviation: cr.fprime_zeros_inside as f64,
        scale: min_abs,
        pass: cr.fprime_zeros_inside == 0 && min_abs.is_finite(),
    });

    let mut by_block = Vec::new();
    for j in 1..=f.k() {
        if f.count(j).is_none() {
            continue;
        }
        let cr = cauchy_ratio(&f, &f.zero(j, 0)?, THM2_CONTOUR_NODES)?;
        by_block.push((j, cr.fprime_zeros_inside));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Thm2Report {
        k,
        checks,
        fprime_zeros_by_block: by_block,
        boundary_by_block: boundary,
        pass,
    })
}

/// `|f'|` on `z = r_k (1 + zeta/n_k)` against
/// `(1/r_k) prod_{j<k} (r_k/r_j)^{n_j} n_k |e^zeta|`.
///
/// The scale is the first-order size of the neglected terms:
/// `(S/n)(1 + e) + 1/(n - 1) + sum_{j<k} 2/|w_j| + sum_{j>k} 2|w_j|` with
/// `S = sum_{j<k} n_j`, the `w_j` taken at their least favourable modulus on
/// the circle.
fn fprime_on_disk_boundary<T: Real>(f: &LacunaryProduct<T>, k: usize) -> Result<(f64, f64)> {
    let ctx = f.ctx();
    let n = f.degree(k).clone();
    let r = f.radius(k).clone();
    let lr = f.log_radius(k).clone();
    let one = T::one(ctx);
    let mut log_pred = n.ln() - &lr;
    let mut s = T::zero(ctx);
    for j in 1..k {
        log_pred = log_pred + f.degree(j).clone() * (lr.clone() - f.log_radius(j));
        s = s + f.degree(j);
    }
    let lo = (one.clone() - one.clone() / &n).ln() + &lr;
    let hi = (one.clone() + one.clone() / &n).ln() + &lr;
    let mut scale = s.clone() / &n * T::from_f64(1.0 + E, ctx);
    if n > one {
        scale = scale + one.clone() / (n.clone() - &one);
    }
    for j in 1..k {
        let w = (f.degree(j).clone() * (lo.clone() - f.log_radius(j))).exp();
        scale = scale + T::from_i64(2, ctx) / w;
    }
    for j in (k + 1)..=f.k() {
        let w = (f.degree(j).clone() * (hi.clone() - f.log_radius(j))).exp();
        scale = scale + T::from_i64(2, ctx) * w;
    }
    let nodes = THM2_CONTOUR_NODES;
    let two_pi = T::pi(ctx) * T::from_i64(2, ctx);
    let devs = (0..nodes)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let phi = two_pi.clone() * T::from_i64(j as i64, ctx) / T::from_i64(nodes as i64, ctx);
            let zeta = PrecComplex::cis(&phi);
            let z =
                PrecComplex::from_real(r.clone()) * (&PrecComplex::one(ctx) + &zeta.div_real(&n));
            let d = f.derivs(&z)?;
            let log_ratio = d.f1.logmag.clone() - &log_pred - &zeta.re;
            Ok((log_ratio.exp() - &one).abs().to_f64())
        })
        .collect::<Result<Vec<_>>>()?;
    let deviation = devs.iter().cloned().fold(0.0, f64::max);
    Ok((deviation, scale.to_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScheduleRule;
    use crate::interp::RationalInterpolant;
    use crate::ode::build_h;
    use crate::scalar::{Mp, Precision};

    const P: u32 = 60;

    fn ctx() -> Precision {
        Precision::from_digits(P)
    }

    fn mp(x: f64) -> Mp {
        Mp::from_f64(x, ctx())
    }

    fn factorial(k: usize) -> LacunaryConfig {
        LacunaryConfig::make_schedule_with_precision(0.5, k, ScheduleRule::Factorial, P).unwrap()
    }

    #[test]
    fn max_modulus_examples() {
        let cfg = LacunaryConfig::from_blocks(0.5, &[(1.0, 2)], P, true).unwrap();
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let m = log_max_modulus(&f, &mp(2.0), 64).unwrap();
        assert!((m.log_m.to_f64() - 5f64.ln()).abs() < 1e-12);
        let cfg = LacunaryConfig::from_blocks(0.5, &[(4.0, 2)], P, true).unwrap();
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let m = log_max_modulus(&f, &mp(8.0), 64).unwrap();
        assert!((m.log_m.to_f64() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn max_modulus_matches_term_sum_at_peak() {
        let cfg = factorial(4);
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let log_r = cfg.blocks()[3].log_radius::<Mp>(ctx()) + Mp::one(ctx());
        let r = log_r.exp();
        let m = log_max_modulus(&f, &r, 16384).unwrap();
        let terms = lacunary_log_max(&cfg, &log_r, ctx()).unwrap();
        let rel = (m.log_m.to_f64() - terms.upper.to_f64()).abs() / terms.upper.to_f64();
        assert!(rel < 0.01);
        assert!((terms.upper.to_f64() - 4254.0).abs() < 1.0);
        assert!(terms.lower <= terms.upper);
    }

    #[test]
    fn polynomial_ratios_fall() {
        let cfg = LacunaryConfig::from_blocks(0.5, &[(4.0, 2)], P, true).unwrap();
        let mut prev = f64::INFINITY;
        for lr in [5.0, 10.0, 20.0, 40.0] {
            let m = lacunary_log_max(&cfg, &mp(lr), ctx()).unwrap();
            let ratio = m.upper.ln().to_f64() / lr;
            assert!(ratio < prev);
            prev = ratio;
        }
    }

    #[test]
    fn order_scan_factorial() {
        let cfg = factorial(4);
        let scan = order_scan::<Mp>(&cfg, 4..=7, ctx()).unwrap();
        let peak4 = scan
            .rows
            .iter()
            .find(|r| r.k == 4 && r.kind == RadiusKind::Peak)
            .unwrap();
        assert!(peak4.ratio > 0.4 && peak4.ratio < 0.7);
        assert!(scan.dips_strictly_decreasing);
        assert!(scan.peaks_approach_rho);
        for r in &scan.rows {
            let lo = Mp::parse(&r.log_m_lower, ctx()).unwrap();
            let hi = Mp::parse(&r.log_m_upper, ctx()).unwrap();
            assert!(lo <= hi);
        }
    }

    #[test]
    fn witness() {
        let cfg = factorial(4);
        let w = crg_witness::<Mp>(&cfg, 0.5, 4..=7, ctx()).unwrap();
        assert!(w.violation);
        assert!(w.a[1] < 0.05);
        assert!(w.b[0] > 0.3 && w.b[0] < 1.5);
        let single = LacunaryConfig::from_blocks(0.5, &[(4.0, 2)], P, true).unwrap();
        let w = crg_witness::<Mp>(&single, 0.5, 1..=1, ctx()).unwrap();
        assert!(!w.violation);
    }

    #[test]
    fn nevanlinna_examples() {
        struct Poly;
        impl Evaluable<Mp> for Poly {
            fn eval_log(&self, z: &PrecComplex<Mp>) -> Result<LogComplex<Mp>> {
                let one = PrecComplex::one(z.ctx());
                Ok(LogComplex::from_value(&(&one - &(z * z))))
            }
        }
        let e = mp(E);
        let nv = nevanlinna(&Poly, &[mp(1.0), mp(1.0)], &e, 64).unwrap();
        assert!((nv.n.to_f64() - 2.0).abs() < 1e-12);
        assert!(nv.m.to_f64() >= 0.0);
        assert!((nv.t.clone() - nv.m.clone() - &nv.n).abs().to_f64() < 1e-50);
        assert!(nevanlinna(&Poly, &[mp(1.0)], &mp(1.0005), 64).is_err());
    }

    #[test]
    fn lemma_surrogate() {
        let cfg = factorial(3);
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let g = RationalInterpolant::residues_from_f(&f, &cfg).unwrap();
        let moduli: Vec<Mp> = g.poles().iter().map(|p| p.modulus().clone()).collect();
        let r = mp(6400.0);
        let nv = nevanlinna(&g, &moduli, &r, 64).unwrap();
        assert!((nv.t.clone() - &nv.n).abs().to_f64() < 0.05);
    }

    #[test]
    fn indicator_of_h_is_positive() {
        let h = build_h::<Mp>(0.25, 1000, ctx()).unwrap();
        let thetas: Vec<Mp> = (0..360)
            .map(|d| mp(d as f64) * Mp::pi(ctx()) / mp(180.0))
            .collect();
        let scan = indicator_scan(&h, 0.25, &thetas, &[mp(1e6)], &h).unwrap();
        assert!(scan.budget_ok);
        assert!(scan.min_included_ratio().unwrap() > 0.0);
        for s in &scan.samples {
            if let Some(d) = &h.disk_containing(&PrecComplex::from_polar(&s.r, &s.theta)) {
                assert!(s.excluded && d.radius.to_f64() > 0.0);
            }
        }
    }

    #[test]
    fn indicator_conjugate_symmetry() {
        let cfg = LacunaryConfig::from_blocks(0.5, &[(4.0, 2), (16.0, 4)], P, true).unwrap();
        let f = LacunaryProduct::<Mp>::new(&cfg);
        let thetas: Vec<Mp> = [0.3, -0.3, 1.1, -1.1].iter().map(|&t| mp(t)).collect();
        let scan = indicator_scan(&f, 0.5, &thetas, &[mp(10.0)], &f).unwrap();
        let v: Vec<f64> = scan.samples.iter().map(|s| s.ratio.unwrap()).collect();
        assert!((v[0] - v[1]).abs() < 1e-40 && (v[2] - v[3]).abs() < 1e-40);
    }

    #[test]
    fn lacunary_indicator_jumps() {
        let cfg = factorial(4);
        for (k, digits) in [(5usize, 60), (6, 150)] {
            let ctx = Precision::from_digits(digits);
            let mp = |x: f64| Mp::from_f64(x, ctx);
            let blocks = cfg.blocks_through(k + 1).unwrap();
            let f = LacunaryProduct::<Mp>::from_blocks(&blocks, None, ctx);
            let rk = blocks[k - 1].radius::<Mp>(ctx);
            let nk = blocks[k - 1].degree::<Mp>(ctx);
            let dip = rk.clone() * (Mp::one(ctx) + mp(2.0) / nk);
            let peak = rk * mp(E);
            let scan = indicator_scan(&f, 0.5, &[Mp::zero(ctx)], &[dip, peak], &f).unwrap();
            let a = scan.samples[0].ratio.unwrap();
            let b = scan.samples[1].ratio.unwrap();
            assert!(!scan.samples[0].excluded && !scan.samples[1].excluded);
            assert!(b > 5.0 * a, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn block_asymptotics() {
        let cfg = factorial(4);
        let rep = verify_thm2_asymptotics::<Mp>(&cfg, 3, ctx()).unwrap();
        assert!(rep.pass, "{rep:?}");
        let rep = verify_thm2_asymptotics::<Mp>(&cfg, 4, ctx()).unwrap();
        let ii = rep.checks.iter().find(|c| c.eq == "2c").unwrap();
        assert!(ii.deviation < 2.0 * 11.0 / 4096.0);

        let two = LacunaryConfig::from_blocks(0.5, &[(4.0, 2), (16.0, 4)], P, true).unwrap();
        let rep = verify_thm2_asymptotics::<Mp>(&two, 2, ctx()).unwrap();
        assert_eq!(rep.checks[0].deviation, 0.0);
    }
}
