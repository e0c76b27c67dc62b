//! Verification checks over an assembled coefficient system, reported as
//! flat records.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::PrecComplex;
use crate::error::{Error, Result};
use crate::growth::{nevanlinna, verify_thm2_asymptotics, ExclusionRule};
use crate::interp::{proximity_m, ZeroTag};
use crate::ode::{cauchy_ratio, CoefficientSystem, Which};
use crate::scalar::Real;

/// Contour nodes for the Cauchy-bound chain.
pub const CAUCHY_NODES: usize = 256;
/// Starting nodes for `m(r, g)`.
pub const PROXIMITY_NODES: usize = 64;
/// Radii for `m(r, g)`, in units of the outermost radius.
pub const PROXIMITY_FACTORS: [f64; 3] = [10.0, 100.0, 1000.0];
pub const PROXIMITY_FINAL_BOUND: f64 = 0.01;
pub const CHARACTERISTIC_BOUND: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Residuals,
    Interpolation,
    Summability,
    Cauchy,
    Asymptotics,
    Proximity,
    Characteristic,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Residuals,
        Check::Interpolation,
        Check::Summability,
        Check::Cauchy,
        Check::Asymptotics,
        Check::Proximity,
        Check::Characteristic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Residuals => "residuals",
            Check::Interpolation => "interpolation",
            Check::Summability => "summability",
            Check::Cauchy => "cauchy",
            Check::Asymptotics => "asymptotics",
            Check::Proximity => "proximity",
            Check::Characteristic => "characteristic",
        }
    }

    /// Comma-separated names, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Check>> {
        if s.trim() == "all" {
            return Ok(Check::ALL.to_vec());
        }
        s.split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<_>>>()
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check '{s}'")))
    }
}

/// One line of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check: String,
    pub eq: String,
    /// `[re, im]` to 20 significant digits, when the check is pointwise.
    pub point: Option<[String; 2]>,
    /// Non-finite values are written as `null`.
    pub value: Option<f64>,
    /// Absent when the check has no finite threshold.
    pub bound: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_scale: Option<f64>,
}

impl Record {
    fn new(check: &str, eq: &str, value: f64, bound: f64, pass: bool) -> Self {
        Record {
            check: check.to_string(),
            eq: eq.to_string(),
            point: None,
            value: Some(value).filter(|v| v.is_finite()),
            bound: Some(bound).filter(|b| b.is_finite()),
            pass,
            block: None,
            c_scale: None,
        }
    }

    fn at<T: Real>(mut self, z: &PrecComplex<T>) -> Self {
        self.point = Some([z.re.to_sci(20), z.im.to_sci(20)]);
        self
    }

    fn block(mut self, k: usize) -> Self {
        self.block = Some(k);
        self
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub checks: Vec<Check>,
    pub seed: u64,
    pub residual_points: usize,
    pub c_scales: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            checks: Check::ALL.to_vec(),
            seed: 0,
            residual_points: 200,
            c_scales: vec![1.0, 10.0],
        }
    }
}

/// Runs the selected checks in the order given.
pub fn run_checks<T: Real>(
    sys: &CoefficientSystem<T>,
    opts: &VerifyOptions,
) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for check in &opts.checks {
        let recs = match check {
            Check::Residuals => residual_records(sys, opts)?,
            Check::Interpolation => interpolation_records(sys)?,
            Check::Summability => summability_records(sys)?,
            Check::Cauchy => cauchy_records(sys)?,
            Check::Asymptotics => asymptotic_records(sys)?,
            Check::Proximity => proximity_records(sys)?,
            Check::Characteristic => characteristic_records(sys)?,
        };
        out.extend(recs);
    }
    Ok(out)
}

/// Annulus `r_1/2 <= |z| <= R` for residual sampling, `R = r_{K-1}` or
/// `2 r_1` for a single block.
pub fn residual_annulus<T: Real>(sys: &CoefficientSystem<T>) -> (f64, f64) {
    let p = &sys.product;
    let k = p.k();
    let lo = p.radius(1).to_f64() / 2.0;
    let hi = if k >= 2 {
        p.radius(k - 1).to_f64()
    } else {
        2.0 * p.radius(1).to_f64()
    };
    (lo, hi.max(lo))
}

/// Points uniform in area on the annulus, rejecting the disks around the
/// zeros of `f`.
pub fn sample_annulus<T: Real>(
    sys: &CoefficientSystem<T>,
    count: usize,
    seed: u64,
) -> Vec<PrecComplex<T>> {
    let ctx = sys.ctx();
    let (lo, hi) = residual_annulus(sys);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s: f64 = rng.gen_range(lo * lo..=hi * hi);
        let theta: f64 = rng.gen_range(0.0..2.0 * PI);
        let z = PrecComplex::from_polar(&T::from_f64(s.sqrt(), ctx), &T::from_f64(theta, ctx));
        if sys.product.disk_containing(&z).is_none() {
            out.push(z);
        }
    }
    out
}

fn residual_records<T: Real>(
    sys: &CoefficientSystem<T>,
    opts: &VerifyOptions,
) -> Result<Vec<Record>> {
    let points = sample_annulus(sys, opts.residual_points, opts.seed);
    let mut out = Vec::new();
    let base = points
        .par_iter()
        .map(|z| sys.residual(z, Which::Base))
        .collect::<Result<Vec<_>>>()?;
    for (z, r) in points.iter().zip(&base) {
        let tol = sys.residual_tolerance(r);
        let v = r.relative.to_f64();
        out.push(Record::new("residual_base", "1c", v, tol, v <= tol).at(z));
    }
    if sys.h.is_none() {
        return Ok(out);
    }
    for &c in &opts.c_scales {
        let mut s = sys.clone();
        s.set_c_scale(c);
        let pert = points
            .par_iter()
            .map(|z| s.residual(z, Which::Perturbed))
            .collect::<Result<Vec<_>>>()?;
        for (z, r) in points.iter().zip(&pert) {
            let tol = s.residual_tolerance(r);
            let v = r.relative.to_f64();
            let mut rec = Record::new("residual_perturbed", "1d", v, tol, v <= tol).at(z);
            rec.c_scale = Some(c);
            out.push(rec);
        }
    }
    Ok(out)
}

/// Worst `|A0 f' + f''|/|f''|` per block against `10^{-P/2}`.
fn interpolation_records<T: Real>(sys: &CoefficientSystem<T>) -> Result<Vec<Record>> {
    let bound = 10f64.powf(-(T::digits(sys.ctx()) as f64) / 2.0);
    let poles = sys.rat.poles();
    let defects = (0..poles.len())
        .into_par_iter()
        .map(|i| -> Result<Option<(usize, f64)>> {
            let Some(tag) = poles[i].tag else {
                return Ok(None);
            };
            Ok(Some((
                tag.block,
                sys.at_zero(i)?.identity_defect()?.to_f64(),
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: Vec<(usize, f64, usize)> = Vec::new();
    for (i, d) in defects.into_iter().enumerate() {
        let Some((block, v)) = d else { continue };
        let v = if v.is_nan() { f64::INFINITY } else { v };
        match worst.iter_mut().find(|w| w.0 == block) {
            Some(w) if v > w.1 => {
                w.1 = v;
                w.2 = i;
            }
            Some(_) => {}
            None => worst.push((block, v, i)),
        }
    }
    Ok(worst
        .into_iter()
        .map(|(block, v, i)| {
            Record::new("interpolation_identity", "3f", v, bound, v < bound)
                .at(&poles[i].z)
                .block(block)
        })
        .collect())
}

fn summability_records<T: Real>(sys: &CoefficientSystem<T>) -> Result<Vec<Record>> {
    let rep = sys.rat.check_summability()?;
    let mut out = vec![Record::new(
        "summability",
        "3x",
        rep.total_bound,
        f64::INFINITY,
        rep.pass,
    )];
    let c = Record::new(
        "residue_bound",
        "1b",
        rep.c_bound,
        f64::INFINITY,
        rep.c_bound.is_finite(),
    );
    out.push(c);
    Ok(out)
}

/// For one zero per block `k >= 2`: `|f''/f'^2| <= 2e prod_{j<k} (r_j/r_k)^{n_j}`
/// and decrease in `k`; from `k = 3` also the Cauchy estimate dominating the
/// direct value.
fn cauchy_records<T: Real>(sys: &CoefficientSystem<T>) -> Result<Vec<Record>> {
    let f = &sys.product;
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for k in 2..=f.k() {
        if f.count(k).is_none() {
            continue;
        }
        let zero = f.zero(k, 0)?;
        let cr = cauchy_ratio(f, &zero, CAUCHY_NODES)?;
        let log_direct = cr.direct.abs().ln();
        let mut log_bound = T::from_f64((2.0 * E).ln(), f.ctx());
        for j in 1..k {
            log_bound =
                log_bound + f.degree(j).clone() * (f.log_radius(j).clone() - f.log_radius(k));
        }
        let direct = log_direct.to_f64().exp();
        let bound = log_bound.to_f64().exp();
        out.push(
            Record::new("cauchy_bound", "2f", direct, bound, log_direct <= log_bound)
                .at(&zero.point)
                .block(k),
        );
        // The Cauchy estimate needs 1/f' analytic on the disk, which the
        // block-asymptotic checks only establish from k = 3 on.
        if k >= 3 {
            let contour = cr.log_contour_bound.to_f64().exp();
            out.push(
                Record::new(
                    "cauchy_contour_bound",
                    "2f",
                    direct,
                    contour,
                    log_direct <= cr.log_contour_bound,
                )
                .at(&zero.point)
                .block(k),
            );
        }
        if let Some(p) = prev {
            out.push(Record::new("cauchy_decreasing", "1b", direct, p, direct < p).block(k));
        }
        prev = Some(direct);
    }
    Ok(out)
}

/// Block asymptotics for every `k >= 3` up to `K`.
fn asymptotic_records<T: Real>(sys: &CoefficientSystem<T>) -> Result<Vec<Record>> {
    let cfg = &sys.config.lacunary;
    let mut out = Vec::new();
    for k in 3..=cfg.k() {
        let rep = verify_thm2_asymptotics::<T>(cfg, k, sys.ctx())?;
        for c in rep.checks {
            out.push(Record::new(c.name, c.eq, c.deviation, c.scale, c.pass).block(k));
        }
    }
    Ok(out)
}

fn outer_radius<T: Real>(sys: &CoefficientSystem<T>) -> T {
    sys.product.radius(sys.product.k()).clone()
}

/// `m(r, g)` at `10, 100, 1000` times the outermost radius: nonincreasing,
/// last value below 0.01.
fn proximity_records<T: Real>(sys: &CoefficientSystem<T>) -> Result<Vec<Record>> {
    let ctx = sys.ctx();
    let rk = outer_radius(sys);
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, factor) in PROXIMITY_FACTORS.iter().enumerate() {
        let r = rk.clone() * T::from_f64(*factor, ctx);
        let m = proximity_m(&sys.rat, &r, PROXIMITY_NODES)?.value.to_f64();
        let last = i + 1 == PROXIMITY_FACTORS.len();
        let (bound, pass) = match (prev, last) {
            (Some(p), true) => (
                PROXIMITY_FINAL_BOUND.min(p),
                m <= p && m < PROXIMITY_FINAL_BOUND,
            ),
            (Some(p), false) => (p, m <= p),
            (None, _) => (f64::INFINITY, m.is_finite()),
        };
        let mut rec = Record::new("proximity", "3a", m, bound, pass);
        rec.point = Some([r.to_sci(20), T::zero(ctx).to_sci(20)]);
        out.push(rec);
        prev = Some(m);
    }
    Ok(out)
}

/// `|T(r, g) - N(r, g)|` at 100 times the outermost radius.
fn characteristic_records<T: Real>(sys: &CoefficientSystem<T>) -> Result<Vec<Record>> {
    let ctx = sys.ctx();
    let r = outer_radius(sys) * T::from_f64(100.0, ctx);
    let moduli: Vec<T> = sys
        .rat
        .poles()
        .iter()
        .map(|p| p.modulus().clone())
        .collect();
    let nv = nevanlinna(&sys.rat, &moduli, &r, PROXIMITY_NODES)?;
    let gap = (nv.t - &nv.n).abs().to_f64();
    let mut rec = Record::new(
        "characteristic",
        "3h",
        gap,
        CHARACTERISTIC_BOUND,
        gap < CHARACTERISTIC_BOUND,
    );
    rec.point = Some([r.to_sci(20), T::zero(ctx).to_sci(20)]);
    Ok(vec![rec])
}

/// A residue as stored on disk: the zero it belongs to and `u` as decimal
/// strings at full working precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueEntry {
    pub block: usize,
    pub index: u64,
    pub z: [String; 2],
    pub u: [String; 2],
}

pub fn residue_entries<T: Real>(sys: &CoefficientSystem<T>) -> Vec<ResidueEntry> {
    let digits = T::digits(sys.ctx()) as usize;
    sys.rat
        .poles()
        .iter()
        .filter_map(|p| {
            let tag = p.tag?;
            Some(ResidueEntry {
                block: tag.block,
                index: tag.index,
                z: [p.z.re.to_sci(digits), p.z.im.to_sci(digits)],
                u: [p.u.re.to_sci(digits), p.u.im.to_sci(digits)],
            })
        })
        .collect()
}

/// Replaces the residues of `sys` with the stored ones.
pub fn apply_residues<T: Real>(
    sys: &mut CoefficientSystem<T>,
    entries: &[ResidueEntry],
) -> Result<()> {
    let ctx = sys.ctx();
    for e in entries {
        let tag = ZeroTag {
            block: e.block,
            index: e.index,
        };
        let pos = sys
            .rat
            .position(tag)
            .ok_or_else(|| Error::Config(format!("residue for unknown zero {tag:?}")))?;
        let parse = |s: &str| {
            T::parse(s, ctx)
                .ok_or_else(|| Error::Config(format!("cannot parse residue component '{s}'")))
        };
        let re = parse(&e.u[0])?;
        let im = parse(&e.u[1])?;
        sys.rat.set_residue(pos, PrecComplex::new(re, im));
    }
    Ok(())
}
