//! Block schedules and the JSON configuration format.

use std::path::Path;

use rug::{Float as MpFloat, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_PRECISION_DIGITS: u32 = 30;
pub const DEFAULT_PRECISION_DIGITS: u32 = 100;
pub const DEFAULT_H_TRUNCATION: usize = 1000;
pub const DEFAULT_NEAR_ZERO_DELTA: f64 = 1e-8;

/// How radii and degrees are generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleRule {
    /// `r_k = 2^(k!)`
    Factorial,
    /// `r_k = 2^(2^k)`
    DoublyExp,
    Explicit,
}

impl ScheduleRule {
    /// Largest block index the rule will generate. Beyond it the binary
    /// exponents make even a single degree too large to hold.
    pub fn max_index(self) -> usize {
        match self {
            ScheduleRule::Factorial => 10,
            ScheduleRule::DoublyExp => 20,
            ScheduleRule::Explicit => 0,
        }
    }

    fn log2_radius(self, k: usize) -> u64 {
        match self {
            ScheduleRule::Factorial => (1..=k as u64).product(),
            ScheduleRule::DoublyExp => 1u64 << k,
            ScheduleRule::Explicit => unreachable!("explicit lists have no generator"),
        }
    }
}

/// One factor `1 - (z/r)^n` of the product.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    /// Exact radius.
    pub radius: MpFloat,
    /// `log2 r` when the radius is an exact power of two.
    pub log2_radius: Option<u64>,
    pub degree: Integer,
}

impl Block {
    pub fn from_rule(rule: ScheduleRule, rho: f64, k: usize) -> Result<Block> {
        if k == 0 || k > rule.max_index() {
            return Err(Error::Config(format!(
                "block index {k} outside 1..={} for the {rule:?} rule",
                rule.max_index()
            )));
        }
        let e = rule.log2_radius(k);
        let radius = MpFloat::with_val(64, 1) << (e as u32);
        // n = round(2^(e rho)); exact shift when e*rho is an integer.
        let exponent = MpFloat::with_val(128, e) * rho;
        let degree = if exponent.is_integer() {
            let shift = exponent.to_integer().and_then(|i| i.to_u32()).unwrap_or(0);
            Integer::from(1) << shift
        } else {
            let bits = exponent.to_f64().ceil() as u32 + 64;
            let v = MpFloat::with_val(bits, &exponent).exp2();
            v.to_integer().expect("finite power of two")
        };
        Ok(Block {
            radius,
            log2_radius: Some(e),
            degree,
        })
    }

    pub fn explicit(radius: f64, degree: u64) -> Result<Block> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("radius {radius} is not positive")));
        }
        if degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        Ok(Block {
            radius: MpFloat::with_val(64, radius),
            log2_radius: None,
            degree: Integer::from(degree),
        })
    }

    pub fn radius<T: Real>(&self, ctx: T::Ctx) -> T {
        T::from_float(&self.radius, ctx)
    }

    pub fn log_radius<T: Real>(&self, ctx: T::Ctx) -> T {
        match self.log2_radius {
            Some(e) => T::from_integer(&Integer::from(e), ctx) * T::from_i64(2, ctx).ln(),
            None => T::from_float(&self.radius, ctx).ln(),
        }
    }

    pub fn degree<T: Real>(&self, ctx: T::Ctx) -> T {
        T::from_integer(&self.degree, ctx)
    }

    /// Degree as a machine integer when it fits.
    pub fn count(&self) -> Option<u64> {
        self.degree.to_u64()
    }

    /// `ln r` in double precision (used for diagnostics and scan bookkeeping).
    pub fn log_radius_f64(&self) -> f64 {
        match self.log2_radius {
            Some(e) => e as f64 * std::f64::consts::LN_2,
            None => self.radius.to_f64().ln(),
        }
    }

    /// `ln n` in double precision.
    pub fn log_degree_f64(&self) -> f64 {
        let (m, e) = self.degree.to_f64_exp();
        m.ln() + e as f64 * std::f64::consts::LN_2
    }
}

/// A validated block schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct LacunaryConfig {
    pub rho_f: f64,
    pub rule: ScheduleRule,
    blocks: Vec<Block>,
    next: Option<Block>,
    pub precision_digits: u32,
    /// `sum n_k / r_k^s` with `s = (1 + rho)/2`, including the tail bound.
    pub sigma_certificate: f64,
    pub strict: bool,
}

impl LacunaryConfig {
    /// Generate `K` blocks from a rule.
    pub fn make_schedule(rho_f: f64, k: usize, rule: ScheduleRule) -> Result<Self> {
        Self::make_schedule_with_precision(rho_f, k, rule, DEFAULT_PRECISION_DIGITS)
    }

    pub fn make_schedule_with_precision(
        rho_f: f64,
        k: usize,
        rule: ScheduleRule,
        precision_digits: u32,
    ) -> Result<Self> {
        check_rho(rho_f)?;
        if rule == ScheduleRule::Explicit {
            return Err(Error::Config("explicit schedules need a block list".into()));
        }
        if k == 0 || k >= rule.max_index() {
            return Err(Error::Config(format!(
                "K = {k} outside 1..{} for the {rule:?} rule",
                rule.max_index()
            )));
        }
        let blocks = (1..=k)
            .map(|j| Block::from_rule(rule, rho_f, j))
            .collect::<Result<Vec<_>>>()?;
        let next = Some(Block::from_rule(rule, rho_f, k + 1)?);
        Self::assemble(rho_f, rule, blocks, next, precision_digits, true)
    }

    /// Build from explicit `(r_k, n_k)` pairs. With `strict` the degree and
    /// density conditions of the lacunary schedule are enforced.
    pub fn from_blocks(
        rho_f: f64,
        pairs: &[(f64, u64)],
        precision_digits: u32,
        strict: bool,
    ) -> Result<Self> {
        check_rho(rho_f)?;
        if pairs.is_empty() {
            return Err(Error::Config("block list is empty".into()));
        }
        let blocks = pairs
            .iter()
            .map(|&(r, n)| Block::explicit(r, n))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(
            rho_f,
            ScheduleRule::Explicit,
            blocks,
            None,
            precision_digits,
            strict,
        )
    }

    fn assemble(
        rho_f: f64,
        rule: ScheduleRule,
        blocks: Vec<Block>,
        next: Option<Block>,
        precision_digits: u32,
        strict: bool,
    ) -> Result<Self> {
        if precision_digits < MIN_PRECISION_DIGITS {
            return Err(Error::Config(format!(
                "precision_digits = {precision_digits} is below the minimum {MIN_PRECISION_DIGITS}"
            )));
        }
        for w in blocks.windows(2) {
            if w[1].radius <= w[0].radius {
                return Err(Error::Config("radii must be strictly increasing".into()));
            }
        }
        if strict {
            check_degrees(rho_f, &blocks)?;
            check_density(&blocks)?;
        }
        let sigma_certificate = sigma_certificate(rho_f, &blocks, next.as_ref());
        if !sigma_certificate.is_finite() {
            return Err(Error::Config(
                "convergence-exponent certificate is not finite".into(),
            ));
        }
        Ok(Self {
            rho_f,
            rule,
            blocks,
            next,
            precision_digits,
            sigma_certificate,
            strict,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Truncation level `K`.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Block `K + 1`, the first omitted one. `None` for explicit lists.
    pub fn next_block(&self) -> Option<&Block> {
        self.next.as_ref()
    }

    /// Block `k` (1-based), generating it past `K` when a rule is available.
    pub fn block(&self, k: usize) -> Option<Block> {
        if k >= 1 && k <= self.blocks.len() {
            return Some(self.blocks[k - 1].clone());
        }
        match self.rule {
            ScheduleRule::Explicit => None,
            rule => Block::from_rule(rule, self.rho_f, k).ok(),
        }
    }

    /// Blocks `1..=k`, generated as needed.
    pub fn blocks_through(&self, k: usize) -> Result<Vec<Block>> {
        (1..=k)
            .map(|j| {
                self.block(j).ok_or_else(|| {
                    Error::Config(format!("block {j} is not available for this schedule"))
                })
            })
            .collect()
    }

    /// Total number of zeros `sum n_k` of the truncated product.
    pub fn total_zeros(&self) -> Integer {
        self.blocks.iter().map(|b| &b.degree).sum()
    }

    pub fn with_precision(&self, digits: u32) -> Result<Self> {
        if digits < MIN_PRECISION_DIGITS {
            return Err(Error::Config(format!(
                "precision {digits} is below the minimum {MIN_PRECISION_DIGITS}"
            )));
        }
        let mut out = self.clone();
        out.precision_digits = digits;
        Ok(out)
    }

    /// Precision needed by the verification suite: 50 digits of headroom for
    /// residual tolerances plus the digits consumed by the `n_k`-fold
    /// argument multiplication near block zeros.
    pub fn required_precision(&self) -> u32 {
        let n = self.total_zeros();
        let (m, e) = n.to_f64_exp();
        let log10 = (m.ln() + e as f64 * std::f64::consts::LN_2) / std::f64::consts::LN_10;
        50 + log10.ceil().max(0.0) as u32
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("rho_f = {rho} is outside (0, 1)")))
    }
}

fn check_degrees(rho: f64, blocks: &[Block]) -> Result<()> {
    for (i, b) in blocks.iter().enumerate() {
        let log2_target = match b.log2_radius {
            Some(e) => MpFloat::with_val(128, e) * rho,
            None => MpFloat::with_val(128, &b.radius).log2() * rho,
        };
        let bits = log2_target.to_f64().max(0.0).ceil() as u32 + 64;
        let target = MpFloat::with_val(bits, &log2_target).exp2();
        let target = target.to_integer().expect("finite target degree");
        let diff = Integer::from(&b.degree - &target).abs();
        if diff > 1 {
            return Err(Error::Config(format!(
                "block {}: degree {} differs from round(r^rho) = {} by more than 1",
                i + 1,
                b.degree,
                target
            )));
        }
    }
    Ok(())
}

fn check_density(blocks: &[Block]) -> Result<()> {
    let mut below = Integer::new();
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 && Integer::from(&below * 2) > b.degree {
            return Err(Error::Config(format!(
                "block {}: earlier degrees sum to {} which exceeds n_k / 2 (list too dense)",
                i + 1,
                below
            )));
        }
        below += &b.degree;
    }
    Ok(())
}

fn sigma_certificate(rho: f64, blocks: &[Block], next: Option<&Block>) -> f64 {
    let s = (1.0 + rho) / 2.0;
    let term = |b: &Block| (b.log_degree_f64() - s * b.log_radius_f64()).exp();
    let head: f64 = blocks.iter().map(term).sum();
    head + next.map_or(0.0, |b| 2.0 * term(b))
}

fn default_rho() -> f64 {
    0.5
}

fn default_precision() -> u32 {
    DEFAULT_PRECISION_DIGITS
}

/// On-disk configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_rho")]
    pub rho_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<ScheduleRule>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<(f64, u64)>>,
    #[serde(default = "default_precision")]
    pub precision_digits: u32,
    #[serde(rename = "rho_H", default, skip_serializing_if = "Option::is_none")]
    pub rho_h: Option<f64>,
    #[serde(
        rename = "H_truncation",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub h_truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near_zero_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn lacunary(&self) -> Result<LacunaryConfig> {
        match (&self.blocks, self.rule) {
            (Some(_), Some(rule)) if rule != ScheduleRule::Explicit => Err(Error::Config(
                "give either a rule with K or an explicit block list, not both".into(),
            )),
            (Some(pairs), _) => LacunaryConfig::from_blocks(
                self.rho_f,
                pairs,
                self.precision_digits,
                self.strict.unwrap_or(true),
            ),
            (None, Some(rule)) => {
                let k = self
                    .k
                    .ok_or_else(|| Error::Config("rule-based configs need K".into()))?;
                LacunaryConfig::make_schedule_with_precision(
                    self.rho_f,
                    k,
                    rule,
                    self.precision_digits,
                )
            }
            (None, None) => Err(Error::Config(
                "config needs either \"rule\" or \"blocks\"".into(),
            )),
        }
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let lacunary = self.lacunary()?;
        SystemConfig::new(
            lacunary,
            self.rho_h,
            self.h_truncation.unwrap_or(DEFAULT_H_TRUNCATION),
            self.c_scale.unwrap_or(1.0),
            self.near_zero_delta.unwrap_or(DEFAULT_NEAR_ZERO_DELTA),
        )
    }
}

/// Parameters of the coefficient system built on a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub lacunary: LacunaryConfig,
    pub rho_h: Option<f64>,
    pub h_truncation: usize,
    pub c_scale: f64,
    pub near_zero_delta: f64,
}

impl SystemConfig {
    pub fn new(
        lacunary: LacunaryConfig,
        rho_h: Option<f64>,
        h_truncation: usize,
        c_scale: f64,
        near_zero_delta: f64,
    ) -> Result<Self> {
        if let Some(rho) = rho_h {
            if !(rho > 0.0 && rho < 0.5) {
                return Err(Error::Config(format!("rho_H = {rho} is outside (0, 1/2)")));
            }
        }
        if h_truncation == 0 {
            return Err(Error::Config("H_truncation must be positive".into()));
        }
        if !c_scale.is_finite() {
            return Err(Error::Config("c_scale must be finite".into()));
        }
        let p = lacunary.precision_digits as f64;
        let lo = 10f64.powf(-p / 2.0);
        if !(near_zero_delta >= lo * (1.0 - 1e-12) && near_zero_delta <= 1e-4) {
            return Err(Error::Config(format!(
                "near_zero_delta = {near_zero_delta:e} is outside [1e-{}, 1e-4]",
                p / 2.0
            )));
        }
        Ok(Self {
            lacunary,
            rho_h,
            h_truncation,
            c_scale,
            near_zero_delta,
        })
    }

    pub fn plain(lacunary: LacunaryConfig) -> Self {
        Self {
            lacunary,
            rho_h: None,
            h_truncation: DEFAULT_H_TRUNCATION,
            c_scale: 1.0,
            near_zero_delta: DEFAULT_NEAR_ZERO_DELTA,
        }
    }

    /// Whether `rho_H` exceeds the order of `f`, as the growth statement
    /// for the perturbed equation requires. Reported, not enforced.
    pub fn order_condition_met(&self) -> Option<bool> {
        self.rho_h.map(|r| r > self.lacunary.rho_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[Block]) -> (Vec<Integer>, Vec<Integer>) {
        (
            v.iter().map(|b| b.radius.to_integer().unwrap()).collect(),
            v.iter().map(|b| b.degree.clone()).collect(),
        )
    }

    #[test]
    fn factorial_schedule() {
        let cfg = LacunaryConfig::make_schedule(0.5, 3, ScheduleRule::Factorial).unwrap();
        let (r, n) = ints(cfg.blocks());
        assert_eq!(r, [2, 4, 64].map(Integer::from));
        assert_eq!(n, [1, 2, 8].map(Integer::from));
        let next = cfg.next_block().unwrap();
        assert_eq!(next.log2_radius, Some(24));
        assert_eq!(next.degree, 4096);
    }

    #[test]
    fn doubly_exp_schedule() {
        let cfg = LacunaryConfig::make_schedule(0.5, 3, ScheduleRule::DoublyExp).unwrap();
        let (r, n) = ints(cfg.blocks());
        assert_eq!(r, [4, 16, 256].map(Integer::from));
        assert_eq!(n, [2, 4, 16].map(Integer::from));
    }

    #[test]
    fn rho_out_of_range() {
        for rho in [1.2, 0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                LacunaryConfig::make_schedule(rho, 3, ScheduleRule::Factorial),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn non_integer_exponent_rounds() {
        // 2^(24 * 0.3) = 2^7.2 = 147.03
        let b = Block::from_rule(ScheduleRule::Factorial, 0.3, 4).unwrap();
        assert_eq!(b.degree, 147);
        let b = Block::from_rule(ScheduleRule::Factorial, 0.5, 7).unwrap();
        assert_eq!(b.degree, Integer::from(1) << 2520);
    }

    #[test]
    fn dense_explicit_list_is_rejected() {
        let err = LacunaryConfig::from_blocks(0.5, &[(1.0, 1), (2.0, 1), (3.0, 2)], 100, true);
        assert!(matches!(err, Err(Error::Config(_))));
        let ok = LacunaryConfig::from_blocks(0.5, &[(1.0, 1), (2.0, 1), (3.0, 2)], 100, false);
        assert!(ok.is_ok());
    }

    #[test]
    fn degree_must_track_radius() {
        assert!(LacunaryConfig::from_blocks(0.5, &[(100.0, 30)], 100, true).is_err());
        assert!(LacunaryConfig::from_blocks(0.5, &[(100.0, 11)], 100, true).is_ok());
    }

    #[test]
    fn json_forms() {
        let a = ConfigFile::from_json(
            r#"{"rho_f": 0.5, "rule": "factorial", "K": 4, "precision_digits": 100}"#,
        )
        .unwrap();
        assert_eq!(a.lacunary().unwrap().k(), 4);
        let b = ConfigFile::from_json(r#"{"blocks": [[4,2],[16,4]]}"#).unwrap();
        let cfg = b.lacunary().unwrap();
        assert_eq!(cfg.k(), 2);
        assert!(cfg.next_block().is_none());
        assert!(ConfigFile::from_json("{\"blocks\": [[4,2]").is_err());
        assert!(ConfigFile::from_json(r#"{"rule": "factorial"}"#)
            .unwrap()
            .lacunary()
            .is_err());
    }

    #[test]
    fn system_validation() {
        let lac = LacunaryConfig::from_blocks(0.5, &[(1.0, 2)], 100, true).unwrap();
        assert!(SystemConfig::new(lac.clone(), Some(0.6), 1000, 1.0, 1e-8).is_err());
        assert!(SystemConfig::new(lac.clone(), Some(0.4), 1000, 1.0, 1e-3).is_err());
        assert!(SystemConfig::new(lac.clone(), Some(0.4), 1000, 1.0, 1e-60).is_err());
        let sys = SystemConfig::new(lac, Some(0.4), 1000, 1.0, 1e-8).unwrap();
        assert_eq!(sys.order_condition_met(), Some(false));
    }

    #[test]
    fn precision_floor() {
        assert!(
            LacunaryConfig::make_schedule_with_precision(0.5, 3, ScheduleRule::Factorial, 20)
                .is_err()
        );
        let cfg = LacunaryConfig::make_schedule(0.5, 4, ScheduleRule::Factorial).unwrap();
        assert_eq!(cfg.required_precision(), 54);
        assert!(cfg.sigma_certificate.is_finite());
    }
}
