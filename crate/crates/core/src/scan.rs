//! Growth scans rendered as CSV tables plus a JSON verdict summary.

use std::f64::consts::E;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::Serialize;

use crate::config::{ScheduleRule, SystemConfig};
use crate::error::{Error, Result};
use crate::growth::{crg_witness, indicator_scan, order_scan, IndicatorScan, OrderScan, Witness};
use crate::ode::build_h;
use crate::product::LacunaryProduct;
use crate::scalar::{Mp, Real};

pub const ORDER_HEADER: &str = "k,kind,log_r,log_m_upper,log_m_lower,ratio";
pub const WITNESS_HEADER: &str = "k,a,b,log_a,log_b";
pub const INDICATOR_HEADER: &str = "r,theta,log_abs_f,ratio,excluded,pass";
pub const INDICATOR_ANGLES: usize = 360;
/// Radii for the indicator of `H`; positivity is only asymptotic, and at
/// small radii the negative axis between zeros still dips below zero.
pub const H_RADII: [f64; 1] = [1e6];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanKind {
    Order,
    Indicator,
    Witness,
    All,
}

impl FromStr for ScanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "order" => Ok(ScanKind::Order),
            "indicator" => Ok(ScanKind::Indicator),
            "witness" => Ok(ScanKind::Witness),
            "all" => Ok(ScanKind::All),
            _ => Err(Error::Config(format!("unknown scan type '{s}'"))),
        }
    }
}

/// Parses `a..b` or `a..=b` (both inclusive) or a single index.
pub fn parse_ks(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::Config(format!("cannot parse block range '{s}'"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let range = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.trim_start_matches('='))?,
        None => {
            let k = num(s)?;
            k..=k
        }
    };
    if range.is_empty() || *range.start() == 0 {
        return Err(bad());
    }
    Ok(range)
}

/// Blocks `K..=K+3` for generated schedules (the peak at block `k` needs
/// block `k + 1`), `1..=K` for explicit lists.
pub fn default_ks(cfg: &SystemConfig) -> RangeInclusive<usize> {
    let lac = &cfg.lacunary;
    let k = lac.k();
    match lac.rule {
        ScheduleRule::Explicit => 1..=k,
        rule => k..=(k + 3).min(rule.max_index() - 1).max(k),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSummary {
    pub verdict: &'static str,
    pub ks: Vec<usize>,
    pub max_log_a: f64,
    pub min_log_b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndicatorSummary {
    pub function: &'static str,
    pub samples: usize,
    pub excluded: usize,
    pub min_sample: Option<f64>,
    pub budget_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ScanSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderScan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub indicator: Vec<IndicatorSummary>,
}

#[derive(Clone, Debug, Default)]
pub struct ScanOutput {
    /// `(file name, CSV text)`.
    pub files: Vec<(String, String)>,
    pub summary: ScanSummary,
}

pub fn run_scan(
    cfg: &SystemConfig,
    kind: ScanKind,
    ks: Option<RangeInclusive<usize>>,
) -> Result<ScanOutput> {
    let ks = ks.unwrap_or_else(|| default_ks(cfg));
    let ctx = Mp::context(cfg.lacunary.precision_digits);
    let mut out = ScanOutput::default();
    if matches!(kind, ScanKind::Order | ScanKind::All) {
        let scan = order_scan::<Mp>(&cfg.lacunary, ks.clone(), ctx)?;
        out.files.push(("order.csv".into(), order_csv(&scan)));
        out.summary.order = Some(scan);
    }
    if matches!(kind, ScanKind::Witness | ScanKind::All) {
        let w = crg_witness::<Mp>(&cfg.lacunary, cfg.lacunary.rho_f, ks.clone(), ctx)?;
        out.files.push(("witness.csv".into(), witness_csv(&w)));
        out.summary.witness = Some(WitnessSummary {
            verdict: if w.violation {
                "violation"
            } else {
                "no violation"
            },
            max_log_a: w.log_a.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            min_log_b: w.log_b.iter().cloned().fold(f64::INFINITY, f64::min),
            ks: w.ks,
        });
    }
    if matches!(kind, ScanKind::Indicator | ScanKind::All) {
        let thetas: Vec<Mp> = (0..INDICATOR_ANGLES)
            .map(|j| {
                Mp::pi(ctx) * Mp::from_i64(2 * j as i64, ctx)
                    / Mp::from_i64(INDICATOR_ANGLES as i64, ctx)
            })
            .collect();
        let f = LacunaryProduct::<Mp>::with_ctx(&cfg.lacunary, ctx);
        let radii = f_radii(&f);
        if !radii.is_empty() {
            let scan = indicator_scan(&f, cfg.lacunary.rho_f, &thetas, &radii, &f)?;
            let (csv, summary) = indicator_table(&scan, "f", |_| true);
            out.files.push(("indicator_f.csv".into(), csv));
            out.summary.indicator.push(summary);
        }
        if let Some(rho_h) = cfg.rho_h {
            let h = build_h::<Mp>(rho_h, cfg.h_truncation, ctx)?;
            let limit = h.domain_radius().to_f64();
            let radii: Vec<Mp> = H_RADII
                .iter()
                .filter(|&&r| r < limit)
                .map(|&r| Mp::from_f64(r, ctx))
                .collect();
            let scan = indicator_scan(&h, rho_h, &thetas, &radii, &h)?;
            let (csv, summary) = indicator_table(&scan, "h", |v| v > 0.0);
            out.files.push(("indicator_h.csv".into(), csv));
            out.summary.indicator.push(summary);
        }
    }
    Ok(out)
}

/// `r_k e^{j/4}`, `j = 0..=4`, for blocks with at least ten zeros per
/// sampled angle (so the disks hit at one radius stay under `r/10`) and
/// whose degree leaves half the working digits for the angle.
fn f_radii(f: &LacunaryProduct<Mp>) -> Vec<Mp> {
    let ctx = f.ctx();
    let max_log = Mp::digits(ctx) as f64 / 2.0 * std::f64::consts::LN_10;
    let min_degree = Mp::from_i64(10 * INDICATOR_ANGLES as i64, ctx);
    let mut radii = Vec::new();
    for k in 1..=f.k() {
        if f.degree(k).ln().to_f64() > max_log {
            break;
        }
        if *f.degree(k) < min_degree {
            continue;
        }
        for j in 0..=4 {
            let r = (f.log_radius(k).clone() + Mp::from_f64(j as f64 / 4.0, ctx)).exp();
            if f.log_domain_limit().is_none_or(|lim| r.ln() < lim) {
                radii.push(r);
            }
        }
    }
    radii
}

fn indicator_table(
    scan: &IndicatorScan<Mp>,
    function: &'static str,
    accept: impl Fn(f64) -> bool,
) -> (String, IndicatorSummary) {
    let mut csv = String::from(INDICATOR_HEADER);
    csv.push('\n');
    let mut all_pass = true;
    for s in &scan.samples {
        let ok = s.excluded || s.ratio.is_some_and(|v| v.is_finite() && accept(v));
        all_pass &= ok;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            s.r.to_sci(17),
            s.theta.to_sci(17),
            s.log_abs.as_ref().map_or("".into(), |v| v.to_sci(17)),
            s.ratio.map_or("".into(), |v| format!("{v:e}")),
            s.excluded,
            ok
        );
    }
    let summary = IndicatorSummary {
        function,
        samples: scan.samples.len(),
        excluded: scan.samples.iter().filter(|s| s.excluded).count(),
        min_sample: scan.min_included_ratio(),
        budget_ok: scan.budget_ok,
        pass: all_pass && scan.budget_ok,
    };
    (csv, summary)
}

fn order_csv(scan: &OrderScan) -> String {
    let mut csv = String::from(ORDER_HEADER);
    csv.push('\n');
    for r in &scan.rows {
        let kind = match r.kind {
            crate::growth::RadiusKind::Dip => "dip",
            crate::growth::RadiusKind::Peak => "peak",
        };
        let _ = writeln!(
            csv,
            "{},{},{:e},{},{},{:e}",
            r.k, kind, r.log_r, r.log_m_upper, r.log_m_lower, r.ratio
        );
    }
    csv
}

fn witness_csv(w: &Witness) -> String {
    let mut csv = String::from(WITNESS_HEADER);
    csv.push('\n');
    for i in 0..w.ks.len() {
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e}",
            w.ks[i], w.a[i], w.b[i], w.log_a[i], w.log_b[i]
        );
    }
    csv
}

/// `e r_k` and `r_k (1 + 2/n_k)` on the positive axis: the first point
/// clear of the disk around `r_k` and the peak radius.
pub fn axis_radii(f: &LacunaryProduct<Mp>, k: usize) -> (Mp, Mp) {
    let ctx = f.ctx();
    let rk = f.radius(k).clone();
    let dip = rk.clone() * (Mp::one(ctx) + Mp::from_i64(2, ctx) / f.degree(k));
    (dip, rk * Mp::from_f64(E, ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LacunaryConfig;

    fn sys(lac: LacunaryConfig, rho_h: Option<f64>) -> SystemConfig {
        SystemConfig::new(lac, rho_h, 1000, 1.0, 1e-8).unwrap()
    }

    #[test]
    fn ks_parsing() {
        assert_eq!(parse_ks("4..7").unwrap(), 4..=7);
        assert_eq!(parse_ks("4..=7").unwrap(), 4..=7);
        assert_eq!(parse_ks("3").unwrap(), 3..=3);
        assert!(parse_ks("0..2").is_err());
        assert!(parse_ks("5..2").is_err());
        assert!(parse_ks("x").is_err());
    }

    #[test]
    fn witness_verdicts() {
        let lac = LacunaryConfig::make_schedule_with_precision(0.5, 7, ScheduleRule::Factorial, 60)
            .unwrap();
        let out = run_scan(&sys(lac, None), ScanKind::Witness, None).unwrap();
        assert_eq!(out.summary.witness.unwrap().verdict, "violation");
        let lac = LacunaryConfig::from_blocks(0.5, &[(4.0, 2)], 60, true).unwrap();
        let out = run_scan(&sys(lac, None), ScanKind::Witness, None).unwrap();
        assert_eq!(out.summary.witness.unwrap().verdict, "no violation");
        assert!(out.files[0].1.starts_with(WITNESS_HEADER));
    }

    #[test]
    fn h_indicator_summary() {
        let lac = LacunaryConfig::from_blocks(0.5, &[(4.0, 2)], 40, true).unwrap();
        let out = run_scan(&sys(lac, Some(0.25)), ScanKind::Indicator, None).unwrap();
        let h = out
            .summary
            .indicator
            .iter()
            .find(|s| s.function == "h")
            .unwrap();
        assert!(h.min_sample.unwrap() > 0.0);
        assert!(h.pass);
        let csv = &out
            .files
            .iter()
            .find(|f| f.0 == "indicator_h.csv")
            .unwrap()
            .1;
        assert!(csv.starts_with(INDICATOR_HEADER));
        assert_eq!(csv.lines().count(), 1 + H_RADII.len() * INDICATOR_ANGLES);
    }
}
