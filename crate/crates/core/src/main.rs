use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use lacunary_crg::config::{ConfigFile, SystemConfig};
use lacunary_crg::ode::CoefficientSystem;
use lacunary_crg::scalar::{Mp, Real};
use lacunary_crg::scan::{parse_ks, run_scan, ScanKind};
use lacunary_crg::verify::{
    apply_residues, residue_entries, run_checks, Check, Record, ResidueEntry, VerifyOptions,
};
use lacunary_crg::Error;

#[derive(Parser)]
#[command(
    name = "crg",
    version,
    about = "Lacunary product ODE construction and growth checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write zeros, residues and a coefficient-system summary.
    Construct(Common),
    /// Run verification checks and write a JSON-lines report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated checks, or `all`.
        #[arg(long, default_value = "all")]
        checks: String,
        /// Residues file to use instead of recomputing them.
        #[arg(long)]
        residues: Option<PathBuf>,
        /// Number of residual sample points.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Growth scans written as CSV plus a JSON summary.
    Scan {
        #[command(flatten)]
        common: Common,
        /// order, indicator, witness or all.
        #[arg(long = "scan", default_value = "all")]
        kind: String,
        /// Block range such as `4..7`.
        #[arg(long)]
        ks: Option<String>,
    },
    /// Summarize the reports found in the output directory.
    Report {
        #[arg(long, default_value = "crg_out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "crg_out")]
    out: PathBuf,
    /// Working precision in decimal digits.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Verification(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn load(common: &Common) -> Result<SystemConfig, Error> {
    let mut file = ConfigFile::load(&common.config)?;
    if let Some(p) = common.precision {
        file.precision_digits = p;
    }
    file.system()
}

fn require_precision(cfg: &SystemConfig) -> Result<(), Error> {
    let have = cfg.lacunary.precision_digits;
    let need = cfg.lacunary.required_precision();
    if have < need {
        return Err(Error::Precision {
            have,
            suggested: need,
        });
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, &text)
}

fn build(cfg: &SystemConfig) -> Result<CoefficientSystem<Mp>, Error> {
    CoefficientSystem::build(cfg)
}

fn construct(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    require_precision(&cfg)?;
    let sys = build(&cfg)?;
    let digits = cfg.lacunary.precision_digits as usize;
    let zeros: Vec<Value> = sys
        .product
        .all_zeros()?
        .into_iter()
        .map(|z| {
            json!({
                "block": z.block,
                "index": z.index,
                "z": [z.point.re.to_sci(digits), z.point.im.to_sci(digits)],
            })
        })
        .collect();
    write_json(&common.out, "zeros.json", &zeros)?;
    write_json(&common.out, "residues.json", &residue_entries(&sys))?;
    write_json(&common.out, "system.json", &system_summary(&sys)?)?;
    Ok(())
}

fn system_summary(sys: &CoefficientSystem<Mp>) -> Result<Value, Error> {
    let cfg = &sys.config;
    let lac = &cfg.lacunary;
    let blocks: Vec<Value> = lac
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            json!({
                "k": i + 1,
                "log2_radius": b.log2_radius,
                "radius": b.radius.to_string_radix(10, Some(20)),
                "degree": b.degree.to_string(),
            })
        })
        .collect();
    let summability = sys.rat.check_summability()?;
    Ok(json!({
        "rho_f": lac.rho_f,
        "rule": lac.rule,
        "K": lac.k(),
        "blocks": blocks,
        "precision_digits": lac.precision_digits,
        "required_precision": lac.required_precision(),
        "total_zeros": lac.total_zeros().to_string(),
        "sigma_certificate": lac.sigma_certificate,
        "residue_bound": summability.c_bound,
        "summability": summability,
        "A0": "f g",
        "B0": "-(f'' + A0 f')/f",
        "rho_H": cfg.rho_h,
        "H_truncation": cfg.h_truncation,
        "c_scale": cfg.c_scale,
        "near_zero_delta": cfg.near_zero_delta,
        "order_condition_met": cfg.order_condition_met(),
    }))
}

fn verify(
    common: &Common,
    checks: &str,
    residues: Option<&Path>,
    points: usize,
) -> Result<(), Failure> {
    let checks = Check::parse_list(checks)?;
    let cfg = load(common)?;
    require_precision(&cfg)?;
    let mut sys = build(&cfg)?;
    if let Some(path) = residues {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let entries: Vec<ResidueEntry> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        apply_residues(&mut sys, &entries)?;
    }
    let opts = VerifyOptions {
        checks,
        seed: common.seed,
        residual_points: points,
        ..VerifyOptions::default()
    };
    let records = run_checks(&sys, &opts)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        text.push('\n');
    }
    write_file(&common.out, "verify.jsonl", &text)?;
    let failed = records.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(Failure::Verification(format!(
            "{failed} of {} checks failed",
            records.len()
        )));
    }
    Ok(())
}

fn scan(common: &Common, kind: &str, ks: Option<&str>) -> Result<(), Failure> {
    let kind: ScanKind = kind.parse()?;
    let ks = ks.map(parse_ks).transpose()?;
    let cfg = load(common)?;
    let out = run_scan(&cfg, kind, ks)?;
    for (name, csv) in &out.files {
        write_file(&common.out, name, csv)?;
    }
    write_json(&common.out, "scan_summary.json", &out.summary)?;
    let failed = out.summary.indicator.iter().any(|s| !s.pass)
        || out
            .summary
            .order
            .as_ref()
            .is_some_and(|o| !o.rows.iter().all(|r| r.ratio.is_finite()));
    if failed {
        return Err(Failure::Verification(
            "indicator or order scan failed".into(),
        ));
    }
    Ok(())
}

fn report(out: &Path) -> Result<(), Failure> {
    let verify_path = out.join("verify.jsonl");
    let scan_path = out.join("scan_summary.json");
    let mut summary = serde_json::Map::new();
    let mut failed = 0usize;
    let mut found = false;
    if let Ok(text) = fs::read_to_string(&verify_path) {
        found = true;
        let mut by_eq: std::collections::BTreeMap<String, (usize, usize)> = Default::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let r: Record = serde_json::from_str(line)
                .map_err(|e| Error::Config(format!("{}: {e}", verify_path.display())))?;
            let e = by_eq.entry(r.eq.clone()).or_default();
            e.0 += 1;
            if !r.pass {
                e.1 += 1;
                failed += 1;
            }
        }
        let eqs: serde_json::Map<String, Value> = by_eq
            .into_iter()
            .map(|(k, (n, f))| (k, json!({"records": n, "failed": f})))
            .collect();
        summary.insert("verify".into(), Value::Object(eqs));
    }
    if let Ok(text) = fs::read_to_string(&scan_path) {
        found = true;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", scan_path.display())))?;
        if let Some(ind) = v.get("indicator").and_then(Value::as_array) {
            failed += ind
                .iter()
                .filter(|s| s.get("pass") != Some(&Value::Bool(true)))
                .count();
        }
        summary.insert("scan".into(), v);
    }
    if !found {
        return Err(Error::Config(format!("no reports in {}", out.display())).into());
    }
    summary.insert("failed".into(), json!(failed));
    write_json(out, "report.json", &Value::Object(summary.clone()))?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{}",
        serde_json::to_string_pretty(&Value::Object(summary)).unwrap_or_default()
    );
    if failed > 0 {
        return Err(Failure::Verification(format!("{failed} failed entries")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, precision) = match &cli.command {
        Command::Construct(c) => (construct(c), c.precision),
        Command::Verify {
            common,
            checks,
            residues,
            points,
        } => (
            verify(common, checks, residues.as_deref(), *points),
            common.precision,
        ),
        Command::Scan { common, kind, ks } => (scan(common, kind, ks.as_deref()), common.precision),
        Command::Report { out } => (report(out), None),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::Precision { suggested, .. } => {
                    eprintln!("suggested precision: {suggested}");
                    ExitCode::from(3)
                }
                Error::Divergence(_) => ExitCode::from(1),
                _ => {
                    let have = precision.unwrap_or(lacunary_crg::config::DEFAULT_PRECISION_DIGITS);
                    eprintln!("suggested precision: {}", 2 * have);
                    ExitCode::from(3)
                }
            }
        }
    }
}
