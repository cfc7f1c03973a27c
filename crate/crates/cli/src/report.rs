//! Report bundle and its CSV/JSON emitters.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use mono5_core::functionals::MonotonicityReport;
use mono5_core::iteration::{RecurrenceSpec, ThresholdConstants};
use mono5_core::pressure::{atomic_write, NonIntegrableWarning, TorusField};
use mono5_core::projection::ProjectionSummary;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`, expected csv or json")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantFailure {
    pub check: String,
    pub context: String,
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerReport {
    /// Sup over the sphere nodes of `|r1|..|r4|`.
    pub residual_sup: [f64; 4],
    pub split_d1: f64,
    pub split_d2: f64,
    pub split_lhs: f64,
    pub split_rhs: f64,
    pub convective_defect: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicReport {
    pub n: usize,
    pub length: f64,
    pub max_abs_p: f64,
    pub mean_p: f64,
    /// `max |-Δp - ∂_i∂_j(u_iu_j)|`.
    pub equation_defect: f64,
    #[serde(skip)]
    pub pressure: TorusField,
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReport {
    pub radial_defect: f64,
    pub loop_defect: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub warnings: Vec<NonIntegrableWarning>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PressureReport {
    pub periodic: Option<PeriodicReport>,
    pub xi: Option<XiReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterateReport {
    pub spec: RecurrenceSpec,
    pub premise_limit: f64,
    pub bound: f64,
    pub sup: f64,
    pub orbit: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportBundle {
    pub name: String,
    pub seed: u64,
    pub profile: Vec<MonotonicityReport>,
    pub projection: Vec<ProjectionSummary>,
    pub euler: Option<EulerReport>,
    pub pressure: Option<PressureReport>,
    pub iterate: Option<IterateReport>,
    pub threshold: Option<ThresholdConstants>,
    pub failures: Vec<InvariantFailure>,
}

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Compact JSON with floats in `{:.16e}`; non-finite values become `null`.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn profile_csv(rows: &[MonotonicityReport]) -> String {
    let mut s = MonotonicityReport::COLUMNS.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.values().iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn projection_csv(rows: &[ProjectionSummary]) -> String {
    let mut s = String::from("r,error_sq,energy,closeness,cg_iters,residual\n");
    for p in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(p.radius),
            fmt_f64(p.error_sq),
            fmt_f64(p.energy),
            fmt_f64(p.closeness),
            p.cg_iters,
            fmt_f64(p.residual)
        );
    }
    s
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Number(n) => {
            let cell = match (n.as_u64(), n.as_i64(), n.as_f64()) {
                (Some(u), _, _) if !n.is_f64() => u.to_string(),
                (_, Some(i), _) if !n.is_f64() => i.to_string(),
                (_, _, Some(f)) => fmt_f64(f),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), cell));
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), String::new())),
    }
}

/// Two-column `key,value` table of a serializable section.
fn key_value_csv<T: Serialize>(section: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(section).map_err(|e| CliError::Io(e.to_string()))?;
    let mut pairs = Vec::new();
    flatten("", &v, &mut pairs);
    let mut s = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k},{v}");
    }
    Ok(s)
}

fn failures_csv(failures: &[InvariantFailure]) -> String {
    let mut s = String::from("check,context,value,tol\n");
    for f in failures {
        let _ = writeln!(s, "{},{},{},{}", f.check, f.context, fmt_f64(f.value), fmt_f64(f.tol));
    }
    s
}

fn write(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    atomic_write(&path, bytes).map_err(|e| CliError::Io(e.to_string()))?;
    written.push(path);
    Ok(())
}

/// Writes the bundle under `dir` and returns the files written.
///
/// CSV: `<name>.profile.csv` always (header only when empty), then one file
/// per other non-empty section. JSON: `<name>.json` mirrors the whole bundle.
/// A recovered periodic pressure is also written as `<name>.pressure.bin`
/// with its `.json` header.
pub fn emit_report(bundle: &ReportBundle, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let stem = |suffix: &str| dir.join(format!("{}.{suffix}", bundle.name));
    let mut written = Vec::new();
    match format {
        Format::Json => write(dir.join(format!("{}.json", bundle.name)), &to_json_bytes(bundle)?, &mut written)?,
        Format::Csv => {
            write(stem("profile.csv"), profile_csv(&bundle.profile).as_bytes(), &mut written)?;
            if !bundle.projection.is_empty() {
                write(stem("projection.csv"), projection_csv(&bundle.projection).as_bytes(), &mut written)?;
            }
            if let Some(e) = &bundle.euler {
                write(stem("euler.csv"), key_value_csv(e)?.as_bytes(), &mut written)?;
            }
            if let Some(p) = &bundle.pressure {
                write(stem("pressure.csv"), key_value_csv(p)?.as_bytes(), &mut written)?;
            }
            if let Some(i) = &bundle.iterate {
                write(stem("iterate.csv"), key_value_csv(i)?.as_bytes(), &mut written)?;
            }
            if let Some(t) = &bundle.threshold {
                write(stem("threshold.csv"), key_value_csv(t)?.as_bytes(), &mut written)?;
            }
            if !bundle.failures.is_empty() {
                write(stem("failures.csv"), failures_csv(&bundle.failures).as_bytes(), &mut written)?;
            }
        }
    }
    if let Some(PressureReport { periodic: Some(p), .. }) = &bundle.pressure {
        let path = stem("pressure.bin");
        mono5_core::pressure::write_torus_field(&path, &p.pressure)
            .map_err(|e| CliError::Io(e.to_string()))?;
        written.push(path.clone());
        written.push(path.with_extension("json"));
    }
    Ok(written)
}
