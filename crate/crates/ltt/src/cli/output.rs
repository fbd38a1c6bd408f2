//! CSV and JSON emitters.
//!
//! CSV uses LF line endings, a header row, `.` as the decimal separator
//! and 17 significant digits for every number. JSON mirrors the curve
//! fields and echoes the full run configuration for provenance. File
//! writes are atomic (write temp, then rename).

use crate::analytic::{CurveSource, LineagePmf, LttCurve};
use crate::cli::RunConfig;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// 17 significant digits; round-trips any f64 exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `content` to `path` via a temp file in the same directory and an
/// atomic rename.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV schema `sigma,expected_lineages[,stderr]`: the stderr column is
/// present exactly when the curve is Monte-Carlo.
pub fn curve_to_csv(curve: &LttCurve) -> String {
    let mc = curve.source == CurveSource::MonteCarlo;
    let mut out = String::new();
    out.push_str(if mc {
        "sigma,expected_lineages,stderr\n"
    } else {
        "sigma,expected_lineages\n"
    });
    for p in &curve.points {
        out.push_str(&fmt_g17(p.sigma));
        out.push(',');
        out.push_str(&fmt_g17(p.expected_lineages));
        if mc {
            out.push(',');
            out.push_str(&fmt_g17(p.stderr.unwrap_or(0.0)));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct CurveDocument<'a> {
    config: &'a RunConfig,
    curve: &'a LttCurve,
}

pub fn curve_to_json(curve: &LttCurve, config: &RunConfig) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&CurveDocument { config, curve })?;
    s.push('\n');
    Ok(s)
}

/// Parses the `curve` field back out of a JSON document produced by
/// [`curve_to_json`].
pub fn curve_from_json(text: &str) -> Result<LttCurve> {
    #[derive(Deserialize)]
    struct Doc {
        curve: LttCurve,
    }
    Ok(serde_json::from_str::<Doc>(text)?.curve)
}

pub fn pmf_to_csv(pmf: &LineagePmf) -> String {
    let mut out = String::from("m,probability\n");
    for (i, p) in pmf.probs.iter().enumerate() {
        out.push_str(&format!(
            "{},{}\n",
            pmf.support_start as usize + i,
            fmt_g17(*p)
        ));
    }
    out
}

pub fn pmf_to_json(pmf: &LineagePmf, config: &RunConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RunConfig,
        pmf: &'a LineagePmf,
    }
    let mut s = serde_json::to_string_pretty(&Doc { config, pmf })?;
    s.push('\n');
    Ok(s)
}

pub fn age_density_to_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("t,density\n");
    for (t, d) in rows {
        out.push_str(&fmt_g17(*t));
        out.push(',');
        out.push_str(&fmt_g17(*d));
        out.push('\n');
    }
    out
}

pub fn age_density_to_json(rows: &[(f64, f64)], config: &RunConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RunConfig,
        points: Vec<serde_json::Value>,
    }
    let points = rows
        .iter()
        .map(|(t, d)| serde_json::json!({ "t": t, "density": d }))
        .collect();
    let mut s = serde_json::to_string_pretty(&Doc { config, points })?;
    s.push('\n');
    Ok(s)
}
