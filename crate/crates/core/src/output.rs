//! Snapshot CSVs, the run manifest, and comparison/stability tables.
//!
//! Numbers are written like C's `%.17g`: 17 significant digits, trailing
//! zeros dropped, `.` as decimal separator. Lines end in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::StabilityRow;
use crate::sim::{Comparison, Manifest, RunResult};

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// `%.17g` formatting; enough digits to round-trip every `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{v:.prec$}", prec = (16 - exp) as usize);
        strip_zeros(&fixed).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        format_number(v)
    } else {
        "null".to_string()
    }
}

fn json_optional(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), json_number)
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn snapshot_file_name(step: usize) -> String {
    format!("snap_{step:06}.csv")
}

pub fn snapshot_csv(field: &crate::domain::WaveField) -> String {
    let mut out = String::from("x,phi\n");
    for (x, v) in field.grid().points().zip(field.values()) {
        let _ = writeln!(out, "{},{}", format_number(x), format_number(*v));
    }
    out
}

/// Manifest as JSON with a fixed key order.
pub fn manifest_json(m: &Manifest) -> String {
    let c = &m.config;
    let mut out = String::from("{\n  \"config\": {\n");
    let config_fields = [
        ("grid.a", json_number(c.a)),
        ("grid.b", json_number(c.b)),
        ("grid.nx", c.nx.to_string()),
        ("time.t_end", json_number(c.t_end)),
        ("time.nt", c.nt.to_string()),
        ("initial", json_string(&c.initial)),
        ("velocity", json_string(&c.velocity)),
        ("scheme", json_string(c.method.token())),
        ("boundary", json_string(&c.boundary.token())),
        ("sign", json_string(c.sign.token())),
        ("snapshot_every", c.snapshot_every.to_string()),
        ("rk_dt_divisor", c.rk_dt_divisor.to_string()),
    ];
    for (i, (k, v)) in config_fields.iter().enumerate() {
        let comma = if i + 1 < config_fields.len() { "," } else { "" };
        let _ = writeln!(out, "    \"{k}\": {v}{comma}");
    }
    out.push_str("  },\n");
    let _ = writeln!(out, "  \"nu_max\": {},", json_number(m.nu_max));
    out.push_str("  \"snapshots\": [\n");
    for (i, s) in m.snapshots.iter().enumerate() {
        let comma = if i + 1 < m.snapshots.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"step\": {}, \"time\": {}, \"tv\": {}, \"l2_vs_oracle\": {}, \"linf_vs_oracle\": {}}}{comma}",
            s.step,
            json_number(s.time),
            json_number(s.tv),
            json_optional(s.l2_vs_oracle),
            json_optional(s.linf_vs_oracle),
        );
    }
    out.push_str("  ],\n");
    let _ = writeln!(out, "  \"blown_up\": {},", m.blown_up);
    let _ = writeln!(out, "  \"final_time_reached\": {},", json_number(m.final_time_reached));
    let _ = writeln!(out, "  \"drift_direction\": {}", json_string(m.drift_direction.token()));
    out.push_str("}\n");
    out
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, OutputError> {
    fs::write(&path, contents).map_err(|source| OutputError {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes one CSV per persisted row plus `manifest.json`; returns the paths written.
pub fn write_outputs(result: &RunResult, out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    ensure_dir(out_dir)?;
    let mut written = Vec::with_capacity(result.snapshots.len() + 1);
    for (field, rec) in result.snapshots.iter().zip(&result.manifest.snapshots) {
        written.push(write_file(
            out_dir.join(snapshot_file_name(rec.step)),
            &snapshot_csv(field),
        )?);
    }
    written.push(write_file(
        out_dir.join("manifest.json"),
        &manifest_json(&result.manifest),
    )?);
    Ok(written)
}

pub fn comparison_csv(cmp: &Comparison) -> String {
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut out = String::from("step,time,tv_a,tv_b,l2_diff,l2_oracle_a,l2_oracle_b\n");
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            format_number(r.time),
            format_number(r.tv_a),
            format_number(r.tv_b),
            format_number(r.l2_diff),
            opt(r.l2_oracle_a),
            opt(r.l2_oracle_b),
        );
    }
    out
}

/// `compare.csv` in `out_dir`, with each run's own outputs under `a/` and `b/`.
pub fn write_comparison(cmp: &Comparison, out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    ensure_dir(out_dir)?;
    let mut written = write_outputs(&cmp.a, &out_dir.join("a"))?;
    written.extend(write_outputs(&cmp.b, &out_dir.join("b"))?);
    written.push(write_file(out_dir.join("compare.csv"), &comparison_csv(cmp))?);
    Ok(written)
}

pub fn stability_csv(rows: &[StabilityRow]) -> String {
    let mut out = String::from("scheme,nu,theta,analytic_mag,empirical_mag,rel_err\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scheme,
            format_number(r.nu),
            format_number(r.theta),
            format_number(r.analytic_mag),
            format_number(r.empirical_mag),
            format_number(r.rel_err),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Grid1D, WaveField};

    #[test]
    fn g17_formatting() {
        let cases: [(f64, &str); 12] = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.10000000000000001"),
            (0.25, "0.25"),
            (1e-5, "1.0000000000000001e-05"),
            (1e-4, "0.0001"),
            (123456.0, "123456"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (6.02214076e23, "6.0221407599999999e+23"),
        ];
        for (v, s) in cases {
            assert_eq!(format_number(v), s, "{v:e}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for v in [
            0.1,
            1.0 / 3.0,
            12.566370614359172,
            -1e-300,
            2.2250738585072014e-308,
            f64::MAX,
            5e-324,
        ] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn snapshot_format() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let f = WaveField::new(g, 0.0, vec![1.0, 0.5, 0.25, 0.0, -1.0]).unwrap();
        assert_eq!(snapshot_csv(&f), "x,phi\n0,1\n0.25,0.5\n0.5,0.25\n0.75,0\n1,-1\n");
        assert_eq!(snapshot_file_name(250), "snap_000250.csv");
        assert_eq!(snapshot_file_name(5000), "snap_005000.csv");
    }
}
