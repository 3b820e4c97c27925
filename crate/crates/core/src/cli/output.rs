//! File sinks. Every table is written with a fixed float format so identical
//! runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Measure, OutputFormat, RunConfig};
use crate::error::Result;
use crate::resources::ResourceRecord;

/// Lossless: 17 significant digits.
pub fn full(x: f64) -> String {
    // fold -0 into 0 so sign noise never reaches the files
    let x = if x == 0.0 { 0.0 } else { x };
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Plot-ready: 6 significant digits.
pub fn short(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.5e}")
    }
}

/// Tracks what was written for the manifest.
#[derive(Debug, Default)]
pub struct Sink {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Sink> {
        fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.write(name, &s)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| std::io::Error::other(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }
}

pub const RECORD_HEADER: [&str; 10] = ["time", "mode", "S", "M2NL", "antiflat4", "Px", "Py", "Pz", "Pnu1", "maxbond"];

/// A record with unselected measures blanked out.
#[derive(Serialize)]
struct MaskedRecord {
    time: f64,
    mode: usize,
    #[serde(rename = "S")]
    s: Option<f64>,
    #[serde(rename = "M2NL")]
    m2nl: Option<f64>,
    antiflat4: Option<f64>,
    polarization: Option<[f64; 3]>,
    #[serde(rename = "Pnu1")]
    p_nu1: Option<f64>,
    maxbond: usize,
}

fn mask(cfg: &RunConfig, m: Measure, x: f64) -> f64 {
    if cfg.wants(m) {
        x
    } else {
        f64::NAN
    }
}

fn record_row(cfg: &RunConfig, r: &ResourceRecord, fmt: fn(f64) -> String) -> Vec<String> {
    let p = r.polarization;
    vec![
        fmt(r.time),
        r.mode.to_string(),
        fmt(mask(cfg, Measure::Entropy, r.entropy)),
        fmt(mask(cfg, Measure::NlSre2, r.nl_sre2)),
        fmt(mask(cfg, Measure::Antiflatness, r.antiflatness4)),
        fmt(mask(cfg, Measure::Polarization, p[0])),
        fmt(mask(cfg, Measure::Polarization, p[1])),
        fmt(mask(cfg, Measure::Polarization, p[2])),
        fmt(mask(cfg, Measure::Survival, r.p_nu1)),
        r.max_bond.to_string(),
    ]
}

/// Full-precision per-time table plus a downsampled plot file.
pub fn write_records(sink: &mut Sink, cfg: &RunConfig, label: &str, records: &[ResourceRecord]) -> Result<()> {
    match cfg.format {
        OutputFormat::Csv => {
            sink.csv(
                &format!("records_{label}.csv"),
                &RECORD_HEADER,
                records.iter().map(|r| record_row(cfg, r, full)),
            )?;
        }
        OutputFormat::Json => {
            let opt = |m: Measure, x: f64| cfg.wants(m).then_some(x);
            let masked: Vec<MaskedRecord> = records
                .iter()
                .map(|r| MaskedRecord {
                    time: r.time,
                    mode: r.mode,
                    s: opt(Measure::Entropy, r.entropy),
                    m2nl: opt(Measure::NlSre2, r.nl_sre2),
                    antiflat4: opt(Measure::Antiflatness, r.antiflatness4),
                    polarization: cfg.wants(Measure::Polarization).then_some(r.polarization),
                    p_nu1: opt(Measure::Survival, r.p_nu1),
                    maxbond: r.max_bond,
                })
                .collect();
            sink.json(&format!("records_{label}.json"), &masked)?;
        }
    }
    let times = distinct_times(records);
    let stride = times.len().div_ceil(PLOT_POINTS).max(1);
    let keep: Vec<f64> = times
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == times.len())
        .map(|(_, t)| *t)
        .collect();
    sink.csv(
        &format!("plot_{label}.csv"),
        &RECORD_HEADER,
        records
            .iter()
            .filter(|r| keep.binary_search_by(|t| t.total_cmp(&r.time)).is_ok())
            .map(|r| record_row(cfg, r, short)),
    )
}

/// Samples per mode kept in the plot-ready files.
pub const PLOT_POINTS: usize = 400;

pub fn distinct_times(records: &[ResourceRecord]) -> Vec<f64> {
    let mut t: Vec<f64> = records.iter().map(|r| r.time).collect();
    t.dedup();
    t
}

/// `λ₀ = (1 + |P|)/2` alongside the resource pair, for overlay on the arc.
pub fn write_phase_space(sink: &mut Sink, label: &str, records: &[ResourceRecord]) -> Result<()> {
    sink.csv(
        &format!("phase_space_{label}.csv"),
        &["time", "mode", "lambda0", "S", "M2NL"],
        records.iter().map(|r| {
            let p = r.polarization;
            let len = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt().min(1.0);
            vec![
                full(r.time),
                r.mode.to_string(),
                full(0.5 * (1.0 + len)),
                full(r.entropy),
                full(r.nl_sre2),
            ]
        }),
    )
}

pub fn arc_csv(points: usize) -> Result<String> {
    let mut s = String::from("lambda0,M2NL,S\n");
    for (l0, m, e) in crate::resources::sample_arc(points)? {
        let _ = writeln!(s, "{},{},{}", full(l0), full(m), full(e));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formats() {
        assert_eq!(full(0.1), "1.0000000000000001e-1");
        assert_eq!(full(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(short(12345.678), "1.23457e4");
        assert_eq!(full(f64::NAN), "nan");
        assert_eq!(full(-0.0), "0.0000000000000000e0");
    }

    #[test]
    fn arc_has_header_and_points() {
        let s = arc_csv(5).unwrap();
        assert_eq!(s.lines().count(), 6);
        assert!(s.lines().nth(1).unwrap().starts_with("5.0000000000000000e-1,"));
    }
}
