//! Report emission: a single JSON document or a directory of CSV tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stats::{Histogram, ScatterSummary, StatsReport};
use crate::error::{Error, Result};

pub const HISTOGRAM_CSV: &str = "positive_output_iou_histogram.csv";
pub const INPUT_SCATTER_CSV: &str = "input_iou_vs_score.csv";
pub const OUTPUT_SCATTER_CSV: &str = "output_iou_vs_score.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::InvalidConfig(format!("unknown format {s:?}"))),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_histogram(h: &Histogram, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for (i, c) in h.counts.iter().enumerate() {
        w.serialize((h.edges[i], h.edges[i + 1], c))?;
    }
    w.flush()?;
    Ok(())
}

fn write_scatter(s: &ScatterSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "bin_hi", "count", "mean_score"])?;
    for (i, c) in s.bin_counts.iter().enumerate() {
        w.serialize((s.edges[i], s.edges[i + 1], c, s.bin_mean_score[i]))?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(r: &StatsReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["key", "value"])?;
    let rows: [(&str, String); 16] = [
        ("schema_version", r.schema_version.to_string()),
        ("strategy", r.strategy.clone()),
        ("score_model", r.score_model.clone()),
        ("seed", r.seed.to_string()),
        ("scenes", r.scenes.to_string()),
        ("anchors", r.anchors.to_string()),
        ("ground_truths", r.ground_truths.to_string()),
        ("positives", r.positives.to_string()),
        ("compensated", r.compensated.to_string()),
        (
            "positives_high_quality",
            r.positives_high_quality.to_string(),
        ),
        (
            "fraction_positives_high_quality",
            r.fraction_positives_high_quality.to_string(),
        ),
        (
            "high_quality_detections",
            r.high_quality_detections.to_string(),
        ),
        (
            "high_quality_from_positives",
            r.high_quality_from_positives.to_string(),
        ),
        (
            "fraction_high_quality_from_positives",
            r.fraction_high_quality_from_positives.to_string(),
        ),
        (
            "input_iou_spearman",
            r.input_iou_vs_score.spearman.to_string(),
        ),
        (
            "output_iou_spearman",
            r.output_iou_vs_score.spearman.to_string(),
        ),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report` to `path`. JSON produces one file; CSV treats `path` as a
/// directory and writes one table per histogram or scatter plus a summary.
/// Returns the files written.
pub fn emit_report(
    report: &StatsReport,
    format: ReportFormat,
    path: &Path,
) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            write_json(report, path)?;
            Ok(vec![path.to_path_buf()])
        }
        ReportFormat::Csv => {
            fs::create_dir_all(path)?;
            let files: Vec<PathBuf> = [
                SUMMARY_CSV,
                HISTOGRAM_CSV,
                INPUT_SCATTER_CSV,
                OUTPUT_SCATTER_CSV,
            ]
            .iter()
            .map(|f| path.join(f))
            .collect();
            write_summary(report, &files[0])?;
            write_histogram(&report.positive_output_iou, &files[1])?;
            write_scatter(&report.input_iou_vs_score, &files[2])?;
            write_scatter(&report.output_iou_vs_score, &files[3])?;
            Ok(files)
        }
    }
}

pub fn read_report(path: &Path) -> Result<StatsReport> {
    read_json(path)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid_json() {
        let s = to_json_string(&StatsReport::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["positives"], 0);
        assert_eq!(v["fraction_positives_high_quality"], 0.0);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = StatsReport {
            strategy: "matching-degree".into(),
            positives: 7,
            fraction_positives_high_quality: 0.1 + 0.2,
            ..Default::default()
        };
        r.positive_output_iou.add(0.73);
        r.input_iou_vs_score = ScatterSummary::from_samples(&[0.1, 0.5, 0.9], &[0.3, 0.2, 0.7], 4);
        let p = dir.path().join("r.json");
        emit_report(&r, ReportFormat::Json, &p).unwrap();
        assert_eq!(read_report(&p).unwrap(), r);
    }

    #[test]
    fn csv_rows_match_bins() {
        let dir = tempfile::tempdir().unwrap();
        let r = StatsReport {
            positive_output_iou: Histogram::new(3),
            ..Default::default()
        };
        let files = emit_report(&r, ReportFormat::Csv, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let text = fs::read_to_string(dir.path().join(HISTOGRAM_CSV)).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "bin_lo,bin_hi,count");
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
