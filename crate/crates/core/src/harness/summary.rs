//! Result tables: per-row CSV, per-checkpoint summaries, and cross-config
//! comparisons.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const RESULT_HEADER: &str = "replicate,n,tv,tv_se,lambda_min,lambda_max,covered,excluded";
pub const SUMMARY_HEADER: &str = "n,replicates,excluded,mean_tv,se,coverage,coverage_se,gate_failures";
pub const COMPARISON_HEADER: &str = "config,n,mean_tv,se,coverage,coverage_se";

/// One `(replicate, checkpoint)` measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub replicate: usize,
    pub n: usize,
    /// `NaN` when TV was not computed.
    pub tv: f64,
    pub tv_se: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub covered: Option<bool>,
    pub excluded: bool,
    /// Not persisted; true when TV was skipped or excluded.
    pub gate_met: bool,
}

impl ResultRow {
    pub(crate) fn failed(replicate: usize, n: usize) -> Self {
        Self {
            replicate,
            n,
            tv: f64::NAN,
            tv_se: f64::NAN,
            lambda_min: f64::NAN,
            lambda_max: f64::NAN,
            covered: None,
            excluded: true,
            gate_met: true,
        }
    }
}

/// Shortest round-trip decimal, empty for `NaN`.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number `{s}`"),
    })
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULT_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.replicate.to_string(),
            r.n.to_string(),
            num(r.tv),
            num(r.tv_se),
            num(r.lambda_min),
            num(r.lambda_max),
            r.covered.map_or(String::new(), |c| (c as u8).to_string()),
            (r.excluded as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = rdr.records();
    let header = records.next().transpose()?.ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != RESULT_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{RESULT_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != 8 {
            return Err(Error::Parse {
                line,
                message: format!("expected 8 fields, got {}", rec.len()),
            });
        }
        let int = |j: usize| {
            rec[j].parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid integer `{}`", &rec[j]),
            })
        };
        let flag = |j: usize| match &rec[j] {
            "" => Ok(None),
            "0" => Ok(Some(false)),
            "1" => Ok(Some(true)),
            other => Err(Error::Parse {
                line,
                message: format!("invalid flag `{other}`"),
            }),
        };
        rows.push(ResultRow {
            replicate: int(0)?,
            n: int(1)?,
            tv: parse_num(&rec[2], line)?,
            tv_se: parse_num(&rec[3], line)?,
            lambda_min: parse_num(&rec[4], line)?,
            lambda_max: parse_num(&rec[5], line)?,
            covered: flag(6)?,
            excluded: flag(7)?.ok_or(Error::Parse {
                line,
                message: "missing excluded flag".into(),
            })?,
            gate_met: true,
        });
    }
    Ok(rows)
}

/// Aggregate over replicates at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    /// Rows contributing to `mean_tv`.
    pub replicates: usize,
    pub excluded: usize,
    pub mean_tv: f64,
    /// Standard error of `mean_tv` across replicates; for a single replicate
    /// its Monte-Carlo standard error.
    pub se: f64,
    pub coverage: f64,
    /// Binomial standard error `√(c(1 − c)/R)`.
    pub coverage_se: f64,
    pub gate_failures: usize,
}

/// Per-checkpoint aggregates in the order of `checkpoints`.
pub fn summarize_rows(rows: &[ResultRow], checkpoints: &[usize], count_gate: bool) -> Vec<SummaryRow> {
    checkpoints
        .iter()
        .map(|&n| {
            let at: Vec<&ResultRow> = rows.iter().filter(|r| r.n == n).collect();
            let tvs: Vec<&ResultRow> = at.iter().copied().filter(|r| !r.excluded && r.tv.is_finite()).collect();
            let k = tvs.len();
            let mean = tvs.iter().map(|r| r.tv).sum::<f64>() / k as f64;
            let se = match k {
                0 => f64::NAN,
                1 => tvs[0].tv_se,
                _ => {
                    let var = tvs.iter().map(|r| (r.tv - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
                    (var / k as f64).sqrt()
                }
            };
            let cov: Vec<bool> = at.iter().filter_map(|r| r.covered).collect();
            let c = cov.iter().filter(|&&b| b).count() as f64 / cov.len() as f64;
            SummaryRow {
                n,
                replicates: k,
                excluded: at.iter().filter(|r| r.excluded).count(),
                mean_tv: mean,
                se,
                coverage: c,
                coverage_se: (c * (1.0 - c) / cov.len() as f64).sqrt(),
                gate_failures: if count_gate {
                    tvs.iter().filter(|r| !r.gate_met).count()
                } else {
                    0
                },
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for s in summary {
        w.write_record([
            s.n.to_string(),
            s.replicates.to_string(),
            s.excluded.to_string(),
            num(s.mean_tv),
            num(s.se),
            num(s.coverage),
            num(s.coverage_se),
            s.gate_failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One line of a cross-configuration comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub config: String,
    pub summary: SummaryRow,
}

/// Merge labelled result tables into one long-format table. All tables must
/// share the same checkpoint grid.
pub fn summarize_tables(tables: &[(String, Vec<ResultRow>)]) -> Result<Vec<ComparisonRow>> {
    let mut grid: Option<(String, BTreeSet<usize>)> = None;
    let mut out = Vec::new();
    for (label, rows) in tables {
        let ns: BTreeSet<usize> = rows.iter().map(|r| r.n).collect();
        if ns.is_empty() {
            return Err(Error::Data(format!("result table `{label}` has no rows")));
        }
        match &grid {
            None => grid = Some((label.clone(), ns.clone())),
            Some((first, g)) if *g != ns => {
                return Err(Error::Data(format!(
                    "checkpoint grids differ between `{first}` and `{label}`"
                )));
            }
            _ => {}
        }
        let cps: Vec<usize> = ns.into_iter().collect();
        out.extend(summarize_rows(rows, &cps, false).into_iter().map(|summary| ComparisonRow {
            config: label.clone(),
            summary,
        }));
    }
    Ok(out)
}

/// Config label from the metadata file beside `results`, else the file stem.
fn result_label(results: &Path) -> String {
    let meta = super::OutputPaths::for_results(results).metadata;
    std::fs::read_to_string(meta)
        .ok()
        .and_then(|t| t.parse::<toml::Table>().ok())
        .and_then(|t| t.get("label").and_then(|l| l.as_str()).map(str::to_owned))
        .unwrap_or_else(|| {
            results
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
}

/// Read result CSVs, labelling each by its config label, and merge them.
pub fn summarize<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<ComparisonRow>> {
    if paths.is_empty() {
        return Err(Error::Config("summarize needs at least one result file".into()));
    }
    let tables = paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            Ok((result_label(p), read_results_csv(std::fs::File::open(p)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize_tables(&tables)
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COMPARISON_HEADER.split(','))?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.config.clone(),
            s.n.to_string(),
            num(s.mean_tv),
            num(s.se),
            num(s.coverage),
            num(s.coverage_se),
        ])?;
    }
    w.flush()?;
    Ok(())
}
