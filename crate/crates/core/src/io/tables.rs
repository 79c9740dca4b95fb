//! CSV outputs. Floats are written with 17 significant digits so that
//! parsing a cell gives back the exact `f64`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::harness::{CorrelationSummary, MetricReport, PriorSweep};
use crate::metrics::MetricName;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io {
            path: "<csv>".into(),
            source: e,
        },
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// One scored metric on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub metric: MetricName,
    pub value: f64,
    pub degenerate: bool,
}

pub fn write_scores<W: Write>(w: W, rows: &[ScoreRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["metric", "value", "orientation", "degenerate"]).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.metric.as_str(),
            &fmt_f64(r.value),
            r.metric.orientation().as_str(),
            if r.degenerate { "true" } else { "false" },
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_scores<R: Read>(r: R) -> Result<Vec<ScoreRow>> {
    let mut rows = Vec::new();
    for (i, rec) in csv::Reader::from_reader(r).records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |m: String| Error::Parse { line: i + 2, message: m };
        let metric = rec[0].parse::<MetricName>().map_err(|e| bad(e.to_string()))?;
        let value = rec[1].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        rows.push(ScoreRow {
            metric,
            value,
            degenerate: &rec[3] == "true",
        });
    }
    Ok(rows)
}

/// `q_id, true_return, <one column per metric>, degenerate`; the last
/// column lists degenerate metrics separated by `;`.
pub fn write_reports<W: Write>(w: W, reports: &[MetricReport], metrics: &[MetricName]) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec!["q_id".to_string(), "true_return".to_string()];
    header.extend(metrics.iter().map(|m| m.as_str().to_string()));
    header.push("degenerate".into());
    out.write_record(&header).map_err(csv_err)?;
    for r in reports {
        let mut row = vec![r.q_id.clone(), fmt_f64(r.true_return)];
        row.extend(metrics.iter().map(|m| fmt_opt(r.scores.get(m).copied())));
        row.push(r.degenerate.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(";"));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_reports<R: Read>(r: R) -> Result<Vec<MetricReport>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers().map_err(csv_err)?.clone();
    let n = header.len();
    if n < 3 || &header[0] != "q_id" || &header[1] != "true_return" || &header[n - 1] != "degenerate" {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected reports header".into(),
        });
    }
    let metrics = (2..n - 1)
        .map(|i| header[i].parse::<MetricName>())
        .collect::<Result<Vec<_>>>()?;
    let mut reports = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |m: String| Error::Parse { line: i + 2, message: m };
        let mut scores = BTreeMap::new();
        for (j, m) in metrics.iter().enumerate() {
            if !rec[j + 2].is_empty() {
                scores.insert(*m, rec[j + 2].parse::<f64>().map_err(|e| bad(e.to_string()))?);
            }
        }
        let degenerate = rec[n - 1]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<BTreeSet<MetricName>>>()?;
        reports.push(MetricReport {
            q_id: rec[0].to_string(),
            true_return: rec[1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            scores,
            degenerate,
        });
    }
    Ok(reports)
}

const SUMMARY_HEADER: [&str; 7] = ["metric", "orientation", "r_squared", "spearman", "n_models", "n_excluded", "note"];

fn summary_cells(s: &CorrelationSummary) -> Vec<String> {
    vec![
        s.metric.as_str().to_string(),
        s.metric.orientation().as_str().to_string(),
        fmt_opt(s.r_squared),
        fmt_opt(s.spearman),
        s.n_models.to_string(),
        s.n_excluded.to_string(),
        s.note.clone().unwrap_or_default(),
    ]
}

pub fn write_summary<W: Write>(w: W, summaries: &[CorrelationSummary]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in summaries {
        out.write_record(summary_cells(s)).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// Summaries of several grid points in one table, keyed by a leading column.
pub fn write_grid_summary<W: Write>(w: W, key: &str, blocks: &[(String, Vec<CorrelationSummary>)]) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec![key];
    header.extend(SUMMARY_HEADER);
    out.write_record(&header).map_err(csv_err)?;
    for (label, summaries) in blocks {
        for s in summaries {
            let mut row = vec![label.clone()];
            row.extend(summary_cells(s));
            out.write_record(&row).map_err(csv_err)?;
        }
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

/// One row per prior.
pub fn write_prior_sweep<W: Write>(w: W, sweep: &PriorSweep) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "prior",
        "opc_r_squared",
        "opc_spearman",
        "opc_n_models",
        "soft_opc_r_squared",
        "soft_opc_spearman",
        "soft_opc_n_models",
    ])
    .map_err(csv_err)?;
    for p in &sweep.points {
        out.write_record([
            fmt_f64(p.prior),
            fmt_opt(p.opc.r_squared),
            fmt_opt(p.opc.spearman),
            p.opc.n_models.to_string(),
            fmt_opt(p.soft_opc.r_squared),
            fmt_opt(p.soft_opc.spearman),
            p.soft_opc.n_models.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 5.0 / 31.0, 0.0, 1e300, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17, "{s}");
        }
    }

    #[test]
    fn reports_round_trip() {
        let reports = vec![MetricReport {
            q_id: "q0001".into(),
            true_return: 5.0 / 31.0,
            scores: [(MetricName::Opc, 0.0), (MetricName::SoftOpc, 1.0 / 7.0)].into_iter().collect(),
            degenerate: [MetricName::Opc].into_iter().collect(),
        }];
        let mut buf = Vec::new();
        write_reports(&mut buf, &reports, &[MetricName::Opc, MetricName::SoftOpc]).unwrap();
        assert_eq!(read_reports(&buf[..]).unwrap(), reports);
    }

    #[test]
    fn scores_round_trip() {
        let rows = vec![
            ScoreRow { metric: MetricName::Opc, value: 0.25, degenerate: false },
            ScoreRow { metric: MetricName::TdErr, value: 1.0 / 3.0, degenerate: false },
        ];
        let mut buf = Vec::new();
        write_scores(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("metric,value,orientation,degenerate\nOPC,2.5000000000000000e-1,higher-better,false\n"), "{text}");
        assert_eq!(read_scores(&buf[..]).unwrap(), rows);
    }
}
