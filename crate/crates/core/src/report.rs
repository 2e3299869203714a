//! CSV output for flow fields, sweeps, heat maps, histograms and
//! conformance mismatches. Every float is written in a form that parses
//! back to the identical binary64 value.

use std::io::{Read, Write};

use thiserror::Error;

use crate::analysis::{Comparison, ErrorReport, HistogramOverlap};
use crate::flow::{FlowField, FlowStatus};
use crate::verify::ConformanceReport;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: {reason}")]
    Record { line: u64, reason: String },
    #[error("flow CSV does not cover a full {width}x{height} grid in row-major order")]
    Layout { width: usize, height: usize },
}

/// Shortest decimal that reads back as the same binary64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub const FLOW_HEADER: [&str; 5] = ["x", "y", "u", "v", "status"];

pub fn write_flow_csv<W: Write>(out: W, field: &FlowField<f64>) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FLOW_HEADER)?;
    for y in 0..field.height {
        for x in 0..field.width {
            let i = field.index(x, y);
            w.write_record([
                x.to_string(),
                y.to_string(),
                fmt_f64(field.u[i]),
                fmt_f64(field.v[i]),
                field.status[i].as_str().to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_flow_csv<R: Read>(input: R) -> Result<FlowField<f64>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != FLOW_HEADER {
        return Err(ReportError::Header(header));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: &str| ReportError::Record {
            line,
            reason: reason.to_string(),
        };
        if record.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let x: usize = record[0].parse().map_err(|_| bad("bad x"))?;
        let y: usize = record[1].parse().map_err(|_| bad("bad y"))?;
        let u: f64 = record[2].parse().map_err(|_| bad("bad u"))?;
        let v: f64 = record[3].parse().map_err(|_| bad("bad v"))?;
        let s = FlowStatus::parse(&record[4]).ok_or_else(|| bad("bad status"))?;
        rows.push((x, y, u, v, s));
    }
    let width = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let height = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let in_order = rows
        .iter()
        .enumerate()
        .all(|(i, r)| width > 0 && r.0 == i % width && r.1 == i / width);
    if rows.len() != width * height || !in_order {
        return Err(ReportError::Layout { width, height });
    }
    Ok(FlowField {
        width,
        height,
        u: rows.iter().map(|r| r.2).collect(),
        v: rows.iter().map(|r| r.3).collect(),
        status: rows.iter().map(|r| r.4).collect(),
    })
}

pub fn write_sweep_csv<W: Write>(out: W, reports: &[ErrorReport]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["norm", "max", "rms", "std", "exceptions", "singulars"])?;
    for r in reports {
        w.write_record([
            r.norm.to_string(),
            fmt_f64(r.max_abs_error),
            fmt_f64(r.rms_error),
            fmt_f64(r.std_deviation),
            r.exception_count.to_string(),
            r.singular_count.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Per-component statistics for each norm of a sweep.
pub fn write_components_csv<W: Write>(out: W, reports: &[ErrorReport]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["norm", "u_max", "u_rms", "u_std", "v_max", "v_rms", "v_std", "compared"])?;
    for r in reports {
        w.write_record([
            r.norm.to_string(),
            fmt_f64(r.u.max),
            fmt_f64(r.u.rms),
            fmt_f64(r.u.std),
            fmt_f64(r.v.max),
            fmt_f64(r.v.rms),
            fmt_f64(r.v.std),
            r.compared.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Both heat maps of one comparison, one row per pixel.
pub fn write_heatmap_csv<W: Write>(out: W, c: &Comparison) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "abs_error_u", "abs_error_v", "flag"])?;
    let (hu, hv) = (&c.heat_u, &c.heat_v);
    for y in 0..hu.height {
        for x in 0..hu.width {
            let i = y * hu.width + x;
            w.write_record([
                x.to_string(),
                y.to_string(),
                fmt_f64(hu.error[i]),
                fmt_f64(hv.error[i]),
                hu.flag[i].as_str().to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per binade (`lower` = 2^binade) after a leading `zero` row.
pub fn write_overlap_csv<W: Write>(out: W, h: &HistogramOverlap) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["binade".to_string(), "lower".to_string(), "data".to_string()];
    header.extend(h.formats.iter().cloned());
    w.write_record(&header)?;
    if !h.rows.is_empty() {
        let mut zero = vec!["zero".to_string(), "0.0".to_string(), h.zeros.to_string()];
        zero.extend(h.formats.iter().map(|_| "1".to_string()));
        w.write_record(&zero)?;
    }
    for row in &h.rows {
        let mut rec = vec![
            row.binade.to_string(),
            fmt_f64(2f64.powi(row.binade)),
            row.data.to_string(),
        ];
        rec.extend(row.representable.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Mismatching operations as hex bit patterns.
pub fn write_mismatch_csv<W: Write>(out: W, report: &ConformanceReport) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["op", "a", "b", "expected", "actual"])?;
    let hex = |v: u32| format!("{:#0width$x}", v, width = report.pattern_width + 2);
    for m in &report.mismatches {
        w.write_record([
            m.op.symbol().to_string(),
            hex(m.a),
            hex(m.b),
            hex(m.expected),
            hex(m.actual),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
