//! Deterministic file formats for traces, pulse series, and tables.
//!
//! CSV is the canonical trace format: a short `#`-prefixed header with the
//! experiment name, seed, and config hash, then a column row and plain rows.
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! re-read reproduces the exact values and two identical runs produce
//! byte-identical files. No timestamps, no locale: reruns diff clean.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::instrument::{PulsePoint, PulseSeries};
use crate::waveform::{Trace, TraceKind, TraceSample};

/// Run identity stamped into every file header.
#[derive(Debug, Clone, Default)]
pub struct FileMeta {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
}

fn write_header(w: &mut impl Write, meta: &FileMeta, extra: &[(&str, String)]) -> Result<()> {
    writeln!(w, "# experiment: {}", meta.experiment)?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_hash: {}", meta.config_hash)?;
    for (k, v) in extra {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// Writes a (t, v, value) trace with kind and unit annotations.
pub fn write_trace_csv(w: &mut impl Write, trace: &Trace, meta: &FileMeta) -> Result<()> {
    write_header(
        w,
        meta,
        &[
            ("kind", trace.kind.label().to_string()),
            ("units", format!("t=s v=V value={}", trace.kind.unit())),
        ],
    )?;
    writeln!(w, "t,v,value")?;
    for s in &trace.samples {
        writeln!(w, "{},{},{}", s.t, s.v, s.value)?;
    }
    Ok(())
}

/// Reads a trace written by [`write_trace_csv`], revalidating monotonic time.
pub fn read_trace_csv(r: impl BufRead) -> Result<Trace> {
    let mut kind = None;
    let mut samples: Vec<TraceSample> = Vec::new();
    let mut saw_columns = false;
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(k) = rest.trim().strip_prefix("kind:") {
                kind = Some(match k.trim() {
                    "polarization" => TraceKind::Polarization,
                    "resistance" => TraceKind::Resistance,
                    "capacitance" => TraceKind::Capacitance,
                    other => {
                        return Err(Error::MalformedData(format!("unknown trace kind {other:?}")))
                    }
                });
            }
            continue;
        }
        if !saw_columns {
            if line != "t,v,value" {
                return Err(Error::MalformedData(format!(
                    "line {}: expected column row 't,v,value', got {line:?}",
                    ln + 1
                )));
            }
            saw_columns = true;
            continue;
        }
        let fields = split_floats(line, 3, ln + 1)?;
        let sample = TraceSample { t: fields[0], v: fields[1], value: fields[2] };
        if let Some(prev) = samples.last() {
            if sample.t <= prev.t {
                return Err(Error::MalformedData(format!(
                    "line {}: time {} does not increase past {}",
                    ln + 1,
                    sample.t,
                    prev.t
                )));
            }
        }
        samples.push(sample);
    }
    let kind = kind.ok_or_else(|| Error::MalformedData("missing '# kind:' header".into()))?;
    Ok(Trace { kind, samples })
}

/// Writes a potentiation/depression pulse series.
pub fn write_pulse_series_csv(
    w: &mut impl Write,
    series: &PulseSeries,
    meta: &FileMeta,
) -> Result<()> {
    write_header(w, meta, &[("units", "v_write=V width=s r_ds=ohm".to_string())])?;
    writeln!(w, "cycle,pulse_index,branch,v_write,width,r_ds")?;
    for p in &series.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.cycle,
            p.pulse_index,
            p.branch.label(),
            p.v_write,
            p.width,
            p.r_ds
        )?;
    }
    Ok(())
}

/// Reads a pulse series written by [`write_pulse_series_csv`] and re-checks
/// the cycle layout invariants.
pub fn read_pulse_series_csv(r: impl BufRead) -> Result<PulseSeries> {
    let mut series = PulseSeries::default();
    let mut saw_columns = false;
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_columns {
            if line != "cycle,pulse_index,branch,v_write,width,r_ds" {
                return Err(Error::MalformedData(format!(
                    "line {}: unexpected column row {line:?}",
                    ln + 1
                )));
            }
            saw_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::MalformedData(format!(
                "line {}: expected 6 fields, got {}",
                ln + 1,
                fields.len()
            )));
        }
        let parse_u32 = |s: &str, name: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::MalformedData(format!("line {}: bad {name} {s:?}", ln + 1)))
        };
        let parse_f64 = |s: &str, name: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::MalformedData(format!("line {}: bad {name} {s:?}", ln + 1)))
        };
        series.points.push(PulsePoint {
            cycle: parse_u32(fields[0], "cycle")?,
            pulse_index: parse_u32(fields[1], "pulse_index")?,
            branch: fields[2].parse()?,
            v_write: parse_f64(fields[3], "v_write")?,
            width: parse_f64(fields[4], "width")?,
            r_ds: parse_f64(fields[5], "r_ds")?,
        });
    }
    series.validate()?;
    Ok(series)
}

/// A named-column numeric table for non-trace outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match columns");
        self.rows.push(row);
    }
}

pub fn write_table_csv(w: &mut impl Write, table: &Table, meta: &FileMeta) -> Result<()> {
    write_header(w, meta, &[])?;
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn split_floats(line: &str, n: usize, ln: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        return Err(Error::MalformedData(format!(
            "line {ln}: expected {n} fields, got {}",
            fields.len()
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::MalformedData(format!("line {ln}: bad number {f:?}")))
        })
        .collect()
}
