//! CSV emission and parsing for run logs and sweep results.
//!
//! All numeric values are written with 6 significant digits via
//! [`round_sig`]/[`fmt_num`]. Writing is deterministic (identical inputs give
//! byte-identical files) and idempotent: parsing a file and rewriting it
//! reproduces it byte for byte. Sweep points are quantized at construction,
//! so re-parsing a sweep CSV reproduces the in-memory values exactly.

use crate::metrics::SweepPoint;
use crate::simulator::{LogEvent, LogRecord};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unexpected header: got '{got}', expected '{expected}'")]
    Header { got: String, expected: String },
}

/// Rounds to `sig` significant digits (decimal).
pub fn round_sig(x: f64, sig: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", sig.saturating_sub(1), x)
        .parse()
        .expect("formatted float reparses")
}

/// Fixed external number format: 6 significant digits, plain decimal.
pub fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x, 6))
}

pub const LOG_HEADER: &str =
    "time_s,heap_id,event,live_mb,g_mb_per_s,s_mb_per_s,limit_mb,usage_mb,gc_pause_s";

pub fn write_log_csv(records: &[LogRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(LOG_HEADER);
    out.push('\n');
    for r in records {
        let pause = r.gc_pause_s.map(fmt_num).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_num(r.time_s),
            r.heap_id,
            r.event.as_str(),
            fmt_num(r.live_mb),
            fmt_num(r.g_mb_per_s),
            fmt_num(r.s_mb_per_s),
            fmt_num(r.limit_mb),
            fmt_num(r.usage_mb),
            pause,
        ));
    }
    out
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, CsvError> {
    s.parse().map_err(|_| CsvError::Parse {
        line,
        message: format!("cannot parse {what} from '{s}'"),
    })
}

pub fn parse_log_csv(text: &str) -> Result<Vec<LogRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == LOG_HEADER => {}
        Some((_, header)) => {
            return Err(CsvError::Header {
                got: header.to_string(),
                expected: LOG_HEADER.into(),
            })
        }
        None => {
            return Err(CsvError::Header {
                got: String::new(),
                expected: LOG_HEADER.into(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let n = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(CsvError::Parse {
                line: n,
                message: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let event = match fields[2] {
            "gc" => LogEvent::Gc,
            "heartbeat" => LogEvent::Heartbeat,
            "sample" => LogEvent::Sample,
            other => {
                return Err(CsvError::Parse {
                    line: n,
                    message: format!("unknown event '{other}'"),
                })
            }
        };
        records.push(LogRecord {
            time_s: parse_field(fields[0], n, "time_s")?,
            heap_id: parse_field(fields[1], n, "heap_id")?,
            event,
            live_mb: parse_field(fields[3], n, "live_mb")?,
            g_mb_per_s: parse_field(fields[4], n, "g_mb_per_s")?,
            s_mb_per_s: parse_field(fields[5], n, "s_mb_per_s")?,
            limit_mb: parse_field(fields[6], n, "limit_mb")?,
            usage_mb: parse_field(fields[7], n, "usage_mb")?,
            gc_pause_s: if fields[8].is_empty() {
                None
            } else {
                Some(parse_field(fields[8], n, "gc_pause_s")?)
            },
        });
    }
    Ok(records)
}

pub const SWEEP_HEADER: &str = "param_value,avg_heap_usage_mb,total_gc_time_s,gc_count";

pub fn write_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::with_capacity(32 * (points.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(p.param_value),
            fmt_num(p.avg_heap_usage_mb),
            fmt_num(p.total_gc_time_s),
            p.gc_count,
        ));
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepPoint>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SWEEP_HEADER => {}
        Some((_, header)) => {
            return Err(CsvError::Header {
                got: header.to_string(),
                expected: SWEEP_HEADER.into(),
            })
        }
        None => {
            return Err(CsvError::Header {
                got: String::new(),
                expected: SWEEP_HEADER.into(),
            })
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let n = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CsvError::Parse {
                line: n,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        points.push(SweepPoint::new(
            parse_field(fields[0], n, "param_value")?,
            parse_field(fields[1], n, "avg_heap_usage_mb")?,
            parse_field(fields[2], n, "total_gc_time_s")?,
            parse_field(fields[3], n, "gc_count")?,
        ));
    }
    Ok(points)
}
