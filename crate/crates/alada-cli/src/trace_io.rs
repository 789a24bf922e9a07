//! Trace CSV serialization.
//!
//! Fixed schema, one row per step, floats printed in Rust's shortest
//! round-trip form so identical runs produce identical bytes and parsing the
//! file recovers the exact values.

use std::io::{self, Write};

use alada_core::TraceRecord;

pub const TRACE_HEADER: &str = "step,loss,cum_avg_loss,grad_fro_norm,step_size,state_scalars";

pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRecord]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step, r.loss, r.cum_avg_loss, r.grad_fro_norm, r.step_size, r.state_scalars
        )?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace rows are ASCII")
}

/// Parse a trace CSV produced by [`write_trace`].
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(format!("bad trace header: {other:?}")),
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format!("row {lineno}: expected 6 fields, got {}", fields.len()));
        }
        let parse_f = |s: &str| -> Result<f64, String> {
            s.parse().map_err(|e| format!("row {lineno}: {e}"))
        };
        out.push(TraceRecord {
            step: fields[0]
                .parse()
                .map_err(|e| format!("row {lineno}: {e}"))?,
            loss: parse_f(fields[1])?,
            cum_avg_loss: parse_f(fields[2])?,
            grad_fro_norm: parse_f(fields[3])?,
            step_size: parse_f(fields[4])?,
            state_scalars: fields[5]
                .parse()
                .map_err(|e| format!("row {lineno}: {e}"))?,
        });
    }
    Ok(out)
}
