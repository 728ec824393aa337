use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "k,epoch,time_s,f_gamma,f_orig_at_B,grad_norm";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    pub epoch: f64,
    pub time_s: f64,
    pub f_gamma: f64,
    /// `F` at `map_B(x_k)`.
    pub f_orig_at_b: f64,
    pub grad_norm: f64,
}

pub fn write_trace_csv<W: Write>(mut w: W, rows: &[TraceRecord]) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.k, r.epoch, r.time_s, r.f_gamma, r.f_orig_at_b, r.grad_norm)?;
    }
    Ok(())
}

pub fn trace_csv_string(rows: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_trace_csv<R: BufRead>(r: R) -> Result<Vec<TraceRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != TRACE_HEADER {
        return Err(Error::config(format!("trace must start with the header {TRACE_HEADER}")));
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::config(format!("malformed trace row {}: {line:?}", ln + 2));
        if f.len() != 6 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        rows.push(TraceRecord {
            k: f[0].parse().map_err(|_| bad())?,
            epoch: num(f[1])?,
            time_s: num(f[2])?,
            f_gamma: num(f[3])?,
            f_orig_at_b: num(f[4])?,
            grad_norm: num(f[5])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            TraceRecord { k: 0, epoch: 0.0, time_s: 0.0, f_gamma: 1.5, f_orig_at_b: 2.0, grad_norm: 0.1 },
            TraceRecord { k: 7, epoch: 3.5, time_s: 1e-3, f_gamma: -1e-17, f_orig_at_b: 1.0 / 3.0, grad_norm: 0.0 },
        ];
        let s = trace_csv_string(&rows);
        assert!(s.starts_with("k,epoch,time_s,f_gamma,f_orig_at_B,grad_norm\n"));
        assert_eq!(read_trace_csv(s.as_bytes()).unwrap(), rows);
        assert!(read_trace_csv("a,b\n".as_bytes()).is_err());
    }
}
