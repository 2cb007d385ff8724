use std::fmt::Write as _;
use std::path::Path;

use crate::engine::Trace;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "time,kind,job,processor,detail";

/// Canonical CSV rendering of a trace, `\n` line endings.
pub fn trace_csv(tr: &Trace) -> String {
    let mut out = String::with_capacity(32 * (tr.events.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for e in &tr.events {
        let job = e.job.map_or_else(|| "-".to_owned(), |id| tr.job_name(id));
        let _ = writeln!(out, "{},{},{},{},{}", e.time, e.kind, job, e.processor, e.detail);
    }
    out
}

pub fn write_trace(tr: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, trace_csv(tr)).map_err(|source| Error::Io { path: path.to_owned(), source })
}
