//! Trace CSV emission and text Gantt charts.

mod csv;
mod gantt;

pub use csv::{trace_csv, write_trace, TRACE_HEADER};
pub use gantt::{default_bucket, render_gantt, render_gantt_with};
