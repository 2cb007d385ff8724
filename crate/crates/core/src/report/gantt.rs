//! Text Gantt charts: one row per task, one column per time bucket.
//!
//! `#` ran, `-` released and waiting, `x` discarded, `.` nothing.

use crate::engine::Trace;
use crate::model::{Duration, TimePoint};

const MAX_COLUMNS: u64 = 100;

/// Smallest "round" bucket width that keeps the chart within 100 columns.
pub fn default_bucket(horizon: TimePoint) -> Duration {
    let mut scale = 1;
    loop {
        for step in [1, 2, 5] {
            let b = step * scale;
            if horizon.div_ceil(b) <= MAX_COLUMNS {
                return b;
            }
        }
        scale *= 10;
    }
}

pub fn render_gantt(tr: &Trace) -> String {
    render_gantt_with(tr, default_bucket(tr.horizon))
}

pub fn render_gantt_with(tr: &Trace, bucket: Duration) -> String {
    assert!(bucket > 0);
    if tr.tasks.is_empty() {
        return String::new();
    }
    let columns = tr.horizon.div_ceil(bucket) as usize;
    let multi = tr.processors > 1;
    let mut rows: Vec<(String, Vec<u8>)> = Vec::new();
    for (task, label) in &tr.tasks {
        let mut procs: Vec<usize> = tr.jobs.iter().filter(|j| j.id.task == *task).map(|j| j.processor).collect();
        procs.sort_unstable();
        procs.dedup();
        if procs.is_empty() {
            procs.push(usize::MAX);
        }
        for p in procs {
            let name = if multi && p != usize::MAX { format!("{label}@P{p}") } else { label.clone() };
            let mut cells = vec![b'.'; columns];
            for j in tr.jobs.iter().filter(|j| j.id.task == *task && (p == usize::MAX || j.processor == p)) {
                let end = j.completion.or(j.discarded.map(|d| d.0)).unwrap_or(tr.horizon);
                paint(&mut cells, bucket, j.release, end, b'-');
                for &(s, e) in &j.segments {
                    paint(&mut cells, bucket, s, e, b'#');
                }
                if let Some((t, _)) = j.discarded {
                    let c = ((t / bucket) as usize).min(columns - 1);
                    cells[c] = b'x';
                }
            }
            rows.push((name, cells));
        }
    }
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(4);
    let mut out = format!("{:width$} |{}\n", "", scale_line(columns, bucket));
    for (name, cells) in rows {
        out.push_str(&format!("{name:width$} |{}\n", String::from_utf8(cells).expect("ascii")));
    }
    out.push_str(&format!("{:width$} |one column = {bucket} tick(s), horizon {}\n", "", tr.horizon));
    out
}

fn paint(cells: &mut [u8], bucket: Duration, start: TimePoint, end: TimePoint, glyph: u8) {
    if end <= start {
        return;
    }
    let first = (start / bucket) as usize;
    let last = ((end - 1) / bucket) as usize;
    for c in cells.iter_mut().take(last + 1).skip(first) {
        if *c != b'#' {
            *c = glyph;
        }
    }
}

fn scale_line(columns: usize, bucket: Duration) -> String {
    let mut line = vec![b' '; columns];
    let mut c = 0;
    while c < columns {
        let mark = (c as u64 * bucket).to_string();
        if c + mark.len() <= columns {
            line[c..c + mark.len()].copy_from_slice(mark.as_bytes());
        }
        c += 10;
    }
    String::from_utf8(line).expect("ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_choice() {
        assert_eq!(default_bucket(100), 1);
        assert_eq!(default_bucket(250), 5);
        assert_eq!(default_bucket(400), 5);
        assert_eq!(default_bucket(1001), 20);
    }
}
