//! Number formatting and small writers shared by the subcommands.

use std::io::{self, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use geospin_core::linalg::{Matrix, Tensor3, Tensor4};
use serde_json::{json, Value};

use crate::args::Format;

pub use geospin_core::flow::fmt_machine;

/// Six significant digits, `%g` style.
pub fn fmt_pretty(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((m, e)) if m.contains('.') => format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.')),
            _ => s,
        }
    }
}

pub fn fmt_num(x: f64, format: Format) -> String {
    match format {
        Format::Pretty => fmt_pretty(x),
        _ => fmt_machine(x),
    }
}

pub fn fmt_vec(v: &[f64], format: Format) -> String {
    v.iter().map(|x| fmt_num(*x, format)).collect::<Vec<_>>().join(", ")
}

/// Timestamped first line; the only nondeterministic output.
pub fn write_header<W: Write>(out: &mut W, format: Format, command: &str) -> io::Result<()> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let generator = concat!("geospin ", env!("CARGO_PKG_VERSION"));
    match format {
        Format::Jsonl => writeln!(
            out,
            "{}",
            json!({"generator": generator, "command": command, "generated_unix": secs})
        ),
        _ => writeln!(out, "# {generator} {command} generated_unix={secs}"),
    }
}

pub fn matrix_json(m: &Matrix) -> Value {
    json!(m.rows())
}

pub fn tensor3_json(t: &Tensor3) -> Value {
    let n = t.dim();
    json!((0..n)
        .map(|a| (0..n).map(|b| (0..n).map(|c| t[(a, b, c)]).collect::<Vec<_>>()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

pub fn tensor4_json(t: &Tensor4) -> Value {
    let n = t.dim();
    json!((0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..n)
                        .map(|c| (0..n).map(|d| t[(a, b, c, d)]).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>())
}

/// 1-based index label, `1;2;2`.
pub fn index_label(idx: &[usize]) -> String {
    idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}
