//! Plain-text curve files.
//!
//! ```text
//! # optional comments
//! closed
//! 1.0 0.0 0.0 0.0
//! 0.0 1.0 0.0 0.0
//! ...
//! ```
//!
//! The first non-comment line is `closed` or `open`; each following line is one
//! vertex with 3 (ℝ³) or 4 (S³) whitespace-separated decimals.

use std::fmt::Write as _;

use crate::num::Real;

use super::{GeometryError, PointR3, PointS3, Polyline, Vertices};

fn bad(msg: impl Into<String>) -> GeometryError {
    GeometryError::CurveFile(msg.into())
}

pub fn parse_curve<T: Real>(text: &str) -> Result<Polyline<T>, GeometryError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let closed = match lines.next() {
        Some((_, "closed")) => true,
        Some((_, "open")) => false,
        Some((n, other)) => return Err(bad(format!("line {n}: expected `closed` or `open`, got `{other}`"))),
        None => return Err(bad("empty file")),
    };
    let mut r3 = Vec::new();
    let mut s3 = Vec::new();
    let mut width = None;
    for (n, line) in lines {
        let vals = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| bad(format!("line {n}: `{tok}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match (width, vals.len()) {
            (None, w @ (3 | 4)) => width = Some(w),
            (Some(w), got) if w == got => {}
            (_, got) => return Err(bad(format!("line {n}: expected 3 or 4 consistent columns, got {got}"))),
        }
        let vals: Vec<T> = vals.into_iter().map(T::lit).collect();
        if vals.len() == 3 {
            r3.push(PointR3::new([vals[0], vals[1], vals[2]])?);
        } else {
            s3.push(PointS3::new([vals[0], vals[1], vals[2], vals[3]])?);
        }
    }
    let vertices = match width {
        Some(3) => Vertices::R3(r3),
        Some(_) => Vertices::S3(s3),
        None => return Err(bad("no vertices")),
    };
    Polyline::new(vertices, closed)
}

/// Serializes with 17 significant digits so parsing reproduces the `f64` coordinates.
pub fn write_curve<T: Real>(line: &Polyline<T>) -> String {
    let mut out = String::new();
    out.push_str(if line.is_closed() { "closed\n" } else { "open\n" });
    let mut row = |vals: &[T]| {
        let cols: Vec<String> = vals.iter().map(|v| format!("{:.17e}", v.as_f64())).collect();
        let _ = writeln!(out, "{}", cols.join(" "));
    };
    match line.vertices() {
        Vertices::R3(v) => v.iter().for_each(|p| row(&p.coords())),
        Vertices::S3(v) => v.iter().for_each(|p| row(&p.coords())),
    }
    out
}
