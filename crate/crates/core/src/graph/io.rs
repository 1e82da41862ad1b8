//! Edge-list text format: a header line `n=<count>` followed by one `i j`
//! pair per line, 0-indexed, `i < j`, sorted.

use std::fmt::Write as _;

use super::GraphTopology;
use crate::error::{Error, Result};

pub fn write_edge_list(g: &GraphTopology) -> String {
    let mut out = String::new();
    writeln!(out, "n={}", g.n()).unwrap();
    for &(a, b) in g.edges() {
        writeln!(out, "{a} {b}").unwrap();
    }
    out
}

pub fn parse_edge_list(text: &str) -> Result<GraphTopology> {
    let mut lines = text.lines().enumerate();
    let n = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(Error::Parse { line: 1, msg: "missing `n=<count>` header".into() });
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let count = line
            .strip_prefix("n=")
            .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected `n=<count>`, found `{line}`") })?;
        break count
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse { line: idx + 1, msg: format!("bad vertex count: {e}") })?;
    };
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: idx + 1, msg };
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected `i j`, found `{line}`")));
        };
        let a: usize = a.parse().map_err(|e| err(format!("bad vertex `{a}`: {e}")))?;
        let b: usize = b.parse().map_err(|e| err(format!("bad vertex `{b}`: {e}")))?;
        if a >= n || b >= n {
            return Err(err(format!("vertex out of range for n={n}")));
        }
        if a == b {
            return Err(err(format!("self-loop on vertex {a}")));
        }
        edges.push((a, b));
    }
    GraphTopology::from_edges(n, edges)
}
