//! Pajek `.net` files: `*Vertices n`, quoted labels, `*Edges` with 4-decimal weights.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{CosineGraph, Edge, GraphNode};
use crate::error::{Error, Result};
use crate::matrix::JournalId;

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn write_pajek<W: Write>(g: &CosineGraph, mut out: W) -> Result<()> {
    if g.nodes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut s = String::new();
    let _ = writeln!(s, "*Vertices {}", g.nodes.len());
    for (i, node) in g.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} \"{}\"", i + 1, escape(&node.label));
    }
    s.push_str("*Edges\n");
    for e in &g.edges {
        let _ = writeln!(s, "{} {} {:.4}", e.i + 1, e.j + 1, e.weight);
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn export_pajek(g: &CosineGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_pajek(g, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Reads a graph written by [`write_pajek`].
///
/// Journal ids are not stored in the file; nodes come back with their
/// 1-based vertex numbers as ids.
pub fn read_pajek<R: BufRead>(source: R) -> Result<CosineGraph> {
    let lines: Vec<String> = source.lines().collect::<std::io::Result<_>>()?;
    parse_pajek(&lines.join("\n"))
}

pub fn parse_pajek(text: &str) -> Result<CosineGraph> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (ln, head) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let n: usize = head
        .strip_prefix("*Vertices")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| err(ln, format!("expected `*Vertices n`, got `{head}`")))?;

    let mut nodes = Vec::with_capacity(n);
    for expect in 1..=n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(ln, format!("file ends before vertex {expect}")))?;
        let (num, rest) = line
            .split_once(' ')
            .ok_or_else(|| err(ln, "expected `i \"label\"`".into()))?;
        if num.parse::<usize>().ok() != Some(expect) {
            return Err(err(ln, format!("expected vertex {expect}, got `{num}`")));
        }
        let label = unquote(rest).ok_or_else(|| err(ln, format!("malformed label `{rest}`")))?;
        nodes.push(GraphNode {
            id: JournalId(expect as u64),
            label,
        });
    }

    match lines.next() {
        Some((_, "*Edges")) => {}
        Some((ln, other)) => return Err(err(ln, format!("expected `*Edges`, got `{other}`"))),
        None => return Err(err(n + 2, "missing `*Edges` section".into())),
    }
    let mut edges = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let parsed = match f.as_slice() {
            [i, j, w] => i
                .parse::<usize>()
                .ok()
                .zip(j.parse::<usize>().ok())
                .zip(w.parse::<f64>().ok()),
            _ => None,
        };
        let ((i, j), w) =
            parsed.ok_or_else(|| err(ln, format!("expected `i j w`, got `{line}`")))?;
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(err(ln, format!("invalid vertex pair {i} {j}")));
        }
        edges.push(Edge {
            i: i.min(j) - 1,
            j: i.max(j) - 1,
            weight: w,
        });
    }
    Ok(CosineGraph {
        nodes,
        edges,
        isolate_threshold: None,
        edge_threshold: None,
        removed: Vec::new(),
    })
}

fn unquote(s: &str) -> Option<String> {
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push(chars.next()?),
            '"' => return None,
            c => out.push(c),
        }
    }
    Some(out)
}
