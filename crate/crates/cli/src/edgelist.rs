//! Edge-list text format.
//!
//! One `receiver sender` pair of 0-based node ids per line; the receiver hears
//! the sender. Blank lines and anything after `#` are ignored. The node count
//! is one more than the largest id unless a `# nodes: N` line says otherwise.

use std::fmt::Write as _;
use std::path::Path;

use ppacdc_core::Digraph;

use crate::error::{CliError, Result};
use crate::output::write_atomic;

pub fn parse(text: &str, origin: &str) -> Result<Digraph> {
    let mut edges = Vec::new();
    let mut declared = None;
    let mut max_id = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| CliError::EdgeList {
            path: origin.to_owned(),
            line: line_no,
            message,
        };
        let (content, comment) = match raw.split_once('#') {
            Some((c, rest)) => (c, Some(rest)),
            None => (raw, None),
        };
        if let Some(n) = comment
            .and_then(|c| c.trim().strip_prefix("nodes:"))
            .map(str::trim)
        {
            declared = Some(
                n.parse::<usize>()
                    .map_err(|e| err(format!("bad node count {n:?}: {e}")))?,
            );
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            [] => continue,
            [j, i] => {
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| err(format!("bad node id {s:?}: {e}")))
                };
                let (j, i) = (parse(j)?, parse(i)?);
                max_id = max_id.max(j).max(i);
                edges.push((j, i, line_no));
            }
            _ => return Err(err(format!("expected `receiver sender`, got {content:?}"))),
        }
    }
    let n = declared.unwrap_or(max_id + 1);
    let mut g = Digraph::empty(n)?;
    for (j, i, line) in edges {
        g.add_edge(j, i).map_err(|e| CliError::EdgeList {
            path: origin.to_owned(),
            line,
            message: e.to_string(),
        })?;
    }
    Ok(g)
}

pub fn load(path: &Path) -> Result<Digraph> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub fn render(g: &Digraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# receiver sender");
    let _ = writeln!(out, "# nodes: {}", g.node_count());
    for (j, i) in g.edges() {
        let _ = writeln!(out, "{j} {i}");
    }
    out
}

pub fn save(g: &Digraph, path: &Path) -> Result<()> {
    write_atomic(path, render(g).as_bytes())
}
