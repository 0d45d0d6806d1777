//! Edge-list and signal-CSV formats.
//!
//! Edge list: a header `directed` or `undirected`, optionally followed by the
//! node count, then one `src dst weight` edge per line. Blank lines and lines
//! starting with `#` are ignored. Without a node count the graph has
//! `max index + 1` nodes. An undirected line stands for both directions.
//!
//! Signals: one sample per line, `label,v_0,...`, values node-major.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::fmt_f64;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::signal::GraphSignal;

/// Upper bound on node counts accepted from files.
pub const MAX_NODES: usize = 1 << 22;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    let mut fields = header.split_whitespace();
    let directed = match fields.next() {
        Some("directed") => true,
        Some("undirected") => false,
        _ => {
            return Err(parse_err(
                header_line,
                "expected `directed` or `undirected` header",
            ))
        }
    };
    let declared = match fields.next() {
        None => None,
        Some(f) => {
            let n: usize = f
                .parse()
                .map_err(|_| parse_err(header_line, format!("bad node count `{f}`")))?;
            if n == 0 || n > MAX_NODES {
                return Err(parse_err(header_line, format!("node count {n} out of range")));
            }
            Some(n)
        }
    };
    if fields.next().is_some() {
        return Err(parse_err(header_line, "trailing fields in header"));
    }

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_index = 0;
    for (line, body) in lines {
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", fields.len())));
        }
        let index = |f: &str| -> Result<usize> {
            let i: usize = f
                .parse()
                .map_err(|_| parse_err(line, format!("bad node index `{f}`")))?;
            let limit = declared.unwrap_or(MAX_NODES);
            if i >= limit {
                return Err(parse_err(line, format!("node {i} out of range for {limit} nodes")));
            }
            Ok(i)
        };
        let (src, dst) = (index(fields[0])?, index(fields[1])?);
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad weight `{}`", fields[2])))?;
        if !weight.is_finite() {
            return Err(parse_err(line, "non-finite weight"));
        }
        if src == dst {
            return Err(parse_err(line, format!("self loop at node {src}")));
        }
        let key = if directed {
            (src, dst)
        } else {
            (src.min(dst), src.max(dst))
        };
        if !seen.insert(key) {
            return Err(parse_err(line, format!("duplicate edge {src} {dst}")));
        }
        max_index = max_index.max(src).max(dst);
        edges.push(Edge { src, dst, weight });
        if !directed {
            edges.push(Edge {
                src: dst,
                dst: src,
                weight,
            });
        }
    }
    let n = declared.unwrap_or(max_index + 1);
    Graph::new(n, edges, directed)
}

/// Writes `g` with an explicit node count; undirected edges appear once.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let kind = if g.is_directed() { "directed" } else { "undirected" };
    let _ = writeln!(out, "{kind} {}", g.n());
    for e in g.edges() {
        if g.is_directed() || e.src < e.dst {
            let _ = writeln!(out, "{} {} {}", e.src, e.dst, fmt_f64(e.weight));
        }
    }
    out
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn save_edge_list(path: impl AsRef<Path>, g: &Graph) -> Result<()> {
    Ok(fs::write(path, write_edge_list(g))?)
}

/// Parses labeled signals with `features` values per node. All rows must
/// describe the same number of nodes.
pub fn parse_signals(text: &str, features: usize) -> Result<Vec<(GraphSignal, usize)>> {
    if features == 0 {
        return Err(Error::InvalidParameter("signals need at least one feature".into()));
    }
    let mut out = Vec::new();
    let mut nodes = None;
    for (line, body) in content_lines(text) {
        let mut fields = body.split(',').map(str::trim);
        let label_field = fields.next().unwrap_or_default();
        let label: usize = label_field
            .parse()
            .map_err(|_| parse_err(line, format!("bad label `{label_field}`")))?;
        let values = fields
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(line, format!("bad value `{f}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() || values.len() % features != 0 {
            return Err(parse_err(
                line,
                format!("{} values do not split into {features} features", values.len()),
            ));
        }
        let n = values.len() / features;
        match nodes {
            None => nodes = Some(n),
            Some(m) if m != n => {
                return Err(parse_err(line, format!("row has {n} nodes, earlier rows {m}")))
            }
            _ => {}
        }
        out.push((GraphSignal::from_vec(n, features, values)?, label));
    }
    Ok(out)
}

pub fn write_signals(samples: &[(GraphSignal, usize)]) -> String {
    let mut out = String::new();
    for (x, label) in samples {
        let _ = write!(out, "{label}");
        for v in x.as_slice() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn load_signals(path: impl AsRef<Path>, features: usize) -> Result<Vec<(GraphSignal, usize)>> {
    parse_signals(&fs::read_to_string(path)?, features)
}

pub fn save_signals(path: impl AsRef<Path>, samples: &[(GraphSignal, usize)]) -> Result<()> {
    Ok(fs::write(path, write_signals(samples))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_from_text() {
        let g = parse_edge_list("undirected\n0 1 1.0\n1 2 1.0\n").unwrap();
        assert_eq!(g, Graph::path(3).unwrap());
    }

    #[test]
    fn bad_index_names_line() {
        let err = parse_edge_list("undirected\n0 x 1.0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_edge_list("0 x 1.0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        let err = parse_edge_list("undirected\n0 1 1\n# c\n1 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_edge_list("directed 2\n0 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("undirected 3 4\n").is_err());
    }

    #[test]
    fn directed_keeps_both_arcs() {
        let g = parse_edge_list("directed\n0 1 2.5\n1 0 0.5\n").unwrap();
        assert!(g.is_directed());
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn header_count_keeps_isolated_nodes() {
        let g = parse_edge_list("undirected 5\n0 1 1\n").unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(parse_edge_list(&write_edge_list(&g)).unwrap(), g);
    }

    #[test]
    fn signals_round_trip() {
        let a = GraphSignal::from_vec(2, 2, vec![0.1, -1.0 / 3.0, 1e-300, 7.0]).unwrap();
        let b = GraphSignal::from_vec(2, 2, vec![0.0, 2.0, 3.0, -4.5]).unwrap();
        let text = write_signals(&[(a.clone(), 3), (b.clone(), 0)]);
        assert_eq!(parse_signals(&text, 2).unwrap(), vec![(a, 3), (b, 0)]);
    }

    #[test]
    fn signal_errors() {
        assert!(matches!(parse_signals("1,2,3\n-1,2,3\n", 1), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_signals("1,2,3\n0,2\n", 1), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_signals("1,2,3,4\n", 2), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_signals("1,nan\n", 1), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_signals("1\n", 1), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let g = Graph::undirected(4, &[(0, 1, 0.1), (2, 3, 1.0 / 7.0)]).unwrap();
        save_edge_list(&path, &g).unwrap();
        assert_eq!(load_edge_list(&path).unwrap(), g);
        assert!(load_edge_list(dir.path().join("missing")).is_err());
    }
}
